//! Deterministic, splittable random streams.
//!
//! Every stream is identified by a master [`Seed`] and a derivation path of
//! nonnegative integers. The path is folded into a 64-bit key with the
//! SplitMix64 finalizer:
//!
//! ```text
//! key₀     = mix(seed ⊕ 0x6a09e667f3bcc909)
//! key_{i+1} = mix(key_i ⊕ mix(path_i + 0x9e3779b97f4a7c15))
//! ```
//!
//! and the key seeds a xoshiro256++ generator. Because the fold is sequential,
//! `derive(seed, p).child(k)` is the same stream as `derive(seed, p ++ [k])`,
//! so replicate `r`, arrival `k` can be addressed directly without touching
//! any shared state. Streams are plain values: move them between threads
//! freely, never share one concurrently.

use rand::{Rng, RngCore, SeedableRng};
use rand_distr::{Distribution, Exp1, OpenClosed01, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};
use serde_with::{serde_as, DisplayFromStr, PickFirst};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Master seed of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Seed {
    pub fn new(master: u64) -> Self {
        Seed(master)
    }

    /// A new master seed, deterministically derived from this one.
    ///
    /// Used when a whole experiment has to be repeated under several
    /// independent seeds (index 0 returns `self`).
    pub fn fork(self, index: u64) -> Seed {
        if index == 0 {
            self
        } else {
            Seed(derive(self, &[u64::MAX, index]).key)
        }
    }
}

const SEED_SALT: u64 = 0x6a09_e667_f3bc_c909;
const PATH_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
fn fold(key: u64, index: u64) -> u64 {
    mix(key ^ mix(index.wrapping_add(PATH_SALT)))
}

/// A reproducible random stream derived from a seed and a path.
#[derive(Debug, Clone)]
pub struct Stream {
    key: u64,
    path: SmallVec<[u64; 4]>,
    rng: Xoshiro256PlusPlus,
}

/// Derive the stream addressed by `path` under `seed`.
///
/// Pure: the same `(seed, path)` always produces the same output sequence.
pub fn derive(seed: Seed, path: &[u64]) -> Stream {
    let key = path.iter().fold(mix(seed.0 ^ SEED_SALT), |k, &p| fold(k, p));
    Stream {
        key,
        path: SmallVec::from_slice(path),
        rng: Xoshiro256PlusPlus::seed_from_u64(key),
    }
}

impl Stream {
    /// The stream at `path ++ [index]`. Does not consume from `self`.
    pub fn child(&self, index: u64) -> Stream {
        let key = fold(self.key, index);
        let mut path = self.path.clone();
        path.push(index);
        Stream {
            key,
            path,
            rng: Xoshiro256PlusPlus::seed_from_u64(key),
        }
    }

    pub fn path(&self) -> &[u64] {
        &self.path
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform on `(0, 1]`.
    pub fn uniform_open_closed(&mut self) -> f64 {
        OpenClosed01.sample(&mut self.rng)
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    pub fn sample(&mut self, dist: &Dist) -> f64 {
        dist.sample(self)
    }
}

impl RngCore for Stream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Distribution descriptor for the scalar laws used by arrivals and responses.
#[serde_as]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum Dist {
    /// Point mass at `value`.
    Deterministic {
        #[serde_as(as = "PickFirst<(_, DisplayFromStr)>")]
        value: f64,
    },
    Exponential {
        #[serde_as(as = "PickFirst<(_, DisplayFromStr)>")]
        rate: f64,
    },
    /// Nonnegative law with tail `P{η > t} = (1 + t)^beta`, `beta ∈ (-1, 0)`.
    ParetoTail {
        #[serde_as(as = "PickFirst<(_, DisplayFromStr)>")]
        beta: f64,
    },
    /// Zero-mean normal.
    Normal {
        #[serde_as(as = "PickFirst<(_, DisplayFromStr)>")]
        sd: f64,
    },
    LogNormal {
        #[serde_as(as = "PickFirst<(_, DisplayFromStr)>")]
        mu: f64,
        #[serde_as(as = "PickFirst<(_, DisplayFromStr)>")]
        sigma: f64,
    },
    /// Centered two-point law with unit variance: `sqrt((1-p)/p)` with
    /// probability `p`, `-sqrt(p/(1-p))` otherwise.
    TwoPoint {
        #[serde_as(as = "PickFirst<(_, DisplayFromStr)>")]
        p: f64,
    },
}

impl Dist {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Dist::Deterministic { value } => value.is_finite(),
            Dist::Exponential { rate } => rate.is_finite() && rate > 0.0,
            Dist::ParetoTail { beta } => beta > -1.0 && beta < 0.0,
            Dist::Normal { sd } => sd.is_finite() && sd >= 0.0,
            Dist::LogNormal { mu, sigma } => mu.is_finite() && sigma.is_finite() && sigma > 0.0,
            Dist::TwoPoint { p } => p > 0.0 && p < 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid distribution parameters: {self:?}")))
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Dist::Deterministic { value } => value,
            Dist::Exponential { rate } => {
                let e: f64 = Exp1.sample(rng);
                e / rate
            }
            Dist::ParetoTail { beta } => {
                // U^{1/β} - 1 with U on (0,1]: P{η > t} = P{U < (1+t)^β}.
                let u: f64 = OpenClosed01.sample(rng);
                u.powf(1.0 / beta) - 1.0
            }
            Dist::Normal { sd } => {
                let z: f64 = StandardNormal.sample(rng);
                sd * z
            }
            Dist::LogNormal { mu, sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                (mu + sigma * z).exp()
            }
            Dist::TwoPoint { p } => {
                if rng.random::<f64>() < p {
                    ((1.0 - p) / p).sqrt()
                } else {
                    -(p / (1.0 - p)).sqrt()
                }
            }
        }
    }

    /// Expectation, `None` when infinite.
    pub fn mean(&self) -> Option<f64> {
        match *self {
            Dist::Deterministic { value } => Some(value),
            Dist::Exponential { rate } => Some(1.0 / rate),
            Dist::ParetoTail { .. } => None,
            Dist::Normal { .. } | Dist::TwoPoint { .. } => Some(0.0),
            Dist::LogNormal { mu, sigma } => Some((mu + 0.5 * sigma * sigma).exp()),
        }
    }

    /// Variance, `None` when infinite.
    pub fn variance(&self) -> Option<f64> {
        match *self {
            Dist::Deterministic { .. } => Some(0.0),
            Dist::Exponential { rate } => Some(1.0 / (rate * rate)),
            Dist::ParetoTail { .. } => None,
            Dist::Normal { sd } => Some(sd * sd),
            Dist::LogNormal { mu, sigma } => {
                let s2 = sigma * sigma;
                Some((s2.exp() - 1.0) * (2.0 * mu + s2).exp())
            }
            Dist::TwoPoint { .. } => Some(1.0),
        }
    }

    /// `P{X > t}` for the nonnegative laws, `None` for the others.
    pub fn survival(&self, t: f64) -> Option<f64> {
        match *self {
            Dist::Deterministic { value } if value >= 0.0 => Some(if value > t { 1.0 } else { 0.0 }),
            Dist::Exponential { rate } => Some(if t <= 0.0 { 1.0 } else { (-rate * t).exp() }),
            Dist::ParetoTail { beta } => Some(if t <= 0.0 { 1.0 } else { (1.0 + t).powf(beta) }),
            Dist::LogNormal { mu, sigma } => Some(if t <= 0.0 {
                1.0
            } else {
                0.5 * statrs::function::erf::erfc((t.ln() - mu) / (sigma * std::f64::consts::SQRT_2))
            }),
            _ => None,
        }
    }

    /// Whether every draw is strictly positive with positive mass away from zero.
    pub fn is_positive(&self) -> bool {
        match *self {
            Dist::Deterministic { value } => value > 0.0,
            Dist::Exponential { .. } | Dist::LogNormal { .. } => true,
            // η = 0 has probability zero but is attainable at U = 1.
            Dist::ParetoTail { .. } => true,
            Dist::Normal { .. } | Dist::TwoPoint { .. } => false,
        }
    }
}
