//! Arrival times `T_k` on a finite horizon and their counting function
//! `N(t) = #{k : T_k <= t}`.

use std::io::Write;

use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use serde_with::{serde_as, DisplayFromStr, PickFirst};

use crate::error::{Error, Result};
use crate::output::fmt_real;
use crate::rng::{Dist, Stream};

fn default_population_cap() -> f64 {
    5.0e7
}

/// Parametric arrival model.
#[serde_as]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ArrivalSpec {
    /// Zero-delayed renewal process: `T_0 = 0`, `T_k = ξ_1 + … + ξ_k`.
    Renewal { xi: Dist },
    /// `T_k = S_{k-1} + η_k` for `k >= 1`.
    PerturbedWalk { xi: Dist, eta: Dist },
    /// Poisson process with mean function `m(t) = c0 · t^rho0`.
    PoissonNh {
        #[serde_as(as = "PickFirst<(_, DisplayFromStr)>")]
        c0: f64,
        #[serde_as(as = "PickFirst<(_, DisplayFromStr)>")]
        rho0: f64,
    },
    /// Positions of the `generation`-th generation of a branching random
    /// walk whose offspring are displaced by the points `S_1, S_2, …` of a
    /// renewal process with steps `ξ`.
    BrwGeneration {
        xi: Dist,
        generation: u32,
        #[serde(default = "default_population_cap")]
        #[serde_as(as = "PickFirst<(_, DisplayFromStr)>")]
        max_expected_population: f64,
    },
}

impl ArrivalSpec {
    pub fn brw(xi: Dist, generation: u32) -> Self {
        ArrivalSpec::BrwGeneration {
            xi,
            generation,
            max_expected_population: default_population_cap(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive_step = |xi: &Dist| -> Result<()> {
            xi.validate()?;
            if !xi.is_positive() {
                return Err(Error::Config(format!("step law must be positive: {xi:?}")));
            }
            match xi.mean() {
                Some(m) if m.is_finite() && m > 0.0 => Ok(()),
                _ => Err(Error::Config(format!(
                    "step law must have finite positive mean: {xi:?}"
                ))),
            }
        };
        match self {
            ArrivalSpec::Renewal { xi } => positive_step(xi),
            ArrivalSpec::PerturbedWalk { xi, eta } => {
                positive_step(xi)?;
                eta.validate()?;
                if !eta.is_positive() {
                    return Err(Error::Config(format!("perturbation law must be positive: {eta:?}")));
                }
                Ok(())
            }
            ArrivalSpec::PoissonNh { c0, rho0 } => {
                if c0.is_finite() && *c0 > 0.0 && rho0.is_finite() && *rho0 > 0.0 {
                    Ok(())
                } else {
                    Err(Error::Config(format!(
                        "mean function needs c0 > 0, rho0 > 0 (got {c0}, {rho0})"
                    )))
                }
            }
            ArrivalSpec::BrwGeneration {
                xi,
                generation,
                max_expected_population,
            } => {
                positive_step(xi)?;
                if *generation < 2 {
                    return Err(Error::Config(format!("generation must be >= 2 (got {generation})")));
                }
                if !(*max_expected_population > 0.0) {
                    return Err(Error::Config("population cap must be positive".into()));
                }
                Ok(())
            }
        }
    }

    /// The pair `(c, ρ)` with `N(t) ~ c t^ρ`.
    pub fn normalization(&self) -> Result<(f64, f64)> {
        self.validate()?;
        Ok(match self {
            ArrivalSpec::Renewal { xi } | ArrivalSpec::PerturbedWalk { xi, .. } => {
                (1.0 / xi.mean().unwrap_or(f64::NAN), 1.0)
            }
            ArrivalSpec::PoissonNh { c0, rho0 } => (*c0, *rho0),
            ArrivalSpec::BrwGeneration { xi, generation, .. } => {
                let mu = xi.mean().unwrap_or(f64::NAN);
                let j = *generation as i32;
                (1.0 / (factorial(*generation) * mu.powi(j)), j as f64)
            }
        })
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// One sampled, sorted sequence of arrival times on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalRealization {
    times: Vec<f64>,
    horizon: f64,
}

impl ArrivalRealization {
    /// Build from arbitrary times; they are sorted and checked against the horizon.
    pub fn new(mut times: Vec<f64>, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::Domain(format!(
                "horizon must be positive and finite (got {horizon})"
            )));
        }
        if let Some(bad) = times.iter().find(|t| !(**t >= 0.0 && **t <= horizon)) {
            return Err(Error::Domain(format!("arrival time {bad} outside [0, {horizon}]")));
        }
        times.sort_by(f64::total_cmp);
        Ok(ArrivalRealization { times, horizon })
    }

    pub fn empty(horizon: f64) -> Result<Self> {
        Self::new(Vec::new(), horizon)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `N(t)`: number of stored times `<= t`. Zero for negative `t`.
    pub fn count(&self, t: f64) -> Result<usize> {
        if t.is_nan() || t > self.horizon {
            return Err(Error::Domain(format!("count at {t} beyond horizon {}", self.horizon)));
        }
        Ok(self.times.partition_point(|&x| x <= t))
    }

    /// CSV dump: a `time` column.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "time")?;
        for t in &self.times {
            writeln!(out, "{}", fmt_real(*t))?;
        }
        Ok(())
    }
}

/// Draw the arrivals of `spec` on `[0, horizon]`.
pub fn generate_arrivals(spec: &ArrivalSpec, horizon: f64, stream: &mut Stream) -> Result<ArrivalRealization> {
    spec.validate()?;
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::Domain(format!(
            "horizon must be positive and finite (got {horizon})"
        )));
    }
    let times = match spec {
        ArrivalSpec::Renewal { xi } => {
            let mut times = vec![0.0];
            renewal_points(xi, 0.0, horizon, stream, &mut times);
            times
        }
        ArrivalSpec::PerturbedWalk { xi, eta } => {
            let parts = perturbed_walk_parts(xi, eta, horizon, stream);
            parts.arrival_times(horizon)
        }
        ArrivalSpec::PoissonNh { c0, rho0 } => {
            let mass = c0 * horizon.powf(*rho0);
            let k = poisson_count(mass, stream);
            // m^{-1}(U m(h)) = h U^{1/ρ0}
            (0..k).map(|_| horizon * stream.uniform().powf(1.0 / rho0)).collect()
        }
        ArrivalSpec::BrwGeneration {
            xi,
            generation,
            max_expected_population,
        } => {
            let (c, rho) = spec.normalization()?;
            let expected = c * horizon.powf(rho);
            if expected > *max_expected_population {
                return Err(Error::Resource(format!(
                    "generation {generation} expects ~{expected:.3e} points on [0, {horizon}], cap {max_expected_population:.3e}"
                )));
            }
            let mut current = Vec::new();
            renewal_points(xi, 0.0, horizon, stream, &mut current);
            for _ in 1..*generation {
                let mut next = Vec::new();
                for &p in &current {
                    renewal_points(xi, p, horizon, stream, &mut next);
                }
                current = next;
            }
            current
        }
    };
    ArrivalRealization::new(times, horizon)
}

/// Append `origin + S_n`, `n >= 1`, while `<= horizon`.
fn renewal_points(xi: &Dist, origin: f64, horizon: f64, stream: &mut Stream, out: &mut Vec<f64>) {
    let mut s = origin;
    loop {
        s += xi.sample(stream);
        if s > horizon {
            break;
        }
        out.push(s);
    }
}

pub(crate) fn poisson_count(mean: f64, stream: &mut Stream) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let d = Poisson::new(mean).expect("positive finite Poisson mean");
    let k: f64 = d.sample(stream);
    k as u64
}

/// The random walk and perturbations behind a perturbed-walk realization.
///
/// `walk[i] = S_i` for `i = 0..=K` where `S_K` is the first partial sum beyond
/// the horizon; `eta[i] = η_{i+1}`, paired with `walk[i] = S_i`.
#[derive(Debug, Clone)]
pub struct PerturbedWalkParts {
    pub walk: Vec<f64>,
    pub eta: Vec<f64>,
}

pub fn perturbed_walk_parts(xi: &Dist, eta: &Dist, horizon: f64, stream: &mut Stream) -> PerturbedWalkParts {
    let mut walk = vec![0.0];
    let mut etas = Vec::new();
    let mut s = 0.0;
    // Points with S_{k-1} > horizon cannot land in [0, horizon] since η > 0.
    while s <= horizon {
        etas.push(eta.sample(stream));
        s += xi.sample(stream);
        walk.push(s);
    }
    PerturbedWalkParts { walk, eta: etas }
}

impl PerturbedWalkParts {
    pub fn arrival_times(&self, horizon: f64) -> Vec<f64> {
        self.walk
            .iter()
            .zip(&self.eta)
            .map(|(s, e)| s + e)
            .filter(|&t| t <= horizon)
            .collect()
    }

    /// `ν(t) = #{k >= 0 : S_k <= t}`.
    pub fn renewal_count(&self, t: f64) -> usize {
        self.walk.partition_point(|&s| s <= t)
    }
}
