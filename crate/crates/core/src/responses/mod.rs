//! Response processes `X` attached to each arrival, with their exact
//! covariance `f(u, w) = Cov(X(u), X(w))` and limit function `C(u, w)`.
//!
//! All five kinds are centered and vanish for negative times. Slowly varying
//! factors are fixed to constants: `g(t) = (1 + t)^{β/2}` and tails
//! `(1 + t)^β`, so every `f` has a closed form.

mod skeleton;

use serde::{Deserialize, Serialize};
use serde_with::{serde_as, DisplayFromStr, PickFirst};

use crate::error::{Error, Result};
use crate::limitgauss::LimitFunction;
use crate::rng::{Dist, Stream};
use skeleton::{Brownian, LazyPath, StationaryOu, UnitPoisson};

/// Zero-mean innovation law for [`ResponseSpec::ScaledVariable`].
#[serde_as]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum Innovation {
    Normal {
        #[serde_as(as = "PickFirst<(_, DisplayFromStr)>")]
        sd: f64,
    },
    /// Centered, unit variance; small `p` makes a heavy right atom.
    TwoPoint {
        #[serde_as(as = "PickFirst<(_, DisplayFromStr)>")]
        p: f64,
    },
}

impl Default for Innovation {
    fn default() -> Self {
        Innovation::Normal { sd: 1.0 }
    }
}

impl Innovation {
    pub fn dist(&self) -> Dist {
        match *self {
            Innovation::Normal { sd } => Dist::Normal { sd },
            Innovation::TwoPoint { p } => Dist::TwoPoint { p },
        }
    }

    pub fn variance(&self) -> f64 {
        self.dist().variance().unwrap_or(f64::NAN)
    }
}

#[serde_as]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ResponseSpec {
    /// `X(t) = 1{η > t} - P{η > t}` with `P{η > t} = (1 + t)^β`, `β ∈ (-1, 0)`.
    SurvivalIndicator {
        #[serde_as(as = "PickFirst<(_, DisplayFromStr)>")]
        beta: f64,
    },
    /// `X(t) = η (1 + t)^{β/2}`, `β > -1`.
    ScaledVariable {
        #[serde_as(as = "PickFirst<(_, DisplayFromStr)>")]
        beta: f64,
        #[serde(default)]
        eta: Innovation,
    },
    /// `X(t) = W(t^β)` for a Brownian motion `W`, `β > 0`.
    TimeChangedBm {
        #[serde_as(as = "PickFirst<(_, DisplayFromStr)>")]
        beta: f64,
    },
    /// `X(t) = N(t) - m(t)` for a Poisson process with `m(t) = c0 t^rho0`.
    CenteredPoisson {
        #[serde_as(as = "PickFirst<(_, DisplayFromStr)>")]
        c0: f64,
        #[serde_as(as = "PickFirst<(_, DisplayFromStr)>")]
        rho0: f64,
    },
    /// `X(t) = (1 + t)^{β/2} Z(t)` for a stationary OU process `Z` with
    /// variance 1/2, `β ∈ (-1, 0)`. Fictitious regular variation.
    OuModulated {
        #[serde_as(as = "PickFirst<(_, DisplayFromStr)>")]
        beta: f64,
    },
}

impl ResponseSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("{what}: {self:?}")));
        match *self {
            ResponseSpec::SurvivalIndicator { beta } | ResponseSpec::OuModulated { beta } => {
                if !(beta > -1.0 && beta < 0.0) {
                    return bad("beta must lie in (-1, 0)");
                }
            }
            ResponseSpec::ScaledVariable { beta, eta } => {
                if !(beta > -1.0) || !beta.is_finite() {
                    return bad("beta must exceed -1");
                }
                eta.dist().validate()?;
            }
            ResponseSpec::TimeChangedBm { beta } => {
                if !(beta > 0.0) || !beta.is_finite() {
                    return bad("beta must be positive");
                }
            }
            ResponseSpec::CenteredPoisson { c0, rho0 } => {
                if !(c0 > 0.0 && rho0 > 0.0) || !c0.is_finite() || !rho0.is_finite() {
                    return bad("c0 and rho0 must be positive");
                }
            }
        }
        Ok(())
    }

    /// Index of regular variation of `f`.
    pub fn index(&self) -> f64 {
        match *self {
            ResponseSpec::SurvivalIndicator { beta }
            | ResponseSpec::ScaledVariable { beta, .. }
            | ResponseSpec::TimeChangedBm { beta }
            | ResponseSpec::OuModulated { beta } => beta,
            ResponseSpec::CenteredPoisson { rho0, .. } => rho0,
        }
    }

    pub fn covariance(&self) -> CovarianceModel {
        CovarianceModel { spec: *self }
    }

    /// Draw one independent path.
    pub fn make_response(&self, mut stream: Stream) -> ResponsePath {
        match *self {
            ResponseSpec::SurvivalIndicator { beta } => {
                let eta = stream.sample(&Dist::ParetoTail { beta });
                ResponsePath::survival(beta, eta)
            }
            ResponseSpec::ScaledVariable { beta, eta } => {
                let draw = stream.sample(&eta.dist());
                ResponsePath::scaled(beta, draw)
            }
            ResponseSpec::TimeChangedBm { beta } => ResponsePath(PathState::TimeChangedBm {
                beta,
                path: LazyPath::pinned(Brownian, (0.0, 0.0), stream),
            }),
            ResponseSpec::CenteredPoisson { c0, rho0 } => ResponsePath(PathState::CenteredPoisson {
                c0,
                rho0,
                path: LazyPath::pinned(UnitPoisson, (0.0, 0.0), stream),
            }),
            ResponseSpec::OuModulated { beta } => ResponsePath(PathState::OuModulated {
                beta,
                path: LazyPath::new(StationaryOu, stream),
            }),
        }
    }
}

/// A random function of time that vanishes on the negative half-line.
pub trait Response {
    /// `X(t)`. Repeated calls at the same `t` return the same value.
    fn value(&mut self, t: f64) -> f64;
}

/// Something that can produce independent response paths from streams.
pub trait ResponseSource: Sync {
    type Path: Response;

    fn sample_path(&self, stream: Stream) -> Self::Path;
}

impl ResponseSource for ResponseSpec {
    type Path = ResponsePath;

    fn sample_path(&self, stream: Stream) -> ResponsePath {
        self.make_response(stream)
    }
}

/// One sampled response path.
#[derive(Debug, Clone)]
pub struct ResponsePath(PathState);

#[derive(Debug, Clone)]
enum PathState {
    Survival {
        beta: f64,
        eta: f64,
    },
    Scaled {
        beta: f64,
        eta: f64,
    },
    TimeChangedBm {
        beta: f64,
        path: LazyPath<Brownian>,
    },
    CenteredPoisson {
        c0: f64,
        rho0: f64,
        path: LazyPath<UnitPoisson>,
    },
    OuModulated {
        beta: f64,
        path: LazyPath<StationaryOu>,
    },
}

impl ResponsePath {
    /// Survival-indicator path with the lifetime `eta` already drawn.
    pub fn survival(beta: f64, eta: f64) -> Self {
        ResponsePath(PathState::Survival { beta, eta })
    }

    /// Scaled-variable path with the multiplier `eta` already drawn.
    pub fn scaled(beta: f64, eta: f64) -> Self {
        ResponsePath(PathState::Scaled { beta, eta })
    }
}

impl Response for ResponsePath {
    fn value(&mut self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match &mut self.0 {
            PathState::Survival { beta, eta } => {
                let alive = if *eta > t { 1.0 } else { 0.0 };
                alive - (1.0 + t).powf(*beta)
            }
            PathState::Scaled { beta, eta } => *eta * (1.0 + t).powf(0.5 * *beta),
            PathState::TimeChangedBm { beta, path } => path.at(t.powf(*beta)),
            PathState::CenteredPoisson { c0, rho0, path } => {
                let m = *c0 * t.powf(*rho0);
                path.at(m) - m
            }
            PathState::OuModulated { beta, path } => (1.0 + t).powf(0.5 * *beta) * path.at(t),
        }
    }
}

/// Exact second-order structure of a response kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceModel {
    spec: ResponseSpec,
}

impl CovarianceModel {
    pub fn spec(&self) -> &ResponseSpec {
        &self.spec
    }

    /// `f(u, w) = Cov(X(u), X(w))`; zero if either time is negative.
    pub fn f(&self, u: f64, w: f64) -> f64 {
        if u < 0.0 || w < 0.0 {
            return 0.0;
        }
        let (lo, hi) = if u <= w { (u, w) } else { (w, u) };
        match self.spec {
            ResponseSpec::SurvivalIndicator { beta } => {
                (1.0 + hi).powf(beta) - (1.0 + lo).powf(beta) * (1.0 + hi).powf(beta)
            }
            ResponseSpec::ScaledVariable { beta, eta } => {
                eta.variance() * (1.0 + u).powf(0.5 * beta) * (1.0 + w).powf(0.5 * beta)
            }
            ResponseSpec::TimeChangedBm { beta } => lo.powf(beta),
            ResponseSpec::CenteredPoisson { c0, rho0 } => c0 * lo.powf(rho0),
            ResponseSpec::OuModulated { beta } => {
                0.5 * (1.0 + u).powf(0.5 * beta) * (1.0 + w).powf(0.5 * beta) * (lo - hi).exp()
            }
        }
    }

    /// `v(t) = Var X(t)`.
    pub fn v(&self, t: f64) -> f64 {
        self.f(t, t)
    }

    /// `f(ut, wt) / v(t)`.
    ///
    /// Kinds whose covariance is exactly homogeneous return `C(u, w)` without
    /// rounding.
    pub fn scaled_ratio(&self, u: f64, w: f64, t: f64) -> f64 {
        match self.spec {
            ResponseSpec::TimeChangedBm { .. } | ResponseSpec::CenteredPoisson { .. } => self.limit(u, w),
            _ => self.f(u * t, w * t) / self.v(t),
        }
    }

    /// Limit function `C(u, w)` for `u, w > 0`.
    pub fn limit(&self, u: f64, w: f64) -> f64 {
        match self.spec {
            ResponseSpec::SurvivalIndicator { beta } => u.max(w).powf(beta),
            ResponseSpec::ScaledVariable { beta, .. } => u.powf(0.5 * beta) * w.powf(0.5 * beta),
            ResponseSpec::TimeChangedBm { beta } => u.min(w).powf(beta),
            ResponseSpec::CenteredPoisson { rho0, .. } => u.min(w).powf(rho0),
            ResponseSpec::OuModulated { beta } => {
                if u == w {
                    u.powf(beta)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn index(&self) -> f64 {
        self.spec.index()
    }

    pub fn is_fictitious(&self) -> bool {
        matches!(self.spec, ResponseSpec::OuModulated { .. })
    }
}

impl LimitFunction for CovarianceModel {
    fn limit(&self, u: f64, w: f64) -> f64 {
        CovarianceModel::limit(self, u, w)
    }

    fn index(&self) -> f64 {
        CovarianceModel::index(self)
    }

    fn is_fictitious(&self) -> bool {
        CovarianceModel::is_fictitious(self)
    }
}
