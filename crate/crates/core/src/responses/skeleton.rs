//! Lazily sampled Markov paths with a knot cache.
//!
//! A path is only ever materialised at the times it is queried. A new query
//! time is sampled from the exact conditional law given its nearest cached
//! neighbours, so the finite-dimensional laws are exact for any query order
//! and repeated queries return the cached value.

use rand_distr::{Binomial, Distribution};

use crate::arrivals::poisson_count;
use crate::rng::Stream;

pub(crate) trait MarkovLaw {
    /// Law at `s` with no knot cached.
    fn marginal(&self, s: f64, rng: &mut Stream) -> f64;
    /// Law at `s > s0` given the value at `s0`.
    fn forward(&self, s0: f64, x0: f64, s: f64, rng: &mut Stream) -> f64;
    /// Law at `s < s1` given the value at `s1`.
    fn backward(&self, s1: f64, x1: f64, s: f64, rng: &mut Stream) -> f64;
    /// Law at `s0 < s < s1` given both end values.
    fn bridge(&self, s0: f64, x0: f64, s1: f64, x1: f64, s: f64, rng: &mut Stream) -> f64;
}

#[derive(Debug, Clone)]
pub(crate) struct LazyPath<L> {
    law: L,
    knots: Vec<(f64, f64)>,
    stream: Stream,
}

impl<L: MarkovLaw> LazyPath<L> {
    pub(crate) fn new(law: L, stream: Stream) -> Self {
        LazyPath {
            law,
            knots: Vec::new(),
            stream,
        }
    }

    /// Path pinned at `origin`, e.g. `W(0) = 0`.
    pub(crate) fn pinned(law: L, origin: (f64, f64), stream: Stream) -> Self {
        LazyPath {
            law,
            knots: vec![origin],
            stream,
        }
    }

    pub(crate) fn at(&mut self, s: f64) -> f64 {
        match self.knots.binary_search_by(|k| k.0.total_cmp(&s)) {
            Ok(i) => self.knots[i].1,
            Err(i) => {
                let left = i.checked_sub(1).map(|j| self.knots[j]);
                let right = self.knots.get(i).copied();
                let rng = &mut self.stream;
                let x = match (left, right) {
                    (None, None) => self.law.marginal(s, rng),
                    (Some((s0, x0)), None) => self.law.forward(s0, x0, s, rng),
                    (None, Some((s1, x1))) => self.law.backward(s1, x1, s, rng),
                    (Some((s0, x0)), Some((s1, x1))) => self.law.bridge(s0, x0, s1, x1, s, rng),
                };
                self.knots.insert(i, (s, x));
                x
            }
        }
    }
}

/// Standard Brownian motion.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Brownian;

impl MarkovLaw for Brownian {
    fn marginal(&self, s: f64, rng: &mut Stream) -> f64 {
        s.sqrt() * rng.standard_normal()
    }

    fn forward(&self, s0: f64, x0: f64, s: f64, rng: &mut Stream) -> f64 {
        x0 + (s - s0).sqrt() * rng.standard_normal()
    }

    fn backward(&self, s1: f64, x1: f64, s: f64, rng: &mut Stream) -> f64 {
        // W(s) | W(s1) ~ N(s/s1 · x1, s(s1-s)/s1)
        let mean = s / s1 * x1;
        let var = s * (s1 - s) / s1;
        mean + var.sqrt() * rng.standard_normal()
    }

    fn bridge(&self, s0: f64, x0: f64, s1: f64, x1: f64, s: f64, rng: &mut Stream) -> f64 {
        let span = s1 - s0;
        let mean = x0 + (s - s0) / span * (x1 - x0);
        let var = (s - s0) * (s1 - s) / span;
        mean + var.sqrt() * rng.standard_normal()
    }
}

/// Unit-rate Poisson counting process (values are counts stored as reals).
#[derive(Debug, Clone, Copy)]
pub(crate) struct UnitPoisson;

impl UnitPoisson {
    fn thin(n: f64, p: f64, rng: &mut Stream) -> f64 {
        let n = n as u64;
        if n == 0 || p <= 0.0 {
            return 0.0;
        }
        if p >= 1.0 {
            return n as f64;
        }
        Binomial::new(n, p).expect("valid binomial").sample(rng) as f64
    }
}

impl MarkovLaw for UnitPoisson {
    fn marginal(&self, s: f64, rng: &mut Stream) -> f64 {
        poisson_count(s, rng) as f64
    }

    fn forward(&self, s0: f64, x0: f64, s: f64, rng: &mut Stream) -> f64 {
        x0 + poisson_count(s - s0, rng) as f64
    }

    fn backward(&self, s1: f64, x1: f64, s: f64, rng: &mut Stream) -> f64 {
        Self::thin(x1, s / s1, rng)
    }

    fn bridge(&self, s0: f64, x0: f64, s1: f64, x1: f64, s: f64, rng: &mut Stream) -> f64 {
        x0 + Self::thin(x1 - x0, (s - s0) / (s1 - s0), rng)
    }
}

/// Stationary Ornstein–Uhlenbeck process with unit mean reversion and
/// variance 1/2, so `Cov(Z(s), Z(t)) = e^{-|s-t|} / 2`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StationaryOu;

impl StationaryOu {
    fn step(x: f64, lag: f64, rng: &mut Stream) -> f64 {
        let a = (-lag).exp();
        // 1 - e^{-2 lag} computed without cancellation
        let resid = -(-2.0 * lag).exp_m1();
        a * x + (0.5 * resid).sqrt() * rng.standard_normal()
    }
}

impl MarkovLaw for StationaryOu {
    fn marginal(&self, _s: f64, rng: &mut Stream) -> f64 {
        std::f64::consts::FRAC_1_SQRT_2 * rng.standard_normal()
    }

    fn forward(&self, s0: f64, x0: f64, s: f64, rng: &mut Stream) -> f64 {
        Self::step(x0, s - s0, rng)
    }

    fn backward(&self, s1: f64, x1: f64, s: f64, rng: &mut Stream) -> f64 {
        // time-reversible
        Self::step(x1, s1 - s, rng)
    }

    fn bridge(&self, s0: f64, x0: f64, s1: f64, x1: f64, s: f64, rng: &mut Stream) -> f64 {
        let a = (-(s - s0)).exp();
        let b = (-(s1 - s)).exp();
        let one_a2 = -(-2.0 * (s - s0)).exp_m1();
        let one_b2 = -(-2.0 * (s1 - s)).exp_m1();
        let one_ab2 = -(-2.0 * (s1 - s0)).exp_m1();
        let mean = (a * one_b2 * x0 + b * one_a2 * x1) / one_ab2;
        let var = 0.5 * one_a2 * one_b2 / one_ab2;
        mean + var.sqrt() * rng.standard_normal()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{derive, Seed};

    /// Empirical covariance of (Z(t_i)) for paths queried in `order`.
    fn ou_cov(order: &[f64], a: f64, b: f64, n: u64) -> f64 {
        let mut sum = 0.0;
        for r in 0..n {
            let mut p = LazyPath::new(StationaryOu, derive(Seed(21), &[r]));
            for &t in order {
                p.at(t);
            }
            sum += p.at(a) * p.at(b);
        }
        sum / n as f64
    }

    #[test]
    fn ou_bridge_gives_exact_covariance() {
        // Middle point queried last: its law comes from the bridge.
        let n = 100_000;
        let c = ou_cov(&[0.0, 2.0, 1.0], 0.0, 1.0, n);
        let target = 0.5 * (-1.0f64).exp();
        let se = ((0.25 + target * target) / n as f64).sqrt();
        assert!((c - target).abs() < 4.0 * se, "{c} vs {target}");
        let c = ou_cov(&[2.0, 0.5], 0.5, 2.0, n);
        let target = 0.5 * (-1.5f64).exp();
        assert!((c - target).abs() < 4.0 * se, "{c} vs {target}");
    }

    #[test]
    fn poisson_bridge_keeps_marginals() {
        let n = 50_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for r in 0..n {
            let mut p = LazyPath::pinned(UnitPoisson, (0.0, 0.0), derive(Seed(4), &[r]));
            p.at(4.0);
            let x = p.at(1.0);
            s1 += x;
            s2 += x * x;
        }
        let mean = s1 / n as f64;
        let var = s2 / n as f64 - mean * mean;
        assert!((mean - 1.0).abs() < 4.0 * (1.0 / n as f64).sqrt());
        assert!((var - 1.0).abs() < 0.05);
    }

    #[test]
    fn cached_values_are_stable() {
        let mut p = LazyPath::pinned(Brownian, (0.0, 0.0), derive(Seed(1), &[]));
        let a = p.at(2.0);
        let b = p.at(0.5);
        let c = p.at(1.0);
        assert_eq!(p.at(0.5), b);
        assert_eq!(p.at(2.0), a);
        assert_eq!(p.at(1.0), c);
        assert_eq!(p.at(0.0), 0.0);
    }
}
