//! The shot-noise sum `Y(t) = Σ_k X_{k+1}(t - T_k)` and Monte-Carlo
//! ensembles of the scaled vector `(Y(u_i t) / √(c t^ρ v(t)))_i`.

use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_with::{serde_as, DisplayFromStr, PickFirst};

use crate::arrivals::{generate_arrivals, ArrivalRealization, ArrivalSpec};
use crate::error::{Error, Result};
use crate::limitgauss::validate_grid;
use crate::output::fmt_real;
use crate::responses::{Response, ResponseSource, ResponseSpec};
use crate::rng::{derive, Seed, Stream};

/// Relative mismatch allowed between the declared `(c, ρ)` and the pair
/// implied by the arrival model.
const NORMALIZATION_RTOL: f64 = 1e-9;

#[serde_as]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub arrival: ArrivalSpec,
    pub response: ResponseSpec,
    #[serde_as(as = "PickFirst<(_, DisplayFromStr)>")]
    pub c: f64,
    #[serde_as(as = "PickFirst<(_, DisplayFromStr)>")]
    pub rho: f64,
    #[serde_as(as = "Vec<PickFirst<(_, DisplayFromStr)>>")]
    pub grid: Vec<f64>,
    #[serde_as(as = "PickFirst<(_, DisplayFromStr)>")]
    pub t: f64,
    pub replicates: usize,
}

impl Scenario {
    /// Scenario with `(c, ρ)` taken from the arrival model.
    pub fn new(
        arrival: ArrivalSpec,
        response: ResponseSpec,
        grid: Vec<f64>,
        t: f64,
        replicates: usize,
    ) -> Result<Self> {
        let (c, rho) = arrival.normalization()?;
        let s = Scenario {
            arrival,
            response,
            c,
            rho,
            grid,
            t,
            replicates,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite() && self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::Config(format!(
                "c and rho must be positive and finite (got {}, {})",
                self.c, self.rho
            )));
        }
        let beta = self.response.index();
        let floor = -self.rho.min(1.0);
        if !(beta > floor) {
            return Err(Error::Config(format!(
                "response index beta = {beta} violates beta > -(rho ∧ 1) = {floor} for rho = {}",
                self.rho
            )));
        }
        self.response.validate()?;
        let (c, rho) = self.arrival.normalization()?;
        let close = |a: f64, b: f64| (a - b).abs() <= NORMALIZATION_RTOL * b.abs();
        if !close(self.c, c) || !close(self.rho, rho) {
            return Err(Error::Config(format!(
                "(c, rho) = ({}, {}) does not match the arrival model, which implies ({c}, {rho})",
                self.c, self.rho
            )));
        }
        validate_grid(&self.grid)?;
        if !(self.t > 0.0) || !self.t.is_finite() {
            return Err(Error::Config(format!("t must be positive and finite (got {})", self.t)));
        }
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be positive".into()));
        }
        Ok(())
    }

    pub fn horizon(&self) -> f64 {
        self.grid.last().copied().unwrap_or(0.0) * self.t
    }

    /// `√(c t^ρ v(t))`.
    pub fn normalizer(&self) -> Result<f64> {
        let v = self.response.covariance().v(self.t);
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::DegenerateScale { t: self.t, v });
        }
        Ok((self.c * self.t.powf(self.rho) * v).sqrt())
    }
}

/// `Y(s)` for every `s` in `times`, with one independent path per arrival.
///
/// The path of the `k`-th arrival (in increasing time order) is drawn from
/// `stream.child(k)`.
pub fn evaluate_y<S: ResponseSource + ?Sized>(
    arrivals: &ArrivalRealization,
    source: &S,
    times: &[f64],
    stream: &Stream,
) -> Result<Vec<f64>> {
    if let Some(bad) = times.iter().find(|s| !(**s >= 0.0 && **s <= arrivals.horizon())) {
        return Err(Error::Domain(format!(
            "query time {bad} outside [0, {}]",
            arrivals.horizon()
        )));
    }
    let mut y = vec![0.0; times.len()];
    for (k, &tk) in arrivals.times().iter().enumerate() {
        let mut path = source.sample_path(stream.child(k as u64));
        for (acc, &s) in y.iter_mut().zip(times) {
            if s >= tk {
                *acc += path.value(s - tk);
            }
        }
    }
    Ok(y)
}

/// One draw of the scaled vector. Arrivals come from `stream` itself,
/// response paths from its children.
pub fn scaled_sample(scenario: &Scenario, mut stream: Stream) -> Result<Vec<f64>> {
    let norm = scenario.normalizer()?;
    let arrivals = generate_arrivals(&scenario.arrival, scenario.horizon(), &mut stream)?;
    let times: Vec<f64> = scenario.grid.iter().map(|u| u * scenario.t).collect();
    let mut y = evaluate_y(&arrivals, &scenario.response, &times, &stream)?;
    for v in &mut y {
        *v /= norm;
    }
    Ok(y)
}

/// `replicates × grid` matrix whose row `r` is drawn from `derive(seed, [r])`.
pub fn mc_ensemble(scenario: &Scenario, seed: Seed) -> Result<DMatrix<f64>> {
    scenario.validate()?;
    scenario.normalizer()?;
    let rows = (0..scenario.replicates)
        .into_par_iter()
        .map(|r| scaled_sample(scenario, derive(seed, &[r as u64])))
        .collect::<Result<Vec<_>>>()?;
    let n = scenario.grid.len();
    Ok(DMatrix::from_fn(rows.len(), n, |r, i| rows[r][i]))
}

/// Long-format CSV `replicate,u,value`.
pub fn write_ensemble_csv<W: Write>(ensemble: &DMatrix<f64>, grid: &[f64], mut out: W) -> Result<()> {
    writeln!(out, "replicate,u,value")?;
    for r in 0..ensemble.nrows() {
        for (i, u) in grid.iter().enumerate() {
            writeln!(out, "{r},{},{}", fmt_real(*u), fmt_real(ensemble[(r, i)]))?;
        }
    }
    Ok(())
}
