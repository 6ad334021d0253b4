//! Statistical comparison of Monte-Carlo ensembles with the Gaussian limit,
//! and finite-scale checks of the hypotheses behind the limit theorem.
//!
//! Every checker returns a [`CheckReport`] whose `pass` flag is a pure
//! function of `statistic` and the rule spelled out in
//! `threshold_description`.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::arrivals::{generate_arrivals, ArrivalSpec};
use crate::error::{Error, Result};
use crate::limitgauss::{beta_fn, diagonal_variance, limit_cov_pi, LimitCovariance, PowerKernel};
use crate::responses::{Response, ResponseSpec};
use crate::rng::{derive, Seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub scales: Vec<f64>,
    pub statistic: Vec<f64>,
    pub threshold_description: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityReport {
    pub direction: Vec<f64>,
    pub ks_statistic: f64,
    pub p_value: f64,
    pub sample_size: usize,
}

/// Sample mean, unbiased covariance and entrywise standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCov {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub se: DMatrix<f64>,
}

pub fn empirical_cov(ensemble: &DMatrix<f64>) -> Result<EmpiricalCov> {
    let r = ensemble.nrows();
    if r < 2 {
        return Err(Error::Domain(format!("covariance needs at least 2 rows (got {r})")));
    }
    let n = ensemble.ncols();
    let mean = DVector::from_fn(n, |i, _| ensemble.column(i).mean());
    let mut cov = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let s: f64 = (0..r)
                .map(|k| (ensemble[(k, i)] - mean[i]) * (ensemble[(k, j)] - mean[j]))
                .sum();
            cov[(i, j)] = s / (r - 1) as f64;
            cov[(j, i)] = cov[(i, j)];
        }
    }
    let se = DMatrix::from_fn(n, n, |i, j| {
        ((cov[(i, i)] * cov[(j, j)] + cov[(i, j)] * cov[(i, j)]) / r as f64).sqrt()
    });
    Ok(EmpiricalCov { mean, cov, se })
}

/// Standard normal distribution function.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// `sup_x |F_n(x) - Φ(x)|` for the empirical distribution of `sample`.
pub fn ks_statistic(sample: &[f64]) -> f64 {
    let mut z = sample.to_vec();
    z.sort_by(f64::total_cmp);
    let n = z.len() as f64;
    z.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let p = std_normal_cdf(x);
        d.max((i as f64 + 1.0) / n - p).max(p - i as f64 / n)
    })
}

/// `P(K > λ)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    const TERMS: usize = 100;
    if !(lambda > 0.0) {
        return 1.0;
    }
    let p = if lambda < 1.0 {
        // Jacobi-transformed series, fast for small λ
        let a = PI * PI / (8.0 * lambda * lambda);
        let cdf: f64 = (1..=TERMS)
            .map(|k| {
                let m = (2 * k - 1) as f64;
                (-m * m * a).exp()
            })
            .sum::<f64>()
            * (2.0 * PI).sqrt()
            / lambda;
        1.0 - cdf
    } else {
        2.0 * (1..=TERMS)
            .map(|k| {
                let k = k as f64;
                let sign = if k as usize % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * k * k * lambda * lambda).exp()
            })
            .sum::<f64>()
    };
    p.clamp(0.0, 1.0)
}

/// Kolmogorov–Smirnov test of the projections `αᵀ row / √(αᵀ Π α)`
/// against the standard normal law.
pub fn ks_normal_test(ensemble: &DMatrix<f64>, cov: &LimitCovariance, direction: &[f64]) -> Result<NormalityReport> {
    if direction.len() != cov.dim() || ensemble.ncols() != cov.dim() {
        return Err(Error::Domain(format!(
            "direction has {} entries, ensemble {} columns, covariance dimension {}",
            direction.len(),
            ensemble.ncols(),
            cov.dim()
        )));
    }
    if ensemble.nrows() == 0 {
        return Err(Error::Domain("empty ensemble".into()));
    }
    let q = cov.quadratic_form(direction);
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::DegenerateDirection(q));
    }
    let sd = q.sqrt();
    let z: Vec<f64> = (0..ensemble.nrows())
        .map(|r| {
            direction
                .iter()
                .enumerate()
                .map(|(i, a)| a * ensemble[(r, i)])
                .sum::<f64>()
                / sd
        })
        .collect();
    let d = ks_statistic(&z);
    let n = z.len();
    Ok(NormalityReport {
        direction: direction.to_vec(),
        ks_statistic: d,
        p_value: kolmogorov_survival((n as f64).sqrt() * d),
        sample_size: n,
    })
}

/// One row of the empirical-versus-limit covariance comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub i: usize,
    pub j: usize,
    pub empirical: f64,
    pub limit: f64,
    pub se: f64,
    pub z_score: f64,
}

/// Entrywise comparison over the upper triangle; passes iff every
/// `|z| <= se_multiplier`.
pub fn compare_covariance(
    emp: &EmpiricalCov,
    limit: &LimitCovariance,
    se_multiplier: f64,
) -> (Vec<ComparisonRow>, CheckReport) {
    let n = limit.dim();
    let mut rows = Vec::new();
    for i in 0..n {
        for j in i..n {
            let empirical = emp.cov[(i, j)];
            let lim = limit.matrix()[(i, j)];
            let se = emp.se[(i, j)];
            let z_score = (empirical - lim) / se;
            rows.push(ComparisonRow {
                i,
                j,
                empirical,
                limit: lim,
                se,
                z_score,
            });
        }
    }
    let statistic: Vec<f64> = rows.iter().map(|r| r.z_score.abs()).collect();
    let pass = statistic.iter().all(|z| *z <= se_multiplier);
    let report = CheckReport {
        name: "covariance".into(),
        scales: Vec::new(),
        statistic,
        threshold_description: format!(
            "|empirical - limit| / se <= {se_multiplier} for every upper-triangle entry (row-major order)"
        ),
        pass,
    };
    (rows, report)
}

/// Index range holding the upper half of `len` scales, at least two long.
fn top_half(len: usize) -> std::ops::Range<usize> {
    (len / 2).min(len.saturating_sub(2))..len
}

fn strictly_decreasing(x: &[f64]) -> bool {
    x.windows(2).all(|w| w[1] < w[0])
}

fn nonincreasing(x: &[f64]) -> bool {
    x.windows(2).all(|w| w[1] <= w[0])
}

fn check_scales(scales: &[f64], min: f64) -> Result<()> {
    if scales.len() < 2 {
        return Err(Error::Config("a convergence check needs at least two scales".into()));
    }
    if scales.iter().any(|t| !(*t > min) || !t.is_finite())
        || !strictly_decreasing(&scales.iter().map(|t| -t).collect::<Vec<_>>())
    {
        return Err(Error::Config(format!(
            "scales must be increasing and exceed {min}: {scales:?}"
        )));
    }
    Ok(())
}

/// Mean of `stat(scale_index, replicate)` over replicates, summed in
/// replicate order so the result does not depend on scheduling.
fn mc_mean<F>(replicates: usize, f: F) -> Result<f64>
where
    F: Fn(u64) -> Result<f64> + Sync,
{
    if replicates == 0 {
        return Err(Error::Config("replicates must be positive".into()));
    }
    let values = (0..replicates as u64)
        .into_par_iter()
        .map(&f)
        .collect::<Result<Vec<f64>>>()?;
    Ok(values.iter().sum::<f64>() / replicates as f64)
}

/// `sup_{y ∈ [0, T]} |N(ty)/t^ρ - c y^ρ|` for sorted arrival times.
///
/// Between jumps the comparator `c y^ρ` is monotone and `N` is constant, so
/// the supremum is attained at a jump (left limit or jump value) or at `T`.
pub fn weak_law_sup(times: &[f64], c: f64, rho: f64, t: f64, big_t: f64) -> f64 {
    let norm = t.powf(rho);
    let mut sup = 0.0f64;
    let mut count = 0usize;
    let mut i = 0;
    while i < times.len() && times[i] <= t * big_t {
        let tau = times[i];
        let g = c * (tau / t).powf(rho);
        sup = sup.max((count as f64 / norm - g).abs());
        while i < times.len() && times[i] == tau {
            count += 1;
            i += 1;
        }
        sup = sup.max((count as f64 / norm - g).abs());
    }
    sup.max((count as f64 / norm - c * big_t.powf(rho)).abs())
}

/// Uniform law of large numbers for `N` on `[0, T]`.
pub fn check_weak_law(
    spec: &ArrivalSpec,
    c: f64,
    rho: f64,
    big_t: f64,
    scales: &[f64],
    replicates: usize,
    seed: Seed,
) -> Result<CheckReport> {
    check_scales(scales, 0.0)?;
    let mut statistic = Vec::with_capacity(scales.len());
    for (si, &t) in scales.iter().enumerate() {
        statistic.push(mc_mean(replicates, |r| {
            let mut s = derive(seed, &[si as u64, r]);
            let a = generate_arrivals(spec, t * big_t, &mut s)?;
            Ok(weak_law_sup(a.times(), c, rho, t, big_t))
        })?);
    }
    let limit = 0.1 * c * big_t.powf(rho);
    let pass = strictly_decreasing(&statistic[top_half(scales.len())]) && statistic[scales.len() - 1] < limit;
    Ok(CheckReport {
        name: "weak_law".into(),
        scales: scales.to_vec(),
        statistic,
        threshold_description: format!(
            "mean of sup_(y<=T) |N(ty)/t^rho - c y^rho| strictly decreasing over the upper half of scales and final value < 0.1 c T^rho = {limit}"
        ),
        pass,
    })
}

/// Boundedness of `E(N(t) - N(t-1)) / t^{ρ-1}`.
pub fn check_increments(
    spec: &ArrivalSpec,
    rho: f64,
    scales: &[f64],
    replicates: usize,
    seed: Seed,
) -> Result<CheckReport> {
    check_scales(scales, 1.0)?;
    let mut statistic = Vec::with_capacity(scales.len());
    for (si, &t) in scales.iter().enumerate() {
        statistic.push(mc_mean(replicates, |r| {
            let mut s = derive(seed, &[si as u64, r]);
            let a = generate_arrivals(spec, t, &mut s)?;
            let inc = a.count(t)? - a.count(t - 1.0)?;
            Ok(inc as f64 / t.powf(rho - 1.0))
        })?);
    }
    let bound = 2.0 * statistic[0];
    let pass = statistic.iter().all(|x| x.is_finite() && *x <= bound);
    Ok(CheckReport {
        name: "increments".into(),
        scales: scales.to_vec(),
        statistic,
        threshold_description: format!(
            "mean of (N(t) - N(t-1)) / t^(rho-1) at every scale <= 2 x its value at the smallest scale = {bound}"
        ),
        pass,
    })
}

/// Truncated second moment `E[X²(t); |X(t)| > y √(t^ρ v(t))] / v(t)`.
pub fn check_lindeberg(
    spec: &ResponseSpec,
    rho: f64,
    y: f64,
    scales: &[f64],
    replicates: usize,
    seed: Seed,
) -> Result<CheckReport> {
    if !(y > 0.0) {
        return Err(Error::Config(format!("truncation level y must be positive (got {y})")));
    }
    check_scales(scales, 0.0)?;
    let model = spec.covariance();
    let mut statistic = Vec::with_capacity(scales.len());
    for (si, &t) in scales.iter().enumerate() {
        let v = model.v(t);
        if !(v > 0.0) {
            return Err(Error::DegenerateScale { t, v });
        }
        let cut = y * (t.powf(rho) * v).sqrt();
        statistic.push(mc_mean(replicates, |r| {
            let x = spec.make_response(derive(seed, &[si as u64, r])).value(t);
            Ok(if x.abs() > cut { x * x / v } else { 0.0 })
        })?);
    }
    let n = scales.len();
    let pass = nonincreasing(&statistic[top_half(n)]) && statistic[n - 1] < 0.05;
    Ok(CheckReport {
        name: "lindeberg".into(),
        scales: scales.to_vec(),
        statistic,
        threshold_description: format!(
            "E[X^2(t); |X(t)| > y sqrt(t^rho v(t))] / v(t) with y = {y} nonincreasing over the upper half of scales and final value < 0.05"
        ),
        pass,
    })
}

/// `max_{u ∈ [a, b]} |f(ut, (u+w)t)/v(t) - C(u, u+w)|` on a 101-point grid.
pub fn check_limit_ratio(spec: &ResponseSpec, w: f64, a: f64, b: f64, scales: &[f64]) -> Result<CheckReport> {
    if !(w > 0.0) || !(a > 0.0 && a < b) || !b.is_finite() {
        return Err(Error::Config(format!(
            "limit ratio needs w > 0 and 0 < a < b (got w={w}, [{a}, {b}])"
        )));
    }
    check_scales(scales, 0.0)?;
    let model = spec.covariance();
    let statistic: Vec<f64> = scales
        .iter()
        .map(|&t| {
            (0..=100)
                .map(|k| {
                    let u = a + (b - a) * k as f64 / 100.0;
                    (model.scaled_ratio(u, u + w, t) - model.limit(u, u + w)).abs()
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let pass = nonincreasing(&statistic) && statistic[statistic.len() - 1] < 1e-2;
    Ok(CheckReport {
        name: "limit_ratio".into(),
        scales: scales.to_vec(),
        statistic,
        threshold_description: format!(
            "max over 101 points u in [{a}, {b}] of |f(ut,(u+w)t)/v(t) - C(u,u+w)| with w = {w} nonincreasing in t and final value < 0.01"
        ),
        pass,
    })
}

/// Law of large numbers `N(t) / (c t^ρ) → 1` at each scale, with its own
/// tolerance.
pub fn check_lln(
    spec: &ArrivalSpec,
    scales: &[f64],
    tolerances: &[f64],
    replicates: usize,
    seed: Seed,
) -> Result<CheckReport> {
    check_scales(scales, 0.0)?;
    if tolerances.len() != scales.len() {
        return Err(Error::Config(format!(
            "{} tolerances for {} scales",
            tolerances.len(),
            scales.len()
        )));
    }
    let (c, rho) = spec.normalization()?;
    let mut statistic = Vec::with_capacity(scales.len());
    for (si, &t) in scales.iter().enumerate() {
        let mean = mc_mean(replicates, |r| {
            let mut s = derive(seed, &[si as u64, r]);
            let a = generate_arrivals(spec, t, &mut s)?;
            Ok(a.len() as f64 / (c * t.powf(rho)))
        })?;
        statistic.push((mean - 1.0).abs());
    }
    let pass = statistic.iter().zip(tolerances).all(|(s, tol)| s < tol);
    Ok(CheckReport {
        name: "lln".into(),
        scales: scales.to_vec(),
        statistic,
        threshold_description: format!("|mean N(t) / (c t^rho) - 1| below {tolerances:?} at the respective scales"),
        pass,
    })
}

/// Quadrature against `ρB(β+1,ρ)(s∧t)^{β+ρ}` for `C = (u∧w)^β`; one
/// statistic (maximum absolute error over `betas` and `points²`) per `ρ`.
pub fn check_pi_closed_form(betas: &[f64], rhos: &[f64], points: &[f64], tol: f64) -> Result<CheckReport> {
    let mut statistic = Vec::with_capacity(rhos.len());
    for &rho in rhos {
        let mut worst = 0.0f64;
        for &beta in betas {
            for &s in points {
                for &t in points {
                    let (v, _) = limit_cov_pi(&PowerKernel::Min(beta), rho, s, t, tol)?;
                    worst = worst.max((v - diagonal_variance(beta, rho, s.min(t))?).abs());
                }
            }
        }
        statistic.push(worst);
    }
    let limit = 10.0 * tol;
    let pass = statistic.iter().all(|x| *x <= limit);
    Ok(CheckReport {
        name: "pi_closed_form".into(),
        scales: rhos.to_vec(),
        statistic,
        threshold_description: format!(
            "per rho, max |Pi(s,t) - rho B(beta+1,rho) (s^t)^(beta+rho)| over beta in {betas:?}, s,t in {points:?} <= 10 tol = {limit}"
        ),
        pass,
    })
}

/// Relative errors of `B(1,1) = 1`, `B(1/2,1/2) = π`, `B(1/2,1) = 2`.
pub fn check_beta_values() -> Result<CheckReport> {
    let cases = [(1.0, 1.0, 1.0), (0.5, 0.5, PI), (0.5, 1.0, 2.0)];
    let statistic = cases
        .iter()
        .map(|&(x, y, exact)| Ok(((beta_fn(x, y)? - exact) / exact).abs()))
        .collect::<Result<Vec<f64>>>()?;
    let pass = statistic.iter().all(|e| *e <= 1e-12);
    Ok(CheckReport {
        name: "beta_values".into(),
        scales: Vec::new(),
        statistic,
        threshold_description: "relative error <= 1e-12 for B(1,1)=1, B(0.5,0.5)=pi, B(0.5,1)=2".into(),
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limitgauss::{limit_cov_matrix, sample_limit_gaussian, DEFAULT_TOL};
    use crate::responses::Innovation;
    use crate::rng::Dist;

    fn identity_cov(n: usize) -> LimitCovariance {
        LimitCovariance::from_matrix((1..=n).map(|i| i as f64).collect(), DMatrix::identity(n, n), false).unwrap()
    }

    /// `E[Z²; |Z| > a] = 2(a φ(a) + Φ̄(a))` for standard normal `Z`.
    fn truncated_second_moment(a: f64) -> f64 {
        let phi = (-0.5 * a * a).exp() / (2.0 * PI).sqrt();
        2.0 * (a * phi + std_normal_cdf(-a))
    }

    #[test]
    fn two_point_covariance() {
        let e = empirical_cov(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, -1.0, 0.0])).unwrap();
        assert_eq!(e.mean.as_slice(), &[0.0, 0.0]);
        assert_eq!(e.cov, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]));
        let c = empirical_cov(&DMatrix::from_element(5, 3, 1.5)).unwrap();
        assert!(c.cov.iter().all(|x| *x == 0.0));
        assert!(empirical_cov(&DMatrix::zeros(1, 2)).is_err());
    }

    #[test]
    fn gaussian_off_diagonals_vanish() {
        let x = sample_limit_gaussian(&identity_cov(3), &mut derive(Seed(8), &[]), 100_000).unwrap();
        let e = empirical_cov(&x).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(e.cov[(i, j)].abs() < 4.0 * e.se[(i, j)]);
                }
            }
        }
    }

    #[test]
    fn single_zero_sample() {
        assert_eq!(ks_statistic(&[0.0]), 0.5);
        let r = ks_normal_test(&DMatrix::zeros(1, 1), &identity_cov(1), &[1.0]).unwrap();
        assert_eq!(r.ks_statistic, 0.5);
        assert_eq!(r.sample_size, 1);
    }

    #[test]
    fn kolmogorov_tail_values() {
        // reference values of the Kolmogorov distribution
        assert!((kolmogorov_survival(1.0) - 0.26999967167735456).abs() < 1e-10);
        assert!((kolmogorov_survival(1.3580986393225507) - 0.05).abs() < 1e-10);
        assert!((kolmogorov_survival(0.5) - 0.9639452436648751).abs() < 1e-10);
        assert_eq!(kolmogorov_survival(0.0), 1.0);
        assert!(kolmogorov_survival(5.0) < 1e-20);
        // both series agree where they meet
        let a = kolmogorov_survival(1.0 - 1e-12);
        assert!((a - kolmogorov_survival(1.0)).abs() < 1e-10);
    }

    #[test]
    fn ks_level() {
        let cov = identity_cov(1);
        let passes = (0..100)
            .filter(|&s| {
                let x = sample_limit_gaussian(&cov, &mut derive(Seed(s), &[7]), 100_000).unwrap();
                ks_normal_test(&x, &cov, &[1.0]).unwrap().p_value > 0.01
            })
            .count();
        assert!(passes >= 97, "{passes}");
    }

    #[test]
    fn ks_power_against_wrong_scale() {
        let cov = identity_cov(1);
        let x = sample_limit_gaussian(&cov, &mut derive(Seed(3), &[]), 10_000).unwrap() * 2.0;
        assert!(ks_normal_test(&x, &cov, &[1.0]).unwrap().p_value < 0.01);
    }

    #[test]
    fn ks_direction_scale_invariance() {
        let spec = ResponseSpec::ScaledVariable {
            beta: 0.0,
            eta: Innovation::default(),
        };
        let cov = limit_cov_matrix(&spec.covariance(), 1.0, &[1.0, 2.0, 3.0], DEFAULT_TOL).unwrap();
        let x = sample_limit_gaussian(&cov, &mut derive(Seed(5), &[]), 2000).unwrap();
        let a = ks_normal_test(&x, &cov, &[0.3, -1.0, 0.5]).unwrap();
        let b = ks_normal_test(&x, &cov, &[0.6, -2.0, 1.0]).unwrap();
        assert_eq!(a.ks_statistic, b.ks_statistic);
        assert_eq!(a.p_value, b.p_value);
        assert!(matches!(
            ks_normal_test(&x, &cov, &[0.0; 3]),
            Err(Error::DegenerateDirection(_))
        ));
    }

    #[test]
    fn weak_law_sup_by_brute_force() {
        let times = [0.0, 0.0, 0.3, 1.1, 1.1, 1.7, 2.9];
        let (c, rho, t, big_t) = (1.3, 1.5, 2.0, 1.2);
        let exact = weak_law_sup(&times, c, rho, t, big_t);
        let mut brute = 0.0f64;
        for k in 0..=200_000 {
            let y = big_t * k as f64 / 200_000.0;
            let n = times.iter().filter(|&&s| s <= t * y).count() as f64;
            brute = brute.max((n / t.powf(rho) - c * y.powf(rho)).abs());
        }
        assert!(exact >= brute - 1e-12);
        assert!(exact - brute < 1e-4);
    }

    #[test]
    fn weak_law_deterministic_walk() {
        let spec = ArrivalSpec::Renewal {
            xi: Dist::Deterministic { value: 1.0 },
        };
        let r = check_weak_law(&spec, 1.0, 1.0, 1.0, &[10.0, 100.0, 1000.0], 2, Seed(1)).unwrap();
        assert!(r.statistic[2] <= 2.0 / 1000.0);
        assert!(r.pass);
    }

    #[test]
    fn weak_law_perturbed_walk_decays() {
        let spec = ArrivalSpec::PerturbedWalk {
            xi: Dist::Exponential { rate: 1.0 },
            eta: Dist::ParetoTail { beta: -0.5 },
        };
        let r = check_weak_law(&spec, 1.0, 1.0, 1.0, &[50.0, 200.0, 800.0], 400, Seed(2)).unwrap();
        assert!(strictly_decreasing(&r.statistic), "{:?}", r.statistic);
        assert!(r.pass);
    }

    #[test]
    fn weak_law_brw_generation_two() {
        let spec = ArrivalSpec::brw(Dist::Deterministic { value: 1.0 }, 2);
        let r = check_weak_law(&spec, 0.5, 2.0, 1.0, &[20.0, 40.0, 80.0], 3, Seed(3)).unwrap();
        assert!(strictly_decreasing(&r.statistic), "{:?}", r.statistic);
        // N(s) = ⌊s⌋(⌊s⌋-1)/2; worst just before the jump at s = t, where
        // |(t-1)(t-2)/2 - t²/2| / t² = (3t - 2) / (2t²)
        for (s, t) in r.statistic.iter().zip(&r.scales) {
            assert!((s - (3.0 * t - 2.0) / (2.0 * t * t)).abs() < 1e-12, "{s} at {t}");
        }
        assert!(r.pass);
    }

    #[test]
    fn increments_oracles() {
        let det = ArrivalSpec::Renewal {
            xi: Dist::Deterministic { value: 1.0 },
        };
        let r = check_increments(&det, 1.0, &[10.5, 20.5], 2, Seed(1)).unwrap();
        assert_eq!(r.statistic, vec![1.0, 1.0]);
        assert!(r.pass);

        let poisson = ArrivalSpec::PoissonNh { c0: 1.0, rho0: 2.0 };
        let n = 20_000;
        let r = check_increments(&poisson, 2.0, &[5.0, 20.0, 80.0], n, Seed(2)).unwrap();
        for (s, t) in r.statistic.iter().zip(&r.scales) {
            let mean = 2.0 - 1.0 / t;
            let se = (mean / t / n as f64).sqrt();
            assert!((s - mean).abs() < 4.0 * se, "{s} vs {mean}");
        }
        assert!(r.pass);

        let brw = ArrivalSpec::brw(Dist::Deterministic { value: 1.0 }, 2);
        let r = check_increments(&brw, 2.0, &[10.5, 20.5, 40.5], 2, Seed(3)).unwrap();
        for (s, t) in r.statistic.iter().zip(&r.scales) {
            let f = t.floor();
            let g = (t - 1.0).floor();
            let exact = (f * (f - 1.0) / 2.0 - g * (g - 1.0) / 2.0) / t;
            assert!((s - exact).abs() < 1e-12);
        }
        assert!(r.pass);
    }

    #[test]
    fn lindeberg_survival_is_zero_eventually() {
        let spec = ResponseSpec::SurvivalIndicator { beta: -0.5 };
        let r = check_lindeberg(&spec, 1.0, 1.0, &[4.0, 16.0, 64.0], 1000, Seed(1)).unwrap();
        // the threshold √(t v(t)) exceeds 1 from t = 4 on
        assert!(r.statistic.iter().all(|s| *s == 0.0));
        assert!(r.pass);
    }

    #[test]
    fn lindeberg_scaled_normal_oracle() {
        let spec = ResponseSpec::ScaledVariable {
            beta: 0.0,
            eta: Innovation::default(),
        };
        let n = 1_000_000;
        let r = check_lindeberg(&spec, 1.0, 1.0, &[4.0, 16.0], n, Seed(2)).unwrap();
        for (s, t) in r.statistic.iter().zip(&r.scales) {
            let exact = truncated_second_moment(t.sqrt());
            // E[Z⁴; |Z| > a] bounds the per-draw variance
            let se = (truncated_second_moment(t.sqrt()) * 40.0 / n as f64).sqrt();
            assert!((s - exact).abs() < 4.0 * se, "{s} vs {exact} at t={t}");
        }
        assert!((truncated_second_moment(4.0) - 1.1339e-3).abs() < 1e-6);
    }

    #[test]
    fn lindeberg_ou_reduces_to_normal() {
        let spec = ResponseSpec::OuModulated { beta: -0.5 };
        let n = 400_000;
        let r = check_lindeberg(&spec, 1.0, 1.0, &[4.0, 16.0, 64.0], n, Seed(3)).unwrap();
        for (s, t) in r.statistic.iter().zip(&r.scales) {
            let exact = truncated_second_moment(t.sqrt());
            let se = (exact * 40.0 / n as f64).sqrt();
            assert!((s - exact).abs() < 4.0 * se + 1e-12, "{s} vs {exact}");
        }
        assert!(nonincreasing(&r.statistic));
        assert!(r.pass);
    }

    #[test]
    fn limit_ratio_kinds() {
        let d = ResponseSpec::CenteredPoisson { c0: 1.0, rho0: 1.0 };
        let r = check_limit_ratio(&d, 1.0, 0.5, 2.0, &[10.0, 100.0, 1000.0]).unwrap();
        assert_eq!(r.statistic, vec![0.0; 3]);
        assert!(r.pass);

        let c = ResponseSpec::TimeChangedBm { beta: 1.0 };
        assert_eq!(
            check_limit_ratio(&c, 1.0, 0.5, 2.0, &[10.0, 100.0]).unwrap().statistic,
            vec![0.0; 2]
        );

        let a = ResponseSpec::SurvivalIndicator { beta: -0.5 };
        let r = check_limit_ratio(&a, 1.0, 0.5, 2.0, &[1e2, 1e4, 1e6]).unwrap();
        assert!(strictly_decreasing(&r.statistic), "{:?}", r.statistic);
        // the product term is O(t^β)
        assert!(r.statistic[2] < 10.0 * 1e6f64.powf(-0.5));
        assert!(r.pass);

        let b = ResponseSpec::ScaledVariable {
            beta: -0.5,
            eta: Innovation::default(),
        };
        assert!(
            check_limit_ratio(&b, 1.0, 0.5, 2.0, &[10.0, 100.0, 1000.0])
                .unwrap()
                .pass
        );

        let e = ResponseSpec::OuModulated { beta: -0.5 };
        let r = check_limit_ratio(&e, 1.0, 0.5, 2.0, &[2.0, 4.0, 8.0, 16.0]).unwrap();
        for w in r.statistic.windows(2) {
            assert!(w[1] < w[0] * 0.2);
        }
        assert!(r.pass);
    }

    #[test]
    fn lln_perturbed_walk() {
        let spec = ArrivalSpec::PerturbedWalk {
            xi: Dist::Exponential { rate: 1.0 },
            eta: Dist::LogNormal { mu: 0.0, sigma: 1.0 },
        };
        let r = check_lln(&spec, &[1e2, 1e3, 1e4], &[0.15, 0.05, 0.02], 200, Seed(4)).unwrap();
        assert!(r.pass, "{:?}", r.statistic);
    }

    #[test]
    fn closed_form_reports() {
        let r = check_pi_closed_form(
            &[-0.5, 0.0, 1.0, 2.0],
            &[0.5, 1.0, 2.0, 3.0],
            &[0.5, 1.0, 2.0, 3.0],
            DEFAULT_TOL,
        )
        .unwrap();
        assert!(r.pass, "{:?}", r.statistic);
        assert!(check_beta_values().unwrap().pass);
    }

    #[test]
    fn comparison_rows() {
        let limit = identity_cov(2);
        let emp = EmpiricalCov {
            mean: DVector::zeros(2),
            cov: DMatrix::from_row_slice(2, 2, &[1.1, 0.0, 0.0, 0.8]),
            se: DMatrix::from_element(2, 2, 0.1),
        };
        let (rows, report) = compare_covariance(&emp, &limit, 4.0);
        assert_eq!(rows.len(), 3);
        assert!((rows[0].z_score - 1.0).abs() < 1e-12);
        assert!((rows[2].z_score + 2.0).abs() < 1e-12);
        assert!(report.pass);
        assert!(!compare_covariance(&emp, &limit, 1.5).1.pass);
    }

    #[test]
    fn checks_are_deterministic() {
        let spec = ArrivalSpec::Renewal {
            xi: Dist::Exponential { rate: 1.0 },
        };
        let a = check_weak_law(&spec, 1.0, 1.0, 1.0, &[10.0, 20.0], 50, Seed(6)).unwrap();
        let b = check_weak_law(&spec, 1.0, 1.0, 1.0, &[10.0, 20.0], 50, Seed(6)).unwrap();
        assert_eq!(a, b);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        assert_eq!(
            a,
            pool.install(|| check_weak_law(&spec, 1.0, 1.0, 1.0, &[10.0, 20.0], 50, Seed(6)).unwrap())
        );
    }

    proptest::proptest! {
        #[test]
        fn weak_law_sup_dominates_every_point(
            mut times in proptest::collection::vec(0.0f64..10.0, 0..30),
            c in 0.2f64..3.0,
            rho in 0.3f64..2.5,
            y in 0.0f64..=1.0,
        ) {
            times.sort_by(f64::total_cmp);
            let (t, big_t) = (10.0, 1.0);
            let sup = weak_law_sup(&times, c, rho, t, big_t);
            let n = times.iter().filter(|&&s| s <= t * y).count() as f64;
            proptest::prop_assert!(sup >= (n / t.powf(rho) - c * y.powf(rho)).abs() - 1e-12);
        }
    }
}
