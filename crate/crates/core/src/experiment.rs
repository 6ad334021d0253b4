//! Batch experiments: a JSON configuration, built-in presets, and the run
//! that writes ensemble, covariance, comparison, report and manifest files.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_with::{serde_as, DisplayFromStr, PickFirst};

use crate::arrivals::ArrivalSpec;
use crate::error::{Error, Result};
use crate::limitgauss::{limit_cov_matrix, LimitCovariance, DEFAULT_TOL};
use crate::output::fmt_real;
use crate::responses::{Innovation, ResponseSpec};
use crate::rng::{Dist, Seed};
use crate::shotnoise::{mc_ensemble, write_ensemble_csv, Scenario};
use crate::verify::{self, CheckReport, ComparisonRow, EmpiricalCov, NormalityReport};

pub const ENSEMBLE_FILE: &str = "ensemble.csv";
pub const LIMIT_COV_FILE: &str = "limit_cov.csv";
pub const COMPARISON_FILE: &str = "comparison.csv";
pub const REPORTS_FILE: &str = "reports.json";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Checks draw from `seed.fork(CHECK_SEED_BASE + index)`, disjoint from the
/// forks used for repeated normality ensembles.
const CHECK_SEED_BASE: u64 = 1 << 32;

/// Process exit statuses.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const CHECK_FAILED: i32 = 1;
    pub const INVALID_CONFIG: i32 = 2;
    pub const NUMERIC_FAILURE: i32 = 3;
}

/// Exit status for an error raised before any report exists.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Domain(_) | Error::Json(_) => exit::INVALID_CONFIG,
        _ => exit::NUMERIC_FAILURE,
    }
}

fn four() -> f64 {
    4.0
}
fn twenty() -> u64 {
    20
}
fn one_percent() -> f64 {
    0.01
}
fn ninety_percent() -> f64 {
    0.9
}
fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedDirection {
    /// First coordinate.
    E1,
    /// Last coordinate.
    En,
    /// All-ones vector.
    Ones,
}

/// Cramér–Wold projection direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Direction {
    Named(NamedDirection),
    Vector(Vec<f64>),
}

impl Direction {
    pub fn resolve(&self, n: usize) -> Vec<f64> {
        match self {
            Direction::Named(NamedDirection::E1) => (0..n).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect(),
            Direction::Named(NamedDirection::En) => (0..n).map(|i| if i + 1 == n { 1.0 } else { 0.0 }).collect(),
            Direction::Named(NamedDirection::Ones) => vec![1.0; n],
            Direction::Vector(v) => v.clone(),
        }
    }
}

/// One requested check. Optional model fields default to the scenario's.
#[serde_as]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckConfig {
    /// Empirical covariance of the ensemble against `Π`, entrywise.
    Covariance {
        #[serde(default = "four")]
        #[serde_as(as = "PickFirst<(_, DisplayFromStr)>")]
        se_multiplier: f64,
        /// Upper-triangle entries `[i, j]`; all of them when absent.
        entries: Option<Vec<[usize; 2]>>,
    },
    /// KS tests of projections, repeated over independent master seeds.
    Normality {
        directions: Vec<Direction>,
        #[serde(default = "twenty")]
        seeds: u64,
        #[serde(default = "one_percent")]
        #[serde_as(as = "PickFirst<(_, DisplayFromStr)>")]
        alpha: f64,
        #[serde(default = "ninety_percent")]
        #[serde_as(as = "PickFirst<(_, DisplayFromStr)>")]
        min_pass_fraction: f64,
    },
    /// Largest `|empirical - Π|` over `entries` as `t` runs through
    /// `scales`; passes iff it never increases.
    ScaleConvergence {
        #[serde_as(as = "Vec<PickFirst<(_, DisplayFromStr)>>")]
        scales: Vec<f64>,
        entries: Option<Vec<[usize; 2]>>,
    },
    WeakLaw {
        arrival: Option<ArrivalSpec>,
        #[serde_as(as = "Option<PickFirst<(_, DisplayFromStr)>>")]
        c: Option<f64>,
        #[serde_as(as = "Option<PickFirst<(_, DisplayFromStr)>>")]
        rho: Option<f64>,
        #[serde(default = "unit")]
        #[serde_as(as = "PickFirst<(_, DisplayFromStr)>")]
        horizon: f64,
        #[serde_as(as = "Vec<PickFirst<(_, DisplayFromStr)>>")]
        scales: Vec<f64>,
        replicates: usize,
    },
    Increments {
        arrival: Option<ArrivalSpec>,
        #[serde_as(as = "Option<PickFirst<(_, DisplayFromStr)>>")]
        rho: Option<f64>,
        #[serde_as(as = "Vec<PickFirst<(_, DisplayFromStr)>>")]
        scales: Vec<f64>,
        replicates: usize,
    },
    Lindeberg {
        response: Option<ResponseSpec>,
        #[serde_as(as = "Option<PickFirst<(_, DisplayFromStr)>>")]
        rho: Option<f64>,
        #[serde(default = "unit")]
        #[serde_as(as = "PickFirst<(_, DisplayFromStr)>")]
        y: f64,
        #[serde_as(as = "Vec<PickFirst<(_, DisplayFromStr)>>")]
        scales: Vec<f64>,
        replicates: usize,
    },
    LimitRatio {
        response: Option<ResponseSpec>,
        #[serde_as(as = "PickFirst<(_, DisplayFromStr)>")]
        w: f64,
        #[serde_as(as = "PickFirst<(_, DisplayFromStr)>")]
        a: f64,
        #[serde_as(as = "PickFirst<(_, DisplayFromStr)>")]
        b: f64,
        #[serde_as(as = "Vec<PickFirst<(_, DisplayFromStr)>>")]
        scales: Vec<f64>,
    },
    /// Quadrature against the closed form for `C = (u∧w)^β`.
    PiClosedForm {
        #[serde_as(as = "Vec<PickFirst<(_, DisplayFromStr)>>")]
        betas: Vec<f64>,
        #[serde_as(as = "Vec<PickFirst<(_, DisplayFromStr)>>")]
        rhos: Vec<f64>,
        #[serde_as(as = "Vec<PickFirst<(_, DisplayFromStr)>>")]
        points: Vec<f64>,
    },
    BetaValues {},
    /// `N(t) / (c t^ρ) → 1` with per-scale tolerances.
    Lln {
        arrival: Option<ArrivalSpec>,
        #[serde_as(as = "Vec<PickFirst<(_, DisplayFromStr)>>")]
        scales: Vec<f64>,
        #[serde_as(as = "Vec<PickFirst<(_, DisplayFromStr)>>")]
        tolerances: Vec<f64>,
        replicates: usize,
    },
}

#[serde_as]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Absolute quadrature tolerance for `Π`.
    #[serde_as(as = "PickFirst<(_, DisplayFromStr)>")]
    pub quadrature: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            quadrature: DEFAULT_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: Seed,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_directory: Option<PathBuf>,
    pub scenario: Scenario,
    #[serde(default)]
    pub checks: Vec<CheckConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn check_entries(entries: &Option<Vec<[usize; 2]>>, n: usize) -> Result<()> {
    if let Some(list) = entries {
        if list.is_empty() {
            return Err(Error::Config("entry list must not be empty".into()));
        }
        if let Some(bad) = list.iter().find(|[i, j]| *i >= n || *j >= n) {
            return Err(Error::Config(format!("entry {bad:?} outside a {n}-point grid")));
        }
    }
    Ok(())
}

fn increasing(name: &str, scales: &[f64], min: f64) -> Result<()> {
    if scales.len() < 2
        || scales.iter().any(|t| !(*t > min) || !t.is_finite())
        || scales.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(Error::Config(format!(
            "{name}: need at least two increasing scales above {min} (got {scales:?})"
        )));
    }
    Ok(())
}

fn positive(name: &str, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Config(format!("{name}: replicates must be positive")));
    }
    Ok(())
}

impl CheckConfig {
    fn validate(&self, scenario: &Scenario) -> Result<()> {
        let n = scenario.grid.len();
        match self {
            CheckConfig::Covariance { se_multiplier, entries } => {
                if !(*se_multiplier > 0.0) {
                    return Err(Error::Config("covariance: se_multiplier must be positive".into()));
                }
                check_entries(entries, n)
            }
            CheckConfig::Normality {
                directions,
                seeds,
                alpha,
                min_pass_fraction,
            } => {
                if directions.is_empty() || *seeds == 0 {
                    return Err(Error::Config(
                        "normality: need at least one direction and one seed".into(),
                    ));
                }
                if !(*alpha > 0.0 && *alpha < 1.0) || !(*min_pass_fraction >= 0.0 && *min_pass_fraction <= 1.0) {
                    return Err(Error::Config(
                        "normality: alpha must lie in (0, 1), min_pass_fraction in [0, 1]".into(),
                    ));
                }
                for d in directions {
                    let v = d.resolve(n);
                    if v.len() != n || v.iter().all(|x| *x == 0.0) || v.iter().any(|x| !x.is_finite()) {
                        return Err(Error::Config(format!(
                            "normality: bad direction {d:?} for a {n}-point grid"
                        )));
                    }
                }
                Ok(())
            }
            CheckConfig::ScaleConvergence { scales, entries } => {
                increasing("scale_convergence", scales, 0.0)?;
                check_entries(entries, n)
            }
            CheckConfig::WeakLaw {
                arrival,
                c,
                rho,
                horizon,
                scales,
                replicates,
            } => {
                let spec = arrival.as_ref().unwrap_or(&scenario.arrival);
                spec.validate()?;
                if c.is_some_and(|c| !(c > 0.0)) || rho.is_some_and(|r| !(r > 0.0)) || !(*horizon > 0.0) {
                    return Err(Error::Config("weak_law: c, rho and horizon must be positive".into()));
                }
                increasing("weak_law", scales, 0.0)?;
                positive("weak_law", *replicates)
            }
            CheckConfig::Increments {
                arrival,
                rho,
                scales,
                replicates,
            } => {
                arrival.as_ref().unwrap_or(&scenario.arrival).validate()?;
                if rho.is_some_and(|r| !(r > 0.0)) {
                    return Err(Error::Config("increments: rho must be positive".into()));
                }
                increasing("increments", scales, 1.0)?;
                positive("increments", *replicates)
            }
            CheckConfig::Lindeberg {
                response,
                rho,
                y,
                scales,
                replicates,
            } => {
                response.as_ref().unwrap_or(&scenario.response).validate()?;
                if rho.is_some_and(|r| !(r > 0.0)) || !(*y > 0.0) {
                    return Err(Error::Config("lindeberg: rho and y must be positive".into()));
                }
                increasing("lindeberg", scales, 0.0)?;
                positive("lindeberg", *replicates)
            }
            CheckConfig::LimitRatio {
                response,
                w,
                a,
                b,
                scales,
            } => {
                response.as_ref().unwrap_or(&scenario.response).validate()?;
                if !(*w > 0.0) || !(*a > 0.0 && a < b) || !b.is_finite() {
                    return Err(Error::Config("limit_ratio: need w > 0 and 0 < a < b".into()));
                }
                increasing("limit_ratio", scales, 0.0)
            }
            CheckConfig::PiClosedForm { betas, rhos, points } => {
                if betas.is_empty() || rhos.is_empty() || points.is_empty() {
                    return Err(Error::Config(
                        "pi_closed_form: betas, rhos and points must be nonempty".into(),
                    ));
                }
                if rhos.iter().any(|r| !(*r > 0.0)) || points.iter().any(|p| !(*p > 0.0)) {
                    return Err(Error::Config("pi_closed_form: rhos and points must be positive".into()));
                }
                // Π itself is finite for every β > -1
                if let Some(beta) = betas.iter().find(|b| !(**b > -1.0)) {
                    return Err(Error::Config(format!("pi_closed_form: beta = {beta} must exceed -1")));
                }
                Ok(())
            }
            CheckConfig::BetaValues {} => Ok(()),
            CheckConfig::Lln {
                arrival,
                scales,
                tolerances,
                replicates,
            } => {
                arrival.as_ref().unwrap_or(&scenario.arrival).validate()?;
                increasing("lln", scales, 0.0)?;
                if tolerances.len() != scales.len() || tolerances.iter().any(|t| !(*t > 0.0)) {
                    return Err(Error::Config("lln: one positive tolerance per scale".into()));
                }
                positive("lln", *replicates)
            }
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if !(self.tolerances.quadrature > 0.0) {
            return Err(Error::Config("quadrature tolerance must be positive".into()));
        }
        for check in &self.checks {
            check.validate(&self.scenario)?;
        }
        Ok(())
    }
}

/// Normality reports obtained under one master seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedNormality {
    pub seed: Seed,
    pub reports: Vec<NormalityReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub name: String,
    pub pass: bool,
    pub checks: Vec<CheckReport>,
    pub normality: Vec<SeedNormality>,
}

impl ReportBundle {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            exit::PASS
        } else {
            exit::CHECK_FAILED
        }
    }

    pub fn check(&self, name: &str) -> Option<&CheckReport> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    program: &'static str,
    version: &'static str,
    seed: Seed,
    files: [&'static str; 5],
    config: &'a ExperimentConfig,
}

/// Everything computed by a run, before anything is written.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub ensemble: DMatrix<f64>,
    pub limit: LimitCovariance,
    pub empirical: EmpiricalCov,
    pub comparison: Vec<ComparisonRow>,
    pub reports: ReportBundle,
}

fn selected(entries: &Option<Vec<[usize; 2]>>, n: usize) -> Vec<(usize, usize)> {
    match entries {
        Some(list) => list.iter().map(|[i, j]| (*i.min(j), *i.max(j))).collect(),
        None => (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect(),
    }
}

/// Compute the ensemble, the limit covariance and every requested check.
pub fn compute_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let sc = &config.scenario;
    let n = sc.grid.len();
    let tol = config.tolerances.quadrature;
    let limit = limit_cov_matrix(&sc.response.covariance(), sc.rho, &sc.grid, tol)?;
    let ensemble = mc_ensemble(sc, config.seed)?;
    let empirical = verify::empirical_cov(&ensemble)?;
    let (comparison, _) = verify::compare_covariance(&empirical, &limit, f64::INFINITY);

    let mut checks = Vec::new();
    let mut normality = Vec::new();
    for (index, check) in config.checks.iter().enumerate() {
        let check_seed = config.seed.fork(CHECK_SEED_BASE + index as u64);
        let report = match check {
            CheckConfig::Covariance { se_multiplier, entries } => {
                let (rows, _) = verify::compare_covariance(&empirical, &limit, *se_multiplier);
                let wanted = selected(entries, n);
                let statistic: Vec<f64> = wanted
                    .iter()
                    .map(|&(i, j)| {
                        rows.iter()
                            .find(|r| r.i == i && r.j == j)
                            .map_or(f64::NAN, |r| r.z_score.abs())
                    })
                    .collect();
                CheckReport {
                    name: "covariance".into(),
                    scales: vec![sc.t],
                    pass: statistic.iter().all(|z| *z <= *se_multiplier),
                    statistic,
                    threshold_description: format!(
                        "|empirical - limit| / se <= {se_multiplier} at t = {} for entries {wanted:?}",
                        sc.t
                    ),
                }
            }
            CheckConfig::Normality {
                directions,
                seeds,
                alpha,
                min_pass_fraction,
            } => {
                let dirs: Vec<Vec<f64>> = directions.iter().map(|d| d.resolve(n)).collect();
                let mut passes = vec![0u64; dirs.len()];
                for k in 0..*seeds {
                    let seed = config.seed.fork(k);
                    let sample = if k == 0 {
                        ensemble.clone()
                    } else {
                        mc_ensemble(sc, seed)?
                    };
                    let mut reports = Vec::with_capacity(dirs.len());
                    for (d, dir) in dirs.iter().enumerate() {
                        let r = verify::ks_normal_test(&sample, &limit, dir)?;
                        if r.p_value > *alpha {
                            passes[d] += 1;
                        }
                        reports.push(r);
                    }
                    normality.push(SeedNormality { seed, reports });
                }
                let statistic: Vec<f64> = passes.iter().map(|p| *p as f64 / *seeds as f64).collect();
                CheckReport {
                    name: "normality".into(),
                    scales: vec![sc.t],
                    pass: statistic.iter().all(|f| *f >= *min_pass_fraction),
                    statistic,
                    threshold_description: format!(
                        "per direction {directions:?}, fraction of {seeds} master seeds with KS p-value > {alpha} is >= {min_pass_fraction}"
                    ),
                }
            }
            CheckConfig::ScaleConvergence { scales, entries } => {
                let wanted = selected(entries, n);
                let mut statistic = Vec::with_capacity(scales.len());
                for &t in scales {
                    let emp = if t == sc.t {
                        empirical.cov.clone()
                    } else {
                        let at = Scenario { t, ..sc.clone() };
                        verify::empirical_cov(&mc_ensemble(&at, config.seed)?)?.cov
                    };
                    let worst = wanted
                        .iter()
                        .map(|&(i, j)| (emp[(i, j)] - limit.matrix()[(i, j)]).abs())
                        .fold(0.0, f64::max);
                    statistic.push(worst);
                }
                CheckReport {
                    name: "scale_convergence".into(),
                    scales: scales.clone(),
                    pass: statistic.windows(2).all(|w| w[1] <= w[0]),
                    statistic,
                    threshold_description: format!(
                        "max |empirical - limit| over entries {wanted:?} does not increase along the scales"
                    ),
                }
            }
            CheckConfig::WeakLaw {
                arrival,
                c,
                rho,
                horizon,
                scales,
                replicates,
            } => {
                let spec = arrival.as_ref().unwrap_or(&sc.arrival);
                let (c0, rho0) = spec.normalization()?;
                verify::check_weak_law(
                    spec,
                    c.unwrap_or(c0),
                    rho.unwrap_or(rho0),
                    *horizon,
                    scales,
                    *replicates,
                    check_seed,
                )?
            }
            CheckConfig::Increments {
                arrival,
                rho,
                scales,
                replicates,
            } => {
                let spec = arrival.as_ref().unwrap_or(&sc.arrival);
                let rho = match rho {
                    Some(r) => *r,
                    None => spec.normalization()?.1,
                };
                verify::check_increments(spec, rho, scales, *replicates, check_seed)?
            }
            CheckConfig::Lindeberg {
                response,
                rho,
                y,
                scales,
                replicates,
            } => verify::check_lindeberg(
                response.as_ref().unwrap_or(&sc.response),
                rho.unwrap_or(sc.rho),
                *y,
                scales,
                *replicates,
                check_seed,
            )?,
            CheckConfig::LimitRatio {
                response,
                w,
                a,
                b,
                scales,
            } => verify::check_limit_ratio(response.as_ref().unwrap_or(&sc.response), *w, *a, *b, scales)?,
            CheckConfig::PiClosedForm { betas, rhos, points } => {
                verify::check_pi_closed_form(betas, rhos, points, tol)?
            }
            CheckConfig::BetaValues {} => verify::check_beta_values()?,
            CheckConfig::Lln {
                arrival,
                scales,
                tolerances,
                replicates,
            } => verify::check_lln(
                arrival.as_ref().unwrap_or(&sc.arrival),
                scales,
                tolerances,
                *replicates,
                check_seed,
            )?,
        };
        checks.push(report);
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(ExperimentResult {
        ensemble,
        limit,
        empirical,
        comparison,
        reports: ReportBundle {
            name: config.name.clone(),
            pass,
            checks,
            normality,
        },
    })
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(dir.join(name))?))
}

/// Write the five output files into `dir`.
pub fn write_outputs(config: &ExperimentConfig, result: &ExperimentResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut f = create(dir, ENSEMBLE_FILE)?;
    write_ensemble_csv(&result.ensemble, &config.scenario.grid, &mut f)?;
    f.flush()?;

    let mut f = create(dir, LIMIT_COV_FILE)?;
    result.limit.write_csv(&mut f)?;
    f.flush()?;

    let mut f = create(dir, COMPARISON_FILE)?;
    writeln!(f, "i,j,empirical,limit,se,z_score")?;
    for r in &result.comparison {
        writeln!(
            f,
            "{},{},{},{},{},{}",
            r.i,
            r.j,
            fmt_real(r.empirical),
            fmt_real(r.limit),
            fmt_real(r.se),
            fmt_real(r.z_score)
        )?;
    }
    f.flush()?;

    let mut f = create(dir, REPORTS_FILE)?;
    serde_json::to_writer_pretty(&mut f, &result.reports)?;
    writeln!(f)?;
    f.flush()?;

    // Where the files went does not affect them, so reruns elsewhere match.
    let echoed = ExperimentConfig {
        output_directory: None,
        ..config.clone()
    };
    let manifest = Manifest {
        program: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        seed: config.seed,
        files: [
            ENSEMBLE_FILE,
            LIMIT_COV_FILE,
            COMPARISON_FILE,
            REPORTS_FILE,
            MANIFEST_FILE,
        ],
        config: &echoed,
    };
    let mut f = create(dir, MANIFEST_FILE)?;
    serde_json::to_writer_pretty(&mut f, &manifest)?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}

/// Compute, then write. All files are written after computation finishes.
pub fn run_experiment(config: &ExperimentConfig, dir: &Path) -> Result<ReportBundle> {
    let result = compute_experiment(config)?;
    write_outputs(config, &result, dir)?;
    Ok(result.reports)
}

// ---------------------------------------------------------------------------
// presets

fn exp1() -> Dist {
    Dist::Exponential { rate: 1.0 }
}

fn unit_step() -> Dist {
    Dist::Deterministic { value: 1.0 }
}

fn renewal_exp() -> ArrivalSpec {
    ArrivalSpec::Renewal { xi: exp1() }
}

fn perturbed_pareto() -> ArrivalSpec {
    ArrivalSpec::PerturbedWalk {
        xi: exp1(),
        eta: Dist::ParetoTail { beta: -0.5 },
    }
}

fn scaled_normal(beta: f64) -> ResponseSpec {
    ResponseSpec::ScaledVariable {
        beta,
        eta: Innovation::default(),
    }
}

fn scenario(arrival: ArrivalSpec, response: ResponseSpec, grid: &[f64], t: f64, replicates: usize) -> Scenario {
    let (c, rho) = arrival.normalization().expect("preset arrival is valid");
    Scenario {
        arrival,
        response,
        c,
        rho,
        grid: grid.to_vec(),
        t,
        replicates,
    }
}

fn config(name: &str, scenario: Scenario, checks: Vec<CheckConfig>) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        seed: Seed(20240917),
        output_directory: None,
        scenario,
        checks,
        tolerances: Tolerances::default(),
    }
}

fn all_entries(se_multiplier: f64) -> CheckConfig {
    CheckConfig::Covariance {
        se_multiplier,
        entries: None,
    }
}

/// Built-in presets: `(name, summary)`.
pub const PRESETS: [(&str, &str); 8] = [
    (
        "renewal-scaledvar",
        "renewal arrivals, scaled normal responses: covariance and KS normality against min(u, w)",
    ),
    (
        "limit-closed-forms",
        "quadrature of the limit covariance against its closed forms, beta function values",
    ),
    (
        "perturbed-survival",
        "perturbed walk with heavy-tailed survival responses: variance at t = 800 and decay from t = 200",
    ),
    (
        "renewal-ou-fictitious",
        "OU-modulated responses: independent limit coordinates with variances 2 sqrt(u)",
    ),
    (
        "poisson-centered",
        "Poisson arrivals with centered Poisson responses: covariance (u ∧ w)^2 / 2",
    ),
    (
        "hypothesis-checks",
        "weak law, increments, Lindeberg and limit-ratio checks for every model kind",
    ),
    (
        "perturbed-lln",
        "law of large numbers N(t)/t -> 1 for a perturbed walk with lognormal perturbations",
    ),
    ("determinism-smoke", "small renewal run for reproducibility checks"),
];

pub fn preset(name: &str) -> Option<ExperimentConfig> {
    let cfg = match name {
        "renewal-scaledvar" => config(
            name,
            scenario(renewal_exp(), scaled_normal(0.0), &[0.5, 1.0, 2.0], 400.0, 20_000),
            vec![
                all_entries(4.0),
                CheckConfig::Normality {
                    directions: vec![
                        Direction::Named(NamedDirection::E1),
                        Direction::Named(NamedDirection::Ones),
                    ],
                    seeds: 20,
                    alpha: 0.01,
                    min_pass_fraction: 0.9,
                },
            ],
        ),
        "limit-closed-forms" => config(
            name,
            scenario(
                renewal_exp(),
                ResponseSpec::TimeChangedBm { beta: 1.0 },
                &[0.5, 1.0, 2.0],
                50.0,
                1000,
            ),
            vec![
                CheckConfig::PiClosedForm {
                    betas: vec![-0.5, 0.0, 1.0, 2.0],
                    rhos: vec![0.5, 1.0, 2.0, 3.0],
                    points: vec![0.5, 1.0, 2.0, 3.0],
                },
                CheckConfig::BetaValues {},
            ],
        ),
        "perturbed-survival" => config(
            name,
            scenario(
                perturbed_pareto(),
                ResponseSpec::SurvivalIndicator { beta: -0.5 },
                &[1.0, 2.0],
                800.0,
                20_000,
            ),
            vec![
                CheckConfig::Covariance {
                    se_multiplier: 4.0,
                    entries: Some(vec![[0, 0]]),
                },
                CheckConfig::ScaleConvergence {
                    scales: vec![200.0, 800.0],
                    entries: None,
                },
            ],
        ),
        "renewal-ou-fictitious" => config(
            name,
            scenario(
                renewal_exp(),
                ResponseSpec::OuModulated { beta: -0.5 },
                &[1.0, 2.0],
                800.0,
                20_000,
            ),
            vec![all_entries(4.0)],
        ),
        "poisson-centered" => config(
            name,
            scenario(
                ArrivalSpec::PoissonNh { c0: 1.0, rho0: 1.0 },
                ResponseSpec::CenteredPoisson { c0: 1.0, rho0: 1.0 },
                &[0.5, 1.0, 2.0],
                400.0,
                20_000,
            ),
            vec![all_entries(4.0)],
        ),
        "hypothesis-checks" => config(
            name,
            scenario(renewal_exp(), scaled_normal(0.0), &[1.0], 10.0, 100),
            hypothesis_checks(),
        ),
        "perturbed-lln" => config(
            name,
            scenario(
                ArrivalSpec::PerturbedWalk {
                    xi: exp1(),
                    eta: Dist::LogNormal { mu: 0.0, sigma: 1.0 },
                },
                scaled_normal(0.0),
                &[1.0],
                10.0,
                100,
            ),
            vec![CheckConfig::Lln {
                arrival: None,
                scales: vec![1e2, 1e3, 1e4],
                tolerances: vec![0.15, 0.05, 0.02],
                replicates: 1000,
            }],
        ),
        "determinism-smoke" => config(
            name,
            scenario(
                renewal_exp(),
                ResponseSpec::TimeChangedBm { beta: 0.5 },
                &[0.5, 1.0],
                50.0,
                500,
            ),
            vec![
                all_entries(4.0),
                CheckConfig::Normality {
                    directions: vec![Direction::Named(NamedDirection::Ones)],
                    seeds: 3,
                    alpha: 0.01,
                    min_pass_fraction: 0.0,
                },
            ],
        ),
        _ => return None,
    };
    Some(cfg)
}

fn hypothesis_checks() -> Vec<CheckConfig> {
    let brw = ArrivalSpec::brw(unit_step(), 2);
    let weak = |arrival: ArrivalSpec, scales: &[f64], replicates| CheckConfig::WeakLaw {
        arrival: Some(arrival),
        c: None,
        rho: None,
        horizon: 1.0,
        scales: scales.to_vec(),
        replicates,
    };
    let incr = |arrival: ArrivalSpec, scales: &[f64], replicates| CheckConfig::Increments {
        arrival: Some(arrival),
        rho: None,
        scales: scales.to_vec(),
        replicates,
    };
    let lind = |response: ResponseSpec| CheckConfig::Lindeberg {
        response: Some(response),
        rho: Some(1.0),
        y: 1.0,
        scales: vec![4.0, 16.0, 64.0],
        replicates: 200_000,
    };
    let ratio = |response: ResponseSpec, scales: &[f64]| CheckConfig::LimitRatio {
        response: Some(response),
        w: 1.0,
        a: 0.5,
        b: 2.0,
        scales: scales.to_vec(),
    };
    let poisson2 = ArrivalSpec::PoissonNh { c0: 1.0, rho0: 2.0 };
    vec![
        weak(renewal_exp(), &[100.0, 400.0, 1600.0], 500),
        weak(perturbed_pareto(), &[100.0, 400.0, 1600.0, 6400.0], 200),
        weak(poisson2.clone(), &[10.0, 40.0, 160.0], 500),
        weak(brw.clone(), &[20.0, 40.0, 80.0], 20),
        incr(renewal_exp(), &[10.0, 100.0, 1000.0], 2000),
        incr(perturbed_pareto(), &[10.0, 100.0, 1000.0], 2000),
        incr(poisson2, &[5.0, 50.0, 500.0], 2000),
        incr(brw, &[10.5, 20.5, 40.5], 20),
        lind(ResponseSpec::SurvivalIndicator { beta: -0.5 }),
        lind(scaled_normal(0.0)),
        lind(ResponseSpec::OuModulated { beta: -0.5 }),
        ratio(ResponseSpec::SurvivalIndicator { beta: -0.5 }, &[1e2, 1e4, 1e6]),
        ratio(scaled_normal(-0.5), &[10.0, 100.0, 1000.0]),
        ratio(ResponseSpec::TimeChangedBm { beta: 1.0 }, &[10.0, 100.0, 1000.0]),
        ratio(
            ResponseSpec::CenteredPoisson { c0: 1.0, rho0: 1.0 },
            &[10.0, 100.0, 1000.0],
        ),
        ratio(ResponseSpec::OuModulated { beta: -0.5 }, &[2.0, 4.0, 8.0, 16.0]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates_and_round_trips() {
        for (name, _) in PRESETS {
            let cfg = preset(name).unwrap();
            assert_eq!(cfg.name, name);
            cfg.validate().unwrap();
            let json = serde_json::to_string(&cfg).unwrap();
            assert_eq!(ExperimentConfig::from_json(&json).unwrap(), cfg);
        }
        assert!(preset("nope").is_none());
    }

    #[test]
    fn config_rejects_unknown_keys_and_bad_values() {
        let cfg = preset("determinism-smoke").unwrap();
        let mut v = serde_json::to_value(&cfg).unwrap();
        v["surprise"] = serde_json::json!(1);
        let err = ExperimentConfig::from_json(&v.to_string()).unwrap_err();
        assert_eq!(exit_code_for(&err), exit::INVALID_CONFIG);

        let mut v = serde_json::to_value(&cfg).unwrap();
        v["scenario"]["response"] = serde_json::json!({"kind": "scaled_variable", "beta": "-1.5"});
        let err = ExperimentConfig::from_json(&v.to_string()).unwrap_err();
        assert!(err.to_string().contains("beta > -(rho ∧ 1)"), "{err}");
        assert_eq!(exit_code_for(&err), exit::INVALID_CONFIG);

        let mut v = serde_json::to_value(&cfg).unwrap();
        v["checks"] = serde_json::json!([{"check": "covariance", "entries": [[0, 5]]}]);
        assert!(ExperimentConfig::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn decimal_strings_in_checks() {
        let cfg = preset("determinism-smoke").unwrap();
        let mut v = serde_json::to_value(&cfg).unwrap();
        v["checks"] = serde_json::json!([
            {"check": "limit_ratio", "w": "1", "a": "0.5", "b": "2", "scales": ["10", 100]},
            {"check": "normality", "directions": ["e1", "en", [1, "ones"]]}
        ]);
        assert!(ExperimentConfig::from_json(&v.to_string()).is_err());
        v["checks"][1] = serde_json::json!({"check": "normality", "directions": ["e1", "en", [1, -1]]});
        let parsed = ExperimentConfig::from_json(&v.to_string()).unwrap();
        match &parsed.checks[0] {
            CheckConfig::LimitRatio { b, scales, .. } => {
                assert_eq!(*b, 2.0);
                assert_eq!(scales, &vec![10.0, 100.0]);
            }
            other => panic!("{other:?}"),
        }
        match &parsed.checks[1] {
            CheckConfig::Normality { seeds, alpha, .. } => {
                assert_eq!(*seeds, 20);
                assert_eq!(*alpha, 0.01);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn directions_resolve() {
        assert_eq!(Direction::Named(NamedDirection::E1).resolve(3), vec![1.0, 0.0, 0.0]);
        assert_eq!(Direction::Named(NamedDirection::En).resolve(3), vec![0.0, 0.0, 1.0]);
        assert_eq!(Direction::Named(NamedDirection::Ones).resolve(2), vec![1.0, 1.0]);
    }

    #[test]
    fn smoke_run_writes_five_files() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = preset("determinism-smoke").unwrap();
        let reports = run_experiment(&cfg, dir.path()).unwrap();
        assert_eq!(reports.checks.len(), 2);
        assert_eq!(reports.normality.len(), 3);
        let mut names: Vec<String> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        assert_eq!(
            names,
            [
                "comparison.csv",
                "ensemble.csv",
                "limit_cov.csv",
                "manifest.json",
                "reports.json"
            ]
        );
        let comparison = fs::read_to_string(dir.path().join(COMPARISON_FILE)).unwrap();
        assert!(comparison.starts_with("i,j,empirical,limit,se,z_score\n"));
        assert_eq!(comparison.lines().count(), 4);
        let ensemble = fs::read_to_string(dir.path().join(ENSEMBLE_FILE)).unwrap();
        assert_eq!(ensemble.lines().count(), 1 + 500 * 2);
        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap()).unwrap();
        let echoed: ExperimentConfig = serde_json::from_value(manifest["config"].clone()).unwrap();
        assert_eq!(echoed, cfg);
        assert_eq!(reports.exit_code(), if reports.pass { 0 } else { 1 });
    }

    #[test]
    fn empty_check_list_passes() {
        let mut cfg = preset("determinism-smoke").unwrap();
        cfg.checks.clear();
        cfg.scenario.replicates = 50;
        let r = compute_experiment(&cfg).unwrap();
        assert!(r.reports.pass);
        assert_eq!(r.comparison.len(), 3);
    }
}
