//! Covariance of the limit Gaussian process and sampling on a grid.
//!
//! For a limit function `C` of index `β` and an arrival exponent `ρ`,
//!
//! ```text
//! Π(s, t) = ρ ∫_0^{s∧t} C(s - y, t - y) y^{ρ-1} dy
//! ```
//!
//! in the regular case, and `Π(s, t) = 1{s = t} ρ B(β+1, ρ) s^{β+ρ}` when
//! `C` vanishes off the diagonal (fictitious case).

mod quadrature;

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::output::fmt_real;
use crate::rng::Stream;

pub use quadrature::{tanh_sinh, QuadResult};

/// Default absolute quadrature tolerance.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Smallest admissible eigenvalue, relative to the largest diagonal entry.
pub const PSD_SLACK: f64 = 1e-8;
const JITTER_LADDER: [f64; 4] = [0.0, 1e-12, 1e-11, 1e-10];

/// A limit function `C(u, w)` of index `β`.
pub trait LimitFunction {
    fn limit(&self, u: f64, w: f64) -> f64;
    fn index(&self) -> f64;
    /// True when `C(u, w) = 0` for all `u != w`.
    fn is_fictitious(&self) -> bool;
}

/// The power-type limit functions, parameterised by their index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", content = "beta", rename_all = "snake_case")]
pub enum PowerKernel {
    /// `(u ∧ w)^β`
    Min(f64),
    /// `(u ∨ w)^β`
    Max(f64),
    /// `(u w)^{β/2}`
    Product(f64),
    /// `u^β` on the diagonal, zero elsewhere.
    Diagonal(f64),
}

impl LimitFunction for PowerKernel {
    fn limit(&self, u: f64, w: f64) -> f64 {
        match *self {
            PowerKernel::Min(b) => u.min(w).powf(b),
            PowerKernel::Max(b) => u.max(w).powf(b),
            PowerKernel::Product(b) => u.powf(0.5 * b) * w.powf(0.5 * b),
            PowerKernel::Diagonal(b) => {
                if u == w {
                    u.powf(b)
                } else {
                    0.0
                }
            }
        }
    }

    fn index(&self) -> f64 {
        match *self {
            PowerKernel::Min(b) | PowerKernel::Max(b) | PowerKernel::Product(b) | PowerKernel::Diagonal(b) => b,
        }
    }

    fn is_fictitious(&self) -> bool {
        matches!(self, PowerKernel::Diagonal(_))
    }
}

/// Euler beta function `Γ(x)Γ(y)/Γ(x+y)`.
pub fn beta_fn(x: f64, y: f64) -> Result<f64> {
    if !(x > 0.0 && y > 0.0) || !x.is_finite() || !y.is_finite() {
        return Err(Error::Domain(format!(
            "beta function needs positive arguments (got {x}, {y})"
        )));
    }
    use statrs::function::gamma::ln_gamma;
    Ok((ln_gamma(x) + ln_gamma(y) - ln_gamma(x + y)).exp())
}

/// `E V²(u) = ρ B(β+1, ρ) u^{β+ρ}`.
pub fn diagonal_variance(beta: f64, rho: f64, u: f64) -> Result<f64> {
    Ok(rho * beta_fn(beta + 1.0, rho)? * u.powf(beta + rho))
}

/// `Π(s, t)` with an absolute error estimate.
pub fn limit_cov_pi<L: LimitFunction + ?Sized>(model: &L, rho: f64, s: f64, t: f64, tol: f64) -> Result<(f64, f64)> {
    if !(s > 0.0 && t > 0.0) || !s.is_finite() || !t.is_finite() {
        return Err(Error::Domain(format!("Π needs positive times (got {s}, {t})")));
    }
    if !(rho > 0.0) || !(tol > 0.0) {
        return Err(Error::Domain(format!("Π needs rho > 0 and tol > 0 (got {rho}, {tol})")));
    }
    let beta = model.index();
    if !(beta > -1.0) {
        return Err(Error::Domain(format!("limit index must exceed -1 (got {beta})")));
    }
    if model.is_fictitious() {
        return if s == t {
            Ok((diagonal_variance(beta, rho, s)?, 0.0))
        } else {
            Ok((0.0, 0.0))
        };
    }

    // y = m z, with s - y = (s - m) + m (1 - z) kept exact near z = 1.
    let m = s.min(t);
    let (ds, dt) = (s - m, t - m);
    let scale = rho * m.powf(rho);
    let r = tanh_sinh(
        |z, cz| model.limit(ds + m * cz, dt + m * cz) * z.powf(rho - 1.0),
        tol / scale,
    );
    let value = scale * r.value;
    let error = scale * r.error;
    if !r.converged || !value.is_finite() {
        return Err(Error::Numeric {
            message: format!("Π({s}, {t}) did not reach tolerance {tol} (error estimate {error:.3e})"),
            estimate: Some(value),
        });
    }
    Ok((value, error))
}

/// The matrix `Π(u_i, u_j)` on a grid, checked for symmetry and positive
/// semidefiniteness at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitCovariance {
    grid: Vec<f64>,
    matrix: DMatrix<f64>,
    quad_error: DMatrix<f64>,
    fictitious: bool,
}

impl LimitCovariance {
    /// Wrap an explicit covariance matrix (e.g. for sampling tests).
    pub fn from_matrix(grid: Vec<f64>, matrix: DMatrix<f64>, fictitious: bool) -> Result<Self> {
        let n = grid.len();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::Domain(format!(
                "matrix is {}x{}, grid has {n} points",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let cov = LimitCovariance {
            grid,
            quad_error: DMatrix::zeros(n, n),
            matrix,
            fictitious,
        };
        cov.check_structure()?;
        Ok(cov)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn quad_error(&self) -> &DMatrix<f64> {
        &self.quad_error
    }

    pub fn is_fictitious(&self) -> bool {
        self.fictitious
    }

    pub fn dim(&self) -> usize {
        self.grid.len()
    }

    /// `αᵀ Π α`.
    pub fn quadratic_form(&self, alpha: &[f64]) -> f64 {
        let a = DVector::from_column_slice(alpha);
        (a.transpose() * &self.matrix * &a)[(0, 0)]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        self.matrix.clone().symmetric_eigen().eigenvalues.min()
    }

    fn max_diagonal(&self) -> f64 {
        self.matrix.diagonal().iter().fold(0.0f64, |m, &x| m.max(x.abs()))
    }

    fn check_structure(&self) -> Result<()> {
        let n = self.dim();
        for i in 0..n {
            for j in 0..i {
                if self.matrix[(i, j)] != self.matrix[(j, i)] {
                    return Err(Error::InternalConsistency(format!("Π not symmetric at ({i}, {j})")));
                }
                if self.fictitious && self.matrix[(i, j)] != 0.0 {
                    return Err(Error::InternalConsistency(format!(
                        "fictitious Π has off-diagonal entry at ({i}, {j})"
                    )));
                }
            }
        }
        let min = self.min_eigenvalue();
        if min < -PSD_SLACK * self.max_diagonal() {
            return Err(Error::InternalConsistency(format!(
                "Π not positive semidefinite: smallest eigenvalue {min:.3e}"
            )));
        }
        Ok(())
    }

    /// CSV with grid values as row and column headers.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let header: Vec<String> = self.grid.iter().map(|u| fmt_real(*u)).collect();
        writeln!(out, "u,{}", header.join(","))?;
        for (i, u) in self.grid.iter().enumerate() {
            let row: Vec<String> = (0..self.dim()).map(|j| fmt_real(self.matrix[(i, j)])).collect();
            writeln!(out, "{},{}", fmt_real(*u), row.join(","))?;
        }
        Ok(())
    }
}

pub(crate) fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config("grid must not be empty".into()));
    }
    if grid.iter().any(|u| !(*u > 0.0) || !u.is_finite()) {
        return Err(Error::Config(format!(
            "grid points must be positive and finite: {grid:?}"
        )));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(format!("grid must be strictly increasing: {grid:?}")));
    }
    Ok(())
}

/// Assemble `Π` on `grid` and verify its structure.
pub fn limit_cov_matrix<L: LimitFunction + ?Sized>(
    model: &L,
    rho: f64,
    grid: &[f64],
    tol: f64,
) -> Result<LimitCovariance> {
    validate_grid(grid)?;
    let n = grid.len();
    let mut matrix = DMatrix::zeros(n, n);
    let mut quad_error = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let (value, err) = limit_cov_pi(model, rho, grid[i], grid[j], tol)?;
            matrix[(i, j)] = value;
            matrix[(j, i)] = value;
            quad_error[(i, j)] = err;
            quad_error[(j, i)] = err;
        }
    }
    let beta = model.index();
    for (i, &u) in grid.iter().enumerate() {
        let closed = diagonal_variance(beta, rho, u)?;
        if (matrix[(i, i)] - closed).abs() > 10.0 * tol.max(closed.abs() * 1e-13) {
            return Err(Error::InternalConsistency(format!(
                "Π({u}, {u}) = {} differs from ρB(β+1,ρ)u^(β+ρ) = {closed}",
                matrix[(i, i)]
            )));
        }
    }
    let cov = LimitCovariance {
        grid: grid.to_vec(),
        matrix,
        quad_error,
        fictitious: model.is_fictitious(),
    };
    cov.check_structure()?;
    Ok(cov)
}

/// `count` independent draws of the centered Gaussian vector with covariance
/// `cov.matrix()`, one per row.
pub fn sample_limit_gaussian(cov: &LimitCovariance, stream: &mut Stream, count: usize) -> Result<DMatrix<f64>> {
    let n = cov.dim();
    let scale = cov.max_diagonal();
    let mut factor = None;
    for jitter in JITTER_LADDER {
        let jittered = &cov.matrix + DMatrix::identity(n, n) * (jitter * scale);
        if let Some(ch) = jittered.cholesky() {
            factor = Some(ch.l());
            break;
        }
    }
    let l = factor.ok_or_else(|| Error::Numeric {
        message: "Cholesky factorization failed after jitter".into(),
        estimate: None,
    })?;
    let mut out = DMatrix::zeros(count, n);
    let mut z = DVector::zeros(n);
    for r in 0..count {
        for k in 0..n {
            z[k] = stream.standard_normal();
        }
        let x = &l * &z;
        out.row_mut(r).copy_from(&x.transpose());
    }
    Ok(out)
}
