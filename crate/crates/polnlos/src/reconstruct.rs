//! Hidden-scene recovery: SVD pseudo-inverse and ADMM for the
//! TV-regularized, box-constrained least-squares problem.
//!
//! The TV regularizer is anisotropic (l1 of forward differences with
//! replicate boundary), which gives exact soft-threshold proximal
//! steps. The regularization weight is called `reg_weight`; `leakage`
//! is a different lambda entirely (see the polarization module).

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::transport::{ObservationVector, SceneVector, TransportMatrix};

/// ADMM solver parameters.
#[derive(Debug, Clone, Copy)]
pub struct AdmmParams {
    /// TV regularization weight (>= 0).
    pub reg_weight: f64,
    /// ADMM penalty rho (> 0).
    pub penalty: f64,
    pub max_iters: usize,
    /// Primal tolerance, scaled internally by sqrt(dim).
    pub tol_primal: f64,
    /// Dual tolerance, scaled internally by sqrt(dim).
    pub tol_dual: f64,
}

impl Default for AdmmParams {
    fn default() -> Self {
        AdmmParams {
            reg_weight: 1e-2,
            penalty: 1.0,
            max_iters: 500,
            tol_primal: 1e-5,
            tol_dual: 1e-5,
        }
    }
}

impl AdmmParams {
    pub fn validate(&self) -> Result<()> {
        if self.reg_weight < 0.0 || !self.reg_weight.is_finite() {
            return Err(Error::invariant("reg_weight must be finite and >= 0"));
        }
        if self.penalty <= 0.0 || !self.penalty.is_finite() {
            return Err(Error::invariant("penalty must be finite and > 0"));
        }
        if self.max_iters == 0 {
            return Err(Error::invariant("max_iters must be >= 1"));
        }
        if self.tol_primal <= 0.0 || self.tol_dual <= 0.0 {
            return Err(Error::invariant("tolerances must be > 0"));
        }
        Ok(())
    }
}

/// Unconstrained minimum-norm least-squares solution. Not box-clamped;
/// `out_of_box` reports whether any entry left [0, 1].
#[derive(Debug, Clone)]
pub struct PinvSolution {
    pub values: DVector<f64>,
    pub out_of_box: bool,
}

/// Reconstruction output; `estimate` is exactly inside the box.
#[derive(Debug, Clone)]
pub struct ReconResult {
    pub estimate: SceneVector,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Data term plus weighted TV at the estimate.
    pub objective: f64,
    pub converged: bool,
    /// Set when a pseudo-inverse solution had to be clamped into the box.
    pub out_of_box: bool,
}

impl ReconResult {
    /// Wrap a pseudo-inverse solution as a reconstruction result by
    /// clamping it into the box. The objective is the plain data term.
    pub fn from_pinv(
        transport: &TransportMatrix,
        obs: &ObservationVector,
        sol: PinvSolution,
    ) -> Result<ReconResult> {
        let clamped = sol.values.map(|v| v.clamp(0.0, 1.0));
        let residual = &obs.values - &transport.data * &clamped;
        Ok(ReconResult {
            estimate: SceneVector::new(clamped)?,
            iterations: 0,
            primal_residual: 0.0,
            dual_residual: 0.0,
            objective: residual.norm_squared(),
            converged: true,
            out_of_box: sol.out_of_box,
        })
    }
}

fn check_dims(transport: &TransportMatrix, obs: &ObservationVector) -> Result<()> {
    if obs.values.len() != transport.rows() {
        return Err(Error::DimensionMismatch(format!(
            "observation has {} entries, transport has {} rows",
            obs.values.len(),
            transport.rows()
        )));
    }
    Ok(())
}

/// Minimum-norm least-squares solve via SVD with singular values below
/// sigma_max * 1e-12 treated as zero.
pub fn pinv_solve(transport: &TransportMatrix, obs: &ObservationVector) -> Result<PinvSolution> {
    check_dims(transport, obs)?;
    let svd = transport.data.clone().svd(true, true);
    let s_max = svd
        .singular_values
        .iter()
        .cloned()
        .fold(0.0f64, f64::max);
    let eps = (s_max * 1e-12).max(f64::MIN_POSITIVE);
    let values = svd
        .solve(&obs.values, eps)
        .map_err(|e| Error::invariant(format!("svd solve failed: {e}")))?;
    let out_of_box = values.iter().any(|v| *v < 0.0 || *v > 1.0);
    Ok(PinvSolution { values, out_of_box })
}

/// Anisotropic 2D total variation with replicate boundary: sum of
/// absolute forward differences inside the grid.
pub fn tv_2d(values: &DVector<f64>, width: usize, height: usize) -> Result<f64> {
    if width * height != values.len() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} grid does not match vector of length {}",
            width,
            height,
            values.len()
        )));
    }
    let idx = |x: usize, y: usize| y * width + x;
    let mut total = 0.0;
    for y in 0..height {
        for x in 0..width {
            if x + 1 < width {
                total += (values[idx(x + 1, y)] - values[idx(x, y)]).abs();
            }
            if y + 1 < height {
                total += (values[idx(x, y + 1)] - values[idx(x, y)]).abs();
            }
        }
    }
    Ok(total)
}

/// Forward-difference operator application, 2n output entries:
/// first n horizontal, then n vertical; border rows are zero.
fn apply_diff(values: &DVector<f64>, width: usize, height: usize) -> DVector<f64> {
    let n = width * height;
    let idx = |x: usize, y: usize| y * width + x;
    let mut out = DVector::zeros(2 * n);
    for y in 0..height {
        for x in 0..width {
            let i = idx(x, y);
            if x + 1 < width {
                out[i] = values[idx(x + 1, y)] - values[i];
            }
            if y + 1 < height {
                out[n + i] = values[idx(x, y + 1)] - values[i];
            }
        }
    }
    out
}

/// Transpose of [`apply_diff`].
fn apply_diff_t(z: &DVector<f64>, width: usize, height: usize) -> DVector<f64> {
    let n = width * height;
    let idx = |x: usize, y: usize| y * width + x;
    let mut out = DVector::zeros(n);
    for y in 0..height {
        for x in 0..width {
            let i = idx(x, y);
            if x + 1 < width {
                out[i] -= z[i];
                out[idx(x + 1, y)] += z[i];
            }
            if y + 1 < height {
                out[i] -= z[n + i];
                out[idx(x, y + 1)] += z[n + i];
            }
        }
    }
    out
}

/// Dense D^T D (grid Laplacian of the two difference directions).
fn diff_gram(width: usize, height: usize) -> DMatrix<f64> {
    let n = width * height;
    let idx = |x: usize, y: usize| y * width + x;
    let mut g = DMatrix::zeros(n, n);
    let mut edge = |i: usize, j: usize| {
        g[(i, i)] += 1.0;
        g[(j, j)] += 1.0;
        g[(i, j)] -= 1.0;
        g[(j, i)] -= 1.0;
    };
    for y in 0..height {
        for x in 0..width {
            if x + 1 < width {
                edge(idx(x, y), idx(x + 1, y));
            }
            if y + 1 < height {
                edge(idx(x, y), idx(x, y + 1));
            }
        }
    }
    g
}

fn soft_threshold(v: f64, k: f64) -> f64 {
    if v > k {
        v - k
    } else if v < -k {
        v + k
    } else {
        0.0
    }
}

/// Two-block ADMM for
/// min ||i - T l||^2 + reg_weight * TV2D(l)  s.t.  0 <= l <= 1,
/// splitting z1 = D l (soft-thresholded) and z2 = l (box-projected).
/// The returned estimate is z2, exactly feasible.
pub fn admm_tv_box(
    transport: &TransportMatrix,
    obs: &ObservationVector,
    params: &AdmmParams,
) -> Result<ReconResult> {
    check_dims(transport, obs)?;
    params.validate()?;
    if obs.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invariant("observations must be finite"));
    }
    let n = transport.cols();
    let (width, height) = transport.scene_shape();
    if width * height != n {
        return Err(Error::DimensionMismatch(format!(
            "column meta implies a {width}x{height} grid but the matrix has {n} columns"
        )));
    }
    let rho = params.penalty;
    let kappa = params.reg_weight / rho;

    // Normal-equations matrix, factorized once and reused.
    let mut normal = transport.data.transpose() * &transport.data;
    normal += diff_gram(width, height) * rho;
    for i in 0..n {
        normal[(i, i)] += rho;
    }
    let chol = Cholesky::new(normal).ok_or_else(|| {
        Error::invariant("ADMM normal equations are not positive definite")
    })?;
    let tt_i = transport.data.transpose() * &obs.values;

    // Warm start from the clamped pseudo-inverse.
    let mut l = pinv_solve(transport, obs)?
        .values
        .map(|v| v.clamp(0.0, 1.0));
    let mut z1 = apply_diff(&l, width, height);
    let mut z2 = l.clone();
    let mut u1 = DVector::zeros(2 * n);
    let mut u2 = DVector::zeros(n);

    let primal_scale = ((3 * n) as f64).sqrt();
    let dual_scale = (n as f64).sqrt();
    let mut iterations = 0;
    let mut primal_residual = f64::INFINITY;
    let mut dual_residual = f64::INFINITY;
    let mut converged = false;

    for iter in 1..=params.max_iters {
        iterations = iter;
        // l-update.
        let rhs = &tt_i + (apply_diff_t(&(&z1 - &u1), width, height) + (&z2 - &u2)) * rho;
        l = chol.solve(&rhs);
        let dl = apply_diff(&l, width, height);

        // z-updates.
        let z1_old = std::mem::replace(
            &mut z1,
            (&dl + &u1).map(|v| soft_threshold(v, kappa)),
        );
        let z2_old = std::mem::replace(&mut z2, (&l + &u2).map(|v| v.clamp(0.0, 1.0)));

        // Dual updates.
        u1 += &dl - &z1;
        u2 += &l - &z2;

        // Residuals.
        let r1 = &dl - &z1;
        let r2 = &l - &z2;
        primal_residual = (r1.norm_squared() + r2.norm_squared()).sqrt();
        dual_residual =
            (apply_diff_t(&(&z1 - &z1_old), width, height) + (&z2 - &z2_old)).norm() * rho;
        if primal_residual <= params.tol_primal * primal_scale
            && dual_residual <= params.tol_dual * dual_scale
        {
            converged = true;
            break;
        }
    }

    let residual = &obs.values - &transport.data * &z2;
    let objective = residual.norm_squared() + params.reg_weight * tv_2d(&z2, width, height)?;
    Ok(ReconResult {
        estimate: SceneVector::new(z2)?,
        iterations,
        primal_residual,
        dual_residual,
        objective,
        converged,
        out_of_box: false,
    })
}
