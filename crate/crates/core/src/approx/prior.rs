//! Simulated prior of the expansion weights and its posterior mean.

use nalgebra::{DMatrix, DVector};

use crate::basis::{BasisSpec, Domain};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::kernel::{correlation_matrix_with, jittered_cholesky, KernelConfig, TrainingSet};
use crate::Point;

/// Largest Gram-matrix condition number accepted by [`simulate_prior`].
pub const MAX_GRAM_CONDITION: f64 = 1e12;

/// Default minimum ratio between the space-filling set size and the basis size.
pub const MIN_POINTS_FACTOR: usize = 10;

/// Deterministic space-filling design.
///
/// One dimension gives an equispaced grid including both endpoints. Higher
/// dimensions use a full factorial grid with the smallest number of levels
/// `L` such that `L^d >= k`, thinned to `k` points by taking evenly spaced
/// indices of the grid in lexicographic order.
pub fn space_filling(domain: &Domain, k: usize) -> Result<Vec<Point>> {
    if k < 2 {
        return Err(Error::invalid(format!("space-filling set needs k >= 2, got {k}")));
    }
    let d = domain.dim();
    if d == 1 {
        return Ok((0..k)
            .map(|j| vec![domain.lo(0) + domain.width(0) * j as f64 / (k - 1) as f64])
            .collect());
    }
    let levels = {
        let mut l = 2usize;
        while l.checked_pow(d as u32).is_none_or(|v| v < k) {
            l += 1;
        }
        l
    };
    let axis = |i: usize, j: usize| {
        domain.lo(i) + domain.width(i) * j as f64 / (levels - 1) as f64
    };
    let total = levels.pow(d as u32);
    let pick = |t: usize| -> usize {
        if k == total {
            t
        } else {
            ((t as f64) * (total - 1) as f64 / (k - 1) as f64).round() as usize
        }
    };
    let pts = (0..k)
        .map(|t| {
            let mut idx = pick(t);
            let mut p = vec![0.0; d];
            for i in (0..d).rev() {
                p[i] = axis(i, idx % levels);
                idx /= levels;
            }
            p
        })
        .collect();
    Ok(pts)
}

/// The space-filling set, its basis matrix and the unit-`tau2` prior covariance
/// `Sigma = (Phi^T Phi)^-1 Phi^T Psi Phi (Phi^T Phi)^-1` of the weights.
#[derive(Debug, Clone)]
pub struct PriorSimulation {
    pub points: Vec<Point>,
    pub phi: DMatrix<f64>,
    pub sigma: DMatrix<f64>,
    pub gram_condition: f64,
}

pub fn simulate_prior(spec: &BasisSpec, cfg: &KernelConfig, k: usize) -> Result<PriorSimulation> {
    simulate_prior_with(spec, cfg, k, MIN_POINTS_FACTOR, Execution::default())
}

/// [`simulate_prior`] with an explicit minimum points-per-term ratio.
pub fn simulate_prior_with(
    spec: &BasisSpec,
    cfg: &KernelConfig,
    k: usize,
    min_points_factor: usize,
    exec: Execution,
) -> Result<PriorSimulation> {
    let p = spec.len();
    if cfg.dim() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), got: cfg.dim() });
    }
    let needed = (min_points_factor * p).max(p);
    if k < needed {
        return Err(Error::invalid(format!(
            "space-filling set of {k} points is too small for {p} basis terms (need {needed})"
        )));
    }
    let points = space_filling(spec.domain(), k)?;
    let phi = spec.design_matrix_with(&points, exec)?;
    let gram = phi.transpose() * &phi;
    let eig = gram.clone().symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    let gram_condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if gram_condition > MAX_GRAM_CONDITION {
        return Err(Error::IllConditioned {
            what: "basis Gram matrix",
            detail: format!(
                "condition number {gram_condition:.3e} > {MAX_GRAM_CONDITION:.0e}; \
                 use a smaller basis or a larger space-filling set"
            ),
        });
    }
    let chol = gram.cholesky().ok_or_else(|| Error::IllConditioned {
        what: "basis Gram matrix",
        detail: "not positive definite".into(),
    })?;
    let psi = correlation_matrix_with(cfg, &points, exec)?;
    let middle = phi.transpose() * psi * &phi;
    let left = chol.solve(&middle);
    let mut sigma = chol.solve(&left.transpose());
    symmetrize(&mut sigma);
    Ok(PriorSimulation { points, phi, sigma, gram_condition })
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// `tau2 Sigma Phi_D^T (tau2 Phi_D Sigma Phi_D^T + sigma2 I)^-1 y`.
pub fn posterior_mean(
    prior: &PriorSimulation,
    spec: &BasisSpec,
    cfg: &KernelConfig,
    train: &TrainingSet,
) -> Result<DVector<f64>> {
    let phi_d = spec.design_matrix(&train.inputs)?;
    posterior_mean_from_design(&prior.sigma, &phi_d, cfg, &train.outputs_vector())
}

pub(crate) fn posterior_mean_from_design(
    sigma: &DMatrix<f64>,
    phi_d: &DMatrix<f64>,
    cfg: &KernelConfig,
    y: &DVector<f64>,
) -> Result<DVector<f64>> {
    let n = phi_d.nrows();
    let cross = sigma * phi_d.transpose() * cfg.tau2; // p x n
    let mut a = phi_d * &cross;
    symmetrize(&mut a);
    for i in 0..n {
        a[(i, i)] += cfg.sigma2;
    }
    let chol = jittered_cholesky(a.clone(), cfg.jitter(), "posterior covariance").map_err(|_| {
        let ev = a.symmetric_eigenvalues();
        let top = ev.max();
        let rank = ev.iter().filter(|&&v| v > 1e-12 * top).count();
        Error::IllConditioned {
            what: "posterior covariance",
            detail: format!("factorization failed; effective rank {rank} of {n}"),
        }
    })?;
    Ok(cross * chol.solve(y))
}
