//! Squared-exponential correlation and the exact GP posterior mean.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::basis::Domain;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::Point;

/// Diagonal jitter added to every covariance solve, relative to `tau2`.
pub const JITTER: f64 = 1e-10;

/// Process variance, noise variance and per-dimension correlation scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawKernel")]
pub struct KernelConfig {
    pub tau2: f64,
    pub sigma2: f64,
    pub corr_params: Vec<f64>,
}

#[derive(Deserialize)]
struct RawKernel {
    tau2: f64,
    sigma2: f64,
    corr_params: Vec<f64>,
}

impl TryFrom<RawKernel> for KernelConfig {
    type Error = Error;
    fn try_from(r: RawKernel) -> Result<Self> {
        KernelConfig::new(r.tau2, r.sigma2, r.corr_params)
    }
}

impl KernelConfig {
    pub fn new(tau2: f64, sigma2: f64, corr_params: Vec<f64>) -> Result<Self> {
        if !(tau2 > 0.0 && tau2.is_finite()) {
            return Err(Error::invalid(format!("tau2 must be positive, got {tau2}")));
        }
        if !(sigma2 >= 0.0 && sigma2.is_finite()) {
            return Err(Error::invalid(format!("sigma2 must be nonnegative, got {sigma2}")));
        }
        if corr_params.is_empty() || corr_params.iter().any(|k| !(*k > 0.0 && k.is_finite())) {
            return Err(Error::invalid("correlation parameters must be positive"));
        }
        Ok(KernelConfig { tau2, sigma2, corr_params })
    }

    /// `k_i = 5 / width_i^2`.
    pub fn default_corr_params(domain: &Domain) -> Vec<f64> {
        (0..domain.dim()).map(|i| 5.0 / domain.width(i).powi(2)).collect()
    }

    pub fn with_defaults(domain: &Domain, tau2: f64, sigma2: f64) -> Result<Self> {
        Self::new(tau2, sigma2, Self::default_corr_params(domain))
    }

    pub fn dim(&self) -> usize {
        self.corr_params.len()
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }

    #[inline]
    fn corr_unchecked(&self, x: &[f64], x2: &[f64]) -> f64 {
        let s: f64 = self
            .corr_params
            .iter()
            .zip(x.iter().zip(x2))
            .map(|(k, (a, b))| k * (a - b) * (a - b))
            .sum();
        (-s).exp()
    }

    pub(crate) fn jitter(&self) -> f64 {
        JITTER * self.tau2
    }
}

/// `psi(x, x2) = exp(-sum_i k_i (x_i - x2_i)^2)`.
pub fn correlation(cfg: &KernelConfig, x: &[f64], x2: &[f64]) -> Result<f64> {
    cfg.check(x)?;
    cfg.check(x2)?;
    Ok(cfg.corr_unchecked(x, x2))
}

pub fn correlation_matrix(cfg: &KernelConfig, points: &[Point]) -> Result<DMatrix<f64>> {
    correlation_matrix_with(cfg, points, Execution::default())
}

pub fn correlation_matrix_with(
    cfg: &KernelConfig,
    points: &[Point],
    exec: Execution,
) -> Result<DMatrix<f64>> {
    for p in points {
        cfg.check(p)?;
    }
    let n = points.len();
    let rows = exec.map(n, |i| {
        (0..n).map(|j| cfg.corr_unchecked(&points[i], &points[j])).collect::<Vec<_>>()
    });
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Cross-correlation `psi(a_i, b_j)`.
pub fn cross_correlation(cfg: &KernelConfig, a: &[Point], b: &[Point]) -> Result<DMatrix<f64>> {
    for p in a.iter().chain(b) {
        cfg.check(p)?;
    }
    Ok(DMatrix::from_fn(a.len(), b.len(), |i, j| cfg.corr_unchecked(&a[i], &b[j])))
}

/// Observed inputs and outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSet {
    pub inputs: Vec<Point>,
    pub outputs: Vec<f64>,
}

impl TrainingSet {
    pub fn new(inputs: Vec<Point>, outputs: Vec<f64>) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::invalid("training set is empty"));
        }
        if inputs.len() != outputs.len() {
            return Err(Error::invalid(format!(
                "{} inputs but {} outputs",
                inputs.len(),
                outputs.len()
            )));
        }
        let d = inputs[0].len();
        if let Some(bad) = inputs.iter().find(|p| p.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: bad.len() });
        }
        Ok(TrainingSet { inputs, outputs })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn outputs_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.outputs)
    }
}

/// Cholesky of a symmetric matrix after adding `jitter` to the diagonal.
pub(crate) fn jittered_cholesky(
    mut a: DMatrix<f64>,
    jitter: f64,
    what: &'static str,
) -> Result<Cholesky<f64, Dyn>> {
    for i in 0..a.nrows() {
        a[(i, i)] += jitter;
    }
    let n = a.nrows();
    Cholesky::new(a).ok_or_else(|| Error::IllConditioned {
        what,
        detail: format!("{n}x{n} system is not positive definite after jitter {jitter:.3e}"),
    })
}

/// GP regressor with the `(tau2 Psi + sigma2 I)` factorization cached.
#[derive(Debug, Clone)]
pub struct GpRegressor {
    cfg: KernelConfig,
    inputs: Vec<Point>,
    weights: DVector<f64>,
}

impl GpRegressor {
    pub fn fit(cfg: &KernelConfig, train: &TrainingSet) -> Result<Self> {
        let psi = correlation_matrix(cfg, &train.inputs)?;
        let mut k = psi * cfg.tau2;
        for i in 0..k.nrows() {
            k[(i, i)] += cfg.sigma2;
        }
        let chol = jittered_cholesky(k, cfg.jitter(), "GP covariance")?;
        let weights = chol.solve(&train.outputs_vector());
        Ok(GpRegressor { cfg: cfg.clone(), inputs: train.inputs.clone(), weights })
    }

    /// Posterior mean `tau2 psi(x, X)^T (tau2 Psi + sigma2 I)^-1 y`.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        self.cfg.check(x)?;
        Ok(self
            .inputs
            .iter()
            .zip(self.weights.iter())
            .map(|(xi, w)| self.cfg.tau2 * self.cfg.corr_unchecked(x, xi) * w)
            .sum())
    }
}

/// One-shot convenience around [`GpRegressor`].
pub fn gp_predict(cfg: &KernelConfig, train: &TrainingSet, x_star: &[f64]) -> Result<f64> {
    GpRegressor::fit(cfg, train)?.predict(x_star)
}
