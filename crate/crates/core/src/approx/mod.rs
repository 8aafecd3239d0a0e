//! Fitting the sparse Legendre surrogate.
//!
//! [`fit_surrogate`] runs the whole pipeline: simulate the weight prior on a
//! space-filling set, take the posterior mean of the weights given the
//! training data, solve the garrote for every budget on the grid, and keep
//! the budget with the smallest held-out RMSPE.

mod garrote;
mod prior;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use garrote::{garrote_objective, garrote_solve, kkt_residual, MAX_ITERATIONS, ZERO_WEIGHT};
pub use prior::{
    posterior_mean, simulate_prior, simulate_prior_with, space_filling, PriorSimulation,
    MAX_GRAM_CONDITION, MIN_POINTS_FACTOR,
};

use crate::basis::{BasisSpec, MultiIndex};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::kernel::{KernelConfig, TrainingSet};
use crate::polynomial::Polynomial;
use crate::Point;

/// Coefficients below this count as pruned.
pub const SELECTED: f64 = 1e-10;

/// Where a fitted model came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub kernel: KernelConfig,
    pub budget: f64,
    pub rmspe: f64,
    pub prior_points: usize,
}

/// Deployed model `y = sum_k c_k omega_k phi_k(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateModel {
    pub spec: BasisSpec,
    pub omega_tilde: Vec<f64>,
    pub c_hat: Vec<f64>,
    pub coefficients: Vec<f64>,
    pub provenance: Option<Provenance>,
}

impl SurrogateModel {
    /// A model given directly by its Legendre coefficients.
    pub fn from_coefficients(spec: BasisSpec, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != spec.len() {
            return Err(Error::DimensionMismatch { expected: spec.len(), got: coefficients.len() });
        }
        let c_hat = coefficients.iter().map(|&c| if c != 0.0 { 1.0 } else { 0.0 }).collect();
        Ok(SurrogateModel {
            spec,
            omega_tilde: coefficients.clone(),
            c_hat,
            coefficients,
            provenance: None,
        })
    }

    /// Univariate model on `[-1, 1]` from `(degree, coefficient)` pairs.
    pub fn univariate(terms: &[(u32, f64)]) -> Result<Self> {
        let max = terms.iter().map(|t| t.0).max().unwrap_or(0) as usize;
        let spec = BasisSpec::total_degree(crate::basis::Domain::symmetric_unit(1), max, 1)?;
        let mut coefs = vec![0.0; spec.len()];
        for &(n, c) in terms {
            coefs[n as usize] += c;
        }
        Self::from_coefficients(spec, coefs)
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let phi = self.spec.basis_vector(x)?;
        Ok(phi.iter().zip(&self.coefficients).map(|(a, b)| a * b).sum())
    }

    pub fn predict_many(&self, points: &[Point]) -> Result<Vec<f64>> {
        let phi = self.spec.design_matrix(points)?;
        Ok((phi * DVector::from_column_slice(&self.coefficients)).iter().copied().collect())
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let jac = self.spec.basis_jacobian(x)?;
        Ok((0..self.dim())
            .map(|i| jac.column(i).iter().zip(&self.coefficients).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Terms that survived pruning, with their deployed coefficients.
    pub fn selected_terms(&self) -> Vec<(MultiIndex, f64)> {
        self.spec
            .terms()
            .iter()
            .zip(&self.coefficients)
            .zip(&self.c_hat)
            .filter(|(_, &c)| c > SELECTED)
            .map(|((t, &coef), _)| (t.clone(), coef))
            .collect()
    }

    /// Highest total degree among selected terms.
    pub fn order(&self) -> usize {
        self.selected_terms().iter().map(|(t, _)| t.total_degree()).max().unwrap_or(0)
    }

    /// The model expanded into monomials of the raw input.
    pub fn polynomial(&self) -> Polynomial {
        Polynomial::from_legendre(&self.spec, &self.coefficients)
    }

    /// Root mean squared prediction error on `test`.
    pub fn rmspe(&self, test: &TrainingSet) -> Result<f64> {
        let pred = self.predict_many(&test.inputs)?;
        Ok(rmse(&pred, &test.outputs))
    }
}

pub fn rmse(pred: &[f64], truth: &[f64]) -> f64 {
    let ss: f64 = pred.iter().zip(truth).map(|(a, b)| (a - b).powi(2)).sum();
    (ss / truth.len() as f64).sqrt()
}

/// Garrote solutions along the budget grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarrotePath {
    pub m_grid: Vec<f64>,
    pub solutions: Vec<Vec<f64>>,
    pub train_sse: Vec<f64>,
    pub test_rmspe: Vec<f64>,
    pub best_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Budgets to try; defaults to 41 values from 0 to the basis size.
    pub m_grid: Option<Vec<f64>>,
    /// Size of the space-filling set; defaults to `max(10 * terms, 200)`.
    pub prior_points: Option<usize>,
    pub min_points_factor: usize,
    pub execution: Execution,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            m_grid: None,
            prior_points: None,
            min_points_factor: MIN_POINTS_FACTOR,
            execution: Execution::default(),
        }
    }
}

pub fn default_m_grid(terms: usize) -> Vec<f64> {
    (0..41).map(|i| terms as f64 * i as f64 / 40.0).collect()
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.first() != Some(&0.0) {
        return Err(Error::invalid("budget grid must start at 0"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("budget grid must be finite and strictly increasing"));
    }
    Ok(())
}

/// Best-RMSPE index, preferring the smaller budget on ties.
fn best_index(rmspe: &[f64]) -> usize {
    let mut best = 0;
    for (i, &r) in rmspe.iter().enumerate().skip(1) {
        if r < rmspe[best] * (1.0 - 1e-12) {
            best = i;
        }
    }
    best
}

pub fn fit_surrogate(
    spec: &BasisSpec,
    cfg: &KernelConfig,
    train: &TrainingSet,
    test: &TrainingSet,
    opts: &FitOptions,
) -> Result<(SurrogateModel, GarrotePath)> {
    if test.is_empty() {
        return Err(Error::invalid("test set is empty"));
    }
    let p = spec.len();
    let m_grid = opts.m_grid.clone().unwrap_or_else(|| default_m_grid(p));
    check_grid(&m_grid)?;
    let exec = opts.execution;
    let k = opts.prior_points.unwrap_or((10 * p).max(200));
    let prior = simulate_prior_with(spec, cfg, k, opts.min_points_factor, exec)?;

    let phi_d = spec.design_matrix_with(&train.inputs, exec)?;
    let y = train.outputs_vector();
    let omega = prior::posterior_mean_from_design(&prior.sigma, &phi_d, cfg, &y)?;
    let phi_t = spec.design_matrix_with(&test.inputs, exec)?;
    let y_test = test.outputs_vector();

    let solved: Vec<Result<(DVector<f64>, f64, f64)>> = exec.map(m_grid.len(), |i| {
        let c = garrote_solve(&phi_d, &y, &omega, m_grid[i])?;
        let sse = garrote_objective(&phi_d, &y, &omega, &c);
        let rmspe = test_rmspe(&phi_t, &y_test, &omega, &c);
        Ok((c, sse, rmspe))
    });
    let mut solutions = Vec::with_capacity(m_grid.len());
    let mut train_sse = Vec::with_capacity(m_grid.len());
    let mut test_rmspe_v = Vec::with_capacity(m_grid.len());
    for r in solved {
        let (c, sse, rmspe) = r?;
        solutions.push(c.iter().copied().collect::<Vec<_>>());
        train_sse.push(sse);
        test_rmspe_v.push(rmspe);
    }
    let best = best_index(&test_rmspe_v);
    let c_hat = solutions[best].clone();
    let omega_tilde: Vec<f64> = omega.iter().copied().collect();
    let coefficients = c_hat.iter().zip(&omega_tilde).map(|(c, w)| c * w).collect();
    let model = SurrogateModel {
        spec: spec.clone(),
        omega_tilde,
        c_hat,
        coefficients,
        provenance: Some(Provenance {
            kernel: cfg.clone(),
            budget: m_grid[best],
            rmspe: test_rmspe_v[best],
            prior_points: k,
        }),
    };
    let path = GarrotePath {
        m_grid,
        solutions,
        train_sse,
        test_rmspe: test_rmspe_v,
        best_index: best,
    };
    Ok((model, path))
}

fn test_rmspe(phi_t: &DMatrix<f64>, y: &DVector<f64>, omega: &DVector<f64>, c: &DVector<f64>) -> f64 {
    let pred = phi_t * c.component_mul(omega);
    ((y - pred).norm_squared() / y.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::Domain;
    use rand::{Rng, SeedableRng};

    fn uniform_set(seed: u64, n: usize, f: impl Fn(f64) -> f64) -> TrainingSet {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<Point> = (0..n).map(|_| vec![rng.random_range(-1.0..=1.0)]).collect();
        let ys = xs.iter().map(|x| f(x[0])).collect();
        TrainingSet::new(xs, ys).unwrap()
    }

    #[test]
    fn predict_examples() {
        let zero = SurrogateModel::univariate(&[(0, 0.0), (3, 0.0)]).unwrap();
        assert_eq!(zero.predict(&[0.3]).unwrap(), 0.0);
        let m = SurrogateModel::univariate(&[(0, 0.4607), (2, 0.4278)]).unwrap();
        let v = m.predict(&[0.0]).unwrap();
        assert!((v - (0.4607 * 0.5f64.sqrt() - 0.4278 * 2.5f64.sqrt() / 2.0)).abs() < 1e-14);
        assert!((v + 0.0125).abs() < 1e-3);
        // exact orthonormal projection of x^2 on degrees 0 and 2
        let a0 = 2.0 / (3.0 * 2f64.sqrt());
        let a2 = (4.0 / 15.0) * 2.5f64.sqrt();
        let proj = SurrogateModel::univariate(&[(0, a0), (2, a2)]).unwrap();
        assert!((proj.predict(&[0.5]).unwrap() - 0.25).abs() < 0.01);
        assert!(matches!(m.predict(&[0.0, 1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn path_invariants_and_selection() {
        let spec = BasisSpec::total_degree(Domain::symmetric_unit(1), 10, 1).unwrap();
        let cfg = KernelConfig::with_defaults(spec.domain(), 1.0, 1e-4).unwrap();
        let train = uniform_set(1, 100, |x| x * x);
        let test = uniform_set(2, 2000, |x| x * x);
        let (model, path) = fit_surrogate(&spec, &cfg, &train, &test, &FitOptions::default()).unwrap();
        assert_eq!(path.m_grid.len(), 41);
        assert!(path.solutions[0].iter().all(|&c| c == 0.0));
        for (i, c) in path.solutions.iter().enumerate() {
            assert!(c.iter().all(|&v| v >= -1e-10));
            assert!(c.iter().sum::<f64>() <= path.m_grid[i] + 1e-8);
        }
        for w in path.train_sse.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-10) + 1e-12);
        }
        let sums: Vec<f64> = path.solutions.iter().map(|c| c.iter().sum()).collect();
        for w in sums.windows(2) {
            assert!(w[1] >= w[0] - 1e-9);
        }
        let best = path.test_rmspe[path.best_index];
        assert!(path.test_rmspe.iter().all(|&r| r >= best * (1.0 - 1e-12)));
        assert!(path.test_rmspe[..path.best_index].iter().all(|&r| r > best * (1.0 - 1e-12)));
        assert_eq!(model.rmspe(&test).unwrap(), best);
        let nz = model.coefficients.iter().filter(|c| **c != 0.0).count();
        assert_eq!(nz, model.c_hat.iter().filter(|c| **c > SELECTED).count());
    }

    #[test]
    fn test_equals_train_with_huge_budget() {
        let spec = BasisSpec::total_degree(Domain::symmetric_unit(1), 4, 1).unwrap();
        let cfg = KernelConfig::with_defaults(spec.domain(), 1.0, 1e-3).unwrap();
        let train = uniform_set(5, 60, |x| (2.0 * x).sin());
        let opts = FitOptions { m_grid: Some(vec![0.0, 1e6]), ..Default::default() };
        let (model, path) = fit_surrogate(&spec, &cfg, &train, &train, &opts).unwrap();
        assert_eq!(path.best_index, 1);
        let rmse_train = (path.train_sse[1] / 60.0).sqrt();
        assert!((model.provenance.unwrap().rmspe - rmse_train).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_grids() {
        let spec = BasisSpec::total_degree(Domain::symmetric_unit(1), 2, 1).unwrap();
        let cfg = KernelConfig::with_defaults(spec.domain(), 1.0, 1e-3).unwrap();
        let t = uniform_set(1, 20, |x| x);
        for grid in [vec![0.5, 1.0], vec![0.0, 1.0, 1.0], vec![]] {
            let opts = FitOptions { m_grid: Some(grid), ..Default::default() };
            assert!(fit_surrogate(&spec, &cfg, &t, &t, &opts).is_err());
        }
    }

    #[test]
    fn execution_modes_agree() {
        let spec = BasisSpec::total_degree(Domain::symmetric_unit(1), 6, 1).unwrap();
        let cfg = KernelConfig::with_defaults(spec.domain(), 1.0, 1e-4).unwrap();
        let train = uniform_set(3, 80, |x| x.exp());
        let test = uniform_set(4, 500, |x| x.exp());
        let seq = FitOptions { execution: Execution::Sequential, ..Default::default() };
        let par = FitOptions { execution: Execution::Parallel, ..Default::default() };
        let a = fit_surrogate(&spec, &cfg, &train, &test, &seq).unwrap();
        let b = fit_surrogate(&spec, &cfg, &train, &test, &par).unwrap();
        assert_eq!(a, b);
    }
}
