//! Nonnegative garrote: `min ||y - A c||^2` subject to `c >= 0`, `sum c <= M`,
//! with `A_{ik} = omega_k phi_k(x_i)`.
//!
//! Solved by a primal active-set method on column-normalized variables
//! `u_k = ||A_k|| c_k`, which turns the budget into the weighted constraint
//! `sum_k u_k / ||A_k|| <= M` and keeps the Hessian at unit diagonal.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Columns whose weight magnitude falls below this are excluded.
pub const ZERO_WEIGHT: f64 = 1e-12;

pub const MAX_ITERATIONS: usize = 10_000;

/// Garrote coefficients for budget `m`, full length (zeros for dropped columns).
pub fn garrote_solve(
    design: &DMatrix<f64>,
    y: &DVector<f64>,
    omega: &DVector<f64>,
    m: f64,
) -> Result<DVector<f64>> {
    let p = design.ncols();
    if omega.len() != p {
        return Err(Error::DimensionMismatch { expected: p, got: omega.len() });
    }
    if y.len() != design.nrows() {
        return Err(Error::DimensionMismatch { expected: design.nrows(), got: y.len() });
    }
    if !(m >= 0.0 && m.is_finite()) {
        return Err(Error::invalid(format!("garrote budget must be nonnegative, got {m}")));
    }
    let mut c = DVector::zeros(p);
    if m == 0.0 {
        return Ok(c);
    }
    let mut cols = Vec::new();
    let mut norms = Vec::new();
    for k in 0..p {
        if omega[k].abs() < ZERO_WEIGHT {
            continue;
        }
        let norm = design.column(k).norm() * omega[k].abs();
        if norm > 0.0 {
            cols.push(k);
            norms.push(norm);
        }
    }
    if cols.is_empty() {
        return Ok(c);
    }
    let b_mat = DMatrix::from_fn(design.nrows(), cols.len(), |i, j| {
        design[(i, cols[j])] * omega[cols[j]] / norms[j]
    });
    let hess = b_mat.transpose() * &b_mat;
    let lin = b_mat.transpose() * y;
    let weights: Vec<f64> = norms.iter().map(|s| 1.0 / s).collect();
    let wmax = weights.iter().fold(0.0f64, |a, &b| a.max(b));
    let a: Vec<f64> = weights.iter().map(|w| w / wmax).collect();
    let u = ActiveSet::new(&hess, &lin, &a, m / wmax).solve()?;
    for (j, &k) in cols.iter().enumerate() {
        c[k] = u[j] / norms[j];
    }
    Ok(c)
}

/// `min 1/2 u^T H u - b^T u` s.t. `u >= 0`, `a^T u <= m`, with `a > 0`.
struct ActiveSet<'a> {
    hess: &'a DMatrix<f64>,
    lin: &'a DVector<f64>,
    a: &'a [f64],
    m: f64,
}

enum Blocking {
    Bound(usize),
    Budget,
}

impl<'a> ActiveSet<'a> {
    fn new(hess: &'a DMatrix<f64>, lin: &'a DVector<f64>, a: &'a [f64], m: f64) -> Self {
        ActiveSet { hess, lin, a, m }
    }

    /// Equality-constrained minimizer on the free set; returns `(u_free, lambda)`.
    fn subproblem(&self, free: &[usize], budget_active: bool) -> Option<(Vec<f64>, f64)> {
        let nf = free.len();
        let h = DMatrix::from_fn(nf, nf, |i, j| self.hess[(free[i], free[j])]);
        let chol = h.clone().cholesky().or_else(|| {
            // collinear columns: a tiny ridge keeps the subproblem solvable
            let mut r = h;
            for i in 0..nf {
                r[(i, i)] += 1e-12;
            }
            r.cholesky()
        })?;
        let bf = DVector::from_fn(nf, |i, _| self.lin[free[i]]);
        let u0 = chol.solve(&bf);
        if !budget_active {
            return Some((u0.iter().copied().collect(), 0.0));
        }
        let af = DVector::from_fn(nf, |i, _| self.a[free[i]]);
        let hinv_a = chol.solve(&af);
        let lambda = (af.dot(&u0) - self.m) / af.dot(&hinv_a);
        Some(((u0 - hinv_a * lambda).iter().copied().collect(), lambda))
    }

    fn solve(&self) -> Result<Vec<f64>> {
        let p = self.lin.len();
        let mut u = vec![0.0; p];
        let mut at_bound = vec![true; p];
        let mut budget_active = false;
        let tol = 1e-13 * (1.0 + self.lin.amax());

        for _ in 0..MAX_ITERATIONS {
            let free: Vec<usize> = (0..p).filter(|&j| !at_bound[j]).collect();
            let (target, lambda) = if free.is_empty() {
                (Vec::new(), 0.0)
            } else {
                self.subproblem(&free, budget_active).ok_or_else(|| Error::IllConditioned {
                    what: "garrote subproblem",
                    detail: format!("{} free columns are numerically dependent", free.len()),
                })?
            };
            let mut step = vec![0.0; p];
            for (i, &j) in free.iter().enumerate() {
                step[j] = target[i] - u[j];
            }
            let umax = u.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            let smax = step.iter().fold(0.0f64, |a, &b| a.max(b.abs()));

            if smax <= 1e-15 * (1.0 + umax) {
                // stationary on the working set: check multipliers
                let grad: Vec<f64> = (0..p)
                    .map(|i| (0..p).map(|j| self.hess[(i, j)] * u[j]).sum::<f64>() - self.lin[i])
                    .collect();
                let mut worst: Option<(f64, Option<usize>)> = None;
                for j in (0..p).filter(|&j| at_bound[j]) {
                    let mu = grad[j] + lambda * self.a[j];
                    if mu < -tol && worst.is_none_or(|(w, _)| mu < w) {
                        worst = Some((mu, Some(j)));
                    }
                }
                if budget_active && lambda < -tol && worst.is_none_or(|(w, _)| lambda < w) {
                    worst = Some((lambda, None));
                }
                match worst {
                    None => return Ok(u),
                    Some((_, Some(j))) => at_bound[j] = false,
                    Some((_, None)) => budget_active = false,
                }
                continue;
            }

            let mut alpha = 1.0;
            let mut blocking = None;
            for &j in &free {
                if step[j] < 0.0 {
                    let t = -u[j] / step[j];
                    if t < alpha {
                        alpha = t;
                        blocking = Some(Blocking::Bound(j));
                    }
                }
            }
            if !budget_active {
                let a_step: f64 = (0..p).map(|j| self.a[j] * step[j]).sum();
                if a_step > 0.0 {
                    let slack = self.m - (0..p).map(|j| self.a[j] * u[j]).sum::<f64>();
                    let t = slack.max(0.0) / a_step;
                    if t < alpha {
                        alpha = t;
                        blocking = Some(Blocking::Budget);
                    }
                }
            }
            for j in 0..p {
                u[j] += alpha * step[j];
            }
            match blocking {
                Some(Blocking::Bound(j)) => {
                    u[j] = 0.0;
                    at_bound[j] = true;
                }
                Some(Blocking::Budget) => budget_active = true,
                None => {}
            }
            for v in u.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
        }
        let residual = self.stationarity(&u);
        Err(Error::NoConvergence { iterations: MAX_ITERATIONS, residual })
    }

    fn stationarity(&self, u: &[f64]) -> f64 {
        let p = u.len();
        (0..p)
            .map(|i| (0..p).map(|j| self.hess[(i, j)] * u[j]).sum::<f64>() - self.lin[i])
            .zip(u)
            .map(|(g, &v)| if v > 0.0 { g.abs() } else { (-g).max(0.0) })
            .fold(0.0, f64::max)
    }
}

/// Scaled KKT residual of `c` for the garrote problem, computed from the
/// optimality conditions alone.
///
/// The residual is the largest of primal infeasibility, complementary
/// slackness and stationarity violation, with the multipliers recovered from
/// `c`, divided by `max(1, ||2 A^T y||_inf)`. Dropped (zero-weight) columns
/// must carry `c_k = 0` and are ignored.
pub fn kkt_residual(
    design: &DMatrix<f64>,
    y: &DVector<f64>,
    omega: &DVector<f64>,
    m: f64,
    c: &DVector<f64>,
) -> f64 {
    let keep: Vec<usize> = (0..omega.len()).filter(|&k| omega[k].abs() >= ZERO_WEIGHT).collect();
    let mut dropped_violation = 0.0f64;
    for k in 0..omega.len() {
        if omega[k].abs() < ZERO_WEIGHT {
            dropped_violation = dropped_violation.max(c[k].abs());
        }
    }
    let a = DMatrix::from_fn(design.nrows(), keep.len(), |i, j| design[(i, keep[j])] * omega[keep[j]]);
    let ck = DVector::from_fn(keep.len(), |j, _| c[keep[j]]);
    let grad = a.transpose() * (&a * &ck - y) * 2.0;
    let scale = (a.transpose() * y * 2.0).amax().max(1.0);

    let sum: f64 = ck.sum();
    let positive: Vec<usize> = (0..ck.len()).filter(|&j| ck[j] > 1e-14).collect();
    let budget_tight = (sum - m).abs() <= 1e-8 * m.max(1.0);
    let lambda = if budget_tight && !positive.is_empty() {
        (-positive.iter().map(|&j| grad[j]).sum::<f64>() / positive.len() as f64).max(0.0)
    } else {
        0.0
    };

    let mut r = dropped_violation;
    r = r.max((sum - m).max(0.0));
    for j in 0..ck.len() {
        r = r.max((-ck[j]).max(0.0));
        let station = grad[j] + lambda;
        if ck[j] > 1e-14 {
            r = r.max(station.abs() / scale);
        } else {
            r = r.max((-station).max(0.0) / scale);
        }
    }
    r.max(lambda * (m - sum).abs() / scale)
}

/// Training objective `||y - A c||^2`.
pub fn garrote_objective(design: &DMatrix<f64>, y: &DVector<f64>, omega: &DVector<f64>, c: &DVector<f64>) -> f64 {
    let coef = c.component_mul(omega);
    (y - design * coef).norm_squared()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_instance(seed: u64, n: usize, p: usize) -> (DMatrix<f64>, DVector<f64>, DVector<f64>) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let design = DMatrix::from_fn(n, p, |_, _| rng.random_range(-1.0..1.0));
        let y = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
        let omega = DVector::from_fn(p, |_, _| rng.random_range(-1.5..1.5));
        (design, y, omega)
    }

    /// Projected gradient on the unit-weight nonnegative least-squares problem.
    fn projected_gradient_nnls(a: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
        let h = a.transpose() * a;
        let step = 1.0 / h.clone().symmetric_eigenvalues().max();
        let mut c = DVector::zeros(a.ncols());
        for _ in 0..200_000 {
            let g = &h * &c - a.transpose() * y;
            let next = (&c - g * step).map(|v| v.max(0.0));
            if (&next - &c).amax() < 1e-14 {
                c = next;
                break;
            }
            c = next;
        }
        c
    }

    #[test]
    fn zero_budget_gives_zero() {
        let (d, y, w) = random_instance(1, 20, 4);
        assert_eq!(garrote_solve(&d, &y, &w, 0.0).unwrap(), DVector::zeros(4));
    }

    #[test]
    fn single_column_closed_form() {
        let d = DMatrix::from_column_slice(4, 1, &[1.0, 2.0, 0.5, -1.0]);
        let y = DVector::from_vec(vec![2.0, 3.5, 1.0, -2.5]);
        let w = DVector::from_vec(vec![0.8]);
        let a = d.column(0) * 0.8;
        let free = a.dot(&y) / a.dot(&a);
        for m in [0.1, 0.5, 1.0, free, 10.0] {
            let c = garrote_solve(&d, &y, &w, m).unwrap();
            assert!((c[0] - m.min(free)).abs() < 1e-12, "m={m}: {} vs {}", c[0], m.min(free));
        }
    }

    #[test]
    fn large_budget_matches_nnls() {
        for seed in 0..10 {
            let (d, y, w) = random_instance(seed, 30, 5);
            let a = DMatrix::from_fn(30, 5, |i, j| d[(i, j)] * w[j]);
            let oracle = projected_gradient_nnls(&a, &y);
            let budget = oracle.sum() + 1.0;
            let c = garrote_solve(&d, &y, &w, budget).unwrap();
            assert!((&c - &oracle).amax() < 1e-7, "seed {seed}: {c} vs {oracle}");
        }
    }

    #[test]
    fn zero_weight_columns_are_fixed() {
        let (d, y, mut w) = random_instance(3, 25, 4);
        w[2] = 0.0;
        let c = garrote_solve(&d, &y, &w, 3.0).unwrap();
        assert_eq!(c[2], 0.0);
        assert!(kkt_residual(&d, &y, &w, 3.0, &c) <= 1e-8);
    }

    #[test]
    fn kkt_certificate_on_random_instances() {
        for seed in 0..40 {
            let (d, y, w) = random_instance(100 + seed, 40, 8);
            for m in [0.05, 0.3, 1.0, 2.5, 8.0] {
                let c = garrote_solve(&d, &y, &w, m).unwrap();
                let r = kkt_residual(&d, &y, &w, m, &c);
                assert!(r <= 1e-8, "seed {seed} m {m}: residual {r}");
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        let (d, y, w) = random_instance(2, 10, 3);
        assert!(garrote_solve(&d, &y, &w, -1.0).is_err());
        assert!(garrote_solve(&d, &y, &DVector::zeros(2), 1.0).is_err());
    }
}
