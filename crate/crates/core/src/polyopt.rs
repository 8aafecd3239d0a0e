//! Minimizing the tracking cost `w1 (y* - model(x))^2 + w2 |x - x'|^2`
//! over a box.
//!
//! Univariate costs are minimized exactly by enumerating the critical points.
//! [`sos_largest_q`] answers the same question from the other side (the
//! largest `q` with `J - q >= 0` on the box) and serves as a cross-check.
//! Multivariate costs use multi-start projected Newton descent.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::approx::SurrogateModel;
use crate::basis::Domain;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::polynomial::{self, horner, Polynomial};
use crate::Point;

/// Largest model degree accepted by [`compose_cost`].
pub const MAX_MODEL_DEGREE: usize = 32;

/// Newton iterations per start.
pub const MAX_NEWTON_ITERATIONS: usize = 500;

/// Relative tolerance under which two cost values count as a tie.
const TIE: f64 = 1e-12;

/// A polynomial cost on a box, with its derivatives precomputed.
#[derive(Debug, Clone)]
pub struct PolyCost {
    poly: Polynomial,
    domain: Domain,
    x_prev: Point,
    degree: usize,
    value: Dense,
    grad: Vec<Dense>,
    hess: Vec<Vec<Dense>>,
}

/// Flat term list, evaluated through a per-call power table.
#[derive(Debug, Clone)]
struct Dense {
    terms: Vec<(Vec<u32>, f64)>,
    max_exp: Vec<u32>,
}

impl Dense {
    fn new(p: &Polynomial) -> Self {
        let mut max_exp = vec![0; p.dim()];
        let terms: Vec<(Vec<u32>, f64)> = p
            .terms()
            .map(|(e, c)| {
                for (m, &k) in max_exp.iter_mut().zip(e) {
                    *m = (*m).max(k);
                }
                (e.clone(), c)
            })
            .collect();
        Dense { terms, max_exp }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let pows: Vec<Vec<f64>> = x
            .iter()
            .zip(&self.max_exp)
            .map(|(&v, &m)| {
                let mut row = Vec::with_capacity(m as usize + 1);
                let mut acc = 1.0;
                for _ in 0..=m {
                    row.push(acc);
                    acc *= v;
                }
                row
            })
            .collect();
        self.terms
            .iter()
            .map(|(e, c)| c * e.iter().enumerate().map(|(i, &k)| pows[i][k as usize]).product::<f64>())
            .sum()
    }
}

impl PolyCost {
    /// Wraps an arbitrary polynomial as a cost on `domain`.
    pub fn new(poly: Polynomial, domain: Domain, x_prev: Point) -> Result<Self> {
        domain.check_dim(&x_prev)?;
        if poly.dim() != domain.dim() {
            return Err(Error::DimensionMismatch { expected: domain.dim(), got: poly.dim() });
        }
        let grad_polys = poly.gradient();
        let hess = grad_polys
            .iter()
            .map(|g| g.gradient().iter().map(Dense::new).collect())
            .collect();
        Ok(PolyCost {
            degree: poly.degree(),
            value: Dense::new(&poly),
            grad: grad_polys.iter().map(Dense::new).collect(),
            hess,
            poly,
            domain,
            x_prev,
        })
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn x_prev(&self) -> &[f64] {
        &self.x_prev
    }

    pub fn polynomial(&self) -> &Polynomial {
        &self.poly
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.value.eval(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.grad.iter().map(|g| g.eval(x)).collect()
    }

    pub fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |i, j| self.hess[i][j].eval(x))
    }

    fn distance_to_prev(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.x_prev).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
    }

    /// True when `a` beats `b`: lower cost, or a tie and closer to `x'`.
    fn better(&self, a: &Minimum, b: &Minimum) -> bool {
        let tol = TIE * (1.0 + a.value.abs().max(b.value.abs()));
        if (a.value - b.value).abs() <= tol {
            self.distance_to_prev(&a.x) < self.distance_to_prev(&b.x)
        } else {
            a.value < b.value
        }
    }
}

/// Builds `w1 (y* - model(x))^2 + w2 |x - x_prev|^2` in monomial form.
pub fn compose_cost(
    model: &SurrogateModel,
    y_star: f64,
    x_prev: &[f64],
    w1: f64,
    w2: f64,
) -> Result<PolyCost> {
    if !(w1 > 0.0) || !w1.is_finite() {
        return Err(Error::invalid(format!("w1 must be positive, got {w1}")));
    }
    if !(w2 >= 0.0) || !w2.is_finite() {
        return Err(Error::invalid(format!("w2 must be nonnegative, got {w2}")));
    }
    if !y_star.is_finite() {
        return Err(Error::invalid("reference output must be finite"));
    }
    let d = model.dim();
    model.spec.domain().check_dim(x_prev)?;
    let degree = model.order();
    if degree > MAX_MODEL_DEGREE {
        return Err(Error::DegreeOverflow { degree, cap: MAX_MODEL_DEGREE });
    }
    let gap = Polynomial::constant(d, y_star) - model.polynomial();
    let mut cost = (&gap * &gap).scale(w1);
    if w2 > 0.0 {
        for (i, &xp) in x_prev.iter().enumerate() {
            let diff = Polynomial::affine(d, i, 1.0, -xp);
            cost = cost + (&diff * &diff).scale(w2);
        }
    }
    PolyCost::new(cost, model.spec.domain().clone(), x_prev.to_vec())
}

/// Result of a minimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Minimum {
    pub x: Point,
    pub value: f64,
    /// False when no start of the multivariate search converged.
    pub certified: bool,
}

/// Minimizes with the method suited to the cost's dimension.
pub fn minimize(cost: &PolyCost, exec: Execution) -> Result<Minimum> {
    if cost.dim() == 1 {
        minimize_univariate(cost)
    } else {
        minimize_multivariate(cost, 3, exec)
    }
}

/// Global minimum of a univariate cost: compares the cost at the real
/// critical points inside the interval, both endpoints and `x'`.
pub fn minimize_univariate(cost: &PolyCost) -> Result<Minimum> {
    if cost.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: cost.dim() });
    }
    let (lo, hi) = (cost.domain.lo(0), cost.domain.hi(0));
    let mut xp = cost.x_prev[0];
    xp = xp.clamp(lo, hi);
    let coeffs = cost.poly.univariate_coeffs();
    let dc = polynomial::derivative_coeffs(&coeffs);
    if polynomial::trim(&dc).is_empty() {
        return Ok(Minimum { x: vec![xp], value: horner(&coeffs, xp), certified: true });
    }
    let slack = 1e-9 * (hi - lo);
    let mut candidates = vec![lo, hi, xp];
    candidates.extend(
        polynomial::real_roots(&dc, 1e-7)
            .into_iter()
            .filter(|r| *r >= lo - slack && *r <= hi + slack)
            .map(|r| r.clamp(lo, hi)),
    );
    let mut best: Option<Minimum> = None;
    for x in candidates {
        let m = Minimum { x: vec![x], value: horner(&coeffs, x), certified: true };
        if best.as_ref().is_none_or(|b| cost.better(&m, b)) {
            best = Some(m);
        }
    }
    Ok(best.expect("at least the endpoints are candidates"))
}

/// Multi-start projected Newton descent from a `levels^d` grid plus `x'`.
///
/// Starts run through `exec` and are reduced in a fixed order, so the result
/// does not depend on scheduling.
pub fn minimize_multivariate(cost: &PolyCost, levels: usize, exec: Execution) -> Result<Minimum> {
    if levels == 0 {
        return Err(Error::invalid("need at least one start level"));
    }
    let mut starts = start_grid(&cost.domain, levels);
    let mut xp = cost.x_prev.clone();
    cost.domain.clamp(&mut xp);
    starts.push(xp);
    let results = exec.map(starts.len(), |i| newton_descent(cost, starts[i].clone()));
    let mut best: Option<Minimum> = None;
    for m in results {
        if best.as_ref().is_none_or(|b| cost.better(&m, b)) {
            best = Some(m);
        }
    }
    Ok(best.expect("at least one start"))
}

fn start_grid(domain: &Domain, levels: usize) -> Vec<Point> {
    let d = domain.dim();
    let axis = |i: usize, k: usize| {
        if levels == 1 {
            0.5 * (domain.lo(i) + domain.hi(i))
        } else {
            domain.lo(i) + domain.width(i) * k as f64 / (levels - 1) as f64
        }
    };
    let total = levels.pow(d as u32);
    (0..total)
        .map(|mut idx| {
            (0..d)
                .map(|i| {
                    let k = idx % levels;
                    idx /= levels;
                    axis(i, k)
                })
                .collect()
        })
        .collect()
}

fn project(domain: &Domain, x: &mut [f64]) {
    domain.clamp(x);
}

/// Norm of `x - P(x - g)`, zero exactly at KKT points of the box problem.
fn projected_gradient_norm(domain: &Domain, x: &[f64], g: &[f64]) -> f64 {
    let mut y: Vec<f64> = x.iter().zip(g).map(|(a, b)| a - b).collect();
    project(domain, &mut y);
    x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
}

fn newton_descent(cost: &PolyCost, mut x: Point) -> Minimum {
    let d = cost.dim();
    let dom = &cost.domain;
    let mut fx = cost.eval(&x);
    let scale = 1.0 + fx.abs();
    for _ in 0..MAX_NEWTON_ITERATIONS {
        let g = cost.gradient(&x);
        if projected_gradient_norm(dom, &x, &g) <= 1e-10 * scale {
            return Minimum { x, value: fx, certified: true };
        }
        // coordinates pinned at a bound with the gradient pushing outward
        let free: Vec<usize> = (0..d)
            .filter(|&i| {
                let at_lo = x[i] <= dom.lo(i) && g[i] > 0.0;
                let at_hi = x[i] >= dom.hi(i) && g[i] < 0.0;
                !(at_lo || at_hi)
            })
            .collect();
        let mut dir = vec![0.0; d];
        if !free.is_empty() {
            let h = cost.hessian(&x);
            let hf = DMatrix::from_fn(free.len(), free.len(), |a, b| h[(free[a], free[b])]);
            let gf = DVector::from_iterator(free.len(), free.iter().map(|&i| g[i]));
            let step = newton_direction(hf, &gf);
            for (a, &i) in free.iter().enumerate() {
                dir[i] = step[a];
            }
        }
        match line_search(cost, &x, fx, &g, &dir).or_else(|| {
            let steepest: Vec<f64> = g.iter().map(|v| -v).collect();
            line_search(cost, &x, fx, &g, &steepest)
        }) {
            Some((xn, fnew)) => {
                let moved = x.iter().zip(&xn).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                let improved = fx - fnew;
                x = xn;
                fx = fnew;
                if moved <= 1e-15 * (1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs())))
                    || improved <= 1e-16 * scale
                {
                    let g = cost.gradient(&x);
                    let ok = projected_gradient_norm(dom, &x, &g) <= 1e-6 * scale;
                    return Minimum { x, value: fx, certified: ok };
                }
            }
            None => {
                // no descent possible along either direction: numerically stationary
                let ok = projected_gradient_norm(dom, &x, &g) <= 1e-6 * scale;
                return Minimum { x, value: fx, certified: ok };
            }
        }
    }
    Minimum { x, value: fx, certified: false }
}

/// Newton step, with the Hessian shifted to positive definite when needed.
fn newton_direction(h: DMatrix<f64>, g: &DVector<f64>) -> DVector<f64> {
    if let Some(ch) = h.clone().cholesky() {
        return -ch.solve(g);
    }
    let n = h.nrows();
    let eig = h.clone().symmetric_eigen();
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let norm = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let shift = -min + 1e-8 * (1.0 + norm);
    let shifted = h + DMatrix::identity(n, n) * shift;
    match shifted.cholesky() {
        Some(ch) => -ch.solve(g),
        None => -g.clone(),
    }
}

/// Backtracking Armijo search along the projected path `P(x + t dir)`.
fn line_search(cost: &PolyCost, x: &[f64], fx: f64, g: &[f64], dir: &[f64]) -> Option<(Point, f64)> {
    if dir.iter().all(|v| *v == 0.0) {
        return None;
    }
    let mut t = 1.0;
    for _ in 0..60 {
        let mut xn: Vec<f64> = x.iter().zip(dir).map(|(a, b)| a + t * b).collect();
        project(&cost.domain, &mut xn);
        let decrease: f64 = g.iter().zip(xn.iter().zip(x)).map(|(gi, (a, b))| gi * (a - b)).sum();
        if decrease < 0.0 {
            let fnew = cost.eval(&xn);
            if fnew <= fx + 1e-4 * decrease {
                return Some((xn, fnew));
            }
        }
        t *= 0.5;
    }
    None
}

/// Largest `q` with `J(x) - q >= 0` on the interval, by bisection.
///
/// Feasibility of a trial `q` is decided from the roots of `J - q`: the
/// polynomial is checked at the endpoints, at every (near-)real root and at
/// the midpoints between consecutive ones, which covers each interval of
/// constant sign.
pub fn sos_largest_q(cost: &PolyCost, tol: f64) -> Result<f64> {
    if cost.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: cost.dim() });
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let coeffs = cost.poly.univariate_coeffs();
    let (lo, hi) = (cost.domain.lo(0), cost.domain.hi(0));
    if polynomial::trim(&coeffs).len() <= 1 {
        return Ok(coeffs.first().copied().unwrap_or(0.0));
    }
    let feasible = |q: f64| {
        let mut shifted = coeffs.clone();
        shifted[0] -= q;
        let mut pts = vec![lo, hi];
        pts.extend(
            polynomial::roots(&shifted)
                .into_iter()
                .filter(|(_, im)| im.is_finite())
                .map(|(re, _)| re)
                .filter(|re| re.is_finite() && *re > lo && *re < hi),
        );
        pts.sort_by(f64::total_cmp);
        let mids: Vec<f64> = pts.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        pts.iter().chain(&mids).all(|&x| horner(&shifted, x) >= 0.0)
    };
    let xp = cost.x_prev[0].clamp(lo, hi);
    let mut upper = horner(&coeffs, xp).min(horner(&coeffs, lo)).min(horner(&coeffs, hi));
    let mut lower = 0.0f64.min(upper);
    let mut span = 1.0 + upper.abs();
    while !feasible(lower) {
        lower -= span;
        span *= 2.0;
        if !lower.is_finite() {
            return Err(Error::NoConvergence { iterations: 0, residual: f64::INFINITY });
        }
    }
    if feasible(upper) {
        return Ok(upper);
    }
    while upper - lower > tol {
        let mid = 0.5 * (lower + upper);
        if feasible(mid) {
            lower = mid;
        } else {
            upper = mid;
        }
    }
    Ok(lower)
}
