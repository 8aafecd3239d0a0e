//! Orthonormal Legendre tensor-product bases on box domains.
//!
//! A basis term is a multi-index `(n_1, ..., n_d)`; it evaluates to
//! `prod_i phi_{n_i}(z_i)` where `z` is the input mapped affinely onto
//! `[-1, 1]^d` and `phi_n = sqrt((2n + 1) / 2) P_n` is the Legendre
//! polynomial normalized so that `int_{-1}^{1} phi_i phi_j = delta_ij`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::Point;

/// Highest single-variable degree the recurrence is allowed to reach.
pub const MAX_DEGREE: usize = 64;

/// Default cap on the number of enumerated terms.
pub const DEFAULT_TERM_BUDGET: usize = 10_000;

/// Normalization factor `sqrt((2n + 1) / 2)`.
#[inline]
pub fn orthonormal_scale(n: usize) -> f64 {
    ((2 * n + 1) as f64 / 2.0).sqrt()
}

/// Orthonormal Legendre polynomial of degree `n` at `z`.
///
/// `z` is clamped to `[-1, 1]`.
pub fn legendre_orthonormal(n: usize, z: f64) -> f64 {
    assert!(n <= MAX_DEGREE, "Legendre degree {n} exceeds {MAX_DEGREE}");
    let z = z.clamp(-1.0, 1.0);
    let mut table = [0.0; MAX_DEGREE + 1];
    legendre_table(n, z, &mut table[..=n]);
    table[n]
}

/// Fills `out[k] = phi_k(z)` for `k = 0..out.len()`.
pub fn legendre_table(max_n: usize, z: f64, out: &mut [f64]) {
    debug_assert!(out.len() > max_n);
    // classical P_n first, scaled afterwards
    let mut p_prev = 1.0;
    out[0] = 1.0;
    if max_n >= 1 {
        let mut p = z;
        out[1] = z;
        for n in 1..max_n {
            let nf = n as f64;
            let next = ((2.0 * nf + 1.0) * z * p - nf * p_prev) / (nf + 1.0);
            p_prev = p;
            p = next;
            out[n + 1] = p;
        }
    }
    for (n, v) in out.iter_mut().enumerate().take(max_n + 1) {
        *v *= orthonormal_scale(n);
    }
}

/// Fills `vals[k] = phi_k(z)` and `ders[k] = phi_k'(z)` (derivative in `z`).
pub fn legendre_table_with_derivative(max_n: usize, z: f64, vals: &mut [f64], ders: &mut [f64]) {
    let mut p = vec![0.0; max_n + 1];
    p[0] = 1.0;
    if max_n >= 1 {
        p[1] = z;
    }
    for n in 1..max_n {
        let nf = n as f64;
        p[n + 1] = ((2.0 * nf + 1.0) * z * p[n] - nf * p[n - 1]) / (nf + 1.0);
    }
    // P'_{n+1} = P'_{n-1} + (2n + 1) P_n
    let mut dp = vec![0.0; max_n + 1];
    if max_n >= 1 {
        dp[1] = 1.0;
    }
    for n in 1..max_n {
        dp[n + 1] = dp[n - 1] + (2 * n + 1) as f64 * p[n];
    }
    for n in 0..=max_n {
        let s = orthonormal_scale(n);
        vals[n] = s * p[n];
        ders[n] = s * dp[n];
    }
}

/// Monomial coefficients (ascending powers of `z`) of `phi_n`.
pub fn legendre_monomial(n: usize) -> Vec<f64> {
    assert!(n <= MAX_DEGREE);
    let mut prev = vec![1.0];
    if n == 0 {
        return vec![orthonormal_scale(0)];
    }
    let mut cur = vec![0.0, 1.0];
    for k in 1..n {
        let kf = k as f64;
        let mut next = vec![0.0; k + 2];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += (2.0 * kf + 1.0) * c / (kf + 1.0);
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= kf * c / (kf + 1.0);
        }
        prev = cur;
        cur = next;
    }
    let s = orthonormal_scale(n);
    cur.iter().map(|c| c * s).collect()
}

/// Closed interval per input dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct Domain {
    bounds: Vec<[f64; 2]>,
}

impl Domain {
    pub fn new(bounds: Vec<[f64; 2]>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::invalid("domain needs at least one dimension"));
        }
        for (i, [lo, hi]) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::invalid(format!(
                    "domain interval {i} is degenerate: [{lo}, {hi}]"
                )));
            }
        }
        Ok(Domain { bounds })
    }

    /// `[-1, 1]^d`.
    pub fn symmetric_unit(d: usize) -> Self {
        Domain { bounds: vec![[-1.0, 1.0]; d.max(1)] }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[[f64; 2]] {
        &self.bounds
    }

    pub fn lo(&self, i: usize) -> f64 {
        self.bounds[i][0]
    }

    pub fn hi(&self, i: usize) -> f64 {
        self.bounds[i][1]
    }

    pub fn width(&self, i: usize) -> f64 {
        self.bounds[i][1] - self.bounds[i][0]
    }

    /// Affine map of coordinate `i` onto `[-1, 1]`.
    #[inline]
    pub fn to_unit(&self, i: usize, x: f64) -> f64 {
        let [lo, hi] = self.bounds[i];
        2.0 * (x - lo) / (hi - lo) - 1.0
    }

    /// `dz/dx` of [`Domain::to_unit`] for coordinate `i`.
    #[inline]
    pub fn unit_slope(&self, i: usize) -> f64 {
        2.0 / self.width(i)
    }

    /// Projects `x` onto the box.
    pub fn clamp(&self, x: &mut [f64]) {
        for (v, [lo, hi]) in x.iter_mut().zip(&self.bounds) {
            *v = v.clamp(*lo, *hi);
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(&self.bounds)
                .all(|(v, [lo, hi])| *v >= lo - tol && *v <= hi + tol)
    }

    pub fn center(&self) -> Point {
        self.bounds.iter().map(|[lo, hi]| 0.5 * (lo + hi)).collect()
    }

    pub(crate) fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }
}

impl TryFrom<Vec<[f64; 2]>> for Domain {
    type Error = Error;
    fn try_from(bounds: Vec<[f64; 2]>) -> Result<Self> {
        Domain::new(bounds)
    }
}

impl From<Domain> for Vec<[f64; 2]> {
    fn from(d: Domain) -> Self {
        d.bounds
    }
}

/// Per-dimension Legendre degrees of one tensor-product term.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn total_degree(&self) -> usize {
        self.0.iter().map(|&n| n as usize).sum()
    }

    pub fn interaction_order(&self) -> usize {
        self.0.iter().filter(|&&n| n > 0).count()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().all(|&n| n == 0)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|n| n.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// All multi-indices of length `d` with total degree `<= max_degree` and at
/// most `max_interaction_order` nonzero entries, in lexicographic order.
pub fn enumerate_terms(
    d: usize,
    max_degree: usize,
    max_interaction_order: usize,
) -> Result<Vec<MultiIndex>> {
    enumerate_terms_with_budget(d, max_degree, max_interaction_order, DEFAULT_TERM_BUDGET)
}

pub fn enumerate_terms_with_budget(
    d: usize,
    max_degree: usize,
    max_interaction_order: usize,
    budget: usize,
) -> Result<Vec<MultiIndex>> {
    if d == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    if max_degree > MAX_DEGREE {
        return Err(Error::DegreeOverflow { degree: max_degree, cap: MAX_DEGREE });
    }
    let mut out = Vec::new();
    let mut cur = vec![0u32; d];
    let mut count = 0usize;
    walk(0, max_degree, max_interaction_order, &mut cur, &mut out, &mut count, budget)?;
    Ok(out)
}

fn walk(
    pos: usize,
    degree_left: usize,
    interactions_left: usize,
    cur: &mut Vec<u32>,
    out: &mut Vec<MultiIndex>,
    count: &mut usize,
    budget: usize,
) -> Result<()> {
    if pos == cur.len() {
        *count += 1;
        if *count > budget {
            return Err(Error::TermBudget { count: *count, budget });
        }
        out.push(MultiIndex(cur.clone()));
        return Ok(());
    }
    let top = if interactions_left == 0 { 0 } else { degree_left };
    for n in 0..=top {
        cur[pos] = n as u32;
        let inter = if n > 0 { interactions_left - 1 } else { interactions_left };
        walk(pos + 1, degree_left - n, inter, cur, out, count, budget)?;
    }
    cur[pos] = 0;
    Ok(())
}

/// Which tensor-product Legendre terms make up `phi(x)`, and on which box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct BasisSpec {
    domain: Domain,
    terms: Vec<MultiIndex>,
    max_degree: usize,
    max_interaction_order: usize,
}

#[derive(Deserialize)]
struct RawSpec {
    domain: Domain,
    terms: Vec<MultiIndex>,
    max_degree: usize,
    max_interaction_order: usize,
}

impl TryFrom<RawSpec> for BasisSpec {
    type Error = Error;
    fn try_from(raw: RawSpec) -> Result<Self> {
        let spec = BasisSpec::from_terms(raw.domain, raw.terms)?;
        if spec.terms.iter().any(|t| {
            t.total_degree() > raw.max_degree || t.interaction_order() > raw.max_interaction_order
        }) {
            return Err(Error::Parse("basis term violates the declared caps".into()));
        }
        Ok(BasisSpec { max_degree: raw.max_degree, max_interaction_order: raw.max_interaction_order, ..spec })
    }
}

impl BasisSpec {
    /// Full total-degree basis with an interaction cap.
    pub fn total_degree(
        domain: Domain,
        max_degree: usize,
        max_interaction_order: usize,
    ) -> Result<Self> {
        let terms = enumerate_terms(domain.dim(), max_degree, max_interaction_order)?;
        Ok(BasisSpec { domain, terms, max_degree, max_interaction_order })
    }

    /// Explicit term list; sorted and deduplicated, caps inferred.
    pub fn from_terms(domain: Domain, mut terms: Vec<MultiIndex>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::invalid("basis needs at least one term"));
        }
        for t in &terms {
            if t.dim() != domain.dim() {
                return Err(Error::DimensionMismatch { expected: domain.dim(), got: t.dim() });
            }
            if let Some(&n) = t.0.iter().max() {
                if n as usize > MAX_DEGREE {
                    return Err(Error::DegreeOverflow { degree: n as usize, cap: MAX_DEGREE });
                }
            }
        }
        terms.sort();
        terms.dedup();
        if terms.len() > DEFAULT_TERM_BUDGET {
            return Err(Error::TermBudget { count: terms.len(), budget: DEFAULT_TERM_BUDGET });
        }
        let max_degree = terms.iter().map(MultiIndex::total_degree).max().unwrap_or(0);
        let max_interaction_order = terms.iter().map(MultiIndex::interaction_order).max().unwrap_or(0);
        Ok(BasisSpec { domain, terms, max_degree, max_interaction_order })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn terms(&self) -> &[MultiIndex] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn max_interaction_order(&self) -> usize {
        self.max_interaction_order
    }

    /// Highest degree used in each coordinate.
    pub fn per_dim_degree(&self) -> Vec<usize> {
        (0..self.dim())
            .map(|i| self.terms.iter().map(|t| t.0[i] as usize).max().unwrap_or(0))
            .collect()
    }

    /// Index of the all-zero term, if present.
    pub fn constant_index(&self) -> Option<usize> {
        self.terms.iter().position(MultiIndex::is_constant)
    }

    fn unit_tables(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.per_dim_degree()
            .into_iter()
            .enumerate()
            .map(|(i, deg)| {
                let z = self.domain.to_unit(i, x[i]).clamp(-1.0, 1.0);
                let mut t = vec![0.0; deg + 1];
                legendre_table(deg, z, &mut t);
                t
            })
            .collect()
    }

    fn fill_row(&self, x: &[f64], row: &mut [f64]) {
        let tables = self.unit_tables(x);
        for (out, term) in row.iter_mut().zip(&self.terms) {
            *out = term
                .0
                .iter()
                .zip(&tables)
                .map(|(&n, t)| t[n as usize])
                .product();
        }
    }

    /// `phi(x)`, ordered like [`BasisSpec::terms`].
    pub fn basis_vector(&self, x: &[f64]) -> Result<DVector<f64>> {
        self.domain.check_dim(x)?;
        let mut v = DVector::zeros(self.len());
        self.fill_row(x, v.as_mut_slice());
        Ok(v)
    }

    /// Jacobian of `phi` with respect to `x`: entry `(j, i)` is `d phi_j / d x_i`.
    pub fn basis_jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.domain.check_dim(x)?;
        let degs = self.per_dim_degree();
        let mut vals = Vec::with_capacity(self.dim());
        let mut ders = Vec::with_capacity(self.dim());
        for (i, &deg) in degs.iter().enumerate() {
            let z = self.domain.to_unit(i, x[i]).clamp(-1.0, 1.0);
            let mut v = vec![0.0; deg + 1];
            let mut d = vec![0.0; deg + 1];
            legendre_table_with_derivative(deg, z, &mut v, &mut d);
            let slope = self.domain.unit_slope(i);
            d.iter_mut().for_each(|e| *e *= slope);
            vals.push(v);
            ders.push(d);
        }
        let mut jac = DMatrix::zeros(self.len(), self.dim());
        for (j, term) in self.terms.iter().enumerate() {
            for i in 0..self.dim() {
                let mut prod = 1.0;
                for (k, &n) in term.0.iter().enumerate() {
                    prod *= if k == i { ders[k][n as usize] } else { vals[k][n as usize] };
                }
                jac[(j, i)] = prod;
            }
        }
        Ok(jac)
    }

    /// Row `i` is `phi(points[i])^T`.
    pub fn design_matrix(&self, points: &[Point]) -> Result<DMatrix<f64>> {
        self.design_matrix_with(points, Execution::default())
    }

    pub fn design_matrix_with(&self, points: &[Point], exec: Execution) -> Result<DMatrix<f64>> {
        if points.is_empty() {
            return Err(Error::invalid("design matrix needs at least one point"));
        }
        for p in points {
            self.domain.check_dim(p)?;
        }
        let p = self.len();
        let rows = exec.map(points.len(), |i| {
            let mut row = vec![0.0; p];
            self.fill_row(&points[i], &mut row);
            row
        });
        Ok(DMatrix::from_fn(points.len(), p, |i, j| rows[i][j]))
    }
}
