//! Multivariate polynomials in the monomial basis, and univariate real roots.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::basis::{legendre_monomial, BasisSpec};

/// Sparse coefficient table keyed by exponent vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    dim: usize,
    coeffs: BTreeMap<Vec<u32>, f64>,
}

impl Polynomial {
    pub fn zero(dim: usize) -> Self {
        Polynomial { dim, coeffs: BTreeMap::new() }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(vec![0; dim], c);
        p
    }

    /// `a * x_i + b`.
    pub fn affine(dim: usize, i: usize, a: f64, b: f64) -> Self {
        let mut p = Self::constant(dim, b);
        let mut e = vec![0; dim];
        e[i] = 1;
        p.add_term(e, a);
        p
    }

    /// Univariate-in-`x_i` polynomial from ascending coefficients.
    pub fn in_variable(dim: usize, i: usize, ascending: &[f64]) -> Self {
        let mut p = Self::zero(dim);
        for (k, &c) in ascending.iter().enumerate() {
            let mut e = vec![0; dim];
            e[i] = k as u32;
            p.add_term(e, c);
        }
        p
    }

    pub fn add_term(&mut self, exponent: Vec<u32>, c: f64) {
        debug_assert_eq!(exponent.len(), self.dim);
        if c == 0.0 {
            return;
        }
        *self.coeffs.entry(exponent).or_insert(0.0) += c;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, f64)> {
        self.coeffs.iter().map(|(e, &c)| (e, c))
    }

    pub fn coefficient(&self, exponent: &[u32]) -> f64 {
        self.coeffs.get(exponent).copied().unwrap_or(0.0)
    }

    pub fn degree(&self) -> usize {
        self.coeffs
            .iter()
            .filter(|(_, &c)| c != 0.0)
            .map(|(e, _)| e.iter().map(|&k| k as usize).sum())
            .max()
            .unwrap_or(0)
    }

    pub fn scale(&self, s: f64) -> Self {
        Polynomial {
            dim: self.dim,
            coeffs: self.coeffs.iter().map(|(e, c)| (e.clone(), c * s)).collect(),
        }
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut out = Self::constant(self.dim, 1.0);
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        self.coeffs
            .iter()
            .map(|(e, c)| c * e.iter().zip(x).map(|(&k, v)| v.powi(k as i32)).product::<f64>())
            .sum()
    }

    /// Partial derivative with respect to `x_i`.
    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Self::zero(self.dim);
        for (e, &c) in &self.coeffs {
            if e[i] > 0 {
                let mut e2 = e.clone();
                e2[i] -= 1;
                out.add_term(e2, c * e[i] as f64);
            }
        }
        out
    }

    pub fn gradient(&self) -> Vec<Polynomial> {
        (0..self.dim).map(|i| self.derivative(i)).collect()
    }

    /// Ascending coefficients of a univariate polynomial.
    pub fn univariate_coeffs(&self) -> Vec<f64> {
        assert_eq!(self.dim, 1, "univariate_coeffs on a {}-variate polynomial", self.dim);
        let mut out = vec![0.0; self.degree() + 1];
        for (e, &c) in &self.coeffs {
            out[e[0] as usize] += c;
        }
        out
    }

    /// Expands a Legendre-basis model `sum_j c_j phi_j(x)` over `spec` into
    /// monomials of the raw input `x`.
    pub fn from_legendre(spec: &BasisSpec, coefficients: &[f64]) -> Self {
        let d = spec.dim();
        let degs = spec.per_dim_degree();
        // phi_n(a x_i + b) for every dimension and degree in use
        let factors: Vec<Vec<Polynomial>> = (0..d)
            .map(|i| {
                let slope = spec.domain().unit_slope(i);
                let z = Polynomial::affine(d, i, slope, -1.0 - slope * spec.domain().lo(i));
                let mut zpows = vec![Polynomial::constant(d, 1.0)];
                for _ in 0..degs[i] {
                    let next = zpows.last().unwrap() * &z;
                    zpows.push(next);
                }
                (0..=degs[i])
                    .map(|n| {
                        legendre_monomial(n)
                            .iter()
                            .enumerate()
                            .fold(Polynomial::zero(d), |acc, (k, &a)| acc + zpows[k].scale(a))
                    })
                    .collect()
            })
            .collect();
        let mut out = Polynomial::zero(d);
        for (term, &c) in spec.terms().iter().zip(coefficients) {
            if c == 0.0 {
                continue;
            }
            let mut prod = Polynomial::constant(d, c);
            for (i, &n) in term.0.iter().enumerate() {
                prod = &prod * &factors[i][n as usize];
            }
            out = out + prod;
        }
        out
    }
}

impl Add for Polynomial {
    type Output = Polynomial;
    fn add(mut self, rhs: Polynomial) -> Polynomial {
        for (e, c) in rhs.coeffs {
            self.add_term(e, c);
        }
        self
    }
}

impl Sub for Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: Polynomial) -> Polynomial {
        self + rhs.scale(-1.0)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero(self.dim);
        for (ea, &ca) in &self.coeffs {
            for (eb, &cb) in &rhs.coeffs {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }
}

/// Horner evaluation of ascending coefficients.
#[inline]
pub fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

/// Ascending coefficients of the derivative.
pub fn derivative_coeffs(coeffs: &[f64]) -> Vec<f64> {
    coeffs.iter().enumerate().skip(1).map(|(k, &c)| c * k as f64).collect()
}

/// Drops negligible leading coefficients.
pub fn trim(coeffs: &[f64]) -> &[f64] {
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut n = coeffs.len();
    while n > 0 && coeffs[n - 1].abs() <= 1e-14 * scale {
        n -= 1;
    }
    &coeffs[..n]
}

/// Complex roots `(re, im)` of a polynomial via companion-matrix eigenvalues.
///
/// Returns an empty list for constants.
pub fn roots(coeffs: &[f64]) -> Vec<(f64, f64)> {
    let c = trim(coeffs);
    if c.len() <= 1 {
        return Vec::new();
    }
    let n = c.len() - 1;
    if n == 1 {
        return vec![(-c[0] / c[1], 0.0)];
    }
    let lead = c[n];
    let mut comp = DMatrix::zeros(n, n);
    for i in 1..n {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        comp[(i, n - 1)] = -c[i] / lead;
    }
    comp.complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect()
}

/// Real parts of roots whose imaginary part is below `imag_tol * max(1, |re|)`,
/// refined by a few Newton steps.
pub fn real_roots(coeffs: &[f64], imag_tol: f64) -> Vec<f64> {
    let c = trim(coeffs);
    let dc = derivative_coeffs(c);
    roots(c)
        .into_iter()
        .filter(|(re, im)| im.abs() <= imag_tol * re.abs().max(1.0))
        .map(|(re, _)| polish(c, &dc, re))
        .collect()
}

fn polish(c: &[f64], dc: &[f64], mut x: f64) -> f64 {
    let mut fx = horner(c, x).abs();
    for _ in 0..8 {
        let d = horner(dc, x);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let cand = x - horner(c, x) / d;
        let fc = horner(c, cand).abs();
        if !(fc < fx) {
            break;
        }
        x = cand;
        fx = fc;
    }
    x
}
