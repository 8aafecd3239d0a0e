#![allow(dead_code)]

use lingp::approx::garrote_objective;
use lingp::polyopt::{compose_cost, PolyCost};
use lingp::scenarios::{self, build_truth, RunReport};
use lingp::{BasisSpec, Domain, SurrogateModel};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A small garrote problem: design, observations and nonzero weights.
pub struct GarroteCase {
    pub design: DMatrix<f64>,
    pub y: DVector<f64>,
    pub omega: DVector<f64>,
    pub m: f64,
}

pub fn garrote_case(seed: u64) -> GarroteCase {
    let mut r = rng(seed);
    let p = r.random_range(2..=6);
    let n = r.random_range(p + 2..=24);
    let design = DMatrix::from_fn(n, p, |_, _| r.sample::<f64, _>(StandardNormal));
    let omega = DVector::from_fn(p, |_, _| {
        let mag = r.random_range(0.2..2.0);
        if r.random_bool(0.5) { mag } else { -mag }
    });
    let c_true = DVector::from_fn(p, |_, _| if r.random_bool(0.6) { r.random_range(0.0..1.5) } else { 0.0 });
    let noise = DVector::from_fn(n, |_, _| 0.3 * r.sample::<f64, _>(StandardNormal));
    let y = &design * c_true.component_mul(&omega) + noise;
    let m = r.random_range(0.0..p as f64);
    GarroteCase { design, y, omega, m }
}

/// Exact garrote optimum by enumerating active sets.
///
/// For every support `S` the problem restricted to `S` is solved twice, once
/// with the budget slack and once with it binding. The convex optimum is the
/// best candidate that is feasible.
pub fn exhaustive_garrote(case: &GarroteCase) -> (f64, DVector<f64>) {
    let p = case.omega.len();
    let zero = DVector::zeros(p);
    let mut best = (garrote_objective(&case.design, &case.y, &case.omega, &zero), zero);
    let a = DMatrix::from_fn(case.design.nrows(), p, |i, k| case.design[(i, k)] * case.omega[k]);
    for mask in 1u32..(1 << p) {
        let support: Vec<usize> = (0..p).filter(|k| mask & (1 << k) != 0).collect();
        let s = support.len();
        let a_s = DMatrix::from_fn(a.nrows(), s, |i, j| a[(i, support[j])]);
        let gram = a_s.transpose() * &a_s;
        let rhs = a_s.transpose() * &case.y;

        let mut candidates = Vec::new();
        if let Some(c) = gram.clone().lu().solve(&rhs) {
            candidates.push(c);
        }
        let mut kkt = DMatrix::zeros(s + 1, s + 1);
        kkt.view_mut((0, 0), (s, s)).copy_from(&gram);
        for j in 0..s {
            kkt[(j, s)] = 1.0;
            kkt[(s, j)] = 1.0;
        }
        let mut b = DVector::zeros(s + 1);
        b.rows_mut(0, s).copy_from(&rhs);
        b[s] = case.m;
        if let Some(sol) = kkt.lu().solve(&b) {
            candidates.push(sol.rows(0, s).into_owned());
        }
        for c in candidates {
            if c.iter().any(|&v| v < -1e-12) || c.sum() > case.m + 1e-12 {
                continue;
            }
            let mut full = DVector::zeros(p);
            for (j, &k) in support.iter().enumerate() {
                full[k] = c[j].max(0.0);
            }
            let f = garrote_objective(&case.design, &case.y, &case.omega, &full);
            if f < best.0 {
                best = (f, full);
            }
        }
    }
    best
}

/// A univariate model on [-1, 1] of degree at most `max_degree` with decaying
/// random coefficients.
pub fn random_univariate_model(r: &mut ChaCha8Rng, max_degree: u32) -> SurrogateModel {
    let degree = r.random_range(1..=max_degree);
    let terms: Vec<(u32, f64)> =
        (0..=degree).map(|n| (n, r.sample::<f64, _>(StandardNormal) / (1.0 + n as f64))).collect();
    SurrogateModel::univariate(&terms).unwrap()
}

/// A bivariate model on [-1, 1]^2 of total degree at most `max_degree`.
pub fn random_bivariate_model(r: &mut ChaCha8Rng, max_degree: usize) -> SurrogateModel {
    let spec = BasisSpec::total_degree(Domain::symmetric_unit(2), max_degree, 2).unwrap();
    let coefs = spec
        .terms()
        .iter()
        .map(|t| r.sample::<f64, _>(StandardNormal) / (1.0 + t.total_degree() as f64))
        .collect();
    SurrogateModel::from_coefficients(spec, coefs).unwrap()
}

/// Tracking cost on a random model, with the reference inside the model's
/// range and random weights.
pub fn random_cost(r: &mut ChaCha8Rng, model: &SurrogateModel) -> PolyCost {
    let d = model.dim();
    let x_prev: Vec<f64> = (0..d).map(|_| r.random_range(-1.0..1.0)).collect();
    let probe: Vec<f64> = (0..d).map(|_| r.random_range(-1.0..1.0)).collect();
    let y_star = model.predict(&probe).unwrap() + r.random_range(-0.2..0.2);
    let w1 = r.random_range(0.5..50.0);
    let w2 = if r.random_bool(0.1) { 0.0 } else { r.random_range(0.05..2.0) };
    compose_cost(model, y_star, &x_prev, w1, w2).unwrap()
}

/// Smallest cost on an `n`-point uniform grid over the interval.
pub fn grid_min_univariate(cost: &PolyCost, n: usize) -> f64 {
    let (lo, hi) = (cost.domain().lo(0), cost.domain().hi(0));
    (0..n)
        .map(|i| cost.eval(&[lo + (hi - lo) * i as f64 / (n - 1) as f64]))
        .fold(f64::INFINITY, f64::min)
}

/// Smallest cost on an `n x n` grid over the box.
pub fn grid_min_bivariate(cost: &PolyCost, n: usize) -> f64 {
    let dom = cost.domain();
    let at = |i: usize, k: usize| dom.lo(i) + dom.width(i) * k as f64 / (n - 1) as f64;
    let mut best = f64::INFINITY;
    for a in 0..n {
        for b in 0..n {
            best = best.min(cost.eval(&[at(0, a), at(1, b)]));
        }
    }
    best
}

/// Central finite-difference gradient.
pub fn fd_gradient(cost: &PolyCost, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let (mut up, mut dn) = (x.to_vec(), x.to_vec());
            up[i] += h;
            dn[i] -= h;
            (cost.eval(&up) - cost.eval(&dn)) / (2.0 * h)
        })
        .collect()
}

pub const CONTROL_BASES: [&str; 5] = ["ctrl-a1", "ctrl-b", "ctrl-d", "ctrl-d-twostage", "ctrl-bivar"];

/// A control run on one of the built-in plants with a random start, reference,
/// movement weight and bias setting. `bivar` is the fitted bivariate model,
/// shared across runs.
pub fn seeded_control_run(seed: u64, bivar: &SurrogateModel) -> RunReport {
    let mut r = rng(1000 + seed);
    let mut def = scenarios::example(CONTROL_BASES[seed as usize % CONTROL_BASES.len()]).unwrap();
    let truth = build_truth(&def).unwrap();
    let d = def.domain.dim();
    let samples: Vec<f64> = (0..400)
        .map(|_| {
            let x: Vec<f64> = (0..d).map(|_| r.random_range(-1.0..1.0)).collect();
            truth.eval(&x)
        })
        .collect();
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let setup = def.control.as_mut().unwrap();
    setup.config.x0 = (0..d).map(|_| r.random_range(-0.9..0.9)).collect();
    setup.config.y_star = r.random_range(lo..hi);
    setup.config.w2 = r.random_range(0.2..2.0);
    setup.config.bias_adjust = r.random_bool(0.5);
    let model = if d == 2 { bivar.clone() } else { scenarios::control_model(&def).unwrap() };
    scenarios::run_control_with_model(&def, &model, None).unwrap()
}

pub fn fitted_bivariate() -> SurrogateModel {
    scenarios::fit_example(&scenarios::example("bivar").unwrap()).unwrap().0
}

/// Orthonormal Legendre projection of x^2 onto degrees 0 and 2 by a midpoint
/// rule, with the two polynomials written out by hand.
pub fn square_projection() -> (f64, f64) {
    let n = 200_000;
    let h = 2.0 / n as f64;
    let (mut p0, mut p2) = (0.0, 0.0);
    for i in 0..n {
        let x = -1.0 + (i as f64 + 0.5) * h;
        p0 += x * x * (0.5f64).sqrt() * h;
        p2 += x * x * (2.5f64).sqrt() * (1.5 * x * x - 0.5) * h;
    }
    (p0, p2)
}
