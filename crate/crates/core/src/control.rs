//! Predictive control on a fitted surrogate.
//!
//! Each step minimizes `w1 (y* - model(x))^2 + w2 |x - x_prev|^2` and moves
//! to the minimizer. Optional extras: a boosted-`w1` first stage for
//! non-monotone responses, and a bias correction that shifts the model's
//! constant term so it reproduces the latest plant measurement.

use serde::{Deserialize, Serialize};

use crate::approx::{SurrogateModel, SELECTED};
use crate::basis::orthonormal_scale;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::polyopt::{compose_cost, minimize};
use crate::Point;

/// Moves shorter than this count as a stall.
pub const STALL_STEP: f64 = 1e-10;

/// Slack allowed in the per-step descent inequality.
pub const CONTRACTION_TOL: f64 = 1e-9;

/// The plant: maps an input to a measured output.
pub type Probe<'a> = &'a (dyn Fn(&[f64]) -> f64 + Sync);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControlConfig {
    pub y_star: f64,
    pub x0: Point,
    pub w1: f64,
    pub w2: f64,
    pub w1_boost: f64,
    pub switch_eps: f64,
    pub max_steps: usize,
    pub stop_eps: f64,
    pub bias_adjust: bool,
    pub two_stage: bool,
    pub execution: Execution,
}

impl Default for ControlConfig {
    fn default() -> Self {
        ControlConfig {
            y_star: 0.0,
            x0: Vec::new(),
            w1: 1.0,
            w2: 1.0,
            w1_boost: 50.0,
            switch_eps: 0.05,
            max_steps: 100,
            stop_eps: 1e-3,
            bias_adjust: false,
            two_stage: false,
            execution: Execution::default(),
        }
    }
}

impl ControlConfig {
    pub fn new(y_star: f64, x0: Point) -> Self {
        ControlConfig { y_star, x0, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !pos(self.w1) || !pos(self.w1_boost) {
            return Err(Error::invalid("w1 and w1_boost must be positive"));
        }
        if !(self.w2 >= 0.0 && self.w2.is_finite()) {
            return Err(Error::invalid("w2 must be nonnegative"));
        }
        if self.max_steps == 0 {
            return Err(Error::invalid("max_steps must be at least 1"));
        }
        if !(pos(self.stop_eps) && self.switch_eps > self.stop_eps && self.switch_eps.is_finite()) {
            return Err(Error::invalid("need switch_eps > stop_eps > 0"));
        }
        if !self.y_star.is_finite() || self.x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("reference and start point must be finite"));
        }
        Ok(())
    }

    fn weights(&self, stage: Stage) -> (f64, f64) {
        match stage {
            Stage::Approach => (self.w1_boost, self.w2),
            Stage::Track => (self.w1, self.w2),
        }
    }
}

/// `Approach` runs with the boosted output weight, `Track` with the plain one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Approach,
    Track,
}

impl Stage {
    pub fn number(self) -> u8 {
        match self {
            Stage::Approach => 1,
            Stage::Track => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxSteps,
    Stalled,
}

/// One row of a control trace. Step 0 is the starting point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlStep {
    pub k: usize,
    pub x: Point,
    /// Output of the model that chose `x`, at `x`.
    pub y_hat: f64,
    /// Output of that same model at the previous input.
    pub y_hat_start: f64,
    pub y_true: Option<f64>,
    /// Cost at the chosen point.
    pub cost: f64,
    pub stage: Stage,
    pub w1: f64,
    pub w2: f64,
    /// Accumulated offset on the constant coefficient.
    pub bias: f64,
    /// Model gradient at `x`.
    pub slope: Vec<f64>,
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlTrace {
    pub y_star: f64,
    pub steps: Vec<ControlStep>,
    pub terminated: Termination,
    pub contraction_log: Vec<bool>,
}

impl ControlTrace {
    pub fn last(&self) -> &ControlStep {
        self.steps.last().expect("a trace always holds the start point")
    }
}

/// Loop state between steps.
#[derive(Debug, Clone)]
pub struct ControlState {
    pub k: usize,
    pub x: Point,
    pub model: SurrogateModel,
    pub stage: Stage,
    pub bias: f64,
}

/// Value of the constant basis function (`phi_0` in every coordinate).
fn constant_basis_value(d: usize) -> f64 {
    orthonormal_scale(0).powi(d as i32)
}

/// Shifts the constant coefficient so that the model reproduces `y_observed`
/// at `x`. Returns the adjusted model and the applied shift.
pub fn bias_adjust(model: &SurrogateModel, x: &[f64], y_observed: f64) -> Result<(SurrogateModel, f64)> {
    let j = model
        .spec
        .constant_index()
        .ok_or_else(|| Error::invalid("bias adjustment needs a constant term in the basis"))?;
    let delta = (y_observed - model.predict(x)?) / constant_basis_value(model.dim());
    let mut out = model.clone();
    if delta == 0.0 {
        return Ok((out, 0.0));
    }
    out.coefficients[j] += delta;
    if out.c_hat[j] <= SELECTED {
        out.c_hat[j] = 1.0;
    }
    out.omega_tilde[j] = out.coefficients[j] / out.c_hat[j];
    Ok((out, delta))
}

/// Moves from `state` to the minimizer of the current cost.
pub fn control_step(
    state: &ControlState,
    probe: Option<Probe>,
    cfg: &ControlConfig,
) -> Result<(ControlState, ControlStep)> {
    let model = &state.model;
    let y_hat_start = model.predict(&state.x)?;
    let mut stage = state.stage;
    if stage == Stage::Approach && (cfg.y_star - y_hat_start).abs() < cfg.switch_eps {
        stage = Stage::Track;
    }
    let (w1, w2) = cfg.weights(stage);
    let cost = compose_cost(model, cfg.y_star, &state.x, w1, w2)?;
    let best = minimize(&cost, cfg.execution)?;
    let x = best.x;
    let y_hat = model.predict(&x)?;
    let y_true = probe.map(|f| f(&x));
    let step = ControlStep {
        k: state.k + 1,
        x: x.clone(),
        y_hat,
        y_hat_start,
        y_true,
        cost: best.value,
        stage,
        w1,
        w2,
        bias: state.bias,
        slope: model.gradient(&x)?,
        certified: best.certified,
    };
    let (model, bias) = match y_true {
        Some(y) if cfg.bias_adjust => {
            let (m, delta) = bias_adjust(model, &x, y)?;
            (m, state.bias + delta)
        }
        _ => (model.clone(), state.bias),
    };
    Ok((ControlState { k: state.k + 1, x, model, stage, bias }, step))
}

/// Runs the control loop until the output is within `stop_eps` of the
/// reference, the input stops moving, or `max_steps` is reached.
///
/// With a probe, convergence is judged on the plant output; without one, on
/// the model output.
pub fn run_control(model: &SurrogateModel, probe: Option<Probe>, cfg: &ControlConfig) -> Result<ControlTrace> {
    cfg.validate()?;
    let dom = model.spec.domain();
    dom.check_dim(&cfg.x0)?;
    if !dom.contains(&cfg.x0, 0.0) {
        return Err(Error::invalid("start point lies outside the model domain"));
    }
    let stage = if cfg.two_stage { Stage::Approach } else { Stage::Track };
    let (w1, w2) = cfg.weights(stage);
    let y0 = model.predict(&cfg.x0)?;
    let y_true0 = probe.map(|f| f(&cfg.x0));
    let mut steps = vec![ControlStep {
        k: 0,
        x: cfg.x0.clone(),
        y_hat: y0,
        y_hat_start: y0,
        y_true: y_true0,
        cost: w1 * (cfg.y_star - y0).powi(2),
        stage,
        w1,
        w2,
        bias: 0.0,
        slope: model.gradient(&cfg.x0)?,
        certified: true,
    }];
    let mut state = ControlState { k: 0, x: cfg.x0.clone(), model: model.clone(), stage, bias: 0.0 };
    if let (Some(y), true) = (y_true0, cfg.bias_adjust) {
        let (m, delta) = bias_adjust(model, &cfg.x0, y)?;
        state.model = m;
        state.bias = delta;
    }
    let gap = |s: &ControlStep| (cfg.y_star - s.y_true.unwrap_or(s.y_hat)).abs();
    let mut terminated = Termination::MaxSteps;
    if gap(&steps[0]) <= cfg.stop_eps {
        terminated = Termination::Converged;
    } else {
        for _ in 0..cfg.max_steps {
            let (next, step) = control_step(&state, probe, cfg)?;
            let moved = step.x.iter().zip(&state.x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let done = gap(&step) <= cfg.stop_eps;
            steps.push(step);
            state = next;
            if done {
                terminated = Termination::Converged;
                break;
            }
            if moved < STALL_STEP {
                terminated = Termination::Stalled;
                break;
            }
        }
    }
    let mut trace = ControlTrace { y_star: cfg.y_star, steps, terminated, contraction_log: Vec::new() };
    trace.contraction_log = trace.steps.iter().enumerate().map(|(k, _)| step_contracts(&trace, k)).collect();
    Ok(trace)
}

/// `w1 (y* - y_k)^2 + w2 |x_k - x_{k-1}|^2 <= w1 (y* - y_{k-1})^2`, with both
/// outputs taken from the model that chose `x_k`.
fn step_contracts(trace: &ControlTrace, k: usize) -> bool {
    if k == 0 {
        return true;
    }
    let (prev, cur) = (&trace.steps[k - 1], &trace.steps[k]);
    let dx2: f64 = cur.x.iter().zip(&prev.x).map(|(a, b)| (a - b).powi(2)).sum();
    let lhs = cur.w1 * (trace.y_star - cur.y_hat).powi(2) + cur.w2 * dx2;
    let rhs = cur.w1 * (trace.y_star - cur.y_hat_start).powi(2);
    lhs <= rhs + CONTRACTION_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    /// Same-stage steps checked.
    pub checked: usize,
    pub violations: usize,
    /// `prod_k (1 + (w1 / w2) |grad y_k|^2)`; absent when `w2 = 0`.
    pub product: Option<f64>,
    /// `|y* - y_0| / sqrt(product)`, the gap the product alone guarantees.
    pub implied_gap_bound: Option<f64>,
    /// Whether `|y* - y_hat|` shrank at every same-stage step.
    pub monotone_gap: bool,
}

/// Audits a trace against the descent inequality and evaluates the growth
/// product behind the convergence condition for weights `w1`, `w2`.
pub fn check_contraction(trace: &ControlTrace, w1: f64, w2: f64) -> ContractionReport {
    let mut checked = 0;
    let mut violations = 0;
    let mut monotone_gap = true;
    for k in 1..trace.steps.len() {
        let (prev, cur) = (&trace.steps[k - 1], &trace.steps[k]);
        if prev.stage != cur.stage {
            continue;
        }
        checked += 1;
        if !step_contracts(trace, k) {
            violations += 1;
        }
        if (trace.y_star - cur.y_hat).abs() > (trace.y_star - cur.y_hat_start).abs() + CONTRACTION_TOL {
            monotone_gap = false;
        }
    }
    let (product, implied_gap_bound) = if w2 > 0.0 {
        let p: f64 = trace.steps[1..]
            .iter()
            .map(|s| 1.0 + w1 / w2 * s.slope.iter().map(|g| g * g).sum::<f64>())
            .product();
        let gap0 = (trace.y_star - trace.steps[0].y_hat).abs();
        (Some(p), Some(gap0 / p.sqrt()))
    } else {
        (None, None)
    };
    ContractionReport { checked, violations, product, implied_gap_bound, monotone_gap }
}
