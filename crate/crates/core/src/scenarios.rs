//! Named, fully seeded example runs: data generation, fitting, baselines,
//! control, and artifact files.

use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::approx::{fit_surrogate, rmse, FitOptions, GarrotePath, SurrogateModel};
use crate::basis::{BasisSpec, Domain, MultiIndex};
use crate::control::{check_contraction, run_control, ContractionReport, ControlConfig, ControlTrace};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::io::{self, Table};
use crate::kernel::{correlation_matrix, jittered_cholesky, GpRegressor, KernelConfig, TrainingSet};
use crate::polynomial::Polynomial;
use crate::Point;

/// Curve files keep at most this many rows.
pub const MAX_CURVE_ROWS: usize = 10_000;

/// Ground-truth response of an example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Truth {
    /// `x^2`
    Square,
    /// `exp(rate * x)`
    Exp { rate: f64 },
    /// `x sin(pi x)`
    XSinPiX,
    /// `x sin(x)`
    XSinX,
    /// `x^3 - x / 2`
    Cubic,
    /// A draw from a zero-mean unit-variance squared-exponential GP with
    /// kernel `exp(-d^2 / (2 l^2))`, taken on a grid and interpolated by the
    /// same kernel. The draw seed defaults to the sampling seed.
    GpDraw {
        length_scale: f64,
        grid: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
    /// `exp(-(x - mu)^T S^-1 (x - mu) / 2) / sqrt(2 pi |S|)`
    Gaussian2 { mean: [f64; 2], cov: [[f64; 2]; 2] },
    /// `distance * (gasdol / mpg - utildol / mpkwh)`; inputs ordered as
    /// distance, mpkwh, mpg, utildol, gasdol.
    EvCost,
}

/// Factor levels and distance distribution of the EV example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvLevels {
    pub mpkwh: [f64; 3],
    pub mpg: [f64; 3],
    pub utildol: [f64; 3],
    pub gasdol: [f64; 3],
    /// Log-scale location and spread of the daily distance.
    pub distance_mu: f64,
    pub distance_sigma: f64,
    /// Distances are clipped to `[0, distance_max]`.
    pub distance_max: f64,
    pub train_per_treatment: usize,
    pub test_per_treatment: usize,
}

impl Default for EvLevels {
    fn default() -> Self {
        EvLevels {
            mpkwh: [2.5, 3.5, 4.5],
            mpg: [25.0, 35.0, 45.0],
            utildol: [0.08, 0.12, 0.16],
            gasdol: [2.5, 3.5, 4.5],
            distance_mu: 3.0,
            distance_sigma: 0.5,
            distance_max: 150.0,
            train_per_treatment: 10,
            test_per_treatment: 2920,
        }
    }
}

impl EvLevels {
    pub fn domain(&self) -> Result<Domain> {
        let span = |l: &[f64; 3]| {
            let lo = l.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            [lo, hi]
        };
        Domain::new(vec![
            [0.0, self.distance_max],
            span(&self.mpkwh),
            span(&self.mpg),
            span(&self.utildol),
            span(&self.gasdol),
        ])
    }

    fn treatments(&self) -> Vec<[f64; 4]> {
        let mut out = Vec::with_capacity(81);
        for &a in &self.mpkwh {
            for &b in &self.mpg {
                for &c in &self.utildol {
                    for &d in &self.gasdol {
                        out.push([a, b, c, d]);
                    }
                }
            }
        }
        out
    }
}

/// How inputs are drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Design {
    /// Independent uniform points in the domain box.
    Uniform,
    /// Full 3^4 factorial on the discrete factors, random distances.
    EvFactorial(EvLevels),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    pub train_size: usize,
    pub test_size: usize,
    /// Standard deviation of the Gaussian noise on training outputs. Test
    /// outputs are always noise-free truth values.
    pub noise_sd: f64,
    pub seed: u64,
    pub design: Design,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub max_degree: usize,
    pub max_interaction: usize,
    /// Limits every coordinate's degree (applied after enumeration).
    #[serde(default)]
    pub max_degree_per_variable: Option<u32>,
    pub tau2: f64,
    /// Defaults to the sampling noise variance.
    #[serde(default)]
    pub sigma2: Option<f64>,
    /// Defaults to `5 / width^2` per coordinate.
    #[serde(default)]
    pub corr_params: Option<Vec<f64>>,
    #[serde(default)]
    pub m_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub prior_points: Option<usize>,
}

/// Where a control example gets its model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSource {
    /// A univariate model on `[-1, 1]` given by `(degree, coefficient)`.
    Given { terms: Vec<(u32, f64)> },
    /// Fit from the example's own sampling and fit settings.
    Fit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSetup {
    pub model: ModelSource,
    pub config: ControlConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleDef {
    pub name: String,
    pub description: String,
    pub truth: Truth,
    pub domain: Domain,
    pub sampling: Sampling,
    #[serde(default)]
    pub fit: Option<FitConfig>,
    #[serde(default)]
    pub control: Option<ControlSetup>,
    /// Fit a GP on the same data and report its RMSPE.
    #[serde(default)]
    pub gp_baseline: bool,
    /// Fit ordinary least squares on the same basis and report its RMSE.
    #[serde(default)]
    pub ols_baseline: bool,
    #[serde(default)]
    pub execution: Execution,
}

impl ExampleDef {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.sampling.seed = seed;
        self
    }

    pub fn is_control(&self) -> bool {
        self.control.is_some()
    }

    pub fn validate(&self) -> Result<()> {
        if self.fit.is_none() && self.control.is_none() {
            return Err(Error::invalid(format!("example `{}` has neither fit nor control settings", self.name)));
        }
        if let Some(c) = &self.control {
            if c.model == ModelSource::Fit && self.fit.is_none() {
                return Err(Error::invalid("control model source `fit` needs fit settings"));
            }
        }
        if !(self.sampling.noise_sd >= 0.0) {
            return Err(Error::invalid("noise_sd must be nonnegative"));
        }
        let expect = match &self.truth {
            Truth::Gaussian2 { .. } => 2,
            Truth::EvCost => 5,
            _ => 1,
        };
        if self.domain.dim() != expect {
            return Err(Error::DimensionMismatch { expected: expect, got: self.domain.dim() });
        }
        if let Design::EvFactorial(levels) = &self.sampling.design {
            if levels.domain()? != self.domain {
                return Err(Error::invalid("EV domain must match the factor levels"));
            }
        }
        Ok(())
    }
}

/// A truth function ready for evaluation.
pub struct TruthFn {
    kind: Compiled,
}

enum Compiled {
    Closed(Truth),
    Draw(GpRegressor),
    Gauss { mean: [f64; 2], inv: [[f64; 2]; 2], norm: f64 },
}

impl TruthFn {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.kind {
            Compiled::Closed(t) => match t {
                Truth::Square => x[0] * x[0],
                Truth::Exp { rate } => (rate * x[0]).exp(),
                Truth::XSinPiX => x[0] * (std::f64::consts::PI * x[0]).sin(),
                Truth::XSinX => x[0] * x[0].sin(),
                Truth::Cubic => x[0].powi(3) - 0.5 * x[0],
                Truth::EvCost => x[0] * (x[4] / x[2] - x[3] / x[1]),
                Truth::GpDraw { .. } | Truth::Gaussian2 { .. } => unreachable!("compiled separately"),
            },
            Compiled::Draw(gp) => gp.predict(x).expect("dimension checked at build time"),
            Compiled::Gauss { mean, inv, norm } => {
                let (a, b) = (x[0] - mean[0], x[1] - mean[1]);
                let q = a * a * inv[0][0] + 2.0 * a * b * inv[0][1] + b * b * inv[1][1];
                norm * (-0.5 * q).exp()
            }
        }
    }
}

const TRAIN_STREAM: u64 = 0;
const TEST_STREAM: u64 = 1;
const DRAW_STREAM: u64 = 2;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Prepares the truth of `def` (drawing the GP sample where needed).
pub fn build_truth(def: &ExampleDef) -> Result<TruthFn> {
    let kind = match &def.truth {
        Truth::GpDraw { length_scale, grid, seed } => {
            if !(*length_scale > 0.0) || *grid < 2 {
                return Err(Error::invalid("GP draw needs a positive length scale and at least 2 grid points"));
            }
            let cfg = KernelConfig::new(1.0, 0.0, vec![1.0 / (2.0 * length_scale * length_scale)])?;
            let pts = crate::approx::space_filling(&def.domain, *grid)?;
            let cov = correlation_matrix(&cfg, &pts)?;
            let chol = jittered_cholesky(cov, 1e-8, "GP draw covariance")?;
            let mut r = rng(seed.unwrap_or(def.sampling.seed), DRAW_STREAM);
            let z = DVector::from_iterator(*grid, (0..*grid).map(|_| StandardNormal.sample(&mut r)));
            let values = chol.l() * z;
            let set = TrainingSet::new(pts, values.iter().copied().collect())?;
            Compiled::Draw(GpRegressor::fit(&cfg, &set)?)
        }
        Truth::Gaussian2 { mean, cov } => {
            let det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
            if !(det > 0.0) || cov[0][1] != cov[1][0] {
                return Err(Error::invalid("covariance must be symmetric positive definite"));
            }
            let inv = [[cov[1][1] / det, -cov[0][1] / det], [-cov[1][0] / det, cov[0][0] / det]];
            let norm = 1.0 / (2.0 * std::f64::consts::PI * det).sqrt();
            Compiled::Gauss { mean: *mean, inv, norm }
        }
        other => Compiled::Closed(other.clone()),
    };
    Ok(TruthFn { kind })
}

fn uniform_points(domain: &Domain, n: usize, r: &mut ChaCha8Rng) -> Vec<Point> {
    (0..n)
        .map(|_| (0..domain.dim()).map(|i| r.random_range(domain.lo(i)..=domain.hi(i))).collect())
        .collect()
}

fn ev_points(levels: &EvLevels, per_treatment: usize, r: &mut ChaCha8Rng) -> Result<Vec<Point>> {
    let dist = LogNormal::new(levels.distance_mu, levels.distance_sigma)
        .map_err(|e| Error::invalid(format!("distance distribution: {e}")))?;
    let mut out = Vec::with_capacity(81 * per_treatment);
    for t in levels.treatments() {
        for _ in 0..per_treatment {
            let d: f64 = dist.sample(r);
            out.push(vec![d.min(levels.distance_max), t[0], t[1], t[2], t[3]]);
        }
    }
    Ok(out)
}

/// Training and test sets of a modeling example.
pub fn generate_example(def: &ExampleDef) -> Result<(TrainingSet, TrainingSet)> {
    def.validate()?;
    let truth = build_truth(def)?;
    let s = &def.sampling;
    let (mut r_train, mut r_test) = (rng(s.seed, TRAIN_STREAM), rng(s.seed, TEST_STREAM));
    let (x_train, x_test) = match &s.design {
        Design::Uniform => {
            (uniform_points(&def.domain, s.train_size, &mut r_train), uniform_points(&def.domain, s.test_size, &mut r_test))
        }
        Design::EvFactorial(levels) => (
            ev_points(levels, levels.train_per_treatment, &mut r_train)?,
            ev_points(levels, levels.test_per_treatment, &mut r_test)?,
        ),
    };
    let noise = Normal::new(0.0, s.noise_sd).map_err(|e| Error::invalid(format!("noise: {e}")))?;
    let y_train = x_train
        .iter()
        .map(|x| truth.eval(x) + if s.noise_sd > 0.0 { noise.sample(&mut r_train) } else { 0.0 })
        .collect();
    let y_test = x_test.iter().map(|x| truth.eval(x)).collect();
    Ok((TrainingSet::new(x_train, y_train)?, TrainingSet::new(x_test, y_test)?))
}

fn basis_of(def: &ExampleDef, fit: &FitConfig) -> Result<BasisSpec> {
    let spec = BasisSpec::total_degree(def.domain.clone(), fit.max_degree, fit.max_interaction)?;
    match fit.max_degree_per_variable {
        None => Ok(spec),
        Some(cap) => {
            let terms: Vec<MultiIndex> =
                spec.terms().iter().filter(|t| t.0.iter().all(|&n| n <= cap)).cloned().collect();
            BasisSpec::from_terms(def.domain.clone(), terms)
        }
    }
}

fn kernel_of(def: &ExampleDef, fit: &FitConfig) -> Result<KernelConfig> {
    let sigma2 = fit.sigma2.unwrap_or(def.sampling.noise_sd.powi(2));
    let k = fit.corr_params.clone().unwrap_or_else(|| KernelConfig::default_corr_params(&def.domain));
    KernelConfig::new(fit.tau2, sigma2, k)
}

/// Fits the example's surrogate. Returns the data alongside.
pub fn fit_example(def: &ExampleDef) -> Result<(SurrogateModel, GarrotePath, TrainingSet, TrainingSet)> {
    let fit = def.fit.as_ref().ok_or_else(|| Error::invalid(format!("example `{}` has no fit settings", def.name)))?;
    let (train, test) = generate_example(def)?;
    let spec = basis_of(def, fit)?;
    let cfg = kernel_of(def, fit)?;
    let opts = FitOptions {
        m_grid: fit.m_grid.clone(),
        prior_points: fit.prior_points,
        execution: def.execution,
        ..Default::default()
    };
    let (model, path) = fit_surrogate(&spec, &cfg, &train, &test, &opts)?;
    Ok((model, path, train, test))
}

/// Least-squares fit on the same basis. Returns Legendre coefficients.
pub fn ordinary_least_squares(spec: &BasisSpec, train: &TrainingSet) -> Result<Vec<f64>> {
    let phi = spec.design_matrix(&train.inputs)?;
    let svd = phi.svd(true, true);
    let coef = svd
        .solve(&train.outputs_vector(), 1e-12)
        .map_err(|e| Error::IllConditioned { what: "least squares", detail: e.to_string() })?;
    Ok(coef.iter().copied().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermSummary {
    pub term: String,
    pub coefficient: f64,
}

/// Linear coefficients of the raw inputs once a model is expanded into
/// monomials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MainEffects {
    pub surrogate: Vec<f64>,
    pub baseline: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSummary {
    pub terminated: crate::control::Termination,
    pub steps: usize,
    pub final_x: Point,
    pub final_output: Option<f64>,
    pub contraction: ContractionReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub example: String,
    pub seed: u64,
    pub rmspe: Option<f64>,
    pub baseline: Option<String>,
    pub baseline_rmspe: Option<f64>,
    pub budget: Option<f64>,
    pub order: Option<usize>,
    pub model_summary: Vec<TermSummary>,
    pub main_effects: Option<MainEffects>,
    pub control: Option<ControlSummary>,
    pub trace: Option<ControlTrace>,
    pub files: Vec<PathBuf>,
}

impl RunReport {
    fn new(def: &ExampleDef) -> Self {
        RunReport {
            example: def.name.clone(),
            seed: def.sampling.seed,
            rmspe: None,
            baseline: None,
            baseline_rmspe: None,
            budget: None,
            order: None,
            model_summary: Vec::new(),
            main_effects: None,
            control: None,
            trace: None,
            files: Vec::new(),
        }
    }
}

fn summarize(model: &SurrogateModel) -> Vec<TermSummary> {
    model
        .selected_terms()
        .into_iter()
        .map(|(t, c)| TermSummary { term: t.to_string(), coefficient: c })
        .collect()
}

fn linear_coefficients(p: &Polynomial) -> Vec<f64> {
    (0..p.dim())
        .map(|i| {
            let mut e = vec![0; p.dim()];
            e[i] = 1;
            p.coefficient(&e)
        })
        .collect()
}

/// Test-set curve, sorted by the first coordinate, capped at
/// [`MAX_CURVE_ROWS`] rows.
pub fn curve_table(test: &TrainingSet, predictions: &[f64]) -> Table {
    let d = test.dim();
    let mut headers: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    headers.extend(["y_true", "y_pred"].map(String::from));
    let mut idx: Vec<usize> = (0..test.len().min(MAX_CURVE_ROWS)).collect();
    idx.sort_by(|&a, &b| test.inputs[a][0].total_cmp(&test.inputs[b][0]));
    let mut t = Table::new(headers);
    for i in idx {
        let mut row = test.inputs[i].clone();
        row.extend([test.outputs[i], predictions[i]]);
        t.push(row);
    }
    t
}

fn path_table(path: &GarrotePath) -> Table {
    let mut t = Table::new(["budget", "train_sse", "test_rmspe", "selected"].map(String::from).to_vec());
    for i in 0..path.m_grid.len() {
        let n = path.solutions[i].iter().filter(|&&c| c > crate::approx::SELECTED).count();
        t.push(vec![path.m_grid[i], path.train_sse[i], path.test_rmspe[i], n as f64]);
    }
    t
}

fn emit(out: Option<&Path>, name: &str, report: &mut RunReport, write: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
    if let Some(dir) = out {
        let p = dir.join(name);
        write(&p)?;
        report.files.push(p);
    }
    Ok(())
}

/// Runs a modeling example; writes artifacts into `out` when given.
pub fn run_modeling(def: &ExampleDef, out: Option<&Path>) -> Result<RunReport> {
    let (model, path, train, test) = fit_example(def)?;
    let mut report = RunReport::new(def);
    let pred = model.predict_many(&test.inputs)?;
    report.rmspe = Some(rmse(&pred, &test.outputs));
    report.budget = model.provenance.as_ref().map(|p| p.budget);
    report.order = Some(model.order());
    report.model_summary = summarize(&model);
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
    }
    emit(out, "model.json", &mut report, |p| io::write_model(p, &model))?;
    emit(out, "curve.csv", &mut report, |p| io::write_csv(p, &curve_table(&test, &pred)))?;
    emit(out, "path.csv", &mut report, |p| io::write_csv(p, &path_table(&path)))?;

    if def.gp_baseline {
        let fit = def.fit.as_ref().expect("fit_example checked");
        let gp = GpRegressor::fit(&kernel_of(def, fit)?, &train)?;
        let gp_pred: Vec<f64> = def
            .execution
            .map(test.len(), |i| gp.predict(&test.inputs[i]))
            .into_iter()
            .collect::<Result<_>>()?;
        report.baseline = Some("gp".into());
        report.baseline_rmspe = Some(rmse(&gp_pred, &test.outputs));
        emit(out, "gp_curve.csv", &mut report, |p| io::write_csv(p, &curve_table(&test, &gp_pred)))?;
    }
    if def.ols_baseline {
        let coef = ordinary_least_squares(&model.spec, &train)?;
        let ols = SurrogateModel::from_coefficients(model.spec.clone(), coef)?;
        let ols_pred = ols.predict_many(&test.inputs)?;
        report.baseline = Some("ols".into());
        report.baseline_rmspe = Some(rmse(&ols_pred, &test.outputs));
        report.main_effects = Some(MainEffects {
            surrogate: linear_coefficients(&model.polynomial()),
            baseline: linear_coefficients(&ols.polynomial()),
        });
        emit(out, "ols_curve.csv", &mut report, |p| io::write_csv(p, &curve_table(&test, &ols_pred)))?;
    }
    finish(out, report)
}

/// Writes `report.json` (listing itself among the files) when `out` is set.
fn finish(out: Option<&Path>, mut report: RunReport) -> Result<RunReport> {
    if let Some(dir) = out {
        let p = dir.join("report.json");
        report.files.push(p.clone());
        std::fs::write(&p, serde_json::to_string_pretty(&report).expect("reports serialize"))?;
    }
    Ok(report)
}

/// The model a control example drives.
pub fn control_model(def: &ExampleDef) -> Result<SurrogateModel> {
    let setup = def.control.as_ref().ok_or_else(|| Error::invalid(format!("`{}` is not a control example", def.name)))?;
    match &setup.model {
        ModelSource::Given { terms } => SurrogateModel::univariate(terms),
        ModelSource::Fit => Ok(fit_example(def)?.0),
    }
}

/// Runs a control example against its truth; writes artifacts into `out`
/// when given.
pub fn run_control_example(def: &ExampleDef, out: Option<&Path>) -> Result<RunReport> {
    def.validate()?;
    let model = control_model(def)?;
    run_control_with_model(def, &model, out)
}

/// Like [`run_control_example`] with a caller-supplied model.
pub fn run_control_with_model(def: &ExampleDef, model: &SurrogateModel, out: Option<&Path>) -> Result<RunReport> {
    let setup = def.control.as_ref().ok_or_else(|| Error::invalid(format!("`{}` is not a control example", def.name)))?;
    let truth = build_truth(def)?;
    let probe = |x: &[f64]| truth.eval(x);
    let trace = run_control(model, Some(&probe), &setup.config)?;
    let mut report = RunReport::new(def);
    report.order = Some(model.order());
    report.model_summary = summarize(model);
    let last = trace.last();
    report.control = Some(ControlSummary {
        terminated: trace.terminated,
        steps: trace.steps.len() - 1,
        final_x: last.x.clone(),
        final_output: last.y_true,
        contraction: check_contraction(&trace, setup.config.w1, setup.config.w2),
    });
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
    }
    emit(out, "model.json", &mut report, |p| io::write_model(p, model))?;
    emit(out, "trace.csv", &mut report, |p| io::write_csv(p, &io::trace_table(&trace)))?;
    report.trace = Some(trace);
    finish(out, report)
}

/// Runs any example by definition.
pub fn run_example(def: &ExampleDef, out: Option<&Path>) -> Result<RunReport> {
    if def.is_control() {
        run_control_example(def, out)
    } else {
        run_modeling(def, out)
    }
}

pub const EXAMPLE_NAMES: [&str; 12] = [
    "uni-a",
    "uni-b",
    "uni-c",
    "uni-d",
    "bivar",
    "ev",
    "ctrl-a1",
    "ctrl-a2",
    "ctrl-b",
    "ctrl-bivar",
    "ctrl-d",
    "ctrl-d-twostage",
];

/// Default seed of every built-in example.
pub const DEFAULT_SEED: u64 = 0;

fn uni_sampling(noise_sd: f64) -> Sampling {
    Sampling { train_size: 100, test_size: 10_000, noise_sd, seed: DEFAULT_SEED, design: Design::Uniform }
}

fn uni_fit(tau2: f64) -> FitConfig {
    FitConfig {
        max_degree: 10,
        max_interaction: 1,
        max_degree_per_variable: None,
        tau2,
        sigma2: None,
        corr_params: None,
        m_grid: None,
        prior_points: None,
    }
}

fn bivar_truth() -> Truth {
    Truth::Gaussian2 { mean: [0.0, 0.0], cov: [[0.25, 0.3], [0.3, 1.0]] }
}

fn bivar_sampling() -> Sampling {
    Sampling { train_size: 300, test_size: 10_000, noise_sd: 0.02, seed: DEFAULT_SEED, design: Design::Uniform }
}

fn bivar_fit() -> FitConfig {
    FitConfig { max_degree: 6, max_interaction: 2, ..uni_fit(1.0) }
}

fn control_def(
    name: &str,
    description: &str,
    truth: Truth,
    model: Vec<(u32, f64)>,
    y_star: f64,
    x0: f64,
    two_stage: bool,
) -> ExampleDef {
    let mut config = ControlConfig::new(y_star, vec![x0]);
    config.bias_adjust = true;
    config.two_stage = two_stage;
    ExampleDef {
        name: name.into(),
        description: description.into(),
        truth,
        domain: Domain::symmetric_unit(1),
        sampling: uni_sampling(0.0),
        fit: None,
        control: Some(ControlSetup { model: ModelSource::Given { terms: model }, config }),
        gp_baseline: false,
        ols_baseline: false,
        execution: Execution::default(),
    }
}

/// The built-in example called `name`.
pub fn example(name: &str) -> Result<ExampleDef> {
    let unit = Domain::symmetric_unit(1);
    let modeling = |name: &str, description: &str, truth: Truth, fit: FitConfig| ExampleDef {
        name: name.into(),
        description: description.into(),
        truth,
        domain: unit.clone(),
        sampling: uni_sampling(0.02),
        fit: Some(fit),
        control: None,
        gp_baseline: false,
        ols_baseline: false,
        execution: Execution::default(),
    };
    let a_model = vec![(0, 0.4718), (2, 0.3722), (4, -0.0147)];
    let d_model = vec![(0, 0.0), (1, 0.0868), (3, 0.2107)];
    let def = match name {
        "uni-a" => modeling(name, "x^2 on [-1, 1]", Truth::Square, uni_fit(1.0)),
        "uni-b" => modeling(name, "exp(4x) on [-1, 1]", Truth::Exp { rate: 4.0 }, uni_fit(1e6)),
        "uni-c" => ExampleDef {
            gp_baseline: true,
            ..modeling(name, "x sin(pi x) on [-1, 1], with GP baseline", Truth::XSinPiX, uni_fit(1e6))
        },
        "uni-d" => {
            let l: f64 = 0.3;
            let fit = FitConfig { corr_params: Some(vec![1.0 / (2.0 * l * l)]), ..uni_fit(1.0) };
            modeling(name, "seeded GP draw (l = 0.3) on [-1, 1]", Truth::GpDraw { length_scale: l, grid: 200, seed: None }, fit)
        }
        "bivar" => ExampleDef {
            domain: Domain::symmetric_unit(2),
            sampling: bivar_sampling(),
            ..modeling(name, "bivariate Gaussian density on [-1, 1]^2, 28 terms", bivar_truth(), bivar_fit())
        },
        "ev" => {
            let levels = EvLevels::default();
            let fit = FitConfig {
                max_degree: 2,
                max_interaction: 2,
                max_degree_per_variable: Some(1),
                tau2: 100.0,
                sigma2: Some(1e-4),
                ..uni_fit(1.0)
            };
            ExampleDef {
                domain: levels.domain().expect("default levels are valid"),
                sampling: Sampling {
                    train_size: 81 * levels.train_per_treatment,
                    test_size: 81 * levels.test_per_treatment,
                    noise_sd: 0.0,
                    seed: DEFAULT_SEED,
                    design: Design::EvFactorial(levels),
                },
                ols_baseline: true,
                ..modeling(name, "electric vs gasoline daily cost difference, with OLS baseline", Truth::EvCost, fit)
            }
        }
        "ctrl-a1" => control_def(name, "track 0.5 on x sin x from 0.6", Truth::XSinX, a_model, 0.5, 0.6, false),
        "ctrl-a2" => control_def(name, "track 0.1 on x sin x from 0.8", Truth::XSinX, a_model, 0.1, 0.8, false),
        "ctrl-b" => control_def(
            name,
            "track 1.5 on exp(x) from -0.5",
            Truth::Exp { rate: 1.0 },
            vec![(0, 1.6305), (1, 0.8690), (2, 0.1942)],
            1.5,
            -0.5,
            false,
        ),
        "ctrl-d" => control_def(name, "track 0.4 on x^3 - x/2 from -0.7, single stage", Truth::Cubic, d_model, 0.4, -0.7, false),
        "ctrl-d-twostage" => control_def(
            name,
            "track 0.4 on x^3 - x/2 from -0.7, boosted first stage",
            Truth::Cubic,
            d_model,
            0.4,
            -0.7,
            true,
        ),
        "ctrl-bivar" => {
            let mut config = ControlConfig::new(1.0, vec![-0.5, 0.5]);
            config.bias_adjust = true;
            ExampleDef {
                name: name.into(),
                description: "track 1.0 on the bivariate Gaussian density from (-0.5, 0.5)".into(),
                truth: bivar_truth(),
                domain: Domain::symmetric_unit(2),
                sampling: bivar_sampling(),
                fit: Some(bivar_fit()),
                control: Some(ControlSetup { model: ModelSource::Fit, config }),
                gp_baseline: false,
                ols_baseline: false,
                execution: Execution::default(),
            }
        }
        other => return Err(Error::UnknownExample(other.to_string())),
    };
    Ok(def)
}

/// `(name, description)` of every built-in example.
pub fn list_examples() -> Vec<(&'static str, String)> {
    EXAMPLE_NAMES.iter().map(|&n| (n, example(n).expect("built-in").description)).collect()
}
