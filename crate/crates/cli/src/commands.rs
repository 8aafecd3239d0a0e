use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use lingp::control::{check_contraction, run_control, ControlConfig, ControlTrace};
use lingp::io::{self, Table};
use lingp::scenarios::{self, ExampleDef, RunReport};
use lingp::Error;

use crate::Format;

/// Error printed as JSON on stderr.
#[derive(Debug)]
pub struct CliError {
    pub kind: String,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { kind: "usage".into(), message: message.into() }
    }

    pub fn exit_code(&self) -> u8 {
        if self.kind == "usage" {
            2
        } else {
            1
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError { kind: e.kind().into(), message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

type Result<T> = std::result::Result<T, CliError>;

const DEFAULT_OUT: &str = "lingp-out";

fn load_def(path: Option<&Path>, seed: Option<u64>) -> Result<ExampleDef> {
    let path = path.ok_or_else(|| CliError::usage("--config <file> is required"))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError { kind: "io".into(), message: format!("{}: {e}", path.display()) })?;
    let def: ExampleDef = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(Error::from)?
    } else {
        toml::from_str(&text).map_err(|e| CliError { kind: "parse".into(), message: e.to_string() })?
    };
    def.validate()?;
    Ok(match seed {
        Some(s) => def.with_seed(s),
        None => def,
    })
}

fn out_dir(base: Option<&Path>, name: &str) -> PathBuf {
    base.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)).join(name)
}

fn csv_text(table: &Table) -> String {
    let mut s = table.headers.join(",");
    s.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(|&v| io::format_value(v)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

/// Key/value rows for the headline numbers of a report.
fn report_csv(r: &RunReport) -> String {
    let mut s = String::from("key,value\n");
    let mut put = |k: &str, v: String| {
        let _ = writeln!(s, "{k},{v}");
    };
    put("example", r.example.clone());
    put("seed", r.seed.to_string());
    if let Some(v) = r.rmspe {
        put("rmspe", io::format_value(v));
    }
    if let (Some(name), Some(v)) = (&r.baseline, r.baseline_rmspe) {
        put(&format!("{name}_rmse"), io::format_value(v));
    }
    if let Some(v) = r.budget {
        put("budget", io::format_value(v));
    }
    if let Some(v) = r.order {
        put("order", v.to_string());
    }
    for t in &r.model_summary {
        put(&format!("coef{}", t.term.replace(',', ";")), io::format_value(t.coefficient));
    }
    if let Some(c) = &r.control {
        put("terminated", format!("{:?}", c.terminated).to_lowercase());
        put("steps", c.steps.to_string());
        if let Some(y) = c.final_output {
            put("final_output", io::format_value(y));
        }
        put("contraction_violations", c.contraction.violations.to_string());
    }
    s
}

fn render(r: &RunReport, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(r).expect("reports serialize") + "\n",
        Format::Csv => report_csv(r),
    }
}

pub fn fit(config: Option<&Path>, seed: Option<u64>, out: Option<&Path>, format: Format) -> Result<String> {
    let def = load_def(config, seed)?;
    if def.fit.is_none() || def.is_control() {
        return Err(CliError::usage("`fit` needs a modeling definition (fit settings, no control section)"));
    }
    let report = scenarios::run_modeling(&def, Some(&out_dir(out, &def.name)))?;
    Ok(render(&report, format))
}

pub fn predict(model: &Path, input: Option<&Path>, x: Option<Vec<f64>>, format: Format) -> Result<String> {
    let model = io::read_model(model)?;
    let d = model.dim();
    let points: Vec<Vec<f64>> = match (input, x) {
        (Some(p), None) => {
            let t = io::read_csv(p)?;
            if t.headers.len() < d {
                return Err(Error::DimensionMismatch { expected: d, got: t.headers.len() }.into());
            }
            t.rows.iter().map(|r| r[..d].to_vec()).collect()
        }
        (None, Some(x)) => vec![x],
        _ => return Err(CliError::usage("give either --input <csv> or --x <point>")),
    };
    let preds = points.iter().map(|p| model.predict(p)).collect::<lingp::Result<Vec<f64>>>()?;
    Ok(match format {
        Format::Json => {
            let rows: Vec<_> = points
                .iter()
                .zip(&preds)
                .map(|(x, y)| serde_json::json!({ "x": x, "y_pred": y }))
                .collect();
            serde_json::to_string_pretty(&rows).expect("plain values") + "\n"
        }
        Format::Csv => {
            let mut headers: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
            headers.push("y_pred".into());
            let mut t = Table::new(headers);
            for (x, y) in points.iter().zip(&preds) {
                let mut row = x.clone();
                row.push(*y);
                t.push(row);
            }
            csv_text(&t)
        }
    })
}

pub fn control_config(config: Option<&Path>, seed: Option<u64>, out: Option<&Path>, format: Format) -> Result<String> {
    let def = load_def(config, seed)?;
    if !def.is_control() {
        return Err(CliError::usage("`control --config` needs a definition with a control section"));
    }
    let report = scenarios::run_control_example(&def, Some(&out_dir(out, &def.name)))?;
    Ok(render(&report, format))
}

pub struct ModelControl {
    pub y_star: Option<f64>,
    pub x0: Option<Vec<f64>>,
    pub w1: f64,
    pub w2: f64,
    pub two_stage: bool,
    pub max_steps: usize,
}

pub fn control_model(path: &Path, opts: ModelControl, out: Option<&Path>, format: Format) -> Result<String> {
    let model = io::read_model(path)?;
    let y_star = opts.y_star.ok_or_else(|| CliError::usage("--y-star is required with --model"))?;
    let x0 = opts.x0.unwrap_or_else(|| model.spec.domain().center());
    let cfg = ControlConfig {
        w1: opts.w1,
        w2: opts.w2,
        two_stage: opts.two_stage,
        max_steps: opts.max_steps,
        ..ControlConfig::new(y_star, x0)
    };
    let trace = run_control(&model, None, &cfg)?;
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        io::write_csv(&dir.join("trace.csv"), &io::trace_table(&trace))?;
    }
    Ok(render_trace(&trace, &cfg, format))
}

fn render_trace(trace: &ControlTrace, cfg: &ControlConfig, format: Format) -> String {
    match format {
        Format::Csv => csv_text(&io::trace_table(trace)),
        Format::Json => {
            let report = check_contraction(trace, cfg.w1, cfg.w2);
            let body = serde_json::json!({ "trace": trace, "contraction": report });
            serde_json::to_string_pretty(&body).expect("traces serialize") + "\n"
        }
    }
}

pub fn example(name: &str, seed: Option<u64>, out: Option<&Path>, format: Format) -> Result<String> {
    let mut def = scenarios::example(name)?;
    if let Some(s) = seed {
        def = def.with_seed(s);
    }
    let report = scenarios::run_example(&def, Some(&out_dir(out, name)))?;
    Ok(render(&report, format))
}

pub fn list_examples(format: Format) -> Result<String> {
    let list = scenarios::list_examples();
    Ok(match format {
        Format::Json => {
            let rows: Vec<_> =
                list.iter().map(|(n, d)| serde_json::json!({ "name": n, "description": d })).collect();
            serde_json::to_string_pretty(&rows).expect("plain values") + "\n"
        }
        Format::Csv => {
            let mut s = String::from("name,description\n");
            for (n, d) in list {
                let _ = writeln!(s, "{n},\"{}\"", d.replace('"', "\"\""));
            }
            s
        }
    })
}
