//! Run configurations, result tables and exposure export for the CLI.
//!
//! Configuration files are flat TOML: every model, contract, default and
//! discretisation field is a top-level key named after the struct field.

use std::fmt::{self, Write as _};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cva::{run_pipeline, CvaInputs, CvaResult, Method};
use crate::error::{CvaError, Result};
use crate::htmc::ExposureProfile;
use crate::model::{
    base_case, BatesParams, DefaultModel, Exercise, JumpLaw, NumericsConfig, OptionKind,
    OptionSpec, DEFAULT_JUMP_TRUNC_SDS, DEFAULT_SEED, DEFAULT_Y_HALFWIDTH_SDS,
};

/// Benchmark resolution. `A`..`D` are the fixed (time steps, y-steps,
/// paths) presets; `custom` takes whatever the file says.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConfigLabel {
    A,
    B,
    C,
    D,
    #[serde(rename = "custom")]
    Custom,
}

impl ConfigLabel {
    pub const PRESETS: [ConfigLabel; 4] = [
        ConfigLabel::A,
        ConfigLabel::B,
        ConfigLabel::C,
        ConfigLabel::D,
    ];

    /// `(n_time, n_y, n_paths)`, where `n_y` counts y-steps.
    pub fn preset(self) -> Option<(usize, usize, usize)> {
        match self {
            ConfigLabel::A => Some((50, 100, 1500)),
            ConfigLabel::B => Some((75, 150, 2000)),
            ConfigLabel::C => Some((100, 250, 3300)),
            ConfigLabel::D => Some((125, 350, 6000)),
            ConfigLabel::Custom => None,
        }
    }
}

impl fmt::Display for ConfigLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigLabel::A => f.write_str("A"),
            ConfigLabel::B => f.write_str("B"),
            ConfigLabel::C => f.write_str("C"),
            ConfigLabel::D => f.write_str("D"),
            ConfigLabel::Custom => f.write_str("custom"),
        }
    }
}

fn default_halfwidth() -> f64 {
    DEFAULT_Y_HALFWIDTH_SDS
}

fn default_jump_trunc() -> f64 {
    DEFAULT_JUMP_TRUNC_SDS
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

const PARAM_KEYS: &[&str] = &[
    "s0", "v0", "r", "eta", "kappa", "theta", "sigma", "rho", "lambda", "alpha", "beta2",
    "jump_law",
];
const CONTRACT_KEYS: &[&str] = &[
    "kind", "exercise", "strike", "maturity", "delta", "recovery",
];
const NUMERIC_KEYS: &[&str] = &["y_halfwidth_sds", "jump_trunc_sds", "seed", "methods"];
const FLOAT_KEYS: &[&str] = &[
    "s0",
    "v0",
    "r",
    "eta",
    "kappa",
    "theta",
    "sigma",
    "rho",
    "lambda",
    "alpha",
    "beta2",
    "strike",
    "maturity",
    "delta",
    "recovery",
    "y_halfwidth_sds",
    "jump_trunc_sds",
];

/// Rejects keys the schema does not know, naming the first offender.
fn check_keys(text: &str, allowed: &[&[&str]]) -> Result<()> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| CvaError::Config(e.to_string()))?;
    for key in table.keys() {
        if !allowed.iter().any(|group| group.contains(&key.as_str())) {
            return Err(CvaError::Config(format!("unknown key `{key}`")));
        }
    }
    for (key, value) in &table {
        if FLOAT_KEYS.contains(&key.as_str())
            && !matches!(value, toml::Value::Float(_) | toml::Value::Integer(_))
        {
            return Err(CvaError::Config(format!(
                "key `{key}`: expected a number, found {}",
                value.type_str()
            )));
        }
    }
    Ok(())
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| CvaError::Config(e.message().to_string()))
}

/// One scenario at one resolution, with the methods to run on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub label: ConfigLabel,
    pub n_time: usize,
    /// Number of y-steps; the grid has `n_y + 1` points.
    pub n_y: usize,
    pub n_paths: usize,
    #[serde(default = "default_halfwidth")]
    pub y_halfwidth_sds: f64,
    #[serde(default = "default_jump_trunc")]
    pub jump_trunc_sds: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(flatten)]
    pub params: BatesParams,
    #[serde(flatten)]
    pub option: OptionSpec,
    #[serde(flatten)]
    pub default_model: DefaultModel,
    pub methods: Vec<Method>,
}

impl RunConfig {
    /// Benchmark scenario at resolution `label`.
    pub fn preset(label: ConfigLabel, s0: f64, exercise: Exercise) -> Result<Self> {
        let (n_time, n_y, n_paths) = label
            .preset()
            .ok_or_else(|| CvaError::Config("the custom label has no preset sizes".into()))?;
        let base = base_case();
        Ok(Self {
            label,
            n_time,
            n_y,
            n_paths,
            y_halfwidth_sds: DEFAULT_Y_HALFWIDTH_SDS,
            jump_trunc_sds: DEFAULT_JUMP_TRUNC_SDS,
            seed: DEFAULT_SEED,
            params: base.params_at(s0),
            option: OptionSpec {
                exercise,
                ..base.options[0]
            },
            default_model: base.default_model,
            methods: vec![Method::CHtfd, Method::HtfdHtmc],
        })
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        check_keys(
            text,
            &[
                &["label", "n_time", "n_y", "n_paths"],
                PARAM_KEYS,
                CONTRACT_KEYS,
                NUMERIC_KEYS,
            ],
        )?;
        let cfg: Self = parse(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CvaError::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((n_time, n_y, n_paths)) = self.label.preset() {
            for (key, have, want) in [
                ("n_time", self.n_time, n_time),
                ("n_y", self.n_y, n_y),
                ("n_paths", self.n_paths, n_paths),
            ] {
                if have != want {
                    return Err(CvaError::Config(format!(
                        "key `{key}` = {have} does not match configuration {} (expected {want})",
                        self.label
                    )));
                }
            }
        }
        if self.n_y < 4 || !self.n_y.is_multiple_of(2) {
            return Err(CvaError::Config(format!(
                "key `n_y` = {} must be an even number of y-steps >= 4",
                self.n_y
            )));
        }
        self.params.validate()?;
        self.option.validate()?;
        self.default_model.validate()?;
        self.numerics().validate()
    }

    pub fn numerics(&self) -> NumericsConfig {
        NumericsConfig {
            n_time: self.n_time,
            n_y: self.n_y + 1,
            n_paths: self.n_paths,
            y_halfwidth_sds: self.y_halfwidth_sds,
            jump_trunc_sds: self.jump_trunc_sds,
            seed: self.seed,
        }
    }

    pub fn inputs(&self) -> CvaInputs {
        CvaInputs {
            params: self.params,
            spec: self.option,
            default_model: self.default_model,
            numerics: self.numerics(),
            label: self.label,
        }
    }
}

/// A battery of scenarios: every combination of exercise style, spot and
/// resolution label, each run with every listed method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableConfig {
    pub labels: Vec<ConfigLabel>,
    pub spots: Vec<f64>,
    pub exercises: Vec<Exercise>,
    pub methods: Vec<Method>,
    #[serde(default = "default_halfwidth")]
    pub y_halfwidth_sds: f64,
    #[serde(default = "default_jump_trunc")]
    pub jump_trunc_sds: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub kind: OptionKind,
    pub strike: f64,
    pub maturity: f64,
    pub v0: f64,
    pub r: f64,
    pub eta: f64,
    pub kappa: f64,
    pub theta: f64,
    pub sigma: f64,
    pub rho: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub beta2: f64,
    #[serde(default)]
    pub jump_law: JumpLaw,
    pub delta: f64,
    pub recovery: f64,
}

impl TableConfig {
    pub fn benchmark_battery() -> Self {
        let base = base_case();
        let p = base.params;
        Self {
            labels: ConfigLabel::PRESETS.to_vec(),
            spots: base.spots.clone(),
            exercises: vec![Exercise::European, Exercise::American],
            methods: vec![Method::HtfdHtmc, Method::CHtfd],
            y_halfwidth_sds: DEFAULT_Y_HALFWIDTH_SDS,
            jump_trunc_sds: DEFAULT_JUMP_TRUNC_SDS,
            seed: DEFAULT_SEED,
            kind: OptionKind::Put,
            strike: base.options[0].strike,
            maturity: base.options[0].maturity,
            v0: p.v0,
            r: p.r,
            eta: p.eta,
            kappa: p.kappa,
            theta: p.theta,
            sigma: p.sigma,
            rho: p.rho,
            lambda: p.lambda,
            alpha: p.alpha,
            beta2: p.beta2,
            jump_law: p.jump_law,
            delta: base.default_model.delta,
            recovery: base.default_model.recovery,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        check_keys(
            text,
            &[
                &[
                    "labels",
                    "spots",
                    "exercises",
                    "kind",
                    "strike",
                    "maturity",
                    "delta",
                    "recovery",
                ],
                &PARAM_KEYS[1..],
                NUMERIC_KEYS,
            ],
        )?;
        let cfg: Self = parse(text)?;
        if cfg.labels.contains(&ConfigLabel::Custom) {
            return Err(CvaError::Config(
                "key `labels`: tables run the preset resolutions A-D only".into(),
            ));
        }
        // Surface parameter errors before any cell runs.
        for cell in cfg.expand()? {
            cell.validate()?;
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CvaError::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// One run configuration per (exercise, spot, label), in that nesting order.
    pub fn expand(&self) -> Result<Vec<RunConfig>> {
        let mut out = Vec::new();
        for &exercise in &self.exercises {
            for &s0 in &self.spots {
                for &label in &self.labels {
                    let (n_time, n_y, n_paths) = label.preset().ok_or_else(|| {
                        CvaError::Config(
                            "key `labels`: tables run the preset resolutions A-D only".into(),
                        )
                    })?;
                    out.push(RunConfig {
                        label,
                        n_time,
                        n_y,
                        n_paths,
                        y_halfwidth_sds: self.y_halfwidth_sds,
                        jump_trunc_sds: self.jump_trunc_sds,
                        seed: self.seed,
                        params: BatesParams {
                            s0,
                            v0: self.v0,
                            r: self.r,
                            eta: self.eta,
                            kappa: self.kappa,
                            theta: self.theta,
                            sigma: self.sigma,
                            rho: self.rho,
                            lambda: self.lambda,
                            alpha: self.alpha,
                            beta2: self.beta2,
                            jump_law: self.jump_law,
                        },
                        option: OptionSpec {
                            kind: self.kind,
                            exercise,
                            strike: self.strike,
                            maturity: self.maturity,
                        },
                        default_model: DefaultModel {
                            delta: self.delta,
                            recovery: self.recovery,
                        },
                        methods: self.methods.clone(),
                    });
                }
            }
        }
        Ok(out)
    }
}

/// One line of a result table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub s0: f64,
    pub exercise: Exercise,
    pub risk_free_price: f64,
    pub result: CvaResult,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    method: String,
    config: String,
    #[serde(rename = "S0")]
    s0: f64,
    exercise: String,
    cva: &'a str,
    ci: &'a str,
    runtime: String,
}

/// Runs every method of every configuration. Rows follow the order of
/// `configs`, then of each config's `methods`.
pub fn run_table(configs: &[RunConfig]) -> Result<Vec<TableRow>> {
    let mut rows = Vec::new();
    for cfg in configs {
        cfg.validate()?;
        let inputs = cfg.inputs();
        for &method in &cfg.methods {
            let run = run_pipeline(method, &inputs)?;
            rows.push(TableRow {
                s0: cfg.params.s0,
                exercise: cfg.option.exercise,
                risk_free_price: run.price,
                result: run.result,
            });
        }
    }
    Ok(rows)
}

fn fmt6(x: f64) -> String {
    format!("{x:.6}")
}

fn fmt_ci(ci: Option<f64>) -> String {
    ci.map(fmt6).unwrap_or_default()
}

/// Machine-readable table: `method,config,S0,exercise,cva,ci,runtime`.
pub fn write_table_csv<W: std::io::Write>(rows: &[TableRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if rows.is_empty() {
        w.write_record(["method", "config", "S0", "exercise", "cva", "ci", "runtime"])?;
    }
    for row in rows {
        let cva = fmt6(row.result.cva);
        let ci = fmt_ci(row.result.ci_halfwidth);
        w.serialize(CsvRow {
            method: row.result.method.to_string(),
            config: row.result.config_label.to_string(),
            s0: row.s0,
            exercise: row.exercise.to_string(),
            cva: &cva,
            ci: &ci,
            runtime: format!("{:.3}", row.result.runtime_secs),
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Aligned text rendering of the table.
pub fn format_table(rows: &[TableRow]) -> String {
    let header = [
        "exercise",
        "S0",
        "config",
        "method",
        "price",
        "cva",
        "ci95",
        "runtime_s",
    ];
    let body: Vec<[String; 8]> = rows
        .iter()
        .map(|row| {
            [
                row.exercise.to_string(),
                format!("{}", row.s0),
                row.result.config_label.to_string(),
                row.result.method.to_string(),
                fmt6(row.risk_free_price),
                fmt6(row.result.cva),
                row.result
                    .ci_halfwidth
                    .map(|c| format!("±{c:.6}"))
                    .unwrap_or_default(),
                format!("{:.3}", row.result.runtime_secs),
            ]
        })
        .collect();
    let mut widths = header.map(|h| h.chars().count());
    for line in &body {
        for (w, cell) in widths.iter_mut().zip(line) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut push_line = |cells: &[String]| {
        let parts: Vec<String> = cells
            .iter()
            .zip(widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    push_line(&header.map(String::from));
    for line in &body {
        push_line(line);
    }
    out
}

/// Runs the Monte Carlo pipeline for `config` and writes its exposure
/// profile to `path`.
pub fn emit_exposure(config: &RunConfig, path: impl AsRef<Path>) -> Result<ExposureProfile> {
    config.validate()?;
    let run = run_pipeline(Method::HtfdHtmc, &config.inputs())?;
    let profile = run
        .exposure
        .expect("Monte Carlo runs carry an exposure profile");
    profile.write_csv_file(path)?;
    Ok(profile)
}
