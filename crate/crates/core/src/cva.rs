//! CVA estimators.
//!
//! Both target
//!
//! ```text
//! CVA = (1 - R) int_0^T e^(-r s) EE(s) dPD(s),   dPD(s) = delta e^(-delta s) ds
//! ```
//!
//! `htfd-htmc` evaluates the integral with the trapezoidal rule on a
//! simulated exposure profile; `c-htfd` solves the CVA PIDE backward from
//! `C(T) = 0` with source `(1 - R) max(V, 0) dPD/dt`.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bench::ConfigLabel;
use crate::error::{CvaError, Result};
use crate::htfd::{
    backward_induction, build_jump_quadrature, build_y_grid, price_surface, JumpQuadrature,
    PideStepper, PriceSurface, YGrid,
};
use crate::htmc::{expected_exposure, simulate_paths, ExposureProfile};
use crate::model::{BatesParams, DefaultModel, NumericsConfig, OptionSpec};
use crate::tree::{build_tree, VolTree};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "c-htfd", alias = "c_htfd")]
    CHtfd,
    #[serde(rename = "htfd-htmc", alias = "htfd_htmc")]
    HtfdHtmc,
}

impl Method {
    pub fn is_monte_carlo(self) -> bool {
        matches!(self, Method::HtfdHtmc)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::CHtfd => f.write_str("c-htfd"),
            Method::HtfdHtmc => f.write_str("htfd-htmc"),
        }
    }
}

impl FromStr for Method {
    type Err = CvaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "c-htfd" | "c_htfd" => Ok(Method::CHtfd),
            "htfd-htmc" | "htfd_htmc" => Ok(Method::HtfdHtmc),
            _ => Err(CvaError::UnknownMethod(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvaResult {
    pub method: Method,
    pub cva: f64,
    /// 95% confidence half-width; Monte Carlo methods only.
    pub ci_halfwidth: Option<f64>,
    pub runtime_secs: f64,
    pub config_label: ConfigLabel,
}

/// Trapezoidal weights of the CVA integral on the profile's time grid,
/// `(1 - R) tau_n e^(-r t_n) delta e^(-delta t_n)`.
pub fn quadrature_weights(times: &[f64], model: &DefaultModel, r: f64) -> Vec<f64> {
    let m = times.len();
    let mut w = vec![0.0; m];
    for n in 0..m.saturating_sub(1) {
        let half = 0.5 * (times[n + 1] - times[n]);
        w[n] += half;
        w[n + 1] += half;
    }
    for (wn, &t) in w.iter_mut().zip(times) {
        *wn *= model.lgd() * (-r * t).exp() * model.default_density(t);
    }
    w
}

pub fn cva_quadrature(
    profile: &ExposureProfile,
    model: &DefaultModel,
    r: f64,
) -> Result<CvaResult> {
    if profile.len() < 2 {
        return Err(CvaError::EmptyProfile);
    }
    model.validate()?;
    let m = profile.len();
    if profile.times.len() != m || profile.se.len() != m || profile.covariance.len() != m * m {
        return Err(CvaError::DimensionMismatch(
            "exposure profile fields differ in length".into(),
        ));
    }
    let w = quadrature_weights(&profile.times, model, r);
    let cva: f64 = w.iter().zip(&profile.ee).map(|(a, b)| a * b).sum();

    // Linear error propagation through the quadrature, keeping the
    // cross-time covariance of the path-wise exposures.
    let mut var = 0.0;
    for a in 0..m {
        let row = &profile.covariance[a * m..(a + 1) * m];
        var += w[a] * row.iter().zip(&w).map(|(c, wb)| c * wb).sum::<f64>();
    }
    let se = (var.max(0.0) / profile.n_paths as f64).sqrt();

    Ok(CvaResult {
        method: Method::HtfdHtmc,
        cva,
        ci_halfwidth: Some(Z_95 * se),
        runtime_secs: 0.0,
        config_label: ConfigLabel::Custom,
    })
}

/// Solves the CVA PIDE over the same tree and grid as `surface`.
///
/// Each backward step from `(n+1)h` to `nh` blends the children, takes one
/// PIDE step and adds `h (1 - R) max(W[n][k][i], 0) delta e^(-delta n h)`.
#[allow(clippy::too_many_arguments)]
pub fn cva_coupled_pide(
    params: &BatesParams,
    spec: &OptionSpec,
    model: &DefaultModel,
    tree: &VolTree,
    grid: &YGrid,
    quad: &JumpQuadrature,
    surface: &PriceSurface,
) -> Result<CvaResult> {
    spec.validate()?;
    model.validate()?;
    params.validate()?;
    if surface.tree != *tree {
        return Err(CvaError::DimensionMismatch(
            "surface was priced on a different tree".into(),
        ));
    }
    if surface.grid != *grid {
        return Err(CvaError::DimensionMismatch(
            "surface was priced on a different y-grid".into(),
        ));
    }
    if surface.params != *params {
        return Err(CvaError::DimensionMismatch(
            "surface was priced with different parameters".into(),
        ));
    }
    if (tree.maturity() - spec.maturity).abs() > 1e-12 * spec.maturity.max(1.0) {
        return Err(CvaError::DimensionMismatch(
            "tree horizon differs from option maturity".into(),
        ));
    }

    let n_y = grid.n_y;
    let h = tree.h();
    let stepper = PideStepper::new(params, grid, quad, h);
    let terminal = vec![0.0; (tree.n_steps() + 1) * n_y];
    let lgd = model.lgd();
    let root = backward_induction(
        &stepper,
        tree,
        terminal,
        |_, _| {},
        |n, k, _, out| {
            let coef = h * lgd * model.default_density(n as f64 * h);
            if coef == 0.0 {
                return;
            }
            for (o, &w) in out.iter_mut().zip(surface.node_values(n, k)) {
                *o += coef * w.max(0.0);
            }
        },
    )?;

    Ok(CvaResult {
        method: Method::CHtfd,
        cva: root[grid.center_index()],
        ci_halfwidth: None,
        runtime_secs: 0.0,
        config_label: ConfigLabel::Custom,
    })
}

/// Everything needed to run either estimator on one scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvaInputs {
    pub params: BatesParams,
    pub spec: OptionSpec,
    pub default_model: DefaultModel,
    pub numerics: NumericsConfig,
    pub label: ConfigLabel,
}

/// Output of a full pipeline run.
#[derive(Debug, Clone)]
pub struct CvaRun {
    pub result: CvaResult,
    /// Risk-free price at the origin.
    pub price: f64,
    /// Present for Monte Carlo runs.
    pub exposure: Option<ExposureProfile>,
}

/// Tree, grid and quadrature shared by both estimators.
pub struct Discretization {
    pub tree: VolTree,
    pub grid: YGrid,
    pub quad: JumpQuadrature,
}

pub fn discretize(inputs: &CvaInputs) -> Result<Discretization> {
    inputs.numerics.validate()?;
    let tree = build_tree(&inputs.params, inputs.numerics.n_time, inputs.spec.maturity)?;
    let grid = build_y_grid(&inputs.params, &inputs.spec, &inputs.numerics)?;
    let quad = build_jump_quadrature(&inputs.params, &grid, &inputs.numerics);
    Ok(Discretization { tree, grid, quad })
}

pub fn run_pipeline(method: Method, inputs: &CvaInputs) -> Result<CvaRun> {
    let start = Instant::now();
    inputs.default_model.validate()?;
    let d = discretize(inputs)?;
    let surface = price_surface(&inputs.params, &inputs.spec, &d.tree, &d.grid, &d.quad)?;
    let price = surface.price_at_origin();
    let (mut result, exposure) = match method {
        Method::CHtfd => {
            let res = cva_coupled_pide(
                &inputs.params,
                &inputs.spec,
                &inputs.default_model,
                &d.tree,
                &d.grid,
                &d.quad,
                &surface,
            )?;
            (res, None)
        }
        Method::HtfdHtmc => {
            let batch = simulate_paths(&d.tree, &inputs.params, &inputs.numerics)?;
            let profile = expected_exposure(&batch, &surface)?;
            let res = cva_quadrature(&profile, &inputs.default_model, inputs.params.r)?;
            (res, Some(profile))
        }
    };
    result.runtime_secs = start.elapsed().as_secs_f64();
    result.config_label = inputs.label;
    Ok(CvaRun {
        result,
        price,
        exposure,
    })
}

/// Runs one estimator end to end and records its wall-clock time.
pub fn run_method(method: Method, inputs: &CvaInputs) -> Result<CvaResult> {
    run_pipeline(method, inputs).map(|run| run.result)
}
