//! Model, contract, default and numerical-configuration types.
//!
//! Spot and variance follow the Bates dynamics
//!
//! ```text
//! dS/S- = (r - eta) dt + sqrt(V) dZ^S + dH
//! dV    = kappa (theta - V) dt + sigma sqrt(V) dZ^V,   <dZ^S, dZ^V> = rho dt
//! ```
//!
//! where `H` is compound Poisson with intensity `lambda` and
//! `log(1 + J) ~ N(alpha - beta2 / 2, beta2)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Bates stochastic-volatility jump-diffusion parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatesParams {
    pub s0: f64,
    pub v0: f64,
    pub r: f64,
    /// Continuous dividend yield.
    pub eta: f64,
    pub kappa: f64,
    pub theta: f64,
    /// Volatility of variance.
    pub sigma: f64,
    pub rho: f64,
    /// Jump intensity.
    pub lambda: f64,
    /// Jump-mean parameter; `E[1 + J] = exp(alpha)`.
    pub alpha: f64,
    /// Variance of `log(1 + J)`.
    pub beta2: f64,
    /// How `alpha` enters the law of `log(1 + J)`.
    #[serde(default)]
    pub jump_law: JumpLaw,
}

/// Parametrisation of the log-normal jump size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpLaw {
    /// `log(1 + J) ~ N(alpha - beta2 / 2, beta2)`, so `E[1 + J] = e^alpha`.
    #[default]
    MeanCorrected,
    /// `log(1 + J) ~ N(alpha, beta2)`, so `E[1 + J] = e^(alpha + beta2 / 2)`.
    LogMean,
}

impl BatesParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("s0", self.s0),
            ("v0", self.v0),
            ("r", self.r),
            ("eta", self.eta),
            ("kappa", self.kappa),
            ("theta", self.theta),
            ("sigma", self.sigma),
            ("rho", self.rho),
            ("lambda", self.lambda),
            ("alpha", self.alpha),
            ("beta2", self.beta2),
        ];
        for (name, value) in finite {
            if !value.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        if self.s0 <= 0.0 {
            return Err(invalid("s0", "must be > 0"));
        }
        if self.v0 < 0.0 {
            return Err(invalid("v0", "must be >= 0"));
        }
        if self.kappa <= 0.0 {
            return Err(invalid("kappa", "must be > 0"));
        }
        if self.theta <= 0.0 {
            return Err(invalid("theta", "must be > 0"));
        }
        if self.sigma <= 0.0 {
            return Err(invalid("sigma", "must be > 0"));
        }
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return Err(invalid("rho", "must lie in (-1, 1)"));
        }
        if self.lambda < 0.0 {
            return Err(invalid("lambda", "must be >= 0"));
        }
        if self.beta2 < 0.0 {
            return Err(invalid("beta2", "must be >= 0"));
        }
        Ok(())
    }

    /// `sqrt(1 - rho^2)`, the loading of the spot noise orthogonal to variance.
    pub fn rho_bar(&self) -> f64 {
        (1.0 - self.rho * self.rho).sqrt()
    }

    /// `rho / sigma`, the coefficient of the uncorrelating transform
    /// `Y = log S - (rho / sigma) V`.
    pub fn rho_over_sigma(&self) -> f64 {
        self.rho / self.sigma
    }

    /// Risk-neutral jump compensator `lambda (E[1 + J] - 1)`; equal to
    /// `lambda (e^alpha - 1)` under [`JumpLaw::MeanCorrected`].
    pub fn jump_compensator(&self) -> f64 {
        match self.jump_law {
            JumpLaw::MeanCorrected => self.lambda * self.alpha.exp_m1(),
            JumpLaw::LogMean => self.lambda * (self.alpha + 0.5 * self.beta2).exp_m1(),
        }
    }

    /// Mean of `log(1 + J)`.
    pub fn log_jump_mean(&self) -> f64 {
        match self.jump_law {
            JumpLaw::MeanCorrected => self.alpha - 0.5 * self.beta2,
            JumpLaw::LogMean => self.alpha,
        }
    }

    /// Drift of the variance, `kappa (theta - v)`.
    pub fn mu_v(&self, v: f64) -> f64 {
        self.kappa * (self.theta - v)
    }

    /// Drift of the transformed log-spot `Y` at variance `v`, including the
    /// jump compensator.
    pub fn mu_y(&self, v: f64) -> f64 {
        self.r - self.eta - self.jump_compensator() - 0.5 * v - self.rho_over_sigma() * self.mu_v(v)
    }

    /// `Y_0 = log S0 - (rho / sigma) V0`.
    pub fn y0(&self) -> f64 {
        self.s0.ln() - self.rho_over_sigma() * self.v0
    }

    /// Spot level recovered from the transformed coordinate.
    pub fn spot_from_y(&self, y: f64, v: f64) -> f64 {
        (y + self.rho_over_sigma() * v).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptionKind {
    Put,
    Call,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Exercise {
    European,
    American,
}

impl std::fmt::Display for Exercise {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Exercise::European => f.write_str("european"),
            Exercise::American => f.write_str("american"),
        }
    }
}

/// A vanilla option contract.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionSpec {
    pub kind: OptionKind,
    pub exercise: Exercise,
    pub strike: f64,
    pub maturity: f64,
}

impl OptionSpec {
    pub fn new(kind: OptionKind, exercise: Exercise, strike: f64, maturity: f64) -> Result<Self> {
        let spec = Self {
            kind,
            exercise,
            strike,
            maturity,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.strike > 0.0 && self.strike.is_finite()) {
            return Err(invalid("strike", "must be finite and > 0"));
        }
        if !(self.maturity > 0.0 && self.maturity.is_finite()) {
            return Err(invalid("maturity", "must be finite and > 0"));
        }
        Ok(())
    }

    pub fn payoff(&self, s: f64) -> f64 {
        payoff(self, s)
    }
}

/// Intrinsic value of the option at spot `s`.
pub fn payoff(spec: &OptionSpec, s: f64) -> f64 {
    match spec.kind {
        OptionKind::Put => (spec.strike - s).max(0.0),
        OptionKind::Call => (s - spec.strike).max(0.0),
    }
}

/// Counterparty default with a constant hazard rate and fixed recovery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefaultModel {
    /// Hazard rate.
    pub delta: f64,
    pub recovery: f64,
}

impl DefaultModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(invalid("delta", "must be finite and >= 0"));
        }
        if !(0.0..=1.0).contains(&self.recovery) {
            return Err(invalid("recovery", "must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Loss given default, `1 - R`.
    pub fn lgd(&self) -> f64 {
        1.0 - self.recovery
    }

    /// Default density `dPD/dt = delta e^(-delta t)`.
    pub fn default_density(&self, t: f64) -> f64 {
        self.delta * (-self.delta * t).exp()
    }
}

/// `PD(t) = 1 - exp(-delta t)`.
pub fn default_probability(model: &DefaultModel, t: f64) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(invalid("t", format!("time must be >= 0, got {t}")));
    }
    Ok(-(-model.delta * t).exp_m1())
}

pub const DEFAULT_Y_HALFWIDTH_SDS: f64 = 6.0;
pub const DEFAULT_JUMP_TRUNC_SDS: f64 = 6.0;
pub const DEFAULT_SEED: u64 = 42;

/// Discretisation sizes shared by the finite-difference and Monte Carlo
/// solvers. `n_y` counts grid points and must be odd so that the initial
/// state falls on the centre point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericsConfig {
    pub n_time: usize,
    pub n_y: usize,
    pub n_paths: usize,
    pub y_halfwidth_sds: f64,
    pub jump_trunc_sds: f64,
    pub seed: u64,
}

impl NumericsConfig {
    pub fn new(n_time: usize, n_y: usize, n_paths: usize) -> Self {
        Self {
            n_time,
            n_y,
            n_paths,
            y_halfwidth_sds: DEFAULT_Y_HALFWIDTH_SDS,
            jump_trunc_sds: DEFAULT_JUMP_TRUNC_SDS,
            seed: DEFAULT_SEED,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_time < 2 {
            return Err(invalid("n_time", "must be >= 2"));
        }
        if self.n_y < 3 || self.n_y.is_multiple_of(2) {
            return Err(invalid(
                "n_y",
                format!("grid point count must be odd and >= 3, got {}", self.n_y),
            ));
        }
        if self.n_paths < 1 {
            return Err(invalid("n_paths", "must be >= 1"));
        }
        if !(self.y_halfwidth_sds > 0.0 && self.y_halfwidth_sds.is_finite()) {
            return Err(invalid("y_halfwidth_sds", "must be finite and > 0"));
        }
        if !(self.jump_trunc_sds > 0.0 && self.jump_trunc_sds.is_finite()) {
            return Err(invalid("jump_trunc_sds", "must be finite and > 0"));
        }
        Ok(())
    }
}

/// The benchmark scenario: Bates parameters with `S0 = 100`, the spot
/// battery `{80, 100, 120}`, European and American puts struck at 100
/// with one-year maturity, and the counterparty default model.
///
/// The published benchmark CVAs are reproduced with `alpha` read as the
/// mean of `log(1 + J)`, so the base case uses [`JumpLaw::LogMean`].
#[derive(Debug, Clone, PartialEq)]
pub struct BaseCase {
    pub params: BatesParams,
    pub spots: Vec<f64>,
    pub options: Vec<OptionSpec>,
    pub default_model: DefaultModel,
}

impl BaseCase {
    pub fn params_at(&self, s0: f64) -> BatesParams {
        BatesParams { s0, ..self.params }
    }
}

pub fn base_case() -> BaseCase {
    let params = BatesParams {
        s0: 100.0,
        v0: 0.01,
        r: 0.03,
        eta: 0.0,
        kappa: 2.0,
        theta: 0.01,
        sigma: 0.2,
        rho: 0.5,
        lambda: 0.1,
        alpha: 0.1,
        beta2: 0.1,
        jump_law: JumpLaw::LogMean,
    };
    let put = |exercise| OptionSpec {
        kind: OptionKind::Put,
        exercise,
        strike: 100.0,
        maturity: 1.0,
    };
    BaseCase {
        params,
        spots: vec![80.0, 100.0, 120.0],
        options: vec![put(Exercise::European), put(Exercise::American)],
        default_model: DefaultModel {
            delta: 0.03,
            recovery: 0.4,
        },
    }
}
