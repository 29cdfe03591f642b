use crate::error::{invalid, Result};
use crate::model::{BatesParams, NumericsConfig, OptionSpec};

/// Uniform grid in the uncorrelated coordinate `y = log S - (rho / sigma) v`,
/// centred on `Y_0` so that the initial state is the middle point.
#[derive(Debug, Clone, PartialEq)]
pub struct YGrid {
    pub y_min: f64,
    pub y_max: f64,
    pub n_y: usize,
    pub dy: f64,
    pub points: Vec<f64>,
}

impl YGrid {
    pub fn center_index(&self) -> usize {
        self.n_y / 2
    }

    pub fn center(&self) -> f64 {
        self.points[self.center_index()]
    }

    /// Linear interpolation of `values` (one per grid point) at `y`, with flat
    /// extrapolation outside `[y_min, y_max]`.
    pub fn interpolate(&self, values: &[f64], y: f64) -> f64 {
        debug_assert_eq!(values.len(), self.n_y);
        if y.is_nan() || y <= self.y_min {
            return values[0];
        }
        if y >= self.y_max {
            return values[self.n_y - 1];
        }
        let x = (y - self.y_min) / self.dy;
        let nearest = (x.round() as usize).min(self.n_y - 1);
        if self.points[nearest] == y {
            return values[nearest];
        }
        let i = (x.floor() as usize).min(self.n_y - 2);
        let frac = x - i as f64;
        if frac == 0.0 {
            return values[i];
        }
        values[i] + frac * (values[i + 1] - values[i])
    }
}

/// Localised `y`-domain: half-width of `y_halfwidth_sds` diffusion standard
/// deviations over the horizon plus a jump buffer of `jump_trunc_sds` jump
/// standard deviations scaled by the expected jump count.
pub fn build_y_grid(
    params: &BatesParams,
    spec: &OptionSpec,
    cfg: &NumericsConfig,
) -> Result<YGrid> {
    params.validate()?;
    spec.validate()?;
    cfg.validate()?;
    if cfg.n_y < 5 {
        return Err(invalid(
            "n_y",
            "the finite-difference step needs at least 5 grid points",
        ));
    }
    let t = spec.maturity;
    let diffusion = cfg.y_halfwidth_sds * (params.theta.max(params.v0) * t).sqrt();
    let jumps = cfg.jump_trunc_sds * params.beta2.sqrt() * (params.lambda * t).max(1.0);
    let half = diffusion + jumps;
    let center = params.y0();
    let mid = (cfg.n_y / 2) as f64;
    let dy = half / mid;
    let points: Vec<f64> = (0..cfg.n_y)
        .map(|i| center + (i as f64 - mid) * dy)
        .collect();
    Ok(YGrid {
        y_min: points[0],
        y_max: points[cfg.n_y - 1],
        n_y: cfg.n_y,
        dy,
        points,
    })
}
