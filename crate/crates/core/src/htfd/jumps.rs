use std::f64::consts::PI;

use super::grid::YGrid;
use crate::model::{BatesParams, NumericsConfig};

/// Trapezoidal quadrature of the log-jump density on grid-aligned offsets.
///
/// Offsets are integer multiples of `dy` inside `[m - c beta, m + c beta]`
/// with `m` the mean of `log(1 + J)`; the weights are the probability masses the
/// trapezoidal rule assigns to each offset.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpQuadrature {
    /// Offsets in grid cells.
    pub shifts: Vec<isize>,
    /// Offsets in `y` units (`shift * dy`).
    pub offsets: Vec<f64>,
    pub weights: Vec<f64>,
    /// Jump intensity `lambda`.
    pub intensity: f64,
    /// `lambda (E[1 + J] - 1)`.
    pub compensator: f64,
}

impl JumpQuadrature {
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.intensity == 0.0 || self.weights.is_empty()
    }

    /// Compensated jump integral `sum_j w_j (u[i + s_j] - u[i])` at every grid
    /// index, written to `out`. Values beyond the grid take the boundary value.
    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        let n = u.len();
        debug_assert_eq!(out.len(), n);
        let total = self.total_weight();
        for (o, &x) in out.iter_mut().zip(u) {
            *o = -total * x;
        }
        let last = n as isize - 1;
        for (&s, &w) in self.shifts.iter().zip(&self.weights) {
            // i + s inside [0, n-1] for i in [lo, hi)
            let lo = (-s).clamp(0, n as isize) as usize;
            let hi = (n as isize - s).clamp(0, n as isize) as usize;
            if lo > 0 {
                let edge = w * u[0];
                out[..lo].iter_mut().for_each(|o| *o += edge);
            }
            if hi > lo {
                let src = &u[(lo as isize + s) as usize..(hi as isize + s) as usize];
                for (o, &x) in out[lo..hi].iter_mut().zip(src) {
                    *o += w * x;
                }
            }
            if hi < n {
                let edge = w * u[last as usize];
                out[hi..].iter_mut().for_each(|o| *o += edge);
            }
        }
    }
}

pub fn build_jump_quadrature(
    params: &BatesParams,
    grid: &YGrid,
    cfg: &NumericsConfig,
) -> JumpQuadrature {
    let mut quad = JumpQuadrature {
        shifts: Vec::new(),
        offsets: Vec::new(),
        weights: Vec::new(),
        intensity: params.lambda,
        compensator: params.jump_compensator(),
    };
    if params.lambda == 0.0 {
        return quad;
    }

    let dy = grid.dy;
    let mean = params.log_jump_mean();
    let sd = params.beta2.sqrt();
    let lo = ((mean - cfg.jump_trunc_sds * sd) / dy).ceil() as isize;
    let hi = ((mean + cfg.jump_trunc_sds * sd) / dy).floor() as isize;

    if hi - lo < 2 {
        // Jump law narrower than the grid: put all mass on the nearest offset.
        let s = (mean / dy).round() as isize;
        quad.shifts.push(s);
        quad.offsets.push(s as f64 * dy);
        quad.weights.push(1.0);
        return quad;
    }

    let norm = 1.0 / (sd * (2.0 * PI).sqrt());
    for s in lo..=hi {
        let x = s as f64 * dy;
        let z = (x - mean) / sd;
        let mut w = dy * norm * (-0.5 * z * z).exp();
        if s == lo || s == hi {
            w *= 0.5;
        }
        quad.shifts.push(s);
        quad.offsets.push(x);
        quad.weights.push(w);
    }
    quad
}
