//! One backward time step of the per-node 1-D PIDE
//!
//! ```text
//! du/ds + mu_Y(v) du/dy + 1/2 rho_bar^2 v d2u/dy2 + lambda int [u(y + x) - u(y)] p(x) dx = 0
//! ```
//!
//! Differential terms are implicit (one tridiagonal solve), the jump
//! integral is explicit on the incoming values, and the result is
//! discounted by `e^(-r h)`. Both boundaries carry `d2u/dy2 = 0`.

use super::grid::YGrid;
use super::jumps::JumpQuadrature;
use crate::error::{invalid, CvaError, Result};
use crate::model::BatesParams;
use crate::tridiag;

/// Per-thread scratch buffers sized to the grid.
#[derive(Debug, Clone)]
pub struct StepWorkspace {
    jump: Vec<f64>,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    scratch: Vec<f64>,
    pub(crate) input: Vec<f64>,
}

impl StepWorkspace {
    pub fn new(n_y: usize) -> Self {
        Self {
            jump: vec![0.0; n_y],
            lower: vec![0.0; n_y - 2],
            diag: vec![0.0; n_y - 2],
            upper: vec![0.0; n_y - 2],
            scratch: vec![0.0; n_y - 2],
            input: vec![0.0; n_y],
        }
    }
}

/// Spatial operator coefficients `(l, c, r)` of `mu d/dy + D d2/dy2` at one
/// interior point. Centred differences while they give an M-matrix, upwind
/// advection otherwise.
pub(crate) fn stencil(mu: f64, diffusion: f64, dy: f64) -> (f64, f64, f64) {
    let d = diffusion / (dy * dy);
    if mu.abs() * dy <= 2.0 * diffusion {
        let a = mu / (2.0 * dy);
        (d - a, -2.0 * d, d + a)
    } else if mu > 0.0 {
        let a = mu / dy;
        (d, -2.0 * d - a, d + a)
    } else {
        let a = -mu / dy;
        (d + a, -2.0 * d - a, d)
    }
}

/// Stepping context shared by every node of a backward induction.
#[derive(Debug, Clone, Copy)]
pub struct PideStepper<'a> {
    pub params: &'a BatesParams,
    pub grid: &'a YGrid,
    pub quad: &'a JumpQuadrature,
    pub h: f64,
    discount: f64,
}

impl<'a> PideStepper<'a> {
    pub fn new(params: &'a BatesParams, grid: &'a YGrid, quad: &'a JumpQuadrature, h: f64) -> Self {
        Self {
            params,
            grid,
            quad,
            h,
            discount: (-params.r * h).exp(),
        }
    }

    /// Steps `ws.input` back by `h` at variance `v`, writing into `out`.
    pub(crate) fn step_workspace(&self, v: f64, ws: &mut StepWorkspace, out: &mut [f64]) {
        let n = self.grid.n_y;
        let m = n - 2;
        let h = self.h;
        let mu = self.params.mu_y(v);
        let rho_bar = self.params.rho_bar();
        let diffusion = 0.5 * rho_bar * rho_bar * v.max(0.0);
        let (l, c, r) = stencil(mu, diffusion, self.grid.dy);
        let (a, b, up) = (-h * l, 1.0 - h * c, -h * r);

        ws.lower.fill(a);
        ws.diag.fill(b);
        ws.upper.fill(up);
        // u_0 = 2 u_1 - u_2
        ws.diag[0] += 2.0 * a;
        ws.upper[0] -= a;
        ws.lower[0] = 0.0;
        // u_{n-1} = 2 u_{n-2} - u_{n-3}
        ws.diag[m - 1] += 2.0 * ws.upper[m - 1];
        if m > 1 {
            ws.lower[m - 1] -= ws.upper[m - 1];
        }
        ws.upper[m - 1] = 0.0;

        let rhs = &mut out[1..n - 1];
        if self.quad.is_empty() {
            rhs.copy_from_slice(&ws.input[1..n - 1]);
        } else {
            self.quad.apply(&ws.input, &mut ws.jump);
            let scale = h * self.quad.intensity;
            for ((o, &u), &j) in rhs
                .iter_mut()
                .zip(&ws.input[1..n - 1])
                .zip(&ws.jump[1..n - 1])
            {
                *o = u + scale * j;
            }
        }
        tridiag::solve_in_place(&ws.lower, &ws.diag, &ws.upper, rhs, &mut ws.scratch);
        out[0] = 2.0 * out[1] - out[2];
        out[n - 1] = 2.0 * out[n - 2] - out[n - 3];
        for x in out.iter_mut() {
            *x *= self.discount;
        }
    }
}

/// One backward step of length `h` for the node with variance `v`.
pub fn pide_step(
    values_in: &[f64],
    v: f64,
    h: f64,
    grid: &YGrid,
    quad: &JumpQuadrature,
    params: &BatesParams,
) -> Result<Vec<f64>> {
    if values_in.len() != grid.n_y {
        return Err(CvaError::DimensionMismatch(format!(
            "values have {} points, grid has {}",
            values_in.len(),
            grid.n_y
        )));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(invalid("h", "must be finite and > 0"));
    }
    if !v.is_finite() || values_in.iter().any(|x| !x.is_finite()) {
        return Err(CvaError::NonFinite("pide_step input"));
    }
    let stepper = PideStepper::new(params, grid, quad, h);
    let mut ws = StepWorkspace::new(grid.n_y);
    ws.input.copy_from_slice(values_in);
    let mut out = vec![0.0; grid.n_y];
    stepper.step_workspace(v, &mut ws, &mut out);
    Ok(out)
}
