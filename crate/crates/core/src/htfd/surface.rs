use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::grid::YGrid;
use super::jumps::JumpQuadrature;
use super::step::{PideStepper, StepWorkspace};
use crate::error::{CvaError, Result};
use crate::model::{BatesParams, Exercise, OptionSpec};
use crate::tree::VolTree;

/// Option values `W[n][k][i]` at time `n h`, tree node `(n, k)` and grid
/// point `y_i`, together with the tree and grid they live on.
#[derive(Debug, Clone)]
pub struct PriceSurface {
    levels: Vec<Vec<f64>>,
    pub params: BatesParams,
    pub grid: YGrid,
    pub tree: VolTree,
    pub exercise: Exercise,
}

impl PriceSurface {
    pub fn n_steps(&self) -> usize {
        self.tree.n_steps()
    }

    /// Values on the grid at node `(n, k)`.
    pub fn node_values(&self, n: usize, k: usize) -> &[f64] {
        let n_y = self.grid.n_y;
        &self.levels[n][k * n_y..(k + 1) * n_y]
    }

    pub fn value(&self, n: usize, k: usize, i: usize) -> f64 {
        self.levels[n][k * self.grid.n_y + i]
    }

    /// Price at `t = 0`, `S = S0`, `V = V0`.
    pub fn price_at_origin(&self) -> f64 {
        self.value(0, 0, self.grid.center_index())
    }

    /// Writes `spot,value` for the `t = 0` slice.
    pub fn write_t0_csv<W: Write>(&self, writer: W) -> Result<()> {
        #[derive(Serialize)]
        struct Row {
            spot: f64,
            value: f64,
        }
        let mut w = csv::Writer::from_writer(writer);
        let v0 = self.tree.v(0, 0);
        for (&y, &value) in self.grid.points.iter().zip(self.node_values(0, 0)) {
            w.serialize(Row {
                spot: self.params.spot_from_y(y, v0),
                value,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_t0_csv_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_t0_csv(std::io::BufWriter::new(file))
    }
}

/// Price at time `n h`, spot `s` and tree node `(n, k)`, linearly
/// interpolated in `y`; queries outside the grid take the boundary value.
///
/// Panics if `(n, k)` is not a node of the surface's tree.
pub fn read_price(surface: &PriceSurface, n: usize, s: f64, k: usize) -> f64 {
    let v = surface.tree.v(n, k);
    let y = s.ln() - surface.params.rho_over_sigma() * v;
    surface.grid.interpolate(surface.node_values(n, k), y)
}

fn check_inputs(params: &BatesParams, maturity: f64, tree: &VolTree) -> Result<()> {
    params.validate()?;
    let t = tree.maturity();
    if (t - maturity).abs() > 1e-12 * maturity.max(1.0) {
        return Err(CvaError::DimensionMismatch(format!(
            "tree horizon {t} does not match maturity {maturity}"
        )));
    }
    if (tree.v(0, 0) - params.v0).abs() > 1e-15 {
        return Err(CvaError::DimensionMismatch(
            "tree root does not equal v0".into(),
        ));
    }
    Ok(())
}

/// Backward induction over one tree, generic in the level update.
///
/// For every node the children are blended with the tree probabilities, one
/// PIDE step is taken and `finish(n, k, v, values)` post-processes the
/// result in place.
pub(crate) fn backward_induction<F>(
    stepper: &PideStepper<'_>,
    tree: &VolTree,
    terminal: Vec<f64>,
    mut on_level: impl FnMut(usize, &[f64]),
    finish: F,
) -> Result<Vec<f64>>
where
    F: Fn(usize, usize, f64, &mut [f64]) + Sync,
{
    let n_y = stepper.grid.n_y;
    let n_steps = tree.n_steps();
    let mut next = terminal;
    on_level(n_steps, &next);
    for n in (0..n_steps).rev() {
        let mut current = vec![0.0; (n + 1) * n_y];
        let child = &next;
        current.par_chunks_mut(n_y).enumerate().for_each_init(
            || StepWorkspace::new(n_y),
            |ws, (k, out)| {
                let (kd, ku, p) = tree.transition(n, k);
                let up = &child[ku * n_y..(ku + 1) * n_y];
                let down = &child[kd * n_y..(kd + 1) * n_y];
                for ((x, &u), &d) in ws.input.iter_mut().zip(up).zip(down) {
                    *x = p * u + (1.0 - p) * d;
                }
                let v = tree.v(n, k);
                stepper.step_workspace(v, ws, out);
                finish(n, k, v, out);
            },
        );
        if current.iter().any(|x| !x.is_finite()) {
            return Err(CvaError::NonFinite("backward induction"));
        }
        on_level(n, &current);
        next = current;
    }
    Ok(next)
}

/// Price surface for an arbitrary payoff `psi(S)`. With American exercise
/// the value is floored by `psi` after every step (Bermudan on the time grid).
pub fn price_surface_with_payoff<P>(
    params: &BatesParams,
    maturity: f64,
    exercise: Exercise,
    payoff: P,
    tree: &VolTree,
    grid: &YGrid,
    quad: &JumpQuadrature,
) -> Result<PriceSurface>
where
    P: Fn(f64) -> f64 + Sync,
{
    check_inputs(params, maturity, tree)?;
    let n_y = grid.n_y;
    let n_steps = tree.n_steps();
    let stepper = PideStepper::new(params, grid, quad, tree.h());

    let intrinsic = |v: f64, out: &mut [f64]| {
        for (o, &y) in out.iter_mut().zip(&grid.points) {
            *o = payoff(params.spot_from_y(y, v));
        }
    };

    let mut terminal = vec![0.0; (n_steps + 1) * n_y];
    for (k, chunk) in terminal.chunks_mut(n_y).enumerate() {
        intrinsic(tree.v(n_steps, k), chunk);
    }

    let mut levels: Vec<Vec<f64>> = vec![Vec::new(); n_steps + 1];
    let american = exercise == Exercise::American;
    backward_induction(
        &stepper,
        tree,
        terminal,
        |n, level| levels[n] = level.to_vec(),
        |_, _, v, out| {
            if american {
                for (o, &y) in out.iter_mut().zip(&grid.points) {
                    *o = o.max(payoff(params.spot_from_y(y, v)));
                }
            }
        },
    )?;

    Ok(PriceSurface {
        levels,
        params: *params,
        grid: grid.clone(),
        tree: tree.clone(),
        exercise,
    })
}

/// Risk-free option values over the whole tree and grid.
pub fn price_surface(
    params: &BatesParams,
    spec: &OptionSpec,
    tree: &VolTree,
    grid: &YGrid,
    quad: &JumpQuadrature,
) -> Result<PriceSurface> {
    spec.validate()?;
    let spec = *spec;
    price_surface_with_payoff(
        params,
        spec.maturity,
        spec.exercise,
        move |s| spec.payoff(s),
        tree,
        grid,
        quad,
    )
}
