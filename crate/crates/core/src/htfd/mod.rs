//! Hybrid tree / finite-difference pricing.
//!
//! The variance moves on the binomial tree while the uncorrelated
//! log-spot `y = log S - (rho / sigma) v` is handled by a 1-D PIDE with
//! constant coefficients at each node.

mod grid;
mod jumps;
mod step;
mod surface;

pub use grid::{build_y_grid, YGrid};
pub use jumps::{build_jump_quadrature, JumpQuadrature};
pub use step::{pide_step, PideStepper, StepWorkspace};
pub use surface::{price_surface, price_surface_with_payoff, read_price, PriceSurface};

pub(crate) use surface::backward_induction;
