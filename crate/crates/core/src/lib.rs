//! Credit valuation adjustment for vanilla options under the Bates model.
//!
//! Two estimators share one risk-free pricing pass (hybrid tree for the
//! variance, finite differences for the log-spot):
//!
//! * `htfd-htmc` simulates hybrid Monte Carlo paths, reads exposures off the
//!   price surface and integrates the discounted expected exposure against
//!   the default density;
//! * `c-htfd` solves a second PIDE for the CVA itself, with the positive
//!   part of the price surface entering as a source term.

pub mod bench;
pub mod cva;
pub mod error;
pub mod htfd;
pub mod htmc;
pub mod model;
pub mod tree;
mod tridiag;

pub use cva::{cva_coupled_pide, cva_quadrature, run_method, CvaInputs, CvaResult, Method};
pub use error::{CvaError, Result};
pub use htfd::{build_jump_quadrature, build_y_grid, price_surface, read_price, PriceSurface};
pub use htmc::{expected_exposure, simulate_paths, ExposureProfile, PathBatch};
pub use model::{
    base_case, default_probability, payoff, BatesParams, DefaultModel, Exercise, JumpLaw,
    NumericsConfig, OptionKind, OptionSpec,
};
pub use tree::{build_tree, VolTree};
