//! Quantifying the price of uncertainty in DC optimal power flow.
//!
//! The crate compares two ways of dispatching generation under random
//! demand: per-realization re-optimization ("in hindsight") and affine
//! chance-constrained policies built on a polynomial-chaos expansion of
//! the demand. Both produce a probability law per generator; the gap
//! between the laws is measured in total variational distance.
//!
//! Layers, bottom up:
//! - [`linalg`], [`qp`]: dense solves and the box-constrained QP active set
//! - [`rng`], [`special`], [`dist`], [`integrate`]: probability utilities
//! - [`pce`]: basis construction and the stochastic Galerkin projection
//! - [`dcopf`]: the network model and the per-realization argmin
//! - [`hopf`], [`ccopf`]: the two dispatch laws
//! - [`density`], [`metrics`]: mixed laws and distances between them
//! - [`scenario`]: the end-to-end pipeline behind the CLI

pub mod ccopf;
pub mod dcopf;
pub mod density;
pub mod dist;
pub mod error;
pub mod hopf;
pub mod integrate;
pub mod linalg;
pub mod metrics;
pub mod pce;
pub mod qp;
pub mod rng;
pub mod scenario;
pub mod special;

pub use ccopf::{
    evaluate_policy_at_demand, policy_density, solve_ccopf, violation_probability, ChanceSpec,
    Policy,
};
pub use dcopf::{argmin, closed_form_argmin, three_bus, ArgminCaseSplit, Bus, DemandSpec, Network};
pub use density::{Atom, MixedDensity1D, Piece, PieceShape};
pub use dist::Distribution1D;
pub use error::{Error, Result};
pub use hopf::{analytic_hopf_density, run_hopf, HopfEmpirical};
pub use metrics::{histogram_density, tvd, violation_mass, TvdReport};
pub use pce::{basis_for, pce_of_demand, solve_galerkin, Basis, BasisNormalization, PceVector};
pub use scenario::{builtin, emit_figure_data, load_scenario, run_scenario, Scenario};
