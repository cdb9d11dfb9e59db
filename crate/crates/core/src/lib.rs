//! Pseudo-Finsleroid metric engine.
//!
//! A background is a triple `(a_ij(x), b_i(x), g(x))`: a Lorentzian metric,
//! a space-like 1-form with `0 < c <= 1` where `c^2 = -a^ij b_i b_j`, and the
//! Finsleroid charge `g`. From it the crate evaluates the metric function
//! `F^2 = B J^2`, the full tensor stack, the spray and geodesics, the dual
//! Hamiltonian, the angle and chart of the unit case `c = 1`, and the
//! conformal map onto the factor space.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod anglegeo;
pub mod background;
pub mod check;
pub mod conformal;
pub mod dual;
pub mod error;
pub mod kinematics;
pub mod metric;
pub mod numdiff;
pub mod spray;

pub use background::{parse_config, BackgroundField, BackgroundSample};
pub use error::{Error, Result};
