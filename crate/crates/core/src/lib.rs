//! Explicit solutions of the planar system `−div(v Dρ(Du)) = f`, `ρ(Du) = 1` on `{v > 0}`:
//! the Minkowski distance `u = d_Ω`, transport rays, and the transport density `v = v_f`.

// `!(x > 0.0)` deliberately rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary;
pub mod distance;
pub mod error;
pub mod gauge;
pub mod linalg;
pub mod ode;
pub mod quadrature;
pub mod scene;
pub mod solver;
pub mod transport;
pub mod verify;

pub use error::{Error, Result};
