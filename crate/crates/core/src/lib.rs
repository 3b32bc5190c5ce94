//! Worst-case persistently excited signals for degenerate gradient flows
//! `x' = -S(t) x`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod extremal2d;
pub mod flow;
pub mod gain;
pub mod gpe;
pub mod ode;
pub mod oracle;
pub mod quad;
pub mod signals;

pub use error::{Error, Result};
