//! Classical dynamics in Koopman-von Neumann form: Schrödinger, Heisenberg and
//! interaction pictures over phase space, the classical sensitivity matrix and
//! Lyapunov spectrum, and the commutator-based quantum sensitivity operator.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod chaos;
pub mod error;
pub mod kvn;
pub mod numerics;
pub mod par;
pub mod phase;
pub mod pictures;
pub mod quadrature;
pub mod quantum;

pub use error::{Error, Result};
