//! Quantum sensitivity on a truncated oscillator basis: canonical operators,
//! Heisenberg evolution, the commutator sensitivity operator and its variance
//! bound.

mod operator;
mod sensitivity;
mod state;
mod system;

pub use operator::{annihilation, build_canonical_pair, ladder_pair, CMatrix, CVector, HilbertOperator};
pub use sensitivity::{
    bound_check, bound_series, bound_series_batch, growth_rate_fit, heisenberg_operator, sensitivity_expectation,
    sensitivity_operator, BoundReport, QuantumSensitivity, SensitivityExpectation, BOUND_SLACK,
};
pub use state::QuantumState;
pub use system::{propagator, propagator_between, Drive, QuantumSystem};
