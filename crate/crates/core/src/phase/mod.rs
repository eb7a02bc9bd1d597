//! Hamiltonian models, canonical points and flow maps.
//!
//! Sign convention: trajectories follow `dq/dt = ∂H/∂p`, `dp/dt = −∂H/∂q`;
//! the Liouville operator `L = Σ ∂H/∂q ∂/∂p − ∂H/∂p ∂/∂q` advances densities
//! (`∂ρ/∂t = Lρ`) and its negative advances phase functions.

mod flow;
mod integrator;
mod model;
mod point;

pub use flow::{advance, evaluate_hamiltonian, flow, inverse_flow, observable_rate, poisson_bracket_action, FlowResult};
pub(crate) use integrator::dopri5;
pub use integrator::{FlowStats, IntegratorConfig, Scheme, Stepper};
pub use model::{
    gradient_consistency, ClosureModel, ConstantForceParams, DoubleWellParams, FreeParams, Hamiltonian,
    HarmonicParams, HenonHeilesParams, KickedMap, Model, ModelDescriptor, ModelKind, OperatorSplit,
    QuarticParams, StandardMapParams,
};
pub use point::PhasePoint;
