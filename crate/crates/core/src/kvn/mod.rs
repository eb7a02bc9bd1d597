//! Koopman-von Neumann wavefunctions and Liouville densities.

mod density;
mod grid;
pub mod io;
mod observable;
mod residual;
mod state;

pub use density::{density_of, expectation, expectation_raw, EnsembleDensity, GridDensity, MomentumSheet, PhaseSpaceDensity, DensityFn};
pub use grid::{GridSpec, Interpolant};
pub use observable::Observable;
pub use residual::{liouville_residual, liouville_residual_report, DensitySeries, ResidualReport};
pub use state::{evolve_analytic, evolve_wavefunction, EnsembleWave, GaussianState, GridWave, KvnWaveFunction};
