//! Classical sensitivity: tangent flows, Lyapunov spectra and KS entropy.

mod lyapunov;
mod sensitivity;

pub use lyapunov::{
    ks_entropy, log_tangent_norm_series, lyapunov_ensemble, lyapunov_spectrum, pairing_residual, Checkpoint,
    LyapunovConfig, LyapunovSpectrum, KS_FLOOR,
};
pub use sensitivity::{finite_difference_sensitivity, tangent_flow, tangent_flow_series, SensitivityMatrix};
