//! Schrödinger, Heisenberg and interaction pictures, Dyson evolution and the
//! constant-force closed form.

mod constant_force;
mod dyson;
mod expect;
mod interaction;
mod support;

pub use constant_force::{constant_force_density, constant_force_interaction_density};
pub use dyson::{dyson_evolve, DysonConfig};
pub use expect::{
    expectation_heisenberg, expectation_in, expectation_interaction, expectation_series, expectation_schrodinger, heisenberg_observable,
    interaction_density, interaction_expectation, interaction_transport, pullback_density, relative_difference, to_interaction_picture,
    PictureTag,
};
pub use interaction::{interaction_liouvillian, InteractionLiouvillian1D};
