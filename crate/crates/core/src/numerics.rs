use serde::{Deserialize, Serialize};

use crate::par::Execution;
use crate::phase::{Hamiltonian, IntegratorConfig, PhasePoint, Stepper};
use crate::error::Result;

/// Shared numeric options: integrator settings and scheduling.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    pub integrator: IntegratorConfig,
    #[serde(skip)]
    pub exec: Execution,
}

impl Numerics {
    pub fn sequential() -> Self {
        Numerics { exec: crate::par::Execution::Sequential, ..Default::default() }
    }

    /// Resolves one stepper for a batch of points: the smallest step among the
    /// probes.
    pub fn stepper_for<M: Hamiltonian + ?Sized>(&self, model: &M, probes: &[PhasePoint], t0: f64) -> Result<Stepper> {
        let mut best: Option<Stepper> = None;
        for z in probes {
            let s = self.integrator.stepper(model, z, t0)?;
            best = match best {
                Some(b) if b.dt().unwrap_or(f64::INFINITY) <= s.dt().unwrap_or(f64::INFINITY) => Some(b),
                _ => Some(s),
            };
        }
        match best {
            Some(s) => Ok(s),
            None => Err(crate::error::invalid("probes", "need at least one probe point")),
        }
    }
}
