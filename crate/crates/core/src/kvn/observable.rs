use std::fmt;
use std::sync::Arc;

use crate::phase::{Hamiltonian, Model};

type PhaseFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// A phase-space function `A(q, p)`.
#[derive(Clone)]
pub struct Observable {
    name: String,
    eval: PhaseFn,
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Observable({})", self.name)
    }
}

impl Observable {
    pub fn new(name: impl Into<String>, eval: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Observable { name: name.into(), eval: Arc::new(eval) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, q: &[f64], p: &[f64]) -> f64 {
        (self.eval)(q, p)
    }

    /// Evaluates on a packed `[q..., p...]` point.
    pub fn eval_packed(&self, z: &[f64]) -> f64 {
        let n = z.len() / 2;
        (self.eval)(&z[..n], &z[n..])
    }

    pub fn constant(c: f64) -> Self {
        Observable::new("1", move |_, _| c)
    }

    pub fn position(i: usize) -> Self {
        Observable::new(if i == 0 { "q".into() } else { format!("q{}", i + 1) }, move |q, _| q[i])
    }

    pub fn momentum(i: usize) -> Self {
        Observable::new(if i == 0 { "p".into() } else { format!("p{}", i + 1) }, move |_, p| p[i])
    }

    pub fn position_squared(i: usize) -> Self {
        Observable::new(if i == 0 { "q2".into() } else { format!("q{}_2", i + 1) }, move |q, _| q[i] * q[i])
    }

    /// The model's Hamiltonian at `t = 0`.
    pub fn energy(model: &Model) -> Self {
        let m = model.clone();
        Observable::new("H", move |q, p| m.value(q, p, 0.0))
    }

    /// `{q, p, q², H}` for a one-dimensional model.
    pub fn standard_set(model: &Model) -> Vec<Observable> {
        vec![
            Observable::position(0),
            Observable::momentum(0),
            Observable::position_squared(0),
            Observable::energy(model),
        ]
    }
}
