//! Numerical integrators standing in for the flow, and kernel replacements.

use crate::process::{PdmpSpec, State};
use crate::scalar::Real;
use crate::{Error, Result};
use std::sync::Arc;

/// Custom integrator step `(z, s, delta, q) -> state`.
pub type CustomStepFn<F> = Arc<dyn Fn(&State<F>, F, F, usize) -> State<F> + Send + Sync>;
/// Custom kernel replacement `(i, z, noise, delta, q) -> state`.
pub type CustomKernelFn<F> =
    Arc<dyn Fn(usize, &State<F>, &[F], F, usize) -> Result<State<F>> + Send + Sync>;

/// Approximation of the flow map over one step.
#[derive(Clone)]
pub enum FlowApprox<F> {
    /// Delegate to the registered exact flow.
    ExactFlow,
    /// One explicit Euler step of size `s`.
    Euler,
    /// One kick-drift-kick leapfrog step of size `s`; assumes a separable
    /// Hamiltonian structure (position derivative independent of position,
    /// force independent of velocity).
    Leapfrog,
    /// User-supplied step with a declared order.
    Custom {
        step: CustomStepFn<F>,
        declared_order: usize,
    },
}

impl<F: Real> FlowApprox<F> {
    /// Declared local accuracy order `p` (local error `O(s^{p+1})`), or
    /// `None` for the exact flow.
    pub fn declared_order(&self) -> Option<usize> {
        match self {
            FlowApprox::ExactFlow => None,
            FlowApprox::Euler => Some(1),
            FlowApprox::Leapfrog => Some(2),
            FlowApprox::Custom { declared_order, .. } => Some(*declared_order),
        }
    }

    /// Whether this approximation is the exact flow.
    pub fn is_exact(&self) -> bool {
        matches!(self, FlowApprox::ExactFlow)
    }

    /// Evaluate `phi_bar_s(z; delta, q)` for `0 <= s <= delta`.
    pub fn step(
        &self,
        pdmp: &PdmpSpec<F>,
        z: &State<F>,
        s: F,
        _delta: F,
        q: usize,
    ) -> Result<State<F>> {
        debug_assert!(s >= F::zero());
        match self {
            FlowApprox::ExactFlow => pdmp.flow.at(z, s),
            FlowApprox::Euler => {
                let field = pdmp.flow.vector_field.as_ref().ok_or(Error::NoVectorField)?;
                let d = field(z);
                Ok(axpy(z, &d, s))
            }
            FlowApprox::Leapfrog => {
                let field = pdmp.flow.vector_field.as_ref().ok_or(Error::NoVectorField)?;
                let half = s / F::from_f64_lossy(2.0);
                // Kick: half step on the velocity block.
                let d0 = field(z);
                let mut mid = z.clone();
                for (v, dv) in mid.velocity.iter_mut().zip(&d0.velocity) {
                    *v = *v + half * *dv;
                }
                // Drift: full step on the position block.
                let d1 = field(&mid);
                for (x, dx) in mid.position.iter_mut().zip(&d1.position) {
                    *x = *x + s * *dx;
                }
                // Kick: half step on the velocity block at the new position.
                let d2 = field(&mid);
                for (v, dv) in mid.velocity.iter_mut().zip(&d2.velocity) {
                    *v = *v + half * *dv;
                }
                Ok(mid)
            }
            FlowApprox::Custom { step, .. } => Ok(step(z, s, _delta, q)),
        }
    }
}

fn axpy<F: Real>(z: &State<F>, d: &State<F>, s: F) -> State<F> {
    State {
        position: z
            .position
            .iter()
            .zip(&d.position)
            .map(|(x, dx)| *x + s * *dx)
            .collect(),
        velocity: z
            .velocity
            .iter()
            .zip(&d.velocity)
            .map(|(v, dv)| *v + s * *dv)
            .collect(),
    }
}

/// Replacement for the jump kernels; defaults to the exact kernels so that
/// exact and approximate jumps can share the same noise draw.
#[derive(Clone)]
pub enum KernelApprox<F> {
    Exact,
    Custom {
        apply: CustomKernelFn<F>,
        declared_order: usize,
    },
}

impl<F: Real> KernelApprox<F> {
    pub fn is_exact(&self) -> bool {
        matches!(self, KernelApprox::Exact)
    }

    /// Apply the (approximate) kernel `i` with the given noise.
    pub fn apply(
        &self,
        pdmp: &PdmpSpec<F>,
        i: usize,
        z: &State<F>,
        noise: &[F],
        delta: F,
        q: usize,
    ) -> Result<State<F>> {
        match self {
            KernelApprox::Exact => pdmp.kernels.apply(i, z, noise),
            KernelApprox::Custom { apply, .. } => apply(i, z, noise, delta, q),
        }
    }
}
