//! Process definition and exact simulation.
//!
//! A process is specified by its three characteristics: the deterministic
//! flow, the event rates, and the jump kernels. Between events the state
//! follows the flow; events arrive with state-dependent intensity and apply
//! one of the kernels.

mod clock;
mod simulate;

pub use clock::{AffineRate, ClockProfile};
pub use simulate::{
    draw_kernel_index, event_time_from_level, next_event, simulate, simulate_capped,
    NextEvent, DEFAULT_MAX_EVENTS,
};

use crate::scalar::Real;
use crate::{Error, Result};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Process state: a position block plus a velocity (or auxiliary) block.
///
/// The velocity block carries whatever the model needs alongside the
/// position: Zig-Zag velocities in `{-1, +1}^d`, Bouncy Particle velocities
/// in `R^d`, a momentum, a channel count. It may be empty.
#[derive(Debug, Clone, PartialEq)]
pub struct State<F> {
    pub position: Vec<F>,
    pub velocity: Vec<F>,
}

impl<F: Real> State<F> {
    pub fn new(position: Vec<F>, velocity: Vec<F>) -> Self {
        State { position, velocity }
    }

    /// l1 distance between position blocks.
    pub fn l1_position_distance(&self, other: &Self) -> F {
        assert_eq!(self.position.len(), other.position.len());
        self.position
            .iter()
            .zip(&other.position)
            .fold(F::zero(), |acc, (a, b)| acc + (*a - *b).abs())
    }

    /// l2 distance between position blocks.
    pub fn l2_position_distance(&self, other: &Self) -> F {
        assert_eq!(self.position.len(), other.position.len());
        self.position
            .iter()
            .zip(&other.position)
            .fold(F::zero(), |acc, (a, b)| acc + (*a - *b) * (*a - *b))
            .sqrt()
    }
}

/// Closure evaluating the vector field z -> Phi(z), returned in state layout.
pub type VectorFieldFn<F> = Arc<dyn Fn(&State<F>) -> State<F> + Send + Sync>;
/// Closure evaluating the exact flow (z, t) -> phi_t(z).
pub type ExactFlowFn<F> = Arc<dyn Fn(&State<F>, F) -> State<F> + Send + Sync>;
/// Closure evaluating one event rate z -> lambda_i(z).
pub type RateFn<F> = Arc<dyn Fn(&State<F>) -> F + Send + Sync>;
/// Closure describing the rate of kernel `i` along the flow started at `z`.
pub type ClockBuilderFn<F> = Arc<dyn Fn(&State<F>, usize) -> ClockProfile<F> + Send + Sync>;
/// Closure returning an affine bound dominating the total rate along the
/// flow from `z` over a horizon: `(z, horizon) -> (a, b)` with
/// `sum_i lambda_i(phi_s(z)) <= a + b s` for `s` in `[0, horizon]`.
pub type BoundBuilderFn<F> = Arc<dyn Fn(&State<F>, F) -> AffineRate<F> + Send + Sync>;
/// Closure applying kernel `i` to a state given a noise draw.
pub type KernelFn<F> = Arc<dyn Fn(&State<F>, &[F]) -> Result<State<F>> + Send + Sync>;
/// Closure drawing kernel noise from the noise law.
pub type NoiseSamplerFn<F> = Arc<dyn Fn(&mut ChaCha8Rng) -> Vec<F> + Send + Sync>;

/// Deterministic motion between events.
#[derive(Clone)]
pub struct Flow<F> {
    pub vector_field: Option<VectorFieldFn<F>>,
    pub exact_flow: Option<ExactFlowFn<F>>,
    /// Advisory Lipschitz constant of the vector field, when known.
    pub lipschitz_hint: Option<F>,
}

impl<F: Real> Flow<F> {
    /// Flow with a closed form and its vector field.
    pub fn exact(vector_field: VectorFieldFn<F>, exact_flow: ExactFlowFn<F>) -> Self {
        Flow {
            vector_field: Some(vector_field),
            exact_flow: Some(exact_flow),
            lipschitz_hint: None,
        }
    }

    /// Flow known only through its vector field; needs an integrator.
    pub fn field_only(vector_field: VectorFieldFn<F>) -> Self {
        Flow {
            vector_field: Some(vector_field),
            exact_flow: None,
            lipschitz_hint: None,
        }
    }

    /// Evaluate `phi_t(z)`. Errors when no closed form is registered.
    pub fn at(&self, z: &State<F>, t: F) -> Result<State<F>> {
        debug_assert!(t >= F::zero());
        match &self.exact_flow {
            Some(flow) => Ok(flow(z, t)),
            None => Err(Error::NoExactFlow),
        }
    }
}

/// Event rate family: `m` nonnegative rates, optionally with closed-form
/// descriptions of the rate along the flow and a thinning bound.
#[derive(Clone)]
pub struct RateFamily<F> {
    rates: Vec<RateFn<F>>,
    clock_builder: Option<ClockBuilderFn<F>>,
    along_flow_bound: Option<BoundBuilderFn<F>>,
}

impl<F: Real> RateFamily<F> {
    pub fn new(rates: Vec<RateFn<F>>) -> Self {
        RateFamily {
            rates,
            clock_builder: None,
            along_flow_bound: None,
        }
    }

    /// Register closed-form profiles of `s -> lambda_i(phi_s(z))`.
    pub fn with_clocks(mut self, builder: ClockBuilderFn<F>) -> Self {
        self.clock_builder = Some(builder);
        self
    }

    /// Register an affine dominating bound for the total rate along the flow.
    pub fn with_bound(mut self, bound: BoundBuilderFn<F>) -> Self {
        self.along_flow_bound = Some(bound);
        self
    }

    /// Number of kernels.
    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    /// Pointwise rate `lambda_i(z)`.
    pub fn rate(&self, i: usize, z: &State<F>) -> F {
        (self.rates[i])(z)
    }

    /// Total rate `lambda(z)`.
    pub fn total(&self, z: &State<F>) -> F {
        self.rates.iter().fold(F::zero(), |acc, r| acc + r(z))
    }

    /// Closed-form profile of kernel `i`'s rate along the flow from `z`.
    pub fn clock(&self, z: &State<F>, i: usize) -> Option<ClockProfile<F>> {
        self.clock_builder.as_ref().map(|b| b(z, i))
    }

    pub fn has_clocks(&self) -> bool {
        self.clock_builder.is_some()
    }

    /// Thinning bound over `[0, horizon]` from `z`, when registered.
    pub fn bound(&self, z: &State<F>, horizon: F) -> Option<AffineRate<F>> {
        self.along_flow_bound.as_ref().map(|b| b(z, horizon))
    }
}

/// Jump kernels realised as deterministic maps of `(state, noise)`, where
/// the noise is drawn from a model-wide law shared by all kernels. Fixing
/// the noise draw couples exact and approximate jumps through the same
/// randomness.
#[derive(Clone)]
pub struct JumpKernelFamily<F> {
    kernels: Vec<KernelFn<F>>,
    noise_sampler: Option<NoiseSamplerFn<F>>,
}

impl<F: Real> JumpKernelFamily<F> {
    /// Kernels that consume no noise (deterministic jumps).
    pub fn deterministic(kernels: Vec<KernelFn<F>>) -> Self {
        JumpKernelFamily {
            kernels,
            noise_sampler: None,
        }
    }

    pub fn with_noise(kernels: Vec<KernelFn<F>>, sampler: NoiseSamplerFn<F>) -> Self {
        JumpKernelFamily {
            kernels,
            noise_sampler: Some(sampler),
        }
    }

    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }

    /// Draw one noise realisation from the noise law.
    pub fn sample_noise(&self, rng: &mut ChaCha8Rng) -> Vec<F> {
        match &self.noise_sampler {
            Some(s) => s(rng),
            None => Vec::new(),
        }
    }

    /// Apply kernel `i` with the given noise: `F_i(z, u)`.
    pub fn apply(&self, i: usize, z: &State<F>, noise: &[F]) -> Result<State<F>> {
        (self.kernels[i])(z, noise)
    }
}

/// A PDMP by its three characteristics.
#[derive(Clone)]
pub struct PdmpSpec<F> {
    pub flow: Flow<F>,
    pub rates: RateFamily<F>,
    pub kernels: JumpKernelFamily<F>,
    pub position_dim: usize,
    pub velocity_dim: usize,
}

impl<F: Real> PdmpSpec<F> {
    pub fn new(
        flow: Flow<F>,
        rates: RateFamily<F>,
        kernels: JumpKernelFamily<F>,
        position_dim: usize,
        velocity_dim: usize,
    ) -> Self {
        assert_eq!(
            rates.len(),
            kernels.len(),
            "rate and kernel families must have the same arity"
        );
        PdmpSpec {
            flow,
            rates,
            kernels,
            position_dim,
            velocity_dim,
        }
    }

    /// Number of kernels `m`.
    pub fn num_kernels(&self) -> usize {
        self.rates.len()
    }
}

/// One recorded event of a skeleton path.
#[derive(Debug, Clone)]
pub struct SkeletonEvent<F> {
    pub time: F,
    pub pre_state: State<F>,
    pub post_state: State<F>,
    pub kernel: usize,
}

/// Exact trajectory record: event times with pre/post states, plus the
/// terminal state. Between events the path follows the flow from the last
/// post-jump state, so the path can be evaluated at any time.
#[derive(Debug, Clone)]
pub struct SkeletonPath<F> {
    pub initial_state: State<F>,
    pub events: Vec<SkeletonEvent<F>>,
    pub terminal_time: F,
    pub terminal_state: State<F>,
}

impl<F: Real> SkeletonPath<F> {
    /// Number of recorded jumps.
    pub fn event_count(&self) -> usize {
        self.events.len()
    }

    /// Evaluate the path at time `t` in `[0, T]` using the exact flow.
    pub fn state_at(&self, flow: &Flow<F>, t: F) -> Result<State<F>> {
        assert!(t >= F::zero() && t <= self.terminal_time);
        let mut anchor_time = F::zero();
        let mut anchor = &self.initial_state;
        for ev in &self.events {
            if ev.time > t {
                break;
            }
            anchor_time = ev.time;
            anchor = &ev.post_state;
        }
        flow.at(anchor, t - anchor_time)
    }

    /// Evaluate the path on an increasing sequence of times in one sweep.
    pub fn states_at_times(&self, flow: &Flow<F>, times: &[F]) -> Result<Vec<State<F>>> {
        let mut out = Vec::with_capacity(times.len());
        let mut anchor_time = F::zero();
        let mut anchor = &self.initial_state;
        let mut next_event = 0;
        for &t in times {
            assert!(t >= anchor_time && t <= self.terminal_time);
            while next_event < self.events.len() && self.events[next_event].time <= t {
                anchor_time = self.events[next_event].time;
                anchor = &self.events[next_event].post_state;
                next_event += 1;
            }
            out.push(flow.at(anchor, t - anchor_time)?);
        }
        Ok(out)
    }
}
