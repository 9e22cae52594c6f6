//! Discretisation schemes for PDMPs.
//!
//! Three schemes over a time mesh: the fully discrete scheme applies at most
//! one jump per step at the step end; the partially discrete scheme applies
//! at most one jump per step at the drawn event time; the order-p scheme
//! allows up to `p` jumps per step, lowering the approximation order by one
//! after each jump. Each scheme runs against pluggable approximations of the
//! flow, the rates and the kernels.

mod integrator;
mod rate_approx;
mod step;

pub use integrator::{FlowApprox, KernelApprox};
pub use rate_approx::{rate_values, sample_event, ApproxEvent, FiniteDiffRates, RateApprox};
pub use step::{fd_step, order_p_step, pd_step, run_scheme};

use crate::process::State;
use crate::scalar::Real;

/// Which scheme updates the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Fully discrete: jumps forced to mesh points.
    Fd,
    /// Partially discrete: at most one mid-step jump.
    Pd,
    /// Up to `p` mid-step jumps with per-order approximations.
    OrderP(usize),
}

/// Time mesh as a list of step sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh<F> {
    steps: Vec<F>,
}

impl<F: Real> Mesh<F> {
    pub fn new(steps: Vec<F>) -> Self {
        assert!(!steps.is_empty(), "mesh must not be empty");
        assert!(
            steps.iter().all(|d| *d > F::zero()),
            "step sizes must be positive"
        );
        Mesh { steps }
    }

    /// `n` constant steps of size `delta`.
    pub fn constant(delta: F, n: usize) -> Self {
        Mesh::new(vec![delta; n])
    }

    /// Constant steps of size `delta` covering `[0, horizon]`; the horizon
    /// must be an integer multiple of the step size.
    pub fn from_horizon(delta: F, horizon: F) -> Self {
        let n = (horizon / delta).round();
        let n_usize = n.to_f64().unwrap() as usize;
        let err = (n * delta - horizon).abs();
        assert!(
            err <= F::from_f64_lossy(1e-9) * horizon.max(F::one()),
            "horizon must be a multiple of the step size"
        );
        Mesh::constant(delta, n_usize.max(1))
    }

    pub fn steps(&self) -> &[F] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn max_step(&self) -> F {
        self.steps
            .iter()
            .fold(F::zero(), |acc, d| if *d > acc { *d } else { acc })
    }

    pub fn horizon(&self) -> F {
        self.steps.iter().fold(F::zero(), |acc, d| acc + *d)
    }

    /// Mesh points `t_0 = 0 < t_1 < ... < t_N`.
    pub fn times(&self) -> Vec<F> {
        let mut out = Vec::with_capacity(self.steps.len() + 1);
        let mut t = F::zero();
        out.push(t);
        for d in &self.steps {
            t = t + *d;
            out.push(t);
        }
        out
    }
}

/// Full configuration of one scheme run.
#[derive(Clone)]
pub struct SchemeConfig<F> {
    pub scheme: Scheme,
    /// Rate approximations by order: entry `q - 1` is used for the q-th
    /// order clock. Lower orders default to frozen rates.
    rates_by_order: Vec<RateApprox<F>>,
    pub flow_approx: FlowApprox<F>,
    pub kernel_approx: KernelApprox<F>,
    pub mesh: Mesh<F>,
    pub delta0: F,
}

impl<F: Real> SchemeConfig<F> {
    /// Fully discrete scheme.
    pub fn fd(rate: RateApprox<F>, flow: FlowApprox<F>, mesh: Mesh<F>) -> Self {
        Self::build(Scheme::Fd, vec![rate], flow, KernelApprox::Exact, mesh)
    }

    /// Partially discrete scheme.
    pub fn pd(rate: RateApprox<F>, flow: FlowApprox<F>, mesh: Mesh<F>) -> Self {
        Self::build(Scheme::Pd, vec![rate], flow, KernelApprox::Exact, mesh)
    }

    /// Order-p scheme with the given top-order rate approximation; orders
    /// below `p` fall back to frozen rates.
    pub fn order_p(p: usize, top_rate: RateApprox<F>, flow: FlowApprox<F>, mesh: Mesh<F>) -> Self {
        assert!(p >= 1, "order must be at least 1");
        let mut rates = vec![RateApprox::Frozen; p];
        rates[p - 1] = top_rate;
        Self::build(Scheme::OrderP(p), rates, flow, KernelApprox::Exact, mesh)
    }

    /// Order-p scheme with an explicit rate approximation per order.
    pub fn order_p_with_rates(
        p: usize,
        rates_by_order: Vec<RateApprox<F>>,
        flow: FlowApprox<F>,
        mesh: Mesh<F>,
    ) -> Self {
        assert_eq!(rates_by_order.len(), p, "need one rate approximation per order");
        Self::build(Scheme::OrderP(p), rates_by_order, flow, KernelApprox::Exact, mesh)
    }

    fn build(
        scheme: Scheme,
        rates_by_order: Vec<RateApprox<F>>,
        flow_approx: FlowApprox<F>,
        kernel_approx: KernelApprox<F>,
        mesh: Mesh<F>,
    ) -> Self {
        let delta0 = mesh.max_step();
        SchemeConfig {
            scheme,
            rates_by_order,
            flow_approx,
            kernel_approx,
            mesh,
            delta0,
        }
    }

    pub fn with_kernel_approx(mut self, kernels: KernelApprox<F>) -> Self {
        self.kernel_approx = kernels;
        self
    }

    pub fn with_mesh(mut self, mesh: Mesh<F>) -> Self {
        self.delta0 = mesh.max_step();
        self.mesh = mesh;
        self
    }

    /// Rate approximation driving the order-q clock.
    pub fn rate_for_order(&self, q: usize) -> &RateApprox<F> {
        assert!(q >= 1);
        self.rates_by_order
            .get(q - 1)
            .unwrap_or(&RateApprox::Frozen)
    }

    /// Scheme order: 1 for FD and PD, `p` for the order-p scheme.
    pub fn order(&self) -> usize {
        match self.scheme {
            Scheme::Fd | Scheme::Pd => 1,
            Scheme::OrderP(p) => p,
        }
    }
}

/// One recorded event of a scheme step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord<F> {
    /// Event time offset within the step.
    pub offset: F,
    pub kernel: usize,
}

/// Mesh-indexed record of a scheme run.
#[derive(Debug, Clone)]
pub struct DiscretePath<F> {
    pub times: Vec<F>,
    pub states: Vec<State<F>>,
    /// Events per step; `step_events[n]` belongs to `(t_n, t_{n+1}]`.
    pub step_events: Vec<Vec<EventRecord<F>>>,
}

impl<F: Real> DiscretePath<F> {
    pub fn terminal_state(&self) -> &State<F> {
        self.states.last().expect("path has at least the initial state")
    }

    pub fn total_events(&self) -> usize {
        self.step_events.iter().map(Vec::len).sum()
    }
}
