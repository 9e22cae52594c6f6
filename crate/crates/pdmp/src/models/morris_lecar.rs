//! Stochastic Morris-Lecar neuron: a membrane potential driven by an ODE
//! whose potassium conductance jumps with the number of open channels.

use crate::process::{Flow, JumpKernelFamily, KernelFn, PdmpSpec, RateFamily, State};
use crate::Pdmp;
use std::sync::Arc;

/// All parameters are mandatory; the model carries no defaults.
#[derive(Debug, Clone, Copy)]
pub struct MorrisLecarParams {
    pub capacitance: f64,
    pub g_leak: f64,
    pub g_ca: f64,
    pub g_k: f64,
    pub v_leak: f64,
    pub v_ca: f64,
    pub v_k: f64,
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
    pub v4: f64,
    pub lambda_k_bar: f64,
    pub n_k: usize,
}

/// State layout: `position = [membrane potential]`,
/// `velocity = [open channel count]`.
#[derive(Debug, Clone)]
pub struct MorrisLecarModel {
    pub params: MorrisLecarParams,
}

impl MorrisLecarModel {
    pub fn new(params: MorrisLecarParams) -> Self {
        assert!(params.n_k >= 1);
        assert!(params.capacitance > 0.0);
        MorrisLecarModel { params }
    }

    pub fn m_inf(&self, nu: f64) -> f64 {
        0.5 * (1.0 + ((nu - self.params.v1) / self.params.v2).tanh())
    }

    pub fn n_inf(&self, nu: f64) -> f64 {
        0.5 * (1.0 + ((nu - self.params.v3) / 4.0).tanh())
    }

    pub fn lambda_k(&self, nu: f64) -> f64 {
        self.params.lambda_k_bar * ((nu - self.params.v3) / (2.0 * self.params.v4)).cosh()
    }

    pub fn alpha_k(&self, nu: f64) -> f64 {
        self.lambda_k(nu) * self.n_inf(nu)
    }

    pub fn beta_k(&self, nu: f64) -> f64 {
        self.lambda_k(nu) * (1.0 - self.n_inf(nu))
    }

    /// Membrane potential drift at `(theta, nu)`.
    pub fn drift(&self, theta: f64, nu: f64) -> f64 {
        let p = &self.params;
        (1.0 - p.g_leak * (nu - p.v_leak)
            - p.g_ca * self.m_inf(nu) * (nu - p.v_ca)
            - p.g_k * (theta / p.n_k as f64) * (nu - p.v_k))
            / p.capacitance
    }

    /// Opening rate `(N_K - theta) alpha_K(nu)`.
    pub fn open_rate(&self, z: &State<f64>) -> f64 {
        let theta = z.velocity[0];
        let nu = z.position[0];
        ((self.params.n_k as f64 - theta) * self.alpha_k(nu)).max(0.0)
    }

    /// Closing rate `theta beta_K(nu)`.
    pub fn close_rate(&self, z: &State<f64>) -> f64 {
        let theta = z.velocity[0];
        let nu = z.position[0];
        (theta * self.beta_k(nu)).max(0.0)
    }

    /// Assemble the process. The flow has no explicit solution, so only the
    /// vector field is registered and simulation must go through an
    /// integrator-backed scheme.
    pub fn to_pdmp(&self) -> Pdmp {
        let model = self.clone();
        let flow = Flow::field_only(Arc::new(move |z: &State<f64>| State {
            position: vec![model.drift(z.velocity[0], z.position[0])],
            velocity: vec![0.0],
        }));
        let open_model = self.clone();
        let close_model = self.clone();
        let rates = RateFamily::new(vec![
            Arc::new(move |z: &State<f64>| open_model.open_rate(z)) as _,
            Arc::new(move |z: &State<f64>| close_model.close_rate(z)) as _,
        ]);
        let open: KernelFn<f64> = Arc::new(|z: &State<f64>, _u: &[f64]| {
            let mut out = z.clone();
            out.velocity[0] += 1.0;
            Ok(out)
        });
        let close: KernelFn<f64> = Arc::new(|z: &State<f64>, _u: &[f64]| {
            let mut out = z.clone();
            out.velocity[0] -= 1.0;
            Ok(out)
        });
        PdmpSpec::new(
            flow,
            rates,
            JumpKernelFamily::deterministic(vec![open, close]),
            1,
            1,
        )
    }
}
