//! Zig-Zag sampler: unit-box velocities, coordinate flips.

use super::potential::{softplus, Potential};
use crate::process::{
    AffineRate, ClockProfile, Flow, JumpKernelFamily, KernelFn, PdmpSpec, RateFamily, State,
};
use crate::Pdmp;
use std::sync::Arc;

/// Excess switching rate added on top of the positive part.
#[derive(Clone)]
pub enum ExcessRate {
    Zero,
    /// Per-coordinate constants.
    Const(Vec<f64>),
    /// Fully state-dependent; exact simulation then needs a custom bound.
    StateFn(Arc<dyn Fn(&State<f64>, usize) -> f64 + Send + Sync>),
}

/// How switching rates are built from the directional derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZzsRateStyle {
    /// `(v_i d_i psi(x))_+ + gamma_i`.
    PositivePart,
    /// `log(1 + exp(v_i d_i psi(x)))`: smooth, exceeds the positive part
    /// by at most `log 2`.
    Smooth,
}

/// Zig-Zag sampler targeting `exp(-psi)`.
#[derive(Clone)]
pub struct ZzsModel {
    pub potential: Potential,
    pub gamma: ExcessRate,
    pub style: ZzsRateStyle,
}

impl ZzsModel {
    /// Positive-part rates without excess rate.
    pub fn gaussian(dim: usize) -> Self {
        ZzsModel {
            potential: Potential::gaussian(dim),
            gamma: ExcessRate::Zero,
            style: ZzsRateStyle::PositivePart,
        }
    }

    pub fn new(potential: Potential, gamma: ExcessRate, style: ZzsRateStyle) -> Self {
        if matches!(style, ZzsRateStyle::Smooth) {
            assert!(
                matches!(gamma, ExcessRate::Zero),
                "smooth rates carry their own excess; no extra gamma"
            );
        }
        ZzsModel {
            potential,
            gamma,
            style,
        }
    }

    /// The 1-d constant-rate velocity-flip process: zero potential with a
    /// constant excess rate.
    pub fn telegraph(rate: f64) -> Self {
        ZzsModel {
            potential: Potential::zero(1),
            gamma: ExcessRate::Const(vec![rate]),
            style: ZzsRateStyle::PositivePart,
        }
    }

    pub fn dim(&self) -> usize {
        self.potential.dim()
    }

    fn gamma_at(&self, z: &State<f64>, i: usize) -> f64 {
        match &self.gamma {
            ExcessRate::Zero => 0.0,
            ExcessRate::Const(c) => c[i],
            ExcessRate::StateFn(f) => f(z, i),
        }
    }

    /// Switching rate of coordinate `i` at `z`.
    pub fn rate(&self, z: &State<f64>, i: usize) -> f64 {
        let u = z.velocity[i] * self.potential.partial(&z.position, i);
        match self.style {
            ZzsRateStyle::PositivePart => u.max(0.0) + self.gamma_at(z, i),
            ZzsRateStyle::Smooth => softplus(u),
        }
    }

    /// Whether per-kernel clocks admit closed-form inversion: quadratic
    /// potential with, per coordinate, either no excess rate or no
    /// potential curvature.
    fn has_closed_form_clocks(&self) -> bool {
        if self.style != ZzsRateStyle::PositivePart {
            return false;
        }
        let Some(w) = self.potential.diag_precision() else {
            return false;
        };
        match &self.gamma {
            ExcessRate::Zero => true,
            ExcessRate::Const(c) => c.iter().zip(w).all(|(ci, wi)| *ci == 0.0 || *wi == 0.0),
            ExcessRate::StateFn(_) => false,
        }
    }

    fn has_affine_bound(&self) -> bool {
        let lips = (0..self.dim()).all(|i| self.potential.line_lipschitz(i).is_some());
        let gamma_ok = !matches!(self.gamma, ExcessRate::StateFn(_));
        lips && gamma_ok
    }

    /// Assemble the process: linear transport flow, per-coordinate rates,
    /// flip kernels, plus closed-form clocks or a thinning bound when the
    /// potential's structure allows.
    pub fn to_pdmp(&self) -> Pdmp {
        let d = self.dim();
        let flow = linear_transport_flow();
        let kernels: Vec<KernelFn<f64>> = (0..d)
            .map(|i| {
                Arc::new(move |z: &State<f64>, _u: &[f64]| {
                    let mut out = z.clone();
                    out.velocity[i] = -out.velocity[i];
                    Ok(out)
                }) as KernelFn<f64>
            })
            .collect();
        let rate_fns = (0..d)
            .map(|i| {
                let model = self.clone();
                Arc::new(move |z: &State<f64>| model.rate(z, i)) as _
            })
            .collect();
        let mut rates = RateFamily::new(rate_fns);
        if self.has_closed_form_clocks() {
            let model = self.clone();
            rates = rates.with_clocks(Arc::new(move |z: &State<f64>, i: usize| {
                let (a, b) = model
                    .potential
                    .directional_rate_line(&z.position, &z.velocity, i)
                    .expect("closed-form clocks imply a quadratic potential");
                ClockProfile::new(a + model.gamma_at(z, i), b)
            }));
        } else if self.has_affine_bound() {
            let model = self.clone();
            rates = rates.with_bound(Arc::new(move |z: &State<f64>, _h: f64| {
                let mut a = 0.0;
                let mut b = 0.0;
                let extra = match model.style {
                    ZzsRateStyle::Smooth => std::f64::consts::LN_2,
                    ZzsRateStyle::PositivePart => 0.0,
                };
                for i in 0..model.dim() {
                    let u = z.velocity[i] * model.potential.partial(&z.position, i);
                    a += u.max(0.0) + extra + model.gamma_at(z, i);
                    b += model.potential.line_lipschitz(i).expect("bound checked");
                }
                AffineRate::new(a, b)
            }));
        }
        PdmpSpec::new(
            flow,
            rates,
            JumpKernelFamily::deterministic(kernels),
            d,
            d,
        )
    }
}

/// Flow of position-velocity transport: positions move with constant
/// velocity, velocities are frozen.
pub fn linear_transport_flow() -> Flow<f64> {
    Flow::exact(
        Arc::new(|z: &State<f64>| State {
            position: z.velocity.clone(),
            velocity: vec![0.0; z.velocity.len()],
        }),
        Arc::new(|z: &State<f64>, t: f64| State {
            position: z
                .position
                .iter()
                .zip(&z.velocity)
                .map(|(x, v)| x + v * t)
                .collect(),
            velocity: z.velocity.clone(),
        }),
    )
}

/// Negate coordinate `i` of a velocity vector.
pub fn zzs_flip(v: &[f64], i: usize) -> Vec<f64> {
    let mut out = v.to_vec();
    out[i] = -out[i];
    out
}

/// Geometric-ergodicity Lyapunov function
/// `exp(alpha psi(x) + sum_i phi_eps(v_i d_i psi(x)))` with
/// `phi_eps(s) = sign(s) log(1 + eps |s|) / 2`.
pub fn lyapunov_zzs(potential: &Potential, alpha: f64, epsilon: f64, z: &State<f64>) -> f64 {
    assert!(alpha > 0.0 && alpha < 1.0 && epsilon > 0.0);
    let grad = potential.grad(&z.position);
    let mut exponent = alpha * potential.psi(&z.position);
    for (vi, gi) in z.velocity.iter().zip(&grad) {
        let s = vi * gi;
        exponent += s.signum() * (1.0 + epsilon * s.abs()).ln() / 2.0;
    }
    exponent.exp()
}

/// One-step Lyapunov function for the discretised 1-d process:
/// `exp(alpha psi(x) + beta delta psi'(x) v)`, inflated when moving uphill
/// and deflated after a flip, so that one step contracts its expectation
/// far enough out whenever `alpha < 2 beta`.
pub fn lyapunov_zzs_onestep(
    potential: &Potential,
    alpha: f64,
    beta: f64,
    delta: f64,
    z: &State<f64>,
) -> f64 {
    assert!(alpha > 0.0 && alpha < 1.0 && beta > 0.0);
    let dpsi = potential.partial(&z.position, 0);
    let v = z.velocity[0];
    (alpha * potential.psi(&z.position) + beta * delta * dpsi * v).exp()
}
