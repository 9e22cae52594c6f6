//! Rate approximations and the event draw they induce.
//!
//! An approximation replaces `lambda_i(phi_s(z))`, the rate along the flow,
//! by a cheap function of `(z, s)`. Constant and affine-in-s families admit
//! closed-form inversion of the integrated rate; anything else falls back
//! to bisection on a quadrature of the integrated rate.

use super::FlowApprox;
use crate::process::{AffineRate, PdmpSpec, State};
use crate::rng::{RngBank, Role};
use crate::scalar::Real;
use crate::Result;
use std::sync::Arc;

/// Ingredients of the gradient-free finite-difference rates: the potential
/// and the excess rate, evaluated on a position/velocity state.
#[derive(Clone)]
pub struct FiniteDiffRates<F> {
    pub psi: Arc<dyn Fn(&[F]) -> F + Send + Sync>,
    pub gamma: Arc<dyn Fn(&State<F>, usize) -> F + Send + Sync>,
}

/// Replacement for the rate along the flow, per kernel.
#[derive(Clone)]
pub enum RateApprox<F> {
    /// `lambda_i(z)`, constant over the step.
    Frozen,
    /// `lambda_i(phi_delta(z))`, constant over the step.
    Endpoint,
    /// `lambda_i(phi_bar_s(z; delta, q))` along the numerical integrator.
    AlongIntegrator,
    /// `(psi(x + v_i e_i delta) - psi(x))_+ / delta + gamma_i(z)`, the
    /// gradient-free choice for coordinate-flip samplers.
    FiniteDifference(FiniteDiffRates<F>),
    /// `lambda_i(z) + (s/delta) (lambda_i(phi_delta(z)) - lambda_i(z))`,
    /// affine in `s`.
    LinearSecondOrder,
    /// The true rate along the flow.
    Exact,
}

impl<F: Real> RateApprox<F> {
    /// Evaluate the approximate rate of kernel `i` at in-step offset `s`.
    /// Rates clamp at zero by construction of each variant.
    pub fn value(
        &self,
        pdmp: &PdmpSpec<F>,
        flow: &FlowApprox<F>,
        z: &State<F>,
        s: F,
        delta: F,
        q: usize,
        i: usize,
    ) -> F {
        match self {
            RateApprox::Frozen => pdmp.rates.rate(i, z),
            RateApprox::Endpoint => pdmp.rates.rate(i, &end_of_step(pdmp, flow, z, delta, q)),
            RateApprox::AlongIntegrator => {
                let probe = flow
                    .step(pdmp, z, s, delta, q)
                    .expect("integrator available for along-integrator rates");
                pdmp.rates.rate(i, &probe)
            }
            RateApprox::FiniteDifference(fd) => {
                let vi = z.velocity[i];
                let mut shifted = z.position.clone();
                shifted[i] = shifted[i] + vi * delta;
                let diff = ((fd.psi)(&shifted) - (fd.psi)(&z.position)).max(F::zero());
                diff / delta + (fd.gamma)(z, i)
            }
            RateApprox::LinearSecondOrder => {
                let r0 = pdmp.rates.rate(i, z);
                let r1 = pdmp.rates.rate(i, &end_of_step(pdmp, flow, z, delta, q));
                (r0 + (s / delta) * (r1 - r0)).max(F::zero())
            }
            RateApprox::Exact => {
                let probe = pdmp
                    .flow
                    .at(z, s)
                    .expect("exact flow required for exact rates");
                pdmp.rates.rate(i, &probe)
            }
        }
    }

    /// Closed-form clock of kernel `i` over the step, when the variant
    /// admits one. Constant variants yield a constant clock, the affine
    /// variant an affine clock, the exact variant whatever profile the
    /// model registered.
    pub fn kernel_clock(
        &self,
        pdmp: &PdmpSpec<F>,
        flow: &FlowApprox<F>,
        z: &State<F>,
        delta: F,
        q: usize,
        i: usize,
    ) -> Option<AffineRate<F>> {
        match self {
            RateApprox::Frozen | RateApprox::Endpoint | RateApprox::FiniteDifference(_) => Some(
                AffineRate::constant(self.value(pdmp, flow, z, F::zero(), delta, q, i)),
            ),
            RateApprox::LinearSecondOrder => {
                let r0 = pdmp.rates.rate(i, z);
                let r1 = pdmp.rates.rate(i, &end_of_step(pdmp, flow, z, delta, q));
                Some(AffineRate::new(r0, (r1 - r0) / delta))
            }
            RateApprox::Exact => pdmp.rates.clock(z, i),
            RateApprox::AlongIntegrator => None,
        }
    }
}

fn end_of_step<F: Real>(
    pdmp: &PdmpSpec<F>,
    flow: &FlowApprox<F>,
    z: &State<F>,
    delta: F,
    q: usize,
) -> State<F> {
    match pdmp.flow.at(z, delta) {
        Ok(state) => state,
        Err(_) => flow
            .step(pdmp, z, delta, delta, q)
            .expect("either an exact flow or an integrator is required"),
    }
}

/// All per-kernel approximate rates at offset `s`.
pub fn rate_values<F: Real>(
    ra: &RateApprox<F>,
    pdmp: &PdmpSpec<F>,
    flow: &FlowApprox<F>,
    z: &State<F>,
    s: F,
    delta: F,
    q: usize,
) -> Vec<F> {
    (0..pdmp.num_kernels())
        .map(|i| ra.value(pdmp, flow, z, s, delta, q, i))
        .collect()
}

/// An event drawn from the approximate clock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxEvent<F> {
    /// Offset within the step, in `[0, horizon]`.
    pub offset: F,
    pub kernel: usize,
}

/// Draw the next approximate event within `horizon`.
///
/// The event time has survival `exp(-int_0^t sum_i rate_i(z, s) ds)` and the
/// kernel is distributed proportionally to the per-kernel rates at the drawn
/// time. With closed-form clocks this is realised by per-kernel inversion
/// and superposition; otherwise by bisection (time tolerance 1e-12) on a
/// quadrature of the integrated total rate followed by a discrete draw.
pub fn sample_event<F: Real>(
    ra: &RateApprox<F>,
    pdmp: &PdmpSpec<F>,
    flow: &FlowApprox<F>,
    z: &State<F>,
    delta: F,
    horizon: F,
    q: usize,
    bank: &mut RngBank,
) -> Result<Option<ApproxEvent<F>>> {
    let m = pdmp.num_kernels();
    if m == 0 {
        return Ok(None);
    }
    let clocks: Option<Vec<AffineRate<F>>> = (0..m)
        .map(|i| ra.kernel_clock(pdmp, flow, z, delta, q, i))
        .collect();
    if let Some(clocks) = clocks {
        let mut best: Option<ApproxEvent<F>> = None;
        for (i, clock) in clocks.iter().enumerate() {
            let e = F::from_f64_lossy(bank.exp_level(Role::Clock));
            if let Some(t) = clock.first_arrival(e, horizon) {
                if best.map_or(true, |b| t < b.offset) {
                    best = Some(ApproxEvent { offset: t, kernel: i });
                }
            }
        }
        return Ok(best);
    }

    // General variant: invert the integrated total rate numerically.
    let total = |s: F| -> F {
        (0..m).fold(F::zero(), |acc, i| {
            acc + ra.value(pdmp, flow, z, s, delta, q, i)
        })
    };
    let integral = |t: F| simpson(&total, t, 64);
    let e = F::from_f64_lossy(bank.exp_level(Role::Clock));
    if !e.is_finite() || integral(horizon) < e {
        return Ok(None);
    }
    let tol = F::from_f64_lossy(1e-12);
    let (mut lo, mut hi) = (F::zero(), horizon);
    while hi - lo > tol {
        let mid = (lo + hi) / F::from_f64_lossy(2.0);
        if integral(mid) < e {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let offset = (lo + hi) / F::from_f64_lossy(2.0);
    let weights = rate_values(ra, pdmp, flow, z, offset, delta, q);
    let kernel = crate::process::draw_kernel_index(&weights, bank.stream(Role::Pick))?;
    Ok(Some(ApproxEvent { offset, kernel }))
}

/// Composite Simpson quadrature of `f` on `[0, t]`.
fn simpson<F: Real>(f: &dyn Fn(F) -> F, t: F, panels: usize) -> F {
    if t <= F::zero() {
        return F::zero();
    }
    let h = t / F::from_f64_lossy(panels as f64);
    let half = F::from_f64_lossy(0.5);
    let sixth = F::from_f64_lossy(1.0 / 6.0);
    let four = F::from_f64_lossy(4.0);
    let mut acc = F::zero();
    for k in 0..panels {
        let x0 = h * F::from_f64_lossy(k as f64);
        let x1 = x0 + h * half;
        let x2 = x0 + h;
        acc = acc + h * sixth * (f(x0) + four * f(x1) + f(x2));
    }
    acc
}
