//! Synchronous coupling: both processes invert their per-kernel clocks at
//! the same uniforms and share the kernel noise.

use super::CoupledStep;
use crate::process::{simulate, State};
use crate::rng::{RngBank, Role};
use crate::schemes::Scheme;
use crate::{Error, Pdmp, Result, SchemeConfig};

/// One synchronously coupled step of length `delta`.
///
/// The exact process draws per-kernel event times by inverting the true
/// integrated rates at shared uniforms; if its first event falls in the
/// step it jumps there (shared kernel noise) and then continues exactly and
/// independently for the remaining time, drawing from `aux_exact`. The
/// scheme inverts its approximate clocks at the same uniforms, applies at
/// most one jump per step with the same noise, placed at the step end for
/// the fully discrete scheme and at the drawn time for the partially
/// discrete one.
pub fn wasserstein_step(
    pdmp: &Pdmp,
    cfg: &SchemeConfig,
    z_exact: &State<f64>,
    z_approx: &State<f64>,
    delta: f64,
    bank: &mut RngBank,
    aux_exact: &mut RngBank,
) -> Result<CoupledStep> {
    let m = pdmp.num_kernels();
    if !pdmp.rates.has_clocks() {
        return Err(Error::NoSimulationPath);
    }
    let levels: Vec<f64> = (0..m)
        .map(|i| bank.exp_level(Role::KernelClock(i as u32)))
        .collect();
    let noise = pdmp.kernels.sample_noise(bank.stream(Role::SharedNoise));

    // Exact side: first event by per-kernel inversion, boundary inclusive.
    let mut exact_event: Option<(f64, usize)> = None;
    for i in 0..m {
        let clock = pdmp.rates.clock(z_exact, i).expect("clocks checked");
        if let Some(t) = clock.first_arrival(levels[i], delta) {
            if exact_event.map_or(true, |(bt, _)| t < bt) {
                exact_event = Some((t, i));
            }
        }
    }
    let exact = match exact_event {
        Some((tau, i)) => {
            let pre = pdmp.flow.at(z_exact, tau)?;
            let post = pdmp.kernels.apply(i, &pre, &noise)?;
            let remaining = delta - tau;
            if remaining > 0.0 {
                simulate(pdmp, &post, remaining, aux_exact)?.terminal_state
            } else {
                post
            }
        }
        None => pdmp.flow.at(z_exact, delta)?,
    };

    // Approximate side: same uniforms against the approximate clocks.
    let ra = cfg.rate_for_order(1);
    let mut approx_event: Option<(f64, usize)> = None;
    for i in 0..m {
        let clock = ra
            .kernel_clock(pdmp, &cfg.flow_approx, z_approx, delta, 1, i)
            .ok_or_else(|| {
                Error::InvalidConfig(
                    "synchronous coupling needs an invertible rate approximation".into(),
                )
            })?;
        if let Some(t) = clock.first_arrival(levels[i], delta) {
            if approx_event.map_or(true, |(bt, _)| t < bt) {
                approx_event = Some((t, i));
            }
        }
    }
    if let Scheme::OrderP(p) = cfg.scheme {
        if p > 1 {
            return Err(Error::InvalidConfig(
                "synchronous coupling covers first-order schemes; use the higher-order coupling"
                    .into(),
            ));
        }
    }
    let fa = &cfg.flow_approx;
    let approx = match approx_event {
        None => fa.step(pdmp, z_approx, delta, delta, 1)?,
        Some((_, i)) if cfg.scheme == Scheme::Fd => {
            let end = fa.step(pdmp, z_approx, delta, delta, 1)?;
            cfg.kernel_approx.apply(pdmp, i, &end, &noise, delta, 1)?
        }
        Some((tau, i)) => {
            let mid = fa.step(pdmp, z_approx, tau, delta, 1)?;
            let jumped = cfg.kernel_approx.apply(pdmp, i, &mid, &noise, delta, 1)?;
            fa.step(pdmp, &jumped, delta - tau, delta, 1)?
        }
    };

    let still_equal = exact == approx;
    Ok(CoupledStep {
        exact,
        approx,
        still_equal,
    })
}
