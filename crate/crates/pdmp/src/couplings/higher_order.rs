//! Thinning-based coupling with up to `p` coupled events per step.
//!
//! Per remaining order `q`, candidate times are proposed per kernel from
//! the dominating intensity (true rate along the flow) + (approximate
//! order-q rate) + 1, realised as the superposition of three clocks. At a
//! candidate both processes accept or reject against their own ratio using
//! one shared uniform: joint acceptance triggers a coupled jump with shared
//! kernel noise and descends one order; a split decision decouples the
//! processes, which then continue along their own marginal laws; joint
//! rejection moves to the next candidate. Candidate proposals are capped at
//! `p + 2` per step, falling back to independent continuation beyond that.

use super::CoupledStep;
use crate::process::{simulate, AffineRate, State};
use crate::rng::{RngBank, Role};
use crate::{Error, Pdmp, Result, SchemeConfig};

/// One coupled step of length `delta` allowing up to `p` events.
#[allow(clippy::too_many_arguments)]
pub fn higher_order_step(
    pdmp: &Pdmp,
    cfg: &SchemeConfig,
    z_exact: &State<f64>,
    z_approx: &State<f64>,
    delta: f64,
    p: usize,
    bank: &mut RngBank,
    aux_exact: &mut RngBank,
    aux_approx: &mut RngBank,
) -> Result<CoupledStep> {
    assert!(p >= 1);
    let m = pdmp.num_kernels();
    if !pdmp.rates.has_clocks() {
        return Err(Error::NoSimulationPath);
    }
    // The first-order coupling proposes until the window is exhausted. The
    // higher-order recursion is truncated defensively; the budget is a
    // multiple of the p + 2 proposals past which the coupled construction
    // stops paying for itself, wide enough that truncation contributes
    // nothing measurable to decoupling frequencies at desk-scale step
    // sizes (at exactly p + 2 it would dominate them).
    let candidate_cap = if p == 1 { usize::MAX } else { 4 * (p + 2) };
    let mut candidates_used = 0usize;

    let mut ze = z_exact.clone();
    let mut za = z_approx.clone();
    let mut q = p;
    let mut window = delta;

    while q > 0 {
        // Clocks anchored at the current pair, valid for this order level.
        let exact_clocks: Vec<AffineRate<f64>> = (0..m)
            .map(|i| pdmp.rates.clock(&ze, i).expect("clocks checked"))
            .collect();
        let ra = cfg.rate_for_order(q);
        let mut approx_clocks = Vec::with_capacity(m);
        for i in 0..m {
            approx_clocks.push(
                ra.kernel_clock(pdmp, &cfg.flow_approx, &za, delta, q, i)
                    .ok_or_else(|| {
                        Error::InvalidConfig(
                            "thinning coupling needs an invertible rate approximation".into(),
                        )
                    })?,
            );
        }

        let mut offset = 0.0;
        loop {
            if candidates_used >= candidate_cap {
                // Too many proposals this step: give up on coupling and let
                // both marginals run independently for the remaining window.
                let exact = advance_exact(pdmp, &ze, offset, window, aux_exact)?;
                let approx =
                    approx_rest_of_level(pdmp, cfg, &za, &approx_clocks, delta, q, window, offset, aux_approx)?;
                return Ok(CoupledStep {
                    exact,
                    approx,
                    still_equal: false,
                });
            }
            candidates_used += 1;

            // Per-kernel candidate: superposition of the exact clock, the
            // approximate clock and a unit-rate clock, all from `offset`.
            let mut candidate: Option<(f64, usize)> = None;
            for i in 0..m {
                let role = Role::KernelClock(i as u32);
                let parts = [
                    exact_clocks[i]
                        .shifted(offset)
                        .first_arrival(bank.exp_level(role), window - offset),
                    approx_clocks[i]
                        .shifted(offset)
                        .first_arrival(bank.exp_level(role), window - offset),
                    AffineRate::constant(1.0)
                        .first_arrival(bank.exp_level(role), window - offset),
                ];
                for t in parts.into_iter().flatten() {
                    let abs = offset + t;
                    if candidate.map_or(true, |(bt, _)| abs < bt) {
                        candidate = Some((abs, i));
                    }
                }
            }
            let Some((t_cand, i_star)) = candidate else {
                // No proposal before the window end: neither process can
                // have an event; both move deterministically.
                let exact = pdmp.flow.at(&ze, window)?;
                let approx = cfg.flow_approx.step(pdmp, &za, window, delta, q)?;
                return Ok(CoupledStep {
                    still_equal: exact == approx,
                    exact,
                    approx,
                });
            };

            let u_acc = bank.uniform(Role::SharedAccept);
            let noise = pdmp.kernels.sample_noise(bank.stream(Role::SharedNoise));
            let rate_exact = exact_clocks[i_star].value(t_cand);
            let rate_approx = approx_clocks[i_star].value(t_cand);
            let total = rate_exact + rate_approx + 1.0;
            let accept_exact = u_acc * total <= rate_exact;
            let accept_approx = u_acc * total <= rate_approx;

            match (accept_exact, accept_approx) {
                (true, true) => {
                    ze = pdmp.kernels.apply(i_star, &pdmp.flow.at(&ze, t_cand)?, &noise)?;
                    let mid = cfg.flow_approx.step(pdmp, &za, t_cand, delta, q)?;
                    za = cfg
                        .kernel_approx
                        .apply(pdmp, i_star, &mid, &noise, delta, q)?;
                    window -= t_cand;
                    q -= 1;
                    break;
                }
                (false, false) => {
                    offset = t_cand;
                    continue;
                }
                (accept_e, _) => {
                    // Split decision: decoupled. Each marginal continues on
                    // its own; the accepted side jumps at the candidate.
                    let exact = if accept_e {
                        let post =
                            pdmp.kernels
                                .apply(i_star, &pdmp.flow.at(&ze, t_cand)?, &noise)?;
                        advance_exact(pdmp, &post, 0.0, window - t_cand, aux_exact)?
                    } else {
                        advance_exact(pdmp, &ze, t_cand, window, aux_exact)?
                    };
                    let approx = if accept_e {
                        // Approximation rejected: its first event is still
                        // pending, conditioned on being after the candidate.
                        approx_rest_of_level(
                            pdmp, cfg, &za, &approx_clocks, delta, q, window, t_cand, aux_approx,
                        )?
                    } else {
                        let mid = cfg.flow_approx.step(pdmp, &za, t_cand, delta, q)?;
                        let post =
                            cfg.kernel_approx
                                .apply(pdmp, i_star, &mid, &noise, delta, q)?;
                        approx_tail(pdmp, cfg, &post, delta, window - t_cand, q - 1, aux_approx)?
                    };
                    return Ok(CoupledStep {
                        exact,
                        approx,
                        still_equal: false,
                    });
                }
            }
        }
    }
    // All allowed events used: the approximation moves deterministically at
    // the base order while the exact process keeps evolving.
    let approx = cfg.flow_approx.step(pdmp, &za, window, delta, 1)?;
    let exact = if window > 0.0 {
        let path = simulate(pdmp, &ze, window, aux_exact)?;
        let equal_possible = path.event_count() == 0;
        let exact = path.terminal_state;
        return Ok(CoupledStep {
            still_equal: equal_possible && exact == approx,
            exact,
            approx,
        });
    } else {
        ze
    };
    Ok(CoupledStep {
        still_equal: exact == approx,
        exact,
        approx,
    })
}

/// Exact marginal from `z` after `offset`, over the rest of `window`.
fn advance_exact(
    pdmp: &Pdmp,
    z: &State<f64>,
    offset: f64,
    window: f64,
    aux: &mut RngBank,
) -> Result<State<f64>> {
    let moved = if offset > 0.0 {
        pdmp.flow.at(z, offset)?
    } else {
        z.clone()
    };
    let remaining = window - offset;
    if remaining > 0.0 {
        Ok(simulate(pdmp, &moved, remaining, aux)?.terminal_state)
    } else {
        Ok(moved)
    }
}

/// Approximate marginal over the rest of the current order level, given
/// that its order-q clock has not fired up to `offset`: draw the remaining
/// first-event time from the shifted clocks, then descend orders as usual.
#[allow(clippy::too_many_arguments)]
fn approx_rest_of_level(
    pdmp: &Pdmp,
    cfg: &SchemeConfig,
    z_level: &State<f64>,
    clocks: &[AffineRate<f64>],
    delta: f64,
    q: usize,
    window: f64,
    offset: f64,
    aux: &mut RngBank,
) -> Result<State<f64>> {
    let mut event: Option<(f64, usize)> = None;
    for (i, clock) in clocks.iter().enumerate() {
        let e = aux.exp_level(Role::Clock);
        if let Some(t) = clock.shifted(offset).first_arrival(e, window - offset) {
            let abs = offset + t;
            if event.map_or(true, |(bt, _)| abs < bt) {
                event = Some((abs, i));
            }
        }
    }
    match event {
        Some((tau, i)) if tau < window => {
            let mid = cfg.flow_approx.step(pdmp, z_level, tau, delta, q)?;
            let noise = pdmp.kernels.sample_noise(aux.stream(Role::Noise));
            let post = cfg.kernel_approx.apply(pdmp, i, &mid, &noise, delta, q)?;
            approx_tail(pdmp, cfg, &post, delta, window - tau, q - 1, aux)
        }
        _ => cfg.flow_approx.step(pdmp, z_level, window, delta, q),
    }
}

/// Approximate marginal continuation with `q` allowed events over
/// `t_left`, exactly the inner loop of the order-p step.
fn approx_tail(
    pdmp: &Pdmp,
    cfg: &SchemeConfig,
    z: &State<f64>,
    delta: f64,
    t_left: f64,
    q: usize,
    aux: &mut RngBank,
) -> Result<State<f64>> {
    if q == 0 {
        return cfg.flow_approx.step(pdmp, z, t_left, delta, 1);
    }
    let mut state = z.clone();
    let mut q = q;
    let mut t_left = t_left;
    while q > 0 {
        let ra = cfg.rate_for_order(q);
        let event =
            crate::schemes::sample_event(ra, pdmp, &cfg.flow_approx, &state, delta, t_left, q, aux)?;
        match event {
            Some(ev) if ev.offset < t_left => {
                let mid = cfg.flow_approx.step(pdmp, &state, ev.offset, delta, q)?;
                let noise = pdmp.kernels.sample_noise(aux.stream(Role::Noise));
                state = cfg
                    .kernel_approx
                    .apply(pdmp, ev.kernel, &mid, &noise, delta, q)?;
                t_left -= ev.offset;
                q -= 1;
                if q == 0 {
                    state = cfg.flow_approx.step(pdmp, &state, t_left, delta, 1)?;
                }
            }
            _ => {
                state = cfg.flow_approx.step(pdmp, &state, t_left, delta, q)?;
                break;
            }
        }
    }
    Ok(state)
}
