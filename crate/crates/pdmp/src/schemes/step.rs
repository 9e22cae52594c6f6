//! The scheme step functions and the mesh loop.

use super::{sample_event, DiscretePath, EventRecord, Scheme, SchemeConfig};
use crate::process::{PdmpSpec, State};
use crate::rng::{RngBank, Role};
use crate::scalar::Real;
use crate::Result;

/// One fully discrete step: move to the end of the step, then apply a jump
/// there if the approximate clock fired within the step (boundary
/// inclusive). The kernel index is drawn from the rates evaluated at the
/// drawn time but the jump lands on the end-of-step state.
pub fn fd_step<F: Real>(
    cfg: &SchemeConfig<F>,
    pdmp: &PdmpSpec<F>,
    z: &State<F>,
    delta: F,
    bank: &mut RngBank,
) -> Result<(State<F>, Option<EventRecord<F>>)> {
    let ra = cfg.rate_for_order(1);
    let mut end = cfg.flow_approx.step(pdmp, z, delta, delta, 1)?;
    let event = sample_event(ra, pdmp, &cfg.flow_approx, z, delta, delta, 1, bank)?;
    match event {
        Some(ev) => {
            let noise = pdmp.kernels.sample_noise(bank.stream(Role::Noise));
            end = cfg
                .kernel_approx
                .apply(pdmp, ev.kernel, &end, &noise, delta, 1)?;
            Ok((
                end,
                Some(EventRecord {
                    offset: ev.offset,
                    kernel: ev.kernel,
                }),
            ))
        }
        None => Ok((end, None)),
    }
}

/// One partially discrete step: if the approximate clock fires strictly
/// inside the step, move to the event time, jump there, then move for the
/// remaining time.
pub fn pd_step<F: Real>(
    cfg: &SchemeConfig<F>,
    pdmp: &PdmpSpec<F>,
    z: &State<F>,
    delta: F,
    bank: &mut RngBank,
) -> Result<(State<F>, Option<EventRecord<F>>)> {
    let ra = cfg.rate_for_order(1);
    let event = sample_event(ra, pdmp, &cfg.flow_approx, z, delta, delta, 1, bank)?;
    match event {
        Some(ev) if ev.offset < delta => {
            let mid = cfg.flow_approx.step(pdmp, z, ev.offset, delta, 1)?;
            let noise = pdmp.kernels.sample_noise(bank.stream(Role::Noise));
            let jumped = cfg
                .kernel_approx
                .apply(pdmp, ev.kernel, &mid, &noise, delta, 1)?;
            let end = cfg
                .flow_approx
                .step(pdmp, &jumped, delta - ev.offset, delta, 1)?;
            Ok((
                end,
                Some(EventRecord {
                    offset: ev.offset,
                    kernel: ev.kernel,
                }),
            ))
        }
        _ => Ok((cfg.flow_approx.step(pdmp, z, delta, delta, 1)?, None)),
    }
}

/// One order-p step: up to `p` events, the q-th remaining event drawn from
/// the order-q approximations, with time-left bookkeeping. After the last
/// event (or a clock exceeding the remaining time) the state moves
/// deterministically for the remaining time.
pub fn order_p_step<F: Real>(
    cfg: &SchemeConfig<F>,
    pdmp: &PdmpSpec<F>,
    z: &State<F>,
    delta: F,
    p: usize,
    bank: &mut RngBank,
) -> Result<(State<F>, Vec<EventRecord<F>>)> {
    assert!(p >= 1);
    let mut state = z.clone();
    let mut q = p;
    let mut t_left = delta;
    let mut events = Vec::new();
    while q > 0 {
        let ra = cfg.rate_for_order(q);
        let event = sample_event(ra, pdmp, &cfg.flow_approx, &state, delta, t_left, q, bank)?;
        match event {
            Some(ev) if ev.offset < t_left => {
                let mid = cfg.flow_approx.step(pdmp, &state, ev.offset, delta, q)?;
                let noise = pdmp.kernels.sample_noise(bank.stream(Role::Noise));
                state = cfg
                    .kernel_approx
                    .apply(pdmp, ev.kernel, &mid, &noise, delta, q)?;
                events.push(EventRecord {
                    offset: delta - t_left + ev.offset,
                    kernel: ev.kernel,
                });
                t_left = t_left - ev.offset;
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
    Ok((state, events))
}

/// Iterate the configured step over the mesh.
pub fn run_scheme<F: Real>(
    cfg: &SchemeConfig<F>,
    pdmp: &PdmpSpec<F>,
    z0: &State<F>,
    bank: &mut RngBank,
) -> Result<DiscretePath<F>> {
    let times = cfg.mesh.times();
    let mut states = Vec::with_capacity(times.len());
    let mut step_events = Vec::with_capacity(cfg.mesh.len());
    states.push(z0.clone());
    let mut z = z0.clone();
    for &delta in cfg.mesh.steps() {
        let (next, events) = match cfg.scheme {
            Scheme::Fd => {
                let (s, ev) = fd_step(cfg, pdmp, &z, delta, bank)?;
                (s, ev.into_iter().collect())
            }
            Scheme::Pd => {
                let (s, ev) = pd_step(cfg, pdmp, &z, delta, bank)?;
                (s, ev.into_iter().collect())
            }
            Scheme::OrderP(p) => order_p_step(cfg, pdmp, &z, delta, p, bank)?,
        };
        states.push(next.clone());
        step_events.push(events);
        z = next;
    }
    Ok(DiscretePath {
        times,
        states,
        step_events,
    })
}
