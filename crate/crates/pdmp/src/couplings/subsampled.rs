//! Thinning coupling for the subsampled Zig-Zag: the per-step datum index
//! is shared synchronously, and the dominating rate sums the per-datum
//! rates over the whole data set.

use super::{CoupledStep, APPROX_AUX, EXACT_AUX};
use crate::models::ZzsSubsamplingModel;
use crate::process::{simulate, AffineRate, State};
use crate::rng::{RngBank, Role};
use crate::{Result, State as StateF64};
use rand::Rng;

/// One coupled subsampled step from a common state `z`.
///
/// Conditional on the shared datum `J`, the construction is the first-order
/// thinning coupling with the exact rates replaced by the datum's rates and
/// the dominating intensity `sum_j rate_j(moved) + sum_j rate_j(frozen) + 1`
/// per kernel, realised by proposing from an affine dominator of the sums
/// and thinning down with a shared uniform.
pub fn subsampling_tv_step(
    model: &ZzsSubsamplingModel,
    z: &State<f64>,
    delta: f64,
    bank: &mut RngBank,
    aux_exact: &mut RngBank,
    aux_approx: &mut RngBank,
) -> Result<CoupledStep> {
    let m = model.dim();
    let datum = bank.stream(Role::Subsample).gen_range(0..model.num_data());
    let per_datum_pdmp = model.pdmp_for_datum(datum);

    // Frozen per-datum rates drive the approximation for the whole step.
    let frozen: Vec<f64> = (0..m).map(|i| model.per_datum_rate(datum, z, i)).collect();
    // Affine dominators of the candidate intensities.
    let dominators: Vec<AffineRate<f64>> = (0..m)
        .map(|i| {
            let frozen_sum = model.sum_rate(z, i);
            model
                .sum_rate_dominator(z, i)
                .plus(&AffineRate::constant(frozen_sum + 1.0))
        })
        .collect();

    let mut offset = 0.0;
    loop {
        // Proposals from the affine dominators.
        let mut proposal: Option<(f64, usize)> = None;
        for (i, dom) in dominators.iter().enumerate() {
            let e = bank.exp_level(Role::KernelClock(i as u32));
            if let Some(t) = dom.shifted(offset).first_arrival(e, delta - offset) {
                let abs = offset + t;
                if proposal.map_or(true, |(bt, _)| abs < bt) {
                    proposal = Some((abs, i));
                }
            }
        }
        let Some((t_cand, i_star)) = proposal else {
            // No proposal left: no event for either process this step.
            let end = transport(z, delta);
            return Ok(CoupledStep {
                exact: end.clone(),
                approx: end,
                still_equal: true,
            });
        };

        // Thin the proposal down to the candidate intensity
        // `sum_j rate_j(x + v t) + sum_j rate_j(x) + 1`.
        let sum_along = model.sum_rate_along(z, t_cand, i_star);
        let lambda_tot = sum_along + model.sum_rate(z, i_star) + 1.0;
        let u_thin = bank.uniform(Role::SharedThin);
        if u_thin * dominators[i_star].value(t_cand) >= lambda_tot {
            offset = t_cand;
            continue;
        }

        // A real candidate: shared accept/reject per process.
        let u_acc = bank.uniform(Role::SharedAccept);
        let moved = transport(z, t_cand);
        let rate_exact = model.per_datum_rate(datum, &moved, i_star);
        let rate_approx = frozen[i_star];
        let accept_exact = u_acc * lambda_tot <= rate_exact;
        let accept_approx = u_acc * lambda_tot <= rate_approx;

        match (accept_exact, accept_approx) {
            (true, true) => {
                let post = flip(&moved, i_star);
                let approx = transport(&post, delta - t_cand);
                let (exact, extra_events) = if delta - t_cand > 0.0 {
                    let path = simulate(&per_datum_pdmp, &post, delta - t_cand, aux_exact)?;
                    let n = path.event_count();
                    (path.terminal_state, n)
                } else {
                    (post, 0)
                };
                return Ok(CoupledStep {
                    still_equal: extra_events == 0 && exact == approx,
                    exact,
                    approx,
                });
            }
            (false, false) => {
                offset = t_cand;
                continue;
            }
            (accept_e, _) => {
                let exact = if accept_e {
                    let post = flip(&moved, i_star);
                    if delta - t_cand > 0.0 {
                        simulate(&per_datum_pdmp, &post, delta - t_cand, aux_exact)?.terminal_state
                    } else {
                        post
                    }
                } else if delta - t_cand > 0.0 {
                    simulate(&per_datum_pdmp, &moved, delta - t_cand, aux_exact)?.terminal_state
                } else {
                    moved.clone()
                };
                let approx = if accept_e {
                    // Approximation still waiting on its frozen clocks,
                    // conditioned on no event up to the candidate.
                    approx_conditional_rest(z, &frozen, delta, t_cand, aux_approx)
                } else {
                    let post = flip(&moved, i_star);
                    transport(&post, delta - t_cand)
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

/// Run the subsampled coupling over a constant mesh; after decoupling the
/// marginals continue independently (sharing only the step datum draw).
pub fn run_subsampled_tv(
    model: &ZzsSubsamplingModel,
    z0: &StateF64,
    delta: f64,
    steps: usize,
    bank: &mut RngBank,
) -> Result<super::CoupledRun> {
    let mut aux_exact = bank.subscope(EXACT_AUX);
    let mut aux_approx = bank.subscope(APPROX_AUX);
    let mut times = vec![0.0];
    let mut exact_states = vec![z0.clone()];
    let mut approx_states = vec![z0.clone()];
    let mut distances = vec![0.0];
    let mut flags = vec![true];
    let mut decoupling_time = None;
    let mut ze = z0.clone();
    let mut za = z0.clone();
    let mut equal = true;
    for n in 0..steps {
        if equal {
            let step = subsampling_tv_step(model, &ze, delta, bank, &mut aux_exact, &mut aux_approx)?;
            ze = step.exact;
            za = step.approx;
            if !step.still_equal {
                equal = false;
                decoupling_time = Some((n + 1) as f64 * delta);
            }
        } else {
            let datum = bank.stream(Role::Subsample).gen_range(0..model.num_data());
            ze = simulate(&model.pdmp_for_datum(datum), &ze, delta, &mut aux_exact)?.terminal_state;
            // The approximation keeps its own independent datum draws once
            // decoupled; only the exact process reuses the shared one. Its
            // update stays in the coupling's convention: jump at the drawn
            // time, then transport for the remainder.
            let own_datum = aux_approx
                .stream(Role::Subsample)
                .gen_range(0..model.num_data());
            let frozen: Vec<f64> = (0..model.dim())
                .map(|i| model.per_datum_rate(own_datum, &za, i))
                .collect();
            za = approx_conditional_rest(&za, &frozen, delta, 0.0, &mut aux_approx);
        }
        times.push((n + 1) as f64 * delta);
        distances.push(ze.l1_position_distance(&za));
        flags.push(equal);
        exact_states.push(ze.clone());
        approx_states.push(za.clone());
    }
    Ok(super::CoupledRun {
        times,
        exact_states,
        approx_states,
        distances,
        equal_flags: Some(flags),
        decoupling_time,
    })
}

/// Approximate marginal conditioned on no event before `offset`: frozen
/// clocks are memoryless, so redraw from the offset.
fn approx_conditional_rest(
    z: &State<f64>,
    frozen: &[f64],
    delta: f64,
    offset: f64,
    aux: &mut RngBank,
) -> State<f64> {
    let mut event: Option<(f64, usize)> = None;
    for (i, rate) in frozen.iter().enumerate() {
        if *rate > 0.0 {
            let t = offset + aux.exp_level(Role::Clock) / rate;
            if t <= delta && event.map_or(true, |(bt, _)| t < bt) {
                event = Some((t, i));
            }
        }
    }
    match event {
        Some((tau, i)) => {
            let mid = transport(z, tau);
            let post = flip(&mid, i);
            transport(&post, delta - tau)
        }
        None => transport(z, delta),
    }
}

fn transport(z: &State<f64>, t: f64) -> State<f64> {
    State {
        position: z
            .position
            .iter()
            .zip(&z.velocity)
            .map(|(x, v)| x + v * t)
            .collect(),
        velocity: z.velocity.clone(),
    }
}

fn flip(z: &State<f64>, i: usize) -> State<f64> {
    let mut out = z.clone();
    out.velocity[i] = -out.velocity[i];
    out
}
