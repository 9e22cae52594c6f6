//! Exact simulation by time inversion and Poisson thinning.
//!
//! Event times are generated preferring closed-form inversion of the
//! per-kernel integrated rates when the model registers clock profiles;
//! otherwise thinning against the registered along-flow bound; otherwise
//! simulation is refused.

use super::{AffineRate, PdmpSpec, SkeletonEvent, SkeletonPath, State};
use crate::rng::{RngBank, Role};
use crate::scalar::Real;
use crate::{Error, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Default cap on events per path; explosive rates fail loudly.
pub const DEFAULT_MAX_EVENTS: usize = 1_000_000;

/// Proposal cap for one thinning run, sharing the spirit of the event cap.
const MAX_THINNING_PROPOSALS: usize = 10_000_000;

/// Next event of the exact process started at `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NextEvent<F> {
    /// Time offset from `z`, at most the horizon.
    pub time: F,
    pub kernel: usize,
}

/// Smallest time at which the integrated intensity reaches the level `e`.
pub fn event_time_from_level<F: Real>(clock: &AffineRate<F>, e: F, horizon: F) -> Option<F> {
    clock.first_arrival(e, horizon)
}

/// Draw an index with probability proportional to `weights`.
pub fn draw_kernel_index<F: Real>(weights: &[F], rng: &mut ChaCha8Rng) -> Result<usize> {
    let total = weights.iter().fold(F::zero(), |acc, w| acc + *w);
    if !(total > F::zero()) {
        return Err(Error::ZeroTotalRate);
    }
    let u = F::from_f64_lossy(rng.gen::<f64>());
    let target = u * total;
    let mut acc = F::zero();
    let mut last_positive = 0;
    for (i, w) in weights.iter().enumerate() {
        if *w > F::zero() {
            last_positive = i;
            acc = acc + *w;
            if target < acc {
                return Ok(i);
            }
        }
    }
    Ok(last_positive)
}

/// Sample the next event time and kernel of the exact process within
/// `horizon`, or `None` when no event occurs before the horizon.
///
/// The returned time has survival `exp(-int_0^t lambda(phi_s(z)) ds)` and
/// the kernel follows the discrete law weighted by the per-kernel rates at
/// the event point. With registered clock profiles the draw is realised by
/// per-kernel inversion and superposition (ties resolved to the smallest
/// kernel index); without them by thinning against the along-flow bound,
/// with the kernel drawn from the rates at the accepted point.
pub fn next_event<F: Real>(
    pdmp: &PdmpSpec<F>,
    z: &State<F>,
    horizon: F,
    bank: &mut RngBank,
) -> Result<Option<NextEvent<F>>> {
    let m = pdmp.num_kernels();
    if m == 0 {
        return Ok(None);
    }
    if pdmp.rates.has_clocks() {
        let mut best: Option<NextEvent<F>> = None;
        for i in 0..m {
            let clock = pdmp.rates.clock(z, i).expect("clock builder present");
            let e = F::from_f64_lossy(bank.exp_level(Role::Clock));
            if let Some(t) = clock.first_arrival(e, horizon) {
                let better = match &best {
                    Some(b) => t < b.time,
                    None => true,
                };
                if better {
                    best = Some(NextEvent { time: t, kernel: i });
                }
            }
        }
        return Ok(best);
    }
    if pdmp.rates.bound(z, horizon).is_some() {
        return thinning_event(pdmp, z, horizon, bank);
    }
    Err(Error::NoSimulationPath)
}

fn thinning_event<F: Real>(
    pdmp: &PdmpSpec<F>,
    z: &State<F>,
    horizon: F,
    bank: &mut RngBank,
) -> Result<Option<NextEvent<F>>> {
    let bound = pdmp.rates.bound(z, horizon).expect("bound present");
    let mut offset = F::zero();
    for _ in 0..MAX_THINNING_PROPOSALS {
        let e = F::from_f64_lossy(bank.exp_level(Role::Clock));
        let step = match bound.shifted(offset).first_arrival(e, horizon - offset) {
            Some(t) => t,
            None => return Ok(None),
        };
        let s = offset + step;
        let probe = pdmp.flow.at(z, s)?;
        let rate = pdmp.rates.total(&probe);
        let cap = bound.value(s);
        if rate > cap {
            return Err(Error::ThinningBoundViolated {
                offset: s.to_f64().unwrap_or(f64::NAN),
                rate: rate.to_f64().unwrap_or(f64::NAN),
                bound: cap.to_f64().unwrap_or(f64::NAN),
            });
        }
        let u = F::from_f64_lossy(bank.uniform(Role::Accept));
        if u * cap < rate {
            let weights: Vec<F> = (0..pdmp.num_kernels())
                .map(|i| pdmp.rates.rate(i, &probe))
                .collect();
            let kernel = draw_kernel_index(&weights, bank.stream(Role::Pick))?;
            return Ok(Some(NextEvent { time: s, kernel }));
        }
        offset = s;
    }
    Err(Error::EventStorm {
        max_events: MAX_THINNING_PROPOSALS,
    })
}

/// Simulate the process on `[0, T]` with the default event cap.
pub fn simulate<F: Real>(
    pdmp: &PdmpSpec<F>,
    z0: &State<F>,
    horizon: F,
    bank: &mut RngBank,
) -> Result<SkeletonPath<F>> {
    simulate_capped(pdmp, z0, horizon, DEFAULT_MAX_EVENTS, bank)
}

/// Simulate the process on `[0, T]`, failing with `EventStorm` when one
/// path exceeds `max_events`.
pub fn simulate_capped<F: Real>(
    pdmp: &PdmpSpec<F>,
    z0: &State<F>,
    horizon: F,
    max_events: usize,
    bank: &mut RngBank,
) -> Result<SkeletonPath<F>> {
    assert!(horizon > F::zero(), "horizon must be positive");
    let mut t = F::zero();
    let mut z = z0.clone();
    let mut events = Vec::new();
    while let Some(ev) = next_event(pdmp, &z, horizon - t, bank)? {
        if events.len() >= max_events {
            return Err(Error::EventStorm { max_events });
        }
        let pre = pdmp.flow.at(&z, ev.time)?;
        let noise = pdmp.kernels.sample_noise(bank.stream(Role::Noise));
        let post = pdmp.kernels.apply(ev.kernel, &pre, &noise)?;
        t = t + ev.time;
        events.push(SkeletonEvent {
            time: t,
            pre_state: pre,
            post_state: post.clone(),
            kernel: ev.kernel,
        });
        z = post;
    }
    let terminal_state = pdmp.flow.at(&z, horizon - t)?;
    Ok(SkeletonPath {
        initial_state: z0.clone(),
        events,
        terminal_time: horizon,
        terminal_state,
    })
}
