//! Couplings of the exact process with a discretisation scheme.
//!
//! Both processes are driven by shared randomness so that their distance
//! reflects discretisation error rather than Monte Carlo noise:
//!
//! - the synchronous coupling inverts the per-kernel clocks of both
//!   processes at the same uniforms and applies jumps with the same kernel
//!   noise, yielding a pathwise upper bound proxy for the Wasserstein
//!   distance;
//! - the thinning coupling proposes candidate event times from a rate
//!   dominating both processes and accepts for each process against its own
//!   ratio with one shared uniform, so that with high probability both
//!   processes jump together and remain equal, yielding an upper bound
//!   proxy for the total variation distance;
//! - the higher-order variant repeats the thinning construction once per
//!   allowed event, lowering the approximation order after each jump;
//! - the subsampled variant shares the per-step datum index and dominates
//!   the per-datum rates by full-data sums.

mod higher_order;
mod subsampled;
mod tv;
mod wasserstein;

pub use higher_order::higher_order_step;
pub use subsampled::{run_subsampled_tv, subsampling_tv_step};
pub use tv::tv_step;
pub use wasserstein::wasserstein_step;

use crate::process::State;
use crate::rng::RngBank;
use crate::schemes::Scheme;
use crate::{Error, Pdmp, Result, SchemeConfig};

/// Stream labels for the marginal continuations after decoupling.
pub(crate) const EXACT_AUX: u64 = 1;
pub(crate) const APPROX_AUX: u64 = 2;

/// Norm used for distance traces; positions only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceNorm {
    L1,
    L2,
}

impl DistanceNorm {
    pub fn distance(&self, a: &State<f64>, b: &State<f64>) -> f64 {
        match self {
            DistanceNorm::L1 => a.l1_position_distance(b),
            DistanceNorm::L2 => a.l2_position_distance(b),
        }
    }
}

/// Result of one coupled step.
#[derive(Debug, Clone)]
pub struct CoupledStep {
    pub exact: State<f64>,
    pub approx: State<f64>,
    /// Whether the two processes are known to coincide at the step end.
    pub still_equal: bool,
}

/// Paired trajectories on the scheme's mesh.
#[derive(Debug, Clone)]
pub struct CoupledRun {
    pub times: Vec<f64>,
    pub exact_states: Vec<State<f64>>,
    pub approx_states: Vec<State<f64>>,
    /// Per-mesh-point distance in the configured norm.
    pub distances: Vec<f64>,
    /// Equality flags for thinning-based couplings; `None` for the
    /// synchronous coupling.
    pub equal_flags: Option<Vec<bool>>,
    /// First mesh point at which the thinning coupling broke, if any.
    pub decoupling_time: Option<f64>,
}

/// Run the synchronous coupling over the configured mesh.
pub fn run_wasserstein(
    pdmp: &Pdmp,
    cfg: &SchemeConfig,
    z0_exact: &State<f64>,
    z0_approx: &State<f64>,
    norm: DistanceNorm,
    bank: &mut RngBank,
) -> Result<CoupledRun> {
    let mut aux_exact = bank.subscope(EXACT_AUX);
    let times = cfg.mesh.times();
    let mut exact_states = vec![z0_exact.clone()];
    let mut approx_states = vec![z0_approx.clone()];
    let mut distances = vec![norm.distance(z0_exact, z0_approx)];
    let mut ze = z0_exact.clone();
    let mut za = z0_approx.clone();
    for &delta in cfg.mesh.steps() {
        let step = wasserstein_step(pdmp, cfg, &ze, &za, delta, bank, &mut aux_exact)?;
        ze = step.exact;
        za = step.approx;
        distances.push(norm.distance(&ze, &za));
        exact_states.push(ze.clone());
        approx_states.push(za.clone());
    }
    Ok(CoupledRun {
        times,
        exact_states,
        approx_states,
        distances,
        equal_flags: None,
        decoupling_time: None,
    })
}

/// Terminal states of a synchronously coupled run, without trace recording.
pub fn run_wasserstein_terminal(
    pdmp: &Pdmp,
    cfg: &SchemeConfig,
    z0_exact: &State<f64>,
    z0_approx: &State<f64>,
    bank: &mut RngBank,
) -> Result<(State<f64>, State<f64>)> {
    let mut aux_exact = bank.subscope(EXACT_AUX);
    let mut ze = z0_exact.clone();
    let mut za = z0_approx.clone();
    for &delta in cfg.mesh.steps() {
        let step = wasserstein_step(pdmp, cfg, &ze, &za, delta, bank, &mut aux_exact)?;
        ze = step.exact;
        za = step.approx;
    }
    Ok((ze, za))
}

/// Terminal states of a thinning-coupled run, without trace recording.
pub fn run_tv_terminal(
    pdmp: &Pdmp,
    cfg: &SchemeConfig,
    z0: &State<f64>,
    bank: &mut RngBank,
) -> Result<(State<f64>, State<f64>)> {
    let p = match cfg.scheme {
        Scheme::Pd => 1,
        Scheme::OrderP(p) => p,
        Scheme::Fd => {
            return Err(Error::InvalidConfig(
                "total-variation coupling applies to the partially discrete schemes".into(),
            ))
        }
    };
    let mut aux_exact = bank.subscope(EXACT_AUX);
    let mut aux_approx = bank.subscope(APPROX_AUX);
    let mut ze = z0.clone();
    let mut za = z0.clone();
    let mut equal = true;
    for &delta in cfg.mesh.steps() {
        if equal {
            let step = higher_order_step(
                pdmp,
                cfg,
                &ze,
                &za,
                delta,
                p,
                bank,
                &mut aux_exact,
                &mut aux_approx,
            )?;
            ze = step.exact;
            za = step.approx;
            equal = step.still_equal;
        } else {
            ze = crate::process::simulate(pdmp, &ze, delta, &mut aux_exact)?.terminal_state;
            za = match cfg.scheme {
                Scheme::Pd => crate::schemes::pd_step(cfg, pdmp, &za, delta, &mut aux_approx)?.0,
                Scheme::OrderP(p) => {
                    crate::schemes::order_p_step(cfg, pdmp, &za, delta, p, &mut aux_approx)?.0
                }
                Scheme::Fd => unreachable!("rejected above"),
            };
        }
    }
    Ok((ze, za))
}

/// Run the thinning coupling over the configured mesh. Both processes start
/// at `z0`; once they decouple, the marginals evolve independently.
pub fn run_tv(
    pdmp: &Pdmp,
    cfg: &SchemeConfig,
    z0: &State<f64>,
    norm: DistanceNorm,
    bank: &mut RngBank,
) -> Result<CoupledRun> {
    let p = match cfg.scheme {
        Scheme::Pd => 1,
        Scheme::OrderP(p) => p,
        Scheme::Fd => {
            return Err(Error::InvalidConfig(
                "total-variation coupling applies to the partially discrete schemes".into(),
            ))
        }
    };
    let mut aux_exact = bank.subscope(EXACT_AUX);
    let mut aux_approx = bank.subscope(APPROX_AUX);
    let times = cfg.mesh.times();
    let mut exact_states = vec![z0.clone()];
    let mut approx_states = vec![z0.clone()];
    let mut distances = vec![0.0];
    let mut flags = vec![true];
    let mut decoupling_time = None;
    let mut ze = z0.clone();
    let mut za = z0.clone();
    let mut equal = true;
    for (n, &delta) in cfg.mesh.steps().iter().enumerate() {
        if equal {
            let step = higher_order_step(
                pdmp,
                cfg,
                &ze,
                &za,
                delta,
                p,
                bank,
                &mut aux_exact,
                &mut aux_approx,
            )?;
            ze = step.exact;
            za = step.approx;
            if !step.still_equal {
                equal = false;
                decoupling_time = Some(times[n + 1]);
            }
        } else {
            ze = crate::process::simulate(pdmp, &ze, delta, &mut aux_exact)?.terminal_state;
            za = match cfg.scheme {
                Scheme::Pd => crate::schemes::pd_step(cfg, pdmp, &za, delta, &mut aux_approx)?.0,
                Scheme::OrderP(p) => {
                    crate::schemes::order_p_step(cfg, pdmp, &za, delta, p, &mut aux_approx)?.0
                }
                Scheme::Fd => unreachable!("rejected above"),
            };
        }
        distances.push(norm.distance(&ze, &za));
        flags.push(equal);
        exact_states.push(ze.clone());
        approx_states.push(za.clone());
    }
    Ok(CoupledRun {
        times,
        exact_states,
        approx_states,
        distances,
        equal_flags: Some(flags),
        decoupling_time,
    })
}
