//! Replica-averaged estimators over coupled and marginal runs.

use super::stats::{accumulate_replicas, fit_loglog_order, OrderFit};
use crate::couplings::{run_tv, run_tv_terminal, run_wasserstein, run_wasserstein_terminal, DistanceNorm};
use crate::process::simulate;
use crate::rng::RngBank;
use crate::schemes::{run_scheme, Scheme};
use crate::{Pdmp, Result, SchemeConfig, State};

/// Closure drawing an initial state per replica.
pub type InitFn = dyn Fn(&mut RngBank) -> State + Sync;
/// Scalar statistic of a state.
pub type StatisticFn = dyn Fn(&State) -> f64 + Sync;

/// Stream labels for the marginal arms of two-arm estimators.
const EXACT_ARM: u64 = 10;
const SCHEME_ARM: u64 = 11;

/// A mesh-indexed mean curve with standard errors.
#[derive(Debug, Clone)]
pub struct Trace {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

/// Mean distance between the coupled processes at each mesh point, under
/// the synchronous coupling: an upper bound proxy for the Wasserstein
/// distance (the infimum over couplings is never computed).
pub fn wasserstein_proxy_curve(
    pdmp: &Pdmp,
    cfg: &SchemeConfig,
    init: &InitFn,
    norm: DistanceNorm,
    replicas: u64,
    seed: u64,
) -> Result<Trace> {
    let times = cfg.mesh.times();
    let acc = accumulate_replicas(replicas, |rep| {
        let mut bank = RngBank::replica(seed, rep);
        let z0 = init(&mut bank);
        let run = run_wasserstein(pdmp, cfg, &z0, &z0, norm, &mut bank)?;
        Ok(run.distances)
    })?;
    Ok(Trace {
        times,
        mean: acc.means(),
        stderr: acc.stderrs(),
    })
}

/// Relative frequency of the thinning coupling having decoupled by each
/// mesh point: an upper bound proxy for the total variation distance.
pub fn tv_indicator_curve(
    pdmp: &Pdmp,
    cfg: &SchemeConfig,
    init: &InitFn,
    replicas: u64,
    seed: u64,
) -> Result<Trace> {
    let times = cfg.mesh.times();
    let acc = accumulate_replicas(replicas, |rep| {
        let mut bank = RngBank::replica(seed, rep);
        let z0 = init(&mut bank);
        let run = run_tv(pdmp, cfg, &z0, DistanceNorm::L1, &mut bank)?;
        let flags = run.equal_flags.expect("tv runs carry equality flags");
        Ok(flags.iter().map(|eq| if *eq { 0.0 } else { 1.0 }).collect())
    })?;
    Ok(Trace {
        times,
        mean: acc.means(),
        stderr: acc.stderrs(),
    })
}

/// Monte Carlo traces of `E[g]` along the exact process and the scheme,
/// from a common initial draw per replica.
#[derive(Debug, Clone)]
pub struct MomentTrace {
    pub times: Vec<f64>,
    pub exact_mean: Vec<f64>,
    pub exact_stderr: Vec<f64>,
    pub scheme_mean: Vec<f64>,
    pub scheme_stderr: Vec<f64>,
}

impl MomentTrace {
    pub fn exact_sup(&self) -> f64 {
        self.exact_mean.iter().cloned().fold(f64::MIN, f64::max)
    }

    pub fn scheme_sup(&self) -> f64 {
        self.scheme_mean.iter().cloned().fold(f64::MIN, f64::max)
    }
}

/// Estimate `E[g(Z_t)]` for the exact process and `E[g(Z_bar_t)]` for the
/// scheme on the scheme's mesh.
pub fn lyapunov_moment_trace(
    pdmp: &Pdmp,
    cfg: &SchemeConfig,
    g: &StatisticFn,
    init: &InitFn,
    replicas: u64,
    seed: u64,
) -> Result<MomentTrace> {
    let times = cfg.mesh.times();
    let horizon = cfg.mesh.horizon();
    let n = times.len();
    let acc = accumulate_replicas(replicas, |rep| {
        let mut bank = RngBank::replica(seed, rep);
        let z0 = init(&mut bank);
        let mut exact_bank = bank.subscope(EXACT_ARM);
        let path = simulate(pdmp, &z0, horizon, &mut exact_bank)?;
        let exact_states = path.states_at_times(&pdmp.flow, &times)?;
        let mut scheme_bank = bank.subscope(SCHEME_ARM);
        let discrete = run_scheme(cfg, pdmp, &z0, &mut scheme_bank)?;
        let mut values = Vec::with_capacity(2 * n);
        values.extend(exact_states.iter().map(|s| g(s)));
        values.extend(discrete.states.iter().map(|s| g(s)));
        Ok(values)
    })?;
    Ok(MomentTrace {
        times,
        exact_mean: (0..n).map(|k| acc.mean(k)).collect(),
        exact_stderr: (0..n).map(|k| acc.stderr(k)).collect(),
        scheme_mean: (0..n).map(|k| acc.mean(n + k)).collect(),
        scheme_stderr: (0..n).map(|k| acc.stderr(n + k)).collect(),
    })
}

/// Like [`lyapunov_moment_trace`], but driving both arms through the
/// synchronous coupling so their estimation noise cancels in comparisons.
/// Each marginal keeps its exact law; only the joint randomness changes.
pub fn lyapunov_moment_trace_coupled(
    pdmp: &Pdmp,
    cfg: &SchemeConfig,
    g: &StatisticFn,
    init: &InitFn,
    replicas: u64,
    seed: u64,
) -> Result<MomentTrace> {
    let times = cfg.mesh.times();
    let n = times.len();
    let acc = accumulate_replicas(replicas, |rep| {
        let mut bank = RngBank::replica(seed, rep);
        let z0 = init(&mut bank);
        let run = run_wasserstein(pdmp, cfg, &z0, &z0, DistanceNorm::L1, &mut bank)?;
        let mut values = Vec::with_capacity(2 * n);
        values.extend(run.exact_states.iter().map(|s| g(s)));
        values.extend(run.approx_states.iter().map(|s| g(s)));
        Ok(values)
    })?;
    Ok(MomentTrace {
        times,
        exact_mean: (0..n).map(|k| acc.mean(k)).collect(),
        exact_stderr: (0..n).map(|k| acc.stderr(k)).collect(),
        scheme_mean: (0..n).map(|k| acc.mean(n + k)).collect(),
        scheme_stderr: (0..n).map(|k| acc.stderr(n + k)).collect(),
    })
}

/// Error of running time-averages against the stationary truth, for the
/// exact process and the scheme.
#[derive(Debug, Clone)]
pub struct BiasTrace {
    /// Mesh times past the burn-in.
    pub times: Vec<f64>,
    pub exact_error: Vec<f64>,
    pub exact_stderr: Vec<f64>,
    pub scheme_error: Vec<f64>,
    pub scheme_stderr: Vec<f64>,
}

/// Running time-average of a statistic after burn-in, compared against its
/// stationary value.
#[allow(clippy::too_many_arguments)]
pub fn stationary_bias_curve(
    pdmp: &Pdmp,
    cfg: &SchemeConfig,
    statistic: &StatisticFn,
    truth: f64,
    burn_in_fraction: f64,
    init: &InitFn,
    replicas: u64,
    seed: u64,
) -> Result<BiasTrace> {
    assert!((0.0..1.0).contains(&burn_in_fraction));
    let times = cfg.mesh.times();
    let horizon = cfg.mesh.horizon();
    let k_burn = ((times.len() as f64) * burn_in_fraction).ceil() as usize;
    let kept = times.len() - k_burn;
    let acc = accumulate_replicas(replicas, |rep| {
        let mut bank = RngBank::replica(seed, rep);
        let z0 = init(&mut bank);
        let mut exact_bank = bank.subscope(EXACT_ARM);
        let path = simulate(pdmp, &z0, horizon, &mut exact_bank)?;
        let exact_states = path.states_at_times(&pdmp.flow, &times)?;
        let mut scheme_bank = bank.subscope(SCHEME_ARM);
        let discrete = run_scheme(cfg, pdmp, &z0, &mut scheme_bank)?;
        let mut values = Vec::with_capacity(2 * kept);
        running_averages(&mut values, exact_states.iter().map(|s| statistic(s)), k_burn);
        running_averages(&mut values, discrete.states.iter().map(|s| statistic(s)), k_burn);
        Ok(values)
    })?;
    let exact_error = (0..kept).map(|k| (acc.mean(k) - truth).abs()).collect();
    let scheme_error = (0..kept)
        .map(|k| (acc.mean(kept + k) - truth).abs())
        .collect();
    Ok(BiasTrace {
        times: times[k_burn..].to_vec(),
        exact_error,
        exact_stderr: (0..kept).map(|k| acc.stderr(k)).collect(),
        scheme_error,
        scheme_stderr: (0..kept).map(|k| acc.stderr(kept + k)).collect(),
    })
}

fn running_averages(out: &mut Vec<f64>, values: impl Iterator<Item = f64>, k_burn: usize) {
    let mut acc = 0.0;
    let mut count = 0u64;
    for (k, v) in values.enumerate() {
        if k < k_burn {
            continue;
        }
        acc += v;
        count += 1;
        out.push(acc / count as f64);
    }
}

/// How a weak-error sweep estimates `|E[g(scheme at T)] - E[g(exact at T)]|`.
#[derive(Debug, Clone, Copy)]
pub enum WeakErrorMethod {
    /// Scheme-only runs against a trusted reference value for the exact
    /// expectation (analytic, oracle, or fine-mesh); an estimated
    /// reference contributes its own standard error to the error bars.
    Direct {
        reference: f64,
        reference_stderr: f64,
    },
    /// Coupled pairs under shared randomness; the difference of the two
    /// arms estimates the weak error with far smaller variance. The exact
    /// arm's mean is reported for validation against a reference.
    CoupledDifference,
}

/// One step size of a sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepPoint {
    pub delta: f64,
    pub error: f64,
    pub stderr: f64,
    /// Mean and standard error of `g` under the exact arm (coupled method)
    /// or the scheme arm (direct method).
    pub arm_mean: f64,
    pub arm_stderr: f64,
}

/// A delta sweep with its fitted convergence order.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub fit: Result<OrderFit>,
}

impl SweepResult {
    pub fn deltas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.delta).collect()
    }

    pub fn errors(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.error).collect()
    }
}

/// Weak error of the scheme's terminal state over a sweep of step sizes.
#[allow(clippy::too_many_arguments)]
pub fn weak_error_sweep(
    pdmp: &Pdmp,
    make_cfg: &(dyn Fn(f64) -> SchemeConfig + Sync),
    deltas: &[f64],
    g: &StatisticFn,
    init: &InitFn,
    replicas_per_delta: &[u64],
    seed: u64,
    method: WeakErrorMethod,
) -> Result<SweepResult> {
    assert_eq!(deltas.len(), replicas_per_delta.len());
    let mut points = Vec::with_capacity(deltas.len());
    for (di, (&delta, &replicas)) in deltas.iter().zip(replicas_per_delta).enumerate() {
        let cfg = make_cfg(delta);
        let replica_base = (di as u64) << 40;
        let acc = accumulate_replicas(replicas, |rep| {
            let mut bank = RngBank::replica(seed, replica_base | rep);
            let z0 = init(&mut bank);
            match method {
                WeakErrorMethod::Direct { .. } => {
                    let path = run_scheme(&cfg, pdmp, &z0, &mut bank)?;
                    Ok(vec![g(path.terminal_state())])
                }
                WeakErrorMethod::CoupledDifference => {
                    let (ze, za) = match cfg.scheme {
                        Scheme::Fd | Scheme::Pd => {
                            run_wasserstein_terminal(pdmp, &cfg, &z0, &z0, &mut bank)?
                        }
                        Scheme::OrderP(_) => run_tv_terminal(pdmp, &cfg, &z0, &mut bank)?,
                    };
                    Ok(vec![g(&za) - g(&ze), g(&ze)])
                }
            }
        })?;
        let point = match method {
            WeakErrorMethod::Direct {
                reference,
                reference_stderr,
            } => SweepPoint {
                delta,
                error: (acc.mean(0) - reference).abs(),
                stderr: (acc.stderr(0).powi(2) + reference_stderr.powi(2)).sqrt(),
                arm_mean: acc.mean(0),
                arm_stderr: acc.stderr(0),
            },
            WeakErrorMethod::CoupledDifference => SweepPoint {
                delta,
                error: acc.mean(0).abs(),
                stderr: acc.stderr(0),
                arm_mean: acc.mean(1),
                arm_stderr: acc.stderr(1),
            },
        };
        points.push(point);
    }
    let fit = fit_loglog_order(
        deltas,
        &points.iter().map(|p| p.error).collect::<Vec<_>>(),
        &points.iter().map(|p| p.stderr).collect::<Vec<_>>(),
    );
    Ok(SweepResult { points, fit })
}
