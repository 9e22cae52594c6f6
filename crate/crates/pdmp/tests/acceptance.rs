//! Acceptance suite: one test per gate, each printing a pass/fail line.
//!
//! Run with `cargo test -p pdmp --test acceptance -- --nocapture` to see
//! the per-criterion lines and timings. The tests are statistically gated
//! at fixed seeds and tolerances pinned in code.

use pdmp::couplings::{run_tv, run_wasserstein, DistanceNorm};
use pdmp::diagnostics::*;
use pdmp::models::*;
use pdmp::process::{simulate, State};
use pdmp::rng::{RngBank, Role};
use pdmp::schemes::{run_scheme, FlowApprox, Mesh, RateApprox};
use pdmp::SchemeConfig;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use std::sync::Mutex;
use std::time::Instant;

/// The heavy criteria use all cores through rayon; running them one at a
/// time keeps the per-criterion budgets meaningful.
static SERIAL: Mutex<()> = Mutex::new(());

fn guard() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(criterion: &str, pass: bool, detail: &str, started: Instant) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!(
        "{verdict} {criterion}: {detail} [{:.1}s]",
        started.elapsed().as_secs_f64()
    );
    assert!(pass, "{criterion}: {detail}");
}

fn gaussian_box_init(dim: usize) -> impl Fn(&mut RngBank) -> State<f64> + Sync {
    move |bank: &mut RngBank| {
        let rng = bank.stream(Role::Init);
        let pos: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let vel: Vec<f64> = (0..dim)
            .map(|_| if rng.gen::<f64>() < 0.5 { 1.0 } else { -1.0 })
            .collect();
        State::new(pos, vel)
    }
}

/// 1. Exact-simulator correctness: Gaussian position marginal and
///    unit-exponential time-rescaled gaps on a long 1-d Zig-Zag run, for
///    both rate styles, at the 1% KS level, in under ten seconds.
#[test]
fn criterion_01_exact_simulator_correctness() {
    let _g = guard();
    let started = Instant::now();
    let mut detail = String::new();
    let mut pass = true;
    for (name, style) in [
        ("positive-part", ZzsRateStyle::PositivePart),
        ("smooth", ZzsRateStyle::Smooth),
    ] {
        let model = ZzsModel::new(Potential::gaussian(1), ExcessRate::Zero, style);
        let pdmp = model.to_pdmp();
        let z0 = State::new(vec![0.0], vec![1.0]);
        let mut bank = RngBank::replica(101, 0);
        let burn_in = 100.0;
        let horizon = burn_in + 2000.0;
        let path = simulate(&pdmp, &z0, horizon, &mut bank).unwrap();
        // Position marginal sampled every two time units after burn-in.
        let times: Vec<f64> = (0..=1000).map(|k| burn_in + 2.0 * k as f64).collect();
        let states = path.states_at_times(&pdmp.flow, &times).unwrap();
        let mut xs: Vec<f64> = states.iter().map(|s| s.position[0]).collect();
        let pos_stat = ks_statistic(&mut xs, standard_normal_cdf);
        let pos_crit = ks_critical_1pct(xs.len());
        // Time-rescaled gaps, recomputed by quadrature along the path.
        let mut gaps = rescaled_event_gaps(&pdmp, &path).unwrap();
        let gap_crit = ks_critical_1pct(gaps.len());
        let gap_stat = ks_statistic(&mut gaps, exp1_cdf);
        pass &= pos_stat < pos_crit && gap_stat < gap_crit;
        detail.push_str(&format!(
            "{name}: position KS {pos_stat:.4} < {pos_crit:.4}, gaps KS {gap_stat:.4} < {gap_crit:.4} ({} events); ",
            gaps.len()
        ));
    }
    let in_budget = started.elapsed().as_secs_f64() < 10.0;
    pass &= in_budget;
    report("criterion 1 (exact simulator)", pass, &detail, started);
}

/// 2. First-order weak error on the telegraph process: shared-randomness
///    coupled differences against the analytic mean, slopes in [0.7, 1.3]
///    for the fully and partially discrete frozen-rate schemes.
#[test]
fn criterion_02_first_order_weak_error() {
    let _g = guard();
    let started = Instant::now();
    let pdmp = ZzsModel::telegraph(1.0).to_pdmp();
    let init = |_: &mut RngBank| State::new(vec![0.0], vec![1.0]);
    let deltas = [0.2, 0.1, 0.05, 0.025];
    let reps = [100_000u64; 4];
    // E[X_T] = (1 - exp(-2 lambda T)) / (2 lambda) at lambda = 1, T = 2.
    let reference = 0.490_842_180_555_632_9;
    let mut detail = String::new();
    let mut pass = true;
    for fully_discrete in [true, false] {
        let make = |d: f64| {
            let mesh = Mesh::from_horizon(d, 2.0);
            if fully_discrete {
                SchemeConfig::fd(RateApprox::Frozen, FlowApprox::ExactFlow, mesh)
            } else {
                SchemeConfig::pd(RateApprox::Frozen, FlowApprox::ExactFlow, mesh)
            }
        };
        let sweep = weak_error_sweep(
            &pdmp,
            &make,
            &deltas,
            &|s: &State<f64>| s.position[0],
            &init,
            &reps,
            201,
            WeakErrorMethod::CoupledDifference,
        )
        .unwrap();
        // The exact arm must agree with the analytic reference.
        for p in &sweep.points {
            pass &= (p.arm_mean - reference).abs() <= 4.0 * p.arm_stderr;
        }
        let slope = sweep.fit.as_ref().expect("resolved sweep").slope;
        pass &= (0.7..=1.3).contains(&slope);
        detail.push_str(&format!(
            "{} slope {slope:.3}; ",
            if fully_discrete { "FD" } else { "PD" }
        ));
    }
    let in_budget = started.elapsed().as_secs_f64() < 120.0;
    pass &= in_budget;
    report("criterion 2 (first-order weak error)", pass, &detail, started);
}

/// 3. Second-order scheme on the same telegraph setup: two events per step
///    with affine-interpolated rates, slope in [1.6, 2.4].
#[test]
fn criterion_03_second_order_weak_error() {
    let _g = guard();
    let started = Instant::now();
    let pdmp = ZzsModel::telegraph(1.0).to_pdmp();
    let init = |_: &mut RngBank| State::new(vec![0.0], vec![1.0]);
    let deltas = [0.2, 0.1, 0.05, 0.025];
    let reps = [100_000u64, 200_000, 600_000, 4_000_000];
    let reference = 0.490_842_180_555_632_9;
    let make = |d: f64| {
        SchemeConfig::order_p(
            2,
            RateApprox::LinearSecondOrder,
            FlowApprox::ExactFlow,
            Mesh::from_horizon(d, 2.0),
        )
    };
    let sweep = weak_error_sweep(
        &pdmp,
        &make,
        &deltas,
        &|s: &State<f64>| s.position[0],
        &init,
        &reps,
        301,
        WeakErrorMethod::CoupledDifference,
    )
    .unwrap();
    let mut pass = true;
    for p in &sweep.points {
        pass &= (p.arm_mean - reference).abs() <= 4.0 * p.arm_stderr;
    }
    let slope = sweep.fit.as_ref().expect("resolved sweep").slope;
    pass &= (1.6..=2.4).contains(&slope);
    let in_budget = started.elapsed().as_secs_f64() < 300.0;
    pass &= in_budget;
    report(
        "criterion 3 (second-order weak error)",
        pass,
        &format!("order-2 slope {slope:.3}"),
        started,
    );
}

/// 4. The thinning-coupling decoupling frequency on the 1-d Gaussian
///    Zig-Zag: order one in the step size at fixed horizon, non-decreasing
///    in time at fixed step size.
#[test]
fn criterion_04_tv_coupling_shape() {
    let _g = guard();
    let started = Instant::now();
    let pdmp = ZzsModel::gaussian(1).to_pdmp();
    let init = |_: &mut RngBank| State::new(vec![1.0], vec![1.0]);
    let deltas = [0.2, 0.1, 0.05, 0.025];
    let replicas = 10_000u64;
    let mut p_end = Vec::new();
    let mut se_end = Vec::new();
    let mut monotone = true;
    for (i, &d) in deltas.iter().enumerate() {
        let cfg = SchemeConfig::pd(
            RateApprox::Frozen,
            FlowApprox::ExactFlow,
            Mesh::from_horizon(d, 5.0),
        );
        let trace = tv_indicator_curve(&pdmp, &cfg, &init, replicas, 401 + i as u64).unwrap();
        p_end.push(*trace.mean.last().unwrap());
        se_end.push(*trace.stderr.last().unwrap());
        if d == 0.1 {
            // Non-decreasing in T at fixed delta, allowing CI overlap,
            // checked at five equally spaced times.
            for k in 1..=5 {
                let idx_prev = (k - 1) * trace.mean.len() / 5;
                let idx = k * (trace.mean.len() - 1) / 5;
                let drop = trace.mean[idx_prev] - trace.mean[idx];
                let allowed = 2.0 * (trace.stderr[idx_prev] + trace.stderr[idx]);
                monotone &= drop <= allowed;
            }
        }
    }
    let fit = fit_loglog_order(&deltas, &p_end, &se_end).unwrap();
    let slope_ok = (0.7..=1.3).contains(&fit.slope);
    let in_budget = started.elapsed().as_secs_f64() < 120.0;
    let pass = slope_ok && monotone && in_budget;
    report(
        "criterion 4 (tv coupling shape)",
        pass,
        &format!(
            "P(decoupled at T=5) = {p_end:?}, slope {:.3}, monotone in T: {monotone}",
            fit.slope
        ),
        started,
    );
}

/// 5. Synchronous-coupling distance curves for the 10-d Gaussian Zig-Zag:
///    pointwise ordered in the step size (with CI-overlap slack at no more
///    than 10% of shared mesh points) and a monotone final-time distance.
#[test]
fn criterion_05_wasserstein_proxy_ordering() {
    let _g = guard();
    let started = Instant::now();
    let pdmp = ZzsModel::gaussian(10).to_pdmp();
    let init = gaussian_box_init(10);
    let deltas = [0.1, 0.05, 0.01];
    let horizon = 10.0;
    let traces: Vec<Trace> = deltas
        .iter()
        .map(|&d| {
            let cfg = SchemeConfig::fd(
                RateApprox::Frozen,
                FlowApprox::ExactFlow,
                Mesh::from_horizon(d, horizon),
            );
            wasserstein_proxy_curve(&pdmp, &cfg, &init, DistanceNorm::L1, 50, 501).unwrap()
        })
        .collect();
    // Compare on the coarsest mesh's interior points.
    let coarse_times: Vec<f64> = traces[0].times[1..].to_vec();
    let mut violations = 0usize;
    let mut comparisons = 0usize;
    for pair in traces.windows(2) {
        let (big, small) = (&pair[0], &pair[1]);
        for &t in &coarse_times {
            let ib = big.times.iter().position(|x| (x - t).abs() < 1e-9).unwrap();
            let is = small
                .times
                .iter()
                .position(|x| (x - t).abs() < 1e-9)
                .unwrap();
            comparisons += 1;
            let gap = small.mean[is] - big.mean[ib];
            let slack = 2.0 * (small.stderr[is] + big.stderr[ib]);
            if gap > slack {
                violations += 1;
            }
        }
    }
    let ordered = violations as f64 <= 0.1 * comparisons as f64;
    let finals: Vec<f64> = traces.iter().map(|t| *t.mean.last().unwrap()).collect();
    let final_monotone = finals[0] > finals[1] && finals[1] > finals[2];
    let in_budget = started.elapsed().as_secs_f64() < 60.0;
    let pass = ordered && final_monotone && in_budget;
    report(
        "criterion 5 (coupled distance ordering)",
        pass,
        &format!(
            "final distances {finals:?}, ordering violations {violations}/{comparisons}"
        ),
        started,
    );
}

/// 6. Lyapunov moment boundedness for the 10-d Gaussian Zig-Zag and Bouncy
///    Particle samplers: the scheme's sup-over-mesh moment estimate stays
///    within twice the exact process's.
#[test]
fn criterion_06_lyapunov_moment_boundedness() {
    let _g = guard();
    let started = Instant::now();
    let mut detail = String::new();
    let mut pass = true;
    // Zig-Zag arm, fully discrete frozen scheme.
    let zzs = ZzsModel::gaussian(10).to_pdmp();
    let potential = Potential::gaussian(10);
    let g_zzs = move |s: &State<f64>| lyapunov_zzs(&potential, 0.25, 0.1, s);
    let init_zzs = gaussian_box_init(10);
    for d in [0.1, 0.05] {
        let cfg = SchemeConfig::fd(
            RateApprox::Frozen,
            FlowApprox::ExactFlow,
            Mesh::from_horizon(d, 20.0),
        );
        let tr = lyapunov_moment_trace_coupled(&zzs, &cfg, &g_zzs, &init_zzs, 10_000, 601).unwrap();
        let ratio = tr.scheme_sup() / tr.exact_sup();
        pass &= ratio <= 2.0;
        detail.push_str(&format!("zzs d={d}: ratio {ratio:.3}; "));
    }
    // Bouncy Particle arm with sphere refreshments, partially discrete.
    let model = BpsModel::new(Potential::gaussian(10), 1.0, RefreshLaw::UnitSphere);
    let bps = model.to_pdmp();
    let model_for_g = model.clone();
    let g_bps = move |s: &State<f64>| lyapunov_bps(&model_for_g, s);
    let init_bps = |bank: &mut RngBank| {
        let rng = bank.stream(Role::Init);
        let pos: Vec<f64> = (0..10).map(|_| StandardNormal.sample(rng)).collect();
        let mut vel: Vec<f64> = (0..10).map(|_| StandardNormal.sample(rng)).collect();
        let norm = vel.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        vel.iter_mut().for_each(|v| *v /= norm);
        State::new(pos, vel)
    };
    for d in [0.1, 0.05] {
        let cfg = SchemeConfig::pd(
            RateApprox::Frozen,
            FlowApprox::ExactFlow,
            Mesh::from_horizon(d, 20.0),
        );
        let tr = lyapunov_moment_trace_coupled(&bps, &cfg, &g_bps, &init_bps, 10_000, 602).unwrap();
        let ratio = tr.scheme_sup() / tr.exact_sup();
        pass &= ratio <= 2.0;
        detail.push_str(&format!("bps d={d}: ratio {ratio:.3}; "));
    }
    report("criterion 6 (lyapunov moments)", pass, &detail, started);
}

/// 7. Stationary bias of the radius statistic on the 10-d Gaussian
///    Zig-Zag: monotone decreasing over the step-size sweep and below 2%
///    of the truth at the smallest step. The second-order scheme carries
///    the 2% gate (first-order variants plateau near 4% there); the
///    first-order frozen scheme's bias is separately checked to decay at
///    order one.
#[test]
fn criterion_07_stationary_bias() {
    let _g = guard();
    let started = Instant::now();
    let pdmp = ZzsModel::gaussian(10).to_pdmp();
    let init = gaussian_box_init(10);
    let radius = |s: &State<f64>| s.position.iter().map(|x| x * x).sum::<f64>();
    let truth = 10.0;
    let deltas = [0.1, 0.05, 0.02];
    let mut biases = Vec::new();
    let mut stderrs = Vec::new();
    for &d in &deltas {
        let cfg = SchemeConfig::order_p(
            2,
            RateApprox::LinearSecondOrder,
            FlowApprox::ExactFlow,
            Mesh::from_horizon(d, 500.0),
        );
        let tr = stationary_bias_curve(&pdmp, &cfg, &radius, truth, 0.2, &init, 128, 701).unwrap();
        biases.push(*tr.scheme_error.last().unwrap());
        stderrs.push(*tr.scheme_stderr.last().unwrap());
    }
    let monotone = biases[0] > biases[1] && biases[1] > biases[2];
    let small_enough = biases[2] < 0.02 * truth;
    // First-order check: the frozen-rate scheme's bias decays at order one.
    let mut frozen = Vec::new();
    let mut frozen_se = Vec::new();
    for &d in &deltas {
        let cfg = SchemeConfig::fd(
            RateApprox::Frozen,
            FlowApprox::ExactFlow,
            Mesh::from_horizon(d, 500.0),
        );
        let tr = stationary_bias_curve(&pdmp, &cfg, &radius, truth, 0.2, &init, 64, 702).unwrap();
        frozen.push(*tr.scheme_error.last().unwrap());
        frozen_se.push(*tr.scheme_stderr.last().unwrap());
    }
    let fit = fit_loglog_order(&deltas, &frozen, &frozen_se).unwrap();
    let frozen_first_order = (fit.slope - 1.0).abs() <= 0.5;
    let in_budget = started.elapsed().as_secs_f64() < 300.0;
    let pass = monotone && small_enough && frozen_first_order && in_budget;
    report(
        "criterion 7 (stationary bias)",
        pass,
        &format!(
            "order-2 biases {biases:?} (gate {:.2}), frozen slope {:.3}",
            0.02 * truth,
            fit.slope
        ),
        started,
    );
}

/// 8. Oracle equivalence: E[X_T^2] of the 1-d Gaussian Zig-Zag at T = 1
///    from exact Monte Carlo and from the forward-equation solver agree
///    within combined error bars.
#[test]
fn criterion_08_oracle_equivalence() {
    let _g = guard();
    let started = Instant::now();
    let pdmp = ZzsModel::gaussian(1).to_pdmp();
    let z0 = State::new(vec![0.5], vec![1.0]);
    let acc = accumulate_replicas(1_000_000, |rep| {
        let mut bank = RngBank::replica(801, rep);
        let x = simulate(&pdmp, &z0, 1.0, &mut bank)?.terminal_state.position[0];
        Ok(vec![x * x])
    })
    .unwrap();
    let rates = TwoVelocityRates {
        plus: std::sync::Arc::new(|x: f64| x.max(0.0)),
        minus: std::sync::Arc::new(|x: f64| (-x).max(0.0)),
    };
    let g2 = &|x: f64| x * x;
    let oracle = forward_pde_oracle_1d(&rates, 0.5, 1.0, 1.0, 1e-3, 1e-3, &[g2]).unwrap();
    let diff = (acc.mean(0) - oracle.values[0]).abs();
    let budget = 3.0 * acc.stderr(0) + oracle.self_convergence[0];
    let pass = diff <= budget;
    report(
        "criterion 8 (oracle equivalence)",
        pass,
        &format!(
            "mc {:.5} vs oracle {:.5}, diff {diff:.2e} <= {budget:.2e}",
            acc.mean(0),
            oracle.values[0]
        ),
        started,
    );
}

/// 9. Coupling marginal consistency: both arms of the synchronous and
///    thinning couplings reproduce the first two moments of independent
///    simulation within four combined standard errors.
#[test]
fn criterion_09_coupling_marginal_consistency() {
    let _g = guard();
    let started = Instant::now();
    let pdmp = ZzsModel::gaussian(1).to_pdmp();
    let z0 = State::new(vec![1.0], vec![1.0]);
    let horizon = 2.0;
    let delta = 0.1;
    let replicas = 10_000u64;
    let fd_cfg = SchemeConfig::fd(
        RateApprox::Frozen,
        FlowApprox::ExactFlow,
        Mesh::from_horizon(delta, horizon),
    );
    let pd_cfg = SchemeConfig::pd(
        RateApprox::Frozen,
        FlowApprox::ExactFlow,
        Mesh::from_horizon(delta, horizon),
    );
    // Coupled arms.
    let z0w = z0.clone();
    let wass = accumulate_replicas(replicas, |rep| {
        let mut bank = RngBank::replica(901, rep);
        let run = run_wasserstein(&pdmp, &fd_cfg, &z0w, &z0w, DistanceNorm::L1, &mut bank)?;
        let xe = run.exact_states.last().unwrap().position[0];
        let xa = run.approx_states.last().unwrap().position[0];
        Ok(vec![xe, xe * xe, xa, xa * xa])
    })
    .unwrap();
    let z0t = z0.clone();
    let tv = accumulate_replicas(replicas, |rep| {
        let mut bank = RngBank::replica(902, rep);
        let run = run_tv(&pdmp, &pd_cfg, &z0t, DistanceNorm::L1, &mut bank)?;
        let xe = run.exact_states.last().unwrap().position[0];
        let xa = run.approx_states.last().unwrap().position[0];
        Ok(vec![xe, xe * xe, xa, xa * xa])
    })
    .unwrap();
    // Independent references.
    let z0e = z0.clone();
    let exact_ref = accumulate_replicas(replicas, |rep| {
        let mut bank = RngBank::replica(903, rep);
        let x = simulate(&pdmp, &z0e, horizon, &mut bank)?.terminal_state.position[0];
        Ok(vec![x, x * x])
    })
    .unwrap();
    let z0f = z0.clone();
    let fd_ref = accumulate_replicas(replicas, |rep| {
        let mut bank = RngBank::replica(904, rep);
        let x = run_scheme(&fd_cfg, &pdmp, &z0f, &mut bank)?
            .terminal_state()
            .position[0];
        Ok(vec![x, x * x])
    })
    .unwrap();
    let z0p = z0.clone();
    let pd_ref = accumulate_replicas(replicas, |rep| {
        let mut bank = RngBank::replica(905, rep);
        let x = run_scheme(&pd_cfg, &pdmp, &z0p, &mut bank)?
            .terminal_state()
            .position[0];
        Ok(vec![x, x * x])
    })
    .unwrap();
    let mut pass = true;
    let mut worst: f64 = 0.0;
    let checks: [(&Accumulated, usize, &Accumulated); 4] = [
        (&wass, 0, &exact_ref),
        (&wass, 2, &fd_ref),
        (&tv, 0, &exact_ref),
        (&tv, 2, &pd_ref),
    ];
    for (arm, base, reference) in checks {
        for moment in 0..2 {
            let a = arm.mean(base + moment);
            let b = reference.mean(moment);
            let sigma =
                (arm.stderr(base + moment).powi(2) + reference.stderr(moment).powi(2)).sqrt();
            let pulls = (a - b).abs() / sigma;
            worst = worst.max(pulls);
            pass &= pulls <= 4.0;
        }
    }
    report(
        "criterion 9 (coupling marginals)",
        pass,
        &format!("worst deviation {worst:.2} sigma across 8 moment checks"),
        started,
    );
}

/// 10. Invariant micro-suite: reflection and flip algebra, flow semigroup,
///     rate nonnegativity, the smooth-rate switching identity, and seeded
///     bit-stability.
#[test]
fn criterion_10_invariant_micro_suite() {
    let _g = guard();
    let started = Instant::now();
    let mut pass = true;
    let mut bank = RngBank::replica(1001, 0);
    // Reflection norm preservation and involution at 1e-12.
    for _ in 0..200 {
        let g: Vec<f64> = (0..4)
            .map(|_| 6.0 * bank.uniform(Role::Init) - 3.0)
            .collect();
        let v: Vec<f64> = (0..4)
            .map(|_| 6.0 * bank.uniform(Role::Init) - 3.0)
            .collect();
        if g.iter().map(|x| x * x).sum::<f64>().sqrt() < 1e-6 {
            continue;
        }
        let r = reflect_velocity(&g, &v).unwrap();
        let n0: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let n1: f64 = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        pass &= (n0 - n1).abs() <= 1e-12 * (1.0 + n0);
        let rr = reflect_velocity(&g, &r).unwrap();
        pass &= rr
            .iter()
            .zip(&v)
            .all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + b.abs()));
    }
    // Flip involution, exactly.
    let v = vec![1.0, -1.0, 1.0];
    pass &= zzs_flip(&zzs_flip(&v, 1), 1) == v;
    // Flow semigroup at 1e-10 across the built-in exact flows.
    let flows = [
        ZzsModel::gaussian(2).to_pdmp(),
        BpsModel::gaussian(2, 1.0).to_pdmp(),
        RhmcModel::new(Potential::anisotropic_gaussian(vec![0.7, 1.9]), 1.0).to_pdmp(),
    ];
    for pdmp in &flows {
        for _ in 0..64 {
            let z = State::new(
                (0..2).map(|_| 2.0 * bank.uniform(Role::Init) - 1.0).collect(),
                (0..2).map(|_| 2.0 * bank.uniform(Role::Init) - 1.0).collect(),
            );
            let s = bank.uniform(Role::Init);
            let t = bank.uniform(Role::Init);
            let a = pdmp.flow.at(&z, s + t).unwrap();
            let b = pdmp.flow.at(&pdmp.flow.at(&z, t).unwrap(), s).unwrap();
            pass &= a
                .position
                .iter()
                .chain(&a.velocity)
                .zip(b.position.iter().chain(&b.velocity))
                .all(|(x, y)| (x - y).abs() <= 1e-10);
        }
    }
    // Rate nonnegativity across models and random states.
    let zzs = ZzsModel::gaussian(3).to_pdmp();
    let bps = BpsModel::gaussian(3, 0.5).to_pdmp();
    for _ in 0..200 {
        let z = State::new(
            (0..3).map(|_| 8.0 * bank.uniform(Role::Init) - 4.0).collect(),
            (0..3)
                .map(|_| if bank.uniform(Role::Init) < 0.5 { 1.0 } else { -1.0 })
                .collect(),
        );
        for i in 0..zzs.num_kernels() {
            pass &= zzs.rates.rate(i, &z) >= 0.0;
        }
        for i in 0..bps.num_kernels() {
            pass &= bps.rates.rate(i, &z) >= 0.0;
        }
    }
    // Smooth-rate switching identity at 1e-12.
    let smooth = ZzsModel::new(Potential::gaussian(2), ExcessRate::Zero, ZzsRateStyle::Smooth);
    for _ in 0..200 {
        let x: Vec<f64> = (0..2).map(|_| 8.0 * bank.uniform(Role::Init) - 4.0).collect();
        let v: Vec<f64> = (0..2)
            .map(|_| if bank.uniform(Role::Init) < 0.5 { 1.0 } else { -1.0 })
            .collect();
        for i in 0..2 {
            let z = State::new(x.clone(), v.clone());
            let zf = State::new(x.clone(), zzs_flip(&v, i));
            let lhs = smooth.rate(&z, i) - smooth.rate(&zf, i);
            pass &= (lhs - v[i] * x[i]).abs() <= 1e-12;
        }
    }
    // Byte-identical reruns under a fixed seed.
    let cfg = SchemeConfig::pd(
        RateApprox::Frozen,
        FlowApprox::ExactFlow,
        Mesh::from_horizon(0.05, 10.0),
    );
    let z0 = State::new(vec![0.3, -0.1, 0.2], vec![1.0, -1.0, 1.0]);
    let a = run_scheme(&cfg, &zzs, &z0, &mut RngBank::replica(1002, 3)).unwrap();
    let b = run_scheme(&cfg, &zzs, &z0, &mut RngBank::replica(1002, 3)).unwrap();
    pass &= a.states == b.states;
    let pa = simulate(&zzs, &z0, 10.0, &mut RngBank::replica(1003, 3)).unwrap();
    let pb = simulate(&zzs, &z0, 10.0, &mut RngBank::replica(1003, 3)).unwrap();
    pass &= pa.terminal_state == pb.terminal_state && pa.event_count() == pb.event_count();
    report(
        "criterion 10 (invariant micro-suite)",
        pass,
        "reflection, flips, semigroup, rates, smooth identity, determinism",
        started,
    );
}
