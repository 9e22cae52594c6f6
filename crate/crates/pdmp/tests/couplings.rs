//! Behaviour of the couplings: degenerate cases, marginal preservation,
//! and shared-randomness determinism.

use pdmp::couplings::{
    higher_order_step, run_subsampled_tv, run_tv, run_wasserstein, subsampling_tv_step, tv_step,
    wasserstein_step, DistanceNorm,
};
use pdmp::diagnostics::accumulate_replicas;
use pdmp::models::{ExcessRate, Potential, ZzsModel, ZzsRateStyle, ZzsSubsamplingModel};
use pdmp::process::{simulate, State};
use pdmp::rng::RngBank;
use pdmp::schemes::{FlowApprox, Mesh, RateApprox, Scheme};
use pdmp::{Error, Pdmp, SchemeConfig};

fn zero_rate_pdmp(dim: usize) -> Pdmp {
    ZzsModel::new(
        Potential::zero(dim),
        ExcessRate::Zero,
        ZzsRateStyle::PositivePart,
    )
    .to_pdmp()
}

#[test]
fn zero_rates_move_both_processes_deterministically() {
    let pdmp = zero_rate_pdmp(2);
    let cfg = SchemeConfig::pd(
        RateApprox::Frozen,
        FlowApprox::ExactFlow,
        Mesh::constant(0.5, 1),
    );
    let mut bank = RngBank::replica(1, 0);
    let mut aux = bank.subscope(91);
    let z = State::new(vec![0.0, 1.0], vec![1.0, -1.0]);
    let zb = State::new(vec![0.5, 0.0], vec![-1.0, 1.0]);
    let step = wasserstein_step(&pdmp, &cfg, &z, &zb, 0.5, &mut bank, &mut aux).unwrap();
    assert_eq!(step.exact.position, vec![0.5, 0.5]);
    assert_eq!(step.approx.position, vec![0.0, 0.5]);

    let mut aux_a = bank.subscope(92);
    let step = tv_step(&pdmp, &cfg, &z, 0.5, &mut bank, &mut aux, &mut aux_a).unwrap();
    assert!(step.still_equal);
    assert_eq!(step.exact, step.approx);
    assert_eq!(step.exact.position, vec![0.5, 0.5]);
}

#[test]
fn synchronous_coupling_keeps_identical_processes_together() {
    // Exact rate variant, exact flow and kernels, common start: the step
    // ends unequal only when the exact process fires at least twice, an
    // order delta^2 event.
    let pdmp = ZzsModel::gaussian(1).to_pdmp();
    let delta = 0.25;
    let cfg = SchemeConfig::pd(
        RateApprox::Exact,
        FlowApprox::ExactFlow,
        Mesh::constant(delta, 1),
    );
    let z0 = State::new(vec![1.0], vec![1.0]);
    let reps = 40_000u64;
    let acc = accumulate_replicas(reps, |rep| {
        let mut bank = RngBank::replica(11, rep);
        let mut aux = bank.subscope(91);
        let step = wasserstein_step(&pdmp, &cfg, &z0, &z0, delta, &mut bank, &mut aux)?;
        Ok(vec![if step.exact == step.approx { 0.0 } else { 1.0 }])
    })
    .unwrap();
    // Independent reference: frequency of two or more exact events.
    let reference = accumulate_replicas(reps, |rep| {
        let mut bank = RngBank::replica(12, rep);
        let path = simulate(&pdmp, &z0, delta, &mut bank)?;
        Ok(vec![if path.event_count() >= 2 { 1.0 } else { 0.0 }])
    })
    .unwrap();
    let diff = (acc.mean(0) - reference.mean(0)).abs();
    let sigma = (acc.stderr(0).powi(2) + reference.stderr(0).powi(2)).sqrt();
    assert!(
        diff <= 4.0 * sigma.max(1e-4),
        "unequal fraction {} vs two-event fraction {}",
        acc.mean(0),
        reference.mean(0)
    );
}

#[test]
fn tv_identical_rates_cannot_split() {
    // With the exact rate variant both acceptance ratios coincide, so a
    // decoupling can only come from a second exact event in the step.
    let pdmp = ZzsModel::gaussian(1).to_pdmp();
    let delta = 0.2;
    let cfg = SchemeConfig::pd(
        RateApprox::Exact,
        FlowApprox::ExactFlow,
        Mesh::constant(delta, 1),
    );
    let z0 = State::new(vec![0.5], vec![1.0]);
    let reps = 40_000u64;
    let acc = accumulate_replicas(reps, |rep| {
        let mut bank = RngBank::replica(21, rep);
        let mut aux_e = bank.subscope(91);
        let mut aux_a = bank.subscope(92);
        let step = tv_step(&pdmp, &cfg, &z0, delta, &mut bank, &mut aux_e, &mut aux_a)?;
        Ok(vec![if step.still_equal { 0.0 } else { 1.0 }])
    })
    .unwrap();
    let reference = accumulate_replicas(reps, |rep| {
        let mut bank = RngBank::replica(22, rep);
        let path = simulate(&pdmp, &z0, delta, &mut bank)?;
        Ok(vec![if path.event_count() >= 2 { 1.0 } else { 0.0 }])
    })
    .unwrap();
    let diff = (acc.mean(0) - reference.mean(0)).abs();
    let sigma = (acc.stderr(0).powi(2) + reference.stderr(0).powi(2)).sqrt();
    assert!(
        diff <= 4.0 * sigma.max(1e-4),
        "decoupling {} vs two-event fraction {}",
        acc.mean(0),
        reference.mean(0)
    );
}

#[test]
fn tv_rejects_approximate_flows_and_fd() {
    let pdmp = ZzsModel::gaussian(1).to_pdmp();
    let z0 = State::new(vec![0.0], vec![1.0]);
    let mut bank = RngBank::replica(3, 0);
    let mut aux_e = bank.subscope(91);
    let mut aux_a = bank.subscope(92);
    let euler_cfg = SchemeConfig::pd(RateApprox::Frozen, FlowApprox::Euler, Mesh::constant(0.1, 1));
    assert!(matches!(
        tv_step(&pdmp, &euler_cfg, &z0, 0.1, &mut bank, &mut aux_e, &mut aux_a),
        Err(Error::InvalidConfig(_))
    ));
    let fd_cfg = SchemeConfig::fd(
        RateApprox::Frozen,
        FlowApprox::ExactFlow,
        Mesh::constant(0.1, 1),
    );
    assert!(matches!(
        run_tv(&pdmp, &fd_cfg, &z0, DistanceNorm::L1, &mut bank),
        Err(Error::InvalidConfig(_))
    ));
}

#[test]
fn coupled_runs_are_bit_reproducible() {
    let pdmp = ZzsModel::gaussian(3).to_pdmp();
    let cfg = SchemeConfig::fd(
        RateApprox::Frozen,
        FlowApprox::ExactFlow,
        Mesh::constant(0.1, 100),
    );
    let z0 = State::new(vec![0.1, -0.2, 0.3], vec![1.0, -1.0, 1.0]);
    let a = run_wasserstein(
        &pdmp,
        &cfg,
        &z0,
        &z0,
        DistanceNorm::L1,
        &mut RngBank::replica(77, 5),
    )
    .unwrap();
    let b = run_wasserstein(
        &pdmp,
        &cfg,
        &z0,
        &z0,
        DistanceNorm::L1,
        &mut RngBank::replica(77, 5),
    )
    .unwrap();
    assert_eq!(a.distances, b.distances);
    assert_eq!(a.exact_states.last(), b.exact_states.last());

    let pd_cfg = SchemeConfig::pd(
        RateApprox::Frozen,
        FlowApprox::ExactFlow,
        Mesh::constant(0.1, 100),
    );
    let a = run_tv(&pdmp, &pd_cfg, &z0, DistanceNorm::L1, &mut RngBank::replica(78, 5)).unwrap();
    let b = run_tv(&pdmp, &pd_cfg, &z0, DistanceNorm::L1, &mut RngBank::replica(78, 5)).unwrap();
    assert_eq!(a.equal_flags, b.equal_flags);
    assert_eq!(a.decoupling_time, b.decoupling_time);
    assert_eq!(a.approx_states.last(), b.approx_states.last());
}

#[test]
fn higher_order_coupled_jump_keeps_equality() {
    // Order-2 coupling with exact everything: over many single steps the
    // two processes stay equal except on order delta^3 events.
    let pdmp = ZzsModel::gaussian(1).to_pdmp();
    let delta = 0.3;
    let cfg = SchemeConfig::order_p(
        2,
        RateApprox::Exact,
        FlowApprox::ExactFlow,
        Mesh::constant(delta, 1),
    );
    let z0 = State::new(vec![1.0], vec![1.0]);
    let reps = 20_000u64;
    let acc = accumulate_replicas(reps, |rep| {
        let mut bank = RngBank::replica(31, rep);
        let mut aux_e = bank.subscope(91);
        let mut aux_a = bank.subscope(92);
        let step = higher_order_step(
            &pdmp, &cfg, &z0, &z0, delta, 2, &mut bank, &mut aux_e, &mut aux_a,
        )?;
        Ok(vec![if step.still_equal { 0.0 } else { 1.0 }])
    })
    .unwrap();
    // Three exact events in a step of 0.3 from rates around 1.3 happen
    // with probability well under 1.5e-2; the candidate cap adds a little.
    assert!(
        acc.mean(0) < 2e-2,
        "order-2 decoupling fraction {}",
        acc.mean(0)
    );
}

#[test]
fn tv_marginals_match_independent_simulation() {
    // Light version of the marginal consistency gate: first and second
    // moments of both arms against independent runs, at 4 sigma.
    let pdmp = ZzsModel::gaussian(1).to_pdmp();
    let delta = 0.1;
    let horizon = 2.0;
    let cfg = SchemeConfig::pd(
        RateApprox::Frozen,
        FlowApprox::ExactFlow,
        Mesh::from_horizon(delta, horizon),
    );
    let z0 = State::new(vec![1.0], vec![1.0]);
    let reps = 30_000u64;
    let coupled = accumulate_replicas(reps, |rep| {
        let mut bank = RngBank::replica(41, rep);
        let run = run_tv(&pdmp, &cfg, &z0, DistanceNorm::L1, &mut bank)?;
        let xe = run.exact_states.last().unwrap().position[0];
        let xa = run.approx_states.last().unwrap().position[0];
        Ok(vec![xe, xe * xe, xa, xa * xa])
    })
    .unwrap();
    let exact_ref = accumulate_replicas(reps, |rep| {
        let mut bank = RngBank::replica(42, rep);
        let x = simulate(&pdmp, &z0, horizon, &mut bank)?.terminal_state.position[0];
        Ok(vec![x, x * x])
    })
    .unwrap();
    let scheme_ref = accumulate_replicas(reps, |rep| {
        let mut bank = RngBank::replica(43, rep);
        let path = pdmp::schemes::run_scheme(&cfg, &pdmp, &z0, &mut bank)?;
        let x = path.terminal_state().position[0];
        Ok(vec![x, x * x])
    })
    .unwrap();
    for (k, (arm, ref_acc)) in [(0, &exact_ref), (2, &scheme_ref)].iter().enumerate() {
        for moment in 0..2 {
            let a = coupled.mean(arm + moment);
            let b = ref_acc.mean(moment);
            let sigma = (coupled.stderr(arm + moment).powi(2)
                + ref_acc.stderr(moment).powi(2))
            .sqrt();
            assert!(
                (a - b).abs() <= 4.0 * sigma,
                "arm {k} moment {moment}: {a} vs {b} (sigma {sigma})"
            );
        }
    }
}

#[test]
fn subsampled_coupling_single_datum_matches_tv_in_law() {
    // One datum: the subsampled coupling is the plain thinning coupling of
    // that datum's process; compare decoupling frequencies. A Gaussian
    // per-datum potential keeps closed-form clocks available to both.
    let model = ZzsSubsamplingModel::new(vec![Potential::gaussian(2)]);
    let pdmp = model.pdmp_for_datum(0);
    let delta = 0.25;
    let z0 = State::new(vec![0.4, 0.2], vec![1.0, -1.0]);
    let reps = 20_000u64;
    let sub = accumulate_replicas(reps, |rep| {
        let mut bank = RngBank::replica(51, rep);
        let mut aux_e = bank.subscope(91);
        let mut aux_a = bank.subscope(92);
        let step = subsampling_tv_step(&model, &z0, delta, &mut bank, &mut aux_e, &mut aux_a)?;
        Ok(vec![if step.still_equal { 0.0 } else { 1.0 }])
    })
    .unwrap();
    let cfg = SchemeConfig::pd(
        RateApprox::Frozen,
        FlowApprox::ExactFlow,
        Mesh::constant(delta, 1),
    );
    let tv = accumulate_replicas(reps, |rep| {
        let mut bank = RngBank::replica(52, rep);
        let mut aux_e = bank.subscope(91);
        let mut aux_a = bank.subscope(92);
        let step = tv_step(&pdmp, &cfg, &z0, delta, &mut bank, &mut aux_e, &mut aux_a)?;
        Ok(vec![if step.still_equal { 0.0 } else { 1.0 }])
    })
    .unwrap();
    let sigma = (sub.stderr(0).powi(2) + tv.stderr(0).powi(2)).sqrt();
    assert!(
        (sub.mean(0) - tv.mean(0)).abs() <= 4.0 * sigma.max(5e-4),
        "subsampled {} vs tv {}",
        sub.mean(0),
        tv.mean(0)
    );
}

#[test]
fn subsampled_run_records_decoupling() {
    let mut rng = pdmp::rng::SeedTree::new(61).rng();
    let (xs, ys) = pdmp::models::synthetic_logistic_data(50, 2, &[1.0, -0.5], &mut rng);
    let model = ZzsSubsamplingModel::from_logistic(xs, ys);
    let z0 = State::new(vec![0.0, 0.0], vec![1.0, -1.0]);
    let run = run_subsampled_tv(&model, &z0, 0.05, 40, &mut RngBank::replica(62, 0)).unwrap();
    assert_eq!(run.times.len(), 41);
    let flags = run.equal_flags.unwrap();
    // Once false the flag stays false.
    let mut seen_false = false;
    for f in flags {
        if seen_false {
            assert!(!f);
        }
        if !f {
            seen_false = true;
        }
    }
}

#[test]
fn higher_order_marginals_match_independent_simulation() {
    // Three statistics of both arms of the order-2 coupling against
    // independent runs, at 4 combined standard errors.
    let pdmp = ZzsModel::gaussian(1).to_pdmp();
    let delta = 0.1;
    let horizon = 2.0;
    let cfg = SchemeConfig::order_p(
        2,
        RateApprox::LinearSecondOrder,
        FlowApprox::ExactFlow,
        Mesh::from_horizon(delta, horizon),
    );
    let z0 = State::new(vec![1.0], vec![1.0]);
    let reps = 20_000u64;
    let stats = |x: f64| vec![x, x * x, (x - 1.0).abs()];
    let coupled = accumulate_replicas(reps, |rep| {
        let mut bank = RngBank::replica(141, rep);
        let run = run_tv(&pdmp, &cfg, &z0, DistanceNorm::L1, &mut bank)?;
        let xe = run.exact_states.last().unwrap().position[0];
        let xa = run.approx_states.last().unwrap().position[0];
        let mut v = stats(xe);
        v.extend(stats(xa));
        Ok(v)
    })
    .unwrap();
    let exact_ref = accumulate_replicas(reps, |rep| {
        let mut bank = RngBank::replica(142, rep);
        let x = simulate(&pdmp, &z0, horizon, &mut bank)?.terminal_state.position[0];
        Ok(stats(x))
    })
    .unwrap();
    let scheme_ref = accumulate_replicas(reps, |rep| {
        let mut bank = RngBank::replica(143, rep);
        let path = pdmp::schemes::run_scheme(&cfg, &pdmp, &z0, &mut bank)?;
        Ok(stats(path.terminal_state().position[0]))
    })
    .unwrap();
    for (base, reference) in [(0usize, &exact_ref), (3, &scheme_ref)] {
        for k in 0..3 {
            let a = coupled.mean(base + k);
            let b = reference.mean(k);
            let sigma = (coupled.stderr(base + k).powi(2) + reference.stderr(k).powi(2)).sqrt();
            assert!(
                (a - b).abs() <= 4.0 * sigma,
                "statistic {k} arm at {base}: {a} vs {b}"
            );
        }
    }
}

#[test]
fn subsampled_marginals_match_the_per_step_datum_chain() {
    // The coupled arms against independent simulations of the same
    // construction: a datum drawn per step, the exact process thinned to
    // that datum's rates, the approximation frozen at them.
    let mut rng = pdmp::rng::SeedTree::new(150).rng();
    let (xs, ys) = pdmp::models::synthetic_logistic_data(10, 2, &[0.8, -0.4], &mut rng);
    let model = ZzsSubsamplingModel::from_logistic(xs, ys);
    let delta = 0.1;
    let steps = 10usize;
    let z0 = State::new(vec![0.2, -0.3], vec![1.0, -1.0]);
    let reps = 15_000u64;
    let stats = |s: &State<f64>| {
        vec![
            s.position[0],
            s.position[0] * s.position[0] + s.position[1] * s.position[1],
            s.position[0] * s.position[1],
        ]
    };
    let coupled = accumulate_replicas(reps, |rep| {
        let mut bank = RngBank::replica(151, rep);
        let run = run_subsampled_tv(&model, &z0, delta, steps, &mut bank)?;
        let mut v = stats(run.exact_states.last().unwrap());
        v.extend(stats(run.approx_states.last().unwrap()));
        Ok(v)
    })
    .unwrap();
    let exact_ref = accumulate_replicas(reps, |rep| {
        let mut bank = RngBank::replica(152, rep);
        let mut z = z0.clone();
        for _ in 0..steps {
            let j = rand::Rng::gen_range(bank.stream(pdmp::rng::Role::Subsample), 0..model.num_data());
            z = simulate(&model.pdmp_for_datum(j), &z, delta, &mut bank)?.terminal_state;
        }
        Ok(stats(&z))
    })
    .unwrap();
    let approx_ref = accumulate_replicas(reps, |rep| {
        let mut bank = RngBank::replica(153, rep);
        let mut z = z0.clone();
        for _ in 0..steps {
            let j = rand::Rng::gen_range(bank.stream(pdmp::rng::Role::Subsample), 0..model.num_data());
            let cfg = SchemeConfig::pd(
                RateApprox::Frozen,
                FlowApprox::ExactFlow,
                Mesh::constant(delta, 1),
            );
            z = pdmp::schemes::pd_step(&cfg, &model.pdmp_for_datum(j), &z, delta, &mut bank)?.0;
        }
        Ok(stats(&z))
    })
    .unwrap();
    for (base, reference) in [(0usize, &exact_ref), (3, &approx_ref)] {
        for k in 0..3 {
            let a = coupled.mean(base + k);
            let b = reference.mean(k);
            let sigma = (coupled.stderr(base + k).powi(2) + reference.stderr(k).powi(2)).sqrt();
            assert!(
                (a - b).abs() <= 4.0 * sigma,
                "statistic {k} arm at {base}: {a} vs {b} (sigma {sigma})"
            );
        }
    }
}

#[test]
fn order_one_tv_and_pd_schemes_share_the_scheme_enum() {
    // Guard: the one-step tv path accepts OrderP without panicking.
    let pdmp = ZzsModel::gaussian(1).to_pdmp();
    let cfg = SchemeConfig::order_p(
        2,
        RateApprox::LinearSecondOrder,
        FlowApprox::ExactFlow,
        Mesh::constant(0.1, 5),
    );
    let z0 = State::new(vec![0.5], vec![-1.0]);
    let run = run_tv(&pdmp, &cfg, &z0, DistanceNorm::L1, &mut RngBank::replica(71, 0)).unwrap();
    assert!(matches!(cfg.scheme, Scheme::OrderP(2)));
    assert_eq!(run.times.len(), 6);
}
