//! Estimators and oracles turning trajectories into convergence evidence:
//! coupled distance curves, decoupling frequencies, Lyapunov moment traces,
//! stationary bias, weak-error sweeps with log-log order fits, and a
//! forward-equation reference solver for 1-d two-velocity processes.

mod curves;
mod pde;
mod stats;

pub use curves::{
    lyapunov_moment_trace, lyapunov_moment_trace_coupled, stationary_bias_curve, tv_indicator_curve, wasserstein_proxy_curve,
    weak_error_sweep, BiasTrace, InitFn, MomentTrace, StatisticFn, SweepPoint, SweepResult, Trace,
    WeakErrorMethod,
};
pub use pde::{forward_pde_oracle_1d, OracleResult, TwoVelocityRates};
pub use stats::{
    accumulate_replicas, exp1_cdf, fit_loglog_order, ks_critical_1pct, ks_statistic, mean_stderr,
    rescaled_event_gaps, standard_normal_cdf, Accumulated, OrderFit,
};
