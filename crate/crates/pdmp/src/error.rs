use thiserror::Error;

/// Errors across simulation, schemes, couplings and diagnostics.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// The flow has no closed form; callers must use an integrator instead.
    #[error("no exact flow registered for this process")]
    NoExactFlow,

    /// A thinning proposal found the true rate above the supplied bound.
    #[error("thinning bound violated at offset {offset}: rate {rate} > bound {bound}")]
    ThinningBoundViolated { offset: f64, rate: f64, bound: f64 },

    /// Neither a closed-form clock nor a thinning bound is available.
    #[error("no simulation path: no closed-form event clock and no along-flow bound")]
    NoSimulationPath,

    /// A kernel draw was requested with all weights zero.
    #[error("kernel index draw with zero total weight")]
    ZeroTotalRate,

    /// More events than the configured cap; guards explosive rates.
    #[error("event storm: more than {max_events} events on one path")]
    EventStorm { max_events: usize },

    /// An integrator step was requested but no vector field is registered.
    #[error("no vector field registered for this process")]
    NoVectorField,

    /// Reflection is undefined at a critical point of the potential.
    #[error("zero gradient: reflection undefined at a critical point")]
    ZeroGradient,

    /// Configuration rejected before running.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The PDE oracle could not meet the requested tolerance.
    #[error("grid too coarse: self-convergence estimate {estimate} exceeds tolerance {tolerance}")]
    GridTooCoarse { estimate: f64, tolerance: f64 },

    /// An order fit was requested on data that cannot support it.
    #[error("insufficient signal for order fit: {0}")]
    InsufficientSignal(String),
}
