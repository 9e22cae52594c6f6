//! Simulation of piecewise deterministic Markov processes (PDMPs).
//!
//! A PDMP is defined by three characteristics: a deterministic flow, a family
//! of event rates, and a family of jump kernels. This crate provides
//!
//! - exact simulation by time inversion and Poisson thinning ([`process`]),
//! - fully discrete, partially discrete and order-p discretisation schemes
//!   with pluggable approximations of each characteristic ([`schemes`]),
//! - concrete samplers and models: Zig-Zag, Bouncy Particle, randomized HMC,
//!   Morris-Lecar, cell growth, Zig-Zag with subsampling ([`models`]),
//! - couplings of the exact process with a scheme under shared randomness,
//!   for Wasserstein- and total-variation-style error estimation
//!   ([`couplings`]),
//! - estimators and brute-force oracles that turn trajectories into
//!   convergence-order measurements ([`diagnostics`]).
//!
//! The process and scheme layers are generic over the floating point type via
//! [`scalar::Real`]; the model and estimator layers work with the `f64`
//! aliases exported at the crate root.
//!
//! # Example
//!
//! ```
//! use pdmp::models::ZzsModel;
//! use pdmp::rng::RngBank;
//!
//! // 1-d Zig-Zag sampler targeting a standard Gaussian.
//! let model = ZzsModel::gaussian(1);
//! let pdmp = model.to_pdmp();
//! let z0 = pdmp::State::new(vec![0.0], vec![1.0]);
//! let mut bank = RngBank::replica(7, 0);
//! let path = pdmp::process::simulate(&pdmp, &z0, 10.0, &mut bank).unwrap();
//! assert!(path.event_count() <= 1_000);
//! ```

pub mod couplings;
pub mod diagnostics;
mod error;
pub mod models;
pub mod process;
pub mod rng;
pub mod scalar;
pub mod schemes;

pub use error::Error;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;

/// `f64` state, the concrete type used by models and estimators.
pub type State = process::State<f64>;
/// `f64` PDMP specification.
pub type Pdmp = process::PdmpSpec<f64>;
/// `f64` skeleton path produced by the exact simulator.
pub type Skeleton = process::SkeletonPath<f64>;
/// `f64` scheme configuration.
pub type SchemeConfig = schemes::SchemeConfig<f64>;
/// `f64` discrete path produced by a scheme.
pub type DiscretePath = schemes::DiscretePath<f64>;
