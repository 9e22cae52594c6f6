//! Concrete processes: samplers targeting a density and two applied models.
//!
//! Each model assembles a [`crate::Pdmp`] via `to_pdmp`, registering
//! whatever structure it has: closed-form event clocks where the integrated
//! rates invert analytically, affine thinning bounds where only a Lipschitz
//! gradient is available, or neither (integrator-backed schemes only).

mod bps;
mod cell_size;
mod morris_lecar;
mod potential;
mod rhmc;
mod subsampling;
mod zzs;

pub use bps::{lyapunov_bps, reflect_velocity, BpsModel, RefreshLaw};
pub use cell_size::CellSizeModel;
pub use morris_lecar::{MorrisLecarModel, MorrisLecarParams};
pub use potential::{synthetic_logistic_data, Potential};
pub use rhmc::RhmcModel;
pub use subsampling::ZzsSubsamplingModel;
pub use zzs::{
    linear_transport_flow, lyapunov_zzs, lyapunov_zzs_onestep, zzs_flip, ExcessRate, ZzsModel,
    ZzsRateStyle,
};
