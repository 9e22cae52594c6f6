//! Total-variation coupling: the first-order thinning coupling, defined
//! when the scheme keeps the flow and the kernels exact.

use super::{higher_order_step, CoupledStep};
use crate::process::State;
use crate::rng::RngBank;
use crate::schemes::Scheme;
use crate::{Error, Pdmp, Result, SchemeConfig};

/// One coupled step from a common state `z`.
///
/// Candidate event times are proposed per kernel from the sum of the true
/// rate along the flow, the approximate rate and one; a single shared
/// uniform accepts each process against its own ratio. Joint acceptance
/// keeps the processes equal unless the exact process fires again within
/// the step; a split decision decouples them for good.
pub fn tv_step(
    pdmp: &Pdmp,
    cfg: &SchemeConfig,
    z: &State<f64>,
    delta: f64,
    bank: &mut RngBank,
    aux_exact: &mut RngBank,
    aux_approx: &mut RngBank,
) -> Result<CoupledStep> {
    if !cfg.flow_approx.is_exact() || !cfg.kernel_approx.is_exact() {
        return Err(Error::InvalidConfig(
            "total-variation coupling requires the exact flow and exact kernels".into(),
        ));
    }
    let p = match cfg.scheme {
        Scheme::Pd => 1,
        Scheme::OrderP(p) => p,
        Scheme::Fd => {
            return Err(Error::InvalidConfig(
                "total-variation coupling applies to the partially discrete schemes".into(),
            ))
        }
    };
    higher_order_step(pdmp, cfg, z, z, delta, p, bank, aux_exact, aux_approx)
}
