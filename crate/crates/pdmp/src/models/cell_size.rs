//! Cell growth and division: the size grows deterministically and halves
//! at division events.

use crate::process::{
    AffineRate, Flow, JumpKernelFamily, KernelFn, PdmpSpec, RateFamily, State,
};
use crate::Pdmp;
use std::sync::Arc;

/// Scalar growth model with a state-dependent division rate.
#[derive(Clone)]
pub struct CellSizeModel {
    pub growth_field: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub division_rate: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub exact_flow: Option<Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>>,
    /// Constant dominating the division rate along the flow from `z` over a
    /// horizon, enabling exact simulation by thinning.
    pub rate_bound: Option<Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>>,
}

impl CellSizeModel {
    /// Exponential growth at rate `g` with division rate `c z`; both the
    /// flow and a thinning bound are available in closed form.
    pub fn exponential(g: f64, c: f64) -> Self {
        assert!(c > 0.0);
        CellSizeModel {
            growth_field: Arc::new(move |z| g * z),
            division_rate: Arc::new(move |z| c * z),
            exact_flow: Some(Arc::new(move |z, t| z * (g * t).exp())),
            rate_bound: Some(Arc::new(move |z, h| c * z * (g * h).exp().max(1.0))),
        }
    }

    pub fn to_pdmp(&self) -> Pdmp {
        let field = self.growth_field.clone();
        let vector_field = Arc::new(move |z: &State<f64>| State {
            position: vec![field(z.position[0])],
            velocity: vec![],
        });
        let flow = match &self.exact_flow {
            Some(f) => {
                let f = f.clone();
                Flow::exact(
                    vector_field,
                    Arc::new(move |z: &State<f64>, t: f64| State {
                        position: vec![f(z.position[0], t)],
                        velocity: vec![],
                    }),
                )
            }
            None => Flow::field_only(vector_field),
        };
        let rate = self.division_rate.clone();
        let mut rates =
            RateFamily::new(vec![
                Arc::new(move |z: &State<f64>| rate(z.position[0]).max(0.0)) as _,
            ]);
        if let Some(bound) = &self.rate_bound {
            let bound = bound.clone();
            rates = rates.with_bound(Arc::new(move |z: &State<f64>, h: f64| {
                AffineRate::constant(bound(z.position[0], h))
            }));
        }
        let halve: KernelFn<f64> = Arc::new(|z: &State<f64>, _u: &[f64]| {
            Ok(State {
                position: vec![z.position[0] / 2.0],
                velocity: vec![],
            })
        });
        PdmpSpec::new(
            flow,
            rates,
            JumpKernelFamily::deterministic(vec![halve]),
            1,
            0,
        )
    }
}
