//! Bouncy Particle sampler: reflections against the gradient plus velocity
//! refreshments.

use super::potential::Potential;
use crate::process::{
    AffineRate, ClockProfile, JumpKernelFamily, KernelFn, NoiseSamplerFn, PdmpSpec,
    RateFamily, State,
};
use crate::{Error, Pdmp, Result};
use rand_distr::{Distribution, StandardNormal};
use std::sync::Arc;

/// Law of the refreshed velocity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefreshLaw {
    Gaussian,
    UnitSphere,
}

/// Bouncy Particle sampler targeting `exp(-psi)`.
#[derive(Clone)]
pub struct BpsModel {
    pub potential: Potential,
    pub refresh_rate: f64,
    pub refresh_law: RefreshLaw,
}

impl BpsModel {
    pub fn gaussian(dim: usize, refresh_rate: f64) -> Self {
        BpsModel::new(Potential::gaussian(dim), refresh_rate, RefreshLaw::Gaussian)
    }

    pub fn new(potential: Potential, refresh_rate: f64, refresh_law: RefreshLaw) -> Self {
        assert!(refresh_rate > 0.0, "refreshment keeps the sampler ergodic");
        BpsModel {
            potential,
            refresh_rate,
            refresh_law,
        }
    }

    pub fn dim(&self) -> usize {
        self.potential.dim()
    }

    /// Reflection rate `(v . grad psi(x))_+`.
    pub fn bounce_rate(&self, z: &State<f64>) -> f64 {
        let grad = self.potential.grad(&z.position);
        dot(&z.velocity, &grad).max(0.0)
    }

    /// Assemble the process with kernels `[reflect, refresh]`.
    pub fn to_pdmp(&self) -> Pdmp {
        let d = self.dim();
        let flow = super::zzs::linear_transport_flow();

        let model = self.clone();
        let reflect: KernelFn<f64> = Arc::new(move |z: &State<f64>, _u: &[f64]| {
            let grad = model.potential.grad(&z.position);
            let v = reflect_velocity(&grad, &z.velocity)?;
            Ok(State {
                position: z.position.clone(),
                velocity: v,
            })
        });
        let refresh: KernelFn<f64> = Arc::new(move |z: &State<f64>, u: &[f64]| {
            Ok(State {
                position: z.position.clone(),
                velocity: u.to_vec(),
            })
        });
        let law = self.refresh_law;
        let noise: NoiseSamplerFn<f64> = Arc::new(move |rng| {
            let mut v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
            if law == RefreshLaw::UnitSphere {
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
                for x in &mut v {
                    *x /= norm;
                }
            }
            v
        });

        let bounce_model = self.clone();
        let lambda_r = self.refresh_rate;
        let mut rates = RateFamily::new(vec![
            Arc::new(move |z: &State<f64>| bounce_model.bounce_rate(z)) as _,
            Arc::new(move |_: &State<f64>| lambda_r) as _,
        ]);
        if self.potential.is_diagonal_quadratic() {
            let clock_model = self.clone();
            rates = rates.with_clocks(Arc::new(move |z: &State<f64>, i: usize| {
                if i == 0 {
                    let w = clock_model
                        .potential
                        .diag_precision()
                        .expect("quadratic potential");
                    let a = z
                        .velocity
                        .iter()
                        .zip(&z.position)
                        .zip(w)
                        .map(|((vi, xi), wi)| wi * vi * xi)
                        .sum();
                    let b = z.velocity.iter().zip(w).map(|(vi, wi)| wi * vi * vi).sum();
                    ClockProfile::new(a, b)
                } else {
                    AffineRate::constant(clock_model.refresh_rate)
                }
            }));
        }
        PdmpSpec::new(
            flow,
            rates,
            JumpKernelFamily::with_noise(vec![reflect, refresh], noise),
            d,
            d,
        )
    }
}

/// Reflect `v` against the hyperplane orthogonal to `grad`:
/// `v - 2 <v, g> g / |g|^2`. Preserves the norm and is an involution.
pub fn reflect_velocity(grad: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let norm2: f64 = grad.iter().map(|g| g * g).sum();
    if norm2.sqrt() < 1e-300 {
        return Err(Error::ZeroGradient);
    }
    let coeff = 2.0 * dot(v, grad) / norm2;
    Ok(v.iter()
        .zip(grad)
        .map(|(vi, gi)| vi - coeff * gi)
        .collect())
}

/// Lyapunov function `exp(psi(x)/2) / sqrt(lambda(x, -v))` where the rate
/// in the denominator includes the refreshment part and is therefore
/// bounded below by it.
pub fn lyapunov_bps(model: &BpsModel, z: &State<f64>) -> f64 {
    let grad = model.potential.grad(&z.position);
    let reversed: f64 = -dot(&z.velocity, &grad);
    let denom = reversed.max(0.0) + model.refresh_rate;
    (0.5 * model.potential.psi(&z.position)).exp() / denom.sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
