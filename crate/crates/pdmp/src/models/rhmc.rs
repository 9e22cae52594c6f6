//! Randomized Hamiltonian Monte Carlo: Hamiltonian flow punctuated by full
//! momentum refreshments at a constant rate.

use super::potential::Potential;
use crate::process::{
    AffineRate, Flow, JumpKernelFamily, KernelFn, NoiseSamplerFn, PdmpSpec, RateFamily, State,
};
use crate::Pdmp;
use rand_distr::{Distribution, StandardNormal};
use std::sync::Arc;

/// Randomized HMC targeting `exp(-psi)` in position marginal.
#[derive(Clone)]
pub struct RhmcModel {
    pub potential: Potential,
    pub refresh_rate: f64,
}

impl RhmcModel {
    pub fn gaussian(dim: usize, refresh_rate: f64) -> Self {
        RhmcModel::new(Potential::gaussian(dim), refresh_rate)
    }

    pub fn new(potential: Potential, refresh_rate: f64) -> Self {
        assert!(refresh_rate > 0.0);
        RhmcModel {
            potential,
            refresh_rate,
        }
    }

    pub fn dim(&self) -> usize {
        self.potential.dim()
    }

    /// Hamiltonian `psi(q) + |p|^2 / 2`.
    pub fn hamiltonian(&self, z: &State<f64>) -> f64 {
        self.potential.psi(&z.position)
            + 0.5 * z.velocity.iter().map(|p| p * p).sum::<f64>()
    }

    /// Assemble the process. Quadratic potentials register the exact
    /// harmonic-oscillator flow; anything else exposes the vector field
    /// only and needs an integrator.
    pub fn to_pdmp(&self) -> Pdmp {
        let d = self.dim();
        let grad_pot = self.potential.clone();
        let field = Arc::new(move |z: &State<f64>| State {
            position: z.velocity.clone(),
            velocity: grad_pot.grad(&z.position).iter().map(|g| -g).collect(),
        });
        let flow = match self.potential.diag_precision() {
            Some(w) => {
                let w = w.to_vec();
                Flow::exact(
                    field,
                    Arc::new(move |z: &State<f64>, t: f64| {
                        let mut q = z.position.clone();
                        let mut p = z.velocity.clone();
                        for i in 0..q.len() {
                            if w[i] > 0.0 {
                                let om = w[i].sqrt();
                                let (s, c) = (om * t).sin_cos();
                                let (qi, pi) = (q[i], p[i]);
                                q[i] = qi * c + pi * s / om;
                                p[i] = -qi * om * s + pi * c;
                            } else {
                                q[i] += p[i] * t;
                            }
                        }
                        State {
                            position: q,
                            velocity: p,
                        }
                    }),
                )
            }
            None => Flow::field_only(field),
        };

        let lambda_r = self.refresh_rate;
        let rates = RateFamily::new(vec![Arc::new(move |_: &State<f64>| lambda_r) as _])
            .with_clocks(Arc::new(move |_: &State<f64>, _: usize| {
                AffineRate::constant(lambda_r)
            }));
        let refresh: KernelFn<f64> = Arc::new(|z: &State<f64>, u: &[f64]| {
            Ok(State {
                position: z.position.clone(),
                velocity: u.to_vec(),
            })
        });
        let noise: NoiseSamplerFn<f64> =
            Arc::new(move |rng| (0..d).map(|_| StandardNormal.sample(rng)).collect());
        PdmpSpec::new(
            flow,
            rates,
            JumpKernelFamily::with_noise(vec![refresh], noise),
            d,
            d,
        )
    }
}
