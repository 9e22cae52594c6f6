//! Zig-Zag with subsampling: each step draws one datum uniformly and uses
//! that datum's switching rates, frozen over the step.

use super::potential::Potential;
use super::zzs::{ExcessRate, ZzsModel, ZzsRateStyle};
use crate::process::{AffineRate, State};
use crate::rng::{RngBank, Role};
use crate::schemes::EventRecord;
use crate::Pdmp;
use rand::Rng;

/// Per-datum potentials `psi_j` with rates `(v_i d_i psi_j(x))_+`.
#[derive(Clone)]
pub struct ZzsSubsamplingModel {
    potentials: Vec<Potential>,
    dim: usize,
}

impl ZzsSubsamplingModel {
    pub fn new(potentials: Vec<Potential>) -> Self {
        assert!(!potentials.is_empty());
        let dim = potentials[0].dim();
        assert!(potentials.iter().all(|p| p.dim() == dim));
        ZzsSubsamplingModel { potentials, dim }
    }

    /// One potential per observation of a logistic regression, each scaled
    /// by the number of observations so that the average per-datum gradient
    /// is the full-data gradient and the chain targets the full posterior.
    pub fn from_logistic(covariates: Vec<Vec<f64>>, labels: Vec<f64>) -> Self {
        let n = covariates.len() as f64;
        let potentials = covariates
            .into_iter()
            .zip(labels)
            .map(|(a, y)| Potential::logistic_regression(vec![a], vec![y]).scale(n))
            .collect();
        ZzsSubsamplingModel::new(potentials)
    }

    /// Raw per-observation potentials without the sample-size scaling; the
    /// averaged rates then follow the mean observation rather than the
    /// full-data posterior.
    pub fn from_logistic_unscaled(covariates: Vec<Vec<f64>>, labels: Vec<f64>) -> Self {
        let potentials = covariates
            .into_iter()
            .zip(labels)
            .map(|(a, y)| Potential::logistic_regression(vec![a], vec![y]))
            .collect();
        ZzsSubsamplingModel::new(potentials)
    }

    pub fn num_data(&self) -> usize {
        self.potentials.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Rate of coordinate `i` under datum `j`.
    pub fn per_datum_rate(&self, j: usize, z: &State<f64>, i: usize) -> f64 {
        (z.velocity[i] * self.potentials[j].partial(&z.position, i)).max(0.0)
    }

    /// Average over data of the per-datum rates.
    pub fn mean_rate(&self, z: &State<f64>, i: usize) -> f64 {
        self.sum_rate(z, i) / self.num_data() as f64
    }

    /// `sum_j lambda_i^j(z)`.
    pub fn sum_rate(&self, z: &State<f64>, i: usize) -> f64 {
        (0..self.num_data())
            .map(|j| self.per_datum_rate(j, z, i))
            .sum()
    }

    /// `sum_j lambda_i^j` at the transported position `x + v t`.
    pub fn sum_rate_along(&self, z: &State<f64>, t: f64, i: usize) -> f64 {
        let moved = State {
            position: z
                .position
                .iter()
                .zip(&z.velocity)
                .map(|(x, v)| x + v * t)
                .collect(),
            velocity: z.velocity.clone(),
        };
        self.sum_rate(&moved, i)
    }

    /// Affine dominator of `s -> sum_j lambda_i^j(x + v s)`, from per-datum
    /// line Lipschitz constants of the gradients.
    pub fn sum_rate_dominator(&self, z: &State<f64>, i: usize) -> AffineRate<f64> {
        let slope: f64 = self
            .potentials
            .iter()
            .map(|p| p.line_lipschitz(i).expect("per-datum Lipschitz constant"))
            .sum();
        AffineRate::new(self.sum_rate(z, i), slope)
    }

    /// The process followed conditionally on datum `j` for a whole step.
    pub fn pdmp_for_datum(&self, j: usize) -> Pdmp {
        ZzsModel::new(
            self.potentials[j].clone(),
            ExcessRate::Zero,
            ZzsRateStyle::PositivePart,
        )
        .to_pdmp()
    }

    /// One subsampled step: draw a datum, freeze its rates, move and flip.
    /// On an event at `tau` the position advances for `delta - tau` with
    /// the old velocity and for `tau` with the new one.
    pub fn step(
        &self,
        z: &State<f64>,
        delta: f64,
        bank: &mut RngBank,
    ) -> (State<f64>, Option<EventRecord<f64>>) {
        let j = bank.stream(Role::Subsample).gen_range(0..self.num_data());
        let mut best: Option<(f64, usize)> = None;
        for i in 0..self.dim {
            let rate = self.per_datum_rate(j, z, i);
            let e = bank.exp_level(Role::Clock);
            if rate > 0.0 {
                let t = e / rate;
                if t <= delta && best.map_or(true, |(bt, _)| t < bt) {
                    best = Some((t, i));
                }
            }
        }
        match best {
            Some((tau, i)) => {
                let mut v_new = z.velocity.clone();
                v_new[i] = -v_new[i];
                let position = z
                    .position
                    .iter()
                    .zip(z.velocity.iter().zip(&v_new))
                    .map(|(x, (vo, vn))| x + (delta - tau) * vo + tau * vn)
                    .collect();
                (
                    State {
                        position,
                        velocity: v_new,
                    },
                    Some(EventRecord {
                        offset: tau,
                        kernel: i,
                    }),
                )
            }
            None => (
                State {
                    position: z
                        .position
                        .iter()
                        .zip(&z.velocity)
                        .map(|(x, v)| x + v * delta)
                        .collect(),
                    velocity: z.velocity.clone(),
                },
                None,
            ),
        }
    }
}
