//! Negative log-densities targeted by the samplers.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::sync::Arc;

/// A potential `psi` with its gradient and the structure needed to build
/// event clocks: targets satisfy `pi(x) ~ exp(-psi(x))`.
#[derive(Clone)]
pub struct Potential {
    psi: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    grad: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
    /// For quadratic potentials: the diagonal precision, making directional
    /// derivatives affine along straight lines.
    diag_precision: Option<Vec<f64>>,
    /// Per-coordinate Lipschitz constant of `s -> d_i psi(x + v s)` over
    /// unit-box velocities, for thinning bounds on non-quadratic targets.
    grad_line_lipschitz: Option<Vec<f64>>,
    dim: usize,
}

impl Potential {
    /// Isotropic Gaussian `psi(x) = |x|^2 / 2`.
    pub fn gaussian(dim: usize) -> Self {
        Potential::anisotropic_gaussian(vec![1.0; dim])
    }

    /// Gaussian with diagonal precision: `psi(x) = sum_i w_i x_i^2 / 2`.
    pub fn anisotropic_gaussian(precision: Vec<f64>) -> Self {
        assert!(precision.iter().all(|w| *w > 0.0));
        let dim = precision.len();
        let w1 = precision.clone();
        let w2 = precision.clone();
        Potential {
            psi: Arc::new(move |x| {
                0.5 * x.iter().zip(&w1).map(|(xi, wi)| wi * xi * xi).sum::<f64>()
            }),
            grad: Arc::new(move |x| x.iter().zip(&w2).map(|(xi, wi)| wi * xi).collect()),
            diag_precision: Some(precision),
            grad_line_lipschitz: None,
            dim,
        }
    }

    /// The constant potential; every rate built from it vanishes.
    pub fn zero(dim: usize) -> Self {
        Potential {
            psi: Arc::new(|_| 0.0),
            grad: Arc::new(move |x| vec![0.0; x.len()]),
            diag_precision: Some(vec![0.0; dim]),
            grad_line_lipschitz: None,
            dim,
        }
    }

    /// Logistic regression negative log-likelihood
    /// `psi(x) = sum_j log(1 + exp(a_j . x)) - y_j (a_j . x)`.
    pub fn logistic_regression(covariates: Vec<Vec<f64>>, labels: Vec<f64>) -> Self {
        assert_eq!(covariates.len(), labels.len());
        assert!(!covariates.is_empty());
        let dim = covariates[0].len();
        let data1 = covariates.clone();
        let labels1 = labels.clone();
        let data2 = covariates.clone();
        let labels2 = labels.clone();
        // |d/ds d_i psi(x + v s)| <= sum_j |a_ji| |a_j . v| / 4 <= sum_j |a_ji| |a_j|_1 / 4
        // for velocities in the unit box.
        let lips: Vec<f64> = (0..dim)
            .map(|i| {
                covariates
                    .iter()
                    .map(|a| {
                        let l1: f64 = a.iter().map(|c| c.abs()).sum();
                        a[i].abs() * l1 / 4.0
                    })
                    .sum()
            })
            .collect();
        Potential {
            psi: Arc::new(move |x| {
                data1
                    .iter()
                    .zip(&labels1)
                    .map(|(a, y)| {
                        let t = dot(a, x);
                        softplus(t) - y * t
                    })
                    .sum()
            }),
            grad: Arc::new(move |x| {
                let mut g = vec![0.0; x.len()];
                for (a, y) in data2.iter().zip(&labels2) {
                    let s = sigmoid(dot(a, x)) - y;
                    for (gi, ai) in g.iter_mut().zip(a) {
                        *gi += ai * s;
                    }
                }
                g
            }),
            diag_precision: None,
            grad_line_lipschitz: Some(lips),
            dim,
        }
    }

    /// The potential scaled by a positive constant.
    pub fn scale(&self, factor: f64) -> Self {
        assert!(factor > 0.0);
        let psi = self.psi.clone();
        let grad = self.grad.clone();
        Potential {
            psi: Arc::new(move |x| factor * psi(x)),
            grad: Arc::new(move |x| grad(x).into_iter().map(|g| factor * g).collect()),
            diag_precision: self
                .diag_precision
                .as_ref()
                .map(|w| w.iter().map(|wi| factor * wi).collect()),
            grad_line_lipschitz: self
                .grad_line_lipschitz
                .as_ref()
                .map(|l| l.iter().map(|li| factor * li).collect()),
            dim: self.dim,
        }
    }

    /// A potential from explicit closures; thinning bounds require a
    /// per-coordinate line Lipschitz constant of the gradient.
    pub fn custom(
        psi: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
        grad: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
        dim: usize,
        grad_line_lipschitz: Option<Vec<f64>>,
    ) -> Self {
        Potential {
            psi,
            grad,
            diag_precision: None,
            grad_line_lipschitz,
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn psi(&self, x: &[f64]) -> f64 {
        (self.psi)(x)
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        (self.grad)(x)
    }

    pub fn partial(&self, x: &[f64], i: usize) -> f64 {
        (self.grad)(x)[i]
    }

    /// Whether the potential is quadratic with diagonal precision.
    pub fn is_diagonal_quadratic(&self) -> bool {
        self.diag_precision.is_some()
    }

    /// The diagonal precision of a quadratic potential.
    pub fn diag_precision(&self) -> Option<&[f64]> {
        self.diag_precision.as_deref()
    }

    /// For diagonal quadratic potentials, `(a, b)` such that
    /// `d_i psi(x + v s) v_i = a + b s`.
    pub fn directional_rate_line(&self, x: &[f64], v: &[f64], i: usize) -> Option<(f64, f64)> {
        self.diag_precision
            .as_ref()
            .map(|w| (w[i] * v[i] * x[i], w[i] * v[i] * v[i]))
    }

    /// Per-coordinate Lipschitz constant of the gradient along straight
    /// unit-box lines, when available.
    pub fn line_lipschitz(&self, i: usize) -> Option<f64> {
        if let Some(w) = &self.diag_precision {
            return Some(w[i]);
        }
        self.grad_line_lipschitz.as_ref().map(|l| l[i])
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(t))`, overflow-safe.
pub(crate) fn softplus(t: f64) -> f64 {
    if t > 35.0 {
        t
    } else if t < -35.0 {
        t.exp()
    } else {
        t.exp().ln_1p()
    }
}

/// Seeded synthetic logistic-regression data: covariates standard Gaussian
/// with an intercept column, labels drawn from the model at `truth`.
pub fn synthetic_logistic_data(
    n: usize,
    dim: usize,
    truth: &[f64],
    rng: &mut ChaCha8Rng,
) -> (Vec<Vec<f64>>, Vec<f64>) {
    assert_eq!(truth.len(), dim);
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let mut a: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        a[0] = 1.0;
        let p = sigmoid(dot(&a, truth));
        let y = if rng.gen::<f64>() < p { 1.0 } else { 0.0 };
        xs.push(a);
        ys.push(y);
    }
    (xs, ys)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn finite_diff_grad(p: &Potential, x: &[f64]) -> Vec<f64> {
        let h = 1e-6;
        (0..x.len())
            .map(|i| {
                let mut hi = x.to_vec();
                let mut lo = x.to_vec();
                hi[i] += h;
                lo[i] -= h;
                (p.psi(&hi) - p.psi(&lo)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = crate::rng::RngBank::replica(11, 0);
        let pts: Vec<Vec<f64>> = (0..8)
            .map(|_| {
                (0..3)
                    .map(|_| 4.0 * rng.uniform(crate::rng::Role::Init) - 2.0)
                    .collect()
            })
            .collect();
        let (xs, ys) = {
            let mut r = crate::rng::SeedTree::new(5).rng();
            synthetic_logistic_data(20, 3, &[0.5, -1.0, 0.25], &mut r)
        };
        let pots = vec![
            Potential::gaussian(3),
            Potential::anisotropic_gaussian(vec![0.5, 2.0, 1.5]),
            Potential::logistic_regression(xs, ys),
        ];
        for p in &pots {
            for x in &pts {
                let g = p.grad(x);
                let fd = finite_diff_grad(p, x);
                for (a, b) in g.iter().zip(&fd) {
                    assert!((a - b).abs() <= 1e-6 * (1.0 + a.abs().max(b.abs())));
                }
            }
        }
    }

    #[test]
    fn gaussian_line_profile() {
        let p = Potential::anisotropic_gaussian(vec![2.0, 0.5]);
        let (a, b) = p.directional_rate_line(&[1.0, -3.0], &[1.0, -1.0], 0).unwrap();
        // d_0 psi(x + v s) v_0 = 2 (1 + s); a = 2, b = 2.
        assert_eq!((a, b), (2.0, 2.0));
        let (a, b) = p.directional_rate_line(&[1.0, -3.0], &[1.0, -1.0], 1).unwrap();
        // d_1 psi(x + v s) v_1 = -0.5 (-3 - s) = 1.5 + 0.5 s.
        assert_eq!((a, b), (1.5, 0.5));
    }
}
