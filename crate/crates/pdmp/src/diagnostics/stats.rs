//! Statistical utilities: replica reduction, goodness-of-fit tests and the
//! log-log order fit.

use crate::{Error, Pdmp, Result, Skeleton};
use rayon::prelude::*;

/// Element-wise sums of per-replica vectors, reduced deterministically:
/// replicas are mapped in fixed-size chunks, each chunk accumulated in
/// replica order, and the chunk partials folded in chunk order, so the
/// result is independent of worker scheduling.
pub struct Accumulated {
    pub n: u64,
    pub sum: Vec<f64>,
    pub sumsq: Vec<f64>,
}

impl Accumulated {
    pub fn mean(&self, k: usize) -> f64 {
        self.sum[k] / self.n as f64
    }

    pub fn stderr(&self, k: usize) -> f64 {
        let n = self.n as f64;
        let mean = self.mean(k);
        let var = (self.sumsq[k] / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
        (var / n).sqrt()
    }

    pub fn means(&self) -> Vec<f64> {
        (0..self.sum.len()).map(|k| self.mean(k)).collect()
    }

    pub fn stderrs(&self) -> Vec<f64> {
        (0..self.sum.len()).map(|k| self.stderr(k)).collect()
    }
}

const CHUNK: u64 = 64;

/// Map each replica id to a fixed-length vector and accumulate.
pub fn accumulate_replicas<M>(replicas: u64, map: M) -> Result<Accumulated>
where
    M: Fn(u64) -> Result<Vec<f64>> + Sync,
{
    assert!(replicas > 0);
    let chunk_starts: Vec<u64> = (0..replicas).step_by(CHUNK as usize).collect();
    let partials: Vec<Result<(Vec<f64>, Vec<f64>)>> = chunk_starts
        .par_iter()
        .map(|&start| {
            let end = (start + CHUNK).min(replicas);
            let mut sum: Option<Vec<f64>> = None;
            let mut sumsq: Option<Vec<f64>> = None;
            for rep in start..end {
                let values = map(rep)?;
                match (&mut sum, &mut sumsq) {
                    (Some(s), Some(s2)) => {
                        for ((acc, acc2), v) in s.iter_mut().zip(s2.iter_mut()).zip(&values) {
                            *acc += v;
                            *acc2 += v * v;
                        }
                    }
                    _ => {
                        sumsq = Some(values.iter().map(|v| v * v).collect());
                        sum = Some(values);
                    }
                }
            }
            Ok((sum.unwrap_or_default(), sumsq.unwrap_or_default()))
        })
        .collect();
    let mut total_sum: Option<Vec<f64>> = None;
    let mut total_sumsq: Option<Vec<f64>> = None;
    for partial in partials {
        let (s, s2) = partial?;
        match (&mut total_sum, &mut total_sumsq) {
            (Some(ts), Some(ts2)) => {
                for ((acc, acc2), (v, v2)) in ts.iter_mut().zip(ts2.iter_mut()).zip(s.iter().zip(&s2)) {
                    *acc += v;
                    *acc2 += v2;
                }
            }
            _ => {
                total_sum = Some(s);
                total_sumsq = Some(s2);
            }
        }
    }
    Ok(Accumulated {
        n: replicas,
        sum: total_sum.unwrap_or_default(),
        sumsq: total_sumsq.unwrap_or_default(),
    })
}

/// Sample mean and its standard error.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// Kolmogorov-Smirnov statistic of a sample against a reference cdf.
pub fn ks_statistic<C: Fn(f64) -> f64>(samples: &mut [f64], cdf: C) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    let mut sup: f64 = 0.0;
    for (k, x) in samples.iter().enumerate() {
        let f = cdf(*x);
        let hi = (k as f64 + 1.0) / n - f;
        let lo = f - k as f64 / n;
        sup = sup.max(hi).max(lo);
    }
    sup
}

/// Critical value of the KS statistic at the 1% level.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}

/// Standard normal cdf via the Abramowitz-Stegun expansion (7.5e-8).
pub fn standard_normal_cdf(x: f64) -> f64 {
    let t = 1.0 / (1.0 + 0.2316419 * x.abs());
    let poly = t
        * (0.319381530
            + t * (-0.356563782 + t * (1.781477937 + t * (-1.821255978 + t * 1.330274429))));
    let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let upper = pdf * poly;
    if x >= 0.0 {
        1.0 - upper
    } else {
        upper
    }
}

/// cdf of the unit-rate exponential.
pub fn exp1_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -(-x).exp_m1()
    }
}

/// Time-rescaled inter-event gaps of a skeleton path: the integrated total
/// rate along the flow between consecutive events, recomputed by quadrature
/// (independently of however the events were generated). Under the correct
/// event-time law these are unit-rate exponentials.
pub fn rescaled_event_gaps(pdmp: &Pdmp, path: &Skeleton) -> Result<Vec<f64>> {
    let mut gaps = Vec::with_capacity(path.events.len());
    let mut anchor = &path.initial_state;
    let mut anchor_time = 0.0;
    for ev in &path.events {
        let gap = ev.time - anchor_time;
        let integral = simpson_rate(pdmp, anchor, gap, 256)?;
        gaps.push(integral);
        anchor = &ev.post_state;
        anchor_time = ev.time;
    }
    Ok(gaps)
}

fn simpson_rate(pdmp: &Pdmp, z: &crate::State, t: f64, panels: usize) -> Result<f64> {
    let h = t / panels as f64;
    let mut acc = 0.0;
    for k in 0..panels {
        let x0 = k as f64 * h;
        let x1 = x0 + 0.5 * h;
        let x2 = x0 + h;
        let r0 = pdmp.rates.total(&pdmp.flow.at(z, x0)?);
        let r1 = pdmp.rates.total(&pdmp.flow.at(z, x1)?);
        let r2 = pdmp.rates.total(&pdmp.flow.at(z, x2)?);
        acc += h / 6.0 * (r0 + 4.0 * r1 + r2);
    }
    Ok(acc)
}

/// Result of a weighted least-squares fit of `log error` against
/// `log delta`.
#[derive(Debug, Clone, Copy)]
pub struct OrderFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
}

impl OrderFit {
    /// Two-sided interval at roughly 95%.
    pub fn slope_ci(&self) -> (f64, f64) {
        (
            self.slope - 2.0 * self.slope_stderr,
            self.slope + 2.0 * self.slope_stderr,
        )
    }
}

/// Fit the convergence order on a delta sweep.
///
/// Requires at least three step sizes spanning a factor of four, and every
/// error resolved above twice its standard error; otherwise the fit would
/// report noise.
pub fn fit_loglog_order(deltas: &[f64], errors: &[f64], stderrs: &[f64]) -> Result<OrderFit> {
    if deltas.len() < 3 {
        return Err(Error::InsufficientSignal(format!(
            "need at least 3 step sizes, got {}",
            deltas.len()
        )));
    }
    assert_eq!(deltas.len(), errors.len());
    assert_eq!(deltas.len(), stderrs.len());
    let dmax = deltas.iter().cloned().fold(f64::MIN, f64::max);
    let dmin = deltas.iter().cloned().fold(f64::MAX, f64::min);
    if dmax / dmin < 4.0 {
        return Err(Error::InsufficientSignal(format!(
            "step sizes span a factor {:.2} < 4",
            dmax / dmin
        )));
    }
    for ((d, e), se) in deltas.iter().zip(errors).zip(stderrs) {
        if *e <= 2.0 * *se {
            return Err(Error::InsufficientSignal(format!(
                "error {e:.3e} at delta {d} not resolved above noise {se:.3e}"
            )));
        }
    }
    let xs: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    // Delta-method weights: var(log e) ~ (stderr / e)^2.
    let ws: Vec<f64> = errors
        .iter()
        .zip(stderrs)
        .map(|(e, se)| {
            if *se > 0.0 {
                let v = (se / e) * (se / e);
                1.0 / v
            } else {
                1.0
            }
        })
        .collect();
    let wsum: f64 = ws.iter().sum();
    let xbar: f64 = xs.iter().zip(&ws).map(|(x, w)| w * x).sum::<f64>() / wsum;
    let ybar: f64 = ys.iter().zip(&ws).map(|(y, w)| w * y).sum::<f64>() / wsum;
    let sxx: f64 = xs.iter().zip(&ws).map(|(x, w)| w * (x - xbar) * (x - xbar)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .zip(&ws)
        .map(|((x, y), w)| w * (x - xbar) * (y - ybar))
        .sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let dof = (deltas.len() as f64 - 2.0).max(1.0);
    let resid_var: f64 = xs
        .iter()
        .zip(&ys)
        .zip(&ws)
        .map(|((x, y), w)| {
            let r = y - (intercept + slope * x);
            w * r * r
        })
        .sum::<f64>()
        / dof;
    Ok(OrderFit {
        slope,
        intercept,
        slope_stderr: (resid_var / sxx).sqrt(),
    })
}
