//! Event clocks with affine intensity, clamped at zero.
//!
//! The models in this crate have rates along the flow of the form
//! `s -> max(a + b s, 0)` (Gaussian-target samplers, constant refreshment,
//! telegraph), so both closed-form inversion of the integrated rate and
//! affine dominating bounds for thinning reduce to this one shape.

use crate::scalar::Real;

/// The intensity `s -> max(a + b s, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineRate<F> {
    pub a: F,
    pub b: F,
}

/// Rate of one kernel along the flow, as registered by a model.
pub type ClockProfile<F> = AffineRate<F>;

impl<F: Real> AffineRate<F> {
    pub fn new(a: F, b: F) -> Self {
        AffineRate { a, b }
    }

    pub fn constant(rate: F) -> Self {
        AffineRate {
            a: rate,
            b: F::zero(),
        }
    }

    /// Intensity value at offset `s`.
    pub fn value(&self, s: F) -> F {
        (self.a + self.b * s).max(F::zero())
    }

    /// The same clock viewed from offset `t`.
    pub fn shifted(&self, t: F) -> Self {
        AffineRate {
            a: self.a + self.b * t,
            b: self.b,
        }
    }

    /// Pointwise sum with another affine rate. Valid as an intensity only
    /// when at most one operand is ever clamped; used for dominating rates
    /// where both parts are nonnegative.
    pub fn plus(&self, other: &Self) -> Self {
        AffineRate {
            a: self.a + other.a,
            b: self.b + other.b,
        }
    }

    /// Integrated intensity on `[0, t]`.
    pub fn integral(&self, t: F) -> F {
        let zero = F::zero();
        let two = F::from_f64_lossy(2.0);
        if t <= zero {
            return zero;
        }
        if self.b == zero {
            return self.a.max(zero) * t;
        }
        // Segment of [0, t] where a + b s > 0.
        let root = -self.a / self.b;
        let (lo, hi) = if self.b > zero {
            (root.max(zero).min(t), t)
        } else {
            (zero, root.max(zero).min(t))
        };
        if hi <= lo {
            return zero;
        }
        let seg = |s: F| self.a * s + self.b * s * s / two;
        seg(hi) - seg(lo)
    }

    /// First arrival of a Poisson process with this intensity, at the
    /// exponential level `e`: the smallest `t` with `integral(t) = e`, or
    /// `None` when the level is not reached before `horizon`.
    pub fn first_arrival(&self, e: F, horizon: F) -> Option<F> {
        let zero = F::zero();
        let two = F::from_f64_lossy(2.0);
        if !e.is_finite() || horizon <= zero {
            return None;
        }
        // Identically zero intensity; also dodges 0 * inf on an
        // unbounded horizon.
        if self.b == zero && self.a <= zero {
            return None;
        }
        if e <= zero {
            return Some(zero);
        }
        if e > self.integral(horizon) {
            return None;
        }
        if self.b == zero {
            return Some(e / self.a);
        }
        // Start of the active region and the effective intercept there.
        let start = if self.a >= zero { zero } else { -self.a / self.b };
        let a_eff = (self.a + self.b * start).max(zero);
        // Solve a_eff u + b u^2 / 2 = e for the smallest nonnegative root;
        // this form is stable for either sign of b.
        let disc = (a_eff * a_eff + two * self.b * e).max(zero);
        let u = two * e / (a_eff + disc.sqrt());
        Some(start + u)
    }
}
