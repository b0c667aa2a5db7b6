//! Monotone bijection between the unit interval and the maturity range.
//!
//! The knots `((i - 1) / (I - 1), tau_i)` are joined by a piecewise cubic
//! Hermite interpolant with Fritsch-Butland slopes, which is C1 and cannot
//! overshoot between knots. Quoted maturities therefore sit on an equidistant
//! grid in warped coordinates, where the smoothers operate.

use crate::error::{Error, Result};
use crate::model::MaturityGrid;

#[derive(Clone, Debug, PartialEq)]
pub struct Warp {
    knots: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

/// Build the warp for a grid of at least three maturities.
pub fn build_warp(grid: &MaturityGrid) -> Result<Warp> {
    let n = grid.len();
    if n < 3 {
        return Err(Error::invalid("warp", format!("need at least 3 maturities, got {n}")));
    }
    let knots = grid.warped_knots();
    let values = grid.as_slice().to_vec();

    let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = values.windows(2).zip(&h).map(|(y, h)| (y[1] - y[0]) / h).collect();
    if delta.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::invalid("warp", "maturities must be strictly increasing"));
    }

    let mut slopes = vec![0.0; n];
    for k in 1..n - 1 {
        let (s1, s2) = (delta[k - 1], delta[k]);
        let w1 = 2.0 * h[k] + h[k - 1];
        let w2 = h[k] + 2.0 * h[k - 1];
        slopes[k] = (w1 + w2) / (w1 / s1 + w2 / s2);
    }
    slopes[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    slopes[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);

    Ok(Warp { knots, values, slopes })
}

// Three-point end slope, clipped to [0, 3 * delta] so the end piece stays monotone.
fn end_slope(h0: f64, h1: f64, s0: f64, s1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
    d.clamp(0.0, 3.0 * s0)
}

impl Warp {
    pub fn tau_min(&self) -> f64 {
        self.values[0]
    }

    pub fn tau_max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    fn segment(&self, x: f64) -> usize {
        let last = self.knots.len() - 2;
        match self.knots.binary_search_by(|k| k.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(last),
            Err(i) => i.saturating_sub(1).min(last),
        }
    }

    fn eval_segment(&self, k: usize, x: f64) -> f64 {
        let h = self.knots[k + 1] - self.knots[k];
        let t = (x - self.knots[k]) / h;
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let (d0, d1) = (self.slopes[k], self.slopes[k + 1]);
        let s = 1.0 - t;
        y0 * s * s * (1.0 + 2.0 * t) + y1 * t * t * (3.0 - 2.0 * t) + h * d0 * t * s * s - h * d1 * t * t * s
    }

    /// `phi(x)` for `x` in `[0, 1]`.
    pub fn apply(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::OutOfDomain {
                what: "warped coordinate",
                value: x,
                lo: 0.0,
                hi: 1.0,
            });
        }
        Ok(self.eval_segment(self.segment(x), x))
    }

    /// Derivative of `phi`.
    pub fn derivative(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::OutOfDomain {
                what: "warped coordinate",
                value: x,
                lo: 0.0,
                hi: 1.0,
            });
        }
        let k = self.segment(x);
        let h = self.knots[k + 1] - self.knots[k];
        let t = (x - self.knots[k]) / h;
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let (d0, d1) = (self.slopes[k], self.slopes[k + 1]);
        let dt = 6.0 * t * (1.0 - t) * (y1 - y0) / h + d0 * (1.0 - t) * (1.0 - 3.0 * t) + d1 * t * (3.0 * t - 2.0);
        Ok(dt)
    }

    /// `phi^{-1}(tau)` by bisection on the cubic piece containing `tau`.
    pub fn inverse(&self, tau: f64) -> Result<f64> {
        let (lo, hi) = (self.tau_min(), self.tau_max());
        if !(lo..=hi).contains(&tau) {
            return Err(Error::OutOfDomain {
                what: "maturity",
                value: tau,
                lo,
                hi,
            });
        }
        let k = match self.values.binary_search_by(|v| v.partial_cmp(&tau).unwrap()) {
            Ok(i) => return Ok(self.knots[i]),
            Err(i) => i - 1,
        };
        let (mut a, mut b) = (self.knots[k], self.knots[k + 1]);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if self.eval_segment(k, mid) < tau {
                a = mid;
            } else {
                b = mid;
            }
        }
        let (fa, fb) = (self.eval_segment(k, a), self.eval_segment(k, b));
        Ok(if (tau - fa).abs() <= (fb - tau).abs() { a } else { b })
    }
}

/// `phi(x)`; see [`Warp::apply`].
pub fn warp_apply(w: &Warp, x: f64) -> Result<f64> {
    w.apply(x)
}

/// `phi^{-1}(tau)`; see [`Warp::inverse`].
pub fn warp_inverse(w: &Warp, tau: f64) -> Result<f64> {
    w.inverse(tau)
}
