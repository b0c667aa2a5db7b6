//! Epanechnikov-weighted local-linear least squares.
//!
//! All fits minimise `sum_m w_m |z_m - c0 - c1 (x0 - x_m)|^2` with real
//! weights, so the same closed form serves real and complex responses.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::SparseYieldPanel;
use crate::warp::Warp;

/// Relative tolerance on the normal-matrix determinant.
pub const SINGULAR_RTOL: f64 = 1e-12;

pub fn epanechnikov(v: f64) -> f64 {
    if v.abs() <= 1.0 {
        0.75 * (1.0 - v * v)
    } else {
        0.0
    }
}

/// Scalar field usable as a local-linear response.
pub trait Response: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
}

impl Response for f64 {
    fn zero() -> Self {
        0.0
    }
}

impl Response for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
}

/// Accumulated design moments `S_p = sum w (x0 - x)^p` and response moments
/// `T_p = sum w (x0 - x)^p z`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments<T> {
    pub s: [f64; 3],
    pub t: [T; 2],
}

impl<T: Response> Moments<T> {
    pub fn new() -> Self {
        Self {
            s: [0.0; 3],
            t: [T::zero(); 2],
        }
    }

    pub fn add(&mut self, weight: f64, offset: f64, z: T) {
        let wd = weight * offset;
        self.s[0] += weight;
        self.s[1] += wd;
        self.s[2] += wd * offset;
        self.t[0] = self.t[0] + z * weight;
        self.t[1] = self.t[1] + z * wd;
    }

    /// Solve the 2x2 normal equations. `None` when the design is singular.
    pub fn solve(&self) -> Option<(T, T)> {
        let [s0, s1, s2] = self.s;
        let det = s0 * s2 - s1 * s1;
        if !(det > SINGULAR_RTOL * s0 * s2) {
            return None;
        }
        let c0 = (self.t[0] * s2 - self.t[1] * s1) * (1.0 / det);
        let c1 = (self.t[1] * s0 - self.t[0] * s1) * (1.0 / det);
        Some((c0, c1))
    }
}

impl<T: Response> Default for Moments<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// One local-linear fit: support points, responses and outer weights; the
/// kernel weight `K((x0 - x_m) / B)` is applied on top of `outer_weights`.
#[derive(Clone, Debug)]
pub struct LocalLinearProblem<'a, T> {
    pub support: &'a [f64],
    pub responses: &'a [T],
    pub outer_weights: Option<&'a [f64]>,
    pub x0: f64,
    pub bandwidth: f64,
}

impl<T: Response> LocalLinearProblem<'_, T> {
    pub fn weight(&self, m: usize) -> f64 {
        let outer = self.outer_weights.map_or(1.0, |w| w[m]);
        if outer == 0.0 {
            return 0.0;
        }
        outer * epanechnikov((self.x0 - self.support[m]) / self.bandwidth)
    }
}

/// Local-linear fit at `problem.x0`; returns `(c0, c1)`.
pub fn locallin_fit<T: Response>(problem: &LocalLinearProblem<'_, T>) -> Result<(T, T)> {
    if problem.support.len() != problem.responses.len()
        || problem.outer_weights.is_some_and(|w| w.len() != problem.support.len())
    {
        return Err(Error::DimensionMismatch(
            "local-linear support, responses and weights differ in length".into(),
        ));
    }
    let mut moments = Moments::new();
    let mut distinct = DistinctSupport::default();
    for m in 0..problem.support.len() {
        let w = problem.weight(m);
        if w > 0.0 {
            moments.add(w, problem.x0 - problem.support[m], problem.responses[m]);
            distinct.push(problem.support[m]);
        }
    }
    let singular = || {
        let eligible = (0..problem.support.len())
            .filter(|&m| problem.outer_weights.is_none_or(|w| w[m] > 0.0))
            .map(|m| problem.support[m]);
        singular_design(problem.x0, problem.bandwidth, eligible)
    };
    if !distinct.has_two() {
        return Err(singular());
    }
    moments.solve().ok_or_else(singular)
}

/// Tracks whether at least two distinct support locations were seen.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct DistinctSupport {
    first: Option<f64>,
    two: bool,
}

impl DistinctSupport {
    pub(crate) fn push(&mut self, x: f64) {
        match self.first {
            None => self.first = Some(x),
            Some(f) if f != x => self.two = true,
            _ => {}
        }
    }

    pub(crate) fn has_two(&self) -> bool {
        self.two
    }
}

/// Build the SingularDesign error, reporting the bandwidth above which the
/// window at `x0` would contain two distinct support locations.
pub(crate) fn singular_design(x0: f64, bandwidth: f64, support: impl IntoIterator<Item = f64>) -> Error {
    let mut locs: Vec<f64> = support.into_iter().collect();
    locs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    locs.dedup();
    let mut dist: Vec<f64> = locs.iter().map(|x| (x0 - x).abs()).collect();
    dist.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Error::SingularDesign {
        x0,
        bandwidth,
        min_bandwidth: dist.get(1).copied(),
    }
}

/// Pooled local-linear estimate of the mean curve at warped points `warped_eval`.
///
/// The pooled objective over all `(t, i)` has the same minimiser as the fit to
/// per-maturity averages weighted by their observation counts, which is what is
/// computed here.
pub fn mean_curve_warped(panel: &SparseYieldPanel, bandwidth: f64, warped_eval: &[f64]) -> Result<Vec<f64>> {
    let knots = panel.grid().warped_knots();
    let n = knots.len();
    let mut counts = vec![0.0; n];
    let mut sums = vec![0.0; n];
    for t in 0..panel.horizon() {
        for (i, y) in panel.row(t).enumerate() {
            if let Some(y) = y {
                counts[i] += 1.0;
                sums[i] += y;
            }
        }
    }
    let averages: Vec<f64> = sums.iter().zip(&counts).map(|(s, c)| s / c).collect();
    warped_eval
        .iter()
        .map(|&x0| {
            let problem = LocalLinearProblem {
                support: &knots,
                responses: &averages,
                outer_weights: Some(&counts),
                x0,
                bandwidth,
            };
            locallin_fit(&problem).map(|(c0, _)| c0)
        })
        .collect()
}

/// Mean curve `mu_Y(tau)` at maturities `eval_points`.
pub fn estimate_mean_curve(
    panel: &SparseYieldPanel,
    warp: &Warp,
    bandwidth: f64,
    eval_points: &[f64],
) -> Result<Vec<f64>> {
    let warped = eval_points
        .iter()
        .map(|&tau| warp.inverse(tau))
        .collect::<Result<Vec<_>>>()?;
    mean_curve_warped(panel, bandwidth, &warped)
}
