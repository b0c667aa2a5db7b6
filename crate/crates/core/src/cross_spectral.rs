//! Cross-spectral density between the sparsely observed curve and each
//! regressor, smoothed from raw lagged cross-covariance products.
//!
//! For an evaluation point `x0` the local-linear objective
//!
//! ```text
//! sum_h sum_t sum_i W_h K((x0 - x_i)/B) |G_{h,t,i} e^{-ih w} - c0 - c1 (x0 - x_i)|^2
//! ```
//!
//! has real design moments that do not depend on the frequency, and complex
//! response moments that are trigonometric polynomials in `w`. Both are
//! accumulated once per `(series, x0)`; each frequency then costs one pass
//! over the `2Q - 1` lags and a 2x2 solve.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{FrequencyGrid, MacroPanel, SparseYieldPanel};
use crate::mv_spectral::bartlett_weight;
use crate::smoother::{epanechnikov, singular_design, DistinctSupport, Moments};

/// One raw product `G_{h,t,i}`; `t` is the 0-based time of the regressor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RawEntry {
    pub t: usize,
    pub maturity: usize,
    pub value: f64,
}

/// Raw cross-covariances `G_{h,t,i} = (y_{t+h,i} - mu_Y(tau_i)) (X_t^{(j)} - mu_X^{(j)})`
/// for lags `|h| < Q`.
#[derive(Clone, Debug, PartialEq)]
pub struct RawCrossCovariances {
    pub span: usize,
    pub horizon: usize,
    /// Warped coordinates of the maturities.
    pub warped: Vec<f64>,
    /// Indexed `[j][h + Q - 1]`.
    pub entries: Vec<Vec<Vec<RawEntry>>>,
}

impl RawCrossCovariances {
    pub fn n_series(&self) -> usize {
        self.entries.len()
    }

    pub fn lags(&self) -> impl Iterator<Item = i64> {
        let q = self.span as i64;
        -(q - 1)..q
    }

    pub fn lag_entries(&self, j: usize, h: i64) -> &[RawEntry] {
        &self.entries[j][(h + self.span as i64 - 1) as usize]
    }
}

/// Valid 0-based time range for lag `h`: both `t` and `t + h` in `0..T`.
pub fn lag_time_range(horizon: usize, h: i64) -> std::ops::Range<usize> {
    let lo = (-h).max(0) as usize;
    let hi = (horizon as i64 - h).min(horizon as i64).max(lo as i64) as usize;
    lo..hi
}

/// Form the raw products. `mean_at_maturities` is `mu_Y` at each quoted maturity.
pub fn raw_cross_cov(
    panel: &SparseYieldPanel,
    macro_panel: &MacroPanel,
    mean_at_maturities: &[f64],
    macro_means: &[f64],
    span: usize,
) -> Result<RawCrossCovariances> {
    let horizon = panel.horizon();
    if macro_panel.horizon() != horizon {
        return Err(Error::DimensionMismatch(format!(
            "yield panel has {horizon} periods but macro panel has {}",
            macro_panel.horizon()
        )));
    }
    if mean_at_maturities.len() != panel.n_maturities() || macro_means.len() != macro_panel.dim() {
        return Err(Error::DimensionMismatch(
            "mean vectors do not match panel dimensions".into(),
        ));
    }
    if span < 1 || span > horizon {
        return Err(Error::invalid(
            "Bartlett span",
            format!("need 1 <= Q <= T = {horizon}, got {span}"),
        ));
    }
    let q = span as i64;
    let entries = (0..macro_panel.dim())
        .map(|j| {
            (-(q - 1)..q)
                .map(|h| {
                    let mut lag = Vec::new();
                    for t in lag_time_range(horizon, h) {
                        let x = macro_panel.get(t, j) - macro_means[j];
                        let s = (t as i64 + h) as usize;
                        for (i, y) in panel.row(s).enumerate() {
                            if let Some(y) = y {
                                lag.push(RawEntry {
                                    t,
                                    maturity: i,
                                    value: (y - mean_at_maturities[i]) * x,
                                });
                            }
                        }
                    }
                    lag
                })
                .collect()
        })
        .collect();
    Ok(RawCrossCovariances {
        span,
        horizon,
        warped: panel.grid().warped_knots(),
        entries,
    })
}

/// `f^{YX(j)}_omega(x)` on frequency grid x evaluation points x series.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossSpectralField {
    pub grid: FrequencyGrid,
    pub eval_warped: Vec<f64>,
    pub n_series: usize,
    /// Indexed `[(j * n_eval + k) * N + w]`.
    pub values: Vec<Complex64>,
}

impl CrossSpectralField {
    pub fn n_eval(&self) -> usize {
        self.eval_warped.len()
    }

    pub fn get(&self, w: usize, k: usize, j: usize) -> Complex64 {
        self.values[(j * self.n_eval() + k) * self.grid.len() + w]
    }

    /// Row vector `[f^(1), ..., f^(d)]` at node `w` and point `k`.
    pub fn row(&self, w: usize, k: usize) -> Vec<Complex64> {
        (0..self.n_series).map(|j| self.get(w, k, j)).collect()
    }

    pub fn max_mirror_defect(&self) -> f64 {
        let n = self.grid.len();
        (0..self.values.len())
            .map(|idx| {
                let base = idx - idx % n;
                let w = idx % n;
                (self.values[idx] - self.values[base + self.grid.mirror(w)].conj()).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Smooth the raw products into the cross-spectral density at warped points `eval_warped`.
pub fn cross_spectral_density(
    raw: &RawCrossCovariances,
    bandwidth: f64,
    grid: &FrequencyGrid,
    eval_warped: &[f64],
) -> Result<CrossSpectralField> {
    let span = raw.span;
    let n_lags = 2 * span - 1;
    let n_mat = raw.warped.len();
    let n_freq = grid.len();
    let d = raw.n_series();

    let weights: Vec<f64> = raw.lags().map(|h| bartlett_weight(span, h)).collect();
    // e^{-i h omega_w}, indexed [lag][w]
    let phases: Vec<Vec<Complex64>> = raw
        .lags()
        .map(|h| {
            grid.nodes()
                .map(|omega| Complex64::from_polar(1.0, -(h as f64) * omega))
                .collect()
        })
        .collect();

    // Per (series, lag, maturity): summed products; per (lag, maturity): counts.
    let mut sums = vec![0.0; d * n_lags * n_mat];
    let mut counts = vec![0.0; n_lags * n_mat];
    for j in 0..d {
        for (l, lag) in raw.entries[j].iter().enumerate() {
            for e in lag {
                sums[(j * n_lags + l) * n_mat + e.maturity] += e.value;
                if j == 0 {
                    counts[l * n_mat + e.maturity] += 1.0;
                }
            }
        }
    }
    // Bartlett-weighted count of realised terms per maturity.
    let design_mass: Vec<f64> = (0..n_mat)
        .map(|i| (0..n_lags).map(|l| weights[l] * counts[l * n_mat + i]).sum())
        .collect();

    let prefactor = span as f64 / (2.0 * PI);
    let mut values = vec![Complex64::new(0.0, 0.0); d * eval_warped.len() * n_freq];
    for (k, &x0) in eval_warped.iter().enumerate() {
        let kernel: Vec<f64> = raw.warped.iter().map(|x| epanechnikov((x0 - x) / bandwidth)).collect();

        let mut design = Moments::<f64>::new();
        let mut distinct = DistinctSupport::default();
        for i in 0..n_mat {
            let w = kernel[i] * design_mass[i];
            if w > 0.0 {
                design.add(w, x0 - raw.warped[i], 0.0);
                distinct.push(raw.warped[i]);
            }
        }
        let [s0, s1, s2] = design.s;
        let det = s0 * s2 - s1 * s1;
        if !distinct.has_two() || design.solve().is_none() {
            let eligible = (0..n_mat).filter(|&i| design_mass[i] > 0.0).map(|i| raw.warped[i]);
            return Err(singular_design(x0, bandwidth, eligible));
        }

        for j in 0..d {
            // M_p(h) = sum_i K_i (x0 - x_i)^p sum_t G_{h,t,i}, p = 0, 1
            let response: Vec<[f64; 2]> = (0..n_lags)
                .map(|l| {
                    let row = &sums[(j * n_lags + l) * n_mat..(j * n_lags + l + 1) * n_mat];
                    let mut m = [0.0; 2];
                    for i in 0..n_mat {
                        if kernel[i] > 0.0 {
                            let kg = kernel[i] * row[i];
                            m[0] += kg;
                            m[1] += kg * (x0 - raw.warped[i]);
                        }
                    }
                    m
                })
                .collect();
            let out = &mut values[(j * eval_warped.len() + k) * n_freq..][..n_freq];
            for (w, slot) in out.iter_mut().enumerate() {
                let mut t0 = Complex64::new(0.0, 0.0);
                let mut t1 = Complex64::new(0.0, 0.0);
                for l in 0..n_lags {
                    let z = phases[l][w] * weights[l];
                    t0 += z * response[l][0];
                    t1 += z * response[l][1];
                }
                let c0 = (t0 * s2 - t1 * s1) / det;
                *slot = c0 * prefactor;
            }
        }
    }
    Ok(CrossSpectralField {
        grid: *grid,
        eval_warped: eval_warped.to_vec(),
        n_series: d,
        values,
    })
}
