//! Mean, autocovariances and Bartlett lag-window spectral density of the
//! regressor series.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{FrequencyGrid, MacroPanel};

/// Small dense matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    pub dim: usize,
    pub data: Vec<T>,
}

impl<T: Copy> Matrix<T> {
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.dim + c]
    }
}

impl Matrix<f64> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn transpose(&self) -> Self {
        let d = self.dim;
        let mut data = vec![0.0; d * d];
        for r in 0..d {
            for c in 0..d {
                data[c * d + r] = self.data[r * d + c];
            }
        }
        Self { dim: d, data }
    }
}

pub type RealMatrix = Matrix<f64>;
pub type ComplexMatrix = Matrix<Complex64>;

pub fn empirical_mean(panel: &MacroPanel) -> Vec<f64> {
    let n = panel.horizon() as f64;
    (0..panel.dim()).map(|j| panel.series(j).sum::<f64>() / n).collect()
}

/// `R_h = (1/T) sum_t (X_{t+h} - mu)(X_t - mu)^T`, with `R_{-h} = R_h^T`.
pub fn empirical_autocov(panel: &MacroPanel, h: i64) -> Result<RealMatrix> {
    let mean = empirical_mean(panel);
    autocov_with_mean(panel, &mean, h)
}

fn autocov_with_mean(panel: &MacroPanel, mean: &[f64], h: i64) -> Result<RealMatrix> {
    let horizon = panel.horizon();
    let lag = h.unsigned_abs() as usize;
    if lag >= horizon {
        return Err(Error::OutOfDomain {
            what: "autocovariance lag",
            value: h as f64,
            lo: -(horizon as f64 - 1.0),
            hi: horizon as f64 - 1.0,
        });
    }
    let d = panel.dim();
    let mut r = RealMatrix::zeros(d);
    for t in 0..horizon - lag {
        let lead = panel.row(t + lag);
        let base = panel.row(t);
        for a in 0..d {
            let xa = lead[a] - mean[a];
            for b in 0..d {
                r.data[a * d + b] += xa * (base[b] - mean[b]);
            }
        }
    }
    let scale = 1.0 / horizon as f64;
    r.data.iter_mut().for_each(|v| *v *= scale);
    Ok(if h < 0 { r.transpose() } else { r })
}

/// Autocovariance matrices for lags `-(Q-1)..=(Q-1)` and the sample mean.
#[derive(Clone, Debug, PartialEq)]
pub struct AutocovarianceSet {
    pub span: usize,
    pub mean: Vec<f64>,
    /// Lags `0..Q`; negative lags are the transposes.
    positive: Vec<RealMatrix>,
}

impl AutocovarianceSet {
    pub fn estimate(panel: &MacroPanel, span: usize) -> Result<Self> {
        if span < 1 || span > panel.horizon() {
            return Err(Error::invalid(
                "Bartlett span",
                format!("need 1 <= Q <= T = {}, got {span}", panel.horizon()),
            ));
        }
        let mean = empirical_mean(panel);
        let positive = (0..span as i64)
            .map(|h| autocov_with_mean(panel, &mean, h))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { span, mean, positive })
    }

    /// Build from given matrices for lags `0..Q`.
    pub fn from_lags(mean: Vec<f64>, positive: Vec<RealMatrix>) -> Result<Self> {
        if positive.is_empty() {
            return Err(Error::invalid("autocovariance set", "no lags"));
        }
        let d = mean.len();
        if positive.iter().any(|m| m.dim != d || m.data.len() != d * d) {
            return Err(Error::DimensionMismatch("autocovariance matrices must be d x d".into()));
        }
        Ok(Self {
            span: positive.len(),
            mean,
            positive,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// `R_h` for `|h| < Q`.
    pub fn lag(&self, h: i64) -> RealMatrix {
        let m = &self.positive[h.unsigned_abs() as usize];
        if h < 0 {
            m.transpose()
        } else {
            m.clone()
        }
    }

    pub(crate) fn positive_lag(&self, h: usize) -> &RealMatrix {
        &self.positive[h]
    }
}

/// Triangular weights `W_h = 1 - |h|/Q` for `h = -(Q-1)..=(Q-1)`, in lag order.
pub fn bartlett_weights(span: usize) -> Vec<f64> {
    let q = span as i64;
    (-(q - 1)..q)
        .map(|h| 1.0 - h.unsigned_abs() as f64 / span as f64)
        .collect()
}

/// `W_h` for a single lag.
pub fn bartlett_weight(span: usize, h: i64) -> f64 {
    let lag = h.unsigned_abs() as usize;
    if lag < span {
        1.0 - lag as f64 / span as f64
    } else {
        0.0
    }
}

/// d x d spectral density matrices on a frequency grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralDensityField {
    pub grid: FrequencyGrid,
    pub dim: usize,
    pub matrices: Vec<ComplexMatrix>,
}

impl SpectralDensityField {
    pub fn at(&self, k: usize) -> &ComplexMatrix {
        &self.matrices[k]
    }

    /// Largest deviation from Hermitian symmetry over all nodes.
    pub fn max_hermitian_defect(&self) -> f64 {
        let d = self.dim;
        self.matrices
            .iter()
            .flat_map(|m| (0..d).flat_map(move |r| (0..d).map(move |c| (m.get(r, c) - m.get(c, r).conj()).norm())))
            .fold(0.0, f64::max)
    }

    /// Largest deviation from `F(-omega) = conj(F(omega))` over mirrored nodes.
    pub fn max_mirror_defect(&self) -> f64 {
        (0..self.grid.len())
            .flat_map(|k| {
                let a = &self.matrices[k];
                let b = &self.matrices[self.grid.mirror(k)];
                a.data.iter().zip(&b.data).map(|(x, y)| (*x - y.conj()).norm())
            })
            .fold(0.0, f64::max)
    }
}

/// `F(omega) = (1/2pi) sum_{|h|<Q} W_h R_h e^{-i h omega}`.
///
/// Lags are folded in pairs, `R_h e^{-ih w} + R_h^T e^{ih w}`, so each output
/// matrix is Hermitian by construction.
pub fn spectral_density_matrix(acov: &AutocovarianceSet, grid: &FrequencyGrid) -> SpectralDensityField {
    let d = acov.dim();
    let span = acov.span;
    let matrices = grid
        .nodes()
        .map(|omega| {
            let mut data = vec![Complex64::new(0.0, 0.0); d * d];
            let r0 = acov.positive_lag(0);
            for a in 0..d {
                for b in 0..d {
                    let mut re = 0.5 * (r0.get(a, b) + r0.get(b, a));
                    let mut im = 0.0;
                    for h in 1..span {
                        let w = bartlett_weight(span, h as i64);
                        let r = acov.positive_lag(h);
                        let (s, c) = (h as f64 * omega).sin_cos();
                        re += w * c * (r.get(a, b) + r.get(b, a));
                        im += w * s * (r.get(b, a) - r.get(a, b));
                    }
                    data[a * d + b] = Complex64::new(re, im) / (2.0 * PI);
                }
            }
            ComplexMatrix { dim: d, data }
        })
        .collect();
    SpectralDensityField {
        grid: *grid,
        dim: d,
        matrices,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn panel(rows: Vec<Vec<f64>>) -> MacroPanel {
        let d = rows[0].len();
        MacroPanel::new((0..d).map(|j| format!("x{j}")).collect(), rows).unwrap()
    }

    fn normal_panel(horizon: usize, d: usize, seed: u64) -> MacroPanel {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        panel(
            (0..horizon)
                .map(|_| (0..d).map(|_| StandardNormal.sample(&mut rng)).collect())
                .collect(),
        )
    }

    #[test]
    fn means() {
        assert_eq!(
            empirical_mean(&panel(vec![vec![1.0, 2.0], vec![3.0, 4.0]])),
            vec![2.0, 3.0]
        );
        assert_eq!(empirical_mean(&panel(vec![vec![7.5]; 9])), vec![7.5]);
        let m = empirical_mean(&normal_panel(1000, 3, 5));
        assert!(m.iter().all(|v| v.abs() < 0.1), "{m:?}");
    }

    #[test]
    fn autocov_of_constant_panel_is_zero() {
        let p = panel(vec![vec![2.0, -1.0]; 10]);
        for h in -9..=9 {
            assert!(empirical_autocov(&p, h).unwrap().data.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn autocov_alternating_sequence() {
        let horizon = 10;
        let p = panel(
            (0..horizon)
                .map(|t| vec![if t % 2 == 0 { 1.0 } else { -1.0 }])
                .collect(),
        );
        assert!((empirical_autocov(&p, 0).unwrap().data[0] - 1.0).abs() < 1e-15);
        let r1 = empirical_autocov(&p, 1).unwrap().data[0];
        assert!((r1 + (horizon as f64 - 1.0) / horizon as f64).abs() < 1e-15);
    }

    #[test]
    fn autocov_white_noise_lag_five() {
        let r5 = empirical_autocov(&normal_panel(10_000, 1, 11), 5).unwrap().data[0];
        assert!(r5.abs() <= 0.05, "{r5}");
    }

    #[test]
    fn autocov_transpose_rule_is_exact() {
        let p = normal_panel(50, 3, 3);
        for h in 1..10 {
            let pos = empirical_autocov(&p, h).unwrap();
            let neg = empirical_autocov(&p, -h).unwrap();
            assert_eq!(neg, pos.transpose());
        }
        assert!(empirical_autocov(&p, 50).is_err());
        assert!(empirical_autocov(&p, -50).is_err());
    }

    #[test]
    fn lag_zero_is_psd() {
        let p = normal_panel(40, 3, 9);
        let r0 = empirical_autocov(&p, 0).unwrap();
        let m = nalgebra::DMatrix::from_row_slice(3, 3, &r0.data);
        let eig = m.symmetric_eigen();
        assert!(eig.eigenvalues.iter().all(|v| *v >= -1e-10));
    }

    #[test]
    fn weights_for_span_fourteen() {
        let w = bartlett_weights(14);
        assert_eq!(w.len(), 27);
        assert_eq!(w[13], 1.0);
        assert_eq!(w[13 + 7], 0.5);
        assert!((w[13 + 13] - 1.0 / 14.0).abs() < 1e-15);
        assert_eq!(w[0], w[26]);
        assert_eq!(bartlett_weights(1), vec![1.0]);
        assert_eq!(bartlett_weight(14, 14), 0.0);
    }

    #[test]
    fn weights_sum_to_span() {
        for q in 1..=50 {
            let s: f64 = bartlett_weights(q).iter().sum();
            assert!((s - q as f64).abs() < 1e-12, "{q}: {s}");
        }
    }

    #[test]
    fn span_one_gives_flat_spectrum() {
        let p = normal_panel(30, 2, 1);
        let acov = AutocovarianceSet::estimate(&p, 1).unwrap();
        let grid = FrequencyGrid::new(16).unwrap();
        let f = spectral_density_matrix(&acov, &grid);
        let r0 = acov.lag(0);
        for m in &f.matrices {
            for (z, r) in m.data.iter().zip(&r0.data) {
                assert!((z.re - r / (2.0 * PI)).abs() < 1e-15);
                assert!(z.im.abs() < 1e-15);
            }
            assert!(m.get(0, 0).re >= 0.0 && m.get(1, 1).re >= 0.0);
        }
    }

    #[test]
    fn inverse_transform_recovers_weighted_lags() {
        let p = normal_panel(60, 2, 21);
        let span = 6;
        let acov = AutocovarianceSet::estimate(&p, span).unwrap();
        let grid = FrequencyGrid::new(16).unwrap();
        let f = spectral_density_matrix(&acov, &grid);
        for h in -(span as i64 - 1)..span as i64 {
            let r = acov.lag(h);
            let w = bartlett_weight(span, h);
            for a in 0..2 {
                for b in 0..2 {
                    let rec: Complex64 = (0..grid.len())
                        .map(|k| f.at(k).get(a, b) * Complex64::from_polar(1.0, h as f64 * grid.omega(k)))
                        .sum::<Complex64>()
                        * grid.weight();
                    assert!((rec - w * r.get(a, b)).norm() < 1e-10, "h={h}");
                }
            }
        }
    }

    #[test]
    fn rejects_span_beyond_horizon() {
        let p = normal_panel(5, 1, 0);
        assert!(AutocovarianceSet::estimate(&p, 6).is_err());
        assert!(AutocovarianceSet::estimate(&p, 0).is_err());
        assert!(AutocovarianceSet::estimate(&p, 5).is_ok());
    }

    #[test]
    fn matches_naive_triple_sum() {
        for seed in 0..10 {
            let p = normal_panel(120, 3, seed);
            let acov = AutocovarianceSet::estimate(&p, 11).unwrap();
            let grid = FrequencyGrid::new(64).unwrap();
            let a = spectral_density_matrix(&acov, &grid);
            let b = crate::oracle::naive_spectral_density(&acov, &grid);
            for (x, y) in a.matrices.iter().zip(&b.matrices) {
                for (u, v) in x.data.iter().zip(&y.data) {
                    assert!((u - v).norm() <= 1e-12);
                }
            }
        }
    }
}
