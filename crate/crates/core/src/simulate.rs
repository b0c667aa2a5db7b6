//! Synthetic panels from a known lagged-regression model with VAR(1)
//! regressors, plus the closed-form VAR(1) spectral density.
//!
//! Curve errors are random combinations of the first three orthonormal
//! shifted Legendre polynomials in warped coordinates, independent over time.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EvalPoints, FrequencyGrid, LaggedRegressionFit, MacroPanel, MaturityGrid, SparseYieldPanel};
use crate::mv_spectral::{ComplexMatrix, RealMatrix, SpectralDensityField};

pub const BURN_IN: usize = 500;

/// One nonzero filter coefficient curve `b_lag^{(series)}`, tabulated at the maturities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterTerm {
    pub lag: i64,
    pub series: usize,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub horizon: usize,
    pub grid: MaturityGrid,
    pub series_names: Vec<String>,
    pub var_coef: RealMatrix,
    pub innov_cov: RealMatrix,
    pub macro_mean: Vec<f64>,
    /// `mu_Y` at the maturities.
    pub mean_curve: Vec<f64>,
    pub filter: Vec<FilterTerm>,
    /// Standard deviation of each curve-error basis score.
    pub curve_error_sd: f64,
    /// Observation noise standard deviation `sigma`; a simulator knob only.
    pub noise_sd: f64,
    pub seed: u64,
}

fn dmatrix(m: &RealMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.dim, m.dim, &m.data)
}

pub fn spectral_radius(a: &RealMatrix) -> f64 {
    dmatrix(a)
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

impl SyntheticSpec {
    pub fn dim(&self) -> usize {
        self.macro_mean.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        let n = self.grid.len();
        if d == 0 || self.series_names.len() != d {
            return Err(Error::invalid(
                "synthetic spec",
                "series names must match the regressor dimension",
            ));
        }
        if self.var_coef.dim != d || self.innov_cov.dim != d {
            return Err(Error::invalid("synthetic spec", "VAR matrices must be d x d"));
        }
        if self.horizon < 2 {
            return Err(Error::invalid("synthetic spec", "horizon must be at least 2"));
        }
        if self.mean_curve.len() != n {
            return Err(Error::invalid(
                "synthetic spec",
                "mean curve must have one value per maturity",
            ));
        }
        for term in &self.filter {
            if term.series >= d || term.values.len() != n {
                return Err(Error::invalid(
                    "synthetic spec",
                    format!(
                        "filter term at lag {} for series {} is malformed",
                        term.lag, term.series
                    ),
                ));
            }
        }
        if !(self.noise_sd >= 0.0) || !(self.curve_error_sd >= 0.0) {
            return Err(Error::invalid("synthetic spec", "noise scales must be >= 0"));
        }
        let rho = spectral_radius(&self.var_coef);
        if !(rho < 1.0) {
            return Err(Error::NonStationary(rho));
        }
        let cov = dmatrix(&self.innov_cov);
        if (&cov - cov.transpose()).abs().max() > 1e-12 || cov.clone().cholesky().is_none() {
            return Err(Error::invalid(
                "synthetic spec",
                "innovation covariance must be symmetric positive definite",
            ));
        }
        Ok(())
    }

    fn max_filter_lag(&self) -> usize {
        self.filter
            .iter()
            .map(|t| t.lag.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    /// `a(tau) = mu_Y(tau) - sum_j sum_h b_h^{(j)}(tau) mu_X^{(j)}` at the maturities.
    pub fn intercept(&self) -> Vec<f64> {
        let mut a = self.mean_curve.clone();
        for term in &self.filter {
            for (ai, b) in a.iter_mut().zip(&term.values) {
                *ai -= b * self.macro_mean[term.series];
            }
        }
        a
    }

    /// The recovery scenario: one AR(1) regressor with coefficient 0.7, a
    /// lag-0 filter `1 - x` in warped coordinates, zero intercept, on the
    /// US Treasury maturity grid.
    pub fn recovery(seed: u64) -> Self {
        let grid = MaturityGrid::new(vec![1.0 / 12.0, 0.5, 1.0, 2.0, 3.0, 5.0, 7.0, 10.0, 30.0]).unwrap();
        let knots = grid.warped_knots();
        let n = grid.len();
        Self {
            horizon: 2000,
            series_names: vec!["X".into()],
            var_coef: RealMatrix {
                dim: 1,
                data: vec![0.7],
            },
            innov_cov: RealMatrix {
                dim: 1,
                data: vec![1.0],
            },
            macro_mean: vec![0.0],
            mean_curve: vec![0.0; n],
            filter: vec![FilterTerm {
                lag: 0,
                series: 0,
                values: knots.iter().map(|x| 1.0 - x).collect(),
            }],
            curve_error_sd: 0.1,
            noise_sd: 0.05,
            seed,
            grid,
        }
    }
}

/// Draws `len` consecutive VAR(1) states after the burn-in.
fn var1_path(spec: &SyntheticSpec, rng: &mut ChaCha8Rng, len: usize) -> Vec<Vec<f64>> {
    let d = spec.dim();
    let a = dmatrix(&spec.var_coef);
    let chol = dmatrix(&spec.innov_cov).cholesky().expect("validated").l();
    let mu = DVector::from_column_slice(&spec.macro_mean);
    let mut state = DVector::<f64>::zeros(d);
    let mut out = Vec::with_capacity(len);
    for step in 0..BURN_IN + len {
        let z = DVector::from_fn(d, |_, _| StandardNormal.sample(rng));
        state = &a * &state + &chol * z;
        if step >= BURN_IN {
            out.push((&state + &mu).iter().copied().collect());
        }
    }
    out
}

/// `X_t = mu + A (X_{t-1} - mu) + eta_t`, Gaussian innovations, seeded.
pub fn simulate_var1(spec: &SyntheticSpec) -> Result<MacroPanel> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    MacroPanel::new(spec.series_names.clone(), var1_path(spec, &mut rng, spec.horizon))
}

/// `F(w) = (1/2pi) (I - A e^{-iw})^{-1} S (I - A e^{-iw})^{-*}`.
pub fn var1_spectral_density(
    var_coef: &RealMatrix,
    innov_cov: &RealMatrix,
    grid: &FrequencyGrid,
) -> Result<SpectralDensityField> {
    let rho = spectral_radius(var_coef);
    if !(rho < 1.0) {
        return Err(Error::NonStationary(rho));
    }
    let d = var_coef.dim;
    let a = dmatrix(var_coef).map(|v| Complex64::new(v, 0.0));
    let s = dmatrix(innov_cov).map(|v| Complex64::new(v, 0.0));
    let eye = DMatrix::<Complex64>::identity(d, d);
    let matrices = grid
        .nodes()
        .map(|omega| {
            let m = &eye - &a * Complex64::from_polar(1.0, -omega);
            let inv = m.try_inverse().expect("stationary VAR has invertible transfer matrix");
            let f = &inv * &s * inv.adjoint() / Complex64::new(2.0 * PI, 0.0);
            ComplexMatrix {
                dim: d,
                data: (0..d * d).map(|i| f[(i / d, i % d)]).collect(),
            }
        })
        .collect();
    Ok(SpectralDensityField {
        grid: *grid,
        dim: d,
        matrices,
    })
}

/// Known model components behind a simulated panel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub maturities: Vec<f64>,
    pub mean_curve: Vec<f64>,
    pub macro_mean: Vec<f64>,
    pub intercept: Vec<f64>,
    pub filter: Vec<FilterTerm>,
    /// `a + sum_j sum_h b_h X_{t-h}` at the maturities, `[t][i]`, before curve error and noise.
    pub signal: Vec<Vec<f64>>,
}

impl GroundTruth {
    /// The true filter as a fit evaluated at the maturities, lags `-H..=H`.
    pub fn to_fit(&self, max_lag: usize) -> Result<LaggedRegressionFit> {
        let n = self.maturities.len();
        let d = self.macro_mean.len();
        let mut filter = vec![0.0; (2 * max_lag + 1) * n * d];
        for term in &self.filter {
            if term.lag.unsigned_abs() as usize > max_lag {
                continue;
            }
            let row = (term.lag + max_lag as i64) as usize;
            for (k, v) in term.values.iter().enumerate() {
                filter[(row * n + k) * d + term.series] = *v;
            }
        }
        let grid = MaturityGrid::new(self.maturities.clone())?;
        let eval = EvalPoints {
            warped: grid.warped_knots(),
            maturities: self.maturities.clone(),
        };
        LaggedRegressionFit::new(max_lag, eval, filter, self.mean_curve.clone(), self.macro_mean.clone())
    }
}

fn legendre_basis(x: f64) -> [f64; 3] {
    [
        1.0,
        3f64.sqrt() * (2.0 * x - 1.0),
        5f64.sqrt() * (6.0 * x * x - 6.0 * x + 1.0),
    ]
}

/// Simulate `y_ti = a(tau_i) + sum_j sum_h b_h^{(j)}(tau_i) X_{t-h}^{(j)} + e_t(tau_i) + eps_ti`.
/// The regressor path is extended beyond both ends of the sample so the truth
/// never involves imputed values.
pub fn simulate_lagged_regression(spec: &SyntheticSpec) -> Result<(SparseYieldPanel, MacroPanel, GroundTruth)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let pad = spec.max_filter_lag();
    let path = var1_path(spec, &mut rng, spec.horizon + 2 * pad);
    let intercept = spec.intercept();
    let knots = spec.grid.warped_knots();
    let basis: Vec<[f64; 3]> = knots.iter().map(|&x| legendre_basis(x)).collect();

    let mut signal = Vec::with_capacity(spec.horizon);
    let mut rows = Vec::with_capacity(spec.horizon);
    for t in 0..spec.horizon {
        let mut s = intercept.clone();
        for term in &spec.filter {
            let x = path[(t as i64 + pad as i64 - term.lag) as usize][term.series];
            for (si, b) in s.iter_mut().zip(&term.values) {
                *si += b * x;
            }
        }
        let scores: [f64; 3] = std::array::from_fn(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            spec.curve_error_sd * z
        });
        let row = s
            .iter()
            .zip(&basis)
            .map(|(si, p)| {
                let e: f64 = scores.iter().zip(p).map(|(c, p)| c * p).sum();
                let eps: f64 = StandardNormal.sample(&mut rng);
                Some(si + e + spec.noise_sd * eps)
            })
            .collect();
        rows.push(row);
        signal.push(s);
    }
    let panel = SparseYieldPanel::new(spec.grid.clone(), rows)?;
    let macro_panel = MacroPanel::new(spec.series_names.clone(), path[pad..pad + spec.horizon].to_vec())?;
    let truth = GroundTruth {
        maturities: spec.grid.as_slice().to_vec(),
        mean_curve: spec.mean_curve.clone(),
        macro_mean: spec.macro_mean.clone(),
        intercept,
        filter: spec.filter.clone(),
        signal,
    };
    Ok((panel, macro_panel, truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mv_spectral::{empirical_autocov, empirical_mean};

    fn scalar(horizon: usize, a: f64, seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            horizon,
            grid: MaturityGrid::new(vec![1.0, 2.0, 3.0]).unwrap(),
            series_names: vec!["x".into()],
            var_coef: RealMatrix { dim: 1, data: vec![a] },
            innov_cov: RealMatrix {
                dim: 1,
                data: vec![1.0],
            },
            macro_mean: vec![0.0],
            mean_curve: vec![0.0; 3],
            filter: vec![],
            curve_error_sd: 0.0,
            noise_sd: 0.0,
            seed,
        }
    }

    #[test]
    fn zero_coefficient_gives_white_noise() {
        let p = simulate_var1(&scalar(20_000, 0.0, 1)).unwrap();
        let r0 = empirical_autocov(&p, 0).unwrap().data[0];
        let r1 = empirical_autocov(&p, 1).unwrap().data[0];
        assert!((r0 - 1.0).abs() < 0.05);
        assert!((r1 / r0).abs() < 0.03);
        assert!(empirical_mean(&p)[0].abs() < 0.03);
    }

    #[test]
    fn ar_lag_one_autocorrelation() {
        let p = simulate_var1(&scalar(50_000, 0.9, 2)).unwrap();
        let r0 = empirical_autocov(&p, 0).unwrap().data[0];
        let r1 = empirical_autocov(&p, 1).unwrap().data[0];
        assert!((r1 / r0 - 0.9).abs() <= 0.02, "{}", r1 / r0);
    }

    #[test]
    fn same_seed_same_path() {
        let a = simulate_lagged_regression(&SyntheticSpec::recovery(9)).unwrap();
        let b = simulate_lagged_regression(&SyntheticSpec::recovery(9)).unwrap();
        let c = simulate_lagged_regression(&SyntheticSpec::recovery(10)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn nonstationary_rejected() {
        let err = simulate_var1(&scalar(10, 1.1, 0)).unwrap_err();
        assert!(matches!(err, Error::NonStationary(r) if (r - 1.1).abs() < 1e-12));
        let mut s = scalar(10, 0.5, 0);
        s.innov_cov.data[0] = -1.0;
        assert!(simulate_var1(&s).is_err());
    }

    #[test]
    fn closed_form_identity_is_flat() {
        let grid = FrequencyGrid::new(16).unwrap();
        let zero = RealMatrix {
            dim: 2,
            data: vec![0.0; 4],
        };
        let eye = RealMatrix {
            dim: 2,
            data: vec![1.0, 0.0, 0.0, 1.0],
        };
        let f = var1_spectral_density(&zero, &eye, &grid).unwrap();
        for m in &f.matrices {
            for (idx, z) in m.data.iter().enumerate() {
                let expect = if idx % 3 == 0 { 1.0 / (2.0 * PI) } else { 0.0 };
                assert!((z - expect).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn closed_form_ar_at_zero_frequency() {
        // 1 / (2 pi (1 - a)^2) at a = 0.5
        let grid = FrequencyGrid::new(4).unwrap();
        let f = var1_spectral_density(
            &RealMatrix {
                dim: 1,
                data: vec![0.5],
            },
            &RealMatrix {
                dim: 1,
                data: vec![1.0],
            },
            &grid,
        )
        .unwrap();
        let k = (0..4).find(|&k| grid.omega(k) == 0.0).unwrap();
        assert!((f.matrices[k].data[0].re - 1.0 / (2.0 * PI * 0.25)).abs() < 1e-12);
    }

    #[test]
    fn predicting_with_true_filter_reproduces_noiseless_panel() {
        let mut spec = SyntheticSpec::recovery(6);
        spec.horizon = 150;
        spec.curve_error_sd = 0.0;
        spec.noise_sd = 0.0;
        spec.filter.push(FilterTerm {
            lag: -2,
            series: 0,
            values: vec![0.3; 9],
        });
        spec.filter.push(FilterTerm {
            lag: 3,
            series: 0,
            values: (0..9).map(|i| 0.1 * i as f64).collect(),
        });
        let (panel, x, truth) = simulate_lagged_regression(&spec).unwrap();
        let fit = truth.to_fit(12).unwrap();
        for t in 3..148 {
            let pred = crate::lagreg::predict_curve(&fit, &x, t).unwrap();
            for (i, p) in pred.iter().enumerate() {
                assert!((p - panel.get(t, i).unwrap()).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn closed_form_integrates_to_stationary_covariance() {
        // int F = Gamma with Gamma = A Gamma A' + S; solved by fixed-point iteration
        let a = RealMatrix {
            dim: 2,
            data: vec![0.5, 0.4, -0.2, 0.3],
        };
        let s = RealMatrix {
            dim: 2,
            data: vec![1.0, 0.3, 0.3, 0.5],
        };
        let am = dmatrix(&a);
        let mut gamma = dmatrix(&s);
        for _ in 0..500 {
            gamma = &am * &gamma * am.transpose() + dmatrix(&s);
        }
        let grid = FrequencyGrid::new(512).unwrap();
        let f = var1_spectral_density(&a, &s, &grid).unwrap();
        for idx in 0..4 {
            let integral: Complex64 = f.matrices.iter().map(|m| m.data[idx]).sum::<Complex64>() * grid.weight();
            let g = gamma[(idx / 2, idx % 2)];
            assert!((integral.re - g).abs() <= 0.01 * g.abs().max(1.0));
            assert!(integral.im.abs() < 1e-10);
        }
    }

    #[test]
    fn zero_filter_without_noise_returns_mean() {
        let mut spec = SyntheticSpec::recovery(4);
        spec.filter.clear();
        spec.curve_error_sd = 0.0;
        spec.noise_sd = 0.0;
        spec.mean_curve = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0];
        let (panel, _, _) = simulate_lagged_regression(&spec).unwrap();
        for t in 0..panel.horizon() {
            for i in 0..9 {
                assert_eq!(panel.get(t, i), Some(spec.mean_curve[i]));
            }
        }
    }

    #[test]
    fn truth_matches_lagged_sum_in_the_interior() {
        let mut spec = SyntheticSpec::recovery(5);
        spec.horizon = 200;
        spec.macro_mean = vec![1.5];
        spec.filter.push(FilterTerm {
            lag: 2,
            series: 0,
            values: vec![0.5; 9],
        });
        spec.filter.push(FilterTerm {
            lag: -1,
            series: 0,
            values: (0..9).map(|i| i as f64).collect(),
        });
        let (_, x, truth) = simulate_lagged_regression(&spec).unwrap();
        let a = spec.intercept();
        for t in 2..199 {
            for (i, ai) in a.iter().enumerate() {
                let mut s = *ai;
                for term in &spec.filter {
                    s += term.values[i] * x.get((t as i64 - term.lag) as usize, 0);
                }
                assert!((s - truth.signal[t][i]).abs() < 1e-10);
            }
        }
    }
}
