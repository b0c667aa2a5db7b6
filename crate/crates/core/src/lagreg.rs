//! Frequency response, filter coefficients, prediction and goodness of fit.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::cross_spectral::CrossSpectralField;
use crate::error::{Error, Result};
use crate::model::{FrequencyGrid, LaggedRegressionFit, MacroPanel, SparseYieldPanel};
use crate::mv_spectral::{ComplexMatrix, SpectralDensityField};

/// Relative bound on the imaginary part discarded by the filter quadrature.
pub const IMAG_RTOL: f64 = 1e-8;

/// `B_omega(x)` as a d-row vector per frequency and evaluation point.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyResponseField {
    pub grid: FrequencyGrid,
    pub eval_warped: Vec<f64>,
    pub n_series: usize,
    /// Indexed `[(w * n_eval + k) * d + j]`.
    pub values: Vec<Complex64>,
    /// Condition number of the regressor spectral matrix at each node.
    pub condition: Vec<f64>,
}

impl FrequencyResponseField {
    pub fn n_eval(&self) -> usize {
        self.eval_warped.len()
    }

    pub fn get(&self, w: usize, k: usize, j: usize) -> Complex64 {
        self.values[(w * self.n_eval() + k) * self.n_series + j]
    }

    pub fn max_mirror_defect(&self) -> f64 {
        let block = self.n_eval() * self.n_series;
        (0..self.grid.len())
            .flat_map(|w| {
                let m = self.grid.mirror(w);
                (0..block).map(move |o| (w, m, o))
            })
            .map(|(w, m, o)| (self.values[w * block + o] - self.values[m * block + o].conj()).norm())
            .fold(0.0, f64::max)
    }
}

fn to_dmatrix(m: &ComplexMatrix) -> DMatrix<Complex64> {
    DMatrix::from_row_slice(m.dim, m.dim, &m.data)
}

/// Ratio of the extreme singular values; infinite for a singular matrix.
pub fn condition_number(m: &ComplexMatrix) -> f64 {
    let sv = to_dmatrix(m).singular_values();
    let max = sv.max();
    let min = sv.min();
    if min > 0.0 && max.is_finite() {
        max / min
    } else {
        f64::INFINITY
    }
}

/// `B_omega(x) = f_omega(x) F_omega^{-1}`, computed as the solution of the
/// adjoint system `F^* B^* = f^*` at every node.
pub fn frequency_response(
    cross: &CrossSpectralField,
    spec: &SpectralDensityField,
    cond_threshold: f64,
) -> Result<FrequencyResponseField> {
    if cross.grid != spec.grid {
        return Err(Error::DimensionMismatch(
            "cross-spectral and spectral grids differ".into(),
        ));
    }
    if cross.n_series != spec.dim {
        return Err(Error::DimensionMismatch(format!(
            "{} cross-spectral series but a {}-dimensional spectral matrix",
            cross.n_series, spec.dim
        )));
    }
    let d = spec.dim;
    let n_eval = cross.n_eval();
    let mut values = Vec::with_capacity(spec.grid.len() * n_eval * d);
    let mut condition = Vec::with_capacity(spec.grid.len());
    for w in 0..spec.grid.len() {
        let f = spec.at(w);
        let cond = condition_number(f);
        if !(cond <= cond_threshold) {
            return Err(Error::IllConditioned {
                omega: spec.grid.omega(w),
                cond,
                threshold: cond_threshold,
            });
        }
        condition.push(cond);
        let adjoint = to_dmatrix(f).adjoint();
        let rhs = DMatrix::from_fn(d, n_eval, |j, k| cross.get(w, k, j).conj());
        let sol = adjoint.lu().solve(&rhs).ok_or(Error::IllConditioned {
            omega: spec.grid.omega(w),
            cond: f64::INFINITY,
            threshold: cond_threshold,
        })?;
        for k in 0..n_eval {
            for j in 0..d {
                values.push(sol[(j, k)].conj());
            }
        }
    }
    Ok(FrequencyResponseField {
        grid: spec.grid,
        eval_warped: cross.eval_warped.clone(),
        n_series: d,
        values,
        condition,
    })
}

/// Filter coefficients on lags `-H..=H` from the rectangle rule, plus the
/// largest discarded imaginary part.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterEstimate {
    pub max_lag: usize,
    /// Indexed `[(h + H) * n_eval * d + k * d + j]`, the layout of [`LaggedRegressionFit`].
    pub values: Vec<f64>,
    pub max_imag: f64,
}

/// `b_h = (1/N) sum_w B_{omega_w} e^{i h omega_w}` for `|h| <= H`.
pub fn filter_coefficients(resp: &FrequencyResponseField, max_lag: usize) -> Result<FilterEstimate> {
    resp.grid.check_lag(max_lag)?;
    let n = resp.grid.len();
    let block = resp.n_eval() * resp.n_series;
    let h_max = max_lag as i64;
    let mut values = Vec::with_capacity((2 * max_lag + 1) * block);
    let mut max_imag: f64 = 0.0;
    let mut max_real: f64 = 0.0;
    for h in -h_max..=h_max {
        let phases: Vec<Complex64> = resp
            .grid
            .nodes()
            .map(|omega| Complex64::from_polar(1.0, h as f64 * omega))
            .collect();
        for o in 0..block {
            let mut acc = Complex64::new(0.0, 0.0);
            for (w, p) in phases.iter().enumerate() {
                acc += resp.values[w * block + o] * p;
            }
            acc /= n as f64;
            max_imag = max_imag.max(acc.im.abs());
            max_real = max_real.max(acc.re.abs());
            values.push(acc.re);
        }
    }
    if max_imag > IMAG_RTOL * (1.0 + max_real) {
        return Err(Error::ResidualImaginary { max_imag, max_real });
    }
    Ok(FilterEstimate {
        max_lag,
        values,
        max_imag,
    })
}

/// `Y_t(x) = mu_Y(x) + sum_j sum_h b_h^{(j)}(x) (X_{t-h}^{(j)} - mu_X^{(j)})` at every
/// evaluation point of the fit; `t` is 0-based and regressors outside the
/// sample are imputed by their mean.
pub fn predict_curve(fit: &LaggedRegressionFit, macro_panel: &MacroPanel, t: usize) -> Result<Vec<f64>> {
    check_dims(fit, macro_panel)?;
    let horizon = macro_panel.horizon();
    if t >= horizon {
        return Err(Error::OutOfDomain {
            what: "prediction time",
            value: t as f64,
            lo: 0.0,
            hi: horizon as f64 - 1.0,
        });
    }
    let means = fit.macro_means();
    let mut out = fit.mean_curve().to_vec();
    for h in fit.lags() {
        let s = t as i64 - h;
        if s < 0 || s >= horizon as i64 {
            continue;
        }
        let row = macro_panel.row(s as usize);
        for (k, y) in out.iter_mut().enumerate() {
            for j in 0..fit.n_series() {
                *y += fit.coef(h, k, j) * (row[j] - means[j]);
            }
        }
    }
    Ok(out)
}

fn check_dims(fit: &LaggedRegressionFit, macro_panel: &MacroPanel) -> Result<()> {
    if fit.n_series() != macro_panel.dim() {
        return Err(Error::DimensionMismatch(format!(
            "fit has {} series, macro panel has {}",
            fit.n_series(),
            macro_panel.dim()
        )));
    }
    Ok(())
}

/// Map each panel maturity to the fit evaluation point at the same maturity.
fn maturity_index(panel: &SparseYieldPanel, fit: &LaggedRegressionFit) -> Result<Vec<usize>> {
    let eval = &fit.eval_points().maturities;
    panel
        .grid()
        .as_slice()
        .iter()
        .map(|tau| {
            eval.iter()
                .position(|m| (m - tau).abs() <= 1e-12 * tau.abs().max(1.0))
                .ok_or_else(|| Error::DimensionMismatch(format!("fit has no evaluation point at maturity {tau}")))
        })
        .collect()
}

/// Fitted values at the panel maturities for every period, `[t][i]`.
pub fn fitted_panel(
    panel: &SparseYieldPanel,
    fit: &LaggedRegressionFit,
    macro_panel: &MacroPanel,
) -> Result<Vec<Vec<f64>>> {
    if panel.horizon() != macro_panel.horizon() {
        return Err(Error::DimensionMismatch("panel horizons differ".into()));
    }
    let index = maturity_index(panel, fit)?;
    (0..panel.horizon())
        .map(|t| {
            let pred = predict_curve(fit, macro_panel, t)?;
            Ok(index.iter().map(|&k| pred[k]).collect())
        })
        .collect()
}

/// `R^2 = 1 - SS_res / SS_tot` over observed cells. The fit must carry
/// evaluation points at every panel maturity.
pub fn r_squared(panel: &SparseYieldPanel, fit: &LaggedRegressionFit, macro_panel: &MacroPanel) -> Result<f64> {
    let index = maturity_index(panel, fit)?;
    let fitted = fitted_panel(panel, fit, macro_panel)?;
    let mean = fit.mean_curve();
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (t, row) in fitted.iter().enumerate() {
        for (i, yhat) in row.iter().enumerate() {
            if let Some(y) = panel.get(t, i) {
                ss_res += (y - yhat).powi(2);
                ss_tot += (y - mean[index[i]]).powi(2);
            }
        }
    }
    if ss_tot == 0.0 {
        return Err(Error::DegenerateTotal);
    }
    Ok(1.0 - ss_res / ss_tot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EvalPoints, MaturityGrid};
    use rand::{Rng, SeedableRng};

    fn scalar_spec(grid: FrequencyGrid, f: impl Fn(f64) -> f64) -> SpectralDensityField {
        SpectralDensityField {
            grid,
            dim: 1,
            matrices: grid
                .nodes()
                .map(|w| ComplexMatrix {
                    dim: 1,
                    data: vec![Complex64::new(f(w), 0.0)],
                })
                .collect(),
        }
    }

    fn cross_from(
        grid: FrequencyGrid,
        d: usize,
        n_eval: usize,
        f: impl Fn(usize, usize, usize) -> Complex64,
    ) -> CrossSpectralField {
        let n = grid.len();
        let mut values = vec![Complex64::new(0.0, 0.0); d * n_eval * n];
        for j in 0..d {
            for k in 0..n_eval {
                for w in 0..n {
                    values[(j * n_eval + k) * n + w] = f(w, k, j);
                }
            }
        }
        CrossSpectralField {
            grid,
            eval_warped: (0..n_eval).map(|k| k as f64).collect(),
            n_series: d,
            values,
        }
    }

    fn response_from(grid: FrequencyGrid, f: impl Fn(f64) -> Complex64) -> FrequencyResponseField {
        FrequencyResponseField {
            grid,
            eval_warped: vec![0.0],
            n_series: 1,
            values: grid.nodes().map(f).collect(),
            condition: vec![1.0; grid.len()],
        }
    }

    #[test]
    fn scalar_ratio() {
        let grid = FrequencyGrid::new(16).unwrap();
        let spec = scalar_spec(grid, |w| 1.0 + 0.5 * w.cos());
        let cross = cross_from(grid, 1, 2, |w, _, _| Complex64::new(2.5, 0.0) * spec.at(w).data[0]);
        let b = frequency_response(&cross, &spec, 1e8).unwrap();
        assert!(b.values.iter().all(|v| (v - Complex64::new(2.5, 0.0)).norm() < 1e-14));
    }

    #[test]
    fn white_regressors_scale_by_two_pi() {
        let grid = FrequencyGrid::new(8).unwrap();
        let d = 2;
        let eye = |_: f64| ComplexMatrix {
            dim: d,
            data: vec![
                Complex64::new(1.0 / (2.0 * std::f64::consts::PI), 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0 / (2.0 * std::f64::consts::PI), 0.0),
            ],
        };
        let spec = SpectralDensityField {
            grid,
            dim: d,
            matrices: grid.nodes().map(eye).collect(),
        };
        let cross = cross_from(grid, d, 3, |w, k, j| {
            Complex64::new(w as f64 + k as f64, j as f64 - 0.5)
        });
        let b = frequency_response(&cross, &spec, 1e8).unwrap();
        for w in 0..8 {
            for k in 0..3 {
                for j in 0..d {
                    let expect = cross.get(w, k, j) * (2.0 * std::f64::consts::PI);
                    assert!((b.get(w, k, j) - expect).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn random_hermitian_solve_residual() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let grid = FrequencyGrid::new(4).unwrap();
        let d = 3;
        let matrices: Vec<ComplexMatrix> = (0..4)
            .map(|_| {
                let a = DMatrix::from_fn(d, d, |_, _| {
                    Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
                });
                let h = &a * a.adjoint() + DMatrix::identity(d, d) * Complex64::new(0.5, 0.0);
                ComplexMatrix {
                    dim: d,
                    data: (0..d * d).map(|i| h[(i / d, i % d)]).collect(),
                }
            })
            .collect();
        let spec = SpectralDensityField { grid, dim: d, matrices };
        let vals: Vec<Complex64> = (0..4 * 2 * d)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let cross = cross_from(grid, d, 2, |w, k, j| vals[(w * 2 + k) * d + j]);
        let b = frequency_response(&cross, &spec, 1e8).unwrap();
        for w in 0..4 {
            let f = spec.at(w);
            for k in 0..2 {
                for c in 0..d {
                    let recon: Complex64 = (0..d).map(|r| b.get(w, k, r) * f.get(r, c)).sum();
                    assert!((recon - cross.get(w, k, c)).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn ill_conditioned_spectrum_is_rejected() {
        let grid = FrequencyGrid::new(4).unwrap();
        let spec = SpectralDensityField {
            grid,
            dim: 2,
            matrices: (0..4)
                .map(|_| ComplexMatrix {
                    dim: 2,
                    data: vec![Complex64::new(1.0, 0.0); 4],
                })
                .collect(),
        };
        let cross = cross_from(grid, 2, 1, |_, _, _| Complex64::new(1.0, 0.0));
        let err = frequency_response(&cross, &spec, 1e8).unwrap_err();
        assert!(matches!(err, Error::IllConditioned { .. }), "{err}");
    }

    #[test]
    fn constant_response_is_pure_lag_zero() {
        let grid = FrequencyGrid::new(64).unwrap();
        let b = filter_coefficients(&response_from(grid, |_| Complex64::new(0.7, 0.0)), 12).unwrap();
        for (idx, v) in b.values.iter().enumerate() {
            let expect = if idx == 12 { 0.7 } else { 0.0 };
            assert!((v - expect).abs() < 1e-15, "{idx}: {v}");
        }
    }

    #[test]
    fn shift_filter() {
        let grid = FrequencyGrid::new(32).unwrap();
        let b = filter_coefficients(&response_from(grid, |w| Complex64::from_polar(1.0, -w)), 5).unwrap();
        for (idx, v) in b.values.iter().enumerate() {
            let expect = if idx == 5 + 1 { 1.0 } else { 0.0 };
            assert!((v - expect).abs() < 1e-14, "{idx}: {v}");
        }
    }

    #[test]
    fn short_grid_rejected() {
        let grid = FrequencyGrid::new(8).unwrap();
        assert!(filter_coefficients(&response_from(grid, |_| Complex64::new(1.0, 0.0)), 4).is_err());
    }

    #[test]
    fn asymmetric_response_leaves_imaginary_residue() {
        let grid = FrequencyGrid::new(16).unwrap();
        let err = filter_coefficients(&response_from(grid, |_| Complex64::new(0.0, 1.0)), 2).unwrap_err();
        assert!(matches!(err, Error::ResidualImaginary { .. }));
    }

    fn fixture() -> (SparseYieldPanel, MacroPanel, EvalPoints) {
        let grid = MaturityGrid::new(vec![1.0, 2.0, 3.0]).unwrap();
        let rows = (0..6)
            .map(|t| (0..3).map(|i| Some((t * (i + 1)) as f64 * 0.3 + i as f64)).collect())
            .collect();
        let panel = SparseYieldPanel::new(grid.clone(), rows).unwrap();
        let x = MacroPanel::new(vec!["x".into()], (0..6).map(|t| vec![(t as f64).sin()]).collect()).unwrap();
        let eval = EvalPoints {
            warped: grid.warped_knots(),
            maturities: grid.as_slice().to_vec(),
        };
        (panel, x, eval)
    }

    #[test]
    fn zero_filter_predicts_mean_and_zero_r2() {
        let (panel, x, eval) = fixture();
        let fit = LaggedRegressionFit::zero(2, eval, vec![1.0, 2.0, 3.0], vec![0.1]).unwrap();
        for t in 0..6 {
            assert_eq!(predict_curve(&fit, &x, t).unwrap(), vec![1.0, 2.0, 3.0]);
        }
        assert_eq!(r_squared(&panel, &fit, &x).unwrap(), 0.0);
    }

    #[test]
    fn centered_regressor_predicts_mean() {
        let (_, _, eval) = fixture();
        let x = MacroPanel::new(vec!["x".into()], vec![vec![0.4]; 6]).unwrap();
        let filter = (0..5 * 3).map(|v| v as f64 * 0.1 - 0.3).collect();
        let fit = LaggedRegressionFit::new(2, eval, filter, vec![1.0, 2.0, 3.0], vec![0.4]).unwrap();
        for t in 0..6 {
            assert_eq!(predict_curve(&fit, &x, t).unwrap(), vec![1.0, 2.0, 3.0]);
        }
    }

    #[test]
    fn prediction_is_affine_in_centered_regressors() {
        let (_, x, eval) = fixture();
        let filter: Vec<f64> = (0..5 * 3).map(|v| (v as f64 * 0.37).cos()).collect();
        let means = vec![0.2];
        let fit = LaggedRegressionFit::new(2, eval, filter, vec![1.0, 2.0, 3.0], means.clone()).unwrap();
        let doubled = MacroPanel::new(
            vec!["x".into()],
            (0..6)
                .map(|t| vec![means[0] + 2.0 * (x.get(t, 0) - means[0])])
                .collect(),
        )
        .unwrap();
        for t in 0..6 {
            let a = predict_curve(&fit, &x, t).unwrap();
            let b = predict_curve(&fit, &doubled, t).unwrap();
            for k in 0..3 {
                let da = a[k] - fit.mean_curve()[k];
                let db = b[k] - fit.mean_curve()[k];
                assert!((db - 2.0 * da).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn perfect_fit_has_unit_r2() {
        // y_t(tau_i) = mu_i + c_i (x_t - mean), reproduced by a lag-0 filter.
        let grid = MaturityGrid::new(vec![1.0, 2.0, 3.0]).unwrap();
        let xs: Vec<f64> = (0..8).map(|t| (t as f64 * 0.9).sin()).collect();
        let mean_x = xs.iter().sum::<f64>() / 8.0;
        let mu = [1.0, 1.5, 1.7];
        let c = [0.9, 0.5, 0.2];
        let rows = xs
            .iter()
            .map(|x| (0..3).map(|i| Some(mu[i] + c[i] * (x - mean_x))).collect())
            .collect();
        let panel = SparseYieldPanel::new(grid.clone(), rows).unwrap();
        let x = MacroPanel::new(vec!["x".into()], xs.iter().map(|v| vec![*v]).collect()).unwrap();
        let eval = EvalPoints {
            warped: grid.warped_knots(),
            maturities: grid.as_slice().to_vec(),
        };
        let mut filter = vec![0.0; 3 * 3];
        filter[3..6].copy_from_slice(&c);
        let fit = LaggedRegressionFit::new(1, eval, filter, mu.to_vec(), vec![mean_x]).unwrap();
        assert!((r_squared(&panel, &fit, &x).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn constant_panel_has_undefined_r2() {
        let grid = MaturityGrid::new(vec![1.0, 2.0, 3.0]).unwrap();
        let panel = SparseYieldPanel::new(grid.clone(), vec![vec![Some(2.0); 3]; 4]).unwrap();
        let x = MacroPanel::new(vec!["x".into()], vec![vec![1.0]; 4]).unwrap();
        let eval = EvalPoints {
            warped: grid.warped_knots(),
            maturities: grid.as_slice().to_vec(),
        };
        let fit = LaggedRegressionFit::zero(1, eval, vec![2.0; 3], vec![1.0]).unwrap();
        assert!(matches!(r_squared(&panel, &fit, &x), Err(Error::DegenerateTotal)));
    }

    #[test]
    fn r2_needs_maturity_points() {
        let (panel, x, _) = fixture();
        let eval = EvalPoints {
            warped: vec![0.0, 1.0],
            maturities: vec![1.0, 3.0],
        };
        let fit = LaggedRegressionFit::zero(1, eval, vec![0.0; 2], vec![0.0]).unwrap();
        assert!(matches!(r_squared(&panel, &fit, &x), Err(Error::DimensionMismatch(_))));
    }
}
