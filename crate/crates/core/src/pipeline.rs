//! End-to-end estimation: mean curve, regressor spectrum, cross-spectrum,
//! frequency response, filter, prediction and R^2.

use std::fmt;

use log::debug;

use crate::cross_spectral::{cross_spectral_density, raw_cross_cov, CrossSpectralField};
use crate::error::Error;
use crate::lagreg::{filter_coefficients, fitted_panel, frequency_response, r_squared, FrequencyResponseField};
use crate::model::{Config, EvalPoints, LaggedRegressionFit, MacroPanel, SparseYieldPanel};
use crate::mv_spectral::{spectral_density_matrix, AutocovarianceSet, SpectralDensityField};
use crate::smoother::mean_curve_warped;
use crate::warp::{build_warp, Warp};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Validate,
    MeanCurve,
    SpectralDensity,
    RawCrossCovariance,
    CrossSpectral,
    FrequencyResponse,
    FilterCoefficients,
    Prediction,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Validate => "validate",
            Stage::MeanCurve => "mean-curve",
            Stage::SpectralDensity => "spectral-density",
            Stage::RawCrossCovariance => "raw-cross-covariance",
            Stage::CrossSpectral => "cross-spectral",
            Stage::FrequencyResponse => "frequency-response",
            Stage::FilterCoefficients => "filter-coefficients",
            Stage::Prediction => "prediction",
        };
        f.write_str(name)
    }
}

#[derive(Debug, thiserror::Error)]
#[error("[{stage}] {source}{}", hint(source))]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

fn hint(e: &Error) -> &'static str {
    match e {
        Error::SingularDesign { .. } => " (increase the bandwidth)",
        Error::IllConditioned { .. } => " (try a different Bartlett span or drop collinear series)",
        _ => "",
    }
}

trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T, PipelineError>;
}

impl<T> StageExt<T> for crate::Result<T> {
    fn stage(self, stage: Stage) -> Result<T, PipelineError> {
        self.map_err(|source| PipelineError { stage, source })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostics {
    pub max_imaginary: f64,
    pub tail_mass: f64,
    pub condition_numbers: Vec<f64>,
}

/// Everything produced by one run.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub config: Config,
    pub warp: Warp,
    pub horizon: usize,
    pub series_names: Vec<String>,
    pub maturities: Vec<f64>,
    pub spectral: SpectralDensityField,
    pub cross: CrossSpectralField,
    pub response: FrequencyResponseField,
    /// Filter on the evaluation grid.
    pub fit: LaggedRegressionFit,
    /// Filter at the quoted maturities, used for prediction and R^2.
    pub knot_fit: LaggedRegressionFit,
    /// Fitted values `[t][i]` at the quoted maturities.
    pub fitted: Vec<Vec<f64>>,
    pub r_squared: f64,
    pub diagnostics: Diagnostics,
}

/// `n_eval` points equispaced in warped coordinates, mapped through the warp.
pub fn evaluation_grid(warp: &Warp, n_eval: usize) -> crate::Result<EvalPoints> {
    let warped: Vec<f64> = (0..n_eval).map(|k| k as f64 / (n_eval - 1) as f64).collect();
    let maturities = warped.iter().map(|&x| warp.apply(x)).collect::<crate::Result<_>>()?;
    Ok(EvalPoints { warped, maturities })
}

fn split_fit(
    filter: &[f64],
    max_lag: usize,
    d: usize,
    sizes: (usize, usize),
    mean: &[f64],
    macro_means: &[f64],
    evals: (EvalPoints, EvalPoints),
) -> crate::Result<(LaggedRegressionFit, LaggedRegressionFit)> {
    let (n_grid, n_knot) = sizes;
    let total = n_grid + n_knot;
    let mut grid_filter = Vec::with_capacity((2 * max_lag + 1) * n_grid * d);
    let mut knot_filter = Vec::with_capacity((2 * max_lag + 1) * n_knot * d);
    for row in filter.chunks(total * d) {
        grid_filter.extend_from_slice(&row[..n_grid * d]);
        knot_filter.extend_from_slice(&row[n_grid * d..]);
    }
    let grid_fit = LaggedRegressionFit::new(
        max_lag,
        evals.0,
        grid_filter,
        mean[..n_grid].to_vec(),
        macro_means.to_vec(),
    )?;
    let knot_fit = LaggedRegressionFit::new(
        max_lag,
        evals.1,
        knot_filter,
        mean[n_grid..].to_vec(),
        macro_means.to_vec(),
    )?;
    Ok((grid_fit, knot_fit))
}

pub fn analyze(panel: &SparseYieldPanel, macro_panel: &MacroPanel, config: &Config) -> Result<Analysis, PipelineError> {
    config.validate().stage(Stage::Validate)?;
    if panel.horizon() != macro_panel.horizon() {
        return Err(Error::DimensionMismatch(format!(
            "yield panel has {} periods, macro panel has {}",
            panel.horizon(),
            macro_panel.horizon()
        )))
        .stage(Stage::Validate);
    }
    let warp = build_warp(panel.grid()).stage(Stage::Validate)?;
    let grid = config.frequency_grid().stage(Stage::Validate)?;

    let eval = evaluation_grid(&warp, config.n_eval).stage(Stage::Validate)?;
    let knots = EvalPoints {
        warped: panel.grid().warped_knots(),
        maturities: panel.grid().as_slice().to_vec(),
    };
    let all_warped: Vec<f64> = eval.warped.iter().chain(&knots.warped).copied().collect();
    let n_grid = eval.len();

    debug!("estimating mean curve at {} points", all_warped.len());
    let mean = mean_curve_warped(panel, config.bandwidth_mean, &all_warped).stage(Stage::MeanCurve)?;
    let mean_at_knots = &mean[n_grid..];

    debug!("Bartlett spectral density with span {}", config.bartlett_span);
    let acov = AutocovarianceSet::estimate(macro_panel, config.bartlett_span).stage(Stage::SpectralDensity)?;
    let spectral = spectral_density_matrix(&acov, &grid);

    let raw = raw_cross_cov(panel, macro_panel, mean_at_knots, &acov.mean, config.bartlett_span)
        .stage(Stage::RawCrossCovariance)?;
    debug!("smoothing cross-spectral density on {} frequencies", grid.len());
    let cross_all =
        cross_spectral_density(&raw, config.bandwidth_cross, &grid, &all_warped).stage(Stage::CrossSpectral)?;

    let response_all =
        frequency_response(&cross_all, &spectral, config.cond_threshold).stage(Stage::FrequencyResponse)?;
    let filter = filter_coefficients(&response_all, config.max_lag).stage(Stage::FilterCoefficients)?;

    let (mut fit, mut knot_fit) = split_fit(
        &filter.values,
        config.max_lag,
        macro_panel.dim(),
        (n_grid, knots.len()),
        &mean,
        &acov.mean,
        (eval, knots),
    )
    .stage(Stage::FilterCoefficients)?;

    let fitted = fitted_panel(panel, &knot_fit, macro_panel).stage(Stage::Prediction)?;
    let r2 = r_squared(panel, &knot_fit, macro_panel).stage(Stage::Prediction)?;
    fit.r_squared = Some(r2);
    knot_fit.r_squared = Some(r2);

    let diagnostics = Diagnostics {
        max_imaginary: filter.max_imag,
        tail_mass: fit.tail_mass(),
        condition_numbers: response_all.condition.clone(),
    };
    let cross = restrict_cross(&cross_all, n_grid);
    let response = restrict_response(&response_all, n_grid);

    Ok(Analysis {
        config: config.clone(),
        warp,
        horizon: panel.horizon(),
        series_names: macro_panel.names().to_vec(),
        maturities: panel.grid().as_slice().to_vec(),
        spectral,
        cross,
        response,
        fit,
        knot_fit,
        fitted,
        r_squared: r2,
        diagnostics,
    })
}

fn restrict_cross(field: &CrossSpectralField, n_keep: usize) -> CrossSpectralField {
    let n = field.grid.len();
    let n_eval = field.n_eval();
    let mut values = Vec::with_capacity(field.n_series * n_keep * n);
    for j in 0..field.n_series {
        let start = j * n_eval * n;
        values.extend_from_slice(&field.values[start..start + n_keep * n]);
    }
    CrossSpectralField {
        grid: field.grid,
        eval_warped: field.eval_warped[..n_keep].to_vec(),
        n_series: field.n_series,
        values,
    }
}

fn restrict_response(field: &FrequencyResponseField, n_keep: usize) -> FrequencyResponseField {
    let d = field.n_series;
    let n_eval = field.n_eval();
    let mut values = Vec::with_capacity(field.grid.len() * n_keep * d);
    for w in 0..field.grid.len() {
        let start = w * n_eval * d;
        values.extend_from_slice(&field.values[start..start + n_keep * d]);
    }
    FrequencyResponseField {
        grid: field.grid,
        eval_warped: field.eval_warped[..n_keep].to_vec(),
        n_series: d,
        values,
        condition: field.condition.clone(),
    }
}
