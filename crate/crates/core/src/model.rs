//! Shared domain types: maturity grids, data panels, frequency grids,
//! configuration and the fitted lagged-regression model.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Quoted maturities (in years), strictly increasing.
#[derive(Clone, Debug, PartialEq)]
pub struct MaturityGrid {
    maturities: Vec<f64>,
}

impl MaturityGrid {
    /// At least two maturities are required to form a grid; estimators that
    /// need a third (the warp and everything built on it) check that separately.
    pub fn new(maturities: Vec<f64>) -> Result<Self> {
        if maturities.len() < 2 {
            return Err(Error::invalid(
                "maturity grid",
                format!("need at least 2 maturities, got {}", maturities.len()),
            ));
        }
        if let Some(m) = maturities.iter().find(|m| !m.is_finite() || **m < 0.0) {
            return Err(Error::invalid(
                "maturity grid",
                format!("maturities must be finite and >= 0, got {m}"),
            ));
        }
        if let Some(w) = maturities.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::invalid(
                "maturity grid",
                format!("maturities must be strictly increasing ({} followed by {})", w[0], w[1]),
            ));
        }
        Ok(Self { maturities })
    }

    pub fn len(&self) -> usize {
        self.maturities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maturities.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.maturities
    }

    pub fn min(&self) -> f64 {
        self.maturities[0]
    }

    pub fn max(&self) -> f64 {
        self.maturities[self.maturities.len() - 1]
    }

    /// Warped coordinates of the knots, `(i - 1) / (I - 1)`.
    pub fn warped_knots(&self) -> Vec<f64> {
        let last = (self.len() - 1) as f64;
        (0..self.len()).map(|i| i as f64 / last).collect()
    }
}

/// T x I panel of noisy curve observations; `None` marks a missing quote.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseYieldPanel {
    grid: MaturityGrid,
    values: Vec<f64>,
    observed: Vec<bool>,
    horizon: usize,
}

impl SparseYieldPanel {
    pub fn new(grid: MaturityGrid, rows: Vec<Vec<Option<f64>>>) -> Result<Self> {
        let n = grid.len();
        let horizon = rows.len();
        if horizon == 0 {
            return Err(Error::invalid("yield panel", "no observation rows"));
        }
        let mut values = Vec::with_capacity(horizon * n);
        let mut observed = Vec::with_capacity(horizon * n);
        for (t, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::invalid(
                    "yield panel",
                    format!("row {} has {} entries, expected {n}", t + 1, row.len()),
                ));
            }
            if row.iter().all(Option::is_none) {
                return Err(Error::invalid(
                    "yield panel",
                    format!("row {} has no observed entry", t + 1),
                ));
            }
            for (i, v) in row.iter().enumerate() {
                match v {
                    Some(v) if !v.is_finite() => {
                        return Err(Error::invalid(
                            "yield panel",
                            format!("non-finite value at row {}, column {}", t + 1, i + 1),
                        ))
                    }
                    Some(v) => {
                        values.push(*v);
                        observed.push(true);
                    }
                    None => {
                        values.push(0.0);
                        observed.push(false);
                    }
                }
            }
        }
        for i in 0..n {
            if !(0..horizon).any(|t| observed[t * n + i]) {
                return Err(Error::invalid(
                    "yield panel",
                    format!(
                        "column {} (maturity {}) has no observed entry",
                        i + 1,
                        grid.as_slice()[i]
                    ),
                ));
            }
        }
        Ok(Self {
            grid,
            values,
            observed,
            horizon,
        })
    }

    pub fn grid(&self) -> &MaturityGrid {
        &self.grid
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n_maturities(&self) -> usize {
        self.grid.len()
    }

    /// Observation at time `t` (0-based) and maturity index `i`.
    pub fn get(&self, t: usize, i: usize) -> Option<f64> {
        let idx = t * self.grid.len() + i;
        self.observed[idx].then(|| self.values[idx])
    }

    pub fn row(&self, t: usize) -> impl Iterator<Item = Option<f64>> + '_ {
        (0..self.grid.len()).map(move |i| self.get(t, i))
    }

    pub fn n_observed(&self) -> usize {
        self.observed.iter().filter(|o| **o).count()
    }
}

/// T x d panel of scalar regressor series.
#[derive(Clone, Debug, PartialEq)]
pub struct MacroPanel {
    names: Vec<String>,
    values: Vec<f64>,
    horizon: usize,
}

impl MacroPanel {
    pub fn new(names: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let d = names.len();
        if d == 0 {
            return Err(Error::invalid("macro panel", "no series"));
        }
        if rows.is_empty() {
            return Err(Error::invalid("macro panel", "no observation rows"));
        }
        let mut values = Vec::with_capacity(rows.len() * d);
        for (t, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::invalid(
                    "macro panel",
                    format!("row {} has {} entries, expected {d}", t + 1, row.len()),
                ));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::invalid(
                    "macro panel",
                    format!("non-finite value at row {}, series {}", t + 1, names[j]),
                ));
            }
            values.extend_from_slice(row);
        }
        Ok(Self {
            names,
            values,
            horizon: rows.len(),
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn row(&self, t: usize) -> &[f64] {
        let d = self.dim();
        &self.values[t * d..(t + 1) * d]
    }

    pub fn get(&self, t: usize, j: usize) -> f64 {
        self.values[t * self.dim() + j]
    }

    pub fn series(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.horizon).map(move |t| self.get(t, j))
    }
}

/// Equispaced frequency nodes `omega_k = -pi + 2 pi k / N` on `[-pi, pi)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrequencyGrid {
    size: usize,
}

impl FrequencyGrid {
    pub fn new(size: usize) -> Result<Self> {
        if size < 2 || !size.is_multiple_of(2) {
            return Err(Error::invalid(
                "frequency grid",
                format!("size must be even and >= 2, got {size}"),
            ));
        }
        Ok(Self { size })
    }

    /// Grid large enough to integrate `e^{i h omega}` exactly for `|h| <= max_lag`.
    pub fn for_lag(size: usize, max_lag: usize) -> Result<Self> {
        let grid = Self::new(size)?;
        grid.check_lag(max_lag)?;
        Ok(grid)
    }

    pub fn check_lag(&self, max_lag: usize) -> Result<()> {
        if self.size < 2 * max_lag + 2 {
            return Err(Error::invalid(
                "frequency grid",
                format!(
                    "size {} is below 2H+2 = {} for lag H = {max_lag}",
                    self.size,
                    2 * max_lag + 2
                ),
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn omega(&self, k: usize) -> f64 {
        -PI + 2.0 * PI * k as f64 / self.size as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.size).map(|k| self.omega(k))
    }

    /// Quadrature weight of each node.
    pub fn weight(&self) -> f64 {
        2.0 * PI / self.size as f64
    }

    /// Index of the node at `-omega_k` (modulo `2 pi`; `-pi` pairs with itself).
    pub fn mirror(&self, k: usize) -> usize {
        (self.size - k) % self.size
    }
}

/// Evaluation points along the curve, in warped and maturity coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalPoints {
    pub warped: Vec<f64>,
    pub maturities: Vec<f64>,
}

impl EvalPoints {
    pub fn len(&self) -> usize {
        self.warped.len()
    }

    pub fn is_empty(&self) -> bool {
        self.warped.is_empty()
    }
}

/// Estimation settings. Bandwidths are in warped coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub bandwidth_mean: f64,
    pub bandwidth_cross: f64,
    pub bartlett_span: usize,
    pub freq_grid_size: usize,
    pub max_lag: usize,
    pub n_eval: usize,
    pub cond_threshold: f64,
    pub seed: u64,
}

impl Config {
    /// Defaults for a panel of `horizon` periods on `n_maturities` quotes:
    /// span `ceil(sqrt(T))`, bandwidths of two knot spacings.
    pub fn defaults(horizon: usize, n_maturities: usize) -> Self {
        let bandwidth = if n_maturities > 2 {
            (2.0 / (n_maturities - 1) as f64).min(1.0)
        } else {
            1.0
        };
        Self {
            bandwidth_mean: bandwidth,
            bandwidth_cross: bandwidth,
            bartlett_span: ceil_sqrt(horizon).max(1),
            freq_grid_size: 512,
            max_lag: 12,
            n_eval: 101,
            cond_threshold: 1e8,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, b) in [
            ("bandwidth_mean", self.bandwidth_mean),
            ("bandwidth_cross", self.bandwidth_cross),
        ] {
            if !(b > 0.0 && b <= 1.0) {
                return Err(Error::invalid("config", format!("{name} must lie in (0, 1], got {b}")));
            }
        }
        if self.bartlett_span < 1 {
            return Err(Error::invalid("config", "bartlett_span must be >= 1"));
        }
        if self.n_eval < 2 {
            return Err(Error::invalid(
                "config",
                format!("n_eval must be >= 2, got {}", self.n_eval),
            ));
        }
        if !(self.cond_threshold > 1.0) {
            return Err(Error::invalid(
                "config",
                format!("cond_threshold must exceed 1, got {}", self.cond_threshold),
            ));
        }
        FrequencyGrid::for_lag(self.freq_grid_size, self.max_lag)?;
        Ok(())
    }

    pub fn frequency_grid(&self) -> Result<FrequencyGrid> {
        FrequencyGrid::for_lag(self.freq_grid_size, self.max_lag)
    }
}

/// Smallest `q` with `q * q >= n`.
pub fn ceil_sqrt(n: usize) -> usize {
    let mut q = (n as f64).sqrt() as usize;
    while q * q < n {
        q += 1;
    }
    while q > 0 && (q - 1) * (q - 1) >= n {
        q -= 1;
    }
    q
}

/// Estimated filter `b_h^{(j)}(tau)` on lags `-H..=H`, together with the
/// means needed to reconstruct the intercept.
#[derive(Clone, Debug, PartialEq)]
pub struct LaggedRegressionFit {
    pub(crate) max_lag: usize,
    pub(crate) n_series: usize,
    pub(crate) eval: EvalPoints,
    /// Indexed `[(h + H) * n_eval * d + k * d + j]`.
    pub(crate) filter: Vec<f64>,
    pub(crate) mean_curve: Vec<f64>,
    pub(crate) macro_means: Vec<f64>,
    pub r_squared: Option<f64>,
}

impl LaggedRegressionFit {
    pub fn new(
        max_lag: usize,
        eval: EvalPoints,
        filter: Vec<f64>,
        mean_curve: Vec<f64>,
        macro_means: Vec<f64>,
    ) -> Result<Self> {
        let n_eval = eval.len();
        let d = macro_means.len();
        if mean_curve.len() != n_eval {
            return Err(Error::DimensionMismatch(format!(
                "mean curve has {} values for {n_eval} evaluation points",
                mean_curve.len()
            )));
        }
        if filter.len() != (2 * max_lag + 1) * n_eval * d {
            return Err(Error::DimensionMismatch(format!(
                "filter has {} values, expected {} lags x {n_eval} points x {d} series",
                filter.len(),
                2 * max_lag + 1
            )));
        }
        if filter.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("lagged regression fit", "non-finite filter coefficient"));
        }
        Ok(Self {
            max_lag,
            n_series: d,
            eval,
            filter,
            mean_curve,
            macro_means,
            r_squared: None,
        })
    }

    /// A fit whose filter is identically zero.
    pub fn zero(max_lag: usize, eval: EvalPoints, mean_curve: Vec<f64>, macro_means: Vec<f64>) -> Result<Self> {
        let len = (2 * max_lag + 1) * eval.len() * macro_means.len();
        Self::new(max_lag, eval, vec![0.0; len], mean_curve, macro_means)
    }

    pub fn max_lag(&self) -> usize {
        self.max_lag
    }

    pub fn n_series(&self) -> usize {
        self.n_series
    }

    pub fn eval_points(&self) -> &EvalPoints {
        &self.eval
    }

    pub fn mean_curve(&self) -> &[f64] {
        &self.mean_curve
    }

    pub fn macro_means(&self) -> &[f64] {
        &self.macro_means
    }

    fn index(&self, lag: i64, k: usize, j: usize) -> usize {
        debug_assert!(lag.unsigned_abs() as usize <= self.max_lag);
        let row = (lag + self.max_lag as i64) as usize;
        (row * self.eval.len() + k) * self.n_series + j
    }

    /// Coefficient `b_h^{(j)}` at evaluation point `k`.
    pub fn coef(&self, lag: i64, k: usize, j: usize) -> f64 {
        self.filter[self.index(lag, k, j)]
    }

    pub fn lags(&self) -> std::ops::RangeInclusive<i64> {
        -(self.max_lag as i64)..=self.max_lag as i64
    }

    /// `a(tau) = mu_Y(tau) - sum_j sum_h b_h^{(j)}(tau) mu_X^{(j)}`.
    pub fn intercept(&self) -> Vec<f64> {
        (0..self.eval.len())
            .map(|k| {
                let mut a = self.mean_curve[k];
                for lag in self.lags() {
                    for (j, mx) in self.macro_means.iter().enumerate() {
                        a -= self.coef(lag, k, j) * mx;
                    }
                }
                a
            })
            .collect()
    }

    /// Discrete L2 norm of the lag-`h` coefficients over the selected
    /// evaluation points and all series: `sqrt(mean_k sum_j b^2)`.
    pub fn lag_norm(&self, lag: i64, points: &[usize]) -> f64 {
        if points.is_empty() {
            return 0.0;
        }
        let ss: f64 = points
            .iter()
            .flat_map(|&k| (0..self.n_series).map(move |j| (k, j)))
            .map(|(k, j)| self.coef(lag, k, j).powi(2))
            .sum();
        (ss / points.len() as f64).sqrt()
    }

    /// Truncation diagnostic: summed norms of the two outermost lag pairs.
    pub fn tail_mass(&self) -> f64 {
        let all: Vec<usize> = (0..self.eval.len()).collect();
        let h = self.max_lag as i64;
        let mut lags = vec![h, -h];
        if h >= 2 {
            lags.extend([h - 1, 1 - h]);
        }
        lags.iter().map(|&l| self.lag_norm(l, &all)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_duplicates_and_negatives() {
        assert!(MaturityGrid::new(vec![1.0, 1.0, 2.0]).is_err());
        assert!(MaturityGrid::new(vec![-1.0, 1.0, 2.0]).is_err());
        assert!(MaturityGrid::new(vec![1.0, f64::NAN, 2.0]).is_err());
        let err = MaturityGrid::new(vec![2.0, 1.0]).unwrap_err().to_string();
        assert!(err.contains("strictly increasing"), "{err}");
    }

    #[test]
    fn panel_rejects_empty_rows_and_columns() {
        let grid = MaturityGrid::new(vec![1.0, 2.0, 3.0]).unwrap();
        let err = SparseYieldPanel::new(grid.clone(), vec![vec![None, None, None]]).unwrap_err();
        assert!(err.to_string().contains("row 1"));
        let err = SparseYieldPanel::new(grid.clone(), vec![vec![Some(1.0), Some(1.0), None]]).unwrap_err();
        assert!(err.to_string().contains("column 3"));
        let err = SparseYieldPanel::new(grid, vec![vec![Some(1.0), Some(f64::INFINITY), Some(1.0)]]).unwrap_err();
        assert!(err.to_string().contains("non-finite"));
    }

    #[test]
    fn macro_panel_accessors() {
        let p = MacroPanel::new(vec!["a".into(), "b".into()], vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(p.row(1), &[3.0, 4.0]);
        assert_eq!(p.series(0).collect::<Vec<_>>(), vec![1.0, 3.0]);
        assert!(MacroPanel::new(vec!["a".into()], vec![vec![f64::NAN]]).is_err());
    }

    #[test]
    fn frequency_grid_nodes_and_mirror() {
        let g = FrequencyGrid::new(8).unwrap();
        assert_eq!(g.omega(0), -PI);
        assert!((g.omega(4)).abs() < 1e-15);
        assert_eq!(g.mirror(0), 0);
        assert_eq!(g.mirror(1), 7);
        assert!((g.omega(1) + g.omega(7)).abs() < 1e-15);
        assert!(FrequencyGrid::new(7).is_err());
        assert!(FrequencyGrid::for_lag(8, 4).is_err());
        assert!(FrequencyGrid::for_lag(10, 4).is_ok());
    }

    #[test]
    fn default_config_follows_span_rule() {
        let c = Config::defaults(192, 9);
        assert_eq!(c.bartlett_span, 14);
        assert_eq!(c.bandwidth_mean, 0.25);
        assert_eq!(c.n_eval, 101);
        c.validate().unwrap();
        assert_eq!(ceil_sqrt(196), 14);
        assert_eq!(ceil_sqrt(197), 15);
        assert_eq!(ceil_sqrt(1), 1);
    }

    #[test]
    fn config_validation_names_field() {
        let mut c = Config::defaults(100, 5);
        c.bandwidth_cross = 1.5;
        assert!(c.validate().unwrap_err().to_string().contains("bandwidth_cross"));
        let mut c = Config::defaults(100, 5);
        c.cond_threshold = 1.0;
        assert!(c.validate().unwrap_err().to_string().contains("cond_threshold"));
        let mut c = Config::defaults(100, 5);
        c.freq_grid_size = 20;
        assert!(c.validate().is_err());
    }

    #[test]
    fn intercept_from_means() {
        let eval = EvalPoints {
            warped: vec![0.0, 1.0],
            maturities: vec![1.0, 2.0],
        };
        // H = 1, d = 1: only b_0 nonzero, equal to 2 at both points.
        let mut filter = vec![0.0; 3 * 2];
        filter[2] = 2.0;
        filter[3] = 2.0;
        let fit = LaggedRegressionFit::new(1, eval, filter, vec![5.0, 6.0], vec![1.5]).unwrap();
        assert_eq!(fit.coef(0, 1, 0), 2.0);
        assert_eq!(fit.intercept(), vec![2.0, 3.0]);
    }
}
