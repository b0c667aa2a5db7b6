//! Fixtures shared by the benchmarks.

use yieldlag::mv_spectral::RealMatrix;
use yieldlag::simulate::FilterTerm;
use yieldlag::{simulate_lagged_regression, Config, MacroPanel, MaturityGrid, SparseYieldPanel, SyntheticSpec};

pub const US_MATURITIES: [f64; 9] = [1.0 / 12.0, 0.5, 1.0, 2.0, 3.0, 5.0, 7.0, 10.0, 30.0];

/// Monthly-sized synthetic problem: `T` periods, nine maturities, three regressors.
pub fn monthly_scale(horizon: usize, seed: u64) -> (SparseYieldPanel, MacroPanel, Config) {
    let grid = MaturityGrid::new(US_MATURITIES.to_vec()).unwrap();
    let knots = grid.warped_knots();
    let spec = SyntheticSpec {
        horizon,
        series_names: vec!["inflation".into(), "activity".into(), "policy_rate".into()],
        var_coef: RealMatrix {
            dim: 3,
            data: vec![0.85, 0.05, 0.0, 0.0, 0.7, 0.1, 0.05, 0.1, 0.8],
        },
        innov_cov: RealMatrix {
            dim: 3,
            data: vec![1.0, 0.2, 0.1, 0.2, 1.0, 0.3, 0.1, 0.3, 1.0],
        },
        macro_mean: vec![3.0, 0.0, 5.0],
        mean_curve: knots.iter().map(|x| 4.0 + 2.0 * x).collect(),
        filter: vec![FilterTerm {
            lag: 0,
            series: 2,
            values: knots.iter().map(|x| 1.0 - 0.7 * x).collect(),
        }],
        curve_error_sd: 0.2,
        noise_sd: 0.05,
        seed,
        grid,
    };
    let (panel, x, _) = simulate_lagged_regression(&spec).expect("valid spec");
    let config = Config::defaults(panel.horizon(), panel.n_maturities());
    (panel, x, config)
}
