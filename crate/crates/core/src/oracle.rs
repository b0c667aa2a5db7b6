//! Brute-force reference implementations and the built-in self-check suite.
//!
//! The naive routines here evaluate each estimator directly from its
//! definition, with no precomputation or symmetry folding, so they share no
//! code path with the production estimators they are compared against.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cross_spectral::{cross_spectral_density, raw_cross_cov};
use crate::lagreg::{filter_coefficients, FrequencyResponseField};
use crate::model::{FrequencyGrid, MacroPanel, MaturityGrid, SparseYieldPanel};
use crate::mv_spectral::{spectral_density_matrix, AutocovarianceSet, ComplexMatrix, RealMatrix, SpectralDensityField};
use crate::simulate::{simulate_var1, var1_spectral_density, SyntheticSpec};
use crate::smoother::mean_curve_warped;

/// Direct triple sum `(1/2pi) sum_h W_h R_h e^{-ih w}` over all lags.
pub fn naive_spectral_density(acov: &AutocovarianceSet, grid: &FrequencyGrid) -> SpectralDensityField {
    let d = acov.dim();
    let q = acov.span as i64;
    let matrices = grid
        .nodes()
        .map(|omega| {
            let mut data = vec![Complex64::new(0.0, 0.0); d * d];
            for h in -(q - 1)..q {
                let w = 1.0 - h.abs() as f64 / q as f64;
                let r = acov.lag(h);
                let phase = Complex64::new((h as f64 * omega).cos(), -(h as f64 * omega).sin());
                for (z, v) in data.iter_mut().zip(&r.data) {
                    *z += phase * (w * v / (2.0 * PI));
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

/// Cross-spectral density by explicit weighted least squares at every
/// frequency over every raw product, computed from the panels directly.
/// Returns values indexed `[(j * n_eval + k) * N + w]`.
#[allow(clippy::too_many_arguments, clippy::needless_range_loop)]
pub fn naive_cross_spectral(
    panel: &SparseYieldPanel,
    macro_panel: &MacroPanel,
    mean_at_maturities: &[f64],
    macro_means: &[f64],
    span: usize,
    bandwidth: f64,
    grid: &FrequencyGrid,
    eval_warped: &[f64],
) -> Option<Vec<Complex64>> {
    let horizon = panel.horizon() as i64;
    let n_mat = panel.n_maturities();
    let x_knot: Vec<f64> = (0..n_mat).map(|i| i as f64 / (n_mat - 1) as f64).collect();
    let q = span as i64;
    let mut out = Vec::with_capacity(macro_panel.dim() * eval_warped.len() * grid.len());
    for j in 0..macro_panel.dim() {
        for &x0 in eval_warped {
            for omega in grid.nodes() {
                let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
                let (mut t0, mut t1) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
                for h in -(q - 1)..q {
                    let wh = 1.0 - h.abs() as f64 / q as f64;
                    for t in 0..horizon {
                        let s = t + h;
                        if s < 0 || s >= horizon {
                            continue;
                        }
                        for i in 0..n_mat {
                            let Some(y) = panel.get(s as usize, i) else { continue };
                            let v = (x0 - x_knot[i]) / bandwidth;
                            if v.abs() > 1.0 {
                                continue;
                            }
                            let w = wh * 0.75 * (1.0 - v * v);
                            let g = (y - mean_at_maturities[i]) * (macro_panel.get(t as usize, j) - macro_means[j]);
                            let z = Complex64::from_polar(g, -(h as f64) * omega);
                            let dx = x0 - x_knot[i];
                            s0 += w;
                            s1 += w * dx;
                            s2 += w * dx * dx;
                            t0 += z * w;
                            t1 += z * (w * dx);
                        }
                    }
                }
                let det = s0 * s2 - s1 * s1;
                if det <= 1e-12 * s0 * s2 {
                    return None;
                }
                let c0 = (t0 * s2 - t1 * s1) / det;
                out.push(c0 * (span as f64 / (2.0 * PI)));
            }
        }
    }
    Some(out)
}

/// A small randomized estimation problem.
#[derive(Clone, Debug)]
pub struct SmallInstance {
    pub panel: SparseYieldPanel,
    pub macro_panel: MacroPanel,
    pub span: usize,
    pub bandwidth: f64,
    pub eval_warped: Vec<f64>,
}

/// Random instance with `T <= 30`, `I <= 5`, `d <= 2`, `Q <= 4` and about 10%
/// missing quotes.
pub fn small_instance(rng: &mut ChaCha8Rng) -> SmallInstance {
    let horizon = rng.random_range(8..=30);
    let n_mat = rng.random_range(3..=5);
    let d = rng.random_range(1..=2);
    let span = rng.random_range(1..=4);
    let mut maturities = vec![rng.random_range(0.0..1.0)];
    for _ in 1..n_mat {
        let last = *maturities.last().unwrap();
        maturities.push(last + rng.random_range(0.1..5.0));
    }
    let grid = MaturityGrid::new(maturities).unwrap();
    let rows: Vec<Vec<Option<f64>>> = (0..horizon)
        .map(|t| {
            (0..n_mat)
                .map(|i| {
                    // keep the diagonal observed so no row or column is empty
                    let keep = i == t % n_mat || rng.random::<f64>() > 0.1;
                    keep.then(|| rng.random_range(-2.0..6.0))
                })
                .collect()
        })
        .collect();
    let panel = SparseYieldPanel::new(grid, rows).unwrap();
    let macro_rows = (0..horizon)
        .map(|_| (0..d).map(|_| rng.random_range(-3.0..3.0)).collect())
        .collect();
    let macro_panel = MacroPanel::new((0..d).map(|j| format!("x{j}")).collect(), macro_rows).unwrap();
    let spacing = 1.0 / (n_mat - 1) as f64;
    let bandwidth = (2.5 * spacing).min(1.0);
    let mut eval_warped = vec![0.0, 1.0];
    eval_warped.extend((0..3).map(|_| rng.random::<f64>()));
    SmallInstance {
        panel,
        macro_panel,
        span,
        bandwidth,
        eval_warped,
    }
}

/// Largest absolute difference between the precomputed and the naive
/// cross-spectral estimates on one instance.
pub fn cross_spectral_discrepancy(inst: &SmallInstance, grid: &FrequencyGrid) -> crate::Result<f64> {
    let knots = inst.panel.grid().warped_knots();
    let mean = mean_curve_warped(&inst.panel, inst.bandwidth, &knots)?;
    let acov = AutocovarianceSet::estimate(&inst.macro_panel, 1)?;
    let raw = raw_cross_cov(&inst.panel, &inst.macro_panel, &mean, &acov.mean, inst.span)?;
    let fast = cross_spectral_density(&raw, inst.bandwidth, grid, &inst.eval_warped)?;
    let slow = naive_cross_spectral(
        &inst.panel,
        &inst.macro_panel,
        &mean,
        &acov.mean,
        inst.span,
        inst.bandwidth,
        grid,
        &inst.eval_warped,
    )
    .ok_or_else(|| crate::Error::invalid("oracle instance", "singular naive design"))?;
    Ok(fast
        .values
        .iter()
        .zip(&slow)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max))
}

/// Forward transform `B_w = sum_h b_h e^{-ih w}` of scalar coefficients on lags `-L..=L`.
pub fn forward_response(coefs: &[f64], grid: &FrequencyGrid) -> FrequencyResponseField {
    let l = (coefs.len() / 2) as i64;
    let values = grid
        .nodes()
        .map(|omega| {
            coefs
                .iter()
                .enumerate()
                .map(|(idx, b)| Complex64::from_polar(*b, -((idx as i64 - l) as f64) * omega))
                .sum()
        })
        .collect();
    FrequencyResponseField {
        grid: *grid,
        eval_warped: vec![0.0],
        n_series: 1,
        values,
        condition: vec![1.0; grid.len()],
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }
}

pub type SpectralEstimator = dyn Fn(&AutocovarianceSet, &FrequencyGrid) -> SpectralDensityField;

fn two_series_spec(horizon: usize, seed: u64) -> SyntheticSpec {
    let grid = MaturityGrid::new(vec![1.0, 2.0, 3.0]).unwrap();
    SyntheticSpec {
        horizon,
        series_names: vec!["a".into(), "b".into()],
        var_coef: RealMatrix {
            dim: 2,
            data: vec![0.5, 0.4, -0.2, 0.3],
        },
        innov_cov: RealMatrix {
            dim: 2,
            data: vec![1.0, 0.3, 0.3, 0.5],
        },
        macro_mean: vec![1.0, -2.0],
        mean_curve: vec![0.0; 3],
        filter: vec![],
        curve_error_sd: 0.0,
        noise_sd: 0.0,
        seed,
        grid,
    }
}

/// Inverse transform of the Bartlett estimate must return `W_h R_h` for
/// every `|h| < Q`, and the estimate must be Hermitian and conjugate
/// symmetric across frequency.
pub fn check_bartlett_symmetry(estimator: &SpectralEstimator, seed: u64) -> CheckResult {
    let spec = two_series_spec(200, seed);
    let panel = simulate_var1(&spec).expect("valid spec");
    let span = 8;
    let acov = AutocovarianceSet::estimate(&panel, span).expect("span below horizon");
    let grid = FrequencyGrid::new(32).unwrap();
    let f = estimator(&acov, &grid);
    let mut worst: f64 = 0.0;
    for h in -(span as i64 - 1)..span as i64 {
        let w = 1.0 - h.abs() as f64 / span as f64;
        let r = acov.lag(h);
        for (idx, rv) in r.data.iter().enumerate() {
            let rec: Complex64 = (0..grid.len())
                .map(|k| f.matrices[k].data[idx] * Complex64::from_polar(1.0, h as f64 * grid.omega(k)))
                .sum::<Complex64>()
                * grid.weight();
            worst = worst.max((rec - w * rv).norm());
        }
    }
    let herm = f.max_hermitian_defect();
    let mirror = f.max_mirror_defect();
    CheckResult::new(
        "bartlett symmetry and inverse transform",
        worst <= 1e-10 && herm <= 1e-12 && mirror <= 1e-12,
        format!("lag recovery {worst:.2e}, hermitian {herm:.2e}, mirror {mirror:.2e}"),
    )
}

/// Bartlett estimate against the closed-form VAR(1) density for a
/// two-dimensional process, averaged over frequencies.
pub fn check_var1_closed_form(estimator: &SpectralEstimator, seed: u64) -> CheckResult {
    let horizon = 40_000;
    let spec = two_series_spec(horizon, seed);
    let panel = simulate_var1(&spec).expect("valid spec");
    let span = crate::model::ceil_sqrt(horizon);
    let acov = AutocovarianceSet::estimate(&panel, span).expect("span below horizon");
    let grid = FrequencyGrid::new(128).unwrap();
    let est = estimator(&acov, &grid);
    let exact = var1_spectral_density(&spec.var_coef, &spec.innov_cov, &grid).expect("stationary");
    let mean_rel: f64 = (0..grid.len())
        .map(|k| {
            let diff: f64 = est.matrices[k]
                .data
                .iter()
                .zip(&exact.matrices[k].data)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum();
            let norm: f64 = exact.matrices[k].data.iter().map(|b| b.norm_sqr()).sum();
            (diff / norm).sqrt()
        })
        .sum::<f64>()
        / grid.len() as f64;
    CheckResult::new(
        "bartlett vs closed-form VAR(1)",
        mean_rel <= 0.1,
        format!("mean relative Frobenius error {mean_rel:.3} (limit 0.1)"),
    )
}

pub fn check_cross_spectral_oracle(seed: u64, instances: usize) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = FrequencyGrid::new(64).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let inst = small_instance(&mut rng);
        match cross_spectral_discrepancy(&inst, &grid) {
            Ok(d) => worst = worst.max(d),
            Err(e) => return CheckResult::new("cross-spectral precompute vs naive", false, e.to_string()),
        }
    }
    CheckResult::new(
        "cross-spectral precompute vs naive",
        worst <= 1e-10,
        format!("max deviation {worst:.2e} over {instances} instances"),
    )
}

pub fn check_quadrature_round_trip(seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coefs: Vec<f64> = (0..11).map(|_| rng.random_range(-1.0..1.0)).collect();
    let grid = FrequencyGrid::new(512).unwrap();
    let resp = forward_response(&coefs, &grid);
    let est = match filter_coefficients(&resp, 12) {
        Ok(e) => e,
        Err(e) => return CheckResult::new("filter quadrature round trip", false, e.to_string()),
    };
    let worst = est
        .values
        .iter()
        .enumerate()
        .map(|(idx, v)| {
            let h = idx as i64 - 12;
            let expect = if h.abs() <= 5 { coefs[(h + 5) as usize] } else { 0.0 };
            (v - expect).abs()
        })
        .fold(0.0, f64::max);
    CheckResult::new(
        "filter quadrature round trip",
        worst <= 1e-12,
        format!("max deviation {worst:.2e}"),
    )
}

/// The full self-check suite.
pub fn run_checks(seed: u64) -> Vec<CheckResult> {
    let production: &SpectralEstimator = &|a, g| spectral_density_matrix(a, g);
    let mut results = vec![
        check_cross_spectral_oracle(seed, 100),
        check_quadrature_round_trip(seed),
        check_bartlett_symmetry(production, seed),
        check_var1_closed_form(production, seed),
    ];
    // production Bartlett path against the naive triple sum
    let spec = two_series_spec(300, seed);
    let panel = simulate_var1(&spec).expect("valid spec");
    let acov = AutocovarianceSet::estimate(&panel, 17).expect("span below horizon");
    let grid = FrequencyGrid::new(64).unwrap();
    let a = spectral_density_matrix(&acov, &grid);
    let b = naive_spectral_density(&acov, &grid);
    let worst = a
        .matrices
        .iter()
        .zip(&b.matrices)
        .flat_map(|(x, y)| x.data.iter().zip(&y.data).map(|(u, v)| (u - v).norm()))
        .fold(0.0, f64::max);
    results.push(CheckResult::new(
        "bartlett production vs naive sum",
        worst <= 1e-12,
        format!("max deviation {worst:.2e}"),
    ));
    results
}
