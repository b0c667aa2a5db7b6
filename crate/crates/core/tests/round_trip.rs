use yieldlag::io::{load_macro_csv, load_yields_csv, write_results, write_simulation, ResultBundle, RESULT_FILES};
use yieldlag::{analyze, simulate_lagged_regression, Config, GroundTruth, SyntheticSpec};

#[test]
fn simulated_files_reload_and_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = SyntheticSpec::recovery(17);
    spec.horizon = 400;
    let (panel, x, truth) = simulate_lagged_regression(&spec).unwrap();
    write_simulation(dir.path(), &panel, &x, &truth).unwrap();

    let panel2 = load_yields_csv(dir.path().join("yields.csv")).unwrap();
    let x2 = load_macro_csv(dir.path().join("macro.csv")).unwrap();
    assert_eq!(panel, panel2);
    assert_eq!(x, x2);
    let truth2: GroundTruth =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("truth.json")).unwrap()).unwrap();
    assert_eq!(truth, truth2);

    let config = Config::defaults(panel2.horizon(), panel2.n_maturities());
    let analysis = analyze(&panel2, &x2, &config).unwrap();
    assert!(analysis.r_squared > 0.5);
    let bundle = ResultBundle::new(&analysis, &panel2, vec![]);
    let out = dir.path().join("results");
    let written = write_results(&bundle, &out).unwrap();
    assert_eq!(written.len(), RESULT_FILES.len());
    let fitted = std::fs::read_to_string(out.join("fitted.csv")).unwrap();
    assert_eq!(fitted.lines().count(), 1 + panel2.n_observed());
}

#[test]
fn noiseless_fit_tracks_the_signal() {
    let mut spec = SyntheticSpec::recovery(18);
    spec.curve_error_sd = 0.0;
    spec.noise_sd = 0.0;
    let (panel, x, truth) = simulate_lagged_regression(&spec).unwrap();
    let config = Config::defaults(panel.horizon(), panel.n_maturities());
    let analysis = analyze(&panel, &x, &config).unwrap();
    let mut worst: f64 = 0.0;
    for t in 12..panel.horizon() - 12 {
        for i in 0..panel.n_maturities() {
            worst = worst.max((analysis.fitted[t][i] - truth.signal[t][i]).abs());
        }
    }
    // the signal has unit scale; the filter-recovery tolerance is 20%
    assert!(worst < 0.2, "{worst}");
    assert!(analysis.r_squared > 0.95);
}
