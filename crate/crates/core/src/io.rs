//! CSV panels, key-value configuration files and result bundles.
//!
//! Numbers are written in shortest round-trip decimal form, with `,`
//! separators and LF line endings.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{Config, MacroPanel, MaturityGrid, SparseYieldPanel};
use crate::mv_spectral::RealMatrix;
use crate::pipeline::Analysis;
use crate::simulate::{FilterTerm, GroundTruth, SyntheticSpec};

/// Shortest decimal string that parses back to exactly `v`.
pub fn fmt_num(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-5 || v.abs() >= 1e16) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

fn parse_error(path: &str, line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        column,
        message: message.into(),
    }
}

fn read_records(text: &str, source: &str) -> Result<Vec<(usize, Vec<String>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_error(source, line, 0, e.to_string())
        })?;
        let line = record.position().map_or(out.len() + 1, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        out.push((line, record.iter().map(str::to_string).collect()));
    }
    if out.is_empty() {
        return Err(parse_error(source, 1, 1, "file is empty"));
    }
    Ok(out)
}

fn parse_number(cell: &str, source: &str, line: usize, column: usize) -> Result<f64> {
    let v: f64 = cell
        .parse()
        .map_err(|_| parse_error(source, line, column, format!("cannot parse {cell:?} as a number")))?;
    if !v.is_finite() {
        return Err(parse_error(source, line, column, format!("non-finite value {cell:?}")));
    }
    Ok(v)
}

/// Parse a yield panel: header of maturities (years), one row per period,
/// empty cells for missing quotes.
pub fn parse_yields(text: &str, source: &str) -> Result<SparseYieldPanel> {
    let records = read_records(text, source)?;
    let (header_line, header) = &records[0];
    let maturities = header
        .iter()
        .enumerate()
        .map(|(c, cell)| parse_number(cell, source, *header_line, c + 1))
        .collect::<Result<Vec<_>>>()?;
    if let Some(c) = maturities.windows(2).position(|w| w[1] <= w[0]) {
        return Err(parse_error(
            source,
            *header_line,
            c + 2,
            format!(
                "maturities must be strictly increasing ({} then {})",
                maturities[c],
                maturities[c + 1]
            ),
        ));
    }
    let grid = MaturityGrid::new(maturities).map_err(|e| parse_error(source, *header_line, 1, e.to_string()))?;
    let mut rows = Vec::with_capacity(records.len() - 1);
    for (line, record) in &records[1..] {
        if record.len() != grid.len() {
            return Err(parse_error(
                source,
                *line,
                record.len().min(grid.len()) + 1,
                format!("expected {} fields, found {}", grid.len(), record.len()),
            ));
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                if cell.is_empty() {
                    Ok(None)
                } else {
                    parse_number(cell, source, *line, c + 1).map(Some)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    SparseYieldPanel::new(grid, rows).map_err(|e| parse_error(source, 0, 0, e.to_string()))
}

/// Parse a macro panel: header of series names, no missing cells.
pub fn parse_macro(text: &str, source: &str) -> Result<MacroPanel> {
    let records = read_records(text, source)?;
    let (header_line, names) = &records[0];
    if let Some(c) = names.iter().position(String::is_empty) {
        return Err(parse_error(source, *header_line, c + 1, "empty series name"));
    }
    let mut rows = Vec::with_capacity(records.len() - 1);
    for (line, record) in &records[1..] {
        if record.len() != names.len() {
            return Err(parse_error(
                source,
                *line,
                record.len().min(names.len()) + 1,
                format!("expected {} fields, found {}", names.len(), record.len()),
            ));
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                if cell.is_empty() {
                    Err(parse_error(
                        source,
                        *line,
                        c + 1,
                        format!("missing value for series {}", names[c]),
                    ))
                } else {
                    parse_number(cell, source, *line, c + 1)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    MacroPanel::new(names.clone(), rows).map_err(|e| parse_error(source, 0, 0, e.to_string()))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn load_yields_csv(path: impl AsRef<Path>) -> Result<SparseYieldPanel> {
    let path = path.as_ref();
    parse_yields(&read_text(path)?, &path.display().to_string())
}

pub fn load_macro_csv(path: impl AsRef<Path>) -> Result<MacroPanel> {
    let path = path.as_ref();
    parse_macro(&read_text(path)?, &path.display().to_string())
}

pub fn yields_to_csv(panel: &SparseYieldPanel) -> String {
    let mut out = join(panel.grid().as_slice().iter().map(|v| fmt_num(*v)));
    for t in 0..panel.horizon() {
        out.push_str(&join(panel.row(t).map(|v| v.map(fmt_num).unwrap_or_default())));
    }
    out
}

pub fn macro_to_csv(panel: &MacroPanel) -> String {
    let mut out = join(panel.names().iter().cloned());
    for t in 0..panel.horizon() {
        out.push_str(&join(panel.row(t).iter().map(|v| fmt_num(*v))));
    }
    out
}

fn join(cells: impl Iterator<Item = String>) -> String {
    let mut line = cells.collect::<Vec<_>>().join(",");
    line.push('\n');
    line
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// Keys accepted in an analysis configuration file; all optional.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub bandwidth_mean: Option<f64>,
    pub bandwidth_cross: Option<f64>,
    pub bartlett_span: Option<usize>,
    pub freq_grid_size: Option<usize>,
    pub max_lag: Option<usize>,
    pub n_eval: Option<usize>,
    pub cond_threshold: Option<f64>,
    pub seed: Option<u64>,
}

impl ConfigFile {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| toml_error(e, text, source))
    }

    pub fn apply(&self, config: &mut Config) {
        macro_rules! set {
            ($($f:ident),*) => {$( if let Some(v) = self.$f { config.$f = v; } )*};
        }
        set!(
            bandwidth_mean,
            bandwidth_cross,
            bartlett_span,
            freq_grid_size,
            max_lag,
            n_eval,
            cond_threshold,
            seed
        );
    }
}

fn toml_error(e: toml::de::Error, text: &str, source: &str) -> Error {
    let (line, column) = match e.span() {
        Some(span) => {
            let before = &text[..span.start.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let column = before.len() - before.rfind('\n').map_or(0, |p| p + 1) + 1;
            (line, column)
        }
        None => (0, 0),
    };
    parse_error(source, line, column, e.message().trim_end().to_string())
}

/// Filter term of a simulation file: polynomial in the warped coordinate.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterPoly {
    pub lag: i64,
    #[serde(default)]
    pub series: usize,
    pub poly: Vec<f64>,
}

/// Simulation file; curve-valued entries are polynomial coefficients in the
/// warped coordinate `x` in `[0, 1]`, constant term first.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationFile {
    pub horizon: usize,
    pub maturities: Vec<f64>,
    pub series_names: Option<Vec<String>>,
    pub var_coef: Vec<Vec<f64>>,
    pub innov_cov: Vec<Vec<f64>>,
    pub macro_mean: Option<Vec<f64>>,
    #[serde(default)]
    pub mean_curve: Vec<f64>,
    #[serde(default)]
    pub filter: Vec<FilterPoly>,
    #[serde(default)]
    pub curve_error_sd: f64,
    #[serde(default)]
    pub noise_sd: f64,
    #[serde(default)]
    pub seed: u64,
}

fn poly_eval(coefs: &[f64], x: f64) -> f64 {
    coefs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn square(rows: &[Vec<f64>], what: &'static str) -> Result<RealMatrix> {
    let d = rows.len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::invalid(what, "matrix must be square"));
    }
    Ok(RealMatrix {
        dim: d,
        data: rows.concat(),
    })
}

impl SimulationFile {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| toml_error(e, text, source))
    }

    pub fn into_spec(self) -> Result<SyntheticSpec> {
        let grid = MaturityGrid::new(self.maturities)?;
        let knots = grid.warped_knots();
        let var_coef = square(&self.var_coef, "var_coef")?;
        let innov_cov = square(&self.innov_cov, "innov_cov")?;
        let d = var_coef.dim;
        let series_names = self
            .series_names
            .unwrap_or_else(|| (1..=d).map(|j| format!("X{j}")).collect());
        let spec = SyntheticSpec {
            horizon: self.horizon,
            series_names,
            var_coef,
            innov_cov,
            macro_mean: self.macro_mean.unwrap_or_else(|| vec![0.0; d]),
            mean_curve: knots.iter().map(|&x| poly_eval(&self.mean_curve, x)).collect(),
            filter: self
                .filter
                .iter()
                .map(|f| FilterTerm {
                    lag: f.lag,
                    series: f.series,
                    values: knots.iter().map(|&x| poly_eval(&f.poly, x)).collect(),
                })
                .collect(),
            curve_error_sd: self.curve_error_sd,
            noise_sd: self.noise_sd,
            seed: self.seed,
            grid,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Write `yields.csv`, `macro.csv` and `truth.json` into `out_dir`.
pub fn write_simulation(
    out_dir: impl AsRef<Path>,
    panel: &SparseYieldPanel,
    macro_panel: &MacroPanel,
    truth: &GroundTruth,
) -> Result<Vec<PathBuf>> {
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = [
        ("yields.csv", yields_to_csv(panel)),
        ("macro.csv", macro_to_csv(macro_panel)),
        ("truth.json", json_string(truth)),
    ];
    let mut manifest = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        write_file(&path, body.as_bytes())?;
        manifest.push(path);
    }
    Ok(manifest)
}

fn json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// A CSV table with its header.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InputRecord {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryDiagnostics {
    pub max_imaginary: f64,
    pub truncation_tail_mass: f64,
    pub condition_number_min: f64,
    pub condition_number_max: f64,
    pub condition_numbers: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub horizon: usize,
    pub n_maturities: usize,
    pub n_series: usize,
    pub series_names: Vec<String>,
    pub bartlett_span: usize,
    pub r_squared: f64,
    pub diagnostics: SummaryDiagnostics,
    pub config: Config,
    pub inputs: Vec<InputRecord>,
}

/// All output tables of one analysis.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultBundle {
    pub mean_curve: Table,
    pub filter_coefficients: Table,
    pub spectral_density: Table,
    pub cross_spectral: Table,
    pub frequency_response: Table,
    pub fitted: Table,
    pub summary: Summary,
}

impl ResultBundle {
    pub fn new(analysis: &Analysis, panel: &SparseYieldPanel, inputs: Vec<InputRecord>) -> Self {
        let fit = &analysis.fit;
        let eval = fit.eval_points();
        let names = &analysis.series_names;
        let grid = analysis.spectral.grid;

        let mut mean_curve = Table::new(&["warped", "maturity", "mean"]);
        for k in 0..eval.len() {
            mean_curve.rows.push(vec![
                fmt_num(eval.warped[k]),
                fmt_num(eval.maturities[k]),
                fmt_num(fit.mean_curve()[k]),
            ]);
        }

        let mut filter = Table::new(&["series", "lag", "warped", "maturity", "coefficient"]);
        for (j, name) in names.iter().enumerate() {
            for h in fit.lags() {
                for k in 0..eval.len() {
                    filter.rows.push(vec![
                        name.clone(),
                        h.to_string(),
                        fmt_num(eval.warped[k]),
                        fmt_num(eval.maturities[k]),
                        fmt_num(fit.coef(h, k, j)),
                    ]);
                }
            }
        }

        let mut spectral = Table::new(&["omega", "row", "col", "re", "im"]);
        for w in 0..grid.len() {
            let m = analysis.spectral.at(w);
            for r in 0..m.dim {
                for c in 0..m.dim {
                    let z = m.get(r, c);
                    spectral.rows.push(vec![
                        fmt_num(grid.omega(w)),
                        names[r].clone(),
                        names[c].clone(),
                        fmt_num(z.re),
                        fmt_num(z.im),
                    ]);
                }
            }
        }

        let mut cross = Table::new(&["series", "omega", "warped", "maturity", "re", "im"]);
        let mut response = Table::new(&["series", "omega", "warped", "maturity", "re", "im", "magnitude"]);
        for (j, name) in names.iter().enumerate() {
            for w in 0..grid.len() {
                for k in 0..eval.len() {
                    let z = analysis.cross.get(w, k, j);
                    cross.rows.push(vec![
                        name.clone(),
                        fmt_num(grid.omega(w)),
                        fmt_num(eval.warped[k]),
                        fmt_num(eval.maturities[k]),
                        fmt_num(z.re),
                        fmt_num(z.im),
                    ]);
                    let b = analysis.response.get(w, k, j);
                    response.rows.push(vec![
                        name.clone(),
                        fmt_num(grid.omega(w)),
                        fmt_num(eval.warped[k]),
                        fmt_num(eval.maturities[k]),
                        fmt_num(b.re),
                        fmt_num(b.im),
                        fmt_num(b.norm()),
                    ]);
                }
            }
        }

        let mut fitted = Table::new(&["t", "maturity", "observed", "fitted"]);
        for (t, row) in analysis.fitted.iter().enumerate() {
            for (i, yhat) in row.iter().enumerate() {
                fitted.rows.push(vec![
                    (t + 1).to_string(),
                    fmt_num(analysis.maturities[i]),
                    panel.get(t, i).map(fmt_num).unwrap_or_default(),
                    fmt_num(*yhat),
                ]);
            }
        }

        let cond = &analysis.diagnostics.condition_numbers;
        let summary = Summary {
            horizon: analysis.horizon,
            n_maturities: analysis.maturities.len(),
            n_series: names.len(),
            series_names: names.clone(),
            bartlett_span: analysis.config.bartlett_span,
            r_squared: analysis.r_squared,
            diagnostics: SummaryDiagnostics {
                max_imaginary: analysis.diagnostics.max_imaginary,
                truncation_tail_mass: analysis.diagnostics.tail_mass,
                condition_number_min: cond.iter().copied().fold(f64::INFINITY, f64::min),
                condition_number_max: cond.iter().copied().fold(0.0, f64::max),
                condition_numbers: cond.clone(),
            },
            config: analysis.config.clone(),
            inputs,
        };

        Self {
            mean_curve,
            filter_coefficients: filter,
            spectral_density: spectral,
            cross_spectral: cross,
            frequency_response: response,
            fitted,
            summary,
        }
    }

    pub fn summary_json(&self) -> String {
        json_string(&self.summary)
    }
}

pub const RESULT_FILES: [&str; 7] = [
    "mean_curve.csv",
    "filter_coefficients.csv",
    "spectral_density.csv",
    "cross_spectral.csv",
    "frequency_response.csv",
    "fitted.csv",
    "summary.json",
];

/// Write every table plus `summary.json`; returns the paths written.
pub fn write_results(bundle: &ResultBundle, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let bodies = [
        bundle.mean_curve.to_csv(),
        bundle.filter_coefficients.to_csv(),
        bundle.spectral_density.to_csv(),
        bundle.cross_spectral.to_csv(),
        bundle.frequency_response.to_csv(),
        bundle.fitted.to_csv(),
        bundle.summary_json(),
    ];
    let mut manifest = Vec::with_capacity(RESULT_FILES.len());
    for (name, body) in RESULT_FILES.iter().zip(bodies) {
        let path = dir.join(name);
        write_file(&path, body.as_bytes())?;
        manifest.push(path);
    }
    Ok(manifest)
}

/// Human-readable one-screen summary.
pub fn render_summary(summary: &Summary) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "periods T      {}", summary.horizon);
    let _ = writeln!(s, "maturities I   {}", summary.n_maturities);
    let _ = writeln!(
        s,
        "series d       {} ({})",
        summary.n_series,
        summary.series_names.join(", ")
    );
    let _ = writeln!(s, "Bartlett span  {}", summary.bartlett_span);
    let _ = writeln!(
        s,
        "bandwidths     mean {}, cross {}",
        summary.config.bandwidth_mean, summary.config.bandwidth_cross
    );
    let _ = writeln!(s, "R^2            {:.4}", summary.r_squared);
    let d = &summary.diagnostics;
    let _ = writeln!(s, "max |Im b|     {:.3e}", d.max_imaginary);
    let _ = writeln!(s, "tail mass      {:.3e}", d.truncation_tail_mass);
    let _ = writeln!(
        s,
        "cond(F)        {:.3e} .. {:.3e}",
        d.condition_number_min, d.condition_number_max
    );
    s
}
