//! Convergence studies: run the estimator over a grid of step sizes, fit the
//! empirical weak order on a log-log scale, and write table and plot data.
//!
//! A study file is INI-style. Keys before the first section are defaults
//! inherited by every section; each section is one study:
//!
//! ```ini
//! seed = 20240901
//! workers = 4
//!
//! [sticky]
//! problem = benchmark
//! scheme = sticky-euler
//! h = 0.125, 0.1, 0.0625
//! samples = 500000
//! out = sticky.csv
//! plot = sticky.dat
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

use crate::geometry::Domain;
use crate::montecarlo::{estimate, EstimateConfig, EstimateError, Scheme};
use crate::problem::{benchmark_disk_problem, constant_problem, Problem, ProblemError};
use crate::schemes::FinalStepCorrection;

pub const CSV_HEADER: &str = "h,M,estimate,halfwidth,error,avg_hits,avg_steps,wall_time_s";
pub const PLOT_HEADER: &str = "ln_h,ln_error,fit_ln_error";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("row h={h}: {source}")]
    Estimate { h: f64, source: EstimateError },
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
}

impl HarnessError {
    fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Config { field: field.into(), message: message.into() }
    }

    pub fn is_config(&self) -> bool {
        matches!(self, Self::Config { .. } | Self::Problem(ProblemError::Configuration(_)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    Benchmark { radius: f64 },
    Constant { value: f64, radius: f64, horizon: f64 },
}

impl ProblemSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemSpec::Benchmark { .. } => "benchmark",
            ProblemSpec::Constant { .. } => "constant",
        }
    }

    pub fn build(&self) -> Result<Problem<f64, 2>, ProblemError> {
        match *self {
            ProblemSpec::Benchmark { radius } => benchmark_disk_problem(radius),
            ProblemSpec::Constant { value, radius, horizon } => {
                if !(horizon > 0.0) {
                    return Err(ProblemError::Configuration(format!("horizon {horizon} must be positive")));
                }
                Ok(constant_problem(value, Domain::ball([0.0, 0.0], radius)?, horizon))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub name: String,
    pub problem: ProblemSpec,
    pub t0: f64,
    pub x0: [f64; 2],
    pub scheme: Scheme,
    /// `(h, M)` pairs.
    pub grid: Vec<(f64, u64)>,
    pub seed: u64,
    pub workers: usize,
    pub multiplier: f64,
    pub correction: FinalStepCorrection,
    /// Overrides the exact solution as the error reference.
    pub reference: Option<f64>,
    /// Write measured wall time; otherwise the column is 0 and output is reproducible.
    pub record_wall_time: bool,
    pub csv_path: Option<PathBuf>,
    pub plot_path: Option<PathBuf>,
}

impl StudyConfig {
    /// The disk benchmark evaluated at `(0, (0, 1))` over the given grid.
    pub fn benchmark(scheme: Scheme, grid: Vec<(f64, u64)>) -> Self {
        Self {
            name: scheme.as_str().to_owned(),
            problem: ProblemSpec::Benchmark { radius: 1.25 },
            t0: 0.0,
            x0: [0.0, 1.0],
            scheme,
            grid,
            seed: 0,
            workers: 1,
            multiplier: 2.0,
            correction: FinalStepCorrection::default(),
            reference: None,
            record_wall_time: false,
            csv_path: None,
            plot_path: None,
        }
    }

    pub fn validate(&self) -> Result<Problem<f64, 2>, HarnessError> {
        let at = |field: &str| format!("{}.{field}", self.name);
        if self.grid.is_empty() {
            return Err(HarnessError::config(at("h"), "grid is empty"));
        }
        for (i, &(h, m)) in self.grid.iter().enumerate() {
            if !(h > 0.0 && h < 1.0) {
                return Err(HarnessError::config(at(&format!("h[{i}]")), format!("{h} is not in (0, 1)")));
            }
            if m == 0 {
                return Err(HarnessError::config(at(&format!("samples[{i}]")), "must be at least 1"));
            }
        }
        if self.workers == 0 {
            return Err(HarnessError::config(at("workers"), "must be at least 1"));
        }
        if !(self.multiplier >= 0.0) {
            return Err(HarnessError::config(at("multiplier"), "must be nonnegative"));
        }
        let problem = self.problem.build().map_err(|e| HarnessError::config(at("problem"), e.to_string()))?;
        if !problem.domain.contains(&self.x0) {
            return Err(HarnessError::config(at("x0"), format!("{:?} is not interior", self.x0)));
        }
        if !(self.t0 < problem.horizon) {
            return Err(HarnessError::config(at("t0"), "must precede the horizon"));
        }
        Ok(problem)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub h: f64,
    pub samples: u64,
    pub estimate: f64,
    pub halfwidth: f64,
    pub error: f64,
    pub avg_hits: f64,
    pub avg_steps: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceSource {
    Exact,
    User,
    /// Estimate at the finest step size.
    SelfFinest,
}

impl ReferenceSource {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::User => "user",
            Self::SelfFinest => "self-finest",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reference {
    pub value: f64,
    pub source: ReferenceSource,
}

/// Least-squares line through `(ln h, ln error)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderFit {
    pub slope: f64,
    pub intercept: f64,
    pub max_residual: f64,
}

impl OrderFit {
    pub fn predict_ln(&self, ln_h: f64) -> f64 {
        self.intercept + self.slope * ln_h
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyOutcome {
    pub rows: Vec<ConvergenceRow>,
    pub reference: Reference,
    /// `None` when fewer than two rows have a positive error.
    pub fit: Option<OrderFit>,
}

/// Ordinary least squares of `ln y` on `ln x`.
pub fn fit_log_log(points: &[(f64, f64)]) -> Result<OrderFit, HarnessError> {
    if points.len() < 2 {
        return Err(HarnessError::DegenerateFit(format!("{} point(s), need at least 2", points.len())));
    }
    if let Some(&(x, y)) = points.iter().find(|&&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(HarnessError::DegenerateFit(format!("non-positive value at ({x}, {y})")));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    if sxx == 0.0 {
        return Err(HarnessError::DegenerateFit("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let max_residual = logs.iter().map(|&(x, y)| (y - intercept - slope * x).abs()).fold(0.0, f64::max);
    Ok(OrderFit { slope, intercept, max_residual })
}

pub fn fit_order(rows: &[ConvergenceRow]) -> Result<OrderFit, HarnessError> {
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.h, r.error)).collect();
    fit_log_log(&points)
}

pub fn run_study(config: &StudyConfig) -> Result<StudyOutcome, HarnessError> {
    let problem = config.validate()?;
    let mut grid = config.grid.clone();
    grid.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut estimates = Vec::with_capacity(grid.len());
    for &(h, samples) in &grid {
        let cfg = EstimateConfig {
            scheme: config.scheme,
            correction: config.correction,
            t0: config.t0,
            x0: config.x0,
            h,
            samples,
            seed: config.seed,
            workers: config.workers,
            multiplier: config.multiplier,
        };
        let started = Instant::now();
        let est = estimate(&problem, &cfg).map_err(|source| HarnessError::Estimate { h, source })?;
        let wall = if config.record_wall_time { started.elapsed().as_secs_f64() } else { 0.0 };
        estimates.push((est, wall));
    }

    let exact = problem.exact.as_ref().map(|u| (u.value)(config.t0, &config.x0));
    let reference = match (config.reference, exact) {
        (Some(value), _) => Reference { value, source: ReferenceSource::User },
        (None, Some(value)) => Reference { value, source: ReferenceSource::Exact },
        (None, None) => {
            let finest = &estimates.last().expect("grid is non-empty").0;
            Reference { value: finest.mean, source: ReferenceSource::SelfFinest }
        }
    };

    let rows: Vec<ConvergenceRow> = estimates
        .into_iter()
        .map(|(e, wall_time_s)| ConvergenceRow {
            h: e.h,
            samples: e.samples,
            estimate: e.mean,
            halfwidth: e.halfwidth,
            error: (e.mean - reference.value).abs(),
            avg_hits: e.avg_hits,
            avg_steps: e.avg_steps,
            wall_time_s,
        })
        .collect();

    let positive: Vec<ConvergenceRow> = rows.iter().filter(|r| r.error > 0.0).cloned().collect();
    let fit = if positive.len() >= 2 { fit_order(&positive).ok() } else { None };
    Ok(StudyOutcome { rows, reference, fit })
}

/// C-style `%.6g`.
pub fn format_sig6(x: f64) -> String {
    const SIG: i32 = 6;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", (SIG - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= SIG {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (SIG - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_owned()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn render_csv(rows: &[ConvergenceRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            format_sig6(r.h),
            r.samples,
            format_sig6(r.estimate),
            format_sig6(r.halfwidth),
            format_sig6(r.error),
            format_sig6(r.avg_hits),
            format_sig6(r.avg_steps),
            format_sig6(r.wall_time_s),
        );
    }
    out
}

/// Metadata recorded in the plot file's header line.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotMetadata {
    pub scheme: Scheme,
    pub seed: u64,
    pub correction: FinalStepCorrection,
    pub reference: Reference,
}

pub fn render_plot_data(rows: &[ConvergenceRow], fit: Option<&OrderFit>, meta: &PlotMetadata) -> String {
    let mut out = format!(
        "# scheme={} seed={} variant={} reference={} reference_source={}",
        meta.scheme,
        meta.seed,
        meta.correction.as_str(),
        format_sig6(meta.reference.value),
        meta.reference.source.as_str(),
    );
    match fit {
        Some(f) => {
            let _ = write!(
                out,
                " slope={} intercept={} max_residual={}",
                format_sig6(f.slope),
                format_sig6(f.intercept),
                format_sig6(f.max_residual)
            );
        }
        None => out.push_str(" slope=none"),
    }
    out.push('\n');
    out.push_str(PLOT_HEADER);
    out.push('\n');
    if let Some(f) = fit {
        for r in rows.iter().filter(|r| r.error > 0.0) {
            let ln_h = r.h.ln();
            let _ = writeln!(out, "{},{},{}", format_sig6(ln_h), format_sig6(r.error.ln()), format_sig6(f.predict_ln(ln_h)));
        }
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    fs::write(path, contents).map_err(|source| HarnessError::Io { path: path.to_owned(), source })
}

pub fn write_csv(rows: &[ConvergenceRow], path: &Path) -> Result<(), HarnessError> {
    write_file(path, &render_csv(rows))
}

pub fn write_plot_data(
    rows: &[ConvergenceRow],
    fit: Option<&OrderFit>,
    meta: &PlotMetadata,
    path: &Path,
) -> Result<(), HarnessError> {
    write_file(path, &render_plot_data(rows, fit, meta))
}

/// Runs a study and writes whichever outputs it names.
pub fn execute(config: &StudyConfig) -> Result<StudyOutcome, HarnessError> {
    let outcome = run_study(config)?;
    if let Some(path) = &config.csv_path {
        write_csv(&outcome.rows, path)?;
    }
    if let Some(path) = &config.plot_path {
        let meta = PlotMetadata {
            scheme: config.scheme,
            seed: config.seed,
            correction: config.correction,
            reference: outcome.reference,
        };
        write_plot_data(&outcome.rows, outcome.fit.as_ref(), &meta, path)?;
    }
    Ok(outcome)
}

/// Raw key-value view of one study before typing.
#[derive(Debug, Clone, Default)]
pub struct StudyKeys {
    pub name: String,
    pub entries: Vec<(String, String)>,
}

impl StudyKeys {
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        let value = value.into();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => self.entries.push((key.to_owned(), value)),
        }
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn parsed<V: std::str::FromStr>(&self, key: &str) -> Result<Option<V>, HarnessError>
    where
        V::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|raw| {
                raw.trim()
                    .parse::<V>()
                    .map_err(|e| HarnessError::config(format!("{}.{key}", self.name), format!("`{raw}`: {e}")))
            })
            .transpose()
    }

    fn list<V: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<V>>, HarnessError>
    where
        V::Err: std::fmt::Display,
    {
        let Some(raw) = self.get(key) else { return Ok(None) };
        raw.split(',')
            .enumerate()
            .map(|(i, item)| {
                item.trim().parse::<V>().map_err(|e| {
                    HarnessError::config(format!("{}.{key}[{i}]", self.name), format!("`{}`: {e}", item.trim()))
                })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    pub fn into_config(self) -> Result<StudyConfig, HarnessError> {
        const KNOWN: &[&str] = &[
            "problem", "radius", "value", "horizon", "t0", "x0", "scheme", "h", "samples", "seed", "workers",
            "multiplier", "variant", "reference", "wall_time", "out", "plot",
        ];
        if let Some((key, _)) = self.entries.iter().find(|(k, _)| !KNOWN.contains(&k.as_str())) {
            return Err(HarnessError::config(format!("{}.{key}", self.name), "unknown key"));
        }
        let field = |key: &str| format!("{}.{key}", self.name);

        let radius = self.parsed("radius")?.unwrap_or(1.25);
        let problem = match self.get("problem").map(str::trim).unwrap_or("benchmark") {
            "benchmark" => ProblemSpec::Benchmark { radius },
            "constant" => ProblemSpec::Constant {
                value: self.parsed("value")?.unwrap_or(10.0),
                radius,
                horizon: self.parsed("horizon")?.unwrap_or(1.0),
            },
            other => return Err(HarnessError::config(field("problem"), format!("unknown problem `{other}`"))),
        };

        let x0 = match self.list::<f64>("x0")? {
            None => [0.0, 1.0],
            Some(v) if v.len() == 2 => [v[0], v[1]],
            Some(v) => return Err(HarnessError::config(field("x0"), format!("expected 2 coordinates, got {}", v.len()))),
        };
        let scheme: Scheme = self
            .parsed("scheme")?
            .ok_or_else(|| HarnessError::config(field("scheme"), "missing"))?;
        let steps: Vec<f64> = self.list("h")?.ok_or_else(|| HarnessError::config(field("h"), "missing"))?;
        let samples: Vec<u64> =
            self.list("samples")?.ok_or_else(|| HarnessError::config(field("samples"), "missing"))?;
        let grid = match samples.len() {
            1 => steps.iter().map(|&h| (h, samples[0])).collect(),
            n if n == steps.len() => steps.iter().copied().zip(samples).collect(),
            n => {
                return Err(HarnessError::config(
                    field("samples"),
                    format!("{n} entries for {} step sizes", steps.len()),
                ))
            }
        };

        let config = StudyConfig {
            name: self.name.clone(),
            problem,
            t0: self.parsed("t0")?.unwrap_or(0.0),
            x0,
            scheme,
            grid,
            seed: self.parsed("seed")?.unwrap_or(0),
            workers: self.parsed("workers")?.unwrap_or(1),
            multiplier: self.parsed("multiplier")?.unwrap_or(2.0),
            correction: self.parsed("variant")?.unwrap_or_default(),
            reference: self.parsed("reference")?,
            record_wall_time: self.parsed("wall_time")?.unwrap_or(false),
            csv_path: self.get("out").map(|s| PathBuf::from(s.trim())),
            plot_path: self.get("plot").map(|s| PathBuf::from(s.trim())),
        };
        config.validate()?;
        Ok(config)
    }
}

/// Splits a study file into per-section key sets with the top-level defaults merged in.
pub fn parse_study_keys(text: &str) -> Result<Vec<StudyKeys>, HarnessError> {
    let ini = ini::Ini::load_from_str(text).map_err(|e| HarnessError::config("<file>", e.to_string()))?;
    let defaults: Vec<(String, String)> = ini
        .general_section()
        .iter()
        .map(|(k, v)| (k.to_owned(), v.to_owned()))
        .collect();
    let mut studies = Vec::new();
    for (name, props) in ini.iter() {
        let Some(name) = name else { continue };
        let mut keys = StudyKeys { name: name.to_owned(), entries: defaults.clone() };
        for (k, v) in props.iter() {
            keys.set(k, v);
        }
        studies.push(keys);
    }
    if studies.is_empty() {
        return Err(HarnessError::config("<file>", "no [study] sections"));
    }
    Ok(studies)
}

pub fn parse_study_file(text: &str) -> Result<Vec<StudyConfig>, HarnessError> {
    parse_study_keys(text)?.into_iter().map(StudyKeys::into_config).collect()
}

pub fn load_study_file(path: &Path) -> Result<Vec<StudyConfig>, HarnessError> {
    let text = fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.to_owned(), source })?;
    parse_study_file(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(h: f64, error: f64) -> ConvergenceRow {
        ConvergenceRow { h, samples: 1, estimate: 0.0, halfwidth: 0.0, error, avg_hits: 0.0, avg_steps: 0.0, wall_time_s: 0.0 }
    }

    const GRID: [f64; 7] = [0.125, 0.1, 0.0625, 0.05, 0.03125, 0.025, 0.0125];

    #[test]
    fn exact_power_law_has_unit_slope() {
        let rows: Vec<_> = GRID.iter().map(|&h| row(h, 0.5 * h)).collect();
        let fit = fit_order(&rows).unwrap();
        assert!((fit.slope - 1.0).abs() <= 1e-12);
        assert!((fit.intercept - 0.5f64.ln()).abs() <= 1e-12);
        assert!(fit.max_residual <= 1e-12);
    }

    // Expected slopes from an independent least-squares solve (numpy lstsq)
    // over the published (h, error) pairs.
    #[test]
    fn published_sticky_errors_slope() {
        let errors = [0.281866, 0.234946, 0.157878, 0.127603, 0.081223, 0.063060, 0.029335];
        let rows: Vec<_> = GRID.iter().zip(errors).map(|(&h, e)| row(h, e)).collect();
        let fit = fit_order(&rows).unwrap();
        assert!((fit.slope - 0.977_701_930_5).abs() < 1e-8, "{}", fit.slope);
        assert!((fit.intercept - 0.825_817_866_9).abs() < 1e-8);
    }

    #[test]
    fn published_projected_errors_slope() {
        let errors = [3.667943, 2.909031, 1.826636, 1.524107, 1.119451, 0.998069, 0.756592];
        let rows: Vec<_> = GRID.iter().zip(errors).map(|(&h, e)| row(h, e)).collect();
        let fit = fit_order(&rows).unwrap();
        assert!((fit.slope - 0.696_633_396_5).abs() < 1e-8, "{}", fit.slope);
    }

    #[test]
    fn degenerate_fits() {
        assert!(matches!(fit_order(&[row(0.1, 0.1)]), Err(HarnessError::DegenerateFit(_))));
        assert!(matches!(fit_order(&[row(0.1, 0.1), row(0.05, 0.0)]), Err(HarnessError::DegenerateFit(_))));
        assert!(matches!(fit_order(&[row(0.1, 0.1), row(0.1, 0.2)]), Err(HarnessError::DegenerateFit(_))));
    }

    #[test]
    fn sig6_formatting() {
        assert_eq!(format_sig6(0.125), "0.125");
        assert_eq!(format_sig6(0.03125), "0.03125");
        assert_eq!(format_sig6(10.397215), "10.3972");
        assert_eq!(format_sig6(10.367879441171443), "10.3679");
        assert_eq!(format_sig6(80.0), "80");
        assert_eq!(format_sig6(0.0), "0");
        assert_eq!(format_sig6(-2.0794415416798357), "-2.07944");
        assert_eq!(format_sig6(0.00002671), "2.671e-05");
        assert_eq!(format_sig6(1234567.0), "1.23457e+06");
        assert_eq!(format_sig6(999999.7), "1e+06");
    }

    #[test]
    fn empty_csv_is_header_only() {
        assert_eq!(render_csv(&[]), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn one_row_csv() {
        let r = ConvergenceRow {
            h: 0.0125,
            samples: 1_000_000,
            estimate: 10.397215,
            halfwidth: 0.002671,
            error: 0.029335,
            avg_hits: 5.22,
            avg_steps: 80.0,
            wall_time_s: 0.0,
        };
        let csv = render_csv(&[r]);
        assert_eq!(csv, format!("{CSV_HEADER}\n0.0125,1000000,10.3972,0.002671,0.029335,5.22,80,0\n"));
        assert_eq!(csv.lines().count(), 2);
    }

    #[test]
    fn plot_data_layout() {
        let rows: Vec<_> = [0.1, 0.05].iter().map(|&h| row(h, 2.0 * h)).collect();
        let fit = fit_order(&rows).unwrap();
        let meta = PlotMetadata {
            scheme: Scheme::ProjectedEuler,
            seed: 9,
            correction: FinalStepCorrection::Proof,
            reference: Reference { value: 10.367879441171443, source: ReferenceSource::Exact },
        };
        let text = render_plot_data(&rows, Some(&fit), &meta);
        let lines: Vec<_> = text.lines().collect();
        assert!(lines[0].starts_with("# scheme=projected-euler seed=9 variant=proof reference=10.3679 reference_source=exact slope=1"));
        assert_eq!(lines[1], PLOT_HEADER);
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[2], "-2.30259,-1.60944,-1.60944");
    }

    #[test]
    fn constant_study_has_zero_errors() {
        let mut cfg = StudyConfig::benchmark(Scheme::StickyEuler, vec![(0.1, 200), (0.125, 200), (0.05, 100)]);
        cfg.problem = ProblemSpec::Constant { value: 10.0, radius: 1.25, horizon: 1.0 };
        let out = run_study(&cfg).unwrap();
        assert_eq!(out.rows.iter().map(|r| r.h).collect::<Vec<_>>(), vec![0.125, 0.1, 0.05]);
        assert!(out.rows.iter().all(|r| r.error == 0.0 && r.estimate == 10.0));
        assert_eq!(out.reference.source, ReferenceSource::Exact);
        assert!(out.fit.is_none());
    }

    #[test]
    fn user_reference_overrides_exact() {
        let mut cfg = StudyConfig::benchmark(Scheme::StickyEuler, vec![(0.125, 100)]);
        cfg.reference = Some(10.0);
        let out = run_study(&cfg).unwrap();
        assert_eq!(out.reference, Reference { value: 10.0, source: ReferenceSource::User });
        assert_eq!(out.rows[0].error, (out.rows[0].estimate - 10.0).abs());
    }

    #[test]
    fn validation_reports_field_paths() {
        let mut cfg = StudyConfig::benchmark(Scheme::StickyEuler, vec![(0.1, 10), (1.5, 10)]);
        cfg.name = "s".into();
        match cfg.validate() {
            Err(HarnessError::Config { field, .. }) => assert_eq!(field, "s.h[1]"),
            other => panic!("{other:?}"),
        }
        cfg.grid = vec![(0.1, 0)];
        assert!(matches!(cfg.validate(), Err(HarnessError::Config { field, .. }) if field == "s.samples[0]"));
        cfg.grid = vec![(0.1, 10)];
        cfg.x0 = [0.0, 1.3];
        assert!(matches!(cfg.validate(), Err(HarnessError::Config { field, .. }) if field == "s.x0"));
        cfg.x0 = [0.0, 1.0];
        cfg.problem = ProblemSpec::Benchmark { radius: 0.9 };
        assert!(matches!(cfg.validate(), Err(HarnessError::Config { field, .. }) if field == "s.problem"));
    }

    #[test]
    fn study_file_parsing() {
        let text = "seed = 42\nworkers = 2\n\n[sticky]\nscheme = sticky-euler\nh = 0.125, 0.1\nsamples = 500000, 1000000\nvariant = proof\nout = a.csv\n\n[projected]\nproblem = constant\nvalue = 3\nscheme = projected-euler\nh = 0.05\nsamples = 10\nseed = 7\nx0 = 0.1, 0.2\n";
        let studies = parse_study_file(text).unwrap();
        assert_eq!(studies.len(), 2);
        let s = &studies[0];
        assert_eq!(s.name, "sticky");
        assert_eq!((s.seed, s.workers), (42, 2));
        assert_eq!(s.grid, vec![(0.125, 500_000), (0.1, 1_000_000)]);
        assert_eq!(s.correction, FinalStepCorrection::Proof);
        assert_eq!(s.csv_path.as_deref(), Some(Path::new("a.csv")));
        let p = &studies[1];
        assert_eq!(p.problem, ProblemSpec::Constant { value: 3.0, radius: 1.25, horizon: 1.0 });
        assert_eq!((p.seed, p.x0), (7, [0.1, 0.2]));
        assert_eq!(p.grid, vec![(0.05, 10)]);
    }

    #[test]
    fn study_file_errors() {
        let err = |t: &str| match parse_study_file(t) {
            Err(HarnessError::Config { field, .. }) => field,
            other => panic!("{other:?}"),
        };
        assert_eq!(err("[a]\nscheme = sticky-euler\nh = 0.1, x\nsamples = 1\n"), "a.h[1]");
        assert_eq!(err("[a]\nscheme = warp\nh = 0.1\nsamples = 1\n"), "a.scheme");
        assert_eq!(err("[a]\nscheme = sticky-euler\nh = 0.1\n"), "a.samples");
        assert_eq!(err("[a]\nscheme = sticky-euler\nh = 0.1\nsamples = 1\ncolour = red\n"), "a.colour");
        assert_eq!(err("seed = 1\n"), "<file>");
    }
}
