use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use stickymc::harness::{self, format_sig6, parse_study_keys, render_csv, HarnessError, StudyKeys};

/// Monte Carlo convergence studies for parabolic problems with sticky boundaries.
///
/// Either read studies from `--config` or describe one study with flags.
/// Flags given alongside `--config` override the same key in every study.
#[derive(Debug, Parser)]
#[command(name = "stickymc", version)]
struct Cli {
    /// INI study file; one section per study.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `benchmark` or `constant`.
    #[arg(long)]
    problem: Option<String>,
    /// Disk radius.
    #[arg(long)]
    radius: Option<String>,
    /// Value of the constant problem.
    #[arg(long)]
    value: Option<String>,
    /// Horizon of the constant problem.
    #[arg(long)]
    horizon: Option<String>,
    #[arg(long)]
    t0: Option<String>,
    /// Start point, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    /// `sticky-euler` or `projected-euler`.
    #[arg(long)]
    scheme: Option<String>,
    /// Step sizes, comma separated.
    #[arg(long)]
    h: Option<String>,
    /// Sample counts, one per step size or a single shared value.
    #[arg(long)]
    samples: Option<String>,
    #[arg(long, env = "STICKYMC_SEED")]
    seed: Option<String>,
    #[arg(long, env = "STICKYMC_WORKERS")]
    workers: Option<String>,
    /// Final-step correction, `consistent` (default), `listing` or `proof`.
    #[arg(long)]
    variant: Option<String>,
    /// Confidence halfwidth multiplier.
    #[arg(long)]
    multiplier: Option<String>,
    /// Reference value used instead of the exact solution.
    #[arg(long, allow_hyphen_values = true)]
    reference: Option<String>,
    /// Record wall time per row (makes the table non-reproducible).
    #[arg(long)]
    timing: bool,
    /// CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Plot data output path.
    #[arg(long)]
    plot: Option<PathBuf>,
}

impl Cli {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let text = [
            ("problem", &self.problem),
            ("radius", &self.radius),
            ("value", &self.value),
            ("horizon", &self.horizon),
            ("t0", &self.t0),
            ("x0", &self.x0),
            ("scheme", &self.scheme),
            ("h", &self.h),
            ("samples", &self.samples),
            ("seed", &self.seed),
            ("workers", &self.workers),
            ("variant", &self.variant),
            ("multiplier", &self.multiplier),
            ("reference", &self.reference),
        ];
        let mut out: Vec<_> = text.into_iter().filter_map(|(k, v)| v.clone().map(|v| (k, v))).collect();
        for (k, v) in [("out", &self.out), ("plot", &self.plot)] {
            if let Some(path) = v {
                out.push((k, path.display().to_string()));
            }
        }
        if self.timing {
            out.push(("wall_time", "true".into()));
        }
        out
    }
}

fn studies(cli: &Cli) -> Result<Vec<StudyKeys>, HarnessError> {
    let mut keys = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| HarnessError::Config { field: "--config".into(), message: format!("{}: {e}", path.display()) })?;
            parse_study_keys(&text)?
        }
        None => vec![StudyKeys { name: "cli".into(), entries: Vec::new() }],
    };
    let overrides = cli.overrides();
    for study in &mut keys {
        for (k, v) in &overrides {
            study.set(k, v.clone());
        }
    }
    Ok(keys)
}

fn run(cli: &Cli) -> Result<(), HarnessError> {
    let configs = studies(cli)?
        .into_iter()
        .map(StudyKeys::into_config)
        .collect::<Result<Vec<_>, _>>()?;
    let mut stdout = std::io::stdout().lock();
    let mut printing = true;
    for config in &configs {
        let outcome = harness::execute(config)?;
        let fit = match outcome.fit {
            Some(fit) => format!(
                "# slope={} intercept={} max_residual={}",
                format_sig6(fit.slope),
                format_sig6(fit.intercept),
                format_sig6(fit.max_residual)
            ),
            None => "# slope=none".into(),
        };
        let report = format!(
            "# study={} scheme={} variant={} seed={} reference={} ({})\n{}{fit}\n",
            config.name,
            config.scheme,
            config.correction.as_str(),
            config.seed,
            format_sig6(outcome.reference.value),
            outcome.reference.source.as_str(),
            render_csv(&outcome.rows),
        );
        // A closed pipe (`stickymc ... | head`) is not worth an error; later
        // studies still write their files.
        if printing && stdout.write_all(report.as_bytes()).and_then(|()| stdout.flush()).is_err() {
            printing = false;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("stickymc: {err}");
            ExitCode::from(if err.is_config() { 2 } else { 3 })
        }
    }
}
