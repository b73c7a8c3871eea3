//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a check failed, 2 configuration error,
//! 3 physics-validity failure (truncation, positivity, uniqueness),
//! 4 numerical-method failure, 5 I/O error.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

/// `println!` that tolerates a closed stdout (e.g. piped into `head`).
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}
use serde::Serialize;

use crate::algebra::{verify_algebra, AlgebraReport, DeformationParam, FockCutoff};
use crate::config::{Format, RunConfig, SpectrumPoint};
use crate::error::{Error, Result};
use crate::output::{fmt_f64, write_csv, write_json, write_text, Manifest, OutputDir, MANIFEST_SCHEMA};
use crate::scans::{self, G2Scan, LadderScan, VERSION};
use crate::spectrum::SpectrumResult;
use crate::svg::{Plot, Series};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PHYSICS: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;
pub const EXIT_IO: i32 = 5;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidInput(_)
        | Error::LambdaOutOfRange(_)
        | Error::CutoffTooSmall(_)
        | Error::Config(_) => EXIT_CONFIG,
        Error::DegenerateSteadyState { .. }
        | Error::InvalidSteadyState { .. }
        | Error::CutoffNotConverged { .. }
        | Error::UndefinedStatistics(_) => EXIT_PHYSICS,
        Error::Numerical(_) | Error::Dimension(_) => EXIT_NUMERICAL,
        Error::Io { .. } => EXIT_IO,
    }
}

#[derive(Debug, Parser)]
#[command(name = "rdjc", version, about = "Deformed Jaynes-Cummings emitter-cavity simulator")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Bundled configuration: fig1, fig2, fig3a, fig3b, fig4.
    #[arg(long, global = true, value_name = "NAME", conflicts_with = "config")]
    pub preset: Option<String>,
    /// Output directory (created if missing).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Comma-separated subset of csv,json,svg.
    #[arg(long, global = true, value_name = "LIST", value_delimiter = ',')]
    pub format: Option<Vec<String>>,
    /// Worker threads for scans (0 = one per core).
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,
    /// Initial Fock cutoff n_max (also the algebra-check cutoff).
    #[arg(long, global = true, value_name = "N")]
    pub cutoff: Option<usize>,
    /// Deformation parameter; replaces the λ lists of the selected command.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    /// Emitter detuning in units of g (spectrum only).
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    /// Residual tolerance for algebra-check.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Reserved; all computations are deterministic.
    #[arg(long, global = true)]
    pub seedless: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Verify the deformed commutation relations on a truncated Fock space.
    AlgebraCheck,
    /// Rabi-doublet positions against λ and/or detuning.
    Ladder,
    /// Cavity emission spectra.
    Spectrum,
    /// Zero-delay second-order correlation against pump rate.
    G2,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::AlgebraCheck => "algebra-check",
            Command::Ladder => "ladder",
            Command::Spectrum => "spectrum",
            Command::G2 => "g2",
        }
    }
}

/// Load the base configuration and apply flag overrides.
pub fn resolve(cli: &Cli) -> Result<RunConfig> {
    let a = &cli.common;
    let mut c = match (&a.config, &a.preset) {
        (Some(path), _) => RunConfig::from_file(path)?,
        (None, Some(name)) => RunConfig::preset(name)?,
        (None, None) => RunConfig::default(),
    };
    if let Some(out) = &a.out {
        c.output.dir = out.clone();
    }
    if let Some(list) = &a.format {
        c.output.formats = list
            .iter()
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.parse())
            .collect::<Result<_>>()?;
    }
    if let Some(w) = a.workers {
        c.output.workers = w;
    }
    if a.seedless {
        c.output.seedless = true;
    }
    if let Some(n) = a.cutoff {
        c.cutoff.initial = n;
        c.cutoff.max = c.cutoff.max.max(n);
        c.algebra.n_max = n;
    }
    if let Some(tol) = a.tol {
        c.algebra.tol = tol;
    }
    if let Some(l) = a.lambda {
        c.params.lambda = l;
        c.algebra.lambdas = vec![l];
        c.ladder.detuning_lambdas = vec![l];
        c.g2.lambdas = vec![l];
        c.spectrum.points = vec![SpectrumPoint {
            lambda: l,
            delta: a.delta.unwrap_or(c.params.delta),
        }];
    } else if let Some(d) = a.delta {
        c.spectrum.points.iter_mut().for_each(|p| p.delta = d);
    }
    if let Some(d) = a.delta {
        c.params.delta = d;
    }
    match cli.command {
        Command::AlgebraCheck => c.validate_algebra()?,
        Command::Ladder => c.validate_ladder()?,
        Command::Spectrum => c.validate_spectrum()?,
        Command::G2 => c.validate_g2()?,
    }
    Ok(c)
}

/// Parse, run and map the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: &Cli) -> Result<i32> {
    let config = resolve(cli)?;
    let started = Instant::now();
    let mut out = OutputDir::create(&config.output.dir)?;
    let code = match cli.command {
        Command::AlgebraCheck => algebra_check(&config, &mut out)?,
        Command::Ladder => ladder(&config, &mut out)?,
        Command::Spectrum => spectrum(&config, &mut out)?,
        Command::G2 => g2(&config, &mut out)?,
    };
    let mut outputs = out.written().to_vec();
    outputs.sort();
    let manifest = Manifest {
        schema: MANIFEST_SCHEMA,
        version: VERSION,
        command: cli.command.name(),
        config: &config,
        outputs,
    };
    write_json(&out.root().join("manifest.json"), &manifest)?;
    write_text(
        &out.root().join("timing.txt"),
        &format!("elapsed_seconds = {:.3}\n", started.elapsed().as_secs_f64()),
    )?;
    Ok(code)
}

fn algebra_check(c: &RunConfig, out: &mut OutputDir) -> Result<i32> {
    let cutoff = FockCutoff::new(c.algebra.n_max)?;
    let reports: Vec<AlgebraReport> = c
        .algebra
        .lambdas
        .iter()
        .map(|&l| Ok(verify_algebra(cutoff, DeformationParam::new(l)?, c.algebra.tol)))
        .collect::<Result<_>>()?;
    say!(
        "{:>8}  {:<34} {:>10}  {:>12}  {:>6}  result",
        "lambda", "identity", "levels", "residual", "worst"
    );
    let mut rows = Vec::new();
    for r in &reports {
        for id in &r.identities {
            say!(
                "{:>8}  {:<34} {:>10}  {:>12.3e}  {:>6}  {}",
                fmt_f64(r.lambda),
                id.name,
                format!("{}..{}", id.levels.0, id.levels.1),
                id.residual,
                id.worst_level,
                if id.passed { "pass" } else { "FAIL" }
            );
            rows.push(vec![
                fmt_f64(r.lambda),
                id.name.to_string(),
                id.levels.0.to_string(),
                id.levels.1.to_string(),
                fmt_f64(id.residual),
                id.passed.to_string(),
            ]);
        }
    }
    let ok = reports.iter().all(|r| r.all_passed());
    say!(
        "n_max = {}, tol = {:e}: {}",
        cutoff.n_max(),
        c.algebra.tol,
        if ok { "all identities hold" } else { "check FAILED" }
    );
    if c.output.wants(Format::Csv) {
        let header: Vec<String> = ["lambda", "identity", "level_min", "level_max", "residual", "passed"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        write_csv(&out.path("algebra.csv"), &header, &rows)?;
    }
    if c.output.wants(Format::Json) {
        write_json(&out.path("algebra.json"), &reports)?;
    }
    Ok(if ok { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn write_table<T: Serialize>(
    c: &RunConfig,
    out: &mut OutputDir,
    stem: &str,
    header: &[String],
    rows: &[Vec<String>],
    json: &T,
) -> Result<()> {
    if c.output.wants(Format::Csv) {
        write_csv(&out.path(&format!("{stem}.csv")), header, rows)?;
    }
    if c.output.wants(Format::Json) {
        write_json(&out.path(&format!("{stem}.json")), json)?;
    }
    Ok(())
}

fn write_svg(c: &RunConfig, out: &mut OutputDir, stem: &str, plot: &Plot) -> Result<()> {
    if c.output.wants(Format::Svg) {
        write_text(&out.path(&format!("{stem}.svg")), &plot.render())?;
    }
    Ok(())
}

fn tag(x: f64) -> String {
    fmt_f64(x)
}

fn ladder_plot(scan: &LadderScan, title: String, x_label: &str) -> Plot {
    let mut series = Vec::new();
    let n_rungs = scan.points.first().map_or(0, |p| p.doublets.len());
    for rung in 1..=n_rungs {
        let s = scan.series(rung);
        let mut pts: Vec<(f64, f64)> = s.iter().map(|(x, d)| (*x, d.omega_minus)).collect();
        pts.extend(s.iter().map(|(x, d)| (*x, d.omega_plus)));
        let parity = s.first().map_or("", |(_, d)| d.parity.as_str());
        series.push(Series::scatter(format!("n={rung} ({parity})"), pts));
    }
    Plot {
        title,
        x_label: x_label.into(),
        y_label: "(omega - omega_c)/g".into(),
        log_x: false,
        series,
    }
}

fn ladder(c: &RunConfig, out: &mut OutputDir) -> Result<i32> {
    let l = &c.ladder;
    if l.vs_lambda {
        let grid = l.lambda_grid.build()?;
        let scan = scans::doublets_vs_lambda(l.lambda_rungs, &grid, &c.params)?;
        write_table(c, out, "doublets_vs_lambda", &scan.header(), &scan.rows(), &scan)?;
        let plot = ladder_plot(&scan, "Inner Rabi doublets vs lambda".into(), "lambda");
        write_svg(c, out, "doublets_vs_lambda", &plot)?;
        say!("doublets_vs_lambda: {} points x {} rungs", scan.points.len(), l.lambda_rungs);
    }
    if l.vs_detuning {
        let grid = l.delta_grid.build()?;
        for &lambda in &l.detuning_lambdas {
            let scan = scans::doublets_vs_detuning(lambda, &grid, &c.params, l.detuning_rungs)?;
            let stem = format!("doublets_vs_detuning_lambda{}", tag(lambda));
            write_table(c, out, &stem, &scan.header(), &scan.rows(), &scan)?;
            let plot = ladder_plot(&scan, format!("Rabi doublets vs detuning, lambda = {lambda}"), "delta/g");
            write_svg(c, out, &stem, &plot)?;
            say!("{stem}: {} points x {} rungs", scan.points.len(), l.detuning_rungs);
        }
    }
    Ok(EXIT_OK)
}

fn spectrum(c: &RunConfig, out: &mut OutputDir) -> Result<i32> {
    let omega: Vec<f64> = c
        .spectrum
        .omega_grid
        .build()?
        .into_iter()
        .map(|w| w * c.params.g)
        .collect();
    let configs: Vec<(f64, f64)> = c.spectrum.points.iter().map(|p| (p.lambda, p.delta)).collect();
    let pool = scans::worker_pool(c.output.workers)?;
    let results: Vec<SpectrumResult> = pool.install(|| {
        scans::spectra_suite(&configs, &c.params, &c.cutoff, &omega, &c.spectrum.options)
    })?;
    for ((lambda, delta), r) in configs.iter().zip(&results) {
        let stem = format!("spectrum_lambda{}_delta{}", tag(*lambda), tag(*delta));
        let header = vec!["omega".to_string(), "intensity".to_string()];
        let rows: Vec<Vec<String>> = r
            .omega
            .iter()
            .zip(&r.intensity)
            .map(|(w, s)| vec![fmt_f64(*w), fmt_f64(*s)])
            .collect();
        write_table(c, out, &stem, &header, &rows, r)?;
        let plot = Plot {
            title: format!("Emission spectrum, lambda = {lambda}, delta = {delta}"),
            x_label: "(omega - omega_c)/g".into(),
            y_label: "S(omega) [arb. units]".into(),
            log_x: false,
            series: vec![Series::line(
                format!("lambda={lambda}"),
                r.omega.iter().zip(&r.intensity).map(|(w, s)| (w / c.params.g, *s)).collect(),
            )],
        };
        write_svg(c, out, &stem, &plot)?;
        say!(
            "{stem}: n_max = {}, method = {}{}, peaks at {:?}",
            r.metadata.n_max,
            r.metadata.method,
            if r.metadata.fell_back { " (fallback)" } else { "" },
            r.peaks().iter().map(|w| (w / c.params.g * 1e3).round() / 1e3).collect::<Vec<_>>()
        );
    }
    Ok(EXIT_OK)
}

fn g2(c: &RunConfig, out: &mut OutputDir) -> Result<i32> {
    let pumps = c.g2.pump_grid.build()?;
    let pool = scans::worker_pool(c.output.workers)?;
    let scan: G2Scan = scans::g2_vs_pump(&c.g2.lambdas, &pumps, &c.params, &c.cutoff, &pool)?;
    write_table(c, out, "g2_vs_pump", &scan.header(), &scan.rows(), &scan)?;
    let plot = Plot {
        title: "Zero-delay second-order correlation".into(),
        x_label: "P/g".into(),
        y_label: "g2(0)".into(),
        log_x: pumps.iter().all(|&p| p > 0.0),
        series: c
            .g2
            .lambdas
            .iter()
            .map(|&l| {
                Series::line(
                    format!("lambda={l}"),
                    scan.series(l).iter().map(|p| (p.pump / c.params.g, p.g2)).collect(),
                )
            })
            .collect(),
    };
    write_svg(c, out, "g2_vs_pump", &plot)?;
    for &l in &c.g2.lambdas {
        let s = scan.series(l);
        let max_n = s.iter().map(|p| p.n_max).max().unwrap_or(0);
        say!("lambda = {l}: {} pump points, largest n_max = {max_n}", s.len());
    }
    Ok(EXIT_OK)
}
