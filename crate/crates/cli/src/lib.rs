//! Command-line driver: generate examples, run AR2 on them, verify them,
//! sample random schedules and plot prefix curves.
//!
//! Exit codes: 0 pass, 1 verification or run failure, 2 bad input, 3 I/O error.

pub mod plot;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use slowar2::document::{ExampleDocument, GenerateOptions};
use slowar2::example::ScheduleKind;
use slowar2::solver::run_ar2;
use slowar2::verify::{self, Mode, SampleConstraints};
use slowar2::Order;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    BadInput(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::BadInput(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<slowar2::Error> for CliError {
    fn from(e: slowar2::Error) -> Self {
        match e {
            slowar2::Error::Io(_) => CliError::Io(e.to_string()),
            slowar2::Error::Aborted { .. } | slowar2::Error::NonFinite(_) => {
                CliError::Failed(e.to_string())
            }
            _ => CliError::BadInput(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "slowar2", version, about = "AR2 slow-convergence examples")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build an example and write it as JSON.
    Generate(GenerateArgs),
    /// Run AR2 on a stored example.
    Run(RunArgs),
    /// Check a stored example and the AR2 run on it.
    Verify(VerifyArgs),
    /// Verify many random schedules.
    Sample(SampleArgs),
    /// Plot prefix curves.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScheduleArg {
    Book,
    Unperturbed,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Paper,
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Fig1,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub q: u8,
    #[arg(long)]
    pub eps: f64,
    #[arg(long, value_enum)]
    pub schedule: ScheduleArg,
    #[arg(long, required_if_eq("schedule", "random"))]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 0.5)]
    pub beta_q_max: f64,
    #[arg(long)]
    pub beta0: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub example: PathBuf,
    #[arg(long, value_enum)]
    pub mode: ModeArg,
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub example: PathBuf,
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub q: u8,
    #[arg(long)]
    pub eps: f64,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub beta0: bool,
    #[arg(long)]
    pub beta_q_max: Option<f64>,
    /// Write PREFIX.json (summary) and PREFIX.csv (per-sample rows).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub q: u8,
    #[arg(long)]
    pub eps: f64,
    #[arg(long)]
    pub iters: usize,
    #[arg(long, value_enum)]
    pub preset: Preset,
    #[arg(long)]
    pub out: PathBuf,
}

/// Whether the command's check succeeded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

fn order(q: u8) -> Order {
    if q == 1 {
        Order::One
    } else {
        Order::Two
    }
}

fn mode(m: ModeArg) -> Mode {
    match m {
        ModeArg::Paper => Mode::Paper,
        ModeArg::Strict => Mode::Strict,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))
}

fn finish<W: Write>(mut w: W, path: &Path) -> Result<(), CliError> {
    w.flush()
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Output errors are I/O errors whatever the underlying cause.
fn write_err(path: &Path) -> impl Fn(slowar2::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("cannot write {}: {e}", path.display()))
}

fn load(path: &Path) -> Result<ExampleDocument, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::BadInput(format!("cannot open {}: {e}", path.display())))?;
    ExampleDocument::from_reader(BufReader::new(file))
        .map_err(|e| CliError::BadInput(format!("malformed example {}: {e}", path.display())))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn cmd_generate(args: &GenerateArgs, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let kind = match args.schedule {
        ScheduleArg::Book => ScheduleKind::Book,
        ScheduleArg::Unperturbed => ScheduleKind::Unperturbed,
        ScheduleArg::Random => ScheduleKind::Random,
    };
    let doc = ExampleDocument::generate(&GenerateOptions {
        q: order(args.q),
        eps: args.eps,
        eta1: 0.1,
        kind,
        seed: args.seed,
        beta_q_max: args.beta_q_max,
        beta0: args.beta0,
    })?;
    let mut w = create(&args.out)?;
    doc.to_writer(&mut w).map_err(write_err(&args.out))?;
    finish(w, &args.out)?;
    let seq = &doc.sequences;
    let _ = writeln!(out, "k_eps={}", doc.metadata.k_eps);
    let _ = writeln!(
        out,
        "kappa_f={} (closed form {})",
        seq.kappa_f, seq.kappa_f_closed_form
    );
    Ok(Outcome::Pass)
}

pub fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let doc = load(&args.example)?;
    let mode = mode(args.mode);
    let config = verify::paper_config(&doc.schedule, mode)?;
    if mode == Mode::Strict {
        let found = verify::full_line_discrepancies(&doc.sequences, &doc.schedule)?;
        if let Some(first) = found.first() {
            let _ = writeln!(
                out,
                "warning: paper_discrepancy: the whole-line model minimizer departs from the prescribed step at {} knot(s), first k={} (step {} instead of {})",
                found.len(),
                first.k,
                first.full_line_step,
                first.prescribed_step
            );
        }
    }
    let trace = run_ar2(&doc.interpolant, 0.0, &config)?;
    if let Some(path) = &args.trace {
        let mut w = create(path)?;
        trace.write_csv(&mut w).map_err(write_err(path))?;
        finish(w, path)?;
    }
    let c = trace.counters;
    let _ = writeln!(out, "terminated k={}", trace.termination_index);
    let _ = writeln!(
        out,
        "evaluations f={} f'={} f''={}",
        c.n_value, c.n_deriv1, c.n_deriv2
    );
    Ok(Outcome::Pass)
}

pub fn cmd_verify(
    args: &VerifyArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<Outcome, CliError> {
    let doc = load(&args.example)?;
    let mode = if args.strict {
        Mode::Strict
    } else {
        Mode::Paper
    };
    let config = verify::paper_config(&doc.schedule, mode)?;
    let report = verify::verify_sequences(&doc.sequences, &doc.schedule).merge(verify::verify_run(
        &doc.interpolant,
        &doc.schedule,
        &config,
        mode,
    )?);
    let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?;
    let _ = writeln!(out, "{text}");
    if report.passed {
        let _ = writeln!(err, "pass");
        Ok(Outcome::Pass)
    } else {
        let _ = writeln!(err, "fail: {}", report.failed_checks().join(", "));
        Ok(Outcome::Fail)
    }
}

pub fn cmd_sample(args: &SampleArgs, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let constraints = SampleConstraints {
        beta_q_max: args.beta_q_max,
        beta0: args.beta0,
        ..SampleConstraints::default()
    };
    let summary =
        verify::measure_experiment(order(args.q), args.eps, args.n, args.seed, constraints)?;
    if let Some(prefix) = &args.out {
        let json = with_suffix(prefix, ".json");
        let mut w = create(&json)?;
        serde_json::to_writer_pretty(&mut w, &summary).map_err(|e| CliError::Io(e.to_string()))?;
        finish(w, &json)?;
        let csv = with_suffix(prefix, ".csv");
        let mut w = create(&csv)?;
        summary.write_samples_csv(&mut w).map_err(write_err(&csv))?;
        finish(w, &csv)?;
    }
    let _ = writeln!(out, "pass {}/{}", summary.passed, summary.n_samples);
    for (name, count) in &summary.failure_histogram {
        let _ = writeln!(out, "  {name}: {count}");
    }
    let _ = writeln!(out, "max deviation {:e}", summary.max_deviation);
    Ok(if summary.passed == summary.n_samples {
        Outcome::Pass
    } else {
        Outcome::Fail
    })
}

pub fn cmd_plot(args: &PlotArgs, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let Preset::Fig1 = args.preset;
    let curves = plot::fig1_curves(order(args.q), args.eps, args.iters)?;
    for c in &curves {
        let path = with_suffix(&args.out, &format!("_{}.csv", c.spec.name));
        let mut w = create(&path)?;
        c.write_csv(&mut w).map_err(write_err(&path))?;
        finish(w, &path)?;
        let _ = writeln!(out, "{}", path.display());
    }
    let title = format!(
        "q={} eps={} first {} iterations",
        args.q, args.eps, args.iters
    );
    let svg_path = with_suffix(&args.out, ".svg");
    let mut w = create(&svg_path)?;
    w.write_all(plot::render_svg(&curves, &title).as_bytes())
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", svg_path.display())))?;
    finish(w, &svg_path)?;
    let _ = writeln!(out, "{}", svg_path.display());
    Ok(Outcome::Pass)
}

pub fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Generate(a) => cmd_generate(a, out),
        Command::Run(a) => cmd_run(a, out),
        Command::Verify(a) => cmd_verify(a, out, err),
        Command::Sample(a) => cmd_sample(a, out),
        Command::Plot(a) => cmd_plot(a, out),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return ExitCode::from(2);
            }
            let _ = write!(out, "{e}");
            return ExitCode::SUCCESS;
        }
    };
    match dispatch(&cli, out, err) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
