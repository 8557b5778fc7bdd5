//! `gauge`: total Kurzweil-Henstock integrals, plain KH limits and basic sums
//! for functions with declared exceptional points.
//!
//! Exit status: 0 on success (a divergence verdict is a result, not a
//! failure), 1 when a check fails, 2 on usage or parse errors, 3 when a
//! partition could not be built or a function could not be evaluated.

mod commands;
mod error;
mod format;
mod job;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gauge_core::funcdsl::parse;

use crate::commands::Report;
use crate::error::CliError;
use crate::format::csv_line;
use crate::job::{BuilderKind, Command, Job, JobSpec, OutputFormat};

#[derive(Debug, Parser)]
#[command(name = "gauge", version, about = "Total Kurzweil-Henstock integration with exceptional points")]
struct Cli {
    #[command(subcommand)]
    command: Option<Cmd>,
    #[command(flatten)]
    flags: JobFlags,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Total integral, plain KH limit, basic sum, residuals and the identity between them.
    Integrate,
    /// Total integral with one verified partition per epsilon.
    Verify,
    /// Residuals at each exceptional point and the basic sum.
    Residues,
    /// Build one partition and list its tagged pairs.
    Partition,
    /// Parse a function definition and print its canonical form.
    Parse {
        /// Definition text; defaults to --function.
        text: Option<String>,
    },
}

/// Comma-separated numbers; a newtype so clap keeps it a single value.
#[derive(Debug, Clone)]
struct NumberList(Vec<f64>);

fn numbers(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect()
}

fn number_list(s: &str) -> Result<NumberList, String> {
    numbers(s).map(NumberList)
}

fn span_pair(s: &str) -> Result<[f64; 2], String> {
    match numbers(s)?.as_slice() {
        [a, b] => Ok([*a, *b]),
        _ => Err("expected two numbers `a,b`".into()),
    }
}

#[derive(Debug, Args)]
struct JobFlags {
    /// JSON job file; flags override its fields.
    #[arg(long, global = true)]
    job: Option<PathBuf>,
    /// Catalog model name.
    #[arg(long, global = true, conflicts_with = "function")]
    catalog: Option<String>,
    /// Primitive F in the function language.
    #[arg(long, global = true, allow_hyphen_values = true)]
    function: Option<String>,
    /// Derivative f off the exceptional set.
    #[arg(long, global = true, allow_hyphen_values = true)]
    derivative: Option<String>,
    /// Exceptional points, comma separated.
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = number_list)]
    exceptional: Option<NumberList>,
    /// Integration span `a,b`.
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = span_pair)]
    span: Option<[f64; 2]>,
    /// Straddle tolerances, comma separated.
    #[arg(long, global = true, value_parser = number_list)]
    epsilon: Option<NumberList>,
    /// Anchor radius around each exceptional point.
    #[arg(long, global = true)]
    anchor: Option<f64>,
    #[arg(long, global = true)]
    max_depth: Option<usize>,
    /// Convergence tolerance on consecutive differences.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Magnitude above which a growing sequence counts as divergent.
    #[arg(long, global = true)]
    div_threshold: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    output: Option<OutputFormat>,
    /// Write the plain-KH sequence as CSV.
    #[arg(long, global = true)]
    emit_convergence: Option<PathBuf>,
    /// Partition builder for `partition`.
    #[arg(long, global = true, value_enum)]
    builder: Option<BuilderKind>,
}

impl JobFlags {
    fn spec(&self, command: Option<Command>) -> JobSpec {
        JobSpec {
            primitive: self.function.clone(),
            derivative: self.derivative.clone(),
            exceptional: self.exceptional.clone().map(|l| l.0),
            span: self.span,
            catalog: self.catalog.clone(),
            command,
            epsilon: self.epsilon.clone().map(|l| l.0),
            anchor: self.anchor,
            max_depth: self.max_depth,
            tol: self.tol,
            div_threshold: self.div_threshold,
            seed: self.seed,
            output: self.output,
            builder: self.builder,
        }
    }
}

fn emit(report: &Report, format: OutputFormat) -> Result<(), CliError> {
    match write_report(report, format) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn write_report(report: &Report, format: OutputFormat) -> std::io::Result<()> {
    let mut out = std::io::stdout().lock();
    match format {
        OutputFormat::Json => {
            let text = serde_json::to_string_pretty(&report.json).expect("JSON values serialize");
            writeln!(out, "{text}")?;
        }
        OutputFormat::Csv => {
            for row in &report.csv {
                writeln!(out, "{}", csv_line(row))?;
            }
        }
        OutputFormat::Table => write!(out, "{}", report.table)?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let command = match &cli.command {
        None => None,
        Some(Cmd::Integrate) => Some(Command::Integrate),
        Some(Cmd::Verify) => Some(Command::Verify),
        Some(Cmd::Residues) => Some(Command::Residues),
        Some(Cmd::Partition) => Some(Command::Partition),
        Some(Cmd::Parse { text }) => {
            let text = text
                .clone()
                .or_else(|| cli.flags.function.clone())
                .ok_or_else(|| CliError::Usage("parse needs a definition".into()))?;
            let def = parse(&text).map_err(|error| CliError::Parse { label: "input".into(), text, error })?;
            println!("{}", def.render());
            return Ok(0);
        }
    };
    let base = match &cli.flags.job {
        Some(path) => JobSpec::from_file(path)?,
        None => JobSpec::default(),
    };
    let spec = base.overlay(cli.flags.spec(command));
    let command = match spec.command {
        Some(Command::Parse) => return Err(CliError::Usage("use the `parse` subcommand for parse jobs".into())),
        Some(c) => c,
        None => return Err(CliError::Usage("no command given: use a subcommand or a job file `command`".into())),
    };
    let job = Job::resolve(spec)?;
    let report = match command {
        Command::Integrate => {
            let (report, d) = commands::integrate(&job)?;
            if let Some(path) = &cli.flags.emit_convergence {
                commands::write_convergence(path, &d)?;
            }
            report
        }
        Command::Verify => commands::verify(&job)?,
        Command::Residues => commands::residues(&job)?,
        Command::Partition => commands::partition(&job)?,
        Command::Parse => unreachable!(),
    };
    emit(&report, job.output)?;
    Ok(report.status)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("gauge: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
