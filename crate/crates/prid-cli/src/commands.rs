//! Subcommand implementations shared by the binary and tests.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use prid::{
    run_analysis, significance_test, AnalysisConfig, OrderSpec, PridError, Result,
    SurrogateConfig, VarModel,
};

use crate::args::{AnalyzeArgs, Cli, Command, SimulateArgs, SweepArgs};
use crate::report::{AnalysisArtifact, ErrorArtifact};
use crate::sweep::{run_sweep, write_sweep_csv, EstimateConfig, SweepSpec};
use crate::{io as series_io};

/// Runs a parsed invocation and reports the process exit code: 0 for
/// success, 2 for input errors, 3 for numerical failures. Errors are
/// written to stderr as one line of JSON.
pub fn run(cli: Cli) -> i32 {
    match dispatch(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("{}", ErrorArtifact::from_error(&err).to_line());
            ErrorArtifact::exit_code(&err)
        }
    }
}

pub fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Analyze(args) => cmd_analyze(&args, false),
        Command::SurrogateTest(args) => cmd_analyze(&args, true),
        Command::Sweep(args) => cmd_sweep(&args),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| PridError::InvalidInput(format!("cannot read {}: {e}", path.display())))
}

/// Writes through a closure to either a file or stdout.
fn with_sink(path: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|e| {
                PridError::InvalidInput(format!("cannot create {}: {e}", path.display()))
            })?;
            let mut sink = BufWriter::new(file);
            write(&mut sink)?;
            sink.flush().map_err(|e| {
                PridError::InvalidInput(format!("cannot finish writing {}: {e}", path.display()))
            })
        }
        None => {
            let stdout = std::io::stdout();
            let mut sink = stdout.lock();
            write(&mut sink)
        }
    }
}

fn write_json(sink: &mut dyn Write, value: &impl serde::Serialize) -> Result<()> {
    serde_json::to_writer_pretty(&mut *sink, value)
        .map_err(|e| PridError::InvalidInput(format!("cannot serialize output: {e}")))?;
    writeln!(sink).map_err(|e| PridError::InvalidInput(format!("cannot write output: {e}")))
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let text = read_text(&args.model)?;
    let model: VarModel = serde_json::from_str(&text).map_err(|e| {
        PridError::InvalidInput(format!("invalid model in {}: {e}", args.model.display()))
    })?;
    let series = model.simulate(args.samples, args.burn_in, args.seed)?;
    with_sink(args.out.as_deref(), |sink| {
        series_io::write_series(sink, &series, args.csv_header)
    })
}

fn cmd_analyze(args: &AnalyzeArgs, force_surrogates: bool) -> Result<()> {
    let series = series_io::read_series_path(&args.data, args.csv_header)?;
    if series.n_vars() < 2 {
        return Err(PridError::InvalidInput(format!(
            "analysis needs at least 2 columns, {} has {}",
            args.data.display(),
            series.n_vars()
        )));
    }
    let analysis = AnalysisConfig {
        order: match args.order {
            Some(p) => OrderSpec::Fixed(p),
            None => OrderSpec::Bic {
                max_order: args.max_order,
            },
        },
        q: args.q,
        sigma_x: args.sigma_x.into(),
        report_q_sensitivity: true,
    };

    let n_surrogates = if force_surrogates {
        Some(args.surrogates.unwrap_or(SurrogateConfig::default().n_surrogates))
    } else {
        args.surrogates
    };
    let (outcome, significance) = match n_surrogates {
        Some(n) => {
            let cfg = SurrogateConfig {
                n_surrogates: n,
                alpha: args.alpha,
                seed: args.seed,
                shared_permutation: !args.independent_shuffles,
            };
            let (outcome, report) = significance_test(&series, &cfg, &analysis)?;
            let report = if args.surrogate_values {
                report
            } else {
                report.without_surrogate_values()
            };
            (outcome, Some(report))
        }
        None => (run_analysis(&series, &analysis)?, None),
    };

    let artifact = AnalysisArtifact::new(&series, outcome, significance, args.units.into());
    with_sink(args.out.as_deref(), |sink| write_json(sink, &artifact))
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let text = read_text(&args.spec)?;
    let spec = SweepSpec::from_json(&text)?;
    let estimate = args.estimate.map(|samples| EstimateConfig {
        samples,
        seed: args.seed,
        max_order: args.max_order,
    });
    let rows = run_sweep(&spec, args.q, args.units.into(), estimate)?;
    with_sink(args.out.as_deref(), |sink| {
        write_sweep_csv(sink, &spec, &rows)
    })
}
