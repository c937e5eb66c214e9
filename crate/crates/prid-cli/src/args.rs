//! Command-line surface: subcommands and flags.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use prid::{SigmaXMode, Units, DEFAULT_BURN_IN};

#[derive(Parser, Debug)]
#[command(
    name = "prid",
    version,
    about = "Predictive information decomposition for multivariate time series",
    propagate_version = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate a series from a model description and write it as CSV.
    Simulate(SimulateArgs),
    /// Fit a model to CSV data and decompose its predictive information.
    Analyze(AnalyzeArgs),
    /// Analyze with the permutation-surrogate significance test forced on.
    SurrogateTest(AnalyzeArgs),
    /// Tabulate the decomposition across a grid of coefficient values.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Model description JSON.
    #[arg(long)]
    pub model: PathBuf,

    /// Number of samples to keep.
    #[arg(long)]
    pub samples: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Samples discarded before recording starts.
    #[arg(long, default_value_t = DEFAULT_BURN_IN)]
    pub burn_in: usize,

    /// Write a header line with unit labels.
    #[arg(long)]
    pub csv_header: bool,

    /// Output path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// Input CSV: one row per time step, one column per unit.
    #[arg(long)]
    pub data: PathBuf,

    /// Treat the first CSV line as column labels.
    #[arg(long)]
    pub csv_header: bool,

    /// Fixed model order; skips order selection.
    #[arg(long, conflicts_with = "max_order")]
    pub order: Option<usize>,

    /// Upper bound for automatic order selection.
    #[arg(long, default_value_t = 10)]
    pub max_order: usize,

    /// Embedding order used for restricted models.
    #[arg(long, default_value_t = 20)]
    pub q: usize,

    #[arg(long, value_enum, default_value_t = UnitsArg::Nats)]
    pub units: UnitsArg,

    /// Source of the next-state covariance: implied by the fitted model,
    /// or estimated from the sample.
    #[arg(long, value_enum, default_value_t = SigmaXArg::Model)]
    pub sigma_x: SigmaXArg,

    /// Number of permutation surrogates; enables the significance test.
    #[arg(long, value_name = "N")]
    pub surrogates: Option<usize>,

    /// Significance level for the surrogate test.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Shuffle each column independently instead of applying one shared
    /// permutation (which preserves zero-lag correlations).
    #[arg(long)]
    pub independent_shuffles: bool,

    /// Keep the full per-measure surrogate distributions in the output.
    #[arg(long)]
    pub surrogate_values: bool,

    /// Output path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Sweep definition JSON.
    #[arg(long)]
    pub spec: PathBuf,

    /// Embedding order used for restricted models.
    #[arg(long, default_value_t = 20)]
    pub q: usize,

    #[arg(long, value_enum, default_value_t = UnitsArg::Nats)]
    pub units: UnitsArg,

    /// Simulate this many samples per grid point and refit, adding
    /// estimated measure columns next to the analytic ones.
    #[arg(long, value_name = "SAMPLES")]
    pub estimate: Option<usize>,

    /// Upper bound for order selection in estimation mode.
    #[arg(long, default_value_t = 10)]
    pub max_order: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Output path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum UnitsArg {
    Nats,
    Bits,
}

impl From<UnitsArg> for Units {
    fn from(units: UnitsArg) -> Units {
        match units {
            UnitsArg::Nats => Units::Nats,
            UnitsArg::Bits => Units::Bits,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SigmaXArg {
    Model,
    Sample,
}

impl From<SigmaXArg> for SigmaXMode {
    fn from(mode: SigmaXArg) -> SigmaXMode {
        match mode {
            SigmaXArg::Model => SigmaXMode::ModelImplied,
            SigmaXArg::Sample => SigmaXMode::SampleEstimate,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_parse_into_the_expected_settings() {
        let cli = Cli::try_parse_from([
            "prid",
            "analyze",
            "--data",
            "series.csv",
            "--csv-header",
            "--max-order",
            "6",
            "--q",
            "15",
            "--units",
            "bits",
            "--sigma-x",
            "sample",
            "--surrogates",
            "50",
            "--alpha",
            "0.01",
            "--seed",
            "7",
        ])
        .unwrap();
        match cli.command {
            Command::Analyze(args) => {
                assert_eq!(args.data, PathBuf::from("series.csv"));
                assert!(args.csv_header);
                assert_eq!(args.order, None);
                assert_eq!(args.max_order, 6);
                assert_eq!(args.q, 15);
                assert_eq!(args.units, UnitsArg::Bits);
                assert_eq!(args.sigma_x, SigmaXArg::Sample);
                assert_eq!(args.surrogates, Some(50));
                assert_eq!(args.alpha, 0.01);
                assert_eq!(args.seed, 7);
                assert!(!args.surrogate_values);
            }
            other => panic!("parsed into {other:?}"),
        }
    }

    #[test]
    fn fixed_order_conflicts_with_selection_bound() {
        let result = Cli::try_parse_from([
            "prid",
            "analyze",
            "--data",
            "x.csv",
            "--order",
            "2",
            "--max-order",
            "5",
        ]);
        assert!(result.is_err());
    }

    #[test]
    fn simulate_defaults_are_sensible() {
        let cli =
            Cli::try_parse_from(["prid", "simulate", "--model", "m.json", "--samples", "100"])
                .unwrap();
        match cli.command {
            Command::Simulate(args) => {
                assert_eq!(args.samples, 100);
                assert_eq!(args.seed, 0);
                assert_eq!(args.burn_in, DEFAULT_BURN_IN);
                assert!(args.out.is_none());
            }
            other => panic!("parsed into {other:?}"),
        }
    }
}
