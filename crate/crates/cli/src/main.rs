//! `harmrank`: rank harm categories by ordinal concentration.

mod serve;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use harmrank_core::ingest::{Granularity, KindFilter, Schema};
use harmrank_core::metrics::CiConvention;
use harmrank_core::pipeline::{self, PermutationConfig, RemovalConfig, RunConfig, SensitivityConfig};
use harmrank_core::report::emit_ranking;
use harmrank_core::{Error, ErrorKind};

#[derive(Parser)]
#[command(name = "harmrank", version, about = "Rank AI harm categories by ordinal concentration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse inputs and write the aggregated frequency table.
    Ingest(Common),
    /// Compute AIH, CI and rankings.
    Compute {
        #[command(flatten)]
        common: Common,
        /// Add best/worst-case AIH columns.
        #[arg(long)]
        boundary: bool,
    },
    /// Compute metrics and run sensitivity analyses.
    Sensitivity {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        modes: SensitivityArgs,
    },
    /// Rebuild a report tree from a run manifest.
    Report {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, env = "HARMRANK_OUT", default_value = "harmrank-out")]
        out: PathBuf,
    },
    /// Serve the snapshot API over HTTP.
    Serve(serve::ServeArgs),
}

#[derive(Args)]
struct Common {
    /// Annotation file; repeat for several files of the same schema.
    #[arg(long = "input", short = 'i', required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    schema: Schema,
    /// Severity ordering file (least severe first). Defaults to the bundled
    /// stakeholder ordering.
    #[arg(long)]
    severity_order: Option<PathBuf>,
    #[arg(long, default_value = "category")]
    granularity: Granularity,
    #[arg(long, default_value = "survival")]
    ci_convention: CiConvention,
    /// Keep only actual or potential harms.
    #[arg(long, default_value = "all")]
    kind: KindFilter,
    /// Numeric Gini from the ordering file's `name=value` severities.
    #[arg(long)]
    numeric_gini: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "HARMRANK_OUT", default_value = "harmrank-out")]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Boundary,
    Permutation,
    Removal,
    Cluster,
}

#[derive(Args)]
struct SensitivityArgs {
    #[arg(long, value_delimiter = ',', default_value = "boundary,permutation,removal,cluster")]
    sensitivity: Vec<Mode>,
    /// Adjacent swaps per permutation scenario, one scenario set per value.
    #[arg(long, value_delimiter = ',', default_value = "1,2,5")]
    swaps: Vec<usize>,
    /// Scenarios per permutation set.
    #[arg(long, default_value_t = 20)]
    scenarios: usize,
    /// Fractions of annotations removed, one result per value.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.5,0.8")]
    fractions: Vec<f64>,
    /// Trials per removal fraction.
    #[arg(long, default_value_t = 100)]
    trials: usize,
}

impl Common {
    fn into_config(self, sensitivity: SensitivityConfig) -> RunConfig {
        let mut c = RunConfig::new(self.inputs, self.schema, self.out);
        c.severity_order = self.severity_order;
        c.granularity = self.granularity;
        c.ci_convention = self.ci_convention;
        c.kind_filter = self.kind;
        c.numeric_gini = self.numeric_gini;
        c.seed = self.seed;
        c.sensitivity = sensitivity;
        c
    }
}

impl SensitivityArgs {
    fn config(&self) -> SensitivityConfig {
        let on = |m| self.sensitivity.contains(&m);
        SensitivityConfig {
            boundary: on(Mode::Boundary),
            permutation: on(Mode::Permutation).then(|| PermutationConfig {
                ks: self.swaps.clone(),
                scenarios: self.scenarios,
            }),
            removal: on(Mode::Removal).then(|| RemovalConfig {
                fractions: self.fractions.clone(),
                trials: self.trials,
            }),
            cluster: on(Mode::Cluster),
        }
    }
}

fn summarize(out: &pipeline::RunOutput, dir: &std::path::Path) {
    print!("{}", emit_ranking(&out.metrics));
    println!("wrote {} files to {}", out.bundle.len(), dir.display());
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Ingest(common) => {
            let config = common.into_config(SensitivityConfig::default());
            let bundle = pipeline::run_ingest(&config)?;
            println!("wrote {} files to {}", bundle.len(), config.out.display());
        }
        Command::Compute { common, boundary } => {
            let config = common.into_config(SensitivityConfig {
                boundary,
                ..Default::default()
            });
            summarize(&pipeline::run_pipeline(&config)?, &config.out);
        }
        Command::Sensitivity { common, modes } => {
            let config = common.into_config(modes.config());
            summarize(&pipeline::run_pipeline(&config)?, &config.out);
        }
        Command::Report { manifest, out } => {
            let m = pipeline::read_manifest(&manifest)?;
            summarize(&pipeline::replay(&m, &out)?, &out);
        }
        Command::Serve(args) => serve::run(args)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e.kind() {
                ErrorKind::Validation => ExitCode::from(2),
                ErrorKind::Computation => ExitCode::from(3),
            }
        }
    }
}
