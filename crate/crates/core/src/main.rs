use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use enroll_core::cli::{
    cmd_predict, cmd_profile, cmd_run, cmd_synth, CliError, ImputeChoice, InputSource, RunConfig,
    SelectionMethod, SynthSource,
};
use enroll_core::select::{Direction, MeritMode};

#[derive(Parser)]
#[command(name = "enroll", version, about = "Enrollment-likelihood modelling pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enrollment breakdown per binary/categorical column.
    Profile {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        /// Also write the breakdown as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Clean, select features, cross-validate, fit and write reports.
    Run(RunArgs),
    /// Score a CSV with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Generate a synthetic cohort CSV (and its schema).
    Synth {
        /// Cohort spec (TOML). Omit together with --paper-cohort.
        #[arg(long, required_unless_present = "paper_cohort")]
        spec: Option<PathBuf>,
        /// Generate the reference applicant cohort.
        #[arg(long, conflicts_with = "spec")]
        paper_cohort: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ImputeArg {
    ModeFill,
    DropRows,
    DropColumns,
}

#[derive(Clone, Copy, ValueEnum)]
enum SelectArg {
    Rank,
    Wrapper,
    None,
}

#[derive(Clone, Copy, ValueEnum)]
enum DirectionArg {
    Forward,
    Backward,
    Bidirectional,
}

#[derive(Clone, Copy, ValueEnum)]
enum MeritArg {
    Cv,
    Train,
}

#[derive(clap::Args)]
struct RunArgs {
    /// TOML run configuration; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input CSV; repeat with matching --schema for multiple sources.
    #[arg(long)]
    input: Vec<PathBuf>,
    #[arg(long)]
    schema: Vec<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    impute: Option<ImputeArg>,
    #[arg(long)]
    drop_threshold: Option<f64>,
    #[arg(long)]
    standardize_counts: bool,
    #[arg(long)]
    test_fraction: Option<f64>,
    #[arg(long, value_enum)]
    select: Option<SelectArg>,
    #[arg(long)]
    rank_keep: Option<usize>,
    #[arg(long, value_enum)]
    direction: Option<DirectionArg>,
    #[arg(long)]
    stale_limit: Option<usize>,
    #[arg(long)]
    merit_folds: Option<usize>,
    #[arg(long, value_enum)]
    merit: Option<MeritArg>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    ridge: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    sequential: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn into_config(self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if !self.input.is_empty() {
            if self.input.len() != self.schema.len() {
                return Err(CliError::config("each --input needs a matching --schema"));
            }
            cfg.inputs = self
                .input
                .into_iter()
                .zip(self.schema)
                .map(|(path, schema)| InputSource { path, schema })
                .collect();
        } else if !self.schema.is_empty() {
            return Err(CliError::config("--schema given without --input"));
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.impute {
            cfg.imputation = match v {
                ImputeArg::ModeFill => ImputeChoice::ModeFill,
                ImputeArg::DropRows => ImputeChoice::DropRows,
                ImputeArg::DropColumns => ImputeChoice::DropColumns,
            };
        }
        if let Some(v) = self.drop_threshold {
            cfg.drop_threshold = v;
        }
        cfg.standardize_counts |= self.standardize_counts;
        if let Some(v) = self.test_fraction {
            cfg.test_fraction = v;
        }
        if let Some(v) = self.select {
            cfg.selection = match v {
                SelectArg::Rank => SelectionMethod::Rank,
                SelectArg::Wrapper => SelectionMethod::Wrapper,
                SelectArg::None => SelectionMethod::None,
            };
        }
        if self.rank_keep.is_some() {
            cfg.rank_keep = self.rank_keep;
        }
        if let Some(v) = self.direction {
            cfg.direction = match v {
                DirectionArg::Forward => Direction::Forward,
                DirectionArg::Backward => Direction::Backward,
                DirectionArg::Bidirectional => Direction::Bidirectional,
            };
        }
        if let Some(v) = self.stale_limit {
            cfg.stale_limit = v;
        }
        if let Some(v) = self.merit_folds {
            cfg.merit_folds = v;
        }
        if let Some(v) = self.merit {
            cfg.merit_mode = match v {
                MeritArg::Cv => MeritMode::CrossValidated,
                MeritArg::Train => MeritMode::TrainingSet,
            };
        }
        if let Some(v) = self.folds {
            cfg.folds = v;
        }
        if let Some(v) = self.ridge {
            cfg.ridge = v;
        }
        if let Some(v) = self.max_iterations {
            cfg.max_iterations = v;
        }
        if let Some(v) = self.tolerance {
            cfg.tolerance = v;
        }
        if let Some(v) = self.threshold {
            cfg.threshold = v;
        }
        if self.sequential {
            cfg.parallel = false;
        }
        if let Some(v) = self.out {
            cfg.output_dir = v;
        }
        Ok(cfg)
    }
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Profile { input, schema, csv } => {
            let p = cmd_profile(&input, &schema, csv.as_deref())?;
            print!("{}", p.to_text());
        }
        Command::Run(args) => {
            let cfg = args.into_config()?;
            let summary = cmd_run(&cfg)?;
            println!(
                "{} records, {} features selected, pooled CV accuracy {}",
                summary.records,
                summary.selected.len(),
                summary
                    .cv
                    .pooled_metrics
                    .accuracy
                    .map_or_else(|| "undefined".to_string(), |a| format!("{a:.4}")),
            );
            println!("reports written to {}", cfg.output_dir.display());
        }
        Command::Predict { model, input, schema, output } => {
            let summary = cmd_predict(&model, &input, &schema, &output)?;
            println!("{}", summary.line());
        }
        Command::Synth { spec, paper_cohort, seed, out } => {
            let source = match (&spec, paper_cohort) {
                (Some(path), false) => SynthSource::SpecFile(path),
                _ => SynthSource::PaperCohort(seed.unwrap_or(1)),
            };
            let schema = cmd_synth(source, &out, seed)?;
            println!("wrote {} and {}", out.display(), schema.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
