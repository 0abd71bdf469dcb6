//! `foodaug` command-line interface.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use foodaug_core::augment::Technique;
use foodaug_core::corpus::{Category, Field, Level};
use foodaug_core::error::StageExt;
use foodaug_core::experiment::{self, ExperimentManifest, Overrides};
use foodaug_core::tune::SamplerKind;
use foodaug_core::{Error, Result};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "foodaug", version, about = "Food-hazard text classification with minority-class augmentation")]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Strip markup and control characters from the title and text columns.
    Clean {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Write the augmented training set and plan for each manifest category.
    Augment(ManifestArgs),
    /// Fit vectorizers and classifiers for every seed and category.
    Train(ManifestArgs),
    /// Predict with trained models; scores the evaluation split when labelled.
    Predict {
        #[command(flatten)]
        manifest: ManifestArgs,
        /// Corpus to predict instead of the manifest's evaluation split.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Score a prediction file (id, hazard_pred, product_pred) against gold labels.
    Score {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long, value_enum)]
        level: LevelArg,
        /// Write the report as JSON here.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Hyperparameter search per category on the dev split.
    Tune {
        #[command(flatten)]
        manifest: ManifestArgs,
        #[arg(long)]
        n_trials: Option<usize>,
        #[arg(long, value_enum)]
        sampler: Option<SamplerArg>,
        /// Only write fine-tuning configs for this external transformer model.
        #[arg(long)]
        external_model: Option<String>,
    },
    /// Kruskal-Wallis p-values of augmented runs against a baseline run.
    Compare {
        #[arg(long)]
        baseline: PathBuf,
        #[arg(long, required = true, num_args = 1..)]
        variants: Vec<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Results table and grouped confusion summary of finished runs.
    Report {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ManifestArgs {
    /// Experiment manifest (JSON).
    #[arg(long)]
    manifest: PathBuf,
    /// Run a single seed instead of the manifest's seeds.
    #[arg(long)]
    seed: Option<u64>,
    /// Text field fed to the classifier.
    #[arg(long, value_enum)]
    field: Option<FieldArg>,
    /// Restrict to one category: hazard-category, product-category, hazard or product.
    #[arg(long, value_parser = parse_category)]
    category: Option<Category>,
    /// Augmentation technique: SR, RW, CW or none.
    #[arg(long, value_parser = parse_technique)]
    technique: Option<TechniqueArg>,
}

#[derive(Clone, Copy)]
struct TechniqueArg(Option<Technique>);

#[derive(Clone, Copy, ValueEnum)]
enum FieldArg {
    Title,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Coarse,
    Fine,
}

#[derive(Clone, Copy, ValueEnum)]
enum SamplerArg {
    Random,
    Adaptive,
}

fn parse_category(s: &str) -> std::result::Result<Category, String> {
    Category::from_str(s).map_err(|e| e.to_string())
}

fn parse_technique(s: &str) -> std::result::Result<TechniqueArg, String> {
    if s.eq_ignore_ascii_case("none") {
        return Ok(TechniqueArg(None));
    }
    Technique::from_str(s).map(|t| TechniqueArg(Some(t))).map_err(|e| e.to_string())
}

impl ManifestArgs {
    fn load(&self, extra: Overrides) -> Result<ExperimentManifest> {
        let mut m = ExperimentManifest::load(&self.manifest).stage("load manifest")?;
        let o = Overrides {
            seed: self.seed,
            field: self.field.map(|f| match f {
                FieldArg::Title => Field::Title,
                FieldArg::Text => Field::Text,
            }),
            category: self.category,
            technique: self.technique.map(|t| t.0),
            ..extra
        };
        m.apply(&o).stage("load manifest")?;
        Ok(m)
    }
}

fn emit<T: Serialize>(value: &T, table: &str, output: Option<&Path>) -> Result<()> {
    print!("{table}");
    if let Some(path) = output {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let text = serde_json::to_string_pretty(value)? + "\n";
        std::fs::write(path, text).map_err(|e| Error::io(path, e)).stage("write outputs")?;
    }
    Ok(())
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Clean { input, output } => {
            let report = experiment::clean_file(&input, &output)?;
            for (k, v) in &report.counts {
                println!("{k}: {v}");
            }
        }
        Command::Augment(args) => {
            let m = args.load(Overrides::default())?;
            let summary = experiment::augment(&m)?;
            print!("{}", summary.to_table());
        }
        Command::Train(args) => {
            let m = args.load(Overrides::default())?;
            experiment::train(&m)?;
            println!("models written to {}", m.output_dir.display());
        }
        Command::Predict { manifest, input } => {
            let m = manifest.load(Overrides::default())?;
            match experiment::predict(&m, input.as_deref())? {
                Some(s) => {
                    for (k, v) in &s.mean {
                        println!("{k}: {v:.4}");
                    }
                }
                None => println!("predictions written to {}", m.output_dir.display()),
            }
        }
        Command::Score {
            predictions,
            gold,
            level,
            output,
        } => {
            let level = match level {
                LevelArg::Coarse => Level::Coarse,
                LevelArg::Fine => Level::Fine,
            };
            let report = experiment::score_file(&predictions, &gold, level)?;
            emit(&report, &report.to_table(), output.as_deref())?;
        }
        Command::Tune {
            manifest,
            n_trials,
            sampler,
            external_model,
        } => {
            let m = manifest.load(Overrides {
                n_trials,
                sampler: sampler.map(|s| match s {
                    SamplerArg::Random => SamplerKind::Random,
                    SamplerArg::Adaptive => SamplerKind::Adaptive,
                }),
                ..Default::default()
            })?;
            if let Some(model) = external_model {
                let dir = m.output_dir.join("external");
                let cfgs = experiment::generate_external_configs(
                    &model,
                    m.tuning.n_trials,
                    m.tuning.sampler,
                    m.seeds[0],
                    &dir,
                )?;
                println!("{} configs written to {}", cfgs.len(), dir.join(&model).display());
            } else {
                for o in experiment::tune(&m)? {
                    let score = o.best_objective.map_or("failed".to_string(), |v| format!("{v:.4}"));
                    println!("{}: best trial {} of {}, dev F1-macro {score}", o.category, o.best_index, o.n_trials);
                }
            }
        }
        Command::Compare {
            baseline,
            variants,
            output,
        } => {
            let report = experiment::compare_runs(&baseline, &variants)?;
            emit(&report, &report.to_table(), output.as_deref())?;
        }
        Command::Report { runs, output } => {
            let report = experiment::report_runs(&runs)?;
            emit(&report, &report.to_table(), output.as_deref())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            ExitCode::FAILURE
        }
    }
}
