use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use answer_type::dataset::{Source, Split};
use answer_type::eval::EvalMode;
use answer_type::fusion::Aggregation;
use answer_type::pipeline::{self, DatasetRef, PipelineConfig, PredictOptions, Stage1Method, Stage2Method};
use answer_type::Result;

#[derive(Parser)]
#[command(name = "answer-type", version, about = "Answer category and type prediction for questions")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a SMART dataset and write a normalized copy with statistics.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        source: Source,
        #[arg(long, default_value = "train")]
        split: Split,
        #[arg(long)]
        hierarchy: Option<PathBuf>,
        #[arg(long)]
        entities: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train stage 1 and stage 2 and write a model bundle.
    Train(TrainArgs),
    /// Predict categories and types for a question file.
    Predict {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        questions: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        top_k: Option<usize>,
        #[arg(long)]
        stage1_predictions: Option<PathBuf>,
        #[arg(long)]
        stage2_scores: Option<PathBuf>,
    },
    /// Score a run file against gold answers.
    Evaluate {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        mode: EvalMode,
        #[arg(long)]
        hierarchy: Option<PathBuf>,
        /// Directory for report.json and report.txt.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the JSON report instead of the table.
        #[arg(long)]
        json: bool,
    },
    /// List gold types most often missing from the predicted lists.
    Analyze {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        mode: EvalMode,
        #[arg(short, long, default_value_t = 10)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Category counts for a dataset.
    Stats {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        source: Source,
        #[arg(long, default_value = "train")]
        split: Split,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct TrainArgs {
    /// JSON config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Training set as SOURCE=PATH; repeatable.
    #[arg(long = "train")]
    train: Vec<DatasetRef>,
    #[arg(long)]
    mode: Option<EvalMode>,
    #[arg(long)]
    hierarchy: Option<PathBuf>,
    #[arg(long)]
    entities: Option<PathBuf>,
    #[arg(long)]
    stage1: Option<Stage1Method>,
    #[arg(long)]
    stage1_predictions: Option<PathBuf>,
    #[arg(long)]
    stage2: Option<Stage2Method>,
    #[arg(long)]
    stage2_scores: Option<PathBuf>,
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long)]
    ec_k: Option<usize>,
    #[arg(long)]
    ec_aggregation: Option<Aggregation>,
    #[arg(long)]
    svm_c: Option<f64>,
    #[arg(long)]
    svm_epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl TrainArgs {
    fn into_config(self) -> Result<PipelineConfig> {
        let mut c = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        if !self.train.is_empty() {
            c.train = self.train;
        }
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field {
                    c.$field = v;
                }
            )*};
        }
        set!(mode, stage1, stage2, top_k, ec_k, ec_aggregation, seed);
        macro_rules! set_opt {
            ($($field:ident),*) => {$(
                if self.$field.is_some() {
                    c.$field = self.$field;
                }
            )*};
        }
        set_opt!(hierarchy, entities, stage1_predictions, stage2_scores);
        if let Some(v) = self.svm_c {
            c.svm.c = v;
        }
        if let Some(v) = self.svm_epochs {
            c.svm.epochs = v;
        }
        if let Some(out) = self.out {
            c.output_dir = Some(out);
        }
        Ok(c)
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Ingest {
            input,
            source,
            split,
            hierarchy,
            entities,
            out,
        } => {
            let s = pipeline::cmd_ingest(&input, source, split, hierarchy.as_deref(), entities.as_deref(), &out)?;
            print!("{}", s.stats.to_tsv());
            if let (Some(n), Some(d)) = (s.hierarchy_types, s.hierarchy_depth) {
                println!("hierarchy\t{n} types, depth {d}");
            }
            if let (Some(n), Some(u)) = (s.entities, s.untyped_entities) {
                println!("entities\t{n} ({u} untyped)");
            }
            eprintln!("wrote {}", s.dataset.display());
        }
        Command::Train(args) => {
            let config = args.into_config()?;
            let out = config
                .output_dir
                .clone()
                .ok_or_else(|| answer_type::Error::Config("no output directory (use --out)".into()))?;
            let m = pipeline::cmd_train(&config, &out)?;
            println!("bundle {}", out.display());
            println!("config {}", m.config_hash);
            println!(
                "trained on {} questions (stage 1), {} resource questions (stage 2)",
                m.stage1_questions, m.stage2_questions
            );
        }
        Command::Predict {
            bundle,
            questions,
            out,
            config,
            top_k,
            stage1_predictions,
            stage2_scores,
        } => {
            let config = config.as_deref().map(PipelineConfig::load).transpose()?;
            let options = PredictOptions {
                top_k: top_k.or(config.as_ref().map(|c| c.top_k)),
                stage1_predictions: stage1_predictions.or(config.as_ref().and_then(|c| c.stage1_predictions.clone())),
                stage2_scores: stage2_scores.or(config.as_ref().and_then(|c| c.stage2_scores.clone())),
            };
            let run = pipeline::cmd_predict(&bundle, &questions, &out, &options)?;
            eprintln!("wrote {} predictions to {}", run.predictions.len(), out.display());
        }
        Command::Evaluate {
            run,
            gold,
            mode,
            hierarchy,
            out,
            json,
        } => {
            let report = pipeline::cmd_evaluate(&run, &gold, mode, hierarchy.as_deref(), out.as_deref())?;
            if json {
                println!("{}", report.to_json()?);
            } else {
                print!("{}", report.to_text());
            }
        }
        Command::Analyze { run, gold, mode, n, out } => {
            let (_, text) = pipeline::cmd_analyze(&run, &gold, mode, n, out.as_deref())?;
            print!("{text}");
        }
        Command::Stats {
            input,
            source,
            split,
            json,
        } => {
            let stats = pipeline::cmd_stats(&input, source, split)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&stats).expect("stats serialize"));
            } else {
                print!("{}", stats.to_tsv());
            }
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
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
