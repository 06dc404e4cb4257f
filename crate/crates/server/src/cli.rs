//! The `preme` command line.
//!
//! ```text
//! preme ingest MEETING.json|MEETING.tsv [--meeting-id ID]
//! preme run TRANSCRIPT... [--config preme.toml] [overrides]
//! preme train-tagger ANNOTATIONS.conll --out MODEL.json [--folds 10]
//! preme evaluate [MEETING_ID] [--gold GOLD.txt] [--agreement A.conll B.conll]
//! preme serve [--addr 127.0.0.1:8080]
//! preme demo
//! ```
//!
//! Every verb reads the same TOML configuration (`--config`, default
//! `preme.toml` when present). Flags override the file. Provider keys come
//! from the environment variables named in the configuration, by default
//! `PREME_<PROVIDER>_API_KEY`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use preme_core::evaluation::annotator_agreement;
use preme_core::pipeline::{self, PipelineConfig, PipelineOutcome, ProviderSpec, Workspace};
use preme_core::tagger::cv::cross_validate;
use preme_core::tagger::train::train;
use preme_core::tagger::Tagger;
use preme_core::transcript::parse_annotations;

use crate::api::{self, AppState};

#[derive(Debug, Parser)]
#[command(
    name = "preme",
    version,
    about = "Explore meeting transcripts through generated questions"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML configuration file. Defaults to ./preme.toml when it exists.
    #[arg(long, global = true, env = "PREME_CONFIG")]
    pub config: Option<PathBuf>,
    /// Workspace directory holding meetings and their artifacts.
    #[arg(long, global = true, env = "PREME_OUTPUT_DIR")]
    pub output_dir: Option<PathBuf>,
    /// Seed for every randomized stage.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Log filter, as in RUST_LOG.
    #[arg(long, global = true, default_value = "info")]
    pub log: String,
}

/// Flags that override pipeline configuration fields.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    #[arg(long)]
    pub block_size: Option<usize>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub min_segment_turns: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub parallelism: Option<usize>,
    #[arg(long)]
    pub tagger_model: Option<PathBuf>,
    #[arg(long)]
    pub training_data: Option<PathBuf>,
    #[arg(long)]
    pub merge_threshold: Option<f64>,
    #[arg(long)]
    pub jaccard_threshold: Option<f64>,
    #[arg(long)]
    pub gold: Option<PathBuf>,
    /// Embedding service URL; switches the provider off its mock.
    #[arg(long)]
    pub embedding_url: Option<String>,
    #[arg(long)]
    pub generation_url: Option<String>,
    #[arg(long)]
    pub locator_url: Option<String>,
    #[arg(long)]
    pub qa_url: Option<String>,
    #[arg(long)]
    pub pos_url: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a transcript and store it in the workspace.
    Ingest {
        transcript: PathBuf,
        #[arg(long)]
        meeting_id: Option<String>,
    },
    /// Run the pipeline on one or more transcripts (in parallel).
    Run {
        #[arg(required = true)]
        transcripts: Vec<PathBuf>,
        #[command(flatten)]
        overrides: Box<Overrides>,
        /// Print the effective configuration and exit.
        #[arg(long)]
        print_config: bool,
    },
    /// Train the CRF tagger on CoNLL annotations.
    TrainTagger {
        annotations: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also report k-fold cross-validation scores.
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        l2: Option<f64>,
        #[arg(long)]
        max_iterations: Option<usize>,
    },
    /// Evaluate a processed meeting, or annotator agreement.
    Evaluate {
        meeting_id: Option<String>,
        #[arg(long)]
        gold: Option<PathBuf>,
        /// Annotation files of the same questions by different annotators.
        #[arg(long, num_args = 2..)]
        agreement: Vec<PathBuf>,
        /// Print the coverage table over all evaluated meetings.
        #[arg(long)]
        summary: bool,
    },
    /// Serve the JSON API over the workspace.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
    },
    /// Run the bundled demo meeting with offline providers.
    Demo,
}

type CliResult = Result<(), Box<dyn std::error::Error>>;

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(&cli.global.log));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

/// Reads the configuration and applies global flags.
pub fn load_config(global: &GlobalArgs) -> Result<PipelineConfig, pipeline::PipelineError> {
    let mut config = match &global.config {
        Some(path) => PipelineConfig::load(path)?,
        None if Path::new("preme.toml").is_file() => PipelineConfig::load(Path::new("preme.toml"))?,
        None => PipelineConfig::default(),
    };
    if let Some(dir) = &global.output_dir {
        config.output_dir = dir.clone();
    }
    if let Some(seed) = global.seed {
        config.seed = seed;
    }
    Ok(config)
}

pub fn apply_overrides(config: &mut PipelineConfig, o: &Overrides) {
    fn set<T: Clone>(field: &mut T, value: &Option<T>) {
        if let Some(v) = value {
            *field = v.clone();
        }
    }
    set(&mut config.segmentation.block_size, &o.block_size);
    set(&mut config.segmentation.threshold, &o.threshold);
    set(&mut config.segmentation.min_segment_turns, &o.min_segment_turns);
    set(&mut config.generation.trials_per_temperature, &o.trials);
    set(&mut config.generation.parallelism, &o.parallelism);
    set(&mut config.normalization.merge_threshold, &o.merge_threshold);
    set(&mut config.normalization.jaccard_threshold, &o.jaccard_threshold);
    if o.tagger_model.is_some() {
        config.tagger.model_path = o.tagger_model.clone();
    }
    if o.training_data.is_some() {
        config.tagger.training_data = o.training_data.clone();
    }
    if o.gold.is_some() {
        config.evaluation.gold_questions = o.gold.clone();
    }
    let p = &mut config.providers;
    for (spec, url) in [
        (&mut p.embedding, &o.embedding_url),
        (&mut p.generation, &o.generation_url),
        (&mut p.locator, &o.locator_url),
        (&mut p.qa, &o.qa_url),
        (&mut p.pos, &o.pos_url),
    ] {
        if let Some(url) = url {
            *spec = ProviderSpec {
                url: Some(url.clone()),
                mock: false,
                ..spec.clone()
            };
        }
    }
}

fn print_outcome(outcome: &PipelineOutcome) {
    let job = &outcome.job;
    println!(
        "{}: {:?} (job {}, attempt {})",
        job.meeting_id, job.stage, job.job_id, job.attempt
    );
    if !job.skipped.is_empty() {
        println!("  reused: {:?}", job.skipped);
    }
    for w in &job.warnings {
        println!("  warning: {w}");
    }
    println!("  questionnaire: {}", outcome.questionnaire_path.display());
}

pub fn run(cli: Cli) -> CliResult {
    let mut config = load_config(&cli.global)?;
    match cli.command {
        Command::Ingest { transcript, meeting_id } => {
            let path = pipeline::ingest(&transcript, meeting_id.as_deref(), &config.output_dir)?;
            println!("{}", path.display());
        }
        Command::Run {
            transcripts,
            overrides,
            print_config,
        } => {
            apply_overrides(&mut config, &overrides);
            config.validate()?;
            if print_config {
                print!("{}", config.to_toml());
                return Ok(());
            }
            let mut failed = 0;
            for (path, result) in transcripts.iter().zip(pipeline::run_many(&transcripts, &config)) {
                match result {
                    Ok(outcome) => print_outcome(&outcome),
                    Err(e) => {
                        failed += 1;
                        eprintln!("{}: {e}", path.display());
                    }
                }
            }
            if failed > 0 {
                return Err(format!("{failed} of {} runs failed", transcripts.len()).into());
            }
        }
        Command::TrainTagger {
            annotations,
            out,
            folds,
            l2,
            max_iterations,
        } => {
            let mut train_cfg = config.tagger.train.clone();
            train_cfg.seed = config.seed;
            if let Some(l2) = l2 {
                train_cfg.l2_lambda = l2;
            }
            if let Some(m) = max_iterations {
                train_cfg.max_iterations = m;
            }
            let set = parse_annotations(&std::fs::read(&annotations)?)?;
            for w in &set.warnings {
                eprintln!("warning: question {} token {}: {}", w.question, w.position, w.message);
            }
            let (model, report) = train(&set.questions, &train_cfg)?;
            println!(
                "trained on {} questions: loss {:.3} after {} iterations ({:?})",
                set.questions.len(),
                report.final_loss(),
                report.iterations,
                report.stop_reason
            );
            if report.degenerate {
                println!("warning: every training label is identical");
            }
            if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            Tagger::new(model)?.save(&out)?;
            println!("model written to {}", out.display());
            if let Some(k) = folds {
                let cv = cross_validate(&set.questions, k, &train_cfg, config.seed)?;
                println!("{k}-fold cross-validation:");
                for (class, s) in &cv.mean {
                    println!(
                        "  {:<14} P {:.3}  R {:.3}  F1 {:.3}",
                        format!("{class:?}"),
                        s.precision,
                        s.recall,
                        s.f1
                    );
                }
            }
        }
        Command::Evaluate {
            meeting_id,
            gold,
            agreement,
            summary,
        } => {
            if !agreement.is_empty() {
                let sets = agreement
                    .iter()
                    .map(|p| Ok(parse_annotations(&std::fs::read(p)?)?.questions))
                    .collect::<Result<Vec<_>, Box<dyn std::error::Error>>>()?;
                let r = annotator_agreement(&sets)?;
                println!("{}", serde_json::to_string_pretty(&r)?);
            }
            if let Some(id) = meeting_id {
                let gold_path = gold.or_else(|| config.evaluation.gold_questions.clone());
                let gold = pipeline::read_gold(gold_path.as_deref())?;
                let report = pipeline::evaluate_meeting(&id, &config, gold.as_deref())?;
                println!("{id}: coverage {:.2}%", 100.0 * report.coverage.coverage);
                for p in &report.answerability.fraction_ge {
                    println!("  answerable at >= {}: {:.2}%", p.threshold, 100.0 * p.fraction);
                }
                for m in &report.gold_match {
                    let row: Vec<String> = m
                        .covered_fraction_at
                        .iter()
                        .map(|p| format!("{:.1}:{:.2}", p.threshold, p.fraction))
                        .collect();
                    println!("  gold {:?}: {}", m.metric, row.join(" "));
                }
            }
            if summary {
                println!("{}", pipeline::coverage_summary(&config.output_dir)?);
            }
        }
        Command::Serve { addr } => {
            let dir = Workspace::new(&config.output_dir).meetings_dir();
            if !dir.is_dir() {
                return Err(format!("{} does not exist; run the pipeline first", dir.display()).into());
            }
            let state = AppState::new(Workspace::new(&config.output_dir));
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind(&addr).await?;
                println!("listening on http://{}", listener.local_addr()?);
                api::serve(listener, state).await
            })?;
        }
        Command::Demo => {
            let dir = cli
                .global
                .output_dir
                .clone()
                .unwrap_or_else(|| PathBuf::from("demo-workspace"));
            let started = std::time::Instant::now();
            let outcome = pipeline::demo(&dir)?;
            print_outcome(&outcome);
            println!("  finished in {:.2?}", started.elapsed());
            println!("serve it with: preme serve --output-dir {}", dir.display());
        }
    }
    Ok(())
}
