//! Staged, resumable pipeline runs over a workspace directory.
//!
//! A run takes one transcript through segmentation, question generation,
//! tagging, subject normalization, questionnaire assembly and evaluation.
//! Every stage writes one JSON artifact into the meeting's directory:
//!
//! ```text
//! <output_dir>/meetings/<meeting_id>/
//!     transcript.json  segments.json  pool.json  tagged.json
//!     normalized.json  questionnaire.json  reports.json  job.json
//! ```
//!
//! A rerun with the same transcript and configuration reuses every artifact
//! that already exists and parses, so a run that failed in a late stage
//! picks up where it stopped. A changed transcript or configuration discards
//! the old artifacts.
//!
//! Configuration is TOML; see [`PipelineConfig`] for the fields and defaults.

use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::{info, warn};

use crate::evaluation::{self, EvaluationError, EvaluationReport, LexicalLocator, MatchMetric, MatchReport};
use crate::providers::{
    fnv1a, EmbeddingProvider, GenerationProvider, HashEmbedder, HttpEmbedder, HttpEndpoint, HttpGenerator, HttpLocator,
    HttpPosTagger, HttpQa, LocatorProvider, MockGenerator, OverlapQa, PosProvider, QaProvider, RuleTagger,
};
use crate::question_gen::{self, GenerationConfig, GenerationError, QuestionPool};
use crate::questionnaire::{self, Questionnaire, QuestionnaireError};
use crate::segmentation::{self, Segment, SegmentationConfig, SegmentationError};
use crate::subject_network::{self, NetworkError, NormalizationConfig, NormalizationResult};
use crate::tagger::train::{self, TrainConfig, TrainError};
use crate::tagger::{self, TaggedQuestion, Tagger, TaggerError};
use crate::transcript::{
    self, parse_annotations, parse_transcript, serialize_transcript, Transcript, TranscriptError, TranscriptFormat,
};

/// Bundled 60-turn product meeting used by [`demo`].
pub const DEMO_TRANSCRIPT: &str = include_str!("../data/demo_meeting.json");
/// Bundled annotated questions (CoNLL) the demo tagger is trained on.
pub const DEMO_ANNOTATIONS: &str = include_str!("../data/annotations.conll");
/// Hand-written reference questions for the demo meeting, one per line.
pub const DEMO_GOLD_QUESTIONS: &str = include_str!("../data/gold_questions.txt");

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {detail}")]
    Io { path: PathBuf, detail: String },
    #[error("artifact {path}: {detail}")]
    Artifact { path: PathBuf, detail: String },
    #[error(transparent)]
    Transcript(#[from] TranscriptError),
    #[error("segmentation: {0}")]
    Segmentation(#[from] SegmentationError),
    #[error("question generation for {segment_id}: {source}")]
    Generation {
        segment_id: String,
        source: GenerationError,
    },
    #[error("tagging: {0}")]
    Tagger(#[from] TaggerError),
    #[error("tagger training: {0}")]
    Train(#[from] TrainError),
    #[error("normalization: {0}")]
    Network(#[from] NetworkError),
    #[error("questionnaire: {0}")]
    Questionnaire(#[from] QuestionnaireError),
    #[error("evaluation: {0}")]
    Evaluation(#[from] EvaluationError),
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Io {
        path: path.to_path_buf(),
        detail: e.to_string(),
    }
}

// ------------------------------------------------------------ configuration

/// Where one provider comes from. `mock = true` selects the deterministic
/// local implementation and needs neither a URL nor a key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderSpec {
    pub mock: bool,
    pub url: Option<String>,
    /// Environment variable holding the bearer token. Defaults to
    /// `PREME_<PROVIDER>_API_KEY`.
    pub api_key_env: Option<String>,
    pub timeout_secs: u64,
}

impl Default for ProviderSpec {
    fn default() -> Self {
        ProviderSpec {
            mock: true,
            url: None,
            api_key_env: None,
            timeout_secs: 60,
        }
    }
}

impl ProviderSpec {
    pub fn http(url: impl Into<String>) -> Self {
        ProviderSpec {
            mock: false,
            url: Some(url.into()),
            ..Self::default()
        }
    }

    fn endpoint(&self, name: &str) -> Result<HttpEndpoint, PipelineError> {
        let url = self
            .url
            .clone()
            .filter(|u| !u.trim().is_empty())
            .ok_or_else(|| PipelineError::Config(format!("providers.{name}: url is required when mock = false")))?;
        let var = self
            .api_key_env
            .clone()
            .unwrap_or_else(|| format!("PREME_{}_API_KEY", name.to_ascii_uppercase()));
        Ok(HttpEndpoint::new(url)
            .with_timeout(Duration::from_secs(self.timeout_secs))
            .with_api_key_env(&var))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProvidersConfig {
    pub embedding: ProviderSpec,
    pub generation: ProviderSpec,
    pub locator: ProviderSpec,
    pub qa: ProviderSpec,
    pub pos: ProviderSpec,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaggerConfig {
    /// Trained model to load. When it does not exist yet and training data
    /// is given, the trained model is written here.
    pub model_path: Option<PathBuf>,
    /// CoNLL annotations to train on when no model file exists.
    pub training_data: Option<PathBuf>,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluationConfig {
    /// Number of best turns the mock locator widens into answer ranges.
    pub locator_k: usize,
    /// Reference questions, one per line, matched against each pool.
    pub gold_questions: Option<PathBuf>,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            locator_k: 2,
            gold_questions: None,
        }
    }
}

/// Everything a run needs. All sections are optional in the TOML file:
///
/// ```toml
/// seed = 0
/// output_dir = "workspace"
///
/// [providers.embedding]
/// mock = false
/// url = "http://localhost:8001/embed"
/// api_key_env = "MY_EMBEDDING_KEY"   # default PREME_EMBEDDING_API_KEY
///
/// [segmentation]
/// block_size = 3
/// threshold = 0.55
/// min_segment_turns = 5
///
/// [generation]
/// trials_per_temperature = 10
///
/// [tagger]
/// model_path = "models/tagger.json"
/// training_data = "data/annotations.conll"
///
/// [normalization]
/// merge_threshold = 0.7
/// jaccard_threshold = 0.5
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Seeds every randomized stage.
    pub seed: u64,
    pub output_dir: PathBuf,
    pub providers: ProvidersConfig,
    pub segmentation: SegmentationConfig,
    pub generation: GenerationConfig,
    pub tagger: TaggerConfig,
    pub normalization: NormalizationConfig,
    pub evaluation: EvaluationConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            output_dir: PathBuf::from("workspace"),
            providers: ProvidersConfig::default(),
            segmentation: SegmentationConfig::default(),
            generation: GenerationConfig::default(),
            tagger: TaggerConfig::default(),
            normalization: NormalizationConfig::default(),
            evaluation: EvaluationConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, PipelineError> {
        let config: PipelineConfig = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Checks value ranges and that every non-mock provider has a URL.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let cfg = |m: String| Err(PipelineError::Config(m));
        self.segmentation
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        self.generation
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        let n = &self.normalization;
        if !(-1.0..=1.0).contains(&n.merge_threshold) {
            return cfg(format!("merge_threshold {} outside [-1, 1]", n.merge_threshold));
        }
        if !(0.0..=1.0).contains(&n.jaccard_threshold) {
            return cfg(format!("jaccard_threshold {} outside [0, 1]", n.jaccard_threshold));
        }
        let d = n.pagerank.damping;
        if !(d > 0.0 && d < 1.0) {
            return cfg(format!("pagerank damping {d} outside (0, 1)"));
        }
        if n.pagerank.tol.is_nan() || n.pagerank.tol <= 0.0 || n.pagerank.max_iter == 0 {
            return cfg("pagerank tol and max_iter must be positive".into());
        }
        let t = &self.tagger.train;
        let negative = |x: f64| x.is_nan() || x < 0.0;
        if negative(t.l2_lambda) || negative(t.convergence_tol) || t.history == 0 {
            return cfg("tagger.train: l2_lambda, convergence_tol must be ≥ 0 and history ≥ 1".into());
        }
        if self.evaluation.locator_k == 0 {
            return cfg("evaluation.locator_k must be ≥ 1".into());
        }
        let p = &self.providers;
        for (name, spec) in [
            ("embedding", &p.embedding),
            ("generation", &p.generation),
            ("locator", &p.locator),
            ("qa", &p.qa),
            ("pos", &p.pos),
        ] {
            if !spec.mock {
                spec.endpoint(name)?;
            }
        }
        Ok(())
    }

    /// The tagger needs either an existing model file or training data.
    fn check_tagger_source(&self) -> Result<(), PipelineError> {
        let t = &self.tagger;
        if t.model_path.as_deref().is_some_and(Path::exists) {
            return Ok(());
        }
        match &t.training_data {
            Some(p) if p.exists() => Ok(()),
            Some(p) => Err(PipelineError::Config(format!(
                "tagger training data {} does not exist",
                p.display()
            ))),
            None => Err(PipelineError::Config(match &t.model_path {
                Some(p) => format!(
                    "tagger model {} does not exist and no training data is configured",
                    p.display()
                ),
                None => "no tagger model and no training data configured".into(),
            })),
        }
    }

    /// Fingerprint of everything that changes artifacts. File locations are
    /// left out and file contents hashed instead, so identical inputs in two
    /// workspaces get the same job id. Configured training data stands for
    /// the tagger, since the model trained from it is deterministic; the
    /// model file only counts when there is no training data.
    fn fingerprint(&self, transcript: &Transcript) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        c.tagger.model_path = None;
        c.tagger.training_data = None;
        c.evaluation.gold_questions = None;
        let mut bytes = serde_json::to_vec(&c).expect("config serializes");
        let tagger_file = self.tagger.training_data.as_ref().or(self.tagger.model_path.as_ref());
        for file in [tagger_file, self.evaluation.gold_questions.as_ref()] {
            bytes.push(0);
            if let Some(content) = file.and_then(|p| std::fs::read(p).ok()) {
                bytes.extend(content);
            }
        }
        bytes.push(0);
        bytes.extend(serialize_transcript(transcript, TranscriptFormat::QmsumJson));
        format!("{:016x}", fnv1a(&bytes))
    }
}

/// The five model providers of a run.
pub struct Providers {
    pub embedding: Box<dyn EmbeddingProvider>,
    pub generation: Box<dyn GenerationProvider>,
    pub locator: Box<dyn LocatorProvider>,
    pub qa: Box<dyn QaProvider>,
    pub pos: Box<dyn PosProvider>,
}

impl Providers {
    /// Local deterministic providers throughout.
    pub fn mock(locator_k: usize) -> Self {
        Providers {
            embedding: Box::new(HashEmbedder::default()),
            generation: Box::new(MockGenerator::default()),
            locator: Box::new(LexicalLocator { k: locator_k }),
            qa: Box::new(OverlapQa),
            pos: Box::new(RuleTagger),
        }
    }

    pub fn from_config(config: &PipelineConfig) -> Result<Self, PipelineError> {
        let p = &config.providers;
        let mut out = Self::mock(config.evaluation.locator_k);
        if !p.embedding.mock {
            out.embedding = Box::new(HttpEmbedder(p.embedding.endpoint("embedding")?));
        }
        if !p.generation.mock {
            // question generation retries per call itself
            let ep = p.generation.endpoint("generation")?;
            out.generation = Box::new(HttpGenerator(ep.with_retry(crate::providers::RetryPolicy::none())));
        }
        if !p.locator.mock {
            out.locator = Box::new(HttpLocator(p.locator.endpoint("locator")?));
        }
        if !p.qa.mock {
            out.qa = Box::new(HttpQa(p.qa.endpoint("qa")?));
        }
        if !p.pos.mock {
            out.pos = Box::new(HttpPosTagger(p.pos.endpoint("pos")?));
        }
        Ok(out)
    }
}

// -------------------------------------------------------------- job record

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Stage {
    Segmenting,
    Generating,
    Tagging,
    Normalizing,
    Assembling,
    Evaluating,
    Done,
    Failed,
}

impl Stage {
    /// Working stages in execution order.
    pub const ORDER: [Stage; 6] = [
        Stage::Segmenting,
        Stage::Generating,
        Stage::Tagging,
        Stage::Normalizing,
        Stage::Assembling,
        Stage::Evaluating,
    ];

    /// File the stage persists its output to.
    pub fn artifact(self) -> Option<&'static str> {
        match self {
            Stage::Segmenting => Some("segments.json"),
            Stage::Generating => Some("pool.json"),
            Stage::Tagging => Some("tagged.json"),
            Stage::Normalizing => Some("normalized.json"),
            Stage::Assembling => Some("questionnaire.json"),
            Stage::Evaluating => Some("reports.json"),
            Stage::Done | Stage::Failed => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageEntry {
    pub stage: Stage,
    /// Seconds since the Unix epoch.
    pub at: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    /// Fingerprint of the transcript and configuration.
    pub job_id: String,
    pub meeting_id: String,
    pub stage: Stage,
    /// Attempts made for this job id, this one included.
    pub attempt: u32,
    pub created_at: u64,
    pub updated_at: u64,
    pub history: Vec<StageEntry>,
    /// Stages whose artifact was reused instead of recomputed.
    pub skipped: Vec<Stage>,
    pub artifacts: IndexMap<String, PathBuf>,
    pub warnings: Vec<String>,
    pub error: Option<String>,
}

fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl JobRecord {
    pub fn new(job_id: impl Into<String>, meeting_id: impl Into<String>) -> Self {
        let t = now();
        JobRecord {
            job_id: job_id.into(),
            meeting_id: meeting_id.into(),
            stage: Stage::Segmenting,
            attempt: 1,
            created_at: t,
            updated_at: t,
            history: vec![StageEntry {
                stage: Stage::Segmenting,
                at: t,
            }],
            skipped: vec![],
            artifacts: IndexMap::new(),
            warnings: vec![],
            error: None,
        }
    }

    /// Moves to a later stage, or to `Failed` from any unfinished stage.
    /// Going backwards, or leaving `Done` or `Failed`, is refused and leaves
    /// the record unchanged.
    pub fn advance(&mut self, to: Stage) -> Result<(), PipelineError> {
        let finished = matches!(self.stage, Stage::Done | Stage::Failed);
        let legal = !finished && (to == Stage::Failed || to > self.stage);
        if !legal {
            return Err(PipelineError::Config(format!(
                "illegal job transition {:?} -> {:?}",
                self.stage, to
            )));
        }
        self.stage = to;
        self.updated_at = now();
        self.history.push(StageEntry {
            stage: to,
            at: self.updated_at,
        });
        Ok(())
    }

    fn fail(&mut self, error: &PipelineError) {
        self.error = Some(error.to_string());
        // advance only refuses once the job is finished, which cannot happen
        // here because failures come from running stages
        let _ = self.advance(Stage::Failed);
    }
}

// --------------------------------------------------------------- artifacts

/// Writes through a temporary file so a crash never leaves half an artifact.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, bytes).map_err(|e| io_err(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("artifact serializes");
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Artifact {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })
}

/// Directory name for a meeting id; anything outside `[A-Za-z0-9._-]`
/// becomes `_`.
pub fn meeting_dir_name(meeting_id: &str) -> String {
    let name: String = meeting_id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "._-".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect();
    if name.is_empty() || name.chars().all(|c| c == '.') {
        "_".into()
    } else {
        name
    }
}

/// Layout of one workspace directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Workspace {
    pub root: PathBuf,
}

impl Workspace {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Workspace { root: root.into() }
    }

    pub fn meetings_dir(&self) -> PathBuf {
        self.root.join("meetings")
    }

    pub fn meeting_dir(&self, meeting_id: &str) -> PathBuf {
        self.meetings_dir().join(meeting_dir_name(meeting_id))
    }

    pub fn transcript_path(&self, meeting_id: &str) -> PathBuf {
        self.meeting_dir(meeting_id).join("transcript.json")
    }

    pub fn questionnaire_path(&self, meeting_id: &str) -> PathBuf {
        self.meeting_dir(meeting_id).join("questionnaire.json")
    }

    pub fn reports_path(&self, meeting_id: &str) -> PathBuf {
        self.meeting_dir(meeting_id).join("reports.json")
    }

    pub fn job_path(&self, meeting_id: &str) -> PathBuf {
        self.meeting_dir(meeting_id).join("job.json")
    }

    /// Meeting ids with a questionnaire, sorted.
    pub fn meetings(&self) -> Result<Vec<String>, PipelineError> {
        let dir = self.meetings_dir();
        if !dir.exists() {
            return Ok(vec![]);
        }
        let mut ids = Vec::new();
        for entry in std::fs::read_dir(&dir).map_err(|e| io_err(&dir, e))? {
            let path = entry.map_err(|e| io_err(&dir, e))?.path();
            let q = path.join("questionnaire.json");
            if q.is_file() {
                ids.push(self.load_questionnaire_file(&q)?.meeting_id);
            }
        }
        ids.sort();
        Ok(ids)
    }

    fn load_questionnaire_file(&self, path: &Path) -> Result<Questionnaire, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Questionnaire::from_json(&text, None).map_err(|e| PipelineError::Artifact {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })
    }

    pub fn load_transcript(&self, meeting_id: &str) -> Result<Transcript, PipelineError> {
        let path = self.transcript_path(meeting_id);
        let raw = std::fs::read(&path).map_err(|e| io_err(&path, e))?;
        Ok(parse_transcript(&raw, TranscriptFormat::QmsumJson, meeting_id)?)
    }

    /// Loads and validates a questionnaire, answer spans checked against the
    /// stored transcript when there is one.
    pub fn load_questionnaire(&self, meeting_id: &str) -> Result<Questionnaire, PipelineError> {
        let path = self.questionnaire_path(meeting_id);
        let text = std::fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        let turns = self.load_transcript(meeting_id).ok().map(|t| t.len());
        Questionnaire::from_json(&text, turns).map_err(|e| PipelineError::Artifact {
            path: path.clone(),
            detail: e.to_string(),
        })
    }

    pub fn load_reports(&self, meeting_id: &str) -> Result<EvaluationReport, PipelineError> {
        read_json(&self.reports_path(meeting_id))
    }

    pub fn load_job(&self, meeting_id: &str) -> Result<JobRecord, PipelineError> {
        read_json(&self.job_path(meeting_id))
    }

    /// Stores a transcript in normalized QMSUM JSON.
    pub fn store_transcript(&self, transcript: &Transcript) -> Result<PathBuf, PipelineError> {
        let dir = self.meeting_dir(&transcript.meeting_id);
        std::fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        let path = self.transcript_path(&transcript.meeting_id);
        write_atomic(&path, &serialize_transcript(transcript, TranscriptFormat::QmsumJson))?;
        Ok(path)
    }
}

// --------------------------------------------------------------- the run

/// Reads a transcript file. `.json` files are QMSUM JSON, anything else is
/// `SPEAKER<TAB>TEXT` lines. Without an explicit id the document's own id is used,
/// then the file stem.
pub fn read_transcript(path: &Path, meeting_id: Option<&str>) -> Result<Transcript, PipelineError> {
    let raw = std::fs::read(path).map_err(|e| io_err(path, e))?;
    let format = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        TranscriptFormat::QmsumJson
    } else {
        TranscriptFormat::PlainTurns
    };
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "meeting".into());
    let mut transcript = parse_transcript(&raw, format, meeting_id.unwrap_or(&stem))?;
    // an explicit id wins over one embedded in the document
    if let Some(id) = meeting_id {
        transcript.meeting_id = id.to_string();
    }
    Ok(transcript)
}

/// Parses and stores a transcript in the workspace without running anything.
pub fn ingest(path: &Path, meeting_id: Option<&str>, output_dir: &Path) -> Result<PathBuf, PipelineError> {
    let transcript = read_transcript(path, meeting_id)?;
    for i in transcript.degenerate_turns() {
        warn!(turn = i, "turn has no tokens");
    }
    Workspace::new(output_dir).store_transcript(&transcript)
}

/// Loads the configured tagger, training (and saving) one when only
/// training data is available.
pub fn load_or_train_tagger(config: &PipelineConfig) -> Result<Tagger, PipelineError> {
    config.check_tagger_source()?;
    let t = &config.tagger;
    if let Some(path) = t.model_path.as_deref().filter(|p| p.exists()) {
        return Ok(Tagger::load(path)?);
    }
    let data = t.training_data.as_deref().expect("checked above");
    let raw = std::fs::read(data).map_err(|e| io_err(data, e))?;
    let set = parse_annotations(&raw)?;
    for w in &set.warnings {
        warn!(?w, "annotation warning");
    }
    let train_cfg = TrainConfig {
        seed: config.seed,
        ..t.train.clone()
    };
    let (model, report) = train::train(&set.questions, &train_cfg)?;
    info!(
        questions = set.questions.len(),
        iterations = report.iterations,
        loss = report.final_loss(),
        "tagger trained"
    );
    let tagger = Tagger::new(model)?;
    if let Some(path) = &t.model_path {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
        tagger.save(path)?;
    }
    Ok(tagger)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutcome {
    pub questionnaire_path: PathBuf,
    pub job: JobRecord,
}

/// Runs the pipeline on a transcript file with providers built from the
/// configuration.
pub fn run_pipeline(transcript_path: &Path, config: &PipelineConfig) -> Result<PipelineOutcome, PipelineError> {
    config.validate()?;
    config.check_tagger_source()?;
    let transcript = read_transcript(transcript_path, None)?;
    let providers = Providers::from_config(config)?;
    run_transcript(&transcript, config, &providers)
}

/// Runs several transcripts in parallel, one result per input.
pub fn run_many(transcript_paths: &[PathBuf], config: &PipelineConfig) -> Vec<Result<PipelineOutcome, PipelineError>> {
    if let Err(e) = config.validate().and_then(|_| config.check_tagger_source()) {
        let msg = match e {
            PipelineError::Config(m) => m,
            other => other.to_string(),
        };
        return transcript_paths
            .iter()
            .map(|_| Err(PipelineError::Config(msg.clone())))
            .collect();
    }
    // train once up front so parallel runs load the saved model instead of
    // racing to write it
    if config.tagger.model_path.is_some() {
        if let Err(e) = load_or_train_tagger(config) {
            let msg = e.to_string();
            return transcript_paths
                .iter()
                .map(|_| Err(PipelineError::Config(msg.clone())))
                .collect();
        }
    }
    transcript_paths.par_iter().map(|p| run_pipeline(p, config)).collect()
}

/// Runs every stage for an in-memory transcript with the given providers.
///
/// The tagger source is checked before any provider is called. Stage
/// failures are recorded in `job.json` and returned; artifacts of finished
/// stages stay on disk for the next attempt.
pub fn run_transcript(
    transcript: &Transcript,
    config: &PipelineConfig,
    providers: &Providers,
) -> Result<PipelineOutcome, PipelineError> {
    config.validate()?;
    config.check_tagger_source()?;
    let ws = Workspace::new(&config.output_dir);
    let dir = ws.meeting_dir(&transcript.meeting_id);
    std::fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;

    let job_id = config.fingerprint(transcript);
    let previous = ws.load_job(&transcript.meeting_id).ok();
    let mut job = JobRecord::new(&job_id, &transcript.meeting_id);
    match previous {
        Some(prev) if prev.job_id == job_id => job.attempt = prev.attempt + 1,
        _ => {
            // different input or config: nothing on disk can be reused
            for stage in Stage::ORDER {
                let p = dir.join(stage.artifact().expect("working stage"));
                if p.exists() {
                    std::fs::remove_file(&p).map_err(|e| io_err(&p, e))?;
                }
            }
        }
    }
    ws.store_transcript(transcript)?;
    job.artifacts
        .insert("transcript".into(), ws.transcript_path(&transcript.meeting_id));
    write_json(&ws.job_path(&transcript.meeting_id), &job)?;

    let mut run = Run {
        transcript,
        config,
        providers,
        dir: &dir,
        job: &mut job,
    };
    let result = run.execute();
    if let Err(e) = &result {
        warn!(meeting_id = %transcript.meeting_id, error = %e, "pipeline failed");
        job.fail(e);
    }
    write_json(&ws.job_path(&transcript.meeting_id), &job)?;
    result.map(|questionnaire_path| PipelineOutcome {
        questionnaire_path,
        job,
    })
}

struct Run<'a> {
    transcript: &'a Transcript,
    config: &'a PipelineConfig,
    providers: &'a Providers,
    dir: &'a Path,
    job: &'a mut JobRecord,
}

impl Run<'_> {
    /// Loads the stage's artifact if present and valid, otherwise computes
    /// and stores it.
    fn stage<T: Serialize + DeserializeOwned>(
        &mut self,
        stage: Stage,
        valid: impl Fn(&T) -> bool,
        compute: impl FnOnce(&mut Self) -> Result<T, PipelineError>,
    ) -> Result<T, PipelineError> {
        if self.job.stage != stage {
            self.job.advance(stage)?;
        }
        let name = stage.artifact().expect("working stage");
        let path = self.dir.join(name);
        if path.exists() {
            match read_json::<T>(&path) {
                Ok(v) if valid(&v) => {
                    info!(?stage, "reusing artifact");
                    self.job.skipped.push(stage);
                    self.job.artifacts.insert(name.trim_end_matches(".json").into(), path);
                    return Ok(v);
                }
                _ => warn!(?stage, "stored artifact is invalid; recomputing"),
            }
        }
        info!(?stage, meeting_id = %self.transcript.meeting_id, "running stage");
        let value = compute(self)?;
        write_json(&path, &value)?;
        self.job.artifacts.insert(name.trim_end_matches(".json").into(), path);
        Ok(value)
    }

    fn execute(&mut self) -> Result<PathBuf, PipelineError> {
        let tagger = load_or_train_tagger(self.config)?;
        let transcript = self.transcript;
        let n = transcript.len();

        let segments: Vec<Segment> = self.stage(
            Stage::Segmenting,
            |s: &Vec<Segment>| is_partition(s, n),
            |r| {
                Ok(segmentation::segment(
                    transcript,
                    &r.config.segmentation,
                    r.providers.embedding.as_ref(),
                )?)
            },
        )?;

        let pools: Vec<QuestionPool> = self.stage(
            Stage::Generating,
            |p: &Vec<QuestionPool>| {
                p.len() == segments.len() && p.iter().zip(&segments).all(|(p, s)| p.segment_id == s.segment_id)
            },
            |r| {
                segments
                    .iter()
                    .map(|s| {
                        question_gen::build_pool(s, transcript, r.providers.generation.as_ref(), &r.config.generation)
                            .map_err(|source| PipelineError::Generation {
                                segment_id: s.segment_id.clone(),
                                source,
                            })
                    })
                    .collect()
            },
        )?;
        for p in &pools {
            if p.failed_calls > 0 {
                self.job.warnings.push(format!(
                    "{}: {} of {} generation calls failed",
                    p.segment_id, p.failed_calls, p.total_calls
                ));
            }
        }

        let tagged: Vec<Vec<TaggedQuestion>> = self.stage(
            Stage::Tagging,
            |t: &Vec<Vec<TaggedQuestion>>| {
                t.len() == pools.len() && t.iter().zip(&pools).all(|(t, p)| t.len() == p.len())
            },
            |r| {
                pools
                    .iter()
                    .map(|p| Ok(tagger::tag_pool(&tagger, p, r.providers.pos.as_ref())?))
                    .collect()
            },
        )?;

        let normalized: Vec<Option<NormalizationResult>> = self.stage(
            Stage::Normalizing,
            |v: &Vec<Option<NormalizationResult>>| v.len() == segments.len(),
            |r| {
                segments
                    .iter()
                    .zip(&tagged)
                    .map(|(s, t)| {
                        Ok(subject_network::normalize_segment(
                            &s.segment_id,
                            t,
                            r.providers.embedding.as_ref(),
                            &r.config.normalization,
                        )?)
                    })
                    .collect()
            },
        )?;
        for (s, r) in segments.iter().zip(&normalized) {
            if r.is_none() {
                self.job
                    .warnings
                    .push(format!("{}: no subjects extracted; segment skipped", s.segment_id));
            }
        }

        let questionnaire: Questionnaire = self.stage(
            Stage::Assembling,
            |q: &Questionnaire| q.meeting_id == transcript.meeting_id && q.validate(Some(n)).is_ok(),
            |r| {
                let (q, warnings) = questionnaire::assemble(
                    transcript,
                    &segments,
                    &normalized,
                    &tagged,
                    r.providers.locator.as_ref(),
                )?;
                r.job.warnings.extend(warnings);
                Ok(q)
            },
        )?;
        // the questionnaire is written by hand so its bytes do not depend on
        // the generic artifact writer
        let q_path = self.dir.join("questionnaire.json");
        write_atomic(&q_path, questionnaire.to_json().as_bytes())?;

        let gold = read_gold(self.config.evaluation.gold_questions.as_deref())?;
        self.stage(
            Stage::Evaluating,
            |r: &EvaluationReport| r.meeting_id == transcript.meeting_id,
            |r| evaluate(transcript, &questionnaire, &pools, gold.as_deref(), r.providers),
        )?;

        self.job.advance(Stage::Done)?;
        Ok(q_path)
    }
}

fn is_partition(segments: &[Segment], n: usize) -> bool {
    let mut next = 0;
    for s in segments {
        if s.start != next || s.end <= s.start {
            return false;
        }
        next = s.end;
    }
    next == n
}

/// Reads gold questions, one per non-blank line.
pub fn read_gold(path: Option<&Path>) -> Result<Option<Vec<String>>, PipelineError> {
    let Some(path) = path else { return Ok(None) };
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    Ok(Some(parse_gold(&text)))
}

pub fn parse_gold(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

/// Coverage and answerability of a questionnaire, plus gold-question
/// matching against the pooled questions when `gold` is given.
pub fn evaluate(
    transcript: &Transcript,
    questionnaire: &Questionnaire,
    pools: &[QuestionPool],
    gold: Option<&[String]>,
    providers: &Providers,
) -> Result<EvaluationReport, PipelineError> {
    let coverage = evaluation::coverage(questionnaire, transcript, providers.locator.as_ref())?;
    let questions: Vec<(String, String)> = questionnaire
        .questions
        .iter()
        .map(|(id, q)| (id.clone(), q.text.clone()))
        .collect();
    let answerability = evaluation::answerability(&questions, transcript, providers.qa.as_ref())?;
    let mut gold_match: Vec<MatchReport> = Vec::new();
    if let Some(gold) = gold.filter(|g| !g.is_empty()) {
        let pool: Vec<String> = pools.iter().flat_map(QuestionPool::texts).collect();
        let thresholds = evaluation::default_thresholds();
        for metric in [MatchMetric::EmbeddingCosine, MatchMetric::Rouge1F1, MatchMetric::Bleu4] {
            gold_match.push(evaluation::gold_match(
                &pool,
                gold,
                metric,
                &thresholds,
                Some(providers.embedding.as_ref()),
            )?);
        }
    }
    Ok(EvaluationReport {
        meeting_id: transcript.meeting_id.clone(),
        category: transcript.category,
        coverage,
        answerability,
        gold_match,
    })
}

/// Re-evaluates a finished meeting from its stored artifacts and writes
/// `reports.json`.
pub fn evaluate_meeting(
    meeting_id: &str,
    config: &PipelineConfig,
    gold: Option<&[String]>,
) -> Result<EvaluationReport, PipelineError> {
    let ws = Workspace::new(&config.output_dir);
    let transcript = ws.load_transcript(meeting_id)?;
    let questionnaire = ws.load_questionnaire(meeting_id)?;
    let pools: Vec<QuestionPool> = read_json(&ws.meeting_dir(meeting_id).join("pool.json"))?;
    let providers = Providers::from_config(config)?;
    let report = evaluate(&transcript, &questionnaire, &pools, gold, &providers)?;
    write_json(&ws.reports_path(meeting_id), &report)?;
    Ok(report)
}

/// Coverage table over every evaluated meeting in the workspace.
pub fn coverage_summary(output_dir: &Path) -> Result<String, PipelineError> {
    let ws = Workspace::new(output_dir);
    let mut rows = Vec::new();
    for id in ws.meetings()? {
        if let Ok(r) = ws.load_reports(&id) {
            rows.push((r.category, r.coverage.coverage));
        }
    }
    Ok(evaluation::coverage_table(&rows))
}

// ------------------------------------------------------------------- demo

/// Segmentation threshold for the offline hash embedder. Its sparse vectors
/// score unrelated blocks far lower than dense sentence embeddings do, so the
/// dense-model default of 0.55 would cut at every block.
pub const MOCK_SEGMENTATION_THRESHOLD: f64 = 0.3;

/// All-mock configuration for the bundled demo, rooted at `output_dir`.
pub fn demo_config(output_dir: &Path) -> PipelineConfig {
    let inputs = output_dir.join("inputs");
    PipelineConfig {
        output_dir: output_dir.to_path_buf(),
        segmentation: SegmentationConfig {
            threshold: MOCK_SEGMENTATION_THRESHOLD,
            ..SegmentationConfig::default()
        },
        tagger: TaggerConfig {
            model_path: Some(output_dir.join("models").join("tagger.json")),
            training_data: Some(inputs.join("annotations.conll")),
            train: TrainConfig::default(),
        },
        evaluation: EvaluationConfig {
            gold_questions: Some(inputs.join("gold_questions.txt")),
            ..EvaluationConfig::default()
        },
        ..PipelineConfig::default()
    }
}

/// Writes the bundled transcript, annotations and gold questions under
/// `<output_dir>/inputs` and runs the pipeline on them with mock providers.
pub fn demo(output_dir: &Path) -> Result<PipelineOutcome, PipelineError> {
    let inputs = output_dir.join("inputs");
    std::fs::create_dir_all(&inputs).map_err(|e| io_err(&inputs, e))?;
    for (name, body) in [
        ("demo_meeting.json", DEMO_TRANSCRIPT),
        ("annotations.conll", DEMO_ANNOTATIONS),
        ("gold_questions.txt", DEMO_GOLD_QUESTIONS),
    ] {
        let p = inputs.join(name);
        std::fs::write(&p, body).map_err(|e| io_err(&p, e))?;
    }
    run_pipeline(&inputs.join("demo_meeting.json"), &demo_config(output_dir))
}

/// The bundled demo transcript.
pub fn demo_transcript() -> Transcript {
    parse_transcript(DEMO_TRANSCRIPT.as_bytes(), TranscriptFormat::QmsumJson, "demo")
        .expect("bundled transcript parses")
}

/// The bundled annotated questions.
pub fn demo_annotations() -> Vec<transcript::AnnotatedQuestion> {
    parse_annotations(DEMO_ANNOTATIONS.as_bytes())
        .expect("bundled annotations parse")
        .questions
}
