//! Staged, resumable run orchestration.
//!
//! A run directory holds the manifest, the resolved config, per-stage JSONL
//! artifacts, a response cache, and one `.stage_<name>.done` marker per
//! completed stage. Stages execute in a fixed order; rerunning a run skips
//! completed stages, and the generate/embed stages dedupe against their own
//! output so an interrupted run resumes without duplicate records.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use tutorbench_core::ablation::{
    effective_context, generate_variants, ContextComponent, ScenarioVariant, VARIANT_KEYS,
};
use tutorbench_core::analysis::AnalysisError;
use tutorbench_core::prompt::{content_hash, render, PromptTemplate, RenderedPrompt};
use tutorbench_core::quality::{aggregate_quality, check_format, parse_response, ResponseQualityInput};
use tutorbench_core::scenario::Corpus;
use tutorbench_core::stats::{run_adaptivity_tests, EmbeddingMatrix, ModelEmbeddings, StatsError};

use crate::backends::cache::{CacheError, FileCache};
use crate::backends::{
    chat_backend, embedding_backend, with_retry, BackendError, EmbeddingRecord, FailureRecord,
    GenerationRecord,
};
use crate::config::{Config, ConfigError, EmbeddingConfig, ModelConfig};
use crate::corpus_io::{load_corpus, CorpusIoError};
use crate::export::{compute_pca_export, to_csv};
use crate::report::{
    AdaptivityReport, CellSummary, ModelQuality, QualityReport, Report, ALPHA,
};
use crate::scorer::{build_scorer, ScorerError};
use crate::template_io::{load_template, TemplateIoError};

pub const STAGES: [&str; 8] = [
    "validate", "ablate", "generate", "embed", "test", "quality", "pca", "report",
];

pub const QUALITY_CONFIDENCE: f64 = 0.95;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Corpus(#[from] CorpusIoError),
    #[error(transparent)]
    Template(#[from] TemplateIoError),
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error("backend failure for {model_name}: {source}")]
    Backend {
        model_name: String,
        source: BackendError,
    },
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Scorer(#[from] ScorerError),
    #[error("unknown stage {0:?}")]
    UnknownStage(String),
    #[error("stage {stage:?} requires completed stage {missing:?}; run it first")]
    StageOrder { stage: String, missing: String },
    #[error("missing artifact {0}; run the producing stage first")]
    MissingArtifact(PathBuf),
    #[error("malformed artifact {path}: {detail}")]
    MalformedArtifact { path: PathBuf, detail: String },
    #[error("run directory {dir} belongs to a different run (manifest {found}, expected {expected})")]
    ManifestMismatch {
        dir: PathBuf,
        found: String,
        expected: String,
    },
    #[error("prompt render failed for {scenario_id}/{variant_key}: {detail}")]
    Render {
        scenario_id: String,
        variant_key: String,
        detail: String,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// The self-describing identity of a run: everything that determines its
/// outputs. `run_id` is the content hash of the other fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub tool_version: String,
    pub corpus_path: String,
    pub corpus_sha256: String,
    pub template_sha256: String,
    pub resamples: usize,
    pub seed: u64,
    pub parallelism: usize,
    pub embedding: EmbeddingConfig,
    pub models: Vec<ModelConfig>,
}

pub fn build_manifest(config: &Config) -> Result<RunManifest, PipelineError> {
    let corpus_text =
        fs::read_to_string(&config.corpus).map_err(io_err(&config.corpus))?;
    let template_text =
        fs::read_to_string(&config.template).map_err(io_err(&config.template))?;
    let mut manifest = RunManifest {
        run_id: String::new(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        corpus_path: config.corpus.display().to_string(),
        corpus_sha256: content_hash(&corpus_text),
        template_sha256: content_hash(&template_text),
        resamples: config.resamples,
        seed: config.seed,
        parallelism: config.parallelism,
        embedding: config.embedding.clone(),
        models: config.models.clone(),
    };
    let fingerprint = serde_json::to_string(&manifest).expect("manifest serializes");
    manifest.run_id = content_hash(&fingerprint);
    Ok(manifest)
}

/// An open run directory with its resolved config.
pub struct RunContext {
    pub run_dir: PathBuf,
    pub config: Config,
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

impl RunContext {
    /// Initializes (or reopens) a run directory for this config. Reopening
    /// with a config that hashes to a different run id is an error: a run
    /// directory belongs to exactly one run.
    pub fn prepare(config: Config, run_dir: PathBuf) -> Result<Self, PipelineError> {
        let manifest = build_manifest(&config)?;
        fs::create_dir_all(&run_dir).map_err(io_err(&run_dir))?;
        let manifest_path = run_dir.join("manifest.json");
        if manifest_path.exists() {
            let existing: RunManifest = read_json(&manifest_path)?;
            if existing.run_id != manifest.run_id {
                return Err(PipelineError::ManifestMismatch {
                    dir: run_dir,
                    found: existing.run_id,
                    expected: manifest.run_id,
                });
            }
        } else {
            write_json(&manifest_path, &manifest)?;
        }
        let config_path = run_dir.join("config.json");
        if !config_path.exists() {
            write_json(&config_path, &config)?;
        }
        Ok(RunContext { run_dir, config })
    }

    /// Reopens an existing run directory from its stored config.
    pub fn open(run_dir: PathBuf) -> Result<Self, PipelineError> {
        let config_path = run_dir.join("config.json");
        if !config_path.exists() {
            return Err(PipelineError::MissingArtifact(config_path));
        }
        let config: Config = read_json(&config_path)?;
        Ok(RunContext { run_dir, config })
    }

    pub fn manifest(&self) -> Result<RunManifest, PipelineError> {
        read_json(&self.run_dir.join("manifest.json"))
    }

    fn marker_path(&self, stage: &str) -> PathBuf {
        self.run_dir.join(format!(".stage_{stage}.done"))
    }

    pub fn stage_done(&self, stage: &str) -> bool {
        self.marker_path(stage).exists()
    }

    pub fn variants_path(&self) -> PathBuf {
        self.run_dir.join("variants.jsonl")
    }

    pub fn failures_path(&self) -> PathBuf {
        self.run_dir.join("failures.jsonl")
    }

    pub fn generations_path(&self, model_name: &str) -> PathBuf {
        self.run_dir
            .join(format!("generations_{}.jsonl", sanitize(model_name)))
    }

    pub fn embeddings_path(&self, model_name: &str) -> PathBuf {
        self.run_dir
            .join(format!("embeddings_{}.jsonl", sanitize(model_name)))
    }

    pub fn adaptivity_path(&self) -> PathBuf {
        self.run_dir.join("adaptivity.json")
    }

    pub fn quality_path(&self) -> PathBuf {
        self.run_dir.join("quality.json")
    }

    pub fn pca_csv_path(&self) -> PathBuf {
        self.run_dir.join("pca.csv")
    }

    pub fn pca_json_path(&self) -> PathBuf {
        self.run_dir.join("pca.json")
    }

    pub fn report_md_path(&self) -> PathBuf {
        self.run_dir.join("report.md")
    }

    pub fn report_json_path(&self) -> PathBuf {
        self.run_dir.join("report.json")
    }

    fn cache(&self) -> FileCache {
        FileCache::new(&self.run_dir.join("cache"))
    }

    /// Runs one stage, enforcing that all earlier stages completed.
    pub fn run_stage(&self, stage: &str) -> Result<(), PipelineError> {
        let position = STAGES
            .iter()
            .position(|s| *s == stage)
            .ok_or_else(|| PipelineError::UnknownStage(stage.to_string()))?;
        for prior in &STAGES[..position] {
            if !self.stage_done(prior) {
                return Err(PipelineError::StageOrder {
                    stage: stage.to_string(),
                    missing: prior.to_string(),
                });
            }
        }
        match stage {
            "validate" => self.stage_validate()?,
            "ablate" => self.stage_ablate()?,
            "generate" => self.stage_generate()?,
            "embed" => self.stage_embed()?,
            "test" => self.stage_test()?,
            "quality" => self.stage_quality()?,
            "pca" => self.stage_pca()?,
            "report" => self.stage_report()?,
            _ => unreachable!(),
        }
        let marker = self.marker_path(stage);
        fs::write(&marker, "done\n").map_err(io_err(&marker))?;
        Ok(())
    }

    /// Runs every stage in order, skipping stages already marked done.
    pub fn run_all(&self) -> Result<(), PipelineError> {
        for stage in STAGES {
            if !self.stage_done(stage) {
                self.run_stage(stage)?;
            }
        }
        Ok(())
    }

    fn load_inputs(&self) -> Result<(Corpus, PromptTemplate), PipelineError> {
        let corpus = load_corpus(&self.config.corpus)?;
        let template = load_template(&self.config.template)?;
        Ok((corpus, template))
    }

    fn stage_validate(&self) -> Result<(), PipelineError> {
        self.load_inputs()?;
        Ok(())
    }

    fn stage_ablate(&self) -> Result<(), PipelineError> {
        let (corpus, _) = self.load_inputs()?;
        let mut lines = String::new();
        for scenario in &corpus.scenarios {
            for variant in generate_variants(scenario) {
                lines.push_str(&serde_json::to_string(&variant).expect("variant serializes"));
                lines.push('\n');
            }
        }
        let path = self.variants_path();
        fs::write(&path, lines).map_err(io_err(&path))?;
        Ok(())
    }

    fn read_variants(&self) -> Result<Vec<ScenarioVariant>, PipelineError> {
        read_jsonl(&self.variants_path(), false)
    }

    fn stage_generate(&self) -> Result<(), PipelineError> {
        let (corpus, template) = self.load_inputs()?;
        let variants = self.read_variants()?;
        let cache = self.cache();
        let failures = Mutex::new(JsonlAppender::open(&self.failures_path())?);
        for model_cfg in &self.config.models {
            let path = self.generations_path(&model_cfg.name);
            let done: HashSet<(String, String)> = read_jsonl::<GenerationRecord>(&path, true)
                .unwrap_or_default()
                .into_iter()
                .map(|r| (r.scenario_id, r.variant_key))
                .collect();
            let mut jobs: Vec<RenderedPrompt> = Vec::new();
            for variant in &variants {
                if done.contains(&(variant.scenario_id.clone(), variant.variant_key().to_string()))
                {
                    continue;
                }
                let ctx = effective_context(variant, &corpus).map_err(|e| {
                    PipelineError::Render {
                        scenario_id: variant.scenario_id.clone(),
                        variant_key: variant.variant_key().to_string(),
                        detail: e.to_string(),
                    }
                })?;
                jobs.push(render(&template, &ctx).map_err(|e| PipelineError::Render {
                    scenario_id: variant.scenario_id.clone(),
                    variant_key: variant.variant_key().to_string(),
                    detail: e.to_string(),
                })?);
            }
            let backend = chat_backend(model_cfg);
            let out = Mutex::new(JsonlAppender::open(&path)?);
            parallel_for_each(&jobs, self.config.parallelism, &|prompt: &RenderedPrompt| {
                let key = content_hash(&format!(
                    "{}|{}|{}",
                    model_cfg.name, prompt.prompt_hash, model_cfg.temperature
                ));
                let (response_text, attempt_count) = match cache.get("gen", &key)? {
                    Some(cached) => (cached, 0),
                    None => {
                        let attempt_result = with_retry(
                            &model_cfg.retry,
                            &mut std::thread::sleep,
                            &mut || backend.complete(&prompt.text, model_cfg),
                        );
                        match attempt_result {
                            Ok((text, attempts)) => {
                                cache.put("gen", &key, &text)?;
                                (text, attempts)
                            }
                            Err(e) if e.is_abort() => {
                                return Err(PipelineError::Backend {
                                    model_name: model_cfg.name.clone(),
                                    source: e,
                                })
                            }
                            Err(e) => {
                                failures.lock().unwrap().append(&FailureRecord {
                                    stage: "generate".into(),
                                    scenario_id: prompt.scenario_id.clone(),
                                    variant_key: prompt.variant_key.clone(),
                                    model_name: model_cfg.name.clone(),
                                    error: e.to_string(),
                                })?;
                                return Ok(());
                            }
                        }
                    }
                };
                out.lock().unwrap().append(&GenerationRecord {
                    scenario_id: prompt.scenario_id.clone(),
                    variant_key: prompt.variant_key.clone(),
                    model_name: model_cfg.name.clone(),
                    prompt_hash: prompt.prompt_hash.clone(),
                    response_text,
                    timestamp: unix_now(),
                    attempt_count,
                })
            })?;
        }
        Ok(())
    }

    fn read_generations(&self, model_name: &str) -> Result<Vec<GenerationRecord>, PipelineError> {
        let path = self.generations_path(model_name);
        if !path.exists() {
            return Err(PipelineError::MissingArtifact(path));
        }
        let mut records: Vec<GenerationRecord> = read_jsonl(&path, true)?;
        dedupe_sort(&mut records, |r| {
            (r.scenario_id.clone(), variant_order(&r.variant_key))
        });
        Ok(records)
    }

    fn read_embeddings(&self, model_name: &str) -> Result<Vec<EmbeddingRecord>, PipelineError> {
        let path = self.embeddings_path(model_name);
        if !path.exists() {
            return Err(PipelineError::MissingArtifact(path));
        }
        let mut records: Vec<EmbeddingRecord> = read_jsonl(&path, true)?;
        dedupe_sort(&mut records, |r| {
            (r.scenario_id.clone(), variant_order(&r.variant_key))
        });
        Ok(records)
    }

    fn stage_embed(&self) -> Result<(), PipelineError> {
        let cache = self.cache();
        let emb_cfg = &self.config.embedding;
        let backend = embedding_backend(emb_cfg);
        let failures = Mutex::new(JsonlAppender::open(&self.failures_path())?);
        for model_cfg in &self.config.models {
            let generations = self.read_generations(&model_cfg.name)?;
            let path = self.embeddings_path(&model_cfg.name);
            let done: HashSet<(String, String)> = read_jsonl::<EmbeddingRecord>(&path, true)
                .unwrap_or_default()
                .into_iter()
                .map(|r| (r.scenario_id, r.variant_key))
                .collect();
            let jobs: Vec<&GenerationRecord> = generations
                .iter()
                .filter(|r| !done.contains(&(r.scenario_id.clone(), r.variant_key.clone())))
                .collect();
            let out = Mutex::new(JsonlAppender::open(&path)?);
            parallel_for_each(&jobs, self.config.parallelism, &|record: &&GenerationRecord| {
                let text_hash = content_hash(&record.response_text);
                let key = content_hash(&format!(
                    "{}|{}|{}",
                    emb_cfg.model_name, emb_cfg.dimension, text_hash
                ));
                let vector: Vec<f64> = match cache.get("emb", &key)? {
                    Some(cached) => {
                        serde_json::from_str(&cached).map_err(|e| {
                            PipelineError::MalformedArtifact {
                                path: self.run_dir.join("cache"),
                                detail: e.to_string(),
                            }
                        })?
                    }
                    None => {
                        let attempt_result = with_retry(
                            &emb_cfg.retry,
                            &mut std::thread::sleep,
                            &mut || backend.embed(&record.response_text, emb_cfg),
                        );
                        match attempt_result {
                            Ok((vector, _)) => {
                                let json =
                                    serde_json::to_string(&vector).expect("vector serializes");
                                cache.put("emb", &key, &json)?;
                                vector
                            }
                            Err(e) if e.is_abort() => {
                                return Err(PipelineError::Backend {
                                    model_name: emb_cfg.model_name.clone(),
                                    source: e,
                                })
                            }
                            Err(e) => {
                                failures.lock().unwrap().append(&FailureRecord {
                                    stage: "embed".into(),
                                    scenario_id: record.scenario_id.clone(),
                                    variant_key: record.variant_key.clone(),
                                    model_name: model_cfg.name.clone(),
                                    error: e.to_string(),
                                })?;
                                return Ok(());
                            }
                        }
                    }
                };
                out.lock().unwrap().append(&EmbeddingRecord {
                    scenario_id: record.scenario_id.clone(),
                    variant_key: record.variant_key.clone(),
                    model_name: model_cfg.name.clone(),
                    text_hash,
                    embedding_model_name: emb_cfg.model_name.clone(),
                    vector,
                })
            })?;
        }
        Ok(())
    }

    /// Builds the six aligned matrices for one model, keeping only scenarios
    /// with an embedding under every variant (listwise deletion).
    fn model_matrices(&self, model_name: &str) -> Result<ModelEmbeddings, PipelineError> {
        let records = self.read_embeddings(model_name)?;
        let mut by_variant: BTreeMap<&str, BTreeMap<&str, &[f64]>> = BTreeMap::new();
        for record in &records {
            by_variant
                .entry(record.variant_key.as_str())
                .or_default()
                .insert(record.scenario_id.as_str(), &record.vector);
        }
        let mut complete: Option<BTreeSet<&str>> = None;
        for key in VARIANT_KEYS {
            let ids: BTreeSet<&str> = by_variant
                .get(key)
                .map(|m| m.keys().copied().collect())
                .unwrap_or_default();
            complete = Some(match complete {
                None => ids,
                Some(acc) => acc.intersection(&ids).copied().collect(),
            });
        }
        let ids: Vec<&str> = complete.unwrap_or_default().into_iter().collect();
        let path = self.embeddings_path(model_name);
        let build = |key: &str| -> Result<EmbeddingMatrix, PipelineError> {
            let table = &by_variant[key];
            let rows: Vec<Vec<f64>> = ids.iter().map(|id| table[id].to_vec()).collect();
            let index: Vec<String> = ids.iter().map(|id| id.to_string()).collect();
            EmbeddingMatrix::new(rows, index, key.to_string()).map_err(|e| {
                PipelineError::MalformedArtifact {
                    path: path.clone(),
                    detail: e.to_string(),
                }
            })
        };
        let full = build(VARIANT_KEYS[0])?;
        let mut ablated = Vec::new();
        for component in ContextComponent::ALL {
            ablated.push((component, build(component.variant_key())?));
        }
        Ok(ModelEmbeddings {
            model_name: model_name.to_string(),
            full,
            ablated,
        })
    }

    fn stage_test(&self) -> Result<(), PipelineError> {
        let mut models = Vec::new();
        for model_cfg in &self.config.models {
            models.push(self.model_matrices(&model_cfg.name)?);
        }
        let cells = run_adaptivity_tests(&models, self.config.resamples, self.config.seed)?;
        let report = AdaptivityReport {
            resamples: self.config.resamples,
            master_seed: self.config.seed,
            alpha: ALPHA,
            cells: cells.iter().map(CellSummary::from_cell).collect(),
        };
        write_json(&self.adaptivity_path(), &report)
    }

    fn stage_quality(&self) -> Result<(), PipelineError> {
        let (corpus, _) = self.load_inputs()?;
        let mut scorer = build_scorer(&self.config.scorer)?;
        let mut failures = JsonlAppender::open(&self.failures_path())?;
        let mut models = Vec::new();
        for model_cfg in &self.config.models {
            let records = self.read_generations(&model_cfg.name)?;
            let mut inputs = Vec::with_capacity(records.len());
            for record in &records {
                let scenario = corpus.get(&record.scenario_id).ok_or_else(|| {
                    PipelineError::MalformedArtifact {
                        path: self.generations_path(&model_cfg.name),
                        detail: format!("unknown scenario_id {:?}", record.scenario_id),
                    }
                })?;
                // applicability follows what the model actually saw: an
                // ablated component cannot earn its soundness rating
                let has_correct_steps =
                    !scenario.correct_steps.is_empty() && record.variant_key != "no_correct";
                let has_incorrect_steps =
                    !scenario.incorrect_steps.is_empty() && record.variant_key != "no_incorrect";
                let soundness = match scorer.as_deref_mut() {
                    Some(s) if has_correct_steps || has_incorrect_steps => {
                        match s.score(&record.response_text, scenario) {
                            Ok(score) => Some(score),
                            Err(e) => {
                                failures.append(&FailureRecord {
                                    stage: "quality".into(),
                                    scenario_id: record.scenario_id.clone(),
                                    variant_key: record.variant_key.clone(),
                                    model_name: model_cfg.name.clone(),
                                    error: e.to_string(),
                                })?;
                                None
                            }
                        }
                    }
                    _ => None,
                };
                let parsed = parse_response(&record.response_text);
                inputs.push(ResponseQualityInput {
                    format: check_format(&parsed),
                    soundness,
                    has_correct_steps,
                    has_incorrect_steps,
                });
            }
            models.push(ModelQuality {
                model_name: model_cfg.name.clone(),
                rows: aggregate_quality(&inputs, QUALITY_CONFIDENCE),
            });
        }
        let report = QualityReport {
            confidence: QUALITY_CONFIDENCE,
            models,
        };
        write_json(&self.quality_path(), &report)
    }

    fn stage_pca(&self) -> Result<(), PipelineError> {
        let mut records = Vec::new();
        for model_cfg in &self.config.models {
            records.extend(self.read_embeddings(&model_cfg.name)?);
        }
        let export = compute_pca_export(&records)?;
        let csv_path = self.pca_csv_path();
        fs::write(&csv_path, to_csv(&export)).map_err(io_err(&csv_path))?;
        write_json(&self.pca_json_path(), &export)
    }

    pub fn build_report(&self) -> Result<Report, PipelineError> {
        let manifest = self.manifest()?;
        let adaptivity_path = self.adaptivity_path();
        let quality_path = self.quality_path();
        if !adaptivity_path.exists() {
            return Err(PipelineError::MissingArtifact(adaptivity_path));
        }
        if !quality_path.exists() {
            return Err(PipelineError::MissingArtifact(quality_path));
        }
        Ok(Report {
            run_id: manifest.run_id,
            adaptivity: read_json(&adaptivity_path)?,
            quality: read_json(&quality_path)?,
        })
    }

    fn stage_report(&self) -> Result<(), PipelineError> {
        let report = self.build_report()?;
        let md_path = self.report_md_path();
        fs::write(&md_path, crate::report::render_markdown(&report)).map_err(io_err(&md_path))?;
        let json_path = self.report_json_path();
        fs::write(&json_path, crate::report::render_json(&report)).map_err(io_err(&json_path))
    }
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn variant_order(key: &str) -> usize {
    VARIANT_KEYS
        .iter()
        .position(|k| *k == key)
        .unwrap_or(VARIANT_KEYS.len())
}

/// Stable key order with first-wins dedupe, so reruns and appends never
/// change downstream results.
fn dedupe_sort<T, K: Ord>(records: &mut Vec<T>, key: impl Fn(&T) -> K) {
    records.sort_by_key(&key);
    records.dedup_by(|b, a| key(a) == key(b));
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, PipelineError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::MalformedArtifact {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

/// Reads a JSONL artifact. With `lenient_tail`, a malformed final line is
/// dropped instead of failing: an interrupted append leaves at most one
/// partial trailing line.
fn read_jsonl<T: DeserializeOwned>(path: &Path, lenient_tail: bool) -> Result<Vec<T>, PipelineError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    let mut records = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        match serde_json::from_str(line) {
            Ok(record) => records.push(record),
            Err(e) if lenient_tail && i + 1 == lines.len() => {
                let _ = e;
            }
            Err(e) => {
                return Err(PipelineError::MalformedArtifact {
                    path: path.to_path_buf(),
                    detail: format!("line {}: {}", i + 1, e),
                })
            }
        }
    }
    Ok(records)
}

struct JsonlAppender {
    path: PathBuf,
    file: fs::File,
}

impl JsonlAppender {
    /// Opens for append, first truncating any torn trailing line (a file not
    /// ending in a newline) left by an interrupted writer.
    fn open(path: &Path) -> Result<Self, PipelineError> {
        if path.exists() {
            let bytes = fs::read(path).map_err(io_err(path))?;
            if !bytes.is_empty() && bytes.last() != Some(&b'\n') {
                let keep = bytes.iter().rposition(|b| *b == b'\n').map_or(0, |p| p + 1);
                fs::write(path, &bytes[..keep]).map_err(io_err(path))?;
            }
        }
        let file = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(io_err(path))?;
        Ok(JsonlAppender {
            path: path.to_path_buf(),
            file,
        })
    }

    fn append<T: Serialize>(&mut self, record: &T) -> Result<(), PipelineError> {
        let mut line = serde_json::to_string(record).expect("record serializes");
        line.push('\n');
        self.file
            .write_all(line.as_bytes())
            .map_err(io_err(&self.path))
    }
}

/// Runs `f` over `items` on up to `threads` workers, stopping early on the
/// first error. With one thread the items run in order on the caller.
fn parallel_for_each<T: Sync>(
    items: &[T],
    threads: usize,
    f: &(dyn Fn(&T) -> Result<(), PipelineError> + Sync),
) -> Result<(), PipelineError> {
    if threads <= 1 || items.len() <= 1 {
        for item in items {
            f(item)?;
        }
        return Ok(());
    }
    let next = AtomicUsize::new(0);
    let error: Mutex<Option<PipelineError>> = Mutex::new(None);
    std::thread::scope(|scope| {
        for _ in 0..threads.min(items.len()) {
            scope.spawn(|| loop {
                if error.lock().unwrap().is_some() {
                    break;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= items.len() {
                    break;
                }
                if let Err(e) = f(&items[i]) {
                    let mut slot = error.lock().unwrap();
                    if slot.is_none() {
                        *slot = Some(e);
                    }
                    break;
                }
            });
        }
    });
    match error.into_inner().unwrap() {
        Some(e) => Err(e),
        None => Ok(()),
    }
}
