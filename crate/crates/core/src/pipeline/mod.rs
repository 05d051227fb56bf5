//! End-to-end orchestration with a reproducible run manifest.
//!
//! Stages communicate exclusively through files in the output directory, so
//! any prefix of the pipeline can be rerun against pre-supplied artifacts.
//! All randomness flows from the single config seed through named
//! substreams, and every stage records digests of what it read and wrote;
//! identical config and inputs reproduce identical output digests.

pub mod report;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::agreement::{self, BucketScheme};
use crate::classify::{self, FeatureInputs};
use crate::collab;
use crate::corpus::{self, CorpusPaths, Language};
use crate::imports;
use crate::jsonl;
use crate::judge::{self, ChatEndpoint, HashEmbedder};
use crate::novelty::{self, Aggregator};
use crate::stats;

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ingest,
    Extract,
    Novelty,
    Collab,
    Classify,
    Regress,
    Judge,
    Agree,
}

pub const STAGE_ORDER: [Stage; 8] = [
    Stage::Ingest,
    Stage::Extract,
    Stage::Novelty,
    Stage::Collab,
    Stage::Classify,
    Stage::Regress,
    Stage::Judge,
    Stage::Agree,
];

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Extract => "extract",
            Stage::Novelty => "novelty",
            Stage::Collab => "collab",
            Stage::Classify => "classify",
            Stage::Regress => "regress",
            Stage::Judge => "judge",
            Stage::Agree => "agree",
        }
    }

    /// Stages whose outputs this stage consumes.
    fn dependencies(self) -> &'static [Stage] {
        match self {
            Stage::Ingest => &[],
            Stage::Extract => &[Stage::Ingest],
            Stage::Novelty => &[Stage::Extract],
            Stage::Collab => &[Stage::Ingest],
            Stage::Classify => &[Stage::Ingest, Stage::Extract, Stage::Novelty, Stage::Collab],
            Stage::Regress => &[Stage::Classify],
            Stage::Judge => &[Stage::Ingest],
            Stage::Agree => &[],
        }
    }

    /// Marker output whose presence means the stage's artifacts are
    /// pre-supplied.
    fn marker(self, out: &Path) -> PathBuf {
        match self {
            Stage::Ingest => out.join("corpus/projects.jsonl"),
            Stage::Extract => out.join("import_profiles.jsonl"),
            Stage::Novelty => out.join("project_novelty.jsonl"),
            Stage::Collab => out.join("collab_metrics.jsonl"),
            Stage::Classify => out.join("features.csv"),
            Stage::Regress => out.join("fit.json"),
            Stage::Judge => out.join("judgments.jsonl"),
            Stage::Agree => out.join("agreement.json"),
        }
    }
}

impl std::str::FromStr for Stage {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        STAGE_ORDER
            .into_iter()
            .find(|stage| stage.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| format!("unknown stage {s:?}"))
    }
}

fn default_runs() -> usize {
    20
}

fn default_scale() -> bool {
    true
}

fn default_label() -> String {
    "creative".into()
}

fn default_group() -> String {
    "hackathon_id".into()
}

fn default_embed_dim() -> usize {
    64
}

fn default_stages() -> Vec<Stage> {
    vec![
        Stage::Ingest,
        Stage::Extract,
        Stage::Novelty,
        Stage::Collab,
        Stage::Classify,
        Stage::Regress,
        Stage::Agree,
    ]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegressConfig {
    #[serde(default = "default_label")]
    pub label: String,
    #[serde(default = "default_group")]
    pub group: String,
    /// Feature columns to include; empty means all.
    #[serde(default)]
    pub columns: Vec<String>,
}

impl Default for RegressConfig {
    fn default() -> Self {
        RegressConfig {
            label: default_label(),
            group: default_group(),
            columns: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JudgeConfig {
    #[serde(default)]
    pub models_file: Option<PathBuf>,
    #[serde(default)]
    pub replay_dir: Option<PathBuf>,
    #[serde(default)]
    pub live: bool,
    #[serde(default)]
    pub max_requests: Option<usize>,
}

impl Default for JudgeConfig {
    fn default() -> Self {
        JudgeConfig {
            models_file: None,
            replay_dir: None,
            live: false,
            max_requests: None,
        }
    }
}

/// Run configuration; TOML keys mirror the field names.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub corpus_dir: PathBuf,
    #[serde(default)]
    pub repos_dir: Option<PathBuf>,
    #[serde(default)]
    pub ratings_file: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub z_threshold: f64,
    #[serde(default = "Aggregator::default_min")]
    pub aggregator: Aggregator,
    #[serde(default = "default_scale")]
    pub scale_features: bool,
    #[serde(default = "default_embed_dim")]
    pub embed_dim: usize,
    #[serde(default)]
    pub langs: Option<Vec<String>>,
    #[serde(default = "default_stages")]
    pub stages: Vec<Stage>,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub regress: RegressConfig,
    #[serde(default)]
    pub judge: JudgeConfig,
    /// Agreement schemes: named schemes or custom partitions like "1-2|3-5".
    #[serde(default)]
    pub agree_schemes: Vec<String>,
}

impl RunConfig {
    pub fn from_toml(path: &Path) -> Result<RunConfig, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
    }

    fn languages(&self) -> Result<std::collections::BTreeSet<Language>, PipelineError> {
        match &self.langs {
            None => Ok(Language::ALL.into_iter().collect()),
            Some(tags) => tags
                .iter()
                .map(|t| {
                    Language::parse(t)
                        .ok_or_else(|| PipelineError::Config(format!("unknown language {t:?}")))
                })
                .collect(),
        }
    }

    fn schemes(&self) -> Result<Vec<BucketScheme>, PipelineError> {
        let names: Vec<String> = if self.agree_schemes.is_empty()
            || self.agree_schemes.iter().any(|s| s == "all")
        {
            vec!["coarse".into(), "mid".into(), "fine".into()]
        } else {
            self.agree_schemes.clone()
        };
        names
            .iter()
            .map(|n| BucketScheme::parse(n).map_err(|e| PipelineError::Config(e.to_string())))
            .collect()
    }
}

impl Aggregator {
    fn default_min() -> Aggregator {
        Aggregator::Min
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("stage {stage} failed: {cause}")]
    Stage { stage: &'static str, cause: String },
    #[error("missing artifact: {0}")]
    MissingArtifact(String),
}

impl PipelineError {
    /// Process exit code: 2 for configuration errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            _ => 1,
        }
    }

    fn stage(stage: Stage, cause: impl std::fmt::Display) -> PipelineError {
        PipelineError::Stage {
            stage: stage.name(),
            cause: cause.to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub input_digests: BTreeMap<String, String>,
    pub output_digests: BTreeMap<String, String>,
    pub seconds: f64,
    #[serde(default)]
    pub skipped: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_digest: String,
    pub config: RunConfig,
    pub stages: Vec<StageRecord>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Option<RunManifest> {
        let text = std::fs::read_to_string(path).ok()?;
        serde_json::from_str(&text).ok()
    }

    pub fn stage(&self, stage: Stage) -> Option<&StageRecord> {
        self.stages.iter().find(|r| r.stage == stage)
    }
}

fn sha256_file(path: &Path) -> std::io::Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(hex_digest(&bytes))
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn digest_paths(paths: &[PathBuf]) -> Result<BTreeMap<String, String>, std::io::Error> {
    let mut out = BTreeMap::new();
    for path in paths {
        if path.is_file() {
            out.insert(path.display().to_string(), sha256_file(path)?);
        }
    }
    Ok(out)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)
}

/// Validates the requested stage set: every dependency must either run
/// earlier in this invocation or already have its outputs on disk.
fn validate_stages(config: &RunConfig) -> Result<Vec<Stage>, PipelineError> {
    let mut requested: Vec<Stage> = STAGE_ORDER
        .into_iter()
        .filter(|s| config.stages.contains(s))
        .collect();
    requested.dedup();
    if requested.is_empty() {
        return Err(PipelineError::Config("no stages requested".into()));
    }
    for stage in &requested {
        for dep in stage.dependencies() {
            let satisfied =
                requested.contains(dep) || dep.marker(&config.out_dir).is_file();
            if !satisfied {
                return Err(PipelineError::Config(format!(
                    "stage {} needs {} (run it or pre-supply its outputs in {})",
                    stage.name(),
                    dep.name(),
                    config.out_dir.display()
                )));
            }
        }
    }
    // Per-stage external inputs.
    if requested.contains(&Stage::Extract) {
        let repos = config
            .repos_dir
            .as_ref()
            .ok_or_else(|| PipelineError::Config("extract needs repos_dir".into()))?;
        if !repos.is_dir() {
            return Err(PipelineError::Config(format!(
                "repos_dir {} is not a directory",
                repos.display()
            )));
        }
    }
    if requested.contains(&Stage::Agree) {
        let ratings = config
            .ratings_file
            .as_ref()
            .ok_or_else(|| PipelineError::Config("agree needs ratings_file".into()))?;
        if !ratings.is_file() {
            return Err(PipelineError::Config(format!(
                "ratings_file {} is not a file",
                ratings.display()
            )));
        }
    }
    if requested.contains(&Stage::Judge) {
        let j = &config.judge;
        if j.live == j.replay_dir.is_some() {
            return Err(PipelineError::Config(
                "judge needs exactly one of replay_dir or live=true".into(),
            ));
        }
        if j.models_file.is_none() {
            return Err(PipelineError::Config("judge needs models_file".into()));
        }
    }
    Ok(requested)
}

/// Executes the configured stages in order and writes `manifest.json`.
/// A stage whose config, inputs and recorded outputs all match the previous
/// manifest is skipped.
pub fn run(config: &RunConfig) -> Result<RunManifest, PipelineError> {
    let requested = validate_stages(config)?;
    std::fs::create_dir_all(&config.out_dir)
        .map_err(|e| PipelineError::Config(format!("out_dir: {e}")))?;

    let config_digest = hex_digest(
        serde_json::to_string(config)
            .map_err(|e| PipelineError::Config(e.to_string()))?
            .as_bytes(),
    );
    let previous = RunManifest::load(&config.out_dir.join("manifest.json"))
        .filter(|m| m.config_digest == config_digest);

    let mut records = Vec::new();
    for stage in requested {
        let inputs = stage_inputs(stage, config);
        let input_digests =
            digest_paths(&inputs).map_err(|e| PipelineError::stage(stage, e))?;

        if let Some(prev) = previous.as_ref().and_then(|m| m.stage(stage)) {
            let outputs_intact = prev.input_digests == input_digests
                && !prev.output_digests.is_empty()
                && prev.output_digests.iter().all(|(path, digest)| {
                    sha256_file(Path::new(path)).is_ok_and(|d| &d == digest)
                });
            if outputs_intact {
                log::info!("stage {} unchanged; skipping", stage.name());
                records.push(StageRecord {
                    skipped: true,
                    seconds: 0.0,
                    ..prev.clone()
                });
                continue;
            }
        }

        let started = Instant::now();
        let outputs =
            execute_stage(stage, config).map_err(|e| match e {
                PipelineError::Config(_) => e,
                other => PipelineError::stage(stage, other),
            })?;
        let output_digests =
            digest_paths(&outputs).map_err(|e| PipelineError::stage(stage, e))?;
        records.push(StageRecord {
            stage,
            input_digests,
            output_digests,
            seconds: started.elapsed().as_secs_f64(),
            skipped: false,
        });
    }

    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_digest,
        config: config.clone(),
        stages: records,
    };
    write_json(&config.out_dir.join("manifest.json"), &manifest)
        .map_err(|e| PipelineError::Config(format!("manifest: {e}")))?;
    Ok(manifest)
}

/// External and inter-stage files a stage reads, for digest bookkeeping.
fn stage_inputs(stage: Stage, config: &RunConfig) -> Vec<PathBuf> {
    let out = &config.out_dir;
    let corpus_files = |dir: &Path| -> Vec<PathBuf> {
        ["hackathons.jsonl", "projects.jsonl", "participants.jsonl", "repos.jsonl"]
            .iter()
            .map(|f| dir.join(f))
            .collect()
    };
    match stage {
        Stage::Ingest => corpus_files(&config.corpus_dir),
        Stage::Extract => corpus_files(&out.join("corpus")),
        Stage::Novelty => vec![out.join("import_profiles.jsonl")],
        Stage::Collab => corpus_files(&out.join("corpus")),
        Stage::Classify => {
            let mut v = corpus_files(&out.join("corpus"));
            v.push(out.join("import_profiles.jsonl"));
            v.push(out.join("data_profiles.jsonl"));
            v.push(out.join("project_novelty.jsonl"));
            v.push(out.join("collab_metrics.jsonl"));
            v.push(out.join("weighted_winning.jsonl"));
            v
        }
        Stage::Regress => vec![out.join("features.csv")],
        Stage::Judge => {
            let mut v = corpus_files(&out.join("corpus"));
            if let Some(models) = &config.judge.models_file {
                v.push(models.clone());
            }
            v
        }
        Stage::Agree => config.ratings_file.iter().cloned().collect(),
    }
}

fn execute_stage(stage: Stage, config: &RunConfig) -> Result<Vec<PathBuf>, PipelineError> {
    match stage {
        Stage::Ingest => stage_ingest(config),
        Stage::Extract => stage_extract(config),
        Stage::Novelty => stage_novelty(config),
        Stage::Collab => stage_collab(config),
        Stage::Classify => stage_classify(config),
        Stage::Regress => stage_regress(config),
        Stage::Judge => stage_judge(config),
        Stage::Agree => stage_agree(config),
    }
}

fn load_normalized_corpus(out_dir: &Path) -> Result<corpus::Corpus, PipelineError> {
    let paths = CorpusPaths::from_dir(&out_dir.join("corpus"));
    corpus::load_corpus(&paths)
        .map(|loaded| loaded.corpus)
        .map_err(|e| PipelineError::MissingArtifact(format!("normalized corpus: {e}")))
}

fn stage_ingest(config: &RunConfig) -> Result<Vec<PathBuf>, PipelineError> {
    let paths = CorpusPaths::from_dir(&config.corpus_dir);
    let loaded = corpus::load_corpus(&paths).map_err(|e| PipelineError::Config(e.to_string()))?;
    let out = &config.out_dir;
    corpus::save_corpus(&loaded.corpus, &out.join("corpus"))
        .map_err(|e| PipelineError::Stage { stage: "ingest", cause: e.to_string() })?;
    let warnings: Vec<String> = loaded.report.warnings.iter().map(|w| w.to_string()).collect();
    write_json(
        &out.join("load_report.json"),
        &serde_json::json!({
            "hackathons": loaded.corpus.hackathons.len(),
            "projects": loaded.corpus.projects.len(),
            "participants": loaded.corpus.participants.len(),
            "repos": loaded.corpus.repos.len(),
            "warnings": warnings,
        }),
    )
    .map_err(|e| PipelineError::Stage { stage: "ingest", cause: e.to_string() })?;
    Ok(vec![
        out.join("corpus/hackathons.jsonl"),
        out.join("corpus/projects.jsonl"),
        out.join("corpus/participants.jsonl"),
        out.join("corpus/repos.jsonl"),
        out.join("load_report.json"),
    ])
}

fn stage_extract(config: &RunConfig) -> Result<Vec<PathBuf>, PipelineError> {
    let out = &config.out_dir;
    let corpus = load_normalized_corpus(out)?;
    let repos_dir = config
        .repos_dir
        .as_ref()
        .ok_or_else(|| PipelineError::Config("extract needs repos_dir".into()))?;
    let langs = config.languages()?;
    let profiles = imports::profile_corpus_repos(&corpus, repos_dir, &langs);

    let io_err = |e: std::io::Error| PipelineError::Stage { stage: "extract", cause: e.to_string() };
    jsonl::write_jsonl(&out.join("import_profiles.jsonl"), &profiles.import_profiles)
        .map_err(io_err)?;
    jsonl::write_jsonl(&out.join("data_profiles.jsonl"), &profiles.data_profiles)
        .map_err(io_err)?;
    write_json(
        &out.join("extract_skipped.json"),
        &profiles
            .skipped
            .iter()
            .map(|(id, reason)| serde_json::json!({"project_id": id, "reason": reason}))
            .collect::<Vec<_>>(),
    )
    .map_err(io_err)?;

    let stats = profiles.funnel_stats();
    let funnel = corpus::funnel(&corpus, |r| Path::new(&r.root_path).is_dir()
        || repos_dir.join(&r.root_path).is_dir(), &stats);
    write_json(&out.join("funnel.json"), &funnel).map_err(io_err)?;
    std::fs::write(out.join("funnel.txt"), funnel.to_text()).map_err(io_err)?;

    Ok(vec![
        out.join("import_profiles.jsonl"),
        out.join("data_profiles.jsonl"),
        out.join("extract_skipped.json"),
        out.join("funnel.json"),
        out.join("funnel.txt"),
    ])
}

fn stage_novelty(config: &RunConfig) -> Result<Vec<PathBuf>, PipelineError> {
    let out = &config.out_dir;
    let (profiles, bad) = jsonl::read_jsonl::<imports::ImportProfile>(&out.join("import_profiles.jsonl"))
        .map_err(|e| PipelineError::MissingArtifact(format!("import_profiles.jsonl: {e}")))?;
    if !bad.is_empty() {
        return Err(PipelineError::Stage {
            stage: "novelty",
            cause: format!("{} malformed profile lines", bad.len()),
        });
    }
    let (tables, novelties) =
        novelty::score_profiles(&profiles, config.runs, config.seed, config.aggregator)
            .map_err(|e| PipelineError::Stage { stage: "novelty", cause: e.to_string() })?;

    let io_err = |e: std::io::Error| PipelineError::Stage { stage: "novelty", cause: e.to_string() };
    let mut outputs = Vec::new();
    for (year, table) in &tables {
        let path = out.join(format!("pair_scores_{year}.jsonl"));
        jsonl::write_jsonl(&path, &table.to_records()).map_err(io_err)?;
        outputs.push(path);
    }
    let novelty_path = out.join("project_novelty.jsonl");
    jsonl::write_jsonl(&novelty_path, &novelties).map_err(io_err)?;
    outputs.push(novelty_path);
    Ok(outputs)
}

fn stage_collab(config: &RunConfig) -> Result<Vec<PathBuf>, PipelineError> {
    let out = &config.out_dir;
    let corpus = load_normalized_corpus(out)?;
    let metrics = collab::accumulate_interactions(&corpus);
    let io_err = |e: std::io::Error| PipelineError::Stage { stage: "collab", cause: e.to_string() };

    jsonl::write_jsonl(&out.join("collab_metrics.jsonl"), &metrics.to_records())
        .map_err(io_err)?;

    let team: Vec<_> = corpus
        .projects
        .values()
        .map(|p| collab::team_features(p, &corpus))
        .collect();
    jsonl::write_jsonl(&out.join("team_features.jsonl"), &team).map_err(io_err)?;

    let comp: Vec<_> = corpus
        .hackathons
        .values()
        .filter_map(|h| collab::competition(h, &corpus).ok())
        .collect();
    jsonl::write_jsonl(&out.join("competition.jsonl"), &comp).map_err(io_err)?;

    let weighted: Vec<_> = corpus
        .participants
        .values()
        .map(|p| collab::weighted_winning(p, &corpus))
        .collect();
    jsonl::write_jsonl(&out.join("weighted_winning.jsonl"), &weighted).map_err(io_err)?;

    Ok(vec![
        out.join("collab_metrics.jsonl"),
        out.join("team_features.jsonl"),
        out.join("competition.jsonl"),
        out.join("weighted_winning.jsonl"),
    ])
}

fn read_collab_metrics(out: &Path) -> Result<collab::CollabMetrics, PipelineError> {
    let (records, _) = jsonl::read_jsonl::<collab::CollabRecord>(&out.join("collab_metrics.jsonl"))
        .map_err(|e| PipelineError::MissingArtifact(format!("collab_metrics.jsonl: {e}")))?;
    let mut metrics = collab::CollabMetrics::default();
    for record in records {
        match record {
            collab::CollabRecord::Creator {
                creator_id,
                collab_repetition_project,
                collab_repetition_hackathon,
                repetition_project,
                repetition_hackathon,
                ..
            } => {
                metrics
                    .counters
                    .collab_repetition_project
                    .insert(creator_id.clone(), collab_repetition_project);
                metrics
                    .counters
                    .collab_repetition_hackathon
                    .insert(creator_id.clone(), collab_repetition_hackathon);
                metrics
                    .counters
                    .repetition_project
                    .insert(creator_id.clone(), repetition_project);
                metrics
                    .counters
                    .repetition_hackathon
                    .insert(creator_id, repetition_hackathon);
            }
            collab::CollabRecord::Pair {
                a,
                b,
                project_count,
                hackathon_count,
            } => {
                let pair = collab::CreatorPair::new(&a, &b);
                if project_count > 0 {
                    metrics.counters.pair_projects.insert(pair.clone(), project_count);
                }
                if hackathon_count > 0 {
                    metrics.counters.pair_hackathons.insert(pair, hackathon_count);
                }
            }
        }
    }
    Ok(metrics)
}

fn compute_distances(
    corpus: &corpus::Corpus,
    config: &RunConfig,
    out: &Path,
) -> Result<PathBuf, PipelineError> {
    let embedder = HashEmbedder::new(config.embed_dim);
    let mut distances = Vec::new();
    for project in corpus.projects.values() {
        match judge::description_distances(project, &embedder) {
            Ok(d) => distances.push(d),
            Err(e) => log::warn!("distances for {}: {e}", project.id),
        }
    }
    let path = out.join("distances.jsonl");
    jsonl::write_jsonl(&path, &distances)
        .map_err(|e| PipelineError::Stage { stage: "classify", cause: e.to_string() })?;
    Ok(path)
}

fn stage_classify(config: &RunConfig) -> Result<Vec<PathBuf>, PipelineError> {
    let out = &config.out_dir;
    let corpus = load_normalized_corpus(out)?;
    let missing = |name: &str, e: std::io::Error| {
        PipelineError::MissingArtifact(format!("{name}: {e}"))
    };
    let (data_profiles, _) =
        jsonl::read_jsonl::<imports::DataProfile>(&out.join("data_profiles.jsonl"))
            .map_err(|e| missing("data_profiles.jsonl", e))?;
    let data_profiles: BTreeMap<String, imports::DataProfile> = data_profiles
        .into_iter()
        .map(|d| (d.project_id.clone(), d))
        .collect();
    let (novelties, _) =
        jsonl::read_jsonl::<novelty::ProjectNovelty>(&out.join("project_novelty.jsonl"))
            .map_err(|e| missing("project_novelty.jsonl", e))?;
    let collab_metrics = read_collab_metrics(out)?;
    let (weighted, _) =
        jsonl::read_jsonl::<collab::WeightedWinning>(&out.join("weighted_winning.jsonl"))
            .map_err(|e| missing("weighted_winning.jsonl", e))?;
    let weighted: BTreeMap<String, collab::WeightedWinning> = weighted
        .into_iter()
        .map(|w| (w.participant_id.clone(), w))
        .collect();

    let distances_path = out.join("distances.jsonl");
    if !distances_path.is_file() {
        compute_distances(&corpus, config, out)?;
    }
    let (distances, _) = jsonl::read_jsonl::<judge::DescriptionDistances>(&distances_path)
        .map_err(|e| missing("distances.jsonl", e))?;
    let distances: BTreeMap<String, judge::DescriptionDistances> = distances
        .into_iter()
        .map(|d| (d.project_id.clone(), d))
        .collect();

    let labels = classify::build_labels(&corpus, &data_profiles, &novelties, config.z_threshold);
    let io_err = |e: std::io::Error| PipelineError::Stage { stage: "classify", cause: e.to_string() };
    let label_rows: Vec<&classify::CreativeLabel> = labels.values().collect();
    jsonl::write_jsonl(&out.join("labels.jsonl"), &label_rows).map_err(io_err)?;

    let table = classify::build_feature_table(&FeatureInputs {
        corpus: &corpus,
        labels: &labels,
        data_profiles: &data_profiles,
        collab: &collab_metrics,
        weighted: &weighted,
        distances: &distances,
        scale: config.scale_features,
    })
    .map_err(|e| PipelineError::Stage { stage: "classify", cause: e.to_string() })?;
    classify::write_features_csv(&table, &out.join("features.csv"))
        .map_err(|e| PipelineError::Stage { stage: "classify", cause: e.to_string() })?;

    Ok(vec![
        out.join("labels.jsonl"),
        out.join("features.csv"),
        distances_path,
    ])
}

fn stage_regress(config: &RunConfig) -> Result<Vec<PathBuf>, PipelineError> {
    let out = &config.out_dir;
    let data = classify::read_features_csv(
        &out.join("features.csv"),
        &config.regress.label,
        &config.regress.group,
        &config.regress.columns,
    )
    .map_err(|e| PipelineError::Stage { stage: "regress", cause: e.to_string() })?;
    let fit = stats::fit_glmm(&data.design, &data.response, &data.groups, &data.names)
        .map_err(|e| PipelineError::Stage { stage: "regress", cause: e.to_string() })?;

    let vif = stats::vif(&data.design, &data.names).unwrap_or_default();
    let vif_report: Vec<_> = vif
        .iter()
        .map(|(name, value)| {
            serde_json::json!({
                "column": name,
                "vif": value,
                "warn": *value > stats::VIF_WARN_THRESHOLD,
            })
        })
        .collect();

    let path = out.join("fit.json");
    write_json(
        &path,
        &serde_json::json!({
            "model": "random-intercept logistic (Laplace)",
            "label": config.regress.label,
            "group": config.regress.group,
            "fit": fit,
            "vif": vif_report,
        }),
    )
    .map_err(|e| PipelineError::Stage { stage: "regress", cause: e.to_string() })?;
    Ok(vec![path])
}

fn stage_judge(config: &RunConfig) -> Result<Vec<PathBuf>, PipelineError> {
    let out = &config.out_dir;
    let corpus = load_normalized_corpus(out)?;
    let judge_cfg = &config.judge;
    let models_file = judge_cfg
        .models_file
        .as_ref()
        .ok_or_else(|| PipelineError::Config("judge needs models_file".into()))?;
    let models = judge::load_model_configs(models_file)
        .map_err(|e| PipelineError::Config(e.to_string()))?;

    let mut endpoints: Vec<Box<dyn ChatEndpoint>> = Vec::new();
    if let Some(replay) = &judge_cfg.replay_dir {
        for model in &models {
            endpoints.push(Box::new(judge::ReplayEndpoint::new(model.name.clone(), replay)));
        }
    } else {
        for model in &models {
            endpoints.push(Box::new(
                judge::HttpEndpoint::new(model.clone())
                    .map_err(|e| PipelineError::Config(e.to_string()))?,
            ));
        }
    }
    let endpoint_refs: Vec<&dyn ChatEndpoint> = endpoints.iter().map(|e| e.as_ref()).collect();
    let projects: Vec<&corpus::Project> = corpus.projects.values().collect();
    let options = judge::JudgeOptions {
        max_requests: judge_cfg.max_requests,
        backoff_ms: if judge_cfg.replay_dir.is_some() { 0 } else { 500 },
        ..judge::JudgeOptions::default()
    };
    let set = judge::judge_corpus(&projects, &endpoint_refs, &options);

    let io_err = |e: std::io::Error| PipelineError::Stage { stage: "judge", cause: e.to_string() };
    jsonl::write_jsonl(&out.join("judgments.jsonl"), &set.judgments).map_err(io_err)?;
    write_json(
        &out.join("judge_failures.json"),
        &set.failures,
    )
    .map_err(io_err)?;
    write_json(&out.join("score_distribution.json"), &judge::score_distribution(&set))
        .map_err(io_err)?;
    let distances_path = compute_distances(&corpus, config, out)?;

    Ok(vec![
        out.join("judgments.jsonl"),
        out.join("judge_failures.json"),
        out.join("score_distribution.json"),
        distances_path,
    ])
}

fn stage_agree(config: &RunConfig) -> Result<Vec<PathBuf>, PipelineError> {
    let out = &config.out_dir;
    let ratings = config
        .ratings_file
        .as_ref()
        .ok_or_else(|| PipelineError::Config("agree needs ratings_file".into()))?;
    let (novelty_matrix, usefulness_matrix) = agreement::read_ratings(ratings)
        .map_err(|e| PipelineError::Stage { stage: "agree", cause: e.to_string() })?;
    let schemes = config.schemes()?;
    let report = agreement::compute_report(&novelty_matrix, &usefulness_matrix, &schemes)
        .map_err(|e| PipelineError::Stage { stage: "agree", cause: e.to_string() })?;
    let path = out.join("agreement.json");
    write_json(&path, &report)
        .map_err(|e| PipelineError::Stage { stage: "agree", cause: e.to_string() })?;
    Ok(vec![path])
}
