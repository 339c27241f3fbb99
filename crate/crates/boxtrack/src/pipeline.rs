//! End-to-end orchestration and dataset validation.
//!
//! A single TOML file describes a run: the world, how many scenarios to
//! sample, how to split them, how to prompt, and either a live endpoint or
//! a baseline to answer the prompts. `run_pipeline` executes the stages in
//! order, writes every artifact into one directory, and finishes with a
//! manifest that echoes the configuration, the counts, the audit outcomes,
//! and a content hash over the deterministic artifacts — rerunning the same
//! configuration reproduces the same hash.
//!
//! `validate_dataset` re-derives everything checkable from an artifact
//! directory: state legality, replay/signature agreement, split
//! disjointness, rendering fidelity, lexical overlap, and counts.

use crate::jsonl::{read_jsonl, write_jsonl};
use crate::lexicon::{content_tokens, Lexicon};
use crate::prompt::{build_prompts, DemoSource, PromptMode, PromptSpec};
use crate::render::{build_cloze_examples, ClozeExample};
use crate::report::{panel_csv, report_csv, stratify, OverallRow, StratifiedReport};
use crate::runner::{run_batch, CompletionRecord, DecodeParams, Endpoint, RetryPolicy, RunOptions, RunStatus};
use crate::sampler::generate_corpus;
use crate::scenario::Scenario;
use crate::scorer::{run_baseline, score_run, BaselineKind};
use crate::split::{build_demo, build_split, demo_scenario, Split, SplitKind, SplitManifest, SplitSpec};
use crate::world::{InitialLaw, WorldConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    /// Bad or inconsistent configuration; maps to exit code 2.
    #[error("configuration: {0}")]
    Config(String),
    /// A stage failed on data or I/O; maps to exit code 1.
    #[error("{stage} stage: {message}")]
    Stage { stage: &'static str, message: String },
    /// The endpoint could not be served; maps to exit code 3.
    #[error("run stage: {0}")]
    Transport(String),
}

fn stage(name: &'static str, error: impl std::fmt::Display) -> PipelineError {
    PipelineError::Stage { stage: name, message: error.to_string() }
}

// ---- Configuration ----

fn default_boxes() -> usize {
    7
}
fn default_capacity() -> usize {
    3
}
fn default_num_ops() -> usize {
    12
}
fn default_initial_lo() -> usize {
    1
}
fn default_initial_hi() -> usize {
    3
}

/// World parameters; nouns always come from the bundled frequent list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldSection {
    #[serde(default = "default_boxes")]
    pub boxes: usize,
    #[serde(default = "default_capacity")]
    pub capacity: usize,
    #[serde(default = "default_num_ops")]
    pub num_ops: usize,
    #[serde(default = "default_initial_lo")]
    pub initial_lo: usize,
    #[serde(default = "default_initial_hi")]
    pub initial_hi: usize,
}

impl Default for WorldSection {
    fn default() -> Self {
        WorldSection {
            boxes: default_boxes(),
            capacity: default_capacity(),
            num_ops: default_num_ops(),
            initial_lo: default_initial_lo(),
            initial_hi: default_initial_hi(),
        }
    }
}

impl WorldSection {
    pub fn to_world(&self) -> Result<WorldConfig, PipelineError> {
        let mut cfg = WorldConfig::standard();
        cfg.boxes = self.boxes;
        cfg.capacity = self.capacity;
        cfg.num_ops = self.num_ops;
        cfg.initial_law = InitialLaw::Uniform { lo: self.initial_lo, hi: self.initial_hi };
        cfg.expected_initial = cfg.initial_law.mean();
        cfg.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSection {
    pub count: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSection {
    pub kind: SplitKind,
    pub train: usize,
    pub dev: usize,
    pub test: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsample_per_stratum: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PromptSection {
    pub mode: PromptMode,
    pub demos: DemoSource,
}

impl Default for PromptSection {
    fn default() -> Self {
        PromptSection { mode: PromptMode::AllBoxes, demos: DemoSource::Matched }
    }
}

fn default_parallelism() -> usize {
    4
}
fn default_retries() -> u32 {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub endpoint: String,
    pub model: String,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default = "default_retries")]
    pub retries: u32,
    /// Defaults to `<output_dir>/cache`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineSection {
    pub kind: BaselineKind,
    pub seed: u64,
}

/// Which example file the prompt/run/score stages consume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalTarget {
    Test,
    Subsample,
    Dev,
}

fn default_eval() -> EvalTarget {
    EvalTarget::Test
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    /// Use the fixed demonstration scenario (14 examples) instead of a
    /// sampled corpus; `world`, `corpus`, and `split` must be absent.
    #[serde(default)]
    pub demo: bool,
    #[serde(default = "default_eval")]
    pub eval: EvalTarget,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub world: Option<WorldSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus: Option<CorpusSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitSection>,
    #[serde(default)]
    pub prompt: PromptSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineSection>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let config = |m: &str| Err(PipelineError::Config(m.to_string()));
        if self.demo {
            if self.world.is_some() || self.corpus.is_some() || self.split.is_some() {
                return config(
                    "demo mode uses the fixed demonstration scenario; \
                     remove the [world], [corpus], and [split] sections",
                );
            }
        } else {
            if self.corpus.is_none() || self.split.is_none() {
                return config("non-demo runs need [corpus] and [split] sections");
            }
            let corpus = self.corpus.as_ref().unwrap();
            let split = self.split.as_ref().unwrap();
            if split.train + split.dev + split.test != corpus.count {
                return config(&format!(
                    "split sizes {}+{}+{} do not sum to corpus.count {}",
                    split.train, split.dev, split.test, corpus.count
                ));
            }
            if self.eval == EvalTarget::Subsample && split.subsample_per_stratum.is_none() {
                return config("eval = \"subsample\" needs split.subsample_per_stratum");
            }
        }
        if self.run.is_some() && self.baseline.is_some() {
            return config("configure either [run] or [baseline], not both");
        }
        PromptSpec::new(self.prompt.mode, self.prompt.demos)
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn world_config(&self) -> Result<WorldConfig, PipelineError> {
        if self.demo {
            Ok(demo_scenario().0)
        } else {
            self.world.clone().unwrap_or_default().to_world()
        }
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, PipelineError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| PipelineError::Config(format!("reading {}: {e}", path.display())))?;
    let config: RunConfig = toml::from_str(&text)
        .map_err(|e| PipelineError::Config(format!("parsing {}: {e}", path.display())))?;
    config.validate()?;
    Ok(config)
}

// ---- Manifests ----

/// Sidecar written next to `scenarios.jsonl` so later stage invocations can
/// recover the world configuration without re-stating it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub tool_version: String,
    pub world: WorldConfig,
    pub count: usize,
    pub seed: u64,
}

pub const CORPUS_MANIFEST: &str = "scenarios.manifest.json";

pub fn write_corpus(
    dir: &Path,
    scenarios: &[Scenario],
    manifest: &CorpusManifest,
) -> Result<(), PipelineError> {
    std::fs::create_dir_all(dir).map_err(|e| stage("generate", e))?;
    write_jsonl(&dir.join("scenarios.jsonl"), scenarios).map_err(|e| stage("generate", e))?;
    std::fs::write(
        dir.join(CORPUS_MANIFEST),
        serde_json::to_string_pretty(manifest).expect("manifest serializes"),
    )
    .map_err(|e| stage("generate", e))?;
    Ok(())
}

pub fn read_corpus(dir: &Path) -> Result<(CorpusManifest, Vec<Scenario>), PipelineError> {
    let path = dir.join(CORPUS_MANIFEST);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| stage("split", format!("reading {}: {e}", path.display())))?;
    let manifest: CorpusManifest = serde_json::from_str(&text)
        .map_err(|e| stage("split", format!("parsing {}: {e}", path.display())))?;
    let scenarios = read_jsonl(&dir.join("scenarios.jsonl")).map_err(|e| stage("split", e))?;
    Ok((manifest, scenarios))
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ManifestCounts {
    pub scenarios: usize,
    pub train_scenarios: usize,
    pub dev_scenarios: usize,
    pub test_scenarios: usize,
    pub train_examples: usize,
    pub dev_examples: usize,
    pub test_examples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsample_examples: Option<usize>,
    pub eval_examples: usize,
    pub prompts: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predictions: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predictions_failed: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scored: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineManifest {
    pub tool_version: String,
    pub config: RunConfig,
    pub world: WorldConfig,
    pub counts: ManifestCounts,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split_audit: Option<SplitManifest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report_overall: Option<OverallRow>,
    /// (ops_affecting, changed) strata with no eval examples.
    #[serde(default)]
    pub omitted_strata: Vec<String>,
    /// SHA-256 over the files in `hashed_files`, in that order.
    pub artifact_hash: String,
    pub hashed_files: Vec<String>,
    pub cleanup_policy: String,
}

const CLEANUP_POLICY: &str = "artifacts are written stage by stage into the output directory; \
     a directory without manifest.json is an incomplete run; rerunning \
     overwrites in place and reuses the completion cache";

fn hash_artifacts(dir: &Path, names: &[&str]) -> Result<(String, Vec<String>), PipelineError> {
    let mut hasher = Sha256::new();
    let mut hashed = Vec::new();
    for name in names {
        let path = dir.join(name);
        if !path.exists() {
            continue;
        }
        let bytes = std::fs::read(&path).map_err(|e| stage("manifest", e))?;
        hasher.update(name.as_bytes());
        hasher.update([0u8]);
        hasher.update(&bytes);
        hashed.push(name.to_string());
    }
    Ok((hex::encode(hasher.finalize()), hashed))
}

// ---- Pipeline ----

struct EvalSet {
    examples: Vec<ClozeExample>,
    lexicon: Lexicon,
}

fn eval_set(config: &RunConfig, split: &Split) -> Result<EvalSet, PipelineError> {
    let kind = config.split.as_ref().expect("validated").kind;
    let (examples, lexicon) = match config.eval {
        EvalTarget::Test => (split.test.clone(), kind.test_lexicon()),
        EvalTarget::Dev => (split.dev.clone(), kind.train_lexicon()),
        EvalTarget::Subsample => (
            split
                .subsample
                .clone()
                .ok_or_else(|| PipelineError::Config("no subsample configured".into()))?,
            kind.test_lexicon(),
        ),
    };
    Ok(EvalSet { examples, lexicon })
}

/// Execute every configured stage and write the manifest. Returns the
/// manifest as written.
pub fn run_pipeline(config: &RunConfig) -> Result<PipelineManifest, PipelineError> {
    config.validate()?;
    let dir = &config.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| stage("setup", e))?;
    let world = config.world_config()?;

    let mut counts = ManifestCounts::default();
    let mut split_audit = None;

    // Generate and split (or materialize the fixed demonstration corpus).
    let eval = if config.demo {
        let (_, scenario) = demo_scenario();
        write_jsonl(&dir.join("scenarios.jsonl"), std::slice::from_ref(&scenario))
            .map_err(|e| stage("generate", e))?;
        counts.scenarios = 1;
        let demo = build_demo(&Lexicon::base()).map_err(|e| stage("render", e))?;
        write_jsonl(&dir.join("demo.jsonl"), &demo.examples).map_err(|e| stage("render", e))?;
        counts.eval_examples = demo.examples.len();
        EvalSet { examples: demo.examples, lexicon: Lexicon::base() }
    } else {
        let corpus = config.corpus.as_ref().expect("validated");
        let split_cfg = config.split.as_ref().expect("validated");
        let scenarios = generate_corpus(&world, corpus.count, corpus.seed)
            .map_err(|e| stage("generate", e))?;
        write_jsonl(&dir.join("scenarios.jsonl"), &scenarios)
            .map_err(|e| stage("generate", e))?;
        counts.scenarios = scenarios.len();

        let spec = SplitSpec {
            kind: split_cfg.kind,
            counts: (split_cfg.train, split_cfg.dev, split_cfg.test),
            seed: split_cfg.seed,
            subsample_per_stratum: split_cfg.subsample_per_stratum,
        };
        let split = build_split(&spec, &scenarios, &world).map_err(|e| stage("split", e))?;
        write_jsonl(&dir.join("train.jsonl"), &split.train).map_err(|e| stage("split", e))?;
        write_jsonl(&dir.join("dev.jsonl"), &split.dev).map_err(|e| stage("split", e))?;
        write_jsonl(&dir.join("test.jsonl"), &split.test).map_err(|e| stage("split", e))?;
        if let Some(subsample) = &split.subsample {
            write_jsonl(&dir.join("test_subsample.jsonl"), subsample)
                .map_err(|e| stage("split", e))?;
        }
        counts.train_scenarios = split.train_scenarios.len();
        counts.dev_scenarios = split.dev_scenarios.len();
        counts.test_scenarios = split.test_scenarios.len();
        counts.train_examples = split.train.len();
        counts.dev_examples = split.dev.len();
        counts.test_examples = split.test.len();
        counts.subsample_examples = split.subsample.as_ref().map(Vec::len);
        split_audit = Some(split.manifest.clone());

        let eval = eval_set(config, &split)?;
        counts.eval_examples = eval.examples.len();
        eval
    };

    // Prompts.
    let spec = PromptSpec::new(config.prompt.mode, config.prompt.demos)
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    let prompts = build_prompts(spec, &eval.examples).map_err(|e| stage("prompt", e))?;
    write_jsonl(&dir.join("prompts.jsonl"), &prompts).map_err(|e| stage("prompt", e))?;
    counts.prompts = prompts.len();

    // Predictions: live endpoint, or baseline, or stop after prompts.
    let records: Option<Vec<CompletionRecord>> = if let Some(run) = &config.run {
        let params = DecodeParams::greedy(&run.model);
        let endpoint = Endpoint::from_env(&run.endpoint);
        let cache_dir = run.cache_dir.clone().unwrap_or_else(|| dir.join("cache"));
        let options = RunOptions {
            parallelism: run.parallelism,
            retry: RetryPolicy { tries: run.retries, ..RetryPolicy::default() },
        };
        let records = run_batch(&prompts, &params, &endpoint, &cache_dir, &options)
            .map_err(|e| PipelineError::Transport(e.to_string()))?;
        Some(records)
    } else {
        config.baseline.as_ref().map(|baseline| {
            run_baseline(baseline.kind, &eval.examples, &eval.lexicon, baseline.seed)
        })
    };

    // Baseline completions answer the probed box directly, so they are
    // anchored per box no matter how the prompts were laid out.
    let score_mode =
        if config.baseline.is_some() { PromptMode::PerBox } else { config.prompt.mode };

    let mut report: Option<StratifiedReport> = None;
    if let Some(records) = &records {
        write_jsonl(&dir.join("preds.jsonl"), records).map_err(|e| stage("run", e))?;
        counts.predictions = Some(records.len());
        let failed = records.iter().filter(|r| r.status == RunStatus::Error).count();
        counts.predictions_failed = Some(failed);
        if failed > 0 {
            return Err(PipelineError::Transport(format!(
                "{failed} of {} predictions failed; rerun to resume from the cache",
                records.len()
            )));
        }

        // Score and report.
        let scored = score_run(&eval.examples, records, &eval.lexicon, score_mode)
            .map_err(|e| stage("score", e))?;
        write_jsonl(&dir.join("scores.jsonl"), &scored).map_err(|e| stage("score", e))?;
        counts.scored = Some(scored.len());
        let stratified = stratify(&scored);
        std::fs::write(dir.join("report.csv"), report_csv(&stratified))
            .map_err(|e| stage("report", e))?;
        std::fs::write(
            dir.join("report.json"),
            serde_json::to_string_pretty(&stratified).expect("report serializes"),
        )
        .map_err(|e| stage("report", e))?;
        std::fs::write(dir.join("panel_unchanged.csv"), panel_csv(&stratified, false))
            .map_err(|e| stage("report", e))?;
        std::fs::write(dir.join("panel_changed.csv"), panel_csv(&stratified, true))
            .map_err(|e| stage("report", e))?;
        report = Some(stratified);
    }

    // Note which strata have no eval examples at all.
    let present: BTreeSet<(usize, bool)> =
        eval.examples.iter().map(|e| (e.meta.ops_affecting, e.meta.changed)).collect();
    let omitted_strata = (0..=world.num_ops)
        .flat_map(|n| [(n, false), (n, true)])
        .filter(|key| !present.contains(key))
        .map(|(n, changed)| format!("ops={n},changed={changed}"))
        .collect();

    let artifact_names = [
        "scenarios.jsonl",
        "train.jsonl",
        "dev.jsonl",
        "test.jsonl",
        "test_subsample.jsonl",
        "demo.jsonl",
        "prompts.jsonl",
        "scores.jsonl",
        "report.csv",
        "report.json",
        "panel_unchanged.csv",
        "panel_changed.csv",
    ];
    let (artifact_hash, hashed_files) = hash_artifacts(dir, &artifact_names)?;

    let manifest = PipelineManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        world,
        counts,
        split_audit,
        report_overall: report.map(|r| r.overall),
        omitted_strata,
        artifact_hash,
        hashed_files,
        cleanup_policy: CLEANUP_POLICY.to_string(),
    };
    std::fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )
    .map_err(|e| stage("manifest", e))?;
    Ok(manifest)
}

// ---- Dataset validation ----

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
    pub ok: bool,
}

impl ValidationReport {
    fn push(&mut self, name: &str, passed: bool, detail: String) {
        self.ok &= passed;
        self.checks.push(CheckResult { name: name.to_string(), passed, detail });
    }
}

fn read_examples(path: &Path) -> Result<Vec<ClozeExample>, PipelineError> {
    read_jsonl(path).map_err(|e| stage("validate", e))
}

/// Compare an example file against a fresh re-rendering of its scenarios.
fn check_fidelity(
    name: &str,
    examples: &[ClozeExample],
    scenarios: &BTreeMap<u32, &Scenario>,
    cfg: &WorldConfig,
) -> (bool, String) {
    let mut rendered: BTreeMap<(u32, String), BTreeMap<(usize, usize), ClozeExample>> =
        BTreeMap::new();
    for example in examples {
        let Some(scenario) = scenarios.get(&example.scenario_id) else {
            return (false, format!("{name}: example {} has no scenario", example.key()));
        };
        let slot = (example.scenario_id, example.meta.lexicon.clone());
        if !rendered.contains_key(&slot) {
            let fresh = Lexicon::by_name(&example.meta.lexicon)
                .map_err(|e| e.to_string())
                .and_then(|lex| {
                    build_cloze_examples(scenario, cfg, &lex).map_err(|e| e.to_string())
                });
            match fresh {
                Ok(all) => {
                    let by_pos = all.into_iter().map(|e| ((e.t, e.box_index), e)).collect();
                    rendered.insert(slot.clone(), by_pos);
                }
                Err(error) => {
                    return (
                        false,
                        format!(
                            "{name}: scenario {} failed to re-render: {error}",
                            example.scenario_id
                        ),
                    )
                }
            }
        }
        let Some(expected) = rendered[&slot].get(&(example.t, example.box_index)) else {
            return (
                false,
                format!("{name}: example {} is out of range for its scenario", example.key()),
            );
        };
        if expected.description != example.description
            || expected.query_prefix != example.query_prefix
            || expected.gold != example.gold
            || expected.meta.ops_affecting != example.meta.ops_affecting
            || expected.meta.changed != example.meta.changed
        {
            return (
                false,
                format!("{name}: example {} disagrees with a fresh rendering", example.key()),
            );
        }
    }
    (true, format!("{name}: {} examples match a fresh rendering", examples.len()))
}

/// Re-derive every checkable invariant from an artifact directory.
pub fn validate_dataset(dir: &Path) -> Result<ValidationReport, PipelineError> {
    let manifest_path = dir.join("manifest.json");
    let manifest_text = std::fs::read_to_string(&manifest_path)
        .map_err(|e| stage("validate", format!("reading {}: {e}", manifest_path.display())))?;
    let manifest: PipelineManifest = serde_json::from_str(&manifest_text)
        .map_err(|e| stage("validate", format!("parsing manifest: {e}")))?;
    let cfg = &manifest.world;
    let mut report = ValidationReport { checks: Vec::new(), ok: true };

    // Scenario states: parse, replay, and verify legality and signatures.
    let scenarios: Vec<Scenario> =
        read_jsonl(&dir.join("scenarios.jsonl")).map_err(|e| stage("validate", e))?;
    let mut bad_state = None;
    let mut bad_signature = None;
    for scenario in &scenarios {
        if let Err(error) = scenario.states(cfg) {
            bad_state.get_or_insert(format!("scenario {}: {error}", scenario.id));
        } else if let Err(error) = scenario.validate(cfg) {
            bad_signature.get_or_insert(format!("scenario {}: {error}", scenario.id));
        }
    }
    report.push(
        "scenario-legality",
        bad_state.is_none(),
        bad_state
            .clone()
            .unwrap_or_else(|| format!("{} scenarios replay within capacity", scenarios.len())),
    );
    report.push(
        "replay-signature",
        bad_signature.is_none(),
        bad_signature.unwrap_or_else(|| "stored signatures match replay".to_string()),
    );

    let by_id: BTreeMap<u32, &Scenario> = scenarios.iter().map(|s| (s.id, s)).collect();

    if manifest.config.demo {
        let examples = read_examples(&dir.join("demo.jsonl"))?;
        let (passed, detail) = check_fidelity("demo", &examples, &by_id, cfg);
        report.push("example-fidelity", passed, detail);
        report.push(
            "example-counts",
            examples.len() == 2 * cfg.boxes && scenarios.len() == 1,
            format!("{} scenarios, {} demonstration examples", scenarios.len(), examples.len()),
        );
        return Ok(report);
    }

    let split_cfg = manifest
        .config
        .split
        .as_ref()
        .ok_or_else(|| stage("validate", "manifest lacks a split section"))?;
    let kind = split_cfg.kind;
    let sides = [
        ("train", read_examples(&dir.join("train.jsonl"))?),
        ("dev", read_examples(&dir.join("dev.jsonl"))?),
        ("test", read_examples(&dir.join("test.jsonl"))?),
    ];

    // Rendering fidelity per side.
    for (name, examples) in &sides {
        let (passed, detail) = check_fidelity(name, examples, &by_id, cfg);
        report.push("example-fidelity", passed, detail);
    }

    // Signature disjointness across sides.
    let side_signatures: Vec<BTreeSet<&str>> = sides
        .iter()
        .map(|(_, examples)| {
            examples
                .iter()
                .filter_map(|e| by_id.get(&e.scenario_id).map(|s| s.signature.as_str()))
                .collect()
        })
        .collect();
    let mut clash = None;
    for (a, b) in [(0usize, 1usize), (0, 2), (1, 2)] {
        if let Some(shared) = side_signatures[a].intersection(&side_signatures[b]).next() {
            clash = Some(format!(
                "signature {shared:?} appears in both {} and {}",
                sides[a].0, sides[b].0
            ));
            break;
        }
    }
    report.push(
        "split-disjointness",
        clash.is_none(),
        clash.unwrap_or_else(|| "no signature is shared across sides".to_string()),
    );

    // Lexical overlap, by what the split kind is designed to vary.
    match kind {
        SplitKind::Base | SplitKind::NumOps => {
            report.push("lexical-overlap", true, "not applicable for this split kind".into());
        }
        SplitKind::Vocab => {
            let train: BTreeSet<String> =
                kind.train_lexicon().nouns().iter().cloned().collect();
            let test: BTreeSet<String> = kind.test_lexicon().nouns().iter().cloned().collect();
            let overlap: Vec<String> = train.intersection(&test).cloned().collect();
            report.push(
                "lexical-overlap",
                overlap.is_empty(),
                if overlap.is_empty() {
                    "train and test noun lists are disjoint".to_string()
                } else {
                    format!("shared nouns: {overlap:?}")
                },
            );
        }
        SplitKind::AltForm | SplitKind::AltFormNumOps => {
            let tokens = |examples: &[ClozeExample]| {
                let mut all = BTreeSet::new();
                for e in examples {
                    all.extend(content_tokens(&e.description));
                    all.extend(content_tokens(&e.query_prefix));
                    for g in &e.gold {
                        all.extend(content_tokens(g));
                    }
                }
                all
            };
            let sanctioned: BTreeSet<String> =
                ["the", "into"].iter().map(|s| s.to_string()).collect();
            let overlap: Vec<String> = tokens(&sides[0].1)
                .intersection(&tokens(&sides[2].1))
                .filter(|t| !sanctioned.contains(*t))
                .cloned()
                .collect();
            report.push(
                "lexical-overlap",
                overlap.is_empty(),
                if overlap.is_empty() {
                    "train/test content tokens overlap only in sanctioned words".to_string()
                } else {
                    format!("content tokens shared beyond the/into: {overlap:?}")
                },
            );
        }
    }

    // Example counts implied by the configuration.
    let states_full = cfg.num_ops + 1;
    let states_train = kind.max_train_t().map_or(states_full, |cap| cap.min(cfg.num_ops) + 1);
    let scenario_ids = |examples: &[ClozeExample]| {
        examples.iter().map(|e| e.scenario_id).collect::<BTreeSet<_>>().len()
    };
    let expected = [
        split_cfg.train * states_train * cfg.boxes,
        split_cfg.dev * states_full * cfg.boxes,
        split_cfg.test * states_full * cfg.boxes,
    ];
    let mut count_problem = None;
    for ((name, examples), want) in sides.iter().zip(expected) {
        if examples.len() != want {
            count_problem
                .get_or_insert(format!("{name} has {} examples, expected {want}", examples.len()));
        }
    }
    let scen_counts =
        (scenario_ids(&sides[0].1), scenario_ids(&sides[1].1), scenario_ids(&sides[2].1));
    if scen_counts != (split_cfg.train, split_cfg.dev, split_cfg.test) {
        count_problem.get_or_insert(format!(
            "scenario counts {scen_counts:?} differ from configured ({}, {}, {})",
            split_cfg.train, split_cfg.dev, split_cfg.test
        ));
    }
    report.push(
        "example-counts",
        count_problem.is_none(),
        count_problem.unwrap_or_else(|| {
            format!(
                "train/dev/test = {}/{}/{} examples over {}/{}/{} scenarios",
                sides[0].1.len(),
                sides[1].1.len(),
                sides[2].1.len(),
                scen_counts.0,
                scen_counts.1,
                scen_counts.2
            )
        }),
    );

    // Subsample, when present: a subset of test keys, whole states included.
    let subsample_path = dir.join("test_subsample.jsonl");
    if subsample_path.exists() {
        let subsample = read_examples(&subsample_path)?;
        let test_keys: BTreeSet<String> = sides[2].1.iter().map(|e| e.key()).collect();
        let mut problem = None;
        if let Some(stray) = subsample.iter().find(|e| !test_keys.contains(&e.key())) {
            problem = Some(format!("subsample key {} is not in the test side", stray.key()));
        }
        let mut per_state: BTreeMap<(u32, usize), usize> = BTreeMap::new();
        for e in &subsample {
            *per_state.entry((e.scenario_id, e.t)).or_default() += 1;
        }
        if problem.is_none() {
            if let Some((state, n)) = per_state.iter().find(|(_, &n)| n != cfg.boxes) {
                problem = Some(format!(
                    "state {state:?} has {n} of {} per-box examples in the subsample",
                    cfg.boxes
                ));
            }
        }
        report.push(
            "subsample-consistency",
            problem.is_none(),
            problem.unwrap_or_else(|| {
                format!("{} examples over {} whole states", subsample.len(), per_state.len())
            }),
        );
    }

    Ok(report)
}
