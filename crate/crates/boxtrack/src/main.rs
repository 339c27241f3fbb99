//! Command-line front end: one subcommand per pipeline stage, plus `pipeline`
//! to run every configured stage from a TOML file and `validate` to audit an
//! artifact directory.
//!
//! Exit codes: 0 ok, 1 validation failure, 2 configuration error,
//! 3 transport error.

use boxtrack::jsonl::{read_jsonl, write_jsonl};
use boxtrack::lexicon::Lexicon;
use boxtrack::pipeline::{
    load_config, read_corpus, run_pipeline, validate_dataset, CorpusManifest, EvalTarget,
    PipelineError, RunSection, WorldSection,
};
use boxtrack::prompt::{build_prompts, DemoSource, PromptMode, PromptRecord, PromptSpec};
use boxtrack::render::{build_cloze_examples, ClozeExample};
use boxtrack::report::{panel_csv, report_csv, stratify};
use boxtrack::runner::{
    run_batch, CompletionRecord, DecodeParams, Endpoint, RetryPolicy, RunOptions, RunStatus,
};
use boxtrack::sampler::generate_corpus;
use boxtrack::scorer::{run_baseline, score_run, BaselineKind};
use boxtrack::split::{build_split, SplitKind, SplitSpec};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_VALIDATION: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_TRANSPORT: u8 = 3;

#[derive(Parser)]
#[command(
    name = "boxtrack",
    version,
    about = "Synthesize, prompt, run, and score a box-tracking benchmark",
    after_help = "Exit codes: 0 ok, 1 validation failure, 2 configuration error, 3 transport error."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    AllBoxes,
    PerBox,
}

impl From<ModeArg> for PromptMode {
    fn from(mode: ModeArg) -> PromptMode {
        match mode {
            ModeArg::AllBoxes => PromptMode::AllBoxes,
            ModeArg::PerBox => PromptMode::PerBox,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DemosArg {
    Matched,
    Altform,
}

impl From<DemosArg> for DemoSource {
    fn from(demos: DemosArg) -> DemoSource {
        match demos {
            DemosArg::Matched => DemoSource::Matched,
            DemosArg::Altform => DemoSource::Altform,
        }
    }
}

#[derive(Args)]
struct WorldArgs {
    #[arg(long, default_value_t = 7)]
    boxes: usize,
    #[arg(long, default_value_t = 3)]
    capacity: usize,
    #[arg(long, default_value_t = 12)]
    num_ops: usize,
    /// Smallest initial box occupancy.
    #[arg(long, default_value_t = 1)]
    initial_lo: usize,
    /// Largest initial box occupancy.
    #[arg(long, default_value_t = 3)]
    initial_hi: usize,
}

impl WorldArgs {
    fn section(&self) -> WorldSection {
        WorldSection {
            boxes: self.boxes,
            capacity: self.capacity,
            num_ops: self.num_ops,
            initial_lo: self.initial_lo,
            initial_hi: self.initial_hi,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample a scenario corpus into <out>/scenarios.jsonl (+ manifest).
    Generate {
        #[arg(long)]
        count: usize,
        #[arg(long)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        world: WorldArgs,
    },
    /// Partition a corpus by signature and render train/dev/test examples.
    Split {
        /// Directory holding scenarios.jsonl and its manifest.
        #[arg(long)]
        corpus: PathBuf,
        /// base, numops, vocab, altform, or altform-numops.
        #[arg(long)]
        kind: String,
        #[arg(long)]
        train: usize,
        #[arg(long)]
        dev: usize,
        #[arg(long)]
        test: usize,
        #[arg(long)]
        seed: u64,
        /// Also draw a stratified test subsample of this many states per
        /// operation-count stratum.
        #[arg(long)]
        subsample_per_stratum: Option<usize>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Render every scenario of a corpus into cloze examples.
    Render {
        /// Directory holding scenarios.jsonl and its manifest.
        #[arg(long)]
        corpus: PathBuf,
        /// base, altform, or base-rare.
        #[arg(long, default_value = "base")]
        lexicon: String,
        /// Keep only examples probing at most this many operations in.
        #[arg(long)]
        max_t: Option<usize>,
        /// Output examples file (JSON Lines).
        #[arg(long)]
        out: PathBuf,
    },
    /// Assemble few-shot prompts around rendered examples.
    Prompt {
        /// Examples file (JSON Lines).
        #[arg(long)]
        examples: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::AllBoxes)]
        mode: ModeArg,
        #[arg(long, value_enum, default_value_t = DemosArg::Matched)]
        demos: DemosArg,
        /// Output prompts file (JSON Lines).
        #[arg(long)]
        out: PathBuf,
    },
    /// Send prompts to an OpenAI-compatible completions endpoint.
    Run {
        /// Prompts file (JSON Lines).
        #[arg(long)]
        prompts: PathBuf,
        /// Base URL, e.g. http://localhost:8000/v1. The API key, if any,
        /// is read from the BOXTRACK_API_KEY environment variable.
        #[arg(long)]
        endpoint: String,
        #[arg(long)]
        model: String,
        #[arg(long)]
        cache_dir: PathBuf,
        #[arg(long, default_value_t = 4)]
        parallelism: usize,
        #[arg(long, default_value_t = 5)]
        retries: u32,
        /// Output predictions file (JSON Lines).
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predictions against their examples and write reports.
    Score {
        /// Examples file (JSON Lines).
        #[arg(long)]
        examples: PathBuf,
        /// Predictions file (JSON Lines).
        #[arg(long)]
        preds: PathBuf,
        /// Lexicon the examples were rendered under.
        #[arg(long, default_value = "base")]
        lexicon: String,
        /// How completions are anchored: continuations of an all-boxes
        /// prompt, or answers about the probed box only.
        #[arg(long, value_enum, default_value_t = ModeArg::AllBoxes)]
        mode: ModeArg,
        /// Output directory for scores.jsonl and report files.
        #[arg(long)]
        out: PathBuf,
    },
    /// Answer examples with a scripted baseline instead of a model.
    Baseline {
        /// Examples file (JSON Lines).
        #[arg(long)]
        examples: PathBuf,
        /// random, repeat-initial, or full-random.
        #[arg(long)]
        kind: String,
        #[arg(long)]
        seed: u64,
        /// Lexicon the examples were rendered under.
        #[arg(long, default_value = "base")]
        lexicon: String,
        /// Output predictions file (JSON Lines).
        #[arg(long)]
        out: PathBuf,
    },
    /// Audit a pipeline artifact directory; nonzero exit on any violation.
    Validate {
        /// Directory holding manifest.json and the dataset files.
        dir: PathBuf,
    },
    /// Run every configured stage from a TOML file.
    Pipeline {
        /// Configuration file (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Override output_dir from the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Override run.endpoint from the config.
        #[arg(long)]
        endpoint: Option<String>,
        /// Override run.model from the config.
        #[arg(long)]
        model: Option<String>,
        /// Override run.parallelism from the config.
        #[arg(long)]
        parallelism: Option<usize>,
        /// Override eval from the config: test, subsample, or dev.
        #[arg(long)]
        eval: Option<String>,
    },
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn config(message: impl std::fmt::Display) -> CliError {
        CliError { code: EXIT_CONFIG, message: message.to_string() }
    }

    fn validation(message: impl std::fmt::Display) -> CliError {
        CliError { code: EXIT_VALIDATION, message: message.to_string() }
    }

    fn transport(message: impl std::fmt::Display) -> CliError {
        CliError { code: EXIT_TRANSPORT, message: message.to_string() }
    }
}

impl From<PipelineError> for CliError {
    fn from(error: PipelineError) -> CliError {
        let code = match &error {
            PipelineError::Config(_) => EXIT_CONFIG,
            PipelineError::Stage { .. } => EXIT_VALIDATION,
            PipelineError::Transport(_) => EXIT_TRANSPORT,
        };
        CliError { code, message: error.to_string() }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {}", error.message);
            ExitCode::from(error.code)
        }
    }
}

fn parse_split_kind(name: &str) -> Result<SplitKind, CliError> {
    SplitKind::parse(name).ok_or_else(|| {
        CliError::config(format!(
            "unknown split kind {name:?}; expected base, numops, vocab, altform, or altform-numops"
        ))
    })
}

fn parse_lexicon(name: &str) -> Result<Lexicon, CliError> {
    Lexicon::by_name(name).map_err(CliError::config)
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Generate { count, seed, out, world } => {
            let world = world.section();
            let cfg = world.to_world()?;
            let scenarios = generate_corpus(&cfg, count, seed).map_err(CliError::validation)?;
            let manifest = CorpusManifest {
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                world: cfg,
                count,
                seed,
            };
            boxtrack::pipeline::write_corpus(&out, &scenarios, &manifest)?;
            println!("generate: {} scenarios -> {}", scenarios.len(), out.display());
            Ok(())
        }
        Command::Split { corpus, kind, train, dev, test, seed, subsample_per_stratum, out } => {
            let kind = parse_split_kind(&kind)?;
            let (manifest, scenarios) = read_corpus(&corpus)?;
            let spec = SplitSpec {
                kind,
                counts: (train, dev, test),
                seed,
                subsample_per_stratum,
            };
            let split =
                build_split(&spec, &scenarios, &manifest.world).map_err(CliError::validation)?;
            std::fs::create_dir_all(&out).map_err(CliError::validation)?;
            write_jsonl(&out.join("train.jsonl"), &split.train).map_err(CliError::validation)?;
            write_jsonl(&out.join("dev.jsonl"), &split.dev).map_err(CliError::validation)?;
            write_jsonl(&out.join("test.jsonl"), &split.test).map_err(CliError::validation)?;
            if let Some(subsample) = &split.subsample {
                write_jsonl(&out.join("test_subsample.jsonl"), subsample)
                    .map_err(CliError::validation)?;
            }
            std::fs::write(
                out.join("split.manifest.json"),
                serde_json::to_string_pretty(&split.manifest).expect("manifest serializes"),
            )
            .map_err(CliError::validation)?;
            println!(
                "split: {}/{}/{} examples -> {}",
                split.train.len(),
                split.dev.len(),
                split.test.len(),
                out.display()
            );
            Ok(())
        }
        Command::Render { corpus, lexicon, max_t, out } => {
            let lex = parse_lexicon(&lexicon)?;
            let (manifest, scenarios) = read_corpus(&corpus)?;
            let mut examples = Vec::new();
            for scenario in &scenarios {
                let mut all = build_cloze_examples(scenario, &manifest.world, &lex)
                    .map_err(CliError::validation)?;
                if let Some(cap) = max_t {
                    all.retain(|e| e.t <= cap);
                }
                examples.extend(all);
            }
            write_jsonl(&out, &examples).map_err(CliError::validation)?;
            println!("render: {} examples -> {}", examples.len(), out.display());
            Ok(())
        }
        Command::Prompt { examples, mode, demos, out } => {
            let spec = PromptSpec::new(mode.into(), demos.into()).map_err(CliError::config)?;
            let examples: Vec<ClozeExample> =
                read_jsonl(&examples).map_err(CliError::validation)?;
            let prompts = build_prompts(spec, &examples).map_err(CliError::validation)?;
            write_jsonl(&out, &prompts).map_err(CliError::validation)?;
            println!("prompt: {} prompts -> {}", prompts.len(), out.display());
            Ok(())
        }
        Command::Run { prompts, endpoint, model, cache_dir, parallelism, retries, out } => {
            let prompts: Vec<PromptRecord> = read_jsonl(&prompts).map_err(CliError::validation)?;
            let params = DecodeParams::greedy(&model);
            let endpoint = Endpoint::from_env(&endpoint);
            let options = RunOptions {
                parallelism,
                retry: RetryPolicy { tries: retries, ..RetryPolicy::default() },
            };
            let records = run_batch(&prompts, &params, &endpoint, &cache_dir, &options)
                .map_err(CliError::transport)?;
            write_jsonl(&out, &records).map_err(CliError::validation)?;
            let failed = records.iter().filter(|r| r.status == RunStatus::Error).count();
            println!(
                "run: {} predictions ({failed} failed) -> {}",
                records.len(),
                out.display()
            );
            if failed > 0 {
                return Err(CliError::transport(format!(
                    "{failed} of {} predictions failed; rerun to resume from the cache",
                    records.len()
                )));
            }
            Ok(())
        }
        Command::Score { examples, preds, lexicon, mode, out } => {
            let lex = parse_lexicon(&lexicon)?;
            let examples: Vec<ClozeExample> =
                read_jsonl(&examples).map_err(CliError::validation)?;
            let records: Vec<CompletionRecord> =
                read_jsonl(&preds).map_err(CliError::validation)?;
            let scored = score_run(&examples, &records, &lex, mode.into())
                .map_err(CliError::validation)?;
            std::fs::create_dir_all(&out).map_err(CliError::validation)?;
            write_jsonl(&out.join("scores.jsonl"), &scored).map_err(CliError::validation)?;
            let report = stratify(&scored);
            std::fs::write(out.join("report.csv"), report_csv(&report))
                .map_err(CliError::validation)?;
            std::fs::write(
                out.join("report.json"),
                serde_json::to_string_pretty(&report).expect("report serializes"),
            )
            .map_err(CliError::validation)?;
            std::fs::write(out.join("panel_unchanged.csv"), panel_csv(&report, false))
                .map_err(CliError::validation)?;
            std::fs::write(out.join("panel_changed.csv"), panel_csv(&report, true))
                .map_err(CliError::validation)?;
            println!(
                "score: {}/{} correct ({:.1}%) -> {}",
                report.overall.correct,
                report.overall.count,
                100.0 * report.overall.accuracy,
                out.display()
            );
            Ok(())
        }
        Command::Baseline { examples, kind, seed, lexicon, out } => {
            let kind = BaselineKind::parse(&kind).ok_or_else(|| {
                CliError::config(format!(
                    "unknown baseline {kind:?}; expected random, repeat-initial, or full-random"
                ))
            })?;
            let lex = parse_lexicon(&lexicon)?;
            let examples: Vec<ClozeExample> =
                read_jsonl(&examples).map_err(CliError::validation)?;
            let records = run_baseline(kind, &examples, &lex, seed);
            write_jsonl(&out, &records).map_err(CliError::validation)?;
            println!("baseline: {} predictions -> {}", records.len(), out.display());
            Ok(())
        }
        Command::Validate { dir } => {
            let report = validate_dataset(&dir)?;
            for check in &report.checks {
                let status = if check.passed { "ok  " } else { "FAIL" };
                println!("{status} {}: {}", check.name, check.detail);
            }
            if report.ok {
                println!("validate: all {} checks passed", report.checks.len());
                Ok(())
            } else {
                Err(CliError::validation("dataset validation failed"))
            }
        }
        Command::Pipeline { config, output_dir, endpoint, model, parallelism, eval } => {
            let mut run_config = load_config(&config)?;
            if let Some(dir) = output_dir {
                run_config.output_dir = dir;
            }
            if let Some(eval) = eval {
                run_config.eval = match eval.as_str() {
                    "test" => EvalTarget::Test,
                    "subsample" => EvalTarget::Subsample,
                    "dev" => EvalTarget::Dev,
                    other => {
                        return Err(CliError::config(format!(
                            "unknown eval target {other:?}; expected test, subsample, or dev"
                        )))
                    }
                };
            }
            if endpoint.is_some() || model.is_some() || parallelism.is_some() {
                let run = run_config.run.get_or_insert_with(|| RunSection {
                    endpoint: String::new(),
                    model: String::new(),
                    parallelism: 4,
                    retries: 5,
                    cache_dir: None,
                });
                if let Some(endpoint) = endpoint {
                    run.endpoint = endpoint;
                }
                if let Some(model) = model {
                    run.model = model;
                }
                if let Some(parallelism) = parallelism {
                    run.parallelism = parallelism;
                }
                if run.endpoint.is_empty() || run.model.is_empty() {
                    return Err(CliError::config(
                        "a run needs both an endpoint and a model (config or flags)",
                    ));
                }
            }
            run_config.validate()?;
            let manifest = run_pipeline(&run_config)?;
            println!(
                "pipeline: {} scenarios, {} eval examples -> {}",
                manifest.counts.scenarios,
                manifest.counts.eval_examples,
                run_config.output_dir.display()
            );
            if let Some(overall) = &manifest.report_overall {
                println!(
                    "overall: {}/{} correct ({:.1}%), 95% CI [{:.3}, {:.3}]",
                    overall.correct,
                    overall.count,
                    100.0 * overall.accuracy,
                    overall.ci_low,
                    overall.ci_high
                );
            }
            Ok(())
        }
    }
}
