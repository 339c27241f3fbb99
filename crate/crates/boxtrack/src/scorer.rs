//! Completion parsing, exact-set scoring, and reference baselines.
//!
//! Parsing is vocabulary-anchored: the surface nouns of the run are known,
//! so a completion is split on box-label boundaries and nouns are extracted
//! by case-insensitive whole-token matching. A segment mentioning anything
//! alphabetic outside the vocabulary and the statement scaffolding is
//! flagged as residual and cannot score as correct — "no additional
//! objects" enforced without a parser stack.

use crate::lexicon::{tokenize, Lexicon};
use crate::prompt::PromptMode;
use crate::render::ClozeExample;
use crate::runner::{cache_key, CompletionRecord, DecodeParams, RunStatus};
use crate::sampler::derive_seed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("no prediction for example {key}")]
    MissingPrediction { key: String },
    #[error("predictions file has {key} more than once")]
    DuplicateKey { key: String },
}

/// A completion with no recognizable box label cannot be scored.
#[derive(Debug, Error, PartialEq)]
#[error("no box labels found in completion")]
pub struct NoBoxLabels;

/// Extraction result for one box segment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedBox {
    pub objects: BTreeSet<String>,
    /// Alphabetic tokens outside vocabulary + scaffolding were present.
    pub residual: bool,
}

/// Per-box extraction from one completion.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedBoxes {
    pub boxes: BTreeMap<usize, ParsedBox>,
}

/// Tokens legal in a statement besides nouns and labels; anything else
/// alphabetic makes a segment residual.
const SCAFFOLD_OK: &[&str] = &["the", "a", "an", "and", "contains", "nothing"];

/// Token index ranges (start, len) of box labels, with the box index.
fn label_positions(tokens: &[String]) -> Vec<(usize, usize, usize)> {
    let mut found = Vec::new();
    let mut i = 0;
    while i + 1 < tokens.len() {
        let next = &tokens[i + 1];
        if tokens[i] == "box" {
            if let Ok(index) = next.parse::<usize>() {
                found.push((i, 2, index));
                i += 2;
                continue;
            }
        }
        if tokens[i] == "container" && next.len() == 1 {
            let c = next.as_bytes()[0];
            if c.is_ascii_lowercase() {
                found.push((i, 2, (c - b'a') as usize));
                i += 2;
                continue;
            }
        }
        i += 1;
    }
    found
}

/// Split a full statement ("Box 0 contains …, Box 1 contains …") on its box
/// labels and extract each box's object set. Works for either label style;
/// `vocab` is the run's full surface-noun list.
pub fn parse_all_boxes(text: &str, vocab: &[String]) -> Result<ParsedBoxes, NoBoxLabels> {
    let tokens = tokenize(text);
    let labels = label_positions(&tokens);
    if labels.is_empty() {
        return Err(NoBoxLabels);
    }
    let vocab: BTreeSet<&str> = vocab.iter().map(String::as_str).collect();

    let mut parsed = ParsedBoxes::default();
    for (which, &(start, len, box_index)) in labels.iter().enumerate() {
        let segment_end = labels.get(which + 1).map_or(tokens.len(), |&(s, ..)| s);
        let entry = parsed.boxes.entry(box_index).or_default();
        for token in &tokens[start + len..segment_end] {
            if vocab.contains(token.as_str()) {
                entry.objects.insert(token.clone());
            } else if token.chars().all(char::is_alphabetic)
                && !SCAFFOLD_OK.contains(&token.as_str())
            {
                entry.residual = true;
            }
        }
    }
    Ok(parsed)
}

/// Exact-set correctness: every gold object mentioned, nothing else.
pub fn score_example(
    predicted: &BTreeSet<String>,
    residual: bool,
    gold: &BTreeSet<String>,
) -> bool {
    !residual && predicted == gold
}

/// One example's scored outcome, carrying the stratification metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoredExample {
    pub key: String,
    pub scenario_id: u32,
    pub t: usize,
    #[serde(rename = "box")]
    pub box_index: usize,
    pub ops_affecting: usize,
    pub changed: bool,
    pub gold: Vec<String>,
    pub predicted: Vec<String>,
    pub residual: bool,
    pub correct: bool,
    /// Why an example scored incorrect for reasons other than content:
    /// failed request, unparseable completion, box never mentioned.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn scored(example: &ClozeExample, predicted: Vec<String>, residual: bool, correct: bool, note: Option<String>) -> ScoredExample {
    ScoredExample {
        key: example.key(),
        scenario_id: example.scenario_id,
        t: example.t,
        box_index: example.box_index,
        ops_affecting: example.meta.ops_affecting,
        changed: example.meta.changed,
        gold: example.gold.clone(),
        predicted,
        residual,
        correct,
        note,
    }
}

/// Score a batch of completions against their examples, joined by key.
/// All-boxes completions are parsed once per distinct text and the probed
/// box's segment is compared; per-box completions are re-anchored with the
/// example's own query prefix and parsed the same way.
pub fn score_run(
    examples: &[ClozeExample],
    records: &[CompletionRecord],
    lex: &Lexicon,
    mode: PromptMode,
) -> Result<Vec<ScoredExample>, ScoreError> {
    let mut by_key: BTreeMap<&str, &CompletionRecord> = BTreeMap::new();
    for record in records {
        if by_key.insert(record.key.as_str(), record).is_some() {
            return Err(ScoreError::DuplicateKey { key: record.key.clone() });
        }
    }

    let vocab = lex.nouns();
    let mut out = Vec::with_capacity(examples.len());
    for example in examples {
        let record = by_key
            .get(example.key().as_str())
            .ok_or_else(|| ScoreError::MissingPrediction { key: example.key() })?;
        if record.status == RunStatus::Error {
            let note = record.error.clone().unwrap_or_else(|| "request failed".into());
            out.push(scored(example, Vec::new(), false, false, Some(note)));
            continue;
        }
        let anchored = match mode {
            PromptMode::AllBoxes => format!("Box 0 contains{}", record.completion),
            PromptMode::PerBox => format!("{}{}", example.query_prefix, record.completion),
        };
        let parsed = match parse_all_boxes(&anchored, vocab) {
            Ok(parsed) => parsed,
            Err(NoBoxLabels) => {
                out.push(scored(
                    example,
                    Vec::new(),
                    false,
                    false,
                    Some("unparseable completion".into()),
                ));
                continue;
            }
        };
        let gold: BTreeSet<String> = example.gold.iter().cloned().collect();
        match parsed.boxes.get(&example.box_index) {
            Some(entry) => {
                let correct = score_example(&entry.objects, entry.residual, &gold);
                out.push(scored(
                    example,
                    entry.objects.iter().cloned().collect(),
                    entry.residual,
                    correct,
                    None,
                ));
            }
            None => {
                out.push(scored(
                    example,
                    Vec::new(),
                    false,
                    false,
                    Some("probed box not mentioned".into()),
                ));
            }
        }
    }
    Ok(out)
}

// ---- Baselines ----

/// Reference predictors exercising the scoring harness end to end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineKind {
    /// 0–3 objects drawn from those mentioned around the probed box.
    Random,
    /// Echo the probed box's initial contents, ignoring operations.
    RepeatInitial,
    /// 0–3 objects drawn from the full vocabulary.
    FullRandom,
}

impl BaselineKind {
    pub fn parse(name: &str) -> Option<BaselineKind> {
        match name {
            "random" => Some(BaselineKind::Random),
            "repeat-initial" => Some(BaselineKind::RepeatInitial),
            "full-random" => Some(BaselineKind::FullRandom),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BaselineKind::Random => "random",
            BaselineKind::RepeatInitial => "repeat-initial",
            BaselineKind::FullRandom => "full-random",
        }
    }
}

/// The probed box's label tokens, recovered from the example's own query
/// prefix ("Box 6 contains" → ["box", "6"]).
fn probe_label(example: &ClozeExample) -> Vec<String> {
    let label = example.query_prefix.trim_end_matches(" contains");
    tokenize(label)
}

fn mentions_label(tokens: &[String], label: &[String]) -> bool {
    tokens.windows(label.len()).any(|w| w == label)
}

/// Distinct vocabulary nouns from the description clauses that mention the
/// probed box: its initial-state clause plus every operation sentence
/// naming it. Sorted for determinism.
pub fn baseline_pool(example: &ClozeExample, lex: &Lexicon) -> Vec<String> {
    let label = probe_label(example);
    let vocab: BTreeSet<&str> = lex.nouns().iter().map(String::as_str).collect();
    let mut pool = BTreeSet::new();

    let mut sentences = example.description.split('.');
    let initial = sentences.next().unwrap_or("");
    // The initial sentence is one clause per box; take the probed one.
    for clause in initial.split(',') {
        let tokens = tokenize(clause);
        if mentions_label(&tokens, &label) {
            pool.extend(tokens.iter().filter(|t| vocab.contains(t.as_str())).cloned());
        }
    }
    for sentence in sentences {
        let tokens = tokenize(sentence);
        if mentions_label(&tokens, &label) {
            pool.extend(tokens.iter().filter(|t| vocab.contains(t.as_str())).cloned());
        }
    }
    pool.into_iter().collect()
}

/// The probed box's contents in the description's initial clause.
pub fn baseline_repeat_initial(example: &ClozeExample, lex: &Lexicon) -> BTreeSet<String> {
    let label = probe_label(example);
    let vocab: BTreeSet<&str> = lex.nouns().iter().map(String::as_str).collect();
    let initial = example.description.split('.').next().unwrap_or("");
    for clause in initial.split(',') {
        let tokens = tokenize(clause);
        if mentions_label(&tokens, &label) {
            return tokens.into_iter().filter(|t| vocab.contains(t.as_str())).collect();
        }
    }
    BTreeSet::new()
}

/// Draw 0–3 distinct objects from `pool` (k uniform on {0,1,2,3} capped at
/// the pool size, then a uniform k-subset).
pub fn draw_random(pool: &[String], rng: &mut impl Rng) -> BTreeSet<String> {
    let k = rng.random_range(0..=3usize).min(pool.len());
    let mut indices: Vec<usize> = (0..pool.len()).collect();
    for i in 0..k {
        let j = rng.random_range(i..indices.len());
        indices.swap(i, j);
    }
    indices[..k].iter().map(|&i| pool[i].clone()).collect()
}

pub fn baseline_predict(
    kind: BaselineKind,
    example: &ClozeExample,
    lex: &Lexicon,
    rng: &mut impl Rng,
) -> BTreeSet<String> {
    match kind {
        BaselineKind::Random => draw_random(&baseline_pool(example, lex), rng),
        BaselineKind::RepeatInitial => baseline_repeat_initial(example, lex),
        BaselineKind::FullRandom => draw_random(lex.nouns(), rng),
    }
}

/// Run a baseline over a whole example file, emitting one completion record
/// per example in the same shape the model runner produces, so the scoring
/// path downstream is identical. Deterministic for a given seed.
pub fn run_baseline(
    kind: BaselineKind,
    examples: &[ClozeExample],
    lex: &Lexicon,
    seed: u64,
) -> Vec<CompletionRecord> {
    let params = DecodeParams {
        model: format!("baseline-{}", kind.name()),
        temperature: 0.0,
        max_tokens: 150,
        stop: vec!["\n".to_string()],
    };
    examples
        .iter()
        .enumerate()
        .map(|(index, example)| {
            let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(seed, index as u64));
            let predicted = baseline_predict(kind, example, lex, &mut rng);
            let completion = if predicted.is_empty() {
                " nothing".to_string()
            } else {
                let listed: Vec<&str> = predicted.iter().map(String::as_str).collect();
                format!(" {}", lex.noun_list(&listed))
            };
            let key = example.key();
            CompletionRecord {
                prompt_hash: cache_key(&params, &key),
                key,
                status: RunStatus::Ok,
                completion,
                error: None,
                endpoint: "baseline".to_string(),
                params: params.clone(),
                timestamp: 0,
            }
        })
        .collect()
}
