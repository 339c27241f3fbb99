//! Leakage-controlled corpus splitting.
//!
//! Scenarios are partitioned into train/dev/test by *initial-state
//! signature*: every scenario with the same per-box count pattern lands in
//! the same side, so a model cannot recognize a test scenario's shape from
//! training. Split kinds then vary what the train side looks like (operation
//! budget, noun vocabulary, phrasing style) while the test side stays in the
//! canonical surface form.

use crate::lexicon::{content_tokens, Lexicon};
use crate::render::{build_cloze_examples, render_initial, render_statement, ClozeExample, ExampleError};
use crate::scenario::Scenario;
use crate::world::{Operation, WorldConfig, WorldState};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SplitError {
    #[error("split counts {train}+{dev}+{test} do not sum to the {corpus}-scenario corpus")]
    BadCounts { train: usize, dev: usize, test: usize, corpus: usize },
    #[error("signature group {signature:?} has {size} scenarios, more than the largest split target {target}")]
    GroupTooLarge { signature: String, size: usize, target: usize },
    #[error("cannot balance splits to exact counts by moving whole signature groups")]
    Unbalanceable,
    #[error(transparent)]
    Example(#[from] ExampleError),
}

// ---- Split kinds ----

/// What the training side varies relative to the canonical test rendering.
///
/// Serialized forms match [`SplitKind::name`], so manifests, config files,
/// and the CLI all spell a kind the same way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitKind {
    /// Train and test share surface form and operation budget.
    #[serde(rename = "base")]
    Base,
    /// Train descriptions stop after two operations; test uses the full budget.
    #[serde(rename = "numops")]
    NumOps,
    /// Train uses the rare noun list (same phrasing); test the frequent one.
    #[serde(rename = "vocab")]
    Vocab,
    /// Train uses the alternative phrasing and rare nouns.
    #[serde(rename = "altform")]
    AltForm,
    /// Alternative phrasing, rare nouns, and the two-operation cap combined.
    #[serde(rename = "altform-numops")]
    AltFormNumOps,
}

impl SplitKind {
    pub fn parse(name: &str) -> Option<SplitKind> {
        match name {
            "base" => Some(SplitKind::Base),
            "numops" => Some(SplitKind::NumOps),
            "vocab" => Some(SplitKind::Vocab),
            "altform" => Some(SplitKind::AltForm),
            "altform-numops" => Some(SplitKind::AltFormNumOps),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SplitKind::Base => "base",
            SplitKind::NumOps => "numops",
            SplitKind::Vocab => "vocab",
            SplitKind::AltForm => "altform",
            SplitKind::AltFormNumOps => "altform-numops",
        }
    }

    /// Lexicon the train (and dev) side is rendered under.
    pub fn train_lexicon(&self) -> Lexicon {
        match self {
            SplitKind::Base | SplitKind::NumOps => Lexicon::base(),
            SplitKind::Vocab => Lexicon::base_rare(),
            SplitKind::AltForm | SplitKind::AltFormNumOps => Lexicon::altform(),
        }
    }

    /// The test side always uses the canonical surface form.
    pub fn test_lexicon(&self) -> Lexicon {
        Lexicon::base()
    }

    /// Cap on `t` for training examples (inclusive), if this kind has one.
    pub fn max_train_t(&self) -> Option<usize> {
        match self {
            SplitKind::NumOps | SplitKind::AltFormNumOps => Some(2),
            _ => None,
        }
    }
}

// ---- Signature-grouped partition ----

/// Scenario indices per side; within a side, input order is preserved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub train: Vec<usize>,
    pub dev: Vec<usize>,
    pub test: Vec<usize>,
}

/// Partition scenarios into exact-size sides without splitting any signature
/// group. Groups go largest-first into the side with the most room (seeded
/// tie-breaking via a shuffled rank), then whole groups are shuffled between
/// sides until every count is exact.
pub fn partition_by_signature(
    scenarios: &[Scenario],
    counts: (usize, usize, usize),
    seed: u64,
) -> Result<Partition, SplitError> {
    let (train, dev, test) = counts;
    if train + dev + test != scenarios.len() {
        return Err(SplitError::BadCounts { train, dev, test, corpus: scenarios.len() });
    }
    let targets = [train, dev, test];
    let max_target = *targets.iter().max().unwrap();

    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (idx, scenario) in scenarios.iter().enumerate() {
        groups.entry(scenario.signature.as_str()).or_default().push(idx);
    }
    for (signature, members) in &groups {
        if members.len() > max_target {
            return Err(SplitError::GroupTooLarge {
                signature: signature.to_string(),
                size: members.len(),
                target: max_target,
            });
        }
    }

    // Deterministic seeded order: largest groups first, ties broken by a
    // shuffled rank rather than signature order.
    let mut keys: Vec<&str> = groups.keys().copied().collect();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    keys.shuffle(&mut rng);
    let rank: BTreeMap<&str, usize> = keys.iter().enumerate().map(|(r, k)| (*k, r)).collect();
    let mut ordered: Vec<&str> = groups.keys().copied().collect();
    ordered.sort_by_key(|k| (usize::MAX - groups[k].len(), rank[k]));

    // Greedy fill: each group to the side with the most remaining room.
    let mut sides: [Vec<&str>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    let mut filled = [0usize; 3];
    for key in ordered {
        let size = groups[key].len();
        let side = (0..3)
            .max_by_key(|&s| (targets[s] as isize - filled[s] as isize, usize::MAX - s))
            .unwrap();
        sides[side].push(key);
        filled[side] += size;
    }

    // Exact repair: move the largest group that fits both the surplus and
    // the deficit. Group sizes are small relative to the sides, so this
    // terminates in practice; bail out rather than loop forever if not.
    let mut guard = groups.len() + 8;
    loop {
        let over = (0..3).find(|&s| filled[s] > targets[s]);
        let under = (0..3).find(|&s| filled[s] < targets[s]);
        let (Some(over), Some(under)) = (over, under) else { break };
        let surplus = filled[over] - targets[over];
        let deficit = targets[under] - filled[under];
        let budget = surplus.min(deficit);
        let pick = sides[over]
            .iter()
            .enumerate()
            .filter(|(_, k)| groups[**k].len() <= budget)
            .max_by_key(|(_, k)| groups[**k].len())
            .map(|(i, _)| i);
        let Some(pick) = pick else { return Err(SplitError::Unbalanceable) };
        let key = sides[over].remove(pick);
        filled[over] -= groups[key].len();
        filled[under] += groups[key].len();
        sides[under].push(key);
        guard -= 1;
        if guard == 0 {
            return Err(SplitError::Unbalanceable);
        }
    }

    let collect = |keys: &[&str]| {
        let mut indices: Vec<usize> =
            keys.iter().flat_map(|k| groups[*k].iter().copied()).collect();
        indices.sort_unstable();
        indices
    };
    Ok(Partition {
        train: collect(&sides[0]),
        dev: collect(&sides[1]),
        test: collect(&sides[2]),
    })
}

// ---- Split construction ----

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitSpec {
    pub kind: SplitKind,
    pub counts: (usize, usize, usize),
    pub seed: u64,
    /// When set, also draw an operation-count-stratified subsample of the
    /// test side with this many states per stratum.
    pub subsample_per_stratum: Option<usize>,
}

/// Per-side scenario and example counts plus audit outcomes; written next to
/// the split files so a reader can check integrity without recomputing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitManifest {
    pub kind: SplitKind,
    pub seed: u64,
    pub scenario_counts: (usize, usize, usize),
    pub example_counts: (usize, usize, usize),
    pub lexicons: (String, String, String),
    pub max_train_t: Option<usize>,
    pub signatures_disjoint: bool,
    /// Surface nouns shared between train and test sides (empty = disjoint).
    pub shared_nouns: Vec<String>,
    /// Content tokens shared between train and test example texts, beyond
    /// the sanctioned determiner/preposition pair.
    pub content_overlap: Vec<String>,
    pub subsample: Option<SubsampleManifest>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubsampleManifest {
    pub per_stratum: usize,
    pub strata: usize,
    pub states: usize,
    pub scenarios: usize,
    pub examples: usize,
}

#[derive(Debug)]
pub struct Split {
    pub train: Vec<ClozeExample>,
    pub dev: Vec<ClozeExample>,
    pub test: Vec<ClozeExample>,
    pub subsample: Option<Vec<ClozeExample>>,
    pub train_scenarios: Vec<u32>,
    pub dev_scenarios: Vec<u32>,
    pub test_scenarios: Vec<u32>,
    pub manifest: SplitManifest,
}

fn render_side(
    scenarios: &[Scenario],
    indices: &[usize],
    cfg: &WorldConfig,
    lex: &Lexicon,
    max_t: Option<usize>,
) -> Result<Vec<ClozeExample>, SplitError> {
    let mut out = Vec::new();
    for &idx in indices {
        let mut examples = build_cloze_examples(&scenarios[idx], cfg, lex)?;
        if let Some(cap) = max_t {
            examples.retain(|e| e.t <= cap);
        }
        out.append(&mut examples);
    }
    Ok(out)
}

fn example_text(e: &ClozeExample) -> String {
    let gold = if e.gold.is_empty() { "nothing".to_string() } else { e.gold.join(" and ") };
    format!("{} {} {}", e.description, e.query_prefix, gold)
}

/// Content tokens (see [`content_tokens`]) of every example text on a side.
fn side_content_tokens(examples: &[ClozeExample]) -> BTreeSet<String> {
    let mut all = BTreeSet::new();
    for e in examples {
        all.extend(content_tokens(&example_text(e)));
    }
    all
}

/// Build a split: partition scenarios, render each side under its lexicon,
/// apply the train-side operation cap, audit leakage, optionally subsample.
pub fn build_split(
    spec: &SplitSpec,
    scenarios: &[Scenario],
    cfg: &WorldConfig,
) -> Result<Split, SplitError> {
    let partition = partition_by_signature(scenarios, spec.counts, spec.seed)?;
    let train_lex = spec.kind.train_lexicon();
    let test_lex = spec.kind.test_lexicon();
    let max_t = spec.kind.max_train_t();

    let train = render_side(scenarios, &partition.train, cfg, &train_lex, max_t)?;
    let dev = render_side(scenarios, &partition.dev, cfg, &train_lex, None)?;
    let test = render_side(scenarios, &partition.test, cfg, &test_lex, None)?;

    let ids = |indices: &[usize]| indices.iter().map(|&i| scenarios[i].id).collect::<Vec<_>>();
    let signatures = |indices: &[usize]| {
        indices.iter().map(|&i| scenarios[i].signature.clone()).collect::<BTreeSet<_>>()
    };
    let train_sigs = signatures(&partition.train);
    let dev_sigs = signatures(&partition.dev);
    let test_sigs = signatures(&partition.test);
    let signatures_disjoint = train_sigs.is_disjoint(&dev_sigs)
        && train_sigs.is_disjoint(&test_sigs)
        && dev_sigs.is_disjoint(&test_sigs);

    let train_nouns: BTreeSet<&String> = train_lex.nouns().iter().collect();
    let test_nouns: BTreeSet<&String> = test_lex.nouns().iter().collect();
    let shared_nouns: Vec<String> =
        train_nouns.intersection(&test_nouns).map(|n| n.to_string()).collect();

    // Raw token overlap between the sides' rendered text, minus function
    // words and cloze scaffolding; "the" and "into" are sanctioned by design.
    let sanctioned: BTreeSet<String> = ["the", "into"].iter().map(|s| s.to_string()).collect();
    let content_overlap: Vec<String> = side_content_tokens(&train)
        .intersection(&side_content_tokens(&test))
        .filter(|t| !sanctioned.contains(*t))
        .cloned()
        .collect();

    let mut subsample = None;
    let mut subsample_manifest = None;
    if let Some(per_stratum) = spec.subsample_per_stratum {
        let drawn = build_subsample(&test, per_stratum, derive_subseed(spec.seed));
        subsample_manifest = Some(SubsampleManifest {
            per_stratum,
            strata: drawn.strata,
            states: drawn.states,
            scenarios: drawn.examples.iter().map(|e| e.scenario_id).collect::<BTreeSet<_>>().len(),
            examples: drawn.examples.len(),
        });
        subsample = Some(drawn.examples);
    }

    let manifest = SplitManifest {
        kind: spec.kind,
        seed: spec.seed,
        scenario_counts: (partition.train.len(), partition.dev.len(), partition.test.len()),
        example_counts: (train.len(), dev.len(), test.len()),
        lexicons: (
            train_lex.name().to_string(),
            train_lex.name().to_string(),
            test_lex.name().to_string(),
        ),
        max_train_t: max_t,
        signatures_disjoint,
        shared_nouns,
        content_overlap,
        subsample: subsample_manifest,
    };

    Ok(Split {
        train,
        dev,
        test,
        subsample,
        train_scenarios: ids(&partition.train),
        dev_scenarios: ids(&partition.dev),
        test_scenarios: ids(&partition.test),
        manifest,
    })
}

// ---- Operation-count-stratified subsample ----

fn derive_subseed(seed: u64) -> u64 {
    // A stream index far above any scenario index, so the subsample draw
    // never reuses a scenario's generation stream.
    crate::sampler::derive_seed(seed, 1 << 40)
}

pub struct Subsample {
    pub examples: Vec<ClozeExample>,
    pub strata: usize,
    pub states: usize,
}

/// For every operation-affected count present in the corpus, draw up to
/// `per_stratum` description states — (scenario, t) pairs where some box has
/// that count — and keep *all* per-box examples of each drawn state. States
/// drawn for several strata are kept once.
pub fn build_subsample(examples: &[ClozeExample], per_stratum: usize, seed: u64) -> Subsample {
    let mut strata: BTreeMap<usize, BTreeSet<(u32, usize)>> = BTreeMap::new();
    for e in examples {
        strata.entry(e.meta.ops_affecting).or_default().insert((e.scenario_id, e.t));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut chosen: BTreeSet<(u32, usize)> = BTreeSet::new();
    for pool in strata.values() {
        let mut pool: Vec<&(u32, usize)> = pool.iter().collect();
        if pool.len() > per_stratum {
            // Partial Fisher-Yates: the first `per_stratum` slots end up a
            // uniform sample without shuffling the whole pool.
            for i in 0..per_stratum {
                let j = rng.random_range(i..pool.len());
                pool.swap(i, j);
            }
            pool.truncate(per_stratum);
        }
        chosen.extend(pool.into_iter().copied());
    }
    let examples: Vec<ClozeExample> = examples
        .iter()
        .filter(|e| chosen.contains(&(e.scenario_id, e.t)))
        .cloned()
        .collect();
    Subsample { examples, strata: strata.len(), states: chosen.len() }
}

// ---- Demonstration fixture ----

/// The fixed six-operation demonstration scenario used for few-shot prompts.
/// It exists outside every sampled corpus, so it can never leak into a split.
pub fn demo_scenario() -> (WorldConfig, Scenario) {
    let mut cfg = WorldConfig::standard();
    cfg.num_ops = 6;
    let nouns = |list: &[&str]| list.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let initial = WorldState::from_boxes(
        vec![
            nouns(&["car"]),
            nouns(&["cross"]),
            nouns(&["bag", "machine"]),
            nouns(&["paper", "string"]),
            nouns(&["bill"]),
            nouns(&["apple", "cash", "glass"]),
            nouns(&["bottle", "map"]),
        ],
        &cfg,
    )
    .expect("demonstration initial state is legal");
    let ops = vec![
        Operation::remove(nouns(&["car"]), 0).unwrap(),
        Operation::remove(nouns(&["paper", "string"]), 3).unwrap(),
        Operation::put(nouns(&["plane"]), 0).unwrap(),
        Operation::mv(nouns(&["map"]), 6, 2).unwrap(),
        Operation::remove(nouns(&["bill"]), 4).unwrap(),
        Operation::put(nouns(&["coat"]), 3).unwrap(),
    ];
    (cfg.clone(), Scenario::new(0, &initial, ops))
}

/// One rendered demonstration: a description and its true all-box statement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Demonstration {
    pub description: String,
    pub statement: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DemoSet {
    /// The t=0 restatement and the after-all-operations statement.
    pub demonstrations: Vec<Demonstration>,
    /// The same content as per-box cloze examples (2 states x 7 boxes).
    pub examples: Vec<ClozeExample>,
}

/// Render the demonstration scenario under a lexicon: two all-box
/// demonstrations plus their fourteen per-box examples.
pub fn build_demo(lex: &Lexicon) -> Result<DemoSet, ExampleError> {
    let (cfg, scenario) = demo_scenario();
    let states = scenario.states(&cfg)?;
    let last = scenario.num_ops();

    let mut description = render_initial(&states[0], &cfg, lex)?;
    let demo0 = Demonstration {
        statement: render_statement(&states[0], &cfg, lex)?,
        description: description.clone(),
    };
    for op in &scenario.ops {
        description.push(' ');
        description.push_str(&lex.op_sentence(&cfg, op)?);
    }
    let demo1 = Demonstration {
        description,
        statement: render_statement(&states[last], &cfg, lex)?,
    };

    let mut examples = build_cloze_examples(&scenario, &cfg, lex)?;
    examples.retain(|e| e.t == 0 || e.t == last);
    Ok(DemoSet { demonstrations: vec![demo0, demo1], examples })
}
