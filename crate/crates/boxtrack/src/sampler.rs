//! Seeded scenario sampling.
//!
//! Every scenario draws from its own RNG, seeded by mixing the master seed
//! with the scenario index, so corpus generation is order-stable: scenario
//! `i` is the same whether generated alone, in sequence, or in parallel.
//!
//! Sampling rules beyond plain state validity:
//! - `Put` introduces only objects never used anywhere in the scenario, and
//!   removed objects are retired for good, so an object's history never
//!   contradicts an earlier sentence.
//! - The operation kind is drawn uniformly among kinds with at least one
//!   valid instantiation, then the instantiation uniformly within the kind.

use crate::scenario::Scenario;
use crate::world::{InitialLaw, Operation, WorldConfig, WorldError, WorldState};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use std::collections::BTreeSet;
use thiserror::Error;

/// Attempts at resampling a whole scenario before giving up.
pub const RETRY_BUDGET: usize = 100;

#[derive(Debug, Error)]
pub enum SampleError {
    #[error("scenario {id}: no valid operation sequence found in {retries} attempts")]
    Exhausted { id: u32, retries: usize },
    #[error(transparent)]
    World(#[from] WorldError),
}

fn splitmix_finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-scenario seed: the `index`-th output of the splitmix64 stream seeded
/// by the master seed (jump-ahead form, injective in the index).
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    let step = 0x9E37_79B9_7F4A_7C15u64;
    splitmix_finalize(master_seed.wrapping_add(index.wrapping_add(1).wrapping_mul(step)))
}

/// Draw an initial state: per-box object count from the configured law,
/// objects without replacement from the canonical inventory.
pub fn sample_initial(cfg: &WorldConfig, rng: &mut impl Rng) -> Result<WorldState, WorldError> {
    let mut remaining: Vec<usize> = (0..cfg.objects.len()).collect();
    let mut boxes = Vec::with_capacity(cfg.boxes);
    for _ in 0..cfg.boxes {
        let count = match cfg.initial_law {
            InitialLaw::Uniform { lo, hi } => rng.random_range(lo..=hi),
        };
        let mut contents = Vec::with_capacity(count);
        for _ in 0..count {
            let pick = rng.random_range(0..remaining.len());
            contents.push(cfg.objects[remaining.swap_remove(pick)].clone());
        }
        boxes.push(contents);
    }
    WorldState::from_boxes(boxes, cfg)
}

/// Every instantiation of one operation kind, as index tuples into the
/// inventory. Enumerated in a fixed order so uniform draws are reproducible.
fn enumerate_kind(
    cfg: &WorldConfig,
    state: &WorldState,
    used: &BTreeSet<String>,
    kind: &'static str,
) -> Vec<Operation> {
    let mut out = Vec::new();
    let free = |b: usize| cfg.capacity - state.boxes()[b].len();
    match kind {
        "put" => {
            let unused: Vec<&String> =
                cfg.objects.iter().filter(|o| !used.contains(*o)).collect();
            let (lo, hi) = cfg.put_arity;
            for size in lo..=hi.min(unused.len()) {
                for combo in combinations(unused.len(), size) {
                    for dst in 0..cfg.boxes {
                        if free(dst) >= size {
                            let objs = combo.iter().map(|&i| unused[i].clone()).collect();
                            out.push(Operation::Put { objs, dst });
                        }
                    }
                }
            }
        }
        "remove" => {
            let (lo, hi) = cfg.remove_arity;
            for src in 0..cfg.boxes {
                let contents = &state.boxes()[src];
                for size in lo..=hi.min(contents.len()) {
                    for combo in combinations(contents.len(), size) {
                        let objs = combo.iter().map(|&i| contents[i].clone()).collect();
                        out.push(Operation::Remove { objs, src });
                    }
                }
            }
        }
        "move" => {
            let (lo, hi) = cfg.move_arity;
            for src in 0..cfg.boxes {
                let contents = &state.boxes()[src];
                for size in lo..=hi.min(contents.len()) {
                    for combo in combinations(contents.len(), size) {
                        for dst in 0..cfg.boxes {
                            if dst != src && free(dst) >= size {
                                let objs: Vec<String> =
                                    combo.iter().map(|&i| contents[i].clone()).collect();
                                out.push(Operation::Move { objs, src, dst });
                            }
                        }
                    }
                }
            }
        }
        other => unreachable!("unknown operation kind {other}"),
    }
    out
}

/// All `size`-element index subsets of `0..n`, lexicographic.
fn combinations(n: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(size);
    fn walk(n: usize, size: usize, start: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == size {
            out.push(current.clone());
            return;
        }
        for i in start..n {
            current.push(i);
            walk(n, size, i + 1, current, out);
            current.pop();
        }
    }
    walk(n, size, 0, &mut current, &mut out);
    out
}

/// Draw one operation: uniform over feasible kinds, then uniform over that
/// kind's instantiations. `None` when no operation is possible at all.
pub fn sample_op(
    cfg: &WorldConfig,
    state: &WorldState,
    used: &BTreeSet<String>,
    rng: &mut impl Rng,
) -> Option<Operation> {
    let pools: Vec<Vec<Operation>> = ["put", "remove", "move"]
        .iter()
        .map(|kind| enumerate_kind(cfg, state, used, kind))
        .filter(|pool| !pool.is_empty())
        .collect();
    if pools.is_empty() {
        return None;
    }
    let pool = &pools[rng.random_range(0..pools.len())];
    Some(pool[rng.random_range(0..pool.len())].clone())
}

/// Sample a full scenario from its own seed, resampling from scratch (same
/// RNG stream) if an operation sequence dead-ends.
pub fn sample_scenario(cfg: &WorldConfig, id: u32, seed: u64) -> Result<Scenario, SampleError> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for _ in 0..RETRY_BUDGET {
        let initial = sample_initial(cfg, &mut rng)?;
        let mut used: BTreeSet<String> =
            initial.objects_in_play().map(str::to_string).collect();
        let mut states = vec![initial.clone()];
        let mut ops = Vec::with_capacity(cfg.num_ops);
        while ops.len() < cfg.num_ops {
            let Some(op) = sample_op(cfg, states.last().unwrap(), &used, &mut rng) else {
                break;
            };
            let next = states.last().unwrap().apply(cfg, &op)?;
            used.extend(op.objs().iter().cloned());
            states.push(next);
            ops.push(op);
        }
        if ops.len() == cfg.num_ops {
            return Ok(Scenario::new(id, &initial, ops));
        }
    }
    Err(SampleError::Exhausted { id, retries: RETRY_BUDGET })
}

/// Generate `count` scenarios under one master seed. Scenario `i` depends
/// only on `(master_seed, i)`, never on its neighbours.
pub fn generate_corpus(
    cfg: &WorldConfig,
    count: usize,
    master_seed: u64,
) -> Result<Vec<Scenario>, SampleError> {
    cfg.validate()?;
    (0..count)
        .map(|i| sample_scenario(cfg, i as u32, derive_seed(master_seed, i as u64)))
        .collect()
}
