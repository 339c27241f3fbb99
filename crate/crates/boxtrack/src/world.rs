//! Core box-world model: configuration, immutable states, operations, replay,
//! and the per-box bookkeeping (operation counts, changed-from-initial) that
//! downstream stratified evaluation keys on.
//!
//! A world is `boxes` numbered slots, each holding at most `capacity` objects;
//! an object lives in at most one box at a time. States are applied
//! functionally: `apply` returns a fresh state and never mutates its input.
//! Box contents keep insertion order because renderings are deterministic
//! text, but two states compare equal whenever their per-box *sets* agree.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

// ---- Configuration ----

/// Law for the number of objects a freshly sampled box starts with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialLaw {
    /// Uniform over `lo..=hi` objects per box.
    Uniform { lo: usize, hi: usize },
}

impl InitialLaw {
    pub fn mean(&self) -> f64 {
        match *self {
            InitialLaw::Uniform { lo, hi } => (lo + hi) as f64 / 2.0,
        }
    }

    pub fn max(&self) -> usize {
        match *self {
            InitialLaw::Uniform { hi, .. } => hi,
        }
    }
}

fn default_initial_law() -> InitialLaw {
    InitialLaw::Uniform { lo: 1, hi: 3 }
}

fn default_put_arity() -> (usize, usize) {
    (1, 1)
}

fn default_move_arity() -> (usize, usize) {
    (1, 1)
}

fn default_remove_arity() -> (usize, usize) {
    (1, 2)
}

/// Static parameters of a box world.
///
/// `objects` is the canonical noun inventory. Scenarios store these nouns
/// directly; lexicons map them to surface forms only at rendering time, so
/// the same scenario can be re-rendered under a different vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub objects: Vec<String>,
    pub boxes: usize,
    pub capacity: usize,
    /// Expected number of objects per box in a sampled initial state; must
    /// match the mean of `initial_law`.
    pub expected_initial: f64,
    pub num_ops: usize,
    #[serde(default = "default_initial_law")]
    pub initial_law: InitialLaw,
    /// Inclusive `(min, max)` object-count bounds per operation kind.
    #[serde(default = "default_put_arity")]
    pub put_arity: (usize, usize),
    #[serde(default = "default_move_arity")]
    pub move_arity: (usize, usize),
    #[serde(default = "default_remove_arity")]
    pub remove_arity: (usize, usize),
}

impl WorldConfig {
    /// The stock seven-box world over the bundled frequent-noun inventory.
    pub fn standard() -> Self {
        Self::with_objects(crate::lexicon::bnc_nouns())
    }

    /// Default world parameters over a caller-supplied inventory.
    pub fn with_objects(objects: Vec<String>) -> Self {
        WorldConfig {
            objects,
            boxes: 7,
            capacity: 3,
            expected_initial: 2.0,
            num_ops: 12,
            initial_law: default_initial_law(),
            put_arity: default_put_arity(),
            move_arity: default_move_arity(),
            remove_arity: default_remove_arity(),
        }
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        let fail = |reason: String| Err(WorldError::InvalidConfig { reason });
        if self.boxes == 0 {
            return fail("world must have at least one box".into());
        }
        if self.capacity == 0 {
            return fail("box capacity must be at least 1".into());
        }
        if self.capacity > 9 {
            // Signatures are fixed-width digit strings, one digit per box.
            return fail(format!(
                "box capacity {} exceeds 9; signatures require single-digit counts",
                self.capacity
            ));
        }
        if self.objects.is_empty() {
            return fail("object inventory is empty".into());
        }
        let mut seen = BTreeSet::new();
        for noun in &self.objects {
            if noun.is_empty() || noun.chars().any(char::is_whitespace) {
                return fail(format!("object noun {noun:?} is not a single token"));
            }
            if noun.chars().any(char::is_uppercase) {
                return fail(format!("object noun {noun:?} is not lowercase"));
            }
            if !seen.insert(noun.as_str()) {
                return fail(format!("duplicate object noun {noun:?}"));
            }
        }
        if self.objects.len() < self.boxes * self.capacity {
            return fail(format!(
                "inventory of {} objects cannot fill {} boxes of capacity {}",
                self.objects.len(),
                self.boxes,
                self.capacity
            ));
        }
        if self.initial_law.max() > self.capacity {
            return fail("initial-count law can exceed box capacity".into());
        }
        if (self.initial_law.mean() - self.expected_initial).abs() > 1e-9 {
            return fail(format!(
                "initial-count law mean {} disagrees with expected_initial {}",
                self.initial_law.mean(),
                self.expected_initial
            ));
        }
        for (kind, (lo, hi)) in [
            ("put", self.put_arity),
            ("move", self.move_arity),
            ("remove", self.remove_arity),
        ] {
            if lo == 0 || lo > hi {
                return fail(format!("{kind} arity bounds ({lo}, {hi}) are not a valid range"));
            }
            if hi > self.capacity {
                return fail(format!(
                    "{kind} arity bound {hi} exceeds box capacity {}",
                    self.capacity
                ));
            }
        }
        Ok(())
    }

    pub fn object_index(&self, noun: &str) -> Option<usize> {
        self.objects.iter().position(|o| o == noun)
    }
}

// ---- Errors ----

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("invalid world configuration: {reason}")]
    InvalidConfig { reason: String },
    #[error("box index {index} out of range for a {boxes}-box world")]
    BoxOutOfRange { index: usize, boxes: usize },
    #[error("operation carries no objects")]
    EmptyOperation,
    #[error("operation lists object {obj:?} more than once")]
    DuplicateOperand { obj: String },
    #[error("{kind} carries {len} objects, outside its arity bounds {lo}..={hi}")]
    ArityOutOfBounds { kind: &'static str, len: usize, lo: usize, hi: usize },
    #[error("move from box {src} to itself")]
    SelfMove { src: usize },
    #[error("{op} violates preconditions at box {at}: {reason}")]
    Precondition { op: String, at: usize, reason: String },
    #[error("state has {len} objects in box {at}, over capacity {capacity}")]
    OverCapacity { at: usize, len: usize, capacity: usize },
    #[error("object {obj:?} appears in more than one box")]
    DuplicateObject { obj: String },
    #[error("state has {got} boxes where the world has {want}")]
    BoxCountMismatch { got: usize, want: usize },
    #[error("object {obj:?} is not in the configured inventory")]
    UnknownObject { obj: String },
    #[error("replay failed applying operation {step}: {source}")]
    ReplayStep {
        step: usize,
        #[source]
        source: Box<WorldError>,
    },
}

// ---- Operations ----

/// A single world-changing instruction. `Put` introduces objects never seen
/// before, `Remove` retires objects for good, `Move` relocates them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Operation {
    Put { objs: Vec<String>, dst: usize },
    Remove { objs: Vec<String>, src: usize },
    Move { objs: Vec<String>, src: usize, dst: usize },
}

impl Operation {
    pub fn put(objs: Vec<String>, dst: usize) -> Result<Self, WorldError> {
        let op = Operation::Put { objs, dst };
        op.check_wellformed()?;
        Ok(op)
    }

    pub fn remove(objs: Vec<String>, src: usize) -> Result<Self, WorldError> {
        let op = Operation::Remove { objs, src };
        op.check_wellformed()?;
        Ok(op)
    }

    pub fn mv(objs: Vec<String>, src: usize, dst: usize) -> Result<Self, WorldError> {
        let op = Operation::Move { objs, src, dst };
        op.check_wellformed()?;
        Ok(op)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Operation::Put { .. } => "put",
            Operation::Remove { .. } => "remove",
            Operation::Move { .. } => "move",
        }
    }

    pub fn objs(&self) -> &[String] {
        match self {
            Operation::Put { objs, .. }
            | Operation::Remove { objs, .. }
            | Operation::Move { objs, .. } => objs,
        }
    }

    /// Box indices this operation names, source first where both exist.
    pub fn boxes_touched(&self) -> Vec<usize> {
        match *self {
            Operation::Put { dst, .. } => vec![dst],
            Operation::Remove { src, .. } => vec![src],
            Operation::Move { src, dst, .. } => vec![src, dst],
        }
    }

    /// Structural validity that needs no state: non-empty distinct operands
    /// and, for moves, distinct endpoints.
    fn check_wellformed(&self) -> Result<(), WorldError> {
        let objs = self.objs();
        if objs.is_empty() {
            return Err(WorldError::EmptyOperation);
        }
        let mut seen = BTreeSet::new();
        for obj in objs {
            if !seen.insert(obj.as_str()) {
                return Err(WorldError::DuplicateOperand { obj: obj.clone() });
            }
        }
        if let Operation::Move { src, dst, .. } = *self {
            if src == dst {
                return Err(WorldError::SelfMove { src });
            }
        }
        Ok(())
    }

    /// Full shape check against a configuration: well-formedness, arity
    /// bounds, in-range box indices, and known objects.
    pub fn check_shape(&self, cfg: &WorldConfig) -> Result<(), WorldError> {
        self.check_wellformed()?;
        let (kind, (lo, hi)) = match self {
            Operation::Put { .. } => ("put", cfg.put_arity),
            Operation::Remove { .. } => ("remove", cfg.remove_arity),
            Operation::Move { .. } => ("move", cfg.move_arity),
        };
        let len = self.objs().len();
        if len < lo || len > hi {
            return Err(WorldError::ArityOutOfBounds { kind, len, lo, hi });
        }
        for &index in &self.boxes_touched() {
            if index >= cfg.boxes {
                return Err(WorldError::BoxOutOfRange { index, boxes: cfg.boxes });
            }
        }
        for obj in self.objs() {
            if cfg.object_index(obj).is_none() {
                return Err(WorldError::UnknownObject { obj: obj.clone() });
            }
        }
        Ok(())
    }

    /// Compact rendering for error messages; not a surface form.
    fn describe(&self) -> String {
        match self {
            Operation::Put { objs, dst } => format!("put({}, {dst})", objs.join("+")),
            Operation::Remove { objs, src } => format!("remove({}, {src})", objs.join("+")),
            Operation::Move { objs, src, dst } => {
                format!("move({}, {src}, {dst})", objs.join("+"))
            }
        }
    }
}

// ---- States ----

/// Immutable world state: one insertion-ordered object list per box, with
/// set semantics (no duplicates within or across boxes).
#[derive(Debug, Clone, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WorldState {
    boxes: Vec<Vec<String>>,
}

impl WorldState {
    pub fn empty(boxes: usize) -> Self {
        WorldState { boxes: vec![Vec::new(); boxes] }
    }

    /// Build a state from raw box contents, enforcing the world invariants.
    pub fn from_boxes(boxes: Vec<Vec<String>>, cfg: &WorldConfig) -> Result<Self, WorldError> {
        if boxes.len() != cfg.boxes {
            return Err(WorldError::BoxCountMismatch { got: boxes.len(), want: cfg.boxes });
        }
        let mut seen = BTreeSet::new();
        for (at, contents) in boxes.iter().enumerate() {
            if contents.len() > cfg.capacity {
                return Err(WorldError::OverCapacity {
                    at,
                    len: contents.len(),
                    capacity: cfg.capacity,
                });
            }
            for obj in contents {
                if cfg.object_index(obj).is_none() {
                    return Err(WorldError::UnknownObject { obj: obj.clone() });
                }
                if !seen.insert(obj.as_str()) {
                    return Err(WorldError::DuplicateObject { obj: obj.clone() });
                }
            }
        }
        Ok(WorldState { boxes })
    }

    pub fn boxes(&self) -> &[Vec<String>] {
        &self.boxes
    }

    pub fn box_contents(&self, index: usize) -> Result<&[String], WorldError> {
        self.boxes
            .get(index)
            .map(Vec::as_slice)
            .ok_or(WorldError::BoxOutOfRange { index, boxes: self.boxes.len() })
    }

    pub fn n_boxes(&self) -> usize {
        self.boxes.len()
    }

    /// All objects currently in play, in box-then-insertion order.
    pub fn objects_in_play(&self) -> impl Iterator<Item = &str> {
        self.boxes.iter().flatten().map(String::as_str)
    }

    fn holds(&self, obj: &str) -> bool {
        self.boxes.iter().any(|b| b.iter().any(|o| o == obj))
    }

    /// Per-box object counts as a fixed-width digit string, e.g. `"1113122"`.
    pub fn signature(&self) -> String {
        self.boxes
            .iter()
            .map(|b| {
                debug_assert!(b.len() <= 9, "box counts above 9 are unrepresentable");
                char::from_digit(b.len() as u32, 10).expect("single-digit box count")
            })
            .collect()
    }

    /// First precondition an operation would violate on this state, if any.
    /// Out-of-range indices and malformed operations are errors, not
    /// violations: they mean the question itself is ill-posed.
    fn violation(&self, cfg: &WorldConfig, op: &Operation) -> Result<Option<(usize, String)>, WorldError> {
        op.check_shape(cfg)?;
        if self.boxes.len() != cfg.boxes {
            return Err(WorldError::BoxCountMismatch { got: self.boxes.len(), want: cfg.boxes });
        }
        let room_for = |dst: usize, extra: usize| self.boxes[dst].len() + extra <= cfg.capacity;
        match op {
            Operation::Put { objs, dst } => {
                for obj in objs {
                    if self.holds(obj) {
                        return Ok(Some((*dst, format!("object {obj:?} is already in play"))));
                    }
                }
                if !room_for(*dst, objs.len()) {
                    return Ok(Some((*dst, "destination box is full".into())));
                }
            }
            Operation::Remove { objs, src } => {
                for obj in objs {
                    if !self.boxes[*src].iter().any(|o| o == obj) {
                        return Ok(Some((*src, format!("object {obj:?} is not in the source box"))));
                    }
                }
            }
            Operation::Move { objs, src, dst } => {
                for obj in objs {
                    if !self.boxes[*src].iter().any(|o| o == obj) {
                        return Ok(Some((*src, format!("object {obj:?} is not in the source box"))));
                    }
                }
                if !room_for(*dst, objs.len()) {
                    return Ok(Some((*dst, "destination box is full".into())));
                }
            }
        }
        Ok(None)
    }

    /// Whether `op` can legally apply to this state. Ill-posed operations
    /// (bad indices, unknown objects, broken arity) are an `Err`, distinct
    /// from a well-posed operation that merely fails its preconditions.
    pub fn is_valid(&self, cfg: &WorldConfig, op: &Operation) -> Result<bool, WorldError> {
        Ok(self.violation(cfg, op)?.is_none())
    }

    /// Apply `op`, yielding the successor state. Appended objects land at the
    /// end of their destination box, preserving narrative insertion order.
    pub fn apply(&self, cfg: &WorldConfig, op: &Operation) -> Result<WorldState, WorldError> {
        if let Some((at, reason)) = self.violation(cfg, op)? {
            return Err(WorldError::Precondition { op: op.describe(), at, reason });
        }
        let mut boxes = self.boxes.clone();
        match op {
            Operation::Put { objs, dst } => {
                boxes[*dst].extend(objs.iter().cloned());
            }
            Operation::Remove { objs, src } => {
                boxes[*src].retain(|o| !objs.contains(o));
            }
            Operation::Move { objs, src, dst } => {
                boxes[*src].retain(|o| !objs.contains(o));
                boxes[*dst].extend(objs.iter().cloned());
            }
        }
        Ok(WorldState { boxes })
    }
}

/// States compare as per-box sets: insertion order affects rendering only.
impl PartialEq for WorldState {
    fn eq(&self, other: &Self) -> bool {
        self.boxes.len() == other.boxes.len()
            && (0..self.boxes.len()).all(|b| box_set_eq(&self.boxes[b], &other.boxes[b]))
    }
}

fn box_set_eq(a: &[String], b: &[String]) -> bool {
    a.len() == b.len() && a.iter().all(|o| b.contains(o))
}

// ---- Replay and per-box history ----

/// Derive every state along an operation sequence: `result[t]` is the world
/// after the first `t` operations, so the output has `ops.len() + 1` entries.
pub fn replay(
    cfg: &WorldConfig,
    initial: &WorldState,
    ops: &[Operation],
) -> Result<Vec<WorldState>, WorldError> {
    let mut states = Vec::with_capacity(ops.len() + 1);
    states.push(initial.clone());
    for (step, op) in ops.iter().enumerate() {
        let next = states[step]
            .apply(cfg, op)
            .map_err(|source| WorldError::ReplayStep { step, source: Box::new(source) })?;
        states.push(next);
    }
    Ok(states)
}

/// How many of the first `t` operations altered the contents of `box_index`
/// (as a set). A move counts for both of the boxes it touches.
pub fn ops_affecting_box(states: &[WorldState], t: usize, box_index: usize) -> usize {
    assert!(t < states.len(), "t={t} beyond replayed horizon {}", states.len() - 1);
    (0..t)
        .filter(|&s| !box_set_eq(&states[s].boxes[box_index], &states[s + 1].boxes[box_index]))
        .count()
}

/// Whether `box_index` holds a different set at time `t` than it started with.
pub fn changed_from_initial(states: &[WorldState], t: usize, box_index: usize) -> bool {
    assert!(t < states.len(), "t={t} beyond replayed horizon {}", states.len() - 1);
    !box_set_eq(&states[0].boxes[box_index], &states[t].boxes[box_index])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nouns(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    fn test_config() -> WorldConfig {
        // Enough inventory for a 7x3 world; the fixture nouns come first.
        let mut objects = nouns(&[
            "painting", "bell", "guitar", "egg", "mirror", "sheet", "chemical", "disk", "wire",
            "glass", "knife", "gift", "milk",
        ]);
        for i in objects.len()..21 {
            objects.push(format!("filler{i}"));
        }
        let mut cfg = WorldConfig::with_objects(objects);
        cfg.num_ops = 5;
        cfg
    }

    /// The worked five-operation fixture used throughout: a seven-box world
    /// with signature 1113122 and a move/put/move/put/remove history.
    fn fixture() -> (WorldConfig, WorldState, Vec<Operation>) {
        let cfg = test_config();
        let initial = WorldState::from_boxes(
            vec![
                nouns(&["painting"]),
                nouns(&["bell"]),
                nouns(&["guitar"]),
                nouns(&["egg", "mirror", "sheet"]),
                nouns(&["chemical"]),
                nouns(&["disk", "wire"]),
                nouns(&["glass", "knife"]),
            ],
            &cfg,
        )
        .unwrap();
        let ops = vec![
            Operation::mv(nouns(&["glass"]), 6, 4).unwrap(),
            Operation::put(nouns(&["gift"]), 5).unwrap(),
            Operation::mv(nouns(&["guitar"]), 2, 6).unwrap(),
            Operation::put(nouns(&["milk"]), 4).unwrap(),
            Operation::remove(nouns(&["mirror", "sheet"]), 3).unwrap(),
        ];
        (cfg, initial, ops)
    }

    fn set(list: &[&str]) -> BTreeSet<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    fn box_set(state: &WorldState, b: usize) -> BTreeSet<String> {
        state.box_contents(b).unwrap().iter().cloned().collect()
    }

    #[test]
    fn fixture_signature_is_1113122() {
        let (_, initial, _) = fixture();
        assert_eq!(initial.signature(), "1113122");
    }

    #[test]
    fn empty_world_signature_is_zeros() {
        assert_eq!(WorldState::empty(3).signature(), "000");
    }

    #[test]
    fn put_appends_to_destination() {
        let (cfg, initial, _) = fixture();
        let op = Operation::put(nouns(&["gift"]), 5).unwrap();
        let next = initial.apply(&cfg, &op).unwrap();
        assert_eq!(next.box_contents(5).unwrap(), &nouns(&["disk", "wire", "gift"])[..]);
        // Functional application: the source state is untouched.
        assert_eq!(initial.box_contents(5).unwrap().len(), 2);
    }

    #[test]
    fn move_relocates_between_boxes() {
        let (cfg, initial, _) = fixture();
        let op = Operation::mv(nouns(&["glass"]), 6, 4).unwrap();
        let next = initial.apply(&cfg, &op).unwrap();
        assert_eq!(box_set(&next, 4), set(&["chemical", "glass"]));
        assert_eq!(box_set(&next, 6), set(&["knife"]));
    }

    #[test]
    fn remove_deletes_both_named_objects() {
        let (cfg, initial, _) = fixture();
        let op = Operation::remove(nouns(&["mirror", "sheet"]), 3).unwrap();
        let next = initial.apply(&cfg, &op).unwrap();
        assert_eq!(box_set(&next, 3), set(&["egg"]));
    }

    #[test]
    fn replay_matches_worked_fixture() {
        let (cfg, initial, ops) = fixture();
        let states = replay(&cfg, &initial, &ops).unwrap();
        assert_eq!(states.len(), 6);
        assert_eq!(box_set(&states[5], 6), set(&["guitar", "knife"]));
        assert_eq!(box_set(&states[5], 4), set(&["chemical", "glass", "milk"]));
        assert_eq!(box_set(&states[5], 3), set(&["egg"]));
        assert_eq!(box_set(&states[5], 5), set(&["disk", "wire", "gift"]));
        // Untouched boxes carry through every step.
        for t in 0..=5 {
            assert_eq!(box_set(&states[t], 0), set(&["painting"]));
            assert_eq!(box_set(&states[t], 1), set(&["bell"]));
        }
    }

    #[test]
    fn conservation_under_replay() {
        // No object ever duplicates; puts add, removes retire, moves conserve.
        let (cfg, initial, ops) = fixture();
        let states = replay(&cfg, &initial, &ops).unwrap();
        for state in &states {
            let all: Vec<&str> = state.objects_in_play().collect();
            let uniq: BTreeSet<&str> = all.iter().copied().collect();
            assert_eq!(all.len(), uniq.len());
        }
        assert_eq!(states[0].objects_in_play().count(), 11);
        // +gift +milk -mirror -sheet = net 0.
        assert_eq!(states[5].objects_in_play().count(), 11);
    }

    #[test]
    fn validity_on_fixture_states() {
        let (cfg, initial, ops) = fixture();
        let states = replay(&cfg, &initial, &ops).unwrap();

        let mv_egg = Operation::mv(nouns(&["egg"]), 3, 4).unwrap();
        assert!(initial.is_valid(&cfg, &mv_egg).unwrap());
        // After the glass arrives and the milk is put, box 4 is full.
        assert!(!states[4].is_valid(&cfg, &mv_egg).unwrap());

        let put_dup = Operation::put(nouns(&["painting"]), 3).unwrap();
        assert!(!initial.is_valid(&cfg, &put_dup).unwrap(), "object already in play");

        let put_fresh = Operation::put(nouns(&["gift"]), 5).unwrap();
        assert!(initial.is_valid(&cfg, &put_fresh).unwrap());

        let remove_absent = Operation::remove(nouns(&["glass"]), 0).unwrap();
        assert!(!initial.is_valid(&cfg, &remove_absent).unwrap());
    }

    #[test]
    fn out_of_range_box_is_an_error_not_false() {
        let (cfg, initial, _) = fixture();
        let op = Operation::put(nouns(&["gift"]), 7).unwrap();
        match initial.is_valid(&cfg, &op) {
            Err(WorldError::BoxOutOfRange { index: 7, boxes: 7 }) => {}
            other => panic!("expected out-of-range error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_operations_are_rejected_at_construction() {
        assert!(matches!(
            Operation::mv(nouns(&["glass"]), 2, 2),
            Err(WorldError::SelfMove { src: 2 })
        ));
        assert!(matches!(Operation::put(vec![], 0), Err(WorldError::EmptyOperation)));
        assert!(matches!(
            Operation::remove(nouns(&["egg", "egg"]), 3),
            Err(WorldError::DuplicateOperand { .. })
        ));
    }

    #[test]
    fn arity_bounds_checked_against_config() {
        let (cfg, initial, _) = fixture();
        let wide = Operation::remove(nouns(&["egg", "mirror", "sheet"]), 3).unwrap();
        match initial.is_valid(&cfg, &wide) {
            Err(WorldError::ArityOutOfBounds { kind: "remove", len: 3, lo: 1, hi: 2 }) => {}
            other => panic!("expected arity error, got {other:?}"),
        }
        let mut loose = cfg.clone();
        loose.remove_arity = (1, 3);
        assert!(initial.is_valid(&loose, &wide).unwrap());
    }

    #[test]
    fn precondition_error_names_op_and_box() {
        let (cfg, initial, _) = fixture();
        let op = Operation::remove(nouns(&["glass"]), 0).unwrap();
        match initial.apply(&cfg, &op) {
            Err(WorldError::Precondition { at: 0, op, .. }) => {
                assert!(op.contains("remove"));
            }
            other => panic!("expected precondition error, got {other:?}"),
        }
    }

    #[test]
    fn replay_error_carries_step_index() {
        let (cfg, initial, mut ops) = fixture();
        // Mirror and sheet are retired at step 4; removing the mirror again
        // at step 5 must fail and name that step.
        ops.push(Operation::remove(nouns(&["mirror"]), 3).unwrap());
        match replay(&cfg, &initial, &ops) {
            Err(WorldError::ReplayStep { step: 5, .. }) => {}
            other => panic!("expected replay error at step 5, got {other:?}"),
        }
    }

    #[test]
    fn remove_then_put_leaves_only_new_object() {
        let (cfg, initial, _) = fixture();
        let emptied = initial
            .apply(&cfg, &Operation::remove(nouns(&["painting"]), 0).unwrap())
            .unwrap();
        assert!(emptied.box_contents(0).unwrap().is_empty());
        let refilled = emptied
            .apply(&cfg, &Operation::put(nouns(&["gift"]), 0).unwrap())
            .unwrap();
        assert_eq!(refilled.box_contents(0).unwrap(), &nouns(&["gift"])[..]);
    }

    #[test]
    fn ops_affecting_box_counts_both_ends_of_moves() {
        let (cfg, initial, ops) = fixture();
        let states = replay(&cfg, &initial, &ops).unwrap();
        // Box 6: the glass leaves (op 0) and the guitar arrives (op 2).
        assert_eq!(ops_affecting_box(&states, 5, 6), 2);
        // Box 2: only the guitar leaving.
        assert_eq!(ops_affecting_box(&states, 5, 2), 1);
        // Box 4 gains the glass (op 0) and the milk (op 3).
        assert_eq!(ops_affecting_box(&states, 5, 4), 2);
        // Untouched boxes.
        assert_eq!(ops_affecting_box(&states, 5, 0), 0);
        // Nothing has happened at t=0.
        for b in 0..7 {
            assert_eq!(ops_affecting_box(&states, 0, b), 0);
        }
        // Monotone in t.
        for b in 0..7 {
            for t in 1..=5 {
                assert!(ops_affecting_box(&states, t, b) >= ops_affecting_box(&states, t - 1, b));
            }
        }
    }

    #[test]
    fn changed_from_initial_tracks_set_difference() {
        let (cfg, initial, ops) = fixture();
        let states = replay(&cfg, &initial, &ops).unwrap();
        assert!(changed_from_initial(&states, 5, 6));
        assert!(!changed_from_initial(&states, 5, 1));
        assert!(!changed_from_initial(&states, 0, 6));
    }

    #[test]
    fn round_trip_move_restores_the_set_but_still_counts_ops() {
        let cfg = WorldConfig {
            num_ops: 2,
            ..WorldConfig::with_objects(nouns(&["egg", "gift", "milk", "wire", "disk", "bell"]))
        };
        let cfg = WorldConfig { boxes: 2, ..cfg };
        let initial =
            WorldState::from_boxes(vec![nouns(&["egg", "gift"]), nouns(&["milk"])], &cfg).unwrap();
        let ops = vec![
            Operation::mv(nouns(&["egg"]), 0, 1).unwrap(),
            Operation::mv(nouns(&["egg"]), 1, 0).unwrap(),
        ];
        let states = replay(&cfg, &initial, &ops).unwrap();
        // Insertion order differs ({gift, egg}) but the set is back.
        assert!(!changed_from_initial(&states, 2, 0));
        assert_eq!(states[2], states[0]);
        assert_eq!(ops_affecting_box(&states, 2, 0), 2);
        assert_eq!(
            states[2].box_contents(0).unwrap(),
            &nouns(&["gift", "egg"])[..],
            "insertion order reflects the move history"
        );
    }

    #[test]
    fn state_construction_enforces_world_invariants() {
        let (cfg, ..) = fixture();
        let over = vec![
            nouns(&["painting", "bell", "guitar", "egg"]),
            vec![], vec![], vec![], vec![], vec![], vec![],
        ];
        assert!(matches!(
            WorldState::from_boxes(over, &cfg),
            Err(WorldError::OverCapacity { at: 0, len: 4, capacity: 3 })
        ));

        let dup = vec![
            nouns(&["painting"]),
            nouns(&["painting"]),
            vec![], vec![], vec![], vec![], vec![],
        ];
        assert!(matches!(
            WorldState::from_boxes(dup, &cfg),
            Err(WorldError::DuplicateObject { .. })
        ));

        assert!(matches!(
            WorldState::from_boxes(vec![vec![]; 6], &cfg),
            Err(WorldError::BoxCountMismatch { got: 6, want: 7 })
        ));
    }

    #[test]
    fn config_validation_catches_bad_parameters() {
        let mut cfg = test_config();
        cfg.validate().unwrap();

        cfg.capacity = 10;
        assert!(cfg.validate().is_err(), "capacity must stay signature-representable");

        let mut cfg = test_config();
        cfg.objects[1] = "two words".into();
        assert!(cfg.validate().is_err());

        let mut cfg = test_config();
        cfg.objects.truncate(20);
        assert!(cfg.validate().is_err(), "inventory must cover boxes*capacity");

        let mut cfg = test_config();
        cfg.expected_initial = 2.5;
        assert!(cfg.validate().is_err(), "law mean must match expected_initial");
    }

    /// Independent validity oracle: brute-force every conceivable operation on
    /// a small world and compare `is_valid` against a from-first-principles
    /// membership/occupancy predicate.
    #[test]
    fn validity_agrees_with_enumeration_oracle() {
        let objects = nouns(&["egg", "gift", "milk", "wire", "disk", "bell"]);
        let cfg = WorldConfig {
            boxes: 3,
            capacity: 2,
            expected_initial: 1.0,
            initial_law: InitialLaw::Uniform { lo: 1, hi: 1 },
            num_ops: 4,
            ..WorldConfig::with_objects(objects.clone())
        };
        cfg.validate().unwrap();
        let state = WorldState::from_boxes(
            vec![nouns(&["egg", "gift"]), nouns(&["milk"]), vec![]],
            &cfg,
        )
        .unwrap();
        let in_box = |b: usize, o: &str| state.box_contents(b).unwrap().iter().any(|x| x == o);
        let somewhere = |o: &str| (0..3).any(|b| in_box(b, o));

        let mut checked = 0;
        for obj in &objects {
            for b in 0..3 {
                let put = Operation::put(vec![obj.clone()], b).unwrap();
                let expect = !somewhere(obj) && state.box_contents(b).unwrap().len() < 2;
                assert_eq!(state.is_valid(&cfg, &put).unwrap(), expect, "put {obj} -> {b}");
                checked += 1;

                let remove = Operation::remove(vec![obj.clone()], b).unwrap();
                assert_eq!(state.is_valid(&cfg, &remove).unwrap(), in_box(b, obj));
                checked += 1;

                for d in 0..3 {
                    if d == b {
                        continue;
                    }
                    let mv = Operation::mv(vec![obj.clone()], b, d).unwrap();
                    let expect = in_box(b, obj) && state.box_contents(d).unwrap().len() < 2;
                    assert_eq!(state.is_valid(&cfg, &mv).unwrap(), expect, "move {obj} {b}->{d}");
                    checked += 1;
                }
            }
        }
        assert_eq!(checked, 6 * 3 * 4);
    }
}
