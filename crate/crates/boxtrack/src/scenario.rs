//! Scenarios: an initial state plus an operation history. Derived states are
//! never stored; they are recomputed (and cross-checked) from the history so
//! a corrupted file cannot smuggle in an inconsistent world.

use crate::world::{self, Operation, WorldConfig, WorldError, WorldState};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario {id}: {source}")]
    World {
        id: u32,
        #[source]
        source: WorldError,
    },
    #[error("scenario {id}: stored signature {stored:?} but initial state has {computed:?}")]
    SignatureMismatch { id: u32, stored: String, computed: String },
    #[error("scenario {id}: {got} operations where the world expects {want}")]
    OpCountMismatch { id: u32, got: usize, want: usize },
}

/// One sampled world history. `signature` is the per-box count string of the
/// initial state, the key the splitter groups on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: u32,
    pub initial: Vec<Vec<String>>,
    pub ops: Vec<Operation>,
    pub signature: String,
}

impl Scenario {
    pub fn new(id: u32, initial: &WorldState, ops: Vec<Operation>) -> Self {
        Scenario {
            id,
            initial: initial.boxes().to_vec(),
            ops,
            signature: initial.signature(),
        }
    }

    pub fn initial_state(&self, cfg: &WorldConfig) -> Result<WorldState, ScenarioError> {
        WorldState::from_boxes(self.initial.clone(), cfg)
            .map_err(|source| ScenarioError::World { id: self.id, source })
    }

    /// Replay the full history: `states()[t]` is the world after `t` ops.
    pub fn states(&self, cfg: &WorldConfig) -> Result<Vec<WorldState>, ScenarioError> {
        let initial = self.initial_state(cfg)?;
        world::replay(cfg, &initial, &self.ops)
            .map_err(|source| ScenarioError::World { id: self.id, source })
    }

    /// Full integrity check: initial state legal, every op applies in
    /// sequence, op count matches the world, stored signature correct.
    pub fn validate(&self, cfg: &WorldConfig) -> Result<(), ScenarioError> {
        let states = self.states(cfg)?;
        if self.ops.len() != cfg.num_ops {
            return Err(ScenarioError::OpCountMismatch {
                id: self.id,
                got: self.ops.len(),
                want: cfg.num_ops,
            });
        }
        let computed = states[0].signature();
        if computed != self.signature {
            return Err(ScenarioError::SignatureMismatch {
                id: self.id,
                stored: self.signature.clone(),
                computed,
            });
        }
        Ok(())
    }

    pub fn num_ops(&self) -> usize {
        self.ops.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nouns(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    fn small_world() -> (WorldConfig, Scenario) {
        let mut cfg = WorldConfig::with_objects(nouns(&["egg", "gift", "milk", "wire", "disk", "bell"]));
        cfg.boxes = 2;
        cfg.capacity = 3;
        cfg.num_ops = 2;
        let initial =
            WorldState::from_boxes(vec![nouns(&["egg", "gift"]), nouns(&["milk"])], &cfg).unwrap();
        let ops = vec![
            Operation::mv(nouns(&["egg"]), 0, 1).unwrap(),
            Operation::put(nouns(&["wire"]), 0).unwrap(),
        ];
        (cfg.clone(), Scenario::new(7, &initial, ops))
    }

    #[test]
    fn states_replays_history() {
        let (cfg, scenario) = small_world();
        let states = scenario.states(&cfg).unwrap();
        assert_eq!(states.len(), 3);
        assert_eq!(states[2].box_contents(0).unwrap(), &nouns(&["gift", "wire"])[..]);
        assert_eq!(states[2].box_contents(1).unwrap(), &nouns(&["milk", "egg"])[..]);
    }

    #[test]
    fn validate_accepts_consistent_scenarios() {
        let (cfg, scenario) = small_world();
        scenario.validate(&cfg).unwrap();
        assert_eq!(scenario.signature, "21");
    }

    #[test]
    fn validate_rejects_tampering() {
        let (cfg, good) = small_world();

        let mut bad = good.clone();
        bad.signature = "12".into();
        assert!(matches!(bad.validate(&cfg), Err(ScenarioError::SignatureMismatch { .. })));

        let mut bad = good.clone();
        bad.initial[0].extend(nouns(&["milk"])); // duplicates an object
        assert!(matches!(bad.validate(&cfg), Err(ScenarioError::World { .. })));

        let mut bad = good.clone();
        bad.ops.truncate(1);
        assert!(matches!(bad.validate(&cfg), Err(ScenarioError::OpCountMismatch { .. })));

        let mut bad = good;
        bad.ops[0] = Operation::mv(nouns(&["milk"]), 0, 1).unwrap(); // milk is in box 1
        assert!(matches!(bad.validate(&cfg), Err(ScenarioError::World { .. })));
    }

    #[test]
    fn json_round_trip_preserves_scenario() {
        let (_, scenario) = small_world();
        let line = serde_json::to_string(&scenario).unwrap();
        assert!(line.contains("\"kind\":\"move\""));
        assert!(line.contains("\"signature\":\"21\""));
        let back: Scenario = serde_json::from_str(&line).unwrap();
        assert_eq!(back, scenario);
    }
}
