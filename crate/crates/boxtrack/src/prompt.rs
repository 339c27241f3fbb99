//! Few-shot prompt assembly.
//!
//! Prompts are completion-style: an instruction, two fixed demonstrations,
//! then the test description and an unfinished statement line for the model
//! to complete. The demonstrations ship as verbatim text assets rather than
//! being re-rendered, so prompts stay byte-identical to the published form
//! even if the renderer evolves.

use crate::render::ClozeExample;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Instruction + two demonstrations, ending in a trailing newline.
pub const DEMOS_MATCHED_ALL_BOXES: &str = include_str!("../assets/demos_matched_all_boxes.txt");
pub const DEMOS_MATCHED_PER_BOX: &str = include_str!("../assets/demos_matched_per_box.txt");
pub const DEMOS_ALTFORM_ALL_BOXES: &str = include_str!("../assets/demos_altform_all_boxes.txt");

#[derive(Debug, Error, PartialEq)]
pub enum PromptError {
    #[error("per-box prompts exist only with matched demonstrations")]
    AltFormPerBox,
    #[error("example {key} is not in the canonical surface form (query {prefix:?})")]
    NonCanonicalExample { key: String, prefix: String },
}

/// Whether one statement covers every box or just the probed one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMode {
    AllBoxes,
    PerBox,
}

/// Which demonstration pair the prompt opens with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemoSource {
    /// Demonstrations share the test examples' surface form.
    Matched,
    /// Demonstrations use the alternative phrasing and rare nouns.
    Altform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub mode: PromptMode,
    pub demo_source: DemoSource,
}

impl PromptSpec {
    pub fn new(mode: PromptMode, demo_source: DemoSource) -> Result<Self, PromptError> {
        if mode == PromptMode::PerBox && demo_source == DemoSource::Altform {
            return Err(PromptError::AltFormPerBox);
        }
        Ok(PromptSpec { mode, demo_source })
    }

    /// The verbatim instruction-plus-demonstrations block.
    pub fn demos_text(&self) -> &'static str {
        match (self.demo_source, self.mode) {
            (DemoSource::Matched, PromptMode::AllBoxes) => DEMOS_MATCHED_ALL_BOXES,
            (DemoSource::Matched, PromptMode::PerBox) => DEMOS_MATCHED_PER_BOX,
            (DemoSource::Altform, _) => DEMOS_ALTFORM_ALL_BOXES,
        }
    }
}

/// One prompt, keyed like its example so completions can be joined back.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PromptRecord {
    pub key: String,
    pub prompt: String,
}

/// Assemble the prompt for one example. All-boxes prompts always ask from
/// "Box 0 contains" and cover every box in one statement; per-box prompts ask
/// with the example's own query prefix. The demonstrations never vary with
/// the example.
pub fn build_prompt(spec: PromptSpec, example: &ClozeExample) -> Result<String, PromptError> {
    if spec.mode == PromptMode::PerBox && spec.demo_source == DemoSource::Altform {
        return Err(PromptError::AltFormPerBox);
    }
    if !example.query_prefix.starts_with("Box ") {
        return Err(PromptError::NonCanonicalExample {
            key: example.key(),
            prefix: example.query_prefix.clone(),
        });
    }
    let query = match spec.mode {
        PromptMode::AllBoxes => "Box 0 contains",
        PromptMode::PerBox => example.query_prefix.as_str(),
    };
    Ok(format!(
        "{}\nDescription: {}\nStatement: {}",
        spec.demos_text(),
        example.description,
        query
    ))
}

pub fn build_prompts(
    spec: PromptSpec,
    examples: &[ClozeExample],
) -> Result<Vec<PromptRecord>, PromptError> {
    examples
        .iter()
        .map(|e| Ok(PromptRecord { key: e.key(), prompt: build_prompt(spec, e)? }))
        .collect()
}
