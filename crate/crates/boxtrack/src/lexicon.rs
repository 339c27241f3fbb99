//! Surface vocabularies: box labels, sentence templates, and noun lists.
//!
//! A lexicon pairs a template *style* (how boxes are labelled and operations
//! phrased) with a surface noun list that is index-aligned to the canonical
//! inventory in [`WorldConfig`]. The two bundled styles are deliberately
//! disjoint down to the word level — aside from "the" and "into" and the
//! fixed cloze scaffolding ("contains"/"nothing"), they share no content
//! vocabulary — so corpora rendered under different lexicons can test
//! transfer rather than memorized phrasing.

use crate::world::{Operation, WorldConfig};
use thiserror::Error;

/// Frequent everyday nouns; the default canonical inventory.
const BNC_NOUNS: &str = include_str!("../data/nouns_bnc.txt");
/// Deliberately infrequent nouns, disjoint from the frequent list.
const RARE_NOUNS: &str = include_str!("../data/nouns_rare.txt");

pub fn bnc_nouns() -> Vec<String> {
    BNC_NOUNS.lines().map(str::to_string).collect()
}

pub fn rare_nouns() -> Vec<String> {
    RARE_NOUNS.lines().map(str::to_string).collect()
}

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("noun {noun:?} is not in the canonical inventory")]
    UnknownNoun { noun: String },
    #[error("canonical index {index} has no surface noun in lexicon {lexicon:?}")]
    NounRange { index: usize, lexicon: String },
    #[error("box {index} has no label under the {style:?} style (max {max})")]
    LabelRange { index: usize, style: Style, max: usize },
    #[error("no lexicon named {name:?} (expected base, altform, or base-rare)")]
    UnknownLexicon { name: String },
}

// ---- Styles ----

/// How a surface form labels boxes and phrases state and operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Style {
    /// "Box 0" … numeric labels; contains/move/put/remove phrasing.
    Base,
    /// "Container A" … letter labels; is-in/pick-up/place/take phrasing.
    AltForm,
}

impl Style {
    pub fn box_label(&self, index: usize) -> Result<String, RenderError> {
        match self {
            Style::Base => Ok(format!("Box {index}")),
            Style::AltForm => {
                let letters = 26;
                if index >= letters {
                    return Err(RenderError::LabelRange { index, style: *self, max: letters - 1 });
                }
                Ok(format!("Container {}", char::from(b'A' + index as u8)))
            }
        }
    }

    /// Words the style itself can emit in descriptions and statements,
    /// lowercased; used by the lexical-overlap audit.
    pub fn template_words(&self) -> Vec<&'static str> {
        match self {
            Style::Base => vec![
                "box", "contains", "the", "and", "nothing", "move", "from", "to", "put", "into",
                "remove",
            ],
            Style::AltForm => vec![
                "container", "the", "and", "nothing", "is", "are", "in", "take", "out", "of",
                "place", "inside", "pick", "up", "it", "them", "into", "contains",
            ],
        }
    }
}

// ---- Lexicons ----

/// A complete surface vocabulary: a style plus surface nouns index-aligned
/// with the canonical inventory.
#[derive(Debug, Clone)]
pub struct Lexicon {
    name: String,
    style: Style,
    nouns: Vec<String>,
}

impl Lexicon {
    /// Base style over the frequent nouns; surface forms equal canonical ones.
    pub fn base() -> Self {
        Lexicon { name: "base".into(), style: Style::Base, nouns: bnc_nouns() }
    }

    /// Alternative style over the rare nouns.
    pub fn altform() -> Self {
        Lexicon { name: "altform".into(), style: Style::AltForm, nouns: rare_nouns() }
    }

    /// Base style but rare nouns: varies only the vocabulary, not phrasing.
    pub fn base_rare() -> Self {
        Lexicon { name: "base-rare".into(), style: Style::Base, nouns: rare_nouns() }
    }

    pub fn by_name(name: &str) -> Result<Self, RenderError> {
        match name {
            "base" => Ok(Self::base()),
            "altform" => Ok(Self::altform()),
            "base-rare" => Ok(Self::base_rare()),
            other => Err(RenderError::UnknownLexicon { name: other.into() }),
        }
    }

    /// Arbitrary combination, for tests and custom corpora.
    pub fn custom(name: &str, style: Style, nouns: Vec<String>) -> Self {
        Lexicon { name: name.into(), style, nouns }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn style(&self) -> Style {
        self.style
    }

    pub fn nouns(&self) -> &[String] {
        &self.nouns
    }

    /// Surface form of a canonical noun under this lexicon.
    pub fn surface<'a>(&'a self, cfg: &WorldConfig, noun: &str) -> Result<&'a str, RenderError> {
        let index = cfg
            .object_index(noun)
            .ok_or_else(|| RenderError::UnknownNoun { noun: noun.into() })?;
        self.nouns
            .get(index)
            .map(String::as_str)
            .ok_or_else(|| RenderError::NounRange { index, lexicon: self.name.clone() })
    }

    pub fn box_label(&self, index: usize) -> Result<String, RenderError> {
        self.style.box_label(index)
    }

    /// "Box 4 contains" / "Container E contains" — the cloze query prefix.
    pub fn statement_prefix(&self, index: usize) -> Result<String, RenderError> {
        Ok(format!("{} contains", self.box_label(index)?))
    }

    /// "the egg and the mirror and the sheet"
    pub fn noun_list(&self, surface: &[&str]) -> String {
        surface
            .iter()
            .map(|o| format!("the {o}"))
            .collect::<Vec<_>>()
            .join(" and ")
    }

    /// One clause of an initial-state description, no capitalization applied.
    pub fn initial_clause(&self, index: usize, surface: &[&str]) -> Result<String, RenderError> {
        let label = self.box_label(index)?;
        Ok(match self.style {
            Style::Base => {
                if surface.is_empty() {
                    format!("{label} contains nothing")
                } else {
                    format!("{label} contains {}", self.noun_list(surface))
                }
            }
            Style::AltForm => {
                if surface.is_empty() {
                    format!("nothing is in {label}")
                } else {
                    let copula = if surface.len() == 1 { "is" } else { "are" };
                    format!("{} {copula} in {label}", self.noun_list(surface))
                }
            }
        })
    }

    /// A full operation sentence, capitalized and period-terminated.
    pub fn op_sentence(&self, cfg: &WorldConfig, op: &Operation) -> Result<String, RenderError> {
        let surface: Vec<&str> = op
            .objs()
            .iter()
            .map(|o| self.surface(cfg, o))
            .collect::<Result<_, _>>()?;
        let list = self.noun_list(&surface);
        Ok(match (self.style, op) {
            (Style::Base, Operation::Put { dst, .. }) => {
                format!("Put {list} into {}.", self.box_label(*dst)?)
            }
            (Style::Base, Operation::Remove { src, .. }) => {
                format!("Remove {list} from {}.", self.box_label(*src)?)
            }
            (Style::Base, Operation::Move { src, dst, .. }) => {
                format!("Move {list} from {} to {}.", self.box_label(*src)?, self.box_label(*dst)?)
            }
            (Style::AltForm, Operation::Put { dst, .. }) => {
                format!("Place {list} inside {}.", self.box_label(*dst)?)
            }
            (Style::AltForm, Operation::Remove { src, .. }) => {
                format!("Take {list} out of {}.", self.box_label(*src)?)
            }
            (Style::AltForm, Operation::Move { src, dst, .. }) => {
                let pronoun = if surface.len() == 1 { "it" } else { "them" };
                format!(
                    "Pick up {list} in {} and place {pronoun} into {}.",
                    self.box_label(*src)?,
                    self.box_label(*dst)?
                )
            }
        })
    }
}

// ---- Tokenization ----

/// Lowercased alphanumeric-or-hyphen tokens, hyphens preserved inside a token
/// (so "flav-r-straw" stays whole). Everything else separates tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() || ch == '-' {
            current.extend(ch.to_lowercase());
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    // A bare hyphen run is punctuation, not a token.
    tokens.retain(|t| t.chars().any(char::is_alphanumeric));
    for t in &mut tokens {
        let trimmed = t.trim_matches('-');
        if trimmed.len() != t.len() {
            *t = trimmed.to_string();
        }
    }
    tokens
}

/// Whether a token is purely alphabetic (hyphens allowed); numerals are not.
pub fn is_alphabetic_token(token: &str) -> bool {
    !token.is_empty() && token.chars().all(|c| c.is_alphabetic() || c == '-')
}

/// Closed-class function words excluded from content-overlap audits.
pub const FUNCTION_WORDS: &[&str] = &[
    "the", "a", "an", "and", "or", "is", "are", "it", "them", "in", "into", "inside", "of", "out",
    "from", "to", "up", "their", "this", "that",
];

/// Cloze scaffolding every statement shares regardless of lexicon.
pub const SCAFFOLD_WORDS: &[&str] = &["contains", "nothing"];

/// Content tokens of a text: alphabetic, non-function, non-scaffold.
pub fn content_tokens(text: &str) -> std::collections::BTreeSet<String> {
    tokenize(text)
        .into_iter()
        .filter(|t| is_alphabetic_token(t))
        .filter(|t| !FUNCTION_WORDS.contains(&t.as_str()))
        .filter(|t| !SCAFFOLD_WORDS.contains(&t.as_str()))
        .collect()
}
