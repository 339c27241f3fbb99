//! Box-world entity tracking: corpus synthesis, prompting, and evaluation.
//!
//! The pipeline runs in stages, each usable on its own:
//!
//! 1. [`sampler`] draws seeded scenarios over a [`world`] configuration;
//! 2. [`render`] turns them into cloze examples under a [`lexicon`];
//! 3. [`split`] partitions scenarios into leakage-free train/dev/test sets;
//! 4. [`prompt`] assembles few-shot prompts around test examples;
//! 5. [`runner`] collects completions from an HTTP endpoint (with a local
//!    [`mock`] stand-in for tests);
//! 6. [`scorer`] parses and judges completions, and [`report`] stratifies
//!    accuracy by how much history the probed box has.
//!
//! [`pipeline`] ties the stages together behind a TOML config, and the
//! `boxtrack` binary exposes each stage as a subcommand.

pub mod jsonl;
pub mod lexicon;
pub mod mock;
pub mod pipeline;
pub mod prompt;
pub mod render;
pub mod report;
pub mod runner;
pub mod sampler;
pub mod scenario;
pub mod scorer;
pub mod split;
pub mod world;
