//! C ABI over the corpus synthesizer, for bindings from other languages.
//!
//! Conventions, mirrored in `include/boxtrack.h` (the header is maintained
//! by hand and pinned to this file by the ABI tests):
//!
//! - A corpus is an opaque handle created by [`bt_corpus_generate`] and
//!   released by [`bt_corpus_free`].
//! - Every fallible call returns a status code; `BT_OK` (0) means the `out`
//!   parameter was written. [`bt_status_name`] names any code.
//! - Structured data crosses the boundary as JSON in NUL-terminated,
//!   heap-allocated strings; the caller releases them with
//!   [`bt_string_free`]. Strings returned as `const char *` are static and
//!   must not be freed.
//! - Passing a pointer that is neither NULL nor a live value from this
//!   library is undefined behavior, as is releasing a handle twice.

use boxtrack::lexicon::Lexicon;
use boxtrack::prompt::{build_prompt, DemoSource, PromptMode, PromptSpec};
use boxtrack::render::build_cloze_examples;
use boxtrack::sampler::generate_corpus;
use boxtrack::scenario::Scenario;
use boxtrack::world::WorldConfig;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;

pub const BT_OK: i32 = 0;
pub const BT_NULL_ARGUMENT: i32 = 1;
pub const BT_INVALID_ARGUMENT: i32 = 2;
pub const BT_INVALID_UTF8: i32 = 3;
pub const BT_INDEX_OUT_OF_RANGE: i32 = 4;
pub const BT_GENERATION_FAILED: i32 = 5;
pub const BT_RENDER_FAILED: i32 = 6;

/// Opaque corpus handle: a world configuration plus its sampled scenarios.
pub struct BtCorpus {
    cfg: WorldConfig,
    scenarios: Vec<Scenario>,
}

/// Library version as a static NUL-terminated string; do not free.
#[no_mangle]
pub extern "C" fn bt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Static name of a status code; "unknown" for values not defined here.
#[no_mangle]
pub extern "C" fn bt_status_name(status: i32) -> *const c_char {
    let name: &'static str = match status {
        BT_OK => "ok\0",
        BT_NULL_ARGUMENT => "null argument\0",
        BT_INVALID_ARGUMENT => "invalid argument\0",
        BT_INVALID_UTF8 => "invalid utf-8\0",
        BT_INDEX_OUT_OF_RANGE => "index out of range\0",
        BT_GENERATION_FAILED => "generation failed\0",
        BT_RENDER_FAILED => "render failed\0",
        _ => "unknown\0",
    };
    name.as_ptr() as *const c_char
}

/// Sample `count` scenarios of the standard world under `seed` and hand
/// back an owned corpus in `*out`.
#[no_mangle]
pub extern "C" fn bt_corpus_generate(count: usize, seed: u64, out: *mut *mut BtCorpus) -> i32 {
    if out.is_null() {
        return BT_NULL_ARGUMENT;
    }
    let cfg = WorldConfig::standard();
    match generate_corpus(&cfg, count, seed) {
        Ok(scenarios) => {
            let corpus = Box::new(BtCorpus { cfg, scenarios });
            unsafe { *out = Box::into_raw(corpus) };
            BT_OK
        }
        Err(_) => BT_GENERATION_FAILED,
    }
}

/// Release a corpus handle. NULL is accepted and ignored.
#[no_mangle]
pub extern "C" fn bt_corpus_free(corpus: *mut BtCorpus) {
    if !corpus.is_null() {
        drop(unsafe { Box::from_raw(corpus) });
    }
}

/// Number of scenarios in the corpus.
#[no_mangle]
pub extern "C" fn bt_corpus_len(corpus: *const BtCorpus, out: *mut usize) -> i32 {
    if corpus.is_null() || out.is_null() {
        return BT_NULL_ARGUMENT;
    }
    unsafe { *out = (*corpus).scenarios.len() };
    BT_OK
}

fn give_string(text: String, out: *mut *mut c_char) -> i32 {
    match CString::new(text) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            BT_OK
        }
        // JSON from serde never embeds NUL; defensive only.
        Err(_) => BT_INVALID_UTF8,
    }
}

/// Scenario `index` serialized as a JSON object; free with
/// [`bt_string_free`].
#[no_mangle]
pub extern "C" fn bt_scenario_json(
    corpus: *const BtCorpus,
    index: usize,
    out: *mut *mut c_char,
) -> i32 {
    if corpus.is_null() || out.is_null() {
        return BT_NULL_ARGUMENT;
    }
    let corpus = unsafe { &*corpus };
    let Some(scenario) = corpus.scenarios.get(index) else {
        return BT_INDEX_OUT_OF_RANGE;
    };
    give_string(serde_json::to_string(scenario).expect("scenario serializes"), out)
}

/// All cloze examples of scenario `index`, rendered under the named lexicon
/// ("base", "altform", or "base-rare"), as a JSON array; free with
/// [`bt_string_free`].
#[no_mangle]
pub extern "C" fn bt_examples_json(
    corpus: *const BtCorpus,
    index: usize,
    lexicon: *const c_char,
    out: *mut *mut c_char,
) -> i32 {
    if corpus.is_null() || lexicon.is_null() || out.is_null() {
        return BT_NULL_ARGUMENT;
    }
    let corpus = unsafe { &*corpus };
    let Some(scenario) = corpus.scenarios.get(index) else {
        return BT_INDEX_OUT_OF_RANGE;
    };
    let Ok(name) = unsafe { CStr::from_ptr(lexicon) }.to_str() else {
        return BT_INVALID_UTF8;
    };
    let Ok(lex) = Lexicon::by_name(name) else {
        return BT_INVALID_ARGUMENT;
    };
    match build_cloze_examples(scenario, &corpus.cfg, &lex) {
        Ok(examples) => {
            give_string(serde_json::to_string(&examples).expect("examples serialize"), out)
        }
        Err(_) => BT_RENDER_FAILED,
    }
}

/// Assemble the few-shot prompt for one example (a JSON object as produced
/// by [`bt_examples_json`]). `mode` is 0 for all-boxes or 1 for per-box;
/// `demos` is 0 for matched or 1 for the alternative form. Free the prompt
/// with [`bt_string_free`].
#[no_mangle]
pub extern "C" fn bt_prompt(
    mode: i32,
    demos: i32,
    example_json: *const c_char,
    out: *mut *mut c_char,
) -> i32 {
    if example_json.is_null() || out.is_null() {
        return BT_NULL_ARGUMENT;
    }
    let mode = match mode {
        0 => PromptMode::AllBoxes,
        1 => PromptMode::PerBox,
        _ => return BT_INVALID_ARGUMENT,
    };
    let demos = match demos {
        0 => DemoSource::Matched,
        1 => DemoSource::Altform,
        _ => return BT_INVALID_ARGUMENT,
    };
    let Ok(spec) = PromptSpec::new(mode, demos) else {
        return BT_INVALID_ARGUMENT;
    };
    let Ok(json) = unsafe { CStr::from_ptr(example_json) }.to_str() else {
        return BT_INVALID_UTF8;
    };
    let Ok(example) = serde_json::from_str(json) else {
        return BT_INVALID_ARGUMENT;
    };
    match build_prompt(spec, &example) {
        Ok(prompt) => give_string(prompt, out),
        Err(_) => BT_INVALID_ARGUMENT,
    }
}

/// Release a string returned through a `char **out` parameter. NULL is
/// accepted and ignored.
#[no_mangle]
pub extern "C" fn bt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}
