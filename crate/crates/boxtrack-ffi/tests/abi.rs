//! ABI smoke tests: exercise the exported functions exactly as a foreign
//! caller would, pin the hand-maintained header to the exported surface,
//! and compile and run a real C client against the static library.

use boxtrack::render::ClozeExample;
use boxtrack::scenario::Scenario;
use boxtrack_ffi::*;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::path::PathBuf;
use std::ptr;

fn take_string(ptr: *mut c_char) -> String {
    assert!(!ptr.is_null());
    let text = unsafe { CStr::from_ptr(ptr) }.to_str().unwrap().to_string();
    bt_string_free(ptr);
    text
}

#[test]
fn round_trip_through_the_c_interface() {
    let mut corpus: *mut BtCorpus = ptr::null_mut();
    assert_eq!(bt_corpus_generate(3, 42, &mut corpus), BT_OK);
    assert!(!corpus.is_null());

    let mut len = 0usize;
    assert_eq!(bt_corpus_len(corpus, &mut len), BT_OK);
    assert_eq!(len, 3);

    let mut json: *mut c_char = ptr::null_mut();
    assert_eq!(bt_scenario_json(corpus, 2, &mut json), BT_OK);
    let scenario: Scenario = serde_json::from_str(&take_string(json)).unwrap();
    assert_eq!(scenario.id, 2);
    assert_eq!(scenario.ops.len(), 12);

    let lexicon = CString::new("base").unwrap();
    let mut json: *mut c_char = ptr::null_mut();
    assert_eq!(bt_examples_json(corpus, 0, lexicon.as_ptr(), &mut json), BT_OK);
    let examples: Vec<ClozeExample> = serde_json::from_str(&take_string(json)).unwrap();
    assert_eq!(examples.len(), 91);

    let example_json = CString::new(serde_json::to_string(&examples[0]).unwrap()).unwrap();
    let mut prompt: *mut c_char = ptr::null_mut();
    assert_eq!(bt_prompt(0, 0, example_json.as_ptr(), &mut prompt), BT_OK);
    let prompt = take_string(prompt);
    assert!(prompt.starts_with("Given the description after"));
    assert!(prompt.ends_with("Statement: Box 0 contains"));

    bt_corpus_free(corpus);
    bt_corpus_free(ptr::null_mut());
    bt_string_free(ptr::null_mut());

    let version = unsafe { CStr::from_ptr(bt_version()) }.to_str().unwrap();
    assert_eq!(version, env!("CARGO_PKG_VERSION"));
}

#[test]
fn status_codes_classify_bad_inputs() {
    assert_eq!(bt_corpus_generate(1, 0, ptr::null_mut()), BT_NULL_ARGUMENT);

    let mut corpus: *mut BtCorpus = ptr::null_mut();
    assert_eq!(bt_corpus_generate(1, 9, &mut corpus), BT_OK);

    let mut out: *mut c_char = ptr::null_mut();
    assert_eq!(bt_scenario_json(corpus, 5, &mut out), BT_INDEX_OUT_OF_RANGE);
    assert_eq!(bt_scenario_json(ptr::null(), 0, &mut out), BT_NULL_ARGUMENT);

    let unknown = CString::new("klingon").unwrap();
    assert_eq!(
        bt_examples_json(corpus, 0, unknown.as_ptr(), &mut out),
        BT_INVALID_ARGUMENT
    );
    let garbled = [0xFFu8, 0xFE, 0x00];
    assert_eq!(
        bt_examples_json(corpus, 0, garbled.as_ptr() as *const c_char, &mut out),
        BT_INVALID_UTF8
    );

    let example = CString::new("{\"not\": \"an example\"}").unwrap();
    assert_eq!(bt_prompt(0, 0, example.as_ptr(), &mut out), BT_INVALID_ARGUMENT);
    assert_eq!(bt_prompt(7, 0, example.as_ptr(), &mut out), BT_INVALID_ARGUMENT);
    // Per-box prompting with alternative-form demonstrations is undefined
    // in the task design and refused outright.
    assert_eq!(bt_prompt(1, 1, example.as_ptr(), &mut out), BT_INVALID_ARGUMENT);

    let name = |code: i32| {
        unsafe { CStr::from_ptr(bt_status_name(code)) }.to_str().unwrap().to_string()
    };
    assert_eq!(name(BT_OK), "ok");
    assert_eq!(name(BT_INDEX_OUT_OF_RANGE), "index out of range");
    assert_eq!(name(999), "unknown");

    bt_corpus_free(corpus);
}

#[test]
fn header_declares_the_full_exported_surface() {
    let header_path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/boxtrack.h");
    let header = std::fs::read_to_string(header_path).unwrap();

    for symbol in [
        "bt_version",
        "bt_status_name",
        "bt_corpus_generate",
        "bt_corpus_free",
        "bt_corpus_len",
        "bt_scenario_json",
        "bt_examples_json",
        "bt_prompt",
        "bt_string_free",
    ] {
        assert!(header.contains(symbol), "header lacks {symbol}");
    }
    for (name, value) in [
        ("BT_OK", BT_OK),
        ("BT_NULL_ARGUMENT", BT_NULL_ARGUMENT),
        ("BT_INVALID_ARGUMENT", BT_INVALID_ARGUMENT),
        ("BT_INVALID_UTF8", BT_INVALID_UTF8),
        ("BT_INDEX_OUT_OF_RANGE", BT_INDEX_OUT_OF_RANGE),
        ("BT_GENERATION_FAILED", BT_GENERATION_FAILED),
        ("BT_RENDER_FAILED", BT_RENDER_FAILED),
    ] {
        let line = format!("#define {name} {value}");
        assert!(header.contains(&line), "header lacks or mismatches: {line}");
    }
}

/// Compile and run an actual C program against the header and the static
/// library, proving the ABI holds outside Rust.
#[test]
fn c_client_links_and_runs() {
    const CLIENT: &str = r#"
#include <boxtrack.h>
#include <stdio.h>
#include <string.h>

int main(void) {
    BtCorpus *corpus = NULL;
    if (bt_corpus_generate(2, 42, &corpus) != BT_OK) return 1;

    size_t len = 0;
    if (bt_corpus_len(corpus, &len) != BT_OK || len != 2) return 2;

    char *scenario = NULL;
    if (bt_scenario_json(corpus, 1, &scenario) != BT_OK) return 3;
    if (strstr(scenario, "\"signature\"") == NULL) return 4;
    bt_string_free(scenario);

    char *examples = NULL;
    if (bt_examples_json(corpus, 0, "base", &examples) != BT_OK) return 5;
    if (strstr(examples, "\"query_prefix\"") == NULL) return 6;
    bt_string_free(examples);

    const char *example =
        "{\"scenario_id\":0,\"t\":0,\"box\":0,"
        "\"description\":\"Box 0 contains the egg.\","
        "\"query_prefix\":\"Box 0 contains\",\"gold\":[\"egg\"],"
        "\"meta\":{\"ops_affecting\":0,\"changed\":false,\"lexicon\":\"base\"}}";
    char *prompt = NULL;
    if (bt_prompt(0, 0, example, &prompt) != BT_OK) return 7;
    if (strncmp(prompt, "Given the description", 21) != 0) return 8;
    bt_string_free(prompt);

    if (bt_examples_json(corpus, 9, "base", &examples) != BT_INDEX_OUT_OF_RANGE)
        return 9;

    bt_corpus_free(corpus);
    printf("c client ok: %s\n", bt_version());
    return 0;
}
"#;

    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let include = manifest.join("include");
    // Test builds drop the archive next to this executable in deps/;
    // plain builds put it one level up.
    let exe = std::env::current_exe().unwrap();
    let deps = exe.parent().unwrap();
    let archive = [deps.join("libboxtrack_ffi.a"), deps.join("../libboxtrack_ffi.a")]
        .into_iter()
        .find(|p| p.exists())
        .expect("static library not built alongside the tests");

    let dir = tempfile::TempDir::new().unwrap();
    let source = dir.path().join("client.c");
    std::fs::write(&source, CLIENT).unwrap();
    let binary = dir.path().join("client");

    let compile = std::process::Command::new("cc")
        .arg(&source)
        .arg("-I")
        .arg(&include)
        .arg(archive)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&binary)
        .output()
        .expect("cc is available");
    assert!(
        compile.status.success(),
        "compile failed: {}",
        String::from_utf8_lossy(&compile.stderr)
    );

    let run = std::process::Command::new(&binary).output().unwrap();
    assert!(
        run.status.success(),
        "client exited {:?}: {}",
        run.status.code(),
        String::from_utf8_lossy(&run.stdout)
    );
    assert!(String::from_utf8_lossy(&run.stdout).contains("c client ok"));
}
