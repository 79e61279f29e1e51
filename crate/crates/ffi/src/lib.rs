//! C ABI for the concession-analysis toolkit.
//!
//! Conventions: every fallible function returns a `concede_status` code and
//! writes its result through out-pointers; handles are opaque and freed
//! with their matching `_free` function; strings returned through
//! out-pointers are heap-allocated and released with
//! [`concede_string_free`]. The authoritative prototypes live in
//! `include/concede.h`, which is kept in sync with this file by a test.

use std::collections::BTreeSet;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use concede_core::corpus::{Label, Marker, MarkerInstance, Split};
use concede_core::features::{
    featurize, FeatureContext, LexiconSet, Vocabulary,
};
use concede_core::patterns::{any_match, conceding_span, load_curated, LexicalPattern};
use concede_core::svm::{decision, SvmModel};
use concede_core::textproc::{jaccard, tokenize, StopwordList};
use concede_core::{eval, pipeline};

pub const CONCEDE_OK: i32 = 0;
pub const CONCEDE_ERR_NULL_ARG: i32 = 1;
pub const CONCEDE_ERR_UTF8: i32 = 2;
pub const CONCEDE_ERR_PARSE: i32 = 3;
pub const CONCEDE_ERR_IO: i32 = 4;
pub const CONCEDE_ERR_INVALID: i32 = 5;
pub const CONCEDE_ERR_PANIC: i32 = 6;

thread_local! {
    static LAST_ERROR: std::cell::RefCell<Option<CString>> =
        const { std::cell::RefCell::new(None) };
}

fn set_error(msg: &str) {
    let cleaned = msg.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(cleaned).ok();
    });
}

fn guard<F: FnOnce() -> i32>(f: F) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(code) => code,
        Err(_) => {
            set_error("internal panic");
            CONCEDE_ERR_PANIC
        }
    }
}

unsafe fn required_str<'a>(ptr: *const c_char) -> Result<&'a str, i32> {
    if ptr.is_null() {
        set_error("required argument is null");
        return Err(CONCEDE_ERR_NULL_ARG);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("argument is not valid UTF-8");
        CONCEDE_ERR_UTF8
    })
}

unsafe fn optional_str<'a>(ptr: *const c_char) -> Result<Option<&'a str>, i32> {
    if ptr.is_null() {
        return Ok(None);
    }
    required_str(ptr).map(Some)
}

fn give_string(s: String, out: *mut *mut c_char) -> i32 {
    match CString::new(s.replace('\0', " ")) {
        Ok(cs) => {
            unsafe { *out = cs.into_raw() };
            CONCEDE_OK
        }
        Err(_) => {
            set_error("result contained an interior NUL");
            CONCEDE_ERR_INVALID
        }
    }
}

/// Version of the library, as a static string (do not free).
#[no_mangle]
pub extern "C" fn concede_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const c_char
}

/// Copy of the last error message on this thread, or NULL when none.
/// Free with `concede_string_free`.
#[no_mangle]
pub extern "C" fn concede_last_error() -> *mut c_char {
    LAST_ERROR.with(|slot| match &*slot.borrow() {
        Some(msg) => msg.clone().into_raw(),
        None => ptr::null_mut(),
    })
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must be a pointer previously returned through one of this library's
/// string out-parameters (or `concede_last_error`), not yet freed.
#[no_mangle]
pub unsafe extern "C" fn concede_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Split text into sentences; writes a JSON array of strings.
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out_json` a valid
/// writable pointer.
#[no_mangle]
pub unsafe extern "C" fn concede_segment_sentences(
    text: *const c_char,
    out_json: *mut *mut c_char,
) -> i32 {
    guard(|| {
        if out_json.is_null() {
            set_error("out_json is null");
            return CONCEDE_ERR_NULL_ARG;
        }
        let text = match required_str(text) {
            Ok(t) => t,
            Err(code) => return code,
        };
        let sentences = concede_core::corpus::segment_sentences(text);
        give_string(serde_json::to_string(&sentences).unwrap(), out_json)
    })
}

/// Tokenize text; writes a JSON array of lowercase tokens.
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out_json` a valid
/// writable pointer.
#[no_mangle]
pub unsafe extern "C" fn concede_tokenize(
    text: *const c_char,
    out_json: *mut *mut c_char,
) -> i32 {
    guard(|| {
        if out_json.is_null() {
            set_error("out_json is null");
            return CONCEDE_ERR_NULL_ARG;
        }
        let text = match required_str(text) {
            Ok(t) => t,
            Err(code) => return code,
        };
        let tokens = tokenize(text).tokens;
        give_string(serde_json::to_string(&tokens).unwrap(), out_json)
    })
}

/// Jaccard similarity of two texts after tokenization and stopword
/// removal (builtin stopword list).
///
/// # Safety
/// `a` and `b` must be valid NUL-terminated strings and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn concede_jaccard(
    a: *const c_char,
    b: *const c_char,
    out: *mut f64,
) -> i32 {
    guard(|| {
        if out.is_null() {
            set_error("out is null");
            return CONCEDE_ERR_NULL_ARG;
        }
        let a = match required_str(a) {
            Ok(t) => t,
            Err(code) => return code,
        };
        let b = match required_str(b) {
            Ok(t) => t,
            Err(code) => return code,
        };
        let stopwords = StopwordList::builtin();
        let ta = tokenize(a);
        let tb = tokenize(b);
        let v = jaccard(
            ta.tokens.iter().map(String::as_str),
            tb.tokens.iter().map(String::as_str),
            &stopwords,
        );
        *out = v;
        CONCEDE_OK
    })
}

/// Pearson chi-square independence test over a row-major counts table.
///
/// # Safety
/// `counts` must point to `rows * cols` u64 values; `out_stat` and `out_p`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn concede_chi2_independence(
    counts: *const u64,
    rows: usize,
    cols: usize,
    out_stat: *mut f64,
    out_p: *mut f64,
) -> i32 {
    guard(|| {
        if counts.is_null() || out_stat.is_null() || out_p.is_null() {
            set_error("null pointer argument");
            return CONCEDE_ERR_NULL_ARG;
        }
        let flat = std::slice::from_raw_parts(counts, rows * cols);
        let table: Vec<Vec<u64>> = flat.chunks(cols).map(|r| r.to_vec()).collect();
        match eval::chi2_independence(&table) {
            Ok((stat, p)) => {
                *out_stat = stat;
                *out_p = p;
                CONCEDE_OK
            }
            Err(e) => {
                set_error(&e.to_string());
                CONCEDE_ERR_INVALID
            }
        }
    })
}

/// Fleiss kappa over a row-major items-by-categories vote table.
///
/// # Safety
/// `counts` must point to `items * categories` u32 values; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn concede_fleiss_kappa(
    counts: *const u32,
    items: usize,
    categories: usize,
    out: *mut f64,
) -> i32 {
    guard(|| {
        if counts.is_null() || out.is_null() {
            set_error("null pointer argument");
            return CONCEDE_ERR_NULL_ARG;
        }
        let flat = std::slice::from_raw_parts(counts, items * categories);
        let table: Vec<Vec<u32>> = flat.chunks(categories).map(|r| r.to_vec()).collect();
        match eval::fleiss_kappa(&table) {
            Ok(kappa) => {
                *out = kappa;
                CONCEDE_OK
            }
            Err(e) => {
                set_error(&e.to_string());
                CONCEDE_ERR_INVALID
            }
        }
    })
}

/// Opaque handle over a loaded pattern lexicon.
pub struct ConcedePatterns {
    patterns: Vec<LexicalPattern>,
    lexicons: LexiconSet,
}

/// Load a curated pattern file into an opaque handle.
///
/// # Safety
/// `path` must be a valid NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn concede_patterns_load(
    path: *const c_char,
    out: *mut *mut ConcedePatterns,
) -> i32 {
    guard(|| {
        if out.is_null() {
            set_error("out is null");
            return CONCEDE_ERR_NULL_ARG;
        }
        let path = match required_str(path) {
            Ok(p) => p,
            Err(code) => return code,
        };
        match load_curated(Path::new(path)) {
            Ok(patterns) => {
                let handle = Box::new(ConcedePatterns {
                    patterns,
                    lexicons: LexiconSet::builtin(),
                });
                *out = Box::into_raw(handle);
                CONCEDE_OK
            }
            Err(e) => {
                set_error(&e.to_string());
                CONCEDE_ERR_PARSE
            }
        }
    })
}

/// Number of patterns in the handle.
///
/// # Safety
/// `handle` must be a live pointer from `concede_patterns_load`.
#[no_mangle]
pub unsafe extern "C" fn concede_patterns_len(handle: *const ConcedePatterns) -> usize {
    if handle.is_null() {
        return 0;
    }
    (*handle).patterns.len()
}

fn build_instance(
    marker: &str,
    sentence: &str,
    prev: Option<&str>,
    next: Option<&str>,
) -> Result<MarkerInstance, i32> {
    let marker: Marker = marker.parse().map_err(|e: String| {
        set_error(&e);
        CONCEDE_ERR_INVALID
    })?;
    let toks = tokenize(sentence);
    let idx = toks
        .tokens
        .iter()
        .position(|t| t == marker.as_str())
        .ok_or_else(|| {
            set_error(&format!("sentence does not contain the marker `{marker}`"));
            CONCEDE_ERR_INVALID
        })?;
    Ok(MarkerInstance {
        id: "ffi".to_string(),
        comment_id: "ffi".to_string(),
        marker,
        sentence: sentence.to_string(),
        prev_sentence: prev.map(str::to_string),
        next_sentence: next.map(str::to_string),
        marker_token_index: idx,
        delta_awarded: false,
        split: Split::Unlabeled,
    })
}

/// Does any pattern match the conceding span of the given marker use?
/// `prev_sentence` may be NULL.
///
/// # Safety
/// `handle` must be live; string arguments must be valid NUL-terminated
/// strings (or NULL where documented); `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn concede_patterns_match(
    handle: *const ConcedePatterns,
    marker: *const c_char,
    sentence: *const c_char,
    prev_sentence: *const c_char,
    out: *mut bool,
) -> i32 {
    guard(|| {
        if handle.is_null() || out.is_null() {
            set_error("null pointer argument");
            return CONCEDE_ERR_NULL_ARG;
        }
        let handle = &*handle;
        let marker = match required_str(marker) {
            Ok(m) => m,
            Err(code) => return code,
        };
        let sentence = match required_str(sentence) {
            Ok(s) => s,
            Err(code) => return code,
        };
        let prev = match optional_str(prev_sentence) {
            Ok(p) => p,
            Err(code) => return code,
        };
        let instance = match build_instance(marker, sentence, prev, None) {
            Ok(i) => i,
            Err(code) => return code,
        };
        let span = conceding_span(&instance);
        *out = any_match(&handle.patterns, &span, &handle.lexicons.negation);
        CONCEDE_OK
    })
}

/// Destroy a pattern handle.
///
/// # Safety
/// `handle` must come from `concede_patterns_load` and not yet be freed.
#[no_mangle]
pub unsafe extern "C" fn concede_patterns_free(handle: *mut ConcedePatterns) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Opaque handle over the trained pattern+classifier combination.
pub struct ConcedeClassifier {
    vocab: Vocabulary,
    selection: BTreeSet<u32>,
    model: SvmModel,
    patterns: Vec<LexicalPattern>,
    lexicons: LexiconSet,
    stopwords: StopwordList,
}

/// Load the artifacts written by `concede train`/`concede selftrain`:
/// vocabulary, selected columns, model, and optionally a curated pattern
/// file (NULL to classify without the pattern override). Prediction over
/// this interface never uses the Jaccard feature (no reply links).
///
/// # Safety
/// Path arguments must be valid NUL-terminated strings (or NULL where
/// documented); `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn concede_classifier_load(
    vocab_path: *const c_char,
    selection_path: *const c_char,
    model_path: *const c_char,
    patterns_path: *const c_char,
    out: *mut *mut ConcedeClassifier,
) -> i32 {
    guard(|| {
        if out.is_null() {
            set_error("out is null");
            return CONCEDE_ERR_NULL_ARG;
        }
        let vocab_path = match required_str(vocab_path) {
            Ok(p) => p,
            Err(code) => return code,
        };
        let selection_path = match required_str(selection_path) {
            Ok(p) => p,
            Err(code) => return code,
        };
        let model_path = match required_str(model_path) {
            Ok(p) => p,
            Err(code) => return code,
        };
        let patterns_path = match optional_str(patterns_path) {
            Ok(p) => p,
            Err(code) => return code,
        };

        fn load_json<T: serde::de::DeserializeOwned>(path: &str) -> Result<T, (i32, String)> {
            let text = std::fs::read_to_string(path)
                .map_err(|e| (CONCEDE_ERR_IO, format!("{path}: {e}")))?;
            serde_json::from_str(&text).map_err(|e| (CONCEDE_ERR_PARSE, format!("{path}: {e}")))
        }

        let vocab: Vocabulary = match load_json(vocab_path) {
            Ok(v) => v,
            Err((code, msg)) => {
                set_error(&msg);
                return code;
            }
        };
        let selection: Vec<u32> = match load_json(selection_path) {
            Ok(v) => v,
            Err((code, msg)) => {
                set_error(&msg);
                return code;
            }
        };
        let model: SvmModel = match load_json(model_path) {
            Ok(v) => v,
            Err((code, msg)) => {
                set_error(&msg);
                return code;
            }
        };
        if model.vocabulary_version != vocab.version {
            set_error(&format!(
                "model was trained against vocabulary {}, file holds {}",
                model.vocabulary_version, vocab.version
            ));
            return CONCEDE_ERR_INVALID;
        }
        let patterns = match patterns_path {
            Some(p) => match load_curated(Path::new(p)) {
                Ok(patterns) => patterns,
                Err(e) => {
                    set_error(&e.to_string());
                    return CONCEDE_ERR_PARSE;
                }
            },
            None => Vec::new(),
        };
        let handle = Box::new(ConcedeClassifier {
            vocab,
            selection: selection.into_iter().collect(),
            model,
            patterns,
            lexicons: LexiconSet::builtin(),
            stopwords: StopwordList::builtin(),
        });
        *out = Box::into_raw(handle);
        CONCEDE_OK
    })
}

/// Classify one marker use. `prev_sentence`/`next_sentence` may be NULL.
/// Writes 1 for arg_c and 0 for other into `out_label`, the raw decision
/// value into `out_decision`, and whether a curated pattern forced the
/// label into `out_pattern_hit`.
///
/// # Safety
/// `handle` must be live; string arguments valid (or NULL where
/// documented); out-pointers writable.
#[no_mangle]
pub unsafe extern "C" fn concede_classifier_predict(
    handle: *const ConcedeClassifier,
    marker: *const c_char,
    sentence: *const c_char,
    prev_sentence: *const c_char,
    next_sentence: *const c_char,
    out_label: *mut i32,
    out_decision: *mut f64,
    out_pattern_hit: *mut bool,
) -> i32 {
    guard(|| {
        if handle.is_null() || out_label.is_null() || out_decision.is_null() || out_pattern_hit.is_null()
        {
            set_error("null pointer argument");
            return CONCEDE_ERR_NULL_ARG;
        }
        let handle = &*handle;
        let marker = match required_str(marker) {
            Ok(m) => m,
            Err(code) => return code,
        };
        let sentence = match required_str(sentence) {
            Ok(s) => s,
            Err(code) => return code,
        };
        let prev = match optional_str(prev_sentence) {
            Ok(p) => p,
            Err(code) => return code,
        };
        let next = match optional_str(next_sentence) {
            Ok(p) => p,
            Err(code) => return code,
        };
        let instance = match build_instance(marker, sentence, prev, next) {
            Ok(i) => i,
            Err(code) => return code,
        };

        let ctx = FeatureContext {
            lexicons: &handle.lexicons,
            stopwords: &handle.stopwords,
            patterns: if handle.patterns.is_empty() {
                None
            } else {
                Some(&handle.patterns)
            },
        };
        let vector = match featurize(&instance, &[], &handle.vocab, &ctx, false) {
            Ok(v) => v,
            Err(e) => {
                set_error(&e.to_string());
                return CONCEDE_ERR_INVALID;
            }
        };
        let projected = vector.project(&handle.selection);
        let d = match decision(&handle.model, &projected) {
            Ok(d) => d,
            Err(e) => {
                set_error(&e.to_string());
                return CONCEDE_ERR_INVALID;
            }
        };
        let hit = !handle.patterns.is_empty()
            && any_match(
                &handle.patterns,
                &conceding_span(&instance),
                &handle.lexicons.negation,
            );
        let label = if hit || d >= 0.0 {
            Label::ArgC
        } else {
            Label::Other
        };
        *out_label = if label == Label::ArgC { 1 } else { 0 };
        *out_decision = d;
        *out_pattern_hit = hit;
        CONCEDE_OK
    })
}

/// Destroy a classifier handle.
///
/// # Safety
/// `handle` must come from `concede_classifier_load` and not yet be freed.
#[no_mangle]
pub unsafe extern "C" fn concede_classifier_free(handle: *mut ConcedeClassifier) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

// keep the pipeline types reachable so artifact formats stay linked into
// the cdylib and version drift surfaces at compile time
#[doc(hidden)]
pub fn _artifact_formats() -> &'static str {
    pipeline::TOOL_VERSION
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;

    fn cstr(s: &str) -> CString {
        CString::new(s).unwrap()
    }

    unsafe fn take_string(p: *mut c_char) -> String {
        let s = CStr::from_ptr(p).to_str().unwrap().to_string();
        concede_string_free(p);
        s
    }

    #[test]
    fn version_is_static() {
        let v = concede_version();
        let s = unsafe { CStr::from_ptr(v) }.to_str().unwrap();
        assert_eq!(s, env!("CARGO_PKG_VERSION"));
    }

    #[test]
    fn segment_and_tokenize_roundtrip() {
        unsafe {
            let text = cstr("I agree. But costs matter.");
            let mut out: *mut c_char = ptr::null_mut();
            assert_eq!(concede_segment_sentences(text.as_ptr(), &mut out), CONCEDE_OK);
            let json = take_string(out);
            let sentences: Vec<String> = serde_json::from_str(&json).unwrap();
            assert_eq!(sentences, vec!["I agree.", "But costs matter."]);

            let mut out2: *mut c_char = ptr::null_mut();
            assert_eq!(concede_tokenize(text.as_ptr(), &mut out2), CONCEDE_OK);
            let tokens: Vec<String> = serde_json::from_str(&take_string(out2)).unwrap();
            assert!(tokens.contains(&"but".to_string()));
        }
    }

    #[test]
    fn null_arguments_error() {
        unsafe {
            let mut out: *mut c_char = ptr::null_mut();
            assert_eq!(
                concede_segment_sentences(ptr::null(), &mut out),
                CONCEDE_ERR_NULL_ARG
            );
            let msg = concede_last_error();
            assert!(!msg.is_null());
            let text = take_string(msg);
            assert!(text.contains("null"));
        }
    }

    #[test]
    fn chi2_over_ffi() {
        unsafe {
            let counts: [u64; 4] = [10, 20, 20, 10];
            let mut stat = 0.0;
            let mut p = 0.0;
            assert_eq!(
                concede_chi2_independence(counts.as_ptr(), 2, 2, &mut stat, &mut p),
                CONCEDE_OK
            );
            assert!((stat - 20.0 / 3.0).abs() < 1e-9);
            assert!((p - 0.0098).abs() < 1e-4);
        }
    }

    #[test]
    fn kappa_over_ffi() {
        unsafe {
            let counts: [u32; 6] = [5, 0, 0, 5, 5, 0];
            let mut kappa = 0.0;
            assert_eq!(concede_fleiss_kappa(counts.as_ptr(), 3, 2, &mut kappa), CONCEDE_OK);
            assert_eq!(kappa, 1.0);
        }
    }

    #[test]
    fn jaccard_over_ffi() {
        unsafe {
            let a = cstr("dress gorgeous expensive");
            let b = cstr("dress cheap");
            let mut v = 0.0;
            assert_eq!(concede_jaccard(a.as_ptr(), b.as_ptr(), &mut v), CONCEDE_OK);
            assert_eq!(v, 0.25);
        }
    }

    #[test]
    fn pattern_handle_lifecycle() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("patterns.txt");
        std::fs::write(&path, "i agree\nyou are right\n").unwrap();
        unsafe {
            let cpath = cstr(path.to_str().unwrap());
            let mut handle: *mut ConcedePatterns = ptr::null_mut();
            assert_eq!(concede_patterns_load(cpath.as_ptr(), &mut handle), CONCEDE_OK);
            assert_eq!(concede_patterns_len(handle), 2);

            let marker = cstr("but");
            let sentence = cstr("I agree with that, but costs matter");
            let mut hit = false;
            assert_eq!(
                concede_patterns_match(
                    handle,
                    marker.as_ptr(),
                    sentence.as_ptr(),
                    ptr::null(),
                    &mut hit
                ),
                CONCEDE_OK
            );
            assert!(hit);

            let neutral = cstr("The weather was poor, but we went anyway");
            let mut hit2 = true;
            assert_eq!(
                concede_patterns_match(
                    handle,
                    marker.as_ptr(),
                    neutral.as_ptr(),
                    ptr::null(),
                    &mut hit2
                ),
                CONCEDE_OK
            );
            assert!(!hit2);

            concede_patterns_free(handle);
        }
    }

    #[test]
    fn bad_pattern_file_reports_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("patterns.txt");
        std::fs::write(&path, "[*] agree\n").unwrap();
        unsafe {
            let cpath = cstr(path.to_str().unwrap());
            let mut handle: *mut ConcedePatterns = ptr::null_mut();
            assert_eq!(
                concede_patterns_load(cpath.as_ptr(), &mut handle),
                CONCEDE_ERR_PARSE
            );
            let msg = take_string(concede_last_error());
            assert!(msg.contains(":1"), "{msg}");
        }
    }
}
