//! C interface to the decoder and language models.
//!
//! Objects are opaque heap handles released with their `*_free` function.
//! Every fallible call returns an [`LfStatus`]; on failure a message for the
//! calling thread is available from [`lf_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use lexfree::decoder::{decode, DecodeMode, DecodeResult, DecoderOptions, EmissionMatrix, SilenceTerm};
use lexfree::formats::{read_emissions, FormatError};
use lexfree::lexicon::{load_lexicon, LexiconTrie};
use lexfree::ngram::arpa::read_arpa_file;
use lexfree::ngram::{LanguageModel, Level, LmError, NGramModel};
use lexfree::TokenSet;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    InvalidArgument = 5,
    DecodeFailed = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LfLevel {
    Char = 0,
    Word = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LfMode {
    WordLmLexicon = 0,
    CharLmLexicon = 1,
    CharLmFree = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LfSilenceTerm {
    PerSegment = 0,
    PerFrame = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LfDecoderOptions {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub beam_size: usize,
    /// Use `INFINITY` to disable threshold pruning.
    pub beam_threshold: f64,
    pub mode: LfMode,
    pub silence_term: LfSilenceTerm,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LfScores {
    pub am: f64,
    /// Natural log, unweighted.
    pub lm: f64,
    pub word_penalty: f64,
    pub silence_penalty: f64,
    pub total: f64,
    pub word_count: usize,
    pub silence_count: usize,
    pub effective_beam_size: usize,
}

pub struct LfLanguageModel(NGramModel);

pub struct LfLexicon(LexiconTrie);

pub struct LfEmissions(EmissionMatrix);

pub struct LfDecodeResult {
    result: DecodeResult,
    transcript: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

struct Failure(LfStatus, String);

impl Failure {
    fn new(status: LfStatus, msg: impl ToString) -> Self {
        Failure(status, msg.to_string())
    }
}

/// Runs `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LfStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            LfStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(LfStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure::new(LfStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::new(LfStatus::NullPointer, format!("{name} is null")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::new(LfStatus::NullPointer, "out is null"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

fn lm_failure(path: &str, e: LmError) -> Failure {
    let status = if matches!(e, LmError::Io(_)) { LfStatus::Io } else { LfStatus::Parse };
    Failure::new(status, format!("{path}: {e}"))
}

fn format_failure(e: FormatError) -> Failure {
    let status = if matches!(e, FormatError::Io { .. }) { LfStatus::Io } else { LfStatus::Parse };
    Failure::new(status, e)
}

unsafe fn tokens_arg(tokens: *const *const c_char, n_tokens: usize) -> Result<TokenSet, Failure> {
    if tokens.is_null() {
        return Err(Failure::new(LfStatus::NullPointer, "tokens is null"));
    }
    let strs = std::slice::from_raw_parts(tokens, n_tokens)
        .iter()
        .map(|&t| str_arg(t, "token"))
        .collect::<Result<Vec<_>, _>>()?;
    TokenSet::from_tokens(strs).map_err(|e| Failure::new(LfStatus::InvalidArgument, e))
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn lf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Loads an ARPA file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lf_lm_load_arpa(path: *const c_char, level: LfLevel, out: *mut *mut LfLanguageModel) -> LfStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let level = match level {
            LfLevel::Char => Level::Char,
            LfLevel::Word => Level::Word,
        };
        let lm = read_arpa_file(Path::new(path), level).map_err(|e| lm_failure(path, e))?;
        put(out, LfLanguageModel(lm))
    })
}

/// # Safety
/// `lm` must come from [`lf_lm_load_arpa`] (or be null) and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lf_lm_free(lm: *mut LfLanguageModel) {
    if !lm.is_null() {
        drop(Box::from_raw(lm));
    }
}

/// Model order, or 0 for a null handle.
///
/// # Safety
/// `lm` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn lf_lm_order(lm: *const LfLanguageModel) -> usize {
    lm.as_ref().map_or(0, |lm| lm.0.order())
}

/// log10 probability of a space-separated sentence, end of sentence
/// included. Character models read one token per space-separated item.
///
/// # Safety
/// `lm` must be a live handle, `sentence` NUL-terminated, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn lf_lm_sentence_logprob(
    lm: *const LfLanguageModel,
    sentence: *const c_char,
    out: *mut f64,
) -> LfStatus {
    guard(|| {
        let lm = &ref_arg(lm, "lm")?.0;
        let sentence = str_arg(sentence, "sentence")?;
        let ids = match lm.level() {
            Level::Word => lm.vocab().encode_words(&sentence.split_whitespace().collect::<Vec<_>>()),
            Level::Char => sentence
                .split_whitespace()
                .map(|t| lm.vocab().id(t).ok_or_else(|| LmError::UnknownToken(t.into())))
                .collect(),
        }
        .map_err(|e| Failure::new(LfStatus::InvalidArgument, e))?;
        if out.is_null() {
            return Err(Failure::new(LfStatus::NullPointer, "out is null"));
        }
        *out = lm.sentence_logprob(&ids);
        Ok(())
    })
}

/// Reads a `W2E1` emission file.
///
/// # Safety
/// `path` must be NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn lf_emissions_load(path: *const c_char, out: *mut *mut LfEmissions) -> LfStatus {
    guard(|| {
        let em = read_emissions(Path::new(str_arg(path, "path")?)).map_err(format_failure)?;
        put(out, LfEmissions(em))
    })
}

/// Builds emissions from `frames * n_tokens` row-major natural-log scores.
///
/// # Safety
/// `tokens` must hold `n_tokens` NUL-terminated strings and `scores`
/// `frames * n_tokens` values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lf_emissions_new(
    tokens: *const *const c_char,
    n_tokens: usize,
    scores: *const f64,
    frames: usize,
    out: *mut *mut LfEmissions,
) -> LfStatus {
    guard(|| {
        let ts = tokens_arg(tokens, n_tokens)?;
        if scores.is_null() {
            return Err(Failure::new(LfStatus::NullPointer, "scores is null"));
        }
        let scores = std::slice::from_raw_parts(scores, frames * n_tokens).to_vec();
        let em = EmissionMatrix::new(ts, scores).map_err(|e| Failure::new(LfStatus::InvalidArgument, e))?;
        put(out, LfEmissions(em))
    })
}

/// Number of frames, or 0 for a null handle.
///
/// # Safety
/// `em` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn lf_emissions_frames(em: *const LfEmissions) -> usize {
    em.as_ref().map_or(0, |em| em.0.frames())
}

/// # Safety
/// `em` must come from this library (or be null) and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lf_emissions_free(em: *mut LfEmissions) {
    if !em.is_null() {
        drop(Box::from_raw(em));
    }
}

/// Loads a lexicon file against the token set of `em`. A non-null `word_lm`
/// enables lookahead smearing with its unigram scores.
///
/// # Safety
/// `path` must be NUL-terminated, `em` live, `word_lm` live or null, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn lf_lexicon_load(
    path: *const c_char,
    em: *const LfEmissions,
    word_lm: *const LfLanguageModel,
    out: *mut *mut LfLexicon,
) -> LfStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let ts = ref_arg(em, "em")?.0.tokens();
        let text = std::fs::read_to_string(path).map_err(|e| Failure::new(LfStatus::Io, format!("{path}: {e}")))?;
        let lex = load_lexicon(&text, ts).map_err(|e| Failure::new(LfStatus::Parse, e))?;
        let mut trie = LexiconTrie::build(&lex);
        if let Some(lm) = word_lm.as_ref() {
            trie = trie.smear(&lm.0);
        }
        put(out, LfLexicon(trie))
    })
}

/// # Safety
/// `lex` must come from [`lf_lexicon_load`] (or be null) and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lf_lexicon_free(lex: *mut LfLexicon) {
    if !lex.is_null() {
        drop(Box::from_raw(lex));
    }
}

#[no_mangle]
pub extern "C" fn lf_decoder_options_default() -> LfDecoderOptions {
    let d = DecoderOptions::default();
    LfDecoderOptions {
        alpha: d.alpha,
        beta: d.beta,
        gamma: d.gamma,
        beam_size: d.beam_size,
        beam_threshold: d.beam_threshold,
        mode: LfMode::CharLmFree,
        silence_term: LfSilenceTerm::PerSegment,
    }
}

fn options(o: &LfDecoderOptions) -> DecoderOptions {
    DecoderOptions {
        alpha: o.alpha,
        beta: o.beta,
        gamma: o.gamma,
        beam_size: o.beam_size,
        beam_threshold: o.beam_threshold,
        mode: match o.mode {
            LfMode::WordLmLexicon => DecodeMode::WordLmLexicon,
            LfMode::CharLmLexicon => DecodeMode::CharLmLexicon,
            LfMode::CharLmFree => DecodeMode::CharLmFree,
        },
        silence_term: match o.silence_term {
            LfSilenceTerm::PerSegment => SilenceTerm::PerSegment,
            LfSilenceTerm::PerFrame => SilenceTerm::PerFrame,
        },
    }
}

/// Decodes one utterance. `lexicon` may be null in `CharLmFree` mode.
///
/// # Safety
/// Handles must be live (or null where allowed); `opts` and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn lf_decode(
    em: *const LfEmissions,
    lm: *const LfLanguageModel,
    lexicon: *const LfLexicon,
    opts: *const LfDecoderOptions,
    out: *mut *mut LfDecodeResult,
) -> LfStatus {
    guard(|| {
        let em = &ref_arg(em, "em")?.0;
        let lm = &ref_arg(lm, "lm")?.0;
        let opts = options(ref_arg(opts, "opts")?);
        let lex = lexicon.as_ref().map(|l| &l.0);
        let result = decode(em, None, lm, lex, &opts).map_err(|e| Failure::new(LfStatus::DecodeFailed, e))?;
        let transcript = CString::new(result.transcript()).map_err(|e| Failure::new(LfStatus::InvalidUtf8, e))?;
        put(out, LfDecodeResult { result, transcript })
    })
}

/// Space-joined words, owned by the result.
///
/// # Safety
/// `r` must be a live result handle or null.
#[no_mangle]
pub unsafe extern "C" fn lf_result_transcript(r: *const LfDecodeResult) -> *const c_char {
    r.as_ref().map_or(ptr::null(), |r| r.transcript.as_ptr())
}

/// # Safety
/// `r` must be a live result handle; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn lf_result_scores(r: *const LfDecodeResult, out: *mut LfScores) -> LfStatus {
    guard(|| {
        let r = &ref_arg(r, "result")?.result;
        if out.is_null() {
            return Err(Failure::new(LfStatus::NullPointer, "out is null"));
        }
        *out = LfScores {
            am: r.am_score,
            lm: r.lm_score,
            word_penalty: r.word_penalty,
            silence_penalty: r.silence_penalty,
            total: r.total,
            word_count: r.word_count,
            silence_count: r.silence_count,
            effective_beam_size: r.effective_beam_size,
        };
        Ok(())
    })
}

/// Copies up to `capacity` alignment token indices into `buf` and returns
/// the alignment length (one entry per frame).
///
/// # Safety
/// `r` must be live or null; `buf` must hold `capacity` values (may be null if 0).
#[no_mangle]
pub unsafe extern "C" fn lf_result_alignment(r: *const LfDecodeResult, buf: *mut usize, capacity: usize) -> usize {
    let Some(r) = r.as_ref() else { return 0 };
    let a = &r.result.alignment;
    if !buf.is_null() {
        let n = a.len().min(capacity);
        ptr::copy_nonoverlapping(a.as_ptr(), buf, n);
    }
    a.len()
}

/// # Safety
/// `r` must come from [`lf_decode`] (or be null) and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lf_result_free(r: *mut LfDecodeResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}
