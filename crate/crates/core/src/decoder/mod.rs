//! Frame-synchronous beam search over per-frame token emissions.
//!
//! A transcription `y` with alignment `pi` is scored as
//!
//! ```text
//! AM(pi) + alpha * ln P_LM(y) + beta * |y| + gamma * #silence
//! ```
//!
//! where `AM` sums emission scores and token-to-token transition scores,
//! the LM term includes the end-of-sentence event, and the silence count is
//! taken per silence segment or per silence frame ([`SilenceTerm`]).
//! Consecutive identical alignment tokens are repeats of one label; true
//! letter doubles are spelled with repetition tokens.

mod oracle;
mod search;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::lexicon::LexiconTrie;
use crate::ngram::{LanguageModel, Level};
use crate::tokens::TokenSet;

pub use oracle::{brute_force_decode, total_score, ScoreBreakdown, MAX_ENUMERATION};
pub use search::decode;

/// Scores closer than this are ties, resolved by alignment order.
pub const TIE_EPSILON: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecodeError {
    #[error("mode mismatch: {0}")]
    ModeMismatch(String),
    #[error("every hypothesis was pruned or could not be finalized")]
    EmptyBeam,
    #[error("emission matrix has no frames")]
    EmptyEmissions,
    #[error("token {0:?} is missing from the language model vocabulary")]
    LmVocabulary(String),
    #[error("search space {tokens}^{frames} exceeds the enumeration limit")]
    TooLarge { tokens: usize, frames: usize },
    #[error("alignment has {alignment} frames, emissions have {frames}")]
    LengthMismatch { alignment: usize, frames: usize },
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("invalid options: {0}")]
    InvalidOptions(String),
}

/// T x N natural-log acoustic scores.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionMatrix {
    tokens: TokenSet,
    frames: usize,
    scores: Vec<f64>,
}

impl EmissionMatrix {
    /// `scores` is row-major, one row of `tokens.len()` values per frame.
    pub fn new(tokens: TokenSet, scores: Vec<f64>) -> Result<Self, DecodeError> {
        let n = tokens.len();
        if n == 0 || !scores.len().is_multiple_of(n) {
            return Err(DecodeError::InvalidMatrix(format!(
                "{} scores do not fill rows of {n}",
                scores.len()
            )));
        }
        if let Some(pos) = scores.iter().position(|s| !s.is_finite()) {
            return Err(DecodeError::InvalidMatrix(format!(
                "non-finite score at frame {}, token {}",
                pos / n,
                pos % n
            )));
        }
        Ok(Self { frames: scores.len() / n, tokens, scores })
    }

    pub fn from_rows(tokens: TokenSet, rows: &[Vec<f64>]) -> Result<Self, DecodeError> {
        let n = tokens.len();
        if let Some(r) = rows.iter().find(|r| r.len() != n) {
            return Err(DecodeError::InvalidMatrix(format!("row of {} values, expected {n}", r.len())));
        }
        Self::new(tokens, rows.concat())
    }

    pub fn tokens(&self) -> &TokenSet {
        &self.tokens
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn num_tokens(&self) -> usize {
        self.tokens.len()
    }

    pub fn get(&self, frame: usize, token: usize) -> f64 {
        self.scores[frame * self.tokens.len() + token]
    }

    pub fn row(&self, frame: usize) -> &[f64] {
        let n = self.tokens.len();
        &self.scores[frame * n..(frame + 1) * n]
    }
}

/// N x N natural-log scores for moving from one alignment token to the next.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    n: usize,
    scores: Vec<f64>,
}

impl TransitionMatrix {
    /// `scores[prev * n + next]`.
    pub fn new(n: usize, scores: Vec<f64>) -> Result<Self, DecodeError> {
        if scores.len() != n * n {
            return Err(DecodeError::InvalidMatrix(format!("{} scores for {n}x{n}", scores.len())));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(DecodeError::InvalidMatrix("non-finite transition score".into()));
        }
        Ok(Self { n, scores })
    }

    pub fn zeros(n: usize) -> Self {
        Self { n, scores: vec![0.0; n * n] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, prev: usize, next: usize) -> f64 {
        self.scores[prev * self.n + next]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecodeMode {
    WordLmLexicon,
    CharLmLexicon,
    CharLmFree,
}

impl DecodeMode {
    pub const ALL: [DecodeMode; 3] =
        [DecodeMode::WordLmLexicon, DecodeMode::CharLmLexicon, DecodeMode::CharLmFree];

    pub fn uses_lexicon(self) -> bool {
        !matches!(self, DecodeMode::CharLmFree)
    }

    pub fn lm_level(self) -> Level {
        match self {
            DecodeMode::WordLmLexicon => Level::Word,
            _ => Level::Char,
        }
    }
}

impl fmt::Display for DecodeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecodeMode::WordLmLexicon => "word_lm_lexicon",
            DecodeMode::CharLmLexicon => "char_lm_lexicon",
            DecodeMode::CharLmFree => "char_lm_free",
        })
    }
}

impl FromStr for DecodeMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "word_lm_lexicon" => Ok(DecodeMode::WordLmLexicon),
            "char_lm_lexicon" => Ok(DecodeMode::CharLmLexicon),
            "char_lm_free" => Ok(DecodeMode::CharLmFree),
            other => Err(format!("unknown mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SilenceTerm {
    /// Once per silence label (a run of silence frames counts once).
    PerSegment,
    /// Once per silence frame.
    PerFrame,
}

impl fmt::Display for SilenceTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SilenceTerm::PerSegment => "per_segment",
            SilenceTerm::PerFrame => "per_frame",
        })
    }
}

impl FromStr for SilenceTerm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "per_segment" => Ok(SilenceTerm::PerSegment),
            "per_frame" => Ok(SilenceTerm::PerFrame),
            other => Err(format!("unknown silence term {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoderOptions {
    /// LM weight.
    pub alpha: f64,
    /// Word insertion score.
    pub beta: f64,
    /// Silence score.
    pub gamma: f64,
    pub beam_size: usize,
    /// Hypotheses more than this below the frame best are dropped.
    pub beam_threshold: f64,
    pub mode: DecodeMode,
    pub silence_term: SilenceTerm,
}

impl Default for DecoderOptions {
    fn default() -> Self {
        Self {
            alpha: 0.0,
            beta: 0.0,
            gamma: 0.0,
            beam_size: 100,
            beam_threshold: f64::INFINITY,
            mode: DecodeMode::CharLmFree,
            silence_term: SilenceTerm::PerSegment,
        }
    }
}

impl DecoderOptions {
    pub fn validate(&self) -> Result<(), DecodeError> {
        if self.beam_size == 0 {
            return Err(DecodeError::InvalidOptions("beam_size must be >= 1".into()));
        }
        if self.beam_threshold.is_nan() || self.beam_threshold < 0.0 {
            return Err(DecodeError::InvalidOptions("beam_threshold must be >= 0".into()));
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !v.is_finite() {
                return Err(DecodeError::InvalidOptions(format!("{name} must be finite")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub words: Vec<String>,
    /// Lexicon word ids (lexicon modes only).
    pub word_ids: Option<Vec<u32>>,
    /// One token per frame.
    pub alignment: Vec<usize>,
    pub am_score: f64,
    /// Natural-log LM score, unweighted, including end of sentence.
    pub lm_score: f64,
    pub word_count: usize,
    pub silence_count: usize,
    pub word_penalty: f64,
    pub silence_penalty: f64,
    pub total: f64,
    /// 1 + the worst sorted-beam rank taken by the winner's ancestors.
    /// Zero for results that did not come from a beam search.
    pub effective_beam_size: usize,
}

impl DecodeResult {
    pub fn transcript(&self) -> String {
        self.words.join(" ")
    }

    /// Sum of the weighted components; equals `total` up to rounding.
    pub fn component_sum(&self, alpha: f64) -> f64 {
        self.am_score + alpha * self.lm_score + self.word_penalty + self.silence_penalty
    }
}

/// LM ids the decoder needs, resolved once per call.
pub(crate) enum LmBinding {
    /// Per token index.
    Tokens(Vec<u32>),
    /// Per lexicon word id.
    Words(Vec<u32>),
}

pub(crate) fn check_inputs<L: LanguageModel>(
    em: &EmissionMatrix,
    tr: Option<&TransitionMatrix>,
    lm: &L,
    lex: Option<&LexiconTrie>,
    opt: &DecoderOptions,
) -> Result<LmBinding, DecodeError> {
    opt.validate()?;
    if em.frames() == 0 {
        return Err(DecodeError::EmptyEmissions);
    }
    if let Some(tr) = tr {
        if tr.size() != em.num_tokens() {
            return Err(DecodeError::InvalidMatrix(format!(
                "transitions are {0}x{0}, emissions have {1} tokens",
                tr.size(),
                em.num_tokens()
            )));
        }
    }
    if lm.level() != opt.mode.lm_level() {
        return Err(DecodeError::ModeMismatch(format!(
            "{} requires a {}-level LM, got {}",
            opt.mode,
            opt.mode.lm_level(),
            lm.level()
        )));
    }
    if opt.mode.uses_lexicon() && lex.is_none() {
        return Err(DecodeError::ModeMismatch(format!("{} requires a lexicon", opt.mode)));
    }
    match opt.mode {
        DecodeMode::WordLmLexicon => {
            let lex = lex.expect("checked above");
            let unk = lm.unk_id();
            (0..lex.word_count() as u32)
                .map(|w| {
                    let word = lex.word(w);
                    lm.token_id(word).or(unk).ok_or_else(|| DecodeError::LmVocabulary(word.to_string()))
                })
                .collect::<Result<_, _>>()
                .map(LmBinding::Words)
        }
        _ => em
            .tokens()
            .tokens()
            .iter()
            .map(|t| lm.token_id(t).ok_or_else(|| DecodeError::LmVocabulary(t.clone())))
            .collect::<Result<_, _>>()
            .map(LmBinding::Tokens),
    }
}
