//! Backoff n-gram language models over characters or words.
//!
//! Models are trained with interpolated modified Kneser-Ney
//! ([`estimate`]), stored and loaded as ARPA text ([`arpa`]), and queried
//! incrementally through [`LanguageModel`] states. All scores are log10.

pub mod arpa;
mod counts;
mod estimate;
mod prune;

use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;

use thiserror::Error;

use crate::tokens::TokenSet;

pub use counts::{count_ngrams, CountTable};
pub use estimate::{estimate, estimate_detailed, Discounts, Estimation};
pub use prune::PruneSpec;

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

#[derive(Debug, Error)]
pub enum LmError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("order {order}: header declares {declared} n-grams, section has {found}")]
    OrderMismatch { order: usize, declared: usize, found: usize },
    #[error("unknown token {0:?}")]
    UnknownToken(String),
    #[error("count table is empty")]
    EmptyCounts,
    #[error("invalid prune spec: {0}")]
    InvalidPrune(String),
    #[error("invalid order {0}")]
    InvalidOrder(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    Char,
    Word,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Char => "char",
            Level::Word => "word",
        })
    }
}

impl std::str::FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "char" => Ok(Level::Char),
            "word" => Ok(Level::Word),
            other => Err(format!("unknown level {other:?} (expected char or word)")),
        }
    }
}

/// Symbol inventory of a model. Ids are dense and stable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    symbols: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocab {
    pub fn from_symbols<I, S>(symbols: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut v = Vocab { symbols: Vec::new(), index: HashMap::new() };
        for s in symbols {
            v.insert(s.into());
        }
        v
    }

    /// `<s>`, `</s>`, then every token of the set in index order.
    pub fn for_chars(ts: &TokenSet) -> Self {
        Self::from_symbols([BOS, EOS].into_iter().map(String::from).chain(ts.tokens().iter().cloned()))
    }

    /// `<s>`, `</s>`, `<unk>`, then the given words.
    pub fn for_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::from_symbols(
            [BOS, EOS, UNK].into_iter().map(String::from).chain(words.into_iter().map(Into::into)),
        )
    }

    pub fn insert(&mut self, symbol: String) -> u32 {
        if let Some(&id) = self.index.get(&symbol) {
            return id;
        }
        let id = self.symbols.len() as u32;
        self.index.insert(symbol.clone(), id);
        self.symbols.push(symbol);
        id
    }

    pub fn id(&self, symbol: &str) -> Option<u32> {
        self.index.get(symbol).copied()
    }

    pub fn symbol(&self, id: u32) -> &str {
        &self.symbols[id as usize]
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    /// Maps an encoded character sequence onto vocabulary ids.
    pub fn encode_chars(&self, seq: &[usize], ts: &TokenSet) -> Result<Vec<u32>, LmError> {
        seq.iter()
            .map(|&i| self.id(ts.token(i)).ok_or_else(|| LmError::UnknownToken(ts.token(i).to_string())))
            .collect()
    }

    /// Maps words onto ids, substituting `<unk>` when available.
    pub fn encode_words<S: AsRef<str>>(&self, words: &[S]) -> Result<Vec<u32>, LmError> {
        let unk = self.id(UNK);
        words
            .iter()
            .map(|w| {
                self.id(w.as_ref())
                    .or(unk)
                    .ok_or_else(|| LmError::UnknownToken(w.as_ref().to_string()))
            })
            .collect()
    }
}

/// Counts and estimates a character model over `ts` (every token is in the
/// vocabulary, seen or not).
pub fn train_char_lm<S: AsRef<[usize]>>(
    sentences: &[S],
    ts: &TokenSet,
    order: usize,
    prune: &PruneSpec,
) -> Result<NGramModel, LmError> {
    let vocab = Vocab::for_chars(ts);
    let ids: Vec<Vec<u32>> =
        sentences.iter().map(|s| vocab.encode_chars(s.as_ref(), ts)).collect::<Result<_, _>>()?;
    let counts = count_ngrams(ids.iter().map(Vec::as_slice), &vocab, order)?;
    estimate(&counts, prune, Level::Char)
}

/// Counts and estimates a word model whose vocabulary is `vocabulary` plus
/// the sentence markers and `<unk>`; other words count as `<unk>`.
pub fn train_word_lm<S: AsRef<str>, W: AsRef<str>>(
    sentences: &[Vec<S>],
    vocabulary: &[W],
    order: usize,
    prune: &PruneSpec,
) -> Result<NGramModel, LmError> {
    let vocab = Vocab::for_words(vocabulary.iter().map(|w| w.as_ref().to_string()));
    let ids: Vec<Vec<u32>> =
        sentences.iter().map(|s| vocab.encode_words(s)).collect::<Result<_, _>>()?;
    let counts = count_ngrams(ids.iter().map(Vec::as_slice), &vocab, order)?;
    estimate(&counts, prune, Level::Word)
}

/// Stored log10 probability and backoff weight of one n-gram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub logprob: f64,
    pub backoff: f64,
}

/// Scoring context: the most recent tokens the model can still use.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LmState(Vec<u32>);

impl LmState {
    pub fn context(&self) -> &[u32] {
        &self.0
    }
}

/// Incremental scorer interface consumed by the decoder and the perplexity
/// tools. Scores are log10.
pub trait LanguageModel {
    type State: Clone + Eq + Hash + fmt::Debug;

    fn level(&self) -> Level;
    fn start_state(&self) -> Self::State;
    fn score(&self, state: &Self::State, token: u32) -> (Self::State, f64);
    fn finish(&self, state: &Self::State) -> f64;
    /// Exact vocabulary lookup (no unknown substitution).
    fn token_id(&self, token: &str) -> Option<u32>;
    fn unk_id(&self) -> Option<u32>;
    /// Context-free log10 probability of a token.
    fn unigram(&self, token: u32) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub struct NGramModel {
    order: usize,
    level: Level,
    vocab: Vocab,
    bos: u32,
    eos: u32,
    unk: Option<u32>,
    /// `tables[k]` holds the (k+1)-grams.
    tables: Vec<HashMap<Vec<u32>, Entry>>,
}

impl NGramModel {
    pub(crate) fn from_parts(
        order: usize,
        level: Level,
        vocab: Vocab,
        tables: Vec<HashMap<Vec<u32>, Entry>>,
    ) -> Result<Self, LmError> {
        let bos = vocab.id(BOS).ok_or_else(|| LmError::UnknownToken(BOS.into()))?;
        let eos = vocab.id(EOS).ok_or_else(|| LmError::UnknownToken(EOS.into()))?;
        let unk = vocab.id(UNK);
        Ok(Self { order, level, vocab, bos, eos, unk, tables })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn bos(&self) -> u32 {
        self.bos
    }

    pub fn eos(&self) -> u32 {
        self.eos
    }

    pub fn entry(&self, ngram: &[u32]) -> Option<&Entry> {
        if ngram.is_empty() || ngram.len() > self.order {
            return None;
        }
        self.tables[ngram.len() - 1].get(ngram)
    }

    pub fn ngram_count(&self, order: usize) -> usize {
        self.tables.get(order - 1).map_or(0, HashMap::len)
    }

    /// Every id a distribution is defined over: the whole vocabulary except `<s>`.
    pub fn predictable(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.vocab.len() as u32).filter(move |&id| id != self.bos)
    }

    pub(crate) fn tables(&self) -> &[HashMap<Vec<u32>, Entry>] {
        &self.tables
    }

    /// Backoff query of `token` after `context` (any length; only the last
    /// `order - 1` tokens matter).
    pub fn score_context(&self, context: &[u32], token: u32) -> f64 {
        backoff_score(&self.tables, self.order, context, token)
    }

    /// Longest suffix of `history` (at most `order - 1` tokens) stored in the model.
    fn minimal_state(&self, history: &[u32]) -> LmState {
        let mut len = history.len().min(self.order - 1);
        while len > 0 {
            let suffix = &history[history.len() - len..];
            if self.tables[len - 1].contains_key(suffix) {
                return LmState(suffix.to_vec());
            }
            len -= 1;
        }
        LmState(Vec::new())
    }

    /// Scores a token given as a string. Word models substitute `<unk>`.
    pub fn score_token(&self, state: &LmState, token: &str) -> Result<(LmState, f64), LmError> {
        let id = match (self.vocab.id(token), self.level) {
            (Some(id), _) => id,
            (None, Level::Word) => self.unk.ok_or_else(|| LmError::UnknownToken(token.into()))?,
            (None, Level::Char) => return Err(LmError::UnknownToken(token.into())),
        };
        Ok(self.score(state, id))
    }

    /// Chain rule over `tokens` plus the end-of-sentence score.
    pub fn sentence_logprob(&self, tokens: &[u32]) -> f64 {
        let mut state = self.start_state();
        let mut total = 0.0;
        for &t in tokens {
            let (next, lp) = self.score(&state, t);
            total += lp;
            state = next;
        }
        total + self.finish(&state)
    }
}

impl LanguageModel for NGramModel {
    type State = LmState;

    fn level(&self) -> Level {
        self.level
    }

    fn start_state(&self) -> LmState {
        let pad = vec![self.bos; self.order.saturating_sub(1)];
        self.minimal_state(&pad)
    }

    fn score(&self, state: &LmState, token: u32) -> (LmState, f64) {
        let lp = self.score_context(&state.0, token);
        let mut history = Vec::with_capacity(state.0.len() + 1);
        history.extend_from_slice(&state.0);
        history.push(token);
        (self.minimal_state(&history), lp)
    }

    fn finish(&self, state: &LmState) -> f64 {
        self.score_context(&state.0, self.eos)
    }

    fn token_id(&self, token: &str) -> Option<u32> {
        self.vocab.id(token)
    }

    fn unk_id(&self) -> Option<u32> {
        self.unk
    }

    fn unigram(&self, token: u32) -> f64 {
        self.tables[0].get(&[token][..]).map_or(f64::NEG_INFINITY, |e| e.logprob)
    }
}

/// Standard backoff recursion over `tables` (index k holds (k+1)-grams).
pub(crate) fn backoff_score(
    tables: &[HashMap<Vec<u32>, Entry>],
    order: usize,
    context: &[u32],
    token: u32,
) -> f64 {
    let keep = context.len().min(order - 1).min(tables.len().saturating_sub(1));
    let ctx = &context[context.len() - keep..];
    let mut key = Vec::with_capacity(keep + 1);
    key.extend_from_slice(ctx);
    key.push(token);
    let mut backoff = 0.0;
    for len in (0..=keep).rev() {
        let start = keep - len;
        if let Some(e) = tables[len].get(&key[start..]) {
            return backoff + e.logprob;
        }
        if len > 0 {
            if let Some(c) = tables[len - 1].get(&key[start..keep]) {
                backoff += c.backoff;
            }
        }
    }
    f64::NEG_INFINITY
}
