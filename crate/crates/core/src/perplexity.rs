//! Word-level perplexity of word LMs, and word-level perplexity bounds for
//! character LMs.
//!
//! A character LM assigns a word the probability of its spelling followed by
//! a terminator (silence, or end of sentence for the last word). Summed over
//! a vocabulary this mass is at most 1, so the raw value gives an upper
//! perplexity bound. Renormalizing over the words that cover `mass` of the
//! word LM's distribution in the same context gives a lower bound.

use std::collections::{HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::ngram::{LanguageModel, Level};
use crate::tokens::{encode_word, TokenError, TokenSet};

#[derive(Debug, Error)]
pub enum PerplexityError {
    #[error("no in-vocabulary words to score")]
    EmptyCorpus,
    #[error("expected a {expected}-level model, got {got}")]
    Level { expected: Level, got: Level },
    #[error("token {0:?} is missing from the character LM")]
    MissingToken(String),
    #[error("word {word:?}: {source}")]
    Encode { word: String, source: TokenError },
    #[error("coverage mass must be in (0, 1], got {0}")]
    InvalidMass(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PplBounds {
    pub ppl_lower: f64,
    pub ppl_upper: f64,
    /// Renormalized log10 sum behind `ppl_lower`.
    pub log10_sum_lower: f64,
    pub coverage_mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerplexityReport {
    /// Scored word occurrences.
    pub n_words: usize,
    /// Out-of-vocabulary occurrences left out of the product.
    pub n_excluded: usize,
    pub log10_sum: f64,
    /// `10^(-log10_sum / n_words)`; the upper bound for character LMs.
    pub ppl: f64,
    pub bounds: Option<PplBounds>,
}

fn ppl_of(log10_sum: f64, n: usize) -> f64 {
    10f64.powf(-log10_sum / n as f64)
}

impl fmt::Display for PerplexityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n_words\t{}", self.n_words)?;
        writeln!(f, "n_excluded\t{}", self.n_excluded)?;
        writeln!(f, "log10_sum\t{}", self.log10_sum)?;
        match &self.bounds {
            None => writeln!(f, "ppl\t{}", self.ppl),
            Some(b) => {
                writeln!(f, "ppl_lower\t{}", b.ppl_lower)?;
                writeln!(f, "ppl_upper\t{}", b.ppl_upper)?;
                writeln!(f, "coverage_mass\t{}", b.coverage_mass)
            }
        }
    }
}

fn require_level<L: LanguageModel>(lm: &L, expected: Level) -> Result<(), PerplexityError> {
    if lm.level() != expected {
        return Err(PerplexityError::Level { expected, got: lm.level() });
    }
    Ok(())
}

fn word_id<L: LanguageModel>(lm: &L, word: &str) -> u32 {
    lm.token_id(word).or(lm.unk_id()).expect("word models carry <unk>")
}

/// Chain-rule perplexity of a word LM. End of sentence is scored as context
/// but is not a word; words outside `vocab` are fed to the LM and excluded
/// from the product.
pub fn word_ppl_word_lm<L: LanguageModel, S: AsRef<str>>(
    lm: &L,
    corpus: &[Vec<S>],
    vocab: &HashSet<String>,
) -> Result<PerplexityReport, PerplexityError> {
    require_level(lm, Level::Word)?;
    let (mut n, mut excluded, mut sum) = (0, 0, 0.0);
    for sentence in corpus {
        let mut state = lm.start_state();
        for w in sentence {
            let (next, lp) = lm.score(&state, word_id(lm, w.as_ref()));
            if vocab.contains(w.as_ref()) {
                sum += lp;
                n += 1;
            } else {
                excluded += 1;
            }
            state = next;
        }
    }
    if n == 0 {
        return Err(PerplexityError::EmptyCorpus);
    }
    Ok(PerplexityReport { n_words: n, n_excluded: excluded, log10_sum: sum, ppl: ppl_of(sum, n), bounds: None })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Terminator {
    Silence,
    EndOfSentence,
}

/// Character LM ids of each token in `ts`.
fn char_ids<L: LanguageModel>(lm: &L, ts: &TokenSet) -> Result<Vec<u32>, PerplexityError> {
    ts.tokens()
        .iter()
        .map(|t| lm.token_id(t).ok_or_else(|| PerplexityError::MissingToken(t.clone())))
        .collect()
}

/// Encodes `word` into character LM ids.
fn spell<L: LanguageModel>(lm: &L, ts: &TokenSet, word: &str) -> Result<Vec<u32>, PerplexityError> {
    let ids = char_ids(lm, ts)?;
    let enc = encode_word(word, ts).map_err(|source| PerplexityError::Encode { word: word.to_string(), source })?;
    Ok(enc.iter().map(|&t| ids[t]).collect())
}

fn score_spelling<L: LanguageModel>(
    lm: &L,
    state: &L::State,
    spelling: &[u32],
    silence: u32,
    terminator: Terminator,
) -> (L::State, f64) {
    let mut state = state.clone();
    let mut total = 0.0;
    for &id in spelling {
        let (next, lp) = lm.score(&state, id);
        total += lp;
        state = next;
    }
    match terminator {
        Terminator::Silence => {
            let (next, lp) = lm.score(&state, silence);
            (next, total + lp)
        }
        Terminator::EndOfSentence => {
            let lp = lm.finish(&state);
            (state, total + lp)
        }
    }
}

/// log10 P(word | state) under a character LM: the word's letters followed
/// by the terminator. Returns the state after the terminator.
pub fn word_logprob_char_lm<L: LanguageModel>(
    lm: &L,
    ts: &TokenSet,
    state: &L::State,
    word: &str,
    terminator: Terminator,
) -> Result<(L::State, f64), PerplexityError> {
    let spelling = spell(lm, ts, word)?;
    let silence = char_ids(lm, ts)?[ts.silence()];
    Ok(score_spelling(lm, state, &spelling, silence, terminator))
}

/// Total (linear) probability the character LM gives the words of `subset`
/// in `state`.
pub fn normalizer<L: LanguageModel, S: AsRef<str>>(
    lm: &L,
    ts: &TokenSet,
    state: &L::State,
    subset: &[S],
    terminator: Terminator,
) -> Result<f64, PerplexityError> {
    let mut mass = 0.0;
    for w in subset {
        mass += 10f64.powf(word_logprob_char_lm(lm, ts, state, w.as_ref(), terminator)?.1);
    }
    Ok(mass)
}

/// Indices into `vocab` of the most probable words (descending, ties by
/// word) whose cumulative probability reaches `mass` of the total over
/// `vocab`.
fn top_mass_indices<L: LanguageModel, S: AsRef<str>>(
    word_lm: &L,
    state: &L::State,
    vocab: &[S],
    mass: f64,
) -> Vec<usize> {
    let mut scored: Vec<(usize, f64)> = vocab
        .iter()
        .enumerate()
        .map(|(i, w)| (i, 10f64.powf(word_lm.score(state, word_id(word_lm, w.as_ref())).1)))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| vocab[a.0].as_ref().cmp(vocab[b.0].as_ref())));
    if mass >= 1.0 {
        return scored.into_iter().map(|(i, _)| i).collect();
    }
    let total: f64 = scored.iter().map(|s| s.1).sum();
    let target = mass * total;
    let mut cum = 0.0;
    let mut keep = 0;
    for (_, p) in &scored {
        cum += p;
        keep += 1;
        if cum >= target {
            break;
        }
    }
    scored.truncate(keep);
    scored.into_iter().map(|(i, _)| i).collect()
}

/// The most probable words of `vocab` after `state` under the word LM that
/// together cover `mass` of the probability `vocab` receives.
pub fn top_mass_subset<L: LanguageModel, S: AsRef<str>>(
    word_lm: &L,
    state: &L::State,
    vocab: &[S],
    mass: f64,
) -> Result<Vec<String>, PerplexityError> {
    if !(mass > 0.0 && mass <= 1.0) {
        return Err(PerplexityError::InvalidMass(mass));
    }
    Ok(top_mass_indices(word_lm, state, vocab, mass).into_iter().map(|i| vocab[i].as_ref().to_string()).collect())
}

/// Upper and lower word-perplexity bounds of a character LM. Contexts for
/// both LMs are the reference words; out-of-vocabulary words stay in the
/// context but are not scored.
pub fn char_lm_word_ppl_bounds<C, W, S, V>(
    char_lm: &C,
    word_lm: &W,
    ts: &TokenSet,
    corpus: &[Vec<S>],
    vocab: &[V],
    mass: f64,
) -> Result<PerplexityReport, PerplexityError>
where
    C: LanguageModel,
    W: LanguageModel,
    S: AsRef<str>,
    V: AsRef<str>,
{
    require_level(char_lm, Level::Char)?;
    require_level(word_lm, Level::Word)?;
    if !(mass > 0.0 && mass <= 1.0) {
        return Err(PerplexityError::InvalidMass(mass));
    }
    let silence = char_ids(char_lm, ts)?[ts.silence()];
    let in_vocab: HashSet<&str> = vocab.iter().map(AsRef::as_ref).collect();
    let spellings: Vec<Vec<u32>> = vocab.iter().map(|w| spell(char_lm, ts, w.as_ref())).collect::<Result<_, _>>()?;
    let mut subsets: HashMap<W::State, Vec<usize>> = HashMap::new();
    let mut denominators: HashMap<(C::State, W::State, Terminator), f64> = HashMap::new();

    let (mut n, mut excluded, mut upper, mut lower) = (0, 0, 0.0, 0.0);
    for sentence in corpus {
        let mut cstate = char_lm.start_state();
        let mut wstate = word_lm.start_state();
        for (pos, w) in sentence.iter().enumerate() {
            let w = w.as_ref();
            let term = if pos + 1 == sentence.len() { Terminator::EndOfSentence } else { Terminator::Silence };
            let spelling = spell(char_lm, ts, w)?;
            let (cnext, lp) = score_spelling(char_lm, &cstate, &spelling, silence, term);
            if in_vocab.contains(w) {
                let key = (cstate.clone(), wstate.clone(), term);
                let den = match denominators.get(&key) {
                    Some(&d) => d,
                    None => {
                        let subset = subsets
                            .entry(wstate.clone())
                            .or_insert_with(|| top_mass_indices(word_lm, &wstate, vocab, mass));
                        let d: f64 = subset
                            .iter()
                            .map(|&i| 10f64.powf(score_spelling(char_lm, &cstate, &spellings[i], silence, term).1))
                            .sum();
                        denominators.insert(key, d);
                        d
                    }
                };
                upper += lp;
                lower += lp - den.log10();
                n += 1;
            } else {
                excluded += 1;
            }
            cstate = cnext;
            wstate = word_lm.score(&wstate, word_id(word_lm, w)).0;
        }
    }
    if n == 0 {
        return Err(PerplexityError::EmptyCorpus);
    }
    let ppl_upper = ppl_of(upper, n);
    Ok(PerplexityReport {
        n_words: n,
        n_excluded: excluded,
        log10_sum: upper,
        ppl: ppl_upper,
        bounds: Some(PplBounds { ppl_lower: ppl_of(lower, n), ppl_upper, log10_sum_lower: lower, coverage_mass: mass }),
    })
}
