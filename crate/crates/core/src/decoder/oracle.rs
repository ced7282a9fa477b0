//! Exhaustive reference decoder and from-scratch score evaluation.

use std::f64::consts::LN_10;

use super::search::weighted;
use super::{
    check_inputs, DecodeError, DecodeMode, DecodeResult, DecoderOptions, EmissionMatrix, LmBinding,
    SilenceTerm, TransitionMatrix, TIE_EPSILON,
};
use crate::lexicon::LexiconTrie;
use crate::ngram::LanguageModel;
use crate::tokens::{collapse_alignment, decode_chars, TokenSet};

/// Largest number of alignments [`brute_force_decode`] will enumerate.
pub const MAX_ENUMERATION: usize = 1_000_000;

/// The four weighted terms of a transcription score, recomputed from scratch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreBreakdown {
    pub am: f64,
    /// Natural log, unweighted.
    pub lm: f64,
    pub word_count: usize,
    pub silence_count: usize,
    pub total: f64,
}

fn acoustic(em: &EmissionMatrix, tr: Option<&TransitionMatrix>, alignment: &[usize]) -> f64 {
    let mut am = 0.0;
    for (t, &tok) in alignment.iter().enumerate() {
        am += em.get(t, tok);
        if t > 0 {
            if let Some(tr) = tr {
                am += tr.get(alignment[t - 1], tok);
            }
        }
    }
    am
}

fn lm_logprob<L: LanguageModel>(lm: &L, ids: &[u32]) -> f64 {
    let mut state = lm.start_state();
    let mut total = 0.0;
    for &id in ids {
        let (next, lp) = lm.score(&state, id);
        total += lp;
        state = next;
    }
    (total + lm.finish(&state)) * LN_10
}

fn silence_count(ts: &TokenSet, alignment: &[usize], labels: &[usize], term: SilenceTerm) -> usize {
    let seq = match term {
        SilenceTerm::PerSegment => labels,
        SilenceTerm::PerFrame => alignment,
    };
    seq.iter().filter(|&&t| ts.is_silence(t)).count()
}

#[allow(clippy::too_many_arguments)]
fn breakdown<L: LanguageModel>(
    em: &EmissionMatrix,
    tr: Option<&TransitionMatrix>,
    lm: &L,
    opt: &DecoderOptions,
    alignment: &[usize],
    labels: &[usize],
    lm_ids: &[u32],
    word_count: usize,
) -> ScoreBreakdown {
    let am = acoustic(em, tr, alignment);
    let lm_score = lm_logprob(lm, lm_ids);
    let silences = silence_count(em.tokens(), alignment, labels, opt.silence_term);
    let total = am
        + weighted(opt.alpha, lm_score)
        + opt.beta * word_count as f64
        + opt.gamma * silences as f64;
    ScoreBreakdown { am, lm: lm_score, word_count, silence_count: silences, total }
}

/// Recomputes every term for a decoded transcription from its alignment and
/// words alone.
pub fn total_score<L: LanguageModel>(
    result: &DecodeResult,
    em: &EmissionMatrix,
    tr: Option<&TransitionMatrix>,
    lm: &L,
    opt: &DecoderOptions,
) -> Result<ScoreBreakdown, DecodeError> {
    if result.alignment.len() != em.frames() {
        return Err(DecodeError::LengthMismatch { alignment: result.alignment.len(), frames: em.frames() });
    }
    let labels = collapse_alignment(&result.alignment).into_inner();
    let lm_ids: Vec<u32> = match opt.mode {
        DecodeMode::WordLmLexicon => result
            .words
            .iter()
            .map(|w| lm.token_id(w).or(lm.unk_id()).ok_or_else(|| DecodeError::LmVocabulary(w.clone())))
            .collect::<Result<_, _>>()?,
        _ => labels
            .iter()
            .map(|&t| {
                let tok = em.tokens().token(t);
                lm.token_id(tok).ok_or_else(|| DecodeError::LmVocabulary(tok.to_string()))
            })
            .collect::<Result<_, _>>()?,
    };
    Ok(breakdown(em, tr, lm, opt, &result.alignment, &labels, &lm_ids, result.words.len()))
}

/// Word choices for each silence-delimited label span, or `None` if some
/// span is not a lexicon spelling.
fn span_words<'t>(labels: &[usize], ts: &TokenSet, lex: &'t LexiconTrie) -> Option<Vec<&'t [u32]>> {
    labels
        .split(|&t| ts.is_silence(t))
        .filter(|s| !s.is_empty())
        .map(|s| {
            let words = lex.lookup(s);
            (!words.is_empty()).then_some(words)
        })
        .collect()
}

/// Scores every alignment in `N^T` and returns the best transcription.
/// Candidates are visited in (alignment, word ids) lexicographic order and
/// near-ties keep the earlier one, matching [`super::decode`].
pub fn brute_force_decode<L: LanguageModel>(
    em: &EmissionMatrix,
    tr: Option<&TransitionMatrix>,
    lm: &L,
    lex: Option<&LexiconTrie>,
    opt: &DecoderOptions,
) -> Result<DecodeResult, DecodeError> {
    let binding = check_inputs(em, tr, lm, lex, opt)?;
    let ts = em.tokens();
    let n = ts.len();
    let frames = em.frames();
    let total_alignments = (0..frames)
        .try_fold(1usize, |acc, _| acc.checked_mul(n).filter(|&x| x <= MAX_ENUMERATION))
        .ok_or(DecodeError::TooLarge { tokens: n, frames })?;
    let lex = if opt.mode.uses_lexicon() { lex } else { None };

    type Best = (ScoreBreakdown, Vec<usize>, Vec<String>, Option<Vec<u32>>);
    let mut best: Option<Best> = None;
    let mut consider = |score: ScoreBreakdown, alignment: &[usize], words: Vec<String>, ids: Option<Vec<u32>>| {
        let replace = match &best {
            None => true,
            Some((b, ..)) => score.total > b.total + TIE_EPSILON,
        };
        if replace {
            best = Some((score, alignment.to_vec(), words, ids));
        }
    };

    let mut alignment = vec![0usize; frames];
    for code in 0..total_alignments {
        let mut rest = code;
        for t in (0..frames).rev() {
            alignment[t] = rest % n;
            rest /= n;
        }
        let labels = collapse_alignment(&alignment).into_inner();
        let Ok(free_words) = decode_chars(&labels, ts) else {
            continue;
        };
        match (&binding, lex) {
            (LmBinding::Tokens(ids), None) => {
                let lm_ids: Vec<u32> = labels.iter().map(|&t| ids[t]).collect();
                let s = breakdown(em, tr, lm, opt, &alignment, &labels, &lm_ids, free_words.len());
                consider(s, &alignment, free_words, None);
            }
            (binding, Some(lex)) => {
                let Some(choices) = span_words(&labels, ts, lex) else {
                    continue;
                };
                // cartesian product, first span varying slowest
                let mut pick = vec![0usize; choices.len()];
                loop {
                    let ids: Vec<u32> = pick.iter().zip(&choices).map(|(&i, c)| c[i]).collect();
                    let lm_ids: Vec<u32> = match binding {
                        LmBinding::Tokens(tok) => labels.iter().map(|&t| tok[t]).collect(),
                        LmBinding::Words(w) => ids.iter().map(|&id| w[id as usize]).collect(),
                    };
                    let s = breakdown(em, tr, lm, opt, &alignment, &labels, &lm_ids, ids.len());
                    let words = ids.iter().map(|&id| lex.word(id).to_string()).collect();
                    consider(s, &alignment, words, Some(ids));
                    let mut pos = pick.len();
                    loop {
                        if pos == 0 {
                            break;
                        }
                        pos -= 1;
                        pick[pos] += 1;
                        if pick[pos] < choices[pos].len() {
                            break;
                        }
                        pick[pos] = 0;
                        if pos == 0 {
                            pos = usize::MAX;
                            break;
                        }
                    }
                    if pos == usize::MAX || pick.is_empty() {
                        break;
                    }
                }
            }
            (LmBinding::Words(_), None) => unreachable!("word mode always has a lexicon"),
        }
    }

    let (s, alignment, words, word_ids) = best.ok_or(DecodeError::EmptyBeam)?;
    Ok(DecodeResult {
        words,
        word_ids,
        alignment,
        am_score: s.am,
        lm_score: s.lm,
        word_count: s.word_count,
        silence_count: s.silence_count,
        word_penalty: opt.beta * s.word_count as f64,
        silence_penalty: opt.gamma * s.silence_count as f64,
        total: s.total,
        effective_beam_size: 0,
    })
}
