use std::collections::hash_map::Entry as MapEntry;
use std::collections::HashMap;
use std::f64::consts::LN_10;

use super::{
    check_inputs, DecodeError, DecodeMode, DecodeResult, DecoderOptions, EmissionMatrix, LmBinding,
    SilenceTerm, TransitionMatrix, TIE_EPSILON,
};
use crate::lexicon::LexiconTrie;
use crate::ngram::LanguageModel;
use crate::tokens::{collapse_alignment, decode_chars, TokenSet};

/// `weight * score`, with a zero weight silencing infinite scores.
pub(crate) fn weighted(weight: f64, score: f64) -> f64 {
    if weight == 0.0 {
        0.0
    } else {
        weight * score
    }
}

#[derive(Clone)]
struct Hyp<S> {
    score: f64,
    am: f64,
    lm: f64,
    words: u32,
    silences: u32,
    state: S,
    node: usize,
    last: Option<usize>,
    /// Lookahead currently included in `score` (natural log, unweighted).
    smear: f64,
    align_rank: u32,
    order: u32,
}

/// Orders hypotheses of one frame by (alignment, word ids), lexicographically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct OrderKey {
    parent_align: u32,
    token: u32,
    parent_order: u32,
    word: Option<u32>,
}

#[derive(Clone, Copy)]
struct Back {
    parent: u32,
    token: u32,
    word: Option<u32>,
}

struct Candidate<S> {
    hyp: Hyp<S>,
    key: OrderKey,
    back: Back,
}

fn better<K: Ord>(score: f64, key: K, than_score: f64, than_key: K) -> bool {
    if score > than_score + TIE_EPSILON {
        true
    } else if score >= than_score - TIE_EPSILON {
        key < than_key
    } else {
        false
    }
}

struct Search<'a, L: LanguageModel> {
    ts: &'a TokenSet,
    lm: &'a L,
    lex: Option<&'a LexiconTrie>,
    opt: &'a DecoderOptions,
    binding: LmBinding,
    smear: Option<Vec<f64>>,
    cands: Vec<Candidate<L::State>>,
    index: HashMap<(L::State, usize, Option<usize>), usize>,
}

impl<L: LanguageModel> Search<'_, L> {
    fn push(&mut self, cand: Candidate<L::State>) {
        let key = (cand.hyp.state.clone(), cand.hyp.node, cand.hyp.last);
        match self.index.entry(key) {
            MapEntry::Vacant(e) => {
                e.insert(self.cands.len());
                self.cands.push(cand);
            }
            MapEntry::Occupied(e) => {
                let cur = &mut self.cands[*e.get()];
                if better(cand.hyp.score, cand.key, cur.hyp.score, cur.key) {
                    *cur = cand;
                }
            }
        }
    }

    fn token_lm(&self, token: usize) -> u32 {
        match &self.binding {
            LmBinding::Tokens(ids) => ids[token],
            LmBinding::Words(_) => unreachable!("word binding in character mode"),
        }
    }

    fn word_lm(&self, word: u32) -> u32 {
        match &self.binding {
            LmBinding::Words(ids) => ids[word as usize],
            LmBinding::Tokens(_) => unreachable!("token binding in word mode"),
        }
    }

    fn advance_lm(&self, h: &mut Hyp<L::State>, lm_token: u32) {
        let (next, lp) = self.lm.score(&h.state, lm_token);
        let ln = lp * LN_10;
        h.state = next;
        h.lm += ln;
        h.score += weighted(self.opt.alpha, ln);
    }

    fn add_silence(&self, h: &mut Hyp<L::State>) {
        h.silences += 1;
        h.score += self.opt.gamma;
    }

    fn add_word(&self, h: &mut Hyp<L::State>) {
        h.words += 1;
        h.score += self.opt.beta;
    }

    /// Replaces the lookahead currently in the score by `to`.
    fn move_smear(&self, h: &mut Hyp<L::State>, to: f64) {
        h.score += weighted(self.opt.alpha, to - h.smear);
        h.smear = to;
    }

    /// Completes `word` in word-LM mode: drop lookahead, add the real score.
    fn complete_word(&self, h: &mut Hyp<L::State>, word: u32) {
        self.move_smear(h, 0.0);
        self.advance_lm(h, self.word_lm(word));
        self.add_word(h);
    }

    /// Children of `h` after emitting a new label `v`.
    fn extend_label(&self, h: &Hyp<L::State>, v: usize, mut child: Hyp<L::State>, out: &mut Vec<(Hyp<L::State>, Option<u32>)>) {
        let sil = self.ts.silence();
        child.last = Some(v);
        match self.opt.mode {
            DecodeMode::CharLmFree => {
                if self.ts.is_repetition(v) && !h.last.is_some_and(|p| self.ts.is_letter(p)) {
                    return;
                }
                self.advance_lm(&mut child, self.token_lm(v));
                if v == sil {
                    if h.last.is_some_and(|p| p != sil) {
                        self.add_word(&mut child);
                    }
                    self.add_silence(&mut child);
                }
                out.push((child, None));
            }
            DecodeMode::CharLmLexicon => {
                let lex = self.lex.expect("lexicon checked");
                if v == sil {
                    self.advance_lm(&mut child, self.token_lm(v));
                    self.add_silence(&mut child);
                    child.node = LexiconTrie::ROOT;
                    if h.node == LexiconTrie::ROOT {
                        out.push((child, None));
                    } else {
                        for &w in &lex.node(h.node).words {
                            let mut c = child.clone();
                            self.add_word(&mut c);
                            out.push((c, Some(w)));
                        }
                    }
                } else if let Some(next) = lex.child(h.node, v) {
                    self.advance_lm(&mut child, self.token_lm(v));
                    child.node = next;
                    out.push((child, None));
                }
            }
            DecodeMode::WordLmLexicon => {
                let lex = self.lex.expect("lexicon checked");
                if v == sil {
                    self.add_silence(&mut child);
                    child.node = LexiconTrie::ROOT;
                    if h.node == LexiconTrie::ROOT {
                        out.push((child, None));
                    } else {
                        for &w in &lex.node(h.node).words {
                            let mut c = child.clone();
                            self.complete_word(&mut c, w);
                            out.push((c, Some(w)));
                        }
                    }
                } else if let Some(next) = lex.child(h.node, v) {
                    child.node = next;
                    if let Some(smear) = &self.smear {
                        self.move_smear(&mut child, smear[next]);
                    }
                    out.push((child, None));
                }
            }
        }
    }

    /// Closes the sentence: open words end as if followed by silence, then
    /// the end-of-sentence score is added.
    fn finalize(&self, h: &Hyp<L::State>, out: &mut Vec<(Hyp<L::State>, Option<u32>)>) {
        let sil = self.ts.silence();
        let eos = |mut f: Hyp<L::State>, out: &mut Vec<(Hyp<L::State>, Option<u32>)>, word| {
            let ln = self.lm.finish(&f.state) * LN_10;
            f.lm += ln;
            f.score += weighted(self.opt.alpha, ln);
            out.push((f, word));
        };
        match self.opt.mode {
            DecodeMode::CharLmFree => {
                let mut f = h.clone();
                if h.last.is_some_and(|p| p != sil) {
                    self.add_word(&mut f);
                }
                eos(f, out, None);
            }
            DecodeMode::CharLmLexicon | DecodeMode::WordLmLexicon => {
                if h.node == LexiconTrie::ROOT {
                    eos(h.clone(), out, None);
                    return;
                }
                let lex = self.lex.expect("lexicon checked");
                for &w in &lex.node(h.node).words {
                    let mut f = h.clone();
                    if self.opt.mode == DecodeMode::WordLmLexicon {
                        self.complete_word(&mut f, w);
                    } else {
                        self.add_word(&mut f);
                    }
                    eos(f, out, Some(w));
                }
            }
        }
    }

    /// Threshold and histogram pruning, then order ranks for the survivors.
    fn prune(&mut self) -> Vec<Candidate<L::State>> {
        let mut cands = std::mem::take(&mut self.cands);
        self.index.clear();
        if self.opt.beam_threshold.is_finite() {
            let best = cands.iter().map(|c| c.hyp.score).fold(f64::NEG_INFINITY, f64::max);
            let floor = best - self.opt.beam_threshold;
            cands.retain(|c| c.hyp.score >= floor);
        }
        cands.sort_by(|a, b| b.hyp.score.total_cmp(&a.hyp.score).then(a.key.cmp(&b.key)));
        cands.truncate(self.opt.beam_size);

        let mut by_key: Vec<usize> = (0..cands.len()).collect();
        by_key.sort_by_key(|&i| cands[i].key);
        let mut align_rank = 0u32;
        let mut prev_align = None;
        for (pos, &i) in by_key.iter().enumerate() {
            let k = cands[i].key;
            let a = (k.parent_align, k.token);
            if prev_align.is_some_and(|p| p != a) {
                align_rank += 1;
            }
            prev_align = Some(a);
            cands[i].hyp.align_rank = align_rank;
            cands[i].hyp.order = pos as u32;
        }
        cands
    }
}

/// Beam-search decode of one utterance.
pub fn decode<L: LanguageModel>(
    em: &EmissionMatrix,
    tr: Option<&TransitionMatrix>,
    lm: &L,
    lex: Option<&LexiconTrie>,
    opt: &DecoderOptions,
) -> Result<DecodeResult, DecodeError> {
    let binding = check_inputs(em, tr, lm, lex, opt)?;
    let ts = em.tokens();
    let smear = match (opt.mode, lex) {
        (DecodeMode::WordLmLexicon, Some(lex)) if lex.is_smeared() => Some(
            (0..lex.len())
                .map(|n| {
                    let s = lex.node(n).smear;
                    if s.is_finite() {
                        s * LN_10
                    } else {
                        0.0
                    }
                })
                .collect(),
        ),
        _ => None,
    };
    let mut search = Search {
        ts,
        lm,
        lex: if opt.mode.uses_lexicon() { lex } else { None },
        opt,
        binding,
        smear,
        cands: Vec::new(),
        index: HashMap::new(),
    };

    let mut beam = vec![Hyp {
        score: 0.0,
        am: 0.0,
        lm: 0.0,
        words: 0,
        silences: 0,
        state: lm.start_state(),
        node: LexiconTrie::ROOT,
        last: None,
        smear: 0.0,
        align_rank: 0,
        order: 0,
    }];
    let mut backs: Vec<Vec<Back>> = Vec::with_capacity(em.frames());
    let mut children = Vec::new();
    let per_frame = opt.silence_term == SilenceTerm::PerFrame;

    for t in 0..em.frames() {
        let row = em.row(t);
        for (pi, h) in beam.iter().enumerate() {
            for (v, &emit) in row.iter().enumerate() {
                let trans = match (h.last, tr) {
                    (Some(p), Some(tr)) => tr.get(p, v),
                    _ => 0.0,
                };
                let gain = emit + trans;
                let mut child = h.clone();
                child.am += gain;
                child.score += gain;
                if per_frame && v == ts.silence() {
                    // every silence frame counts; new labels are counted below
                    if h.last == Some(v) {
                        search.add_silence(&mut child);
                    }
                }
                children.clear();
                if h.last == Some(v) {
                    children.push((child, None));
                } else {
                    search.extend_label(h, v, child, &mut children);
                }
                for (hyp, word) in children.drain(..) {
                    let key = OrderKey {
                        parent_align: h.align_rank,
                        token: v as u32,
                        parent_order: h.order,
                        word,
                    };
                    search.push(Candidate { hyp, key, back: Back { parent: pi as u32, token: v as u32, word } });
                }
            }
        }
        let survivors = search.prune();
        if survivors.is_empty() {
            return Err(DecodeError::EmptyBeam);
        }
        backs.push(survivors.iter().map(|c| c.back).collect());
        beam = survivors.into_iter().map(|c| c.hyp).collect();
    }

    // finalize
    type Final<S> = (Hyp<S>, (u32, u32, Option<u32>), usize, Option<u32>);
    let mut best: Option<Final<L::State>> = None;
    let mut finals = Vec::new();
    let mut keyed = Vec::new();
    for (i, h) in beam.iter().enumerate() {
        finals.clear();
        search.finalize(h, &mut finals);
        for (f, word) in finals.drain(..) {
            keyed.push((f, (h.align_rank, h.order, word), i, word));
        }
    }
    keyed.sort_by_key(|k| k.1);
    for cand in keyed {
        let replace = match &best {
            None => true,
            Some(b) => better(cand.0.score, cand.1, b.0.score, b.1),
        };
        if replace {
            best = Some(cand);
        }
    }
    let (hyp, _, last_index, final_word) = best.ok_or(DecodeError::EmptyBeam)?;

    // backtrace
    let frames = em.frames();
    let mut alignment = vec![0usize; frames];
    let mut word_ids = Vec::new();
    if let Some(w) = final_word {
        word_ids.push(w);
    }
    let mut idx = last_index;
    let mut worst_rank = 0;
    for t in (0..frames).rev() {
        worst_rank = worst_rank.max(idx);
        let b = backs[t][idx];
        alignment[t] = b.token as usize;
        if let Some(w) = b.word {
            word_ids.push(w);
        }
        idx = b.parent as usize;
    }
    word_ids.reverse();

    let (words, word_ids) = match search.lex {
        Some(lex) => (word_ids.iter().map(|&w| lex.word(w).to_string()).collect(), Some(word_ids)),
        None => (
            decode_chars(&collapse_alignment(&alignment), ts).expect("search only emits decodable labels"),
            None,
        ),
    };
    Ok(DecodeResult {
        words,
        word_ids,
        alignment,
        am_score: hyp.am,
        lm_score: hyp.lm,
        word_count: hyp.words as usize,
        silence_count: hyp.silences as usize,
        word_penalty: opt.beta * hyp.words as f64,
        silence_penalty: opt.gamma * hyp.silences as f64,
        total: hyp.score,
        effective_beam_size: worst_rank + 1,
    })
}
