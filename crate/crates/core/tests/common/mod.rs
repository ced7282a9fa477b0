#![allow(dead_code)]

use lexfree::decoder::{DecodeMode, DecoderOptions, EmissionMatrix, SilenceTerm, TransitionMatrix};
use lexfree::ngram::PruneSpec;
use lexfree::{train_char_lm, train_word_lm, Lexicon, LexiconTrie, NGramModel, TokenSet};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A small decoding problem: emissions, optional transitions, both LMs, a
/// lexicon and options for one mode.
pub struct Instance {
    pub ts: TokenSet,
    pub em: EmissionMatrix,
    pub tr: Option<TransitionMatrix>,
    pub char_lm: NGramModel,
    pub word_lm: NGramModel,
    pub lexicon: Lexicon,
    pub trie: LexiconTrie,
    pub opt: DecoderOptions,
}

impl Instance {
    pub fn lm_is_word(&self) -> bool {
        self.opt.mode == DecodeMode::WordLmLexicon
    }
}

fn random_word(rng: &mut impl Rng, letters: &[&str], max_len: usize) -> String {
    let len = rng.random_range(1..=max_len);
    (0..len).map(|_| *letters.choose(rng).unwrap()).collect()
}

/// Token set of at most 4 tokens: 1-3 letters, maybe `1`, always `|`.
pub fn random_token_set(rng: &mut impl Rng) -> (TokenSet, Vec<&'static str>) {
    let with_rep = rng.random_bool(0.35);
    let max_letters = if with_rep { 2 } else { 3 };
    let n_letters = rng.random_range(1..=max_letters);
    let letters: Vec<&'static str> = ["a", "b", "c"][..n_letters].to_vec();
    let mut toks: Vec<&str> = letters.clone();
    if with_rep {
        toks.push("1");
    }
    toks.push("|");
    (TokenSet::from_tokens(toks).unwrap(), letters)
}

/// Lexicon of 1-3 words with random valid spellings; homographs happen.
pub fn random_lexicon(rng: &mut impl Rng, ts: &TokenSet, letters: &[&str]) -> Lexicon {
    let mut lex = Lexicon::new();
    let n = rng.random_range(1..=3);
    let names = ["x", "y", "z"];
    for name in &names[..n] {
        loop {
            let len = rng.random_range(1..=3);
            let mut spelling = Vec::new();
            let mut prev_letter = false;
            for _ in 0..len {
                let rep = ts.rep1().filter(|_| prev_letter && rng.random_bool(0.3));
                match rep {
                    Some(r) => {
                        spelling.push(r);
                        prev_letter = false;
                    }
                    None => {
                        let l = ts.index_of(letters.choose(rng).unwrap()).unwrap();
                        if spelling.last() == Some(&l) {
                            continue;
                        }
                        spelling.push(l);
                        prev_letter = true;
                    }
                }
            }
            if !spelling.is_empty() && lex.insert(name, spelling, ts).is_ok() {
                break;
            }
        }
    }
    lex
}

pub fn random_options(rng: &mut impl Rng, mode: DecodeMode, silence_term: SilenceTerm) -> DecoderOptions {
    DecoderOptions {
        alpha: rng.random_range(0.0..5.0),
        beta: rng.random_range(-5.0..5.0),
        gamma: rng.random_range(-5.0..5.0),
        beam_size: 10_000,
        beam_threshold: f64::INFINITY,
        mode,
        silence_term,
    }
}

pub fn random_instance(rng: &mut impl Rng, mode: DecodeMode, silence_term: SilenceTerm) -> Instance {
    let (ts, letters) = random_token_set(rng);
    let n = ts.len();
    let frames = rng.random_range(1..=4);
    let scores: Vec<f64> = (0..frames * n).map(|_| rng.random_range(-6.0..0.0)).collect();
    let em = EmissionMatrix::new(ts.clone(), scores).unwrap();
    let tr = rng
        .random_bool(0.5)
        .then(|| TransitionMatrix::new(n, (0..n * n).map(|_| rng.random_range(-2.0..0.0)).collect()).unwrap());

    let lexicon = random_lexicon(rng, &ts, &letters);
    let words: Vec<String> = lexicon.words().map(String::from).collect();

    let char_sents: Vec<Vec<usize>> = (0..rng.random_range(1..=4))
        .map(|_| {
            let sent: Vec<String> = (0..rng.random_range(1..=3)).map(|_| random_word(rng, &letters, 3)).collect();
            lexfree::tokens::encode_sentence(&sent, &ts, true).map(|e| e.into_inner()).unwrap_or_default()
        })
        .collect();
    let char_order = rng.random_range(1..=3);
    let char_lm = train_char_lm(&char_sents, &ts, char_order, &PruneSpec::none()).unwrap();

    let word_sents: Vec<Vec<String>> = (0..rng.random_range(1..=4))
        .map(|_| (0..rng.random_range(1..=3)).map(|_| words.choose(rng).unwrap().clone()).collect())
        .collect();
    // sometimes leave a lexicon word out of the LM vocabulary
    let mut lm_vocab = words.clone();
    if lm_vocab.len() > 1 && rng.random_bool(0.3) {
        lm_vocab.pop();
    }
    let word_order = rng.random_range(1..=3);
    let word_lm = train_word_lm(&word_sents, &lm_vocab, word_order, &PruneSpec::none()).unwrap();

    let mut trie = LexiconTrie::build(&lexicon);
    if mode == DecodeMode::WordLmLexicon && rng.random_bool(0.5) {
        trie = trie.smear(&word_lm);
    }
    let opt = random_options(rng, mode, silence_term);
    Instance { ts, em, tr, char_lm, word_lm, lexicon, trie, opt }
}

/// Runs `f` with the LM that matches the instance's mode.
#[macro_export]
macro_rules! with_lm {
    ($inst:expr, |$lm:ident| $body:expr) => {{
        if $inst.lm_is_word() {
            let $lm = &$inst.word_lm;
            $body
        } else {
            let $lm = &$inst.char_lm;
            $body
        }
    }};
}
