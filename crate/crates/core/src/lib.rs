//! Beam-search speech decoding over character-level acoustic emissions with
//! character or word n-gram language models, with or without a lexicon.

pub mod decoder;
pub mod eval;
pub mod formats;
pub mod lexicon;
pub mod ngram;
pub mod perplexity;
pub mod tokens;
pub mod tune;

pub use decoder::{
    brute_force_decode, decode, total_score, DecodeError, DecodeMode, DecodeResult, DecoderOptions,
    EmissionMatrix, SilenceTerm, TransitionMatrix,
};
pub use lexicon::{Lexicon, LexiconTrie};
pub use ngram::{train_char_lm, train_word_lm, LanguageModel, Level, NGramModel};
pub use tokens::{EncodedCharSeq, TokenSet};
