//! Grapheme token set, word/sentence encoding with repetition characters,
//! alignment collapsing, and LM corpus preparation.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

pub const SILENCE: &str = "|";
pub const REP1: &str = "1";
pub const REP2: &str = "2";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TokenError {
    #[error("character {0:?} has no token")]
    UnknownCharacter(char),
    #[error("unknown token {0:?}")]
    UnknownToken(String),
    #[error("empty word")]
    EmptyWord,
    #[error("repetition token at position {0} has no preceding letter")]
    DanglingRepetition(usize),
    #[error("run of {run} identical characters {ch:?} cannot be encoded without repetition tokens")]
    UnencodableRun { ch: char, run: usize },
    #[error("token index {0} out of range")]
    InvalidIndex(usize),
    #[error("invalid token set: {0}")]
    InvalidTokenSet(String),
    #[error("sentence {line}: {source}")]
    AtSentence {
        line: usize,
        #[source]
        source: Box<TokenError>,
    },
}

/// Ordered grapheme inventory. Letters are every token that is neither the
/// silence nor a repetition token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSet {
    tokens: Vec<String>,
    index_of: HashMap<String, usize>,
    letter_of: HashMap<char, usize>,
    silence: usize,
    rep1: Option<usize>,
    rep2: Option<usize>,
}

impl TokenSet {
    /// The 31-token English set: `a`..`z`, apostrophe, period, the two
    /// repetition tokens `1` and `2`, and silence `|`.
    pub fn standard() -> Self {
        let mut tokens: Vec<String> = ('a'..='z').map(String::from).collect();
        tokens.extend(["'", ".", REP1, REP2, SILENCE].map(String::from));
        Self::from_tokens(tokens).expect("standard token set is valid")
    }

    /// Builds a set from token strings. `|` is the silence token (required);
    /// `1` and `2` become repetition tokens when present. Every other token
    /// must be a single character.
    pub fn from_tokens<I, S>(tokens: I) -> Result<Self, TokenError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        let mut index_of = HashMap::with_capacity(tokens.len());
        let mut letter_of = HashMap::new();
        for (i, tok) in tokens.iter().enumerate() {
            if index_of.insert(tok.clone(), i).is_some() {
                return Err(TokenError::InvalidTokenSet(format!("duplicate token {tok:?}")));
            }
            if tok == SILENCE || tok == REP1 || tok == REP2 {
                continue;
            }
            let mut chars = tok.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => {
                    letter_of.insert(c, i);
                }
                _ => {
                    return Err(TokenError::InvalidTokenSet(format!(
                        "letter token {tok:?} must be a single character"
                    )))
                }
            }
        }
        let silence = *index_of
            .get(SILENCE)
            .ok_or_else(|| TokenError::InvalidTokenSet("missing silence token".into()))?;
        let rep1 = index_of.get(REP1).copied();
        let rep2 = index_of.get(REP2).copied();
        if rep2.is_some() && rep1.is_none() {
            return Err(TokenError::InvalidTokenSet("rep2 without rep1".into()));
        }
        Ok(Self { tokens, index_of, letter_of, silence, rep1, rep2 })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, idx: usize) -> &str {
        &self.tokens[idx]
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index_of.get(token).copied()
    }

    pub fn silence(&self) -> usize {
        self.silence
    }

    pub fn rep1(&self) -> Option<usize> {
        self.rep1
    }

    pub fn rep2(&self) -> Option<usize> {
        self.rep2
    }

    pub fn is_silence(&self, idx: usize) -> bool {
        idx == self.silence
    }

    pub fn is_repetition(&self, idx: usize) -> bool {
        Some(idx) == self.rep1 || Some(idx) == self.rep2
    }

    pub fn is_letter(&self, idx: usize) -> bool {
        idx < self.tokens.len() && !self.is_silence(idx) && !self.is_repetition(idx)
    }

    /// Number of extra copies a repetition token stands for.
    fn extra_copies(&self, idx: usize) -> usize {
        if Some(idx) == self.rep1 {
            1
        } else {
            2
        }
    }

    fn max_run(&self) -> usize {
        match (self.rep1, self.rep2) {
            (Some(_), Some(_)) => 3,
            (Some(_), None) => 2,
            _ => 1,
        }
    }

    fn letter_char(&self, idx: usize) -> char {
        self.tokens[idx].chars().next().expect("letter tokens are one char")
    }
}

impl fmt::Display for TokenSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.tokens.join(" "))
    }
}

/// Sequence of token indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EncodedCharSeq(pub Vec<usize>);

impl EncodedCharSeq {
    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn render(&self, ts: &TokenSet) -> String {
        self.0.iter().map(|&i| ts.token(i)).collect::<Vec<_>>().join(" ")
    }
}

impl From<Vec<usize>> for EncodedCharSeq {
    fn from(v: Vec<usize>) -> Self {
        Self(v)
    }
}

impl AsRef<[usize]> for EncodedCharSeq {
    fn as_ref(&self) -> &[usize] {
        &self.0
    }
}

impl std::ops::Deref for EncodedCharSeq {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

/// Encodes one word. Input is lowercased; runs of identical characters use
/// repetition tokens (`ann` -> `a n 1`), runs longer than the token set can
/// express are split greedily (`aaaa` -> `a 2 a`).
pub fn encode_word(word: &str, ts: &TokenSet) -> Result<EncodedCharSeq, TokenError> {
    let lower = word.to_lowercase();
    let chars: Vec<char> = lower.chars().collect();
    if chars.is_empty() {
        return Err(TokenError::EmptyWord);
    }
    let max_run = ts.max_run();
    let mut out = Vec::with_capacity(chars.len());
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let idx = *ts.letter_of.get(&c).ok_or(TokenError::UnknownCharacter(c))?;
        let mut run = 1;
        while i + run < chars.len() && chars[i + run] == c {
            run += 1;
        }
        if max_run == 1 && run > 1 {
            return Err(TokenError::UnencodableRun { ch: c, run });
        }
        let mut left = run;
        while left > 0 {
            let chunk = left.min(max_run);
            out.push(idx);
            match chunk {
                2 => out.push(ts.rep1.expect("max_run >= 2")),
                3 => out.push(ts.rep2.expect("max_run == 3")),
                _ => {}
            }
            left -= chunk;
        }
        i += run;
    }
    Ok(EncodedCharSeq(out))
}

/// Joins encoded words with single silence tokens. With `eos == false` the
/// sequence is mid-stream and ends with a silence terminator.
pub fn encode_sentence<S: AsRef<str>>(
    words: &[S],
    ts: &TokenSet,
    eos: bool,
) -> Result<EncodedCharSeq, TokenError> {
    let mut out = Vec::new();
    for (i, w) in words.iter().enumerate() {
        if i > 0 {
            out.push(ts.silence);
        }
        out.extend(encode_word(w.as_ref(), ts)?.0);
    }
    if !eos && !out.is_empty() {
        out.push(ts.silence);
    }
    Ok(EncodedCharSeq(out))
}

/// Splits on silence and expands repetition tokens back into letters.
pub fn decode_chars(seq: &[usize], ts: &TokenSet) -> Result<Vec<String>, TokenError> {
    let mut words = Vec::new();
    let mut current = String::new();
    let mut prev_letter: Option<usize> = None;
    for (pos, &idx) in seq.iter().enumerate() {
        if idx >= ts.len() {
            return Err(TokenError::InvalidIndex(idx));
        }
        if ts.is_silence(idx) {
            if !current.is_empty() {
                words.push(std::mem::take(&mut current));
            }
            prev_letter = None;
        } else if ts.is_repetition(idx) {
            let letter = prev_letter.ok_or(TokenError::DanglingRepetition(pos))?;
            let c = ts.letter_char(letter);
            for _ in 0..ts.extra_copies(idx) {
                current.push(c);
            }
            // a repetition cannot itself be repeated
            prev_letter = None;
        } else {
            current.push(ts.letter_char(idx));
            prev_letter = Some(idx);
        }
    }
    if !current.is_empty() {
        words.push(current);
    }
    Ok(words)
}

/// Collapses runs of identical consecutive alignment tokens.
pub fn collapse_alignment(alignment: &[usize]) -> EncodedCharSeq {
    let mut out: Vec<usize> = Vec::with_capacity(alignment.len());
    for &tok in alignment {
        if out.last() != Some(&tok) {
            out.push(tok);
        }
    }
    EncodedCharSeq(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusPrepConfig {
    pub min_word_count: usize,
    pub max_vocab: Option<usize>,
    pub unknown_token: String,
}

impl Default for CorpusPrepConfig {
    fn default() -> Self {
        Self { min_word_count: 0, max_vocab: None, unknown_token: "<unk>".to_string() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PreparedCorpus {
    /// Sentences with out-of-vocabulary words replaced by the unknown token.
    pub words: Vec<Vec<String>>,
    /// Encoded original sentences (no trailing silence).
    pub chars: Vec<EncodedCharSeq>,
    /// Vocabulary ordered by descending count, ties lexicographic.
    pub vocabulary: Vec<String>,
}

/// Builds word and character LM corpora from raw sentences.
pub fn prepare_lm_corpus<I, S>(
    sentences: I,
    cfg: &CorpusPrepConfig,
    ts: &TokenSet,
) -> Result<PreparedCorpus, TokenError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut raw: Vec<Vec<String>> = Vec::new();
    let mut chars = Vec::new();
    let mut counts: HashMap<String, usize> = HashMap::new();
    for (line, sentence) in sentences.into_iter().enumerate() {
        let words: Vec<String> =
            sentence.as_ref().split_whitespace().map(str::to_lowercase).collect();
        let encoded = encode_sentence(&words, ts, true)
            .map_err(|e| TokenError::AtSentence { line: line + 1, source: Box::new(e) })?;
        for w in &words {
            *counts.entry(w.clone()).or_default() += 1;
        }
        chars.push(encoded);
        raw.push(words);
    }

    let vocabulary = select_vocabulary(&counts, cfg.min_word_count, cfg.max_vocab);
    let in_vocab: std::collections::HashSet<&str> =
        vocabulary.iter().map(String::as_str).collect();
    let words = raw
        .iter()
        .map(|s| {
            s.iter()
                .map(|w| {
                    if in_vocab.contains(w.as_str()) {
                        w.clone()
                    } else {
                        cfg.unknown_token.clone()
                    }
                })
                .collect()
        })
        .collect();
    Ok(PreparedCorpus { words, chars, vocabulary })
}

/// Words with count >= `min_count`, most frequent first (ties lexicographic),
/// truncated to `max_vocab`.
pub fn select_vocabulary(
    counts: &HashMap<String, usize>,
    min_count: usize,
    max_vocab: Option<usize>,
) -> Vec<String> {
    let mut entries: Vec<(&String, usize)> =
        counts.iter().filter(|(_, &c)| c >= min_count).map(|(w, &c)| (w, c)).collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    if let Some(max) = max_vocab {
        entries.truncate(max);
    }
    entries.into_iter().map(|(w, _)| w.clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn idx(ts: &TokenSet, s: &str) -> Vec<usize> {
        s.split(' ').map(|t| ts.index_of(t).unwrap()).collect()
    }

    #[test]
    fn standard_set_layout() {
        let ts = TokenSet::standard();
        assert_eq!(ts.len(), 31);
        let letters = (0..31).filter(|&i| ts.is_letter(i)).count();
        assert_eq!(letters, 28);
        let special = [ts.silence(), ts.rep1().unwrap(), ts.rep2().unwrap()];
        assert!(special[0] != special[1] && special[1] != special[2] && special[0] != special[2]);
        for (i, t) in ts.tokens().iter().enumerate() {
            assert_eq!(ts.index_of(t), Some(i));
        }
    }

    #[test]
    fn encode_word_examples() {
        let ts = TokenSet::standard();
        assert_eq!(encode_word("ann", &ts).unwrap().0, idx(&ts, "a n 1"));
        assert_eq!(encode_word("a", &ts).unwrap().0, idx(&ts, "a"));
        assert_eq!(encode_word("www", &ts).unwrap().0, idx(&ts, "w 2"));
        assert_eq!(encode_word("aaaa", &ts).unwrap().0, idx(&ts, "a 2 a"));
        assert_eq!(encode_word("aaaaa", &ts).unwrap().0, idx(&ts, "a 2 a 1"));
        assert_eq!(encode_word("Ann", &ts).unwrap().0, idx(&ts, "a n 1"));
        assert_eq!(encode_word("o'neil.", &ts).unwrap().0, idx(&ts, "o ' n e i l ."));
    }

    #[test]
    fn encode_word_errors() {
        let ts = TokenSet::standard();
        assert_eq!(encode_word("", &ts), Err(TokenError::EmptyWord));
        assert_eq!(encode_word("a1", &ts), Err(TokenError::UnknownCharacter('1')));
        assert_eq!(encode_word("a|b", &ts), Err(TokenError::UnknownCharacter('|')));
        let small = TokenSet::from_tokens(["a", "b", "|"]).unwrap();
        assert!(matches!(encode_word("aa", &small), Err(TokenError::UnencodableRun { .. })));
    }

    #[test]
    fn decode_examples() {
        let ts = TokenSet::standard();
        assert_eq!(decode_chars(&idx(&ts, "a n 1 | c a t"), &ts).unwrap(), ["ann", "cat"]);
        assert_eq!(decode_chars(&idx(&ts, "| a |"), &ts).unwrap(), ["a"]);
        assert_eq!(decode_chars(&idx(&ts, "| | a | | b"), &ts).unwrap(), ["a", "b"]);
        assert_eq!(decode_chars(&idx(&ts, "1 a"), &ts), Err(TokenError::DanglingRepetition(0)));
        assert_eq!(decode_chars(&idx(&ts, "a | 2"), &ts), Err(TokenError::DanglingRepetition(2)));
        assert_eq!(decode_chars(&idx(&ts, "a 1 2"), &ts), Err(TokenError::DanglingRepetition(2)));
    }

    #[test]
    fn encode_sentence_examples() {
        let ts = TokenSet::standard();
        assert_eq!(encode_sentence(&["ann", "cat"], &ts, true).unwrap().0, idx(&ts, "a n 1 | c a t"));
        assert_eq!(encode_sentence(&["a"], &ts, true).unwrap().0, idx(&ts, "a"));
        assert_eq!(encode_sentence(&["a"], &ts, false).unwrap().0, idx(&ts, "a |"));
        let empty: [&str; 0] = [];
        assert!(encode_sentence(&empty, &ts, true).unwrap().is_empty());
    }

    #[test]
    fn collapse_examples() {
        let ts = TokenSet::standard();
        assert_eq!(collapse_alignment(&idx(&ts, "a a n n n 1")).0, idx(&ts, "a n 1"));
        assert_eq!(collapse_alignment(&idx(&ts, "a")).0, idx(&ts, "a"));
        assert_eq!(collapse_alignment(&idx(&ts, "| | |")).0, idx(&ts, "|"));
        assert!(collapse_alignment(&[]).is_empty());
    }

    #[test]
    fn prepare_corpus_thresholds() {
        let ts = TokenSet::standard();
        let cfg = CorpusPrepConfig { min_word_count: 2, ..Default::default() };
        let p = prepare_lm_corpus(["a b", "a c", "a b"], &cfg, &ts).unwrap();
        assert_eq!(p.vocabulary, ["a", "b"]);
        assert_eq!(p.words[1], ["a", "<unk>"]);
        assert_eq!(decode_chars(&p.chars[1], &ts).unwrap(), ["a", "c"]);

        let p = prepare_lm_corpus(["b a", "c"], &CorpusPrepConfig::default(), &ts).unwrap();
        assert_eq!(p.vocabulary, ["a", "b", "c"]);
        assert_eq!(p.words, [vec!["b", "a"], vec!["c"]]);

        let empty: [&str; 0] = [];
        let p = prepare_lm_corpus(empty, &CorpusPrepConfig::default(), &ts).unwrap();
        assert_eq!(p, PreparedCorpus::default());
    }

    #[test]
    fn prepare_corpus_truncation_tie_break() {
        let ts = TokenSet::standard();
        let cfg = CorpusPrepConfig { max_vocab: Some(2), ..Default::default() };
        let p = prepare_lm_corpus(["z y x", "z"], &cfg, &ts).unwrap();
        assert_eq!(p.vocabulary, ["z", "x"]);
    }

    #[test]
    fn prepare_corpus_reports_line() {
        let ts = TokenSet::standard();
        let err = prepare_lm_corpus(["ok", "bad#"], &CorpusPrepConfig::default(), &ts).unwrap_err();
        assert!(matches!(err, TokenError::AtSentence { line: 2, .. }));
    }

    proptest! {
        #[test]
        fn round_trip(words in proptest::collection::vec("[a-e'.]{1,9}", 0..5)) {
            let ts = TokenSet::standard();
            let enc = encode_sentence(&words, &ts, true).unwrap();
            prop_assert_eq!(decode_chars(&enc, &ts).unwrap(), words);
        }

        #[test]
        fn no_consecutive_duplicates(word in "[a-c]{1,12}") {
            let ts = TokenSet::standard();
            let enc = encode_word(&word, &ts).unwrap();
            prop_assert!(enc.windows(2).all(|w| w[0] != w[1]));
            prop_assert!(!enc.contains(&ts.silence()));
        }

        #[test]
        fn collapse_idempotent(al in proptest::collection::vec(0usize..4, 0..20)) {
            let once = collapse_alignment(&al);
            prop_assert_eq!(collapse_alignment(&once), once);
        }
    }
}
