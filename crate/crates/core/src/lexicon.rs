//! Word lexicon and the prefix trie over its token spellings.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::ngram::LanguageModel;
use crate::tokens::{encode_word, TokenError, TokenSet};

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: unknown token {token:?}")]
    UnknownToken { line: usize, token: String },
    #[error("line {line}: invalid spelling: {msg}")]
    InvalidSpelling { line: usize, msg: String },
    #[error("word {word:?}: {source}")]
    Encode {
        word: String,
        #[source]
        source: TokenError,
    },
}

/// Words and their repetition-encoded spellings. Word ids are positions in
/// the sorted word list, so comparing ids compares words.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    entries: BTreeMap<String, BTreeSet<Vec<usize>>>,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one spelling. Spellings must be non-empty, silence-free and start
    /// with a letter; repetition tokens must follow letters.
    pub fn insert(&mut self, word: &str, spelling: Vec<usize>, ts: &TokenSet) -> Result<(), String> {
        if word.is_empty() {
            return Err("empty word".into());
        }
        if spelling.is_empty() {
            return Err("empty spelling".into());
        }
        let mut prev_letter = false;
        for &t in &spelling {
            if ts.is_silence(t) {
                return Err("spelling contains silence".into());
            }
            if ts.is_repetition(t) {
                if !prev_letter {
                    return Err("repetition token without preceding letter".into());
                }
                prev_letter = false;
            } else {
                prev_letter = true;
            }
        }
        self.entries.entry(word.to_string()).or_default().insert(spelling);
        Ok(())
    }

    /// Builds a lexicon with one generated spelling per word.
    pub fn from_words<I, S>(words: I, ts: &TokenSet) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut lex = Self::new();
        for w in words {
            let w = w.as_ref();
            let spelling = encode_word(w, ts)
                .map_err(|source| LexiconError::Encode { word: w.to_string(), source })?;
            lex.insert(w, spelling.into_inner(), ts)
                .expect("generated spellings are valid");
        }
        Ok(lex)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(word)
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn spellings(&self, word: &str) -> Option<&BTreeSet<Vec<usize>>> {
        self.entries.get(word)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &BTreeSet<Vec<usize>>)> {
        self.entries.iter().map(|(w, s)| (w.as_str(), s))
    }

    /// Lexicon file text: `word<TAB>tok tok ...` per spelling.
    pub fn to_text(&self, ts: &TokenSet) -> String {
        let mut out = String::new();
        for (w, spellings) in &self.entries {
            for s in spellings {
                let toks: Vec<&str> = s.iter().map(|&i| ts.token(i)).collect();
                out.push_str(w);
                out.push('\t');
                out.push_str(&toks.join(" "));
                out.push('\n');
            }
        }
        out
    }
}

/// Parses `word<TAB>space-separated tokens` lines. Blank lines are skipped;
/// repeated (word, spelling) pairs collapse.
pub fn load_lexicon(text: &str, ts: &TokenSet) -> Result<Lexicon, LexiconError> {
    let mut lex = Lexicon::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (word, spelling) = line
            .split_once('\t')
            .ok_or_else(|| LexiconError::Parse { line: line_no, msg: "expected word<TAB>spelling".into() })?;
        let word = word.trim();
        let toks = spelling
            .split_whitespace()
            .map(|t| {
                ts.index_of(t)
                    .ok_or_else(|| LexiconError::UnknownToken { line: line_no, token: t.to_string() })
            })
            .collect::<Result<Vec<_>, _>>()?;
        lex.insert(word, toks, ts)
            .map_err(|msg| LexiconError::InvalidSpelling { line: line_no, msg })?;
    }
    Ok(lex)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrieNode {
    pub children: BTreeMap<usize, usize>,
    /// Ids of words whose spelling ends here, ascending.
    pub words: Vec<u32>,
    /// Best word-LM unigram log10 score in the subtree (smeared tries only).
    pub smear: f64,
}

impl TrieNode {
    fn new() -> Self {
        Self { children: BTreeMap::new(), words: Vec::new(), smear: f64::NEG_INFINITY }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LexiconTrie {
    nodes: Vec<TrieNode>,
    words: Vec<String>,
    smeared: bool,
}

impl LexiconTrie {
    pub const ROOT: usize = 0;

    pub fn build(lex: &Lexicon) -> Self {
        let mut nodes = vec![TrieNode::new()];
        let mut words = Vec::with_capacity(lex.len());
        for (id, (word, spellings)) in lex.entries.iter().enumerate() {
            words.push(word.clone());
            for spelling in spellings {
                let mut node = Self::ROOT;
                for &tok in spelling {
                    node = match nodes[node].children.get(&tok) {
                        Some(&child) => child,
                        None => {
                            nodes.push(TrieNode::new());
                            let child = nodes.len() - 1;
                            nodes[node].children.insert(tok, child);
                            child
                        }
                    };
                }
                nodes[node].words.push(id as u32);
            }
        }
        Self { nodes, words, smeared: false }
    }

    /// Propagates word-LM unigram scores (log10) up the trie: each node gets
    /// the max over the words completed in its subtree.
    pub fn smear<L: LanguageModel>(mut self, word_lm: &L) -> Self {
        let unigram: Vec<f64> = self
            .words
            .iter()
            .map(|w| {
                let id = word_lm.token_id(w).or_else(|| word_lm.unk_id());
                id.map_or(f64::NEG_INFINITY, |id| word_lm.unigram(id))
            })
            .collect();
        // children always have larger indices than their parent
        for n in (0..self.nodes.len()).rev() {
            let mut best = f64::NEG_INFINITY;
            for &w in &self.nodes[n].words {
                best = best.max(unigram[w as usize]);
            }
            for &c in self.nodes[n].children.values() {
                best = best.max(self.nodes[c].smear);
            }
            self.nodes[n].smear = best;
        }
        self.smeared = true;
        self
    }

    pub fn is_smeared(&self) -> bool {
        self.smeared
    }

    pub fn node(&self, id: usize) -> &TrieNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.len() == 1
    }

    pub fn child(&self, node: usize, token: usize) -> Option<usize> {
        self.nodes[node].children.get(&token).copied()
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn word_count(&self) -> usize {
        self.words.len()
    }

    pub fn word_id(&self, word: &str) -> Option<u32> {
        self.words.binary_search_by(|w| w.as_str().cmp(word)).ok().map(|i| i as u32)
    }

    /// Node reached by following `spelling` from the root.
    pub fn walk(&self, spelling: &[usize]) -> Option<usize> {
        spelling.iter().try_fold(Self::ROOT, |n, &t| self.child(n, t))
    }

    /// Words whose spelling is exactly `spelling`.
    pub fn lookup(&self, spelling: &[usize]) -> &[u32] {
        match self.walk(spelling) {
            Some(n) => &self.nodes[n].words,
            None => &[],
        }
    }
}
