use std::collections::HashMap;
use std::fmt::Write as _;

use super::{LmError, Vocab, BOS, EOS};

/// Raw n-gram counts for orders 1..=order.
#[derive(Debug, Clone, PartialEq)]
pub struct CountTable {
    pub order: usize,
    pub vocab: Vocab,
    /// `counts[k]` holds the (k+1)-gram counts.
    pub counts: Vec<HashMap<Vec<u32>, u64>>,
}

impl CountTable {
    pub fn is_empty(&self) -> bool {
        self.counts.iter().all(HashMap::is_empty)
    }

    pub fn get(&self, ngram: &[u32]) -> u64 {
        if ngram.is_empty() || ngram.len() > self.order {
            return 0;
        }
        self.counts[ngram.len() - 1].get(ngram).copied().unwrap_or(0)
    }

    /// Tab-separated dump: space-joined n-gram, TAB, count. Sorted by order then ids.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for table in &self.counts {
            let mut grams: Vec<_> = table.iter().collect();
            grams.sort();
            for (gram, count) in grams {
                let words: Vec<&str> = gram.iter().map(|&id| self.vocab.symbol(id)).collect();
                let _ = writeln!(out, "{}\t{}", words.join(" "), count);
            }
        }
        out
    }

    /// Parses the [`CountTable::to_tsv`] format. The vocabulary is rebuilt
    /// from first appearance; `<s>` and `</s>` always come first.
    pub fn from_tsv(text: &str) -> Result<Self, LmError> {
        let mut vocab = Vocab::from_symbols([BOS, EOS]);
        let mut counts: Vec<HashMap<Vec<u32>, u64>> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |msg: &str| LmError::Parse { line: i + 1, msg: msg.to_string() };
            let (gram, count) = line.split_once('\t').ok_or_else(|| parse_err("missing tab"))?;
            let count: u64 = count.trim().parse().map_err(|_| parse_err("bad count"))?;
            let ids: Vec<u32> = gram.split(' ').map(|w| vocab.insert(w.to_string())).collect();
            if ids.len() > counts.len() {
                counts.resize_with(ids.len(), HashMap::new);
            }
            counts[ids.len() - 1].insert(ids, count);
        }
        Ok(CountTable { order: counts.len(), vocab, counts })
    }
}

/// Counts every k-gram (k <= order) ending at a predicted position. Each
/// sentence is padded with `order - 1` `<s>` markers and followed by `</s>`,
/// so every order receives `len + 1` events per sentence.
pub fn count_ngrams<'a, I>(sentences: I, vocab: &Vocab, order: usize) -> Result<CountTable, LmError>
where
    I: IntoIterator<Item = &'a [u32]>,
{
    if order == 0 {
        return Err(LmError::InvalidOrder(order));
    }
    let bos = vocab.id(BOS).ok_or_else(|| LmError::UnknownToken(BOS.into()))?;
    let eos = vocab.id(EOS).ok_or_else(|| LmError::UnknownToken(EOS.into()))?;
    let mut counts: Vec<HashMap<Vec<u32>, u64>> = vec![HashMap::new(); order];
    let mut padded = Vec::new();
    for sentence in sentences {
        padded.clear();
        padded.resize(order - 1, bos);
        padded.extend_from_slice(sentence);
        padded.push(eos);
        for end in order - 1..padded.len() {
            for k in 1..=order {
                let gram = &padded[end + 1 - k..=end];
                *counts[k - 1].entry(gram.to_vec()).or_default() += 1;
            }
        }
    }
    Ok(CountTable { order, vocab: vocab.clone(), counts })
}
