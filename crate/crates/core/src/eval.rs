//! Error rates, in-vocabulary / out-of-vocabulary utterance splits and OOV
//! word recovery.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("{refs} references but {hyps} hypotheses")]
    LengthMismatch { refs: usize, hyps: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EditOp {
    Match,
    Substitution,
    Insertion,
    Deletion,
}

/// One step of an alignment with the positions it consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlignedPair {
    pub op: EditOp,
    pub ref_pos: Option<usize>,
    pub hyp_pos: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ErrorCounts {
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
}

impl ErrorCounts {
    pub fn total(&self) -> usize {
        self.substitutions + self.insertions + self.deletions
    }

    fn from_ops(ops: &[AlignedPair]) -> Self {
        let mut c = Self::default();
        for p in ops {
            match p.op {
                EditOp::Substitution => c.substitutions += 1,
                EditOp::Insertion => c.insertions += 1,
                EditOp::Deletion => c.deletions += 1,
                EditOp::Match => {}
            }
        }
        c
    }
}

/// Unit-cost Levenshtein distance with one optimal alignment. When several
/// alignments are optimal, the backtrace prefers a diagonal step
/// (match/substitution), then an insertion, then a deletion.
pub fn edit_distance<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> (usize, Vec<AlignedPair>) {
    let (n, m) = (reference.len(), hypothesis.len());
    let w = m + 1;
    let mut d = vec![0usize; (n + 1) * w];
    for (j, cell) in d[..w].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=n {
        d[i * w] = i;
        for j in 1..=m {
            let sub = d[(i - 1) * w + j - 1] + usize::from(reference[i - 1] != hypothesis[j - 1]);
            let ins = d[i * w + j - 1] + 1;
            let del = d[(i - 1) * w + j] + 1;
            d[i * w + j] = sub.min(ins).min(del);
        }
    }

    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = d[i * w + j];
        if i > 0 && j > 0 {
            let same = reference[i - 1] == hypothesis[j - 1];
            if d[(i - 1) * w + j - 1] + usize::from(!same) == here {
                let op = if same { EditOp::Match } else { EditOp::Substitution };
                ops.push(AlignedPair { op, ref_pos: Some(i - 1), hyp_pos: Some(j - 1) });
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if j > 0 && d[i * w + j - 1] + 1 == here {
            ops.push(AlignedPair { op: EditOp::Insertion, ref_pos: None, hyp_pos: Some(j - 1) });
            j -= 1;
        } else {
            ops.push(AlignedPair { op: EditOp::Deletion, ref_pos: Some(i - 1), hyp_pos: None });
            i -= 1;
        }
    }
    ops.reverse();
    (d[n * w + m], ops)
}

fn words(s: &str) -> Vec<&str> {
    s.split_whitespace().collect()
}

/// Characters of the words joined by single spaces.
fn chars(s: &str) -> Vec<char> {
    words(s).join(" ").chars().collect()
}

fn rate(edits: usize, total: usize) -> f64 {
    match (edits, total) {
        (0, _) => 0.0,
        (_, 0) => f64::INFINITY,
        _ => 100.0 * edits as f64 / total as f64,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UttEval {
    pub word: ErrorCounts,
    pub char: ErrorCounts,
    pub ref_words: usize,
    pub ref_chars: usize,
}

/// Pooled corpus error rates (percent).
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEval {
    pub wer: f64,
    pub cer: f64,
    pub n_utts: usize,
    pub n_ref_words: usize,
    pub n_ref_chars: usize,
    pub word_edits: usize,
    pub char_edits: usize,
    pub utterances: Vec<UttEval>,
}

pub fn evaluate_utterance(reference: &str, hypothesis: &str) -> UttEval {
    let (rw, hw) = (words(reference), words(hypothesis));
    let (rc, hc) = (chars(reference), chars(hypothesis));
    UttEval {
        word: ErrorCounts::from_ops(&edit_distance(&rw, &hw).1),
        char: ErrorCounts::from_ops(&edit_distance(&rc, &hc).1),
        ref_words: rw.len(),
        ref_chars: rc.len(),
    }
}

fn pool(utterances: Vec<UttEval>) -> CorpusEval {
    let n_ref_words = utterances.iter().map(|u| u.ref_words).sum();
    let n_ref_chars = utterances.iter().map(|u| u.ref_chars).sum();
    let word_edits = utterances.iter().map(|u| u.word.total()).sum();
    let char_edits = utterances.iter().map(|u| u.char.total()).sum();
    CorpusEval {
        wer: rate(word_edits, n_ref_words),
        cer: rate(char_edits, n_ref_chars),
        n_utts: utterances.len(),
        n_ref_words,
        n_ref_chars,
        word_edits,
        char_edits,
        utterances,
    }
}

pub fn evaluate<R: AsRef<str>, H: AsRef<str>>(refs: &[R], hyps: &[H]) -> Result<CorpusEval, EvalError> {
    if refs.len() != hyps.len() {
        return Err(EvalError::LengthMismatch { refs: refs.len(), hyps: hyps.len() });
    }
    Ok(pool(refs.iter().zip(hyps).map(|(r, h)| evaluate_utterance(r.as_ref(), h.as_ref())).collect()))
}

pub fn wer<R: AsRef<str>, H: AsRef<str>>(refs: &[R], hyps: &[H]) -> Result<f64, EvalError> {
    evaluate(refs, hyps).map(|e| e.wer)
}

pub fn cer<R: AsRef<str>, H: AsRef<str>>(refs: &[R], hyps: &[H]) -> Result<f64, EvalError> {
    evaluate(refs, hyps).map(|e| e.cer)
}

pub fn is_oov_utterance(reference: &str, vocab: &HashSet<String>) -> bool {
    words(reference).iter().any(|w| !vocab.contains(*w))
}

/// Indices of in-vocabulary and out-of-vocabulary utterances (by reference).
pub fn split_iv_oov<R: AsRef<str>>(refs: &[R], vocab: &HashSet<String>) -> (Vec<usize>, Vec<usize>) {
    (0..refs.len()).partition(|&i| !is_oov_utterance(refs[i].as_ref(), vocab))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OovReport {
    pub n_iv_utts: usize,
    pub n_oov_utts: usize,
    pub all: CorpusEval,
    pub iv: CorpusEval,
    pub oov: CorpusEval,
    pub oov_occurrences: usize,
    pub recovered_occurrences: usize,
    pub oov_types: usize,
    pub recovered_types: usize,
    /// Percent; 0 when there are no OOV words.
    pub occurrence_recovery: f64,
    pub type_recovery: f64,
}

fn percent(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

/// Splits the corpus by reference vocabulary and counts OOV reference words
/// whose aligned hypothesis word is the same string.
pub fn oov_recovery<R: AsRef<str>, H: AsRef<str>>(
    refs: &[R],
    hyps: &[H],
    vocab: &HashSet<String>,
) -> Result<OovReport, EvalError> {
    let all = evaluate(refs, hyps)?;
    let (iv_idx, oov_idx) = split_iv_oov(refs, vocab);
    let subset = |idx: &[usize]| pool(idx.iter().map(|&i| all.utterances[i].clone()).collect());

    // word type -> recovered at least once
    let mut types: BTreeMap<&str, bool> = BTreeMap::new();
    let (mut occurrences, mut recovered) = (0, 0);
    for (r, h) in refs.iter().zip(hyps) {
        let (rw, hw) = (words(r.as_ref()), words(h.as_ref()));
        let (_, ops) = edit_distance(&rw, &hw);
        for p in ops {
            let Some(ri) = p.ref_pos else { continue };
            if vocab.contains(rw[ri]) {
                continue;
            }
            occurrences += 1;
            let hit = p.op == EditOp::Match;
            recovered += usize::from(hit);
            *types.entry(rw[ri]).or_insert(false) |= hit;
        }
    }
    let recovered_types = types.values().filter(|&&v| v).count();
    Ok(OovReport {
        n_iv_utts: iv_idx.len(),
        n_oov_utts: oov_idx.len(),
        iv: subset(&iv_idx),
        oov: subset(&oov_idx),
        all,
        oov_occurrences: occurrences,
        recovered_occurrences: recovered,
        oov_types: types.len(),
        recovered_types,
        occurrence_recovery: percent(recovered, occurrences),
        type_recovery: percent(recovered_types, types.len()),
    })
}

/// Per-utterance TSV: utt_id, ref, hyp, #sub, #ins, #del, is_oov_utt.
pub fn utterance_tsv<I, R, H>(ids: &[I], refs: &[R], hyps: &[H], vocab: &HashSet<String>) -> Result<String, EvalError>
where
    I: AsRef<str>,
    R: AsRef<str>,
    H: AsRef<str>,
{
    let all = evaluate(refs, hyps)?;
    let mut out = String::from("utt_id\tref\thyp\tsub\tins\tdel\tis_oov_utt\n");
    for (i, u) in all.utterances.iter().enumerate() {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            ids.get(i).map_or("", AsRef::as_ref),
            refs[i].as_ref(),
            hyps[i].as_ref(),
            u.word.substitutions,
            u.word.insertions,
            u.word.deletions,
            u8::from(is_oov_utterance(refs[i].as_ref(), vocab)),
        );
    }
    Ok(out)
}

/// Summary block laid out as one row per split.
pub fn summary_table(report: &OovReport) -> String {
    let mut out = String::from("split\tutts\twer\tcer\n");
    for (name, e) in [("all", &report.all), ("iv", &report.iv), ("oov", &report.oov)] {
        let _ = writeln!(out, "{name}\t{}\t{:.2}\t{:.2}", e.n_utts, e.wer, e.cer);
    }
    let _ = writeln!(
        out,
        "oov_recovery\toccurrences {}/{} ({:.2}%)\ttypes {}/{} ({:.2}%)",
        report.recovered_occurrences,
        report.oov_occurrences,
        report.occurrence_recovery,
        report.recovered_types,
        report.oov_types,
        report.type_recovery
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab(w: &[&str]) -> HashSet<String> {
        w.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn distances() {
        let (d, ops) = edit_distance(&["the", "cat", "sat"], &["the", "cat"]);
        assert_eq!(d, 1);
        assert_eq!(ops.iter().filter(|p| p.op == EditOp::Deletion).count(), 1);
        assert_eq!(edit_distance(&[1, 2, 3], &[1, 2, 3]).0, 0);
        let (d, ops) = edit_distance(&['a', 'b', 'c'], &['a', 'x', 'c']);
        assert_eq!(d, 1);
        assert_eq!(ops[1].op, EditOp::Substitution);
        assert_eq!(edit_distance::<u8>(&[], &[]).0, 0);
    }

    #[test]
    fn tie_break_prefers_substitution() {
        let (_, ops) = edit_distance(&['a'], &['b']);
        assert_eq!(ops.len(), 1);
        assert_eq!(ops[0].op, EditOp::Substitution);
        // "a" -> "ba": insertion of b before matching a
        let (_, ops) = edit_distance(&['a'], &['b', 'a']);
        assert_eq!(ops.iter().map(|p| p.op).collect::<Vec<_>>(), [EditOp::Insertion, EditOp::Match]);
    }

    #[test]
    fn word_error_rates() {
        let w = wer(&["the cat sat"], &["the cat"]).unwrap();
        assert!((w - 100.0 / 3.0).abs() < 1e-9);
        assert_eq!(wer(&["a b", "c"], &["a b", "c"]).unwrap(), 0.0);
        let pooled = wer(&["a b c", "d e"], &["a x c", "d e"]).unwrap();
        assert!((pooled - 20.0).abs() < 1e-9);
        assert!(matches!(wer(&["a"], &["a", "b"]), Err(EvalError::LengthMismatch { .. })));
    }

    #[test]
    fn character_error_rate_uses_one_separator() {
        // "ab  cd" normalizes to "ab cd" (5 chars); "ab cx" has one substitution
        let c = cer(&["ab  cd"], &["ab cx"]).unwrap();
        assert!((c - 20.0).abs() < 1e-9);
        // a missing word boundary costs exactly one edit
        assert!((cer(&["ab cd"], &["abcd"]).unwrap() - 20.0).abs() < 1e-9);
    }

    #[test]
    fn splits() {
        let (iv, oov) = split_iv_oov(&["a b", "a c"], &vocab(&["a", "b"]));
        assert_eq!((iv, oov), (vec![0], vec![1]));
        let (iv, oov) = split_iv_oov(&["a b", "a c"], &vocab(&["a", "b", "c"]));
        assert_eq!((iv.len(), oov.len()), (2, 0));
    }

    #[test]
    fn recovery_rates() {
        let v = vocab(&["x", "y"]);
        let r = oov_recovery(&["x fauchelevent y"], &["x fauchelevent y"], &v).unwrap();
        assert_eq!((r.occurrence_recovery, r.type_recovery), (100.0, 100.0));
        let r = oov_recovery(&["x fauchelevent y"], &["x foshelevent y"], &v).unwrap();
        assert_eq!((r.occurrence_recovery, r.type_recovery), (0.0, 0.0));
        let r = oov_recovery(&["zed x", "zed y"], &["zed x", "said y"], &v).unwrap();
        assert_eq!((r.occurrence_recovery, r.type_recovery), (50.0, 100.0));
        assert_eq!((r.n_iv_utts, r.n_oov_utts), (0, 2));
    }

    #[test]
    fn tsv_and_summary() {
        let v = vocab(&["a"]);
        let tsv = utterance_tsv(&["u1", "u2"], &["a", "a b"], &["a", "a"], &v).unwrap();
        assert_eq!(tsv.lines().nth(2).unwrap(), "u2\ta b\ta\t0\t0\t1\t1");
        let r = oov_recovery(&["a", "a b"], &["a", "a"], &v).unwrap();
        let s = summary_table(&r);
        assert!(s.contains("iv\t1\t0.00"));
        assert!(s.contains("oov\t1\t50.00"));
    }
}
