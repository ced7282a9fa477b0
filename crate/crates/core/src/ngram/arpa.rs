//! ARPA text format. Probabilities are decimal log10; `-99` (or lower)
//! stands for log10(0).

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{Entry, Level, LmError, NGramModel, Vocab};

const LOG_ZERO: f64 = -99.0;

fn fmt_log(x: f64) -> String {
    if x == f64::NEG_INFINITY || x <= LOG_ZERO {
        "-99".to_string()
    } else if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x}")
    }
}

fn parse_log(s: &str) -> Option<f64> {
    let x: f64 = s.parse().ok()?;
    if x.is_nan() {
        return None;
    }
    Some(if x <= LOG_ZERO { f64::NEG_INFINITY } else { x })
}

/// Writes the model. Output is deterministic: n-grams are sorted by id.
pub fn save_arpa(model: &NGramModel) -> String {
    let tables = model.tables();
    let vocab = model.vocab();
    let mut out = String::from("\n\\data\\\n");
    for (k, t) in tables.iter().enumerate() {
        let _ = writeln!(out, "ngram {}={}", k + 1, t.len());
    }
    for (k, t) in tables.iter().enumerate() {
        let highest = k + 1 == tables.len();
        let _ = write!(out, "\n\\{}-grams:\n", k + 1);
        let mut grams: Vec<(&Vec<u32>, &Entry)> = t.iter().collect();
        grams.sort_by(|a, b| a.0.cmp(b.0));
        for (g, e) in grams {
            let words: Vec<&str> = g.iter().map(|&id| vocab.symbol(id)).collect();
            if highest {
                let _ = writeln!(out, "{}\t{}", fmt_log(e.logprob), words.join(" "));
            } else {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}",
                    fmt_log(e.logprob),
                    words.join(" "),
                    fmt_log(e.backoff)
                );
            }
        }
    }
    out.push_str("\n\\end\\\n");
    out
}

pub fn write_arpa_file(model: &NGramModel, path: &std::path::Path) -> Result<(), LmError> {
    std::fs::write(path, save_arpa(model))?;
    Ok(())
}

pub fn read_arpa_file(path: &std::path::Path, level: Level) -> Result<NGramModel, LmError> {
    load_arpa(&std::fs::read_to_string(path)?, level)
}

/// Parses ARPA text. Text before `\data\` is ignored. Missing context
/// prefixes are inserted as probability-less entries.
pub fn load_arpa(text: &str, level: Level) -> Result<NGramModel, LmError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let err = |line: usize, msg: String| LmError::Parse { line, msg };

    // header
    loop {
        match lines.next() {
            Some((_, "\\data\\")) => break,
            Some(_) => continue,
            None => return Err(err(0, "missing \\data\\ section".into())),
        }
    }
    let mut declared: Vec<usize> = Vec::new();
    let mut current: Option<(usize, usize)> = None; // (order, line)
    for (no, line) in lines.by_ref() {
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("ngram ") {
            let (k, n) = rest
                .split_once('=')
                .ok_or_else(|| err(no, format!("bad count line {line:?}")))?;
            let k: usize = k.trim().parse().map_err(|_| err(no, format!("bad order in {line:?}")))?;
            let n: usize = n.trim().parse().map_err(|_| err(no, format!("bad count in {line:?}")))?;
            if k != declared.len() + 1 {
                return Err(err(no, format!("n-gram orders out of sequence at {line:?}")));
            }
            declared.push(n);
        } else {
            current = Some((parse_section_header(line).ok_or_else(|| err(no, format!("unexpected line {line:?}")))?, no));
            break;
        }
    }
    if declared.is_empty() {
        return Err(err(0, "no n-gram counts in \\data\\".into()));
    }
    let order = declared.len();

    let mut vocab = Vocab::from_symbols(Vec::<String>::new());
    let mut tables: Vec<HashMap<Vec<u32>, Entry>> = vec![HashMap::new(); order];
    let mut seen_end = false;
    let mut found = vec![0usize; order];
    while let Some((k, header_line)) = current.take() {
        if k == 0 || k > order {
            return Err(err(header_line, format!("section \\{k}-grams: not declared")));
        }
        for (no, line) in lines.by_ref() {
            if line.is_empty() {
                continue;
            }
            if line == "\\end\\" {
                seen_end = true;
                break;
            }
            if line.starts_with('\\') {
                current = Some((
                    parse_section_header(line).ok_or_else(|| err(no, format!("malformed section header {line:?}")))?,
                    no,
                ));
                break;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != k + 1 && fields.len() != k + 2 {
                return Err(err(no, format!("expected {k} words and a probability")));
            }
            let logprob = parse_log(fields[0]).ok_or_else(|| err(no, format!("bad probability {:?}", fields[0])))?;
            let backoff = match fields.get(k + 1) {
                Some(b) => parse_log(b).ok_or_else(|| err(no, format!("bad backoff {b:?}")))?,
                None => 0.0,
            };
            let ids: Vec<u32> = if k == 1 {
                vec![vocab.insert(fields[1].to_string())]
            } else {
                fields[1..=k]
                    .iter()
                    .map(|w| vocab.id(w).ok_or_else(|| err(no, format!("word {w:?} has no unigram"))))
                    .collect::<Result<_, _>>()?
            };
            tables[k - 1].insert(ids, Entry { logprob, backoff });
            found[k - 1] += 1;
        }
    }
    if !seen_end {
        return Err(err(text.lines().count(), "missing \\end\\".into()));
    }
    for (k, (&d, &f)) in declared.iter().zip(&found).enumerate() {
        if d != f {
            return Err(LmError::OrderMismatch { order: k + 1, declared: d, found: f });
        }
    }
    // contexts referenced by longer n-grams must exist for state tracking
    for k in 2..=order {
        let prefixes: Vec<Vec<u32>> = tables[k - 1].keys().map(|g| g[..k - 1].to_vec()).collect();
        for p in prefixes {
            for len in 1..=p.len() {
                tables[len - 1]
                    .entry(p[..len].to_vec())
                    .or_insert(Entry { logprob: f64::NEG_INFINITY, backoff: 0.0 });
            }
        }
    }
    NGramModel::from_parts(order, level, vocab, tables)
}

fn parse_section_header(line: &str) -> Option<usize> {
    line.strip_prefix('\\')?.strip_suffix("-grams:")?.parse().ok()
}
