//! One PASS/FAIL line per acceptance criterion. Lines go straight to stderr
//! so they show up without `--nocapture`.

mod common;

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::io::Write as _;
use std::time::Instant;

use common::*;
use lexfree::decoder::{
    brute_force_decode, decode, total_score, DecodeMode, DecodeResult, DecoderOptions, EmissionMatrix, SilenceTerm,
};
use lexfree::eval::{edit_distance, wer, EditOp};
use lexfree::lexicon::LexiconTrie;
use lexfree::ngram::arpa::{load_arpa, save_arpa};
use lexfree::ngram::PruneSpec;
use lexfree::perplexity::char_lm_word_ppl_bounds;
use lexfree::tokens::{encode_sentence, encode_word};
use lexfree::tune::{random_search, trial_log_tsv, DevUtterance, SearchSpace};
use lexfree::{train_char_lm, train_word_lm, LanguageModel, Level, Lexicon, NGramModel, TokenSet};
use rand::prelude::*;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Every decode made here, for the score audit.
struct Audit {
    checked: usize,
    failures: Vec<String>,
}

impl Audit {
    fn record<L: LanguageModel>(&mut self, label: &str, r: &DecodeResult, inst: &Instance, lm: &L) {
        self.checked += 1;
        match total_score(r, &inst.em, inst.tr.as_ref(), lm, &inst.opt) {
            Ok(b) if (b.total - r.total).abs() <= 1e-9 => {}
            Ok(b) => self.failures.push(format!("{label}: recomputed {} vs reported {}", b.total, r.total)),
            Err(e) => self.failures.push(format!("{label}: {e}")),
        }
    }
}

/// Decodes saved for the effective-beam check.
struct Decoded {
    inst: Instance,
    result: DecodeResult,
}

fn oracle_equivalence(audit: &mut Audit, suite: &mut Vec<Decoded>) -> Outcome {
    let start = Instant::now();
    let mut r = rng(2024);
    let mut compared = 0;
    let mut seen = HashSet::new();
    for i in 0..300 {
        let mode = DecodeMode::ALL[i % 3];
        let term = if (i / 3) % 2 == 0 { SilenceTerm::PerSegment } else { SilenceTerm::PerFrame };
        let inst = random_instance(&mut r, mode, term);
        let lex = Some(&inst.trie);
        let (beam, exact) = with_lm!(inst, |lm| (
            decode(&inst.em, inst.tr.as_ref(), lm, lex, &inst.opt),
            brute_force_decode(&inst.em, inst.tr.as_ref(), lm, lex, &inst.opt)
        ));
        match (beam, exact) {
            (Ok(b), Ok(e)) => {
                ensure(b.words == e.words, || format!("instance {i}: {:?} vs {:?}", b.words, e.words))?;
                ensure((b.total - e.total).abs() <= 1e-9, || format!("instance {i}: {} vs {}", b.total, e.total))?;
                with_lm!(inst, |lm| audit.record(&format!("oracle {i}"), &b, &inst, lm));
                seen.insert((mode, term));
                compared += 1;
                suite.push(Decoded { inst, result: b });
            }
            (Err(b), Err(e)) => ensure(b == e, || format!("instance {i}: errors {b} vs {e}"))?,
            (b, e) => return Err(format!("instance {i}: beam {:?} vs exhaustive {:?}", b.err(), e.err())),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(compared >= 200, || format!("only {compared} comparable instances"))?;
    ensure(seen.len() == 6, || format!("only {} mode/silence combinations covered", seen.len()))?;
    ensure(secs < 30.0, || format!("took {secs:.1}s"))?;
    Ok(format!("{compared} instances, 6 mode/silence combinations, {secs:.2}s"))
}

fn lexicon_soundness(audit: &mut Audit, suite: &mut Vec<Decoded>) -> Outcome {
    let mut r = rng(99);
    for i in 0..1000 {
        let mode = if i % 2 == 0 { DecodeMode::WordLmLexicon } else { DecodeMode::CharLmLexicon };
        let term = if r.random_bool(0.5) { SilenceTerm::PerSegment } else { SilenceTerm::PerFrame };
        let mut inst = random_instance(&mut r, mode, term);
        inst.opt.beam_size = r.random_range(1..=8);
        if r.random_bool(0.5) {
            inst.opt.beam_threshold = r.random_range(0.5..10.0);
        }
        let res = with_lm!(inst, |lm| decode(&inst.em, inst.tr.as_ref(), lm, Some(&inst.trie), &inst.opt));
        let Ok(res) = res else { continue };
        for w in &res.words {
            ensure(inst.lexicon.contains(w), || format!("decode {i} emitted {w:?}, not in the lexicon"))?;
        }
        with_lm!(inst, |lm| audit.record(&format!("fuzz {i}"), &res, &inst, lm));
        suite.push(Decoded { inst, result: res });
    }
    let (free, lexical) = oov_fixture()?;
    ensure(free.contains(&"fauchelevent".to_string()), || format!("char_lm_free gave {free:?}"))?;
    ensure(!lexical.contains(&"fauchelevent".to_string()), || format!("word_lm_lexicon gave {lexical:?}"))?;
    Ok(format!("1000 fuzzed decodes in-lexicon; OOV fixture: free={:?} lexicon={:?}", free.join(" "), lexical.join(" ")))
}

/// Emissions that clearly spell "x fauchelevent limped along" where the
/// lexicon lacks "fauchelevent".
fn oov_fixture() -> Result<(Vec<String>, Vec<String>), String> {
    let ts = TokenSet::standard();
    let sentence = ["x", "fauchelevent", "limped", "along"];
    let spelled = encode_sentence(&sentence, &ts, false).unwrap();
    let rows: Vec<Vec<f64>> = spelled
        .iter()
        .map(|&t| (0..ts.len()).map(|k| if k == t { -0.05 } else { -6.0 }).collect())
        .collect();
    let em = EmissionMatrix::from_rows(ts.clone(), &rows).unwrap();
    let corpus = [vec!["x", "limped", "along"], vec!["fauchelevent", "limped"], vec!["along", "x"]];
    let char_sents: Vec<_> = corpus.iter().map(|s| encode_sentence(s, &ts, true).unwrap()).collect();
    let char_lm = train_char_lm(&char_sents, &ts, 4, &PruneSpec::none()).unwrap();
    let vocab = ["x", "limped", "along", "fauchel", "levent"];
    let word_lm = train_word_lm(&corpus.iter().map(|s| s.to_vec()).collect::<Vec<_>>(), &vocab, 2, &PruneSpec::none())
        .unwrap();
    let lexicon = Lexicon::from_words(vocab, &ts).unwrap();
    let trie = LexiconTrie::build(&lexicon);
    let opt = DecoderOptions {
        alpha: 0.5,
        beta: 0.0,
        gamma: 0.0,
        beam_size: 200,
        beam_threshold: f64::INFINITY,
        mode: DecodeMode::CharLmFree,
        silence_term: SilenceTerm::PerSegment,
    };
    let free = decode(&em, None, &char_lm, None, &opt).map_err(|e| e.to_string())?;
    let lexical = decode(&em, None, &word_lm, Some(&trie), &DecoderOptions { mode: DecodeMode::WordLmLexicon, ..opt })
        .map_err(|e| e.to_string())?;
    Ok((free.words, lexical.words))
}

fn effective_beam(suite: &[Decoded]) -> Outcome {
    let mut max_eff = 0;
    for (i, d) in suite.iter().enumerate() {
        let eff = d.result.effective_beam_size;
        ensure(eff >= 1 && eff <= d.inst.opt.beam_size, || {
            format!("case {i}: effective beam {eff} outside 1..={}", d.inst.opt.beam_size)
        })?;
        max_eff = max_eff.max(eff);
        let opt = DecoderOptions { beam_size: eff, ..d.inst.opt };
        let again = with_lm!(d.inst, |lm| decode(&d.inst.em, d.inst.tr.as_ref(), lm, Some(&d.inst.trie), &opt))
            .map_err(|e| format!("case {i}: re-decode failed: {e}"))?;
        ensure(again.words == d.result.words && again.alignment == d.result.alignment, || {
            format!("case {i}: beam {eff} gave {:?}, full beam {:?}", again.words, d.result.words)
        })?;
        ensure(again.total == d.result.total, || format!("case {i}: {} vs {}", again.total, d.result.total))?;
    }
    Ok(format!("{} decodes reproduced at their effective beam (max {max_eff})", suite.len()))
}

fn score_audit(audit: &Audit) -> Outcome {
    match audit.failures.first() {
        Some(f) => Err(format!("{} of {} mismatched, first: {f}", audit.failures.len(), audit.checked)),
        None => Ok(format!("{} decodes recomputed within 1e-9", audit.checked)),
    }
}

/// Every state reachable from the start state by scoring non-final tokens.
fn reachable_states(lm: &NGramModel) -> Vec<<NGramModel as LanguageModel>::State> {
    let start = lm.start_state();
    let mut seen = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    let mut out = Vec::new();
    while let Some(s) = queue.pop_front() {
        for tok in lm.predictable().filter(|&t| t != lm.eos()) {
            let (next, _) = lm.score(&s, tok);
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
        out.push(s);
    }
    out
}

fn random_char_corpus(r: &mut impl Rng, ts: &TokenSet, letters: &[&str]) -> Vec<Vec<usize>> {
    loop {
        let corpus = sample_char_corpus(r, ts, letters);
        if !corpus.is_empty() {
            return corpus;
        }
    }
}

fn sample_char_corpus(r: &mut impl Rng, ts: &TokenSet, letters: &[&str]) -> Vec<Vec<usize>> {
    (0..r.random_range(1..=6))
        .filter_map(|_| {
            let words: Vec<String> = (0..r.random_range(1..=4))
                .map(|_| (0..r.random_range(1..=4)).map(|_| *letters.choose(r).unwrap()).collect())
                .collect();
            encode_sentence(&words, ts, r.random_bool(0.5)).ok().map(|e| e.into_inner())
        })
        .collect()
}

fn lm_normalization() -> Outcome {
    let mut r = rng(5);
    let (mut models, mut contexts, mut worst) = (0, 0, 0.0f64);
    for _ in 0..60 {
        let (ts, letters) = random_token_set(&mut r);
        let corpus = random_char_corpus(&mut r, &ts, &letters);
        let order = r.random_range(1..=5);
        let mut specs = vec![PruneSpec::none()];
        if order >= 2 {
            let items: Vec<String> = (2..=order).map(|k| format!("{k}:{}", r.random_range(0..=2))).collect();
            specs.push(PruneSpec::parse(&items.join(","), order).unwrap());
        }
        for spec in &specs {
            let lm = train_char_lm(&corpus, &ts, order, spec).map_err(|e| e.to_string())?;
            models += 1;
            for s in reachable_states(&lm) {
                let total: f64 = lm.predictable().map(|t| 10f64.powf(lm.score(&s, t).1)).sum();
                worst = worst.max((total - 1.0).abs());
                contexts += 1;
                ensure((total - 1.0).abs() <= 1e-6, || format!("order {order}, {spec:?}, state {s:?}: sum {total}"))?;
            }
        }
    }
    Ok(format!("{models} models, {contexts} contexts, max |sum - 1| = {worst:.2e}"))
}

/// n-grams listed in ARPA text, as symbol strings.
fn arpa_ngrams(text: &str) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    let mut in_section = false;
    for line in text.lines() {
        if line.starts_with("\\") {
            in_section = line.ends_with("-grams:");
            continue;
        }
        if in_section && !line.trim().is_empty() {
            out.push(line.split('\t').nth(1).unwrap().split(' ').map(String::from).collect());
        }
    }
    out
}

fn ids(lm: &NGramModel, ngram: &[String]) -> Vec<u32> {
    ngram.iter().map(|s| lm.vocab().id(s).unwrap()).collect()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol
}

fn arpa_interop() -> Outcome {
    let mut r = rng(17);
    let mut compared = 0;
    for m in 0..40 {
        let (ts, letters) = random_token_set(&mut r);
        let corpus = random_char_corpus(&mut r, &ts, &letters);
        let order = r.random_range(1..=5);
        let lm = if m % 2 == 0 {
            train_char_lm(&corpus, &ts, order, &PruneSpec::none()).unwrap()
        } else {
            let words: Vec<String> = (0..4).map(|i| format!("w{i}")).collect();
            let sents: Vec<Vec<String>> = (0..r.random_range(1..=5))
                .map(|_| (0..r.random_range(1..=4)).map(|_| format!("w{}", r.random_range(0..6))).collect())
                .collect();
            train_word_lm(&sents, &words, order, &PruneSpec::none()).unwrap()
        };
        let text = save_arpa(&lm);
        let back = load_arpa(&text, lm.level()).map_err(|e| e.to_string())?;
        for k in 1..=order {
            ensure(lm.ngram_count(k) == back.ngram_count(k), || format!("model {m}: {k}-gram counts differ"))?;
        }
        for ng in arpa_ngrams(&text) {
            let (a, b) = (lm.entry(&ids(&lm, &ng)).unwrap(), back.entry(&ids(&back, &ng)).unwrap());
            ensure(close(a.logprob, b.logprob, 1e-6) && close(a.backoff, b.backoff, 1e-6), || {
                format!("model {m}: {ng:?} {a:?} vs {b:?}")
            })?;
            compared += 1;
        }
        let tokens: Vec<u32> = lm.predictable().filter(|&t| t != lm.eos()).collect();
        for _ in 0..50 {
            let (mut s1, mut s2) = (lm.start_state(), back.start_state());
            for _ in 0..r.random_range(0..=order + 2) {
                let t = *tokens.choose(&mut r).unwrap();
                let (n1, p1) = lm.score(&s1, t);
                let (n2, p2) = back.score(&s2, back.vocab().id(lm.vocab().symbol(t)).unwrap());
                ensure(close(p1, p2, 1e-6), || format!("model {m}: query {p1} vs {p2}"))?;
                (s1, s2) = (n1, n2);
            }
            ensure(close(lm.finish(&s1), back.finish(&s2), 1e-6), || format!("model {m}: end of sentence differs"))?;
        }
    }
    let fixture = "\\data\\\nngram 1=4\nngram 2=1\n\n\\1-grams:\n-99\t<s>\t0\n-1\t</s>\n-0.5\ta\t-0.30103\n-0.69897\tb\n\n\\2-grams:\n-0.2\ta a\n\n\\end\\\n";
    let lm = load_arpa(fixture, Level::Char).map_err(|e| e.to_string())?;
    let (a, b) = (lm.token_id("a").unwrap(), lm.token_id("b").unwrap());
    let (after_a, _) = lm.score(&lm.start_state(), a);
    let got = lm.score(&after_a, b).1;
    ensure((got - (-1.0)).abs() <= 1e-4, || format!("fixture score(b|a) = {got}"))?;
    Ok(format!("40 models, {compared} entries within 1e-6; fixture score(b|a) = {got:.5}"))
}

/// log10 P(word + terminator | state) under a character LM, scored token by token.
fn oracle_word_logprob(lm: &NGramModel, ts: &TokenSet, state: &<NGramModel as LanguageModel>::State, word: &str, last: bool) -> (<NGramModel as LanguageModel>::State, f64) {
    let mut s = state.clone();
    let mut total = 0.0;
    for &t in encode_word(word, ts).unwrap().as_slice() {
        let (n, lp) = lm.score(&s, lm.token_id(ts.token(t)).unwrap());
        total += lp;
        s = n;
    }
    if last {
        (s.clone(), total + lm.finish(&s))
    } else {
        let (n, lp) = lm.score(&s, lm.token_id(ts.token(ts.silence())).unwrap());
        (n, total + lp)
    }
}

/// Perplexity with each in-vocabulary word renormalized over all of `vocab`.
fn exact_ppl(lm: &NGramModel, ts: &TokenSet, corpus: &[Vec<String>], vocab: &[String]) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for sentence in corpus {
        let mut state = lm.start_state();
        for (pos, w) in sentence.iter().enumerate() {
            let last = pos + 1 == sentence.len();
            let (next, lp) = oracle_word_logprob(lm, ts, &state, w, last);
            if vocab.contains(w) {
                let den: f64 = vocab.iter().map(|v| 10f64.powf(oracle_word_logprob(lm, ts, &state, v, last).1)).sum();
                sum += lp - den.log10();
                n += 1;
            }
            state = next;
        }
    }
    10f64.powf(-sum / n as f64)
}

fn perplexity_bounds() -> Outcome {
    let mut r = rng(31);
    let masses = [0.2, 0.4, 0.6, 0.8, 0.95, 1.0];
    let mut triples = 0;
    while triples < 60 {
        let (ts, letters) = random_token_set(&mut r);
        let mut vocab: Vec<String> = Vec::new();
        let target = r.random_range(2..=5);
        for _ in 0..50 {
            if vocab.len() == target {
                break;
            }
            let w: String = (0..r.random_range(1..=3)).map(|_| *letters.choose(&mut r).unwrap()).collect();
            if !vocab.contains(&w) && encode_word(&w, &ts).is_ok() {
                vocab.push(w);
            }
        }
        if vocab.len() < 2 {
            continue;
        }
        let corpus: Vec<Vec<String>> = (0..r.random_range(1..=4))
            .map(|_| {
                (0..r.random_range(1..=4))
                    .map(|_| {
                        if r.random_bool(0.15) {
                            (0..4).map(|_| *letters.choose(&mut r).unwrap()).collect()
                        } else {
                            vocab.choose(&mut r).unwrap().clone()
                        }
                    })
                    .collect()
            })
            .collect();
        if !corpus.iter().flatten().any(|w| vocab.contains(w)) {
            continue;
        }
        let Ok(char_sents) = corpus.iter().map(|s| encode_sentence(s, &ts, true)).collect::<Result<Vec<_>, _>>() else {
            continue;
        };
        let char_lm = train_char_lm(&char_sents, &ts, r.random_range(1..=4), &PruneSpec::none()).unwrap();
        let word_lm = train_word_lm(&corpus, &vocab, r.random_range(1..=3), &PruneSpec::none()).unwrap();
        let exact = exact_ppl(&char_lm, &ts, &corpus, &vocab);
        let mut prev = 0.0;
        for &mass in &masses {
            let rep = char_lm_word_ppl_bounds(&char_lm, &word_lm, &ts, &corpus, &vocab, mass).map_err(|e| e.to_string())?;
            let b = rep.bounds.unwrap();
            let tol = 1e-12 * exact;
            ensure(b.ppl_lower <= exact + tol && exact <= b.ppl_upper + tol, || {
                format!("triple {triples}, mass {mass}: {} <= {exact} <= {} violated", b.ppl_lower, b.ppl_upper)
            })?;
            ensure(b.ppl_lower + 1e-12 * b.ppl_lower >= prev, || {
                format!("triple {triples}: lower bound fell from {prev} to {} at mass {mass}", b.ppl_lower)
            })?;
            prev = b.ppl_lower;
            if mass == 1.0 {
                ensure((b.ppl_lower - exact).abs() <= 1e-9, || {
                    format!("triple {triples}: lower {} vs exact {exact} at mass 1", b.ppl_lower)
                })?;
            }
        }
        triples += 1;
    }
    Ok(format!("{triples} triples, masses {masses:?}"))
}

fn recursive_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    match (a.split_first(), b.split_first()) {
        (None, _) => b.len(),
        (_, None) => a.len(),
        (Some((x, ar)), Some((y, br))) if x == y => recursive_distance(ar, br),
        (Some((_, ar)), Some((_, br))) => {
            1 + recursive_distance(ar, br).min(recursive_distance(a, br)).min(recursive_distance(ar, b))
        }
    }
}

fn all_sequences(max_len: usize) -> Vec<Vec<u8>> {
    let mut out = vec![vec![]];
    let mut layer = vec![vec![]];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|s: &Vec<u8>| (0..3u8).map(move |c| [s.as_slice(), &[c]].concat()))
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

fn edit_distance_oracle() -> Outcome {
    let seqs = all_sequences(6);
    let mut pairs = 0usize;
    for a in &seqs {
        for b in &seqs {
            let (d, ops) = edit_distance(a, b);
            let want = recursive_distance(a, b);
            ensure(d == want, || format!("{a:?} vs {b:?}: {d} != {want}"))?;
            let errs = ops.iter().filter(|p| p.op != EditOp::Match).count();
            let rebuilt: Vec<u8> = ops.iter().filter_map(|p| p.hyp_pos.map(|j| b[j])).collect();
            let matched = ops.iter().filter(|p| p.op == EditOp::Match).all(|p| a[p.ref_pos.unwrap()] == b[p.hyp_pos.unwrap()]);
            ensure(errs == d && &rebuilt == b && matched, || format!("{a:?} vs {b:?}: inconsistent alignment"))?;
            pairs += 1;
        }
    }
    let w = wer(&["the cat sat"], &["the cat"]).map_err(|e| e.to_string())?;
    ensure((w - 33.33).abs() <= 0.01, || format!("WER {w}"))?;
    Ok(format!("{pairs} pairs agree; WER(\"the cat sat\", \"the cat\") = {w:.2}%"))
}

fn tuner_determinism() -> Outcome {
    let ts = TokenSet::from_tokens(["a", "b", "c", "|"]).unwrap();
    let mut r = rng(8);
    let refs = ["ab c", "ca b", "abc", "b ca", "cab a"];
    let dev: Vec<DevUtterance> = refs
        .iter()
        .enumerate()
        .map(|(i, reference)| {
            let words: Vec<&str> = reference.split(' ').collect();
            let seq = encode_sentence(&words, &ts, false).unwrap();
            let rows: Vec<Vec<f64>> = seq
                .iter()
                .map(|&t| (0..ts.len()).map(|k| if k == t { -0.7 } else { r.random_range(-3.0..-0.2) }).collect())
                .collect();
            DevUtterance {
                id: format!("u{i}"),
                emissions: EmissionMatrix::from_rows(ts.clone(), &rows).unwrap(),
                reference: reference.to_string(),
            }
        })
        .collect();
    let sents: Vec<_> = refs.iter().map(|s| encode_sentence(&s.split(' ').collect::<Vec<_>>(), &ts, true).unwrap()).collect();
    let lm = train_char_lm(&sents, &ts, 3, &PruneSpec::none()).unwrap();
    let base = DecoderOptions { beam_size: 20, mode: DecodeMode::CharLmFree, ..DecoderOptions::default() };
    let space = SearchSpace { n_trials: 24, seed: 42, ..SearchSpace::default() };

    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| random_search(&dev, None, &lm, None, &base, &space)).map_err(|e| e.to_string())
    };
    let first = run(1)?;
    let logs: Vec<String> = [1, 1, 2, 4]
        .iter()
        .map(|&t| run(t).map(|o| trial_log_tsv(&o.trials)))
        .collect::<Result<_, _>>()?;
    ensure(logs.iter().all(|l| *l == logs[0]), || "trial logs differ between runs".into())?;
    let best = &first.trials[first.best_trial];
    for t in &first.trials {
        ensure(best.wer <= t.wer, || format!("best trial {} WER {} > trial {} WER {}", best.trial, best.wer, t.trial, t.wer))?;
    }
    let distinct: HashSet<u64> = first.trials.iter().map(|t| t.wer.to_bits()).collect();
    Ok(format!("24 trials identical over 4 runs (1, 1, 2, 4 threads); best WER {:.2} ({} distinct WERs)", best.wer, distinct.len()))
}

fn prune_schedule() -> Outcome {
    let spec = PruneSpec::parse("6:1,7:1,8:1,9:2,10+:3", 20).map_err(|e| e.to_string())?;
    let mut want = BTreeMap::from([(6, 1), (7, 1), (8, 1), (9, 2)]);
    want.extend((10..=20).map(|k| (k, 3)));
    ensure(spec.thresholds == want, || format!("parsed {:?}", spec.thresholds))?;
    ensure((1..=5).all(|k| spec.threshold(k) == 0), || "orders below 6 are pruned".into())?;
    ensure(PruneSpec::char_large_schedule(20) == spec, || "built-in schedule differs".into())?;
    Ok("6:1 7:1 8:1 9:2 10..20:3".into())
}

#[test]
fn acceptance() {
    let mut audit = Audit { checked: 0, failures: Vec::new() };
    let mut suite = Vec::new();
    let mut failed = Vec::new();
    let mut total = 0;
    let mut run = |name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        let mut err = std::io::stderr().lock();
        let _ = match outcome {
            Ok(detail) => writeln!(err, "PASS  {name} ({secs:.2}s): {detail}"),
            Err(why) => {
                failed.push(name);
                writeln!(err, "FAIL  {name} ({secs:.2}s): {why}")
            }
        };
        total += 1;
    };
    run("oracle decoding equivalence", &mut || oracle_equivalence(&mut audit, &mut suite));
    run("lm normalization", &mut lm_normalization);
    run("arpa interop", &mut arpa_interop);
    run("perplexity bounds", &mut perplexity_bounds);
    run("lexicon soundness + oov", &mut || lexicon_soundness(&mut audit, &mut suite));
    run("effective beam size", &mut || effective_beam(&suite));
    run("score audit", &mut || score_audit(&audit));
    run("wer/cer edit distance", &mut edit_distance_oracle);
    run("tuner determinism", &mut tuner_determinism);
    run("prune schedule parsing", &mut prune_schedule);
    let _ = writeln!(std::io::stderr(), "{}/{total} criteria passed", total - failed.len());
    assert!(failed.is_empty(), "failed: {failed:?}");
}
