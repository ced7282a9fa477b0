use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use lexfree::decoder::{decode, DecodeMode, DecodeResult, DecoderOptions, EmissionMatrix, SilenceTerm, TransitionMatrix};
use lexfree::eval::{evaluate, oov_recovery, summary_table, utterance_tsv};
use lexfree::formats::{read_emissions, read_manifest, read_transitions, ManifestEntry};
use lexfree::lexicon::{load_lexicon, Lexicon, LexiconTrie};
use lexfree::ngram::arpa::{read_arpa_file, write_arpa_file};
use lexfree::ngram::{Level, NGramModel, PruneSpec, BOS, EOS, UNK};
use lexfree::perplexity::{char_lm_word_ppl_bounds, word_ppl_word_lm};
use lexfree::tokens::{prepare_lm_corpus, CorpusPrepConfig, TokenSet};
use lexfree::tune::{random_search, trial_log_tsv, DevUtterance, SearchSpace};
use lexfree::{train_char_lm, train_word_lm};

#[derive(Parser)]
#[command(name = "lexfree", version, about = "Lexicon-free beam-search decoding toolkit")]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Directory for output files that are not given explicitly.
    #[arg(long, global = true, default_value = ".")]
    output_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an n-gram LM and write it as ARPA.
    LmTrain(LmTrainArgs),
    /// Word perplexity of a word LM, or perplexity bounds of a char LM.
    LmPpl(LmPplArgs),
    /// Decode every utterance of a manifest.
    Decode(DecodeArgs),
    /// Random search over alpha, beta and gamma.
    Tune(TuneArgs),
    /// IV/OOV error rates and OOV recovery of a decoded set.
    OovReport(OovReportArgs),
    /// Effective beam size per utterance.
    BeamStats(DecodeArgs),
    /// Generate a lexicon from a vocabulary file.
    LexiconBuild(LexiconBuildArgs),
}

#[derive(Args)]
struct LmTrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    level: Level,
    #[arg(long)]
    order: usize,
    /// Count thresholds, e.g. "6:1,7:1,8:1,9:2,10+:3".
    #[arg(long)]
    prune: Option<String>,
    #[arg(long)]
    out: PathBuf,
    /// Word level: drop words seen fewer times.
    #[arg(long, default_value_t = 0)]
    min_count: usize,
    /// Word level: keep at most this many words.
    #[arg(long)]
    max_vocab: Option<usize>,
    /// Word level: also write the vocabulary, one word per line.
    #[arg(long)]
    vocab_out: Option<PathBuf>,
}

#[derive(Args)]
struct LmPplArgs {
    #[arg(long)]
    lm: PathBuf,
    #[arg(long)]
    level: Level,
    #[arg(long)]
    corpus: PathBuf,
    /// Vocabulary file; defaults to the word LM's vocabulary.
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Char level: word LM choosing the renormalization subset.
    #[arg(long)]
    word_lm: Option<PathBuf>,
    /// Char level: report lower and upper bounds (the only char mode).
    #[arg(long)]
    bounds: bool,
    #[arg(long, default_value_t = 0.95)]
    coverage: f64,
}

#[derive(Args, Clone)]
struct DecodeArgs {
    #[arg(long)]
    emissions_manifest: PathBuf,
    #[arg(long)]
    lm: PathBuf,
    #[arg(long)]
    mode: DecodeMode,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    transitions: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    beta: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    gamma: f64,
    #[arg(long, default_value_t = 500)]
    beam_size: usize,
    #[arg(long, default_value_t = f64::INFINITY)]
    beam_threshold: f64,
    #[arg(long, default_value = "per_segment")]
    silence_term: SilenceTerm,
    /// Word LM lookahead in the lexicon trie.
    #[arg(long)]
    smear: bool,
    /// Output path (default: <output-dir>/hypotheses.tsv, or beam_stats.tsv).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    decode: DecodeArgs,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, num_args = 2, default_values_t = [0.0, 5.0], allow_hyphen_values = true)]
    alpha_range: Vec<f64>,
    #[arg(long, num_args = 2, default_values_t = [-5.0, 5.0], allow_hyphen_values = true)]
    beta_range: Vec<f64>,
    #[arg(long, num_args = 2, default_values_t = [-5.0, 5.0], allow_hyphen_values = true)]
    gamma_range: Vec<f64>,
}

#[derive(Args)]
struct OovReportArgs {
    /// Manifest providing the references.
    #[arg(long)]
    manifest: PathBuf,
    /// Output of `decode`.
    #[arg(long)]
    hyps: PathBuf,
    /// Lexicon vocabulary, one word per line.
    #[arg(long)]
    vocab: PathBuf,
}

#[derive(Args)]
struct LexiconBuildArgs {
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

/// Setup problems exit with 2; utterance failures with 1.
struct UsageError(anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for UsageError {
    fn from(e: E) -> Self {
        UsageError(e.into())
    }
}

type CmdResult = std::result::Result<bool, UsageError>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::LmTrain(a) => lm_train(a),
        Command::LmPpl(a) => lm_ppl(a),
        Command::Decode(a) => run_decode(&cli, a, false),
        Command::Tune(a) => tune(&cli, a),
        Command::OovReport(a) => oov_report(&cli, a),
        Command::BeamStats(a) => run_decode(&cli, a, true),
        Command::LexiconBuild(a) => lexicon_build(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(UsageError(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_word_list(path: &Path) -> Result<Vec<String>> {
    Ok(read_text(path)?.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect())
}

fn lm_train(a: &LmTrainArgs) -> CmdResult {
    let prune = match &a.prune {
        Some(spec) => PruneSpec::parse(spec, a.order)?,
        None => PruneSpec::none(),
    };
    let text = read_text(&a.corpus)?;
    let ts = TokenSet::standard();
    let cfg = CorpusPrepConfig { min_word_count: a.min_count, max_vocab: a.max_vocab, unknown_token: UNK.into() };
    let corpus = prepare_lm_corpus(text.lines(), &cfg, &ts).with_context(|| a.corpus.display().to_string())?;
    let model = match a.level {
        Level::Char => train_char_lm(&corpus.chars, &ts, a.order, &prune)?,
        Level::Word => train_word_lm(&corpus.words, &corpus.vocabulary, a.order, &prune)?,
    };
    write_arpa_file(&model, &a.out).with_context(|| a.out.display().to_string())?;
    if let Some(path) = &a.vocab_out {
        let mut out = corpus.vocabulary.join("\n");
        out.push('\n');
        write_text(path, &out)?;
    }
    let counts: Vec<String> = (1..=model.order()).map(|k| format!("{k}:{}", model.ngram_count(k))).collect();
    println!("wrote {} ({}-gram, {})", a.out.display(), model.order(), counts.join(" "));
    Ok(true)
}

fn lm_vocabulary(lm: &NGramModel) -> Vec<String> {
    lm.vocab().symbols().iter().filter(|s| ![BOS, EOS, UNK].contains(&s.as_str())).cloned().collect()
}

fn lm_ppl(a: &LmPplArgs) -> CmdResult {
    let text = read_text(&a.corpus)?;
    let corpus: Vec<Vec<String>> =
        text.lines().map(|l| l.split_whitespace().map(str::to_lowercase).collect()).collect();
    let lm = read_arpa_file(&a.lm, a.level).with_context(|| a.lm.display().to_string())?;
    let report = match a.level {
        Level::Word => {
            let vocab = match &a.vocab {
                Some(p) => read_word_list(p)?,
                None => lm_vocabulary(&lm),
            };
            word_ppl_word_lm(&lm, &corpus, &vocab.into_iter().collect())?
        }
        Level::Char => {
            let Some(word_path) = &a.word_lm else {
                return Err(anyhow!("char-level perplexity needs --word-lm (bounds are the only char mode)").into());
            };
            if !a.bounds {
                log::info!("char-level perplexity always reports bounds");
            }
            let word_lm = read_arpa_file(word_path, Level::Word).with_context(|| word_path.display().to_string())?;
            let vocab = match &a.vocab {
                Some(p) => read_word_list(p)?,
                None => lm_vocabulary(&word_lm),
            };
            char_lm_word_ppl_bounds(&lm, &word_lm, &TokenSet::standard(), &corpus, &vocab, a.coverage)?
        }
    };
    println!("words      {:>10}", report.n_words);
    println!("excluded   {:>10}", report.n_excluded);
    match report.bounds {
        None => println!("ppl        {:>10.3}", report.ppl),
        Some(b) => {
            println!("ppl lower  {:>10.3}", b.ppl_lower);
            println!("ppl upper  {:>10.3}", b.ppl_upper);
            println!("coverage   {:>10}", b.coverage_mass);
        }
    }
    println!();
    print!("{report}");
    Ok(true)
}

/// Everything a decode run needs, loaded once.
struct Setup {
    entries: Vec<ManifestEntry>,
    lm: NGramModel,
    trie: Option<LexiconTrie>,
    transitions: Option<TransitionMatrix>,
    options: DecoderOptions,
    tokens: TokenSet,
}

fn load_setup(a: &DecodeArgs) -> Result<Setup> {
    if a.mode.uses_lexicon() && a.lexicon.is_none() {
        bail!("--mode {} requires --lexicon", a.mode);
    }
    let options = DecoderOptions {
        alpha: a.alpha,
        beta: a.beta,
        gamma: a.gamma,
        beam_size: a.beam_size,
        beam_threshold: a.beam_threshold,
        mode: a.mode,
        silence_term: a.silence_term,
    };
    options.validate()?;
    let entries = read_manifest(&a.emissions_manifest)?;
    let first = entries.first().ok_or_else(|| anyhow!("{} is empty", a.emissions_manifest.display()))?;
    let tokens = read_emissions(&first.emissions)?.tokens().clone();
    let lm = read_arpa_file(&a.lm, a.mode.lm_level()).with_context(|| a.lm.display().to_string())?;
    let trie = match &a.lexicon {
        Some(path) if a.mode.uses_lexicon() => {
            let lex = load_lexicon(&read_text(path)?, &tokens).with_context(|| path.display().to_string())?;
            let trie = LexiconTrie::build(&lex);
            Some(if a.smear && a.mode == DecodeMode::WordLmLexicon { trie.smear(&lm) } else { trie })
        }
        _ => None,
    };
    let transitions = a.transitions.as_deref().map(read_transitions).transpose()?;
    Ok(Setup { entries, lm, trie, transitions, options, tokens })
}

fn decode_one(s: &Setup, e: &ManifestEntry, opt: &DecoderOptions) -> Result<DecodeResult> {
    let em = read_emissions(&e.emissions)?;
    if em.tokens() != &s.tokens {
        bail!("{}: token list differs from the first utterance", e.emissions.display());
    }
    Ok(decode(&em, s.transitions.as_ref(), &s.lm, s.trie.as_ref(), opt)?)
}

fn run_decode(cli: &Cli, a: &DecodeArgs, stats_only: bool) -> CmdResult {
    let s = load_setup(a)?;
    let results: Vec<Result<DecodeResult>> =
        s.entries.par_iter().map(|e| decode_one(&s, e, &s.options)).collect();

    let mut out = String::new();
    let mut refs = Vec::new();
    let mut hyps = Vec::new();
    let mut failures = 0;
    if stats_only {
        out.push_str("utt_id\teffective_beam_size\n");
    } else {
        out.push_str("utt_id\thypothesis\tam\tlm\tword_penalty\tsilence_penalty\ttotal\teffective_beam_size\tstatus\n");
    }
    for (e, r) in s.entries.iter().zip(&results) {
        match r {
            Ok(r) => {
                if stats_only {
                    let _ = writeln!(out, "{}\t{}", e.id, r.effective_beam_size);
                } else {
                    let _ = writeln!(
                        out,
                        "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\tok",
                        e.id,
                        r.transcript(),
                        r.am_score,
                        r.lm_score,
                        r.word_penalty,
                        r.silence_penalty,
                        r.total,
                        r.effective_beam_size
                    );
                }
                refs.push(e.reference.clone());
                hyps.push(r.transcript());
            }
            Err(err) => {
                failures += 1;
                eprintln!("{}: {err:#}", e.id);
                if !stats_only {
                    let msg = format!("{err:#}").replace(['\t', '\n'], " ");
                    let _ = writeln!(out, "{}\t\t\t\t\t\t\t\terror: {msg}", e.id);
                }
            }
        }
    }
    let default_name = if stats_only { "beam_stats.tsv" } else { "hypotheses.tsv" };
    let path = a.out.clone().unwrap_or_else(|| cli.output_dir.join(default_name));
    write_text(&path, &out)?;
    if !stats_only {
        let eval = evaluate(&refs, &hyps)?;
        println!("utterances {} (failed {failures})", s.entries.len());
        println!("WER {:.2}", eval.wer);
        println!("CER {:.2}", eval.cer);
    }
    Ok(failures == 0)
}

fn range(v: &[f64]) -> (f64, f64) {
    (v[0], v[1])
}

fn tune(cli: &Cli, a: &TuneArgs) -> CmdResult {
    let s = load_setup(&a.decode)?;
    let mut dev = Vec::with_capacity(s.entries.len());
    for e in &s.entries {
        let emissions: EmissionMatrix = read_emissions(&e.emissions)?;
        dev.push(DevUtterance { id: e.id.clone(), emissions, reference: e.reference.clone() });
    }
    let space = SearchSpace {
        alpha: range(&a.alpha_range),
        beta: range(&a.beta_range),
        gamma: range(&a.gamma_range),
        n_trials: a.trials,
        seed: cli.seed,
    };
    let outcome = random_search(&dev, s.transitions.as_ref(), &s.lm, s.trie.as_ref(), &s.options, &space)?;
    let path = a.decode.out.clone().unwrap_or_else(|| cli.output_dir.join("trials.tsv"));
    write_text(&path, &trial_log_tsv(&outcome.trials))?;
    let best = &outcome.trials[outcome.best_trial];
    println!("best trial {}: alpha {} beta {} gamma {}", best.trial, best.alpha, best.beta, best.gamma);
    println!("WER {:.2} CER {:.2}", best.wer, best.cer);
    Ok(true)
}

fn oov_report(cli: &Cli, a: &OovReportArgs) -> CmdResult {
    let entries = read_manifest(&a.manifest)?;
    let mut hyp_of: HashMap<String, String> = HashMap::new();
    for (i, line) in read_text(&a.hyps)?.lines().enumerate() {
        let fields: Vec<&str> = line.split('\t').collect();
        if i == 0 && fields.first() == Some(&"utt_id") {
            continue;
        }
        if fields.len() < 2 {
            return Err(anyhow!("{}: line {}: expected utt_id<TAB>hypothesis", a.hyps.display(), i + 1).into());
        }
        hyp_of.insert(fields[0].to_string(), fields[1].to_string());
    }
    let vocab: HashSet<String> = read_word_list(&a.vocab)?.into_iter().collect();
    let ids: Vec<&str> = entries.iter().map(|e| e.id.as_str()).collect();
    let refs: Vec<&str> = entries.iter().map(|e| e.reference.as_str()).collect();
    let hyps: Vec<String> = entries
        .iter()
        .map(|e| hyp_of.get(&e.id).cloned().ok_or_else(|| anyhow!("no hypothesis for {}", e.id)))
        .collect::<Result<_>>()?;
    let report = oov_recovery(&refs, &hyps, &vocab)?;
    let tsv = utterance_tsv(&ids, &refs, &hyps, &vocab)?;
    write_text(&cli.output_dir.join("oov_utterances.tsv"), &tsv)?;
    let summary = summary_table(&report);
    write_text(&cli.output_dir.join("oov_summary.tsv"), &summary)?;
    print!("{summary}");
    Ok(true)
}

fn lexicon_build(a: &LexiconBuildArgs) -> CmdResult {
    let ts = TokenSet::standard();
    let words: Vec<String> = read_word_list(&a.vocab)?.iter().map(|w| w.to_lowercase()).collect();
    let lex = Lexicon::from_words(&words, &ts)?;
    write_text(&a.out, &lex.to_text(&ts))?;
    println!("wrote {} words to {}", lex.len(), a.out.display());
    Ok(true)
}
