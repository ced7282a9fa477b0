//! Random search over the decoder weights (alpha, beta, gamma) against
//! development-set WER.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::decoder::{decode, DecoderOptions, EmissionMatrix, TransitionMatrix};
use crate::eval::evaluate;
use crate::lexicon::LexiconTrie;
use crate::ngram::LanguageModel;

#[derive(Debug, Error, PartialEq)]
pub enum TuneError {
    #[error("invalid search space: {0}")]
    InvalidSpace(String),
    #[error("development set is empty")]
    EmptyDevSet,
    #[error("every trial failed")]
    AllTrialsFailed,
}

/// Open intervals for each weight plus the trial budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchSpace {
    pub alpha: (f64, f64),
    pub beta: (f64, f64),
    pub gamma: (f64, f64),
    pub n_trials: usize,
    pub seed: u64,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self { alpha: (0.0, 5.0), beta: (-5.0, 5.0), gamma: (-5.0, 5.0), n_trials: 100, seed: 0 }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<(), TuneError> {
        for (name, (lo, hi)) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(TuneError::InvalidSpace(format!("{name} range ({lo}, {hi})")));
            }
        }
        if self.n_trials == 0 {
            return Err(TuneError::InvalidSpace("n_trials must be >= 1".into()));
        }
        Ok(())
    }

    /// Every trial's (alpha, beta, gamma), drawn up front from the seed.
    pub fn sample(&self) -> Vec<(f64, f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut open = |(lo, hi): (f64, f64)| loop {
            let x = rng.random_range(lo..hi);
            if x > lo {
                break x;
            }
        };
        (0..self.n_trials).map(|_| (open(self.alpha), open(self.beta), open(self.gamma))).collect()
    }
}

pub struct DevUtterance {
    pub id: String,
    pub emissions: EmissionMatrix,
    pub reference: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrialStatus {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trial: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// NaN for failed trials.
    pub wer: f64,
    pub cer: f64,
    pub status: TrialStatus,
    pub wall_time: Duration,
}

#[derive(Debug, Clone)]
pub struct TuneOutcome {
    pub best: DecoderOptions,
    pub best_trial: usize,
    pub trials: Vec<TrialResult>,
}

fn run_trial<L: LanguageModel>(
    trial: usize,
    (alpha, beta, gamma): (f64, f64, f64),
    dev: &[DevUtterance],
    tr: Option<&TransitionMatrix>,
    lm: &L,
    lex: Option<&LexiconTrie>,
    base: &DecoderOptions,
) -> TrialResult {
    let start = Instant::now();
    let opt = DecoderOptions { alpha, beta, gamma, ..*base };
    let mut hyps = Vec::with_capacity(dev.len());
    let mut status = TrialStatus::Ok;
    for u in dev {
        match decode(&u.emissions, tr, lm, lex, &opt) {
            Ok(r) => hyps.push(r.transcript()),
            Err(e) => {
                status = TrialStatus::Failed(format!("{}: {e}", u.id));
                break;
            }
        }
    }
    let (wer, cer) = match status {
        TrialStatus::Ok => {
            let refs: Vec<&str> = dev.iter().map(|u| u.reference.as_str()).collect();
            let e = evaluate(&refs, &hyps).expect("one hypothesis per utterance");
            (e.wer, e.cer)
        }
        TrialStatus::Failed(ref msg) => {
            log::warn!("trial {trial} failed: {msg}");
            (f64::NAN, f64::NAN)
        }
    };
    TrialResult { trial, alpha, beta, gamma, wer, cer, status, wall_time: start.elapsed() }
}

/// Decodes the development set once per sampled trial (in parallel on the
/// current rayon pool) and keeps the trial with the lowest WER, then lowest
/// CER, then lowest index.
pub fn random_search<L: LanguageModel + Sync>(
    dev: &[DevUtterance],
    tr: Option<&TransitionMatrix>,
    lm: &L,
    lex: Option<&LexiconTrie>,
    base: &DecoderOptions,
    space: &SearchSpace,
) -> Result<TuneOutcome, TuneError> {
    space.validate()?;
    if dev.is_empty() {
        return Err(TuneError::EmptyDevSet);
    }
    let params = space.sample();
    let trials: Vec<TrialResult> = params
        .par_iter()
        .enumerate()
        .map(|(i, &p)| run_trial(i, p, dev, tr, lm, lex, base))
        .collect();
    let best = trials
        .iter()
        .filter(|t| t.status == TrialStatus::Ok)
        .min_by(|a, b| a.wer.total_cmp(&b.wer).then(a.cer.total_cmp(&b.cer)).then(a.trial.cmp(&b.trial)))
        .ok_or(TuneError::AllTrialsFailed)?;
    Ok(TuneOutcome {
        best: DecoderOptions { alpha: best.alpha, beta: best.beta, gamma: best.gamma, ..*base },
        best_trial: best.trial,
        trials,
    })
}

/// `trial_id alpha beta gamma wer cer status`, tab separated, in trial
/// order. Wall times are left out so logs are reproducible.
pub fn trial_log_tsv(trials: &[TrialResult]) -> String {
    let mut out = String::from("trial_id\talpha\tbeta\tgamma\twer\tcer\tstatus\n");
    for t in trials {
        let status = match &t.status {
            TrialStatus::Ok => "ok".to_string(),
            TrialStatus::Failed(msg) => format!("failed: {}", msg.replace(['\t', '\n'], " ")),
        };
        let _ = writeln!(out, "{}\t{}\t{}\t{}\t{}\t{}\t{}", t.trial, t.alpha, t.beta, t.gamma, t.wer, t.cer, status);
    }
    out
}
