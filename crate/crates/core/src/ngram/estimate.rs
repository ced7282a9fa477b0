//! Interpolated modified Kneser-Ney estimation with count pruning.
//!
//! Adjusted counts are continuation counts for every order below the
//! highest, except n-grams starting with `<s>`, which keep raw counts.
//! Three discounts per order come from the adjusted count-of-counts. Pruned
//! n-grams still contribute to their context's totals; their mass is moved
//! into the context's backoff weight so every distribution stays normalized.

use std::collections::{HashMap, HashSet};

use super::{CountTable, Entry, Level, LmError, NGramModel, PruneSpec, BOS};

const FALLBACK_DISCOUNT: f64 = 0.5;

/// Discounts for adjusted counts 1, 2 and 3+ at one order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discounts {
    pub order: usize,
    pub d: [f64; 3],
    /// Count-of-counts were degenerate and the fixed fallback was used.
    pub fallback: bool,
}

impl Discounts {
    fn for_count(&self, count: u64) -> f64 {
        match count {
            0 => 0.0,
            1 => self.d[0],
            2 => self.d[1],
            _ => self.d[2],
        }
    }

    fn from_count_of_counts(order: usize, n: [u64; 4]) -> Self {
        let [n1, n2, n3, n4] = n.map(|x| x as f64);
        if n1 > 0.0 && n2 > 0.0 && n3 > 0.0 {
            let y = n1 / (n1 + 2.0 * n2);
            let d = [1.0 - 2.0 * y * n2 / n1, 2.0 - 3.0 * y * n3 / n2, 3.0 - 4.0 * y * n4 / n3];
            if d.iter().enumerate().all(|(i, &di)| di > 0.0 && di <= (i + 1) as f64) {
                return Self { order, d, fallback: false };
            }
        }
        Self { order, d: [FALLBACK_DISCOUNT; 3], fallback: true }
    }
}

#[derive(Debug, Clone)]
pub struct Estimation {
    pub model: NGramModel,
    pub discounts: Vec<Discounts>,
}

pub fn estimate(counts: &CountTable, prune: &PruneSpec, level: Level) -> Result<NGramModel, LmError> {
    estimate_detailed(counts, prune, level).map(|e| e.model)
}

#[derive(Default)]
struct ContextStats<'a> {
    total: u64,
    n: [u64; 3],
    pruned_alpha: f64,
    kept: Vec<(&'a [u32], u64)>,
}

pub fn estimate_detailed(
    counts: &CountTable,
    prune: &PruneSpec,
    level: Level,
) -> Result<Estimation, LmError> {
    let order = counts.order;
    if order == 0 {
        return Err(LmError::InvalidOrder(0));
    }
    if counts.is_empty() {
        return Err(LmError::EmptyCounts);
    }
    prune.validate(order)?;
    let vocab = &counts.vocab;
    let bos = vocab.id(BOS).ok_or_else(|| LmError::UnknownToken(BOS.into()))?;
    let raw = &counts.counts;

    // pruned[k]: (k+1)-grams dropped by threshold or because their prefix was
    let mut pruned: Vec<HashSet<&[u32]>> = vec![HashSet::new(); order];
    for k in 2..=order {
        let t = prune.threshold(k);
        let (lower, upper) = pruned.split_at_mut(k - 1);
        let below = &lower[k - 2];
        for (g, &c) in &raw[k - 1] {
            if c <= t || below.contains(&g[..k - 1]) {
                upper[0].insert(g.as_slice());
            }
        }
    }

    // adjusted counts
    let mut adjusted: Vec<HashMap<&[u32], u64>> = Vec::with_capacity(order);
    for k in 1..=order {
        let table = &raw[k - 1];
        let adj = if k == order {
            table.iter().map(|(g, &c)| (g.as_slice(), c)).collect()
        } else {
            let mut cont: HashMap<&[u32], u64> = HashMap::new();
            for g in raw[k].keys() {
                *cont.entry(&g[1..]).or_default() += 1;
            }
            table
                .iter()
                .map(|(g, &c)| {
                    let a = if g[0] == bos { c } else { cont.get(g.as_slice()).copied().unwrap_or(c) };
                    (g.as_slice(), a)
                })
                .collect()
        };
        adjusted.push(adj);
    }

    let discounts: Vec<Discounts> = adjusted
        .iter()
        .enumerate()
        .map(|(i, adj)| {
            let mut n = [0u64; 4];
            for &a in adj.values() {
                if (1..=4).contains(&a) {
                    n[a as usize - 1] += 1;
                }
            }
            let d = Discounts::from_count_of_counts(i + 1, n);
            if d.fallback {
                log::warn!(
                    "order {}: degenerate count-of-counts {:?}, using absolute discount {}",
                    i + 1,
                    n,
                    FALLBACK_DISCOUNT
                );
            }
            d
        })
        .collect();

    let mut tables: Vec<HashMap<Vec<u32>, Entry>> = Vec::with_capacity(order);

    // unigrams, interpolated with the uniform distribution over every
    // predictable symbol
    {
        let adj = &adjusted[0];
        let disc = &discounts[0];
        let total: u64 = adj.values().sum();
        let mass: f64 = adj.values().map(|&a| disc.for_count(a)).sum();
        let gamma = mass / total as f64;
        let uniform = 1.0 / (vocab.len() - 1) as f64;
        let mut uni = HashMap::with_capacity(vocab.len());
        for id in 0..vocab.len() as u32 {
            let logprob = if id == bos {
                f64::NEG_INFINITY
            } else {
                let a = adj.get(&[id][..]).copied().unwrap_or(0);
                let alpha = (a as f64 - disc.for_count(a)).max(0.0) / total as f64;
                (alpha + gamma * uniform).log10()
            };
            uni.insert(vec![id], Entry { logprob, backoff: 0.0 });
        }
        tables.push(uni);
    }

    for k in 2..=order {
        let disc = &discounts[k - 1];
        let mut contexts: HashMap<&[u32], ContextStats> = HashMap::new();
        for (g, &a) in &adjusted[k - 1] {
            let st = contexts.entry(&g[..k - 1]).or_default();
            st.total += a;
            st.n[(a.min(3) as usize).saturating_sub(1)] += 1;
            if pruned[k - 1].contains(g) {
                continue;
            }
            st.kept.push((g, a));
        }
        for (g, &a) in &adjusted[k - 1] {
            if pruned[k - 1].contains(g) {
                let st = contexts.get_mut(&g[..k - 1]).expect("context registered");
                st.pruned_alpha += (a as f64 - disc.for_count(a)).max(0.0) / st.total as f64;
            }
        }

        let mut level_k: HashMap<Vec<u32>, Entry> = HashMap::new();
        let mut backoffs: Vec<(&[u32], f64)> = Vec::new();
        // deterministic iteration so float sums do not depend on hash order
        let mut ctx_list: Vec<(&[u32], ContextStats)> = contexts.into_iter().collect();
        ctx_list.sort_by(|a, b| a.0.cmp(b.0));
        for (h, mut st) in ctx_list {
            st.kept.sort();
            let total = st.total as f64;
            let gamma = (disc.d[0] * st.n[0] as f64
                + disc.d[1] * st.n[1] as f64
                + disc.d[2] * st.n[2] as f64)
                / total;
            let mut kept_lower = 0.0;
            for &(g, a) in &st.kept {
                let w = g[k - 1];
                let q = 10f64.powf(super::backoff_score(&tables, order, &h[1..], w));
                kept_lower += q;
                let alpha = (a as f64 - disc.for_count(a)).max(0.0) / total;
                level_k.insert(g.to_vec(), Entry { logprob: (alpha + gamma * q).log10(), backoff: 0.0 });
            }
            let bow = if st.pruned_alpha == 0.0 {
                gamma
            } else {
                gamma + st.pruned_alpha / (1.0 - kept_lower).max(f64::MIN_POSITIVE)
            };
            if st.kept.is_empty() && !tables[k - 2].contains_key(h) {
                continue;
            }
            backoffs.push((h, bow.log10()));
        }
        for (h, bow) in backoffs {
            ensure_context(&mut tables, h);
            tables[k - 2].get_mut(h).expect("context ensured").backoff = bow;
        }
        tables.push(level_k);
    }

    let model = NGramModel::from_parts(order, level, vocab.clone(), tables)?;
    Ok(Estimation { model, discounts })
}

/// Inserts probability-less entries for `context` and its prefixes.
fn ensure_context(tables: &mut [HashMap<Vec<u32>, Entry>], context: &[u32]) {
    for len in 1..=context.len() {
        tables[len - 1]
            .entry(context[..len].to_vec())
            .or_insert(Entry { logprob: f64::NEG_INFINITY, backoff: 0.0 });
    }
}
