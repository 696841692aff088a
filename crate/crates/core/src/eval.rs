//! Five-fold link-prediction benchmark.
//!
//! Positives are the shuffled upper-triangle edges of the graph; negatives
//! are uniformly sampled distinct non-edges, as many as there are
//! positives. Both lists are cut into five consecutive parts, the first
//! `n mod 5` parts one element longer. Fold `i` is scored by scorers fitted
//! on the graph without fold `i`'s positives.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{HeteroGraph, SimpleGraph};
use crate::graphcore::{FitContext, Scorer};
use crate::rng;

pub const FOLDS: usize = 5;

pub type Pair = (u32, u32);

fn canonical(u: u32, v: u32) -> Pair {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Fold {
    pub positives: Vec<Pair>,
    pub negatives: Vec<Pair>,
}

impl Fold {
    /// `(u, v, is_positive)` for every pair of the fold.
    pub fn labeled(&self) -> impl Iterator<Item = (u32, u32, bool)> + '_ {
        self.positives
            .iter()
            .map(|&(u, v)| (u, v, true))
            .chain(self.negatives.iter().map(|&(u, v)| (u, v, false)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FoldPlan {
    pub folds: Vec<Fold>,
    pub seed: u64,
    pub n_pos: usize,
    pub n_neg: usize,
}

impl FoldPlan {
    pub fn held_out(&self, fold: usize) -> HashSet<Pair> {
        self.folds[fold].positives.iter().copied().collect()
    }
}

/// Part sizes for `n` items over `parts` folds; earlier parts absorb the
/// remainder.
pub fn fold_sizes(n: usize, parts: usize) -> Vec<usize> {
    (0..parts)
        .map(|i| n / parts + usize::from(i < n % parts))
        .collect()
}

fn split<T: Clone>(items: &[T], parts: usize) -> Vec<Vec<T>> {
    let mut out = Vec::with_capacity(parts);
    let mut start = 0;
    for size in fold_sizes(items.len(), parts) {
        out.push(items[start..start + size].to_vec());
        start += size;
    }
    out
}

/// Uniform sample of `count` distinct non-edges.
pub fn sample_non_edges(g: &SimpleGraph, count: usize, rng: &mut rng::Rng) -> Result<Vec<Pair>> {
    let available = g.non_edge_count();
    if available == 0 && count > 0 {
        return Err(Error::NegativeSamplingInfeasible);
    }
    if available < count {
        return Err(Error::NotEnoughNonEdges {
            needed: count,
            available,
        });
    }
    let n = g.node_count() as u32;
    if available <= count.saturating_mul(4) {
        // dense graph: enumerate instead of rejecting most draws
        let mut all: Vec<Pair> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .filter(|&(u, v)| !g.has_edge(u, v))
            .collect();
        all.shuffle(rng);
        all.truncate(count);
        return Ok(all);
    }
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u == v {
            continue;
        }
        let pair = canonical(u, v);
        if g.has_edge(pair.0, pair.1) || !seen.insert(pair) {
            continue;
        }
        out.push(pair);
    }
    Ok(out)
}

pub fn make_folds(g: &SimpleGraph, seed: u64) -> Result<FoldPlan> {
    if g.edge_count() < FOLDS {
        return Err(Error::InvalidArgument(format!(
            "need at least {FOLDS} edges for {FOLDS}-fold evaluation, graph has {}",
            g.edge_count()
        )));
    }
    let mut rng = rng::seeded(seed);
    let mut positives: Vec<Pair> = g.edges().collect();
    positives.shuffle(&mut rng);
    let negatives = sample_non_edges(g, positives.len(), &mut rng)?;
    let folds = split(&positives, FOLDS)
        .into_iter()
        .zip(split(&negatives, FOLDS))
        .map(|(positives, negatives)| Fold {
            positives,
            negatives,
        })
        .collect();
    Ok(FoldPlan {
        folds,
        seed,
        n_pos: positives.len(),
        n_neg: negatives.len(),
    })
}

fn check_scores(pos: &[f64], neg: &[f64]) -> Result<()> {
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::InvalidArgument(
            "ROC-AUC/AP need nonempty positive and negative score lists".into(),
        ));
    }
    if pos.iter().chain(neg).any(|s| s.is_nan()) {
        return Err(Error::InvalidArgument("NaN score".into()));
    }
    Ok(())
}

/// P(pos > neg) + ½·P(pos = neg) over all cross pairs, via average ranks.
pub fn roc_auc(pos: &[f64], neg: &[f64]) -> Result<f64> {
    check_scores(pos, neg)?;
    let mut all: Vec<(f64, bool)> = pos
        .iter()
        .map(|&s| (s, true))
        .chain(neg.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        // ranks i+1..=j share their mean
        let mean_rank = (i + 1 + j) as f64 / 2.0;
        let positives = all[i..j].iter().filter(|e| e.1).count();
        rank_sum += mean_rank * positives as f64;
        i = j;
    }
    let (p, n) = (pos.len() as f64, neg.len() as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Σ_k P@k · Δrecall@k over the descending ranking. A group of tied
/// scores counts as one threshold: its positives all receive the precision
/// measured at the end of the group.
pub fn average_precision(pos: &[f64], neg: &[f64]) -> Result<f64> {
    check_scores(pos, neg)?;
    let mut all: Vec<(f64, bool)> = pos
        .iter()
        .map(|&s| (s, true))
        .chain(neg.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| b.0.total_cmp(&a.0));
    let total_pos = pos.len() as f64;
    let (mut tp, mut seen) = (0usize, 0usize);
    let mut ap = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        let group_pos = all[i..j].iter().filter(|e| e.1).count();
        tp += group_pos;
        seen += j - i;
        if group_pos > 0 {
            ap += (group_pos as f64 / total_pos) * (tp as f64 / seen as f64);
        }
        i = j;
    }
    Ok(ap)
}

#[derive(Debug, Clone, Serialize)]
pub struct ScorerResult {
    pub scorer: String,
    pub auc_mean: f64,
    pub auc_std: f64,
    pub ap_mean: f64,
    pub ap_std: f64,
    pub fold_auc: Vec<f64>,
    pub fold_ap: Vec<f64>,
    pub fit_seconds: f64,
    pub score_seconds: f64,
    /// Set when fitting or scoring failed on some fold; metrics then cover
    /// the successful folds only.
    pub failed: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkReport {
    pub dataset: String,
    pub seed: u64,
    pub nodes: usize,
    pub edges: usize,
    pub results: Vec<ScorerResult>,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Per-fold graphs: the full graph minus the held-out positives (and the
/// labeled graph minus every labeled edge between a held-out pair).
pub fn training_graphs(
    g: &SimpleGraph,
    h: Option<&HeteroGraph>,
    held_out: &HashSet<Pair>,
) -> (SimpleGraph, Option<HeteroGraph>) {
    let train = g.filter_edges(|u, v| !held_out.contains(&(u, v)));
    let hetero = h.map(|h| h.filter_pairs(|s, o| !held_out.contains(&canonical(s, o))));
    (train, hetero)
}

pub fn run_benchmark(
    dataset: &str,
    g: &SimpleGraph,
    h: Option<&HeteroGraph>,
    scorers: &mut [Box<dyn Scorer>],
    seed: u64,
) -> Result<BenchmarkReport> {
    if let Some(h) = h {
        if h.node_count() != g.node_count() {
            return Err(Error::InvalidArgument(
                "labeled and simple graphs disagree on node count".into(),
            ));
        }
    }
    let plan = make_folds(g, seed)?;
    let mut results: Vec<ScorerResult> = scorers
        .iter()
        .map(|s| ScorerResult {
            scorer: s.name().to_string(),
            auc_mean: f64::NAN,
            auc_std: f64::NAN,
            ap_mean: f64::NAN,
            ap_std: f64::NAN,
            fold_auc: Vec::new(),
            fold_ap: Vec::new(),
            fit_seconds: 0.0,
            score_seconds: 0.0,
            failed: None,
        })
        .collect();

    for (fi, fold) in plan.folds.iter().enumerate() {
        let held_out = plan.held_out(fi);
        let (train, hetero) = training_graphs(g, h, &held_out);
        let ctx = FitContext {
            graph: &train,
            hetero: hetero.as_ref(),
            seed: rng::mix(seed ^ fi as u64),
        };
        for (scorer, result) in scorers.iter_mut().zip(results.iter_mut()) {
            let start = Instant::now();
            let fitted = scorer.fit(ctx);
            result.fit_seconds += start.elapsed().as_secs_f64();
            if let Err(e) = fitted {
                log::warn!("{} failed on fold {fi}: {e}", scorer.name());
                result
                    .failed
                    .get_or_insert_with(|| format!("fold {fi}: {e}"));
                continue;
            }
            let start = Instant::now();
            let pos = scorer.score_pairs(&fold.positives);
            let neg = scorer.score_pairs(&fold.negatives);
            result.score_seconds += start.elapsed().as_secs_f64();
            match (roc_auc(&pos, &neg), average_precision(&pos, &neg)) {
                (Ok(auc), Ok(ap)) => {
                    result.fold_auc.push(auc);
                    result.fold_ap.push(ap);
                }
                (Err(e), _) | (_, Err(e)) => {
                    result
                        .failed
                        .get_or_insert_with(|| format!("fold {fi}: {e}"));
                }
            }
        }
    }
    for r in &mut results {
        (r.auc_mean, r.auc_std) = mean_std(&r.fold_auc);
        (r.ap_mean, r.ap_std) = mean_std(&r.fold_ap);
    }
    Ok(BenchmarkReport {
        dataset: dataset.to_string(),
        seed,
        nodes: g.node_count(),
        edges: g.edge_count(),
        results,
    })
}

impl BenchmarkReport {
    /// Aligned text table, metrics as mean ± std scaled by 100.
    pub fn to_table(&self) -> String {
        let cell = |m: f64, s: f64| {
            if m.is_nan() {
                "failed".to_string()
            } else {
                format!("{:.2} (± {:.2})", m * 100.0, s * 100.0)
            }
        };
        let rows: Vec<[String; 4]> = self
            .results
            .iter()
            .map(|r| {
                [
                    r.scorer.clone(),
                    cell(r.auc_mean, r.auc_std),
                    cell(r.ap_mean, r.ap_std),
                    format!("{:.3}", r.fit_seconds + r.score_seconds),
                ]
            })
            .collect();
        let header = [
            "scorer".to_string(),
            "ROC-AUC".into(),
            "AP".into(),
            "seconds".into(),
        ];
        let widths: Vec<usize> = (0..4)
            .map(|c| {
                rows.iter()
                    .map(|r| r[c].len())
                    .chain([header[c].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} ({} nodes, {} edges, seed {})",
            self.dataset, self.nodes, self.edges, self.seed
        );
        for row in std::iter::once(&header).chain(rows.iter()) {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (v, w))| {
                    if c == 0 {
                        format!("{v:<w$}")
                    } else {
                        format!("{v:>w$}")
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
        }
        out
    }
}
