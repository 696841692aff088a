//! Proximity scorers and the uniform [`Scorer`] interface used by the
//! benchmark and the recommender.

use rand::Rng as _;
use rayon::prelude::*;

use crate::error::Result;
use crate::graph::{HeteroGraph, SimpleGraph};
use crate::rng;

/// Everything a scorer may look at while fitting. `graph` is the training
/// graph; `hetero` (when present) is its labeled counterpart with the same
/// node ids.
#[derive(Clone, Copy)]
pub struct FitContext<'a> {
    pub graph: &'a SimpleGraph,
    pub hetero: Option<&'a HeteroGraph>,
    pub seed: u64,
}

impl<'a> FitContext<'a> {
    pub fn new(graph: &'a SimpleGraph, seed: u64) -> Self {
        FitContext {
            graph,
            hetero: None,
            seed,
        }
    }
}

pub trait Scorer: Send + Sync {
    fn name(&self) -> &str;

    fn fit(&mut self, ctx: FitContext<'_>) -> Result<()>;

    /// Score of the unordered pair. Only valid after `fit`.
    fn score(&self, u: u32, v: u32) -> f64;

    fn score_pairs(&self, pairs: &[(u32, u32)]) -> Vec<f64> {
        pairs.par_iter().map(|&(u, v)| self.score(u, v)).collect()
    }
}

fn common_neighbors<'g>(g: &'g SimpleGraph, u: u32, v: u32) -> impl Iterator<Item = u32> + 'g {
    let (a, b) = (g.neighbors(u), g.neighbors(v));
    let (mut i, mut j) = (0, 0);
    std::iter::from_fn(move || {
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    let x = a[i];
                    i += 1;
                    j += 1;
                    return Some(x);
                }
            }
        }
        None
    })
}

/// Σ over common neighbours x of 1 / ln |N(x)|.
pub fn adamic_adar(g: &SimpleGraph, u: u32, v: u32) -> f64 {
    common_neighbors(g, u, v)
        .map(|x| {
            let degree = g.degree(x);
            // x neighbours both u and v, so degree >= 2 unless u == v
            debug_assert!(degree >= 2 || u == v);
            1.0 / (degree as f64).ln()
        })
        .sum()
}

/// |N(u) ∩ N(v)| / |N(u) ∪ N(v)|, and 0 when both neighbourhoods are empty.
pub fn jaccard(g: &SimpleGraph, u: u32, v: u32) -> f64 {
    let common = common_neighbors(g, u, v).count();
    let union = g.degree(u) + g.degree(v) - common;
    if union == 0 {
        0.0
    } else {
        common as f64 / union as f64
    }
}

/// |N(u)| · |N(v)|.
pub fn preferential(g: &SimpleGraph, u: u32, v: u32) -> f64 {
    (g.degree(u) * g.degree(v)) as f64
}

/// Rescales scores to [0, 1] over the evaluated set. A constant set maps to
/// all zeros.
pub fn min_max_normalize(scores: &mut [f64]) {
    let (lo, hi) = scores
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| {
            (lo.min(s), hi.max(s))
        });
    let span = hi - lo;
    for s in scores.iter_mut() {
        *s = if span > 0.0 { (*s - lo) / span } else { 0.0 };
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProximityIndex {
    AdamicAdar,
    Jaccard,
    Preferential,
}

/// Scorer wrapper around one of the proximity indices; fitting just keeps a
/// copy of the training graph.
#[derive(Debug, Clone)]
pub struct ProximityScorer {
    index: ProximityIndex,
    graph: SimpleGraph,
}

impl ProximityScorer {
    pub fn new(index: ProximityIndex) -> Self {
        ProximityScorer {
            index,
            graph: SimpleGraph::default(),
        }
    }
}

impl Scorer for ProximityScorer {
    fn name(&self) -> &str {
        match self.index {
            ProximityIndex::AdamicAdar => "adamic",
            ProximityIndex::Jaccard => "jaccard",
            ProximityIndex::Preferential => "pref",
        }
    }

    fn fit(&mut self, ctx: FitContext<'_>) -> Result<()> {
        self.graph = ctx.graph.clone();
        Ok(())
    }

    fn score(&self, u: u32, v: u32) -> f64 {
        match self.index {
            ProximityIndex::AdamicAdar => adamic_adar(&self.graph, u, v),
            ProximityIndex::Jaccard => jaccard(&self.graph, u, v),
            ProximityIndex::Preferential => preferential(&self.graph, u, v),
        }
    }
}

/// Uniform random scores, hashed from (seed, pair) so a pair always gets
/// the same value.
#[derive(Debug, Clone, Default)]
pub struct CoinFlipScorer {
    seed: u64,
}

impl Scorer for CoinFlipScorer {
    fn name(&self) -> &str {
        "random"
    }

    fn fit(&mut self, ctx: FitContext<'_>) -> Result<()> {
        self.seed = ctx.seed;
        Ok(())
    }

    fn score(&self, u: u32, v: u32) -> f64 {
        let (a, b) = (u.min(v) as u64, u.max(v) as u64);
        rng::stream(self.seed, (a << 32) | b).gen::<f64>()
    }
}

/// Either a materialised |P|×|N| block of scores or a lazy evaluator over
/// a fitted scorer; rows are the nodes in `rows`.
pub enum ScoreMatrixView<'a> {
    Dense {
        rows: Vec<u32>,
        columns: usize,
        values: Vec<f64>,
    },
    Lazy {
        rows: Vec<u32>,
        columns: usize,
        scorer: &'a dyn Scorer,
    },
}

impl<'a> ScoreMatrixView<'a> {
    /// Materialises the rows of `scorer` for every column.
    pub fn dense(scorer: &dyn Scorer, rows: Vec<u32>, columns: usize) -> Self {
        let values = rows
            .par_iter()
            .flat_map_iter(|&u| {
                (0..columns as u32).map(move |v| if u == v { 0.0 } else { scorer.score(u, v) })
            })
            .collect();
        ScoreMatrixView::Dense {
            rows,
            columns,
            values,
        }
    }

    pub fn lazy(scorer: &'a dyn Scorer, rows: Vec<u32>, columns: usize) -> Self {
        ScoreMatrixView::Lazy {
            rows,
            columns,
            scorer,
        }
    }

    pub fn rows(&self) -> &[u32] {
        match self {
            ScoreMatrixView::Dense { rows, .. } | ScoreMatrixView::Lazy { rows, .. } => rows,
        }
    }

    pub fn columns(&self) -> usize {
        match self {
            ScoreMatrixView::Dense { columns, .. } | ScoreMatrixView::Lazy { columns, .. } => {
                *columns
            }
        }
    }

    /// Entry at row position `row` (index into `rows()`) and column node `v`.
    pub fn get(&self, row: usize, v: u32) -> f64 {
        match self {
            ScoreMatrixView::Dense {
                columns, values, ..
            } => values[row * columns + v as usize],
            ScoreMatrixView::Lazy { rows, scorer, .. } => {
                let u = rows[row];
                if u == v {
                    0.0
                } else {
                    scorer.score(u, v)
                }
            }
        }
    }
}
