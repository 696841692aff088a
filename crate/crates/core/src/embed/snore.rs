//! SNoRe: symbolic node representations from hashed random-walk
//! neighbourhoods.
//!
//! Every node `u` gets a neighbourhood vector `h(u)` holding the visit
//! frequencies of `walks_per_node` uniform random walks started at `u`
//! (the start node counts as visited once per walk, each walk takes a
//! uniformly drawn number of steps in `1..=max_len`). Visit frequencies
//! below `neighborhood_threshold` are left out of `h(u)`. The embedding
//! entry `R[u][f]` is the cosine similarity of `h(u)` and `h(f)`, with
//! every node acting as a feature column; entries below `threshold` are
//! dropped and each row keeps at most `nnz_cap_per_node` of its largest
//! entries.

use std::collections::HashMap;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SimpleGraph;
use crate::graphcore::{FitContext, Scorer};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnoreParams {
    pub walks_per_node: usize,
    pub max_len: usize,
    /// Inclusion threshold for embedding entries.
    pub threshold: f64,
    /// Minimum relative visit frequency for a node to enter a
    /// neighbourhood vector.
    pub neighborhood_threshold: f64,
    pub nnz_cap_per_node: usize,
    /// Bucket count for hashed neighbourhoods; `None` hashes node ids to
    /// themselves.
    pub hash_buckets: Option<usize>,
    /// Worker threads; `None` uses the ambient rayon pool. Results do not
    /// depend on this value.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl Default for SnoreParams {
    fn default() -> Self {
        SnoreParams {
            walks_per_node: 1024,
            max_len: 5,
            threshold: 0.005,
            neighborhood_threshold: 0.005,
            nnz_cap_per_node: 256,
            hash_buckets: None,
            threads: None,
        }
    }
}

/// Row-sparse |N|×|F| matrix with node-identity columns, stored as CSR with
/// column indices sorted within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseEmbedding {
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
    feature_names: Vec<String>,
    pub params: Option<SnoreParams>,
    pub seed: Option<u64>,
}

impl SparseEmbedding {
    /// Builds from per-row `(feature, value)` lists; rows are sorted by
    /// feature and duplicate features are rejected.
    pub fn from_rows(rows: Vec<Vec<(u32, f64)>>, feature_names: Vec<String>) -> Result<Self> {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(f, _)| f);
            for w in row.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(Error::InvalidArgument(format!(
                        "duplicate feature {} in row",
                        w[0].0
                    )));
                }
            }
            for (f, v) in row {
                if f as usize >= feature_names.len() {
                    return Err(Error::InvalidArgument(format!(
                        "feature {f} outside 0..{}",
                        feature_names.len()
                    )));
                }
                indices.push(f);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        Ok(SparseEmbedding {
            indptr,
            indices,
            values,
            feature_names,
            params: None,
            seed: None,
        })
    }

    pub fn node_count(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn feature_count(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, u: u32) -> (&[u32], &[f64]) {
        let (a, b) = (self.indptr[u as usize], self.indptr[u as usize + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn row_entries(&self, u: u32) -> impl Iterator<Item = (u32, f64)> + '_ {
        let (idx, val) = self.row(u);
        idx.iter().copied().zip(val.iter().copied())
    }

    pub fn min_value(&self) -> Option<f64> {
        self.values.iter().copied().reduce(f64::min)
    }

    pub fn max_value(&self) -> Option<f64> {
        self.values.iter().copied().reduce(f64::max)
    }

    /// Sparse dot product of rows `u` and `v`, summed in ascending feature
    /// order.
    pub fn dot(&self, u: u32, v: u32) -> f64 {
        let (ia, va) = self.row(u);
        let (ib, vb) = self.row(v);
        let (mut i, mut j) = (0, 0);
        let mut sum = 0.0;
        while i < ia.len() && j < ib.len() {
            match ia[i].cmp(&ib[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    sum += va[i] * vb[j];
                    i += 1;
                    j += 1;
                }
            }
        }
        sum
    }

    /// Column-major copy: for every feature, the `(node, value)` pairs in
    /// ascending node order.
    pub fn columns(&self) -> Vec<Vec<(u32, f64)>> {
        let mut cols = vec![Vec::new(); self.feature_count()];
        for u in 0..self.node_count() as u32 {
            for (f, v) in self.row_entries(u) {
                cols[f as usize].push((u, v));
            }
        }
        cols
    }

    pub(crate) fn raw_parts(&self) -> (&[usize], &[u32], &[f64]) {
        (&self.indptr, &self.indices, &self.values)
    }
}

/// L = R·Rᵀ entry for the pair.
pub fn snore_score(r: &SparseEmbedding, u: u32, v: u32) -> f64 {
    r.dot(u, v)
}

/// Sparse neighbourhood vector: `(hashed node, weight)` sorted by key, with
/// weights L2-normalised.
type Neighborhood = Vec<(u32, f64)>;

fn bucket(node: u32, buckets: Option<usize>) -> u32 {
    match buckets {
        None => node,
        Some(b) => (rng::mix(node as u64) % b as u64) as u32,
    }
}

fn neighborhood(g: &SimpleGraph, u: u32, params: &SnoreParams, seed: u64) -> Neighborhood {
    let mut rng = rng::stream(seed, u as u64);
    let mut visits: Vec<u32> = Vec::with_capacity(params.walks_per_node * (params.max_len + 1));
    for _ in 0..params.walks_per_node {
        let mut cur = u;
        visits.push(cur);
        let len = rng.gen_range(1..=params.max_len);
        for _ in 0..len {
            let nbrs = g.neighbors(cur);
            if nbrs.is_empty() {
                break;
            }
            cur = nbrs[rng.gen_range(0..nbrs.len())];
            visits.push(cur);
        }
    }
    let total = visits.len() as f64;
    let mut counts: Vec<(u32, f64)> = if params.hash_buckets.is_some() {
        let mut acc: HashMap<u32, f64> = HashMap::new();
        for &v in &visits {
            *acc.entry(bucket(v, params.hash_buckets)).or_insert(0.0) += 1.0;
        }
        acc.into_iter().collect()
    } else {
        visits.sort_unstable();
        let mut out: Vec<(u32, f64)> = Vec::new();
        for &v in &visits {
            match out.last_mut() {
                Some((last, c)) if *last == v => *c += 1.0,
                _ => out.push((v, 1.0)),
            }
        }
        out
    };
    counts.retain(|&(_, c)| c / total >= params.neighborhood_threshold);
    counts.sort_by_key(|&(k, _)| k);
    let norm = counts.iter().map(|&(_, c)| c * c).sum::<f64>().sqrt();
    for (_, c) in counts.iter_mut() {
        *c /= norm;
    }
    counts
}

fn validate(g: &SimpleGraph, params: &SnoreParams) -> Result<()> {
    if g.node_count() == 0 {
        return Err(Error::InvalidArgument(
            "SNoRe needs a nonempty graph".into(),
        ));
    }
    if params.walks_per_node == 0 || params.max_len == 0 {
        return Err(Error::InvalidArgument(
            "walks_per_node and max_len must be positive".into(),
        ));
    }
    if params.nnz_cap_per_node == 0 {
        return Err(Error::InvalidArgument(
            "nnz_cap_per_node must be positive".into(),
        ));
    }
    if !(0.0..=1.0).contains(&params.threshold)
        || !(0.0..=1.0).contains(&params.neighborhood_threshold)
    {
        return Err(Error::InvalidArgument(
            "thresholds must lie in [0, 1]".into(),
        ));
    }
    if params.hash_buckets == Some(0) {
        return Err(Error::InvalidArgument(
            "hash_buckets must be positive".into(),
        ));
    }
    Ok(())
}

/// Fits the embedding. `feature_names` labels the columns (one per node).
pub fn snore_fit(
    g: &SimpleGraph,
    params: &SnoreParams,
    seed: u64,
    feature_names: Vec<String>,
) -> Result<SparseEmbedding> {
    validate(g, params)?;
    if feature_names.len() != g.node_count() {
        return Err(Error::InvalidArgument(format!(
            "{} feature names for {} nodes",
            feature_names.len(),
            g.node_count()
        )));
    }
    let run = || fit_rows(g, params, seed);
    let rows = match params.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };
    let mut emb = SparseEmbedding::from_rows(rows, feature_names)?;
    emb.params = Some(SnoreParams {
        threads: None,
        ..params.clone()
    });
    emb.seed = Some(seed);
    Ok(emb)
}

fn fit_rows(g: &SimpleGraph, params: &SnoreParams, seed: u64) -> Vec<Vec<(u32, f64)>> {
    let n = g.node_count();
    let hoods: Vec<Neighborhood> = (0..n as u32)
        .into_par_iter()
        .map(|u| neighborhood(g, u, params, seed))
        .collect();

    // postings[key] = (feature node, weight), ascending by node
    let keys = params.hash_buckets.unwrap_or(n);
    let mut postings: Vec<Vec<(u32, f64)>> = vec![Vec::new(); keys];
    for (f, hood) in hoods.iter().enumerate() {
        for &(k, w) in hood {
            postings[k as usize].push((f as u32, w));
        }
    }

    (0..n as u32)
        .into_par_iter()
        .map_init(
            || (vec![0.0f64; n], Vec::<u32>::new()),
            |(acc, touched), u| {
                for &(k, w) in &hoods[u as usize] {
                    for &(f, wf) in &postings[k as usize] {
                        if acc[f as usize] == 0.0 {
                            touched.push(f);
                        }
                        acc[f as usize] += w * wf;
                    }
                }
                let mut row: Vec<(u32, f64)> = Vec::new();
                for &f in touched.iter() {
                    // cosine of nonnegative unit vectors; clamp rounding above 1
                    let value = acc[f as usize].min(1.0);
                    acc[f as usize] = 0.0;
                    if value >= params.threshold && value > 0.0 {
                        row.push((f, value));
                    }
                }
                touched.clear();
                if row.len() > params.nnz_cap_per_node {
                    row.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
                    row.truncate(params.nnz_cap_per_node);
                }
                row.sort_by_key(|&(f, _)| f);
                row
            },
        )
        .collect()
}

/// SNoRe behind the scorer interface; feature names are the node ids.
#[derive(Debug, Clone, Default)]
pub struct SnoreScorer {
    pub params: SnoreParams,
    embedding: Option<SparseEmbedding>,
}

impl SnoreScorer {
    pub fn new(params: SnoreParams) -> Self {
        SnoreScorer {
            params,
            embedding: None,
        }
    }

    pub fn embedding(&self) -> Option<&SparseEmbedding> {
        self.embedding.as_ref()
    }
}

impl Scorer for SnoreScorer {
    fn name(&self) -> &str {
        "snore"
    }

    fn fit(&mut self, ctx: FitContext<'_>) -> Result<()> {
        let names = (0..ctx.graph.node_count()).map(|i| i.to_string()).collect();
        self.embedding = Some(snore_fit(ctx.graph, &self.params, ctx.seed, names)?);
        Ok(())
    }

    fn score(&self, u: u32, v: u32) -> f64 {
        self.embedding
            .as_ref()
            .expect("SnoreScorer::score before fit")
            .dot(u, v)
    }
}
