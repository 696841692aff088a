//! TransE: entities and relations in one vector space, trained so that
//! `e_s + r_p ≈ e_o` for observed triples. Margin ranking loss against
//! head- or tail-corrupted triples, plain SGD, entity vectors projected
//! back to the unit sphere after every epoch.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{HeteroGraph, LabeledEdge};
use crate::graphcore::{FitContext, Scorer};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransEParams {
    pub dim: usize,
    pub margin: f64,
    pub lr: f64,
    pub epochs: usize,
    pub negatives_per_positive: usize,
}

impl Default for TransEParams {
    fn default() -> Self {
        TransEParams {
            dim: 64,
            margin: 1.0,
            lr: 0.01,
            epochs: 200,
            negatives_per_positive: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KGEmbedding {
    pub dim: usize,
    entities: Vec<f64>,
    relations: Vec<f64>,
    /// Summed margin loss of each epoch.
    pub epoch_losses: Vec<f64>,
}

impl KGEmbedding {
    pub fn entity_count(&self) -> usize {
        self.entities.len() / self.dim.max(1)
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len() / self.dim.max(1)
    }

    pub fn entity(&self, e: u32) -> &[f64] {
        &self.entities[e as usize * self.dim..(e as usize + 1) * self.dim]
    }

    pub fn relation(&self, r: u32) -> &[f64] {
        &self.relations[r as usize * self.dim..(r as usize + 1) * self.dim]
    }

    /// ‖e_s + r_p − e_o‖.
    pub fn distance(&self, s: u32, p: u32, o: u32) -> f64 {
        let (es, rp, eo) = (self.entity(s), self.relation(p), self.entity(o));
        (0..self.dim)
            .map(|k| (es[k] + rp[k] - eo[k]).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn from_parts(dim: usize, entities: Vec<f64>, relations: Vec<f64>) -> Result<Self> {
        if dim == 0 || !entities.len().is_multiple_of(dim) || !relations.len().is_multiple_of(dim) {
            return Err(Error::InvalidArgument(
                "vector lengths must be multiples of dim".into(),
            ));
        }
        Ok(KGEmbedding {
            dim,
            entities,
            relations,
            epoch_losses: Vec::new(),
        })
    }
}

/// Max over relations and both orientations of −‖e_a + r − e_b‖.
pub fn transe_score(e: &KGEmbedding, u: u32, v: u32) -> f64 {
    (0..e.relation_count() as u32)
        .flat_map(|p| [-e.distance(u, p, v), -e.distance(v, p, u)])
        .fold(f64::NEG_INFINITY, f64::max)
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// Trains on the labeled edges of `h`.
pub fn transe_fit(h: &HeteroGraph, params: &TransEParams, seed: u64) -> Result<KGEmbedding> {
    if params.dim == 0 {
        return Err(Error::InvalidArgument(
            "TransE dimension must be positive".into(),
        ));
    }
    if h.edges.is_empty() {
        return Err(Error::InvalidArgument(
            "TransE needs at least one edge".into(),
        ));
    }
    let d = params.dim;
    let n = h.node_count();
    let m = h.predicates.len();
    let mut rng = rng::seeded(seed);
    let bound = 6.0 / (d as f64).sqrt();
    let mut entities: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-bound..bound)).collect();
    let mut relations: Vec<f64> = (0..m * d).map(|_| rng.gen_range(-bound..bound)).collect();
    relations.chunks_mut(d).for_each(normalize);
    entities.chunks_mut(d).for_each(normalize);

    let mut triples: Vec<LabeledEdge> = h.edges.clone();
    let mut losses = Vec::with_capacity(params.epochs);
    let mut pos = vec![0.0; d];
    let mut neg = vec![0.0; d];
    let mut last_finite = 0.0;
    for epoch in 0..params.epochs {
        triples.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for t in &triples {
            for _ in 0..params.negatives_per_positive {
                let corrupt_head = rng.gen_bool(0.5);
                let replacement = rng.gen_range(0..n) as u32;
                let (ns, no) = if corrupt_head {
                    (replacement, t.o)
                } else {
                    (t.s, replacement)
                };

                let diff = |s: u32, o: u32, out: &mut [f64], ent: &[f64], rel: &[f64]| -> f64 {
                    let (s, p, o) = (s as usize * d, t.p as usize * d, o as usize * d);
                    let mut sq = 0.0;
                    for k in 0..d {
                        out[k] = ent[s + k] + rel[p + k] - ent[o + k];
                        sq += out[k] * out[k];
                    }
                    sq.sqrt()
                };
                let dp = diff(t.s, t.o, &mut pos, &entities, &relations);
                let dn = diff(ns, no, &mut neg, &entities, &relations);
                let loss = params.margin + dp - dn;
                if loss <= 0.0 {
                    continue;
                }
                epoch_loss += loss;
                let gp = if dp > 0.0 { params.lr / dp } else { 0.0 };
                let gn = if dn > 0.0 { params.lr / dn } else { 0.0 };
                let (s, p, o) = (t.s as usize * d, t.p as usize * d, t.o as usize * d);
                let (cs, co) = (ns as usize * d, no as usize * d);
                for k in 0..d {
                    let a = gp * pos[k];
                    let b = gn * neg[k];
                    entities[s + k] -= a;
                    entities[o + k] += a;
                    relations[p + k] -= a - b;
                    entities[cs + k] += b;
                    entities[co + k] -= b;
                }
            }
        }
        if !epoch_loss.is_finite() || entities.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteLoss { epoch, last_finite });
        }
        last_finite = epoch_loss;
        losses.push(epoch_loss);
        entities.chunks_mut(d).for_each(normalize);
    }
    Ok(KGEmbedding {
        dim: d,
        entities,
        relations,
        epoch_losses: losses,
    })
}

/// TransE behind the scorer interface. Without a labeled training graph it
/// trains on the simple graph as a single relation.
#[derive(Debug, Clone, Default)]
pub struct TransEScorer {
    pub params: TransEParams,
    embedding: Option<KGEmbedding>,
}

impl TransEScorer {
    pub fn new(params: TransEParams) -> Self {
        TransEScorer {
            params,
            embedding: None,
        }
    }

    pub fn embedding(&self) -> Option<&KGEmbedding> {
        self.embedding.as_ref()
    }
}

impl Scorer for TransEScorer {
    fn name(&self) -> &str {
        "transe"
    }

    fn fit(&mut self, ctx: FitContext<'_>) -> Result<()> {
        let owned;
        let h = match ctx.hetero {
            Some(h) => h,
            None => {
                let nodes = crate::graph::NodeMap::from_names(
                    (0..ctx.graph.node_count()).map(|i| i.to_string()),
                );
                owned = HeteroGraph::from_simple(ctx.graph, nodes, "linked");
                &owned
            }
        };
        self.embedding = Some(transe_fit(h, &self.params, ctx.seed)?);
        Ok(())
    }

    fn score(&self, u: u32, v: u32) -> f64 {
        transe_score(
            self.embedding
                .as_ref()
                .expect("TransEScorer::score before fit"),
            u,
            v,
        )
    }
}
