//! Seeded synthetic inputs for tests, benchmarks and demos.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::eval::Pair;
use crate::graph::{HeteroGraph, LabeledEdge, SimpleGraph};
use crate::rng;
use crate::vocab::{
    OWL_CLASS, OWL_OBJECT_PROPERTY, OWL_ON_PROPERTY, OWL_RESTRICTION, OWL_SOME_VALUES_FROM,
    RDFS_SUBCLASS_OF, RDF_TYPE,
};

/// The pecan-pie restriction: four triples, one blank node.
pub const PECAN_PIE: &str = "\
<http://example.org/food#pecan_pie> <http://www.w3.org/2000/01/rdf-schema#subClassOf> _:x .
_:x <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://www.w3.org/2002/07/owl#Restriction> .
_:x <http://www.w3.org/2002/07/owl#onProperty> <http://example.org/food#HasIngredient> .
_:x <http://www.w3.org/2002/07/owl#someValuesFrom> <http://example.org/food#sugar> .
";

/// Visits the indices in `start..end` kept by independent coin flips with
/// probability `p`, jumping over the rejected ones geometrically.
fn bernoulli_indices(
    start: usize,
    end: usize,
    p: f64,
    rng: &mut rng::Rng,
    mut visit: impl FnMut(usize),
) {
    if p <= 0.0 || start >= end {
        return;
    }
    if p >= 1.0 {
        (start..end).for_each(visit);
        return;
    }
    let log_q = (1.0 - p).ln();
    let mut i = start as f64 - 1.0;
    loop {
        let u: f64 = rng.gen();
        i += 1.0 + ((1.0 - u).ln() / log_q).floor();
        if i >= end as f64 {
            return;
        }
        visit(i as usize);
    }
}

/// Community of node `u` when `n` nodes are cut into `blocks` contiguous
/// blocks.
pub fn block_of(u: usize, n: usize, blocks: usize) -> usize {
    u * blocks / n
}

/// Stochastic block model with contiguous, near-equal communities.
pub fn stochastic_block(n: usize, blocks: usize, p_in: f64, p_out: f64, seed: u64) -> SimpleGraph {
    let blocks = blocks.max(1);
    let mut rng = rng::seeded(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        let b = block_of(u, n, blocks);
        let block_end = ((b + 1) * n).div_ceil(blocks).min(n);
        bernoulli_indices(u + 1, block_end, p_in, &mut rng, |v| {
            edges.push((u as u32, v as u32))
        });
        bernoulli_indices(block_end, n, p_out, &mut rng, |v| {
            edges.push((u as u32, v as u32))
        });
    }
    SimpleGraph::from_edges(n, edges)
}

pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> SimpleGraph {
    stochastic_block(n, 1, p, 0.0, seed)
}

/// Barabási–Albert preferential attachment: each new node links to `m`
/// distinct existing nodes chosen proportionally to degree.
pub fn barabasi_albert(n: usize, m: usize, seed: u64) -> SimpleGraph {
    let mut rng = rng::seeded(seed);
    let m = m.max(1);
    let mut edges = Vec::new();
    let mut ends: Vec<u32> = Vec::new();
    for u in m..n {
        let mut targets = BTreeSet::new();
        if ends.is_empty() {
            targets.extend(0..m as u32);
        } else {
            while targets.len() < m {
                targets.insert(*ends.choose(&mut rng).unwrap());
            }
        }
        for t in targets {
            edges.push((u as u32, t));
            ends.extend([u as u32, t]);
        }
    }
    SimpleGraph::from_edges(n, edges)
}

/// Knowledge graph whose triples follow hidden translations: entity
/// vectors are drawn on the unit sphere, relation vectors with length
/// `relation_length`, and every (entity, relation) pair yields the triple
/// to the entity nearest `e_s + r`.
#[derive(Debug, Clone)]
pub struct PlantedKg {
    pub train: HeteroGraph,
    pub held_out: Vec<LabeledEdge>,
    pub all: BTreeSet<LabeledEdge>,
}

pub fn planted_translation(
    entities: usize,
    relations: usize,
    dim: usize,
    relation_length: f64,
    held_out_fraction: f64,
    seed: u64,
) -> PlantedKg {
    let mut rng = rng::seeded(seed);
    let mut draw = |length: f64| -> Vec<f64> {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x * length / norm).collect()
    };
    let ent: Vec<Vec<f64>> = (0..entities).map(|_| draw(1.0)).collect();
    let rel: Vec<Vec<f64>> = (0..relations).map(|_| draw(relation_length)).collect();
    let mut triples = Vec::new();
    for (p, r) in rel.iter().enumerate() {
        for (s, e) in ent.iter().enumerate() {
            let target: Vec<f64> = e.iter().zip(r).map(|(a, b)| a + b).collect();
            let o = (0..entities)
                .filter(|&o| o != s)
                .min_by(|&a, &b| {
                    let d = |x: usize| {
                        ent[x]
                            .iter()
                            .zip(&target)
                            .map(|(a, b)| (a - b).powi(2))
                            .sum::<f64>()
                    };
                    d(a).total_cmp(&d(b))
                })
                .unwrap();
            triples.push(LabeledEdge {
                s: s as u32,
                p: p as u32,
                o: o as u32,
            });
        }
    }
    let all: BTreeSet<LabeledEdge> = triples.iter().copied().collect();
    triples.shuffle(&mut rng);
    let cut = (triples.len() as f64 * held_out_fraction).round() as usize;
    let held_out = triples[..cut].to_vec();
    let mut train = HeteroGraph::new();
    for i in 0..entities {
        train.add_node(format!("http://example.org/kg/e{i}"));
    }
    for i in 0..relations {
        train
            .predicates
            .intern(format!("http://example.org/kg/r{i}"));
    }
    train.edges = triples[cut..].to_vec();
    PlantedKg {
        train,
        held_out,
        all,
    }
}

/// N-Triples text of an ontology-shaped class graph: a subclass backbone
/// where parents are recent classes, occasional second parents, and
/// existential restrictions over three object properties. The `n` classes
/// all project to nodes in rules mode.
pub fn synthetic_ontology(n: usize, seed: u64) -> String {
    let mut rng = rng::seeded(seed);
    let base = "http://example.org/onto/";
    let properties = ["part_of", "regulates", "has_part"];
    let mut out = String::with_capacity(n * 300);
    let class = |i: usize| format!("<{base}C{i}>");
    for p in properties {
        writeln!(out, "<{base}{p}> <{RDF_TYPE}> <{OWL_OBJECT_PROPERTY}> .").unwrap();
    }
    for i in 0..n {
        writeln!(out, "{} <{RDF_TYPE}> <{OWL_CLASS}> .", class(i)).unwrap();
        if i == 0 {
            continue;
        }
        let parent = i - 1 - rng.gen_range(0..i.min(40));
        writeln!(out, "{} <{RDFS_SUBCLASS_OF}> {} .", class(i), class(parent)).unwrap();
        if i > 1 && rng.gen_bool(0.4) {
            let other = i - 1 - rng.gen_range(0..i.min(400));
            writeln!(out, "{} <{RDFS_SUBCLASS_OF}> {} .", class(i), class(other)).unwrap();
        }
        if rng.gen_bool(0.7) {
            let filler = i - 1 - rng.gen_range(0..i.min(300));
            let p = properties[rng.gen_range(0..properties.len())];
            writeln!(out, "{} <{RDFS_SUBCLASS_OF}> _:r{i} .", class(i)).unwrap();
            writeln!(out, "_:r{i} <{RDF_TYPE}> <{OWL_RESTRICTION}> .").unwrap();
            writeln!(out, "_:r{i} <{OWL_ON_PROPERTY}> <{base}{p}> .").unwrap();
            writeln!(out, "_:r{i} <{OWL_SOME_VALUES_FROM}> {} .", class(filler)).unwrap();
        }
    }
    out
}

/// Two versions over the same nodes: `after` drops `remove` edges of
/// `before` and adds `add` non-edges, all chosen at random.
#[derive(Debug, Clone)]
pub struct VersionPair {
    pub before: SimpleGraph,
    pub after: SimpleGraph,
    pub added: Vec<Pair>,
    pub removed: Vec<Pair>,
}

pub fn version_pair(before: &SimpleGraph, add: usize, remove: usize, seed: u64) -> VersionPair {
    let mut rng = rng::seeded(seed);
    let mut edges: Vec<Pair> = before.edges().collect();
    edges.shuffle(&mut rng);
    let mut removed: Vec<Pair> = edges.iter().copied().take(remove).collect();
    removed.sort_unstable();
    let n = before.node_count() as u32;
    let mut added = BTreeSet::new();
    let available = before.non_edge_count();
    while added.len() < add.min(available) {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a != b && !before.has_edge(a, b) {
            added.insert((a.min(b), a.max(b)));
        }
    }
    let gone: BTreeSet<Pair> = removed.iter().copied().collect();
    let after = SimpleGraph::from_edges(
        before.node_count(),
        before
            .edges()
            .filter(|e| !gone.contains(e))
            .chain(added.iter().copied()),
    );
    VersionPair {
        before: before.clone(),
        after,
        added: added.into_iter().collect(),
        removed,
    }
}

/// Logistic-regression task with one informative column.
///
/// Column 0 equals the label except on a `flip` fraction of rows (some
/// noise keeps the maximum-likelihood fit finite), columns `1..=noise` are
/// uniform noise and the last column is all ones.
pub fn planted_logistic(
    rows: usize,
    noise: usize,
    flip: f64,
    seed: u64,
) -> (DMatrix<f64>, Vec<f64>) {
    let mut rng = rng::seeded(seed);
    let cols = noise + 2;
    let mut x = DMatrix::zeros(rows, cols);
    let mut y = Vec::with_capacity(rows);
    for i in 0..rows {
        let label = (i % 2) as f64;
        x[(i, 0)] = if rng.gen_bool(flip) {
            1.0 - label
        } else {
            label
        };
        for j in 1..=noise {
            x[(i, j)] = rng.gen::<f64>();
        }
        x[(i, cols - 1)] = 1.0;
        y.push(label);
    }
    (x, y)
}
