//! Missing/redundant edge candidates from the masked score matrix
//! `L = R·Rᵀ`, the temporal benchmark across ontology versions, and the
//! feedback step of the annotation workflow.
//!
//! Missing candidates are the highest-scoring non-edges, redundant
//! candidates the lowest-scoring edges. Ties are broken by the canonical
//! `(u, v)` pair in ascending order, so lists for a smaller `k` are
//! prefixes of the lists for a larger one.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::snore::{snore_fit, SnoreParams, SparseEmbedding};
use crate::error::{Error, Result};
use crate::graph::{NodeMap, SimpleGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CandidateKind {
    Missing,
    Redundant,
}

impl fmt::Display for CandidateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CandidateKind::Missing => "missing",
            CandidateKind::Redundant => "redundant",
        })
    }
}

impl FromStr for CandidateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "missing" => Ok(CandidateKind::Missing),
            "redundant" => Ok(CandidateKind::Redundant),
            other => Err(Error::InvalidArgument(format!(
                "unknown candidate kind '{other}'"
            ))),
        }
    }
}

/// Candidate edge with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScoredCandidate {
    pub u: u32,
    pub v: u32,
    pub score: f64,
    pub kind: CandidateKind,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CandidateLists {
    pub missing: Vec<ScoredCandidate>,
    pub redundant: Vec<ScoredCandidate>,
    /// Clamping notices when fewer than `k` pairs were available.
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct CandidateOptions {
    /// Rows scored per streamed block.
    pub block_size: usize,
    /// Nodes allowed as candidate endpoints; `None` allows all.
    pub eligible: Option<Vec<bool>>,
}

impl Default for CandidateOptions {
    fn default() -> Self {
        CandidateOptions {
            block_size: 1024,
            eligible: None,
        }
    }
}

type Scored = (f64, u32, u32);

fn by_score_desc(a: &Scored, b: &Scored) -> Ordering {
    b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2)))
}

fn by_score_asc(a: &Scored, b: &Scored) -> Ordering {
    a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2)))
}

/// Keeps the first `k` entries of `items` under `cmp`.
fn keep_top(items: &mut Vec<Scored>, k: usize, cmp: fn(&Scored, &Scored) -> Ordering) {
    if items.len() > k {
        if k > 0 {
            items.select_nth_unstable_by(k - 1, cmp);
        }
        items.truncate(k);
    }
    items.sort_by(cmp);
}

pub fn candidates(
    r: &SparseEmbedding,
    g: &SimpleGraph,
    k: usize,
    subset: Option<&[u32]>,
) -> Result<CandidateLists> {
    candidates_with(r, g, k, subset, &CandidateOptions::default())
}

pub fn candidates_with(
    r: &SparseEmbedding,
    g: &SimpleGraph,
    k: usize,
    subset: Option<&[u32]>,
    options: &CandidateOptions,
) -> Result<CandidateLists> {
    let n = g.node_count();
    if r.node_count() != n {
        return Err(Error::InvalidArgument(format!(
            "embedding has {} rows but graph has {n} nodes",
            r.node_count()
        )));
    }
    if let Some(e) = &options.eligible {
        if e.len() != n {
            return Err(Error::InvalidArgument(
                "eligibility mask length differs from node count".into(),
            ));
        }
    }
    let mut in_rows = vec![subset.is_none(); n];
    let rows: Vec<u32> = match subset {
        None => (0..n as u32).collect(),
        Some(p) => {
            let mut rows = Vec::with_capacity(p.len());
            for &u in p {
                if u as usize >= n {
                    return Err(Error::UnknownNode(format!("node id {u}")));
                }
                if !in_rows[u as usize] {
                    in_rows[u as usize] = true;
                    rows.push(u);
                }
            }
            rows.sort_unstable();
            rows
        }
    };
    let eligible = |u: u32| options.eligible.as_ref().is_none_or(|e| e[u as usize]);
    // a pair is produced by exactly one of its endpoints' rows
    let owns = |row: u32, other: u32| !in_rows[other as usize] || row < other;

    let mut lists = CandidateLists::default();
    if k == 0 {
        return Ok(lists);
    }

    let columns = r.columns();
    let mut missing: Vec<(f64, u32, u32)> = Vec::new();
    for block in rows.chunks(options.block_size.max(1)) {
        // pairs scoring below the current k-th best can never make the list
        let global_floor = if missing.len() == k {
            missing[k - 1].0
        } else {
            f64::NEG_INFINITY
        };
        let found: Vec<Vec<(f64, u32, u32)>> = block
            .par_iter()
            .map_init(
                || (vec![0.0f64; n], Vec::<u32>::new()),
                |(acc, touched), &u| {
                    let mut out = Vec::new();
                    if !eligible(u) {
                        return out;
                    }
                    for (f, ru) in r.row_entries(u) {
                        let column = &columns[f as usize];
                        // with every row in play, row u owns only pairs with v > u
                        let from = if subset.is_none() {
                            column.partition_point(|&(v, _)| v <= u)
                        } else {
                            0
                        };
                        for &(v, rv) in &column[from..] {
                            if acc[v as usize] == 0.0 {
                                touched.push(v);
                            }
                            acc[v as usize] += ru * rv;
                        }
                    }
                    let mut floor = global_floor;
                    for &v in touched.iter() {
                        let score = acc[v as usize];
                        acc[v as usize] = 0.0;
                        if score >= floor
                            && v != u
                            && score > 0.0
                            && owns(u, v)
                            && eligible(v)
                            && !g.has_edge(u, v)
                        {
                            out.push((score, u.min(v), u.max(v)));
                            if out.len() >= 2 * k.max(32) {
                                keep_top(&mut out, k, by_score_desc);
                                floor = floor.max(out[k - 1].0);
                            }
                        }
                    }
                    touched.clear();
                    keep_top(&mut out, k, by_score_desc);
                    out
                },
            )
            .collect();
        missing.extend(found.into_iter().flatten());
        keep_top(&mut missing, k, by_score_desc);
    }

    if missing.len() < k {
        // pad with zero-score non-edges in pair order
        let scored: HashSet<(u32, u32)> = missing.iter().map(|&(_, a, b)| (a, b)).collect();
        'outer: for a in 0..n as u32 {
            if !eligible(a) {
                continue;
            }
            for b in a + 1..n as u32 {
                if missing.len() == k {
                    break 'outer;
                }
                if (in_rows[a as usize] || in_rows[b as usize])
                    && eligible(b)
                    && !g.has_edge(a, b)
                    && !scored.contains(&(a, b))
                {
                    missing.push((0.0, a, b));
                }
            }
        }
        if missing.len() < k {
            lists.warnings.push(format!(
                "k={k} exceeds the {} available non-edges; clamped",
                missing.len()
            ));
        }
    }

    let mut redundant: Vec<(f64, u32, u32)> = rows
        .par_iter()
        .filter(|&&u| eligible(u))
        .flat_map_iter(|&u| {
            g.neighbors(u)
                .iter()
                .filter(move |&&v| owns(u, v) && eligible(v))
                .map(move |&v| (r.dot(u, v), u.min(v), u.max(v)))
        })
        .collect();
    if redundant.len() < k {
        lists.warnings.push(format!(
            "k={k} exceeds the {} available edges; clamped",
            redundant.len()
        ));
    }
    keep_top(&mut redundant, k, by_score_asc);

    let wrap = |kind| move |(score, u, v): (f64, u32, u32)| ScoredCandidate { u, v, score, kind };
    lists.missing = missing
        .into_iter()
        .map(wrap(CandidateKind::Missing))
        .collect();
    lists.redundant = redundant
        .into_iter()
        .map(wrap(CandidateKind::Redundant))
        .collect();
    for w in &lists.warnings {
        log::warn!("{w}");
    }
    Ok(lists)
}

/// One ontology version: its collapsed graph and node names.
#[derive(Clone, Copy)]
pub struct Version<'a> {
    pub graph: &'a SimpleGraph,
    pub nodes: &'a NodeMap,
    pub label: &'a str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TemporalResult {
    pub kind: CandidateKind,
    pub k: usize,
    pub hits: usize,
    pub total: usize,
    pub accuracy: f64,
    pub year_pair: (String, String),
}

/// Candidates on version t scored against version t+1: a missing
/// candidate is a hit when t+1 has the edge, a redundant candidate when
/// t+1 lacks it. Only nodes present in both versions (by name) take part.
pub fn temporal_eval_with_embedding(
    r: &SparseEmbedding,
    t: Version<'_>,
    t1: Version<'_>,
    ks: &[usize],
) -> Result<Vec<TemporalResult>> {
    let mapping: Vec<Option<u32>> = t
        .nodes
        .names()
        .iter()
        .map(|name| t1.nodes.id(name))
        .collect();
    if mapping.iter().all(Option::is_none) {
        return Err(Error::NoOverlap);
    }
    let options = CandidateOptions {
        eligible: Some(mapping.iter().map(Option::is_some).collect()),
        ..Default::default()
    };
    let k_max = ks.iter().copied().max().unwrap_or(0);
    let lists = candidates_with(r, t.graph, k_max, None, &options)?;
    let in_next = |c: &ScoredCandidate| match (mapping[c.u as usize], mapping[c.v as usize]) {
        (Some(a), Some(b)) => t1.graph.has_edge(a, b),
        _ => false,
    };
    let mut results = Vec::with_capacity(ks.len() * 2);
    for &k in ks {
        for (kind, list) in [
            (CandidateKind::Missing, &lists.missing),
            (CandidateKind::Redundant, &lists.redundant),
        ] {
            let prefix = &list[..k.min(list.len())];
            let hits = prefix
                .iter()
                .filter(|c| match kind {
                    CandidateKind::Missing => in_next(c),
                    CandidateKind::Redundant => !in_next(c),
                })
                .count();
            let total = prefix.len();
            results.push(TemporalResult {
                kind,
                k,
                hits,
                total,
                accuracy: if total == 0 {
                    0.0
                } else {
                    hits as f64 / total as f64
                },
                year_pair: (t.label.to_string(), t1.label.to_string()),
            });
        }
    }
    Ok(results)
}

/// Fits SNoRe on version t and runs [`temporal_eval_with_embedding`].
pub fn temporal_eval(
    t: Version<'_>,
    t1: Version<'_>,
    ks: &[usize],
    params: &SnoreParams,
    seed: u64,
) -> Result<Vec<TemporalResult>> {
    if t.nodes
        .names()
        .iter()
        .all(|name| t1.nodes.id(name).is_none())
    {
        return Err(Error::NoOverlap);
    }
    let r = snore_fit(t.graph, params, seed, t.nodes.names().to_vec())?;
    temporal_eval_with_embedding(&r, t, t1, ks)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeedbackAction {
    Accept,
    Reject,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JournalEntry {
    /// Milliseconds since the Unix epoch.
    pub timestamp_ms: u64,
    pub action: FeedbackAction,
    pub u: u32,
    pub v: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FeedbackError {
    pub action: FeedbackAction,
    pub u: u32,
    pub v: u32,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct FeedbackOutcome {
    pub graph: SimpleGraph,
    pub journal: Vec<JournalEntry>,
    pub errors: Vec<FeedbackError>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

/// Inserts accepted edges and removes rejected ones. Requests that do not
/// match the current graph (accepting an existing edge, rejecting a
/// missing one, unknown nodes, self-loops, repeats) are reported and
/// skipped; the valid ones are applied together.
pub fn apply_feedback(
    g: &SimpleGraph,
    accepted: &[(u32, u32)],
    rejected: &[(u32, u32)],
) -> FeedbackOutcome {
    let n = g.node_count() as u32;
    let mut errors = Vec::new();
    let mut journal = Vec::new();
    let mut add = HashSet::new();
    let mut remove = HashSet::new();
    let timestamp_ms = now_ms();
    let requests = accepted
        .iter()
        .map(|&e| (FeedbackAction::Accept, e))
        .chain(rejected.iter().map(|&e| (FeedbackAction::Reject, e)));
    for (action, (a, b)) in requests {
        let (u, v) = (a.min(b), a.max(b));
        let fail = |reason: &str| FeedbackError {
            action,
            u,
            v,
            reason: reason.to_string(),
        };
        if v >= n {
            errors.push(fail("unknown node"));
            continue;
        }
        if u == v {
            errors.push(fail("self-loop"));
            continue;
        }
        let exists = g.has_edge(u, v);
        let ok = match action {
            FeedbackAction::Accept if exists => Err("edge already exists"),
            FeedbackAction::Reject if !exists => Err("edge does not exist"),
            FeedbackAction::Accept => Ok(add.insert((u, v))),
            FeedbackAction::Reject => Ok(remove.insert((u, v))),
        };
        match ok {
            Err(reason) => errors.push(fail(reason)),
            Ok(false) => errors.push(fail("repeated in batch")),
            Ok(true) => journal.push(JournalEntry {
                timestamp_ms,
                action,
                u,
                v,
            }),
        }
    }
    let graph = SimpleGraph::from_edges(
        g.node_count(),
        g.edges()
            .filter(|e| !remove.contains(e))
            .chain(add.iter().copied()),
    );
    FeedbackOutcome {
        graph,
        journal,
        errors,
    }
}

/// Re-applies journal entries in order. Entries that do not apply are
/// returned as errors, as in [`apply_feedback`].
pub fn replay(g: &SimpleGraph, journal: &[JournalEntry]) -> (SimpleGraph, Vec<FeedbackError>) {
    let mut graph = g.clone();
    let mut errors = Vec::new();
    for entry in journal {
        let edge = [(entry.u, entry.v)];
        let outcome = match entry.action {
            FeedbackAction::Accept => apply_feedback(&graph, &edge, &[]),
            FeedbackAction::Reject => apply_feedback(&graph, &[], &edge),
        };
        graph = outcome.graph;
        errors.extend(outcome.errors);
    }
    (graph, errors)
}
