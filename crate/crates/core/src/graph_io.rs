//! Graph files.
//!
//! * hetero TSV: `src<TAB>pred<TAB>dst` rows of node names
//! * simple TSV: `u<TAB>v` rows of node ids
//!
//! Both are written with a sidecar `<stem>.nodes.tsv` holding `id<TAB>name`
//! rows, which fixes node ids (and keeps isolated nodes) across commands.
//! `.nt` paths are parsed and projected on load.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::graph::{HeteroGraph, NodeMap, SimpleGraph};
use crate::projection::{project, Mode};
use crate::triples::parse_document;

/// Node table next to a graph file: `g.tsv` → `g.nodes.tsv`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.nodes.tsv"))
}

pub fn write_nodes<W: Write>(nodes: &NodeMap, mut out: W) -> Result<()> {
    for (i, name) in nodes.names().iter().enumerate() {
        writeln!(out, "{i}\t{name}")?;
    }
    Ok(())
}

pub fn write_hetero<W: Write>(h: &HeteroGraph, mut out: W) -> Result<()> {
    for e in &h.edges {
        writeln!(
            out,
            "{}\t{}\t{}",
            h.nodes.name(e.s),
            h.predicates.name(e.p),
            h.nodes.name(e.o)
        )?;
    }
    Ok(())
}

pub fn write_simple<W: Write>(g: &SimpleGraph, mut out: W) -> Result<()> {
    for (u, v) in g.edges() {
        writeln!(out, "{u}\t{v}")?;
    }
    Ok(())
}

/// Writes `h` (or its collapse when `simple`) plus the node sidecar.
pub fn save_graph(path: &Path, h: &HeteroGraph, simple: bool) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    if simple {
        write_simple(&h.collapse(), &mut out)?;
    } else {
        write_hetero(h, &mut out)?;
    }
    out.flush()?;
    let mut side = BufWriter::new(File::create(sidecar_path(path))?);
    write_nodes(&h.nodes, &mut side)?;
    side.flush()?;
    Ok(())
}

pub fn read_nodes<R: BufRead>(input: R) -> Result<NodeMap> {
    let mut nodes = NodeMap::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let (id, name) = line.split_once('\t').ok_or_else(|| {
            Error::Format(format!("node table line {}: expected id<TAB>name", i + 1))
        })?;
        let id: u32 = id
            .parse()
            .map_err(|_| Error::Format(format!("node table line {}: bad id '{id}'", i + 1)))?;
        if nodes.intern(name) != id {
            return Err(Error::Format(format!(
                "node table line {}: ids must be dense, unique and in order",
                i + 1
            )));
        }
    }
    Ok(nodes)
}

/// A graph loaded from disk; `hetero` and `simple` share node ids.
#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub hetero: HeteroGraph,
    pub simple: SimpleGraph,
}

impl LoadedGraph {
    pub fn nodes(&self) -> &NodeMap {
        &self.hetero.nodes
    }

    pub fn from_hetero(hetero: HeteroGraph) -> Self {
        let simple = hetero.collapse();
        LoadedGraph { hetero, simple }
    }
}

/// Reads TSV rows. `nodes` seeds the id table; simple rows need it unless
/// the ids are to be used as names.
pub fn read_tsv<R: BufRead>(input: R, nodes: Option<NodeMap>) -> Result<LoadedGraph> {
    let known = nodes.as_ref().map_or(0, NodeMap::len);
    let mut h = HeteroGraph {
        nodes: nodes.clone().unwrap_or_default(),
        ..Default::default()
    };
    let mut pairs = Vec::new();
    let mut simple_rows = false;
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        match cols.len() {
            3 => h.add_edge(cols[0], cols[1], cols[2]),
            2 => {
                simple_rows = true;
                let parse = |s: &str| -> Result<u32> {
                    s.parse().map_err(|_| {
                        Error::Format(format!("graph line {}: bad node id '{s}'", i + 1))
                    })
                };
                let (u, v) = (parse(cols[0])?, parse(cols[1])?);
                if nodes.is_some() && (u as usize >= known || v as usize >= known) {
                    return Err(Error::Format(format!(
                        "graph line {}: node id outside the node table",
                        i + 1
                    )));
                }
                pairs.push((u, v));
            }
            n => {
                return Err(Error::Format(format!(
                    "graph line {}: expected 2 or 3 columns, found {n}",
                    i + 1
                )));
            }
        }
    }
    if simple_rows {
        if !h.edges.is_empty() {
            return Err(Error::Format("graph mixes 2- and 3-column rows".into()));
        }
        if nodes.is_none() {
            let n = pairs
                .iter()
                .map(|&(u, v)| u.max(v) as usize + 1)
                .max()
                .unwrap_or(0);
            h.nodes = NodeMap::from_names((0..n).map(|i| i.to_string()));
        }
        let simple = SimpleGraph::from_edges(h.nodes.len(), pairs);
        let hetero = HeteroGraph::from_simple(&simple, h.nodes, "linked");
        return Ok(LoadedGraph { hetero, simple });
    }
    Ok(LoadedGraph::from_hetero(h))
}

/// Loads a graph file. `.nt` files are parsed and projected with `mode`;
/// anything else is read as TSV with its node sidecar when present.
pub fn load_graph(path: &Path, mode: Mode) -> Result<LoadedGraph> {
    let file = BufReader::new(File::open(path)?);
    if path.extension().is_some_and(|e| e == "nt") {
        let store = parse_document(file)?;
        return Ok(LoadedGraph::from_hetero(project(&store, mode)?.graph));
    }
    let side = sidecar_path(path);
    let nodes = if side.exists() {
        Some(read_nodes(BufReader::new(File::open(side)?))?)
    } else {
        None
    };
    read_tsv(file, nodes)
}
