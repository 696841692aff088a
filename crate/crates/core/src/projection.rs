//! Triple store → heterogeneous multigraph.
//!
//! [`Mode::Raw`] keeps every triple as an edge, blank nodes included (the
//! standard OWL-to-RDF mapping form). [`Mode::Rules`] applies projection
//! rules that replace blank-node class expressions with direct edges between
//! named entities:
//!
//! * `A subClassOf B` and `A equivalentClass B` between named classes are
//!   kept as edges.
//! * `A subClassOf|equivalentClass x` where `x` is a blank restriction
//!   `onProperty R; someValuesFrom|allValuesFrom F` becomes `A R c` for every
//!   named class `c` reachable from `F` through union/intersection lists and
//!   nested restrictions. A blank union/intersection `x` yields one edge per
//!   member, labeled with the axiom predicate (or the member's restriction
//!   property).
//! * `a rdf:type C` with a non-vocabulary class `C`, and assertions `a R b`
//!   with a non-vocabulary property `R`, are kept verbatim.
//!
//! Complement fillers and domain/range axioms emit nothing.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{HeteroGraph, LabeledEdge};
use crate::triples::{Term, Triple, TripleStore};
use crate::vocab;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Raw,
    Rules,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Mode::Raw),
            "rules" => Ok(Mode::Rules),
            other => Err(Error::InvalidArgument(format!(
                "unknown conversion mode '{other}' (expected raw or rules)"
            ))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Raw => "raw",
            Mode::Rules => "rules",
        })
    }
}

/// Where each input triple went. `passthrough + consumed + dropped_blank +
/// dropped_other == input_triples`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ProjectionReport {
    pub mode: Option<Mode>,
    pub input_triples: usize,
    /// Triples emitted unchanged as edges.
    pub passthrough: usize,
    /// Triples absorbed into projected restriction/set-expression edges.
    pub consumed: usize,
    /// Blank-node triples no rule consumed.
    pub dropped_blank: usize,
    /// Named-only triples with vocabulary predicates or objects (declarations,
    /// domain/range, property hierarchy, ...).
    pub dropped_other: usize,
    /// Restrictions without an onProperty or a some/all filler.
    pub restriction_warnings: usize,
    /// Class expressions that resolved to no named class.
    pub empty_expressions: usize,
    pub edges: usize,
    pub nodes: usize,
}

#[derive(Debug, Clone)]
pub struct Projection {
    pub graph: HeteroGraph,
    pub report: ProjectionReport,
}

pub fn project(store: &TripleStore, mode: Mode) -> Result<Projection> {
    let mut projection = match mode {
        Mode::Raw => project_raw(store),
        Mode::Rules => Rules::new(store).run()?,
    };
    projection.report.mode = Some(mode);
    projection.report.input_triples = store.len();
    projection.report.edges = projection.graph.edges.len();
    projection.report.nodes = projection.graph.node_count();
    Ok(projection)
}

fn node_name(term: &Term) -> String {
    if term.is_blank() {
        format!("_:{}", term.value)
    } else {
        term.value.clone()
    }
}

fn project_raw(store: &TripleStore) -> Projection {
    let mut graph = HeteroGraph::new();
    for t in store.triples() {
        let s = graph.add_node(node_name(store.term(t.s)));
        let p = graph.predicates.intern(store.term(t.p).value.as_str());
        let o = graph.add_node(node_name(store.term(t.o)));
        graph.edges.push(LabeledEdge { s, p, o });
    }
    let report = ProjectionReport {
        passthrough: store.len(),
        ..Default::default()
    };
    Projection { graph, report }
}

/// Vocabulary term ids of the store, absent when the store never mentions
/// the term.
struct Ids {
    rdf_type: Option<u32>,
    first: Option<u32>,
    rest: Option<u32>,
    nil: Option<u32>,
    subclass: Option<u32>,
    equivalent: Option<u32>,
    restriction: Option<u32>,
    on_property: Option<u32>,
    some: Option<u32>,
    all: Option<u32>,
    union: Option<u32>,
    intersection: Option<u32>,
}

impl Ids {
    fn new(store: &TripleStore) -> Self {
        Ids {
            rdf_type: store.iri_id(vocab::RDF_TYPE),
            first: store.iri_id(vocab::RDF_FIRST),
            rest: store.iri_id(vocab::RDF_REST),
            nil: store.iri_id(vocab::RDF_NIL),
            subclass: store.iri_id(vocab::RDFS_SUBCLASS_OF),
            equivalent: store.iri_id(vocab::OWL_EQUIVALENT_CLASS),
            restriction: store.iri_id(vocab::OWL_RESTRICTION),
            on_property: store.iri_id(vocab::OWL_ON_PROPERTY),
            some: store.iri_id(vocab::OWL_SOME_VALUES_FROM),
            all: store.iri_id(vocab::OWL_ALL_VALUES_FROM),
            union: store.iri_id(vocab::OWL_UNION_OF),
            intersection: store.iri_id(vocab::OWL_INTERSECTION_OF),
        }
    }
}

fn is(id: u32, want: Option<u32>) -> bool {
    want == Some(id)
}

struct Rules<'a> {
    store: &'a TripleStore,
    ids: Ids,
    /// Outgoing triple indices per blank subject.
    blank_out: HashMap<u32, Vec<usize>>,
    properties: HashSet<u32>,
    consumed: HashSet<usize>,
    report: ProjectionReport,
}

/// Labeled target produced by expanding a class expression.
type Target = (u32, u32);

impl<'a> Rules<'a> {
    fn new(store: &'a TripleStore) -> Self {
        let ids = Ids::new(store);
        let mut blank_out: HashMap<u32, Vec<usize>> = HashMap::new();
        let mut properties = HashSet::new();
        for (i, t) in store.triples().iter().enumerate() {
            properties.insert(t.p);
            if store.term(t.s).is_blank() {
                blank_out.entry(t.s).or_default().push(i);
            }
            if is(t.p, ids.on_property) && store.term(t.o).is_iri() {
                properties.insert(t.o);
            }
            if is(t.p, ids.rdf_type) && vocab::is_property_class(&store.term(t.o).value) {
                properties.insert(t.s);
            }
        }
        Rules {
            store,
            ids,
            blank_out,
            properties,
            consumed: HashSet::new(),
            report: ProjectionReport::default(),
        }
    }

    fn is_entity(&self, id: u32) -> bool {
        let term = self.store.term(id);
        term.is_iri() && !vocab::is_w3c_vocabulary(&term.value) && !self.properties.contains(&id)
    }

    fn run(mut self) -> Result<Projection> {
        let store = self.store;
        let mut graph = HeteroGraph::new();
        for t in store.triples() {
            for id in [t.s, t.o] {
                if self.is_entity(id) {
                    graph.add_node(store.term(id).value.as_str());
                }
            }
        }

        let mut emitted: HashSet<(u32, u32, u32)> = HashSet::new();
        let mut emit = |graph: &mut HeteroGraph, s: u32, p: u32, o: u32| {
            if emitted.insert((s, p, o)) {
                graph.add_edge(
                    &store.term(s).value,
                    &store.term(p).value,
                    &store.term(o).value,
                );
            }
        };

        let mut handled = vec![false; store.len()];
        for (i, t) in store.triples().iter().enumerate() {
            let &Triple { s, p, o } = t;
            let s_term = store.term(s);
            let o_term = store.term(o);
            if s_term.is_blank() {
                continue;
            }
            let axiom = is(p, self.ids.subclass) || is(p, self.ids.equivalent);
            if o_term.is_blank() {
                if axiom && self.is_entity(s) {
                    let mut stack = Vec::new();
                    let targets = self.expand(o, p, &mut stack)?;
                    self.consumed.insert(i);
                    if targets.is_empty() {
                        self.report.empty_expressions += 1;
                    }
                    for (label, class) in targets {
                        emit(&mut graph, s, label, class);
                    }
                    handled[i] = true;
                }
                continue;
            }
            if !self.is_entity(s) || !self.is_entity(o) {
                continue;
            }
            let keep = axiom
                || is(p, self.ids.rdf_type)
                || !vocab::is_w3c_vocabulary(&store.term(p).value);
            if keep {
                emit(&mut graph, s, p, o);
                self.report.passthrough += 1;
                handled[i] = true;
            }
        }

        for (i, t) in store.triples().iter().enumerate() {
            if handled[i] || self.consumed.contains(&i) {
                continue;
            }
            if store.term(t.s).is_blank() || store.term(t.o).is_blank() {
                self.report.dropped_blank += 1;
            } else {
                self.report.dropped_other += 1;
            }
        }
        self.report.consumed = self.consumed.len();
        Ok(Projection {
            graph,
            report: self.report,
        })
    }

    fn outgoing(&self, node: u32) -> Vec<usize> {
        self.blank_out.get(&node).cloned().unwrap_or_default()
    }

    fn object_of(&self, node: u32, predicate: Option<u32>) -> Option<u32> {
        let p = predicate?;
        self.blank_out
            .get(&node)?
            .iter()
            .map(|&i| self.store.triples()[i])
            .find(|t| t.p == p)
            .map(|t| t.o)
    }

    fn enter(&self, node: u32, stack: &mut Vec<u32>) -> Result<()> {
        if stack.contains(&node) {
            return Err(Error::CyclicBlankNode {
                node: node_name(self.store.term(node)),
            });
        }
        stack.push(node);
        Ok(())
    }

    /// Expands the class expression `node` found behind an axiom labeled
    /// `label` into labeled named targets.
    fn expand(&mut self, node: u32, label: u32, stack: &mut Vec<u32>) -> Result<Vec<Target>> {
        let term = self.store.term(node);
        if term.is_iri() {
            return Ok(if self.is_entity(node) {
                vec![(label, node)]
            } else {
                Vec::new()
            });
        }
        self.enter(node, stack)?;
        for i in self.outgoing(node) {
            self.consumed.insert(i);
        }
        let mut out = Vec::new();
        if self.is_restriction(node) {
            let property = self.object_of(node, self.ids.on_property);
            let filler = self
                .object_of(node, self.ids.some)
                .or_else(|| self.object_of(node, self.ids.all));
            match (property, filler) {
                (Some(property), Some(filler)) if self.store.term(property).is_iri() => {
                    for class in self.named_classes(filler, stack)? {
                        out.push((property, class));
                    }
                }
                _ => self.report.restriction_warnings += 1,
            }
        } else if let Some(list) = self
            .object_of(node, self.ids.union)
            .or_else(|| self.object_of(node, self.ids.intersection))
        {
            for member in self.list_members(list, stack)? {
                out.extend(self.expand(member, label, stack)?);
            }
        }
        // complementOf and anything unrecognised contribute nothing.
        stack.pop();
        Ok(out)
    }

    fn is_restriction(&self, node: u32) -> bool {
        self.blank_out.get(&node).is_some_and(|out| {
            out.iter().any(|&i| {
                let t = self.store.triples()[i];
                (is(t.p, self.ids.rdf_type) && is(t.o, self.ids.restriction))
                    || is(t.p, self.ids.on_property)
            })
        })
    }

    /// Named classes reachable from a restriction filler.
    fn named_classes(&mut self, filler: u32, stack: &mut Vec<u32>) -> Result<Vec<u32>> {
        let term = self.store.term(filler);
        if term.is_iri() {
            return Ok(if self.is_entity(filler) {
                vec![filler]
            } else {
                Vec::new()
            });
        }
        self.enter(filler, stack)?;
        for i in self.outgoing(filler) {
            self.consumed.insert(i);
        }
        let mut out = Vec::new();
        if self.is_restriction(filler) {
            let nested = self
                .object_of(filler, self.ids.some)
                .or_else(|| self.object_of(filler, self.ids.all));
            match nested {
                Some(f) if self.object_of(filler, self.ids.on_property).is_some() => {
                    out.extend(self.named_classes(f, stack)?);
                }
                _ => self.report.restriction_warnings += 1,
            }
        } else if let Some(list) = self
            .object_of(filler, self.ids.union)
            .or_else(|| self.object_of(filler, self.ids.intersection))
        {
            for member in self.list_members(list, stack)? {
                out.extend(self.named_classes(member, stack)?);
            }
        }
        stack.pop();
        Ok(out)
    }

    /// Members of an RDF collection, consuming its first/rest triples.
    fn list_members(&mut self, head: u32, stack: &[u32]) -> Result<Vec<u32>> {
        let mut members = Vec::new();
        let mut cell = head;
        let mut visited = HashSet::new();
        while !is(cell, self.ids.nil) && self.store.term(cell).is_blank() {
            if !visited.insert(cell) || stack.contains(&cell) {
                return Err(Error::CyclicBlankNode {
                    node: node_name(self.store.term(cell)),
                });
            }
            for i in self.outgoing(cell) {
                let t = self.store.triples()[i];
                if is(t.p, self.ids.first) || is(t.p, self.ids.rest) {
                    self.consumed.insert(i);
                }
            }
            if let Some(first) = self.object_of(cell, self.ids.first) {
                members.push(first);
            }
            match self.object_of(cell, self.ids.rest) {
                Some(next) => cell = next,
                None => break,
            }
        }
        Ok(members)
    }
}
