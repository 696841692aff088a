//! Line-oriented N-Triples parsing into an interned triple store.
//!
//! Statements whose object is a literal are dropped while parsing (and
//! tallied); everything else is kept verbatim so that projection can decide
//! what to do with it. Blank-node labels are renamed to document-scoped
//! fresh labels `<prefix><n>` in order of first appearance.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::vocab;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum TermKind {
    Iri,
    Blank,
}

/// An IRI or a blank node. Blank values are stored without the `_:` prefix.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Term {
    pub kind: TermKind,
    pub value: String,
}

impl Term {
    pub fn iri(value: impl Into<String>) -> Self {
        Term {
            kind: TermKind::Iri,
            value: value.into(),
        }
    }

    pub fn blank(label: impl Into<String>) -> Self {
        Term {
            kind: TermKind::Blank,
            value: label.into(),
        }
    }

    pub fn is_blank(&self) -> bool {
        self.kind == TermKind::Blank
    }

    pub fn is_iri(&self) -> bool {
        self.kind == TermKind::Iri
    }
}

/// Renders the term the way N-Triples writes it: `<iri>` or `_:label`.
impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            TermKind::Iri => write!(f, "<{}>", self.value),
            TermKind::Blank => write!(f, "_:{}", self.value),
        }
    }
}

/// Interned triple. `p` always refers to an IRI term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub s: u32,
    pub p: u32,
    pub o: u32,
}

#[derive(Debug, Clone)]
pub struct ParseOptions {
    /// Prefix of the fresh blank-node labels assigned to this document.
    pub blank_prefix: String,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            blank_prefix: "b".to_string(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct TripleStore {
    terms: Vec<Term>,
    index: HashMap<Term, u32>,
    triples: Vec<Triple>,
    seen: HashSet<Triple>,
    predicate_counts: BTreeMap<u32, usize>,
    dropped_literals: usize,
}

/// Two stores are equal when they hold the same terms under the same ids
/// and the same triples in the same order.
impl PartialEq for TripleStore {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms && self.triples == other.triples
    }
}

impl TripleStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, term: Term) -> u32 {
        if let Some(&id) = self.index.get(&term) {
            return id;
        }
        let id = self.terms.len() as u32;
        self.index.insert(term.clone(), id);
        self.terms.push(term);
        id
    }

    pub fn id_of(&self, term: &Term) -> Option<u32> {
        self.index.get(term).copied()
    }

    pub fn iri_id(&self, iri: &str) -> Option<u32> {
        self.id_of(&Term::iri(iri))
    }

    pub fn term(&self, id: u32) -> &Term {
        &self.terms[id as usize]
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn dropped_literals(&self) -> usize {
        self.dropped_literals
    }

    pub fn predicate_counts(&self) -> &BTreeMap<u32, usize> {
        &self.predicate_counts
    }

    /// Inserts a triple; returns false when it was already present.
    pub fn insert(&mut self, s: Term, p: &str, o: Term) -> bool {
        let s = self.intern(s);
        let p = self.intern(Term::iri(p));
        let o = self.intern(o);
        self.insert_ids(Triple { s, p, o })
    }

    fn insert_ids(&mut self, t: Triple) -> bool {
        if !self.seen.insert(t) {
            return false;
        }
        self.triples.push(t);
        *self.predicate_counts.entry(t.p).or_insert(0) += 1;
        true
    }

    /// Writes the store back out as N-Triples, one statement per line, in
    /// insertion order.
    pub fn write_ntriples<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for t in &self.triples {
            writeln!(
                out,
                "{} {} {} .",
                self.term(t.s),
                self.term(t.p),
                self.term(t.o)
            )?;
        }
        Ok(())
    }

    pub fn to_ntriples(&self) -> String {
        let mut buf = Vec::new();
        self.write_ntriples(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("terms are valid UTF-8")
    }

    pub fn stats(&self) -> StatsReport {
        let mut predicates = HashSet::new();
        let mut nodes = HashSet::new();
        for t in &self.triples {
            predicates.insert(t.p);
            nodes.insert(t.s);
            nodes.insert(t.o);
        }
        let blank_nodes = nodes.iter().filter(|&&id| self.term(id).is_blank()).count();
        let subclass = self.iri_id(vocab::RDFS_SUBCLASS_OF);
        let rdf_type = self.iri_id(vocab::RDF_TYPE);
        let restriction = self.iri_id(vocab::OWL_RESTRICTION);
        let subsumption_axioms =
            subclass.map_or(0, |p| self.predicate_counts.get(&p).copied().unwrap_or(0));
        let restriction_nodes = match (rdf_type, restriction) {
            (Some(ty), Some(r)) => self
                .triples
                .iter()
                .filter(|t| t.p == ty && t.o == r)
                .map(|t| t.s)
                .collect::<HashSet<_>>()
                .len(),
            _ => 0,
        };
        StatsReport {
            triples: self.triples.len(),
            distinct_terms: self.terms.len(),
            nodes: nodes.len(),
            predicates: predicates.len(),
            blank_nodes,
            subsumption_axioms,
            restriction_nodes,
            dropped_literals: self.dropped_literals,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StatsReport {
    pub triples: usize,
    pub distinct_terms: usize,
    /// Terms that occur in subject or object position.
    pub nodes: usize,
    pub predicates: usize,
    pub blank_nodes: usize,
    pub subsumption_axioms: usize,
    pub restriction_nodes: usize,
    pub dropped_literals: usize,
}

pub fn parse_document<R: BufRead>(input: R) -> Result<TripleStore> {
    parse_document_with(input, &ParseOptions::default())
}

pub fn parse_str(input: &str) -> Result<TripleStore> {
    parse_document(input.as_bytes())
}

pub fn parse_document_with<R: BufRead>(
    mut input: R,
    options: &ParseOptions,
) -> Result<TripleStore> {
    let mut store = TripleStore::new();
    let mut blank_labels: HashMap<String, String> = HashMap::new();
    let mut buf = Vec::new();
    let mut line_no = 0usize;
    let mut offset = 0usize;
    loop {
        buf.clear();
        let read = input.read_until(b'\n', &mut buf)?;
        if read == 0 {
            break;
        }
        line_no += 1;
        let line = std::str::from_utf8(&buf).map_err(|e| Error::Parse {
            line: line_no,
            offset: offset + e.valid_up_to(),
            message: "invalid UTF-8".to_string(),
        })?;
        let line = line.trim_end_matches('\n').trim_end_matches('\r');
        let statement = parse_line(line).map_err(|(col, message)| Error::Parse {
            line: line_no,
            offset: offset + col,
            message,
        })?;
        offset += read;

        let Some(statement) = statement else { continue };
        let RawObject::Node(object) = statement.object else {
            store.dropped_literals += 1;
            continue;
        };
        let mut rename = |term: RawTerm| -> Term {
            match term {
                RawTerm::Iri(iri) => Term::iri(iri),
                RawTerm::Blank(label) => {
                    let next = blank_labels.len();
                    let fresh = blank_labels
                        .entry(label)
                        .or_insert_with(|| format!("{}{}", options.blank_prefix, next));
                    Term::blank(fresh.clone())
                }
            }
        };
        let s = rename(statement.subject);
        let o = rename(object);
        store.insert(s, &statement.predicate, o);
    }
    Ok(store)
}

enum RawTerm {
    Iri(String),
    Blank(String),
}

enum RawObject {
    Node(RawTerm),
    Literal,
}

struct Statement {
    subject: RawTerm,
    predicate: String,
    object: RawObject,
}

type LineError = (usize, String);

struct Cursor<'a> {
    line: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.line[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(' ' | '\t')) {
            self.pos += 1;
        }
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, LineError> {
        Err((self.pos, message.into()))
    }

    fn expect(&mut self, want: char) -> Result<(), LineError> {
        match self.peek() {
            Some(c) if c == want => {
                self.pos += c.len_utf8();
                Ok(())
            }
            Some(c) => self.err(format!("expected '{want}', found '{c}'")),
            None => self.err(format!("expected '{want}', found end of line")),
        }
    }

    fn hex_escape(&mut self, digits: usize) -> Result<char, LineError> {
        let start = self.pos;
        let end = start + digits;
        let hex = self
            .line
            .get(start..end)
            .ok_or((start, "truncated unicode escape".to_string()))?;
        let code = u32::from_str_radix(hex, 16)
            .map_err(|_| (start, format!("bad unicode escape '{hex}'")))?;
        let c = char::from_u32(code)
            .ok_or((start, format!("escape U+{code:X} is not a scalar value")))?;
        self.pos = end;
        Ok(c)
    }

    fn iri(&mut self) -> Result<String, LineError> {
        self.expect('<')?;
        let mut value = String::new();
        loop {
            let at = self.pos;
            let Some(c) = self.bump() else {
                return Err((at, "unterminated IRI".to_string()));
            };
            let c = match c {
                '>' => break,
                '\\' => match self.bump() {
                    Some('u') => self.hex_escape(4)?,
                    Some('U') => self.hex_escape(8)?,
                    _ => {
                        return Err((
                            at,
                            "only \\u and \\U escapes are allowed in IRIs".to_string(),
                        ))
                    }
                },
                c => c,
            };
            if c.is_whitespace()
                || c.is_control()
                || matches!(c, '<' | '"' | '{' | '}' | '|' | '^' | '`' | '\\')
            {
                return Err((at, format!("character {c:?} not allowed in IRI")));
            }
            value.push(c);
        }
        if value.is_empty() {
            return self.err("empty IRI");
        }
        Ok(value)
    }

    fn blank(&mut self) -> Result<String, LineError> {
        self.expect('_')?;
        self.expect(':')?;
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_alphanumeric()
                || matches!(c, '_' | '-' | '.')
                || !c.is_ascii() && !c.is_whitespace()
            {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        // A trailing '.' belongs to the statement terminator.
        while self.pos > start && self.line[..self.pos].ends_with('.') {
            self.pos -= 1;
        }
        if self.pos == start {
            return self.err("empty blank node label");
        }
        Ok(self.line[start..self.pos].to_string())
    }

    fn subject(&mut self) -> Result<RawTerm, LineError> {
        match self.peek() {
            Some('<') => Ok(RawTerm::Iri(self.iri()?)),
            Some('_') => Ok(RawTerm::Blank(self.blank()?)),
            Some('"') => self.err("literal not allowed in subject position"),
            _ => self.err("expected IRI or blank node"),
        }
    }

    fn literal(&mut self) -> Result<(), LineError> {
        let open = self.pos;
        self.expect('"')?;
        loop {
            match self.bump() {
                None => return Err((open, "unterminated quoted literal".to_string())),
                Some('"') => break,
                Some('\\') => match self.bump() {
                    Some('t' | 'b' | 'n' | 'r' | 'f' | '"' | '\'' | '\\') => {}
                    Some('u') => {
                        self.hex_escape(4)?;
                    }
                    Some('U') => {
                        self.hex_escape(8)?;
                    }
                    None => return Err((open, "unterminated quoted literal".to_string())),
                    Some(c) => return self.err(format!("invalid escape '\\{c}'")),
                },
                Some(_) => {}
            }
        }
        match self.peek() {
            Some('^') => {
                self.expect('^')?;
                self.expect('^')?;
                self.iri()?;
            }
            Some('@') => {
                self.pos += 1;
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '-') {
                    self.pos += 1;
                }
                if self.pos == start {
                    return self.err("empty language tag");
                }
            }
            _ => {}
        }
        Ok(())
    }
}

fn parse_line(line: &str) -> Result<Option<Statement>, LineError> {
    let mut cur = Cursor { line, pos: 0 };
    cur.skip_ws();
    if matches!(cur.peek(), None | Some('#')) {
        return Ok(None);
    }
    let subject = cur.subject()?;
    cur.skip_ws();
    if cur.peek() != Some('<') {
        return cur.err("predicate must be an IRI");
    }
    let predicate = cur.iri()?;
    cur.skip_ws();
    let object = match cur.peek() {
        Some('"') => {
            cur.literal()?;
            RawObject::Literal
        }
        _ => RawObject::Node(cur.subject()?),
    };
    cur.skip_ws();
    cur.expect('.')?;
    cur.skip_ws();
    if !matches!(cur.peek(), None | Some('#')) {
        return cur.err("unexpected content after statement terminator");
    }
    Ok(Some(Statement {
        subject,
        predicate,
        object,
    }))
}
