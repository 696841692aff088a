//! Server-side state: the loaded snapshot, the working graph derived from
//! it by the feedback journal, and the current embedding.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, RwLock};

use ontolink_core::embed::snore::{snore_fit, SnoreParams, SparseEmbedding};
use ontolink_core::explain::{explain_global, GlobalExplanation, GlobalParams};
use ontolink_core::graph_io::LoadedGraph;
use ontolink_core::recommend::{
    apply_feedback, replay, FeedbackAction, FeedbackError, JournalEntry,
};
use ontolink_core::{Error, NodeMap, Result, SimpleGraph};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default)]
pub struct ServerConfig {
    /// Append-only feedback journal; replayed at startup when it exists.
    pub journal: Option<PathBuf>,
    /// Directory served for paths no API route matches.
    pub static_dir: Option<PathBuf>,
    /// Seed for refits and the global explanation sample.
    pub seed: u64,
    /// Refit parameters; `None` reuses the loaded embedding's.
    pub snore: Option<SnoreParams>,
}

/// Journal line as stored on disk, with node names instead of ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JournalRecord {
    pub timestamp_ms: u64,
    pub action: FeedbackAction,
    pub u: String,
    pub v: String,
}

/// One consistent view: readers clone the `Arc` and never see a
/// half-applied batch.
#[derive(Debug)]
pub struct Snapshot {
    pub graph: SimpleGraph,
    pub embedding: Arc<SparseEmbedding>,
    /// The graph changed since the embedding was fitted.
    pub stale: bool,
    pub journal_len: usize,
    /// Graph the embedding was fitted on.
    pub fitted_on: Arc<SimpleGraph>,
    /// Bumped on every refit; keys the global-explanation cache.
    pub embedding_version: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("re-embedding in progress")]
    Busy,
    #[error(transparent)]
    Core(#[from] Error),
}

impl From<std::io::Error> for SessionError {
    fn from(e: std::io::Error) -> Self {
        SessionError::Core(e.into())
    }
}

pub struct Session {
    pub nodes: NodeMap,
    pub base: SimpleGraph,
    pub config: ServerConfig,
    current: RwLock<Arc<Snapshot>>,
    journal: tokio::sync::Mutex<Vec<JournalEntry>>,
    reembedding: AtomicBool,
    global_cache: RwLock<Option<(u64, Arc<GlobalExplanation>)>>,
}

impl Session {
    pub fn new(
        loaded: LoadedGraph,
        embedding: SparseEmbedding,
        config: ServerConfig,
    ) -> Result<Self> {
        let nodes = loaded.hetero.nodes;
        let base = loaded.simple;
        if embedding.node_count() != base.node_count() {
            return Err(Error::InvalidArgument(format!(
                "embedding has {} rows but the graph has {} nodes",
                embedding.node_count(),
                base.node_count()
            )));
        }
        let entries = match &config.journal {
            Some(path) if path.exists() => read_journal(&nodes, BufReader::new(File::open(path)?))?,
            _ => Vec::new(),
        };
        let (graph, errors) = replay(&base, &entries);
        if let Some(e) = errors.first() {
            return Err(Error::Format(format!(
                "journal does not replay onto the loaded graph: {:?} {} {}: {}",
                e.action,
                nodes.name(e.u),
                nodes.name(e.v),
                e.reason
            )));
        }
        let snapshot = Snapshot {
            stale: graph != base,
            graph,
            embedding: Arc::new(embedding),
            journal_len: entries.len(),
            fitted_on: Arc::new(base.clone()),
            embedding_version: 0,
        };
        Ok(Session {
            nodes,
            base,
            config,
            current: RwLock::new(Arc::new(snapshot)),
            journal: tokio::sync::Mutex::new(entries),
            reembedding: AtomicBool::new(false),
            global_cache: RwLock::new(None),
        })
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.current.read().expect("snapshot lock poisoned").clone()
    }

    fn swap(&self, next: Snapshot) {
        *self.current.write().expect("snapshot lock poisoned") = Arc::new(next);
    }

    pub fn is_reembedding(&self) -> bool {
        self.reembedding.load(Ordering::SeqCst)
    }

    pub fn record(&self, e: &JournalEntry) -> JournalRecord {
        JournalRecord {
            timestamp_ms: e.timestamp_ms,
            action: e.action,
            u: self.nodes.name(e.u).to_string(),
            v: self.nodes.name(e.v).to_string(),
        }
    }

    pub async fn journal(&self) -> Vec<JournalRecord> {
        self.journal
            .lock()
            .await
            .iter()
            .map(|e| self.record(e))
            .collect()
    }

    /// Applies a feedback batch: valid edges are committed together (journal
    /// first, then the snapshot swap); invalid ones come back as errors.
    pub async fn feedback(
        &self,
        accept: &[(u32, u32)],
        reject: &[(u32, u32)],
    ) -> std::result::Result<FeedbackResult, SessionError> {
        if self.is_reembedding() {
            return Err(SessionError::Busy);
        }
        let mut journal = self.journal.lock().await;
        let current = self.snapshot();
        let outcome = apply_feedback(&current.graph, accept, reject);
        if !outcome.journal.is_empty() {
            if let Some(path) = &self.config.journal {
                let mut file = OpenOptions::new().create(true).append(true).open(path)?;
                for e in &outcome.journal {
                    let line = serde_json::to_string(&self.record(e))
                        .map_err(|e| Error::Format(e.to_string()))?;
                    writeln!(file, "{line}")?;
                }
                file.sync_data()?;
            }
            journal.extend(outcome.journal.iter().cloned());
            self.swap(Snapshot {
                stale: outcome.graph != *current.fitted_on,
                graph: outcome.graph,
                embedding: current.embedding.clone(),
                journal_len: journal.len(),
                fitted_on: current.fitted_on.clone(),
                embedding_version: current.embedding_version,
            });
        }
        Ok(FeedbackResult {
            applied: outcome.journal,
            errors: outcome.errors,
        })
    }

    /// Refits the embedding on the working graph. Feedback is refused while
    /// this runs.
    pub async fn reembed(&self) -> std::result::Result<Arc<Snapshot>, SessionError> {
        if self
            .reembedding
            .compare_exchange(false, true, Ordering::SeqCst, Ordering::SeqCst)
            .is_err()
        {
            return Err(SessionError::Busy);
        }
        let _reset = ClearOnDrop(&self.reembedding);
        let guard = self.journal.lock().await;
        let current = self.snapshot();
        let params = self
            .config
            .snore
            .clone()
            .or_else(|| current.embedding.params.clone())
            .unwrap_or_default();
        let names = self.nodes.names().to_vec();
        let graph = current.graph.clone();
        let seed = self.config.seed;
        let fitted =
            tokio::task::spawn_blocking(move || snore_fit(&graph, &params, seed, names)).await;
        let result = match fitted {
            Ok(Ok(embedding)) => {
                self.swap(Snapshot {
                    graph: current.graph.clone(),
                    embedding: Arc::new(embedding),
                    stale: false,
                    journal_len: current.journal_len,
                    fitted_on: Arc::new(current.graph.clone()),
                    embedding_version: current.embedding_version + 1,
                });
                Ok(self.snapshot())
            }
            Ok(Err(e)) => Err(e.into()),
            Err(e) => Err(Error::InvalidArgument(format!("refit task failed: {e}")).into()),
        };
        drop(guard);
        result
    }

    /// Global explanation of the current embedding, computed once per fit.
    pub fn global_explanation(&self, snapshot: &Snapshot) -> Result<Arc<GlobalExplanation>> {
        if let Some((version, cached)) = self
            .global_cache
            .read()
            .expect("cache lock poisoned")
            .as_ref()
        {
            if *version == snapshot.embedding_version {
                return Ok(cached.clone());
            }
        }
        let global = Arc::new(explain_global(
            &snapshot.embedding,
            &snapshot.fitted_on,
            self.config.seed,
            &GlobalParams::default(),
        )?);
        *self.global_cache.write().expect("cache lock poisoned") =
            Some((snapshot.embedding_version, global.clone()));
        Ok(global)
    }
}

struct ClearOnDrop<'a>(&'a AtomicBool);

impl Drop for ClearOnDrop<'_> {
    fn drop(&mut self) {
        self.0.store(false, Ordering::SeqCst);
    }
}

#[derive(Debug, Clone)]
pub struct FeedbackResult {
    pub applied: Vec<JournalEntry>,
    pub errors: Vec<FeedbackError>,
}

/// Parses journal lines, resolving node names against `nodes`.
pub fn read_journal<R: BufRead>(nodes: &NodeMap, input: R) -> Result<Vec<JournalEntry>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: JournalRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Format(format!("journal line {}: {e}", i + 1)))?;
        let id = |name: &str| {
            nodes.id(name).ok_or_else(|| {
                Error::Format(format!("journal line {}: unknown node {name}", i + 1))
            })
        };
        out.push(JournalEntry {
            timestamp_ms: rec.timestamp_ms,
            action: rec.action,
            u: id(&rec.u)?,
            v: id(&rec.v)?,
        });
    }
    Ok(out)
}
