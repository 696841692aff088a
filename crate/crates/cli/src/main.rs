//! `ontolink`: convert ontologies to graphs, embed them, benchmark link
//! scorers, and recommend/explain missing or redundant edges.
//!
//! Exit status: 0 on success, 1 on usage errors, 2 on data errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ontolink_core::projection::Mode;

mod commands;
mod config;
mod params;

use params::Override;

#[derive(Parser, Debug)]
#[command(
    name = "ontolink",
    version,
    about = "Structure-only link analysis for ontologies"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Random seed for every stochastic step.
    #[arg(long, global = true, env = "ONTOLINK_SEED", default_value_t = 42)]
    pub seed: u64,
    /// Worker thread cap; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// File of `key = value` lines mirroring long flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Tsv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Missing,
    Redundant,
    Both,
}

#[derive(Args, Debug, Clone)]
pub struct GraphInput {
    /// Graph file: hetero or simple TSV (with `<stem>.nodes.tsv`), or `.nt`.
    #[arg(long)]
    pub graph: PathBuf,
    /// Conversion mode when the graph is given as `.nt`.
    #[arg(long, default_value = "rules")]
    pub mode: Mode,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse N-Triples and write the projected graph as TSV.
    Convert {
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "rules")]
        mode: Mode,
        /// Write `u<TAB>v` id rows instead of labeled edges.
        #[arg(long)]
        simple: bool,
    },
    /// Triple and graph statistics as JSON.
    Stats {
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        #[arg(long, default_value = "rules")]
        mode: Mode,
    },
    /// Fit the sparse random-walk embedding and write it to a file.
    Embed {
        #[command(flatten)]
        graph: GraphInput,
        #[arg(long)]
        out: PathBuf,
        /// Also write `node<TAB>feature<TAB>value` rows here.
        #[arg(long)]
        text: Option<PathBuf>,
        /// Parameter override, `snore.key=value`; repeatable.
        #[arg(long = "param", value_parser = params::parse_override)]
        params: Vec<Override>,
    },
    /// Five-fold link-prediction benchmark.
    Benchmark {
        #[command(flatten)]
        graph: GraphInput,
        /// Comma-separated: snore, adamic, jaccard, pref, spectral, transe, random.
        #[arg(long, default_value = "snore,adamic,jaccard,pref,spectral,transe")]
        scorers: String,
        /// Parameter override, `scorer.key=value`; repeatable.
        #[arg(long = "param", value_parser = params::parse_override)]
        params: Vec<Override>,
        /// JSON report path; the text table then goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the text table instead of JSON when no --out is given.
        #[arg(long)]
        table: bool,
    },
    /// Top-k missing and redundant edge candidates.
    Recommend {
        #[command(flatten)]
        graph: GraphInput,
        #[arg(long)]
        embedding: PathBuf,
        #[arg(long, default_value_t = 100)]
        k: usize,
        /// File of node IRIs (one per line) restricting candidate rows.
        #[arg(long)]
        nodes: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = KindArg::Both)]
        kind: KindArg,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output format; defaults to tsv for `.tsv` outputs, json otherwise.
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Score candidates on one version against the next.
    Temporal {
        #[arg(long = "t", value_name = "FILE")]
        before: PathBuf,
        #[arg(long = "t1", value_name = "FILE")]
        after: PathBuf,
        #[arg(long, default_value = "10,100,500", value_delimiter = ',')]
        ks: Vec<usize>,
        #[arg(long, default_value = "rules")]
        mode: Mode,
        /// Version labels, `before,after`; defaults to the file stems.
        #[arg(long, value_parser = parse_pair)]
        labels: Option<(String, String)>,
        #[arg(long = "param", value_parser = params::parse_override)]
        params: Vec<Override>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-feature breakdown of one score, or global feature importance.
    Explain {
        #[command(flatten)]
        graph: GraphInput,
        #[arg(long)]
        embedding: PathBuf,
        /// Pair to explain, `u_iri,v_iri`.
        #[arg(long, value_parser = parse_pair, required_unless_present = "global", conflicts_with = "global")]
        edge: Option<(String, String)>,
        #[arg(long)]
        global: bool,
        /// Features listed by --global.
        #[arg(long, default_value_t = 10)]
        top: usize,
        /// Histogram bins for a local explanation (0 = none).
        #[arg(long, default_value_t = 0)]
        bins: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// HTTP API for reviewing candidates.
    Serve {
        #[command(flatten)]
        graph: GraphInput,
        /// Embedding file; fitted at startup when omitted.
        #[arg(long)]
        embedding: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long)]
        journal: Option<PathBuf>,
        /// Directory of static files (the web UI bundle).
        #[arg(long = "static", value_name = "DIR")]
        static_dir: Option<PathBuf>,
        #[arg(long = "param", value_parser = params::parse_override)]
        params: Vec<Override>,
    },
}

/// `a,b` split at the first comma.
fn parse_pair(s: &str) -> Result<(String, String), String> {
    match s.split_once(',') {
        Some((a, b)) if !a.is_empty() && !b.is_empty() => Ok((a.to_string(), b.to_string())),
        _ => Err(format!("expected two comma-separated values, got '{s}'")),
    }
}

/// A failure caused by the invocation rather than the data.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();

    let mut args: Vec<String> = std::env::args().collect();
    if let Some(path) = config::config_path(&args) {
        if let Err(e) = config::merge(&mut args, path.as_ref()) {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    }
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Some(n) = cli.global.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<Usage>() => {
            eprintln!("error: {e}");
            eprintln!("run 'ontolink help' for usage");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
