use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::net::ToSocketAddrs;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{Context, Result};
use ontolink_core::embed::io::{read_embedding, write_embedding, write_text};
use ontolink_core::embed::{snore_fit, snore_score, SparseEmbedding};
use ontolink_core::eval::run_benchmark;
use ontolink_core::explain::{contribution_histogram, explain_global, explain_local, GlobalParams};
use ontolink_core::graph_io::{load_graph, save_graph, LoadedGraph};
use ontolink_core::projection::project;
use ontolink_core::recommend::{candidates, temporal_eval, ScoredCandidate, Version};
use ontolink_core::triples::parse_document;
use ontolink_core::NodeMap;
use ontolink_server::{ServerConfig, Session};
use serde::Serialize;
use serde_json::json;

use crate::params::{build_scorers, check_overrides, scorer_names, snore_params};
use crate::{Cli, Command, Format, GraphInput, KindArg, Usage};

pub fn run(cli: Cli) -> Result<()> {
    let seed = cli.global.seed;
    let threads = cli.global.threads;
    match cli.command {
        Command::Convert {
            input,
            out,
            mode,
            simple,
        } => {
            let store = parse_document(BufReader::new(open(&input)?))
                .with_context(|| format!("parsing {}", input.display()))?;
            let projection = project(&store, mode)?;
            save_graph(&out, &projection.graph, simple)
                .with_context(|| format!("writing {}", out.display()))?;
            emit(None, &to_json(&projection.report)?)
        }
        Command::Stats { input, mode } => {
            let report = if input.extension().is_some_and(|e| e == "nt") {
                let store = parse_document(BufReader::new(open(&input)?))
                    .with_context(|| format!("parsing {}", input.display()))?;
                let projection = project(&store, mode)?;
                let g = projection.graph.collapse();
                json!({
                    "triples": store.stats(),
                    "projection": projection.report,
                    "graph": { "nodes": g.node_count(), "edges": g.edge_count(), "components": g.connected_components() },
                })
            } else {
                let loaded = load(&GraphInput { graph: input, mode })?;
                let g = &loaded.simple;
                json!({
                    "graph": {
                        "nodes": g.node_count(),
                        "edges": g.edge_count(),
                        "labeled_edges": loaded.hetero.edges.len(),
                        "components": g.connected_components(),
                    }
                })
            };
            emit(None, &to_json(&report)?)
        }
        Command::Embed {
            graph,
            out,
            text,
            params,
        } => {
            check_overrides(&params, &["snore"]).map_err(usage)?;
            let snore = snore_params(&params, threads).map_err(usage)?;
            eprintln!("seed: {seed}");
            let loaded = load(&graph)?;
            let start = Instant::now();
            let emb = snore_fit(
                &loaded.simple,
                &snore,
                seed,
                loaded.nodes().names().to_vec(),
            )?;
            eprintln!(
                "embedded {} nodes in {:.2}s",
                emb.node_count(),
                start.elapsed().as_secs_f64()
            );
            let mut w = BufWriter::new(create(&out)?);
            write_embedding(&emb, &mut w)?;
            w.flush()?;
            if let Some(text) = text {
                let mut w = BufWriter::new(create(&text)?);
                write_text(&emb, &mut w)?;
                w.flush()?;
            }
            emit(
                None,
                &to_json(&json!({
                    "nodes": emb.node_count(),
                    "features": emb.feature_count(),
                    "nnz": emb.nnz(),
                    "seed": seed,
                    "params": emb.params,
                }))?,
            )
        }
        Command::Benchmark {
            graph,
            scorers,
            params,
            out,
            table,
        } => {
            let names = scorer_names(&scorers).map_err(usage)?;
            let mut scorers = build_scorers(&names, &params, threads).map_err(usage)?;
            eprintln!("seed: {seed}");
            let loaded = load(&graph)?;
            let dataset = graph
                .graph
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let report = run_benchmark(
                &dataset,
                &loaded.simple,
                Some(&loaded.hetero),
                &mut scorers,
                seed,
            )?;
            match out {
                Some(path) => {
                    emit(Some(&path), &to_json(&report)?)?;
                    emit(None, &report.to_table())
                }
                None if table => emit(None, &report.to_table()),
                None => emit(None, &to_json(&report)?),
            }
        }
        Command::Recommend {
            graph,
            embedding,
            k,
            nodes,
            kind,
            out,
            format,
        } => {
            let loaded = load(&graph)?;
            let emb = load_embedding(&embedding, &loaded)?;
            let subset = match nodes {
                Some(path) => Some(read_node_list(&path, loaded.nodes())?),
                None => None,
            };
            let lists = candidates(&emb, &loaded.simple, k, subset.as_deref())?;
            let mut chosen: Vec<&ScoredCandidate> = Vec::new();
            if kind != KindArg::Redundant {
                chosen.extend(&lists.missing);
            }
            if kind != KindArg::Missing {
                chosen.extend(&lists.redundant);
            }
            let names = loaded.nodes();
            let text = match resolve_format(format, out.as_deref()) {
                Format::Tsv => {
                    let mut s = String::from("kind\tu_iri\tv_iri\tscore\n");
                    for c in chosen {
                        s.push_str(&format!(
                            "{}\t{}\t{}\t{}\n",
                            c.kind,
                            names.name(c.u),
                            names.name(c.v),
                            c.score
                        ));
                    }
                    s
                }
                Format::Json => to_json(&json!({
                    "k": k,
                    "warnings": lists.warnings,
                    "candidates": chosen.iter().map(|c| json!({
                        "kind": c.kind,
                        "u": names.name(c.u),
                        "v": names.name(c.v),
                        "score": c.score,
                    })).collect::<Vec<_>>(),
                }))?,
            };
            emit(out.as_deref(), &text)
        }
        Command::Temporal {
            before,
            after,
            ks,
            mode,
            labels,
            params,
            out,
        } => {
            check_overrides(&params, &["snore"]).map_err(usage)?;
            let snore = snore_params(&params, threads).map_err(usage)?;
            eprintln!("seed: {seed}");
            let stem = |p: &Path| {
                p.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default()
            };
            let (label_t, label_t1) = labels.unwrap_or_else(|| (stem(&before), stem(&after)));
            let a = load(&GraphInput {
                graph: before,
                mode,
            })?;
            let b = load(&GraphInput { graph: after, mode })?;
            let t = Version {
                graph: &a.simple,
                nodes: a.nodes(),
                label: &label_t,
            };
            let t1 = Version {
                graph: &b.simple,
                nodes: b.nodes(),
                label: &label_t1,
            };
            let results = temporal_eval(t, t1, &ks, &snore, seed)?;
            let version = |label: &str, g: &LoadedGraph| json!({ "label": label, "nodes": g.simple.node_count(), "edges": g.simple.edge_count() });
            emit(
                out.as_deref(),
                &to_json(&json!({
                    "seed": seed,
                    "ks": ks,
                    "versions": [version(&label_t, &a), version(&label_t1, &b)],
                    "results": results,
                }))?,
            )
        }
        Command::Explain {
            graph,
            embedding,
            edge,
            global,
            top,
            bins,
            out,
            format,
        } => {
            let loaded = load(&graph)?;
            let emb = load_embedding(&embedding, &loaded)?;
            let names = emb.feature_names();
            let format = resolve_format(format, out.as_deref());
            let text = if global {
                eprintln!("seed: {seed}");
                let g = explain_global(&emb, &loaded.simple, seed, &GlobalParams::default())?;
                let head = &g.features[..top.min(g.features.len())];
                match format {
                    Format::Tsv => {
                        let mut s = String::from("feature\tbeta\tse\tabs_t\n");
                        for f in head {
                            s.push_str(&format!(
                                "{}\t{}\t{}\t{}\n",
                                f.name,
                                f.beta,
                                f.se,
                                f.t.abs()
                            ));
                        }
                        s
                    }
                    Format::Json => to_json(&json!({
                        "seed": seed,
                        "intercept": g.intercept,
                        "ridge": g.ridge,
                        "training_rows": g.training_rows,
                        "iterations": g.iterations,
                        "features": head.iter().map(|f| json!({
                            "feature": f.name,
                            "beta": f.beta,
                            "se": f.se,
                            "t": f.t,
                            "abs_t": f.t.abs(),
                        })).collect::<Vec<_>>(),
                    }))?,
                }
            } else {
                let pair = edge.expect("clap requires --edge without --global");
                let (u, v) = (
                    node(loaded.nodes(), &pair.0)?,
                    node(loaded.nodes(), &pair.1)?,
                );
                let e = explain_local(&emb, u, v);
                match format {
                    Format::Tsv => {
                        let mut s = String::from("feature\tvalue\n");
                        for c in &e.contributions {
                            s.push_str(&format!("{}\t{}\n", names[c.feature as usize], c.value));
                        }
                        s
                    }
                    Format::Json => {
                        let histogram = if bins > 0 {
                            Some(contribution_histogram(&e, bins)?)
                        } else {
                            None
                        };
                        to_json(&json!({
                            "u": pair.0,
                            "v": pair.1,
                            "score": snore_score(&emb, u, v),
                            "total": e.total,
                            "support_union": e.support_union,
                            "contributions": e.contributions.iter().map(|c| json!({
                                "feature": names[c.feature as usize],
                                "value": c.value,
                            })).collect::<Vec<_>>(),
                            "histogram": histogram,
                        }))?
                    }
                }
            };
            emit(out.as_deref(), &text)
        }
        Command::Serve {
            graph,
            embedding,
            host,
            port,
            journal,
            static_dir,
            params,
        } => {
            check_overrides(&params, &["snore"]).map_err(usage)?;
            let refit = if params.is_empty() {
                None
            } else {
                Some(snore_params(&params, threads).map_err(usage)?)
            };
            let addr = (host.as_str(), port)
                .to_socket_addrs()
                .ok()
                .and_then(|mut a| a.next())
                .ok_or_else(|| Usage(format!("cannot resolve {host}:{port}")))?;
            eprintln!("seed: {seed}");
            let loaded = load(&graph)?;
            let emb = match embedding {
                Some(path) => load_embedding(&path, &loaded)?,
                None => {
                    let p = refit
                        .clone()
                        .unwrap_or_else(|| snore_params(&[], threads).expect("defaults are valid"));
                    snore_fit(&loaded.simple, &p, seed, loaded.nodes().names().to_vec())?
                }
            };
            let config = ServerConfig {
                journal,
                static_dir,
                seed,
                snore: refit,
            };
            let session = Arc::new(Session::new(loaded, emb, config)?);
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(ontolink_server::serve(session, addr))?;
            Ok(())
        }
    }
}

fn usage(e: anyhow::Error) -> anyhow::Error {
    Usage(format!("{e:#}")).into()
}

fn open(path: &Path) -> Result<File> {
    File::open(path).with_context(|| format!("opening {}", path.display()))
}

fn create(path: &Path) -> Result<File> {
    File::create(path).with_context(|| format!("creating {}", path.display()))
}

fn load(input: &GraphInput) -> Result<LoadedGraph> {
    load_graph(&input.graph, input.mode)
        .with_context(|| format!("loading {}", input.graph.display()))
}

fn load_embedding(path: &Path, graph: &LoadedGraph) -> Result<SparseEmbedding> {
    let emb = read_embedding(BufReader::new(open(path)?))
        .with_context(|| format!("reading {}", path.display()))?;
    if emb.node_count() != graph.simple.node_count() {
        anyhow::bail!(
            "embedding {} has {} rows but the graph has {} nodes",
            path.display(),
            emb.node_count(),
            graph.simple.node_count()
        );
    }
    Ok(emb)
}

fn node(nodes: &NodeMap, iri: &str) -> Result<u32> {
    nodes.id(iri).with_context(|| format!("unknown node {iri}"))
}

fn read_node_list(path: &Path, nodes: &NodeMap) -> Result<Vec<u32>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|iri| node(nodes, iri))
        .collect()
}

fn resolve_format(explicit: Option<Format>, out: Option<&Path>) -> Format {
    explicit.unwrap_or(match out {
        Some(p) if p.extension().is_some_and(|e| e == "tsv") => Format::Tsv,
        _ => Format::Json,
    })
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Writes `text` to `out`, or to stdout.
fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}
