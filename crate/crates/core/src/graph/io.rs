//! Edge-list text format.
//!
//! ```text
//! N k p seed kind
//! i j
//! ...
//! ```
//! Nodes are 0-indexed and every edge is written once with `i < j`.

use std::io::{BufRead, Write};

use super::{BuildParams, NodeId, RelationGraph, TopologyKind};
use crate::{Error, Result};

pub fn write_edge_list(graph: &RelationGraph, mut out: impl Write) -> Result<()> {
    let p = graph.params();
    writeln!(out, "{} {} {} {} {}", graph.node_count(), p.k, p.p, p.seed, graph.kind())?;
    for (i, j) in graph.edges() {
        writeln!(out, "{i} {j}")?;
    }
    Ok(())
}

pub fn read_edge_list(input: impl BufRead) -> Result<RelationGraph> {
    let mut lines = input.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Ingest { line: 1, message: "missing header".into() })?;
    let header = header?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let bad_header = |what: &str| Error::Ingest {
        line: 1,
        message: format!("bad header ({what}); expected `N k p seed kind`"),
    };
    if fields.len() != 5 {
        return Err(bad_header("field count"));
    }
    let n: usize = fields[0].parse().map_err(|_| bad_header("N"))?;
    let k: u32 = fields[1].parse().map_err(|_| bad_header("k"))?;
    let p: f64 = fields[2].parse().map_err(|_| bad_header("p"))?;
    let seed: u64 = fields[3].parse().map_err(|_| bad_header("seed"))?;
    let kind: TopologyKind = fields[4].parse().map_err(|_| bad_header("kind"))?;

    let mut edges = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace().map(str::parse::<NodeId>);
        match (parts.next(), parts.next(), parts.next()) {
            (Some(Ok(i)), Some(Ok(j)), None) if i < j => edges.push((i, j)),
            _ => {
                return Err(Error::Ingest {
                    line: idx + 1,
                    message: format!("expected `i j` with i < j, got {line:?}"),
                })
            }
        }
    }
    RelationGraph::from_edges_with(n, &edges, kind, BuildParams { k, p, seed })
}
