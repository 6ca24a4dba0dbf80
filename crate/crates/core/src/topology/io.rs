//! Edge-list text and JSON schedule formats.
//!
//! Edge list: a header line `n <count>`, then one `i j` pair per line,
//! 0-indexed. Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Graph, GraphSchedule, ScheduledGraph};
use crate::error::{Error, Result};

pub fn graph_to_edge_list(g: &Graph) -> String {
    let mut s = format!("n {}\n", g.node_count());
    for (i, j) in g.edges() {
        let _ = writeln!(s, "{i} {j}");
    }
    s
}

pub fn graph_from_edge_list(text: &str) -> Result<Graph> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines.next().ok_or_else(|| Error::Parse("missing header".into()))?;
    let n = match header.split_whitespace().collect::<Vec<_>>().as_slice() {
        ["n", count] => count.parse::<usize>().map_err(|e| Error::Parse(format!("bad node count: {e}")))?,
        _ => return Err(Error::Parse(format!("expected `n <count>`, got `{header}`"))),
    };
    let mut edges = Vec::new();
    for line in lines {
        let parts: Vec<&str> = line.split_whitespace().collect();
        let [a, b] = parts.as_slice() else {
            return Err(Error::Parse(format!("expected `i j`, got `{line}`")));
        };
        let parse = |s: &str| s.parse::<usize>().map_err(|e| Error::Parse(format!("bad node index `{s}`: {e}")));
        edges.push((parse(a)?, parse(b)?));
    }
    Graph::from_edges(n, edges)
}

pub fn read_graph(path: &Path) -> Result<Graph> {
    graph_from_edge_list(&fs::read_to_string(path)?)
}

pub fn write_graph(path: &Path, g: &Graph) -> Result<()> {
    fs::write(path, graph_to_edge_list(g))?;
    Ok(())
}

pub fn schedule_to_json(s: &GraphSchedule) -> Result<String> {
    Ok(serde_json::to_string_pretty(&s.iter().collect::<Vec<_>>())?)
}

pub fn schedule_from_json(text: &str) -> Result<GraphSchedule> {
    let rounds: Vec<ScheduledGraph> = serde_json::from_str(text)?;
    GraphSchedule::new(rounds)
}

/// Write one `round_NNNNN.txt` edge list per round into `dir`.
pub fn write_schedule_dir(dir: &Path, s: &GraphSchedule) -> Result<()> {
    fs::create_dir_all(dir)?;
    for r in s.iter() {
        write_graph(&dir.join(format!("round_{:05}.txt", r.round)), &r.graph)?;
    }
    Ok(())
}

/// Read a directory of per-round edge lists, ordered by file name.
/// Repair information is not stored in this format.
pub fn read_schedule_dir(dir: &Path) -> Result<GraphSchedule> {
    let mut files: Vec<_> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    files.sort();
    let rounds = files
        .iter()
        .enumerate()
        .map(|(k, p)| Ok(ScheduledGraph { round: k, graph: read_graph(p)?, repaired: Vec::new() }))
        .collect::<Result<Vec<_>>>()?;
    GraphSchedule::new(rounds)
}
