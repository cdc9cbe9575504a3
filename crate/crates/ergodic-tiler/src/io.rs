//! Text formats for graphs, flows and prepartitions.
//!
//! Graph files are line based; blank lines and `#` comments are ignored.
//!
//! ```text
//! vertices 4
//! edge 0 1
//! weight 1 0.693      # natural log of the vertex weight, default 0
//! value 2 -0.5        # the vertex function, default 0
//! frontier 3          # truncation boundary vertex
//! ```
//!
//! Flow files hold `x y value` triples. Prepartition and relation dumps
//! have one cell per line as space-separated vertex ids.

use std::fmt::Write as _;
use std::path::Path;

use tiler_core::flows::RhoFlow;
use tiler_core::{build_graph, Cocycle, EquivRel, Prepartition, WeightedGraph};

use crate::error::{LabError, LabResult};

/// A graph file: graph, cocycle, function and frontier.
#[derive(Debug, Clone)]
pub struct GraphFile {
    pub graph: WeightedGraph,
    pub cocycle: Cocycle,
    pub values: Vec<f64>,
    pub frontier: Vec<bool>,
}

impl GraphFile {
    pub fn has_frontier(&self) -> bool {
        self.frontier.iter().any(|&b| b)
    }
}

fn read(path: &Path) -> LabResult<String> {
    std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))
}

fn write(path: &Path, text: &str) -> LabResult<()> {
    std::fs::write(path, text).map_err(|e| LabError::io(path, e))
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

pub fn parse_graph(text: &str, path: &Path) -> LabResult<GraphFile> {
    let err = |line: usize, message: String| LabError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut n: Option<usize> = None;
    let mut edges = Vec::new();
    let mut weights: Vec<(usize, f64, usize)> = Vec::new();
    let mut values: Vec<(usize, f64, usize)> = Vec::new();
    let mut frontier: Vec<(usize, usize)> = Vec::new();
    for (line, content) in content_lines(text) {
        let fields: Vec<&str> = content.split_whitespace().collect();
        let int = |i: usize| -> LabResult<usize> {
            fields
                .get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| err(line, format!("expected a vertex id in field {}", i + 1)))
        };
        let float = |i: usize| -> LabResult<f64> {
            fields
                .get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| err(line, format!("expected a number in field {}", i + 1)))
        };
        let arity = |k: usize| -> LabResult<()> {
            if fields.len() == k {
                Ok(())
            } else {
                Err(err(line, format!("{} takes {} fields", fields[0], k - 1)))
            }
        };
        match fields[0] {
            "vertices" => {
                arity(2)?;
                n = Some(int(1)?);
            }
            "edge" => {
                arity(3)?;
                edges.push((int(1)?, int(2)?));
            }
            "weight" => {
                arity(3)?;
                weights.push((int(1)?, float(2)?, line));
            }
            "value" => {
                arity(3)?;
                values.push((int(1)?, float(2)?, line));
            }
            "frontier" => {
                arity(2)?;
                frontier.push((int(1)?, line));
            }
            other => return Err(err(line, format!("unknown record {other:?}"))),
        }
    }
    let n = n.ok_or_else(|| err(0, "missing `vertices` line".into()))?;
    let mut log_w = vec![0.0; n];
    for (v, w, line) in weights {
        *log_w
            .get_mut(v)
            .ok_or_else(|| err(line, format!("vertex {v} out of range")))? = w;
    }
    let mut f = vec![0.0; n];
    for (v, x, line) in values {
        *f.get_mut(v)
            .ok_or_else(|| err(line, format!("vertex {v} out of range")))? = x;
    }
    let mut fr = vec![false; n];
    for (v, line) in frontier {
        *fr.get_mut(v)
            .ok_or_else(|| err(line, format!("vertex {v} out of range")))? = true;
    }
    let (graph, cocycle) = build_graph(&edges, &log_w)?;
    Ok(GraphFile {
        graph,
        cocycle,
        values: f,
        frontier: fr,
    })
}

pub fn load_graph(path: &Path) -> LabResult<GraphFile> {
    parse_graph(&read(path)?, path)
}

pub fn format_graph(graph: &WeightedGraph, cocycle: &Cocycle, values: &[f64], frontier: Option<&[bool]>) -> String {
    let mut out = String::new();
    writeln!(out, "vertices {}", graph.vertex_count()).unwrap();
    for (u, v) in graph.edges() {
        writeln!(out, "edge {u} {v}").unwrap();
    }
    for v in 0..graph.vertex_count() {
        if cocycle.log_weight(v) != 0.0 {
            writeln!(out, "weight {v} {}", cocycle.log_weight(v)).unwrap();
        }
        if values[v] != 0.0 {
            writeln!(out, "value {v} {}", values[v]).unwrap();
        }
        if frontier.is_some_and(|fr| fr[v]) {
            writeln!(out, "frontier {v}").unwrap();
        }
    }
    out
}

pub fn parse_flow(text: &str, path: &Path) -> LabResult<RhoFlow> {
    let mut flow = RhoFlow::new();
    for (line, content) in content_lines(text) {
        let fields: Vec<&str> = content.split_whitespace().collect();
        let bad = || LabError::Parse {
            path: path.to_path_buf(),
            line,
            message: "expected `x y value`".into(),
        };
        if fields.len() != 3 {
            return Err(bad());
        }
        let x: usize = fields[0].parse().map_err(|_| bad())?;
        let y: usize = fields[1].parse().map_err(|_| bad())?;
        let value: f64 = fields[2].parse().map_err(|_| bad())?;
        flow.add(x, y, value);
    }
    Ok(flow)
}

pub fn load_flow(path: &Path) -> LabResult<RhoFlow> {
    parse_flow(&read(path)?, path)
}

/// One line per cell.
pub fn format_cells(cells: &[Vec<usize>]) -> String {
    let mut out = String::new();
    for cell in cells {
        let ids: Vec<String> = cell.iter().map(usize::to_string).collect();
        out.push_str(&ids.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_cells(text: &str, path: &Path) -> LabResult<Vec<Vec<usize>>> {
    content_lines(text)
        .map(|(line, content)| {
            content
                .split_whitespace()
                .map(|s| {
                    s.parse().map_err(|_| LabError::Parse {
                        path: path.to_path_buf(),
                        line,
                        message: format!("bad vertex id {s:?}"),
                    })
                })
                .collect()
        })
        .collect()
}

pub fn load_prepartition(path: &Path, vertex_count: usize) -> LabResult<Prepartition> {
    let cells = parse_cells(&read(path)?, path)?;
    Ok(Prepartition::from_cells(vertex_count, cells)?)
}

pub fn save_prepartition(path: &Path, prep: &Prepartition) -> LabResult<()> {
    write(path, &format_cells(prep.cells()))
}

pub fn save_relation(path: &Path, relation: &EquivRel) -> LabResult<()> {
    write(path, &format_cells(relation.classes()))
}

pub fn load_relation(path: &Path, vertex_count: usize) -> LabResult<EquivRel> {
    let cells = parse_cells(&read(path)?, path)?;
    Ok(EquivRel::from_classes(vertex_count, &cells)?)
}

/// Comma-separated vertex ids, as used on the command line.
pub fn parse_id_list(text: &str) -> LabResult<Vec<usize>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| LabError::Config(format!("bad vertex id {s:?}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_round_trip() {
        let text = "# path\nvertices 3\nedge 0 1\nedge 1 2\nweight 1 1.5\nvalue 0 -0.25\nfrontier 2\n";
        let g = parse_graph(text, Path::new("t")).unwrap();
        assert_eq!(g.graph.edge_count(), 2);
        assert_eq!(g.values, vec![-0.25, 0.0, 0.0]);
        assert_eq!(g.frontier, vec![false, false, true]);
        let again = parse_graph(
            &format_graph(&g.graph, &g.cocycle, &g.values, Some(&g.frontier)),
            Path::new("t"),
        )
        .unwrap();
        assert_eq!(again.graph, g.graph);
        assert_eq!(again.cocycle, g.cocycle);
        assert_eq!(again.values, g.values);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let e = parse_graph("vertices 2\nedge 0 x\n", Path::new("g.txt")).unwrap_err();
        assert!(e.to_string().starts_with("g.txt:2:"), "{e}");
        assert!(parse_graph("edge 0 1\n", Path::new("g")).is_err());
        assert!(parse_graph("vertices 2\nedge 0 5\n", Path::new("g")).is_err());
    }

    #[test]
    fn cells_round_trip() {
        let cells = vec![vec![0, 2], vec![5]];
        assert_eq!(parse_cells(&format_cells(&cells), Path::new("c")).unwrap(), cells);
        assert_eq!(parse_id_list("1, 2,3").unwrap(), vec![1, 2, 3]);
        let flow = parse_flow("0 1 0.5\n1 0 0.25\n", Path::new("f")).unwrap();
        assert_eq!(flow.get(0, 1), 0.5);
    }
}
