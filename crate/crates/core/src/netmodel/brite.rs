//! BRITE topology files, with a `cpu=<value>` token closing each node line.
//!
//! ```text
//! Topology: ( <N> Nodes, <M> Edges )
//! Nodes: ( <N> ):
//! <id> <x> <y> <indeg> <outdeg> <as> <type> cpu=<float>
//! Edges: ( <M> ):
//! <id> <from> <to> <len> <delay> <bw> <asf> <ast> <type>
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::{NetError, SubstrateLink, SubstrateNetwork, SubstrateNode, VirtualNetwork};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BriteError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error(transparent)]
    Network(#[from] NetError),
}

fn syntax(line: usize, msg: impl Into<String>) -> BriteError {
    BriteError::Syntax { line, msg: msg.into() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BriteNode {
    pub id: i64,
    pub x: f64,
    pub y: f64,
    pub cpu: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BriteEdge {
    pub from: usize,
    pub to: usize,
    pub bandwidth: f64,
}

/// Parsed file; edge endpoints are already resolved to node positions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BriteTopology {
    pub nodes: Vec<BriteNode>,
    pub edges: Vec<BriteEdge>,
}

fn parse_count_header(line: &str, lineno: usize) -> Result<(usize, usize), BriteError> {
    // Topology: ( 2 Nodes, 1 Edges )
    let inner = line
        .trim_start_matches("Topology:")
        .trim()
        .trim_start_matches('(')
        .trim_end_matches(')');
    let mut parts = inner.split(',');
    let mut count = |what: &str| -> Result<usize, BriteError> {
        let part = parts.next().ok_or_else(|| syntax(lineno, "malformed Topology header"))?;
        let mut toks = part.split_whitespace();
        let v = toks
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| syntax(lineno, "malformed Topology header"))?;
        if toks.next() != Some(what) {
            return Err(syntax(lineno, format!("expected '{what}' in Topology header")));
        }
        Ok(v)
    };
    Ok((count("Nodes")?, count("Edges")?))
}

fn parse_section_count(line: &str, name: &str, lineno: usize) -> Result<usize, BriteError> {
    // Nodes: ( 2 ):
    line.trim_start_matches(name)
        .trim()
        .trim_end_matches(':')
        .trim()
        .trim_start_matches('(')
        .trim_end_matches(')')
        .trim()
        .parse()
        .map_err(|_| syntax(lineno, format!("malformed {name} header")))
}

fn float(tok: &str, lineno: usize, what: &str) -> Result<f64, BriteError> {
    let v: f64 = tok
        .parse()
        .map_err(|_| syntax(lineno, format!("bad {what} '{tok}'")))?;
    if !v.is_finite() {
        return Err(syntax(lineno, format!("non-finite {what}")));
    }
    Ok(v)
}

#[derive(PartialEq)]
enum Section {
    Preamble,
    Nodes,
    Edges,
}

pub fn parse_brite(text: &str) -> Result<BriteTopology, BriteError> {
    let mut header: Option<(usize, usize)> = None;
    let mut section = Section::Preamble;
    let mut expected_nodes = 0;
    let mut expected_edges = 0;
    let mut topo = BriteTopology::default();
    let mut id_to_pos: HashMap<i64, usize> = HashMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with("Topology:") {
            if header.is_some() {
                return Err(syntax(lineno, "duplicate Topology header"));
            }
            header = Some(parse_count_header(line, lineno)?);
            continue;
        }
        if line.starts_with("Model") && section == Section::Preamble {
            continue;
        }
        if line.starts_with("Nodes:") {
            expected_nodes = parse_section_count(line, "Nodes:", lineno)?;
            section = Section::Nodes;
            continue;
        }
        if line.starts_with("Edges:") {
            expected_edges = parse_section_count(line, "Edges:", lineno)?;
            section = Section::Edges;
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        match section {
            Section::Preamble => {
                return Err(syntax(lineno, format!("unknown section header '{line}'")));
            }
            Section::Nodes => {
                if toks.len() != 8 {
                    return Err(syntax(lineno, format!("node line needs 8 fields, got {}", toks.len())));
                }
                let id: i64 = toks[0]
                    .parse()
                    .map_err(|_| syntax(lineno, format!("bad node id '{}'", toks[0])))?;
                let cpu_tok = toks[7]
                    .strip_prefix("cpu=")
                    .ok_or_else(|| syntax(lineno, "node line must end with cpu=<value>"))?;
                let cpu = float(cpu_tok, lineno, "cpu")?;
                if cpu < 0.0 {
                    return Err(syntax(lineno, format!("negative capacity {cpu}")));
                }
                if id_to_pos.insert(id, topo.nodes.len()).is_some() {
                    return Err(syntax(lineno, format!("duplicate node {id}")));
                }
                topo.nodes.push(BriteNode {
                    id,
                    x: float(toks[1], lineno, "x")?,
                    y: float(toks[2], lineno, "y")?,
                    cpu,
                });
            }
            Section::Edges => {
                if toks.len() != 9 {
                    return Err(syntax(lineno, format!("edge line needs 9 fields, got {}", toks.len())));
                }
                let endpoint = |t: &str| -> Result<usize, BriteError> {
                    let id: i64 = t.parse().map_err(|_| syntax(lineno, format!("bad node id '{t}'")))?;
                    id_to_pos
                        .get(&id)
                        .copied()
                        .ok_or_else(|| syntax(lineno, format!("unknown node {id}")))
                };
                let from = endpoint(toks[1])?;
                let to = endpoint(toks[2])?;
                let bandwidth = float(toks[5], lineno, "bandwidth")?;
                if bandwidth < 0.0 {
                    return Err(syntax(lineno, format!("negative capacity {bandwidth}")));
                }
                topo.edges.push(BriteEdge { from, to, bandwidth });
            }
        }
    }
    let (n, m) = header.ok_or_else(|| syntax(1, "missing Topology header"))?;
    if topo.nodes.len() != n || expected_nodes != n {
        return Err(syntax(0, format!("expected {n} nodes, found {}", topo.nodes.len())));
    }
    if topo.edges.len() != m || expected_edges != m {
        return Err(syntax(0, format!("expected {m} edges, found {}", topo.edges.len())));
    }
    Ok(topo)
}

pub fn parse_substrate(text: &str) -> Result<SubstrateNetwork, BriteError> {
    let topo = parse_brite(text)?;
    let nodes = topo
        .nodes
        .iter()
        .map(|v| SubstrateNode { cpu: v.cpu, x: v.x, y: v.y })
        .collect();
    let links = topo
        .edges
        .iter()
        .map(|e| SubstrateLink { a: e.from, b: e.to, bandwidth: e.bandwidth })
        .collect();
    Ok(SubstrateNetwork::new(nodes, links)?)
}

pub fn parse_virtual(text: &str) -> Result<VirtualNetwork, BriteError> {
    let topo = parse_brite(text)?;
    let cpu = topo.nodes.iter().map(|v| v.cpu).collect();
    let links: Vec<(usize, usize, f64)> =
        topo.edges.iter().map(|e| (e.from, e.to, e.bandwidth)).collect();
    Ok(VirtualNetwork::from_links(cpu, &links)?)
}

fn write_topology(
    out: &mut String,
    nodes: &[(f64, f64, f64)],
    degree: &[usize],
    edges: &[(usize, usize, f64, f64)],
) {
    writeln!(out, "Topology: ( {} Nodes, {} Edges )", nodes.len(), edges.len()).unwrap();
    writeln!(out).unwrap();
    writeln!(out, "Nodes: ( {} ):", nodes.len()).unwrap();
    for (id, &(x, y, cpu)) in nodes.iter().enumerate() {
        let d = degree[id];
        writeln!(out, "{id} {x:?} {y:?} {d} {d} 0 RT_NODE cpu={cpu:?}").unwrap();
    }
    writeln!(out).unwrap();
    writeln!(out, "Edges: ( {} ):", edges.len()).unwrap();
    for (id, &(a, b, len, bw)) in edges.iter().enumerate() {
        writeln!(out, "{id} {a} {b} {len:?} 0.0 {bw:?} 0 0 E_RT").unwrap();
    }
}

pub fn write_substrate(net: &SubstrateNetwork) -> String {
    let nodes: Vec<(f64, f64, f64)> = net.nodes().iter().map(|v| (v.x, v.y, v.cpu)).collect();
    let degree: Vec<usize> = (0..net.node_count()).map(|v| net.neighbors(v).len()).collect();
    let edges: Vec<(usize, usize, f64, f64)> = net
        .links()
        .iter()
        .map(|l| {
            let (p, q) = (&net.nodes()[l.a], &net.nodes()[l.b]);
            let len = ((p.x - q.x).powi(2) + (p.y - q.y).powi(2)).sqrt();
            (l.a, l.b, len, l.bandwidth)
        })
        .collect();
    let mut out = String::new();
    write_topology(&mut out, &nodes, &degree, &edges);
    out
}

pub fn write_virtual(vn: &VirtualNetwork) -> String {
    let nodes: Vec<(f64, f64, f64)> = vn.cpu().iter().map(|&c| (0.0, 0.0, c)).collect();
    let mut degree = vec![0; vn.node_count()];
    let edges: Vec<(usize, usize, f64, f64)> = vn
        .links()
        .map(|(i, j, b)| {
            degree[i] += 1;
            degree[j] += 1;
            (i, j, 0.0, b)
        })
        .collect();
    let mut out = String::new();
    write_topology(&mut out, &nodes, &degree, &edges);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{generate_vn_request, waxman_generate, VnParams, WaxmanParams};

    fn two_node() -> SubstrateNetwork {
        SubstrateNetwork::new(
            vec![
                SubstrateNode { cpu: 3720.0, x: 0.1, y: 0.7 },
                SubstrateNode { cpu: 5320.0, x: 0.3, y: 0.2 },
            ],
            vec![SubstrateLink { a: 0, b: 1, bandwidth: 99.123456789 }],
        )
        .unwrap()
    }

    #[test]
    fn round_trip_two_nodes() {
        let net = two_node();
        let text = write_substrate(&net);
        assert_eq!(parse_substrate(&text).unwrap(), net);
    }

    #[test]
    fn unknown_endpoint_is_located() {
        let text = "Topology: ( 2 Nodes, 1 Edges )\nNodes: ( 2 ):\n0 0 0 1 1 0 RT_NODE cpu=1\n1 0 0 1 1 0 RT_NODE cpu=1\nEdges: ( 1 ):\n0 0 99 1.0 0.0 5 0 0 E_RT\n";
        let err = parse_brite(text).unwrap_err();
        assert_eq!(err, BriteError::Syntax { line: 6, msg: "unknown node 99".into() });
    }

    #[test]
    fn malformed_inputs() {
        assert!(parse_brite("Bogus: 1\n").is_err());
        let neg = "Topology: ( 1 Nodes, 0 Edges )\nNodes: ( 1 ):\n0 0 0 0 0 0 RT_NODE cpu=-1\nEdges: ( 0 ):\n";
        assert!(matches!(parse_brite(neg), Err(BriteError::Syntax { line: 3, .. })));
        let miscount = "Topology: ( 2 Nodes, 0 Edges )\nNodes: ( 1 ):\n0 0 0 0 0 0 RT_NODE cpu=1\nEdges: ( 0 ):\n";
        assert!(parse_brite(miscount).is_err());
        let nocpu = "Topology: ( 1 Nodes, 0 Edges )\nNodes: ( 1 ):\n0 0 0 0 0 0 RT_NODE 5\nEdges: ( 0 ):\n";
        assert!(parse_brite(nocpu).is_err());
    }

    #[test]
    fn accepts_model_line_and_sparse_ids() {
        let text = "Topology: ( 2 Nodes, 1 Edges )\nModel (1 - RTWaxman):  2 1000 100 1  2  0.15 0.2 1 1 10.0 1024.0\n\nNodes: ( 2 ):\n10 1 2 1 1 -1 RT_NODE cpu=7\n20 3 4 1 1 -1 RT_NODE cpu=8\n\nEdges: ( 1 ):\n0 20 10 2.8 0.01 12.5 -1 -1 E_RT\n";
        let vn = parse_virtual(text).unwrap();
        assert_eq!(vn.cpu(), &[7.0, 8.0]);
        assert_eq!(vn.demand(0, 1), 12.5);
    }

    #[test]
    fn generated_networks_round_trip() {
        for seed in 0..30 {
            let p = WaxmanParams { node_count: 12, link_count: 20, ..Default::default() };
            let net = waxman_generate(&p, seed).unwrap();
            assert_eq!(parse_substrate(&write_substrate(&net)).unwrap(), net);
            let vn = generate_vn_request(&VnParams::default(), seed).unwrap();
            assert_eq!(parse_virtual(&write_virtual(&vn)).unwrap(), vn);
        }
    }
}
