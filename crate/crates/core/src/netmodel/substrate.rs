use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{from_units, to_units, NetError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubstrateNode {
    /// CPU capacity (MIPS-equivalent).
    pub cpu: f64,
    /// Plane coordinates used by the Waxman generator.
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubstrateLink {
    pub a: usize,
    pub b: usize,
    pub bandwidth: f64,
}

impl SubstrateLink {
    pub fn other(&self, end: usize) -> usize {
        if end == self.a {
            self.b
        } else {
            self.a
        }
    }
}

/// Undirected simple graph with CPU on nodes, bandwidth on links and exact
/// residual bookkeeping.
#[derive(Debug, Clone)]
pub struct SubstrateNetwork {
    nodes: Vec<SubstrateNode>,
    links: Vec<SubstrateLink>,
    adjacency: Vec<Vec<(usize, usize)>>,
    link_index: HashMap<(usize, usize), usize>,
    cpu_cap: Vec<i64>,
    bw_cap: Vec<i64>,
    cpu_free: Vec<i64>,
    bw_free: Vec<i64>,
    node_failed: Vec<bool>,
    link_failed: Vec<bool>,
}

impl PartialEq for SubstrateNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes
            && self.links == other.links
            && self.cpu_free == other.cpu_free
            && self.bw_free == other.bw_free
    }
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl SubstrateNetwork {
    pub fn new(nodes: Vec<SubstrateNode>, links: Vec<SubstrateLink>) -> Result<Self, NetError> {
        let n = nodes.len();
        for (i, node) in nodes.iter().enumerate() {
            if !(node.cpu.is_finite() && node.cpu >= 0.0) {
                return Err(NetError::Invalid(format!("node {i} has invalid cpu {}", node.cpu)));
            }
        }
        let mut adjacency = vec![Vec::new(); n];
        let mut link_index = HashMap::with_capacity(links.len());
        for (id, l) in links.iter().enumerate() {
            if l.a >= n || l.b >= n {
                return Err(NetError::Invalid(format!("link {id} references unknown node")));
            }
            if l.a == l.b {
                return Err(NetError::Invalid(format!("link {id} is a self-loop")));
            }
            if !(l.bandwidth.is_finite() && l.bandwidth >= 0.0) {
                return Err(NetError::Invalid(format!(
                    "link {id} has invalid bandwidth {}",
                    l.bandwidth
                )));
            }
            if link_index.insert(key(l.a, l.b), id).is_some() {
                return Err(NetError::Invalid(format!(
                    "duplicate link between {} and {}",
                    l.a, l.b
                )));
            }
            adjacency[l.a].push((l.b, id));
            adjacency[l.b].push((l.a, id));
        }
        let cpu_cap: Vec<i64> = nodes.iter().map(|v| to_units(v.cpu)).collect();
        let bw_cap: Vec<i64> = links.iter().map(|l| to_units(l.bandwidth)).collect();
        Ok(SubstrateNetwork {
            node_failed: vec![false; n],
            link_failed: vec![false; links.len()],
            cpu_free: cpu_cap.clone(),
            bw_free: bw_cap.clone(),
            cpu_cap,
            bw_cap,
            nodes,
            links,
            adjacency,
            link_index,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn nodes(&self) -> &[SubstrateNode] {
        &self.nodes
    }

    pub fn links(&self) -> &[SubstrateLink] {
        &self.links
    }

    pub fn link(&self, id: usize) -> &SubstrateLink {
        &self.links[id]
    }

    /// `(neighbor, link id)` pairs incident to `node`.
    pub fn neighbors(&self, node: usize) -> &[(usize, usize)] {
        &self.adjacency[node]
    }

    pub fn link_between(&self, a: usize, b: usize) -> Option<usize> {
        self.link_index.get(&key(a, b)).copied()
    }

    pub fn is_connected(&self) -> bool {
        super::is_connected(self.nodes.len(), self.links.iter().map(|l| (l.a, l.b)))
    }

    pub fn residual_cpu(&self, node: usize) -> f64 {
        from_units(self.cpu_free[node])
    }

    pub fn residual_bw(&self, link: usize) -> f64 {
        from_units(self.bw_free[link])
    }

    pub fn residual_cpu_units(&self, node: usize) -> i64 {
        self.cpu_free[node]
    }

    pub fn residual_bw_units(&self, link: usize) -> i64 {
        self.bw_free[link]
    }

    pub fn cpu_capacity_units(&self, node: usize) -> i64 {
        self.cpu_cap[node]
    }

    pub fn bw_capacity_units(&self, link: usize) -> i64 {
        self.bw_cap[link]
    }

    pub fn total_cpu_units(&self) -> i64 {
        self.cpu_cap.iter().sum()
    }

    pub fn total_bw_units(&self) -> i64 {
        self.bw_cap.iter().sum()
    }

    pub fn used_cpu_units(&self) -> i64 {
        self.cpu_cap.iter().zip(&self.cpu_free).map(|(c, f)| c - f).sum()
    }

    pub fn used_bw_units(&self) -> i64 {
        self.bw_cap.iter().zip(&self.bw_free).map(|(c, f)| c - f).sum()
    }

    /// Residual CPU times the residual bandwidth adjacent to the node.
    pub fn node_score(&self, node: usize) -> f64 {
        let bw: f64 = self.adjacency[node]
            .iter()
            .filter(|&&(_, l)| !self.link_failed[l])
            .map(|&(_, l)| self.residual_bw(l))
            .sum();
        self.residual_cpu(node) * bw
    }

    pub(crate) fn cpu_free_mut(&mut self) -> &mut [i64] {
        &mut self.cpu_free
    }

    pub(crate) fn bw_free_mut(&mut self) -> &mut [i64] {
        &mut self.bw_free
    }

    /// Snapshot of residual bandwidth units, indexed by link id.
    pub fn bw_free_units(&self) -> &[i64] {
        &self.bw_free
    }

    pub fn residuals_within_capacity(&self) -> bool {
        self.cpu_free.iter().zip(&self.cpu_cap).all(|(f, c)| *f >= 0 && f <= c)
            && self.bw_free.iter().zip(&self.bw_cap).all(|(f, c)| *f >= 0 && f <= c)
    }

    pub fn mark_node_failed(&mut self, node: usize) {
        self.node_failed[node] = true;
        for &(_, l) in &self.adjacency[node] {
            self.link_failed[l] = true;
        }
    }

    pub fn mark_link_failed(&mut self, link: usize) {
        self.link_failed[link] = true;
    }

    pub fn node_failed(&self, node: usize) -> bool {
        self.node_failed[node]
    }

    pub fn link_failed(&self, link: usize) -> bool {
        self.link_failed[link]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(cpu: f64) -> SubstrateNode {
        SubstrateNode { cpu, x: 0.0, y: 0.0 }
    }

    #[test]
    fn rejects_self_loops_and_duplicates() {
        let nodes = vec![node(1.0), node(1.0)];
        let self_loop = vec![SubstrateLink { a: 0, b: 0, bandwidth: 1.0 }];
        assert!(SubstrateNetwork::new(nodes.clone(), self_loop).is_err());
        let dup = vec![
            SubstrateLink { a: 0, b: 1, bandwidth: 1.0 },
            SubstrateLink { a: 1, b: 0, bandwidth: 2.0 },
        ];
        assert!(SubstrateNetwork::new(nodes, dup).is_err());
    }

    #[test]
    fn lookup_and_adjacency() {
        let net = SubstrateNetwork::new(
            vec![node(10.0), node(20.0), node(30.0)],
            vec![
                SubstrateLink { a: 0, b: 1, bandwidth: 5.0 },
                SubstrateLink { a: 2, b: 1, bandwidth: 7.0 },
            ],
        )
        .unwrap();
        assert_eq!(net.link_between(1, 2), Some(1));
        assert_eq!(net.link_between(0, 2), None);
        assert_eq!(net.neighbors(1).len(), 2);
        assert_eq!(net.residual_cpu(2), 30.0);
        assert!(net.is_connected());
    }
}
