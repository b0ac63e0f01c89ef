use std::collections::BTreeMap;
use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::netmodel::{from_units, SubstrateNetwork};

/// `η` mutually edge-disjoint paths between two substrate nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSet {
    pub from: usize,
    pub to: usize,
    /// Node sequences from `from` to `to`.
    pub paths: Vec<Vec<usize>>,
    /// Link ids along each path, parallel to `paths`.
    pub links: Vec<Vec<usize>>,
    /// Total hop count over all paths.
    pub length: usize,
    /// Smallest residual bandwidth over every link of every path, in units.
    pub band_units: i64,
}

impl PathSet {
    pub fn band(&self) -> f64 {
        from_units(self.band_units)
    }

    pub fn eta(&self) -> usize {
        self.paths.len()
    }

    /// Whether the paths are simple, run from `from` to `to`, follow existing
    /// links and share no link or intermediate node.
    pub fn is_valid(&self, substrate: &SubstrateNetwork) -> bool {
        let mut used = std::collections::HashSet::new();
        let mut inner = std::collections::HashSet::new();
        for nodes in &self.paths {
            if nodes.len() > 2 && !nodes[1..nodes.len() - 1].iter().all(|v| inner.insert(*v)) {
                return false;
            }
        }
        for (nodes, links) in self.paths.iter().zip(&self.links) {
            if nodes.first() != Some(&self.from) || nodes.last() != Some(&self.to) {
                return false;
            }
            if links.len() + 1 != nodes.len() {
                return false;
            }
            let mut seen = std::collections::HashSet::new();
            if !nodes.iter().all(|n| seen.insert(*n)) {
                return false;
            }
            for (w, &l) in nodes.windows(2).zip(links) {
                if l >= substrate.link_count() || !joins(substrate, l, w[0], w[1]) {
                    return false;
                }
                if !used.insert(l) {
                    return false;
                }
            }
        }
        self.length == self.links.iter().map(Vec::len).sum::<usize>()
    }
}

fn joins(s: &SubstrateNetwork, l: usize, a: usize, b: usize) -> bool {
    let link = s.link(l);
    (link.a == a && link.b == b) || (link.a == b && link.b == a)
}

const NO_LINK: usize = usize::MAX;

struct Arc {
    to: usize,
    cap: i32,
    cost: i32,
    link: usize,
}

/// Internally node-disjoint (hence edge-disjoint) paths of least total hop
/// count, found by successive shortest-path augmentation with every
/// intermediate node split into a unit-capacity arc. Links that failed or
/// have less than `min_band_units` free are skipped. `None` when fewer than
/// `eta` such paths exist.
pub fn disjoint_paths(
    substrate: &SubstrateNetwork,
    from: usize,
    to: usize,
    eta: usize,
    min_band_units: i64,
) -> Option<PathSet> {
    disjoint_paths_on(substrate, substrate.bw_free_units(), from, to, eta, min_band_units)
}

/// Like [`disjoint_paths`] but judges bandwidth against `free` (units per
/// link) instead of the substrate's own residuals.
pub fn disjoint_paths_on(
    substrate: &SubstrateNetwork,
    free: &[i64],
    from: usize,
    to: usize,
    eta: usize,
    min_band_units: i64,
) -> Option<PathSet> {
    assert!(from != to, "endpoints must differ");
    assert!(eta >= 1, "need at least one path");
    let n = substrate.node_count();
    if substrate.node_failed(from) || substrate.node_failed(to) {
        return None;
    }
    // Node v enters at v and leaves at v + n. Arc 2e and 2e+1 are a residual pair.
    let mut arcs: Vec<Arc> = Vec::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); 2 * n];
    let add = |arcs: &mut Vec<Arc>, adj: &mut Vec<Vec<usize>>, a: usize, b: usize, cap: i32, cost: i32, link: usize| {
        adj[a].push(arcs.len());
        arcs.push(Arc { to: b, cap, cost, link });
        adj[b].push(arcs.len());
        arcs.push(Arc { to: a, cap: 0, cost: -cost, link });
    };
    for v in 0..n {
        if substrate.node_failed(v) {
            continue;
        }
        let cap = if v == from || v == to { eta as i32 } else { 1 };
        add(&mut arcs, &mut adj, v, v + n, cap, 0, NO_LINK);
    }
    for (id, l) in substrate.links().iter().enumerate() {
        if substrate.link_failed(id) || free[id] < min_band_units {
            continue;
        }
        add(&mut arcs, &mut adj, l.a + n, l.b, 1, 1, id);
        add(&mut arcs, &mut adj, l.b + n, l.a, 1, 1, id);
    }
    let (src, dst) = (from + n, to);
    for _ in 0..eta {
        // Bellman-Ford with a queue; residual costs may be negative.
        let mut dist = vec![i32::MAX; 2 * n];
        let mut via = vec![usize::MAX; 2 * n];
        let mut queued = vec![false; 2 * n];
        let mut q = VecDeque::new();
        dist[src] = 0;
        q.push_back(src);
        queued[src] = true;
        while let Some(u) = q.pop_front() {
            queued[u] = false;
            for &a in &adj[u] {
                let arc = &arcs[a];
                if arc.cap > 0 && dist[u] + arc.cost < dist[arc.to] {
                    dist[arc.to] = dist[u] + arc.cost;
                    via[arc.to] = a;
                    if !queued[arc.to] {
                        queued[arc.to] = true;
                        q.push_back(arc.to);
                    }
                }
            }
        }
        if dist[dst] == i32::MAX {
            return None;
        }
        let mut v = dst;
        while v != src {
            let a = via[v];
            arcs[a].cap -= 1;
            arcs[a ^ 1].cap += 1;
            v = arcs[a ^ 1].to;
        }
    }
    // Saturated forward link arcs carry one unit each, keyed by substrate node.
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, arc) in arcs.iter().enumerate() {
        if i % 2 == 0 && arc.link != NO_LINK && arc.cap == 0 {
            out[arcs[i ^ 1].to - n].push(i);
        }
    }
    // Opposite orientations of one link cancel.
    for u in 0..n {
        let mine = out[u].clone();
        for a in mine {
            let (v, link) = (arcs[a].to, arcs[a].link);
            if let Some(pos) = out[v].iter().position(|&b| arcs[b].link == link && arcs[b].to == u) {
                out[v].remove(pos);
                out[u].retain(|&b| b != a);
            }
        }
    }
    let mut paths = Vec::with_capacity(eta);
    let mut links = Vec::with_capacity(eta);
    for _ in 0..eta {
        let mut nodes = vec![from];
        let mut ls = Vec::new();
        let mut u = from;
        while u != to {
            let a = out[u].pop()?;
            ls.push(arcs[a].link);
            u = arcs[a].to;
            // Cut any loop so the path stays simple.
            if let Some(pos) = nodes.iter().position(|&x| x == u) {
                nodes.truncate(pos + 1);
                ls.truncate(pos);
            } else {
                nodes.push(u);
            }
        }
        paths.push(nodes);
        links.push(ls);
    }
    let length = links.iter().map(Vec::len).sum();
    let band_units = links.iter().flatten().map(|&l| free[l]).min().unwrap_or(i64::MAX);
    Some(PathSet { from, to, paths, links, length, band_units })
}

/// Path sets for unordered substrate node pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PathTable {
    sets: BTreeMap<(usize, usize), PathSet>,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl PathTable {
    pub fn get(&self, a: usize, b: usize) -> Option<&PathSet> {
        self.sets.get(&key(a, b))
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &PathSet> {
        self.sets.values()
    }

    pub fn insert(&mut self, set: PathSet) {
        self.sets.insert(key(set.from, set.to), set);
    }
}

/// Computes a path set for every pair (in parallel) against current residuals.
/// Pairs without `eta` disjoint paths are simply absent from the table.
pub fn build_path_table(
    substrate: &SubstrateNetwork,
    pairs: &[(usize, usize)],
    eta: usize,
    min_band_units: i64,
) -> PathTable {
    let mut keys: Vec<(usize, usize)> = pairs.iter().filter(|(a, b)| a != b).map(|&(a, b)| key(a, b)).collect();
    keys.sort_unstable();
    keys.dedup();
    let sets: Vec<PathSet> = keys
        .par_iter()
        .filter_map(|&(a, b)| disjoint_paths(substrate, a, b, eta, min_band_units))
        .collect();
    let mut t = PathTable::default();
    for s in sets {
        t.insert(s);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{SubstrateLink, SubstrateNode};

    pub(crate) fn graph(n: usize, edges: &[(usize, usize)], bw: f64) -> SubstrateNetwork {
        let nodes = (0..n).map(|i| SubstrateNode { cpu: 100.0, x: i as f64, y: 0.0 }).collect();
        let links = edges.iter().map(|&(a, b)| SubstrateLink { a, b, bandwidth: bw }).collect();
        SubstrateNetwork::new(nodes, links).unwrap()
    }

    #[test]
    fn two_parallel_routes() {
        let g = graph(4, &[(0, 1), (1, 3), (0, 2), (2, 3)], 10.0);
        let p = disjoint_paths(&g, 0, 3, 2, 0).unwrap();
        assert_eq!(p.length, 4);
        assert!(p.is_valid(&g));
        assert_eq!(p.band(), 10.0);
        assert!(disjoint_paths(&g, 0, 3, 3, 0).is_none());
    }

    #[test]
    fn bridge_is_infeasible() {
        // Two triangles joined by the bridge 2-3.
        let g = graph(6, &[(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (4, 5), (5, 3)], 10.0);
        assert!(disjoint_paths(&g, 0, 4, 2, 0).is_none());
        assert!(disjoint_paths(&g, 0, 1, 2, 0).is_some());
    }

    #[test]
    fn needs_rerouting_of_the_first_path() {
        // The shortest path 0-1-2-3 blocks a second path unless it is undone.
        let g = graph(6, &[(0, 1), (1, 2), (2, 3), (0, 4), (4, 2), (1, 5), (5, 3)], 1.0);
        let p = disjoint_paths(&g, 0, 3, 2, 0).unwrap();
        assert!(p.is_valid(&g));
        assert_eq!(p.length, 6);
    }

    #[test]
    fn shared_transit_node_is_not_enough() {
        // Two edge-disjoint routes exist but both cross node 1.
        let g = graph(7, &[(0, 2), (2, 1), (0, 3), (3, 1), (1, 5), (5, 4), (1, 6), (6, 4)], 10.0);
        assert!(disjoint_paths(&g, 0, 4, 2, 0).is_none());
        assert!(disjoint_paths(&g, 0, 1, 2, 0).is_some_and(|p| p.is_valid(&g)));
    }

    #[test]
    fn band_filter_and_failures() {
        let mut g = graph(4, &[(0, 1), (1, 3), (0, 2), (2, 3)], 10.0);
        assert!(disjoint_paths(&g, 0, 3, 2, crate::netmodel::to_units(11.0)).is_none());
        g.mark_link_failed(0);
        assert!(disjoint_paths(&g, 0, 3, 2, 0).is_none());
        assert!(disjoint_paths(&g, 0, 3, 1, 0).is_some());
    }

    #[test]
    fn table_matches_direct_calls() {
        let g = graph(4, &[(0, 1), (1, 3), (0, 2), (2, 3), (1, 2)], 10.0);
        assert!(build_path_table(&g, &[], 2, 0).is_empty());
        let t = build_path_table(&g, &[(0, 3), (3, 0), (1, 2), (0, 0)], 2, 0);
        assert_eq!(t.len(), 2);
        assert_eq!(t.get(3, 0), disjoint_paths(&g, 0, 3, 2, 0).as_ref());
        assert_eq!(t.get(1, 2), disjoint_paths(&g, 1, 2, 2, 0).as_ref());
    }
}
