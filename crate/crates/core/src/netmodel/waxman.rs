use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{component_labels, NetError, SubstrateLink, SubstrateNetwork, SubstrateNode};
use crate::rng::{self, streams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaxmanParams {
    pub node_count: usize,
    pub link_count: usize,
    pub bw_low: f64,
    pub bw_high: f64,
    /// Node CPU drawn uniformly from these values (cores x MHz).
    pub cpu_options: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for WaxmanParams {
    fn default() -> Self {
        WaxmanParams {
            node_count: 100,
            link_count: 500,
            bw_low: 50.0,
            bw_high: 150.0,
            cpu_options: vec![2.0 * 1860.0, 2.0 * 2660.0],
            alpha: 0.15,
            beta: 0.2,
        }
    }
}

impl WaxmanParams {
    pub fn validate(&self) -> Result<(), NetError> {
        let n = self.node_count;
        if n < 2 {
            return Err(NetError::Parameter(format!("node_count {n} < 2")));
        }
        let max = n * (n - 1) / 2;
        if self.link_count < n - 1 || self.link_count > max {
            return Err(NetError::Parameter(format!(
                "link_count {} outside [{}, {max}] for {n} nodes",
                self.link_count,
                n - 1
            )));
        }
        if !(self.bw_low <= self.bw_high && self.bw_low >= 0.0) {
            return Err(NetError::Parameter("need 0 <= bw_low <= bw_high".into()));
        }
        if self.cpu_options.is_empty() {
            return Err(NetError::Parameter("empty cpu_options".into()));
        }
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err(NetError::Parameter("waxman alpha and beta must be positive".into()));
        }
        Ok(())
    }
}

/// Waxman random topology with exactly `link_count` links.
///
/// Nodes are placed uniformly in the unit square and links are drawn without
/// replacement with probability proportional to `alpha * exp(-d / (beta * L))`,
/// `L` the largest pairwise distance. Disconnected results are repaired by
/// trading a cycle link for a Waxman-weighted link between components.
pub fn waxman_generate(params: &WaxmanParams, seed: u64) -> Result<SubstrateNetwork, NetError> {
    params.validate()?;
    let n = params.node_count;
    let mut rng = rng::stream(seed, streams::TOPOLOGY);
    let pos: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen::<f64>(), rng.gen::<f64>())).collect();
    let dist = |a: usize, b: usize| {
        let (dx, dy) = (pos[a].0 - pos[b].0, pos[a].1 - pos[b].1);
        (dx * dx + dy * dy).sqrt()
    };
    let mut max_d = 0.0f64;
    for a in 0..n {
        for b in (a + 1)..n {
            max_d = max_d.max(dist(a, b));
        }
    }
    let max_d = max_d.max(f64::MIN_POSITIVE);
    let weight = |a: usize, b: usize| {
        (params.alpha * (-dist(a, b) / (params.beta * max_d)).exp()).max(1e-300)
    };

    let pairs: Vec<(usize, usize)> =
        (0..n).flat_map(|a| ((a + 1)..n).map(move |b| (a, b))).collect();
    let mut edges: Vec<(usize, usize)> = pairs
        .choose_multiple_weighted(&mut rng, params.link_count, |&(a, b)| weight(a, b))
        .map_err(|e| NetError::Generation(e.to_string()))?
        .copied()
        .collect();
    edges.sort_unstable();

    let max_repairs = n;
    for _ in 0..=max_repairs {
        let labels = component_labels(n, edges.iter().copied());
        if labels.iter().all(|&c| c == 0) {
            break;
        }
        // a link whose removal keeps its component intact
        let cycle_links: Vec<usize> = (0..edges.len())
            .filter(|&i| {
                let (a, b) = edges[i];
                let rest = edges
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &e)| e);
                let l = component_labels(n, rest);
                l[a] == l[b]
            })
            .collect();
        let Some(&drop) = cycle_links.choose(&mut rng) else {
            return Err(NetError::Generation("no removable link for connectivity repair".into()));
        };
        edges.remove(drop);
        let bridges: Vec<(usize, usize)> = pairs
            .iter()
            .copied()
            .filter(|&(a, b)| labels[a] != labels[b] && (labels[a] == 0 || labels[b] == 0))
            .collect();
        let &(a, b) = bridges
            .choose_weighted(&mut rng, |&(a, b)| weight(a, b))
            .map_err(|e| NetError::Generation(e.to_string()))?;
        edges.push((a, b));
        edges.sort_unstable();
    }
    if !super::is_connected(n, edges.iter().copied()) {
        return Err(NetError::Generation(format!(
            "not connected after {max_repairs} repairs"
        )));
    }

    let nodes = pos
        .iter()
        .map(|&(x, y)| SubstrateNode { cpu: *params.cpu_options.choose(&mut rng).unwrap(), x, y })
        .collect();
    let links = edges
        .into_iter()
        .map(|(a, b)| SubstrateLink {
            a,
            b,
            bandwidth: if params.bw_low == params.bw_high {
                params.bw_low
            } else {
                rng.gen_range(params.bw_low..params.bw_high)
            },
        })
        .collect();
    SubstrateNetwork::new(nodes, links)
}
