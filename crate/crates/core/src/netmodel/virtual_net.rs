use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{component_labels, NetError};
use crate::rng::{self, streams};

/// A virtual network request: CPU demand per node and a symmetric bandwidth
/// demand matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualNetwork {
    pub id: u64,
    cpu: Vec<f64>,
    demand: Vec<Vec<f64>>,
    pub arrival: f64,
    pub lifetime: f64,
}

impl VirtualNetwork {
    pub fn new(cpu: Vec<f64>, demand: Vec<Vec<f64>>) -> Result<Self, NetError> {
        let n = cpu.len();
        if n == 0 {
            return Err(NetError::Invalid("virtual network needs at least one node".into()));
        }
        if demand.len() != n || demand.iter().any(|row| row.len() != n) {
            return Err(NetError::Invalid(format!("demand matrix must be {n}x{n}")));
        }
        if let Some(c) = cpu.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(NetError::Invalid(format!("invalid cpu demand {c}")));
        }
        for i in 0..n {
            if demand[i][i] != 0.0 {
                return Err(NetError::Invalid(format!("self demand on node {i}")));
            }
            for j in 0..n {
                let b = demand[i][j];
                if !(b.is_finite() && b >= 0.0) {
                    return Err(NetError::Invalid(format!("invalid demand {b} on ({i},{j})")));
                }
                if b != demand[j][i] {
                    return Err(NetError::Invalid(format!("asymmetric demand on ({i},{j})")));
                }
            }
        }
        Ok(VirtualNetwork { id: 0, cpu, demand, arrival: 0.0, lifetime: 0.0 })
    }

    /// Builds from an edge list `(i, j, bandwidth)`.
    pub fn from_links(cpu: Vec<f64>, links: &[(usize, usize, f64)]) -> Result<Self, NetError> {
        let n = cpu.len();
        let mut demand = vec![vec![0.0; n]; n];
        for &(i, j, b) in links {
            if i >= n || j >= n || i == j {
                return Err(NetError::Invalid(format!("bad virtual link ({i},{j})")));
            }
            demand[i][j] = b;
            demand[j][i] = b;
        }
        Self::new(cpu, demand)
    }

    pub fn with_id(mut self, id: u64) -> Self {
        self.id = id;
        self
    }

    pub fn node_count(&self) -> usize {
        self.cpu.len()
    }

    pub fn cpu(&self) -> &[f64] {
        &self.cpu
    }

    pub fn demand(&self, i: usize, j: usize) -> f64 {
        self.demand[i][j]
    }

    pub fn demand_matrix(&self) -> &[Vec<f64>] {
        &self.demand
    }

    /// Links with positive demand, `i < j`.
    pub fn links(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.node_count();
        (0..n).flat_map(move |i| {
            ((i + 1)..n).filter_map(move |j| {
                let b = self.demand[i][j];
                (b > 0.0).then_some((i, j, b))
            })
        })
    }

    pub fn total_cpu(&self) -> f64 {
        self.cpu.iter().sum()
    }

    pub fn total_bandwidth(&self) -> f64 {
        self.links().map(|(_, _, b)| b).sum()
    }

    /// Requested resources (CPU plus bandwidth, links counted once).
    pub fn revenue(&self) -> f64 {
        self.total_cpu() + self.total_bandwidth()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VnParams {
    pub size_low: usize,
    pub size_high: usize,
    pub connectivity: f64,
    pub cpu_set: Vec<f64>,
    pub bw_low: f64,
    pub bw_high: f64,
}

impl Default for VnParams {
    fn default() -> Self {
        VnParams {
            size_low: 2,
            size_high: 20,
            connectivity: 0.5,
            cpu_set: vec![2500.0, 2000.0, 1000.0, 500.0],
            bw_low: 1.0,
            bw_high: 50.0,
        }
    }
}

impl VnParams {
    pub fn validate(&self) -> Result<(), NetError> {
        if self.size_low < 1 || self.size_low > self.size_high {
            return Err(NetError::Parameter(format!(
                "need 1 <= size_low <= size_high, got {}..{}",
                self.size_low, self.size_high
            )));
        }
        if !(self.connectivity > 0.0 && self.connectivity <= 1.0) {
            return Err(NetError::Parameter(format!(
                "connectivity {} outside (0, 1]",
                self.connectivity
            )));
        }
        if self.cpu_set.is_empty() {
            return Err(NetError::Parameter("empty cpu set".into()));
        }
        if !(self.bw_low <= self.bw_high && self.bw_low >= 0.0) {
            return Err(NetError::Parameter("need 0 <= bw_low <= bw_high".into()));
        }
        Ok(())
    }

    /// Draws one request from `rng`.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Result<VirtualNetwork, NetError> {
        self.validate()?;
        let n = rng.gen_range(self.size_low..=self.size_high);
        let cpu: Vec<f64> = (0..n).map(|_| *self.cpu_set.choose(rng).unwrap()).collect();
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen::<f64>() < self.connectivity {
                    pairs.push((i, j));
                }
            }
        }
        // join components by a random node pair until connected
        loop {
            let labels = component_labels(n, pairs.iter().copied());
            let comps = labels.iter().copied().max().map_or(0, |m| m + 1);
            if comps <= 1 {
                break;
            }
            let in_first: Vec<usize> = (0..n).filter(|&v| labels[v] == 0).collect();
            let others: Vec<usize> = (0..n).filter(|&v| labels[v] != 0).collect();
            let a = *in_first.choose(rng).unwrap();
            let b = *others.choose(rng).unwrap();
            pairs.push((a.min(b), a.max(b)));
        }
        let links: Vec<(usize, usize, f64)> = pairs
            .into_iter()
            .map(|(i, j)| {
                let b = if self.bw_low == self.bw_high {
                    self.bw_low
                } else {
                    rng.gen_range(self.bw_low..self.bw_high)
                };
                (i, j, b)
            })
            .collect();
        VirtualNetwork::from_links(cpu, &links)
    }
}

/// One seeded request, drawn from the demands stream.
pub fn generate_vn_request(params: &VnParams, seed: u64) -> Result<VirtualNetwork, NetError> {
    let mut rng = rng::stream(seed, streams::DEMANDS);
    params.sample(&mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::is_connected;

    #[test]
    fn validation() {
        assert!(VirtualNetwork::new(vec![], vec![]).is_err());
        assert!(VirtualNetwork::new(vec![1.0, 1.0], vec![vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        assert!(VirtualNetwork::new(vec![1.0], vec![vec![1.0]]).is_err());
        let vn = VirtualNetwork::from_links(vec![1.0, 2.0, 3.0], &[(0, 1, 4.0), (2, 1, 5.0)]).unwrap();
        assert_eq!(vn.links().collect::<Vec<_>>(), vec![(0, 1, 4.0), (1, 2, 5.0)]);
        assert_eq!(vn.revenue(), 15.0);
    }

    #[test]
    fn single_node_request() {
        let p = VnParams { size_low: 1, size_high: 1, cpu_set: vec![500.0], ..Default::default() };
        let vn = generate_vn_request(&p, 3).unwrap();
        assert_eq!(vn.node_count(), 1);
        assert_eq!(vn.links().count(), 0);
        assert_eq!(vn.cpu(), &[500.0]);
    }

    #[test]
    fn full_connectivity_gives_triangle() {
        let p = VnParams {
            size_low: 3,
            size_high: 3,
            connectivity: 1.0,
            cpu_set: vec![1000.0],
            bw_low: 5.0,
            bw_high: 5.0,
        };
        let vn = generate_vn_request(&p, 11).unwrap();
        let links: Vec<_> = vn.links().collect();
        assert_eq!(links, vec![(0, 1, 5.0), (0, 2, 5.0), (1, 2, 5.0)]);
    }

    #[test]
    fn default_workload_shape_and_determinism() {
        let p = VnParams::default();
        let mut total_density = 0.0;
        let mut count = 0.0;
        for seed in 0..200 {
            let vn = generate_vn_request(&p, seed).unwrap();
            assert_eq!(vn, generate_vn_request(&p, seed).unwrap());
            let n = vn.node_count();
            assert!((2..=20).contains(&n));
            assert!(is_connected(n, vn.links().map(|(i, j, _)| (i, j))));
            assert!(vn.cpu().iter().all(|c| p.cpu_set.contains(c)));
            assert!(vn.links().all(|(_, _, b)| (1.0..50.0).contains(&b)));
            if n >= 6 {
                total_density += vn.links().count() as f64 / (n * (n - 1) / 2) as f64;
                count += 1.0;
            }
        }
        let mean = total_density / count;
        assert!((mean - 0.5).abs() < 0.06, "mean density {mean}");
    }

    #[test]
    fn bad_parameters() {
        let p = VnParams { size_low: 0, ..Default::default() };
        assert!(generate_vn_request(&p, 0).is_err());
        let p = VnParams { connectivity: 0.0, ..Default::default() };
        assert!(generate_vn_request(&p, 0).is_err());
    }
}
