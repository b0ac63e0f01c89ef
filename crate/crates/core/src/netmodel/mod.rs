//! Substrate and virtual network data model.

mod brite;
mod ledger;
mod substrate;
mod virtual_net;
mod waxman;

pub use brite::{
    parse_brite, parse_substrate, parse_virtual, write_substrate, write_virtual, BriteEdge,
    BriteError, BriteNode, BriteTopology,
};
pub use ledger::{AllocError, AllocationLedger, LedgerEntry, Resource};
pub use substrate::{SubstrateLink, SubstrateNetwork, SubstrateNode};
pub use virtual_net::{generate_vn_request, VirtualNetwork, VnParams};
pub use waxman::{waxman_generate, WaxmanParams};

use thiserror::Error;

/// Resource amounts are accounted in integer micro-units so that
/// allocate/release pairs are exact inverses.
pub const UNITS_PER_ONE: f64 = 1e6;

pub fn to_units(amount: f64) -> i64 {
    (amount * UNITS_PER_ONE).round() as i64
}

/// Rounds up, so a reservation never covers less than requested.
pub fn to_units_ceil(amount: f64) -> i64 {
    let scaled = amount * UNITS_PER_ONE;
    let r = scaled.round();
    // absorb representation noise before taking the ceiling
    if (scaled - r).abs() <= 1e-6 {
        r as i64
    } else {
        scaled.ceil() as i64
    }
}

pub fn from_units(units: i64) -> f64 {
    units as f64 / UNITS_PER_ONE
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("generation failed: {0}")]
    Generation(String),
    #[error("invalid network: {0}")]
    Invalid(String),
}

/// Breadth-first connectivity check over an edge list on `n` nodes.
pub fn is_connected(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> bool {
    component_labels(n, edges).iter().all(|&c| c == 0)
}

/// Component label per node, labels assigned in order of lowest node index.
pub(crate) fn component_labels(
    n: usize,
    edges: impl IntoIterator<Item = (usize, usize)>,
) -> Vec<usize> {
    let mut adj = vec![Vec::new(); n];
    for (a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        label[s] = next;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if label[v] == usize::MAX {
                    label[v] = next;
                    queue.push_back(v);
                }
            }
        }
        next += 1;
    }
    label
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_conversions() {
        assert_eq!(to_units(1.5), 1_500_000);
        assert_eq!(to_units_ceil(0.1 + 0.2), 300_000);
        assert_eq!(to_units_ceil(1.0000004), 1_000_001);
        assert_eq!(from_units(2_500_000), 2.5);
    }

    #[test]
    fn connectivity() {
        assert!(is_connected(3, [(0, 1), (1, 2)]));
        assert!(!is_connected(3, [(0, 1)]));
        assert!(is_connected(1, []));
    }
}
