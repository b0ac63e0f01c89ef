use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{from_units, SubstrateNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Resource {
    Node(usize),
    Link(usize),
}

impl fmt::Display for Resource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Resource::Node(n) => write!(f, "node {n}"),
            Resource::Link(l) => write!(f, "link {l}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AllocError {
    #[error("insufficient residual on {resource}: need {need}, free {free}")]
    Insufficient { resource: Resource, need: f64, free: f64 },
    #[error("unknown {0}")]
    Unknown(Resource),
    #[error("ledger already holds an entry for virtual network {0}")]
    Duplicate(u64),
}

/// Everything reserved on behalf of one accepted virtual network.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub vn_id: u64,
    /// Enhanced slot index to substrate node.
    pub node_map: Vec<usize>,
    /// `(substrate node, cpu units)`
    pub cpu: Vec<(usize, i64)>,
    /// `(substrate link, bandwidth units)`
    pub bw: Vec<(usize, i64)>,
}

impl LedgerEntry {
    pub fn total_cpu_units(&self) -> i64 {
        self.cpu.iter().map(|(_, u)| u).sum()
    }

    pub fn total_bw_units(&self) -> i64 {
        self.bw.iter().map(|(_, u)| u).sum()
    }

    fn aggregated(&self) -> BTreeMap<Resource, i64> {
        let mut agg: BTreeMap<Resource, i64> = BTreeMap::new();
        for &(n, u) in &self.cpu {
            *agg.entry(Resource::Node(n)).or_default() += u;
        }
        for &(l, u) in &self.bw {
            *agg.entry(Resource::Link(l)).or_default() += u;
        }
        agg
    }

    fn first_unit_order(&self) -> Vec<Resource> {
        let mut order = Vec::new();
        for &(n, _) in &self.cpu {
            order.push(Resource::Node(n));
        }
        for &(l, _) in &self.bw {
            order.push(Resource::Link(l));
        }
        order
    }
}

impl SubstrateNetwork {
    /// Reserves every amount in `entry`, or nothing at all.
    pub fn allocate(&mut self, entry: &LedgerEntry) -> Result<(), AllocError> {
        let agg = entry.aggregated();
        for res in entry.first_unit_order() {
            let need = agg[&res];
            let free = match res {
                Resource::Node(n) if n < self.node_count() => self.residual_cpu_units(n),
                Resource::Link(l) if l < self.link_count() => self.residual_bw_units(l),
                _ => return Err(AllocError::Unknown(res)),
            };
            if need > free {
                return Err(AllocError::Insufficient {
                    resource: res,
                    need: from_units(need),
                    free: from_units(free),
                });
            }
        }
        for (res, units) in agg {
            match res {
                Resource::Node(n) => self.cpu_free_mut()[n] -= units,
                Resource::Link(l) => self.bw_free_mut()[l] -= units,
            }
        }
        Ok(())
    }

    /// Returns the amounts of `entry` to the residuals.
    pub fn release(&mut self, entry: &LedgerEntry) {
        for &(n, u) in &entry.cpu {
            self.cpu_free_mut()[n] += u;
        }
        for &(l, u) in &entry.bw {
            self.bw_free_mut()[l] += u;
        }
        debug_assert!(self.residuals_within_capacity());
    }
}

/// Live allocations keyed by virtual network id.
#[derive(Debug, Clone, Default)]
pub struct AllocationLedger {
    entries: BTreeMap<u64, LedgerEntry>,
}

impl AllocationLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn commit(
        &mut self,
        substrate: &mut SubstrateNetwork,
        entry: LedgerEntry,
    ) -> Result<(), AllocError> {
        if self.entries.contains_key(&entry.vn_id) {
            return Err(AllocError::Duplicate(entry.vn_id));
        }
        substrate.allocate(&entry)?;
        self.entries.insert(entry.vn_id, entry);
        Ok(())
    }

    pub fn release(&mut self, substrate: &mut SubstrateNetwork, vn_id: u64) -> Option<LedgerEntry> {
        let entry = self.entries.remove(&vn_id)?;
        substrate.release(&entry);
        Some(entry)
    }

    pub fn get(&self, vn_id: u64) -> Option<&LedgerEntry> {
        self.entries.get(&vn_id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &LedgerEntry> {
        self.entries.values()
    }

    pub fn used_cpu_units(&self) -> i64 {
        self.entries.values().map(LedgerEntry::total_cpu_units).sum()
    }

    pub fn used_bw_units(&self) -> i64 {
        self.entries.values().map(LedgerEntry::total_bw_units).sum()
    }

    /// `capacity - residual == Σ ledger amounts` for every resource.
    pub fn conserves(&self, substrate: &SubstrateNetwork) -> bool {
        let mut cpu = vec![0i64; substrate.node_count()];
        let mut bw = vec![0i64; substrate.link_count()];
        for e in self.entries.values() {
            for &(n, u) in &e.cpu {
                cpu[n] += u;
            }
            for &(l, u) in &e.bw {
                bw[l] += u;
            }
        }
        (0..substrate.node_count()).all(|n| {
            substrate.cpu_capacity_units(n) - substrate.residual_cpu_units(n) == cpu[n]
        }) && (0..substrate.link_count())
            .all(|l| substrate.bw_capacity_units(l) - substrate.residual_bw_units(l) == bw[l])
    }
}
