//! Failure-dependent protection: one backup slot, a recovery plan per node
//! failure, and the smallest CPU/bandwidth envelope that hosts every plan.

mod brute;
mod lp;
mod plan;

use std::fmt;

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::max_weight_assignment;
use crate::cnd::{cnd_solve, CndConfig, CndReport, Rounder};
use crate::netmodel::VirtualNetwork;
use crate::neurolp::{LpError, SolverConfig};

pub use brute::{brute_force_enhance, BRUTE_FORCE_MAX_NODES};
pub use lp::{build_enhancement_lp, EnhancementLayout};
pub use plan::{
    deepen_plans, envelope, envelope_objective, improve_plans, padded_cpu, padded_demand, plan_is_valid,
    plans_objective, scenario_allocation, scenario_bandwidth, scenario_cpu, swap_plan,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnhanceError {
    #[error("scenario {k} out of range for {n} nodes")]
    Scenario { k: usize, n: usize },
    #[error("brute force refuses {n} nodes (limit {limit})")]
    TooLarge { n: usize, limit: usize },
    #[error("document does not match the virtual network: {0}")]
    Document(String),
    #[error(transparent)]
    Solver(#[from] LpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanSource {
    Swarm,
    Fip,
    /// Swap plans improved by pairwise-swap local search.
    Polished,
    BruteForce,
}

/// A virtual network with one backup slot (index `n`) and its recovery plans.
#[derive(Debug, Clone, PartialEq)]
pub struct EnhancedVn {
    pub base: VirtualNetwork,
    pub alpha: f64,
    /// CPU per slot, length `n + 1`.
    pub c_e: Vec<f64>,
    /// Symmetric bandwidth between slots, `(n + 1) × (n + 1)`.
    pub b_e: Vec<Vec<f64>>,
    /// `plans[k]` recovers from the failure of slot `k`.
    pub plans: Vec<Vec<usize>>,
    pub source: PlanSource,
    /// Raised when the swarm produced nothing usable and FIP plans were kept.
    pub fallback: bool,
}

impl EnhancedVn {
    /// Envelope of `plans` over `base`, which is tight by construction.
    pub fn from_plans(base: &VirtualNetwork, alpha: f64, plans: Vec<Vec<usize>>, source: PlanSource) -> Self {
        let (c_e, b_e) = envelope(&padded_cpu(base), &padded_demand(base), &plans);
        EnhancedVn { base: base.clone(), alpha, c_e, b_e, plans, source, fallback: false }
    }

    pub fn slots(&self) -> usize {
        self.c_e.len()
    }

    pub fn objective(&self) -> f64 {
        envelope_objective(&self.c_e, &self.b_e, self.alpha)
    }

    /// Slot pairs `(i, j)`, `i < j`, with positive bandwidth.
    pub fn links(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let s = self.slots();
        (0..s).flat_map(move |i| (i + 1..s).map(move |j| (i, j))).filter_map(|(i, j)| {
            let b = self.b_e[i][j];
            (b > 0.0).then_some((i, j, b))
        })
    }

    pub fn to_document(&self) -> EnhancedDocument {
        let s = self.slots();
        EnhancedDocument {
            vn_id: self.base.id,
            nodes: self.base.node_count(),
            alpha: self.alpha,
            objective: self.objective(),
            c_e: self.c_e.clone(),
            b_e_upper: (0..s).map(|i| self.b_e[i][i + 1..].to_vec()).collect(),
            plans: self.plans.clone(),
            source: self.source,
            fallback: self.fallback,
        }
    }

    /// Rebuilds from a document; the base network must match its id and size.
    pub fn from_document(doc: &EnhancedDocument, base: &VirtualNetwork) -> Result<Self, EnhanceError> {
        let n = base.node_count();
        if doc.vn_id != base.id || doc.nodes != n {
            return Err(EnhanceError::Document(format!(
                "document is for vn {} with {} nodes",
                doc.vn_id, doc.nodes
            )));
        }
        let s = n + 1;
        if doc.c_e.len() != s || doc.b_e_upper.len() != s || doc.plans.len() != n {
            return Err(EnhanceError::Document("wrong vector lengths".into()));
        }
        let mut b_e = vec![vec![0.0; s]; s];
        for (i, row) in doc.b_e_upper.iter().enumerate() {
            if row.len() != s - i - 1 {
                return Err(EnhanceError::Document(format!("b_e row {i} has {} entries", row.len())));
            }
            for (o, &v) in row.iter().enumerate() {
                b_e[i][i + 1 + o] = v;
                b_e[i + 1 + o][i] = v;
            }
        }
        Ok(EnhancedVn {
            base: base.clone(),
            alpha: doc.alpha,
            c_e: doc.c_e.clone(),
            b_e,
            plans: doc.plans.clone(),
            source: doc.source,
            fallback: doc.fallback,
        })
    }
}

/// Serialized form: the base network by id, `b_e` as its strict upper triangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnhancedDocument {
    pub vn_id: u64,
    pub nodes: usize,
    pub alpha: f64,
    pub objective: f64,
    pub c_e: Vec<f64>,
    pub b_e_upper: Vec<Vec<f64>>,
    pub plans: Vec<Vec<usize>>,
    pub source: PlanSource,
    pub fallback: bool,
}

/// FIP: every failure is recovered by swapping in the backup.
pub fn fip_enhance(vn: &VirtualNetwork, alpha: f64) -> EnhancedVn {
    let n = vn.node_count();
    let plans = (0..n).map(|k| swap_plan(n, k)).collect();
    EnhancedVn::from_plans(vn, alpha, plans, PlanSource::Fip)
}

/// Resources after the failure of slot `k` under its stored plan.
#[derive(Debug, Clone, PartialEq)]
pub struct Recovery {
    /// Original node hosted by each slot.
    pub allocation: Vec<Option<usize>>,
    pub cpu: Vec<f64>,
    pub bandwidth: Vec<Vec<f64>>,
}

pub fn apply_recovery(enhanced: &EnhancedVn, k: usize) -> Result<Recovery, EnhanceError> {
    let n = enhanced.base.node_count();
    if k >= n {
        return Err(EnhanceError::Scenario { k, n });
    }
    let p = &enhanced.plans[k];
    Ok(Recovery {
        allocation: scenario_allocation(n, p),
        cpu: scenario_cpu(&padded_cpu(&enhanced.base), p),
        bandwidth: scenario_bandwidth(&padded_demand(&enhanced.base), p),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Initial,
    Failure(usize),
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scenario::Initial => f.write_str("initial allocation"),
            Scenario::Failure(k) => write!(f, "failure of slot {k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Violation {
    #[error("expected {expected} plans, found {found}")]
    PlanCount { expected: usize, found: usize },
    #[error("envelope has the wrong shape")]
    Shape,
    #[error("plan {k} is not a permutation pinning the backup to slot {k}")]
    InvalidPlan { k: usize },
    #[error("bandwidth between slots {i} and {j} is not symmetric")]
    Asymmetric { i: usize, j: usize },
    #[error("{scenario}: slot {slot} needs CPU {need} but the envelope has {have}")]
    Cpu { scenario: Scenario, slot: usize, need: f64, have: f64 },
    #[error("{scenario}: slots {i}-{j} need bandwidth {need} but the envelope has {have}")]
    Bandwidth { scenario: Scenario, i: usize, j: usize, need: f64, have: f64 },
}

/// Checks every invariant of an enhanced network and names the first breach.
pub fn verify_restorability(e: &EnhancedVn) -> Result<(), Violation> {
    let n = e.base.node_count();
    let s = n + 1;
    if e.plans.len() != n {
        return Err(Violation::PlanCount { expected: n, found: e.plans.len() });
    }
    if e.c_e.len() != s || e.b_e.len() != s || e.b_e.iter().any(|r| r.len() != s) {
        return Err(Violation::Shape);
    }
    for (k, p) in e.plans.iter().enumerate() {
        if !plan_is_valid(p, n, k) {
            return Err(Violation::InvalidPlan { k });
        }
    }
    for i in 0..s {
        for j in i + 1..s {
            if e.b_e[i][j] != e.b_e[j][i] {
                return Err(Violation::Asymmetric { i, j });
            }
        }
    }
    let c0 = padded_cpu(&e.base);
    let b0 = padded_demand(&e.base);
    let identity: Vec<usize> = (0..s).collect();
    let scenarios = std::iter::once((Scenario::Initial, &identity))
        .chain(e.plans.iter().enumerate().map(|(k, p)| (Scenario::Failure(k), p)));
    for (scenario, p) in scenarios {
        let c = scenario_cpu(&c0, p);
        for slot in 0..s {
            if c[slot] > e.c_e[slot] {
                return Err(Violation::Cpu { scenario, slot, need: c[slot], have: e.c_e[slot] });
            }
        }
        let b = scenario_bandwidth(&b0, p);
        for i in 0..s {
            for j in i + 1..s {
                if b[i][j] > e.b_e[i][j] {
                    return Err(Violation::Bandwidth { scenario, i, j, need: b[i][j], have: e.b_e[i][j] });
                }
            }
        }
    }
    Ok(())
}

/// Rounds the relaxed plan matrices by a pinned maximum-weight assignment per
/// scenario, then polishes the plans with pairwise swaps on the exact envelope.
pub struct PlanRounder {
    layout: EnhancementLayout,
    c0: Vec<f64>,
    b0: Vec<Vec<f64>>,
    alpha: f64,
}

impl PlanRounder {
    pub fn new(vn: &VirtualNetwork, alpha: f64) -> Self {
        PlanRounder {
            layout: EnhancementLayout { n: vn.node_count() },
            c0: padded_cpu(vn),
            b0: padded_demand(vn),
            alpha,
        }
    }

    /// Plans read off the relaxed `X` blocks, before local search.
    pub fn assign(&self, z: &[f64]) -> Vec<Vec<usize>> {
        let n = self.layout.n;
        let s = n + 1;
        (0..n)
            .map(|k| {
                let w: Vec<Vec<f64>> = (0..s)
                    .map(|i| {
                        (0..s)
                            .map(|j| {
                                if (i == n) != (j == k) {
                                    f64::NEG_INFINITY
                                } else {
                                    z[self.layout.x(k, i, j)]
                                }
                            })
                            .collect()
                    })
                    .collect();
                max_weight_assignment(&w).expect("pinned assignment always exists")
            })
            .collect()
    }
}

impl Rounder<f64> for PlanRounder {
    type Solution = Vec<Vec<usize>>;

    fn relaxed(&self) -> std::ops::Range<usize> {
        self.layout.binaries()
    }

    fn round(&self, z: &[f64]) -> Option<(Vec<Vec<usize>>, f64)> {
        let mut plans = self.assign(z);
        let v = improve_plans(&self.c0, &self.b0, &mut plans, self.alpha);
        Some((plans, v))
    }
}

/// Enhances `vn` with the collective solver. The result is never worse than
/// FIP: when the swarm's plans cost more, the FIP plans are kept instead.
pub fn enhance_vn(
    vn: &VirtualNetwork,
    alpha: f64,
    solver: &SolverConfig,
    cnd: &CndConfig,
) -> Result<EnhancedVn, EnhanceError> {
    Ok(enhance_vn_with_report(vn, alpha, solver, cnd)?.0)
}

pub fn enhance_vn_with_report(
    vn: &VirtualNetwork,
    alpha: f64,
    solver: &SolverConfig,
    cnd: &CndConfig,
) -> Result<(EnhancedVn, CndReport), EnhanceError> {
    let (lp, _) = build_enhancement_lp::<f64>(vn, alpha);
    let rounder = PlanRounder::new(vn, alpha);
    let out = cnd_solve(&lp, cnd, solver, &rounder)?;
    // The swarm competes against swap plans, raw and locally polished.
    let fip = fip_enhance(vn, alpha);
    let (c0, b0) = (padded_cpu(vn), padded_demand(vn));
    let mut polished = fip.plans.clone();
    deepen_plans(&c0, &b0, &mut polished, alpha);
    let polished = EnhancedVn::from_plans(vn, alpha, polished, PlanSource::Polished);
    let baseline = if polished.objective() < fip.objective() { polished } else { fip };
    let mut result = match out.solution {
        Some(mut plans) => {
            deepen_plans(&c0, &b0, &mut plans, alpha);
            let e = EnhancedVn::from_plans(vn, alpha, plans, PlanSource::Swarm);
            if e.objective() <= baseline.objective() {
                e
            } else {
                baseline
            }
        }
        None => {
            warn!("enhancement of vn {} fell back to swap plans", vn.id);
            EnhancedVn { fallback: true, ..baseline }
        }
    };
    result.fallback |= out.report.fallback;
    Ok((result, out.report))
}
