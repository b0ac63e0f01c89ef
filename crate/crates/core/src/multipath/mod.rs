//! Multi-path embedding of enhanced virtual networks.
//!
//! Each virtual link of demand `b` is carried by `η` node-disjoint substrate
//! paths reserving `b/(η−1)` each, so losing any one substrate link leaves at
//! least `b` in place.

mod paths;

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::max_weight_assignment;
use crate::cnd::{cnd_solve, CndConfig, CndReport, Rounder};
use crate::enhance::EnhancedVn;
use crate::netmodel::{to_units, AllocError, AllocationLedger, LedgerEntry, SubstrateNetwork};
use crate::neurolp::{GeneralFormLp, LpBuilder, LpError, SolverConfig};

pub use paths::{build_path_table, disjoint_paths, disjoint_paths_on, PathSet, PathTable};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbedError {
    #[error("invalid embedding configuration: {0}")]
    Config(String),
    #[error("no substrate node can host slot {slot}")]
    NoCandidates { slot: usize },
    #[error("no feasible node mapping found")]
    NoFeasibleMapping,
    #[error("slots {a} and {b} cannot be connected by {eta} disjoint paths")]
    NoPaths { a: usize, b: usize, eta: usize },
    #[error(transparent)]
    Allocation(#[from] AllocError),
    #[error(transparent)]
    Solver(#[from] LpError),
}

impl EmbedError {
    /// Whether this is an ordinary rejection of the request rather than a
    /// configuration or solver fault.
    pub fn is_rejection(&self) -> bool {
        !matches!(self, EmbedError::Config(_) | EmbedError::Solver(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingConfig {
    /// Disjoint paths per virtual link.
    pub eta: usize,
    /// Candidates per slot are `candidate_factor · (n + 1)`.
    pub candidate_factor: usize,
    /// Bound on local repair passes after rounding.
    pub repair_passes: usize,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig { eta: 3, candidate_factor: 2, repair_passes: 20 }
    }
}

impl EmbeddingConfig {
    pub fn validate(&self) -> Result<(), EmbedError> {
        if self.eta < 2 {
            return Err(EmbedError::Config(format!("eta must be at least 2, got {}", self.eta)));
        }
        if self.candidate_factor == 0 {
            return Err(EmbedError::Config("candidate_factor must be positive".into()));
        }
        Ok(())
    }
}

/// Units each of the `eta` paths reserves for a demand of `demand_units`.
pub fn per_path_units(demand_units: i64, eta: usize) -> i64 {
    let d = (eta - 1) as i64;
    (demand_units + d - 1) / d
}

/// Virtual links of the enhanced network as `(slot a, slot b, demand units)`.
pub fn virtual_links(enh: &EnhancedVn) -> Vec<(usize, usize, i64)> {
    enh.links().map(|(i, j, b)| (i, j, to_units(b))).collect()
}

/// For each slot, the CPU-feasible live substrate nodes with the largest
/// residual CPU × adjacent residual bandwidth, at most `limit` of them.
pub fn select_candidates(
    substrate: &SubstrateNetwork,
    enh: &EnhancedVn,
    limit: usize,
) -> Result<Vec<Vec<usize>>, EmbedError> {
    let mut ranked: Vec<usize> = (0..substrate.node_count()).filter(|&v| !substrate.node_failed(v)).collect();
    let score: Vec<f64> = (0..substrate.node_count()).map(|v| substrate.node_score(v)).collect();
    ranked.sort_by(|&a, &b| score[b].total_cmp(&score[a]).then(a.cmp(&b)));
    enh.c_e
        .iter()
        .enumerate()
        .map(|(slot, &c)| {
            let need = to_units(c);
            let list: Vec<usize> =
                ranked.iter().copied().filter(|&v| substrate.residual_cpu_units(v) >= need).take(limit).collect();
            if list.is_empty() {
                Err(EmbedError::NoCandidates { slot })
            } else {
                Ok(list)
            }
        })
        .collect()
}

/// Substrate pairs the path table must cover.
pub fn candidate_pairs(enh: &EnhancedVn, candidates: &[Vec<usize>]) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for (i, j, _) in enh.links() {
        for &k in &candidates[i] {
            for &l in &candidates[j] {
                if k != l {
                    pairs.push((k.min(l), k.max(l)));
                }
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}

/// Variable positions of the embedding relaxation.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingLayout {
    /// `x[slot][c]` is the variable placing `slot` on `candidates[slot][c]`.
    pub x: Vec<Vec<usize>>,
    /// `(virtual link index, substrate k, substrate l, variable)`.
    pub y: Vec<(usize, usize, usize, usize)>,
    pub n_vars: usize,
}

/// Builds the relaxation over `(X, Y)`: unit assignment rows per slot, at most
/// one slot per substrate node, aggregated CPU rows, one unit of `Y` per
/// virtual link, and `y ≤ x` coupling on both ends. `Y` entries exist only for
/// pairs whose path set has enough band for `b/(η−1)`; they cost
/// `Length · b`.
pub fn build_embedding_lp(
    enh: &EnhancedVn,
    substrate: &SubstrateNetwork,
    eta: usize,
    table: &PathTable,
    candidates: &[Vec<usize>],
) -> Result<(GeneralFormLp<f64>, EmbeddingLayout), EmbedError> {
    if let Some(slot) = candidates.iter().position(Vec::is_empty) {
        return Err(EmbedError::NoCandidates { slot });
    }
    let mut next = 0;
    let x: Vec<Vec<usize>> = candidates
        .iter()
        .map(|c| {
            let ids = (next..next + c.len()).collect();
            next += c.len();
            ids
        })
        .collect();
    let links = virtual_links(enh);
    let mut y = Vec::new();
    for (li, &(i, j, b)) in links.iter().enumerate() {
        let per = per_path_units(b, eta);
        for &k in &candidates[i] {
            for &l in &candidates[j] {
                if k == l {
                    continue;
                }
                if table.get(k, l).is_some_and(|p| p.band_units >= per) {
                    y.push((li, k, l, next));
                    next += 1;
                }
            }
        }
    }
    let layout = EmbeddingLayout { x, y, n_vars: next };
    let mut lp = LpBuilder::<f64>::new(layout.n_vars, 0);
    for &(li, k, l, v) in &layout.y {
        let (_, _, b) = links[li];
        let len = table.get(k, l).map_or(0, |p| p.length);
        lp.set_cost(v, len as f64 * b as f64 / 1e6);
    }
    for xs in &layout.x {
        lp.add_eq(xs.iter().map(|&v| (v, 1.0)), 1.0);
    }
    let mut hosts: Vec<usize> = candidates.iter().flatten().copied().collect();
    hosts.sort_unstable();
    hosts.dedup();
    for &node in &hosts {
        let mut occupancy = Vec::new();
        let mut cpu = Vec::new();
        for (slot, c) in candidates.iter().enumerate() {
            if let Some(pos) = c.iter().position(|&v| v == node) {
                occupancy.push((layout.x[slot][pos], 1.0));
                cpu.push((layout.x[slot][pos], enh.c_e[slot]));
            }
        }
        lp.add_le(occupancy, 1.0);
        lp.add_le(cpu, substrate.residual_cpu(node));
    }
    for li in 0..links.len() {
        lp.add_eq(layout.y.iter().filter(|e| e.0 == li).map(|e| (e.3, 1.0)), 1.0);
    }
    let xvar = |slot: usize, node: usize| {
        let pos = candidates[slot].iter().position(|&v| v == node).expect("candidate");
        layout.x[slot][pos]
    };
    for &(li, k, l, v) in &layout.y {
        let (i, j, _) = links[li];
        lp.add_ge([(xvar(i, k), 1.0), (v, -1.0)], 0.0);
        lp.add_ge([(xvar(j, l), 1.0), (v, -1.0)], 0.0);
    }
    Ok((lp.build(), layout))
}

/// Everything needed to round, repair and price a node mapping.
pub struct EmbeddingProblem<'a> {
    pub enhanced: &'a EnhancedVn,
    pub substrate: &'a SubstrateNetwork,
    pub eta: usize,
    pub table: PathTable,
    pub candidates: Vec<Vec<usize>>,
    pub layout: EmbeddingLayout,
    pub lp: GeneralFormLp<f64>,
    pub repair_passes: usize,
    links: Vec<(usize, usize, i64)>,
}

impl<'a> EmbeddingProblem<'a> {
    pub fn new(
        enhanced: &'a EnhancedVn,
        substrate: &'a SubstrateNetwork,
        config: &EmbeddingConfig,
    ) -> Result<Self, EmbedError> {
        config.validate()?;
        let candidates = select_candidates(substrate, enhanced, config.candidate_factor * enhanced.slots())?;
        Self::with_candidates(enhanced, substrate, config, candidates)
    }

    /// Same as [`EmbeddingProblem::new`] with a caller-chosen candidate list.
    pub fn with_candidates(
        enhanced: &'a EnhancedVn,
        substrate: &'a SubstrateNetwork,
        config: &EmbeddingConfig,
        candidates: Vec<Vec<usize>>,
    ) -> Result<Self, EmbedError> {
        config.validate()?;
        let links = virtual_links(enhanced);
        let pers: Vec<i64> = links.iter().map(|l| per_path_units(l.2, config.eta)).collect();
        let pairs = candidate_pairs(enhanced, &candidates);
        let mut table = build_path_table(substrate, &pairs, config.eta, pers.iter().copied().max().unwrap_or(0));
        let smallest = pers.iter().copied().min().unwrap_or(0);
        if table.len() < pairs.len() {
            // Pairs that fail at the largest demand may still serve smaller ones.
            let missing: Vec<(usize, usize)> =
                pairs.iter().copied().filter(|&(a, b)| table.get(a, b).is_none()).collect();
            for p in build_path_table(substrate, &missing, config.eta, smallest).iter() {
                table.insert(p.clone());
            }
        }
        let (lp, layout) = build_embedding_lp(enhanced, substrate, config.eta, &table, &candidates)?;
        Ok(EmbeddingProblem {
            enhanced,
            substrate,
            eta: config.eta,
            table,
            candidates,
            layout,
            lp,
            repair_passes: config.repair_passes,
            links,
        })
    }

    /// `(violated virtual links, Σ Length · b)` of a node map.
    pub fn evaluate(&self, map: &[usize]) -> (usize, f64) {
        let mut bad = 0;
        let mut cost = 0.0;
        for &(i, j, b) in &self.links {
            match self.table.get(map[i], map[j]) {
                Some(p) if map[i] != map[j] && p.band_units >= per_path_units(b, self.eta) => {
                    cost += p.length as f64 * b as f64 / 1e6;
                }
                _ => bad += 1,
            }
        }
        (bad, cost)
    }

    /// Maximum-weight matching of slots to candidates on the relaxed `X`.
    pub fn match_relaxed(&self, z: &[f64]) -> Option<Vec<usize>> {
        let mut hosts: Vec<usize> = self.candidates.iter().flatten().copied().collect();
        hosts.sort_unstable();
        hosts.dedup();
        let w: Vec<Vec<f64>> = self
            .candidates
            .iter()
            .enumerate()
            .map(|(slot, c)| {
                hosts
                    .iter()
                    .map(|h| match c.iter().position(|v| v == h) {
                        Some(pos) => z[self.layout.x[slot][pos]],
                        None => f64::NEG_INFINITY,
                    })
                    .collect()
            })
            .collect();
        let cols = max_weight_assignment(&w)?;
        Some(cols.into_iter().map(|c| hosts[c]).collect())
    }

    /// Local moves to free candidates and pairwise swaps, each accepted when
    /// it lowers `(violations, cost)` lexicographically.
    pub fn repair(&self, map: &mut [usize]) -> (usize, f64) {
        let better = |a: (usize, f64), b: (usize, f64)| a.0 < b.0 || (a.0 == b.0 && a.1 < b.1 - 1e-9);
        let mut cur = self.evaluate(map);
        for _ in 0..self.repair_passes {
            let mut improved = false;
            for slot in 0..map.len() {
                for &node in &self.candidates[slot] {
                    if map.contains(&node) {
                        continue;
                    }
                    let old = map[slot];
                    map[slot] = node;
                    let v = self.evaluate(map);
                    if better(v, cur) {
                        cur = v;
                        improved = true;
                    } else {
                        map[slot] = old;
                    }
                }
            }
            for a in 0..map.len() {
                for b in a + 1..map.len() {
                    if !self.candidates[a].contains(&map[b]) || !self.candidates[b].contains(&map[a]) {
                        continue;
                    }
                    map.swap(a, b);
                    let v = self.evaluate(map);
                    if better(v, cur) {
                        cur = v;
                        improved = true;
                    } else {
                        map.swap(a, b);
                    }
                }
            }
            if !improved {
                break;
            }
        }
        cur
    }

    /// Rounds a relaxed solution: matching, then repair. `None` on rejection.
    pub fn round_assignment(&self, z: &[f64]) -> Option<(Vec<usize>, f64)> {
        let mut map = self.match_relaxed(z)?;
        let (bad, cost) = self.repair(&mut map);
        (bad == 0).then_some((map, cost))
    }
}

impl Rounder<f64> for EmbeddingProblem<'_> {
    type Solution = Vec<usize>;

    fn relaxed(&self) -> Range<usize> {
        0..self.layout.n_vars
    }

    fn round(&self, z: &[f64]) -> Option<(Vec<usize>, f64)> {
        self.round_assignment(z)
    }
}

/// One virtual link carried over `η` disjoint paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub a: usize,
    pub b: usize,
    pub demand_units: i64,
    pub per_path_units: i64,
    /// Substrate link ids of each path.
    pub paths: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub vn_id: u64,
    pub eta: usize,
    /// Substrate node per enhanced slot.
    pub node_map: Vec<usize>,
    /// CPU units reserved per slot.
    pub cpu_units: Vec<i64>,
    pub routes: Vec<Route>,
}

impl Embedding {
    pub fn ledger_entry(&self) -> LedgerEntry {
        LedgerEntry {
            vn_id: self.vn_id,
            node_map: self.node_map.clone(),
            cpu: self.node_map.iter().copied().zip(self.cpu_units.iter().copied()).collect(),
            bw: self.routes.iter().flat_map(|r| r.paths.iter().flatten().map(move |&l| (l, r.per_path_units))).collect(),
        }
    }

    /// Σ hops · demand over all routes, in bandwidth units.
    pub fn cost(&self) -> f64 {
        self.routes.iter().map(|r| r.paths.iter().map(Vec::len).sum::<usize>() as f64 * r.demand_units as f64 / 1e6).sum()
    }

    /// True iff every virtual link keeps at least its demand on the paths
    /// that avoid `link`.
    pub fn survives_link_failure(&self, link: usize) -> bool {
        self.routes.iter().all(|r| {
            let kept: i64 = r.paths.iter().filter(|p| !p.contains(&link)).map(|_| r.per_path_units).sum();
            kept >= r.demand_units
        })
    }
}

/// Reserves CPU and per-path bandwidth for `node_map` and commits it to the
/// ledger in one step. Path sets from the table are used while they still
/// fit; otherwise the virtual link is re-routed against the residuals left by
/// the links placed before it. Nothing is reserved on failure.
pub fn allocate_embedding(
    substrate: &mut SubstrateNetwork,
    ledger: &mut AllocationLedger,
    enh: &EnhancedVn,
    node_map: &[usize],
    eta: usize,
    table: &PathTable,
) -> Result<Embedding, EmbedError> {
    if eta < 2 {
        return Err(EmbedError::Config(format!("eta must be at least 2, got {eta}")));
    }
    let cpu_units: Vec<i64> = enh.c_e.iter().map(|&c| to_units(c)).collect();
    let mut free = substrate.bw_free_units().to_vec();
    let mut routes = Vec::new();
    for (a, b, demand) in virtual_links(enh) {
        let per = per_path_units(demand, eta);
        let (k, l) = (node_map[a], node_map[b]);
        let fits = |p: &PathSet| p.links.iter().flatten().all(|&e| free[e] >= per);
        let set = match table.get(k, l) {
            Some(p) if p.eta() == eta && fits(p) => Some(p.clone()),
            _ => disjoint_paths_on(substrate, &free, k, l, eta, per),
        };
        let set = set.ok_or(EmbedError::NoPaths { a, b, eta })?;
        for &e in set.links.iter().flatten() {
            free[e] -= per;
        }
        routes.push(Route { a, b, demand_units: demand, per_path_units: per, paths: set.links });
    }
    let emb = Embedding { vn_id: enh.base.id, eta, node_map: node_map.to_vec(), cpu_units, routes };
    ledger.commit(substrate, emb.ledger_entry())?;
    Ok(emb)
}

#[derive(Debug, Clone)]
pub struct EmbedResult {
    pub embedding: Embedding,
    /// Realized `Σ Length · b` of the chosen mapping.
    pub objective: f64,
    pub report: CndReport,
}

/// Candidate selection, path table, relaxation, swarm rounding and atomic
/// allocation for one enhanced request.
pub fn embed_vn(
    substrate: &mut SubstrateNetwork,
    ledger: &mut AllocationLedger,
    enh: &EnhancedVn,
    config: &EmbeddingConfig,
    solver: &SolverConfig,
    cnd: &CndConfig,
) -> Result<EmbedResult, EmbedError> {
    let (map, objective, report, table) = {
        let problem = EmbeddingProblem::new(enh, substrate, config)?;
        let out = cnd_solve(&problem.lp, cnd, solver, &problem)?;
        let map = out.solution.ok_or(EmbedError::NoFeasibleMapping)?;
        (map, out.fitness, out.report, problem.table)
    };
    let embedding = allocate_embedding(substrate, ledger, enh, &map, config.eta, &table)?;
    Ok(EmbedResult { embedding, objective, report })
}

#[cfg(test)]
mod tests;
