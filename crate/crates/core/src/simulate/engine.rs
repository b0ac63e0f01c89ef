use std::collections::BTreeMap;

use log::{debug, warn};

use super::metrics::{DecisionRecord, Metrics};
use super::{generate_workload, Event, EventKind, ScenarioConfig, SimError, Strategy};
use crate::cnd::CndConfig;
use crate::enhance::{apply_recovery, enhance_vn, fip_enhance, padded_cpu, padded_demand, EnhancedVn};
use crate::multipath::{embed_vn, EmbedError, Embedding};
use crate::netmodel::{to_units, waxman_generate, AllocationLedger, SubstrateNetwork, VirtualNetwork};
use crate::rng::{derive_seed, streams};

/// An accepted request and what was reserved for it.
#[derive(Debug, Clone)]
pub struct LiveVn {
    pub enhanced: EnhancedVn,
    pub embedding: Embedding,
    /// Original node whose failure has already been absorbed by its plan.
    pub active_plan: Option<usize>,
}

impl LiveVn {
    /// CPU per slot and slot-pair bandwidth the request currently needs.
    pub fn current_load(&self) -> (Vec<f64>, Vec<Vec<f64>>) {
        match self.active_plan {
            Some(k) => {
                let r = apply_recovery(&self.enhanced, k).expect("stored plan");
                (r.cpu, r.bandwidth)
            }
            None => (padded_cpu(&self.enhanced.base), padded_demand(&self.enhanced.base)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimState {
    pub substrate: SubstrateNetwork,
    pub ledger: AllocationLedger,
    pub live: BTreeMap<u64, LiveVn>,
    pub submitted: usize,
    pub accepted: usize,
    pub revenue: f64,
}

impl SimState {
    pub fn new(substrate: SubstrateNetwork) -> Self {
        SimState {
            substrate,
            ledger: AllocationLedger::new(),
            live: BTreeMap::new(),
            submitted: 0,
            accepted: 0,
            revenue: 0.0,
        }
    }

    pub fn accept_ratio(&self) -> f64 {
        if self.submitted == 0 {
            0.0
        } else {
            self.accepted as f64 / self.submitted as f64
        }
    }
}

/// What a single substrate failure did to the live requests.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FailureOutcome {
    pub affected: Vec<u64>,
    pub recovered: Vec<u64>,
    /// Requests hit again after an earlier failure already touched them.
    pub unprotected: Vec<u64>,
    /// Reserved resources did not cover the recovered loads.
    pub violations: Vec<(u64, String)>,
}

impl FailureOutcome {
    pub fn label(&self) -> &'static str {
        if !self.violations.is_empty() {
            "violation"
        } else if !self.unprotected.is_empty() {
            "unprotected"
        } else if self.affected.is_empty() {
            "unaffected"
        } else {
            "recovered"
        }
    }
}

/// Checks `cpu` / `bw` against what `emb` reserved, counting only paths
/// whose links are all alive. `dead` is the slot left empty by the plan.
fn covered(
    emb: &Embedding,
    substrate: &SubstrateNetwork,
    cpu: &[f64],
    bw: &[Vec<f64>],
    dead: Option<usize>,
) -> Result<(), String> {
    for (slot, &c) in cpu.iter().enumerate() {
        if c <= 0.0 {
            continue;
        }
        if Some(slot) == dead || substrate.node_failed(emb.node_map[slot]) {
            return Err(format!("slot {slot} still carries load on a failed node"));
        }
        if to_units(c) > emb.cpu_units[slot] {
            return Err(format!("slot {slot} needs {c} cpu beyond its reservation"));
        }
    }
    for i in 0..bw.len() {
        for j in i + 1..bw.len() {
            let need = to_units(bw[i][j]);
            if need == 0 {
                continue;
            }
            let kept: i64 = emb
                .routes
                .iter()
                .filter(|r| (r.a, r.b) == (i, j))
                .flat_map(|r| r.paths.iter().map(move |p| (r.per_path_units, p)))
                .filter(|(_, p)| p.iter().all(|&l| !substrate.link_failed(l)))
                .map(|(u, _)| u)
                .sum();
            if kept < need {
                return Err(format!("slots {i}-{j} keep {kept} of {need} bandwidth units"));
            }
        }
    }
    Ok(())
}

/// Applies a node or link failure to the state. Node failures relocate the
/// hosted slot's load with the stored plan; both kinds then check that the
/// loads are covered by reservations on surviving elements. Nothing is
/// re-optimized or re-allocated.
pub fn inject_failure(state: &mut SimState, event: &Event) -> FailureOutcome {
    let mut out = FailureOutcome::default();
    let fresh: Vec<usize> = match event.kind {
        EventKind::NodeFailure(v) => {
            if v >= state.substrate.node_count() || state.substrate.node_failed(v) {
                return out;
            }
            let links = state.substrate.neighbors(v).iter().map(|&(_, l)| l);
            let fresh = links.filter(|&l| !state.substrate.link_failed(l)).collect();
            state.substrate.mark_node_failed(v);
            fresh
        }
        EventKind::LinkFailure(l) => {
            if l >= state.substrate.link_count() || state.substrate.link_failed(l) {
                return out;
            }
            state.substrate.mark_link_failed(l);
            vec![l]
        }
        _ => return out,
    };
    let substrate = &state.substrate;
    for (&id, vn) in state.live.iter_mut() {
        let emb = &vn.embedding;
        let hosted = match event.kind {
            EventKind::NodeFailure(v) => emb.node_map.iter().position(|&h| h == v),
            _ => None,
        };
        let touched = emb.routes.iter().flat_map(|r| r.paths.iter().flatten()).any(|l| fresh.contains(l));
        if hosted.is_none() && !touched {
            continue;
        }
        out.affected.push(id);
        let n = vn.enhanced.base.node_count();
        // Only single failures are protected; earlier damage voids the guarantee.
        let scarred = emb
            .routes
            .iter()
            .flat_map(|r| r.paths.iter().flatten())
            .any(|l| substrate.link_failed(*l) && !fresh.contains(l));
        if scarred || (hosted.is_some() && vn.active_plan.is_some()) {
            out.unprotected.push(id);
            continue;
        }
        if let Some(k) = hosted.filter(|&k| k < n) {
            vn.active_plan = Some(k);
        }
        let dead = hosted.map(|k| if k < n { k } else { n });
        let (cpu, bw) = vn.current_load();
        match covered(emb, substrate, &cpu, &bw, dead) {
            Ok(()) => out.recovered.push(id),
            Err(why) => {
                warn!("request {id} not restorable after {}: {why}", event.label());
                out.violations.push((id, why));
            }
        }
    }
    out
}

/// Fails each substrate node hosting a live slot, one at a time, on copies
/// of `state`.
pub fn node_failure_sweep(state: &SimState) -> Vec<(usize, FailureOutcome)> {
    let mut nodes: Vec<usize> = state.live.values().flat_map(|v| v.embedding.node_map.iter().copied()).collect();
    nodes.sort_unstable();
    nodes.dedup();
    nodes
        .into_iter()
        .map(|v| {
            let mut s = state.clone();
            (v, inject_failure(&mut s, &Event { time: 0.0, kind: EventKind::NodeFailure(v) }))
        })
        .collect()
}

/// For every substrate link, whether every live request survives its loss.
pub fn link_failure_sweep(state: &SimState) -> Vec<(usize, bool)> {
    (0..state.substrate.link_count())
        .map(|l| (l, state.live.values().all(|v| v.embedding.survives_link_failure(l))))
        .collect()
}

fn rejection_label(e: &EmbedError) -> &'static str {
    match e {
        EmbedError::Config(_) => "rejected-config",
        EmbedError::NoCandidates { .. } => "rejected-no-candidates",
        EmbedError::NoFeasibleMapping => "rejected-no-mapping",
        EmbedError::NoPaths { .. } => "rejected-no-paths",
        EmbedError::Allocation(_) => "rejected-capacity",
        EmbedError::Solver(_) => "rejected-solver",
    }
}

/// A running scenario: state plus the decision log so far.
pub struct Simulation {
    config: ScenarioConfig,
    state: SimState,
    log: Vec<DecisionRecord>,
}

impl Simulation {
    pub fn new(config: ScenarioConfig) -> Result<Self, SimError> {
        config.validate()?;
        let substrate = waxman_generate(&config.substrate, config.seed)?;
        Ok(Self::with_substrate(config, substrate))
    }

    pub fn with_substrate(config: ScenarioConfig, substrate: SubstrateNetwork) -> Self {
        Simulation { config, state: SimState::new(substrate), log: Vec::new() }
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn log(&self) -> &[DecisionRecord] {
        &self.log
    }

    fn swarm_for(&self, id: u64, phase: u64) -> CndConfig {
        CndConfig { seed: derive_seed(self.config.seed, streams::SWARM, 2 * id + phase), ..self.config.swarm.clone() }
    }

    fn enhance(&self, vn: &VirtualNetwork) -> Option<EnhancedVn> {
        let c = &self.config;
        match c.strategy {
            Strategy::Fip => Some(fip_enhance(vn, c.alpha)),
            Strategy::Cnd if vn.node_count() > c.enhance_max_nodes => Some(fip_enhance(vn, c.alpha)),
            Strategy::Cnd => match enhance_vn(vn, c.alpha, &c.solver, &self.swarm_for(vn.id, 0)) {
                Ok(e) => Some(e),
                Err(e) => {
                    warn!("enhancement of request {} failed: {e}", vn.id);
                    None
                }
            },
        }
    }

    fn admit(&mut self, vn: &VirtualNetwork) -> (String, Option<f64>) {
        self.state.submitted += 1;
        let Some(enhanced) = self.enhance(vn) else {
            return ("rejected-enhancement".into(), None);
        };
        let cnd = self.swarm_for(vn.id, 1);
        let c = &self.config;
        let s = &mut self.state;
        match embed_vn(&mut s.substrate, &mut s.ledger, &enhanced, &c.embedding, &c.solver, &cnd) {
            Ok(r) => {
                s.accepted += 1;
                s.revenue += vn.revenue();
                s.live.insert(vn.id, LiveVn { enhanced, embedding: r.embedding, active_plan: None });
                ("accepted".into(), Some(r.objective))
            }
            Err(e) => {
                debug!("request {} rejected: {e}", vn.id);
                (rejection_label(&e).into(), None)
            }
        }
    }

    /// Handles one event and appends its decision record.
    pub fn process(&mut self, event: &Event) -> &DecisionRecord {
        let (outcome, objective) = match &event.kind {
            EventKind::Arrival(vn) => self.admit(vn),
            EventKind::Departure(id) => {
                if self.state.live.remove(id).is_some() {
                    self.state.ledger.release(&mut self.state.substrate, *id);
                    ("released".into(), None)
                } else {
                    ("noop".into(), None)
                }
            }
            EventKind::NodeFailure(_) | EventKind::LinkFailure(_) => {
                let out = inject_failure(&mut self.state, event);
                (out.label().into(), Some(out.affected.len() as f64))
            }
        };
        let record = DecisionRecord::sample(event, outcome, objective, &self.state);
        self.log.push(record);
        self.log.last().expect("just pushed")
    }

    pub fn metrics(&self) -> Metrics {
        Metrics::new(self.log.clone(), &self.state.substrate)
    }
}

/// Generates the workload and processes every event in order.
pub fn run_scenario(config: &ScenarioConfig) -> Result<Metrics, SimError> {
    let events = generate_workload(config)?;
    let mut sim = Simulation::new(config.clone())?;
    for e in &events {
        sim.process(e);
    }
    Ok(sim.metrics())
}
