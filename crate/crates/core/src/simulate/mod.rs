//! Discrete-event simulation of online request arrivals and departures.

mod engine;
mod metrics;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cnd::CndConfig;
use crate::multipath::EmbeddingConfig;
use crate::netmodel::{NetError, VirtualNetwork, VnParams, WaxmanParams};
use crate::neurolp::SolverConfig;
use crate::rng::{self, streams};

pub use engine::{
    inject_failure, link_failure_sweep, node_failure_sweep, run_scenario, FailureOutcome, LiveVn, SimState,
    Simulation,
};
pub use metrics::{
    compare_strategies, compute_metrics, read_decision_log, Comparison, DecisionRecord, Metrics, Summary,
    DECISION_HEADER,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("decision log: {0}")]
    Log(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    Cnd,
    Fip,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Cnd => "cnd",
            Strategy::Fip => "fip",
        })
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "cnd" => Ok(Strategy::Cnd),
            "fip" => Ok(Strategy::Fip),
            other => Err(format!("unknown strategy {other:?} (expected cnd or fip)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadConfig {
    pub requests: usize,
    /// Poisson arrivals per time unit.
    pub arrival_rate: f64,
    pub lifetime_low: f64,
    pub lifetime_high: f64,
    pub vn: VnParams,
    /// Random single-element failures spread over the arrival horizon.
    pub failures: usize,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        WorkloadConfig {
            requests: 1000,
            arrival_rate: 0.1,
            lifetime_low: 300.0,
            lifetime_high: 700.0,
            vn: VnParams::default(),
            failures: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub substrate: WaxmanParams,
    pub workload: WorkloadConfig,
    pub strategy: Strategy,
    pub embedding: EmbeddingConfig,
    pub alpha: f64,
    pub solver: SolverConfig,
    pub swarm: CndConfig,
    /// Requests above this size are enhanced with FIP plans even under CND;
    /// the plan relaxation grows with the fifth power of the size.
    pub enhance_max_nodes: usize,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            substrate: WaxmanParams::default(),
            workload: WorkloadConfig::default(),
            strategy: Strategy::Cnd,
            embedding: EmbeddingConfig::default(),
            alpha: 1.0,
            // Per-request budgets; a full run solves thousands of relaxations.
            solver: SolverConfig { max_steps: 150, ..Default::default() },
            swarm: CndConfig { swarm_size: 2, outer_rounds: 2, stall_rounds: 2, ..Default::default() },
            enhance_max_nodes: 8,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        self.substrate.validate()?;
        self.workload.vn.validate()?;
        let w = &self.workload;
        if !(w.arrival_rate > 0.0 && w.arrival_rate.is_finite()) {
            return Err(SimError::Config(format!("arrival_rate {} must be positive", w.arrival_rate)));
        }
        if !(w.lifetime_low > 0.0 && w.lifetime_low <= w.lifetime_high && w.lifetime_high.is_finite()) {
            return Err(SimError::Config("need 0 < lifetime_low <= lifetime_high".into()));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(SimError::Config(format!("alpha {} must be nonnegative", self.alpha)));
        }
        self.embedding.validate().map_err(|e| SimError::Config(e.to_string()))?;
        self.solver.validate().map_err(|e| SimError::Config(e.to_string()))?;
        self.swarm.validate().map_err(|e| SimError::Config(e.to_string()))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EventKind {
    Arrival(VirtualNetwork),
    Departure(u64),
    NodeFailure(usize),
    LinkFailure(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}

impl Event {
    /// Departures go first at equal times so freed resources are reusable.
    pub fn rank(&self) -> u8 {
        match self.kind {
            EventKind::Departure(_) => 0,
            EventKind::Arrival(_) => 1,
            EventKind::NodeFailure(_) => 2,
            EventKind::LinkFailure(_) => 3,
        }
    }

    /// Request id, or the substrate element id for failures.
    pub fn id(&self) -> u64 {
        match &self.kind {
            EventKind::Arrival(vn) => vn.id,
            EventKind::Departure(id) => *id,
            EventKind::NodeFailure(v) | EventKind::LinkFailure(v) => *v as u64,
        }
    }

    pub fn label(&self) -> &'static str {
        match self.kind {
            EventKind::Arrival(_) => "arrival",
            EventKind::Departure(_) => "departure",
            EventKind::NodeFailure(_) => "node-failure",
            EventKind::LinkFailure(_) => "link-failure",
        }
    }
}

pub fn sort_events(events: &mut [Event]) {
    events.sort_by(|a, b| {
        a.time.total_cmp(&b.time).then(a.rank().cmp(&b.rank())).then(a.id().cmp(&b.id()))
    });
}

/// Poisson arrivals with uniform lifetimes, one paired departure each, and
/// any configured random failures. Request `i` has id `i` and is drawn from
/// its own demand stream, so the workload does not depend on the strategy.
pub fn generate_workload(config: &ScenarioConfig) -> Result<Vec<Event>, SimError> {
    config.validate()?;
    let w = &config.workload;
    let mut arrivals = rng::stream(config.seed, streams::ARRIVALS);
    let gap = Exp::new(w.arrival_rate).map_err(|e| SimError::Config(e.to_string()))?;
    let mut events = Vec::with_capacity(2 * w.requests + w.failures);
    let mut t = 0.0;
    for i in 0..w.requests {
        t += gap.sample(&mut arrivals);
        let life = if w.lifetime_low == w.lifetime_high {
            w.lifetime_low
        } else {
            arrivals.gen_range(w.lifetime_low..w.lifetime_high)
        };
        let mut demands = rng::indexed_stream(config.seed, streams::DEMANDS, i as u64);
        let vn = w.vn.sample(&mut demands)?.with_id(i as u64);
        events.push(Event { time: t, kind: EventKind::Arrival(vn) });
        events.push(Event { time: t + life, kind: EventKind::Departure(i as u64) });
    }
    let mut fails = rng::stream(config.seed, streams::FAILURES);
    let horizon = t.max(1.0);
    for _ in 0..w.failures {
        let at = fails.gen_range(0.0..horizon);
        let kind = if fails.gen_bool(0.5) {
            EventKind::NodeFailure(fails.gen_range(0..config.substrate.node_count))
        } else {
            EventKind::LinkFailure(fails.gen_range(0..config.substrate.link_count))
        };
        events.push(Event { time: at, kind });
    }
    sort_events(&mut events);
    Ok(events)
}
