use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::engine::{run_scenario, SimState};
use super::{Event, ScenarioConfig, SimError, Strategy};
use crate::netmodel::{from_units, to_units, SubstrateNetwork};

pub const DECISION_HEADER: &str =
    "time,vn_id,event,outcome,objective,cpu_used,bw_used,revenue_cum,accept_ratio,util_cpu,util_bw";

/// One row of the decision log: the event, what was decided, and the
/// substrate state right after it.
///
/// `cpu_used` / `bw_used` are the totals reserved on the substrate. For
/// failure events `vn_id` is the failed element and `objective` counts the
/// affected requests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub time: f64,
    pub vn_id: u64,
    pub event: String,
    pub outcome: String,
    pub objective: Option<f64>,
    pub cpu_used: f64,
    pub bw_used: f64,
    pub revenue_cum: f64,
    pub accept_ratio: f64,
    pub util_cpu: f64,
    pub util_bw: f64,
}

fn ratio(used: i64, total: i64) -> f64 {
    if total == 0 {
        0.0
    } else {
        used as f64 / total as f64
    }
}

impl DecisionRecord {
    pub(super) fn sample(event: &Event, outcome: String, objective: Option<f64>, s: &SimState) -> Self {
        let (cpu, bw) = (s.substrate.used_cpu_units(), s.substrate.used_bw_units());
        DecisionRecord {
            time: event.time,
            vn_id: event.id(),
            event: event.label().into(),
            outcome,
            objective,
            cpu_used: from_units(cpu),
            bw_used: from_units(bw),
            revenue_cum: s.revenue,
            accept_ratio: s.accept_ratio(),
            util_cpu: ratio(cpu, s.substrate.total_cpu_units()),
            util_bw: ratio(bw, s.substrate.total_bw_units()),
        }
    }

    pub fn util_mean(&self) -> f64 {
        (self.util_cpu + self.util_bw) / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub submitted: usize,
    pub accepted: usize,
    pub accept_ratio: f64,
    pub revenue: f64,
    /// Time-weighted mean of the per-event utilization blend.
    pub mean_util: f64,
}

/// The decision log with capacity totals; every series is a step function
/// sampled at each event.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub records: Vec<DecisionRecord>,
    pub total_cpu_units: i64,
    pub total_bw_units: i64,
}

impl Metrics {
    pub fn new(records: Vec<DecisionRecord>, substrate: &SubstrateNetwork) -> Self {
        Metrics { records, total_cpu_units: substrate.total_cpu_units(), total_bw_units: substrate.total_bw_units() }
    }

    pub fn submitted(&self) -> usize {
        self.records.iter().filter(|r| r.event == "arrival").count()
    }

    pub fn accepted(&self) -> usize {
        self.records.iter().filter(|r| r.event == "arrival" && r.outcome == "accepted").count()
    }

    pub fn accept_ratio(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.accept_ratio)
    }

    pub fn revenue(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.revenue_cum)
    }

    pub fn summary(&self) -> Summary {
        let mut area = 0.0;
        let mut span = 0.0;
        for w in self.records.windows(2) {
            let dt = w[1].time - w[0].time;
            area += w[0].util_mean() * dt;
            span += dt;
        }
        Summary {
            submitted: self.submitted(),
            accepted: self.accepted(),
            accept_ratio: self.accept_ratio(),
            revenue: self.revenue(),
            mean_util: if span > 0.0 { area / span } else { 0.0 },
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.records {
            w.serialize(r)?;
        }
        if self.records.is_empty() {
            w.write_record(DECISION_HEADER.split(','))?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn read_decision_log<R: Read>(input: R) -> Result<Vec<DecisionRecord>, SimError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(|e| SimError::Log(e.to_string()))?.iter().collect::<Vec<_>>().join(",");
    if header != DECISION_HEADER {
        return Err(SimError::Log(format!("unexpected header {header:?}")));
    }
    r.deserialize().map(|row| row.map_err(|e| SimError::Log(e.to_string()))).collect()
}

/// Rebuilds acceptance ratio and utilizations from the event, outcome and
/// usage columns of the log. Revenue is carried by the log itself.
pub fn compute_metrics(log: &[DecisionRecord], substrate: &SubstrateNetwork) -> Metrics {
    let (tc, tb) = (substrate.total_cpu_units(), substrate.total_bw_units());
    let mut submitted = 0usize;
    let mut accepted = 0usize;
    let records = log
        .iter()
        .map(|r| {
            if r.event == "arrival" {
                submitted += 1;
                if r.outcome == "accepted" {
                    accepted += 1;
                }
            }
            DecisionRecord {
                accept_ratio: if submitted == 0 { 0.0 } else { accepted as f64 / submitted as f64 },
                util_cpu: ratio(to_units(r.cpu_used), tc),
                util_bw: ratio(to_units(r.bw_used), tb),
                ..r.clone()
            }
        })
        .collect();
    Metrics { records, total_cpu_units: tc, total_bw_units: tb }
}

/// CND and FIP runs over the same substrate and workload.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub cnd: Metrics,
    pub fip: Metrics,
}

impl Comparison {
    /// Both decision logs stacked, with a leading `strategy` column.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        let mut header = vec!["strategy"];
        header.extend(DECISION_HEADER.split(','));
        w.write_record(&header)?;
        for (s, m) in [(Strategy::Cnd, &self.cnd), (Strategy::Fip, &self.fip)] {
            for r in &m.records {
                w.serialize((s.to_string(), r))?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs both strategies concurrently on identical seeds.
pub fn compare_strategies(config: &ScenarioConfig) -> Result<Comparison, SimError> {
    let cnd = ScenarioConfig { strategy: Strategy::Cnd, ..config.clone() };
    let fip = ScenarioConfig { strategy: Strategy::Fip, ..config.clone() };
    let (a, b) = rayon::join(|| run_scenario(&cnd), || run_scenario(&fip));
    Ok(Comparison { cnd: a?, fip: b? })
}
