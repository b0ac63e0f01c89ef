//! Plain-text run configuration.
//!
//! ```text
//! # comment
//! seed = 7
//! strategy = cnd
//! [substrate]
//! nodes = 100
//! ```
//!
//! Keys before the first section are run-level. Unknown keys and sections are
//! errors. `render` prints every key, so its output is a complete config and
//! doubles as the run manifest.

use std::fmt::Write as _;
use std::path::PathBuf;

use svne::neurolp::Integrator;
use svne::simulate::{ScenarioConfig, Strategy};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub out: PathBuf,
    pub verbosity: String,
    /// Set in manifests: the command and its inputs.
    pub command: Option<String>,
    pub inputs: Vec<(String, String)>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenario: ScenarioConfig::default(),
            out: PathBuf::from("out"),
            verbosity: "warn".into(),
            command: None,
            inputs: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: usize,
    pub msg: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.msg)
    }
}

const SECTIONS: [&str; 6] = ["", "substrate", "workload", "solver", "swarm", "embedding"];

/// Inputs a manifest may record alongside the command.
pub const INPUT_KEYS: [&str; 5] = ["vn", "substrate_file", "count", "nodes", "links"];

fn num<T: std::str::FromStr>(v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("cannot parse {v:?}"))
}

fn list(v: &str) -> Result<Vec<f64>, String> {
    v.split(',').map(|s| num(s.trim())).collect()
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(", ")
}

fn integrator(v: &str) -> Result<Integrator, String> {
    match v {
        "euler" => Ok(Integrator::Euler),
        "rk4" => Ok(Integrator::Rk4),
        "accelerated" => Ok(Integrator::Accelerated),
        _ => Err(format!("unknown integrator {v:?} (euler, rk4, accelerated)")),
    }
}

fn integrator_name(i: Integrator) -> &'static str {
    match i {
        Integrator::Euler => "euler",
        Integrator::Rk4 => "rk4",
        Integrator::Accelerated => "accelerated",
    }
}

impl RunConfig {
    fn set(&mut self, section: &str, key: &str, v: &str) -> Result<(), String> {
        let s = &mut self.scenario;
        match (section, key) {
            ("", "seed") => s.seed = num(v)?,
            ("", "strategy") => s.strategy = v.parse::<Strategy>()?,
            ("", "alpha") => s.alpha = num(v)?,
            ("", "enhance_max_nodes") => s.enhance_max_nodes = num(v)?,
            ("", "out") => self.out = PathBuf::from(v),
            ("", "verbosity") => self.verbosity = v.into(),
            ("", "command") => self.command = Some(v.into()),
            ("", k) if INPUT_KEYS.contains(&k) => self.inputs.push((k.into(), v.into())),
            ("substrate", "nodes") => s.substrate.node_count = num(v)?,
            ("substrate", "links") => s.substrate.link_count = num(v)?,
            ("substrate", "bw_low") => s.substrate.bw_low = num(v)?,
            ("substrate", "bw_high") => s.substrate.bw_high = num(v)?,
            ("substrate", "cpu_options") => s.substrate.cpu_options = list(v)?,
            ("substrate", "waxman_alpha") => s.substrate.alpha = num(v)?,
            ("substrate", "waxman_beta") => s.substrate.beta = num(v)?,
            ("workload", "requests") => s.workload.requests = num(v)?,
            ("workload", "arrival_rate") => s.workload.arrival_rate = num(v)?,
            ("workload", "lifetime_low") => s.workload.lifetime_low = num(v)?,
            ("workload", "lifetime_high") => s.workload.lifetime_high = num(v)?,
            ("workload", "size_low") => s.workload.vn.size_low = num(v)?,
            ("workload", "size_high") => s.workload.vn.size_high = num(v)?,
            ("workload", "connectivity") => s.workload.vn.connectivity = num(v)?,
            ("workload", "cpu_set") => s.workload.vn.cpu_set = list(v)?,
            ("workload", "bw_low") => s.workload.vn.bw_low = num(v)?,
            ("workload", "bw_high") => s.workload.vn.bw_high = num(v)?,
            ("workload", "failures") => s.workload.failures = num(v)?,
            ("solver", "beta") => s.solver.beta = num(v)?,
            ("solver", "step_size") => s.solver.step_size = num(v)?,
            ("solver", "min_step") => s.solver.min_step = num(v)?,
            ("solver", "step_growth") => s.solver.step_growth = num(v)?,
            ("solver", "max_step") => s.solver.max_step = num(v)?,
            ("solver", "max_steps") => s.solver.max_steps = num(v)?,
            ("solver", "kkt_tolerance") => s.solver.kkt_tolerance = num(v)?,
            ("solver", "integrator") => s.solver.integrator = integrator(v)?,
            ("solver", "equilibrate") => s.solver.equilibrate = num(v)?,
            ("swarm", "size") => s.swarm.swarm_size = num(v)?,
            ("swarm", "inertia") => s.swarm.inertia = num(v)?,
            ("swarm", "c1") => s.swarm.c1 = num(v)?,
            ("swarm", "c2") => s.swarm.c2 = num(v)?,
            ("swarm", "outer_rounds") => s.swarm.outer_rounds = num(v)?,
            ("swarm", "stall_rounds") => s.swarm.stall_rounds = num(v)?,
            ("embedding", "eta") => s.embedding.eta = num(v)?,
            ("embedding", "candidate_factor") => s.embedding.candidate_factor = num(v)?,
            ("embedding", "repair_passes") => s.embedding.repair_passes = num(v)?,
            (sec, k) => {
                let at = if sec.is_empty() { "top level".to_string() } else { format!("[{sec}]") };
                return Err(format!("unknown key {k:?} at {at}"));
            }
        }
        Ok(())
    }

    /// Applies `text` on top of `self`.
    pub fn apply(&mut self, text: &str) -> Result<(), ConfigError> {
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(name) = body.strip_prefix('[').and_then(|b| b.strip_suffix(']')) {
                let name = name.trim();
                if name.is_empty() || !SECTIONS.contains(&name) {
                    return Err(ConfigError { line, msg: format!("unknown section [{name}]") });
                }
                section = name.into();
                continue;
            }
            let Some((k, v)) = body.split_once('=') else {
                return Err(ConfigError { line, msg: format!("expected key = value, got {body:?}") });
            };
            self.set(&section, k.trim(), v.trim()).map_err(|msg| ConfigError { line, msg })?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut c = RunConfig::default();
        c.apply(text)?;
        Ok(c)
    }

    /// Every key with its current value.
    pub fn render(&self) -> String {
        let s = &self.scenario;
        let mut o = String::new();
        let kv = |o: &mut String, k: &str, v: String| writeln!(o, "{k} = {v}").unwrap();
        o.push_str("# svne run configuration\n");
        if let Some(c) = &self.command {
            kv(&mut o, "command", c.clone());
        }
        for (k, v) in &self.inputs {
            kv(&mut o, k, v.clone());
        }
        kv(&mut o, "seed", s.seed.to_string());
        kv(&mut o, "strategy", s.strategy.to_string());
        kv(&mut o, "alpha", s.alpha.to_string());
        o.push_str("# requests larger than this use swap plans under cnd\n");
        kv(&mut o, "enhance_max_nodes", s.enhance_max_nodes.to_string());
        kv(&mut o, "out", self.out.display().to_string());
        kv(&mut o, "verbosity", self.verbosity.clone());

        o.push_str("\n[substrate]\n");
        kv(&mut o, "nodes", s.substrate.node_count.to_string());
        kv(&mut o, "links", s.substrate.link_count.to_string());
        kv(&mut o, "bw_low", s.substrate.bw_low.to_string());
        kv(&mut o, "bw_high", s.substrate.bw_high.to_string());
        o.push_str("# node CPU (cores x MHz) drawn from these\n");
        kv(&mut o, "cpu_options", join(&s.substrate.cpu_options));
        kv(&mut o, "waxman_alpha", s.substrate.alpha.to_string());
        kv(&mut o, "waxman_beta", s.substrate.beta.to_string());

        let w = &s.workload;
        o.push_str("\n[workload]\n");
        kv(&mut o, "requests", w.requests.to_string());
        o.push_str("# arrivals per time unit\n");
        kv(&mut o, "arrival_rate", w.arrival_rate.to_string());
        kv(&mut o, "lifetime_low", w.lifetime_low.to_string());
        kv(&mut o, "lifetime_high", w.lifetime_high.to_string());
        kv(&mut o, "size_low", w.vn.size_low.to_string());
        kv(&mut o, "size_high", w.vn.size_high.to_string());
        kv(&mut o, "connectivity", w.vn.connectivity.to_string());
        kv(&mut o, "cpu_set", join(&w.vn.cpu_set));
        kv(&mut o, "bw_low", w.vn.bw_low.to_string());
        kv(&mut o, "bw_high", w.vn.bw_high.to_string());
        kv(&mut o, "failures", w.failures.to_string());

        let v = &s.solver;
        o.push_str("\n[solver]\n");
        kv(&mut o, "beta", v.beta.to_string());
        kv(&mut o, "step_size", v.step_size.to_string());
        kv(&mut o, "min_step", v.min_step.to_string());
        kv(&mut o, "step_growth", v.step_growth.to_string());
        kv(&mut o, "max_step", v.max_step.to_string());
        kv(&mut o, "max_steps", v.max_steps.to_string());
        kv(&mut o, "kkt_tolerance", v.kkt_tolerance.to_string());
        kv(&mut o, "integrator", integrator_name(v.integrator).into());
        kv(&mut o, "equilibrate", v.equilibrate.to_string());

        let p = &s.swarm;
        o.push_str("\n[swarm]\n");
        kv(&mut o, "size", p.swarm_size.to_string());
        kv(&mut o, "inertia", p.inertia.to_string());
        kv(&mut o, "c1", p.c1.to_string());
        kv(&mut o, "c2", p.c2.to_string());
        kv(&mut o, "outer_rounds", p.outer_rounds.to_string());
        kv(&mut o, "stall_rounds", p.stall_rounds.to_string());

        let e = &s.embedding;
        o.push_str("\n[embedding]\n");
        kv(&mut o, "eta", e.eta.to_string());
        kv(&mut o, "candidate_factor", e.candidate_factor.to_string());
        kv(&mut o, "repair_passes", e.repair_passes.to_string());
        o
    }

    pub fn input(&self, key: &str) -> Option<&str> {
        self.inputs.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_parses_back() {
        let mut c = RunConfig::default();
        c.scenario.seed = 42;
        c.scenario.solver.step_size = 0.1 + 0.2;
        c.scenario.workload.vn.cpu_set = vec![1.5, 2.0];
        c.command = Some("compare".into());
        c.inputs.push(("vn".into(), "a.brite".into()));
        let back = RunConfig::parse(&c.render()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn sections_comments_and_errors() {
        let c = RunConfig::parse("seed = 3 # trailing\n[embedding]\neta = 4\n\n[solver]\nintegrator = rk4\n").unwrap();
        assert_eq!(c.scenario.seed, 3);
        assert_eq!(c.scenario.embedding.eta, 4);
        assert_eq!(c.scenario.solver.integrator, Integrator::Rk4);
        let e = RunConfig::parse("[swarm]\nsize = 2\nspeed = 1\n").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(e.msg.contains("speed"));
        assert!(RunConfig::parse("[nope]\n").is_err());
        assert!(RunConfig::parse("seed 3\n").is_err());
        assert!(RunConfig::parse("seed = x\n").is_err());
        // A key is only known in its own section.
        assert!(RunConfig::parse("eta = 3\n").is_err());
    }
}
