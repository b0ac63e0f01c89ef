use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use svne::cnd::CndConfig;
use svne::enhance::{enhance_vn, fip_enhance};
use svne::netmodel::{parse_substrate, parse_virtual, waxman_generate, write_substrate, write_virtual};
use svne::rng::{derive_seed, indexed_stream, streams};
use svne::simulate::{compare_strategies, run_scenario, Event, EventKind, Metrics, Simulation, Strategy};

use crate::config::RunConfig;

/// Exit codes: 0 ok, 1 internal, 2 usage or config, 3 io, 4 infeasible.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Infeasible(String),
    Internal(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Internal(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Infeasible(_) => 4,
        }
    }

    /// `error kind=<kind> msg="<text>"` on a single line.
    pub fn line(&self) -> String {
        let (kind, msg) = match self {
            CliError::Usage(m) => ("config", m),
            CliError::Io(m) => ("io", m),
            CliError::Infeasible(m) => ("infeasible", m),
            CliError::Internal(m) => ("internal", m),
        };
        let msg = msg.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', " ");
        format!("error kind={kind} msg=\"{msg}\"")
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn csv_bytes(m: &Metrics) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    m.write_csv(&mut buf).map_err(|e| CliError::Internal(e.to_string()))?;
    Ok(buf)
}

fn input_path(cfg: &RunConfig, key: &str) -> CliResult<PathBuf> {
    cfg.input(key).map(PathBuf::from).ok_or_else(|| CliError::Usage(format!("missing --{}", key.replace('_', "-"))))
}

fn load_vn(cfg: &RunConfig) -> CliResult<svne::netmodel::VirtualNetwork> {
    let path = input_path(cfg, "vn")?;
    parse_virtual(&read(&path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn substrate(cfg: &RunConfig) -> CliResult<svne::netmodel::SubstrateNetwork> {
    match cfg.input("substrate_file") {
        Some(p) => {
            let p = Path::new(p);
            parse_substrate(&read(p)?).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
        }
        None => waxman_generate(&cfg.scenario.substrate, cfg.scenario.seed).map_err(|e| CliError::Usage(e.to_string())),
    }
}

/// Runs the command recorded in `cfg` and writes its outputs plus
/// `manifest.cfg` into `cfg.out`. Returns the line printed on stdout.
pub fn run(cfg: &RunConfig) -> CliResult<String> {
    let command = cfg.command.clone().ok_or_else(|| CliError::Usage("no command".into()))?;
    cfg.scenario.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let out = &cfg.out;
    fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    write(&out.join("manifest.cfg"), cfg.render())?;
    let s = &cfg.scenario;
    match command.as_str() {
        "gen-substrate" => {
            let net = waxman_generate(&s.substrate, s.seed).map_err(|e| CliError::Usage(e.to_string()))?;
            write(&out.join("substrate.brite"), write_substrate(&net))?;
            Ok(format!("substrate nodes {} links {}", net.node_count(), net.link_count()))
        }
        "gen-vns" => {
            let count: usize = cfg.input("count").unwrap_or("10").parse().map_err(|_| CliError::Usage("bad count".into()))?;
            for i in 0..count {
                let mut rng = indexed_stream(s.seed, streams::DEMANDS, i as u64);
                let vn = s.workload.vn.sample(&mut rng).map_err(|e| CliError::Usage(e.to_string()))?.with_id(i as u64);
                write(&out.join(format!("vn_{i:04}.brite")), write_virtual(&vn))?;
            }
            Ok(format!("virtual networks {count}"))
        }
        "enhance" => {
            let vn = load_vn(cfg)?;
            let fip = fip_enhance(&vn, s.alpha);
            let e = match s.strategy {
                Strategy::Fip => fip.clone(),
                Strategy::Cnd => {
                    let swarm = CndConfig { seed: derive_seed(s.seed, streams::SWARM, 2 * vn.id), ..s.swarm.clone() };
                    enhance_vn(&vn, s.alpha, &s.solver, &swarm).map_err(|e| CliError::Internal(e.to_string()))?
                }
            };
            let doc = serde_json::to_string_pretty(&e.to_document()).map_err(|e| CliError::Internal(e.to_string()))?;
            write(&out.join("enhanced.json"), doc + "\n")?;
            Ok(format!("objective {} fip {}", e.objective(), fip.objective()))
        }
        "embed" => {
            let vn = load_vn(cfg)?;
            let id = vn.id;
            let mut sim = Simulation::with_substrate(s.clone(), substrate(cfg)?);
            let outcome = sim.process(&Event { time: 0.0, kind: EventKind::Arrival(vn) }).outcome.clone();
            write(&out.join("decisions.csv"), csv_bytes(&sim.metrics())?)?;
            match sim.state().live.get(&id) {
                Some(live) => {
                    let doc = serde_json::to_string_pretty(&live.embedding).map_err(|e| CliError::Internal(e.to_string()))?;
                    write(&out.join("embedding.json"), doc + "\n")?;
                    Ok(format!("accepted vn {id} cost {}", live.embedding.cost()))
                }
                None => Err(CliError::Infeasible(format!("vn {id} {outcome}"))),
            }
        }
        "simulate" => {
            let m = run_scenario(s).map_err(|e| CliError::Usage(e.to_string()))?;
            write(&out.join("decisions.csv"), csv_bytes(&m)?)?;
            let sum = m.summary();
            Ok(format!(
                "{} accepted {}/{} ratio {:.4} revenue {:.1}",
                s.strategy, sum.accepted, sum.submitted, sum.accept_ratio, sum.revenue
            ))
        }
        "compare" => {
            let c = compare_strategies(s).map_err(|e| CliError::Usage(e.to_string()))?;
            write(&out.join("decisions_cnd.csv"), csv_bytes(&c.cnd)?)?;
            write(&out.join("decisions_fip.csv"), csv_bytes(&c.fip)?)?;
            let mut buf = Vec::new();
            c.write_csv(&mut buf).map_err(|e| CliError::Internal(e.to_string()))?;
            write(&out.join("comparison.csv"), buf)?;
            let (a, b) = (c.cnd.summary(), c.fip.summary());
            Ok(format!(
                "cnd ratio {:.4} revenue {:.1} fip ratio {:.4} revenue {:.1}",
                a.accept_ratio, a.revenue, b.accept_ratio, b.revenue
            ))
        }
        other => Err(CliError::Usage(format!("unknown command {other:?}"))),
    }
}
