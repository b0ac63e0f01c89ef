//! `svne`: generate networks, enhance and embed requests, run simulations.
//!
//! Settings come from defaults, then `--config`, then flags. Each run writes
//! the resolved settings to `<out>/manifest.cfg`; `svne rerun` on that file
//! repeats the run.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{read, CliError, CliResult};
use config::RunConfig;

#[derive(Parser)]
#[command(name = "svne", version, about = "Survivable virtual network embedding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// key = value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// cnd or fip
    #[arg(long)]
    strategy: Option<String>,
    /// Print the resolved configuration and exit
    #[arg(long)]
    print_config: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Waxman substrate as BRITE
    GenSubstrate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long)]
        links: Option<usize>,
    },
    /// Random requests as BRITE files
    GenVns {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10)]
        count: usize,
    },
    /// Enhance one request and report its objective against FIP
    Enhance {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        vn: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Enhance and embed one request on a substrate
    Embed {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        vn: PathBuf,
        /// BRITE substrate; generated from the config when absent
        #[arg(long)]
        substrate: Option<PathBuf>,
    },
    /// Run the online scenario with one strategy
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Run both strategies on the same workload
    Compare {
        #[command(flatten)]
        common: Common,
    },
    /// Repeat the run described by a manifest
    Rerun {
        manifest: PathBuf,
        /// Output directory, if not the one recorded
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn absolute(p: &Path) -> CliResult<String> {
    let abs = std::fs::canonicalize(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
    Ok(abs.display().to_string())
}

fn resolve(name: &str, common: &Common) -> CliResult<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &common.config {
        cfg.apply(&read(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    }
    // A config file may be an old manifest; the command line decides.
    cfg.inputs.clear();
    cfg.command = Some(name.into());
    if let Some(s) = common.seed {
        cfg.scenario.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.out = o.clone();
    }
    if let Some(s) = &common.strategy {
        cfg.scenario.strategy = s.parse().map_err(CliError::Usage)?;
    }
    Ok(cfg)
}

fn build(command: Command) -> CliResult<(RunConfig, bool)> {
    let (cfg, print) = match command {
        Command::GenSubstrate { common, nodes, links } => {
            let mut cfg = resolve("gen-substrate", &common)?;
            if let Some(n) = nodes {
                cfg.scenario.substrate.node_count = n;
            }
            if let Some(l) = links {
                cfg.scenario.substrate.link_count = l;
            }
            (cfg, common.print_config)
        }
        Command::GenVns { common, count } => {
            let mut cfg = resolve("gen-vns", &common)?;
            cfg.inputs.push(("count".into(), count.to_string()));
            (cfg, common.print_config)
        }
        Command::Enhance { common, vn, alpha } => {
            let mut cfg = resolve("enhance", &common)?;
            if let Some(a) = alpha {
                cfg.scenario.alpha = a;
            }
            cfg.inputs.push(("vn".into(), absolute(&vn)?));
            (cfg, common.print_config)
        }
        Command::Embed { common, vn, substrate } => {
            let mut cfg = resolve("embed", &common)?;
            cfg.inputs.push(("vn".into(), absolute(&vn)?));
            if let Some(s) = substrate {
                cfg.inputs.push(("substrate_file".into(), absolute(&s)?));
            }
            (cfg, common.print_config)
        }
        Command::Simulate { common } => (resolve("simulate", &common)?, common.print_config),
        Command::Compare { common } => (resolve("compare", &common)?, common.print_config),
        Command::Rerun { manifest, out } => {
            let mut cfg = RunConfig::parse(&read(&manifest)?)
                .map_err(|e| CliError::Usage(format!("{}: {e}", manifest.display())))?;
            if cfg.command.is_none() {
                return Err(CliError::Usage(format!("{}: not a manifest (no command)", manifest.display())));
            }
            if let Some(o) = out {
                cfg.out = o;
            }
            (cfg, false)
        }
    };
    Ok((cfg, print))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = build(cli.command).and_then(|(cfg, print)| {
        if print {
            print!("{}", cfg.render());
            return Ok(());
        }
        let env = env_logger::Env::default().default_filter_or(cfg.verbosity.as_str());
        env_logger::Builder::from_env(env).format_timestamp(None).init();
        let line = commands::run(&cfg)?;
        println!("{line}");
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::from(e.code() as u8)
        }
    }
}
