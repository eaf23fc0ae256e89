use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use qdc_core::harness::{self, preset, PRESETS};
use qdc_core::metrics::{mean_se, write_trace, RunRecord};
use qdc_core::rng::replication_seed;
use qdc_core::{ScenarioConfig, Simulation};

/// Discrete-event simulator for spine-leaf quantum data center networks.
#[derive(Parser)]
#[command(name = "qdc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the base point of a scenario (any sweep is ignored).
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        /// Write an ndjson event trace of replication 0 to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run every point of the scenario's sweep grid.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Compare a single-leaf exponential-reneging run with the exact chain.
    Validate {
        config: PathBuf,
        /// Choose the horizon so the run executes about this many events.
        #[arg(long)]
        events: Option<u64>,
        /// Relative tolerance per metric.
        #[arg(long, default_value_t = 0.02)]
        tolerance: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Run a built-in scenario, or list them with `--list`.
    Preset {
        #[arg(required_unless_present = "list")]
        name: Option<String>,
        #[arg(long)]
        list: bool,
        /// Print the preset as TOML instead of running it.
        #[arg(long)]
        print_config: bool,
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(Args)]
struct Overrides {
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replications: Option<u32>,
    /// Simulated time per run.
    #[arg(long)]
    horizon: Option<f64>,
    /// Output directory for CSV files.
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

impl Overrides {
    fn apply(&self, cfg: &mut ScenarioConfig) {
        if let Some(s) = self.seed {
            cfg.sim.master_seed = s;
        }
        if let Some(r) = self.replications {
            cfg.sim.replications = r;
        }
        if let Some(h) = self.horizon {
            cfg.sim.horizon = h;
        }
    }
}

fn load(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    ScenarioConfig::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
}

fn run_and_report(cfg: &ScenarioConfig, out: &Path) -> Result<()> {
    let records = harness::run_scenario(cfg)?;
    let (runs, summary) = harness::write_outputs(&records, out, &cfg.name)?;
    match print_table(cfg, &records) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => return Ok(()),
        r => r?,
    }
    println!("wrote {} and {}", runs.display(), summary.display());
    Ok(())
}

type Metric = fn(&RunRecord) -> Option<f64>;

fn print_table(cfg: &ScenarioConfig, records: &[RunRecord]) -> std::io::Result<()> {
    let mut out = std::io::stdout().lock();
    let axes = &cfg.sweep;
    let mut header: Vec<String> = vec!["point".into()];
    header.extend(axes.iter().map(|a| a.field.clone()));
    header.extend(
        [
            "throughput",
            "capacity",
            "reneging",
            "not_joined",
            "assembly",
            "fidelity",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    writeln!(out, "{}", header.join("\t"))?;
    let points = records.iter().map(|r| r.point).max().map_or(0, |p| p + 1);
    for p in 0..points {
        let group: Vec<&RunRecord> = records.iter().filter(|r| r.point == p).collect();
        let mut row = vec![p.to_string()];
        // Last axis varies fastest.
        let mut rem = p;
        let mut values = vec![0.0; axes.len()];
        for (i, a) in axes.iter().enumerate().rev() {
            values[i] = a.values[rem % a.values.len()];
            rem /= a.values.len();
        }
        row.extend(values.iter().map(|v| v.to_string()));
        let metrics: [Metric; 6] = [
            |r| Some(r.stats.throughput()),
            |r| Some(r.stats.capacity()),
            |r| r.stats.reneging_ratio(),
            |r| r.stats.not_joined_ratio(),
            |r| r.stats.successful_assembly_rate(),
            |r| r.stats.fidelity_summary(None).map(|f| f.mean),
        ];
        for m in metrics {
            let vals: Vec<f64> = group.iter().filter_map(|r| m(r)).collect();
            row.push(match mean_se(&vals) {
                Some((mean, Some(se))) => format!("{mean:.4}±{se:.4}"),
                Some((mean, None)) => format!("{mean:.4}"),
                None => "-".into(),
            });
        }
        writeln!(out, "{}", row.join("\t"))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run {
            config,
            overrides,
            trace,
        } => {
            let mut cfg = load(&config)?;
            overrides.apply(&mut cfg);
            if !cfg.sweep.is_empty() {
                eprintln!(
                    "note: ignoring {} sweep axes; use `qdc sweep` for the grid",
                    cfg.sweep.len()
                );
                cfg.sweep.clear();
            }
            if let Some(path) = trace {
                cfg.validate()?;
                let sim = Simulation::new(&cfg, replication_seed(cfg.sim.master_seed, 0))?.with_trace();
                let (_, records) = sim.run();
                let file = std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                write_trace(&records.unwrap_or_default(), std::io::BufWriter::new(file))?;
                println!("wrote trace {}", path.display());
            }
            run_and_report(&cfg, &overrides.out)?;
        }
        Command::Sweep { config, overrides } => {
            let mut cfg = load(&config)?;
            overrides.apply(&mut cfg);
            run_and_report(&cfg, &overrides.out)?;
        }
        Command::Validate {
            config,
            events,
            tolerance,
            seed,
            horizon,
        } => {
            let mut cfg = load(&config)?;
            if let Some(s) = seed {
                cfg.sim.master_seed = s;
            }
            if let Some(h) = horizon {
                cfg.sim.horizon = h;
            }
            let v = harness::validate(&cfg, tolerance, events)?;
            println!(
                "lambda={} mu={} theta={} K={}  horizon={} events={}",
                v.queue.lambda, v.queue.mu, v.queue.theta, v.queue.capacity, v.stats.horizon, v.stats.events
            );
            println!("{}", v.report);
            if !v.report.passed() {
                eprintln!("validation failed: {}", v.report.failures().join(", "));
                return Ok(ExitCode::from(3));
            }
        }
        Command::Preset {
            name,
            list,
            print_config,
            overrides,
        } => {
            if list {
                for (name, description) in PRESETS {
                    println!("{name:<22}{description}");
                }
                return Ok(ExitCode::SUCCESS);
            }
            let name = name.expect("required unless --list");
            let Some(mut cfg) = preset(&name) else {
                bail!(harness::HarnessError::UnknownPreset(name));
            };
            overrides.apply(&mut cfg);
            if print_config {
                print!("{}", cfg.to_toml()?);
            } else {
                run_and_report(&cfg, &overrides.out)?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
