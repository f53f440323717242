use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use hetnet::analytics::{handover_traffic_correlation, traffic_by_category_and_location, CategoryLocationRow};
use hetnet::harness::{
    read_rows_csv, render, run_sweep, summarize, write_rows_csv, write_summary_csv, HarnessError, ReportFormat,
    SweepConfig, SweepResult,
};
use hetnet::rng::{derive_seed, stream};
use hetnet::scenario::{generate_layout, load_scenario, write_layout_csv};
use hetnet::sim::{write_event_log, write_instances_csv, AssignmentPlan, EpochOutput, Simulation, UserSummary};
use hetnet::{Error, Result, ScenarioConfig};

#[derive(Parser)]
#[command(name = "hetnet", version, about = "HetNet simulator and misconfiguration diagnosis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario TOML; defaults are used for omitted keys.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Master seed. Overrides the scenario's rng_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory. Single-file outputs go to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a layout and write it as CSV.
    Layout {
        #[command(flatten)]
        common: Common,
    },
    /// Run the epochs of a scenario with random misconfigurations; writes
    /// instances.csv and events.jsonl.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.4)]
        misconfig_fraction: f64,
    },
    /// Mobility and traffic analytics over a nominal run.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// json or csv
        #[arg(long, default_value = "json")]
        format: String,
    },
    /// Density sweep over the three diagnosis architectures.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Sweep config TOML; --scenario replaces its base scenario.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma separated femto counts, e.g. 20,40,60.
        #[arg(long, value_delimiter = ',')]
        densities: Option<Vec<usize>>,
        /// Number of seeds, counting up from --seed (default 1).
        #[arg(long)]
        seeds: Option<u64>,
        #[arg(long)]
        epochs: Option<usize>,
        /// Report format written next to the raw rows.
        #[arg(long, default_value = "markdown")]
        format: String,
    },
    /// Render a rows.csv produced by `sweep`.
    Report {
        /// rows.csv from a sweep
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "markdown")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 2 for bad input, 3 for a runtime contract violation.
fn exit_code(e: &Error) -> u8 {
    if e.is_config_error() {
        2
    } else {
        3
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Layout { common } => {
            let scenario = scenario(&common)?;
            let layout = generate_layout(&scenario)?;
            let mut buf = Vec::new();
            write_layout_csv(&layout, &mut buf)?;
            emit(common.out.as_deref(), "layout.csv", &buf)
        }
        Command::Simulate { common, misconfig_fraction } => {
            if !(0.0..=1.0).contains(&misconfig_fraction) {
                return Err(HarnessError::Config(format!("misconfig fraction {misconfig_fraction} not in [0, 1]")).into());
            }
            let scenario = scenario(&common)?;
            let outputs = simulate(&scenario, misconfig_fraction)?;
            let dir = out_dir(&common)?;
            let instances: Vec<_> = outputs.iter().flat_map(|o| o.instances.iter().cloned()).collect();
            let records: Vec<_> = outputs.iter().flat_map(EpochOutput::log_records).collect();
            let path = dir.join("instances.csv");
            write_instances_csv(&instances, create(&path)?)?;
            let path = dir.join("events.jsonl");
            write_event_log(&records, create(&path)?)?;
            eprintln!("{} instances, {} events -> {}", instances.len(), records.len(), dir.display());
            Ok(())
        }
        Command::Analyze { common, format } => {
            let scenario = scenario(&common)?;
            let layout = generate_layout(&scenario)?;
            let outputs = simulate(&scenario, 0.0)?;
            let users: Vec<UserSummary> = outputs.iter().flat_map(|o| o.users.iter().cloned()).collect();
            let traffic: Vec<_> = outputs.iter().flat_map(|o| o.traffic.iter().cloned()).collect();
            let pairs: Vec<(f64, f64)> = users.iter().map(|u| (u.handovers as f64, u.bytes as f64)).collect();
            let report = Analysis {
                users: users.len(),
                mean_rog_m: mean(users.iter().map(|u| u.rog_m)),
                mean_cell_rog_m: mean(users.iter().map(|u| u.cell_rog_m)),
                mean_visited_cells: mean(users.iter().map(|u| f64::from(u.visited_cells))),
                handover_traffic_spearman: handover_traffic_correlation(&pairs).ok(),
                traffic_by_location: traffic_by_category_and_location(&traffic, &layout)?,
            };
            match format.as_str() {
                "json" => {
                    let text = serde_json::to_string_pretty(&report).expect("analysis serializes");
                    emit(common.out.as_deref(), "analysis.json", text.as_bytes())
                }
                "csv" => {
                    let dir = out_dir(&common)?;
                    write_csv(&dir.join("users.csv"), &users)?;
                    write_csv(&dir.join("traffic_by_location.csv"), &report.traffic_by_location)?;
                    Ok(())
                }
                other => Err(HarnessError::UnknownFormat(other.to_string()).into()),
            }
        }
        Command::Sweep { common, config, densities, seeds, epochs, format } => {
            let format = ReportFormat::parse(&format)?;
            let mut sweep = match &config {
                Some(path) => {
                    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                    toml::from_str(&text).map_err(|e| HarnessError::Config(e.to_string()))?
                }
                None => SweepConfig::default(),
            };
            if let Some(path) = &common.scenario {
                sweep.scenario = load_scenario(path)?;
            }
            if let Some(d) = densities {
                sweep.densities = d;
            }
            if common.seed.is_some() || seeds.is_some() {
                let first = common.seed.unwrap_or(1);
                let n = seeds.unwrap_or(sweep.seeds.len() as u64);
                sweep.seeds = (first..first.saturating_add(n)).collect();
            }
            if let Some(e) = epochs {
                sweep.epochs = e;
            }
            let result = run_sweep(&sweep)?;
            let failed = result.rows.iter().filter(|r| r.error.is_some()).count();
            if failed > 0 {
                eprintln!("{failed} rows failed; see the error column of rows.csv");
            }
            let dir = out_dir(&common)?;
            let path = dir.join("rows.csv");
            write_rows_csv(&result, create(&path)?)?;
            let path = dir.join("summary.csv");
            write_summary_csv(&summarize(&result), create(&path)?)?;
            let text = render(&result, format)?;
            fs::write(dir.join(format!("report.{}", format.extension())), &text).map_err(|e| Error::io(&dir, e))?;
            print!("{text}");
            Ok(())
        }
        Command::Report { input, format, out } => {
            let format = ReportFormat::parse(&format)?;
            let file = fs::File::open(&input).map_err(|e| Error::io(&input, e))?;
            let result: SweepResult = read_rows_csv(file)?;
            let text = render(&result, format)?;
            emit(out.as_deref(), &format!("report.{}", format.extension()), text.as_bytes())
        }
    }
}

#[derive(Serialize)]
struct Analysis {
    users: usize,
    mean_rog_m: f64,
    mean_cell_rog_m: f64,
    mean_visited_cells: f64,
    handover_traffic_spearman: Option<f64>,
    traffic_by_location: Vec<CategoryLocationRow>,
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

fn scenario(common: &Common) -> Result<ScenarioConfig> {
    let mut s = match &common.scenario {
        Some(path) => load_scenario(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = common.seed {
        s.rng_seed = seed;
    }
    s.validate()?;
    Ok(s)
}

fn simulate(scenario: &ScenarioConfig, fraction: f64) -> Result<Vec<EpochOutput>> {
    let mut sim = Simulation::new(scenario.clone())?;
    let epochs = scenario.timing.epochs_per_run;
    let plan = if fraction > 0.0 {
        AssignmentPlan::random(&sim.layout, epochs, fraction, derive_seed(scenario.rng_seed, &[stream::MISCONFIG]))
    } else {
        AssignmentPlan::nominal(epochs)
    };
    sim.run(&plan)
}

fn out_dir(common: &Common) -> Result<PathBuf> {
    let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn emit(out: Option<&Path>, name: &str, bytes: &[u8]) -> Result<()> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(|e| Error::io(&path, e))
        }
        None => std::io::stdout().write_all(bytes).map_err(|e| Error::io("<stdout>", e)),
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for r in rows {
        w.serialize(r).map_err(|e| Error::io(path, e.into()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
