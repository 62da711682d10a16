//! `hems`: run the community EMS on a scenario file and write reports,
//! ledgers and plot-ready CSVs.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hems_core::community::{build_weight_matrix, coordinate_traced, write_ledger_csv, TransactionLedger};
use hems_core::local::{build_local_model, peer_links, write_schedule_csv, EfficiencyModel, LocalMode, LocalOptions};
use hems_core::milp::{backend_from_env, write_lp, MilpBackend};
use hems_core::orchestrator::{
    build_centralized_model, compare, comparison_csv, comparison_text, run, solve_locals, CostReport, RunConfig,
    RunError, RunMode,
};
use hems_core::scenario::presets::{generate, Preset};
use hems_core::scenario::{load_scenario, save_scenario, Scenario};

#[derive(Parser)]
#[command(name = "hems", version, about = "Hierarchical energy management for microgrid communities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a scenario in one mode and write report, ledger and schedules.
    Run(RunArgs),
    /// Tabulate reports of the same scenario side by side.
    Compare {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        /// Also write the table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Write one of the bundled synthetic communities.
    GenScenario {
        #[arg(long)]
        preset: Preset,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Check a scenario file without solving it.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Solve locally, then log every iteration of the pairing loop as JSON lines.
    PairingTrace {
        #[arg(long)]
        scenario: PathBuf,
        /// Destination file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value = "hierarchical")]
    mode: RunMode,
    #[arg(long)]
    out: PathBuf,
    /// Write every MILP in CPLEX LP format to this directory.
    #[arg(long)]
    dump_lp: Option<PathBuf>,
    /// Write pairing_trace.jsonl next to the report.
    #[arg(long)]
    trace_pairing: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "paper")]
    efficiency: EfficiencyModel,
    /// Let local problems trade with peers at the community price.
    #[arg(long)]
    community_aware: bool,
    /// Solve local problems one after another.
    #[arg(long)]
    serial: bool,
    /// Zero the wall-clock timings so reports compare byte for byte.
    #[arg(long)]
    omit_timings: bool,
}

#[derive(Debug)]
enum Failure {
    /// Bad input or IO; exit code 1.
    Input(String),
    /// The solver could not produce a schedule; exit code 2.
    Solver(String),
}

impl Failure {
    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Failure::Input(format!("{}: {e}", path.display()))
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        if e.is_input_error() {
            Failure::Input(e.to_string())
        } else {
            Failure::Solver(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("solver failure: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run(args) => cmd_run(&args),
        Command::Compare { reports, csv } => cmd_compare(&reports, csv.as_deref()),
        Command::GenScenario { preset, out, seed } => {
            let s = generate(preset, seed);
            save_scenario(&s, &out).map_err(|e| Failure::Input(e.to_string()))?;
            println!("wrote {} ({} microgrids, {} steps)", out.display(), s.len(), s.horizon.steps);
            Ok(())
        }
        Command::Validate { scenario } => {
            let s = load(&scenario)?;
            build_weight_matrix(&s.topology, &s.microgrids).map_err(|e| Failure::Input(e.to_string()))?;
            println!(
                "{}: ok ({} microgrids, {} steps of {} h)",
                scenario.display(),
                s.len(),
                s.horizon.steps,
                s.horizon.dt_hours
            );
            Ok(())
        }
        Command::PairingTrace { scenario, out } => cmd_trace(&scenario, out.as_deref()),
    }
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    load_scenario(path).map_err(|e| Failure::Input(e.to_string()))
}

fn backend() -> Result<Box<dyn MilpBackend>, Failure> {
    backend_from_env().map_err(|e| Failure::Input(e.to_string()))
}

fn config(args: &RunArgs) -> RunConfig {
    let mut cfg = RunConfig::new(args.mode);
    cfg.seed = args.seed;
    cfg.solver.seed = args.seed;
    cfg.efficiency = args.efficiency;
    cfg.local_mode = if args.community_aware { LocalMode::CommunityAware } else { LocalMode::Standalone };
    cfg.parallel = !args.serial;
    cfg.trace_pairing = args.trace_pairing && args.mode == RunMode::Hierarchical;
    cfg
}

fn cmd_run(args: &RunArgs) -> Result<(), Failure> {
    let scenario = load(&args.scenario)?;
    let backend = backend()?;
    let cfg = config(args);
    if let Some(dir) = &args.dump_lp {
        dump_lp(&scenario, &cfg, dir)?;
    }
    let out = run(&scenario, &cfg, backend.as_ref())?;
    let report = if args.omit_timings { out.report.without_timings() } else { out.report.clone() };

    let dir = &args.out;
    let sched_dir = dir.join("schedules");
    fs::create_dir_all(&sched_dir).map_err(|e| Failure::io(&sched_dir, e))?;
    write(&dir.join("report.json"), &report.to_json())?;
    let ledger_path = dir.join("ledger.csv");
    write_ledger_csv(&out.ledger, &ledger_path).map_err(|e| Failure::io(&ledger_path, e))?;
    for s in &out.schedules {
        let p = sched_dir.join(format!("{}.csv", s.mg_id));
        write_schedule_csv(s, &p).map_err(|e| Failure::io(&p, e))?;
    }
    write(&dir.join("prices.csv"), &prices_csv(&scenario))?;
    write(&dir.join("flows.csv"), &flows_csv(&out.ledger))?;
    if let Some(trace) = &out.trace {
        write(&dir.join("pairing_trace.jsonl"), &jsonl(trace))?;
    }
    println!("{}", comparison_text(&compare(std::slice::from_ref(&report))?));
    println!("wrote {}", dir.display());
    Ok(())
}

fn cmd_compare(paths: &[PathBuf], csv_out: Option<&Path>) -> Result<(), Failure> {
    let mut reports = Vec::with_capacity(paths.len());
    for p in paths {
        let text = fs::read_to_string(p).map_err(|e| Failure::io(p, e))?;
        let r: CostReport = serde_json::from_str(&text).map_err(|e| Failure::io(p, e))?;
        reports.push(r);
    }
    let rows = compare(&reports)?;
    print!("{}", comparison_text(&rows));
    if let Some(p) = csv_out {
        write(p, &comparison_csv(&rows))?;
    }
    Ok(())
}

fn cmd_trace(scenario_path: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let scenario = load(scenario_path)?;
    let backend = backend()?;
    let cfg = RunConfig::new(RunMode::Hierarchical);
    let schedules = solve_locals(&scenario, &cfg, backend.as_ref())?;
    let w = build_weight_matrix(&scenario.topology, &scenario.microgrids).map_err(|e| Failure::Input(e.to_string()))?;
    let (_, trace) = coordinate_traced(&schedules, &w, &scenario.prices).map_err(RunError::from)?;
    let text = jsonl(&trace);
    match out {
        Some(p) => write(p, &text),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::Input(e.to_string())),
    }
}

fn dump_lp(scenario: &Scenario, cfg: &RunConfig, dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
    if cfg.mode == RunMode::Centralized {
        let w = build_weight_matrix(&scenario.topology, &scenario.microgrids).map_err(|e| Failure::Input(e.to_string()))?;
        let opts = LocalOptions { mode: LocalMode::CommunityAware, efficiency: cfg.efficiency };
        let (model, _) = build_centralized_model(scenario, &w, &opts)?;
        let p = dir.join("centralized.lp");
        return write_lp(&model, &p).map_err(|e| Failure::io(&p, e));
    }
    let opts = LocalOptions { mode: cfg.local_mode, efficiency: cfg.efficiency };
    for (i, mg) in scenario.microgrids.iter().enumerate() {
        let (model, _) = build_local_model(mg, &scenario.prices, &scenario.horizon, &opts, &peer_links(scenario, i))
            .map_err(|e| Failure::Input(format!("{}: {e}", mg.id)))?;
        let p = dir.join(format!("{}.lp", mg.id));
        write_lp(&model, &p).map_err(|e| Failure::io(&p, e))?;
    }
    Ok(())
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::io(path, e))
}

fn jsonl<T: serde::Serialize>(items: &[T]) -> String {
    items.iter().map(|e| serde_json::to_string(e).expect("serializable") + "\n").collect()
}

fn csv_string(header: Vec<String>, rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// Price curves per step.
fn prices_csv(s: &Scenario) -> String {
    let p = &s.prices;
    let header = ["t", "hour", "buy", "sell", "community"].map(String::from).to_vec();
    csv_string(
        header,
        (0..s.horizon.steps).map(|t| {
            vec![
                t.to_string(),
                (t as f64 * s.horizon.dt_hours).to_string(),
                p.buy[t].to_string(),
                p.sell[t].to_string(),
                p.community[t].to_string(),
            ]
        }),
    )
}

/// Heat-map data: per step and MG, net exchange, peer exchange and residual grid exchange.
fn flows_csv(ledger: &TransactionLedger) -> String {
    let mut header = vec!["t".to_string()];
    for id in &ledger.mg_ids {
        header.extend([format!("p_c_{id}"), format!("peer_{id}"), format!("grid_{id}")]);
    }
    csv_string(
        header,
        ledger.steps.iter().map(|step| {
            let mut row = vec![step.t.to_string()];
            for i in 0..ledger.mg_ids.len() {
                row.extend([step.initial[i].to_string(), step.peer_net(i).to_string(), step.residual[i].to_string()]);
            }
            row
        }),
    )
}
