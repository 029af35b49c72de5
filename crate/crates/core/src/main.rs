//! Command-line frontend: `check`, `gen`, `bench`.

use clap::{Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::mpsc;
use std::time::{Duration, Instant};
use zonemc::automaton::{emit_model, parse_model, SymbolicTrace};
use zonemc::enumerative::{self, Budgets, Outcome, SearchOrder};
use zonemc::oracle::{generate_model, zone_reach_baseline, GeneratorConfig};
use zonemc::report::{EngineStats, RunReport, Verdict};
use zonemc::symbolic::{check_symbolic, SymOutcome};
use zonemc::{DomainMode, TimedAutomaton};

#[derive(Parser)]
#[command(name = "zonemc", about = "Reachability checking for timed automata", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum EngineKind {
    Enum,
    Sym,
    Oracle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum DomainModeArg {
    Global,
    PerNode,
    PerLocation,
}

impl From<DomainModeArg> for DomainMode {
    fn from(m: DomainModeArg) -> DomainMode {
        match m {
            DomainModeArg::Global => DomainMode::Global,
            DomainModeArg::PerNode => DomainMode::PerNode,
            DomainModeArg::PerLocation => DomainMode::PerLocation,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SearchArg {
    Dfs,
    Bfs,
}

#[derive(Subcommand)]
enum Command {
    /// Check reachability of the model's target location.
    Check {
        /// Model file in the line-oriented text format.
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = EngineKind::Enum)]
        engine: EngineKind,
        /// Abstraction sharing for the enumerative engine.
        #[arg(long, value_enum, default_value_t = DomainModeArg::PerLocation)]
        domain_mode: DomainModeArg,
        #[arg(long, value_enum, default_value_t = SearchArg::Dfs)]
        search: SearchArg,
        #[arg(long, default_value_t = 1_000_000)]
        max_nodes: usize,
        #[arg(long, default_value_t = 10_000)]
        max_refinements: usize,
        /// Machine-readable report on stdout.
        #[arg(long)]
        json: bool,
        /// Print the witness trace when reachable.
        #[arg(long)]
        trace: bool,
        /// Print engine statistics.
        #[arg(long)]
        stats: bool,
    },
    /// Generate a random model on stdout.
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        locations: usize,
        #[arg(long, default_value_t = 3)]
        clocks: usize,
        #[arg(long, default_value_t = 8)]
        edges: usize,
        #[arg(long, default_value_t = 5)]
        max_constant: i64,
        #[arg(long, default_value_t = 0.7)]
        guard_density: f64,
        #[arg(long, default_value_t = 0.25)]
        reset_density: f64,
    },
    /// Run every engine over a directory of models and emit CSV.
    Bench {
        /// Directory containing `.ta` model files.
        dir: PathBuf,
        /// Per-model, per-engine timeout in seconds.
        #[arg(long, default_value_t = 10)]
        timeout: u64,
    },
}

fn render_trace(ta: &TimedAutomaton, trace: &SymbolicTrace) -> Vec<String> {
    let mut out = vec![format!("start {}", ta.location_names[ta.initial])];
    for &e in &trace.edges {
        let edge = &ta.edges[e];
        out.push(format!(
            "edge {} -> {}",
            ta.location_names[edge.src], ta.location_names[edge.dst]
        ));
    }
    out
}

fn run_engine(
    ta: &TimedAutomaton,
    engine: EngineKind,
    mode: DomainMode,
    order: SearchOrder,
    budgets: Budgets,
) -> (Verdict, Option<SymbolicTrace>, EngineStats, usize) {
    match engine {
        EngineKind::Enum => {
            let (outcome, stats) = enumerative::check(ta, mode, order, budgets);
            let refinements = stats.refinement_passes;
            let trace = match outcome {
                Outcome::Reachable(ref t) => Some(t.clone()),
                _ => None,
            };
            (
                outcome.verdict(),
                trace,
                EngineStats::Enumerative(stats),
                refinements,
            )
        }
        EngineKind::Sym => {
            let result = check_symbolic(ta, budgets.max_refinements, 1 << 22);
            let refinements = result.stats.cegar_iterations.saturating_sub(1);
            let trace = result.witness_edges.map(|edges| SymbolicTrace { edges });
            (
                result.outcome.verdict(),
                trace,
                EngineStats::Symbolic(result.stats),
                refinements,
            )
        }
        EngineKind::Oracle => match zone_reach_baseline(ta, budgets.max_nodes) {
            Ok(true) => (Verdict::Reachable, None, EngineStats::Oracle { nodes: 0 }, 0),
            Ok(false) => (Verdict::NotReachable, None, EngineStats::Oracle { nodes: 0 }, 0),
            Err(_) => (Verdict::Inconclusive, None, EngineStats::Oracle { nodes: 0 }, 0),
        },
    }
}

fn cmd_check(
    model: &Path,
    engine: EngineKind,
    mode: DomainMode,
    order: SearchOrder,
    budgets: Budgets,
    json: bool,
    show_trace: bool,
    show_stats: bool,
) -> Result<Verdict, String> {
    let text = std::fs::read_to_string(model)
        .map_err(|e| format!("cannot read {}: {e}", model.display()))?;
    let ta = parse_model(&text).map_err(|e| format!("{}:{e}", model.display()))?;
    let start = Instant::now();
    let (verdict, trace, stats, _) = run_engine(&ta, engine, mode, order, budgets);
    let time_ms = start.elapsed().as_millis() as u64;

    // A reachable verdict must come with a replayable witness.
    let trace = match (verdict, trace) {
        (Verdict::Reachable, Some(t)) => {
            if engine != EngineKind::Oracle && ta.trace_feasible(&t).is_none() {
                return Err("internal error: witness trace failed concrete replay".into());
            }
            Some(t)
        }
        (_, t) => t,
    };

    let report = RunReport {
        verdict,
        trace: trace.as_ref().map(|t| render_trace(&ta, t)),
        stats,
        time_ms,
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&report).unwrap());
    } else {
        println!("verdict: {}", verdict.as_str());
        if show_trace {
            if let Some(lines) = &report.trace {
                for l in lines {
                    println!("  {l}");
                }
            }
        }
        if show_stats {
            println!("time: {time_ms} ms");
            println!("stats: {}", serde_json::to_string(&report.stats).unwrap());
        }
    }
    Ok(verdict)
}

fn cmd_gen(cfg: &GeneratorConfig) -> Verdict {
    let ta = generate_model(cfg);
    print!("{}", emit_model(&ta));
    Verdict::NotReachable // reused as exit code 0
}

fn bench_row(path: &Path, engine: EngineKind, timeout: Duration) -> (String, u64, usize) {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(_) => return ("read_error".into(), 0, 0),
    };
    let ta = match parse_model(&text) {
        Ok(ta) => ta,
        Err(_) => return ("parse_error".into(), 0, 0),
    };
    let (tx, rx) = mpsc::channel();
    let start = Instant::now();
    std::thread::spawn(move || {
        let budgets = Budgets::default();
        let (verdict, _, _, refinements) = run_engine(
            &ta,
            engine,
            DomainMode::PerLocation,
            SearchOrder::Dfs,
            budgets,
        );
        let _ = tx.send((verdict, refinements));
    });
    match rx.recv_timeout(timeout) {
        Ok((verdict, refinements)) => (
            verdict.as_str().to_string(),
            start.elapsed().as_millis() as u64,
            refinements,
        ),
        Err(_) => ("timeout".into(), timeout.as_millis() as u64, 0),
    }
}

fn cmd_bench(dir: &Path, timeout: u64) -> Result<(), String> {
    let mut models: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| format!("cannot read {}: {e}", dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "ta"))
        .collect();
    models.sort();
    println!("# zonemc bench csv v1");
    println!("model,engine,verdict,time_ms,refinements");
    for model in &models {
        for engine in [EngineKind::Enum, EngineKind::Sym, EngineKind::Oracle] {
            let (verdict, ms, refinements) =
                bench_row(model, engine, Duration::from_secs(timeout));
            println!(
                "{},{},{},{},{}",
                model.file_name().unwrap().to_string_lossy(),
                match engine {
                    EngineKind::Enum => "enum",
                    EngineKind::Sym => "sym",
                    EngineKind::Oracle => "oracle",
                },
                verdict,
                ms,
                refinements
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Check {
            model,
            engine,
            domain_mode,
            search,
            max_nodes,
            max_refinements,
            json,
            trace,
            stats,
        } => {
            let budgets = Budgets {
                max_nodes,
                max_refinements,
            };
            let order = match search {
                SearchArg::Dfs => SearchOrder::Dfs,
                SearchArg::Bfs => SearchOrder::Bfs,
            };
            match cmd_check(
                &model,
                engine,
                domain_mode.into(),
                order,
                budgets,
                json,
                trace,
                stats,
            ) {
                Ok(verdict) => ExitCode::from(verdict.exit_code() as u8),
                Err(msg) => {
                    eprintln!("error: {msg}");
                    ExitCode::from(2)
                }
            }
        }
        Command::Gen {
            seed,
            locations,
            clocks,
            edges,
            max_constant,
            guard_density,
            reset_density,
        } => {
            if locations == 0 || clocks == 0 || edges == 0 || max_constant < 1 {
                eprintln!("error: generator bounds must be at least 1");
                return ExitCode::from(2);
            }
            let cfg = GeneratorConfig {
                max_locations: locations,
                max_clocks: clocks,
                max_edges: edges,
                max_constant,
                guard_density,
                reset_density,
                seed,
            };
            cmd_gen(&cfg);
            ExitCode::SUCCESS
        }
        Command::Bench { dir, timeout } => match cmd_bench(&dir, timeout) {
            Ok(()) => ExitCode::SUCCESS,
            Err(msg) => {
                eprintln!("error: {msg}");
                ExitCode::from(2)
            }
        },
    }
}
