use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigUint;

use csp_regularize::bench::{
    adjacency_selection, build_black_hole_csp, format_summary, generate_black_hole, load_model,
    run_benchmark_to_path, save_model, summarize, BenchInstance, BenchOptions, Deal,
};
use csp_regularize::par::Execution;
use csp_regularize::regularize::{apply_mode, Mode, RegularizeConfig, Selection};
use csp_regularize::search::solve_first;

const SOLVED: u8 = 0;
const UNSAT: u8 = 1;
const TIMEOUT: u8 = 2;
const USAGE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "cspreg",
    version,
    about = "Finite-domain CSP solver with sub-problem regularization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a model for its first solution.
    Solve {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "original")]
        mode: Mode,
        /// Constraint groups used by non-original modes.
        #[arg(long, default_value = "auto")]
        select: String,
        #[arg(long, default_value_t = 60_000)]
        time_limit_ms: u64,
        /// Append one statistics row (bench CSV schema).
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Rewrite a model and save the result.
    Regularize {
        #[arg(long)]
        model: PathBuf,
        /// `i,j;k` groups constraint indices; `auto` uses the size threshold.
        #[arg(long)]
        select: String,
        #[arg(long)]
        mode: Mode,
        #[arg(long)]
        out: PathBuf,
    },
    /// Benchmark generated instances.
    Bench {
        #[command(subcommand)]
        family: BenchFamily,
    },
}

#[derive(Subcommand)]
enum BenchFamily {
    /// Black Hole patience deals.
    Blackhole(BlackholeArgs),
}

#[derive(Args)]
struct BlackholeArgs {
    /// Number of seeded deals.
    #[arg(long, default_value_t = 10)]
    instances: u64,
    /// First seed; deals use seeds `seed..seed+instances`.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Also run the enumerated deal.
    #[arg(long)]
    enumerated: bool,
    #[arg(long, default_value_t = 60_000)]
    time_limit_ms: u64,
    #[arg(long)]
    out: PathBuf,
    /// Run cells concurrently.
    #[arg(long)]
    parallel: bool,
}

fn parse_selection(spec: &str) -> Result<Selection, String> {
    if spec.trim() == "auto" {
        return Ok(Selection::Auto {
            threshold: BigUint::from(csp_regularize::regularize::DEFAULT_AUTO_THRESHOLD),
        });
    }
    spec.split(';')
        .filter(|g| !g.trim().is_empty())
        .map(|g| {
            g.split(',')
                .map(|i| {
                    i.trim()
                        .parse::<usize>()
                        .map_err(|e| format!("bad index `{i}`: {e}"))
                })
                .collect()
        })
        .collect::<Result<Vec<Vec<usize>>, String>>()
        .map(Selection::Explicit)
}

fn run(cli: Cli) -> Result<u8, String> {
    match cli.command {
        Command::Solve {
            model,
            mode,
            select,
            time_limit_ms,
            stats,
        } => {
            let csp = load_model(&model).map_err(|e| e.to_string())?;
            let cfg = RegularizeConfig::new(mode, parse_selection(&select)?);
            let (rewritten, report) = apply_mode(&csp, &cfg).map_err(|e| e.to_string())?;
            let (solution, st) = solve_first(&rewritten, Duration::from_millis(time_limit_ms));
            let text = match &solution {
                Some(s) => csp
                    .variables()
                    .iter()
                    .zip(s.values())
                    .map(|(v, x)| format!("{} = {x}\n", v.name))
                    .collect(),
                None if st.timed_out => "timeout\n".to_string(),
                None => "unsatisfiable\n".to_string(),
            };
            write_stdout(&text);
            eprintln!(
                "mode={mode} nodes={} fails={} elapsed_ms={:.3} transform_ms={:.3}",
                st.nodes,
                st.fails,
                st.elapsed_ms(),
                report.total_ms()
            );
            if let Some(path) = stats {
                append_stats(
                    &path,
                    &model,
                    mode,
                    &st,
                    solution.is_some(),
                    report.total_ms(),
                )
                .map_err(|e| e.to_string())?;
            }
            Ok(match (&solution, st.timed_out) {
                (Some(_), _) => SOLVED,
                (None, true) => TIMEOUT,
                (None, false) => UNSAT,
            })
        }
        Command::Regularize {
            model,
            select,
            mode,
            out,
        } => {
            let csp = load_model(&model).map_err(|e| e.to_string())?;
            let cfg = RegularizeConfig::new(mode, parse_selection(&select)?);
            let (rewritten, report) = apply_mode(&csp, &cfg).map_err(|e| e.to_string())?;
            save_model(&rewritten, &out).map_err(|e| e.to_string())?;
            for e in &report.entries {
                eprintln!(
                    "selection {:?}: {} solutions, states {:?} -> {:?}",
                    e.selection, e.solutions, e.states_before, e.states_after
                );
            }
            eprintln!(
                "{} -> {} constraints in {:.3} ms",
                csp.constraints().len(),
                rewritten.constraints().len(),
                report.total_ms()
            );
            Ok(SOLVED)
        }
        Command::Bench {
            family: BenchFamily::Blackhole(args),
        } => {
            let mut deals: Vec<Deal> = Vec::new();
            if args.enumerated {
                deals.push(Deal::Enumerated);
            }
            deals.extend((args.seed..args.seed + args.instances).map(Deal::Seeded));
            let instances: Vec<BenchInstance> = deals
                .into_iter()
                .map(|d| {
                    let inst = generate_black_hole(d);
                    let csp = build_black_hole_csp(&inst).expect("generated deals are valid");
                    BenchInstance {
                        id: inst.id(),
                        selection: adjacency_selection(&csp),
                        csp,
                    }
                })
                .collect();
            let opts = BenchOptions {
                time_limit: Duration::from_millis(args.time_limit_ms),
                execution: if args.parallel {
                    Execution::Parallel
                } else {
                    Execution::Sequential
                },
                ..BenchOptions::default()
            };
            let results =
                run_benchmark_to_path(&instances, &opts, &args.out).map_err(|e| e.to_string())?;
            let rows: Vec<_> = results.into_iter().map(|c| c.row).collect();
            write_stdout(&format_summary(&summarize(&rows)));
            Ok(SOLVED)
        }
    }
}

fn append_stats(
    path: &PathBuf,
    model: &std::path::Path,
    mode: Mode,
    st: &csp_regularize::search::SearchStats,
    found: bool,
    transform_ms: f64,
) -> std::io::Result<()> {
    use std::io::Write;
    let fresh = !path.exists();
    let mut f = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)?;
    if fresh {
        writeln!(f, "{}", csp_regularize::bench::CSV_HEADER)?;
    }
    writeln!(
        f,
        "{},{mode},{:.3},{},{},{},{found},{transform_ms:.3}",
        model.display(),
        st.elapsed_ms(),
        st.timed_out,
        st.fails,
        st.nodes
    )
}

/// Prints `text`, ignoring a closed pipe on the reading side.
fn write_stdout(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { SOLVED };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(USAGE)
        }
    }
}
