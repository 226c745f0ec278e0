//! Benchmark orchestration: every (instance, mode) cell is transformed,
//! solved for a first solution, and checked against the untransformed model.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use thiserror::Error;

use crate::csp::Csp;
use crate::par::Execution;
use crate::regularize::{apply_mode, Mode, RegularizeConfig, RegularizeError, Selection};
use crate::search::{solve_first, SearchStats, Solution};

pub const CSV_HEADER: &str =
    "instance,mode,elapsed_ms,timed_out,fails,nodes,solution_found,transform_ms";

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("instance {instance}, mode {mode}: {source}")]
    Transform {
        instance: String,
        mode: Mode,
        source: RegularizeError,
    },
    #[error("instance {instance}, mode {mode}: solution violates the original model")]
    InvalidSolution { instance: String, mode: Mode },
}

#[derive(Clone, Debug)]
pub struct BenchInstance {
    pub id: String,
    pub csp: Csp,
    pub selection: Selection,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub instance: String,
    pub mode: Mode,
    pub elapsed_ms: f64,
    pub timed_out: bool,
    pub fails: u64,
    pub nodes: u64,
    pub solution_found: bool,
    pub transform_ms: f64,
}

impl BenchRow {
    fn record(&self) -> [String; 8] {
        [
            self.instance.clone(),
            self.mode.to_string(),
            format!("{:.3}", self.elapsed_ms),
            self.timed_out.to_string(),
            self.fails.to_string(),
            self.nodes.to_string(),
            self.solution_found.to_string(),
            format!("{:.3}", self.transform_ms),
        ]
    }
}

/// Outcome of one cell, including the solution for cross-mode comparison.
#[derive(Clone, Debug)]
pub struct CellResult {
    pub row: BenchRow,
    pub stats: SearchStats,
    pub solution: Option<Solution>,
}

#[derive(Clone, Debug)]
pub struct BenchOptions {
    pub modes: Vec<Mode>,
    pub time_limit: Duration,
    /// Runs cells concurrently; per-cell timings then share the machine.
    pub execution: Execution,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            modes: Mode::ALL.to_vec(),
            time_limit: Duration::from_secs(60),
            execution: Execution::Sequential,
        }
    }
}

pub fn run_cell(
    inst: &BenchInstance,
    mode: Mode,
    time_limit: Duration,
) -> Result<CellResult, BenchError> {
    let cfg = RegularizeConfig {
        execution: Execution::Sequential,
        ..RegularizeConfig::new(mode, inst.selection.clone())
    };
    let (model, report) = apply_mode(&inst.csp, &cfg).map_err(|source| BenchError::Transform {
        instance: inst.id.clone(),
        mode,
        source,
    })?;
    let (solution, stats) = solve_first(&model, time_limit);
    if let Some(s) = &solution {
        if !inst.csp.check(s.values()) {
            return Err(BenchError::InvalidSolution {
                instance: inst.id.clone(),
                mode,
            });
        }
    }
    let row = BenchRow {
        instance: inst.id.clone(),
        mode,
        elapsed_ms: stats.elapsed_ms(),
        timed_out: stats.timed_out,
        fails: stats.fails,
        nodes: stats.nodes,
        solution_found: solution.is_some(),
        transform_ms: report.total_ms(),
    };
    Ok(CellResult {
        row,
        stats,
        solution,
    })
}

/// Runs every cell, appending one flushed CSV row per completed cell.
pub fn run_benchmark<W: Write + Send>(
    instances: &[BenchInstance],
    opts: &BenchOptions,
    out: W,
) -> Result<Vec<CellResult>, BenchError> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(CSV_HEADER.split(','))?;
    writer.flush()?;
    let writer = Mutex::new(writer);
    let cells: Vec<(&BenchInstance, Mode)> = instances
        .iter()
        .flat_map(|i| opts.modes.iter().map(move |&m| (i, m)))
        .collect();
    let results = opts.execution.map(cells, |(inst, mode)| {
        let cell = run_cell(inst, mode, opts.time_limit)?;
        let mut w = writer.lock().expect("writer lock");
        w.write_record(cell.row.record())?;
        w.flush()?;
        Ok(cell)
    });
    results.into_iter().collect()
}

pub fn run_benchmark_to_path(
    instances: &[BenchInstance],
    opts: &BenchOptions,
    path: impl AsRef<Path>,
) -> Result<Vec<CellResult>, BenchError> {
    let file = std::fs::File::create(path)?;
    run_benchmark(instances, opts, file)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeSummary {
    pub mode: Mode,
    /// Mean elapsed time over solved cells.
    pub average_ms: Option<f64>,
    /// Mean percentage improvement over `original` on instances both solved.
    pub average_improvement: Option<f64>,
    pub fastest: usize,
    pub solved: usize,
}

/// Per-mode aggregates: average time, improvement over `original`, number of
/// instances where the mode was fastest (ties credit every tied mode), and
/// number solved.
pub fn summarize(rows: &[BenchRow]) -> Vec<ModeSummary> {
    let mut by_instance: BTreeMap<&str, Vec<&BenchRow>> = BTreeMap::new();
    for r in rows {
        by_instance.entry(&r.instance).or_default().push(r);
    }
    let mut modes: Vec<Mode> = rows.iter().map(|r| r.mode).collect();
    modes.sort();
    modes.dedup();
    let mean = |xs: &[f64]| (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64);
    modes
        .into_iter()
        .map(|mode| {
            let mine: Vec<&BenchRow> = rows
                .iter()
                .filter(|r| r.mode == mode && r.solution_found)
                .collect();
            let times: Vec<f64> = mine.iter().map(|r| r.elapsed_ms).collect();
            let mut gains = Vec::new();
            let mut fastest = 0;
            for r in &mine {
                let peers = &by_instance[r.instance.as_str()];
                if let Some(base) = peers
                    .iter()
                    .find(|p| p.mode == Mode::Original && p.solution_found && p.elapsed_ms > 0.0)
                {
                    gains.push(100.0 * (base.elapsed_ms - r.elapsed_ms) / base.elapsed_ms);
                }
                let best = peers
                    .iter()
                    .filter(|p| p.solution_found)
                    .map(|p| p.elapsed_ms)
                    .fold(f64::INFINITY, f64::min);
                if r.elapsed_ms <= best {
                    fastest += 1;
                }
            }
            ModeSummary {
                mode,
                average_ms: mean(&times),
                average_improvement: mean(&gains),
                fastest,
                solved: mine.len(),
            }
        })
        .collect()
}

pub fn format_summary(summary: &[ModeSummary]) -> String {
    let opt = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"));
    let mut s = format!(
        "{:<20} {:>12} {:>14} {:>8} {:>7}\n",
        "mode", "avg_ms", "avg_improv_%", "fastest", "solved"
    );
    for m in summary {
        s.push_str(&format!(
            "{:<20} {:>12} {:>14} {:>8} {:>7}\n",
            m.mode.as_str(),
            opt(m.average_ms),
            opt(m.average_improvement),
            m.fastest,
            m.solved
        ));
    }
    s
}
