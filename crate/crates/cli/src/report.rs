//! Writing and reading sweep reports.
//!
//! A report directory holds
//!
//! * `results.jsonl`: one JSON record per cell, each tagged with
//!   `schema_version` and the run metadata;
//! * `table.txt`: lowest and mean error per normalizer plus the per-parameter
//!   errors;
//! * `traces/<normalizer>_<grid index>.csv`: one row per solver iteration for
//!   the dual solvers.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use ssc_core::ldssc::TraceRecord;

use crate::sweep::{Cell, SweepReport};

pub const SCHEMA_VERSION: u32 = 1;
pub const RESULTS_FILE: &str = "results.jsonl";
pub const TABLE_FILE: &str = "table.txt";
pub const TRACE_DIR: &str = "traces";

/// Fields that hold wall-clock measurements; everything else in a record is
/// determined by the config and seed.
pub const TIMING_FIELDS: [&str; 2] = ["normalize_time", "wall_time"];

#[derive(Serialize, Deserialize)]
struct Record {
    schema_version: u32,
    dataset: String,
    n: usize,
    k: usize,
    restarts: usize,
    seed: u64,
    #[serde(flatten)]
    cell: Cell,
}

/// Paths written by [`emit_report`].
#[derive(Clone, Debug)]
pub struct Emitted {
    pub results: PathBuf,
    pub table: PathBuf,
    pub traces: Vec<PathBuf>,
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory, then renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temporary file in {}", dir.display()))?;
    tmp.write_all(contents)
        .and_then(|_| tmp.as_file().sync_all())
        .with_context(|| format!("writing {}", path.display()))?;
    tmp.persist(path)
        .with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub fn results_jsonl(report: &SweepReport) -> Result<String> {
    let mut out = String::new();
    for cell in &report.cells {
        let rec = Record {
            schema_version: SCHEMA_VERSION,
            dataset: report.dataset.clone(),
            n: report.n,
            k: report.k,
            restarts: report.restarts,
            seed: report.seed,
            cell: cell.clone(),
        };
        out.push_str(&serde_json::to_string(&rec)?);
        out.push('\n');
    }
    Ok(out)
}

fn fmt_err(e: Option<f64>) -> String {
    e.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into())
}

pub fn render_table(report: &SweepReport) -> String {
    let mut grid: Vec<(usize, f64)> = report
        .cells
        .iter()
        .map(|c| (c.grid_index, c.grid.label))
        .collect();
    grid.sort_by_key(|g| g.0);
    grid.dedup_by_key(|g| g.0);

    let mut s = String::new();
    let _ = writeln!(
        s,
        "dataset {} (n = {}, k = {}, best of {} restarts, seed {})",
        report.dataset, report.n, report.k, report.restarts, report.seed
    );
    let _ = writeln!(s);
    let _ = write!(s, "{:<10} {:>8} {:>8}", "normalizer", "lowest", "mean");
    for (_, label) in &grid {
        let _ = write!(s, " {:>8}", format!("{label}"));
    }
    let _ = writeln!(s);
    for a in &report.aggregates {
        let _ = write!(
            s,
            "{:<10} {:>8} {:>8}",
            a.normalizer.label(),
            fmt_err(a.lowest),
            fmt_err(a.mean)
        );
        for (idx, _) in &grid {
            let cell = report
                .cells
                .iter()
                .find(|c| c.normalizer == a.normalizer && c.grid_index == *idx);
            let txt = match cell {
                Some(c) if c.failure.is_some() => "failed".to_string(),
                Some(c) => fmt_err(c.error_rate),
                None => String::new(),
            };
            let _ = write!(s, " {txt:>8}");
        }
        let _ = writeln!(s);
    }
    let failures: Vec<&Cell> = report
        .cells
        .iter()
        .filter(|c| c.failure.is_some())
        .collect();
    if !failures.is_empty() {
        let _ = writeln!(s);
        for c in failures {
            let _ = writeln!(
                s,
                "{} at {}: {}",
                c.normalizer.label(),
                c.grid.label,
                c.failure.as_deref().unwrap_or_default()
            );
        }
    }
    s
}

pub fn trace_csv(trace: &[TraceRecord]) -> String {
    let mut s = String::from("iteration,dual_objective,primal_objective,gap,row_sum_residual,min_entry,evaluations,wall_time\n");
    for t in trace {
        let _ = writeln!(
            s,
            "{},{:e},{:e},{:e},{:e},{:e},{},{:e}",
            t.iteration,
            t.dual_objective,
            t.primal_objective,
            t.gap,
            t.row_sum_residual,
            t.min_entry,
            t.evaluations,
            t.wall_time
        );
    }
    s
}

pub fn trace_file_name(cell: &Cell) -> String {
    format!("{}_{}.csv", cell.normalizer.name(), cell.grid_index)
}

pub fn emit_report(report: &SweepReport, dir: &Path) -> Result<Emitted> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let results = dir.join(RESULTS_FILE);
    write_atomic(&results, results_jsonl(report)?.as_bytes())?;
    let table = dir.join(TABLE_FILE);
    write_atomic(&table, render_table(report).as_bytes())?;
    let mut traces = Vec::new();
    let with_trace: Vec<&Cell> = report
        .cells
        .iter()
        .filter(|c| !c.trace.is_empty())
        .collect();
    if !with_trace.is_empty() {
        let tdir = dir.join(TRACE_DIR);
        std::fs::create_dir_all(&tdir).with_context(|| format!("creating {}", tdir.display()))?;
        for c in with_trace {
            let p = tdir.join(trace_file_name(c));
            write_atomic(&p, trace_csv(&c.trace).as_bytes())?;
            traces.push(p);
        }
    }
    Ok(Emitted {
        results,
        table,
        traces,
    })
}

/// Reads `results.jsonl` back into a report. Aggregates are recomputed from
/// the cells; traces are not reloaded.
pub fn parse_results(path: &Path) -> Result<SweepReport> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut meta: Option<(String, usize, usize, usize, u64)> = None;
    let mut cells = Vec::new();
    for (i, line) in text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
    {
        let rec: Record = serde_json::from_str(line)
            .with_context(|| format!("{}: line {}", path.display(), i + 1))?;
        if rec.schema_version != SCHEMA_VERSION {
            bail!(
                "{}: line {}: unsupported schema version {}",
                path.display(),
                i + 1,
                rec.schema_version
            );
        }
        let m = (rec.dataset, rec.n, rec.k, rec.restarts, rec.seed);
        match &meta {
            None => meta = Some(m),
            Some(prev) if *prev != m => bail!(
                "{}: line {}: run metadata differs from line 1",
                path.display(),
                i + 1
            ),
            _ => {}
        }
        cells.push(rec.cell);
    }
    let (dataset, n, k, restarts, seed) =
        meta.with_context(|| format!("{}: no records", path.display()))?;
    Ok(SweepReport::from_cells(
        dataset, n, k, restarts, seed, cells,
    ))
}

/// The results file with timing fields removed, for determinism checks.
pub fn strip_timing(jsonl: &str) -> Result<String> {
    let mut out = String::new();
    for line in jsonl.lines() {
        let mut v: serde_json::Value = serde_json::from_str(line)?;
        if let Some(obj) = v.as_object_mut() {
            for f in TIMING_FIELDS {
                obj.remove(f);
            }
        }
        out.push_str(&serde_json::to_string(&v)?);
        out.push('\n');
    }
    Ok(out)
}
