//! Kernel-parameter sweeps over several normalizers.

use std::time::Instant;

use anyhow::Result;
use serde::{Deserialize, Serialize};
use ssc_core::affinity::{build_affinity, Dataset};
use ssc_core::cluster::{error_rate, kmeans, spectral_embed};
use ssc_core::ldssc::TraceRecord;
use ssc_core::normalize::{apply_normalizer, NormalizerKind, NormalizerSpec};

use crate::config::{maybe_sparsify, GridPoint, RunConfig};
use crate::pool;

/// Outcome of one (normalizer, kernel parameter) pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub normalizer: NormalizerKind,
    /// Position in the kernel grid.
    pub grid_index: usize,
    pub grid: GridPoint,
    /// `None` when the cell failed or the dataset has no labels.
    pub error_rate: Option<f64>,
    pub inertia: Option<f64>,
    pub labels: Option<Vec<usize>>,
    pub iterations: usize,
    pub evaluations: Option<usize>,
    pub converged: bool,
    pub failure: Option<String>,
    pub normalize_time: f64,
    pub wall_time: f64,
    /// Convergence trace for the dual solvers. Written to its own file.
    #[serde(skip)]
    pub trace: Vec<TraceRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub normalizer: NormalizerKind,
    pub lowest: Option<f64>,
    pub mean: Option<f64>,
    /// Cells that produced an error rate.
    pub scored: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    pub dataset: String,
    pub n: usize,
    pub k: usize,
    pub restarts: usize,
    pub seed: u64,
    pub cells: Vec<Cell>,
    pub aggregates: Vec<Aggregate>,
}

impl SweepReport {
    /// Builds the report and its aggregates from finished cells.
    pub fn from_cells(
        dataset: String,
        n: usize,
        k: usize,
        restarts: usize,
        seed: u64,
        cells: Vec<Cell>,
    ) -> Self {
        let aggregates = aggregate(&cells);
        SweepReport {
            dataset,
            n,
            k,
            restarts,
            seed,
            cells,
            aggregates,
        }
    }

    pub fn aggregate_for(&self, kind: NormalizerKind) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.normalizer == kind)
    }
}

/// Lowest and mean error per normalizer, in order of first appearance.
pub fn aggregate(cells: &[Cell]) -> Vec<Aggregate> {
    let mut order: Vec<NormalizerKind> = Vec::new();
    for c in cells {
        if !order.contains(&c.normalizer) {
            order.push(c.normalizer);
        }
    }
    order
        .into_iter()
        .map(|kind| {
            let mine: Vec<&Cell> = cells.iter().filter(|c| c.normalizer == kind).collect();
            let errs: Vec<f64> = mine.iter().filter_map(|c| c.error_rate).collect();
            Aggregate {
                normalizer: kind,
                lowest: errs.iter().copied().reduce(f64::min),
                mean: (!errs.is_empty()).then(|| errs.iter().sum::<f64>() / errs.len() as f64),
                scored: errs.len(),
                failed: mine.iter().filter(|c| c.failure.is_some()).count(),
            }
        })
        .collect()
}

struct Job {
    normalizer: NormalizerKind,
    grid_index: usize,
    grid: GridPoint,
}

/// Runs every (normalizer, grid point) cell. A failing cell is recorded and
/// the rest of the sweep carries on.
pub fn run_sweep(cfg: &RunConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let prepared = cfg.prepare()?;
    let grid = cfg.kernel.points(&prepared.data)?;
    let jobs: Vec<Job> = cfg
        .normalizers
        .iter()
        .flat_map(|&normalizer| {
            grid.iter().enumerate().map(move |(grid_index, g)| Job {
                normalizer,
                grid_index,
                grid: *g,
            })
        })
        .collect();
    log::info!(
        "sweep over {} cells ({} normalizers × {} kernel parameters) on {} (n = {})",
        jobs.len(),
        cfg.normalizers.len(),
        grid.len(),
        prepared.data.name,
        prepared.data.len()
    );
    let cells = pool::run_jobs(jobs.len(), |i| {
        let job = &jobs[i];
        let cell = run_cell(cfg, &prepared.data, prepared.k_nn, job);
        log::info!(
            "{} grid[{}] = {}: error {:?}{}",
            job.normalizer.label(),
            job.grid_index,
            job.grid.label,
            cell.error_rate,
            cell.failure
                .as_deref()
                .map(|f| format!(" (failed: {f})"))
                .unwrap_or_default()
        );
        cell
    })?;
    Ok(SweepReport::from_cells(
        prepared.data.name.clone(),
        prepared.data.len(),
        cfg.k,
        cfg.restarts,
        cfg.seed,
        cells,
    ))
}

fn run_cell(cfg: &RunConfig, data: &Dataset, k_nn: Option<usize>, job: &Job) -> Cell {
    let start = Instant::now();
    let mut cell = Cell {
        normalizer: job.normalizer,
        grid_index: job.grid_index,
        grid: job.grid,
        error_rate: None,
        inertia: None,
        labels: None,
        iterations: 0,
        evaluations: None,
        converged: false,
        failure: None,
        normalize_time: 0.0,
        wall_time: 0.0,
        trace: Vec::new(),
    };
    if let Err(e) = fill_cell(&mut cell, &cfg.spec(job.normalizer), cfg, data, k_nn) {
        cell.failure = Some(format!("{e:#}"));
    }
    cell.wall_time = start.elapsed().as_secs_f64();
    cell
}

fn fill_cell(
    cell: &mut Cell,
    spec: &NormalizerSpec,
    cfg: &RunConfig,
    data: &Dataset,
    k_nn: Option<usize>,
) -> Result<()> {
    let affinity = maybe_sparsify(build_affinity(data, &cell.grid.kernel)?, k_nn)?;
    let t = Instant::now();
    let normalized = apply_normalizer(&affinity, spec)?;
    cell.normalize_time = t.elapsed().as_secs_f64();
    cell.iterations = normalized.iterations;
    cell.converged = normalized.converged;
    if let Some(report) = normalized.solver {
        cell.evaluations = Some(report.evaluations);
        cell.trace = report.trace;
    }
    let embedding = spectral_embed(&normalized.matrix, cfg.k)?;
    let clusters = kmeans(&embedding, cfg.k, cfg.restarts, cfg.seed)?;
    if let Some(truth) = data.labels() {
        cell.error_rate = Some(error_rate(&clusters.labels, truth)?);
    }
    cell.inertia = Some(clusters.inertia);
    cell.labels = Some(clusters.labels);
    Ok(())
}
