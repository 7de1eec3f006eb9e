//! Wall-time scaling of the dual solvers on synthetic data.

use std::fmt::Write as _;
use std::time::Instant;

use anyhow::{bail, Result};
use serde::{Deserialize, Serialize};
use ssc_core::affinity::{build_affinity, median_pairwise_distance, KernelSpec};
use ssc_core::ldssc::{ld_ssc1, ld_ssc2, Algorithm, SolverConfig, SolverOutput};
use ssc_core::synthetic::two_gaussians;
use ssc_core::SymMatrix;

/// Distance between the two Gaussian means, in standard deviations.
pub const SEPARATION: f64 = 4.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgoTiming {
    pub algorithm: Algorithm,
    /// Wall time of every trial, in seconds.
    pub times: Vec<f64>,
    pub median: f64,
    /// Objective evaluations in the median trial.
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub timings: Vec<AlgoTiming>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchTable {
    pub trials: usize,
    pub rows: Vec<BenchRow>,
}

impl BenchTable {
    pub fn medians(&self, algorithm: Algorithm) -> Vec<(usize, f64)> {
        self.rows
            .iter()
            .filter_map(|r| {
                r.timings
                    .iter()
                    .find(|t| t.algorithm == algorithm)
                    .map(|t| (r.n, t.median))
            })
            .collect()
    }

    /// Least-squares slope of log(median time) against log(n).
    pub fn loglog_slope(&self, algorithm: Algorithm) -> Option<f64> {
        loglog_slope(&self.medians(algorithm))
    }

    pub fn render(&self) -> String {
        let mut algos: Vec<Algorithm> = Vec::new();
        for r in &self.rows {
            for t in &r.timings {
                if !algos.contains(&t.algorithm) {
                    algos.push(t.algorithm);
                }
            }
        }
        let mut s = String::new();
        let _ = write!(s, "{:>6}", "n");
        for a in &algos {
            let name = label(*a);
            let _ = write!(s, " {:>12} {:>8}", format!("{name} s"), "evals");
        }
        let _ = writeln!(s);
        for r in &self.rows {
            let _ = write!(s, "{:>6}", r.n);
            for a in &algos {
                match r.timings.iter().find(|t| t.algorithm == *a) {
                    Some(t) => {
                        let mark = if t.converged { "" } else { "*" };
                        let _ = write!(
                            s,
                            " {:>12.4} {:>8}",
                            t.median,
                            format!("{}{mark}", t.evaluations)
                        );
                    }
                    None => {
                        let _ = write!(s, " {:>12} {:>8}", "-", "-");
                    }
                }
            }
            let _ = writeln!(s);
        }
        for a in &algos {
            if let Some(slope) = self.loglog_slope(*a) {
                let _ = writeln!(s, "{} log-log slope: {slope:.2}", label(*a));
            }
        }
        if self
            .rows
            .iter()
            .any(|r| r.timings.iter().any(|t| !t.converged))
        {
            let _ = writeln!(s, "* stopped at the evaluation cap");
        }
        s
    }
}

fn label(a: Algorithm) -> &'static str {
    match a {
        Algorithm::LdSsc1 => "LD-SSC1",
        Algorithm::LdSsc2 => "LD-SSC2",
    }
}

pub fn loglog_slope(points: &[(usize, f64)]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|p| !(p.1 > 0.0)) {
        return None;
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Gaussian affinity of `n` two-Gaussian samples, width = median distance.
pub fn bench_affinity(n: usize, seed: u64) -> Result<SymMatrix> {
    let d = two_gaussians(n, SEPARATION, seed);
    let width = median_pairwise_distance(&d);
    Ok(build_affinity(&d, &KernelSpec::Gaussian { width })?)
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len();
    if m % 2 == 1 {
        s[m / 2]
    } else {
        0.5 * (s[m / 2 - 1] + s[m / 2])
    }
}

/// Times each algorithm `trials` times at every size. Trials run one after
/// another so that they do not compete for cores.
pub fn timing_bench(
    sizes: &[usize],
    trials: usize,
    algorithms: &[Algorithm],
    cfg: &SolverConfig,
    seed: u64,
) -> Result<BenchTable> {
    if sizes.len() < 2 {
        bail!("at least two sizes are needed");
    }
    if trials == 0 || algorithms.is_empty() {
        bail!("need at least one trial and one algorithm");
    }
    if let Some(&n) = sizes.iter().find(|&&n| n < 2) {
        bail!("size {n} is too small");
    }
    let mut rows = Vec::new();
    for &n in sizes {
        let k = bench_affinity(n, seed)?;
        let mut timings = Vec::new();
        for &a in algorithms {
            let mut runs: Vec<(f64, SolverOutput)> = Vec::new();
            for _ in 0..trials {
                let t = Instant::now();
                let out = match a {
                    Algorithm::LdSsc1 => ld_ssc1(&k, cfg)?,
                    Algorithm::LdSsc2 => ld_ssc2(&k, cfg)?,
                };
                runs.push((t.elapsed().as_secs_f64(), out));
            }
            let times: Vec<f64> = runs.iter().map(|r| r.0).collect();
            let med = median(&times);
            let pick = runs
                .iter()
                .min_by(|x, y| (x.0 - med).abs().total_cmp(&(y.0 - med).abs()))
                .expect("trials ≥ 1");
            log::info!("n = {n} {}: median {med:.3} s", label(a));
            timings.push(AlgoTiming {
                algorithm: a,
                times,
                median: med,
                evaluations: pick.1.report.evaluations,
                converged: pick.1.report.converged,
            });
        }
        rows.push(BenchRow { n, timings });
    }
    Ok(BenchTable { trials, rows })
}
