//! Cross-check of both dual solvers against the Dykstra projection.

use std::fmt::Write as _;

use anyhow::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use ssc_core::ldssc::{ld_ssc1, ld_ssc2, SolverConfig, SolverOutput};
use ssc_core::oracle::{dykstra_project, ConstraintSet, DykstraConfig};
use ssc_core::symmat::{eig, fro_dist, fro_norm_sq};
use ssc_core::SymMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub oracle_dist: f64,
    pub row_sum: f64,
    pub min_entry: f64,
    pub min_eig: f64,
    /// Relative to `max(1, ‖K‖²)`.
    pub gap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            oracle_dist: 1e-4,
            row_sum: 1e-5,
            min_entry: 1e-6,
            min_eig: 1e-6,
            gap: 1e-5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverCheck {
    pub oracle_dist: f64,
    pub row_sum: f64,
    pub min_entry: f64,
    pub min_eig: f64,
    pub rel_gap: f64,
    /// Objective evaluations (LD-SSC1: summed over all inner solves).
    pub evaluations: usize,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceCheck {
    pub n: usize,
    pub index: usize,
    pub oracle_cycles: usize,
    pub ld_ssc1: SolverCheck,
    pub ld_ssc2: SolverCheck,
    /// `‖F₁ − F₂‖_F`.
    pub variant_dist: f64,
}

impl SolverCheck {
    pub fn within(&self, t: &Tolerances) -> bool {
        self.oracle_dist <= t.oracle_dist
            && self.row_sum <= t.row_sum
            && self.min_entry >= -t.min_entry
            && self.min_eig >= -t.min_eig
            && self.rel_gap <= t.gap
    }
}

impl InstanceCheck {
    pub fn passes(&self, t: &Tolerances) -> bool {
        self.ld_ssc1.within(t) && self.ld_ssc2.within(t) && self.variant_dist <= t.oracle_dist
    }
}

/// Symmetrized matrix with entries drawn uniformly from [−1, 1].
pub fn random_instance(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix {
    let raw: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..=1.0)).collect();
    SymMatrix::from_fn(n, |i, j| 0.5 * (raw[i * n + j] + raw[j * n + i]))
}

fn check(out: &SolverOutput, k: &SymMatrix, oracle: &SymMatrix) -> Result<SolverCheck> {
    let f = &out.matrix;
    let r = &out.report.residuals;
    Ok(SolverCheck {
        oracle_dist: fro_dist(f, oracle),
        row_sum: r.row_sum,
        min_entry: f.min_entry(),
        min_eig: eig(f)?.min_value(),
        rel_gap: r.gap.abs() / fro_norm_sq(k).max(1.0),
        evaluations: out.report.evaluations,
        iterations: out.report.iterations,
        converged: out.report.converged,
    })
}

pub fn check_instance(
    k: &SymMatrix,
    cfg: &SolverConfig,
    n: usize,
    index: usize,
) -> Result<InstanceCheck> {
    let oracle = dykstra_project(
        k,
        &ConstraintSet::ALL,
        &DykstraConfig {
            tol: 1e-11,
            max_cycles: 1_000_000,
        },
    )?;
    let a = ld_ssc1(k, cfg)?;
    let b = ld_ssc2(k, cfg)?;
    Ok(InstanceCheck {
        n,
        index,
        oracle_cycles: oracle.cycles,
        ld_ssc1: check(&a, k, &oracle.matrix)?,
        ld_ssc2: check(&b, k, &oracle.matrix)?,
        variant_dist: fro_dist(&a.matrix, &b.matrix),
    })
}

/// `count` random instances at each size, seeded with `seed`.
pub fn verify(
    sizes: &[usize],
    count: usize,
    cfg: &SolverConfig,
    seed: u64,
) -> Result<Vec<InstanceCheck>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for &n in sizes {
        for i in 0..count {
            let k = random_instance(&mut rng, n);
            out.push(check_instance(&k, cfg, n, i)?);
        }
    }
    Ok(out)
}

pub fn render(checks: &[InstanceCheck], t: &Tolerances) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>4} {:>3} {:>10} {:>10} {:>10} {:>10} {:>7} {:>7}  result",
        "n", "#", "d1 oracle", "d2 oracle", "d12", "row res", "evals1", "evals2"
    );
    for c in checks {
        let _ = writeln!(
            s,
            "{:>4} {:>3} {:>10.2e} {:>10.2e} {:>10.2e} {:>10.2e} {:>7} {:>7}  {}",
            c.n,
            c.index,
            c.ld_ssc1.oracle_dist,
            c.ld_ssc2.oracle_dist,
            c.variant_dist,
            c.ld_ssc1.row_sum.max(c.ld_ssc2.row_sum),
            c.ld_ssc1.evaluations,
            c.ld_ssc2.evaluations,
            if c.passes(t) { "ok" } else { "FAIL" }
        );
    }
    let failed = checks.iter().filter(|c| !c.passes(t)).count();
    let _ = writeln!(
        s,
        "{} of {} instances within tolerance",
        checks.len() - failed,
        checks.len()
    );
    s
}
