//! Ground-truth Frobenius projections by Dykstra's alternating projections.
//!
//! Dykstra keeps one correction matrix per constraint set; unlike plain
//! cyclic projection it converges to the nearest point of the intersection,
//! not just to some point of it. With all three sets selected the result is
//! the exact nearest doubly-stochastic PSD matrix. This module is slow and is
//! only meant for certifying the dual solvers at small n.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SscError};
use crate::symmat::{eig, fro_dist, positive_part, SymMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintSet {
    /// `{F : F𝟙 = 𝟙, F = Fᵀ}`
    Affine,
    /// `{F : F ≥ 0}` entrywise
    Nonneg,
    /// `{F : F ≽ 0}`
    Psd,
}

impl ConstraintSet {
    pub const ALL: [ConstraintSet; 3] = [
        ConstraintSet::Affine,
        ConstraintSet::Nonneg,
        ConstraintSet::Psd,
    ];

    pub fn project(&self, x: &SymMatrix) -> Result<SymMatrix> {
        match self {
            ConstraintSet::Affine => Ok(project_affine_ds(x)),
            ConstraintSet::Nonneg => Ok(project_nonneg(x)),
            ConstraintSet::Psd => positive_part(x),
        }
    }

    /// How far `x` is from satisfying the set, in the set's natural measure:
    /// `‖x𝟙 − 𝟙‖_∞`, the most negative entry, or the most negative eigenvalue.
    pub fn residual(&self, x: &SymMatrix) -> Result<f64> {
        Ok(match self {
            ConstraintSet::Affine => x
                .row_sums()
                .iter()
                .fold(0.0f64, |m, s| m.max((s - 1.0).abs())),
            ConstraintSet::Nonneg => (-x.min_entry()).max(0.0),
            ConstraintSet::Psd => (-eig(x)?.min_value()).max(0.0),
        })
    }
}

/// Exact projection onto `{F𝟙 = 𝟙, F = Fᵀ}`:
/// `R = X + μ𝟙ᵀ + 𝟙μᵀ` with `s = (n − 𝟙ᵀX𝟙)/(2n)` and `μ = (𝟙 − X𝟙 − s𝟙)/n`.
pub fn project_affine_ds(x: &SymMatrix) -> SymMatrix {
    let n = x.n() as f64;
    let r = x.row_sums();
    let total: f64 = r.iter().sum();
    let s = (n - total) / (2.0 * n);
    let mu: Vec<f64> = r.iter().map(|ri| (1.0 - ri - s) / n).collect();
    x.add(&SymMatrix::outer_sum(&mu))
}

/// Entrywise `max(0, X)`.
pub fn project_nonneg(x: &SymMatrix) -> SymMatrix {
    x.map(|v| v.max(0.0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DykstraConfig {
    pub tol: f64,
    pub max_cycles: usize,
}

impl Default for DykstraConfig {
    fn default() -> Self {
        DykstraConfig {
            tol: 1e-9,
            max_cycles: 50_000,
        }
    }
}

/// Current iterate plus one correction per constraint set.
#[derive(Clone, Debug)]
pub struct DykstraState {
    pub iterate: SymMatrix,
    pub corrections: Vec<SymMatrix>,
    pub sets: Vec<ConstraintSet>,
    pub cycles: usize,
}

impl DykstraState {
    pub fn new(k: &SymMatrix, sets: &[ConstraintSet]) -> Self {
        DykstraState {
            iterate: k.clone(),
            corrections: vec![SymMatrix::zeros(k.n()); sets.len()],
            sets: sets.to_vec(),
            cycles: 0,
        }
    }

    /// One pass over every set; returns the Frobenius movement of the iterate.
    pub fn cycle(&mut self) -> Result<f64> {
        let start = self.iterate.clone();
        for (set, p) in self.sets.iter().zip(self.corrections.iter_mut()) {
            let y = self.iterate.add(p);
            let x = set.project(&y)?;
            *p = y.sub(&x);
            self.iterate = x;
        }
        self.cycles += 1;
        Ok(fro_dist(&start, &self.iterate))
    }

    pub fn max_residual(&self) -> Result<f64> {
        let mut r = 0.0f64;
        for s in &self.sets {
            r = r.max(s.residual(&self.iterate)?);
        }
        Ok(r)
    }
}

#[derive(Clone, Debug)]
pub struct DykstraOutcome {
    pub matrix: SymMatrix,
    pub cycles: usize,
    pub converged: bool,
    /// Largest constraint residual at exit.
    pub residual: f64,
    /// Iterate movement during the last cycle.
    pub movement: f64,
}

/// Frobenius projection of `k` onto the intersection of `sets`.
///
/// Stops once a cycle moves the iterate by at most `tol` and every selected
/// constraint is satisfied to `tol`. Hitting `max_cycles` returns the last
/// iterate with `converged = false`.
pub fn dykstra_project(
    k: &SymMatrix,
    sets: &[ConstraintSet],
    cfg: &DykstraConfig,
) -> Result<DykstraOutcome> {
    if sets.is_empty() {
        return Err(SscError::InvalidArgument(
            "at least one constraint set is required".into(),
        ));
    }
    k.check_finite()?;
    let mut state = DykstraState::new(k, sets);
    let mut movement = f64::INFINITY;
    let mut residual = f64::INFINITY;
    while state.cycles < cfg.max_cycles {
        movement = state.cycle()?;
        if movement <= cfg.tol {
            residual = state.max_residual()?;
            if residual <= cfg.tol {
                return Ok(DykstraOutcome {
                    matrix: state.iterate,
                    cycles: state.cycles,
                    converged: true,
                    residual,
                    movement,
                });
            }
        }
    }
    if residual.is_infinite() {
        residual = state.max_residual()?;
    }
    warn!(
        "Dykstra stopped after {} cycles (movement {movement:.3e}, residual {residual:.3e})",
        state.cycles
    );
    Ok(DykstraOutcome {
        matrix: state.iterate,
        cycles: state.cycles,
        converged: false,
        residual,
        movement,
    })
}
