//! Limited-memory quasi-Newton minimization with lower bounds.
//!
//! Each iteration fixes the variables that sit on their bound with a gradient
//! pushing outward, builds an L-BFGS direction on the remaining free
//! variables, and backtracks along the projected path `proj(x + αd)` until
//! the Armijo condition holds (or, once f stops resolving the decrease, the
//! projected gradient shrinks). The accepted point is always the most recently
//! evaluated one, which lets callers cache per-evaluation data.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SscError};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoxQnConfig {
    /// Number of stored correction pairs.
    pub memory: usize,
    /// Stop when the projected-gradient infinity norm drops to this.
    pub pg_tol: f64,
    /// Budget of objective evaluations, including the initial one.
    pub max_evals: usize,
}

impl Default for BoxQnConfig {
    fn default() -> Self {
        BoxQnConfig {
            memory: 10,
            pg_tol: 1e-9,
            max_evals: 500,
        }
    }
}

impl BoxQnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.memory == 0 || !(self.pg_tol > 0.0) || self.max_evals == 0 {
            return Err(SscError::InvalidArgument(format!(
                "invalid quasi-Newton settings {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QnStatus {
    Converged,
    MaxEvals,
    /// No step along the projected steepest-descent path decreased f.
    LineSearchFailed,
    /// The iteration observer asked to stop.
    Stopped,
}

#[derive(Clone, Debug)]
pub struct QnOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad: Vec<f64>,
    pub evals: usize,
    pub iterations: usize,
    pub pg_norm: f64,
    pub status: QnStatus,
}

/// Snapshot handed to the observer after every accepted step.
pub struct IterInfo<'a> {
    pub iteration: usize,
    pub evals: usize,
    pub x: &'a [f64],
    pub f: f64,
    pub grad: &'a [f64],
    pub pg_norm: f64,
}

const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 40;
/// Relative size of rounding noise in objective values.
const F_NOISE: f64 = 16.0 * f64::EPSILON;

/// Minimizes `f` subject to `x ≥ lower` (entries of `-∞` are unbounded).
///
/// `fg(x, grad)` returns f(x) and writes ∇f(x) into `grad`.
pub fn minimize_box_qn<F>(
    fg: F,
    x0: Vec<f64>,
    lower: Option<&[f64]>,
    cfg: &BoxQnConfig,
) -> Result<QnOutcome>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<f64>,
{
    minimize_box_qn_observed(fg, x0, lower, cfg, |_| false)
}

/// As [`minimize_box_qn`], calling `observe` after each accepted step. If it
/// returns `true` the run stops with [`QnStatus::Stopped`].
pub fn minimize_box_qn_observed<F, O>(
    mut fg: F,
    x0: Vec<f64>,
    lower: Option<&[f64]>,
    cfg: &BoxQnConfig,
    mut observe: O,
) -> Result<QnOutcome>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<f64>,
    O: FnMut(&IterInfo<'_>) -> bool,
{
    cfg.validate()?;
    let n = x0.len();
    let lb: Vec<f64> = match lower {
        Some(l) if l.len() != n => {
            return Err(SscError::DimensionMismatch {
                expected: n,
                found: l.len(),
            })
        }
        Some(l) => l.to_vec(),
        None => vec![f64::NEG_INFINITY; n],
    };
    if let Some(i) = (0..n).find(|&i| x0[i] < lb[i]) {
        return Err(SscError::InvalidArgument(format!(
            "starting point violates the lower bound at index {i}"
        )));
    }
    let bounded = lb.iter().any(|b| b.is_finite());

    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut f = fg(&x, &mut g)?;
    let mut evals = 1;
    check_finite(f, &g, evals)?;

    let mut hist: VecDeque<(Vec<f64>, Vec<f64>)> = VecDeque::with_capacity(cfg.memory);
    let mut iterations = 0;
    let mut free = vec![true; n];
    let mut xt = vec![0.0; n];
    let mut gt = vec![0.0; n];

    let status = loop {
        let pg = projected_grad_norm(&x, &g, &lb);
        if pg <= cfg.pg_tol {
            break QnStatus::Converged;
        }
        if evals >= cfg.max_evals {
            break QnStatus::MaxEvals;
        }

        if bounded {
            for i in 0..n {
                free[i] = !(x[i] <= lb[i] && g[i] > 0.0);
            }
        }
        let mut d = two_loop(&g, &hist, &free);
        if !(dot(&g, &d) < 0.0) {
            hist.clear();
            d = masked_neg(&g, &free);
        }
        let mut alpha = if hist.is_empty() {
            let gmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            (1.0 / gmax).min(1.0)
        } else {
            1.0
        };

        let mut accepted: Option<f64> = None;
        let mut out_of_budget = false;
        for _ in 0..MAX_BACKTRACKS {
            for i in 0..n {
                xt[i] = (x[i] + alpha * d[i]).max(lb[i]);
            }
            let decrease: f64 = (0..n).map(|i| g[i] * (xt[i] - x[i])).sum();
            if decrease >= 0.0 {
                break;
            }
            let ft = fg(&xt, &mut gt)?;
            evals += 1;
            check_finite(ft, &gt, evals)?;
            // Near a minimizer the decrease can fall below the rounding error
            // of f. Steps that keep f within that noise are then judged by the
            // projected gradient instead.
            let noise = F_NOISE * f.abs().max(1.0);
            if ft <= f + ARMIJO_C1 * decrease
                || (ft <= f + noise && projected_grad_norm(&xt, &gt, &lb) < pg)
            {
                accepted = Some(ft);
                break;
            }
            if evals >= cfg.max_evals {
                out_of_budget = true;
                break;
            }
            // Minimizer of the quadratic through f, the slope and ft,
            // clamped to [0.1α, 0.5α].
            let curv = ft - f - decrease;
            let shrink = if curv > 0.0 {
                -0.5 * decrease / curv
            } else {
                0.5
            };
            alpha *= shrink.clamp(0.1, 0.5);
        }

        let Some(ft) = accepted else {
            if out_of_budget {
                break QnStatus::MaxEvals;
            }
            if hist.is_empty() {
                break QnStatus::LineSearchFailed;
            }
            hist.clear();
            continue;
        };

        let s: Vec<f64> = xt.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 0.0 && sy > 1e-12 * dot(&y, &y) {
            if hist.len() == cfg.memory {
                hist.pop_front();
            }
            hist.push_back((s, y));
        }
        std::mem::swap(&mut x, &mut xt);
        std::mem::swap(&mut g, &mut gt);
        f = ft;
        iterations += 1;

        let info = IterInfo {
            iteration: iterations,
            evals,
            x: &x,
            f,
            grad: &g,
            pg_norm: projected_grad_norm(&x, &g, &lb),
        };
        if observe(&info) {
            break QnStatus::Stopped;
        }
    };
    let pg_norm = projected_grad_norm(&x, &g, &lb);
    Ok(QnOutcome {
        x,
        f,
        grad: g,
        evals,
        iterations,
        pg_norm,
        status,
    })
}

fn check_finite(f: f64, g: &[f64], evals: usize) -> Result<()> {
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(SscError::NonFiniteObjective(evals));
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn masked_dot(a: &[f64], b: &[f64], free: &[bool]) -> f64 {
    a.iter()
        .zip(b)
        .zip(free)
        .filter(|(_, &f)| f)
        .map(|((x, y), _)| x * y)
        .sum()
}

fn masked_neg(g: &[f64], free: &[bool]) -> Vec<f64> {
    g.iter()
        .zip(free)
        .map(|(v, &f)| if f { -v } else { 0.0 })
        .collect()
}

/// `‖x − proj(x − g)‖_∞`, zero exactly at a stationary point of the box problem.
pub fn projected_grad_norm(x: &[f64], g: &[f64], lb: &[f64]) -> f64 {
    x.iter()
        .zip(g)
        .zip(lb)
        .map(|((xi, gi), li)| (xi - (xi - gi).max(*li)).abs())
        .fold(0.0, f64::max)
}

/// L-BFGS two-loop recursion restricted to the free coordinates. Pairs whose
/// curvature is not positive on the free subspace are skipped.
fn two_loop(g: &[f64], hist: &VecDeque<(Vec<f64>, Vec<f64>)>, free: &[bool]) -> Vec<f64> {
    let mut q = masked_neg(g, free);
    q.iter_mut().for_each(|v| *v = -*v);
    let m = hist.len();
    let mut alpha = vec![0.0; m];
    let mut rho = vec![0.0; m];
    for (i, (s, y)) in hist.iter().enumerate().rev() {
        let sy = masked_dot(s, y, free);
        if sy <= 0.0 {
            continue;
        }
        rho[i] = 1.0 / sy;
        alpha[i] = rho[i] * masked_dot(s, &q, free);
        for ((qj, yj), &fj) in q.iter_mut().zip(y).zip(free) {
            if fj {
                *qj -= alpha[i] * yj;
            }
        }
    }
    let gamma = hist
        .iter()
        .rev()
        .find_map(|(s, y)| {
            let sy = masked_dot(s, y, free);
            let yy = masked_dot(y, y, free);
            (sy > 0.0 && yy > 0.0).then(|| sy / yy)
        })
        .unwrap_or(1.0);
    q.iter_mut().for_each(|v| *v *= gamma);
    for (i, (s, y)) in hist.iter().enumerate() {
        if rho[i] == 0.0 {
            continue;
        }
        let beta = rho[i] * masked_dot(y, &q, free);
        for ((qj, sj), &fj) in q.iter_mut().zip(s).zip(free) {
            if fj {
                *qj += (alpha[i] - beta) * sj;
            }
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}
