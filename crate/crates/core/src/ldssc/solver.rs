use std::cell::RefCell;
use std::time::Instant;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use super::boxqn::{minimize_box_qn, minimize_box_qn_observed, BoxQnConfig, QnStatus};
use super::dual::{reduced_objective, residuals, solve_q, DualState, InitialQ, Residuals};
use crate::error::{Result, SscError};
use crate::symmat::{fro_norm_sq, spectral_split, SpectralSplit, SymMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "ld_ssc1")]
    LdSsc1,
    #[serde(rename = "ld_ssc2")]
    LdSsc2,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub initial_q: InitialQ,
    /// Bound on `‖F𝟙 − 𝟙‖_∞` and on `−min F` for convergence.
    pub feas_tol: f64,
    /// Bound on `|gap| / max(1, ‖K‖_F²)` for convergence.
    pub gap_tol: f64,
    /// Bound on the relative change of the reduced dual objective.
    pub obj_rel_tol: f64,
    /// LD-SSC1 outer iteration cap.
    pub max_outer: usize,
    /// LD-SSC1 u-subproblem solver.
    pub inner: BoxQnConfig,
    /// LD-SSC2 joint (Q, u) solver.
    pub joint: BoxQnConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            initial_q: InitialQ::Zero,
            feas_tol: 1e-6,
            gap_tol: 1e-8,
            obj_rel_tol: 1e-7,
            max_outer: 1000,
            inner: BoxQnConfig {
                memory: 10,
                pg_tol: 1e-10,
                max_evals: 10,
            },
            joint: BoxQnConfig {
                memory: 10,
                pg_tol: 1e-9,
                max_evals: 500,
            },
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.feas_tol > 0.0 && self.gap_tol > 0.0 && self.obj_rel_tol > 0.0)
            || self.max_outer == 0
        {
            return Err(SscError::InvalidArgument(format!(
                "invalid solver settings {self:?}"
            )));
        }
        self.inner.validate()?;
        self.joint.validate()
    }
}

/// One row of the convergence trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    /// Reduced dual objective `½‖P₋‖² − 2𝟙ᵀu` (minimized).
    pub dual_objective: f64,
    pub primal_objective: f64,
    pub gap: f64,
    pub row_sum_residual: f64,
    pub min_entry: f64,
    /// Cumulative objective evaluations.
    pub evaluations: usize,
    pub wall_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub algorithm: Algorithm,
    pub trace: Vec<TraceRecord>,
    pub primal_objective: f64,
    pub dual_value: f64,
    pub duality_gap: f64,
    pub residuals: Residuals,
    /// Outer iterations (LD-SSC1) or accepted quasi-Newton steps (LD-SSC2).
    pub iterations: usize,
    /// Objective/gradient evaluations inside the quasi-Newton solver(s).
    pub evaluations: usize,
    /// Every eigendecomposition performed, including bookkeeping ones.
    pub eigendecompositions: usize,
    pub wall_time: f64,
    pub converged: bool,
}

impl SolverReport {
    pub fn dual_trace(&self) -> Vec<f64> {
        self.trace.iter().map(|t| t.dual_objective).collect()
    }
}

#[derive(Clone, Debug)]
pub struct SolverOutput {
    /// The normalized affinity matrix F.
    pub matrix: SymMatrix,
    pub report: SolverReport,
    /// Final dual state, with `Z = P₊`.
    pub state: DualState,
}

struct Criteria {
    feas_tol: f64,
    gap_abs: f64,
    obj_rel_tol: f64,
}

impl Criteria {
    fn new(cfg: &SolverConfig, k: &SymMatrix) -> Self {
        Criteria {
            feas_tol: cfg.feas_tol,
            gap_abs: cfg.gap_tol * fro_norm_sq(k).max(1.0),
            obj_rel_tol: cfg.obj_rel_tol,
        }
    }

    fn met(&self, r: &Residuals, prev_obj: f64, obj: f64) -> bool {
        let rel = (prev_obj - obj).abs() / obj.abs().max(1.0);
        r.row_sum <= self.feas_tol
            && -r.min_entry <= self.feas_tol
            && r.gap.abs() <= self.gap_abs
            && rel <= self.obj_rel_tol
    }
}

fn record(
    iteration: usize,
    state: &DualState,
    f: &SymMatrix,
    k: &SymMatrix,
    evaluations: usize,
    start: Instant,
) -> (TraceRecord, Residuals) {
    let r = residuals(f, state, k);
    let rec = TraceRecord {
        iteration,
        dual_objective: reduced_objective(state),
        primal_objective: r.primal_objective,
        gap: r.gap,
        row_sum_residual: r.row_sum,
        min_entry: r.min_entry,
        evaluations,
        wall_time: start.elapsed().as_secs_f64(),
    };
    (rec, r)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    algorithm: Algorithm,
    k: &SymMatrix,
    mut state: DualState,
    trace: Vec<TraceRecord>,
    iterations: usize,
    evaluations: usize,
    eigendecompositions: usize,
    start: Instant,
    converged: bool,
) -> SolverOutput {
    state.eliminate_z();
    let f = state.p_neg().scale(-1.0);
    let r = residuals(&f, &state, k);
    if !converged {
        warn!(
            "{algorithm:?} stopped without converging: row-sum residual {:.2e}, min entry {:.2e}, gap {:.2e}",
            r.row_sum, r.min_entry, r.gap
        );
    }
    SolverOutput {
        matrix: f,
        report: SolverReport {
            algorithm,
            trace,
            primal_objective: r.primal_objective,
            dual_value: r.dual_value,
            duality_gap: r.gap,
            residuals: r,
            iterations,
            evaluations,
            eigendecompositions,
            wall_time: start.elapsed().as_secs_f64(),
            converged,
        },
        state,
    }
}

/// Gradient in `v = c·u`: `(−2 − 2·rowsum(P₋)) / c`.
fn write_u_grad(p_neg: &SymMatrix, c: f64, g: &mut [f64]) {
    for (gi, r) in g.iter_mut().zip(p_neg.row_sums()) {
        *gi = (-2.0 - 2.0 * r) / c;
    }
}

fn neg_p(k: &SymMatrix, q: &SymMatrix, u: &[f64]) -> SymMatrix {
    let n = k.n();
    let mut data = Vec::with_capacity(n * n);
    for i in 0..n {
        let (kr, qr) = (k.row(i), q.row(i));
        for j in 0..n {
            data.push(-(qr[j] + u[i] + u[j] + kr[j]));
        }
    }
    SymMatrix::from_raw(n, data)
}

/// Block coordinate descent on the dual.
///
/// Each outer iteration minimizes the reduced objective over u with Q fixed
/// (a short quasi-Newton run warm-started from the previous u), then sets
/// `Z = P₊` and `Q = max(0, −(Z + M + K))`.
pub fn ld_ssc1(k: &SymMatrix, cfg: &SolverConfig) -> Result<SolverOutput> {
    cfg.validate()?;
    k.check_finite()?;
    let start = Instant::now();
    let crit = Criteria::new(cfg, k);
    let mut state = DualState::cold_start(k, cfg.initial_q)?;
    let c = u_scale(k.n());
    let mut eigs = 1;
    let mut evals = 0;
    let mut trace = Vec::new();
    let mut prev_obj = reduced_objective(&state);
    let mut converged = false;
    let mut outer = 0;

    while outer < cfg.max_outer {
        outer += 1;
        let q = state.q().clone();
        // Optimized over v = c·u as in LD-SSC2. The first evaluation is at
        // the current state, whose split is known; the last one is usually
        // the accepted point.
        let v0: Vec<f64> = state.u().iter().map(|v| v * c).collect();
        let last: RefCell<Option<(Vec<f64>, SymMatrix, SpectralSplit)>> = RefCell::new(None);
        let qn = minimize_box_qn(
            |v, g| {
                if v == v0.as_slice() {
                    write_u_grad(state.p_neg(), c, g);
                    return Ok(reduced_objective(&state));
                }
                let u: Vec<f64> = v.iter().map(|x| x / c).collect();
                let p = neg_p(k, &q, &u);
                let split = spectral_split(&p)?;
                eigs += 1;
                write_u_grad(&split.negative, c, g);
                let val = 0.5 * split.eigen.negative_energy() - 2.0 * u.iter().sum::<f64>();
                *last.borrow_mut() = Some((v.to_vec(), p, split));
                Ok(val)
            },
            v0.clone(),
            None,
            &cfg.inner,
        )?;
        evals += qn.evals;

        // Z-step at the new u, then the closed-form Q-step.
        let with_u = match last.into_inner() {
            _ if qn.x == v0 => state.clone(),
            Some((v, p, split)) if v == qn.x => {
                DualState::from_split(q, v.iter().map(|x| x / c).collect(), p, split)
            }
            _ => {
                eigs += 1;
                DualState::new(k, q, qn.x.iter().map(|x| x / c).collect())?
            }
        };
        let z = with_u.p_pos();
        let q_new = solve_q(z, &with_u.m(), k);
        state = DualState::new(k, q_new, with_u.u().to_vec())?;
        eigs += 1;

        let f = state.p_neg().scale(-1.0);
        let (rec, r) = record(outer, &state, &f, k, evals, start);
        let obj = rec.dual_objective;
        debug!(
            "ld_ssc1 outer {outer}: obj {obj:.12e} row {:.2e} min {:.2e} gap {:.2e}",
            r.row_sum, r.min_entry, r.gap
        );
        trace.push(rec);
        if crit.met(&r, prev_obj, obj) {
            converged = true;
            break;
        }
        prev_obj = obj;
    }
    Ok(finish(
        Algorithm::LdSsc1,
        k,
        state,
        trace,
        outer,
        evals,
        eigs,
        start,
        converged,
    ))
}

/// Joint quasi-Newton solve over `(Q, u)` with `Q ≥ 0`.
///
/// The variable vector is the n² entries of Q (row-major) followed by u.
/// Q is symmetrized on every evaluation; since the Q-gradient `−P₋` is
/// symmetric, iterates started from a symmetric Q stay symmetric anyway.
pub fn ld_ssc2(k: &SymMatrix, cfg: &SolverConfig) -> Result<SolverOutput> {
    cfg.validate()?;
    k.check_finite()?;
    let start = Instant::now();
    let n = k.n();
    let nq = n * n;
    let crit = Criteria::new(cfg, k);
    let init = DualState::cold_start(k, cfg.initial_q)?;

    let c = u_scale(n);
    let mut x0 = init.q().as_slice().to_vec();
    x0.extend(init.u().iter().map(|v| v * c));
    let mut lower = vec![0.0; nq];
    lower.extend(std::iter::repeat_n(f64::NEG_INFINITY, n));

    // Negative part of P at the most recent evaluation.
    let last_neg: RefCell<Option<SymMatrix>> = RefCell::new(None);
    let eval_count = RefCell::new(0usize);
    let objective = |x: &[f64], g: &mut [f64]| -> Result<f64> {
        let q = SymMatrix::from_raw(n, x[..nq].to_vec());
        let u: Vec<f64> = x[nq..].iter().map(|v| v / c).collect();
        let p = neg_p(k, &q, &u);
        let split = spectral_split(&p)?;
        g[..nq].copy_from_slice(split.negative.as_slice());
        g[..nq].iter_mut().for_each(|v| *v = -*v);
        write_u_grad(&split.negative, c, &mut g[nq..]);
        *eval_count.borrow_mut() += 1;
        let val = 0.5 * split.eigen.negative_energy() - 2.0 * u.iter().sum::<f64>();
        *last_neg.borrow_mut() = Some(split.negative);
        Ok(val)
    };

    let mut trace = Vec::new();
    let mut prev_obj = reduced_objective(&init);
    let mut solver_converged = false;
    let observer = |info: &super::boxqn::IterInfo<'_>| -> bool {
        let neg = last_neg.borrow();
        let neg = neg.as_ref().expect("evaluated at least once");
        let f = neg.scale(-1.0);
        let q = SymMatrix::from_raw(n, info.x[..nq].to_vec());
        let obj = info.f;
        // Row-sum and gap measures need only F, Q and u, not a fresh eigendecomposition.
        let r = cheap_residuals(&f, &q, obj, k);
        trace.push(TraceRecord {
            iteration: info.iteration,
            dual_objective: obj,
            primal_objective: r.primal_objective,
            gap: r.gap,
            row_sum_residual: r.row_sum,
            min_entry: r.min_entry,
            evaluations: info.evals,
            wall_time: start.elapsed().as_secs_f64(),
        });
        let done = crit.met(&r, prev_obj, obj);
        prev_obj = obj;
        if done {
            solver_converged = true;
        }
        done
    };
    let out = minimize_box_qn_observed(objective, x0, Some(&lower), &cfg.joint, observer)?;
    let evals = *eval_count.borrow();
    let converged = solver_converged || out.status == QnStatus::Converged;

    let q = SymMatrix::from_raw(n, out.x[..nq].to_vec()).map(|v| v.max(0.0));
    let state = DualState::new(k, q, out.x[nq..].iter().map(|v| v / c).collect())?;
    Ok(finish(
        Algorithm::LdSsc2,
        k,
        state,
        trace,
        out.iterations,
        evals,
        evals + 1,
        start,
        converged,
    ))
}

/// u is optimized as `v = c·u`. The curvature in u is roughly 2n times the
/// curvature in a single entry of Q, and this rescaling evens the two out.
fn u_scale(n: usize) -> f64 {
    (2.0 * n as f64).sqrt()
}

fn cheap_residuals(f: &SymMatrix, q: &SymMatrix, reduced: f64, k: &SymMatrix) -> Residuals {
    let row_sum = f
        .row_sums()
        .iter()
        .fold(0.0f64, |m, s| m.max((s - 1.0).abs()));
    let primal = 0.5 * fro_norm_sq(&k.sub(f));
    let dual = -reduced + 0.5 * fro_norm_sq(k);
    Residuals {
        row_sum,
        min_entry: f.min_entry(),
        primal_objective: primal,
        dual_value: dual,
        gap: primal - dual,
        complementarity: crate::symmat::inner(f, q).expect("same dimension"),
    }
}
