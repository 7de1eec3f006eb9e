//! Affinity-matrix normalizers.
//!
//! Baselines: none (NO), the L1 / ratio-cut normalization `K − D + I` (RC),
//! symmetric Sinkhorn scaling to a doubly-stochastic matrix (NC), and the
//! Frobenius-nearest doubly-stochastic matrix without the PSD constraint
//! (FSC). The two dual solvers from [`crate::ldssc`] are dispatched from here
//! as well so that a pipeline can treat every normalizer uniformly.

use std::fmt;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SscError};
use crate::ldssc::{ld_ssc1, ld_ssc2, SolverConfig, SolverReport};
use crate::oracle::project_affine_ds;
use crate::symmat::{fro_dist, SymMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizerKind {
    #[serde(alias = "no", alias = "NO")]
    None,
    #[serde(alias = "rc", alias = "RC", alias = "l1")]
    RatioCut,
    #[serde(alias = "nc", alias = "NC")]
    Sinkhorn,
    #[serde(alias = "fsc", alias = "FSC")]
    FrobeniusQp,
    #[serde(alias = "LD-SSC1", alias = "ld-ssc1")]
    LdSsc1,
    #[serde(alias = "LD-SSC2", alias = "ld-ssc2")]
    LdSsc2,
}

impl NormalizerKind {
    pub const ALL: [NormalizerKind; 6] = [
        NormalizerKind::None,
        NormalizerKind::RatioCut,
        NormalizerKind::Sinkhorn,
        NormalizerKind::FrobeniusQp,
        NormalizerKind::LdSsc1,
        NormalizerKind::LdSsc2,
    ];

    /// Short table label.
    pub fn label(&self) -> &'static str {
        match self {
            NormalizerKind::None => "NO",
            NormalizerKind::RatioCut => "RC",
            NormalizerKind::Sinkhorn => "NC",
            NormalizerKind::FrobeniusQp => "FSC",
            NormalizerKind::LdSsc1 => "LD-SSC1",
            NormalizerKind::LdSsc2 => "LD-SSC2",
        }
    }

    /// Machine name, as used in config files.
    pub fn name(&self) -> &'static str {
        match self {
            NormalizerKind::None => "none",
            NormalizerKind::RatioCut => "ratio_cut",
            NormalizerKind::Sinkhorn => "sinkhorn",
            NormalizerKind::FrobeniusQp => "frobenius_qp",
            NormalizerKind::LdSsc1 => "ld_ssc1",
            NormalizerKind::LdSsc2 => "ld_ssc2",
        }
    }

    pub fn is_ld_ssc(&self) -> bool {
        matches!(self, NormalizerKind::LdSsc1 | NormalizerKind::LdSsc2)
    }
}

impl fmt::Display for NormalizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for NormalizerKind {
    type Err = SscError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Ok(match key.as_str() {
            "none" | "no" => NormalizerKind::None,
            "ratio_cut" | "rc" | "l1" => NormalizerKind::RatioCut,
            "sinkhorn" | "nc" => NormalizerKind::Sinkhorn,
            "frobenius_qp" | "fsc" => NormalizerKind::FrobeniusQp,
            "ld_ssc1" => NormalizerKind::LdSsc1,
            "ld_ssc2" => NormalizerKind::LdSsc2,
            _ => {
                return Err(SscError::InvalidArgument(format!(
                    "unknown normalizer '{s}'"
                )))
            }
        })
    }
}

/// Stopping rule for the iterative baselines.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IterativeConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for IterativeConfig {
    fn default() -> Self {
        IterativeConfig {
            tol: 1e-7,
            max_iter: 10_000,
        }
    }
}

impl IterativeConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(SscError::InvalidArgument(format!(
                "invalid iteration settings {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizerSpec {
    pub kind: NormalizerKind,
    #[serde(default)]
    pub iterative: IterativeConfig,
    #[serde(default)]
    pub solver: SolverConfig,
}

impl NormalizerSpec {
    pub fn new(kind: NormalizerKind) -> Self {
        NormalizerSpec {
            kind,
            iterative: IterativeConfig::default(),
            solver: SolverConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.iterative.validate()?;
        self.solver.validate()
    }
}

/// Result of an iterative baseline.
#[derive(Clone, Debug)]
pub struct IterativeOutcome {
    pub matrix: SymMatrix,
    pub iterations: usize,
    pub converged: bool,
    /// Stopping measure after each iteration.
    pub residuals: Vec<f64>,
}

/// Returns K unchanged.
pub fn normalize_none(k: &SymMatrix) -> SymMatrix {
    k.clone()
}

/// `K̂ = K − D + I` with `D = diag(K𝟙)`; every row of K̂ sums to 1.
pub fn normalize_l1(k: &SymMatrix) -> SymMatrix {
    let n = k.n();
    let d = k.row_sums();
    let mut data = k.as_slice().to_vec();
    for i in 0..n {
        data[i * n + i] += 1.0 - d[i];
    }
    SymMatrix::from_raw(n, data)
}

fn max_row_dev(f: &SymMatrix) -> f64 {
    f.row_sums()
        .iter()
        .fold(0.0f64, |m, s| m.max((s - 1.0).abs()))
}

/// Symmetric Sinkhorn iteration `K ← D^{−1/2} K D^{−1/2}`, carried out on a
/// scaling vector x so that the iterate is `diag(x) K diag(x)`.
///
/// Stops when every row sum is within `tol` of 1. If `max_iter` runs out, the
/// iterate with the smallest deviation is returned with `converged = false`.
pub fn normalize_sinkhorn(k: &SymMatrix, cfg: &IterativeConfig) -> Result<IterativeOutcome> {
    cfg.validate()?;
    k.check_finite()?;
    if k.min_entry() < 0.0 {
        return Err(SscError::InvalidArgument(
            "Sinkhorn normalization needs a non-negative matrix".into(),
        ));
    }
    let n = k.n();
    if let Some(i) = k.row_sums().iter().position(|&s| s <= 0.0) {
        return Err(SscError::ZeroRow(i));
    }
    let scaled = |x: &[f64]| {
        let mut data = k.as_slice().to_vec();
        for (i, row) in data.chunks_mut(n).enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v *= x[i] * x[j];
            }
        }
        SymMatrix::from_raw(n, data)
    };

    let mut x = vec![1.0; n];
    let mut residuals = Vec::new();
    let mut best = (max_row_dev(k), x.clone());
    for it in 1..=cfg.max_iter {
        // Row sums of diag(x) K diag(x) are x ∘ (Kx).
        let kx = k.matvec(&x);
        for i in 0..n {
            let r = x[i] * kx[i];
            x[i] /= r.sqrt();
        }
        let f = scaled(&x);
        let dev = max_row_dev(&f);
        residuals.push(dev);
        if dev < best.0 {
            best = (dev, x.clone());
        }
        if dev <= cfg.tol {
            return Ok(IterativeOutcome {
                matrix: f,
                iterations: it,
                converged: true,
                residuals,
            });
        }
    }
    warn!(
        "Sinkhorn normalization did not reach tol {} in {} iterations (best {:.3e})",
        cfg.tol, cfg.max_iter, best.0
    );
    Ok(IterativeOutcome {
        matrix: scaled(&best.1),
        iterations: cfg.max_iter,
        converged: false,
        residuals,
    })
}

/// Frobenius-nearest symmetric doubly-stochastic matrix (no PSD constraint).
///
/// Dykstra between the affine set `{F𝟙 = 𝟙, F = Fᵀ}` and the non-negative
/// orthant. The affine projection is an affine map, so only the orthant needs
/// a correction term. Converged when the row sums are within `tol` of 1 and
/// a full step moves the iterate by at most `tol`.
pub fn normalize_frobenius_qp(k: &SymMatrix, cfg: &IterativeConfig) -> Result<IterativeOutcome> {
    cfg.validate()?;
    k.check_finite()?;
    let n = k.n();
    let mut x = k.clone();
    let mut corr = SymMatrix::zeros(n);
    let mut residuals = Vec::new();
    for it in 1..=cfg.max_iter {
        let y = project_affine_ds(&x);
        let shifted = y.add(&corr);
        let next = shifted.map(|v| v.max(0.0));
        corr = shifted.sub(&next);
        let moved = fro_dist(&next, &x);
        x = next;
        let dev = max_row_dev(&x);
        residuals.push(dev.max(moved));
        if dev <= cfg.tol && moved <= cfg.tol {
            return Ok(IterativeOutcome {
                matrix: x,
                iterations: it,
                converged: true,
                residuals,
            });
        }
    }
    warn!(
        "Frobenius QP normalization did not reach tol {} in {} iterations",
        cfg.tol, cfg.max_iter
    );
    Ok(IterativeOutcome {
        matrix: x,
        iterations: cfg.max_iter,
        converged: false,
        residuals,
    })
}

/// A normalized affinity matrix plus whatever diagnostics the normalizer has.
#[derive(Clone, Debug)]
pub struct Normalized {
    pub matrix: SymMatrix,
    pub iterations: usize,
    pub converged: bool,
    pub solver: Option<SolverReport>,
}

pub fn apply_normalizer(k: &SymMatrix, spec: &NormalizerSpec) -> Result<Normalized> {
    spec.validate()?;
    let direct = |m: SymMatrix| Normalized {
        matrix: m,
        iterations: 0,
        converged: true,
        solver: None,
    };
    let iterative = |o: IterativeOutcome| Normalized {
        matrix: o.matrix,
        iterations: o.iterations,
        converged: o.converged,
        solver: None,
    };
    Ok(match spec.kind {
        NormalizerKind::None => direct(normalize_none(k)),
        NormalizerKind::RatioCut => direct(normalize_l1(k)),
        NormalizerKind::Sinkhorn => iterative(normalize_sinkhorn(k, &spec.iterative)?),
        NormalizerKind::FrobeniusQp => iterative(normalize_frobenius_qp(k, &spec.iterative)?),
        NormalizerKind::LdSsc1 | NormalizerKind::LdSsc2 => {
            let out = if spec.kind == NormalizerKind::LdSsc1 {
                ld_ssc1(k, &spec.solver)?
            } else {
                ld_ssc2(k, &spec.solver)?
            };
            Normalized {
                matrix: out.matrix,
                iterations: out.report.iterations,
                converged: out.report.converged,
                solver: Some(out.report),
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn m(rows: &[&[f64]]) -> SymMatrix {
        SymMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn none_is_identity_map() {
        let k = m(&[&[1.0, 0.3], &[0.3, 2.0]]);
        assert_eq!(normalize_none(&k), k);
        assert_eq!(normalize_none(&normalize_none(&k)), k);
        assert_eq!(
            normalize_none(&SymMatrix::identity(3)),
            SymMatrix::identity(3)
        );
    }

    #[test]
    fn l1_examples() {
        assert_eq!(
            normalize_l1(&SymMatrix::identity(3)),
            SymMatrix::identity(3)
        );
        let swap = m(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert_eq!(normalize_l1(&swap), swap);
        assert_eq!(normalize_l1(&SymMatrix::ones(2)), swap);
    }

    #[test]
    fn sinkhorn_one_step() {
        let out = normalize_sinkhorn(&SymMatrix::ones(2), &IterativeConfig::default()).unwrap();
        assert!(out.converged);
        assert_eq!(out.iterations, 1);
        for v in out.matrix.as_slice() {
            assert_abs_diff_eq!(*v, 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn sinkhorn_fixed_point() {
        let k = m(&[&[0.5, 0.3, 0.2], &[0.3, 0.4, 0.3], &[0.2, 0.3, 0.5]]);
        let out = normalize_sinkhorn(&k, &IterativeConfig::default()).unwrap();
        assert!(fro_dist(&out.matrix, &k) <= 1e-7);
    }

    #[test]
    fn sinkhorn_rejects_bad_input() {
        let k = m(&[&[1.0, 0.0], &[0.0, 0.0]]);
        assert!(matches!(
            normalize_sinkhorn(&k, &IterativeConfig::default()),
            Err(SscError::ZeroRow(1))
        ));
        let k = m(&[&[1.0, -0.5], &[-0.5, 1.0]]);
        assert!(normalize_sinkhorn(&k, &IterativeConfig::default()).is_err());
    }

    #[test]
    fn sinkhorn_flags_non_convergence() {
        // Zero diagonal 3-cycle converges, but not in two iterations.
        let k = m(&[&[0.0, 1.0, 5.0], &[1.0, 0.0, 1.0], &[5.0, 1.0, 0.0]]);
        let cfg = IterativeConfig {
            tol: 1e-12,
            max_iter: 2,
        };
        let out = normalize_sinkhorn(&k, &cfg).unwrap();
        assert!(!out.converged);
        assert_eq!(out.residuals.len(), 2);
    }

    #[test]
    fn fsc_fixed_points() {
        let k = m(&[&[0.5, 0.3, 0.2], &[0.3, 0.4, 0.3], &[0.2, 0.3, 0.5]]);
        let out = normalize_frobenius_qp(&k, &IterativeConfig::default()).unwrap();
        assert!(out.converged);
        assert!(fro_dist(&out.matrix, &k) <= 1e-12);
        let j = SymMatrix::ones(5).scale(0.2);
        let out = normalize_frobenius_qp(&j, &IterativeConfig::default()).unwrap();
        assert!(fro_dist(&out.matrix, &j) <= 1e-12);
    }

    #[test]
    fn kind_parsing() {
        assert_eq!(
            "FSC".parse::<NormalizerKind>().unwrap(),
            NormalizerKind::FrobeniusQp
        );
        assert_eq!(
            "LD-SSC2".parse::<NormalizerKind>().unwrap(),
            NormalizerKind::LdSsc2
        );
        assert_eq!(
            "ratio_cut".parse::<NormalizerKind>().unwrap(),
            NormalizerKind::RatioCut
        );
        assert!("bogus".parse::<NormalizerKind>().is_err());
        for k in NormalizerKind::ALL {
            assert_eq!(k.name().parse::<NormalizerKind>().unwrap(), k);
        }
    }
}
