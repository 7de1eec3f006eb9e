use crate::error::{Result, SscError};
use crate::symmat::{fro_norm_sq, inner, spectral_split, SpectralSplit, SymMatrix};

/// How Q is initialized on a cold start.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialQ {
    #[default]
    Zero,
    Identity,
}

/// Dual variables `(Z, Q, u)` together with the cached matrix
/// `P = −(Q + M + K)`, `M = u𝟙ᵀ + 𝟙uᵀ`, and its spectral parts.
///
/// `Q` and `u` are only changed through constructors and setters, which
/// recompute `P`, so the cache never goes stale.
#[derive(Clone, Debug)]
pub struct DualState {
    z: SymMatrix,
    q: SymMatrix,
    u: Vec<f64>,
    p: SymMatrix,
    p_pos: SymMatrix,
    p_neg: SymMatrix,
    neg_energy: f64,
}

impl DualState {
    /// State at `(Q, u)` with `Z = P₊`, the optimal Z for that pair.
    pub fn new(k: &SymMatrix, q: SymMatrix, u: Vec<f64>) -> Result<Self> {
        k.check_same_dim(&q)?;
        if u.len() != k.n() {
            return Err(SscError::DimensionMismatch {
                expected: k.n(),
                found: u.len(),
            });
        }
        if q.min_entry() < 0.0 {
            return Err(SscError::InvalidArgument(
                "Q must be entrywise non-negative".into(),
            ));
        }
        let p = compute_p(k, &q, &u);
        let split = spectral_split(&p)?;
        let neg_energy = split.eigen.negative_energy();
        Ok(DualState {
            z: split.positive.clone(),
            q,
            u,
            p,
            p_pos: split.positive,
            p_neg: split.negative,
            neg_energy,
        })
    }

    /// Builds the state from an already computed split of `p = −(Q + M + K)`.
    pub(crate) fn from_split(
        q: SymMatrix,
        u: Vec<f64>,
        p: SymMatrix,
        split: SpectralSplit,
    ) -> Self {
        let neg_energy = split.eigen.negative_energy();
        DualState {
            z: split.positive.clone(),
            q,
            u,
            p,
            p_pos: split.positive,
            p_neg: split.negative,
            neg_energy,
        }
    }

    /// State with an explicit Z, which need not equal `P₊`.
    pub fn with_z(k: &SymMatrix, z: SymMatrix, q: SymMatrix, u: Vec<f64>) -> Result<Self> {
        k.check_same_dim(&z)?;
        let mut s = Self::new(k, q, u)?;
        s.z = z;
        Ok(s)
    }

    /// `u = 0`, `Q = 0` (or `I`), `Z = P₊`.
    pub fn cold_start(k: &SymMatrix, init: InitialQ) -> Result<Self> {
        let n = k.n();
        let q = match init {
            InitialQ::Zero => SymMatrix::zeros(n),
            InitialQ::Identity => SymMatrix::identity(n),
        };
        Self::new(k, q, vec![0.0; n])
    }

    pub fn z(&self) -> &SymMatrix {
        &self.z
    }

    pub fn q(&self) -> &SymMatrix {
        &self.q
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn m(&self) -> SymMatrix {
        SymMatrix::outer_sum(&self.u)
    }

    /// `P = −(Q + M + K)`.
    pub fn p(&self) -> &SymMatrix {
        &self.p
    }

    pub fn p_pos(&self) -> &SymMatrix {
        &self.p_pos
    }

    pub fn p_neg(&self) -> &SymMatrix {
        &self.p_neg
    }

    /// `‖P₋‖_F²` from the eigenvalues of P.
    pub fn neg_energy(&self) -> f64 {
        self.neg_energy
    }

    /// Sets `Z = P₊`.
    pub fn eliminate_z(&mut self) {
        self.z = self.p_pos.clone();
    }
}

fn compute_p(k: &SymMatrix, q: &SymMatrix, u: &[f64]) -> SymMatrix {
    let n = k.n();
    let mut data = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            data.push(-(q.get(i, j) + u[i] + u[j] + k.get(i, j)));
        }
    }
    SymMatrix::from_raw(n, data)
}

/// `½‖Z + Q + M + K‖_F² − 2𝟙ᵀu`.
pub fn dual_objective(state: &DualState, k: &SymMatrix) -> f64 {
    let s = state.z().add(state.q()).add(&state.m()).add(k);
    0.5 * fro_norm_sq(&s) - 2.0 * state.u().iter().sum::<f64>()
}

/// Dual objective with Z eliminated: `½‖P₋‖_F² − 2𝟙ᵀu`.
pub fn reduced_objective(state: &DualState) -> f64 {
    0.5 * state.neg_energy() - 2.0 * state.u().iter().sum::<f64>()
}

/// Value of the concave dual (the maximization form):
/// `−½‖Z+Q+M+K‖_F² + ½‖K‖_F² + 2𝟙ᵀu`.
pub fn dual_value(state: &DualState, k: &SymMatrix) -> f64 {
    -dual_objective(state, k) + 0.5 * fro_norm_sq(k)
}

/// `∂/∂uᵢ = −2 − ⟨P₋, Tᵢ + Tᵢᵀ⟩ = −2 − 2·(row sum i of P₋)`.
pub fn grad_u(state: &DualState) -> Vec<f64> {
    state
        .p_neg()
        .row_sums()
        .into_iter()
        .map(|r| -2.0 - 2.0 * r)
        .collect()
}

/// `∂/∂Q = −P₋`.
pub fn grad_q(state: &DualState) -> SymMatrix {
    state.p_neg().scale(-1.0)
}

/// Minimizer of `½‖Z + Q + M + K‖²` over PSD Z: `Z* = P₊`.
pub fn solve_z(state: &DualState) -> SymMatrix {
    state.p_pos().clone()
}

/// Minimizer of `½‖Q + Z + M + K‖²` over `Q ≥ 0`: `max(0, −(Z + M + K))`.
pub fn solve_q(z: &SymMatrix, m: &SymMatrix, k: &SymMatrix) -> SymMatrix {
    let n = k.n();
    let data = z
        .as_slice()
        .iter()
        .zip(m.as_slice())
        .zip(k.as_slice())
        .map(|((a, b), c)| (-(a + b + c)).max(0.0))
        .collect();
    SymMatrix::from_raw(n, data)
}

/// Primal matrix from the stationarity condition: `F = K + Q + M + Z`.
pub fn recover_primal(state: &DualState, k: &SymMatrix) -> SymMatrix {
    k.add(state.q()).add(&state.m()).add(state.z())
}

/// `½‖K − F‖_F²`.
pub fn primal_objective(f: &SymMatrix, k: &SymMatrix) -> f64 {
    0.5 * fro_norm_sq(&k.sub(f))
}

/// Feasibility and optimality measures of a primal/dual pair.
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Residuals {
    /// `‖F𝟙 − 𝟙‖_∞`
    pub row_sum: f64,
    /// Smallest entry of F.
    pub min_entry: f64,
    pub primal_objective: f64,
    pub dual_value: f64,
    /// `primal_objective − dual_value`
    pub gap: f64,
    /// `⟨F, Q⟩`, zero at a complementary pair.
    pub complementarity: f64,
}

pub fn residuals(f: &SymMatrix, state: &DualState, k: &SymMatrix) -> Residuals {
    let row_sum = f
        .row_sums()
        .iter()
        .fold(0.0f64, |m, s| m.max((s - 1.0).abs()));
    let primal = primal_objective(f, k);
    let dual = dual_value(state, k);
    Residuals {
        row_sum,
        min_entry: f.min_entry(),
        primal_objective: primal,
        dual_value: dual,
        gap: primal - dual,
        complementarity: inner(f, state.q()).expect("same dimension"),
    }
}
