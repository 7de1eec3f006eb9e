//! Dense real symmetric matrices.
//!
//! [`SymMatrix`] stores all n² entries row-major and keeps them exactly
//! symmetric: every constructor averages `a[i][j]` and `a[j][i]`, and every
//! operation that could break symmetry re-symmetrizes before returning.
//!
//! The eigensolver is Householder tridiagonalization followed by the implicit
//! QL iteration (the EISPACK `tred2`/`tql2` pair). It runs on the transposed
//! eigenvector array so that every inner loop walks contiguous memory.

use std::fmt;
use std::ops::Index;

use crate::error::{Result, SscError};
use crate::par;

/// Eigenvalues with `|λ| ≤ SPLIT_REL_TOL · max|λ|` count as zero when splitting
/// a matrix into its positive and negative parts.
pub const SPLIT_REL_TOL: f64 = 1e-12;

#[derive(Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "SymMatrix dimension must be at least 1");
        SymMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![1.0; n])
    }

    /// The all-ones matrix `𝟙𝟙ᵀ`.
    pub fn ones(n: usize) -> Self {
        assert!(n >= 1, "SymMatrix dimension must be at least 1");
        SymMatrix {
            n,
            data: vec![1.0; n * n],
        }
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n);
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    /// Builds from `f(i, j)` evaluated on the upper triangle and mirrored.
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m.data[i * n + j] = v;
                m.data[j * n + i] = v;
            }
        }
        m
    }

    /// Takes an n×n row-major buffer and symmetrizes it as `(A + Aᵀ)/2`.
    pub fn from_row_major(n: usize, mut data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(SscError::InvalidArgument(
                "dimension must be at least 1".into(),
            ));
        }
        if data.len() != n * n {
            return Err(SscError::DimensionMismatch {
                expected: n * n,
                found: data.len(),
            });
        }
        symmetrize_in_place(n, &mut data);
        Ok(SymMatrix { n, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(SscError::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(n, data)
    }

    /// Internal constructor for buffers that are already symmetric up to
    /// rounding; symmetrizes anyway.
    pub(crate) fn from_raw(n: usize, mut data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n * n);
        symmetrize_in_place(n, &mut data);
        SymMatrix { n, data }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Row-major view of all n² entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// First `(row, col)` holding a NaN or infinity, if any.
    pub fn first_non_finite(&self) -> Option<(usize, usize)> {
        self.data
            .iter()
            .position(|v| !v.is_finite())
            .map(|p| (p / self.n, p % self.n))
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.first_non_finite() {
            Some((row, col)) => Err(SscError::NonFinite { row, col }),
            None => Ok(()),
        }
    }

    pub fn check_same_dim(&self, other: &SymMatrix) -> Result<()> {
        if self.n != other.n {
            return Err(SscError::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(())
    }

    /// Entrywise map. Symmetry is preserved because equal inputs give equal outputs.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        SymMatrix {
            n: self.n,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Entrywise `f(self, other)`; panics on dimension mismatch.
    pub fn zip_map(&self, other: &SymMatrix, f: impl Fn(f64, f64) -> f64) -> SymMatrix {
        assert_eq!(self.n, other.n, "dimension mismatch");
        SymMatrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> SymMatrix {
        self.map(|v| c * v)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.data.chunks(self.n).map(|r| r.iter().sum()).collect()
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn min_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        self.data
            .chunks(self.n)
            .map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `u𝟙ᵀ + 𝟙uᵀ`, i.e. entry (i, j) is `u[i] + u[j]`.
    pub fn outer_sum(u: &[f64]) -> SymMatrix {
        let n = u.len();
        let mut data = vec![0.0; n * n];
        for (i, row) in data.chunks_mut(n).enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = u[i] + u[j];
            }
        }
        SymMatrix { n, data }
    }

    /// Applies a symmetric permutation: `out[i][j] = self[perm[i]][perm[j]]`.
    pub fn permuted(&self, perm: &[usize]) -> SymMatrix {
        assert_eq!(perm.len(), self.n);
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = self.get(perm[i], perm[j]);
            }
        }
        SymMatrix { n, data }
    }
}

impl Index<(usize, usize)> for SymMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SymMatrix({}x{}) [", self.n, self.n)?;
        for row in self.data.chunks(self.n) {
            write!(f, "  ")?;
            for v in row {
                write!(f, "{v:>12.6} ")?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

fn symmetrize_in_place(n: usize, data: &mut [f64]) {
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (data[i * n + j] + data[j * n + i]);
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
    }
}

/// `⟨A, B⟩ = Tr(AᵀB) = Σᵢⱼ AᵢⱼBᵢⱼ`.
pub fn inner(a: &SymMatrix, b: &SymMatrix) -> Result<f64> {
    a.check_same_dim(b)?;
    Ok(a.data.iter().zip(&b.data).map(|(x, y)| x * y).sum())
}

pub fn fro_norm_sq(x: &SymMatrix) -> f64 {
    x.data.iter().map(|v| v * v).sum()
}

pub fn fro_dist(a: &SymMatrix, b: &SymMatrix) -> f64 {
    assert_eq!(a.n, b.n, "dimension mismatch");
    a.data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Eigenvalues (non-increasing) and an orthonormal eigenvector basis.
#[derive(Clone, Debug)]
pub struct EigenPair {
    n: usize,
    values: Vec<f64>,
    /// Row k is the eigenvector for `values[k]`.
    vectors: Vec<f64>,
}

impl EigenPair {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Unit eigenvector belonging to `values()[k]`.
    pub fn vector(&self, k: usize) -> &[f64] {
        &self.vectors[k * self.n..(k + 1) * self.n]
    }

    /// Entry `V[i][k]` of the eigenvector matrix (component i of vector k).
    pub fn component(&self, i: usize, k: usize) -> f64 {
        self.vectors[k * self.n + i]
    }

    pub fn min_value(&self) -> f64 {
        *self.values.last().expect("non-empty")
    }

    pub fn max_value(&self) -> f64 {
        self.values[0]
    }

    /// `Σ_{k ∈ idx} w_k v_k v_kᵀ`.
    pub fn weighted_sum(&self, idx: &[usize], weights: &[f64]) -> SymMatrix {
        debug_assert_eq!(idx.len(), weights.len());
        let n = self.n;
        let mut out = vec![0.0; n * n];
        if idx.is_empty() {
            return SymMatrix { n, data: out };
        }
        // Scaled copies of the selected vectors, one contiguous row each.
        let scaled: Vec<Vec<f64>> = idx
            .iter()
            .zip(weights)
            .map(|(&k, &w)| self.vector(k).iter().map(|v| w * v).collect())
            .collect();
        par::for_each_row_mut(&mut out, n, |r, row| {
            for (&k, s) in idx.iter().zip(&scaled) {
                let a = self.component(r, k);
                if a != 0.0 {
                    for (o, &b) in row.iter_mut().zip(s) {
                        *o += a * b;
                    }
                }
            }
        });
        SymMatrix::from_raw(n, out)
    }

    /// `V Λ Vᵀ`.
    pub fn reconstruct(&self) -> SymMatrix {
        let idx: Vec<usize> = (0..self.n).collect();
        self.weighted_sum(&idx, &self.values)
    }

    fn zero_threshold(&self) -> f64 {
        let max_abs = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        SPLIT_REL_TOL * max_abs
    }

    /// Indices of eigenvalues above / below the zero threshold.
    fn split_indices(&self) -> (Vec<usize>, Vec<usize>) {
        let tau = self.zero_threshold();
        let pos = (0..self.n).filter(|&k| self.values[k] > tau).collect();
        let neg = (0..self.n).filter(|&k| self.values[k] < -tau).collect();
        (pos, neg)
    }

    /// `Σ_{λ < 0} λ²` over eigenvalues past the zero threshold, i.e. `‖X₋‖_F²`.
    pub fn negative_energy(&self) -> f64 {
        let tau = self.zero_threshold();
        self.values
            .iter()
            .filter(|&&v| v < -tau)
            .map(|v| v * v)
            .sum()
    }
}

/// Symmetric eigendecomposition `X = V Λ Vᵀ` with eigenvalues non-increasing.
pub fn eig(x: &SymMatrix) -> Result<EigenPair> {
    x.check_finite()?;
    let n = x.n;
    // w[c * n + r] holds V(r, c); X is symmetric so the initial copy is Xᵀ = X.
    let mut w = x.data.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    if n == 1 {
        return Ok(EigenPair {
            n,
            values: vec![x.data[0]],
            vectors: vec![1.0],
        });
    }
    tridiagonalize(n, &mut w, &mut d, &mut e);
    ql_implicit(n, &mut w, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[b].total_cmp(&d[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&k| d[k]).collect();
    let mut vectors = Vec::with_capacity(n * n);
    for &k in &order {
        vectors.extend_from_slice(&w[k * n..(k + 1) * n]);
    }
    Ok(EigenPair { n, values, vectors })
}

/// Householder reduction to tridiagonal form with accumulated transforms.
fn tridiagonalize(n: usize, w: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    for j in 0..n {
        d[j] = w[j * n + (n - 1)];
    }

    for i in (1..n).rev() {
        let scale: f64 = d[..i].iter().map(|v| v.abs()).sum();
        let mut h = 0.0;
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = w[j * n + (i - 1)];
                w[j * n + i] = 0.0;
                w[i * n + j] = 0.0;
            }
        } else {
            for v in d[..i].iter_mut() {
                *v /= scale;
                h += *v * *v;
            }
            let f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            e[..i].fill(0.0);

            // e = A_sub · d using the lower triangle stored in rows of w.
            for j in 0..i {
                let f = d[j];
                w[i * n + j] = f;
                let col = &w[j * n..j * n + i];
                let mut g = e[j] + col[j] * f;
                for k in (j + 1)..i {
                    g += col[k] * d[k];
                    e[k] += col[k] * f;
                }
                e[j] = g;
            }
            let mut f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }

            // Rank-2 update of the leading i×i block; column j of V is row j of w.
            {
                let (block, _) = w.split_at_mut(i * n);
                let dd = &d[..i];
                let ee = &e[..i];
                par::for_each_row_mut(block, n, |j, row| {
                    let (f, g) = (dd[j], ee[j]);
                    for k in j..i {
                        row[k] -= f * ee[k] + g * dd[k];
                    }
                });
            }
            for j in 0..i {
                d[j] = w[j * n + (i - 1)];
                w[j * n + i] = 0.0;
            }
        }
        d[i] = h;
    }

    // Accumulate transformations.
    let mut col = vec![0.0; n];
    for i in 0..(n - 1) {
        w[i * n + (n - 1)] = w[i * n + i];
        w[i * n + i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            col[..=i].copy_from_slice(&w[(i + 1) * n..(i + 1) * n + i + 1]);
            for k in 0..=i {
                d[k] = col[k] / h;
            }
            let (block, _) = w.split_at_mut((i + 1) * n);
            let cc = &col[..=i];
            let dd = &d[..=i];
            par::for_each_row_mut(block, n, |_, row| {
                let g: f64 = cc.iter().zip(&row[..=i]).map(|(a, b)| a * b).sum();
                for (r, &dk) in row[..=i].iter_mut().zip(dd) {
                    *r -= g * dk;
                }
            });
        }
        w[(i + 1) * n..(i + 1) * n + i + 1].fill(0.0);
    }
    for j in 0..n {
        d[j] = w[j * n + (n - 1)];
        w[j * n + (n - 1)] = 0.0;
    }
    w[(n - 1) * n + (n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit QL iteration on the tridiagonal (d, e), rotating rows of w.
fn ql_implicit(n: usize, w: &mut [f64], d: &mut [f64], e: &mut [f64]) -> Result<()> {
    const MAX_SWEEPS: usize = 60;

    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        // e[n-1] == 0, so m < n always.
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > MAX_SWEEPS {
                    return Err(SscError::EigenNoConvergence(l));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for v in d[(l + 2)..n].iter_mut() {
                    *v -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    let (lo, hi) = w.split_at_mut((i + 1) * n);
                    let vi = &mut lo[i * n..];
                    let vi1 = &mut hi[..n];
                    for (a, b) in vi.iter_mut().zip(vi1.iter_mut()) {
                        let t = *b;
                        *b = s * *a + c * t;
                        *a = c * *a - s * t;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// A symmetric matrix split as `X = X₊ + X₋` together with its eigenpairs.
#[derive(Clone, Debug)]
pub struct SpectralSplit {
    pub positive: SymMatrix,
    pub negative: SymMatrix,
    pub eigen: EigenPair,
}

/// Computes `X₊` and `X₋` from a single eigendecomposition. Only the part with
/// fewer eigenvalues is reconstructed; the other is `X` minus it, so that
/// `X₊ + X₋ = X` holds to rounding.
pub fn spectral_split(x: &SymMatrix) -> Result<SpectralSplit> {
    let eigen = eig(x)?;
    let (pos, neg) = eigen.split_indices();
    let (positive, negative) = if pos.len() <= neg.len() {
        let wts: Vec<f64> = pos.iter().map(|&k| eigen.values[k]).collect();
        let p = eigen.weighted_sum(&pos, &wts);
        let m = x.sub(&p);
        (p, m)
    } else {
        let wts: Vec<f64> = neg.iter().map(|&k| eigen.values[k]).collect();
        let m = eigen.weighted_sum(&neg, &wts);
        let p = x.sub(&m);
        (p, m)
    };
    Ok(SpectralSplit {
        positive,
        negative,
        eigen,
    })
}

/// `X₊ = Σ_{λᵢ>0} λᵢuᵢuᵢᵀ`, the Frobenius-nearest PSD matrix.
pub fn positive_part(x: &SymMatrix) -> Result<SymMatrix> {
    let eigen = eig(x)?;
    let (pos, _) = eigen.split_indices();
    let wts: Vec<f64> = pos.iter().map(|&k| eigen.values[k]).collect();
    Ok(eigen.weighted_sum(&pos, &wts))
}

/// `X₋ = X − X₊`.
pub fn negative_part(x: &SymMatrix) -> Result<SymMatrix> {
    Ok(x.sub(&positive_part(x)?))
}
