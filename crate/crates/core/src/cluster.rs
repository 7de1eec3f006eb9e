//! Spectral embedding, k-means and error rate.

use std::time::Instant;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::affinity::{build_affinity, Dataset, KernelSpec};
use crate::error::{Result, SscError};
use crate::ldssc::SolverReport;
use crate::normalize::{apply_normalizer, NormalizerSpec};
use crate::par;
use crate::symmat::{eig, SymMatrix};

/// Lloyd iteration cap per restart.
pub const MAX_LLOYD_ITERS: usize = 300;

/// Eigenvalues closer than this count as tied at the cut between the k-th
/// and (k+1)-th.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Points in the span of the top-k eigenvectors.
#[derive(Clone, Debug)]
pub struct Embedding {
    n: usize,
    k: usize,
    /// Row-major n×k; column c is the eigenvector of the c-th largest eigenvalue.
    coords: Vec<f64>,
    eigenvalues: Vec<f64>,
    /// Set when the k-th and (k+1)-th eigenvalues coincide, so the subspace is
    /// not unique.
    pub degenerate: bool,
}

impl Embedding {
    /// Wraps arbitrary coordinates, e.g. raw data for k-means.
    pub fn from_points(points: Vec<f64>, n: usize, dim: usize) -> Result<Self> {
        if dim == 0 || points.len() != n * dim {
            return Err(SscError::DimensionMismatch {
                expected: n * dim.max(1),
                found: points.len(),
            });
        }
        Ok(Embedding {
            n,
            k: dim,
            coords: points,
            eigenvalues: Vec::new(),
            degenerate: false,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.k..(i + 1) * self.k]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Column c as a vector of length n.
    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.coords[i * self.k + c]).collect()
    }

    /// `Tr(WᵀK̂W)` for the matrix the embedding came from.
    pub fn trace_objective(&self, k_hat: &SymMatrix) -> f64 {
        (0..self.k)
            .map(|c| {
                let w = self.column(c);
                let kw = k_hat.matvec(&w);
                w.iter().zip(&kw).map(|(a, b)| a * b).sum::<f64>()
            })
            .sum()
    }
}

/// Top-k eigenvectors of `k_hat` as an n×k embedding.
///
/// Each eigenvector's sign is fixed so that its largest-magnitude component is
/// positive.
pub fn spectral_embed(k_hat: &SymMatrix, k: usize) -> Result<Embedding> {
    let n = k_hat.n();
    if k == 0 || k > n {
        return Err(SscError::InvalidArgument(format!(
            "embedding dimension {k} outside 1..={n}"
        )));
    }
    let ep = eig(k_hat)?;
    let vals = ep.values();
    let degenerate = k < n && (vals[k - 1] - vals[k]).abs() <= DEGENERACY_TOL;
    let mut coords = vec![0.0; n * k];
    for c in 0..k {
        let v = ep.vector(c);
        let pivot = v
            .iter()
            .copied()
            .fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            coords[i * k + c] = sign * v[i];
        }
    }
    Ok(Embedding {
        n,
        k,
        coords,
        eigenvalues: vals[..k].to_vec(),
        degenerate,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    pub labels: Vec<usize>,
    /// Within-cluster sum of squared distances.
    pub inertia: f64,
    pub restarts_used: usize,
    /// Restart that produced `labels`.
    pub best_restart: usize,
    /// Inertia after each assignment step of the winning restart.
    pub inertia_trace: Vec<f64>,
}

struct Lloyd {
    labels: Vec<usize>,
    inertia: f64,
    trace: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn assign(
    e: &Embedding,
    centers: &[f64],
    k: usize,
    labels: &mut [usize],
    dists: &mut [f64],
) -> bool {
    let d = e.dim();
    let mut changed = false;
    for i in 0..e.len() {
        let p = e.point(i);
        let (mut best, mut best_d) = (0, f64::INFINITY);
        for c in 0..k {
            let dc = sq_dist(p, &centers[c * d..(c + 1) * d]);
            if dc < best_d {
                best = c;
                best_d = dc;
            }
        }
        if labels[i] != best {
            labels[i] = best;
            changed = true;
        }
        dists[i] = best_d;
    }
    changed
}

fn lloyd(e: &Embedding, k: usize, seed: u64) -> Lloyd {
    let (n, d) = (e.len(), e.dim());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = Vec::with_capacity(k * d);
    for i in sample(&mut rng, n, k) {
        centers.extend_from_slice(e.point(i));
    }
    let mut labels = vec![usize::MAX; n];
    let mut dists = vec![0.0; n];
    let mut trace = Vec::new();
    for _ in 0..MAX_LLOYD_ITERS {
        let changed = assign(e, &centers, k, &mut labels, &mut dists);
        trace.push(dists.iter().sum());
        if !changed {
            break;
        }
        let mut counts = vec![0usize; k];
        centers.iter_mut().for_each(|v| *v = 0.0);
        for (i, &c) in labels.iter().enumerate() {
            counts[c] += 1;
            for (cv, pv) in centers[c * d..(c + 1) * d].iter_mut().zip(e.point(i)) {
                *cv += pv;
            }
        }
        let mut taken = vec![false; n];
        for c in 0..k {
            if counts[c] > 0 {
                let inv = 1.0 / counts[c] as f64;
                centers[c * d..(c + 1) * d]
                    .iter_mut()
                    .for_each(|v| *v *= inv);
                continue;
            }
            // Empty cluster: move its center onto the point farthest from its
            // current center, lowest index on ties.
            let far =
                (0..n)
                    .filter(|&i| !taken[i])
                    .fold(None, |best: Option<usize>, i| match best {
                        Some(b) if dists[b] >= dists[i] => Some(b),
                        _ => Some(i),
                    });
            if let Some(i) = far {
                taken[i] = true;
                centers[c * d..(c + 1) * d].copy_from_slice(e.point(i));
            }
        }
    }
    Lloyd {
        labels,
        inertia: *trace.last().expect("at least one assignment"),
        trace,
    }
}

/// Best-of-`restarts` Lloyd k-means. Restart i is seeded with `seed + i` and
/// starts from k distinct points sampled uniformly; the result with the lowest
/// inertia wins, the lower restart index on ties.
pub fn kmeans(e: &Embedding, k: usize, restarts: usize, seed: u64) -> Result<ClusterResult> {
    if k == 0 || k > e.len() {
        return Err(SscError::InvalidArgument(format!(
            "cluster count {k} outside 1..={}",
            e.len()
        )));
    }
    if restarts == 0 {
        return Err(SscError::InvalidArgument(
            "restarts must be at least 1".into(),
        ));
    }
    if let Some(i) = e.coords.iter().position(|v| !v.is_finite()) {
        return Err(SscError::NonFinite {
            row: i / e.dim(),
            col: i % e.dim(),
        });
    }
    let runs = par::map_jobs(restarts, |r| lloyd(e, k, seed.wrapping_add(r as u64)));
    let mut best = 0;
    for (r, run) in runs.iter().enumerate() {
        if run.inertia < runs[best].inertia {
            best = r;
        }
    }
    let run = runs.into_iter().nth(best).expect("restarts ≥ 1");
    Ok(ClusterResult {
        labels: run.labels,
        inertia: run.inertia,
        restarts_used: restarts,
        best_restart: best,
        inertia_trace: run.trace,
    })
}

fn dense_ids(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map = std::collections::HashMap::new();
    let ids = labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect();
    (ids, map.len())
}

/// Minimum-cost perfect assignment on a square cost matrix (row-major).
/// Returns `col[r]` for each row r.
pub fn hungarian(cost: &[f64], m: usize) -> Vec<usize> {
    assert_eq!(cost.len(), m * m, "cost matrix must be m×m");
    // Potentials formulation, 1-based with a virtual column 0.
    let mut u = vec![0.0; m + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=m {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * m + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; m];
    for j in 1..=m {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// `1 − (matches under the best one-to-one relabeling) / n`.
pub fn error_rate(labels: &[usize], truth: &[usize]) -> Result<f64> {
    if labels.len() != truth.len() {
        return Err(SscError::DimensionMismatch {
            expected: truth.len(),
            found: labels.len(),
        });
    }
    if labels.is_empty() {
        return Ok(0.0);
    }
    let (a, ka) = dense_ids(labels);
    let (b, kb) = dense_ids(truth);
    let m = ka.max(kb);
    let mut confusion = vec![0.0; m * m];
    for (x, y) in a.iter().zip(&b) {
        confusion[x * m + y] += 1.0;
    }
    let cost: Vec<f64> = confusion.iter().map(|c| -c).collect();
    let assignment = hungarian(&cost, m);
    let matched: f64 = (0..m).map(|r| confusion[r * m + assignment[r]]).sum();
    Ok(1.0 - matched / labels.len() as f64)
}

/// Everything produced by one pass of the clustering pipeline.
#[derive(Clone, Debug)]
pub struct PipelineResult {
    pub clusters: ClusterResult,
    pub embedding: Embedding,
    pub error: Option<f64>,
    pub solver: Option<SolverReport>,
    /// Iterations used by the normalizer (0 for closed-form ones).
    pub normalizer_iterations: usize,
    pub normalizer_converged: bool,
    /// Seconds spent in the normalizer.
    pub normalize_time: f64,
    /// Seconds for the whole pipeline.
    pub wall_time: f64,
}

/// affinity → normalizer → spectral embedding → k-means → error rate (when
/// the dataset carries labels).
pub fn run_pipeline(
    data: &Dataset,
    kspec: &KernelSpec,
    nspec: &NormalizerSpec,
    k: usize,
    restarts: usize,
    seed: u64,
) -> Result<PipelineResult> {
    let start = Instant::now();
    let affinity = build_affinity(data, kspec)?;
    let t = Instant::now();
    let normalized = apply_normalizer(&affinity, nspec)?;
    let normalize_time = t.elapsed().as_secs_f64();
    let embedding = spectral_embed(&normalized.matrix, k)?;
    let clusters = kmeans(&embedding, k, restarts, seed)?;
    let error = match data.labels() {
        Some(truth) => Some(error_rate(&clusters.labels, truth)?),
        None => None,
    };
    Ok(PipelineResult {
        clusters,
        embedding,
        error,
        solver: normalized.solver,
        normalizer_iterations: normalized.iterations,
        normalizer_converged: normalized.converged,
        normalize_time,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normalize::NormalizerKind;
    use crate::synthetic::two_blobs;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_embedding_is_degenerate() {
        let e = spectral_embed(&SymMatrix::identity(4), 2).unwrap();
        assert!(e.degenerate);
        assert_abs_diff_eq!(
            e.trace_objective(&SymMatrix::identity(4)),
            2.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn two_block_embedding_separates_blocks() {
        let third = 1.0 / 3.0;
        let k = SymMatrix::from_fn(6, |i, j| if (i < 3) == (j < 3) { third } else { 0.0 });
        let e = spectral_embed(&k, 2).unwrap();
        for v in e.eigenvalues() {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-12);
        }
        let dist = |a: usize, b: usize| sq_dist(e.point(a), e.point(b)).sqrt();
        for a in 0..6 {
            for b in 0..6 {
                if (a < 3) == (b < 3) {
                    assert!(dist(a, b) < 1e-10);
                } else {
                    assert!(dist(a, b) > 0.1);
                }
            }
        }
    }

    #[test]
    fn embedding_rejects_bad_k() {
        assert!(spectral_embed(&SymMatrix::identity(3), 0).is_err());
        assert!(spectral_embed(&SymMatrix::identity(3), 4).is_err());
    }

    #[test]
    fn kmeans_blobs() {
        let d = two_blobs(20, 3);
        let e = Embedding::from_points(d.points().to_vec(), d.len(), d.dim()).unwrap();
        let r = kmeans(&e, 2, 5, 11).unwrap();
        assert_eq!(error_rate(&r.labels, d.labels().unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn kmeans_k_equals_n() {
        let pts = vec![0.0, 1.0, 3.0, 7.0, 15.0];
        let e = Embedding::from_points(pts, 5, 1).unwrap();
        let r = kmeans(&e, 5, 2, 0).unwrap();
        assert_eq!(r.inertia, 0.0);
        let mut l = r.labels.clone();
        l.sort();
        assert_eq!(l, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn kmeans_identical_points() {
        let e = Embedding::from_points(vec![2.0; 8], 4, 2).unwrap();
        let r = kmeans(&e, 2, 3, 5).unwrap();
        assert_eq!(r.inertia, 0.0);
        assert!(r.labels.iter().all(|&l| l < 2));
    }

    #[test]
    fn kmeans_rejects_bad_args() {
        let e = Embedding::from_points(vec![0.0, 1.0], 2, 1).unwrap();
        assert!(kmeans(&e, 3, 1, 0).is_err());
        assert!(kmeans(&e, 1, 0, 0).is_err());
    }

    #[test]
    fn error_rate_examples() {
        assert_eq!(error_rate(&[0, 1, 2, 1], &[0, 1, 2, 1]).unwrap(), 0.0);
        assert_eq!(error_rate(&[2, 0, 1, 0], &[0, 1, 2, 1]).unwrap(), 0.0);
        assert_abs_diff_eq!(error_rate(&[1, 0, 0, 0], &[0, 0, 1, 1]).unwrap(), 0.25);
        assert!(error_rate(&[0, 1], &[0]).is_err());
    }

    #[test]
    fn hungarian_small() {
        let cost = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let a = hungarian(&cost, 3);
        let total: f64 = (0..3).map(|r| cost[r * 3 + a[r]]).sum();
        assert_eq!(total, 5.0);
    }

    #[test]
    fn pipeline_two_blobs() {
        let d = two_blobs(10, 1);
        let kspec = KernelSpec::Gaussian { width: 3.0 };
        for kind in NormalizerKind::ALL {
            let r = run_pipeline(&d, &kspec, &NormalizerSpec::new(kind), 2, 5, 0).unwrap();
            assert_eq!(r.error, Some(0.0), "{kind}");
            assert_eq!(r.solver.is_some(), kind.is_ld_ssc());
        }
    }
}
