#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ssc_core::SymMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entries uniform in [lo, hi), then symmetrized.
pub fn random_sym(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> SymMatrix {
    let raw: Vec<f64> = (0..n * n).map(|_| rng.random_range(lo..hi)).collect();
    SymMatrix::from_fn(n, |i, j| 0.5 * (raw[i * n + j] + raw[j * n + i]))
}

/// `BBᵀ / n` for a random square B: PSD, usually full rank.
pub fn random_psd(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix {
    let b: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    SymMatrix::from_fn(n, |i, j| {
        (0..n).map(|t| b[i * n + t] * b[j * n + t]).sum::<f64>() / n as f64
    })
}

/// Random symmetric doubly-stochastic matrix: an average of `(P + Pᵀ)/2`
/// over random permutations P.
pub fn random_doubly_stochastic(rng: &mut ChaCha8Rng, n: usize, terms: usize) -> SymMatrix {
    let mut acc = vec![0.0; n * n];
    for _ in 0..terms {
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        for (i, &j) in perm.iter().enumerate() {
            acc[i * n + j] += 0.5 / terms as f64;
            acc[j * n + i] += 0.5 / terms as f64;
        }
    }
    SymMatrix::from_row_major(n, acc).unwrap()
}

pub fn random_perm(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    perm
}

pub fn to_na(x: &SymMatrix) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_row_slice(x.n(), x.n(), x.as_slice())
}

pub fn max_row_dev(x: &SymMatrix) -> f64 {
    x.row_sums()
        .iter()
        .fold(0.0f64, |m, s| m.max((s - 1.0).abs()))
}
