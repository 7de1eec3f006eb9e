//! Seeded synthetic datasets for tests, benchmarks, and the CLI.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::affinity::Dataset;

/// Isotropic Gaussian blobs: `per_cluster` samples around each center with
/// standard deviation `spread`. Labels follow the center order.
pub fn gaussian_blobs(centers: &[Vec<f64>], per_cluster: usize, spread: f64, seed: u64) -> Dataset {
    assert!(!centers.is_empty());
    let dim = centers[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, spread).expect("spread must be finite and non-negative");
    let mut points = Vec::with_capacity(centers.len() * per_cluster * dim);
    let mut labels = Vec::with_capacity(centers.len() * per_cluster);
    for (c, center) in centers.iter().enumerate() {
        assert_eq!(center.len(), dim);
        for _ in 0..per_cluster {
            points.extend(center.iter().map(|m| m + noise.sample(&mut rng)));
            labels.push(c);
        }
    }
    Dataset::new("blobs", points, dim, Some(labels)).expect("valid synthetic dataset")
}

/// `n` samples from two unit-variance 2-D Gaussians whose means are
/// `separation` apart; the first `n/2` samples belong to class 0.
pub fn two_gaussians(n: usize, separation: f64, seed: u64) -> Dataset {
    let half = separation / 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut points = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = usize::from(i >= n / 2);
        let mx = if c == 0 { -half } else { half };
        points.push(mx + noise.sample(&mut rng));
        points.push(noise.sample(&mut rng));
        labels.push(c);
    }
    let mut d = Dataset::new("two_gaussians", points, 2, Some(labels)).expect("valid dataset");
    d.name = format!("two_gaussians_{n}");
    d
}

/// Two tight, far-apart blobs in the plane: a trivially separable instance.
pub fn two_blobs(per_cluster: usize, seed: u64) -> Dataset {
    let mut d = gaussian_blobs(&[vec![0.0, 0.0], vec![10.0, 10.0]], per_cluster, 0.5, seed);
    d.name = "two_blobs".into();
    d
}
