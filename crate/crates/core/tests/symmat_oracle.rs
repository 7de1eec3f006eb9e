mod common;

use common::{random_psd, random_sym, rng, to_na};
use ssc_core::symmat::{eig, fro_dist, fro_norm_sq, inner, negative_part, positive_part};
use ssc_core::SymMatrix;

#[test]
fn eig_matches_nalgebra() {
    let mut r = rng(1);
    for &n in &[1usize, 2, 3, 5, 17, 40, 80] {
        let x = random_sym(&mut r, n, -2.0, 2.0);
        let ours = eig(&x).unwrap();
        let theirs = to_na(&x).symmetric_eigen();
        let mut want: Vec<f64> = theirs.eigenvalues.iter().copied().collect();
        want.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let scale = x.max_abs().max(1.0);
        for (a, b) in ours.values().iter().zip(&want) {
            assert!((a - b).abs() <= 1e-10 * scale, "n={n}: {a} vs {b}");
        }
    }
}

#[test]
fn eig_orthonormal_and_reconstructs() {
    let mut r = rng(2);
    for &n in &[2usize, 6, 25, 64] {
        let x = random_sym(&mut r, n, -1.0, 1.0);
        let e = eig(&x).unwrap();
        for a in 0..n {
            for b in 0..n {
                let d: f64 = e
                    .vector(a)
                    .iter()
                    .zip(e.vector(b))
                    .map(|(p, q)| p * q)
                    .sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((d - want).abs() <= 1e-10, "VᵀV[{a},{b}] = {d}");
            }
        }
        let rec = e.reconstruct();
        assert!(fro_dist(&rec, &x) <= 1e-8 * fro_norm_sq(&x).sqrt().max(1.0));
        assert!(e.values().windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn eig_handles_repeated_eigenvalues() {
    // Projector onto a 3-dim subspace: eigenvalues 1,1,1,0,0,0.
    let mut r = rng(3);
    let b = random_psd(&mut r, 6);
    let e = eig(&b).unwrap();
    let idx = [0usize, 1, 2];
    let proj = e.weighted_sum(&idx, &[1.0, 1.0, 1.0]);
    let ep = eig(&proj).unwrap();
    for (k, v) in ep.values().iter().enumerate() {
        let want = if k < 3 { 1.0 } else { 0.0 };
        assert!((v - want).abs() < 1e-12);
    }
}

#[test]
fn positive_part_is_nearest_psd() {
    let mut r = rng(4);
    for _ in 0..20 {
        let x = random_sym(&mut r, 7, -1.0, 1.0);
        let xp = positive_part(&x).unwrap();
        let best = fro_dist(&x, &xp);
        for _ in 0..10 {
            let y = random_psd(&mut r, 7);
            assert!(best <= fro_dist(&x, &y) + 1e-8);
            // Small PSD perturbations of X₊ stay PSD and must not be closer.
            let z = xp.add(&y.scale(1e-3));
            assert!(best <= fro_dist(&x, &z) + 1e-8);
        }
    }
}

#[test]
fn split_is_orthogonal_and_sums_back() {
    let mut r = rng(5);
    for _ in 0..20 {
        let x = random_sym(&mut r, 9, -3.0, 3.0);
        let p = positive_part(&x).unwrap();
        let m = negative_part(&x).unwrap();
        assert!(inner(&p, &m).unwrap().abs() <= 1e-8);
        assert!(fro_dist(&p.add(&m), &x) <= 1e-8);
        assert!(eig(&p).unwrap().min_value() >= -1e-10 * fro_norm_sq(&x).sqrt());
        assert!(eig(&m).unwrap().max_value() <= 1e-10 * fro_norm_sq(&x).sqrt());
    }
}

#[test]
fn psd_input_is_fixed_point() {
    let mut r = rng(6);
    let x = random_psd(&mut r, 8);
    assert!(fro_dist(&positive_part(&x).unwrap(), &x) <= 1e-8);
    assert!(negative_part(&x).unwrap().max_abs() <= 1e-8);
}

#[test]
fn non_finite_input_is_rejected() {
    let x = SymMatrix::from_row_major(2, vec![1.0, f64::NAN, f64::NAN, 1.0]).unwrap();
    assert!(eig(&x).is_err());
    assert!(positive_part(&x).is_err());
}
