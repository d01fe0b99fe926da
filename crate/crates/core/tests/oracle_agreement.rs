//! Primary implementations against the literal reference computations.

use hrmt::ensemble::{assemble, hier_distance, variance_profile, EnsembleConfig, Hamiltonian, IndexSpace, Origin};
use hrmt::flow::drift_identity_check;
use hrmt::oracle::{
    drift_pair_sum_oracle, eig2_oracle, partition_distance_oracle, resolvent_solve_oracle, variance_profile_oracle,
};
use hrmt::spectral::{eigenvalues, eigendecompose, green_row, ComplexEnergy};
use hrmt::RngStream;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn distance_matches_partitions_exhaustively() {
    for n in 0..=6 {
        let space = IndexSpace::new(n).unwrap();
        let size = space.size();
        for x in 1..=size {
            for y in 1..=size {
                assert_eq!(hier_distance(&space, x, y).unwrap(), partition_distance_oracle(n, x, y), "n={n} ({x},{y})");
            }
        }
    }
}

#[test]
fn two_by_two_spectra_match_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..10_000 {
        let (a, b, d): (f64, f64, f64) = (rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        let h = Hamiltonian::from_entries(2, vec![a, b, b, d], Origin::External, 0, 0).unwrap();
        let eigs = eigenvalues(&h).unwrap();
        let (lo, hi) = eig2_oracle(a, b, d);
        let scale = 1f64.max(lo.abs()).max(hi.abs());
        assert!((eigs[0] - lo).abs() <= 1e-12 * scale, "{a} {b} {d}");
        assert!((eigs[1] - hi).abs() <= 1e-12 * scale, "{a} {b} {d}");
    }
}

#[test]
fn variance_profile_matches_term_by_term_sum() {
    for n in 0..=4 {
        for c in [-2.5, -1.0, 0.0, 0.7, 1.0, 3.0] {
            for normalized in [true, false] {
                let closed = variance_profile(n, c, normalized).unwrap().to_dense();
                let literal = variance_profile_oracle(n, c, normalized);
                for (a, b) in closed.iter().zip(&literal) {
                    assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "n={n} c={c}: {a} vs {b}");
                }
            }
        }
    }
}

#[test]
fn drift_pair_sum_matches_full_products() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (k, n) in [0u32, 1, 3, 5].into_iter().enumerate() {
        let h = assemble(&EnsembleConfig::ultrametric(n, 0.3), RngStream::new(9, k as u64)).unwrap();
        let size = h.size();
        for _ in 0..2 {
            let z = ComplexEnergy::new(rng.random_range(-1.0..1.0), rng.random_range(1e-3..1.0)).unwrap();
            let (x, y) = (rng.random_range(1..=size), rng.random_range(1..=size));
            let fast = drift_identity_check(&h, z, x, y).unwrap().lhs;
            let slow = drift_pair_sum_oracle(h.as_slice(), size, z.z(), x - 1, y - 1);
            assert!((fast - slow).norm() <= 1e-8 * slow.norm(), "N={size}: {fast} vs {slow}");
        }
    }
}

#[test]
fn green_row_matches_linear_solve() {
    let h = assemble(&EnsembleConfig::ultrametric(5, -0.5), RngStream::new(4, 0)).unwrap();
    let sd = eigendecompose(&h).unwrap();
    for (e, eta) in [(0.0, 1.0), (0.4, 1e-2), (-1.3, 1e-3)] {
        let z = ComplexEnergy::new(e, eta).unwrap();
        for x in [1, 16, 32] {
            let fast = green_row(&sd, x, z).unwrap();
            let slow = resolvent_solve_oracle(h.as_slice(), 32, Complex64::new(e, eta), x - 1);
            let norm = slow.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).norm() <= 1e-10 * norm, "{a} vs {b}");
            }
        }
    }
}
