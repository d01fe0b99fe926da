//! Reference computations in their slowest, most literal form.
//!
//! Nothing here calls into [`crate::ensemble`], [`crate::spectral`],
//! [`crate::stats`] or [`crate::flow`]; these are the independent sides of the
//! cross-checks in the test suites.

use faer::{Mat, Side};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::Serialize;

/// A named oracle evaluation, as printed by `hrmt oracle`.
#[derive(Clone, Debug, Serialize)]
pub struct OracleResult {
    pub name: String,
    pub inputs: serde_json::Value,
    pub values: Vec<f64>,
    pub method: String,
}

/// The nested partitions `P_0, ..., P_n` of `{1, ..., 2^n}`, each as a list of blocks.
pub fn partitions(n: u32) -> Vec<Vec<Vec<usize>>> {
    let size = 1usize << n;
    (0..=n)
        .map(|r| {
            let width = 1usize << r;
            let mut blocks = Vec::new();
            let mut next = 1;
            while next <= size {
                blocks.push((next..next + width).collect::<Vec<_>>());
                next += width;
            }
            blocks
        })
        .collect()
}

/// Smallest `r` such that `x` and `y` lie in a common block of `P_r`.
pub fn partition_distance_oracle(n: u32, x: usize, y: usize) -> u32 {
    for (r, blocks) in partitions(n).iter().enumerate() {
        if blocks.iter().any(|b| b.contains(&x) && b.contains(&y)) {
            return r as u32;
        }
    }
    panic!("sites {x}, {y} not in B_{n}");
}

/// Eigenvalues `(lo, hi)` of `[[a, b], [b, d]]`.
pub fn eig2_oracle(a: f64, b: f64, d: f64) -> (f64, f64) {
    let mid = (a + d) / 2.0;
    let rad = (((a - d) / 2.0).powi(2) + b * b).sqrt();
    (mid - rad, mid + rad)
}

/// `Σ_n` summed term by term over levels `r` and sites, with `Z²` taken as the
/// first row sum of the unnormalized sum. Row-major `2^n × 2^n`.
pub fn variance_profile_oracle(n: u32, c: f64, normalized: bool) -> Vec<f64> {
    let size = 1usize << n;
    let mut sigma = vec![0.0; size * size];
    for r in 0..=n {
        let weight_sq = 2f64.powf(-(1.0 + c) * r as f64);
        let phi_scale = 2f64.powf(-(r as f64));
        for x in 1..=size {
            for y in 1..=size {
                let d = partition_distance_oracle(n, x, y);
                let var = if d == 0 {
                    2.0 * phi_scale
                } else if d <= r {
                    phi_scale
                } else {
                    0.0
                };
                sigma[(x - 1) * size + y - 1] += weight_sq * var;
            }
        }
    }
    if normalized {
        let z2: f64 = sigma[..size].iter().sum();
        for v in &mut sigma {
            *v /= z2;
        }
    }
    sigma
}

/// Mean of `min(s_i, s_{i+1}) / max(s_i, s_{i+1})` over consecutive spacings.
pub fn literal_gap_ratio(levels: &[f64]) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for i in 1..levels.len().saturating_sub(1) {
        let left = levels[i] - levels[i - 1];
        let right = levels[i + 1] - levels[i];
        let big = if left > right { left } else { right };
        let small = if left > right { right } else { left };
        if big > 0.0 {
            total += small / big;
            count += 1;
        }
    }
    total / count as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReferenceProcess {
    /// Levels with i.i.d. unit-mean exponential spacings.
    ExponentialGaps,
    /// Bulk of a 512×512 GOE matrix (central 20% of levels).
    GoeSmall,
    /// Equally spaced levels.
    Arithmetic,
}

/// Monte Carlo mean gap ratio of a reference process from `samples` ratios.
pub fn reference_gap_ratio(process: ReferenceProcess, samples: usize, rng: &mut impl Rng) -> f64 {
    match process {
        ReferenceProcess::Arithmetic => {
            let levels: Vec<f64> = (0..samples + 2).map(|k| k as f64).collect();
            literal_gap_ratio(&levels)
        }
        ReferenceProcess::ExponentialGaps => {
            let mut levels = Vec::with_capacity(samples + 2);
            let mut x = 0.0;
            levels.push(x);
            for _ in 0..samples + 1 {
                let gap: f64 = Exp1.sample(rng);
                x += gap;
                levels.push(x);
            }
            literal_gap_ratio(&levels)
        }
        ReferenceProcess::GoeSmall => {
            let n = 512;
            let mut weighted = 0.0;
            let mut collected = 0usize;
            while collected < samples {
                let levels = goe_levels(n, rng);
                let bulk = &levels[2 * n / 5..3 * n / 5];
                let ratios = bulk.len() - 2;
                weighted += literal_gap_ratio(bulk) * ratios as f64;
                collected += ratios;
            }
            weighted / collected as f64
        }
    }
}

/// Sorted eigenvalues of an `n × n` GOE matrix (off-diagonal variance 1/n, diagonal 2/n).
pub fn goe_levels(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut m = Mat::<f64>::zeros(n, n);
    let sd = (1.0 / n as f64).sqrt();
    for i in 0..n {
        for j in 0..=i {
            let g: f64 = StandardNormal.sample(rng);
            if i == j {
                m[(i, i)] = g * sd * std::f64::consts::SQRT_2;
            } else {
                m[(i, j)] = g * sd;
                m[(j, i)] = g * sd;
            }
        }
    }
    let mut vals = m.self_adjoint_eigenvalues(Side::Lower).expect("GOE eigenvalues");
    vals.sort_by(f64::total_cmp);
    vals
}

/// Poisson(λ) variate by Knuth's product-of-uniforms method.
pub fn poisson_sample(lambda: f64, rng: &mut impl Rng) -> usize {
    let limit = (-lambda).exp();
    let mut k = 0;
    let mut p: f64 = rng.random();
    while p > limit {
        k += 1;
        p *= rng.random::<f64>();
    }
    k
}

/// Complex matrix inverse by Gauss-Jordan elimination with partial pivoting.
/// Input and output are row-major `n × n`.
pub fn complex_inverse(a: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut aug = vec![Complex64::new(0.0, 0.0); n * 2 * n];
    for i in 0..n {
        for j in 0..n {
            aug[i * 2 * n + j] = a[i * n + j];
        }
        aug[i * 2 * n + n + i] = Complex64::new(1.0, 0.0);
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&p, &q| aug[p * 2 * n + col].norm().total_cmp(&aug[q * 2 * n + col].norm()))
            .unwrap();
        if pivot != col {
            for j in 0..2 * n {
                aug.swap(col * 2 * n + j, pivot * 2 * n + j);
            }
        }
        let inv = 1.0 / aug[col * 2 * n + col];
        for j in 0..2 * n {
            aug[col * 2 * n + j] *= inv;
        }
        for i in 0..n {
            if i != col {
                let f = aug[i * 2 * n + col];
                if f != Complex64::new(0.0, 0.0) {
                    for j in 0..2 * n {
                        let v = aug[col * 2 * n + j];
                        aug[i * 2 * n + j] -= f * v;
                    }
                }
            }
        }
    }
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = aug[i * 2 * n + n + j];
        }
    }
    out
}

fn shifted(h: &[f64], n: usize, z: Complex64) -> Vec<Complex64> {
    let mut a: Vec<Complex64> = h.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    for i in 0..n {
        a[i * n + i] -= z;
    }
    a
}

/// `w` solving `(H - z) w = δ_x` (0-based `x`) by direct elimination.
pub fn resolvent_solve_oracle(h: &[f64], n: usize, z: Complex64, x: usize) -> Vec<Complex64> {
    let inv = complex_inverse(&shifted(h, n, z), n);
    (0..n).map(|u| inv[u * n + x]).collect()
}

fn matmul(a: &[Complex64], b: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

/// `N⁻¹ Σ_{u<=v} ⟨δ_y, R P_uv R P_uv R δ_x⟩` with every product formed as a full
/// matrix and `R = (H - z)⁻¹` from direct inversion. Sites 0-based.
pub fn drift_pair_sum_oracle(h: &[f64], n: usize, z: Complex64, x: usize, y: usize) -> Complex64 {
    let r = complex_inverse(&shifted(h, n, z), n);
    let mut total = Complex64::new(0.0, 0.0);
    for u in 0..n {
        for v in u..n {
            let scale = if u == v { 1.0 / 2f64.sqrt() } else { 1.0 };
            let mut p = vec![Complex64::new(0.0, 0.0); n * n];
            p[u * n + v] += scale;
            p[v * n + u] += scale;
            let rp = matmul(&r, &p, n);
            let rprp = matmul(&rp, &rp, n);
            let full = matmul(&rprp, &r, n);
            total += full[y * n + x];
        }
    }
    total / n as f64
}

/// Brute-force `N⁻¹ Σ_x drift_pair_sum_oracle(x, x)` against the Burgers right-hand side
/// built from `R`, `R²` and `R³` formed by repeated products of the direct inverse.
pub fn burgers_oracle(h: &[f64], n: usize, z: Complex64) -> (Complex64, Complex64) {
    let lhs = (0..n).map(|x| drift_pair_sum_oracle(h, n, z, x, x)).sum::<Complex64>() / n as f64;
    let r = complex_inverse(&shifted(h, n, z), n);
    let r2 = matmul(&r, &r, n);
    let r3 = matmul(&r2, &r, n);
    let tr = |m: &[Complex64]| (0..n).map(|i| m[i * n + i]).sum::<Complex64>() / n as f64;
    let s = tr(&r);
    let rhs = s * tr(&r2) + tr(&r3) / n as f64;
    (lhs, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn partition_examples() {
        assert_eq!(partition_distance_oracle(3, 1, 8), 3);
        assert_eq!(partition_distance_oracle(3, 5, 6), 1);
        assert_eq!(partition_distance_oracle(2, 2, 3), 2);
        assert_eq!(partition_distance_oracle(2, 4, 4), 0);
    }

    #[test]
    fn eig2_examples() {
        assert_eq!(eig2_oracle(0.0, 0.0, 0.0), (0.0, 0.0));
        assert_eq!(eig2_oracle(1.0, 0.0, -1.0), (-1.0, 1.0));
        assert_eq!(eig2_oracle(0.0, 1.0, 0.0), (-1.0, 1.0));
    }

    #[test]
    fn arithmetic_gap_ratio_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(reference_gap_ratio(ReferenceProcess::Arithmetic, 100, &mut rng), 1.0);
    }

    #[test]
    fn exponential_gap_ratio() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = reference_gap_ratio(ReferenceProcess::ExponentialGaps, 200_000, &mut rng);
        assert!((r - (2.0 * 2f64.ln() - 1.0)).abs() < 0.003, "r = {r}");
    }

    #[test]
    fn goe_gap_ratio() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = reference_gap_ratio(ReferenceProcess::GoeSmall, 10_000, &mut rng);
        assert!((r - 0.5307).abs() < 0.005, "r = {r}");
    }

    #[test]
    fn poisson_sampler_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..50_000).map(|_| poisson_sample(2.0, &mut rng) as f64).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        assert!((mean - 2.0).abs() < 0.03);
        assert!((var - 2.0).abs() < 0.08);
    }

    #[test]
    fn variance_oracle_n1() {
        let s = variance_profile_oracle(1, 1.0, true);
        assert!((s[0] - 2.0 / 2.375 * 1.125).abs() < 1e-15);
        assert!((s[1] - 0.125 / 2.375).abs() < 1e-15);
    }

    #[test]
    fn drift_oracle_one_by_one() {
        let i = Complex64::new(0.0, 1.0);
        let lhs = drift_pair_sum_oracle(&[0.0], 1, i, 0, 0);
        assert!((lhs - Complex64::new(0.0, -2.0)).norm() < 1e-15);
    }

    #[test]
    fn inverse_round_trip() {
        let n = 4;
        let h: Vec<f64> = (0..16).map(|k| ((k * 7) % 5) as f64 - 2.0).collect();
        let a = shifted(&h, n, Complex64::new(0.1, 0.3));
        let inv = complex_inverse(&a, n);
        let id = matmul(&a, &inv, n);
        for i in 0..n {
            for j in 0..n {
                let t = if i == j { 1.0 } else { 0.0 };
                assert!((id[i * n + j] - t).norm() < 1e-12);
            }
        }
    }
}
