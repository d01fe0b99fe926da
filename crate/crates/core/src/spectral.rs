//! Dense symmetric eigendecomposition and resolvent evaluation.
//!
//! A single decomposition serves every Green function `G(x, y; z)` and the
//! normalized trace `S(z)`. Block-diagonal inputs (truncated models, diagonal
//! potentials) are split into their irreducible diagonal blocks first, so the
//! returned eigenvectors vanish exactly outside their block.

use faer::{Mat, Side};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensemble::Hamiltonian;
use crate::error::{Error, Result};

/// A point `z = E + iη` of the upper half-plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexEnergy {
    pub e: f64,
    pub eta: f64,
}

impl ComplexEnergy {
    pub fn new(e: f64, eta: f64) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() || !e.is_finite() {
            return Err(Error::domain(format!("need finite E and eta > 0, got E = {e}, eta = {eta}")));
        }
        Ok(Self { e, eta })
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(self.e, self.eta)
    }
}

/// Sorted eigenvalues and the matching orthonormal eigenvectors of one realization.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralData {
    eigenvalues: Vec<f64>,
    /// Column-major: eigenvector `j` occupies `vectors[j*N..(j+1)*N]`.
    vectors: Vec<f64>,
}

impl SpectralData {
    pub fn size(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Eigenvector `j` (0-based, matching `eigenvalues()[j]`), indexed by 0-based site.
    pub fn eigenvector(&self, j: usize) -> &[f64] {
        let n = self.size();
        &self.vectors[j * n..(j + 1) * n]
    }

    /// Amplitude `ψ_j(x)` at the 1-based site `x`.
    #[inline]
    pub fn amplitude(&self, j: usize, x: usize) -> f64 {
        self.vectors[j * self.size() + x - 1]
    }

    /// Column-major eigenvector matrix.
    pub fn vectors(&self) -> &[f64] {
        &self.vectors
    }

    /// Assembles spectral data from explicit parts; columns must be orthonormal.
    pub fn from_parts(eigenvalues: Vec<f64>, vectors: Vec<f64>) -> Result<Self> {
        let n = eigenvalues.len();
        if vectors.len() != n * n {
            return Err(Error::domain("eigenvector matrix has the wrong size"));
        }
        if eigenvalues.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::domain("eigenvalues must be sorted ascending"));
        }
        Ok(Self { eigenvalues, vectors })
    }

    fn check_site(&self, x: usize) -> Result<()> {
        if x == 0 || x > self.size() {
            return Err(Error::domain(format!("site {x} outside 1..={}", self.size())));
        }
        Ok(())
    }
}

/// Half-open ranges `[start, end)` of the irreducible diagonal blocks of `h`.
pub fn diagonal_blocks(h: &Hamiltonian) -> Vec<(usize, usize)> {
    let n = h.size();
    let mut blocks = Vec::new();
    let mut start = 0;
    let mut reach = 0;
    for i in 0..n {
        let row = &h.as_slice()[i * n..(i + 1) * n];
        if let Some(last) = row[i..].iter().rposition(|&v| v != 0.0) {
            reach = reach.max(i + last);
        }
        if reach <= i {
            blocks.push((start, i + 1));
            start = i + 1;
            reach = i + 1;
        }
    }
    blocks
}

fn block_matrix(h: &Hamiltonian, (start, end): (usize, usize)) -> Mat<f64> {
    let b = end - start;
    Mat::from_fn(b, b, |i, j| h.get(start + i, start + j))
}

fn check_input(h: &Hamiltonian) -> Result<()> {
    if h.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("matrix has non-finite entries"));
    }
    Ok(())
}

/// Full spectrum and orthonormal eigenbasis.
///
/// Eigenvectors follow the sign convention "first nonzero component positive".
pub fn eigendecompose(h: &Hamiltonian) -> Result<SpectralData> {
    check_input(h)?;
    let n = h.size();
    let solver_error = || Error::Solver {
        seed: h.seed,
        stream: h.stream,
    };

    // (eigenvalue, global start of block, block-local eigenvector)
    let mut pieces: Vec<(f64, usize, Vec<f64>)> = Vec::with_capacity(n);
    for block in diagonal_blocks(h) {
        let (start, end) = block;
        if end - start == 1 {
            pieces.push((h.get(start, start), start, vec![1.0]));
            continue;
        }
        let evd = block_matrix(h, block)
            .self_adjoint_eigen(Side::Lower)
            .map_err(|_| solver_error())?;
        let values = evd.S().column_vector();
        let u = evd.U();
        for j in 0..end - start {
            let col = (0..end - start).map(|i| u[(i, j)]).collect();
            pieces.push((values[j], start, col));
        }
    }
    pieces.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut eigenvalues = Vec::with_capacity(n);
    let mut vectors = vec![0.0; n * n];
    for (j, (lambda, start, col)) in pieces.into_iter().enumerate() {
        if !lambda.is_finite() {
            return Err(solver_error());
        }
        let flip = col.iter().find(|v| **v != 0.0).is_some_and(|v| *v < 0.0);
        let dst = &mut vectors[j * n + start..j * n + start + col.len()];
        for (d, v) in dst.iter_mut().zip(col) {
            *d = if flip { -v } else { v };
        }
        eigenvalues.push(lambda);
    }
    Ok(SpectralData { eigenvalues, vectors })
}

/// Sorted eigenvalues only; cheaper than [`eigendecompose`] by the back-transformation.
pub fn eigenvalues(h: &Hamiltonian) -> Result<Vec<f64>> {
    check_input(h)?;
    let mut out = Vec::with_capacity(h.size());
    for block in diagonal_blocks(h) {
        if block.1 - block.0 == 1 {
            out.push(h.get(block.0, block.0));
            continue;
        }
        let vals = block_matrix(h, block)
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|_| Error::Solver {
                seed: h.seed,
                stream: h.stream,
            })?;
        out.extend(vals);
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// `G(x, y; z) = Σ_j ψ_j(x) ψ_j(y) / (λ_j - z)` at 1-based sites.
pub fn green_function(sd: &SpectralData, x: usize, y: usize, z: ComplexEnergy) -> Result<Complex64> {
    green_derivative(sd, x, y, z, 0)
}

/// `∂_z^k G(x, y; z) = k! Σ_j ψ_j(x) ψ_j(y) / (λ_j - z)^{k+1}`.
pub fn green_derivative(sd: &SpectralData, x: usize, y: usize, z: ComplexEnergy, k: u32) -> Result<Complex64> {
    sd.check_site(x)?;
    sd.check_site(y)?;
    let zc = z.z();
    let fact: f64 = (1..=k).map(f64::from).product();
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, &lambda) in sd.eigenvalues.iter().enumerate() {
        let w = sd.amplitude(j, x) * sd.amplitude(j, y);
        if w != 0.0 {
            acc += w * (lambda - zc).powi(-(k as i32 + 1));
        }
    }
    Ok(acc * fact)
}

/// The row `y ↦ G(x, y; z)` indexed by 0-based `y`.
pub fn green_row(sd: &SpectralData, x: usize, z: ComplexEnergy) -> Result<Vec<Complex64>> {
    sd.check_site(x)?;
    let n = sd.size();
    let zc = z.z();
    let mut row = vec![Complex64::new(0.0, 0.0); n];
    for (j, &lambda) in sd.eigenvalues.iter().enumerate() {
        let a = sd.amplitude(j, x);
        if a == 0.0 {
            continue;
        }
        let coef = a / (lambda - zc);
        for (g, &v) in row.iter_mut().zip(sd.eigenvector(j)) {
            *g += coef * v;
        }
    }
    Ok(row)
}

/// Normalized trace `S(z) = N⁻¹ Σ_j 1/(λ_j - z)`.
pub fn stieltjes(eigenvalues: &[f64], z: ComplexEnergy) -> Complex64 {
    stieltjes_derivative(eigenvalues, z, 0)
}

/// `∂_z^k S(z) = k! N⁻¹ Σ_j (λ_j - z)^{-(k+1)}`.
pub fn stieltjes_derivative(eigenvalues: &[f64], z: ComplexEnergy, k: u32) -> Complex64 {
    let zc = z.z();
    let fact: f64 = (1..=k).map(f64::from).product();
    let sum: Complex64 = eigenvalues
        .iter()
        .map(|&l| (l - zc).powi(-(k as i32 + 1)))
        .sum();
    sum * fact / eigenvalues.len() as f64
}

/// Eigenvalue count in the closed interval `[a, b]` and that count divided by `N`.
pub fn dos_measure(eigenvalues: &[f64], a: f64, b: f64) -> Result<(usize, f64)> {
    if !(a <= b) {
        return Err(Error::domain(format!("interval [{a}, {b}] is empty or invalid")));
    }
    let count = count_in(eigenvalues, a, b);
    Ok((count, count as f64 / eigenvalues.len().max(1) as f64))
}

/// Number of sorted values in `[a, b]`.
pub(crate) fn count_in(sorted: &[f64], a: f64, b: f64) -> usize {
    let lo = sorted.partition_point(|&v| v < a);
    let hi = sorted.partition_point(|&v| v <= b);
    hi.saturating_sub(lo)
}

/// Row-major `R(z)^p = V diag((λ - z)^{-p}) Vᵀ`.
pub fn resolvent_power(sd: &SpectralData, z: ComplexEnergy, p: u32) -> Vec<Complex64> {
    let n = sd.size();
    let zc = z.z();
    let d: Vec<Complex64> = sd.eigenvalues.iter().map(|&l| (l - zc).powi(-(p as i32))).collect();
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for (j, dj) in d.iter().enumerate() {
        let v = sd.eigenvector(j);
        for (a, &va) in v.iter().enumerate() {
            if va == 0.0 {
                continue;
            }
            let coef = dj * va;
            let row = &mut out[a * n..(a + 1) * n];
            for (r, &vb) in row.iter_mut().zip(v) {
                *r += coef * vb;
            }
        }
    }
    out
}
