//! Hierarchical index space and the random-matrix models built on it.
//!
//! The index set is `{1, ..., 2^n}` with the ultrametric `d(x, y)`: the smallest
//! level `r` such that `x` and `y` share a dyadic block of size `2^r`. The
//! basic random blocks `Φ_{n,r}` are direct sums of independent GOE matrices
//! of size `2^r`, and the models are
//!
//! * ultrametric: `H = Z⁻¹ Σ_{r=0}^{n} 2^{-(1+c)r/2} Φ_{n,r}`,
//! * truncated: the same sum stopped at `r = m`, never normalized,
//! * Rosenzweig-Porter: `V + sqrt(t) Φ_{n,n}` with an i.i.d. diagonal potential.
//!
//! Site indices in this module are 1-based. Matrix storage is 0-based row-major.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Largest supported hierarchy depth (`N = 16384`).
pub const MAX_DEPTH: u32 = 14;

/// The index set `B_n = {1, ..., 2^n}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexSpace {
    n: u32,
}

impl IndexSpace {
    pub fn new(n: u32) -> Result<Self> {
        if n > 30 {
            return Err(Error::domain(format!("hierarchy depth {n} exceeds 30")));
        }
        Ok(Self { n })
    }

    pub fn depth(&self) -> u32 {
        self.n
    }

    pub fn size(&self) -> usize {
        1usize << self.n
    }

    fn check(&self, x: usize) -> Result<()> {
        if x == 0 || x > self.size() {
            return Err(Error::domain(format!(
                "site {x} outside 1..={}",
                self.size()
            )));
        }
        Ok(())
    }

    /// The hierarchical ball `B_m(x) = {y : d(x, y) <= m}` as an inclusive 1-based range.
    pub fn ball(&self, x: usize, m: u32) -> Result<std::ops::RangeInclusive<usize>> {
        self.check(x)?;
        if m > self.n {
            return Err(Error::domain(format!("ball radius {m} exceeds depth {}", self.n)));
        }
        let start = ((x - 1) >> m << m) + 1;
        Ok(start..=start + (1usize << m) - 1)
    }
}

/// Hierarchical distance: bit length of `(x-1) XOR (y-1)`.
pub fn hier_distance(space: &IndexSpace, x: usize, y: usize) -> Result<u32> {
    space.check(x)?;
    space.check(y)?;
    Ok(usize::BITS - ((x - 1) ^ (y - 1)).leading_zeros())
}

/// Distribution of the i.i.d. diagonal potential.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum PotentialSpec {
    Uniform { halfwidth: f64 },
    Gaussian { sigma: f64 },
}

impl Default for PotentialSpec {
    fn default() -> Self {
        PotentialSpec::Uniform { halfwidth: 1.0 }
    }
}

impl PotentialSpec {
    /// Supremum of the potential density, the constant `C_V` of the Wegner bound.
    pub fn density_bound(&self) -> f64 {
        match *self {
            PotentialSpec::Uniform { halfwidth } => 1.0 / (2.0 * halfwidth),
            PotentialSpec::Gaussian { sigma } => 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt()),
        }
    }

    /// Density of the potential at `v`.
    pub fn density(&self, v: f64) -> f64 {
        match *self {
            PotentialSpec::Uniform { halfwidth } => {
                if v.abs() <= halfwidth {
                    1.0 / (2.0 * halfwidth)
                } else {
                    0.0
                }
            }
            PotentialSpec::Gaussian { sigma } => {
                self.density_bound() * (-0.5 * (v / sigma).powi(2)).exp()
            }
        }
    }

    fn validate(&self, errors: &mut Vec<String>) {
        match *self {
            PotentialSpec::Uniform { halfwidth } if !(halfwidth > 0.0 && halfwidth.is_finite()) => {
                errors.push(format!("potential.halfwidth must be positive, got {halfwidth}"))
            }
            PotentialSpec::Gaussian { sigma } if !(sigma > 0.0 && sigma.is_finite()) => {
                errors.push(format!("potential.sigma must be positive, got {sigma}"))
            }
            _ => {}
        }
    }

    fn sample(&self, size: usize, rng: &mut impl Rng) -> Vec<f64> {
        match *self {
            PotentialSpec::Uniform { halfwidth } => {
                let dist = Uniform::new_inclusive(-halfwidth, halfwidth).expect("validated halfwidth");
                (0..size).map(|_| dist.sample(rng)).collect()
            }
            PotentialSpec::Gaussian { sigma } => {
                let dist = Normal::new(0.0, sigma).expect("validated sigma");
                (0..size).map(|_| dist.sample(rng)).collect()
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Model {
    Ultrametric,
    Truncated { m: u32 },
    RosenzweigPorter { t: f64, potential: PotentialSpec },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n: u32,
    pub c: f64,
    #[serde(default = "default_normalized")]
    pub normalized: bool,
    pub model: Model,
}

fn default_normalized() -> bool {
    true
}

impl EnsembleConfig {
    pub fn ultrametric(n: u32, c: f64) -> Self {
        Self {
            n,
            c,
            normalized: true,
            model: Model::Ultrametric,
        }
    }

    pub fn truncated(n: u32, c: f64, m: u32) -> Self {
        Self {
            n,
            c,
            normalized: false,
            model: Model::Truncated { m },
        }
    }

    /// Rosenzweig-Porter model at time `t = N^{-(1+c)}`.
    pub fn rosenzweig_porter(n: u32, c: f64, potential: PotentialSpec) -> Self {
        let size = (1u64 << n) as f64;
        Self {
            n,
            c,
            normalized: false,
            model: Model::RosenzweigPorter {
                t: size.powf(-(1.0 + c)),
                potential,
            },
        }
    }

    pub fn size(&self) -> usize {
        1usize << self.n
    }

    /// Collects every violated constraint, each message naming its field.
    pub fn validation_errors(&self) -> Vec<String> {
        let mut errors = Vec::new();
        if self.n > MAX_DEPTH {
            errors.push(format!("n must be at most {MAX_DEPTH}, got {}", self.n));
        }
        if !self.c.is_finite() {
            errors.push(format!("c must be finite, got {}", self.c));
        }
        match self.model {
            Model::Ultrametric => {}
            Model::Truncated { m } => {
                if m > self.n {
                    errors.push(format!("m must satisfy m <= n = {}, got m = {m}", self.n));
                }
            }
            Model::RosenzweigPorter { t, potential } => {
                if !(t >= 0.0 && t.is_finite()) {
                    errors.push(format!("t must be finite and non-negative, got {t}"));
                }
                potential.validate(&mut errors);
            }
        }
        errors
    }

    pub fn validate(&self) -> Result<()> {
        let errors = self.validation_errors();
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors))
        }
    }
}

/// What produced a matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "origin")]
pub enum Origin {
    Ensemble(EnsembleConfig),
    GoeBlocks { n: u32, r: u32 },
    Flow { initial: Box<Origin>, t: f64 },
    External,
}

impl Origin {
    pub fn depth(&self) -> Option<u32> {
        match self {
            Origin::Ensemble(cfg) => Some(cfg.n),
            Origin::GoeBlocks { n, .. } => Some(*n),
            Origin::Flow { initial, .. } => initial.depth(),
            Origin::External => None,
        }
    }

    pub fn exponent(&self) -> Option<f64> {
        match self {
            Origin::Ensemble(cfg) => Some(cfg.c),
            Origin::Flow { initial, .. } => initial.exponent(),
            _ => None,
        }
    }
}

/// Dense real symmetric matrix, row-major, tagged with its generator and seed.
#[derive(Clone, Debug, PartialEq)]
pub struct Hamiltonian {
    size: usize,
    entries: Vec<f64>,
    pub origin: Origin,
    pub seed: u64,
    pub stream: u64,
}

impl Hamiltonian {
    /// Wraps a row-major buffer. Fails unless the buffer is square, finite and exactly symmetric.
    pub fn from_entries(size: usize, entries: Vec<f64>, origin: Origin, seed: u64, stream: u64) -> Result<Self> {
        if entries.len() != size * size {
            return Err(Error::domain(format!(
                "expected {} entries for size {size}, got {}",
                size * size,
                entries.len()
            )));
        }
        if let Some(bad) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!("non-finite entry at ({}, {})", bad / size, bad % size)));
        }
        for i in 0..size {
            for j in 0..i {
                if entries[i * size + j] != entries[j * size + i] {
                    return Err(Error::domain(format!("entry ({i}, {j}) breaks symmetry")));
                }
            }
        }
        Ok(Self {
            size,
            entries,
            origin,
            seed,
            stream,
        })
    }

    /// Diagonal matrix with the given entries.
    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let size = values.len();
        let mut entries = vec![0.0; size * size];
        for (i, v) in values.iter().enumerate() {
            entries[i * size + i] = *v;
        }
        Self::from_entries(size, entries, Origin::External, 0, 0)
    }

    pub fn zeros(size: usize) -> Self {
        Self {
            size,
            entries: vec![0.0; size * size],
            origin: Origin::External,
            seed: 0,
            stream: 0,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Entry at 0-based `(row, col)`.
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.size + col]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.size).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Adds `weight * Φ_{n,r}` into a row-major buffer of size `2^n`.
///
/// Per block of size `2^r`, rows are visited in order and the upper triangle
/// (diagonal included) is drawn left to right, one standard normal per entry.
fn add_goe_blocks(buf: &mut [f64], n: u32, r: u32, weight: f64, rng: &mut impl Rng) {
    let size = 1usize << n;
    let block = 1usize << r;
    let off_sd = (2f64).powi(-(r as i32)).sqrt();
    let diag_sd = off_sd * std::f64::consts::SQRT_2;
    for start in (0..size).step_by(block) {
        for i in start..start + block {
            for j in i..start + block {
                let g: f64 = StandardNormal.sample(rng);
                if i == j {
                    buf[i * size + i] += weight * diag_sd * g;
                } else {
                    let v = weight * off_sd * g;
                    buf[i * size + j] += v;
                    buf[j * size + i] += v;
                }
            }
        }
    }
}

/// Samples `Φ_{n,r}`: a direct sum of `2^{n-r}` independent GOE blocks of size `2^r`.
pub fn sample_phi(space: &IndexSpace, r: u32, stream: RngStream) -> Result<Hamiltonian> {
    if r > space.depth() {
        return Err(Error::domain(format!("level r = {r} exceeds depth n = {}", space.depth())));
    }
    let size = space.size();
    let mut entries = vec![0.0; size * size];
    add_goe_blocks(&mut entries, space.depth(), r, 1.0, &mut stream.rng());
    Ok(Hamiltonian {
        size,
        entries,
        origin: Origin::GoeBlocks { n: space.depth(), r },
        seed: stream.master_seed,
        stream: stream.stream_index,
    })
}

/// `Z_{n,c}`: makes every row of the ultrametric variance matrix sum to one.
pub fn normalization_z(n: u32, c: f64) -> f64 {
    (0..=n)
        .map(|r| {
            let r = r as f64;
            (-(1.0 + c) * r).exp2() * (1.0 + (-r).exp2())
        })
        .sum::<f64>()
        .sqrt()
}

/// Level weights `2^{-(1+c)r/2}` (divided by `Z` when normalized) for `r = 0..=top`.
fn level_weights(n: u32, c: f64, top: u32, normalized: bool) -> Vec<f64> {
    let z = if normalized { normalization_z(n, c) } else { 1.0 };
    (0..=top)
        .map(|r| (-(1.0 + c) * r as f64 / 2.0).exp2() / z)
        .collect()
}

/// Draws one realization of the configured model.
pub fn assemble(config: &EnsembleConfig, stream: RngStream) -> Result<Hamiltonian> {
    config.validate()?;
    let n = config.n;
    let size = config.size();
    let mut entries = vec![0.0; size * size];
    let mut rng = stream.rng();
    match config.model {
        Model::Ultrametric => {
            for (r, w) in level_weights(n, config.c, n, config.normalized).into_iter().enumerate() {
                add_goe_blocks(&mut entries, n, r as u32, w, &mut rng);
            }
        }
        Model::Truncated { m } => {
            for (r, w) in level_weights(n, config.c, m, false).into_iter().enumerate() {
                add_goe_blocks(&mut entries, n, r as u32, w, &mut rng);
            }
        }
        Model::RosenzweigPorter { t, potential } => {
            let v = potential.sample(size, &mut rng);
            for (i, vi) in v.into_iter().enumerate() {
                entries[i * size + i] = vi;
            }
            if t > 0.0 {
                // Φ_{n,n} has entry variance (1 + δ_xy) / N.
                add_goe_blocks(&mut entries, n, n, t.sqrt(), &mut rng);
            }
        }
    }
    Ok(Hamiltonian {
        size,
        entries,
        origin: Origin::Ensemble(*config),
        seed: stream.master_seed,
        stream: stream.stream_index,
    })
}

/// Entry-variance matrix `Σ_n(x, y) = E|H(x, y)|²` of the ultrametric ensemble.
#[derive(Clone, Debug, PartialEq)]
pub struct VarianceProfile {
    space: IndexSpace,
    /// Variance as a function of the distance `d = 0..=n`.
    by_distance: Vec<f64>,
}

impl VarianceProfile {
    pub fn size(&self) -> usize {
        self.space.size()
    }

    /// Variance at distance `d`.
    pub fn at_distance(&self, d: u32) -> f64 {
        self.by_distance[d as usize]
    }

    /// Entry at 1-based sites.
    pub fn get(&self, x: usize, y: usize) -> Result<f64> {
        Ok(self.at_distance(hier_distance(&self.space, x, y)?))
    }

    /// Full row-major matrix.
    pub fn to_dense(&self) -> Vec<f64> {
        let size = self.size();
        let mut out = Vec::with_capacity(size * size);
        for x in 0..size {
            for y in 0..size {
                let d = usize::BITS - (x ^ y).leading_zeros();
                out.push(self.by_distance[d as usize]);
            }
        }
        out
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let size = self.size();
        self.to_dense().chunks(size).map(|row| row.iter().sum()).collect()
    }

    pub fn max_entry(&self) -> f64 {
        self.by_distance.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Closed-form variance profile.
///
/// Off-diagonal at distance `d >= 1`: `Z⁻² Σ_{r=d}^{n} 2^{-(2+c)r}`;
/// diagonal: `2 Z⁻² Σ_{r=0}^{n} 2^{-(2+c)r}`.
pub fn variance_profile(n: u32, c: f64, normalized: bool) -> Result<VarianceProfile> {
    let space = IndexSpace::new(n)?;
    let z2 = if normalized { normalization_z(n, c).powi(2) } else { 1.0 };
    let level = |r: u32| (-(2.0 + c) * r as f64).exp2();
    // tail[d] = Σ_{r=d}^{n} level(r)
    let mut tail = vec![0.0; n as usize + 2];
    for r in (0..=n).rev() {
        tail[r as usize] = tail[r as usize + 1] + level(r);
    }
    let mut by_distance = Vec::with_capacity(n as usize + 1);
    by_distance.push(2.0 * tail[0] / z2);
    for d in 1..=n {
        by_distance.push(tail[d as usize] / z2);
    }
    Ok(VarianceProfile { space, by_distance })
}

/// The spread `M_n`: inverse of the largest entry variance of the normalized ensemble.
pub fn spread_m(n: u32, c: f64) -> Result<f64> {
    Ok(1.0 / variance_profile(n, c, true)?.max_entry())
}
