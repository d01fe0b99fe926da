//! Matrix Dyson Brownian motion `H_t = H_0 + Φ_t` and the resolvent-flow algebra.
//!
//! `Φ_t` is a symmetric Gaussian matrix with entry variance `(1 + δ_xy) t / N`.
//! Endpoints are sampled in one shot by default since that law is exact; the
//! pathwise mode exists for quadratic-variation experiments.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::ensemble::{assemble, EnsembleConfig, Hamiltonian, Origin};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::spectral::{
    eigendecompose, green_derivative, green_row, resolvent_power, stieltjes, stieltjes_derivative, ComplexEnergy,
    SpectralData,
};
use crate::stats::{mean_and_stderr, quantile, CompensatedSum};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlowMode {
    #[default]
    OneShot,
    Path,
}

#[derive(Clone, Debug)]
pub struct FlowConfig {
    pub initial: Hamiltonian,
    pub t_final: f64,
    pub steps: usize,
    pub mode: FlowMode,
}

impl FlowConfig {
    pub fn one_shot(initial: Hamiltonian, t_final: f64) -> Self {
        Self {
            initial,
            t_final,
            steps: 1,
            mode: FlowMode::OneShot,
        }
    }

    pub fn path(initial: Hamiltonian, t_final: f64, steps: usize) -> Self {
        Self {
            initial,
            t_final,
            steps,
            mode: FlowMode::Path,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_final >= 0.0) || !self.t_final.is_finite() {
            return Err(Error::domain(format!("t_final must be >= 0, got {}", self.t_final)));
        }
        if self.mode == FlowMode::Path && self.steps == 0 {
            return Err(Error::domain("steps must be >= 1 in path mode"));
        }
        Ok(())
    }
}

/// Snapshots at strictly increasing times starting at 0.
///
/// One-shot trajectories hold `H_0` and the endpoint; path trajectories hold every grid time.
#[derive(Clone, Debug)]
pub struct FlowTrajectory {
    pub times: Vec<f64>,
    pub matrices: Vec<Hamiltonian>,
}

impl FlowTrajectory {
    pub fn endpoint(&self) -> &Hamiltonian {
        self.matrices.last().expect("trajectory is never empty")
    }

    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }
}

/// Adds `weight * W` with `W` symmetric Gaussian of entry variance `(1 + δ_xy) / N`.
///
/// Rows are visited in order and the upper triangle is drawn left to right.
fn add_noise(buf: &mut [f64], size: usize, weight: f64, rng: &mut impl Rng) {
    let off_sd = weight / (size as f64).sqrt();
    let diag_sd = off_sd * std::f64::consts::SQRT_2;
    for i in 0..size {
        for j in i..size {
            let g: f64 = StandardNormal.sample(rng);
            if i == j {
                buf[i * size + i] += diag_sd * g;
            } else {
                buf[i * size + j] += off_sd * g;
                buf[j * size + i] += off_sd * g;
            }
        }
    }
}

fn perturbed(h: &Hamiltonian, dt: f64, t: f64, rng: &mut impl Rng, stream: RngStream) -> Result<Hamiltonian> {
    let size = h.size();
    let mut entries = h.as_slice().to_vec();
    add_noise(&mut entries, size, dt.sqrt(), rng);
    let origin = match &h.origin {
        Origin::Flow { initial, .. } => Origin::Flow {
            initial: initial.clone(),
            t,
        },
        other => Origin::Flow {
            initial: Box::new(other.clone()),
            t,
        },
    };
    Hamiltonian::from_entries(size, entries, origin, stream.master_seed, stream.stream_index)
}

pub fn evolve(config: &FlowConfig, stream: RngStream) -> Result<FlowTrajectory> {
    config.validate()?;
    let h0 = config.initial.clone();
    let t = config.t_final;
    if t == 0.0 {
        return Ok(FlowTrajectory {
            times: vec![0.0],
            matrices: vec![h0],
        });
    }
    let mut rng = stream.rng();
    match config.mode {
        FlowMode::OneShot => {
            let ht = perturbed(&h0, t, t, &mut rng, stream)?;
            Ok(FlowTrajectory {
                times: vec![0.0, t],
                matrices: vec![h0, ht],
            })
        }
        FlowMode::Path => {
            let dt = t / config.steps as f64;
            let mut times = vec![0.0];
            let mut matrices = vec![h0];
            for k in 1..=config.steps {
                let tk = if k == config.steps { t } else { k as f64 * dt };
                let next = perturbed(matrices.last().unwrap(), dt, tk, &mut rng, stream)?;
                times.push(tk);
                matrices.push(next);
            }
            Ok(FlowTrajectory { times, matrices })
        }
    }
}

/// Two evaluations of one identity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub relative_error: f64,
}

impl IdentityCheck {
    pub fn new(lhs: Complex64, rhs: Complex64) -> Self {
        Self {
            lhs,
            rhs,
            relative_error: relative_error(lhs, rhs),
        }
    }
}

/// `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn relative_error(a: Complex64, b: Complex64) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

/// `(1/N) Σ_{u≤v} ⟨δ_y, R P_uv R P_uv R δ_x⟩` from the full resolvent (row-major).
fn pair_sum(r: &[Complex64], n: usize, x: usize, y: usize) -> Complex64 {
    let a = |u: usize| r[u * n + x];
    let b = |u: usize| r[y * n + u];
    let mut acc = Complex64::new(0.0, 0.0);
    for u in 0..n {
        acc += 2.0 * b(u) * r[u * n + u] * a(u);
        for v in u + 1..n {
            acc += b(u) * (r[v * n + u] * a(v) + r[v * n + v] * a(u)) + b(v) * (r[u * n + u] * a(v) + r[u * n + v] * a(u));
        }
    }
    acc / n as f64
}

/// Green-function drift identity at 1-based sites `x`, `y`:
/// `(1/N) Σ_{u≤v} ⟨δ_y, R P R P R δ_x⟩ = S ∂_z G(x, y) + (1/2N) ∂_z² G(x, y)`.
pub fn drift_identity_check(h: &Hamiltonian, z: ComplexEnergy, x: usize, y: usize) -> Result<IdentityCheck> {
    let sd = eigendecompose(h)?;
    drift_identity_check_with(&sd, z, x, y)
}

pub fn drift_identity_check_with(sd: &SpectralData, z: ComplexEnergy, x: usize, y: usize) -> Result<IdentityCheck> {
    let n = sd.size();
    let d1 = green_derivative(sd, x, y, z, 1)?;
    let d2 = green_derivative(sd, x, y, z, 2)?;
    let r = resolvent_power(sd, z, 1);
    let lhs = pair_sum(&r, n, x - 1, y - 1);
    let rhs = stieltjes(sd.eigenvalues(), z) * d1 + d2 / (2.0 * n as f64);
    Ok(IdentityCheck::new(lhs, rhs))
}

/// Trace form: the diagonal average of the drift equals `S ∂_z S + (1/2N) ∂_z² S`.
pub fn burgers_drift_check(h: &Hamiltonian, z: ComplexEnergy) -> Result<IdentityCheck> {
    let sd = eigendecompose(h)?;
    Ok(burgers_drift_check_with(&sd, z))
}

pub fn burgers_drift_check_with(sd: &SpectralData, z: ComplexEnergy) -> IdentityCheck {
    let n = sd.size();
    let r = resolvent_power(sd, z, 1);
    let mut lhs = Complex64::new(0.0, 0.0);
    for x in 0..n {
        lhs += pair_sum(&r, n, x, x);
    }
    lhs /= n as f64;
    let eigs = sd.eigenvalues();
    let s = stieltjes(eigs, z);
    let rhs = s * stieltjes_derivative(eigs, z, 1) + stieltjes_derivative(eigs, z, 2) / (2.0 * n as f64);
    IdentityCheck::new(lhs, rhs)
}

/// Relative error of `Σ_u |G(x, u; z)|² = Im G(x, x; z) / η`.
pub fn ward_identity_check(sd: &SpectralData, x: usize, z: ComplexEnergy) -> Result<f64> {
    let row = green_row(sd, x, z)?;
    let lhs = row.iter().map(|g| g.norm_sqr()).collect::<CompensatedSum>().value();
    let rhs = row[x - 1].im / z.eta;
    Ok(if rhs == 0.0 && lhs == 0.0 {
        0.0
    } else {
        (lhs - rhs).abs() / rhs.abs()
    })
}

/// One realization of the resolvent change under the flow.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityGap {
    pub z: ComplexEnergy,
    pub t: f64,
    /// `|S_t(z) - S_0(z)|`
    pub s_gap: f64,
    /// `(1/N) Σ_y |G_t(x, y; z) - G_0(x, y; z)|`
    pub g_gap: f64,
    /// `sqrt(t) / η²`
    pub crude_bound: f64,
}

/// `sqrt(t) / η²`.
pub fn crude_bound(t: f64, eta: f64) -> f64 {
    t.sqrt() / (eta * eta)
}

/// `N^{-c/2} (1 + 1/(Nη) + 1/(Nη)³)`.
pub fn theorem_shape(size: usize, c: f64, eta: f64) -> f64 {
    let n = size as f64;
    let inv = 1.0 / (n * eta);
    n.powf(-c / 2.0) * (1.0 + inv + inv.powi(3))
}

pub fn stability_gap(before: &SpectralData, after: &SpectralData, x: usize, t: f64, z: ComplexEnergy) -> Result<StabilityGap> {
    let s_gap = (stieltjes(after.eigenvalues(), z) - stieltjes(before.eigenvalues(), z)).norm();
    let g0 = green_row(before, x, z)?;
    let g1 = green_row(after, x, z)?;
    let g_gap = g0
        .iter()
        .zip(&g1)
        .map(|(a, b)| (b - a).norm())
        .collect::<CompensatedSum>()
        .value()
        / before.size() as f64;
    Ok(StabilityGap {
        z,
        t,
        s_gap,
        g_gap,
        crude_bound: crude_bound(t, z.eta),
    })
}

/// Parameters of a stability sweep over several spectral scales at one flow time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityConfig {
    /// Law of `H_0`.
    pub initial: EnsembleConfig,
    /// Flow time `t = N^{-(1 + c_flow)}`.
    pub c_flow: f64,
    pub energy: f64,
    /// Values of `η`.
    pub etas: Vec<f64>,
    /// 1-based site for the Green-function gap.
    pub site: usize,
}

impl StabilityConfig {
    pub fn flow_time(&self) -> f64 {
        (self.initial.size() as f64).powf(-(1.0 + self.c_flow))
    }
}

/// Aggregate of the gaps at one `η`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilitySummary {
    pub size: usize,
    pub c_flow: f64,
    pub eta: f64,
    pub t: f64,
    pub realizations: usize,
    pub mean_s_gap: f64,
    pub stderr: f64,
    pub mean_g_gap: f64,
    pub g_stderr: f64,
    pub crude_bound: f64,
    pub theorem_shape: f64,
    /// 10%, 50% and 90% quantiles of `s_gap`.
    pub s_gap_quantiles: [f64; 3],
}

impl StabilitySummary {
    pub fn crude_ratio(&self) -> f64 {
        self.mean_s_gap / self.crude_bound
    }

    pub fn shape_ratio(&self) -> f64 {
        self.mean_s_gap / self.theorem_shape
    }
}

/// All gaps of realization `stream.stream_index`, one per `η` in the config.
///
/// `H_0` is drawn from `stream`; the flow increment from a derived stream.
pub fn stability_realization(config: &StabilityConfig, stream: RngStream) -> Result<Vec<StabilityGap>> {
    let t = config.flow_time();
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("flow time must be positive, got {t}")));
    }
    let h0 = assemble(&config.initial, stream)?;
    let before = eigendecompose(&h0)?;
    let flow = evolve(&FlowConfig::one_shot(h0, t), stream.derive(1))?;
    let after = eigendecompose(flow.endpoint())?;
    config
        .etas
        .iter()
        .map(|&eta| stability_gap(&before, &after, config.site, t, ComplexEnergy::new(config.energy, eta)?))
        .collect()
}

/// Reduces per-realization gaps (in realization order) to one summary per `η`.
pub fn summarize_stability(config: &StabilityConfig, gaps: &[Vec<StabilityGap>]) -> Result<Vec<StabilitySummary>> {
    if gaps.is_empty() {
        return Err(Error::estimator("no realizations"));
    }
    let size = config.initial.size();
    let t = config.flow_time();
    Ok(config
        .etas
        .iter()
        .enumerate()
        .map(|(i, &eta)| {
            let s: Vec<f64> = gaps.iter().map(|g| g[i].s_gap).collect();
            let g: Vec<f64> = gaps.iter().map(|g| g[i].g_gap).collect();
            let (mean_s_gap, stderr) = mean_and_stderr(&s);
            let (mean_g_gap, g_stderr) = mean_and_stderr(&g);
            StabilitySummary {
                size,
                c_flow: config.c_flow,
                eta,
                t,
                realizations: gaps.len(),
                mean_s_gap,
                stderr,
                mean_g_gap,
                g_stderr,
                crude_bound: crude_bound(t, eta),
                theorem_shape: theorem_shape(size, config.c_flow, eta),
                s_gap_quantiles: [quantile(&s, 0.1), quantile(&s, 0.5), quantile(&s, 0.9)],
            }
        })
        .collect())
}

/// Sequential sweep over realizations `0..realizations`.
pub fn stability_sweep(config: &StabilityConfig, realizations: usize, master_seed: u64) -> Result<Vec<StabilitySummary>> {
    let gaps = (0..realizations as u64)
        .map(|k| stability_realization(config, RngStream::new(master_seed, k)))
        .collect::<Result<Vec<_>>>()?;
    summarize_stability(config, &gaps)
}

/// Single-`η` sweep at `z`.
pub fn stability_experiment(
    initial: &EnsembleConfig,
    c_flow: f64,
    z: ComplexEnergy,
    realizations: usize,
    master_seed: u64,
) -> Result<StabilitySummary> {
    let config = StabilityConfig {
        initial: *initial,
        c_flow,
        energy: z.e,
        etas: vec![z.eta],
        site: 1,
    };
    Ok(stability_sweep(&config, realizations, master_seed)?.remove(0))
}

/// Least-squares slope of `log(mean_s_gap)` against `log(1/(Nη))`.
pub fn growth_exponent(summaries: &[StabilitySummary]) -> Result<f64> {
    if summaries.len() < 2 {
        return Err(Error::estimator("need >= 2 scales to fit an exponent"));
    }
    let pts: Vec<(f64, f64)> = summaries
        .iter()
        .map(|s| ((1.0 / (s.size as f64 * s.eta)).ln(), s.mean_s_gap.ln()))
        .collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 || !my.is_finite() {
        return Err(Error::estimator("degenerate exponent fit"));
    }
    Ok(sxy / sxx)
}

/// Quadratic-variation comparison along a path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QvEstimate {
    /// `(1/(N² η³)) Σ_k Im S_{t_k}(z) Δt_k`
    pub dominator: f64,
    /// `|S_T - S_0 - Σ_k (S ∂S + (1/2N) ∂²S)_{t_k} Δt_k|²`
    pub realized_square: f64,
    pub steps: usize,
}

/// Left-point discretization of the martingale part of `S_t(z)` and its QV dominator.
pub fn martingale_qv_estimate(trajectory: &FlowTrajectory, z: ComplexEnergy) -> Result<QvEstimate> {
    let steps = trajectory.steps();
    if steps == 0 {
        return Ok(QvEstimate {
            dominator: 0.0,
            realized_square: 0.0,
            steps,
        });
    }
    if steps < 8 {
        return Err(Error::Precision(format!("need >= 8 path steps, got {steps}")));
    }
    let n = trajectory.endpoint().size() as f64;
    let spectra = trajectory
        .matrices
        .iter()
        .map(crate::spectral::eigenvalues)
        .collect::<Result<Vec<_>>>()?;
    let mut dominator = CompensatedSum::default();
    let mut drift = [CompensatedSum::default(), CompensatedSum::default()];
    for k in 0..steps {
        let dt = trajectory.times[k + 1] - trajectory.times[k];
        let eigs = &spectra[k];
        let s = stieltjes(eigs, z);
        let d = s * stieltjes_derivative(eigs, z, 1) + stieltjes_derivative(eigs, z, 2) / (2.0 * n);
        dominator.add(s.im * dt);
        drift[0].add(d.re * dt);
        drift[1].add(d.im * dt);
    }
    let drift = Complex64::new(drift[0].value(), drift[1].value());
    let increment = stieltjes(&spectra[steps], z) - stieltjes(&spectra[0], z);
    Ok(QvEstimate {
        dominator: dominator.value() / (n * n * z.eta.powi(3)),
        realized_square: (increment - drift).norm_sqr(),
        steps,
    })
}
