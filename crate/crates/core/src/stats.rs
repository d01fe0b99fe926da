//! Monte Carlo estimators for local spectral and eigenfunction statistics.
//!
//! Per-realization values are produced independently (in any order, on any
//! number of threads) and aggregated here in ascending realization index with
//! compensated summation, so every report is independent of the worker count.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensemble::IndexSpace;
use crate::error::{Error, Result};
use crate::spectral::{count_in, stieltjes, ComplexEnergy, SpectralData};

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for v in iter {
            s.add(v);
        }
        s
    }
}

/// Mean and standard error of the mean, summed in slice order.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().copied().collect::<CompensatedSum>().value() / n as f64;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let ss = values
        .iter()
        .map(|v| (v - mean).powi(2))
        .collect::<CompensatedSum>()
        .value();
    (mean, (ss / (n - 1) as f64 / n as f64).sqrt())
}

/// Sample quantile with linear interpolation between order statistics.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// Closed interval `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::domain(format!("interval [{lo}, {hi}] is invalid")));
        }
        Ok(Self { lo, hi })
    }

    pub fn centered(center: f64, length: f64) -> Result<Self> {
        Self::new(center - length / 2.0, center + length / 2.0)
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn count(&self, sorted: &[f64]) -> usize {
        count_in(sorted, self.lo, self.hi)
    }
}

/// Spectral window `[center - halfwidth, center + halfwidth]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub center: f64,
    pub halfwidth: f64,
    /// `w` when the halfwidth was chosen as `N^{-(1-w)}`.
    pub exponent: Option<f64>,
}

impl Window {
    pub fn new(center: f64, halfwidth: f64) -> Result<Self> {
        if !(halfwidth > 0.0) || !halfwidth.is_finite() || !center.is_finite() {
            return Err(Error::domain(format!("window halfwidth must be positive, got {halfwidth}")));
        }
        Ok(Self {
            center,
            halfwidth,
            exponent: None,
        })
    }

    /// Mesoscopic window of halfwidth `N^{-(1-w)}`.
    pub fn mesoscopic(center: f64, size: usize, w: f64) -> Result<Self> {
        let mut win = Self::new(center, (size as f64).powf(-(1.0 - w)))?;
        win.exponent = Some(w);
        Ok(win)
    }

    pub fn interval(&self) -> Interval {
        Interval {
            lo: self.center - self.halfwidth,
            hi: self.center + self.halfwidth,
        }
    }

    pub fn length(&self) -> f64 {
        2.0 * self.halfwidth
    }

    pub fn contains(&self, v: f64) -> bool {
        self.interval().contains(v)
    }

    /// Range of indices into a sorted spectrum that fall in the window.
    pub fn index_range(&self, sorted: &[f64]) -> std::ops::Range<usize> {
        let iv = self.interval();
        sorted.partition_point(|&v| v < iv.lo)..sorted.partition_point(|&v| v <= iv.hi)
    }
}

/// Window spanning the central `fraction` of the levels by rank.
pub fn bulk_window(sorted: &[f64], fraction: f64) -> Result<Window> {
    let n = sorted.len();
    if n < 3 || !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::estimator(format!(
            "bulk window needs >= 3 levels and fraction in (0, 1], got {n} and {fraction}"
        )));
    }
    let keep = ((fraction * n as f64).round() as usize).clamp(3, n);
    let lo = (n - keep) / 2;
    let (a, b) = (sorted[lo], sorted[lo + keep - 1]);
    let halfwidth = ((b - a) / 2.0).max(f64::MIN_POSITIVE);
    Window::new((a + b) / 2.0, halfwidth * (1.0 + 1e-12))
}

/// Aggregated Monte Carlo statistic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub name: String,
    pub realizations: usize,
    pub master_seed: u64,
    pub estimate: f64,
    pub stderr: f64,
    /// Realization-level values in realization order.
    pub values: Vec<f64>,
    /// Named auxiliary arrays (histograms, PMFs, quantiles).
    pub aux: BTreeMap<String, Vec<f64>>,
}

impl StatReport {
    pub fn from_values(name: impl Into<String>, master_seed: u64, values: Vec<f64>) -> Self {
        let (estimate, stderr) = mean_and_stderr(&values);
        Self {
            name: name.into(),
            realizations: values.len(),
            master_seed,
            estimate,
            stderr,
            values,
            aux: BTreeMap::new(),
        }
    }

    pub fn with_aux(mut self, key: &str, data: Vec<f64>) -> Self {
        self.aux.insert(key.to_owned(), data);
        self
    }

    pub fn median(&self) -> f64 {
        median(&self.values)
    }
}

/// A rescaled eigenvalue point process `{scale (λ - center)}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointProcessSample {
    pub points: Vec<f64>,
    pub scale: f64,
    pub center: f64,
}

impl PointProcessSample {
    pub fn count(&self, b: Interval) -> usize {
        b.count(&self.points)
    }
}

pub fn rescale_spectrum(sorted: &[f64], center: f64, scale: f64) -> Result<PointProcessSample> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::domain(format!("scale must be positive, got {scale}")));
    }
    // A positive affine map keeps the order.
    let points = sorted.iter().map(|&l| scale * (l - center)).collect();
    Ok(PointProcessSample { points, scale, center })
}

/// Distribution of `#(points ∩ B)` across samples.
///
/// `aux["pmf"][k]` is the empirical probability of count `k`; `aux["moments"]`
/// holds `[mean, variance, variance / mean]`.
pub fn counting_statistics(samples: &[PointProcessSample], b: Interval, master_seed: u64) -> Result<StatReport> {
    if samples.len() < 2 {
        return Err(Error::estimator(format!("counting statistics need >= 2 samples, got {}", samples.len())));
    }
    let counts: Vec<f64> = samples.iter().map(|s| s.count(b) as f64).collect();
    Ok(counting_report(counts, master_seed))
}

pub fn counting_report(counts: Vec<f64>, master_seed: u64) -> StatReport {
    let max = counts.iter().fold(0.0f64, |m, &c| m.max(c)) as usize;
    let mut pmf = vec![0.0; max + 1];
    for &c in &counts {
        pmf[c as usize] += 1.0;
    }
    let total = counts.len() as f64;
    pmf.iter_mut().for_each(|p| *p /= total);
    let report = StatReport::from_values("count", master_seed, counts);
    let var = report.stderr.powi(2) * total;
    let mean = report.estimate;
    let dispersion = if mean > 0.0 { var / mean } else { f64::NAN };
    report
        .with_aux("pmf", pmf)
        .with_aux("moments", vec![mean, var, dispersion])
}

/// Mean of `min(s_i, s_{i+1}) / max(s_i, s_{i+1})` over consecutive spacings inside the window.
pub fn gap_ratio(sorted: &[f64], window: &Window) -> Result<f64> {
    let levels = &sorted[window.index_range(sorted)];
    let (sum, count) = gap_ratio_sum(levels);
    if levels.len() < 3 || count == 0 {
        return Err(Error::estimator(format!(
            "gap ratio needs >= 3 distinct levels in the window, found {}",
            levels.len()
        )));
    }
    Ok(sum / count as f64)
}

/// Sum and number of gap ratios of consecutive level triples.
pub fn gap_ratio_sum(levels: &[f64]) -> (f64, usize) {
    let mut sum = CompensatedSum::default();
    let mut count = 0;
    for w in levels.windows(3) {
        let (s1, s2) = (w[1] - w[0], w[2] - w[1]);
        let big = s1.max(s2);
        if big > 0.0 {
            sum.add(s1.min(s2) / big);
            count += 1;
        }
    }
    (sum.value(), count)
}

/// `P_z(λ) = Im 1/(λ - z)`.
#[inline]
pub fn poisson_kernel(lambda: f64, z: Complex64) -> f64 {
    z.im / ((lambda - z.re).powi(2) + z.im * z.im)
}

/// `μ(P_z) = Σ_j P_z(scale (λ_j - center))`.
pub fn poisson_kernel_functional(sorted: &[f64], z: Complex64, center: f64, scale: f64) -> Result<f64> {
    check_upper(z)?;
    Ok(sorted
        .iter()
        .map(|&l| poisson_kernel(scale * (l - center), z))
        .collect::<CompensatedSum>()
        .value())
}

/// The same functional through the trace: `(N / scale) Im S(center + z / scale)`.
pub fn poisson_kernel_functional_via_stieltjes(sorted: &[f64], z: Complex64, center: f64, scale: f64) -> Result<f64> {
    check_upper(z)?;
    let zn = ComplexEnergy::new(center + z.re / scale, z.im / scale)?;
    Ok(sorted.len() as f64 / scale * stieltjes(sorted, zn).im)
}

fn check_upper(z: Complex64) -> Result<()> {
    if !(z.im > 0.0) {
        return Err(Error::domain(format!("need Im z > 0, got {z}")));
    }
    Ok(())
}

/// `Q(x, y; W) = Σ_{λ ∈ W} |ψ_λ(x) ψ_λ(y)|` for every `y`, indexed by 0-based `y`.
pub fn eigenfunction_correlator(sd: &SpectralData, x: usize, window: &Window) -> Result<Vec<f64>> {
    if x == 0 || x > sd.size() {
        return Err(Error::domain(format!("site {x} outside 1..={}", sd.size())));
    }
    let mut q = vec![0.0; sd.size()];
    for j in window.index_range(sd.eigenvalues()) {
        let ax = sd.amplitude(j, x).abs();
        if ax == 0.0 {
            continue;
        }
        for (qy, v) in q.iter_mut().zip(sd.eigenvector(j)) {
            *qy += ax * v.abs();
        }
    }
    Ok(q)
}

/// Correlator mass inside and outside the hierarchical ball `B_m(x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorReport {
    pub site: usize,
    pub radius: u32,
    pub window: Window,
    pub inside_mass: f64,
    pub outside_mass: f64,
}

impl CorrelatorReport {
    pub fn total(&self) -> f64 {
        self.inside_mass + self.outside_mass
    }
}

pub fn localization_mass(
    sd: &SpectralData,
    space: &IndexSpace,
    x: usize,
    m: u32,
    window: &Window,
) -> Result<CorrelatorReport> {
    if space.size() != sd.size() {
        return Err(Error::domain("index space and spectrum sizes differ"));
    }
    let ball = space.ball(x, m)?;
    let q = eigenfunction_correlator(sd, x, window)?;
    let mut inside = CompensatedSum::default();
    let mut outside = CompensatedSum::default();
    for (y, qy) in q.into_iter().enumerate() {
        if ball.contains(&(y + 1)) {
            inside.add(qy);
        } else {
            outside.add(qy);
        }
    }
    Ok(CorrelatorReport {
        site: x,
        radius: m,
        window: *window,
        inside_mass: inside.value(),
        outside_mass: outside.value(),
    })
}

/// Outside-ball correlator mass `Σ_{y ∉ B_m(x)} Q(x, y; W)` for every site `x`, indexed by 0-based `x`.
///
/// Uses dyadic block sums, so the cost is `O(N)` per level in the window.
pub fn outside_mass_all_sites(sd: &SpectralData, space: &IndexSpace, m: u32, window: &Window) -> Result<Vec<f64>> {
    let n = sd.size();
    if space.size() != n {
        return Err(Error::domain("index space and spectrum sizes differ"));
    }
    if m > space.depth() {
        return Err(Error::domain(format!("radius m = {m} exceeds depth n = {}", space.depth())));
    }
    let block = 1usize << m;
    let mut out = vec![CompensatedSum::default(); n];
    let mut block_sums = vec![0.0; n / block];
    for j in window.index_range(sd.eigenvalues()) {
        let v = sd.eigenvector(j);
        let total: f64 = v.iter().map(|a| a.abs()).sum();
        for (b, s) in block_sums.iter_mut().enumerate() {
            *s = v[b * block..(b + 1) * block].iter().map(|a| a.abs()).sum();
        }
        for (x, acc) in out.iter_mut().enumerate() {
            let outside = (total - block_sums[x / block]).max(0.0);
            acc.add(v[x].abs() * outside);
        }
    }
    Ok(out.into_iter().map(|s| s.value()).collect())
}

/// Both sides of the correlator / Green-function comparison.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Compares `Σ_{y∈Y} Q(x, y; W)` with
/// `(2/π) Σ_{y∈Y} ∫_W |Im G(x, y; E + iη)| dE + log N / N^w`.
///
/// The integral uses the composite trapezoid rule on `quadrature_points`
/// uniform nodes; the node spacing must not exceed `η / 4`.
pub fn correlator_green_bound_check(
    sd: &SpectralData,
    x: usize,
    ys: &[usize],
    window: &Window,
    eta: f64,
    quadrature_points: usize,
) -> Result<BoundCheck> {
    let n = sd.size();
    let w = window
        .exponent
        .filter(|w| *w > 0.0)
        .ok_or_else(|| Error::domain("window must record a positive exponent w"))?;
    if !(eta > 0.0) {
        return Err(Error::domain(format!("eta must be positive, got {eta}")));
    }
    let ell = -eta.ln() / (n as f64).ln() - 1.0;
    if !(ell > w) {
        return Err(Error::domain(format!("eta = N^-(1+l) needs l > w, got l = {ell}, w = {w}")));
    }
    if quadrature_points < 2 || window.length() / (quadrature_points - 1) as f64 > eta / 4.0 {
        return Err(Error::Precision(format!(
            "{quadrature_points} nodes leave spacing above eta/4 = {}",
            eta / 4.0
        )));
    }
    if let Some(&bad) = ys.iter().find(|&&y| y == 0 || y > n) {
        return Err(Error::domain(format!("site {bad} outside 1..={n}")));
    }

    let q = eigenfunction_correlator(sd, x, window)?;
    let lhs = ys.iter().map(|&y| q[y - 1]).collect::<CompensatedSum>().value();

    let iv = window.interval();
    let h = window.length() / (quadrature_points - 1) as f64;
    let ax: Vec<f64> = (0..n).map(|j| sd.amplitude(j, x)).collect();
    let mut integral = vec![CompensatedSum::default(); ys.len()];
    let mut coef = vec![0.0; n];
    for k in 0..quadrature_points {
        let e = iv.lo + k as f64 * h;
        let weight = if k == 0 || k + 1 == quadrature_points { h / 2.0 } else { h };
        for (j, c) in coef.iter_mut().enumerate() {
            let d = sd.eigenvalues()[j] - e;
            *c = ax[j] * eta / (d * d + eta * eta);
        }
        for (acc, &y) in integral.iter_mut().zip(ys) {
            let im_g: f64 = coef
                .iter()
                .enumerate()
                .map(|(j, c)| c * sd.amplitude(j, y))
                .sum();
            acc.add(weight * im_g.abs());
        }
    }
    let total: f64 = integral.iter().map(|s| s.value()).collect::<CompensatedSum>().value();
    let rhs = 2.0 / PI * total + (n as f64).ln() / (n as f64).powf(w);
    Ok(BoundCheck {
        lhs,
        rhs,
        holds: lhs <= rhs,
    })
}

/// Wegner ratio `E ν(I)/|I|` and Minami ratio `E ν(I)(ν(I) - 1/N)/|I|²`.
pub fn wegner_minami_statistics<S: AsRef<[f64]>>(
    spectra: &[S],
    interval: Interval,
    master_seed: u64,
) -> Result<(StatReport, StatReport)> {
    wegner_minami_translates(spectra, &[interval], master_seed)
}

/// As [`wegner_minami_statistics`], with each realization's value averaged over
/// several intervals of a common length (e.g. disjoint translates across the bulk).
pub fn wegner_minami_translates<S: AsRef<[f64]>>(
    spectra: &[S],
    intervals: &[Interval],
    master_seed: u64,
) -> Result<(StatReport, StatReport)> {
    if spectra.len() < 2 {
        return Err(Error::estimator(format!("need >= 2 realizations, got {}", spectra.len())));
    }
    let len = intervals
        .first()
        .ok_or_else(|| Error::estimator("no intervals given"))?
        .length();
    if !(len > 0.0) || intervals.iter().any(|iv| (iv.length() - len).abs() > 1e-12 * len) {
        return Err(Error::domain("intervals must share one positive length"));
    }
    let (wegner, minami) = spectra.iter().map(|s| wegner_minami_values(s.as_ref(), intervals)).unzip();
    Ok((
        StatReport::from_values("wegner_ratio", master_seed, wegner),
        StatReport::from_values("minami_ratio", master_seed, minami),
    ))
}

/// One realization's Wegner and Minami values, averaged over the intervals.
pub fn wegner_minami_values(sorted: &[f64], intervals: &[Interval]) -> (f64, f64) {
    let n = sorted.len() as f64;
    let (mut w, mut m) = (CompensatedSum::default(), CompensatedSum::default());
    for iv in intervals {
        let len = iv.length();
        let nu = iv.count(sorted) as f64 / n;
        w.add(nu / len);
        m.add(nu * (nu - 1.0 / n) / (len * len));
    }
    let k = intervals.len() as f64;
    (w.value() / k, m.value() / k)
}

/// Disjoint intervals of length `length` tiling `[center - span, center + span]`,
/// or the single interval centered at `center` when fewer than one fits.
pub fn translates(center: f64, length: f64, span: f64) -> Result<Vec<Interval>> {
    if !(length > 0.0) {
        return Err(Error::domain(format!("interval length must be positive, got {length}")));
    }
    let count = (2.0 * span / length).floor() as usize;
    adjacent_translates(center, length, count.max(1))
}

/// `count` adjacent intervals of length `length`, together centered at `center`.
pub fn adjacent_translates(center: f64, length: f64, count: usize) -> Result<Vec<Interval>> {
    if !(length > 0.0) {
        return Err(Error::domain(format!("interval length must be positive, got {length}")));
    }
    if count == 0 {
        return Err(Error::domain("need at least one interval"));
    }
    let start = center - count as f64 * length / 2.0;
    (0..count)
        .map(|j| Interval::new(start + j as f64 * length, start + (j + 1) as f64 * length))
        .collect()
}

/// `E Σ_y |μ_xy|(I) / (N |I|)` where `|μ_xy|(I) = Σ_{λ∈I} |ψ_λ(x) ψ_λ(y)|`.
pub fn spectral_averaging_statistic(
    spectra: &[SpectralData],
    x: usize,
    interval: Interval,
    master_seed: u64,
) -> Result<StatReport> {
    if spectra.len() < 2 {
        return Err(Error::estimator(format!("need >= 2 realizations, got {}", spectra.len())));
    }
    if !(interval.length() > 0.0) {
        return Err(Error::domain("interval must have positive length"));
    }
    let values = spectra
        .iter()
        .map(|sd| spectral_averaging_value(sd, x, interval))
        .collect::<Result<Vec<_>>>()?;
    Ok(StatReport::from_values("spectral_averaging", master_seed, values))
}

pub fn spectral_averaging_value(sd: &SpectralData, x: usize, interval: Interval) -> Result<f64> {
    if x == 0 || x > sd.size() {
        return Err(Error::domain(format!("site {x} outside 1..={}", sd.size())));
    }
    let lo = sd.eigenvalues().partition_point(|&v| v < interval.lo);
    let hi = sd.eigenvalues().partition_point(|&v| v <= interval.hi);
    let mut total = CompensatedSum::default();
    for j in lo..hi {
        let l1: f64 = sd.eigenvector(j).iter().map(|v| v.abs()).sum();
        total.add(sd.amplitude(j, x).abs() * l1);
    }
    Ok(total.value() / (sd.size() as f64 * interval.length()))
}

/// Density of states at `e` from the level count in a window of width `N^{-1/2}`.
pub fn density_estimate(sorted: &[f64], e: f64) -> f64 {
    let n = sorted.len() as f64;
    let width = n.powf(-0.5);
    let count = count_in(sorted, e - width / 2.0, e + width / 2.0) as f64;
    count / (n * width)
}
