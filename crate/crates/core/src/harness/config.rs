//! Experiment configuration documents.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::ensemble::{EnsembleConfig, Model};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
pub enum ExperimentKind {
    Sample,
    Spectrum,
    PoissonTest,
    GapRatioSweep,
    Localization,
    DbmStability,
    RpTest,
    IdentityCheck,
    WegnerMinami,
}

impl ExperimentKind {
    /// File-name stem of the main report.
    pub fn stem(self) -> &'static str {
        match self {
            ExperimentKind::Sample => "sample",
            ExperimentKind::Spectrum => "spectrum",
            ExperimentKind::PoissonTest => "poisson_test",
            ExperimentKind::GapRatioSweep => "gap_ratio_sweep",
            ExperimentKind::Localization => "localization",
            ExperimentKind::DbmStability => "dbm_stability",
            ExperimentKind::RpTest => "rp_test",
            ExperimentKind::IdentityCheck => "identity_check",
            ExperimentKind::WegnerMinami => "wegner_minami",
        }
    }
}

/// Law of the flow's initial matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowInitial {
    /// Rosenzweig-Porter at `t = 0`: a pure diagonal potential.
    #[default]
    Potential,
    /// Unnormalized truncation `H_{n,n-1}` with `c = c_flow`.
    Truncated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowParams {
    pub c_flow: f64,
    /// `η = multiplier / N`.
    pub eta_multipliers: Vec<f64>,
    pub initial: FlowInitial,
    pub site: usize,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            c_flow: 0.5,
            eta_multipliers: vec![4.0, 1.0, 0.25],
            initial: FlowInitial::Potential,
            site: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepParams {
    pub c_values: Vec<f64>,
}

impl Default for SweepParams {
    fn default() -> Self {
        Self {
            c_values: vec![-1.5, -0.5, 0.5, 1.5],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalizationParams {
    pub site: usize,
    /// Ball radius; `n / 2` when absent.
    pub radius: Option<u32>,
    /// Window halfwidth `2^{-exponent n}`.
    pub halfwidth_exponent: f64,
    /// Also pool the outside mass over every site of each realization.
    pub pool_sites: bool,
}

impl Default for LocalizationParams {
    fn default() -> Self {
        Self {
            site: 1,
            radius: None,
            halfwidth_exponent: 0.9,
            pool_sites: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WegnerParams {
    /// Interval lengths `multiplier / N`.
    pub length_multipliers: Vec<f64>,
    /// Number of adjacent translates centered at `E`, so the covered range scales with the length.
    /// When absent, translates tile `[E - span, E + span]` instead.
    pub tiles: Option<usize>,
    /// `0` (with no `tiles`) keeps a single interval at `E`.
    pub span: f64,
    /// Also estimate the spectral-averaging statistic at `site` (needs eigenvectors).
    pub spectral_averaging: bool,
    pub site: usize,
}

impl Default for WegnerParams {
    fn default() -> Self {
        Self {
            length_multipliers: vec![4.0, 2.0, 1.0],
            tiles: Some(64),
            span: 0.5,
            spectral_averaging: false,
            site: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentityParams {
    pub eta_min: f64,
    pub eta_max: f64,
    pub drift_tolerance: f64,
    pub ward_tolerance: f64,
}

impl Default for IdentityParams {
    fn default() -> Self {
        Self {
            eta_min: 1e-3,
            eta_max: 1.0,
            drift_tolerance: 1e-8,
            ward_tolerance: 1e-10,
        }
    }
}

/// A fully resolved experiment configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub ensemble: EnsembleConfig,
    pub realizations: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub energy: f64,
    /// Rescaled counting interval `B`, in units of the mean level spacing scale `N`.
    #[serde(default = "default_counting_interval")]
    pub counting_interval: [f64; 2],
    #[serde(default = "default_bulk_fraction")]
    pub bulk_fraction: f64,
    #[serde(default)]
    pub localization: LocalizationParams,
    #[serde(default)]
    pub flow: FlowParams,
    #[serde(default)]
    pub sweep: SweepParams,
    #[serde(default)]
    pub identity: IdentityParams,
    #[serde(default)]
    pub wegner: WegnerParams,
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_counting_interval() -> [f64; 2] {
    [-2.0, 2.0]
}

fn default_bulk_fraction() -> f64 {
    0.2
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("hrmt-out")
}

/// Worker count from `HRMT_WORKERS`, else the available cores.
pub fn default_workers() -> usize {
    std::env::var("HRMT_WORKERS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&w| w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Parses and validates a JSON document, filling defaults.
///
/// Every problem found is reported, each message naming its field.
pub fn validate_config(document: &str) -> Result<ExperimentConfig> {
    let mut value: Value = serde_json::from_str(document)?;
    let Some(root) = value.as_object_mut() else {
        return Err(Error::Config(vec!["document must be a JSON object".into()]));
    };
    let mut errors = Vec::new();
    fill_rosenzweig_porter_time(root);

    let known = [
        "experiment",
        "ensemble",
        "realizations",
        "master_seed",
        "energy",
        "counting_interval",
        "bulk_fraction",
        "localization",
        "flow",
        "sweep",
        "identity",
        "wegner",
        "workers",
        "output_dir",
    ];
    for key in root.keys() {
        if !known.contains(&key.as_str()) {
            errors.push(format!("{key}: unknown field"));
        }
    }
    for key in ["experiment", "ensemble", "realizations"] {
        if !root.contains_key(key) {
            errors.push(format!("{key}: missing required field"));
        }
    }

    macro_rules! field {
        ($key:literal, $ty:ty) => {
            root.get($key).and_then(|v| match serde_json::from_value::<$ty>(v.clone()) {
                Ok(parsed) => Some(parsed),
                Err(e) => {
                    errors.push(format!("{}: {e}", $key));
                    None
                }
            })
        };
    }

    let experiment = field!("experiment", ExperimentKind);
    let ensemble = field!("ensemble", EnsembleConfig);
    let realizations = field!("realizations", usize);
    field!("master_seed", u64);
    let energy = field!("energy", f64);
    let interval = field!("counting_interval", [f64; 2]);
    let bulk = field!("bulk_fraction", f64);
    let localization = field!("localization", LocalizationParams);
    let flow = field!("flow", FlowParams);
    let sweep = field!("sweep", SweepParams);
    let identity = field!("identity", IdentityParams);
    let wegner = field!("wegner", WegnerParams);
    field!("workers", usize);
    field!("output_dir", PathBuf);

    if let Some(e) = &ensemble {
        errors.extend(e.validation_errors().into_iter().map(|m| format!("ensemble: {m}")));
    }
    if realizations == Some(0) {
        errors.push("realizations must be >= 1".into());
    }
    if energy.is_some_and(|e| !e.is_finite()) {
        errors.push("energy must be finite".into());
    }
    if let Some([a, b]) = interval {
        if !(a < b) {
            errors.push(format!("counting_interval must satisfy a < b, got [{a}, {b}]"));
        }
    }
    if let Some(f) = bulk {
        if !(f > 0.0 && f <= 1.0) {
            errors.push(format!("bulk_fraction must lie in (0, 1], got {f}"));
        }
    }
    if let (Some(l), Some(e)) = (&localization, &ensemble) {
        let size = e.size();
        if l.site == 0 || l.site > size {
            errors.push(format!("localization.site must lie in 1..={size}, got {}", l.site));
        }
        if l.radius.is_some_and(|m| m > e.n) {
            errors.push(format!("localization.radius must be <= n = {}", e.n));
        }
        if !(l.halfwidth_exponent > 0.0) {
            errors.push("localization.halfwidth_exponent must be positive".into());
        }
    }
    if let (Some(f), Some(e)) = (&flow, &ensemble) {
        if !f.c_flow.is_finite() {
            errors.push("flow.c_flow must be finite".into());
        }
        if f.eta_multipliers.is_empty() || f.eta_multipliers.iter().any(|m| !(*m > 0.0)) {
            errors.push("flow.eta_multipliers must be a non-empty list of positive numbers".into());
        }
        if f.site == 0 || f.site > e.size() {
            errors.push(format!("flow.site must lie in 1..={}, got {}", e.size(), f.site));
        }
    }
    if let Some(s) = &sweep {
        if s.c_values.is_empty() || s.c_values.iter().any(|c| !c.is_finite()) {
            errors.push("sweep.c_values must be a non-empty list of finite numbers".into());
        }
    }
    if let Some(i) = &identity {
        if !(i.eta_min > 0.0 && i.eta_min <= i.eta_max) {
            errors.push("identity.eta_min must satisfy 0 < eta_min <= eta_max".into());
        }
    }
    if let (Some(w), Some(e)) = (&wegner, &ensemble) {
        if w.length_multipliers.is_empty() || w.length_multipliers.iter().any(|m| !(*m > 0.0)) {
            errors.push("wegner.length_multipliers must be a non-empty list of positive numbers".into());
        }
        if w.tiles == Some(0) {
            errors.push("wegner.tiles must be >= 1".into());
        }
        if !(w.span >= 0.0) {
            errors.push("wegner.span must be >= 0".into());
        }
        if w.site == 0 || w.site > e.size() {
            errors.push(format!("wegner.site must lie in 1..={}, got {}", e.size(), w.site));
        }
    }
    if let (Some(kind), Some(e)) = (experiment, &ensemble) {
        let is_rp = matches!(e.model, Model::RosenzweigPorter { .. });
        if matches!(kind, ExperimentKind::RpTest | ExperimentKind::WegnerMinami) && !is_rp {
            errors.push(format!("ensemble.model must be RosenzweigPorter for {kind:?}"));
        }
        if kind == ExperimentKind::GapRatioSweep && matches!(e.model, Model::Truncated { .. }) {
            errors.push("ensemble.model must not be Truncated for GapRatioSweep".into());
        }
        if kind == ExperimentKind::Sample && e.n > 12 {
            errors.push("ensemble.n must be <= 12 for Sample (matrix files)".into());
        }
    }

    if !errors.is_empty() {
        return Err(Error::Config(errors));
    }
    let mut config: ExperimentConfig = serde_json::from_value(value)?;
    if config.workers == 0 {
        config.workers = default_workers();
    }
    Ok(config)
}

/// Inserts `t = N^{-(1+c)}` and the default potential into a Rosenzweig-Porter model lacking them.
fn fill_rosenzweig_porter_time(root: &mut Map<String, Value>) {
    let Some(ensemble) = root.get_mut("ensemble").and_then(Value::as_object_mut) else {
        return;
    };
    let n = ensemble.get("n").and_then(Value::as_u64);
    let c = ensemble.get("c").and_then(Value::as_f64);
    let Some(model) = ensemble.get_mut("model").and_then(Value::as_object_mut) else {
        return;
    };
    if model.get("kind").and_then(Value::as_str) != Some("RosenzweigPorter") {
        return;
    }
    if !model.contains_key("t") {
        if let (Some(n), Some(c)) = (n, c) {
            if n <= 62 {
                let size = (1u64 << n) as f64;
                model.insert("t".into(), Value::from(size.powf(-(1.0 + c))));
            }
        }
    }
    if !model.contains_key("potential") {
        model.insert(
            "potential".into(),
            serde_json::to_value(crate::ensemble::PotentialSpec::default()).expect("serializable"),
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = validate_config(
            r#"{"experiment": "Sample", "ensemble": {"n": 3, "c": 1.0, "model": {"kind": "Ultrametric"}}, "realizations": 2}"#,
        )
        .unwrap();
        assert!(cfg.ensemble.normalized);
        assert!(cfg.workers >= 1);
        assert_eq!(cfg.bulk_fraction, 0.2);
        assert_eq!(cfg.master_seed, 0);
    }

    #[test]
    fn all_errors_are_collected() {
        let err = validate_config(
            r#"{"experiment": "Sample", "ensemble": {"n": 3, "c": 1.0, "model": {"kind": "Truncated", "m": 5}},
                "realizations": 0, "bulk_fraction": 2.0, "bogus": 1}"#,
        )
        .unwrap_err();
        let Error::Config(list) = err else { panic!("{err}") };
        assert_eq!(list.len(), 4, "{list:?}");
        assert!(list.iter().any(|m| m.contains("m must")));
        assert!(list.iter().any(|m| m.starts_with("realizations")));
        assert!(list.iter().any(|m| m.starts_with("bulk_fraction")));
        assert!(list.iter().any(|m| m.starts_with("bogus")));
    }

    #[test]
    fn rosenzweig_porter_time_is_filled() {
        let cfg = validate_config(
            r#"{"experiment": "RpTest", "ensemble": {"n": 4, "c": 0.5, "model": {"kind": "RosenzweigPorter"}}, "realizations": 2}"#,
        )
        .unwrap();
        let Model::RosenzweigPorter { t, potential } = cfg.ensemble.model else { panic!() };
        assert!((t - 16f64.powf(-1.5)).abs() < 1e-18);
        assert_eq!(potential.density_bound(), 0.5);
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = validate_config("{\n  \"experiment\": ,\n}").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        assert_eq!(err.exit_code(), 2);
    }
}
