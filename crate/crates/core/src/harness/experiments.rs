use num_complex::Complex64;
use rand::Rng;
use serde_json::json;

use super::config::{ExperimentConfig, ExperimentKind, FlowInitial};
use super::io::{fmt_f64, plot_table, spectrum_table, write_hmat, Table};
use super::{par_realizations, Outputs};
use crate::ensemble::{assemble, EnsembleConfig, IndexSpace, Model, PotentialSpec};
use crate::error::Result;
use crate::flow::{
    burgers_drift_check_with, drift_identity_check_with, growth_exponent, stability_realization, summarize_stability,
    ward_identity_check, StabilityConfig,
};
use crate::spectral::{eigendecompose, eigenvalues, ComplexEnergy};
use crate::stats::{
    adjacent_translates,    bulk_window, counting_report, outside_mass_all_sites, density_estimate, gap_ratio, localization_mass, mean_and_stderr,
    poisson_kernel_functional, poisson_kernel_functional_via_stieltjes, quantile, rescale_spectrum,
    spectral_averaging_value, translates, wegner_minami_values, CompensatedSum, Interval, StatReport, Window,
};

pub(super) fn dispatch(config: &ExperimentConfig) -> Result<Outputs> {
    match config.experiment {
        ExperimentKind::Sample => sample(config),
        ExperimentKind::Spectrum => spectrum(config),
        ExperimentKind::PoissonTest | ExperimentKind::RpTest => local_statistics(config),
        ExperimentKind::GapRatioSweep => gap_ratio_sweep(config),
        ExperimentKind::Localization => localization(config),
        ExperimentKind::DbmStability => dbm_stability(config),
        ExperimentKind::IdentityCheck => identity_check(config),
        ExperimentKind::WegnerMinami => wegner_minami(config),
    }
}

/// One row per realization plus a trailing `mean` row.
fn report_table(names: &[String], rows: &[Vec<f64>]) -> Table {
    let mut t = Table::new(std::iter::once("realization".to_owned()).chain(names.iter().cloned()));
    for (k, row) in rows.iter().enumerate() {
        t.push(k, row);
    }
    let means: Vec<f64> = (0..names.len()).map(|i| column_mean(rows, i)).collect();
    t.push("mean", &means);
    t
}

fn column(rows: &[Vec<f64>], i: usize) -> Vec<f64> {
    rows.iter().map(|r| r[i]).collect()
}

fn column_mean(rows: &[Vec<f64>], i: usize) -> f64 {
    mean_and_stderr(&column(rows, i)).0
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

fn stat(name: &str, config: &ExperimentConfig, values: Vec<f64>) -> serde_json::Value {
    let r = StatReport::from_values(name, config.master_seed, values);
    json!({
        "name": r.name,
        "realizations": r.realizations,
        "master_seed": r.master_seed,
        "estimate": r.estimate,
        "stderr": r.stderr,
        "median": r.median(),
        "quantiles_10_50_90": [quantile(&r.values, 0.1), quantile(&r.values, 0.5), quantile(&r.values, 0.9)],
    })
}

fn bulk_gap_ratio(eigs: &[f64], fraction: f64) -> Result<f64> {
    gap_ratio(eigs, &bulk_window(eigs, fraction)?)
}

fn sample(config: &ExperimentConfig) -> Result<Outputs> {
    let rows = par_realizations(config, |stream| {
        let h = assemble(&config.ensemble, stream)?;
        let mut bytes = Vec::new();
        write_hmat(&mut bytes, &h)?;
        let sq = h.as_slice().iter().map(|v| v * v).collect::<CompensatedSum>().value();
        Ok((bytes, vec![h.max_abs(), sq / h.size() as f64]))
    })?;
    let mut out = Outputs::default();
    let values: Vec<Vec<f64>> = rows.iter().map(|r| r.1.clone()).collect();
    for (k, (bytes, _)) in rows.into_iter().enumerate() {
        out.files.push((format!("matrix_{k:05}.hmat"), bytes));
    }
    out.table("sample.csv", &report_table(&names(&["max_abs", "mean_row_square_sum"]), &values))?;
    Ok(out)
}

fn spectrum(config: &ExperimentConfig) -> Result<Outputs> {
    let rows = par_realizations(config, |stream| {
        let eigs = eigenvalues(&assemble(&config.ensemble, stream)?)?;
        let n = eigs.len();
        let mean = eigs.iter().copied().collect::<CompensatedSum>().value() / n as f64;
        let r = if n >= 3 { bulk_gap_ratio(&eigs, config.bulk_fraction)? } else { f64::NAN };
        let summary = vec![eigs[0], eigs[n - 1], mean, r];
        Ok((spectrum_table(&eigs).to_bytes()?, summary))
    })?;
    let mut out = Outputs::default();
    let values: Vec<Vec<f64>> = rows.iter().map(|r| r.1.clone()).collect();
    for (k, (bytes, _)) in rows.into_iter().enumerate() {
        out.files.push((format!("spectrum_{k:05}.csv"), bytes));
    }
    let cols = names(&["lambda_min", "lambda_max", "mean_eigenvalue", "bulk_gap_ratio"]);
    out.table("spectrum.csv", &report_table(&cols, &values))?;
    Ok(out)
}

/// Counting statistics, gap ratio and the rescaled Poisson-kernel functional at `E`.
fn local_statistics(config: &ExperimentConfig) -> Result<Outputs> {
    let e = config.energy;
    let [a, b] = config.counting_interval;
    let z = Complex64::new(0.0, 1.0);
    let rows = par_realizations(config, |stream| {
        let eigs = eigenvalues(&assemble(&config.ensemble, stream)?)?;
        let n = eigs.len() as f64;
        let points = rescale_spectrum(&eigs, e, n)?;
        let count = points.count(Interval::new(a, b)?) as f64;
        let r = bulk_gap_ratio(&eigs, config.bulk_fraction)?;
        let mu = poisson_kernel_functional(&eigs, z, e, n)?;
        let via = poisson_kernel_functional_via_stieltjes(&eigs, z, e, n)?;
        let err = (mu - via).abs() / mu.abs().max(via.abs()).max(f64::MIN_POSITIVE);
        Ok(vec![count, r, mu, (-mu).exp(), density_estimate(&eigs, e), err])
    })?;
    let cols = names(&["count", "gap_ratio", "mu_pz", "exp_neg_mu_pz", "density", "kernel_identity_error"]);
    let counting = counting_report(column(&rows, 0), config.master_seed);
    let pmf = &counting.aux["pmf"];
    let total = rows.len() as f64;
    let pmf_points: Vec<(f64, f64, f64)> = pmf
        .iter()
        .enumerate()
        .map(|(k, &p)| (k as f64, p, (p * (1.0 - p) / total).sqrt()))
        .collect();
    let moments = &counting.aux["moments"];
    let summary = json!({
        "experiment": config.experiment,
        "size": config.ensemble.size(),
        "energy": e,
        "counting_interval": config.counting_interval,
        "count": {
            "mean": moments[0],
            "variance": moments[1],
            "variance_over_mean": moments[2],
            "stderr": counting.stderr,
            "pmf": pmf,
        },
        "gap_ratio": stat("gap_ratio", config, column(&rows, 1)),
        "characteristic_functional": stat("exp_neg_mu_pz", config, column(&rows, 3)),
        "density": stat("density", config, column(&rows, 4)),
        "max_kernel_identity_error": column(&rows, 5).into_iter().fold(0.0, f64::max),
    });
    let stem = config.experiment.stem();
    let mut out = Outputs::default();
    out.table(format!("{stem}.csv"), &report_table(&cols, &rows))?;
    out.table(format!("{stem}_pmf.csv"), &plot_table("count", "probability", &pmf_points))?;
    out.json(format!("{stem}.json"), &summary)?;
    Ok(out)
}

/// The ensemble at a different exponent; Rosenzweig-Porter time follows `N^{-(1+c)}`.
fn with_exponent(ensemble: &EnsembleConfig, c: f64) -> EnsembleConfig {
    match ensemble.model {
        Model::RosenzweigPorter { potential, .. } => {
            EnsembleConfig { normalized: ensemble.normalized, ..EnsembleConfig::rosenzweig_porter(ensemble.n, c, potential) }
        }
        _ => EnsembleConfig { c, ..*ensemble },
    }
}

fn gap_ratio_sweep(config: &ExperimentConfig) -> Result<Outputs> {
    let cs = &config.sweep.c_values;
    let ensembles: Vec<EnsembleConfig> = cs.iter().map(|&c| with_exponent(&config.ensemble, c)).collect();
    let rows = par_realizations(config, |stream| {
        ensembles
            .iter()
            .map(|ens| bulk_gap_ratio(&eigenvalues(&assemble(ens, stream)?)?, config.bulk_fraction))
            .collect::<Result<Vec<f64>>>()
    })?;
    let cols: Vec<String> = cs.iter().map(|c| format!("r(c={c})")).collect();
    let points: Vec<(f64, f64, f64)> = cs
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let (m, se) = mean_and_stderr(&column(&rows, i));
            (c, m, se)
        })
        .collect();
    let mut out = Outputs::default();
    out.table("gap_ratio_sweep.csv", &report_table(&cols, &rows))?;
    out.table("phase_diagram.csv", &plot_table("c", "mean_r", &points))?;
    out.json(
        "gap_ratio_sweep.json",
        &json!({
            "size": config.ensemble.size(),
            "c_values": cs,
            "gap_ratio": cs.iter().enumerate().map(|(i, _)| stat("gap_ratio", config, column(&rows, i))).collect::<Vec<_>>(),
        }),
    )?;
    Ok(out)
}

fn localization(config: &ExperimentConfig) -> Result<Outputs> {
    let n = config.ensemble.n;
    let p = &config.localization;
    let m = p.radius.unwrap_or(n / 2);
    let space = IndexSpace::new(n)?;
    let window = Window::new(config.energy, (-p.halfwidth_exponent * n as f64).exp2())?;
    let rows = par_realizations(config, |stream| {
        let sd = eigendecompose(&assemble(&config.ensemble, stream)?)?;
        let rep = localization_mass(&sd, &space, p.site, m, &window)?;
        let levels = window.index_range(sd.eigenvalues()).len() as f64;
        let pooled = if p.pool_sites { outside_mass_all_sites(&sd, &space, m, &window)? } else { Vec::new() };
        Ok((vec![rep.inside_mass, rep.outside_mass, rep.total(), levels], pooled))
    })?;
    let (rows, pooled): (Vec<Vec<f64>>, Vec<Vec<f64>>) = rows.into_iter().unzip();
    let cols = names(&["inside_mass", "outside_mass", "total_mass", "levels_in_window"]);
    let mut out = Outputs::default();
    out.table("localization.csv", &report_table(&cols, &rows))?;
    let mut summary = json!({
        "size": config.ensemble.size(),
        "site": p.site,
        "radius": m,
        "window": window,
        "outside_mass": stat("outside_mass", config, column(&rows, 1)),
        "inside_mass": stat("inside_mass", config, column(&rows, 0)),
    });
    if p.pool_sites {
        let all: Vec<f64> = pooled.concat();
        summary["pooled_outside_mass"] = json!({
            "samples": all.len(),
            "median": quantile(&all, 0.5),
            "quantiles_10_50_90": [quantile(&all, 0.1), quantile(&all, 0.5), quantile(&all, 0.9)],
        });
    }
    out.json("localization.json", &summary)?;
    Ok(out)
}

fn stability_config(config: &ExperimentConfig) -> StabilityConfig {
    let n = config.ensemble.n;
    let size = config.ensemble.size() as f64;
    let f = &config.flow;
    let initial = match f.initial {
        FlowInitial::Potential => {
            let potential = match config.ensemble.model {
                Model::RosenzweigPorter { potential, .. } => potential,
                _ => PotentialSpec::default(),
            };
            EnsembleConfig {
                model: Model::RosenzweigPorter { t: 0.0, potential },
                ..EnsembleConfig::rosenzweig_porter(n, f.c_flow, potential)
            }
        }
        FlowInitial::Truncated => EnsembleConfig::truncated(n, f.c_flow, n.saturating_sub(1)),
    };
    StabilityConfig {
        initial,
        c_flow: f.c_flow,
        energy: config.energy,
        etas: f.eta_multipliers.iter().map(|m| m / size).collect(),
        site: f.site,
    }
}

fn dbm_stability(config: &ExperimentConfig) -> Result<Outputs> {
    let sc = stability_config(config);
    let gaps = par_realizations(config, |stream| stability_realization(&sc, stream))?;
    let summaries = summarize_stability(&sc, &gaps)?;
    let mut cols = Vec::new();
    for m in &config.flow.eta_multipliers {
        cols.push(format!("s_gap(eta={m}/N)"));
        cols.push(format!("g_gap(eta={m}/N)"));
    }
    let rows: Vec<Vec<f64>> = gaps
        .iter()
        .map(|g| g.iter().flat_map(|x| [x.s_gap, x.g_gap]).collect())
        .collect();
    let mut sweep = Table::new([
        "N", "c_flow", "eta", "t", "mean_s_gap", "stderr", "mean_g_gap", "crude_bound", "theorem_shape",
    ]);
    for s in &summaries {
        sweep.push_raw(vec![
            s.size.to_string(),
            fmt_f64(s.c_flow),
            fmt_f64(s.eta),
            fmt_f64(s.t),
            fmt_f64(s.mean_s_gap),
            fmt_f64(s.stderr),
            fmt_f64(s.mean_g_gap),
            fmt_f64(s.crude_bound),
            fmt_f64(s.theorem_shape),
        ]);
    }
    let exponent = if summaries.len() >= 2 { growth_exponent(&summaries).ok() } else { None };
    let mut out = Outputs::default();
    out.table("dbm_stability.csv", &report_table(&cols, &rows))?;
    out.table("stability_sweep.csv", &sweep)?;
    out.json(
        "dbm_stability.json",
        &json!({
            "initial": sc.initial,
            "summaries": summaries,
            "crude_ratio": summaries.iter().map(|s| s.crude_ratio()).collect::<Vec<_>>(),
            "shape_ratio": summaries.iter().map(|s| s.shape_ratio()).collect::<Vec<_>>(),
            "growth_exponent": exponent,
        }),
    )?;
    Ok(out)
}

fn identity_check(config: &ExperimentConfig) -> Result<Outputs> {
    let p = &config.identity;
    let rows = par_realizations(config, |stream| {
        let h = assemble(&config.ensemble, stream)?;
        let sd = eigendecompose(&h)?;
        let size = h.size();
        let mut rng = stream.derive(2).rng();
        let e: f64 = rng.random_range(-1.0..=1.0);
        let eta = (p.eta_min.ln() + rng.random::<f64>() * (p.eta_max / p.eta_min).ln()).exp();
        let x = rng.random_range(1..=size);
        let y = rng.random_range(1..=size);
        let z = ComplexEnergy::new(e, eta)?;
        let drift = drift_identity_check_with(&sd, z, x, y)?.relative_error;
        let burgers = burgers_drift_check_with(&sd, z).relative_error;
        let ward = ward_identity_check(&sd, x, z)?;
        let eigs = sd.eigenvalues();
        let scale = size as f64;
        let mu = poisson_kernel_functional(eigs, z.z(), 0.0, scale)?;
        let via = poisson_kernel_functional_via_stieltjes(eigs, z.z(), 0.0, scale)?;
        let kernel = (mu - via).abs() / mu.abs().max(via.abs()).max(f64::MIN_POSITIVE);
        Ok(vec![e, eta, x as f64, y as f64, drift, burgers, ward, kernel])
    })?;
    let cols = names(&["e", "eta", "x", "y", "drift_error", "burgers_error", "ward_error", "kernel_error"]);
    let mut out = Outputs::default();
    let limits = [
        ("drift_error", 4, p.drift_tolerance),
        ("burgers_error", 5, p.drift_tolerance),
        ("ward_error", 6, p.ward_tolerance),
        ("kernel_error", 7, p.ward_tolerance),
    ];
    for (k, row) in rows.iter().enumerate() {
        for (name, i, tol) in limits {
            if !(row[i] <= tol) {
                out.failures.push(format!("realization {k}: {name} = {:e} exceeds {tol:e}", row[i]));
            }
        }
    }
    let max_of = |i: usize| column(&rows, i).into_iter().fold(0.0, f64::max);
    out.table("identity_check.csv", &report_table(&cols, &rows))?;
    out.json(
        "identity_check.json",
        &json!({
            "size": config.ensemble.size(),
            "max_drift_error": max_of(4),
            "max_burgers_error": max_of(5),
            "max_ward_error": max_of(6),
            "max_kernel_error": max_of(7),
            "failures": out.failures,
        }),
    )?;
    Ok(out)
}

fn wegner_minami(config: &ExperimentConfig) -> Result<Outputs> {
    let p = &config.wegner;
    let size = config.ensemble.size() as f64;
    let families = p
        .length_multipliers
        .iter()
        .map(|m| match p.tiles {
            Some(k) => adjacent_translates(config.energy, m / size, k),
            None => translates(config.energy, m / size, p.span),
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = par_realizations(config, |stream| {
        let h = assemble(&config.ensemble, stream)?;
        let mut row = Vec::new();
        let (eigs, sd) = if p.spectral_averaging {
            let sd = eigendecompose(&h)?;
            (sd.eigenvalues().to_vec(), Some(sd))
        } else {
            (eigenvalues(&h)?, None)
        };
        for fam in &families {
            let (w, m) = wegner_minami_values(&eigs, fam);
            row.push(w);
            row.push(m);
        }
        if let Some(sd) = sd {
            for m in &p.length_multipliers {
                row.push(spectral_averaging_value(&sd, p.site, Interval::centered(config.energy, m / size)?)?);
            }
        }
        Ok(row)
    })?;
    let mut cols = Vec::new();
    for m in &p.length_multipliers {
        cols.push(format!("wegner(L={m}/N)"));
        cols.push(format!("minami(L={m}/N)"));
    }
    if p.spectral_averaging {
        cols.extend(p.length_multipliers.iter().map(|m| format!("spectral_averaging(L={m}/N)")));
    }
    let series = |offset: usize, stride: usize| -> Vec<(f64, f64, f64)> {
        p.length_multipliers
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let (mean, se) = mean_and_stderr(&column(&rows, offset + stride * i));
                (m / size, mean, se)
            })
            .collect()
    };
    let wegner = series(0, 2);
    let minami = series(1, 2);
    let density_bound = match config.ensemble.model {
        Model::RosenzweigPorter { potential, .. } => potential.density_bound(),
        _ => f64::NAN,
    };
    let mut out = Outputs::default();
    out.table("wegner_minami.csv", &report_table(&cols, &rows))?;
    out.table("wegner.csv", &plot_table("length", "wegner_ratio", &wegner))?;
    out.table("minami.csv", &plot_table("length", "minami_ratio", &minami))?;
    let mut summary = json!({
        "size": config.ensemble.size(),
        "density_bound": density_bound,
        "translates": families.iter().map(Vec::len).collect::<Vec<_>>(),
        "wegner": wegner,
        "minami": minami,
    });
    if p.spectral_averaging {
        let sa = series(2 * p.length_multipliers.len(), 1);
        out.table("spectral_averaging.csv", &plot_table("length", "statistic", &sa))?;
        summary["spectral_averaging"] = json!(sa);
    }
    out.json("wegner_minami.json", &summary)?;
    Ok(out)
}
