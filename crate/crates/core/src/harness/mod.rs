//! Experiment orchestration: configs, deterministic parallel runs and persisted outputs.
//!
//! Realization `k` always draws from `RngStream::new(master_seed, k)`. Results
//! are collected in realization order and reduced sequentially, so the CSV and
//! JSON bytes depend only on the config, never on the worker count.

mod config;
mod experiments;
pub mod io;

use std::fs;
use std::time::Instant;

use rayon::prelude::*;

pub use config::{
    default_workers, validate_config, ExperimentConfig, ExperimentKind, FlowInitial, FlowParams, IdentityParams,
    LocalizationParams, SweepParams, WegnerParams,
};
pub use io::{RunManifest, Table};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// In-memory products of one experiment.
#[derive(Clone, Debug, Default)]
pub struct Outputs {
    /// `(file name, bytes)` in write order.
    pub files: Vec<(String, Vec<u8>)>,
    pub failures: Vec<String>,
}

impl Outputs {
    fn table(&mut self, name: impl Into<String>, table: &Table) -> Result<()> {
        self.files.push((name.into(), table.to_bytes()?));
        Ok(())
    }

    fn json(&mut self, name: impl Into<String>, value: &serde_json::Value) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.files.push((name.into(), bytes));
        Ok(())
    }

    pub fn file(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }
}

/// Maps `f` over realizations `0..config.realizations` on `config.workers` threads.
///
/// The result vector is in realization order whatever the scheduling.
pub fn par_realizations<T, F>(config: &ExperimentConfig, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(RngStream) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.max(1))
        .build()
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    let seed = config.master_seed;
    pool.install(|| {
        (0..config.realizations as u64)
            .into_par_iter()
            .map(|k| f(RngStream::new(seed, k)))
            .collect()
    })
}

/// Computes an experiment's outputs without touching the filesystem.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Outputs> {
    experiments::dispatch(config)
}

/// Runs the experiment and writes its outputs plus `manifest.json` into `config.output_dir`.
pub fn run(config: &ExperimentConfig) -> Result<RunManifest> {
    let start = Instant::now();
    let outputs = run_experiment(config)?;
    let dir = &config.output_dir;
    fs::create_dir_all(dir)?;
    let files = outputs
        .files
        .iter()
        .map(|(name, bytes)| io::write_atomic(dir, name, bytes))
        .collect::<Result<Vec<_>>>()?;
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_owned(),
        version: env!("CARGO_PKG_VERSION").to_owned(),
        config: config.clone(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        seeds: io::SeedRecord {
            master_seed: config.master_seed,
            streams: (0..config.realizations as u64).collect(),
        },
        outputs: files,
        failures: outputs.failures,
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    io::write_atomic(dir, RunManifest::FILE_NAME, &bytes)?;
    Ok(manifest)
}
