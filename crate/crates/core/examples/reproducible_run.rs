// Runs an experiment to disk twice with different worker counts, then checks
// the manifest checksums and that the CSV bytes agree.
//
//     cargo run --example reproducible_run

use hrmt::harness::{self, validate_config, RunManifest};

fn main() -> hrmt::Result<()> {
    let base = std::env::temp_dir().join(format!("hrmt-reproducible-{}", std::process::id()));
    let mut config = validate_config(
        r#"{
            "experiment": "PoissonTest",
            "ensemble": {"n": 6, "c": 1.0, "model": {"kind": "Ultrametric"}},
            "realizations": 24,
            "master_seed": 9
        }"#,
    )?;

    let mut dirs = Vec::new();
    for workers in [1, 4] {
        config.workers = workers;
        config.output_dir = base.join(format!("workers-{workers}"));
        let manifest = harness::run(&config)?;
        println!("workers = {workers}: {} files in {:.3} s", manifest.outputs.len(), manifest.wall_clock_seconds);
        dirs.push(config.output_dir.clone());
    }

    let manifest = RunManifest::load(&dirs[0])?;
    println!("checksum mismatches: {:?}", manifest.verify(&dirs[0])?);
    for file in &manifest.outputs {
        let a = std::fs::read(dirs[0].join(&file.path))?;
        let b = std::fs::read(dirs[1].join(&file.path))?;
        println!("  {} identical: {}", file.path, a == b);
    }
    std::fs::remove_dir_all(&base)?;
    Ok(())
}
