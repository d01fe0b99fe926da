// Wegner and Minami ratios of the Rosenzweig-Porter model over shrinking
// intervals, with the spectral-averaging statistic.
//
//     cargo run --example wegner_minami

use hrmt::harness::{run_experiment, validate_config};

fn main() -> hrmt::Result<()> {
    let config = validate_config(
        r#"{
            "experiment": "WegnerMinami",
            "ensemble": {"n": 7, "c": 0.5, "model": {"kind": "RosenzweigPorter", "potential": {"kind": "Uniform", "halfwidth": 1.0}}},
            "realizations": 60,
            "master_seed": 8,
            "wegner": {"length_multipliers": [4, 2, 1], "tiles": 16, "spectral_averaging": true}
        }"#,
    )?;
    let out = run_experiment(&config)?;
    for name in ["wegner.csv", "minami.csv", "spectral_averaging.csv"] {
        println!("{name}");
        print!("{}", String::from_utf8_lossy(out.file(name).unwrap_or_default()));
    }
    Ok(())
}
