// Gap ratio of the Rosenzweig-Porter model across the exponent c, through the
// experiment harness.
//
//     cargo run --example rosenzweig_porter

use hrmt::harness::{run_experiment, validate_config};

fn main() -> hrmt::Result<()> {
    let config = validate_config(
        r#"{
            "experiment": "GapRatioSweep",
            "ensemble": {"n": 8, "c": 0.5, "model": {"kind": "RosenzweigPorter", "potential": {"kind": "Uniform", "halfwidth": 1.0}}},
            "realizations": 20,
            "master_seed": 4,
            "sweep": {"c_values": [-1.5, -0.5, 0.5, 1.5]}
        }"#,
    )?;
    let out = run_experiment(&config)?;
    print!("{}", String::from_utf8_lossy(out.file("phase_diagram.csv").unwrap_or_default()));
    Ok(())
}
