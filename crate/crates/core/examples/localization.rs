// Eigenfunction-correlator mass outside a hierarchical ball, for the full
// ultrametric matrix and for its truncation.
//
//     cargo run --example localization

use hrmt::ensemble::{assemble, EnsembleConfig, IndexSpace};
use hrmt::spectral::eigendecompose;
use hrmt::stats::{localization_mass, median, outside_mass_all_sites, Window};
use hrmt::RngStream;

const REALIZATIONS: u64 = 20;

fn main() -> hrmt::Result<()> {
    for n in [6u32, 8] {
        let space = IndexSpace::new(n)?;
        let window = Window::new(0.0, (-0.9 * n as f64).exp2())?;
        let mut full = EnsembleConfig::ultrametric(n, 1.0);
        full.normalized = false;
        let mut pooled = Vec::new();
        for k in 0..REALIZATIONS {
            let sd = eigendecompose(&assemble(&full, RngStream::new(3, k))?)?;
            pooled.extend(outside_mass_all_sites(&sd, &space, n / 2, &window)?);
        }
        println!("n = {n}: median outside mass over sites and realizations = {:.3e}", median(&pooled));
    }

    let n = 8;
    let space = IndexSpace::new(n)?;
    let sd = eigendecompose(&assemble(&EnsembleConfig::truncated(n, 1.0, n / 2), RngStream::new(3, 0))?)?;
    let rep = localization_mass(&sd, &space, 1, n / 2, &Window::new(0.0, 0.5)?)?;
    println!(
        "truncated n = {n}, m = {}: inside {:.4}, outside {}",
        n / 2,
        rep.inside_mass,
        rep.outside_mass
    );
    Ok(())
}
