// Builds one ultrametric matrix, prints its variance profile and checks the
// empirical entry variances against it.
//
//     cargo run --example build_ensemble

use hrmt::ensemble::{assemble, hier_distance, spread_m, variance_profile, EnsembleConfig, IndexSpace};
use hrmt::harness::io::{read_hmat, write_hmat};
use hrmt::RngStream;

const N_LEVELS: u32 = 4;
const C: f64 = 1.0;
const DRAWS: u64 = 2000;

fn main() -> hrmt::Result<()> {
    let config = EnsembleConfig::ultrametric(N_LEVELS, C);
    let space = IndexSpace::new(N_LEVELS)?;
    let profile = variance_profile(N_LEVELS, C, true)?;

    println!("N = {}, c = {C}, spread M = {:.4}", space.size(), spread_m(N_LEVELS, C)?);
    for d in 0..=N_LEVELS {
        println!("  variance at distance {d}: {:.6}", profile.at_distance(d));
    }
    println!("  row sum: {:.15}", profile.row_sums()[0]);

    // Empirical second moment of H(1, y) for every y.
    let mut second = vec![0.0; space.size()];
    for k in 0..DRAWS {
        let h = assemble(&config, RngStream::new(1, k))?;
        for (y, s) in second.iter_mut().enumerate() {
            *s += h.get(0, y).powi(2) / DRAWS as f64;
        }
    }
    for (y, s) in second.iter().enumerate().step_by(3) {
        let d = hier_distance(&space, 1, y + 1)?;
        println!("  E|H(1,{})|^2 ~ {s:.5} (profile {:.5}, d = {d})", y + 1, profile.get(1, y + 1)?);
    }

    // HMAT round trip.
    let h = assemble(&config, RngStream::new(1, 0))?;
    let mut bytes = Vec::new();
    write_hmat(&mut bytes, &h)?;
    let back = read_hmat(bytes.as_slice())?;
    println!("HMAT: {} bytes, round trip exact: {}", bytes.len(), back.as_slice() == h.as_slice());
    Ok(())
}
