// Bulk gap ratio and level counts on both sides of the transition, next to
// the Poisson and GOE reference values.
//
//     cargo run --example poisson_vs_goe

use hrmt::ensemble::{assemble, EnsembleConfig};
use hrmt::oracle::{reference_gap_ratio, ReferenceProcess};
use hrmt::spectral::eigenvalues;
use hrmt::stats::{bulk_window, counting_report, gap_ratio, mean_and_stderr, rescale_spectrum, Interval};
use hrmt::RngStream;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const N_LEVELS: u32 = 8;
const REALIZATIONS: u64 = 30;

fn main() -> hrmt::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    println!("Poisson reference r = {:.4}", 2.0 * std::f64::consts::LN_2 - 1.0);
    println!("GOE reference r ~ {:.4}", reference_gap_ratio(ReferenceProcess::GoeSmall, 20_000, &mut rng));

    for c in [1.0, -1.5] {
        let config = EnsembleConfig::ultrametric(N_LEVELS, c);
        let mut ratios = Vec::new();
        let mut counts = Vec::new();
        for k in 0..REALIZATIONS {
            let eigs = eigenvalues(&assemble(&config, RngStream::new(2, k))?)?;
            ratios.push(gap_ratio(&eigs, &bulk_window(&eigs, 0.2)?)?);
            let points = rescale_spectrum(&eigs, 0.0, eigs.len() as f64)?;
            counts.push(points.count(Interval::new(-2.0, 2.0)?) as f64);
        }
        let (r, se) = mean_and_stderr(&ratios);
        let report = counting_report(counts, 2);
        let m = &report.aux["moments"];
        println!("c = {c:>4}: r = {r:.4} ± {se:.4}, count mean {:.3}, variance/mean {:.3}", m[0], m[2]);
    }
    Ok(())
}
