// Exact resolvent identities on one matrix, then the quadratic variation of
// the Stieltjes transform along a discretized flow path.
//
//     cargo run --example resolvent_identities

use hrmt::ensemble::{assemble, EnsembleConfig};
use hrmt::flow::{burgers_drift_check_with, drift_identity_check_with, evolve, martingale_qv_estimate, ward_identity_check, FlowConfig};
use hrmt::spectral::{eigendecompose, ComplexEnergy};
use hrmt::stats::{poisson_kernel_functional, poisson_kernel_functional_via_stieltjes};
use hrmt::RngStream;
use num_complex::Complex64;

fn main() -> hrmt::Result<()> {
    let h = assemble(&EnsembleConfig::ultrametric(5, 0.5), RngStream::new(6, 0))?;
    let sd = eigendecompose(&h)?;
    let z = ComplexEnergy::new(0.1, 0.05)?;

    let drift = drift_identity_check_with(&sd, z, 3, 17)?;
    println!("drift:   lhs = {:.6e}, rhs = {:.6e}, rel err {:.1e}", drift.lhs, drift.rhs, drift.relative_error);
    let burgers = burgers_drift_check_with(&sd, z);
    println!("burgers: lhs = {:.6e}, rhs = {:.6e}, rel err {:.1e}", burgers.lhs, burgers.rhs, burgers.relative_error);
    println!("ward:    rel err {:.1e}", ward_identity_check(&sd, 3, z)?);

    let n = sd.size() as f64;
    let w = Complex64::new(0.3, 1.0);
    let direct = poisson_kernel_functional(sd.eigenvalues(), w, 0.0, n)?;
    let via = poisson_kernel_functional_via_stieltjes(sd.eigenvalues(), w, 0.0, n)?;
    println!("poisson kernel functional: {direct:.12} vs {via:.12}");

    let path = evolve(&FlowConfig::path(h, 0.05, 32), RngStream::new(6, 1))?;
    let qv = martingale_qv_estimate(&path, z)?;
    println!(
        "path of {} steps: |martingale|^2 = {:.3e}, QV dominator = {:.3e}",
        qv.steps, qv.realized_square, qv.dominator
    );
    Ok(())
}
