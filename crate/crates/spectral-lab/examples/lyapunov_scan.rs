//! Lyapunov exponents along the energy axis, plus the Kotani-dichotomy
//! diagnostic: periodic potentials keep L = 0 on their bands, aperiodic
//! finite-valued ones do not.
//!
//! Run: cargo run --release --example lyapunov_scan

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use spectral_lab::dos::kotani_diagnostic;
use spectral_lab::sl2::{lyapunov_estimate, EnergyGrid};

fn main() {
    // Free potential: L(0) = 0, L(3) = log((3+√5)/2).
    println!("free L(0)  = {:.6}", lyapunov_estimate(|_| 0.0, 0.0, 100_000));
    println!(
        "free L(3)  = {:.6} (exact {:.6})",
        lyapunov_estimate(|_| 0.0, 3.0, 100_000),
        ((3.0 + 5.0_f64.sqrt()) / 2.0).ln()
    );
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    println!(
        "iid {{0,3}} L(0) = {:.6}",
        lyapunov_estimate(|_| if rng.gen_bool(0.5) { 0.0 } else { 3.0 }, 0.0, 100_000)
    );

    // Kotani diagnostic: fraction of the (approximate) spectrum with small
    // Lyapunov exponent.
    let grid = EnergyGrid::with_points(-2.5, 3.5, 401).unwrap();
    let periodic = kotani_diagnostic(
        |_| [0.0, 1.0].iter().cycle().take(4000).cloned().collect(),
        1,
        &grid,
        4000,
        0.02,
    );
    println!(
        "periodic [0,1]: low-Lyapunov fraction {:.3} over {} in-spectrum cells",
        periodic.fraction, periodic.in_spectrum_cells
    );
    let grid = EnergyGrid::with_points(-2.5, 5.5, 401).unwrap();
    let iid = kotani_diagnostic(
        |phase| {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + phase as u64);
            (0..10_000)
                .map(|_| if rng.gen_bool(0.5) { 0.0 } else { 3.0 })
                .collect()
        },
        4,
        &grid,
        10_000,
        0.02,
    );
    println!(
        "iid {{0,3}}:     low-Lyapunov fraction {:.3} over {} in-spectrum cells",
        iid.fraction, iid.in_spectrum_cells
    );
}
