//! Integrated density of states: truncation counting against the free
//! closed form, the Thouless-formula cross check, and the singularity
//! indicator on a Fibonacci-coded potential.
//!
//! Run: cargo run --release --example ids_and_thouless

use spectral_lab::codings::{CodingSystem, GOLDEN_MEAN};
use spectral_lab::dos::{ids_curve, singularity_indicator, thouless_check};
use spectral_lab::periodic::Word;
use spectral_lab::sl2::EnergyGrid;

fn main() {
    // Free IDS vs (1/π) arccos(-E/2).
    let n = 2000;
    let grid = EnergyGrid::with_points(-1.9, 1.9, 381).unwrap();
    let ids = ids_curve(|_| vec![0.0; n], 1, n, &grid);
    let worst = ids
        .energies
        .iter()
        .zip(&ids.k)
        .map(|(e, k)| (k - (-e / 2.0).acos() / std::f64::consts::PI).abs())
        .fold(0.0, f64::max);
    println!("free IDS vs arccos: max deviation {worst:.2e} at N = {n}");

    // Thouless formula for the period-2 word away from band edges.
    let w = Word::new(vec![0.0, 1.0]).unwrap();
    let grid = EnergyGrid::new(-1.2, -0.3, 0.05).unwrap();
    let report = thouless_check(&w, &grid).unwrap();
    println!("thouless max error on [-1.2,-0.3]: {:.2e}", report.max_error);

    // Singularity indicator: length needed to carry 90% of dk shrinks under
    // refinement for the Fibonacci-coded potential.
    let sys = CodingSystem::sturmian(GOLDEN_MEAN, 0.0, 3.0);
    for points in [501, 1001, 2001] {
        let grid = EnergyGrid::with_points(-2.5, 5.5, points).unwrap();
        let window: Vec<f64> = sys
            .orbit_coding(&[0.0], (0, 3999))
            .unwrap()
            .symbols;
        let ids = ids_curve(|_| window.clone(), 1, 4000, &grid);
        println!(
            "indicator(mass 0.9) at {points} grid points: {:.4}",
            singularity_indicator(&ids, 0.9)
        );
    }
}
