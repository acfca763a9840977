//! Continuity of the spectrum (Hausdorff metric) and the IDS (sup norm)
//! along rational approximants of the golden mean.
//!
//! Run: cargo run --release --example continuity_probes

use spectral_lab::quasiperiodic::{
    fibonacci_convergents, hausdorff_continuity_probe, ids_continuity_probe, Rational,
    SamplingFunction,
};
use spectral_lab::sl2::EnergyGrid;

fn main() {
    let f = SamplingFunction::cosine(1.0);
    // Keep this example quick: convergents up to q = 21. The acceptance
    // suite runs the full q <= 89 sequence.
    let seq: Vec<(Rational, SamplingFunction)> = fibonacci_convergents(21)
        .into_iter()
        .map(|a| (a, f.clone()))
        .collect();

    let h = hausdorff_continuity_probe(&seq, 2e-4, 1 << 15).unwrap();
    println!("hausdorff distances (consecutive): {:?}", h.consecutive);
    println!("hausdorff distances (to deepest):  {:?}", h.to_deepest);

    let grid = EnergyGrid::with_points(-3.0, 3.0, 6001).unwrap();
    let ids = ids_continuity_probe(&seq, &grid, 1024).unwrap();
    println!("ids sup distances (consecutive):   {:?}", ids.consecutive);
    println!("ids sup distances (to deepest):    {:?}", ids.to_deepest);
}
