//! Measure estimators behind the singularity criterion: how much cylinder
//! mass a polynomial orbit window visits, and how few cylinders carry most
//! of the measure.
//!
//! Run: cargo run --release --example transitivity_and_mass

use spectral_lab::codings::{
    complexity_mass_profile, dense_hitting_exponent, diophantine_margin, transitivity_profile,
    CodingSystem, GOLDEN_MEAN,
};

fn main() {
    let sys = CodingSystem::sturmian(GOLDEN_MEAN, 0.0, 1.0);

    let t = transitivity_profile(&sys, 10, 3.0, 2.0, 12, 5, 10_000_000).unwrap();
    println!(
        "transitivity: n = {}, window = {}, delta_hat = {:.4} ({:?})",
        t.n, t.window, t.delta_hat, t.method
    );

    let m = complexity_mass_profile(&sys, 8, 0.1, 5).unwrap();
    println!(
        "mass profile: {} cylinders of length {} carry {:.4} of the measure",
        m.word_count,
        2 * m.n + 1,
        m.mass_achieved
    );

    println!(
        "diophantine margin of the golden mean (tau=1, K=10^4): {:.4}",
        diophantine_margin(&[GOLDEN_MEAN], 1.0, 10_000)
    );

    let gammas = [0.1, 0.03, 0.01, 0.003, 0.001];
    let (times, slope) = dense_hitting_exponent(&sys, &gammas, 6, 6, 3, 10_000_000).unwrap();
    println!("dense hitting times {:?}", times);
    println!("fitted exponent of hitting time in 1/gamma: {slope:.3}");
}
