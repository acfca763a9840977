//! Energies carrying polynomially bounded eigenfunctions on growing windows:
//! the measure of the surviving set decreases as the window widens, the
//! finite-size mechanism behind singularity of the density of states.
//!
//! Run: cargo run --release --example poly_bounded_decay

use spectral_lab::codings::{CodingSystem, GOLDEN_MEAN};
use spectral_lab::dos::poly_bounded_energy_set;
use spectral_lab::quasiperiodic::{rational_spectrum, Rational, SamplingFunction};
use spectral_lab::sl2::TwoSidedWindow;

fn main() {
    // Outer spectrum estimate from a deep rational approximant of the
    // golden mean, slightly dilated.
    let f = SamplingFunction::step(
        vec![Rational::new(0, 1), Rational::new(34, 89)],
        vec![0.0, 3.0],
    )
    .unwrap();
    let lambda = rational_spectrum(Rational::new(55, 89), &f, 1e-6, 1 << 14)
        .unwrap()
        .outer
        .dilate(0.02);
    println!("outer spectrum estimate: measure {:.4}", lambda.measure());

    let sys = CodingSystem::sturmian(GOLDEN_MEAN, 0.0, 3.0);
    for half in [50usize, 100, 200, 400] {
        let coding = sys
            .orbit_coding(&[0.0], (-(half as i64), half as i64 - 1))
            .unwrap();
        let window = TwoSidedWindow::new(coding.symbols, half).unwrap();
        let set = poly_bounded_energy_set(&window, 4.0, &lambda, 2e-3).unwrap();
        println!("N = {half:3}: measure {:.5}", set.measure);
    }
}
