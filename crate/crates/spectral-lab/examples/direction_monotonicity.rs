//! Stable directions of one-sided transfer products move monotonically in
//! the energy: forward products rotate one way, backward products the other.
//!
//! Run: cargo run --release --example direction_monotonicity

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use spectral_lab::sl2::{direction_derivative_signs, EnergyGrid, TwoSidedWindow};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for trial in 0..5 {
        let len = rng.gen_range(6..=20usize);
        let word: Vec<f64> = (0..len)
            .map(|_| if rng.gen_bool(0.5) { 0.0 } else { 3.0 })
            .collect();
        let n = len;
        let window = TwoSidedWindow::from_fn(n, |l| word[(l.rem_euclid(len as i64)) as usize]);
        let k1 = rng.gen_range(1..=n);
        let k2 = rng.gen_range(1..=n);
        let grid = EnergyGrid::with_points(-5.0, 5.0, 2000).unwrap();
        let report = direction_derivative_signs(&window, &grid, k1, k2).unwrap();
        println!(
            "trial {trial}: len {len}, k1 {k1}, k2 {k2}: retained {}, skipped {}, \
             sign violations {}+{}, crossings {} <= {}",
            report.retained,
            report.skipped,
            report.forward_violations.len(),
            report.backward_violations.len(),
            report.crossings,
            report.crossing_bound
        );
    }
}
