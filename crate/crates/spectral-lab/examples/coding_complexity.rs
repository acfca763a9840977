//! Factor complexity of torus, skew-shift and interval-exchange codings:
//! linear, cubic-bounded and exactly affine growth.
//!
//! Run: cargo run --release --example coding_complexity

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use spectral_lab::codings::{complexity_bound_check, CodingSystem, TorusCell, GOLDEN_MEAN};

fn main() {
    let ns: Vec<usize> = (1..=30).collect();

    let sturmian = CodingSystem::sturmian(GOLDEN_MEAN, 0.0, 1.0);
    let p = complexity_bound_check(&sturmian, &ns, 100_000).unwrap();
    println!(
        "sturmian:  p(30) = {} (affine n+1), fitted C = {:.3} for p <= C n",
        p.p_values.last().unwrap(),
        p.fitted_c
    );

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let raw: Vec<f64> = (0..4).map(|_| rng.gen_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let lengths: Vec<f64> = raw.iter().map(|l| l / total).collect();
    let iet = CodingSystem::iet(vec![3, 0, 2, 1], lengths, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
    let p = complexity_bound_check(&iet, &ns, 200_000).unwrap();
    println!(
        "iet r=4:   p(30) = {} (exact affine 3n+1: {:?})",
        p.p_values.last().unwrap(),
        p.exact_affine
    );

    let skew = CodingSystem::skew(
        GOLDEN_MEAN,
        vec![
            TorusCell::new(vec![0.0, 0.0], vec![0.5, 0.5], 0.0),
            TorusCell::new(vec![0.5, 0.0], vec![1.0, 0.5], 1.0),
            TorusCell::new(vec![0.0, 0.5], vec![0.5, 1.0], 2.0),
            TorusCell::new(vec![0.5, 0.5], vec![1.0, 1.0], 3.0),
        ],
    )
    .unwrap();
    let p = complexity_bound_check(&skew, &ns, 1_000_000).unwrap();
    println!(
        "skew:      p(30) = {}, fitted C = {:.4} for p <= C n^3",
        p.p_values.last().unwrap(),
        p.fitted_c
    );
}
