use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use spectral_lab::sl2::{direction_derivative_signs, EnergyGrid, TwoSidedWindow};

fn main() {
    // Criterion 6 pre-flight: 20 random {0,3}-words of length <= 20,
    // 2000-point grid.
    let mut rng = ChaCha8Rng::seed_from_u64(2026);
    let mut all_ok = true;
    for trial in 0..20 {
        let len = rng.gen_range(1..=20usize);
        let word: Vec<f64> = (0..len).map(|_| if rng.gen_bool(0.5) { 0.0 } else { 3.0 }).collect();
        let n = len;
        let window = TwoSidedWindow::from_fn(n, |l| word[(l.rem_euclid(len as i64)) as usize]);
        let k1 = rng.gen_range(1..=n);
        let k2 = rng.gen_range(1..=n);
        let grid = EnergyGrid::with_points(-5.0, 5.0, 2000).unwrap();
        match direction_derivative_signs(&window, &grid, k1, k2) {
            Ok(r) => {
                let ok = r.forward_violations.is_empty() && r.backward_violations.is_empty()
                    && r.crossings <= r.crossing_bound;
                if !ok {
                    all_ok = false;
                    println!("trial {trial} len {len} k1 {k1} k2 {k2}: viol fwd {} bwd {} crossings {}/{} retained {}",
                        r.forward_violations.len(), r.backward_violations.len(), r.crossings, r.crossing_bound, r.retained);
                    for v in r.forward_violations.iter().take(3) { println!("   fwd viol at E={v}"); }
                    for v in r.backward_violations.iter().take(3) { println!("   bwd viol at E={v}"); }
                }
            }
            Err(e) => { all_ok = false; println!("trial {trial} len {len} k1 {k1} k2 {k2}: ERROR {e}"); }
        }
    }
    println!("criterion 6 pre-flight all ok: {all_ok}");
}
