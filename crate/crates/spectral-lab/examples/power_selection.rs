//! Power selection: how the residual measure(Σ(w) \ ∪ Σ(v wᵏ)) decays as
//! the power range grows.
//!
//! Run: cargo run --release --example power_selection

use spectral_lab::construction::choose_power;
use spectral_lab::periodic::Word;

fn main() {
    let v = Word::new(vec![1.0]).unwrap();
    let w = Word::new(vec![0.0]).unwrap();
    let choice = choose_power(&v, &w, 0.05 * 4.0, 64).unwrap();
    println!("target residual  < {:.3}", 0.05 * 4.0);
    println!("chosen power m = {}, residual {:.6}", choice.m, choice.residual);
    println!("residual history:");
    for (m, r) in choice.residual_history.iter().enumerate() {
        println!("  m = {:2}: {:.6}", m + 1, r);
    }
}
