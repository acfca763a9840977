//! Band spectra of periodic potential words: count, edges, measure.
//!
//! Run: cargo run --release --example band_spectrum

use spectral_lab::periodic::{band_spectrum, Word};

fn main() {
    for symbols in [
        vec![0.0],
        vec![0.0, 0.0],
        vec![0.0, 1.0],
        vec![0.0, 1.0, 1.0],
        vec![0.0, 3.0, 0.0, 3.0, 3.0],
    ] {
        let word = Word::new(symbols).unwrap();
        let bs = band_spectrum(&word).unwrap();
        println!("word {:?}", word.symbols());
        println!("  {} bands (as counted), {} after tangency merging, measure {:.6}",
            bs.band_count, bs.bands.band_count(), bs.bands.measure());
        for (i, (lo, hi)) in bs.raw_bands().iter().enumerate() {
            println!("  band {i}: [{lo:.9}, {hi:.9}]");
        }
    }

    // The spectrum of a word power is the same set.
    let w = Word::new(vec![0.0, 1.0]).unwrap();
    let a = band_spectrum(&w).unwrap().bands;
    let b = band_spectrum(&w.power(4)).unwrap().bands;
    println!(
        "hausdorff(bands(w), bands(w^4)) = {:.3e}",
        a.hausdorff_distance(&b).unwrap()
    );
}
