//! The staged subshift construction: budget ledger and the lower-bound
//! certificate for the spectrum measure of the limit object.
//!
//! Run: cargo run --release --example positive_measure_construction

use spectral_lab::construction::{
    aperiodicity_check, gap_midpoints_hyperbolic, minimality_window_check, run_construction,
};
use spectral_lab::periodic::Word;

fn main() {
    let seed = vec![Word::new(vec![0.0]).unwrap(), Word::new(vec![1.0]).unwrap()];
    let run = run_construction(&seed, 3, 64).unwrap();

    println!("budget ledger:");
    for e in &run.ledger {
        println!(
            "  level {}: {} words (max len {}), spectrum measure {:.6}, loss {:.6}{}",
            e.level,
            e.word_count,
            e.max_word_len,
            e.spectrum_measure,
            e.measured_loss,
            e.budget
                .map_or(String::new(), |b| format!(" < budget {b:.6}")),
        );
    }
    println!(
        "certificate {:.6} (floor {:.6}, half of sigma1 {:.6})",
        run.certificate,
        run.certificate_floor(),
        run.sigma1_measure() / 2.0
    );

    let report = minimality_window_check(&run.stages[2], &run.stages[1], &run.stages[0]).unwrap();
    println!(
        "window checks: max gap {} <= bound {}, {} factors of length {} all occur: {}",
        report.max_gap,
        report.gap_bound,
        report.factors_checked,
        report.factor_len,
        report.passed()
    );
    let witness = aperiodicity_check(&run.stages[1], run.stages[0].concatenation.len());
    println!("aperiodicity witness found: {}", witness.is_witness());
    println!(
        "gap midpoints hyperbolic at last stage: {}",
        gap_midpoints_hyperbolic(run.stages.last().unwrap()).unwrap()
    );
}
