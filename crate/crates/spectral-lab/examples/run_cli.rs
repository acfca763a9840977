//! Drive the command-line runner in-process: write a config, run the
//! `bands` and `verify` subcommands, inspect the outputs.
//!
//! Run: cargo run --release --example run_cli

use spectral_lab::cli::run_from_args;

fn main() {
    let dir = std::env::temp_dir().join("spectral-lab-example");
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.display().to_string();

    let code = run_from_args([
        "spectral-lab", "bands", "--word", "0,1", "--out", &out, "--seed", "7",
    ]);
    println!("bands exit code: {code}");
    let csv = std::fs::read_to_string(dir.join("bands.csv")).unwrap();
    println!("{csv}");

    let code = run_from_args(["spectral-lab", "verify", "--out", &out, "--seed", "7"]);
    println!("verify exit code: {code}");
}
