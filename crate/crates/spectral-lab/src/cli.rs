//! Experiment runner behind the `spectral-lab` binary: subcommands wiring
//! the library modules to config files, deterministic seeding and result
//! persistence. CSV output is gnuplot-ready (comment headers carry the
//! resolution metadata); sets, stages and reports are JSON.

use crate::config::{
    Config, PotentialSpec, QpMode, SystemSpec,
};
use crate::construction;
use crate::dos;
use crate::periodic::{self, Word};
use crate::quasiperiodic::{self as qp, Rational};
use crate::sl2::EnergyGrid;
use crate::verify;
use crate::{codings, Error, Result};
use clap::{Parser, Subcommand};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "spectral-lab", about = "Band spectra, density of states and symbolic codings of ergodic Schrödinger operators")]
pub struct Cli {
    /// TOML config file; flags below override its [run] section.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (0 = rayon default).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// RNG seed for everything stochastic.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Band spectrum of one periodic word.
    Bands {
        /// Word symbols, comma-separated (e.g. "0,1,1").
        #[arg(long)]
        word: Option<String>,
    },
    /// Staged positive-measure subshift construction with budget ledger.
    Construct {
        /// Seed words: symbols comma-separated, words semicolon-separated
        /// (e.g. "0;1").
        #[arg(long)]
        seed_words: Option<String>,
        #[arg(long)]
        stages: Option<u32>,
        #[arg(long)]
        m_cap: Option<u32>,
        /// Budget schedule; only "geometric" is implemented.
        #[arg(long)]
        budget_schedule: Option<String>,
    },
    /// Complexity / transitivity / mass profiles of a symbolic coding.
    Coding,
    /// IDS, Lyapunov and singularity-indicator scans.
    Dos,
    /// Rational spectra, gap closing and continuity probes.
    Qp {
        /// spectrum | gap_close | continuity
        #[arg(long)]
        mode: Option<String>,
    },
    /// Deterministic property-test battery.
    Verify,
}

/// Exit codes: 0 success, 1 check failure, 2 usage error, 3 resolution or
/// budget error.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Parse { .. } | Error::BadSamplingFunction(_)
        | Error::BadCodingSystem(_) | Error::BadGrid(_) | Error::BadInterval { .. }
        | Error::ConstructionPrecondition(_) | Error::GapClosingPrecondition(_)
        | Error::EmptyWord | Error::EmptyBandSet => 2,
        Error::SolverResolution { .. }
        | Error::BudgetFailure { .. }
        | Error::SpectrumResolution { .. }
        | Error::WindowBudget { .. }
        | Error::HittingBudget { .. }
        | Error::StageTooDeep { .. }
        | Error::RefinementNeeded { .. } => 3,
        _ => 2,
    }
}

pub fn run(cli: Cli) -> i32 {
    match run_inner(cli) {
        Ok(all_passed) => {
            if all_passed {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn run_inner(cli: Cli) -> Result<bool> {
    let mut config = match &cli.config {
        Some(path) => Config::from_file(path)?,
        None => Config::default(),
    };
    if let Some(t) = cli.threads {
        config.run.threads = t;
    }
    if let Some(out) = &cli.out {
        config.run.out = out.display().to_string();
    }
    if let Some(seed) = cli.seed {
        config.run.seed = seed;
    }
    if config.run.threads > 0 {
        // Ignore failure if a global pool already exists (repeated calls in
        // one process).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(config.run.threads)
            .build_global();
    }

    match &cli.command {
        Command::Bands { word } => {
            if let Some(w) = word {
                config.bands.word = parse_symbols(w)?;
            }
            let out = prepare_out(&config, "bands")?;
            run_bands(&config, &out)?;
            Ok(true)
        }
        Command::Construct {
            seed_words,
            stages,
            m_cap,
            budget_schedule,
        } => {
            if let Some(s) = seed_words {
                config.construct.seed_words = parse_words(s)?;
            }
            if let Some(s) = stages {
                config.construct.stages = *s;
            }
            if let Some(m) = m_cap {
                config.construct.m_cap = *m;
            }
            if let Some(b) = budget_schedule {
                config.construct.budget_schedule = b.clone();
            }
            if config.construct.budget_schedule != "geometric" {
                return Err(Error::Config(format!(
                    "unknown budget schedule '{}'; only 'geometric' is implemented",
                    config.construct.budget_schedule
                )));
            }
            let out = prepare_out(&config, "construct")?;
            run_construct(&config, &out)?;
            Ok(true)
        }
        Command::Coding => {
            let out = prepare_out(&config, "coding")?;
            run_coding(&config, &out)?;
            Ok(true)
        }
        Command::Dos => {
            let out = prepare_out(&config, "dos")?;
            run_dos(&config, &out)?;
            Ok(true)
        }
        Command::Qp { mode } => {
            if let Some(m) = mode {
                config.qp.mode = match m.as_str() {
                    "spectrum" => QpMode::Spectrum,
                    "gap_close" => QpMode::GapClose,
                    "continuity" => QpMode::Continuity,
                    other => {
                        return Err(Error::Config(format!("unknown qp mode '{other}'")))
                    }
                };
            }
            let out = prepare_out(&config, "qp")?;
            run_qp(&config, &out)?;
            Ok(true)
        }
        Command::Verify => {
            let out = prepare_out(&config, "verify")?;
            let report = verify::run_battery(config.run.seed)?;
            for check in &report.checks {
                println!(
                    "{} {} — {}",
                    if check.passed { "PASS" } else { "FAIL" },
                    check.name,
                    check.detail
                );
            }
            write_json(&out.join("verify_results.json"), &report)?;
            Ok(report.all_passed())
        }
    }
}

fn parse_symbols(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("bad symbol '{t}': {e}")))
        })
        .collect()
}

fn parse_words(text: &str) -> Result<Vec<Vec<f64>>> {
    text.split(';').map(parse_symbols).collect()
}

fn prepare_out(config: &Config, subcommand: &str) -> Result<PathBuf> {
    let out = PathBuf::from(&config.run.out);
    std::fs::create_dir_all(&out)?;
    #[derive(Serialize)]
    struct Manifest<'a> {
        subcommand: &'a str,
        crate_version: &'a str,
        config: &'a Config,
    }
    write_json(
        &out.join("manifest.json"),
        &Manifest {
            subcommand,
            crate_version: env!("CARGO_PKG_VERSION"),
            config,
        },
    )?;
    Ok(out)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn run_bands(config: &Config, out: &Path) -> Result<()> {
    let word = Word::new(config.bands.word.clone())?;
    let bs = periodic::band_spectrum(&word)?;
    let mut csv = String::new();
    csv.push_str("# band spectrum of one periodic word\n");
    csv.push_str(&format!("# word = {:?}\n", word.symbols()));
    csv.push_str("# edge bisection width 1e-11; tangency tolerance 1e-9\n");
    csv.push_str("# columns: band_index, lo, hi\n");
    for (i, (lo, hi)) in bs.raw_bands().iter().enumerate() {
        csv.push_str(&format!("{i}, {lo:.12e}, {hi:.12e}\n"));
    }
    std::fs::write(out.join("bands.csv"), csv)?;
    #[derive(Serialize)]
    struct BandsResult {
        word: Vec<f64>,
        band_count: usize,
        merged: crate::intervals::BandSet,
        measure: f64,
    }
    write_json(
        &out.join("bands.json"),
        &BandsResult {
            word: word.symbols().to_vec(),
            band_count: bs.band_count,
            measure: bs.bands.measure(),
            merged: bs.bands,
        },
    )?;
    println!(
        "word {:?}: {} bands, measure {:.6}",
        word.symbols(),
        bs.band_count,
        periodic::band_spectrum(&word)?.bands.measure()
    );
    Ok(())
}

fn run_construct(config: &Config, out: &Path) -> Result<()> {
    let seed_words: Vec<Word> = config
        .construct
        .seed_words
        .iter()
        .map(|w| Word::new(w.clone()))
        .collect::<Result<_>>()?;
    let run = construction::run_construction(
        &seed_words,
        config.construct.stages,
        config.construct.m_cap,
    )?;
    for stage in &run.stages {
        construction::persist_stage(stage, &out.join(format!("stage_{}.json", stage.level)))?;
    }
    #[derive(Serialize)]
    struct LedgerOut<'a> {
        sigma1_measure: f64,
        certificate: f64,
        certificate_floor: f64,
        entries: &'a [construction::LedgerEntry],
    }
    write_json(
        &out.join("construction_ledger.json"),
        &LedgerOut {
            sigma1_measure: run.sigma1_measure(),
            certificate: run.certificate,
            certificate_floor: run.certificate_floor(),
            entries: &run.ledger,
        },
    )?;
    for e in &run.ledger {
        println!(
            "level {}: words {}, max len {}, measure {:.6}, loss {:.6} (budget {})",
            e.level,
            e.word_count,
            e.max_word_len,
            e.spectrum_measure,
            e.measured_loss,
            e.budget.map_or("-".into(), |b| format!("{b:.6}")),
        );
    }
    println!(
        "certificate {:.6} >= floor {:.6} (half of sigma1 = {:.6})",
        run.certificate,
        run.certificate_floor(),
        run.sigma1_measure() / 2.0
    );
    Ok(())
}

fn run_coding(config: &Config, out: &Path) -> Result<()> {
    let params = &config.coding;
    let sys = params.system.build()?;
    let profile = codings::complexity_bound_check(&sys, &params.n_values, params.sample_len)?;
    let mut csv = String::new();
    csv.push_str("# factor complexity profile\n");
    csv.push_str(&format!(
        "# sample_len = {}, exponent = {}, fitted_c = {:.6}\n",
        profile.sample_len, profile.exponent, profile.fitted_c
    ));
    csv.push_str("# columns: n, p(n)\n");
    for (n, p) in profile.n_values.iter().zip(&profile.p_values) {
        csv.push_str(&format!("{n}, {p}\n"));
    }
    std::fs::write(out.join("complexity.csv"), csv)?;

    let transitivity = codings::transitivity_profile(
        &sys,
        params.transitivity_n,
        params.transitivity_c,
        params.transitivity_exponent,
        params.phases,
        config.run.seed,
        params.orbit_budget,
    )?;
    let mass = codings::complexity_mass_profile(
        &sys,
        params.transitivity_n,
        params.mass_epsilon,
        config.run.seed,
    )?;
    let alpha: Vec<f64> = match &params.system {
        SystemSpec::Sturmian { alpha, .. } => vec![*alpha],
        SystemSpec::Torus { alpha, .. } => alpha.clone(),
        SystemSpec::Skew { alpha, .. } => vec![*alpha],
        SystemSpec::Iet { .. } => Vec::new(),
    };
    let margin = if alpha.is_empty() {
        None
    } else {
        Some(codings::diophantine_margin(
            &alpha,
            params.diophantine_tau,
            params.diophantine_k,
        ))
    };
    #[derive(Serialize)]
    struct CodingReport {
        complexity: codings::ComplexityProfile,
        transitivity: codings::TransitivityProfile,
        mass: codings::MassProfile,
        diophantine_margin: Option<f64>,
    }
    write_json(
        &out.join("coding_report.json"),
        &CodingReport {
            complexity: profile,
            transitivity,
            mass,
            diophantine_margin: margin,
        },
    )?;
    println!("coding profiles written to {}", out.display());
    Ok(())
}

/// Build one potential window per phase index from the configured source.
fn potential_sampler(
    spec: &PotentialSpec,
    n: usize,
    seed: u64,
) -> Result<Box<dyn Fn(usize) -> Vec<f64> + Sync + Send>> {
    match spec {
        PotentialSpec::Word { symbols } => {
            let w = Word::new(symbols.clone())?;
            let symbols = w.symbols().to_vec();
            Ok(Box::new(move |phase| {
                (0..n)
                    .map(|i| symbols[(i + phase) % symbols.len()])
                    .collect()
            }))
        }
        PotentialSpec::Coding { system } => {
            let sys = system.build()?;
            Ok(Box::new(move |phase| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (phase as u64).wrapping_mul(0x9e37)) ;
                let x0 = sys.random_point(&mut rng);
                sys.orbit_coding(&x0, (0, n as i64 - 1))
                    .expect("coding window")
                    .symbols
            }))
        }
        PotentialSpec::Iid { values } => {
            let values = values.clone();
            Ok(Box::new(move |phase| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (phase as u64).wrapping_mul(0x51ed));
                (0..n)
                    .map(|_| values[rng.gen_range(0..values.len())])
                    .collect()
            }))
        }
    }
}

fn run_dos(config: &Config, out: &Path) -> Result<()> {
    let params = &config.dos;
    let n = params.truncation;
    let sampler = potential_sampler(&params.potential, n, config.run.seed)?;
    // Default grid bounds from one sampled window.
    let probe = sampler(0);
    let vmin = probe.iter().cloned().fold(f64::INFINITY, f64::min);
    let vmax = probe.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = params.grid_lo.unwrap_or(vmin - 2.5);
    let hi = params.grid_hi.unwrap_or(vmax + 2.5);
    let grid = EnergyGrid::with_points(lo, hi, params.grid_points)?;
    let ids = dos::ids_curve(&sampler, params.phases, n, &grid);
    let kotani = dos::kotani_diagnostic(&sampler, params.phases.min(8), &grid, n.min(10_000), params.lyapunov_delta);
    let indicator = dos::singularity_indicator(&ids, params.indicator_mass);

    let mut csv = String::new();
    csv.push_str("# integrated density of states\n");
    csv.push_str(&format!(
        "# truncation = {n}, phases = {}, grid = [{lo}, {hi}] x {}\n",
        params.phases, params.grid_points
    ));
    csv.push_str("# columns: E, k(E)\n");
    for (e, k) in ids.energies.iter().zip(&ids.k) {
        csv.push_str(&format!("{e:.9e}, {k:.9e}\n"));
    }
    std::fs::write(out.join("ids.csv"), csv)?;

    #[derive(Serialize)]
    struct DosReport {
        kotani: dos::KotaniReport,
        indicator_mass: f64,
        singularity_indicator: f64,
        max_jump: f64,
        poly_bounded: Vec<dos::PolyBoundedSet>,
    }
    let mut poly = Vec::new();
    if params.run_poly_bounded {
        // Two-sided window from the phase-0 sample around its middle.
        let max_n = params.poly_half_widths.iter().max().cloned().unwrap_or(0);
        let long = potential_sampler(&params.potential, 2 * max_n, config.run.seed)?(0);
        let lambda = crate::intervals::BandSet::single(lo, hi)?;
        for &half in &params.poly_half_widths {
            let centered: Vec<f64> = long[max_n - half..max_n + half].to_vec();
            let window = crate::sl2::TwoSidedWindow::new(centered, half)?;
            poly.push(dos::poly_bounded_energy_set(
                &window,
                params.gamma,
                &lambda,
                params.poly_resolution,
            )?);
        }
    }
    write_json(
        &out.join("dos_report.json"),
        &DosReport {
            kotani,
            indicator_mass: params.indicator_mass,
            singularity_indicator: indicator,
            max_jump: ids.max_jump(),
            poly_bounded: poly,
        },
    )?;
    println!("dos scans written to {}", out.display());
    Ok(())
}

fn run_qp(config: &Config, out: &Path) -> Result<()> {
    let params = &config.qp;
    let alpha = Rational::new(params.alpha_num, params.alpha_den);
    let f = params.f.build()?;
    match params.mode {
        QpMode::Spectrum => {
            let s = qp::rational_spectrum(alpha, &f, params.spectrum_tol, params.spectrum_max_phases)?;
            write_json(&out.join("qp_spectrum.json"), &s)?;
            println!(
                "Σ_{{{}/{}}}: inner measure {:.6}, outer measure {:.6}, {} phases{}",
                alpha.num,
                alpha.den,
                s.inner.measure(),
                s.outer.measure(),
                s.phases_used,
                if s.exact { " (exact cells)" } else { "" }
            );
        }
        QpMode::GapClose => {
            let (h, report) = qp::gap_closing_perturbation(
                alpha,
                &f,
                params.interval,
                params.epsilon,
                params.support_budget,
                params.verification_tol,
            )?;
            #[derive(Serialize)]
            struct GapOut {
                report: qp::GapClosingReport,
                perturbed: qp::SamplingFunction,
            }
            write_json(
                &out.join("gap_closing.json"),
                &GapOut {
                    report: report.clone(),
                    perturbed: h,
                },
            )?;
            println!(
                "gaps closed: {} (support {:.6}, verified: {})",
                report.gaps.len(),
                report.total_support,
                report.verified()
            );
            if !report.verified() {
                return Err(Error::GapClosingPrecondition(format!(
                    "{} grid points uncovered",
                    report.uncovered.len()
                )));
            }
        }
        QpMode::Continuity => {
            let seq: Vec<(Rational, qp::SamplingFunction)> =
                qp::fibonacci_convergents(params.continuity_q_cap)
                    .into_iter()
                    .map(|a| (a, f.clone()))
                    .collect();
            let hausdorff = qp::hausdorff_continuity_probe(&seq, params.spectrum_tol, params.spectrum_max_phases)?;
            let vmax = f.sup_norm();
            let grid = EnergyGrid::with_points(-2.0 - vmax, 2.0 + vmax, params.continuity_grid_points)?;
            let ids = qp::ids_continuity_probe(&seq, &grid, params.continuity_phases)?;
            #[derive(Serialize)]
            struct ContinuityOut {
                hausdorff: qp::ContinuityReport,
                ids: qp::ContinuityReport,
            }
            write_json(
                &out.join("continuity.json"),
                &ContinuityOut {
                    hausdorff: hausdorff.clone(),
                    ids: ids.clone(),
                },
            )?;
            println!("hausdorff consecutive: {:?}", hausdorff.consecutive);
            println!("ids consecutive: {:?}", ids.consecutive);
        }
    }
    Ok(())
}

// Used by integration tests to drive the CLI in-process.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let _ = e.print();
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_words_splits() {
        assert_eq!(parse_words("0;1").unwrap(), vec![vec![0.0], vec![1.0]]);
        assert_eq!(
            parse_words("0,1;1,1").unwrap(),
            vec![vec![0.0, 1.0], vec![1.0, 1.0]]
        );
        assert!(parse_words("0;x").is_err());
    }

    #[test]
    fn exit_codes_by_error_class() {
        assert_eq!(exit_code_for(&Error::Config("x".into())), 2);
        assert_eq!(
            exit_code_for(&Error::BudgetFailure {
                budget: 1.0,
                m_cap: 2,
                best_residual: 2.0
            }),
            3
        );
    }
}
