//! Deterministic property-test battery behind `spectral-lab verify`.
//!
//! Every check runs from fixed seeds and writes one result record; two runs
//! with the same config and seed produce bit-identical result files.

use crate::construction;
use crate::dos;
use crate::intervals::BandSet;
use crate::periodic::{self, Word};
use crate::quasiperiodic::{self as qp, Rational, SamplingFunction};
use crate::sl2::{self, EnergyGrid};
use crate::{codings, Result};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn word(symbols: &[f64]) -> Word {
    Word::new(symbols.to_vec()).expect("nonempty")
}

/// Run the full battery. Deterministic for a fixed seed.
pub fn run_battery(seed: u64) -> Result<VerifyReport> {
    let mut checks: Vec<CheckResult> = Vec::new();
    let mut push = |name: &str, passed: bool, detail: String| {
        checks.push(CheckResult {
            name: name.into(),
            passed,
            detail,
        });
    };

    // Band closed forms.
    {
        let bs = periodic::band_spectrum(&word(&[0.0]))?;
        let (lo, hi) = bs.bands.intervals()[0];
        let free_ok = (lo + 2.0).abs() < 1e-9 && (hi - 2.0).abs() < 1e-9;
        let bs = periodic::band_spectrum(&word(&[0.0, 1.0]))?;
        let raw = bs.raw_bands();
        let s17 = 17.0_f64.sqrt();
        let zero_one_ok = (raw[0].0 - (1.0 - s17) / 2.0).abs() < 1e-9
            && raw[0].1.abs() < 1e-9
            && (raw[1].0 - 1.0).abs() < 1e-9
            && (raw[1].1 - (1.0 + s17) / 2.0).abs() < 1e-9;
        push(
            "band_closed_forms",
            free_ok && zero_one_ok,
            format!("free band ({lo:.12}, {hi:.12}); quadratic edges {raw:?}"),
        );
    }

    // Trace-power and cyclic-shift invariance of the band set.
    {
        let w = word(&[0.0, 1.0, 1.0]);
        let base = periodic::band_spectrum(&w)?.bands;
        let pow = periodic::band_spectrum(&w.power(3))?.bands;
        let shift = periodic::band_spectrum(&w.cyclic_shift(1))?.bands;
        let d1 = base.hausdorff_distance(&pow)?;
        let d2 = base.hausdorff_distance(&shift)?;
        push(
            "band_set_power_shift_invariance",
            d1 < 1e-7 && d2 < 1e-7,
            format!("hausdorff(power) = {d1:.3e}, hausdorff(shift) = {d2:.3e}"),
        );
    }

    // Cocycle composition on random words.
    {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let mut worst = 0.0_f64;
        for _ in 0..50 {
            let lv = rng.gen_range(1..7);
            let lw = rng.gen_range(1..7);
            let v: Vec<f64> = (0..lv).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let wsym: Vec<f64> = (0..lw).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let e = rng.gen_range(-3.0..3.0);
            let mut vw = v.clone();
            vw.extend_from_slice(&wsym);
            let lhs = sl2::transfer(&vw, e)?;
            let rhs = sl2::transfer(&wsym, e)?.mul(&sl2::transfer(&v, e)?);
            let scale = lhs.norm().max(1.0);
            worst = worst
                .max((lhs.a - rhs.a).abs() / scale)
                .max((lhs.b - rhs.b).abs() / scale)
                .max((lhs.c - rhs.c).abs() / scale)
                .max((lhs.d - rhs.d).abs() / scale);
        }
        push(
            "transfer_cocycle_composition",
            worst < 1e-12,
            format!("max relative entry deviation {worst:.3e}"),
        );
    }

    // Interval algebra identities on seeded random sets.
    {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let random_set = |rng: &mut ChaCha8Rng| {
            let raw: Vec<(f64, f64)> = (0..5)
                .map(|_| {
                    let lo = rng.gen_range(-5.0..5.0);
                    (lo, lo + rng.gen_range(0.0..2.0))
                })
                .collect();
            BandSet::normalize(&raw).unwrap()
        };
        let mut worst = 0.0_f64;
        for _ in 0..50 {
            let a = random_set(&mut rng);
            let b = random_set(&mut rng);
            let lhs = a.union(&b).measure() + a.intersect(&b).measure();
            let rhs = a.measure() + b.measure();
            worst = worst.max((lhs - rhs).abs());
        }
        push(
            "interval_inclusion_exclusion",
            worst < 1e-9,
            format!("max identity deviation {worst:.3e}"),
        );
    }

    // Free IDS against the arccos closed form.
    {
        let n = 1000;
        let grid = EnergyGrid::with_points(-1.9, 1.9, 191)?;
        let ids = dos::ids_curve(|_| vec![0.0; n], 1, n, &grid);
        let mut worst = 0.0_f64;
        for (e, k) in ids.energies.iter().zip(&ids.k) {
            let expect = (-e / 2.0).acos() / std::f64::consts::PI;
            worst = worst.max((k - expect).abs());
        }
        push(
            "free_ids_arccos",
            worst < 5e-3,
            format!("max |k - arccos| = {worst:.3e} at N = {n}"),
        );
    }

    // Thouless formula at a hyperbolic energy.
    {
        let grid = EnergyGrid::new(3.0, 3.0 + 1e-9, 1.0)?;
        let report = dos::thouless_check(&word(&[0.0]), &grid)?;
        let expect = ((3.0 + 5.0_f64.sqrt()) / 2.0).ln();
        let e1 = (report.lyapunov[0] - expect).abs();
        let e2 = (report.log_potential[0] - expect).abs();
        push(
            "thouless_free_point",
            e1 < 1e-2 && e2 < 1e-2,
            format!("lyapunov err {e1:.3e}, integral err {e2:.3e}"),
        );
    }

    // Sturmian factor complexity p(n) = n + 1.
    {
        let sys = codings::CodingSystem::sturmian(codings::GOLDEN_MEAN, 0.0, 1.0);
        let sample = sys.orbit_coding(&[0.0], (0, 3000))?;
        let ok = (1..=25).all(|n| codings::complexity(&sample.symbols, n) == n + 1);
        push(
            "sturmian_complexity_affine",
            ok,
            "p(n) = n+1 for n <= 25".into(),
        );
    }

    // IET complexity p(n) = (r-1)n + 1 with seeded lengths.
    {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 3);
        let raw: Vec<f64> = (0..3).map(|_| rng.gen_range(0.2..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let lengths: Vec<f64> = raw.iter().map(|l| l / total).collect();
        let sys = codings::CodingSystem::iet(vec![2, 0, 1], lengths, vec![0.0, 1.0, 2.0])?;
        let profile = codings::complexity_bound_check(&sys, &(1..=10).collect::<Vec<_>>(), 20_000)?;
        push(
            "iet_complexity_affine",
            profile.exact_affine == Some(true),
            format!("p values {:?}", profile.p_values),
        );
    }

    // Power selection: nonincreasing residuals and budget met.
    {
        let v = word(&[1.0]);
        let w = word(&[0.0]);
        let choice = construction::choose_power(&v, &w, 0.3 * 4.0, 16)?;
        let monotone = choice
            .residual_history
            .windows(2)
            .all(|p| p[1] <= p[0] + 1e-9);
        push(
            "power_selection_monotone",
            monotone && choice.m >= 2,
            format!("m = {}, residual = {:.4}", choice.m, choice.residual),
        );
    }

    // Two construction stages with the geometric budget.
    {
        let seed_words = vec![word(&[0.0]), word(&[1.0])];
        let run = construction::run_construction(&seed_words, 2, 64)?;
        let entry = &run.ledger[1];
        let ok = entry.measured_loss < entry.budget.unwrap()
            && run.certificate >= run.certificate_floor() - 1e-9;
        push(
            "construction_two_stage_budget",
            ok,
            format!(
                "loss {:.6} < budget {:.6}; certificate {:.6}",
                entry.measured_loss,
                entry.budget.unwrap(),
                run.certificate
            ),
        );
    }

    // Rational spectrum of the two-valued step at frequency 0.
    {
        let f = SamplingFunction::step(
            vec![Rational::new(0, 1), Rational::new(1, 2)],
            vec![0.0, 1.0],
        )?;
        let s = qp::rational_spectrum(Rational::new(0, 1), &f, 1e-6, 1 << 14)?;
        let (lo, hi) = s.inner.intervals()[0];
        let ok = s.exact
            && s.inner.band_count() == 1
            && (lo + 2.0).abs() < 1e-8
            && (hi - 3.0).abs() < 1e-8;
        push(
            "rational_spectrum_step_union",
            ok,
            format!("Σ = [{lo:.9}, {hi:.9}]"),
        );
    }

    // Gap closing on the manufactured two-valued instance.
    {
        let g = SamplingFunction::step(
            vec![Rational::new(0, 1), Rational::new(1, 2)],
            vec![0.0, 4.02],
        )?;
        let (h, report) = qp::gap_closing_perturbation(
            Rational::new(0, 1),
            &g,
            (1.0, 3.0),
            0.05,
            1e-3,
            1e-4,
        )?;
        let mut max_dev = 0.0_f64;
        for i in 0..50_000 {
            let x = i as f64 / 50_000.0;
            max_dev = max_dev.max((h.eval(x) - g.eval(x)).abs());
        }
        let ok = report.verified() && report.total_support < 1e-3 && max_dev <= 0.05 + 1e-12;
        push(
            "gap_closing_small_instance",
            ok,
            format!(
                "gaps {:?}, support {:.6}, ||g-h|| = {:.6}, uncovered {}",
                report.gaps,
                report.total_support,
                max_dev,
                report.uncovered.len()
            ),
        );
    }

    // Polynomially bounded states: free case keeps in-band energies.
    {
        let window = sl2::TwoSidedWindow::from_fn(30, |_| 0.0);
        let lambda = BandSet::single(-1.0, 1.0)?;
        let set = dos::poly_bounded_energy_set(&window, 1.5, &lambda, 0.05)?;
        push(
            "poly_bounded_free_band",
            set.measure > 0.9 * lambda.measure(),
            format!("kept measure {:.4} of {:.4}", set.measure, lambda.measure()),
        );
    }

    Ok(VerifyReport {
        seed,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn battery_passes_and_is_deterministic() {
        let a = run_battery(7).unwrap();
        assert!(a.all_passed(), "{:#?}", a.checks.iter().filter(|c| !c.passed).collect::<Vec<_>>());
        let b = run_battery(7).unwrap();
        let ja = serde_json::to_string(&a).unwrap();
        let jb = serde_json::to_string(&b).unwrap();
        assert_eq!(ja, jb);
    }
}
