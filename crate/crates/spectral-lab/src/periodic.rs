//! Periodic Schrödinger words: discriminant, band spectrum, rotation number
//! and the exact periodic integrated density of states.
//!
//! The discriminant of a word of length n is the trace of its monodromy
//! product, a degree-n polynomial in the energy. Its sublevel set
//! `{|D| <= 2}` is a union of exactly n closed bands. The solver never
//! expands polynomial coefficients (hopelessly ill-conditioned past n ≈ 30);
//! it evaluates D through renormalized matrix products and brackets the 2n
//! roots of D = ±2 between critical points of D, where D is monotone.

use crate::intervals::BandSet;
use crate::sl2::{self, Mat2};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Words longer than this are refused by the band solver; bracketing starts
/// from an 8n-point grid and must stay desk-scale.
pub const WORD_LEN_CAP: usize = 20_000;

/// |critical value ∓ 2| below this counts as a band tangency (double root).
const TANGENCY_TOL: f64 = 1e-9;

/// Absolute bisection width for band edges.
const EDGE_TOL: f64 = 1e-11;

/// Finite sequence over a finite real alphabet; a periodic potential block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Word {
    symbols: Vec<f64>,
}

impl Word {
    pub fn new(symbols: Vec<f64>) -> Result<Word> {
        if symbols.is_empty() {
            return Err(Error::EmptyWord);
        }
        Ok(Word { symbols })
    }

    pub fn symbols(&self) -> &[f64] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut symbols = self.symbols.clone();
        symbols.extend_from_slice(&other.symbols);
        Word { symbols }
    }

    pub fn power(&self, k: usize) -> Word {
        assert!(k >= 1, "power must be >= 1");
        let mut symbols = Vec::with_capacity(self.symbols.len() * k);
        for _ in 0..k {
            symbols.extend_from_slice(&self.symbols);
        }
        Word { symbols }
    }

    pub fn cyclic_shift(&self, by: usize) -> Word {
        let n = self.symbols.len();
        let by = by % n;
        let mut symbols = self.symbols[by..].to_vec();
        symbols.extend_from_slice(&self.symbols[..by]);
        Word { symbols }
    }

    pub fn min_symbol(&self) -> f64 {
        self.symbols.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_symbol(&self) -> f64 {
        self.symbols
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Distinct symbol values, sorted. The alphabet actually used.
    pub fn alphabet(&self) -> Vec<f64> {
        let mut a = self.symbols.clone();
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        a.dedup();
        a
    }
}

impl TryFrom<Vec<f64>> for Word {
    type Error = Error;
    fn try_from(symbols: Vec<f64>) -> Result<Word> {
        Word::new(symbols)
    }
}

impl From<Word> for Vec<f64> {
    fn from(w: Word) -> Vec<f64> {
        w.symbols
    }
}

/// Discriminant D(E) = Tr A^{E,w}: saturates to ±∞ with the correct sign for
/// energies far outside the spectrum instead of overflowing.
pub fn discriminant(w: &Word, energy: f64) -> f64 {
    sl2::transfer_trace(&w.symbols, energy).expect("word is nonempty")
}

/// Discriminant and its energy derivative, both in scaled form (shared log
/// scale). The derivative of each one-step factor is [[1,0],[0,0]]; the pair
/// is propagated by the product rule and rescaled together.
fn discriminant_pair(w: &Word, energy: f64) -> (f64, f64, f64) {
    let mut m = Mat2::IDENTITY;
    let mut dm = Mat2::new(0.0, 0.0, 0.0, 0.0);
    let mut log_scale = 0.0_f64;
    for (i, &v) in w.symbols.iter().enumerate() {
        let step = sl2::schrodinger_step(energy, v);
        // d(step)/dE * m  +  step * dm
        dm = Mat2::new(m.a, m.b, 0.0, 0.0).add(&step.mul(&dm));
        m = step.mul(&m);
        if (i + 1) % sl2::RENORM_STRIDE == 0 {
            let n = m.norm().max(dm.norm() / 1e6);
            if n > 1e3 {
                m = m.scale(1.0 / n);
                dm = dm.scale(1.0 / n);
                log_scale += n.ln();
            }
        }
    }
    (m.trace(), dm.trace(), log_scale)
}

/// Discriminant value clamped to a finite range, plus its derivative sign.
fn disc_value(w: &Word, energy: f64) -> f64 {
    let (t, _, s) = discriminant_pair(w, energy);
    scaled_to_f64(t, s)
}

fn disc_derivative_sign(w: &Word, energy: f64) -> f64 {
    let (_, dt, _) = discriminant_pair(w, energy);
    dt.signum()
}

fn scaled_to_f64(t: f64, log_scale: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let log_abs = t.abs().ln() + log_scale;
    if log_abs > 700.0 {
        t.signum() * f64::INFINITY
    } else {
        t.signum() * log_abs.exp()
    }
}

/// Result of the band-edge solve: the merged closed set, the combinatorial
/// band count (= word length, counted before tangency merging), and the 2n
/// edges with the trace level (+2 / -2) each edge solves.
#[derive(Debug, Clone)]
pub struct BandSpectrum {
    pub bands: BandSet,
    pub band_count: usize,
    pub edges: Vec<(f64, i8)>,
}

impl BandSpectrum {
    /// Bands as (lo, hi) pairs before set-level merging.
    pub fn raw_bands(&self) -> Vec<(f64, f64)> {
        self.edges
            .chunks(2)
            .map(|pair| (pair[0].0, pair[1].0))
            .collect()
    }
}

/// Full band solve for a periodic word.
///
/// Brackets the n roots of D = 2 and the n roots of D = -2 (with
/// multiplicity; band tangencies count twice) between critical points of D,
/// located by adaptive sign-change search on D'. Fails with
/// [`Error::SolverResolution`] only when repeated refinement cannot certify
/// the counts.
pub fn band_spectrum(w: &Word) -> Result<BandSpectrum> {
    let n = w.len();
    if n > WORD_LEN_CAP {
        return Err(Error::WordTooLong {
            len: n,
            cap: WORD_LEN_CAP,
        });
    }
    let pad = 1e-3;
    let lo = w.min_symbol() - 2.0 - pad;
    let hi = w.max_symbol() + 2.0 + pad;

    let mut grid_mult = 8usize;
    let mut tangency_tol = TANGENCY_TOL;
    let mut last_found = 0usize;
    for _attempt in 0..6 {
        let crits = critical_points(w, lo, hi, grid_mult * n + 1);
        match edges_from_critical_points(w, lo, hi, &crits, tangency_tol) {
            Ok(edges) => {
                let raw: Vec<(f64, f64)> = edges
                    .chunks(2)
                    .map(|pair| (pair[0].0, pair[1].0))
                    .collect();
                let bands = BandSet::normalize(&raw)?;
                return Ok(BandSpectrum {
                    bands,
                    band_count: n,
                    edges,
                });
            }
            Err(found) => {
                last_found = found;
                if found < 2 * n {
                    // Missing roots: first look harder for critical points,
                    // then accept looser tangency detection.
                    if grid_mult < 64 {
                        grid_mult *= 2;
                    } else {
                        tangency_tol *= 10.0;
                    }
                } else {
                    // Overcount: tangency tolerance swallowed a genuine pair.
                    tangency_tol /= 10.0;
                }
                if tangency_tol > 1e-5 || tangency_tol < 1e-13 {
                    break;
                }
            }
        }
    }
    Err(Error::SolverResolution {
        expected: 2 * n,
        found: last_found,
        word_len: n,
    })
}

/// Critical points of D in (lo, hi): sign changes of D' on a uniform grid,
/// bisected to high precision. D' has exactly n-1 real roots.
fn critical_points(w: &Word, lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let mut crits = Vec::new();
    let step = (hi - lo) / (points - 1) as f64;
    let mut prev_x = lo;
    let mut prev_s = disc_derivative_sign(w, lo);
    for i in 1..points {
        let x = lo + i as f64 * step;
        let s = disc_derivative_sign(w, x);
        if s != prev_s && prev_s != 0.0 && s != 0.0 {
            let (mut a, mut b) = (prev_x, x);
            for _ in 0..60 {
                if b - a < 1e-13 {
                    break;
                }
                let mid = 0.5 * (a + b);
                if disc_derivative_sign(w, mid) == prev_s {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            crits.push(0.5 * (a + b));
        } else if s == 0.0 {
            crits.push(x);
        }
        prev_x = x;
        prev_s = if s != 0.0 { s } else { prev_s };
    }
    crits
}

/// Solve D = +2 and D = -2 on the monotone pieces cut by the critical
/// points. Returns the sorted 2n edges on success, or the number of roots
/// found on a count mismatch.
fn edges_from_critical_points(
    w: &Word,
    lo: f64,
    hi: f64,
    crits: &[f64],
    tangency_tol: f64,
) -> std::result::Result<Vec<(f64, i8)>, usize> {
    let n = w.len();
    let mut breakpoints = Vec::with_capacity(crits.len() + 2);
    breakpoints.push(lo);
    breakpoints.extend_from_slice(crits);
    breakpoints.push(hi);
    let values: Vec<f64> = breakpoints.iter().map(|&x| disc_value(w, x)).collect();

    let mut roots: Vec<(f64, i8)> = Vec::with_capacity(2 * n);
    for (level, label) in [(2.0, 1i8), (-2.0, -1i8)] {
        // Interior tangencies: critical value within tolerance of the level.
        for (i, &x) in breakpoints.iter().enumerate() {
            if i == 0 || i + 1 == breakpoints.len() {
                continue;
            }
            if (values[i] - level).abs() <= tangency_tol {
                roots.push((x, label));
                roots.push((x, label));
            }
        }
        // Transversal crossings on monotone pieces. Piece endpoints within
        // the tangency tolerance are treated as sitting exactly on the
        // level, so a tangency is never double-counted as a crossing.
        for i in 0..breakpoints.len() - 1 {
            let fa = values[i] - level;
            let fb = values[i + 1] - level;
            if fa.abs() <= tangency_tol || fb.abs() <= tangency_tol {
                continue;
            }
            if fa.signum() == fb.signum() {
                continue;
            }
            let (mut a, mut b) = (breakpoints[i], breakpoints[i + 1]);
            let fa_sign = fa.signum();
            for _ in 0..80 {
                if b - a < EDGE_TOL {
                    break;
                }
                let mid = 0.5 * (a + b);
                let fm = disc_value(w, mid) - level;
                if fm == 0.0 {
                    a = mid;
                    b = mid;
                    break;
                }
                if fm.signum() == fa_sign {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            roots.push((0.5 * (a + b), label));
        }
    }
    if roots.len() != 2 * n {
        return Err(roots.len());
    }
    roots.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(roots)
}

/// Rotation number θ(E) ∈ (0, 1/2) of the monodromy at an energy strictly
/// inside a band.
pub fn rotation_number(w: &Word, energy: f64) -> Result<f64> {
    let d = discriminant(w, energy);
    if d.abs() >= 2.0 - sl2::PARABOLIC_TOL {
        return Err(Error::OutsideBand {
            energy,
            disc_abs: d.abs(),
        });
    }
    sl2::rotation_angle(&sl2::transfer(&w.symbols, energy)?)
}

/// Precomputed band data for fast repeated IDS evaluation on one word.
#[derive(Debug, Clone)]
pub struct PeriodicIds {
    word: Word,
    spectrum: BandSpectrum,
}

impl PeriodicIds {
    pub fn new(word: Word) -> Result<PeriodicIds> {
        let spectrum = band_spectrum(&word)?;
        Ok(PeriodicIds { word, spectrum })
    }

    pub fn spectrum(&self) -> &BandSpectrum {
        &self.spectrum
    }

    /// Exact periodic IDS: (full bands below E + in-band rotation-number
    /// fraction) / n. Constant on gaps; 0 below and 1 above the spectrum.
    pub fn eval(&self, energy: f64) -> f64 {
        let n = self.word.len() as f64;
        let bands = self.spectrum.raw_bands();
        let labels: Vec<i8> = self.spectrum.edges.iter().map(|e| e.1).collect();
        // Locate E among the raw bands.
        let mut full_below = 0usize;
        for (j, &(blo, bhi)) in bands.iter().enumerate() {
            if energy > bhi {
                full_below = j + 1;
                continue;
            }
            if energy < blo {
                break;
            }
            // Inside band j (closed). Fraction by rotation angle.
            let d = discriminant(&self.word, energy);
            let frac = if d.abs() >= 2.0 - sl2::PARABOLIC_TOL {
                // At an edge within tolerance: 0 or 1 by which edge.
                if (energy - blo).abs() <= (energy - bhi).abs() {
                    0.0
                } else {
                    1.0
                }
            } else {
                let theta = sl2::rotation_angle(&sl2::transfer(self.word.symbols(), energy).unwrap())
                    .unwrap();
                let left_label = labels[2 * j];
                if left_label == 1 {
                    // D runs +2 -> -2: θ goes 0 -> 1/2.
                    2.0 * theta
                } else {
                    1.0 - 2.0 * theta
                }
            };
            return (full_below as f64 + frac) / n;
        }
        full_below as f64 / n
    }
}

/// One-off periodic IDS evaluation; use [`PeriodicIds`] for grids.
pub fn periodic_ids(w: &Word, energy: f64) -> Result<f64> {
    Ok(PeriodicIds::new(w.clone())?.eval(energy))
}
