//! Symbolic codings of torus translations, skew-shifts and interval exchange
//! transformations, with factor-complexity and transitivity estimators.
//!
//! A [`CodingSystem`] labels a partition of its phase space and codes orbits
//! into symbol sequences. Cylinder masses are computed geometrically (exact
//! interval/rectangle arithmetic) where the variant allows it, and by
//! Birkhoff orbit frequency otherwise; every profile records which method
//! produced it.

use crate::{Error, Result};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Orbit points closer than this to a partition boundary are logged; the
/// half-open convention is still applied.
pub const BOUNDARY_WARN_TOL: f64 = 1e-13;

fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Distance on the circle.
fn circle_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).abs() % 1.0;
    d.min(1.0 - d)
}

/// Half-open axis-aligned cell `∏ [lo_i, hi_i)` with a real label.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TorusCell {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub label: f64,
}

impl TorusCell {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, label: f64) -> TorusCell {
        TorusCell { lo, hi, label }
    }

    fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&xi, (&lo, &hi))| xi >= lo && xi < hi)
    }

    fn boundary_close(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).any(|(&xi, (&lo, &hi))| {
            (xi - lo).abs() < BOUNDARY_WARN_TOL || (xi - hi).abs() < BOUNDARY_WARN_TOL
        })
    }

    fn volume(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&lo, &hi)| hi - lo)
            .product()
    }
}

/// Torus translation, skew-shift or interval exchange, together with the
/// labeled partition generating the coding.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum CodingSystem {
    /// x ↦ x + α on T^d, coded by rectangles.
    Torus {
        alpha: Vec<f64>,
        partition: Vec<TorusCell>,
    },
    /// (x, y) ↦ (x + α, x + y) on T², coded by rectangles.
    Skew {
        alpha: f64,
        partition: Vec<TorusCell>,
    },
    /// Interval exchange of r subintervals of [0,1), coded by its intervals.
    Iet {
        permutation: Vec<usize>,
        lengths: Vec<f64>,
        labels: Vec<f64>,
    },
}

/// Symbol sequence over an index window, with boundary-proximity count.
#[derive(Debug, Clone)]
pub struct CodingSample {
    pub n_lo: i64,
    pub symbols: Vec<f64>,
    pub boundary_warnings: usize,
}

impl CodingSample {
    pub fn symbol_at(&self, m: i64) -> f64 {
        self.symbols[(m - self.n_lo) as usize]
    }
}

/// How cylinder masses were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeasureMethod {
    GeometricExact,
    BirkhoffFrequency { orbit_len: u64 },
}

impl CodingSystem {
    pub fn torus(alpha: Vec<f64>, partition: Vec<TorusCell>) -> Result<CodingSystem> {
        validate_rect_partition(alpha.len(), &partition)?;
        Ok(CodingSystem::Torus { alpha, partition })
    }

    pub fn skew(alpha: f64, partition: Vec<TorusCell>) -> Result<CodingSystem> {
        validate_rect_partition(2, &partition)?;
        Ok(CodingSystem::Skew { alpha, partition })
    }

    pub fn iet(permutation: Vec<usize>, lengths: Vec<f64>, labels: Vec<f64>) -> Result<CodingSystem> {
        let r = permutation.len();
        if r < 2 || lengths.len() != r || labels.len() != r {
            return Err(Error::BadCodingSystem(
                "need r >= 2 with one length and one label per interval".into(),
            ));
        }
        let mut seen = vec![false; r];
        for &p in &permutation {
            if p >= r || seen[p] {
                return Err(Error::BadCodingSystem("not a permutation".into()));
            }
            seen[p] = true;
        }
        // Irreducible: no proper prefix maps onto itself.
        for k in 1..r {
            if permutation[..k].iter().all(|&p| p < k) {
                return Err(Error::BadCodingSystem(format!(
                    "permutation is reducible at prefix {k}"
                )));
            }
        }
        if lengths.iter().any(|&l| l <= 0.0) {
            return Err(Error::BadCodingSystem("lengths must be positive".into()));
        }
        let total: f64 = lengths.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::BadCodingSystem(format!(
                "lengths must sum to 1 (got {total})"
            )));
        }
        Ok(CodingSystem::Iet {
            permutation,
            lengths,
            labels,
        })
    }

    /// Sturmian convenience: rotation by α with the two-interval partition
    /// split at 1-α, labeled by the two given values.
    pub fn sturmian(alpha: f64, label_low: f64, label_high: f64) -> CodingSystem {
        CodingSystem::Torus {
            alpha: vec![alpha],
            partition: vec![
                TorusCell::new(vec![0.0], vec![1.0 - alpha], label_low),
                TorusCell::new(vec![1.0 - alpha], vec![1.0], label_high),
            ],
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            CodingSystem::Torus { alpha, .. } => alpha.len(),
            CodingSystem::Skew { .. } => 2,
            CodingSystem::Iet { .. } => 1,
        }
    }

    /// The labels in partition order. Not necessarily distinct.
    pub fn labels(&self) -> Vec<f64> {
        match self {
            CodingSystem::Torus { partition, .. } | CodingSystem::Skew { partition, .. } => {
                partition.iter().map(|c| c.label).collect()
            }
            CodingSystem::Iet { labels, .. } => labels.clone(),
        }
    }

    /// At least two distinct label values?
    pub fn has_nontrivial_labels(&self) -> bool {
        let labels = self.labels();
        labels.iter().any(|&l| l != labels[0])
    }

    /// Labels are pairwise distinct (needed for exact cylinder geometry on
    /// multidimensional tori).
    fn labels_injective(&self) -> bool {
        let mut labels: Vec<u64> = self.labels().iter().map(|l| l.to_bits()).collect();
        let n = labels.len();
        labels.sort_unstable();
        labels.dedup();
        labels.len() == n
    }

    pub fn random_point(&self, rng: &mut impl Rng) -> Vec<f64> {
        (0..self.dimension()).map(|_| rng.gen_range(0.0..1.0)).collect()
    }

    fn step(&self, x: &mut [f64]) {
        match self {
            CodingSystem::Torus { alpha, .. } => {
                for (xi, &ai) in x.iter_mut().zip(alpha) {
                    *xi = frac(*xi + ai);
                }
            }
            CodingSystem::Skew { alpha, .. } => {
                let new_y = frac(x[0] + x[1]);
                x[0] = frac(x[0] + alpha);
                x[1] = new_y;
            }
            CodingSystem::Iet {
                permutation,
                lengths,
                ..
            } => {
                x[0] = iet_map(permutation, lengths, x[0]);
            }
        }
    }

    fn step_back(&self, x: &mut [f64]) {
        match self {
            CodingSystem::Torus { alpha, .. } => {
                for (xi, &ai) in x.iter_mut().zip(alpha) {
                    *xi = frac(*xi - ai);
                }
            }
            CodingSystem::Skew { alpha, .. } => {
                let new_x = frac(x[0] - alpha);
                x[1] = frac(x[1] - new_x);
                x[0] = new_x;
            }
            CodingSystem::Iet {
                permutation,
                lengths,
                ..
            } => {
                x[0] = iet_inverse_map(permutation, lengths, x[0]);
            }
        }
    }

    /// Label of the cell containing x, plus a boundary-proximity flag.
    fn label_at(&self, x: &[f64]) -> Result<(f64, bool)> {
        match self {
            CodingSystem::Torus { partition, .. } | CodingSystem::Skew { partition, .. } => {
                for cell in partition {
                    if cell.contains(x) {
                        return Ok((cell.label, cell.boundary_close(x)));
                    }
                }
                Err(Error::BadCodingSystem(format!(
                    "point {x:?} not covered by the partition"
                )))
            }
            CodingSystem::Iet {
                lengths, labels, ..
            } => {
                let (idx, near) = iet_interval_index(lengths, x[0]);
                Ok((labels[idx], near))
            }
        }
    }

    /// Code the orbit of `x0` over the inclusive index window
    /// `range = [n_lo, n_hi]`: symbol m is the label at T^m x0.
    pub fn orbit_coding(&self, x0: &[f64], range: (i64, i64)) -> Result<CodingSample> {
        let (n_lo, n_hi) = range;
        if n_lo > n_hi {
            return Err(Error::BadCodingSystem(format!(
                "empty coding range [{n_lo}, {n_hi}]"
            )));
        }
        if x0.len() != self.dimension() {
            return Err(Error::BadCodingSystem(format!(
                "phase point dimension {} != system dimension {}",
                x0.len(),
                self.dimension()
            )));
        }
        let mut warnings = 0usize;
        let mut symbols = vec![0.0; (n_hi - n_lo + 1) as usize];
        // Backward sweep (indices n_lo..0), then forward (0..=n_hi).
        let mut x: Vec<f64> = x0.to_vec();
        if n_lo < 0 {
            for m in (n_lo..0).rev() {
                self.step_back(&mut x);
                let (label, near) = self.label_at(&x)?;
                if near {
                    warnings += 1;
                }
                symbols[(m - n_lo) as usize] = label;
            }
        }
        let mut x: Vec<f64> = x0.to_vec();
        for m in 0..=n_hi {
            if m >= n_lo {
                let (label, near) = self.label_at(&x)?;
                if near {
                    warnings += 1;
                }
                symbols[(m - n_lo) as usize] = label;
            }
            self.step(&mut x);
        }
        Ok(CodingSample {
            n_lo,
            symbols,
            boundary_warnings: warnings,
        })
    }
}

fn validate_rect_partition(dim: usize, partition: &[TorusCell]) -> Result<()> {
    if partition.is_empty() {
        return Err(Error::BadCodingSystem("empty partition".into()));
    }
    for cell in partition {
        if cell.lo.len() != dim || cell.hi.len() != dim {
            return Err(Error::BadCodingSystem("cell dimension mismatch".into()));
        }
        for (&lo, &hi) in cell.lo.iter().zip(&cell.hi) {
            if !(0.0 <= lo && lo < hi && hi <= 1.0) {
                return Err(Error::BadCodingSystem(format!(
                    "cell interval [{lo}, {hi}) is not inside [0, 1]"
                )));
            }
        }
    }
    // Pairwise disjoint (open-overlap test per axis) and total volume 1.
    for (i, a) in partition.iter().enumerate() {
        for b in partition.iter().skip(i + 1) {
            let overlap = a
                .lo
                .iter()
                .zip(&a.hi)
                .zip(b.lo.iter().zip(&b.hi))
                .all(|((&alo, &ahi), (&blo, &bhi))| alo.max(blo) < ahi.min(bhi));
            if overlap {
                return Err(Error::BadCodingSystem("cells overlap".into()));
            }
        }
    }
    let total: f64 = partition.iter().map(TorusCell::volume).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::BadCodingSystem(format!(
            "partition volume {total} != 1"
        )));
    }
    Ok(())
}

// --- interval exchange internals ---------------------------------------------

fn iet_breakpoints(lengths: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut breaks = Vec::with_capacity(lengths.len());
    for &l in lengths {
        breaks.push(acc);
        acc += l;
    }
    breaks
}

/// Image start of each domain interval: interval j lands at slot π(j).
fn iet_destinations(permutation: &[usize], lengths: &[f64]) -> Vec<f64> {
    let r = lengths.len();
    let mut dest = vec![0.0; r];
    for j in 0..r {
        let mut start = 0.0;
        for i in 0..r {
            if permutation[i] < permutation[j] {
                start += lengths[i];
            }
        }
        dest[j] = start;
    }
    dest
}

fn iet_interval_index(lengths: &[f64], x: f64) -> (usize, bool) {
    let breaks = iet_breakpoints(lengths);
    let mut idx = lengths.len() - 1;
    for j in 0..breaks.len() {
        let end = if j + 1 < breaks.len() { breaks[j + 1] } else { 1.0 };
        if x >= breaks[j] && x < end {
            idx = j;
            break;
        }
    }
    let near = breaks
        .iter()
        .chain(std::iter::once(&1.0))
        .any(|&b| (x - b).abs() < BOUNDARY_WARN_TOL);
    (idx, near)
}

fn iet_map(permutation: &[usize], lengths: &[f64], x: f64) -> f64 {
    let (j, _) = iet_interval_index(lengths, x);
    let breaks = iet_breakpoints(lengths);
    let dest = iet_destinations(permutation, lengths);
    frac(x - breaks[j] + dest[j])
}

fn iet_inverse_map(permutation: &[usize], lengths: &[f64], y: f64) -> f64 {
    let breaks = iet_breakpoints(lengths);
    let dest = iet_destinations(permutation, lengths);
    for j in 0..lengths.len() {
        if y >= dest[j] && y < dest[j] + lengths[j] {
            return frac(y - dest[j] + breaks[j]);
        }
    }
    // y == 1.0 - ulp edge; clamp to the last image interval.
    let j = (0..lengths.len())
        .max_by(|&a, &b| {
            (dest[a] + lengths[a])
                .partial_cmp(&(dest[b] + lengths[b]))
                .unwrap()
        })
        .unwrap();
    frac(y - dest[j] + breaks[j])
}

// --- factor complexity --------------------------------------------------------

fn word_key(symbols: &[f64]) -> Vec<u64> {
    symbols.iter().map(|s| s.to_bits()).collect()
}

/// Number of distinct length-n factors of the sample. A short sample can
/// only undercount, so the value is a lower bound on the true p(n).
pub fn complexity(seq: &[f64], n: usize) -> usize {
    if n == 0 || seq.len() < n {
        return 0;
    }
    let mut set: std::collections::HashSet<Vec<u64>> = std::collections::HashSet::new();
    for win in seq.windows(n) {
        set.insert(word_key(win));
    }
    set.len()
}

/// Empirical complexity profile with the smallest constant making
/// p(n) ≤ C·n^e hold over the sampled range; e is the variant's polynomial
/// degree (d for a torus, 3 for the skew-shift, 1 for an IET).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComplexityProfile {
    pub n_values: Vec<usize>,
    pub p_values: Vec<usize>,
    pub exponent: f64,
    pub fitted_c: f64,
    /// For IETs: does p(n) = (r-1)n + 1 hold exactly on the range?
    pub exact_affine: Option<bool>,
    /// Sample length the counts were computed from.
    pub sample_len: usize,
}

impl ComplexityProfile {
    /// p(n) must be nondecreasing and grow at most by the alphabet factor.
    pub fn monotonicity_ok(&self, alphabet_size: usize) -> bool {
        self.p_values.windows(2).zip(self.n_values.windows(2)).all(|(p, n)| {
            p[1] >= p[0] && (n[1] != n[0] + 1 || p[1] <= p[0] * alphabet_size)
        })
    }
}

/// Count factors of the natural coding along a long orbit and fit the
/// variant's polynomial complexity bound.
pub fn complexity_bound_check(
    sys: &CodingSystem,
    n_values: &[usize],
    sample_len: usize,
) -> Result<ComplexityProfile> {
    let x0 = default_phase(sys);
    let sample = sys.orbit_coding(&x0, (0, sample_len as i64 - 1))?;
    let exponent = match sys {
        CodingSystem::Torus { alpha, .. } => alpha.len() as f64,
        CodingSystem::Skew { .. } => 3.0,
        CodingSystem::Iet { .. } => 1.0,
    };
    let mut p_values = Vec::with_capacity(n_values.len());
    for &n in n_values {
        p_values.push(complexity(&sample.symbols, n));
    }
    let fitted_c = n_values
        .iter()
        .zip(&p_values)
        .map(|(&n, &p)| p as f64 / (n as f64).powf(exponent))
        .fold(0.0, f64::max);
    let exact_affine = match sys {
        CodingSystem::Iet { permutation, .. } => {
            let r = permutation.len();
            Some(
                n_values
                    .iter()
                    .zip(&p_values)
                    .all(|(&n, &p)| p == (r - 1) * n + 1),
            )
        }
        _ => None,
    };
    Ok(ComplexityProfile {
        n_values: n_values.to_vec(),
        p_values,
        exponent,
        fitted_c,
        exact_affine,
        sample_len,
    })
}

/// A generic, boundary-avoiding base point.
fn default_phase(sys: &CodingSystem) -> Vec<f64> {
    match sys {
        CodingSystem::Torus { alpha, .. } => vec![0.0; alpha.len()],
        CodingSystem::Skew { .. } => vec![0.0, 0.0],
        // 0 is an interval endpoint; start mid-first-interval instead.
        CodingSystem::Iet { lengths, .. } => vec![lengths[0] * 0.5],
    }
}

// --- cylinder masses ----------------------------------------------------------

/// Subset of the circle as disjoint half-open intervals in [0,1).
#[derive(Debug, Clone)]
struct CircleSet {
    parts: Vec<(f64, f64)>,
}

impl CircleSet {
    fn full() -> CircleSet {
        CircleSet {
            parts: vec![(0.0, 1.0)],
        }
    }

    fn measure(&self) -> f64 {
        self.parts.iter().map(|(a, b)| b - a).sum()
    }

    /// Intersect with the arc [lo, lo+len) taken mod 1.
    fn intersect_arc(&mut self, lo: f64, len: f64) {
        let lo = frac(lo);
        let hi = lo + len;
        let pieces: Vec<(f64, f64)> = if hi <= 1.0 {
            vec![(lo, hi)]
        } else {
            vec![(lo, 1.0), (0.0, hi - 1.0)]
        };
        let mut out = Vec::new();
        for &(plo, phi) in &self.parts {
            for &(alo, ahi) in &pieces {
                let l = plo.max(alo);
                let h = phi.min(ahi);
                if l < h {
                    out.push((l, h));
                }
            }
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        self.parts = out;
    }
}

/// Exact Lebesgue mass of the cylinder `[w]_{n_lo..}` for a torus coding
/// with injective labels: per axis, intersect the pulled-back cell arcs.
fn torus_cylinder_measure(
    alpha: &[f64],
    partition: &[TorusCell],
    label_to_cell: &HashMap<u64, usize>,
    word: &[f64],
    n_lo: i64,
) -> f64 {
    let d = alpha.len();
    let mut axes: Vec<CircleSet> = vec![CircleSet::full(); d];
    for (offset, &sym) in word.iter().enumerate() {
        let m = n_lo + offset as i64;
        let cell = match label_to_cell.get(&sym.to_bits()) {
            Some(&c) => &partition[c],
            None => return 0.0,
        };
        for i in 0..d {
            let shift = -(m as f64) * alpha[i];
            axes[i].intersect_arc(cell.lo[i] + shift, cell.hi[i] - cell.lo[i]);
        }
    }
    axes.iter().map(CircleSet::measure).product()
}

/// Exact cylinder mass table over the window [n_lo, n_hi] for one-dimensional
/// systems (circle rotation, IET): decompose [0,1) into coding cells.
fn one_dim_cylinder_table(
    sys: &CodingSystem,
    n_lo: i64,
    n_hi: i64,
) -> Result<HashMap<Vec<u64>, f64>> {
    // Collect partition breakpoints pulled back through every power in the
    // window: the coding word is constant between consecutive pullbacks.
    let base_breaks: Vec<f64> = match sys {
        CodingSystem::Torus { partition, .. } => {
            partition.iter().flat_map(|c| vec![c.lo[0], c.hi[0]]).collect()
        }
        CodingSystem::Iet { lengths, .. } => {
            let mut b = iet_breakpoints(lengths);
            b.push(1.0);
            b
        }
        CodingSystem::Skew { .. } => {
            return Err(Error::BadCodingSystem(
                "skew-shift cylinders have no one-dimensional cell table".into(),
            ))
        }
    };
    let mut cuts: Vec<f64> = Vec::new();
    for m in n_lo..=n_hi {
        for &b in &base_breaks {
            let mut x = vec![frac(b)];
            // Pull b back m steps: apply the inverse map m times (forward
            // |m| times when m < 0).
            if m >= 0 {
                for _ in 0..m {
                    sys.step_back(&mut x);
                }
            } else {
                for _ in 0..(-m) {
                    sys.step(&mut x);
                }
            }
            cuts.push(x[0]);
        }
    }
    cuts.push(0.0);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let mut table: HashMap<Vec<u64>, f64> = HashMap::new();
    for i in 0..cuts.len() {
        let lo = cuts[i];
        let hi = if i + 1 < cuts.len() { cuts[i + 1] } else { 1.0 };
        if hi - lo < 1e-14 {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let sample = sys.orbit_coding(&[mid], (n_lo, n_hi))?;
        *table.entry(word_key(&sample.symbols)).or_insert(0.0) += hi - lo;
    }
    Ok(table)
}

/// Mass of the union of the given (distinct) cylinders, by the best method
/// the system supports.
fn union_cylinder_mass(
    sys: &CodingSystem,
    words: &std::collections::HashSet<Vec<u64>>,
    n: usize,
    seed: u64,
) -> Result<(f64, MeasureMethod)> {
    match sys {
        CodingSystem::Torus { alpha, partition } if sys.labels_injective() => {
            let label_to_cell: HashMap<u64, usize> = partition
                .iter()
                .enumerate()
                .map(|(i, c)| (c.label.to_bits(), i))
                .collect();
            let mass = words
                .iter()
                .map(|w| {
                    let syms: Vec<f64> = w.iter().map(|b| f64::from_bits(*b)).collect();
                    torus_cylinder_measure(alpha, partition, &label_to_cell, &syms, 0)
                })
                .sum();
            Ok((mass, MeasureMethod::GeometricExact))
        }
        CodingSystem::Iet { .. } => {
            let table = one_dim_cylinder_table(sys, 0, n as i64 - 1)?;
            let mass = words.iter().filter_map(|w| table.get(w)).sum();
            Ok((mass, MeasureMethod::GeometricExact))
        }
        _ => {
            // Birkhoff frequency along a long orbit from a seeded phase.
            let orbit_len: u64 = 1_000_000;
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c0de);
            let x0 = sys.random_point(&mut rng);
            let sample = sys.orbit_coding(&x0, (0, orbit_len as i64 + n as i64))?;
            let mut hits = 0u64;
            let mut total = 0u64;
            for win in sample.symbols.windows(n) {
                total += 1;
                if words.contains(&word_key(win)) {
                    hits += 1;
                }
            }
            Ok((
                hits as f64 / total as f64,
                MeasureMethod::BirkhoffFrequency { orbit_len },
            ))
        }
    }
}

// --- transitivity (polynomial orbit windows hit definite cylinder mass) -------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransitivityProfile {
    pub n: usize,
    pub window: u64,
    pub per_phase_mass: Vec<f64>,
    /// Conservative lower quantile (the minimum) of the per-phase masses.
    pub delta_hat: f64,
    pub method: MeasureMethod,
}

/// Estimate, for each sampled phase, the mass of the union of n-cylinders
/// the orbit visits within the window [0, C·n^exponent], and return the
/// worst case as δ̂.
pub fn transitivity_profile(
    sys: &CodingSystem,
    n: usize,
    c: f64,
    exponent: f64,
    phases: usize,
    seed: u64,
    orbit_budget: u64,
) -> Result<TransitivityProfile> {
    let window = (c * (n as f64).powf(exponent)).ceil() as u64;
    let needed = window + n as u64;
    if needed > orbit_budget {
        return Err(Error::WindowBudget {
            needed,
            budget: orbit_budget,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut per_phase_mass = Vec::with_capacity(phases);
    let mut method = MeasureMethod::GeometricExact;
    for _ in 0..phases {
        let x0 = sys.random_point(&mut rng);
        let sample = sys.orbit_coding(&x0, (0, window as i64 + n as i64 - 1))?;
        let mut visited: std::collections::HashSet<Vec<u64>> = std::collections::HashSet::new();
        for m in 0..=window as usize {
            visited.insert(word_key(&sample.symbols[m..m + n]));
        }
        let (mass, used) = union_cylinder_mass(sys, &visited, n, seed)?;
        method = used;
        per_phase_mass.push(mass);
    }
    let delta_hat = per_phase_mass.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(TransitivityProfile {
        n,
        window,
        per_phase_mass,
        delta_hat,
        method,
    })
}

/// Sampler-driven variant of the transitivity estimator for systems outside
/// the three coding variants (used by tests with i.i.d. controls): `sampler`
/// yields one symbol sequence of length ≥ window+n per phase and
/// `cylinder_mass` returns the exact mass of one n-cylinder.
pub fn transitivity_from_sampler(
    mut sampler: impl FnMut(usize) -> Vec<f64>,
    mut cylinder_mass: impl FnMut(&[f64]) -> f64,
    n: usize,
    window: u64,
    phases: usize,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(phases);
    for phase in 0..phases {
        let symbols = sampler(phase);
        let mut visited: std::collections::HashSet<Vec<u64>> = std::collections::HashSet::new();
        let mut mass = 0.0;
        for m in 0..=window as usize {
            if visited.insert(word_key(&symbols[m..m + n])) {
                mass += cylinder_mass(&symbols[m..m + n]);
            }
        }
        out.push(mass);
    }
    out
}

// --- polynomial complexity mass (few cylinders carry most of the measure) -----

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MassProfile {
    pub n: usize,
    pub epsilon: f64,
    /// Least number of (2n+1)-cylinders whose total mass exceeds 1-ε,
    /// greedily by decreasing mass.
    pub word_count: usize,
    pub mass_achieved: f64,
    pub method: MeasureMethod,
}

/// Greedy cover of 1-ε of the measure by (2n+1)-cylinders.
pub fn complexity_mass_profile(
    sys: &CodingSystem,
    n: usize,
    epsilon: f64,
    seed: u64,
) -> Result<MassProfile> {
    assert!(epsilon > 0.0 && epsilon < 1.0);
    let (masses, method): (Vec<f64>, MeasureMethod) = match sys {
        CodingSystem::Torus { alpha, .. } if alpha.len() == 1 => {
            let table = one_dim_cylinder_table(sys, -(n as i64), n as i64)?;
            (table.values().cloned().collect(), MeasureMethod::GeometricExact)
        }
        CodingSystem::Iet { .. } => {
            let table = one_dim_cylinder_table(sys, -(n as i64), n as i64)?;
            (table.values().cloned().collect(), MeasureMethod::GeometricExact)
        }
        _ => {
            let orbit_len: u64 = 1_000_000;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x0 = sys.random_point(&mut rng);
            let sample = sys.orbit_coding(&x0, (-(n as i64), orbit_len as i64 + n as i64))?;
            let mut freq: HashMap<Vec<u64>, u64> = HashMap::new();
            let mut total = 0u64;
            for win in sample.symbols.windows(2 * n + 1) {
                *freq.entry(word_key(win)).or_insert(0) += 1;
                total += 1;
            }
            (
                freq.values().map(|&c| c as f64 / total as f64).collect(),
                MeasureMethod::BirkhoffFrequency { orbit_len },
            )
        }
    };
    let mut masses = masses;
    masses.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut acc = 0.0;
    let mut count = 0usize;
    for m in &masses {
        if acc > 1.0 - epsilon {
            break;
        }
        acc += m;
        count += 1;
    }
    Ok(MassProfile {
        n,
        epsilon,
        word_count: count,
        mass_achieved: acc,
        method,
    })
}

// --- Diophantine and dense-hitting diagnostics ---------------------------------

/// min over 0 < ‖k‖∞ ≤ K of ‖⟨k, α⟩‖_{R/Z} · ‖k‖∞^τ — an empirical lower
/// bound for the Diophantine constant.
pub fn diophantine_margin(alpha: &[f64], tau: f64, k_max: u64) -> f64 {
    let d = alpha.len();
    let mut best = f64::INFINITY;
    let mut k = vec![-(k_max as i64); d];
    k[0] -= 1; // odometer start
    loop {
        // advance odometer
        let mut i = 0;
        loop {
            if i == d {
                return best;
            }
            k[i] += 1;
            if k[i] <= k_max as i64 {
                break;
            }
            k[i] = -(k_max as i64);
            i += 1;
        }
        if k.iter().all(|&ki| ki == 0) {
            continue;
        }
        let norm = k.iter().map(|&ki| ki.unsigned_abs()).max().unwrap() as f64;
        let dot: f64 = k.iter().zip(alpha).map(|(&ki, &ai)| ki as f64 * ai).sum();
        let dist = {
            let f = frac(dot);
            f.min(1.0 - f)
        };
        best = best.min(dist * norm.powf(tau));
    }
}

/// Maximal first hitting time of sup-norm balls of radius γ over sampled
/// phases and sampled ball centers.
pub fn dense_hitting_time(
    sys: &CodingSystem,
    gamma: f64,
    phases: usize,
    targets: usize,
    seed: u64,
    budget: u64,
) -> Result<u64> {
    let alpha = match sys {
        CodingSystem::Torus { alpha, .. } => alpha.clone(),
        _ => {
            return Err(Error::BadCodingSystem(
                "dense hitting time is defined for the torus variant".into(),
            ))
        }
    };
    let d = alpha.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_hit = 0u64;
    for _ in 0..phases {
        let x0: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..1.0)).collect();
        for _ in 0..targets {
            let center: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..1.0)).collect();
            let mut x = x0.clone();
            let mut hit = None;
            for step in 0..budget {
                if x.iter()
                    .zip(&center)
                    .all(|(&xi, &ci)| circle_dist(xi, ci) < gamma)
                {
                    hit = Some(step);
                    break;
                }
                for (xi, &ai) in x.iter_mut().zip(&alpha) {
                    *xi = frac(*xi + ai);
                }
            }
            match hit {
                Some(h) => max_hit = max_hit.max(h),
                None => {
                    return Err(Error::HittingBudget {
                        budget,
                        gamma,
                        partial: max_hit,
                    })
                }
            }
        }
    }
    Ok(max_hit)
}

/// Hitting times over a γ-list plus the fitted growth exponent of the
/// hitting time in 1/γ (log-log least squares).
pub fn dense_hitting_exponent(
    sys: &CodingSystem,
    gammas: &[f64],
    phases: usize,
    targets: usize,
    seed: u64,
    budget: u64,
) -> Result<(Vec<(f64, u64)>, f64)> {
    let mut pts = Vec::with_capacity(gammas.len());
    for &g in gammas {
        let t = dense_hitting_time(sys, g, phases, targets, seed, budget)?;
        pts.push((g, t));
    }
    let xs: Vec<f64> = pts.iter().map(|(g, _)| (1.0 / g).ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|(_, t)| ((*t).max(1) as f64).ln()).collect();
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    Ok((pts, slope))
}

// --- Birkhoff sums over the skew-shift ------------------------------------------

/// Finite Fourier polynomial on T²:
/// f(x,y) = mean + Σ a cos(2π(k₁x + k₂y)) + b sin(2π(k₁x + k₂y)).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FourierPoly2 {
    pub mean: f64,
    pub terms: Vec<FourierTerm>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FourierTerm {
    pub k1: i64,
    pub k2: i64,
    pub cos_coef: f64,
    pub sin_coef: f64,
}

impl FourierPoly2 {
    pub fn constant(c: f64) -> FourierPoly2 {
        FourierPoly2 {
            mean: c,
            terms: Vec::new(),
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let mut v = self.mean;
        for t in &self.terms {
            let phase = std::f64::consts::TAU * (t.k1 as f64 * x + t.k2 as f64 * y);
            v += t.cos_coef * phase.cos() + t.sin_coef * phase.sin();
        }
        v
    }

    pub fn integral(&self) -> f64 {
        // Nonzero modes integrate to zero over T².
        self.mean
    }

    /// Sup-norm upper bound |mean| + Σ √(a²+b²).
    pub fn sup_norm_bound(&self) -> f64 {
        self.mean.abs()
            + self
                .terms
                .iter()
                .map(|t| t.cos_coef.hypot(t.sin_coef))
                .sum::<f64>()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BirkhoffReport {
    /// (N, sup over phases of |S_N f - N ∫f|).
    pub deviations: Vec<(u64, f64)>,
    /// Deviation divided by √N, per N.
    pub sqrt_ratios: Vec<f64>,
}

/// Sup over sampled phases of |S_N f - N ∫ f| for each N, reported against
/// the √N scale.
pub fn birkhoff_deviation(
    sys: &CodingSystem,
    f: &FourierPoly2,
    n_list: &[u64],
    phases: usize,
    seed: u64,
) -> Result<BirkhoffReport> {
    if !matches!(sys, CodingSystem::Skew { .. }) {
        return Err(Error::BadCodingSystem(
            "birkhoff deviation scan targets the skew-shift variant".into(),
        ));
    }
    let n_max = *n_list.iter().max().unwrap_or(&0);
    let mean = f.integral();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sup_dev: HashMap<u64, f64> = n_list.iter().map(|&n| (n, 0.0)).collect();
    for _ in 0..phases {
        let mut x = sys.random_point(&mut rng);
        let mut sum = 0.0;
        let mut step = 0u64;
        while step < n_max {
            sum += f.eval(x[0], x[1]);
            sys.step(&mut x);
            step += 1;
            if let Some(dev) = sup_dev.get_mut(&step) {
                let d = (sum - step as f64 * mean).abs();
                if d > *dev {
                    *dev = d;
                }
            }
        }
    }
    let mut deviations: Vec<(u64, f64)> = sup_dev.into_iter().collect();
    deviations.sort_by_key(|&(n, _)| n);
    let sqrt_ratios = deviations
        .iter()
        .map(|&(n, d)| d / (n as f64).sqrt())
        .collect();
    Ok(BirkhoffReport {
        deviations,
        sqrt_ratios,
    })
}

/// The golden-mean frequency (√5 - 1)/2.
pub const GOLDEN_MEAN: f64 = 0.618_033_988_749_894_9;
