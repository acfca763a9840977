//! Finite unions of disjoint closed intervals.
//!
//! [`BandSet`] carries every spectrum-like set in the crate: periodic band
//! spectra, stage spectra, gap lists, quasi-periodic estimates. The algebra
//! is exact up to `MERGE_TOL`: intervals whose gap falls below band-edge
//! solver precision are treated as one band.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Gaps narrower than this merge; below band-edge solver precision two
/// touching bands are indistinguishable from one.
pub const MERGE_TOL: f64 = 1e-9;

/// Ordered union of disjoint closed intervals `[lo, hi]` with pairwise gaps
/// above [`MERGE_TOL`]. Degenerate (point) intervals are representable; they
/// contribute nothing to the measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BandSet {
    intervals: Vec<(f64, f64)>,
}

impl BandSet {
    pub fn empty() -> BandSet {
        BandSet {
            intervals: Vec::new(),
        }
    }

    /// Canonicalize a raw interval list: sort, merge overlaps and gaps below
    /// [`MERGE_TOL`]. Rejects intervals with `lo > hi`.
    pub fn normalize(raw: &[(f64, f64)]) -> Result<BandSet> {
        for &(lo, hi) in raw {
            if !(lo <= hi) {
                return Err(Error::BadInterval { lo, hi });
            }
        }
        let mut sorted: Vec<(f64, f64)> = raw.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(sorted.len());
        for (lo, hi) in sorted {
            match merged.last_mut() {
                Some(last) if lo - last.1 < MERGE_TOL => {
                    last.1 = last.1.max(hi);
                }
                _ => merged.push((lo, hi)),
            }
        }
        Ok(BandSet { intervals: merged })
    }

    pub fn single(lo: f64, hi: f64) -> Result<BandSet> {
        BandSet::normalize(&[(lo, hi)])
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn band_count(&self) -> usize {
        self.intervals.len()
    }

    pub fn min(&self) -> Option<f64> {
        self.intervals.first().map(|i| i.0)
    }

    pub fn max(&self) -> Option<f64> {
        self.intervals.last().map(|i| i.1)
    }

    /// Total Lebesgue measure.
    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(lo, hi)| hi - lo).sum()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals
            .binary_search_by(|&(lo, hi)| {
                if x < lo {
                    std::cmp::Ordering::Greater
                } else if x > hi {
                    std::cmp::Ordering::Less
                } else {
                    std::cmp::Ordering::Equal
                }
            })
            .is_ok()
    }

    /// Distance from a point to the set (0 when inside).
    pub fn distance_to(&self, x: f64) -> f64 {
        if self.is_empty() {
            return f64::INFINITY;
        }
        let mut best = f64::INFINITY;
        for &(lo, hi) in &self.intervals {
            if x >= lo && x <= hi {
                return 0.0;
            }
            best = best.min((x - lo).abs().min((x - hi).abs()));
        }
        best
    }

    pub fn union(&self, other: &BandSet) -> BandSet {
        let mut raw = self.intervals.clone();
        raw.extend_from_slice(&other.intervals);
        BandSet::normalize(&raw).expect("canonical inputs")
    }

    pub fn intersect(&self, other: &BandSet) -> BandSet {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.intervals.len() && j < other.intervals.len() {
            let (alo, ahi) = self.intervals[i];
            let (blo, bhi) = other.intervals[j];
            let lo = alo.max(blo);
            let hi = ahi.min(bhi);
            if lo <= hi {
                out.push((lo, hi));
            }
            if ahi < bhi {
                i += 1;
            } else {
                j += 1;
            }
        }
        BandSet::normalize(&out).expect("ordered pieces")
    }

    /// Set difference on closed sets; boundary points are resolved at
    /// [`MERGE_TOL`], so the result is measure-correct to within
    /// `MERGE_TOL × band count`.
    pub fn difference(&self, other: &BandSet) -> BandSet {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for &(lo, hi) in &self.intervals {
            let mut cur = lo;
            for &(blo, bhi) in &other.intervals {
                if bhi < cur {
                    continue;
                }
                if blo > hi {
                    break;
                }
                if blo > cur {
                    out.push((cur, blo));
                }
                cur = cur.max(bhi);
                if cur >= hi {
                    break;
                }
            }
            if cur < hi {
                out.push((cur, hi));
            }
        }
        BandSet::normalize(&out).expect("ordered pieces")
    }

    /// Symmetric Hausdorff distance between two nonempty sets.
    pub fn hausdorff_distance(&self, other: &BandSet) -> Result<f64> {
        if self.is_empty() || other.is_empty() {
            return Err(Error::EmptyBandSet);
        }
        Ok(one_sided_hausdorff(self, other).max(one_sided_hausdorff(other, self)))
    }

    /// Enlarge every band by `delta` on both sides and re-normalize.
    pub fn dilate(&self, delta: f64) -> BandSet {
        let raw: Vec<(f64, f64)> = self
            .intervals
            .iter()
            .map(|&(lo, hi)| (lo - delta, hi + delta))
            .collect();
        BandSet::normalize(&raw).expect("widened canonical inputs")
    }

    /// Largest gap between consecutive bands strictly inside `window`, with
    /// the gap list itself. Used by gap-closing preconditions.
    pub fn gaps_within(&self, window: (f64, f64)) -> Vec<(f64, f64)> {
        let mut gaps = Vec::new();
        for pair in self.intervals.windows(2) {
            let (gl, gh) = (pair[0].1, pair[1].0);
            if gl >= window.0 && gh <= window.1 && gh > gl {
                gaps.push((gl, gh));
            }
        }
        gaps
    }
}

/// sup over x in `from` of dist(x, `to`). On a union of intervals the
/// supremum is attained at an endpoint of `from` or at a midpoint of a gap
/// of `to` lying inside `from`; only those candidates are evaluated.
fn one_sided_hausdorff(from: &BandSet, to: &BandSet) -> f64 {
    let mut candidates: Vec<f64> = Vec::new();
    for &(lo, hi) in from.intervals() {
        candidates.push(lo);
        candidates.push(hi);
    }
    for pair in to.intervals().windows(2) {
        let mid = 0.5 * (pair[0].1 + pair[1].0);
        if from.contains(mid) {
            candidates.push(mid);
        }
    }
    candidates
        .into_iter()
        .map(|x| to.distance_to(x))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::{prop_assert_eq, proptest};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_set(rng: &mut impl Rng, n: usize) -> BandSet {
        let raw: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                let lo = rng.gen_range(-5.0..5.0);
                let len = rng.gen_range(0.0..2.0);
                (lo, lo + len)
            })
            .collect();
        BandSet::normalize(&raw).unwrap()
    }

    // Grid-indicator oracle: measure of a set expression sampled on a fine
    // grid, independent of the sweep-line implementation.
    fn grid_measure(f: impl Fn(f64) -> bool) -> f64 {
        let step = 1e-4;
        let mut count = 0usize;
        let mut x = -8.0;
        while x <= 8.0 {
            if f(x) {
                count += 1;
            }
            x += step;
        }
        count as f64 * step
    }

    #[test]
    fn normalize_merges_abutting() {
        let s = BandSet::normalize(&[(0.0, 1.0), (1.0, 2.0)]).unwrap();
        assert_eq!(s.intervals(), &[(0.0, 2.0)]);
    }

    #[test]
    fn normalize_keeps_disjoint() {
        let s = BandSet::normalize(&[(0.0, 1.0), (3.0, 4.0)]).unwrap();
        assert_eq!(s.intervals(), &[(0.0, 1.0), (3.0, 4.0)]);
    }

    #[test]
    fn normalize_merges_overlap() {
        let s = BandSet::normalize(&[(0.0, 2.0), (1.0, 3.0)]).unwrap();
        assert_eq!(s.intervals(), &[(0.0, 3.0)]);
    }

    #[test]
    fn normalize_rejects_inverted() {
        assert!(BandSet::normalize(&[(1.0, 0.0)]).is_err());
    }

    #[test]
    fn measure_basics() {
        assert_eq!(BandSet::single(-2.0, 2.0).unwrap().measure(), 4.0);
        assert_eq!(BandSet::empty().measure(), 0.0);
    }

    #[test]
    fn inclusion_exclusion_on_random_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let a = random_set(&mut rng, 4);
            let b = random_set(&mut rng, 4);
            let lhs = a.union(&b).measure() + a.intersect(&b).measure();
            let rhs = a.measure() + b.measure();
            assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn difference_carves_hole() {
        let a = BandSet::single(0.0, 4.0).unwrap();
        let b = BandSet::single(1.0, 2.0).unwrap();
        assert_eq!(a.difference(&b).intervals(), &[(0.0, 1.0), (2.0, 4.0)]);
    }

    #[test]
    fn intersect_disjoint_is_empty() {
        let a = BandSet::single(0.0, 1.0).unwrap();
        let b = BandSet::single(2.0, 3.0).unwrap();
        assert!(a.intersect(&b).is_empty());
    }

    #[test]
    fn double_difference_equals_intersection() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..30 {
            let a = random_set(&mut rng, 4);
            let b = random_set(&mut rng, 4);
            let lhs = a.difference(&a.difference(&b));
            let rhs = a.intersect(&b);
            let tol = MERGE_TOL * (lhs.band_count() + rhs.band_count() + 1) as f64;
            assert!(
                (lhs.measure() - rhs.measure()).abs() <= tol + 1e-12,
                "measures {} vs {}",
                lhs.measure(),
                rhs.measure()
            );
            // Cross-check against the grid-indicator oracle.
            let oracle = grid_measure(|x| a.contains(x) && b.contains(x));
            assert!((rhs.measure() - oracle).abs() < 2e-3);
        }
    }

    #[test]
    fn measure_difference_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let a = random_set(&mut rng, 5);
            let b = random_set(&mut rng, 5);
            let lhs = a.difference(&b).measure();
            let rhs = a.measure() - a.intersect(&b).measure();
            let tol = MERGE_TOL * (a.band_count() + b.band_count()) as f64 + 1e-12;
            assert!((lhs - rhs).abs() <= tol);
        }
    }

    #[test]
    fn hausdorff_point_sets() {
        let a = BandSet::single(0.0, 0.0).unwrap();
        let b = BandSet::single(1.0, 1.0).unwrap();
        assert_eq!(a.hausdorff_distance(&b).unwrap(), 1.0);
    }

    #[test]
    fn hausdorff_self_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let s = random_set(&mut rng, 5);
        assert_eq!(s.hausdorff_distance(&s).unwrap(), 0.0);
    }

    #[test]
    fn hausdorff_endpoint_candidate_oracle() {
        let a = BandSet::single(0.0, 1.0).unwrap();
        let b = BandSet::normalize(&[(0.0, 1.0), (5.0, 5.0)]).unwrap();
        assert_eq!(a.hausdorff_distance(&b).unwrap(), 4.0);
    }

    #[test]
    fn hausdorff_rejects_empty() {
        let a = BandSet::single(0.0, 1.0).unwrap();
        assert!(a.hausdorff_distance(&BandSet::empty()).is_err());
    }

    #[test]
    fn hausdorff_triangle_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        for _ in 0..50 {
            let a = random_set(&mut rng, 3);
            let b = random_set(&mut rng, 3);
            let c = random_set(&mut rng, 3);
            let ab = a.hausdorff_distance(&b).unwrap();
            let bc = b.hausdorff_distance(&c).unwrap();
            let ac = a.hausdorff_distance(&c).unwrap();
            assert!(ac <= ab + bc + 1e-12);
        }
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(raw in proptest::collection::vec((-5.0..5.0f64, 0.0..2.0f64), 0..8)) {
            let intervals: Vec<(f64, f64)> = raw.iter().map(|&(lo, len)| (lo, lo + len)).collect();
            let once = BandSet::normalize(&intervals).unwrap();
            let twice = BandSet::normalize(once.intervals()).unwrap();
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn union_commutes_and_associates(
            raw_a in proptest::collection::vec((-5.0..5.0f64, 0.0..2.0f64), 0..6),
            raw_b in proptest::collection::vec((-5.0..5.0f64, 0.0..2.0f64), 0..6),
            raw_c in proptest::collection::vec((-5.0..5.0f64, 0.0..2.0f64), 0..6),
        ) {
            let mk = |raw: &[(f64, f64)]| {
                let iv: Vec<(f64, f64)> = raw.iter().map(|&(lo, len)| (lo, lo + len)).collect();
                BandSet::normalize(&iv).unwrap()
            };
            let (a, b, c) = (mk(&raw_a), mk(&raw_b), mk(&raw_c));
            prop_assert_eq!(a.union(&b), b.union(&a));
            prop_assert_eq!(a.union(&b).union(&c), a.union(&b.union(&c)));
        }
    }
}
