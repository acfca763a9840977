//! SL(2,ℝ) transfer-matrix kernel.
//!
//! Everything downstream (band spectra, Lyapunov scans, stage construction)
//! reduces to products of one-step Schrödinger matrices
//! `[[E - v, -1], [1, 0]]`, their conjugacy class, and the geometry of their
//! singular/eigen directions on ℝP¹.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Tolerance band around |trace| = 2 classified as parabolic. Exact equality
/// is measure-zero; tests need a deterministic band.
pub const PARABOLIC_TOL: f64 = 1e-10;

/// Norm threshold below which the contracted direction is treated as
/// undefined (matrix conformal within tolerance).
pub const CONFORMAL_TOL: f64 = 1e-9;

/// Rescale a running transfer product every this many factors.
pub const RENORM_STRIDE: usize = 32;

/// Largest angle jump between neighbouring grid points that still admits a
/// continuous lift of a direction curve.
pub const LIFT_JUMP_LIMIT: f64 = std::f64::consts::FRAC_PI_4;

/// Real 2×2 matrix, row-major. Carrier of all transfer and monodromy
/// products; determinant is kept within 1e-9 of 1 by renormalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

/// Conjugacy class of a unit-determinant matrix by trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mat2Class {
    Elliptic,
    Parabolic,
    Hyperbolic,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn mul(&self, rhs: &Mat2) -> Mat2 {
        Mat2 {
            a: self.a * rhs.a + self.b * rhs.c,
            b: self.a * rhs.b + self.b * rhs.d,
            c: self.c * rhs.a + self.d * rhs.c,
            d: self.c * rhs.b + self.d * rhs.d,
        }
    }

    pub fn add(&self, rhs: &Mat2) -> Mat2 {
        Mat2 {
            a: self.a + rhs.a,
            b: self.b + rhs.b,
            c: self.c + rhs.c,
            d: self.d + rhs.d,
        }
    }

    /// Inverse assuming unit determinant.
    pub fn inv_unit(&self) -> Mat2 {
        Mat2 {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        Mat2 {
            a: self.a * s,
            b: self.b * s,
            c: self.c * s,
            d: self.d * s,
        }
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.a * v[0] + self.b * v[1], self.c * v[0] + self.d * v[1]]
    }

    /// Spectral (operator 2-)norm from the closed-form singular values.
    pub fn norm(&self) -> f64 {
        let f = self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d;
        let det = self.det();
        let disc = (f * f - 4.0 * det * det).max(0.0);
        (0.5 * (f + disc.sqrt())).sqrt()
    }

    /// Smaller singular value (= 1/norm when det = 1).
    pub fn sigma_min(&self) -> f64 {
        let f = self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d;
        let det = self.det();
        let disc = (f * f - 4.0 * det * det).max(0.0);
        (0.5 * (f - disc.sqrt())).max(0.0).sqrt()
    }

    /// Divide out determinant drift when it exceeds the tolerance.
    ///
    /// Only fires when the computed determinant is trustworthy: its
    /// floating-point error grows like ε·‖A‖², so beyond norm ~10⁴ the
    /// "drift" is mostly cancellation noise and dividing by it would
    /// corrupt the product.
    pub fn renormalize_det(&self) -> Mat2 {
        let norm = self.norm();
        let det = self.det();
        let det_noise = 8.0 * f64::EPSILON * norm * norm;
        if det > 0.0 && (det - 1.0).abs() > (1e-12_f64).max(det_noise) {
            self.scale(1.0 / det.sqrt())
        } else {
            *self
        }
    }

    pub fn classify(&self) -> Mat2Class {
        classify(self)
    }

    /// Rotation by `2π θ`.
    pub fn rotation(theta: f64) -> Mat2 {
        let t = std::f64::consts::TAU * theta;
        Mat2::new(t.cos(), -t.sin(), t.sin(), t.cos())
    }
}

/// Point of ℝP¹, stored as an angle in [0, π).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    angle: f64,
}

impl Direction {
    pub fn from_vector(x: f64, y: f64) -> Direction {
        let mut angle = y.atan2(x);
        while angle < 0.0 {
            angle += std::f64::consts::PI;
        }
        while angle >= std::f64::consts::PI {
            angle -= std::f64::consts::PI;
        }
        Direction { angle }
    }

    pub fn from_angle(angle: f64) -> Direction {
        Direction::from_vector(angle.cos(), angle.sin())
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn unit_vector(&self) -> [f64; 2] {
        [self.angle.cos(), self.angle.sin()]
    }

    /// Distance on ℝP¹ (≤ π/2).
    pub fn distance(&self, other: &Direction) -> f64 {
        let mut d = (self.angle - other.angle).abs();
        if d > std::f64::consts::FRAC_PI_2 {
            d = std::f64::consts::PI - d;
        }
        d
    }
}

/// Uniform energy grid on [lo, hi].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyGrid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl EnergyGrid {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<EnergyGrid> {
        if !(lo < hi) || !(step > 0.0) {
            return Err(Error::BadGrid(format!(
                "need lo < hi and step > 0, got lo={lo}, hi={hi}, step={step}"
            )));
        }
        Ok(EnergyGrid { lo, hi, step })
    }

    pub fn with_points(lo: f64, hi: f64, points: usize) -> Result<EnergyGrid> {
        if points < 2 {
            return Err(Error::BadGrid("need at least 2 grid points".into()));
        }
        EnergyGrid::new(lo, hi, (hi - lo) / (points - 1) as f64)
    }

    pub fn points(&self) -> Vec<f64> {
        let n = ((self.hi - self.lo) / self.step).floor() as usize + 1;
        (0..n).map(|i| self.lo + i as f64 * self.step).collect()
    }
}

/// One-step Schrödinger matrix `[[E - v, -1], [1, 0]]`; determinant exactly 1.
pub fn schrodinger_step(energy: f64, v: f64) -> Mat2 {
    Mat2::new(energy - v, -1.0, 1.0, 0.0)
}

/// Ordered transfer product over a potential block: the factor of the first
/// symbol is applied first (rightmost).
pub fn transfer(word: &[f64], energy: f64) -> Result<Mat2> {
    let (m, log_scale) = transfer_scaled(word, energy)?;
    Ok(m.scale(log_scale.exp()).renormalize_det())
}

/// Transfer product in scaled form `(M, log s)` with the true product equal
/// to `M · e^s`. The running product is rescaled every [`RENORM_STRIDE`]
/// factors so exponents up to ~10⁴ never overflow.
pub fn transfer_scaled(word: &[f64], energy: f64) -> Result<(Mat2, f64)> {
    if word.is_empty() {
        return Err(Error::EmptyWord);
    }
    let mut acc = Mat2::IDENTITY;
    let mut log_scale = 0.0_f64;
    for (i, &v) in word.iter().enumerate() {
        acc = schrodinger_step(energy, v).mul(&acc);
        if (i + 1) % RENORM_STRIDE == 0 {
            let n = acc.norm();
            if n > 1e3 {
                // Norm rescaling: det(acc) becomes e^{-2 log_scale}; trace
                // and norm of the represented product stay accurate.
                acc = acc.scale(1.0 / n);
                log_scale += n.ln();
            }
        }
    }
    Ok((acc, log_scale))
}

/// Trace of the transfer product, evaluated in scaled form so that huge
/// hyperbolic products saturate to ±∞ with the correct sign instead of
/// overflowing mid-product.
pub fn transfer_trace(word: &[f64], energy: f64) -> Result<f64> {
    let (m, log_scale) = transfer_scaled(word, energy)?;
    let t = m.trace();
    if t == 0.0 {
        return Ok(0.0);
    }
    let log_abs = t.abs().ln() + log_scale;
    if log_abs > 700.0 {
        Ok(if t > 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        })
    } else {
        Ok(t.signum() * log_abs.exp())
    }
}

/// Two-sided potential window `v(l)` for `l` in `[-n, n-1]`.
#[derive(Debug, Clone)]
pub struct TwoSidedWindow {
    values: Vec<f64>,
    n: usize,
}

impl TwoSidedWindow {
    /// `values[i]` holds `v(i - n)`; `values.len()` must equal `2n`.
    pub fn new(values: Vec<f64>, n: usize) -> Result<TwoSidedWindow> {
        if values.len() != 2 * n {
            return Err(Error::BadGrid(format!(
                "two-sided window needs 2n = {} values, got {}",
                2 * n,
                values.len()
            )));
        }
        Ok(TwoSidedWindow { values, n })
    }

    pub fn from_fn(n: usize, f: impl FnMut(i64) -> f64) -> TwoSidedWindow {
        let values = (-(n as i64)..n as i64).map(f).collect();
        TwoSidedWindow { values, n }
    }

    pub fn half_width(&self) -> usize {
        self.n
    }

    pub fn value(&self, l: i64) -> Result<f64> {
        let idx = l + self.n as i64;
        if idx < 0 || idx >= self.values.len() as i64 {
            return Err(Error::WindowIndex {
                index: l,
                n: self.n,
            });
        }
        Ok(self.values[idx as usize])
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Two-sided transfer product `A^E_m`: forward factors for m ≥ 1, identity at
/// m = 0, inverse factors for m ≤ -1.
pub fn two_sided_transfer(window: &TwoSidedWindow, energy: f64, m: i64) -> Result<Mat2> {
    if m.unsigned_abs() as usize > window.half_width() {
        return Err(Error::WindowIndex {
            index: m,
            n: window.half_width(),
        });
    }
    let mut acc = Mat2::IDENTITY;
    if m >= 1 {
        for l in 0..m {
            acc = schrodinger_step(energy, window.value(l)?).mul(&acc);
        }
    } else if m <= -1 {
        for l in (m..0).rev() {
            acc = schrodinger_step(energy, window.value(l)?).inv_unit().mul(&acc);
        }
    }
    Ok(acc.renormalize_det())
}

/// Elliptic / parabolic / hyperbolic trichotomy by |trace| against 2, with
/// the [`PARABOLIC_TOL`] band counting as parabolic.
pub fn classify(m: &Mat2) -> Mat2Class {
    let t = m.trace().abs();
    if (t - 2.0).abs() <= PARABOLIC_TOL {
        Mat2Class::Parabolic
    } else if t < 2.0 {
        Mat2Class::Elliptic
    } else {
        Mat2Class::Hyperbolic
    }
}

/// Input direction of the smaller singular value: the unit direction most
/// contracted by `A`. Defined whenever the singular values are distinct.
pub fn most_contracted_direction(m: &Mat2) -> Result<Direction> {
    let norm = m.norm();
    if norm <= 1.0 + CONFORMAL_TOL {
        return Err(Error::UndefinedDirection { norm });
    }
    // Eigenvector of AᵀA for its smaller eigenvalue σ_min².
    let p = m.a * m.a + m.c * m.c;
    let q = m.a * m.b + m.c * m.d;
    let r = m.b * m.b + m.d * m.d;
    let lam = m.sigma_min().powi(2);
    // (p - λ)x + q y = 0  or  q x + (r - λ) y = 0; pick the better row.
    let (x, y) = if (p - lam).abs() > (r - lam).abs() {
        (-q, p - lam)
    } else {
        (r - lam, -q)
    };
    if x == 0.0 && y == 0.0 {
        return Err(Error::UndefinedDirection { norm });
    }
    Ok(Direction::from_vector(x, y))
}

/// Eigendirection of the eigenvalue with modulus < 1 of a hyperbolic matrix.
pub fn stable_direction(m: &Mat2) -> Result<Direction> {
    let t = m.trace();
    if classify(m) != Mat2Class::Hyperbolic {
        return Err(Error::NotHyperbolic { trace_abs: t.abs() });
    }
    let disc = (t * t - 4.0).sqrt();
    let mu = if t > 0.0 {
        (t - disc) / 2.0
    } else {
        (t + disc) / 2.0
    };
    // (A - μ) kernel: rows (a-μ, b) and (c, d-μ); take the larger row.
    let r1 = (m.a - mu).hypot(m.b);
    let r2 = m.c.hypot(m.d - mu);
    let (x, y) = if r1 >= r2 {
        (-m.b, m.a - mu)
    } else {
        (mu - m.d, m.c)
    };
    if x == 0.0 && y == 0.0 {
        return Err(Error::NotHyperbolic { trace_abs: t.abs() });
    }
    Ok(Direction::from_vector(x, y))
}

/// Unstable eigendirection (eigenvalue of modulus > 1) of a hyperbolic matrix.
pub fn unstable_direction(m: &Mat2) -> Result<Direction> {
    stable_direction(&m.inv_unit())
}

/// Rotation angle θ ∈ (0, 1/2) of an elliptic matrix: Tr A = 2 cos 2πθ.
pub fn rotation_angle(m: &Mat2) -> Result<f64> {
    let t = m.trace();
    if classify(m) != Mat2Class::Elliptic {
        return Err(Error::NotElliptic { trace_abs: t.abs() });
    }
    Ok((t / 2.0).clamp(-1.0, 1.0).acos() / std::f64::consts::TAU)
}

/// Outcome of the direction-monotonicity scan along an energy grid.
#[derive(Debug, Clone)]
pub struct DirectionSignReport {
    /// Grid energies kept (both one-sided products hyperbolic there).
    pub retained: usize,
    /// Grid energies skipped because a product was not hyperbolic.
    pub skipped: usize,
    /// Energies where the forward stable angle failed to increase.
    pub forward_violations: Vec<f64>,
    /// Energies where the backward stable angle failed to decrease.
    pub backward_violations: Vec<f64>,
    /// Number of crossings of the two angle curves (mod π).
    pub crossings: usize,
    /// The winding bound 2·max(k1,k2) the crossing count is checked against.
    pub crossing_bound: usize,
}

impl DirectionSignReport {
    pub fn all_signs_correct(&self) -> bool {
        self.forward_violations.is_empty() && self.backward_violations.is_empty()
    }
}

/// Scans the stable angles m_{k1}(E) of `A^E_{k1}` and m_{-k2}(E) of
/// `A^E_{-k2}` along the grid, lifts them continuously, and checks the
/// monotonicity signs (forward increasing, backward decreasing) by central
/// finite differences, plus the crossing-count bound.
///
/// Grid points where either product is not hyperbolic are skipped and
/// reported; lifting and differencing restart on each maximal retained run.
pub fn direction_derivative_signs(
    window: &TwoSidedWindow,
    grid: &EnergyGrid,
    k1: usize,
    k2: usize,
) -> Result<DirectionSignReport> {
    assert!(k1 >= 1 && k2 >= 1, "k1, k2 must be >= 1");
    let energies = grid.points();
    // (E, forward angle, backward angle) on retained points, None on skips.
    let mut samples: Vec<Option<(f64, f64, f64)>> = Vec::with_capacity(energies.len());
    for &e in &energies {
        let fwd = two_sided_transfer(window, e, k1 as i64)?;
        let bwd = two_sided_transfer(window, e, -(k2 as i64))?;
        match (stable_direction(&fwd), stable_direction(&bwd)) {
            (Ok(mf), Ok(mb)) => samples.push(Some((e, mf.angle(), mb.angle()))),
            _ => samples.push(None),
        }
    }

    let mut report = DirectionSignReport {
        retained: 0,
        skipped: samples.iter().filter(|s| s.is_none()).count(),
        forward_violations: Vec::new(),
        backward_violations: Vec::new(),
        crossings: 0,
        crossing_bound: 2 * k1.max(k2),
    };

    // Process each maximal run of retained points independently.
    let mut run: Vec<(f64, f64, f64)> = Vec::new();
    let flush = |run: &mut Vec<(f64, f64, f64)>, report: &mut DirectionSignReport| -> Result<()> {
        if run.len() >= 3 {
            let lifted_f = lift_angles(run.iter().map(|s| s.1), run.iter().map(|s| s.0))?;
            let lifted_b = lift_angles(run.iter().map(|s| s.2), run.iter().map(|s| s.0))?;
            for i in 1..run.len() - 1 {
                let df = lifted_f[i + 1] - lifted_f[i - 1];
                let db = lifted_b[i + 1] - lifted_b[i - 1];
                if df <= 0.0 {
                    report.forward_violations.push(run[i].0);
                }
                if db >= 0.0 {
                    report.backward_violations.push(run[i].0);
                }
            }
            // Crossings of m_{k1} - m_{-k2} through multiples of π.
            let diff: Vec<f64> = lifted_f
                .iter()
                .zip(&lifted_b)
                .map(|(f, b)| f - b)
                .collect();
            for i in 1..diff.len() {
                let a = (diff[i - 1] / std::f64::consts::PI).floor();
                let b = (diff[i] / std::f64::consts::PI).floor();
                report.crossings += (a - b).abs() as usize;
            }
        }
        report.retained += run.len();
        run.clear();
        Ok(())
    };
    for s in samples {
        match s {
            Some(t) => run.push(t),
            None => flush(&mut run, &mut report)?,
        }
    }
    flush(&mut run, &mut report)?;
    Ok(report)
}

/// Continuous lift of a sequence of ℝP¹ angles: consecutive values are moved
/// by multiples of π so each jump is ≤ π/2 in absolute value. Jumps above
/// [`LIFT_JUMP_LIMIT`] after reduction mean the grid is too coarse.
fn lift_angles(
    angles: impl Iterator<Item = f64>,
    energies: impl Iterator<Item = f64>,
) -> Result<Vec<f64>> {
    let mut lifted = Vec::new();
    for (angle, energy) in angles.zip(energies) {
        if lifted.is_empty() {
            lifted.push(angle);
            continue;
        }
        let prev: f64 = *lifted.last().unwrap();
        let mut next = angle;
        // reduce into (prev - π/2, prev + π/2]
        while next - prev > std::f64::consts::FRAC_PI_2 {
            next -= std::f64::consts::PI;
        }
        while prev - next > std::f64::consts::FRAC_PI_2 {
            next += std::f64::consts::PI;
        }
        let jump = (next - prev).abs();
        if jump > LIFT_JUMP_LIMIT {
            return Err(Error::RefinementNeeded {
                jump,
                limit: LIFT_JUMP_LIMIT,
                energy,
            });
        }
        lifted.push(next);
    }
    Ok(lifted)
}

/// Finite-orbit Lyapunov estimate `(1/n) log ||A^{E-f}_n||` with periodic
/// renormalization of the running product.
pub fn lyapunov_estimate(mut potential: impl FnMut(usize) -> f64, energy: f64, n: usize) -> f64 {
    assert!(n >= 1);
    let mut acc = Mat2::IDENTITY;
    let mut log_norm = 0.0_f64;
    for i in 0..n {
        acc = schrodinger_step(energy, potential(i)).mul(&acc);
        if (i + 1) % RENORM_STRIDE == 0 {
            let nrm = acc.norm();
            acc = acc.scale(1.0 / nrm);
            log_norm += nrm.ln();
        }
    }
    (log_norm + acc.norm().ln()) / n as f64
}

/// Least-squares fit of `log ||A^j||` against `j` over `1..=j_max`, returning
/// `(c, λ)` with `||A^j|| ≈ c λ^j`. Diagnostic for uniform hyperbolicity of
/// powers of a fixed monodromy matrix.
pub fn norm_growth_fit(m: &Mat2, j_max: usize) -> (f64, f64) {
    let mut acc = Mat2::IDENTITY;
    let mut log_scale = 0.0_f64;
    let mut xs = Vec::with_capacity(j_max);
    let mut ys = Vec::with_capacity(j_max);
    for j in 1..=j_max {
        acc = m.mul(&acc);
        let nrm = acc.norm();
        acc = acc.scale(1.0 / nrm);
        log_scale += nrm.ln();
        xs.push(j as f64);
        ys.push(log_scale);
    }
    let n = j_max as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    (intercept.exp(), slope.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_sl2(rng: &mut impl Rng) -> Mat2 {
        // Random product of shear/rotation factors keeps det = 1 exactly-ish.
        let mut m = Mat2::IDENTITY;
        for _ in 0..4 {
            let s: f64 = rng.gen_range(-2.0..2.0);
            m = Mat2::new(1.0, s, 0.0, 1.0).mul(&m);
            let t: f64 = rng.gen_range(-2.0..2.0);
            m = Mat2::new(1.0, 0.0, t, 1.0).mul(&m);
        }
        m
    }

    #[test]
    fn step_matrix_zero_case() {
        let m = schrodinger_step(0.0, 0.0);
        assert_eq!((m.a, m.b, m.c, m.d), (0.0, -1.0, 1.0, 0.0));
    }

    #[test]
    fn step_matrix_direct_substitution() {
        let m = schrodinger_step(3.0, 1.0);
        assert_eq!((m.a, m.b, m.c, m.d), (2.0, -1.0, 1.0, 0.0));
    }

    #[test]
    fn step_matrix_unit_det_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let e: f64 = rng.gen_range(-10.0..10.0);
            let v: f64 = rng.gen_range(-10.0..10.0);
            assert_eq!(schrodinger_step(e, v).det(), 1.0);
        }
    }

    #[test]
    fn transfer_quarter_rotation_squared() {
        let m = transfer(&[0.0, 0.0], 0.0).unwrap();
        assert!((m.a + 1.0).abs() < 1e-15);
        assert!((m.d + 1.0).abs() < 1e-15);
        assert!(m.b.abs() < 1e-15 && m.c.abs() < 1e-15);
    }

    #[test]
    fn transfer_trace_oracle_0_1() {
        // Direct 2x2 multiplication oracle at E = 0: trace = E(E-1) - 2 = -2.
        let m = transfer(&[0.0, 1.0], 0.0).unwrap();
        assert!((m.trace() + 2.0).abs() < 1e-14);
    }

    #[test]
    fn transfer_single_factor_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let a: f64 = rng.gen_range(-3.0..3.0);
            let e: f64 = rng.gen_range(-3.0..3.0);
            let m = transfer(&[a], e).unwrap();
            assert!((m.trace() - (e - a)).abs() < 1e-14);
        }
    }

    #[test]
    fn transfer_rejects_empty_word() {
        assert!(matches!(transfer(&[], 1.0), Err(Error::EmptyWord)));
    }

    #[test]
    fn transfer_det_stays_unit_over_long_products() {
        // Free potential at an in-band energy: the product stays bounded, no
        // rescale fires, and the raw determinant drift is visible.
        let word = vec![0.0; 10_000];
        let (m, log_scale) = transfer_scaled(&word, 0.3).unwrap();
        assert_eq!(log_scale, 0.0);
        assert!((m.det() - 1.0).abs() < 1e-9, "det = {}", m.det());
        let m = transfer(&word, 0.3).unwrap();
        assert!((m.det() - 1.0).abs() < 1e-12, "det = {}", m.det());
    }

    #[test]
    fn cocycle_composition_on_random_words() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let lv = rng.gen_range(1..6);
            let lw = rng.gen_range(1..6);
            let v: Vec<f64> = (0..lv).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let w: Vec<f64> = (0..lw).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let e = rng.gen_range(-3.0..3.0);
            let mut vw = v.clone();
            vw.extend_from_slice(&w);
            let lhs = transfer(&vw, e).unwrap();
            let rhs = transfer(&w, e).unwrap().mul(&transfer(&v, e).unwrap());
            assert!((lhs.a - rhs.a).abs() < 1e-9);
            assert!((lhs.b - rhs.b).abs() < 1e-9);
            assert!((lhs.c - rhs.c).abs() < 1e-9);
            assert!((lhs.d - rhs.d).abs() < 1e-9);
        }
    }

    #[test]
    fn two_sided_identity_and_single_factor() {
        let window = TwoSidedWindow::from_fn(4, |l| l as f64 * 0.1);
        let id = two_sided_transfer(&window, 1.0, 0).unwrap();
        assert_eq!(id, Mat2::IDENTITY);
        let one = two_sided_transfer(&window, 1.0, 1).unwrap();
        let expect = schrodinger_step(1.0, window.value(0).unwrap());
        assert_eq!(one, expect);
    }

    #[test]
    fn two_sided_multiply_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let window = TwoSidedWindow::from_fn(6, |_| rng.gen_range(-2.0..2.0));
        let e = 0.7;
        let back = two_sided_transfer(&window, e, -1).unwrap();
        let step = schrodinger_step(e, window.value(-1).unwrap());
        let prod = back.mul(&step);
        assert!((prod.a - 1.0).abs() < 1e-12 && (prod.d - 1.0).abs() < 1e-12);
        assert!(prod.b.abs() < 1e-12 && prod.c.abs() < 1e-12);
    }

    #[test]
    fn two_sided_range_check() {
        let window = TwoSidedWindow::from_fn(3, |_| 0.0);
        assert!(two_sided_transfer(&window, 0.0, 4).is_err());
        assert!(two_sided_transfer(&window, 0.0, -4).is_err());
    }

    #[test]
    fn classify_trichotomy() {
        assert_eq!(classify(&Mat2::rotation(0.25)), Mat2Class::Elliptic);
        assert_eq!(classify(&Mat2::IDENTITY), Mat2Class::Parabolic);
        assert_eq!(
            classify(&Mat2::new(2.0, 0.0, 0.0, 0.5)),
            Mat2Class::Hyperbolic
        );
    }

    #[test]
    fn classify_conjugation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let a = random_sl2(&mut rng);
            let p = random_sl2(&mut rng);
            let conj = p.mul(&a).mul(&p.inv_unit());
            assert_eq!(classify(&a), classify(&conj));
        }
    }

    #[test]
    fn contracted_direction_axis_aligned() {
        let m = Mat2::new(2.0, 0.0, 0.0, 0.5);
        let d = most_contracted_direction(&m).unwrap();
        assert!((d.angle() - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn contracted_direction_ignores_left_rotation() {
        let m = Mat2::new(2.0, 0.0, 0.0, 0.5);
        for k in 0..8 {
            let r = Mat2::rotation(k as f64 / 8.0 + 0.03);
            let d = most_contracted_direction(&r.mul(&m)).unwrap();
            assert!(
                (d.angle() - std::f64::consts::FRAC_PI_2).abs() < 1e-10,
                "angle {}",
                d.angle()
            );
        }
    }

    #[test]
    fn contracted_direction_minimizes_image_norm() {
        // Dense angle-grid minimization oracle.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let mut m = random_sl2(&mut rng);
            if m.norm() < 1.5 {
                m = Mat2::new(3.0, 0.0, 0.0, 1.0 / 3.0).mul(&m);
            }
            let d = most_contracted_direction(&m).unwrap();
            let image = m.apply(d.unit_vector());
            let val = image[0].hypot(image[1]);
            let mut best = f64::INFINITY;
            for i in 0..20_000 {
                let t = std::f64::consts::PI * i as f64 / 20_000.0;
                let im = m.apply([t.cos(), t.sin()]);
                best = best.min(im[0].hypot(im[1]));
            }
            assert!(val <= best + 1e-6, "val {} best {}", val, best);
        }
    }

    #[test]
    fn conformal_rejected() {
        assert!(matches!(
            most_contracted_direction(&Mat2::rotation(0.2)),
            Err(Error::UndefinedDirection { .. })
        ));
    }

    #[test]
    fn stable_direction_diagonal() {
        let d = stable_direction(&Mat2::new(2.0, 0.0, 0.0, 0.5)).unwrap();
        assert!((d.angle() - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn stable_direction_conjugation_oracle() {
        // Conjugating diag(2, 1/2) by P maps the vertical axis to P e2.
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let p = random_sl2(&mut rng);
            let a = p.mul(&Mat2::new(2.0, 0.0, 0.0, 0.5)).mul(&p.inv_unit());
            let d = stable_direction(&a).unwrap();
            let expect = Direction::from_vector(p.b, p.d);
            assert!(d.distance(&expect) < 1e-9);
        }
    }

    /// Rotation times a mild shear: well-conditioned conjugator, so the
    /// eigenbasis of the conjugated matrix is nowhere near degenerate.
    fn mild_conjugator(rng: &mut impl Rng) -> Mat2 {
        let s: f64 = rng.gen_range(-0.6..0.6);
        Mat2::rotation(rng.gen_range(0.0..1.0)).mul(&Mat2::new(1.0, s, 0.0, 1.0))
    }

    #[test]
    fn stable_close_to_contracted_for_large_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let p = mild_conjugator(&mut rng);
            let big = 2e3 + rng.gen_range(0.0..1e3);
            let a = p
                .mul(&Mat2::new(big, 0.0, 0.0, 1.0 / big))
                .mul(&p.inv_unit());
            assert_eq!(classify(&a), Mat2Class::Hyperbolic);
            assert!(a.norm() > 1e3);
            let s = stable_direction(&a).unwrap();
            let c = most_contracted_direction(&a).unwrap();
            assert!(s.distance(&c) < 1e-4, "distance {}", s.distance(&c));
        }
    }

    #[test]
    fn contracted_matches_stable_within_norm_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..50 {
            let p = mild_conjugator(&mut rng);
            let big = rng.gen_range(150.0..400.0);
            let a = p
                .mul(&Mat2::new(big, 0.0, 0.0, 1.0 / big))
                .mul(&p.inv_unit());
            if classify(&a) != Mat2Class::Hyperbolic || a.norm() < 1e2 {
                continue;
            }
            let s = stable_direction(&a).unwrap();
            let c = most_contracted_direction(&a).unwrap();
            let bound = 10.0 / a.norm().powi(2);
            assert!(s.distance(&c) <= bound, "{} > {}", s.distance(&c), bound);
        }
    }

    #[test]
    fn rotation_angle_special_values() {
        let quarter = Mat2::rotation(0.25);
        assert!((rotation_angle(&quarter).unwrap() - 0.25).abs() < 1e-12);
        let t = 2.0 * (std::f64::consts::TAU * 0.1).cos();
        let m = Mat2::new(t / 2.0, -1.0, 1.0 - t * t / 4.0, t / 2.0);
        assert!((rotation_angle(&m).unwrap() - 0.1).abs() < 1e-12);
        let r = Mat2::rotation(0.37);
        assert!((rotation_angle(&r).unwrap() - 0.37).abs() < 1e-12);
    }

    #[test]
    fn rotation_angle_rejects_hyperbolic() {
        assert!(rotation_angle(&Mat2::new(2.0, 0.0, 0.0, 0.5)).is_err());
    }

    #[test]
    fn power_norm_certificate() {
        // ||A^2|| > ||A||^{3/2} forces hyperbolicity for large-norm A.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut tested = 0;
        for _ in 0..400 {
            let p = random_sl2(&mut rng);
            let big = rng.gen_range(1.1e3..5e3);
            let a = p
                .mul(&Mat2::new(big, 0.0, 0.0, 1.0 / big))
                .mul(&p.inv_unit());
            if a.norm() <= 1e3 {
                continue;
            }
            let a2 = a.mul(&a);
            if a2.norm() > a.norm().powf(1.5) {
                tested += 1;
                assert_eq!(classify(&a), Mat2Class::Hyperbolic);
            }
        }
        assert!(tested > 10, "certificate premise never triggered");
    }

    #[test]
    fn lyapunov_free_elliptic_energy() {
        let l = lyapunov_estimate(|_| 0.0, 0.0, 10_000);
        assert!(l.abs() < 1e-3, "L = {l}");
    }

    #[test]
    fn lyapunov_free_hyperbolic_energy() {
        let expect = ((3.0 + 5.0_f64.sqrt()) / 2.0).ln();
        let l = lyapunov_estimate(|_| 0.0, 3.0, 10_000);
        assert!((l - expect).abs() < 1e-3, "L = {l}, expect {expect}");
    }

    #[test]
    fn lyapunov_positive_for_iid_potential() {
        for seed in 0..3 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let l = lyapunov_estimate(
                |_| if rng.gen_bool(0.5) { 0.0 } else { 3.0 },
                0.0,
                100_000,
            );
            assert!(l > 0.05, "seed {seed}: L = {l}");
        }
    }

    #[test]
    fn direction_signs_constant_potential() {
        // Closed-form eigendirections: stable angle of [[E,-1],[1,0]]-powers
        // increases in E, backward decreases, for E in (2.5, 4).
        let window = TwoSidedWindow::from_fn(5, |_| 0.0);
        let grid = EnergyGrid::new(2.5, 4.0, 0.005).unwrap();
        let report = direction_derivative_signs(&window, &grid, 3, 3).unwrap();
        assert!(report.all_signs_correct(), "{report:?}");
        assert!(report.retained > 200);
        assert_eq!(report.skipped, 0);
    }

    #[test]
    fn direction_signs_k1_explicit_eigenvector() {
        let window = TwoSidedWindow::from_fn(3, |_| 0.5);
        let grid = EnergyGrid::new(2.6, 5.0, 0.01).unwrap();
        let report = direction_derivative_signs(&window, &grid, 1, 1).unwrap();
        assert!(report.forward_violations.is_empty());
    }

    #[test]
    fn direction_signs_symmetric_window_reflection() {
        // Even potential: v(l) = v(-1-l); then A^E_{-k} is conjugate to the
        // reflected forward product and the two stable angles are reflections
        // of one another through the anti-diagonal symmetry.
        let vals = [0.3, -0.7, 1.1];
        let window = TwoSidedWindow::from_fn(3, |l| {
            let idx = if l >= 0 { l } else { -1 - l } as usize;
            vals[idx]
        });
        let e = 4.2;
        let k = 3;
        let fwd = two_sided_transfer(&window, e, k).unwrap();
        let bwd = two_sided_transfer(&window, e, -k).unwrap();
        // Reflection symmetry swaps stable directions via (x,y) -> (y,x)
        // composed with the inverse; verify angles sum to π/2 mod π.
        let mf = stable_direction(&fwd).unwrap().angle();
        let mb = stable_direction(&bwd).unwrap().angle();
        let sum = (mf + mb) % std::f64::consts::PI;
        let dist = (sum - std::f64::consts::FRAC_PI_2)
            .abs()
            .min((sum - std::f64::consts::FRAC_PI_2 - std::f64::consts::PI).abs());
        assert!(dist < 1e-9, "mf={mf} mb={mb} sum={sum}");
    }

    #[test]
    fn norm_growth_fit_matches_eigenvalue() {
        let m = Mat2::new(3.0, -1.0, 1.0, 0.0); // eigenvalues (3±√5)/2
        let (c, lambda) = norm_growth_fit(&m, 30);
        let expect = (3.0 + 5.0_f64.sqrt()) / 2.0;
        // The fit absorbs small-j transients into c; λ is a diagnostic.
        assert!((lambda - expect).abs() < 1e-2, "lambda {lambda}");
        assert!(c > 0.0 && lambda > 1.0);
    }
}
