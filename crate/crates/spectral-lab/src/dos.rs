//! Density of states: truncation eigenvalue counting, IDS curves, the
//! Thouless-formula cross check, a Kotani-dichotomy diagnostic, energy sets
//! carrying polynomially bounded eigenfunctions, and a singularity
//! indicator for the density-of-states measure.

use crate::intervals::BandSet;
use crate::periodic::Word;
use crate::sl2::{self, EnergyGrid, TwoSidedWindow};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Number of eigenvalues strictly below `energy` of the N×N Dirichlet
/// truncation with diagonal `potential` and unit off-diagonals, by a Sturm
/// sequence / LDLᵀ inertia sweep in O(N).
///
/// A vanishing pivot means `energy` hits an eigenvalue of a principal minor;
/// the sweep retries at a slightly lower energy (recorded in the result).
pub fn eigenvalue_count(potential: &[f64], energy: f64) -> usize {
    eigenvalue_count_recorded(potential, energy).0
}

/// Same as [`eigenvalue_count`], also reporting how many pivot-breakdown
/// retries were taken.
pub fn eigenvalue_count_recorded(potential: &[f64], energy: f64) -> (usize, u32) {
    let mut shift = 0.0;
    for retry in 0..3u32 {
        match sturm_sweep(potential, energy - shift) {
            Some(count) => return (count, retry),
            None => shift += 1e-12 * (1.0 + energy.abs()),
        }
    }
    // Final attempt with clamped pivots instead of retrying further.
    (sturm_sweep_clamped(potential, energy - shift), 3)
}

fn sturm_sweep(potential: &[f64], energy: f64) -> Option<usize> {
    let guard = 1e-300;
    let mut count = 0usize;
    let mut d = f64::INFINITY;
    for (i, &v) in potential.iter().enumerate() {
        let mut pivot = v - energy;
        if i > 0 {
            pivot -= 1.0 / d;
        }
        if pivot.abs() < guard {
            return None;
        }
        if pivot < 0.0 {
            count += 1;
        }
        d = pivot;
    }
    Some(count)
}

fn sturm_sweep_clamped(potential: &[f64], energy: f64) -> usize {
    let guard = 1e-300;
    let mut count = 0usize;
    let mut d = f64::INFINITY;
    for (i, &v) in potential.iter().enumerate() {
        let mut pivot = v - energy;
        if i > 0 {
            pivot -= 1.0 / d;
        }
        if pivot.abs() < guard {
            pivot = if pivot >= 0.0 { guard } else { -guard };
        }
        if pivot < 0.0 {
            count += 1;
        }
        d = pivot;
    }
    count
}

/// Sampled IDS curve: k(E) on an energy grid, in [0, 1], nondecreasing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdsSample {
    pub energies: Vec<f64>,
    pub k: Vec<f64>,
    /// Truncation size the counts were taken at.
    pub truncation: usize,
    pub phase_count: usize,
}

impl IdsSample {
    /// Largest jump between adjacent grid values; shrinks with refinement
    /// for atomless density-of-states measures.
    pub fn max_jump(&self) -> f64 {
        self.k.windows(2).map(|p| p[1] - p[0]).fold(0.0, f64::max)
    }

    /// Cell masses dk_i = k_{i+1} - k_i with cell midpoints.
    pub fn cell_masses(&self) -> Vec<(f64, f64)> {
        self.energies
            .windows(2)
            .zip(self.k.windows(2))
            .map(|(e, k)| (0.5 * (e[0] + e[1]), k[1] - k[0]))
            .collect()
    }

    pub fn sup_distance(&self, other: &IdsSample) -> f64 {
        self.k
            .iter()
            .zip(&other.k)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Phase-averaged IDS by truncation counting: k(E) = ⟨count(E)⟩ / N over
/// `phases` sampled potential windows of length `n`.
pub fn ids_curve(
    potential_of_phase: impl Fn(usize) -> Vec<f64> + Sync,
    phases: usize,
    n: usize,
    grid: &EnergyGrid,
) -> IdsSample {
    assert!(n >= 1 && phases >= 1);
    let windows: Vec<Vec<f64>> = (0..phases).map(&potential_of_phase).collect();
    let energies = grid.points();
    let k: Vec<f64> = energies
        .par_iter()
        .map(|&e| {
            let total: usize = windows.iter().map(|w| eigenvalue_count(w, e)).sum();
            total as f64 / (phases * n) as f64
        })
        .collect();
    IdsSample {
        energies,
        k,
        truncation: n,
        phase_count: phases,
    }
}

/// Thouless-formula consistency report: both the Lyapunov exponent and
/// ∫ log|E-E'| dk(E') are computed independently and compared on the grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThoulessReport {
    pub energies: Vec<f64>,
    pub lyapunov: Vec<f64>,
    pub log_potential: Vec<f64>,
    pub max_error: f64,
}

/// Cross-validate the Lyapunov estimate against the Thouless integral for a
/// periodic word. Grid points should stay ≥ 1e-2 away from band edges.
pub fn thouless_check(w: &Word, grid: &EnergyGrid) -> Result<ThoulessReport> {
    // Reference IDS at high resolution from truncation counting.
    let period = w.len();
    let reps = (4000 / period).max(1);
    let n = period * reps;
    let window: Vec<f64> = w.symbols().iter().cycle().take(n).cloned().collect();
    let ids_grid = EnergyGrid::with_points(
        w.min_symbol() - 2.5,
        w.max_symbol() + 2.5,
        8001,
    )?;
    let ids = ids_curve(|_| window.clone(), 1, n, &ids_grid);
    let cells = ids.cell_masses();

    let energies = grid.points();
    let mut lyapunov = Vec::with_capacity(energies.len());
    let mut log_potential = Vec::with_capacity(energies.len());
    let mut max_error = 0.0_f64;
    for &e in &energies {
        let reps_l = (16384 / period).max(1);
        let n_l = period * reps_l;
        let symbols = w.symbols();
        let l = sl2::lyapunov_estimate(|i| symbols[i % period], e, n_l);
        let integral: f64 = cells
            .iter()
            .filter(|(mid, mass)| *mass > 0.0 && (e - mid).abs() > 1e-12)
            .map(|(mid, mass)| mass * (e - mid).abs().ln())
            .sum();
        max_error = max_error.max((l - integral).abs());
        lyapunov.push(l);
        log_potential.push(integral);
    }
    Ok(ThoulessReport {
        energies,
        lyapunov,
        log_potential,
        max_error,
    })
}

/// Fraction of in-spectrum grid energies whose finite-orbit Lyapunov
/// estimate stays below δ.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KotaniReport {
    pub in_spectrum_cells: usize,
    pub low_lyapunov_cells: usize,
    pub fraction: f64,
    pub delta: f64,
    pub orbit_len: usize,
}

/// Kotani-dichotomy diagnostic: for aperiodic finite-valued potentials the
/// low-Lyapunov fraction of the (approximate) spectrum should shrink with
/// the orbit length; for periodic controls it stays near 1 on the bands.
///
/// The approximate spectrum mask is the set of grid cells that gain
/// eigenvalue mass at truncation `n`, averaged over the sampled phases.
pub fn kotani_diagnostic(
    potential_of_phase: impl Fn(usize) -> Vec<f64> + Sync,
    phases: usize,
    grid: &EnergyGrid,
    n: usize,
    delta: f64,
) -> KotaniReport {
    let ids = ids_curve(&potential_of_phase, phases, n, grid);
    let cells = ids.cell_masses();
    let atom = 0.1 / n as f64;
    let windows: Vec<Vec<f64>> = (0..phases).map(&potential_of_phase).collect();
    let flags: Vec<(bool, bool)> = cells
        .par_iter()
        .map(|&(mid, mass)| {
            if mass <= atom {
                return (false, false);
            }
            let l = windows
                .iter()
                .map(|w| sl2::lyapunov_estimate(|i| w[i % w.len()], mid, n))
                .sum::<f64>()
                / phases as f64;
            (true, l < delta)
        })
        .collect();
    let in_spectrum = flags.iter().filter(|f| f.0).count();
    let low = flags.iter().filter(|f| f.0 && f.1).count();
    KotaniReport {
        in_spectrum_cells: in_spectrum,
        low_lyapunov_cells: low,
        fraction: if in_spectrum == 0 {
            0.0
        } else {
            low as f64 / in_spectrum as f64
        },
        delta,
        orbit_len: n,
    }
}

/// Grid estimate of the energies in Λ admitting a solution of Hu = Eu with
/// |u(0)|² + |u(1)|² = 1 and |u(n)| ≤ γ(1+|n|) for |n| ≤ N.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolyBoundedSet {
    pub gamma: f64,
    pub half_width: usize,
    pub lambda: BandSet,
    pub set: BandSet,
    pub measure: f64,
    pub grid_resolution: f64,
}

/// Solve the difference equation from normalized initial data (cos θ, sin θ)
/// and report max_{|n|≤N} |u(n)|/(1+|n|), capped once it exceeds `cap`.
fn poly_growth_objective(window: &TwoSidedWindow, energy: f64, theta: f64, cap: f64) -> f64 {
    let n = window.half_width();
    let u0 = theta.cos();
    let u1 = theta.sin();
    let mut worst = u0.abs().max(u1.abs() / 2.0);
    // forward: u(m+1) = (E - v(m)) u(m) - u(m-1), m = 1..N-1 seeded by u0,u1
    let mut prev = u0;
    let mut cur = u1;
    for m in 1..=n as i64 {
        if m < n as i64 {
            let v = window.value(m).unwrap();
            let next = (energy - v) * cur - prev;
            prev = cur;
            cur = next;
            let ratio = cur.abs() / (1.0 + (m + 1) as f64);
            if ratio > worst {
                worst = ratio;
            }
        }
        if worst > cap {
            return cap;
        }
    }
    // backward: u(m-1) = (E - v(m)) u(m) - u(m+1), m = 0..-(N-1)
    let mut above = u1;
    let mut cur = u0;
    for m in (-(n as i64) + 1..=0).rev() {
        let v = window.value(m).unwrap();
        let next = (energy - v) * cur - above;
        above = cur;
        cur = next;
        let ratio = cur.abs() / (1.0 + (m - 1).unsigned_abs() as f64);
        if ratio > worst {
            worst = ratio;
        }
        if worst > cap {
            return cap;
        }
    }
    worst
}

/// Minimize the growth objective over the initial direction θ: 256-point
/// grid plus golden-section refinement around the best cell.
fn min_over_directions(window: &TwoSidedWindow, energy: f64, cap: f64) -> f64 {
    let coarse = 256usize;
    let mut best = f64::INFINITY;
    let mut best_theta = 0.0;
    for i in 0..coarse {
        let theta = std::f64::consts::PI * i as f64 / coarse as f64;
        let v = poly_growth_objective(window, energy, theta, cap);
        if v < best {
            best = v;
            best_theta = theta;
        }
    }
    // Golden-section refine on the bracket around the best coarse angle.
    let h = std::f64::consts::PI / coarse as f64;
    let (mut a, mut b) = (best_theta - h, best_theta + h);
    let phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = poly_growth_objective(window, energy, c, cap);
    let mut fd = poly_growth_objective(window, energy, d, cap);
    for _ in 0..40 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = poly_growth_objective(window, energy, c, cap);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = poly_growth_objective(window, energy, d, cap);
        }
    }
    best.min(fc).min(fd)
}

/// Scan Λ on a grid of the given resolution and keep the cells where some
/// initial direction keeps the solution under the γ(1+|n|) envelope.
pub fn poly_bounded_energy_set(
    window: &TwoSidedWindow,
    gamma: f64,
    lambda: &BandSet,
    resolution: f64,
) -> Result<PolyBoundedSet> {
    if gamma < 1.0 {
        return Err(Error::GammaTooSmall { gamma });
    }
    let n = window.half_width();
    let cap = gamma * 16.0;
    let mut kept: Vec<(f64, f64)> = Vec::new();
    for &(lo, hi) in lambda.intervals() {
        let cells = ((hi - lo) / resolution).ceil().max(1.0) as usize;
        let members: Vec<Option<(f64, f64)>> = (0..cells)
            .into_par_iter()
            .map(|i| {
                let e = lo + (i as f64 + 0.5) * (hi - lo) / cells as f64;
                let best = min_over_directions(window, e, cap);
                if best <= gamma {
                    let half = 0.5 * (hi - lo) / cells as f64;
                    Some(((e - half).max(lo), (e + half).min(hi)))
                } else {
                    None
                }
            })
            .collect();
        kept.extend(members.into_iter().flatten());
    }
    let set = BandSet::normalize(&kept)?.intersect(lambda);
    let measure = set.measure();
    Ok(PolyBoundedSet {
        gamma,
        half_width: n,
        lambda: lambda.clone(),
        set,
        measure,
        grid_resolution: resolution,
    })
}

/// Minimal total length of grid cells carrying at least `mass` of dk,
/// filling greedily by decreasing density. Small values at fixed mass under
/// refinement indicate singular concentration.
pub fn singularity_indicator(ids: &IdsSample, mass: f64) -> f64 {
    assert!(mass > 0.0 && mass < 1.0);
    let mut cells: Vec<(f64, f64)> = ids
        .energies
        .windows(2)
        .zip(ids.k.windows(2))
        .map(|(e, k)| (e[1] - e[0], k[1] - k[0]))
        .filter(|&(len, _)| len > 0.0)
        .collect();
    cells.sort_by(|a, b| (b.1 / b.0).partial_cmp(&(a.1 / a.0)).unwrap());
    let mut got = 0.0;
    let mut length = 0.0;
    for (len, dk) in cells {
        if got >= mass {
            break;
        }
        got += dk;
        length += len;
    }
    length
}
