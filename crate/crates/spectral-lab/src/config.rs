//! Experiment configuration: one structured TOML file with a documented key
//! set. Unknown keys are rejected; every run writes a manifest echoing the
//! fully resolved configuration, defaults included.

use crate::codings::{CodingSystem, TorusCell};
use crate::quasiperiodic::{Rational, SamplingFunction};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub run: RunSection,
    pub bands: BandsParams,
    pub construct: ConstructParams,
    pub coding: CodingParams,
    pub dos: DosParams,
    pub qp: QpParams,
}

impl Config {
    pub fn from_file(path: &std::path::Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            detail: e.to_string(),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub seed: u64,
    pub threads: usize,
    pub out: String,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            seed: 42,
            threads: 0, // 0 = rayon default
            out: "out".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BandsParams {
    pub word: Vec<f64>,
}

impl Default for BandsParams {
    fn default() -> Self {
        BandsParams {
            word: vec![0.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConstructParams {
    pub seed_words: Vec<Vec<f64>>,
    pub stages: u32,
    pub m_cap: u32,
    /// Only the geometric schedule measure(Σ₁)·2^{-(1+ℓ)} is implemented.
    pub budget_schedule: String,
}

impl Default for ConstructParams {
    fn default() -> Self {
        ConstructParams {
            seed_words: vec![vec![0.0], vec![1.0]],
            stages: 3,
            m_cap: 64,
            budget_schedule: "geometric".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum SystemSpec {
    Sturmian {
        alpha: f64,
        labels: (f64, f64),
    },
    Torus {
        alpha: Vec<f64>,
        cells: Vec<CellSpec>,
    },
    Skew {
        alpha: f64,
        cells: Vec<CellSpec>,
    },
    Iet {
        permutation: Vec<usize>,
        lengths: Vec<f64>,
        labels: Vec<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub label: f64,
}

impl SystemSpec {
    pub fn build(&self) -> Result<CodingSystem> {
        match self {
            SystemSpec::Sturmian { alpha, labels } => {
                Ok(CodingSystem::sturmian(*alpha, labels.0, labels.1))
            }
            SystemSpec::Torus { alpha, cells } => {
                CodingSystem::torus(alpha.clone(), cells.iter().map(CellSpec::build).collect())
            }
            SystemSpec::Skew { alpha, cells } => {
                CodingSystem::skew(*alpha, cells.iter().map(CellSpec::build).collect())
            }
            SystemSpec::Iet {
                permutation,
                lengths,
                labels,
            } => CodingSystem::iet(permutation.clone(), lengths.clone(), labels.clone()),
        }
    }
}

impl CellSpec {
    fn build(&self) -> TorusCell {
        TorusCell::new(self.lo.clone(), self.hi.clone(), self.label)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CodingParams {
    pub system: SystemSpec,
    pub n_values: Vec<usize>,
    pub sample_len: usize,
    pub transitivity_n: usize,
    pub transitivity_c: f64,
    pub transitivity_exponent: f64,
    pub phases: usize,
    pub mass_epsilon: f64,
    pub orbit_budget: u64,
    pub diophantine_tau: f64,
    pub diophantine_k: u64,
}

impl Default for CodingParams {
    fn default() -> Self {
        CodingParams {
            system: SystemSpec::Sturmian {
                alpha: crate::codings::GOLDEN_MEAN,
                labels: (0.0, 1.0),
            },
            n_values: (1..=30).collect(),
            sample_len: 100_000,
            transitivity_n: 10,
            transitivity_c: 3.0,
            transitivity_exponent: 2.0,
            phases: 8,
            mass_epsilon: 0.1,
            orbit_budget: 10_000_000,
            diophantine_tau: 1.0,
            diophantine_k: 10_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    /// Periodic repetition of a fixed word; phases cycle the offset.
    Word { symbols: Vec<f64> },
    /// Coding of a dynamical system from seeded random phases.
    Coding { system: SystemSpec },
    /// I.i.d. symbols drawn uniformly from the listed values.
    Iid { values: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DosParams {
    pub potential: PotentialSpec,
    pub truncation: usize,
    pub phases: usize,
    /// Energy grid; None bounds default to [min A - 2.5, max A + 2.5].
    pub grid_lo: Option<f64>,
    pub grid_hi: Option<f64>,
    pub grid_points: usize,
    pub lyapunov_delta: f64,
    pub indicator_mass: f64,
    pub gamma: f64,
    pub poly_half_widths: Vec<usize>,
    pub poly_resolution: f64,
    pub run_poly_bounded: bool,
}

impl Default for DosParams {
    fn default() -> Self {
        DosParams {
            potential: PotentialSpec::Word {
                symbols: vec![0.0, 1.0],
            },
            truncation: 2000,
            phases: 64,
            grid_lo: None,
            grid_hi: None,
            grid_points: 4001,
            lyapunov_delta: 0.02,
            indicator_mass: 0.9,
            gamma: 4.0,
            poly_half_widths: vec![50, 100, 200, 400],
            poly_resolution: 2e-3,
            run_poly_bounded: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum FunctionSpec {
    Constant { value: f64 },
    Cosine { amplitude: f64 },
    Step { breakpoints: Vec<(i64, i64)>, values: Vec<f64> },
    Trig { mean: f64, cos: Vec<f64>, sin: Vec<f64> },
    Tabulated { values: Vec<f64> },
}

impl FunctionSpec {
    pub fn build(&self) -> Result<SamplingFunction> {
        match self {
            FunctionSpec::Constant { value } => Ok(SamplingFunction::constant(*value)),
            FunctionSpec::Cosine { amplitude } => Ok(SamplingFunction::cosine(*amplitude)),
            FunctionSpec::Step {
                breakpoints,
                values,
            } => SamplingFunction::step(
                breakpoints
                    .iter()
                    .map(|&(n, d)| Rational::new(n, d))
                    .collect(),
                values.clone(),
            ),
            FunctionSpec::Trig { mean, cos, sin } => Ok(SamplingFunction::TrigPoly {
                mean: *mean,
                cos: cos.clone(),
                sin: sin.clone(),
            }),
            FunctionSpec::Tabulated { values } => {
                if values.is_empty() {
                    return Err(Error::BadSamplingFunction("empty table".into()));
                }
                Ok(SamplingFunction::Tabulated {
                    values: values.clone(),
                })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QpMode {
    Spectrum,
    GapClose,
    Continuity,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QpParams {
    pub alpha_num: i64,
    pub alpha_den: i64,
    pub f: FunctionSpec,
    pub mode: QpMode,
    pub spectrum_tol: f64,
    pub spectrum_max_phases: usize,
    // gap-closing knobs
    pub interval: (f64, f64),
    pub epsilon: f64,
    pub support_budget: f64,
    pub verification_tol: f64,
    // continuity knobs
    pub continuity_q_cap: i64,
    pub continuity_grid_points: usize,
    pub continuity_phases: usize,
}

impl Default for QpParams {
    fn default() -> Self {
        QpParams {
            alpha_num: 0,
            alpha_den: 1,
            f: FunctionSpec::Step {
                breakpoints: vec![(0, 1), (1, 2)],
                values: vec![0.0, 4.02],
            },
            mode: QpMode::Spectrum,
            spectrum_tol: 1e-4,
            spectrum_max_phases: 1 << 15,
            interval: (1.0, 3.0),
            epsilon: 0.05,
            support_budget: 1e-3,
            verification_tol: 1e-4,
            continuity_q_cap: 89,
            continuity_grid_points: 12_001,
            continuity_phases: 2048,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_roundtrip() {
        let c = Config::default();
        let text = toml::to_string(&c).unwrap();
        let back: Config = toml::from_str(&text).unwrap();
        assert_eq!(back.run.seed, 42);
        assert_eq!(back.construct.stages, 3);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = "[run]\nseed = 7\nbogus_key = 1\n";
        let err = toml::from_str::<Config>(text);
        assert!(err.is_err());
        let msg = format!("{}", err.unwrap_err());
        assert!(msg.contains("bogus_key"), "{msg}");
    }

    #[test]
    fn system_spec_builds() {
        let spec = SystemSpec::Iet {
            permutation: vec![1, 0],
            lengths: vec![0.4, 0.6],
            labels: vec![0.0, 1.0],
        };
        assert!(spec.build().is_ok());
    }

    #[test]
    fn function_spec_builds_step() {
        let spec = FunctionSpec::Step {
            breakpoints: vec![(0, 1), (1, 2)],
            values: vec![0.0, 1.0],
        };
        let f = spec.build().unwrap();
        assert_eq!(f.eval(0.75), 1.0);
    }
}
