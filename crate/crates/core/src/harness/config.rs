//! Experiment configuration, read from TOML. Every section and field is
//! optional; omitted values take the defaults below.
//!
//! ```toml
//! [run]
//! seed = 42
//! workers = 4
//!
//! [ab_sweep]
//! totals = [100, 1000]
//! trials = 500
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::analysis::AuditGrids;
use crate::engine::Method;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    /// 0 uses one worker per available core.
    pub workers: usize,
    pub out: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            seed: 0,
            workers: 0,
            out: PathBuf::from("out"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AbSweepConfig {
    pub totals: Vec<u64>,
    /// Evenly spaced gaps from 0 to `min(n, 8 sqrt(n ln n))`.
    pub points: usize,
    pub trials: u64,
    /// Trials at gap 0, where the symmetry check needs more precision.
    pub trials_at_zero: u64,
    pub gamma: f64,
    pub delta: f64,
    pub max_events: u64,
}

impl Default for AbSweepConfig {
    fn default() -> Self {
        AbSweepConfig {
            totals: vec![100, 1_000, 10_000],
            points: 21,
            trials: 1_000,
            trials_at_zero: 10_000,
            gamma: 1.0,
            delta: 1.0,
            max_events: 50_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AbTimeGridConfig {
    pub size: usize,
    /// log10 range of γ and δ in the rate grid.
    pub rate_log10: (f64, f64),
    /// Initial counts for the rate grid.
    pub rate_grid_init: (u64, u64),
    /// log10 range of A0 and B0 in the population grid.
    pub population_log10: (f64, f64),
    /// (γ, δ) for the population grid.
    pub population_grid_rates: (f64, f64),
    pub trials: u64,
    pub max_events: u64,
}

impl Default for AbTimeGridConfig {
    fn default() -> Self {
        AbTimeGridConfig {
            size: 12,
            rate_log10: (-2.0, 1.0),
            rate_grid_init: (100, 100),
            population_log10: (1.0, 4.0),
            population_grid_rates: (0.01, 1.0),
            trials: 100,
            max_events: 10_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NandSimConfig {
    /// Total initial cells, split evenly between the two inputs.
    pub initial_population: u64,
    pub capacity: u64,
    /// Per minute.
    pub gamma: f64,
    pub delta: f64,
    pub input_error: f64,
    /// Minutes.
    pub t_end: f64,
    pub samples: u64,
    pub points: usize,
    pub method: Method,
    pub tau_epsilon: f64,
}

impl Default for NandSimConfig {
    fn default() -> Self {
        NandSimConfig {
            initial_population: 500_000_000,
            capacity: 1_000_000_000,
            gamma: 0.016,
            delta: 1e-11,
            input_error: 0.1,
            t_end: 30.0,
            samples: 30,
            points: 60,
            method: Method::TauLeap,
            tau_epsilon: 0.03,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoupleCheckConfig {
    pub abm_inits: Vec<(u64, u64)>,
    pub abm_runs: u64,
    pub abm_max_steps: u64,
    pub probe_times: Vec<f64>,
    pub ab_yule_inits: Vec<(u64, u64)>,
    pub ab_yule_runs: u64,
    pub yule_collision_init: (u64, u64),
    pub yule_collision_runs: u64,
    pub limit_samples: u64,
    pub limit_n_max: u64,
    pub ks_samples: u64,
    pub gamma: f64,
    pub delta: f64,
    pub n_max: u64,
    pub tol: f64,
}

impl Default for CoupleCheckConfig {
    fn default() -> Self {
        CoupleCheckConfig {
            abm_inits: vec![(50, 50), (3, 2), (20, 5)],
            abm_runs: 1_000,
            abm_max_steps: 10_000_000,
            probe_times: vec![0.5, 1.0, 2.0],
            ab_yule_inits: vec![(3, 2), (10, 7), (40, 30)],
            ab_yule_runs: 1_000,
            yule_collision_init: (2, 1),
            yule_collision_runs: 100_000,
            limit_samples: 10_000,
            limit_n_max: 1_000_000,
            ks_samples: 2_000,
            gamma: 1.0,
            delta: 1.0,
            n_max: 1 << 24,
            tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircuitRunConfig {
    pub circuit: Option<PathBuf>,
    /// Input values by name.
    pub inputs: Vec<(String, bool)>,
    pub n: u64,
    /// Gap as a fraction of `n`.
    pub gap_fraction: f64,
    pub error_fraction: f64,
    pub trials: u64,
    pub method: Method,
}

impl Default for CircuitRunConfig {
    fn default() -> Self {
        CircuitRunConfig {
            circuit: None,
            inputs: Vec::new(),
            n: 10_000,
            gap_fraction: 0.7,
            error_fraction: 0.15,
            trials: 100,
            method: Method::Exact,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub run: RunSection,
    pub ab_sweep: AbSweepConfig,
    pub ab_time_grid: AbTimeGridConfig,
    pub nand_sim: NandSimConfig,
    pub couple_check: CoupleCheckConfig,
    pub bounds_audit: AuditGrids,
    pub circuit_run: CircuitRunConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }
}
