//! Seeded Monte Carlo ensembles, the experiment drivers and their reports.
//!
//! Trial `i` of a run always uses seed `mix64(master_seed, i)`, and results
//! are folded in index order, so output is identical for any worker count.

pub mod config;
pub mod couple;
pub mod ensemble;
pub mod nand;
pub mod stats;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use config::ExperimentConfig;
pub use ensemble::{
    ab_ensemble, ab_sweep, ab_time_grid, ab_trial, run_indexed, AbSweepRow, TimeGridRow,
};
pub use stats::{wilson_interval, AbOutcome, EnsembleStats, KsResult};

use crate::analysis::bounds_audit;
use crate::engine::SimulationOptions;
use crate::protocols::{parse_circuit, run_circuit, InputAssignment, Readout, SignalSpec};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    AbSweep,
    AbTimeGrid,
    NandSim,
    CoupleCheck,
    BoundsAudit,
    CircuitRun,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::AbSweep => "ab-sweep",
            Experiment::AbTimeGrid => "ab-time-grid",
            Experiment::NandSim => "nand-sim",
            Experiment::CoupleCheck => "couple-check",
            Experiment::BoundsAudit => "bounds-audit",
            Experiment::CircuitRun => "circuit-run",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

impl OutputFile {
    pub fn new(name: impl Into<String>, contents: impl Into<String>) -> Self {
        OutputFile {
            name: name.into(),
            contents: contents.into(),
        }
    }

    fn json<T: Serialize>(name: &str, value: &T) -> Self {
        OutputFile::new(
            name,
            serde_json::to_string_pretty(value).expect("serializable") + "\n",
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub files: Vec<OutputFile>,
    /// Short machine-readable summary, also printed by the CLI.
    pub summary: serde_json::Value,
    /// Deterministic invariant violations (couple-check only).
    pub violations: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub config: ExperimentConfig,
    pub master_seed: u64,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    /// sha256 of every emitted file.
    pub files: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: Vec<String>, config: &ExperimentConfig) -> Self {
        RunManifest {
            command,
            config: config.clone(),
            master_seed: config.run.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            files: BTreeMap::new(),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `files` into `dir` and a `manifest.json` listing their checksums.
pub fn emit_report(
    dir: &Path,
    files: &[OutputFile],
    mut manifest: RunManifest,
) -> Result<PathBuf, HarnessError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| HarnessError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    for f in files {
        let path = dir.join(&f.name);
        std::fs::write(&path, &f.contents).map_err(io(&path))?;
        manifest
            .files
            .insert(f.name.clone(), sha256_hex(f.contents.as_bytes()));
    }
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("serializable") + "\n";
    std::fs::write(&path, text).map_err(io(&path))?;
    Ok(path)
}

fn csv<T>(header: &str, rows: &[T], line: impl Fn(&T) -> String) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for r in rows {
        out.push_str(&line(r));
        out.push('\n');
    }
    out
}

/// Runs one experiment from its config section.
pub fn run_experiment(
    kind: Experiment,
    cfg: &ExperimentConfig,
) -> Result<ExperimentOutput, HarnessError> {
    let seed = cfg.run.seed;
    let workers = cfg.run.workers;
    match kind {
        Experiment::AbSweep => {
            let rows = ab_sweep(&cfg.ab_sweep, seed, workers)?;
            let summary = serde_json::json!({
                "points": rows.len(),
                "trials": rows.iter().map(|r| r.stats.trials).sum::<u64>(),
            });
            Ok(ExperimentOutput {
                files: vec![
                    OutputFile::new(
                        "ab_sweep.csv",
                        csv(AbSweepRow::CSV_HEADER, &rows, AbSweepRow::csv_line),
                    ),
                    OutputFile::json("ab_sweep.json", &rows),
                ],
                summary,
                violations: 0,
            })
        }
        Experiment::AbTimeGrid => {
            let rows = ab_time_grid(&cfg.ab_time_grid, seed, workers)?;
            let summary = serde_json::json!({
                "points": rows.len(),
                "no_consensus": rows.iter().map(|r| r.stats.no_consensus).sum::<u64>(),
            });
            Ok(ExperimentOutput {
                files: vec![
                    OutputFile::new(
                        "ab_time_grid.csv",
                        csv(TimeGridRow::CSV_HEADER, &rows, TimeGridRow::csv_line),
                    ),
                    OutputFile::json("ab_time_grid.json", &rows),
                ],
                summary,
                violations: 0,
            })
        }
        Experiment::NandSim => {
            let (net, combos) = nand::nand_sim(&cfg.nand_sim, seed, workers)?;
            let mut files = Vec::new();
            let mut verdicts = Vec::new();
            for c in &combos {
                let tag = format!("{}{}", u8::from(c.a), u8::from(c.b));
                files.push(OutputFile::new(
                    format!("nand_sim_{tag}.csv"),
                    c.to_csv(&net.network),
                ));
                verdicts.push(serde_json::json!({
                    "inputs": tag,
                    "expected": u8::from(c.expected),
                    "samples": c.samples.len(),
                    "dominating": c.dominating(),
                    "failed": c.failed,
                }));
            }
            let summary = serde_json::json!({ "combos": verdicts });
            files.push(OutputFile::json("nand_sim.json", &summary));
            Ok(ExperimentOutput {
                files,
                summary,
                violations: 0,
            })
        }
        Experiment::CoupleCheck => {
            let report = couple::couple_check(&cfg.couple_check, seed, workers)?;
            let summary = serde_json::json!({
                "violations": report.violations,
                "yule_collision": report.yule_collision.frequency,
                "ab_collisions": report.ab_yule.iter().map(|s| s.p_ab_collision).collect::<Vec<_>>(),
                "ks_p_values": report.stuttering.iter().map(|s| s.ks.p_value).collect::<Vec<_>>(),
            });
            Ok(ExperimentOutput {
                files: vec![OutputFile::json("couple_check.json", &report)],
                summary,
                violations: report.violations,
            })
        }
        Experiment::BoundsAudit => {
            let grids = crate::analysis::AuditGrids {
                seed,
                ..cfg.bounds_audit.clone()
            };
            let reports = bounds_audit(&grids);
            let mut files = vec![OutputFile::json("bounds_audit.json", &reports)];
            for r in &reports {
                files.push(OutputFile::new(
                    format!("bounds_audit_{}.csv", r.name),
                    r.to_csv(),
                ));
            }
            let summary: BTreeMap<_, _> = reports
                .iter()
                .map(|r| (r.name.clone(), r.summary.clone()))
                .collect();
            Ok(ExperimentOutput {
                files,
                summary: serde_json::to_value(summary).expect("serializable"),
                violations: 0,
            })
        }
        Experiment::CircuitRun => circuit_experiment(cfg),
    }
}

fn circuit_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput, HarnessError> {
    let cc = &cfg.circuit_run;
    let path = cc
        .circuit
        .as_ref()
        .ok_or_else(|| HarnessError::Config("circuit_run.circuit is not set".into()))?;
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.clone(),
        source,
    })?;
    let circuit = parse_circuit(&text)
        .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    let delta = (cc.gap_fraction * cc.n as f64).round() as u64;
    let inputs: Vec<InputAssignment> = cc
        .inputs
        .iter()
        .map(|(name, v)| {
            Ok(InputAssignment {
                name: name.clone(),
                spec: SignalSpec::new(cc.n, delta, *v)
                    .map_err(|e| HarnessError::Config(e.to_string()))?,
                error_fraction: cc.error_fraction,
            })
        })
        .collect::<Result<_, HarnessError>>()?;
    let runs = run_indexed(0, cc.trials, cfg.run.seed, cfg.run.workers, |s, _| {
        run_circuit(
            &circuit,
            &inputs,
            cc.method,
            &SimulationOptions::with_seed(s).stop_only(),
        )
        .map(|r| (s, r.readouts))
        .map_err(|e| e.to_string())
    })?;
    let mut table = String::from("trial,seed");
    for o in &circuit.outputs {
        let _ = write!(table, ",{o}");
    }
    table.push('\n');
    let mut counts: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
    for (i, r) in runs.iter().enumerate() {
        let (s, readouts) = r.as_ref().map_err(|e| HarnessError::Config(e.clone()))?;
        let _ = write!(table, "{i},{s}");
        for o in &circuit.outputs {
            let v = readouts[o];
            let _ = write!(table, ",{v}");
            *counts
                .entry(o.clone())
                .or_default()
                .entry(v.to_string())
                .or_default() += 1;
        }
        table.push('\n');
    }
    let given: BTreeMap<String, bool> = cc.inputs.iter().cloned().collect();
    let values = circuit
        .evaluate(&given)
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let expected: BTreeMap<&String, Readout> = circuit
        .outputs
        .iter()
        .map(|o| (o, Readout::from_bool(values[o])))
        .collect();
    let correct: BTreeMap<&String, u64> = expected
        .iter()
        .map(|(o, r)| {
            (
                *o,
                counts
                    .get(*o)
                    .and_then(|c| c.get(&r.to_string()))
                    .copied()
                    .unwrap_or(0),
            )
        })
        .collect();
    let summary = serde_json::json!({
        "trials": cc.trials,
        "readouts": counts,
        "expected": expected,
        "correct": correct,
    });
    Ok(ExperimentOutput {
        files: vec![
            OutputFile::new("circuit_run.csv", table),
            OutputFile::json("circuit_run.json", &summary),
        ],
        summary,
        violations: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_json_round_trip() {
        let s = EnsembleStats::from_outcomes(&[
            AbOutcome::Majority(0.1 + 0.2),
            AbOutcome::Minority(1e-300),
        ]);
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<EnsembleStats>(&text).unwrap(), s);
    }

    #[test]
    fn emit_writes_manifest_with_checksums() {
        let dir = tempfile::tempdir().unwrap();
        let files = [OutputFile::new("a.csv", "x\n1\n")];
        let m = RunManifest::new(vec!["growthsim".into()], &ExperimentConfig::default());
        let path = emit_report(dir.path(), &files, m).unwrap();
        let back: RunManifest =
            serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        assert_eq!(back.files["a.csv"], sha256_hex(b"x\n1\n"));
        assert_eq!(back.config, ExperimentConfig::default());
    }

    #[test]
    fn io_errors_name_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("f");
        std::fs::write(&blocker, "").unwrap();
        let m = RunManifest::new(vec![], &ExperimentConfig::default());
        let err = emit_report(&blocker.join("sub"), &[], m).unwrap_err();
        assert!(err.to_string().contains("sub"), "{err}");
    }
}
