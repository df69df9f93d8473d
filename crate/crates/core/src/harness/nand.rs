//! The conjugation gate with amplifiers on both inputs and the output,
//! run together under logistic growth. Time is in minutes.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::config::NandSimConfig;
use super::ensemble::run_indexed;
use super::HarnessError;
use crate::crn::{Configuration, Network};
use crate::engine::{simulate, GrowthModel, Sampling, SimulationOptions, StopCondition};
use crate::protocols::{
    add_amplifier, add_biological_gate, make_signal, DualRailSignal, SignalSpec,
    BIOLOGICAL_GATE_TABLE,
};

pub struct NandSimNetwork {
    pub network: Network,
    pub a: DualRailSignal,
    pub b: DualRailSignal,
    pub y: DualRailSignal,
}

pub fn nand_sim_network(cfg: &NandSimConfig) -> Result<NandSimNetwork, HarnessError> {
    let cfg_err = |e: crate::protocols::ProtocolError| HarnessError::Config(e.to_string());
    let mut b = Network::builder();
    let sa = DualRailSignal::declare(&mut b, "A").map_err(cfg_err)?;
    let sb = DualRailSignal::declare(&mut b, "B").map_err(cfg_err)?;
    let sy = DualRailSignal::declare(&mut b, "Y").map_err(cfg_err)?;
    add_biological_gate(&mut b, (&sa, &sb), &sy, cfg.delta, cfg.gamma).map_err(cfg_err)?;
    for s in [&sa, &sb, &sy] {
        add_amplifier(&mut b, s, cfg.gamma, cfg.delta).map_err(cfg_err)?;
    }
    let network = b.build().map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(NandSimNetwork {
        network,
        a: sa,
        b: sb,
        y: sy,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NandSample {
    pub sample: u64,
    pub seed: u64,
    pub series: Vec<(f64, Vec<u64>)>,
    pub correct: u64,
    pub wrong: u64,
    /// Correct output rail strictly larger at the end.
    pub dominates: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NandCombo {
    pub a: bool,
    pub b: bool,
    pub expected: bool,
    pub samples: Vec<NandSample>,
    pub failed: u64,
}

impl NandCombo {
    pub fn dominating(&self) -> usize {
        self.samples.iter().filter(|s| s.dominates).count()
    }

    /// `time,<rails...>,sample`, one block per sample.
    pub fn to_csv(&self, network: &Network) -> String {
        let mut out = String::from("time");
        for n in network.species_names() {
            let _ = write!(out, ",{n}");
        }
        out.push_str(",sample\n");
        for s in &self.samples {
            for (t, counts) in &s.series {
                let _ = write!(out, "{t}");
                for c in counts {
                    let _ = write!(out, ",{c}");
                }
                let _ = writeln!(out, ",{}", s.sample);
            }
        }
        out
    }
}

/// All four input combinations, `samples` seeded runs each; global trial
/// index `4 * sample + combo`.
pub fn nand_sim(
    cfg: &NandSimConfig,
    master_seed: u64,
    workers: usize,
) -> Result<(NandSimNetwork, Vec<NandCombo>), HarnessError> {
    if cfg.samples == 0 || cfg.points == 0 || !(cfg.t_end > 0.0) {
        return Err(HarnessError::Config(
            "nand_sim needs samples, points and t_end > 0".into(),
        ));
    }
    let net = nand_sim_network(cfg)?;
    let per_input = cfg.initial_population / 2;
    let opts = SimulationOptions {
        growth: GrowthModel::logistic(cfg.capacity),
        tau_epsilon: cfg.tau_epsilon,
        sampling: Sampling::Evenly(cfg.points),
        ..SimulationOptions::default()
    };
    let combos = [(false, false), (false, true), (true, false), (true, true)];
    let mut out = Vec::new();
    for (k, &(va, vb)) in combos.iter().enumerate() {
        let mut init = net.network.zero_configuration();
        for (sig, v) in [(&net.a, va), (&net.b, vb)] {
            let spec = SignalSpec::new(per_input, 0, v)
                .map_err(|e| HarnessError::Config(e.to_string()))?;
            make_signal(spec, cfg.input_error)
                .map_err(|e| HarnessError::Config(e.to_string()))?
                .write(&mut init, sig);
        }
        let expected = BIOLOGICAL_GATE_TABLE.eval(va, vb);
        let runs = run_indexed(0, cfg.samples, master_seed, workers, |_, i| {
            let seed = crate::rng::mix64(master_seed, 4 * i + k as u64);
            let o = SimulationOptions {
                seed,
                ..opts.clone()
            };
            simulate(
                cfg.method,
                &net.network,
                &init,
                &StopCondition::TimeHorizon(cfg.t_end),
                &o,
            )
            .map(|t| (i, seed, t))
        })?;
        let mut combo = NandCombo {
            a: va,
            b: vb,
            expected,
            samples: Vec::new(),
            failed: 0,
        };
        for r in runs {
            let Ok((i, seed, t)) = r else {
                combo.failed += 1;
                continue;
            };
            let end: &Configuration = &t.terminal.config;
            let correct = end.get(net.y.rail(expected));
            let wrong = end.get(net.y.rail(!expected));
            combo.samples.push(NandSample {
                sample: i,
                seed,
                series: t.samples.into_iter().map(|(time, c)| (time, c.0)).collect(),
                correct,
                wrong,
                dominates: correct > wrong,
            });
        }
        out.push(combo);
    }
    Ok((net, out))
}
