//! Feed-forward circuits of dual-rail gates.
//!
//! Circuit files are line oriented. `#` starts a comment.
//!
//! ```text
//! input a b
//! output y
//! param gamma 1
//! param mode sequential
//! gate g1 = NAND(a, b) -> c
//! gate g2 = 0110(a, c) -> y
//! ```
//!
//! A gate function is a named table (`NAND`, `AND`, `OR`, `NOR`, `XOR`,
//! `XNOR`) or a 4-bit literal listing `f(0,0) f(0,1) f(1,0) f(1,1)`.
//! Parameters: `gamma`, `alpha`, `delta`, `theta`, `mode`
//! (`sequential` | `parallel`), `horizon` (parallel run length) and
//! `amp_cap` (`c` in the phase cap `c ln(n) / γ`).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    add_amplifier, add_gate, make_signal, read_signal, DualRailSignal, GateSpec, ProtocolError,
    Readout, SignalSpec, TruthTable, DEFAULT_THRESHOLD,
};
use crate::crn::{Configuration, Network, ReactionTag, SpeciesId};
use crate::engine::{
    simulate, EngineError, Method, SimulationOptions, StopCondition, Terminal, Trajectory,
};
use crate::rng::mix64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid circuit: {0}")]
    Invalid(String),
    #[error("missing assignment for input `{0}`")]
    MissingInput(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleMode {
    Sequential,
    Parallel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateNode {
    pub name: String,
    pub table: TruthTable,
    pub inputs: (String, String),
    pub output: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    pub gamma: f64,
    pub alpha: f64,
    pub delta: f64,
    pub theta: f64,
    pub mode: ScheduleMode,
    pub horizon: f64,
    pub amp_cap: f64,
}

impl Default for CircuitParams {
    fn default() -> Self {
        CircuitParams {
            gamma: 1.0,
            alpha: 1.0,
            delta: 1.0,
            theta: DEFAULT_THRESHOLD,
            mode: ScheduleMode::Sequential,
            horizon: 10.0,
            amp_cap: 8.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub gates: Vec<GateNode>,
    pub params: CircuitParams,
}

fn perr(line: usize, message: impl Into<String>) -> CircuitError {
    CircuitError::Parse {
        line,
        message: message.into(),
    }
}

fn is_ident(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_gate(line: usize, rest: &str) -> Result<GateNode, CircuitError> {
    let (name, rhs) = rest
        .split_once('=')
        .ok_or_else(|| perr(line, "expected `gate <name> = F(a, b) -> y`"))?;
    let name = name.trim();
    let (call, output) = rhs
        .split_once("->")
        .ok_or_else(|| perr(line, "missing `-> <output>`"))?;
    let (func, args) = call
        .trim()
        .split_once('(')
        .ok_or_else(|| perr(line, "missing argument list"))?;
    let args = args
        .trim()
        .strip_suffix(')')
        .ok_or_else(|| perr(line, "unclosed argument list"))?;
    let args: Vec<&str> = args.split(',').map(str::trim).collect();
    if args.len() != 2 {
        return Err(perr(line, "a gate takes exactly two inputs"));
    }
    let func = func.trim();
    let table = TruthTable::by_name(func)
        .or_else(|| func.parse().ok())
        .ok_or_else(|| perr(line, format!("unknown gate function `{func}`")))?;
    let output = output.trim();
    for id in [name, args[0], args[1], output] {
        if !is_ident(id) {
            return Err(perr(line, format!("invalid name `{id}`")));
        }
    }
    Ok(GateNode {
        name: name.to_string(),
        table,
        inputs: (args[0].to_string(), args[1].to_string()),
        output: output.to_string(),
    })
}

fn parse_param(
    line: usize,
    params: &mut CircuitParams,
    key: &str,
    value: &str,
) -> Result<(), CircuitError> {
    if key == "mode" {
        params.mode = match value {
            "sequential" => ScheduleMode::Sequential,
            "parallel" => ScheduleMode::Parallel,
            _ => return Err(perr(line, format!("unknown mode `{value}`"))),
        };
        return Ok(());
    }
    let v: f64 = value
        .parse()
        .map_err(|_| perr(line, format!("`{value}` is not a number")))?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(perr(line, format!("{key} must be positive")));
    }
    match key {
        "gamma" => params.gamma = v,
        "alpha" => params.alpha = v,
        "delta" => params.delta = v,
        "theta" if v > 0.5 && v <= 1.0 => params.theta = v,
        "theta" => return Err(perr(line, "theta must lie in (1/2, 1]")),
        "horizon" => params.horizon = v,
        "amp_cap" => params.amp_cap = v,
        _ => return Err(perr(line, format!("unknown parameter `{key}`"))),
    }
    Ok(())
}

pub fn parse_circuit(text: &str) -> Result<Circuit, CircuitError> {
    let mut c = Circuit {
        inputs: Vec::new(),
        outputs: Vec::new(),
        gates: Vec::new(),
        params: CircuitParams::default(),
    };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (kw, rest) = body.split_once(char::is_whitespace).unwrap_or((body, ""));
        let rest = rest.trim();
        match kw {
            "input" | "output" => {
                let names: Vec<String> = rest
                    .split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .map(str::to_string)
                    .collect();
                if names.is_empty() || names.iter().any(|n| !is_ident(n)) {
                    return Err(perr(line, format!("bad {kw} declaration")));
                }
                if kw == "input" {
                    c.inputs.extend(names);
                } else {
                    c.outputs.extend(names);
                }
            }
            "gate" => c.gates.push(parse_gate(line, rest)?),
            "param" => {
                let mut it = rest.split_whitespace();
                let (Some(k), Some(v), None) = (it.next(), it.next(), it.next()) else {
                    return Err(perr(line, "expected `param <name> <value>`"));
                };
                parse_param(line, &mut c.params, k, v)?;
            }
            _ => return Err(perr(line, format!("unknown keyword `{kw}`"))),
        }
    }
    c.layers()?;
    Ok(c)
}

impl Circuit {
    /// Gate indices grouped by depth. Fails on cycles, undriven signals,
    /// signals driven twice, or outputs that nothing produces.
    pub fn layers(&self) -> Result<Vec<Vec<usize>>, CircuitError> {
        let mut depth: BTreeMap<&str, usize> = BTreeMap::new();
        for i in &self.inputs {
            if depth.insert(i, 0).is_some() {
                return Err(CircuitError::Invalid(format!("input `{i}` declared twice")));
            }
        }
        let mut names = BTreeSet::new();
        let mut driven = BTreeSet::new();
        for g in &self.gates {
            if !names.insert(g.name.as_str()) {
                return Err(CircuitError::Invalid(format!(
                    "gate `{}` defined twice",
                    g.name
                )));
            }
            if depth.contains_key(g.output.as_str()) || !driven.insert(g.output.as_str()) {
                return Err(CircuitError::Invalid(format!(
                    "signal `{}` has more than one driver",
                    g.output
                )));
            }
            if g.inputs.0 == g.inputs.1 || g.inputs.0 == g.output || g.inputs.1 == g.output {
                return Err(CircuitError::Invalid(format!(
                    "gate `{}` reuses a signal",
                    g.name
                )));
            }
        }
        let mut gate_depth = vec![None; self.gates.len()];
        let mut progress = true;
        while progress {
            progress = false;
            for (k, g) in self.gates.iter().enumerate() {
                if gate_depth[k].is_some() {
                    continue;
                }
                if let (Some(&da), Some(&db)) = (
                    depth.get(g.inputs.0.as_str()),
                    depth.get(g.inputs.1.as_str()),
                ) {
                    let d = da.max(db);
                    gate_depth[k] = Some(d);
                    depth.insert(&g.output, d + 1);
                    progress = true;
                }
            }
        }
        if let Some(k) = gate_depth.iter().position(Option::is_none) {
            return Err(CircuitError::Invalid(format!(
                "gate `{}` has an undriven input or sits on a cycle",
                self.gates[k].name
            )));
        }
        for o in &self.outputs {
            if !depth.contains_key(o.as_str()) {
                return Err(CircuitError::Invalid(format!(
                    "output `{o}` is never driven"
                )));
            }
        }
        let levels = gate_depth.iter().flatten().max().map_or(0, |m| m + 1);
        let mut layers = vec![Vec::new(); levels];
        for (k, d) in gate_depth.into_iter().enumerate() {
            layers[d.expect("checked")].push(k);
        }
        Ok(layers)
    }

    /// Boolean value of every signal for the given input values.
    pub fn evaluate(
        &self,
        inputs: &BTreeMap<String, bool>,
    ) -> Result<BTreeMap<String, bool>, CircuitError> {
        let mut values = BTreeMap::new();
        for name in &self.inputs {
            let v = *inputs
                .get(name)
                .ok_or_else(|| CircuitError::MissingInput(name.clone()))?;
            values.insert(name.clone(), v);
        }
        for layer in self.layers()? {
            for k in layer {
                let g = &self.gates[k];
                let v = g.table.eval(values[&g.inputs.0], values[&g.inputs.1]);
                values.insert(g.output.clone(), v);
            }
        }
        Ok(values)
    }

    fn signal_names(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.inputs.iter().map(String::as_str).collect();
        v.extend(self.gates.iter().map(|g| g.output.as_str()));
        v
    }
}

/// An input value with its encoding: total, gap, and wrong-rail fraction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputAssignment {
    pub name: String,
    pub spec: SignalSpec,
    pub error_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CircuitRun {
    pub readouts: BTreeMap<String, Readout>,
    pub unresolved: Vec<String>,
    pub trajectory: Trajectory,
    #[serde(skip)]
    pub network: Network,
}

struct Built {
    network: Network,
    signals: BTreeMap<String, DualRailSignal>,
    gate_reactions: Vec<Vec<usize>>,
    amp_reactions: BTreeMap<String, usize>,
}

fn build(circuit: &Circuit) -> Result<Built, CircuitError> {
    let p = &circuit.params;
    let mut b = Network::builder();
    let mut signals = BTreeMap::new();
    for name in circuit.signal_names() {
        signals.insert(name.to_string(), DualRailSignal::declare(&mut b, name)?);
    }
    let spec = |t| GateSpec {
        table: t,
        alpha: p.alpha,
    };
    let mut gate_reactions = Vec::new();
    for g in &circuit.gates {
        let (a, bb, y) = (
            &signals[&g.inputs.0],
            &signals[&g.inputs.1],
            &signals[&g.output],
        );
        gate_reactions.push(add_gate(&mut b, (a, bb), y, &spec(g.table), p.gamma)?);
    }
    let mut amp_reactions = BTreeMap::new();
    for name in circuit.signal_names() {
        add_amplifier(&mut b, &signals[name], p.gamma, p.delta)?;
        amp_reactions.insert(name.to_string(), b.reactions().len() - 1);
    }
    Ok(Built {
        network: b.build().map_err(ProtocolError::from)?,
        signals,
        gate_reactions,
        amp_reactions,
    })
}

fn duplication_of(net: &Network, s: SpeciesId) -> usize {
    net.reactions()
        .iter()
        .position(|r| r.tag == ReactionTag::Duplication && r.duplicated_species() == Some(s))
        .expect("every rail duplicates")
}

/// Appends a phase run starting at `offset`, mapping its reaction indices
/// back to the full network.
fn append(acc: &mut Option<Trajectory>, mut part: Trajectory, offset: f64, map: &[usize]) {
    for s in &mut part.samples {
        s.0 += offset;
    }
    for e in &mut part.events {
        e.time += offset;
        e.reaction = map[e.reaction];
    }
    part.terminal.time += offset;
    match acc {
        None => *acc = Some(part),
        Some(t) => {
            let mut samples = part.samples.into_iter().peekable();
            if let (Some(last), Some(first)) = (t.samples.last(), samples.peek()) {
                if last.0 == first.0 {
                    samples.next();
                }
            }
            t.samples.extend(samples);
            t.events.extend(part.events);
            t.event_count += part.event_count;
            t.terminal = part.terminal;
        }
    }
}

/// Runs `circuit` on the given inputs.
///
/// Sequential mode works layer by layer. Each gate runs alone (its four
/// logic reactions plus duplication of its six rails) until its output
/// reaches the smaller of its input totals, then the output's amplifier
/// runs until one rail is gone or `amp_cap · ln(n) / γ` elapses. Parallel
/// mode runs the whole network, with an amplifier on every signal, to the
/// `horizon` parameter. Each phase draws its seed as `mix64(seed, phase)`.
pub fn run_circuit(
    circuit: &Circuit,
    inputs: &[InputAssignment],
    method: Method,
    opts: &SimulationOptions,
) -> Result<CircuitRun, CircuitError> {
    circuit.layers()?;
    let built = build(circuit)?;
    let net = &built.network;
    let mut config = net.zero_configuration();
    for name in &circuit.inputs {
        let a = inputs
            .iter()
            .find(|a| &a.name == name)
            .ok_or_else(|| CircuitError::MissingInput(name.clone()))?;
        make_signal(a.spec, a.error_fraction)?.write(&mut config, &built.signals[name]);
    }
    let p = &circuit.params;
    let mut acc: Option<Trajectory> = None;
    match p.mode {
        ScheduleMode::Parallel => {
            let all: Vec<usize> = (0..net.reactions().len()).collect();
            let run = simulate(
                method,
                net,
                &config,
                &StopCondition::TimeHorizon(p.horizon),
                &SimulationOptions {
                    seed: mix64(opts.seed, 0),
                    ..opts.clone()
                },
            )?;
            config = run.terminal.config.clone();
            append(&mut acc, run, 0.0, &all);
        }
        ScheduleMode::Sequential => {
            let mut t = 0.0;
            let mut phase = 0u64;
            let mut run_phase =
                |map: Vec<usize>, stop: StopCondition, config: &mut Configuration, t: &mut f64| {
                    let sub = net.subnetwork(&map);
                    let run = simulate(
                        method,
                        &sub,
                        config,
                        &stop,
                        &SimulationOptions {
                            seed: mix64(opts.seed, phase),
                            ..opts.clone()
                        },
                    )?;
                    phase += 1;
                    *config = run.terminal.config.clone();
                    let dt = run.terminal.time;
                    append(&mut acc, run, *t, &map);
                    *t += dt;
                    Ok::<_, CircuitError>(())
                };
            for layer in circuit.layers()? {
                for k in layer {
                    let g = &circuit.gates[k];
                    let (a, b, y) = (
                        &built.signals[&g.inputs.0],
                        &built.signals[&g.inputs.1],
                        &built.signals[&g.output],
                    );
                    let n = a.total(&config).min(b.total(&config)).max(1);
                    let cap = p.amp_cap * (n as f64).ln().max(1.0) / p.gamma;
                    let mut map = built.gate_reactions[k].clone();
                    for s in [a, b, y] {
                        map.extend(s.rails().map(|r| duplication_of(net, r)));
                    }
                    let stop = StopCondition::any([
                        StopCondition::TargetCount(y.rails().to_vec(), n),
                        StopCondition::TimeHorizon(cap),
                    ]);
                    run_phase(map, stop, &mut config, &mut t)?;

                    let mut map: Vec<usize> = y.rails().map(|r| duplication_of(net, r)).to_vec();
                    map.push(built.amp_reactions[&g.output]);
                    let stop = StopCondition::any([
                        StopCondition::Consensus(y.rail0, y.rail1),
                        StopCondition::TimeHorizon(cap),
                    ]);
                    run_phase(map, stop, &mut config, &mut t)?;
                }
            }
            if acc.is_none() {
                // no gates: a zero-length record of the inputs
                acc = Some(Trajectory {
                    samples: vec![(0.0, config.clone())],
                    terminal: Terminal {
                        time: 0.0,
                        config: config.clone(),
                        fired: StopCondition::TimeHorizon(0.0),
                    },
                    event_count: 0,
                    events: Vec::new(),
                });
            }
        }
    }
    let mut readouts = BTreeMap::new();
    let mut unresolved = Vec::new();
    for o in &circuit.outputs {
        let r = read_signal(&config, &built.signals[o], p.theta);
        if r == Readout::Undefined {
            unresolved.push(o.clone());
        }
        readouts.insert(o.clone(), r);
    }
    Ok(CircuitRun {
        readouts,
        unresolved,
        trajectory: acc.expect("set above"),
        network: built.network,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const XOR: &str = "\
input a b
output y
gate g1 = NAND(a, b) -> c
gate g2 = NAND(a, c) -> d
gate g3 = NAND(b, c) -> e   # comment
gate g4 = NAND(d, e) -> y
";

    #[test]
    fn parses_and_layers() {
        let c = parse_circuit(XOR).unwrap();
        assert_eq!(c.inputs, ["a", "b"]);
        assert_eq!(c.gates.len(), 4);
        assert_eq!(c.layers().unwrap(), vec![vec![0], vec![1, 2], vec![3]]);
        let c =
            parse_circuit("input a b\noutput y\nparam mode parallel\ngate g = 0110(a,b) -> y\n")
                .unwrap();
        assert_eq!(c.gates[0].table, TruthTable::XOR);
        assert_eq!(c.params.mode, ScheduleMode::Parallel);
    }

    #[test]
    fn evaluates_xor() {
        let c = parse_circuit(XOR).unwrap();
        for (a, b) in [(false, false), (true, false), (false, true), (true, true)] {
            let v = c
                .evaluate(&[("a".to_string(), a), ("b".to_string(), b)].into())
                .unwrap();
            assert_eq!(v["y"], a ^ b);
        }
    }

    #[test]
    fn rejects_bad_circuits() {
        assert!(matches!(
            parse_circuit("input a\nfoo\n"),
            Err(CircuitError::Parse { line: 2, .. })
        ));
        assert!(parse_circuit("input a b\ngate g = NAND(a, b, a) -> y\n").is_err());
        assert!(parse_circuit("input a b\ngate g = MAJ(a, b) -> y\n").is_err());
        assert!(matches!(
            parse_circuit("input a\ngate g = NAND(a, z) -> y\n"),
            Err(CircuitError::Invalid(_))
        ));
        assert!(matches!(
            parse_circuit("input a\ngate g = NAND(a, h) -> y\ngate k = NAND(a, y) -> h\n"),
            Err(CircuitError::Invalid(_))
        ));
        assert!(parse_circuit("input a b\noutput q\ngate g = NAND(a, b) -> y\n").is_err());
        assert!(
            parse_circuit("input a b\ngate g = NAND(a, b) -> y\ngate h = OR(a, b) -> y\n").is_err()
        );
        assert!(parse_circuit("param theta 0.4\n").is_err());
    }

    fn assign(a: bool, b: bool, n: u64) -> Vec<InputAssignment> {
        [("a", a), ("b", b)]
            .into_iter()
            .map(|(name, v)| InputAssignment {
                name: name.into(),
                spec: SignalSpec::new(n, 7 * n / 10, v).unwrap(),
                error_fraction: 0.15,
            })
            .collect()
    }

    #[test]
    fn xor_sequential_small() {
        let c = parse_circuit(XOR).unwrap();
        let opts = SimulationOptions::with_seed(7).stop_only();
        for (a, b) in [(false, false), (true, false), (false, true), (true, true)] {
            let run = run_circuit(&c, &assign(a, b, 2000), Method::Exact, &opts).unwrap();
            assert_eq!(run.readouts["y"], Readout::from_bool(a ^ b), "({a},{b})");
            assert!(run.unresolved.is_empty());
        }
    }

    #[test]
    fn sequential_trajectory_is_replayable() {
        let c = parse_circuit("input a b\noutput y\ngate g = NAND(a, b) -> y\n").unwrap();
        let opts = SimulationOptions {
            record_events: true,
            ..SimulationOptions::with_seed(3).stop_only()
        };
        let run = run_circuit(&c, &assign(true, true, 300), Method::Exact, &opts).unwrap();
        let init = run.trajectory.samples[0].1.clone();
        let end = crate::engine::replay(&run.network, &init, &run.trajectory.events).unwrap();
        assert_eq!(end, run.trajectory.terminal.config);
        let times: Vec<f64> = run.trajectory.events.iter().map(|e| e.time).collect();
        assert!(times.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn missing_input_is_reported() {
        let c = parse_circuit(XOR).unwrap();
        let err = run_circuit(
            &c,
            &assign(true, true, 100)[..1],
            Method::Exact,
            &SimulationOptions::default(),
        );
        assert_eq!(err.unwrap_err(), CircuitError::MissingInput("b".into()));
    }
}
