//! Protocol networks: the A-B amplifier, dual-rail two-input gates, the
//! five-reaction conjugation gate, and feed-forward circuits of gates.

mod circuit;

pub use circuit::{
    parse_circuit, run_circuit, Circuit, CircuitError, CircuitParams, CircuitRun, GateNode,
    InputAssignment, ScheduleMode,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crn::{
    validate_birth_system, BirthSystem, BirthSystemError, Configuration, CrnError, Network,
    NetworkBuilder, Reaction, ReactionTag, SpeciesId, StoichVector,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("rate constants must be positive (γ={gamma}, δ={delta})")]
    NonPositiveRate { gamma: f64, delta: f64 },
    #[error("signal `{0}` uses the same species for both rails")]
    SameRails(String),
    #[error("signals share species: {0}")]
    SignalOverlap(String),
    #[error("wrong-rail count {wrong} exceeds (n-Δ)/2 for n={n}, Δ={delta}")]
    GapViolation { n: u64, delta: u64, wrong: u64 },
    #[error("invalid signal spec: {0}")]
    InvalidSpec(String),
    #[error("invalid truth table `{0}`")]
    InvalidTruthTable(String),
    #[error(transparent)]
    Crn(#[from] CrnError),
    #[error(transparent)]
    BirthSystem(#[from] BirthSystemError),
}

/// A Boolean signal carried by two species.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DualRailSignal {
    pub name: String,
    pub rail0: SpeciesId,
    pub rail1: SpeciesId,
}

impl DualRailSignal {
    pub fn new(
        name: impl Into<String>,
        rail0: SpeciesId,
        rail1: SpeciesId,
    ) -> Result<Self, ProtocolError> {
        let name = name.into();
        if rail0 == rail1 {
            return Err(ProtocolError::SameRails(name));
        }
        Ok(DualRailSignal { name, rail0, rail1 })
    }

    /// Interns species `<name>0` and `<name>1`.
    pub fn declare(builder: &mut NetworkBuilder, name: &str) -> Result<Self, ProtocolError> {
        let r0 = builder.species(&format!("{name}0"))?;
        let r1 = builder.species(&format!("{name}1"))?;
        Self::new(name, r0, r1)
    }

    /// Looks up `<name>0` and `<name>1` in an existing network.
    pub fn lookup(network: &Network, name: &str) -> Option<Self> {
        let r0 = network.species_id(&format!("{name}0"))?;
        let r1 = network.species_id(&format!("{name}1"))?;
        Self::new(name, r0, r1).ok()
    }

    pub fn rail(&self, value: bool) -> SpeciesId {
        if value {
            self.rail1
        } else {
            self.rail0
        }
    }

    pub fn rails(&self) -> [SpeciesId; 2] {
        [self.rail0, self.rail1]
    }

    pub fn total(&self, config: &Configuration) -> u64 {
        config.get(self.rail0) + config.get(self.rail1)
    }
}

/// Initial shape of a dual-rail input: total `n`, gap `Δ`, encoded value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub n: u64,
    pub delta: u64,
    pub value: bool,
}

impl SignalSpec {
    pub fn new(n: u64, delta: u64, value: bool) -> Result<Self, ProtocolError> {
        if n == 0 || delta > n {
            return Err(ProtocolError::InvalidSpec(format!(
                "need n >= 1 and Δ <= n (n={n}, Δ={delta})"
            )));
        }
        Ok(SignalSpec { n, delta, value })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RailCounts {
    pub rail0: u64,
    pub rail1: u64,
}

impl RailCounts {
    pub fn write(&self, config: &mut Configuration, signal: &DualRailSignal) {
        config.set(signal.rail0, self.rail0);
        config.set(signal.rail1, self.rail1);
    }
}

/// Wrong rail gets `round(e·n)` (ties to even), the correct rail the rest.
/// Fails unless the result is `(n, Δ)`-correct: wrong rail `<= (n-Δ)/2`.
pub fn make_signal(spec: SignalSpec, error_fraction: f64) -> Result<RailCounts, ProtocolError> {
    if !(0.0..1.0).contains(&error_fraction) {
        return Err(ProtocolError::InvalidSpec(format!(
            "error fraction {error_fraction} outside [0,1)"
        )));
    }
    let wrong = (error_fraction * spec.n as f64).round_ties_even() as u64;
    if 2 * wrong > spec.n - spec.delta {
        return Err(ProtocolError::GapViolation {
            n: spec.n,
            delta: spec.delta,
            wrong,
        });
    }
    let right = spec.n - wrong;
    Ok(if spec.value {
        RailCounts {
            rail0: wrong,
            rail1: right,
        }
    } else {
        RailCounts {
            rail0: right,
            rail1: wrong,
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Readout {
    Zero,
    One,
    Undefined,
}

impl Readout {
    pub fn from_bool(v: bool) -> Self {
        if v {
            Readout::One
        } else {
            Readout::Zero
        }
    }

    pub fn as_bool(self) -> Option<bool> {
        match self {
            Readout::Zero => Some(false),
            Readout::One => Some(true),
            Readout::Undefined => None,
        }
    }
}

impl fmt::Display for Readout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Readout::Zero => "0",
            Readout::One => "1",
            Readout::Undefined => "undefined",
        })
    }
}

pub const DEFAULT_THRESHOLD: f64 = 0.75;

/// `v` when `X^v >= θ (X^0 + X^1)`; undefined otherwise or when empty.
pub fn read_signal(config: &Configuration, signal: &DualRailSignal, theta: f64) -> Readout {
    let x0 = config.get(signal.rail0) as f64;
    let x1 = config.get(signal.rail1) as f64;
    let total = x0 + x1;
    if total == 0.0 {
        return Readout::Undefined;
    }
    if x1 >= theta * total && x1 > x0 {
        Readout::One
    } else if x0 >= theta * total && x0 > x1 {
        Readout::Zero
    } else {
        Readout::Undefined
    }
}

/// Two-input Boolean function; bit `2a + b` counted from the left of the
/// 4-character form, so NAND is `1110`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TruthTable([bool; 4]);

impl TruthTable {
    pub const NAND: TruthTable = TruthTable([true, true, true, false]);
    pub const AND: TruthTable = TruthTable([false, false, false, true]);
    pub const OR: TruthTable = TruthTable([false, true, true, true]);
    pub const NOR: TruthTable = TruthTable([true, false, false, false]);
    pub const XOR: TruthTable = TruthTable([false, true, true, false]);
    pub const XNOR: TruthTable = TruthTable([true, false, false, true]);

    pub fn new(outputs: [bool; 4]) -> Self {
        TruthTable(outputs)
    }

    pub fn eval(&self, a: bool, b: bool) -> bool {
        self.0[2 * usize::from(a) + usize::from(b)]
    }

    pub fn by_name(name: &str) -> Option<Self> {
        Some(match name.to_ascii_uppercase().as_str() {
            "NAND" => Self::NAND,
            "AND" => Self::AND,
            "OR" => Self::OR,
            "NOR" => Self::NOR,
            "XOR" => Self::XOR,
            "XNOR" => Self::XNOR,
            _ => return None,
        })
    }
}

impl FromStr for TruthTable {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bits: Vec<char> = s.chars().collect();
        if bits.len() != 4 || bits.iter().any(|c| *c != '0' && *c != '1') {
            return Err(ProtocolError::InvalidTruthTable(s.to_string()));
        }
        Ok(TruthTable([
            bits[0] == '1',
            bits[1] == '1',
            bits[2] == '1',
            bits[3] == '1',
        ]))
    }
}

impl TryFrom<String> for TruthTable {
    type Error = ProtocolError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<TruthTable> for String {
    fn from(t: TruthTable) -> String {
        t.to_string()
    }
}

impl fmt::Display for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateSpec {
    pub table: TruthTable,
    pub alpha: f64,
}

impl GateSpec {
    pub fn nand(alpha: f64) -> Self {
        GateSpec {
            table: TruthTable::NAND,
            alpha,
        }
    }
}

fn check_rates(gamma: f64, delta: f64) -> Result<(), ProtocolError> {
    if gamma > 0.0 && delta > 0.0 && gamma.is_finite() && delta.is_finite() {
        Ok(())
    } else {
        Err(ProtocolError::NonPositiveRate { gamma, delta })
    }
}

fn check_disjoint(signals: &[&DualRailSignal]) -> Result<(), ProtocolError> {
    let mut seen: Vec<SpeciesId> = Vec::new();
    for s in signals {
        if s.rail0 == s.rail1 {
            return Err(ProtocolError::SameRails(s.name.clone()));
        }
        for r in s.rails() {
            if seen.contains(&r) {
                let names: Vec<_> = signals.iter().map(|s| s.name.as_str()).collect();
                return Err(ProtocolError::SignalOverlap(names.join(", ")));
            }
            seen.push(r);
        }
    }
    Ok(())
}

fn pair(a: SpeciesId, b: SpeciesId) -> StoichVector {
    StoichVector::from_pairs([(a, 1), (b, 1)])
}

/// `A -> 2A`, `B -> 2B` at γ and `A + B -> 0` at δ.
pub fn ab_network(gamma: f64, delta: f64) -> Result<BirthSystem, ProtocolError> {
    check_rates(gamma, delta)?;
    let mut b = Network::builder();
    let sa = b.species("A")?;
    let sb = b.species("B")?;
    b.add_reaction(Reaction::duplication(sa, gamma))?;
    b.add_reaction(Reaction::duplication(sb, gamma))?;
    b.add_reaction(Reaction::new(
        pair(sa, sb),
        StoichVector::new(),
        delta,
        ReactionTag::Death,
    ))?;
    Ok(validate_birth_system(b.build()?, gamma)?)
}

/// Adds the A-B protocol on the two rails of `signal`.
pub fn add_amplifier(
    builder: &mut NetworkBuilder,
    signal: &DualRailSignal,
    gamma: f64,
    delta: f64,
) -> Result<(), ProtocolError> {
    check_rates(gamma, delta)?;
    check_disjoint(&[signal])?;
    builder.ensure_duplication(signal.rail0, gamma)?;
    builder.ensure_duplication(signal.rail1, gamma)?;
    builder.add_reaction(Reaction::new(
        pair(signal.rail0, signal.rail1),
        StoichVector::new(),
        delta,
        ReactionTag::Death,
    ))?;
    Ok(())
}

/// Stand-alone amplifier over species `<name>0`, `<name>1`.
pub fn amplifier_network(
    name: &str,
    gamma: f64,
    delta: f64,
) -> Result<(BirthSystem, DualRailSignal), ProtocolError> {
    let mut b = Network::builder();
    let sig = DualRailSignal::declare(&mut b, name)?;
    add_amplifier(&mut b, &sig, gamma, delta)?;
    Ok((validate_birth_system(b.build()?, gamma)?, sig))
}

/// Adds `A^a + B^b -> A^a + B^b + Y^f(a,b)` for all four `(a, b)`, plus
/// duplications of all six rails. Returns the indices of the four logic
/// reactions.
pub fn add_gate(
    builder: &mut NetworkBuilder,
    inputs: (&DualRailSignal, &DualRailSignal),
    output: &DualRailSignal,
    spec: &GateSpec,
    gamma: f64,
) -> Result<Vec<usize>, ProtocolError> {
    check_rates(gamma, spec.alpha)?;
    let (sa, sb) = inputs;
    check_disjoint(&[sa, sb, output])?;
    let mut logic = Vec::with_capacity(4);
    for a in [false, true] {
        for b in [false, true] {
            let (ra, rb) = (sa.rail(a), sb.rail(b));
            let y = output.rail(spec.table.eval(a, b));
            let products = StoichVector::from_pairs([(ra, 1), (rb, 1), (y, 1)]);
            logic.push(builder.add_reaction(Reaction::new(
                pair(ra, rb),
                products,
                spec.alpha,
                ReactionTag::Logic,
            ))?);
        }
    }
    for s in [sa, sb, output] {
        for r in s.rails() {
            builder.ensure_duplication(r, gamma)?;
        }
    }
    Ok(logic)
}

/// Stand-alone gate over signals named `a`, `b`, `y`.
pub fn gate_network(
    names: (&str, &str, &str),
    spec: &GateSpec,
    gamma: f64,
) -> Result<(BirthSystem, [DualRailSignal; 3]), ProtocolError> {
    let mut b = Network::builder();
    let sa = DualRailSignal::declare(&mut b, names.0)?;
    let sb = DualRailSignal::declare(&mut b, names.1)?;
    let sy = DualRailSignal::declare(&mut b, names.2)?;
    add_gate(&mut b, (&sa, &sb), &sy, spec, gamma)?;
    let sys = validate_birth_system(b.build()?, gamma)?.with_io(
        &[sa.rail0, sa.rail1, sb.rail0, sb.rail1],
        &[sy.rail0, sy.rail1],
    );
    Ok((sys, [sa, sb, sy]))
}

/// The five conjugation reactions of the biological gate, receiver
/// converted and sender kept:
///
/// 1. `A1 + B0 -> A1 + Y0`
/// 2. `A0 + B1 -> A0 + Y0`
/// 3. `A1 + B1 -> A1 + Y0`
/// 4. `A0 + B0 -> A0 + Y1`
/// 5. `A0 + B0 -> Y1 + B0`
///
/// Only `(0, 0)` yields `Y1`, so the list computes NOR.
pub fn add_biological_gate(
    builder: &mut NetworkBuilder,
    inputs: (&DualRailSignal, &DualRailSignal),
    output: &DualRailSignal,
    delta_conj: f64,
    gamma: f64,
) -> Result<Vec<usize>, ProtocolError> {
    check_rates(gamma, delta_conj)?;
    let (sa, sb) = inputs;
    check_disjoint(&[sa, sb, output])?;
    let (a0, a1, b0, b1, y0, y1) = (
        sa.rail0,
        sa.rail1,
        sb.rail0,
        sb.rail1,
        output.rail0,
        output.rail1,
    );
    let list = [
        (a1, b0, a1, y0),
        (a0, b1, a0, y0),
        (a1, b1, a1, y0),
        (a0, b0, a0, y1),
        (a0, b0, y1, b0),
    ];
    let mut idx = Vec::with_capacity(5);
    for (r1, r2, p1, p2) in list {
        idx.push(builder.add_reaction(Reaction::new(
            pair(r1, r2),
            pair(p1, p2),
            delta_conj,
            ReactionTag::Conjugation,
        ))?);
    }
    for s in [sa, sb, output] {
        for r in s.rails() {
            builder.ensure_duplication(r, gamma)?;
        }
    }
    Ok(idx)
}

/// The truth table realised by [`add_biological_gate`].
pub const BIOLOGICAL_GATE_TABLE: TruthTable = TruthTable::NOR;

pub fn biological_gate_network(
    names: (&str, &str, &str),
    delta_conj: f64,
    gamma: f64,
) -> Result<(BirthSystem, [DualRailSignal; 3]), ProtocolError> {
    let mut b = Network::builder();
    let sa = DualRailSignal::declare(&mut b, names.0)?;
    let sb = DualRailSignal::declare(&mut b, names.1)?;
    let sy = DualRailSignal::declare(&mut b, names.2)?;
    add_biological_gate(&mut b, (&sa, &sb), &sy, delta_conj, gamma)?;
    let sys = validate_birth_system(b.build()?, gamma)?.with_io(
        &[sa.rail0, sa.rail1, sb.rail0, sb.rail1],
        &[sy.rail0, sy.rail1],
    );
    Ok((sys, [sa, sb, sy]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ab_network_shape() {
        let sys = ab_network(1.0, 1.0).unwrap();
        assert_eq!(sys.network().reactions().len(), 3);
        assert_eq!(sys.network().species_count(), 2);
        let sys = ab_network(0.01, 1.0).unwrap();
        assert_eq!(sys.network().reactions()[0].rate, 0.01);
        assert_eq!(sys.network().reactions()[2].rate, 1.0);
        assert!(matches!(
            ab_network(1.0, 0.0),
            Err(ProtocolError::NonPositiveRate { .. })
        ));
        assert!(ab_network(-1.0, 1.0).is_err());
    }

    #[test]
    fn amplifiers() {
        let (sys, y) = amplifier_network("Y", 1.0, 1.0).unwrap();
        let death = &sys.network().reactions()[2];
        assert_eq!(death.reactants, pair(y.rail0, y.rail1));
        assert!(death.products.is_empty());

        let mut b = Network::builder();
        let s = DualRailSignal::declare(&mut b, "S").unwrap();
        let t = DualRailSignal::declare(&mut b, "T").unwrap();
        add_amplifier(&mut b, &s, 1.0, 1.0).unwrap();
        add_amplifier(&mut b, &t, 1.0, 1.0).unwrap();
        assert_eq!(b.build().unwrap().reactions().len(), 6);

        assert!(matches!(
            DualRailSignal::new("Z", SpeciesId(0), SpeciesId(0)),
            Err(ProtocolError::SameRails(_))
        ));
        let bad = DualRailSignal {
            name: "Z".into(),
            rail0: s.rail0,
            rail1: s.rail0,
        };
        assert!(matches!(
            add_amplifier(&mut b, &bad, 1.0, 1.0),
            Err(ProtocolError::SameRails(_))
        ));
    }

    fn producing(sys: &BirthSystem, sig: &[DualRailSignal; 3], a: bool, b: bool) -> SpeciesId {
        let net = sys.network();
        let r = net
            .reactions()
            .iter()
            .find(|r| {
                r.tag == ReactionTag::Logic && r.reactants == pair(sig[0].rail(a), sig[1].rail(b))
            })
            .unwrap();
        let y = r.net_change();
        assert_eq!(y.len(), 1);
        y[0].0
    }

    #[test]
    fn gate_truth_tables() {
        let (sys, sig) = gate_network(("A", "B", "Y"), &GateSpec::nand(1.0), 1.0).unwrap();
        assert_eq!(sys.network().reactions().len(), 10);
        assert_eq!(producing(&sys, &sig, true, true), sig[2].rail0);
        for (a, b) in [(false, false), (false, true), (true, false)] {
            assert_eq!(producing(&sys, &sig, a, b), sig[2].rail1);
        }
        let (sys, sig) = gate_network(
            ("A", "B", "Y"),
            &GateSpec {
                table: TruthTable::AND,
                alpha: 2.0,
            },
            1.0,
        )
        .unwrap();
        assert_eq!(sys.network().reactions().len(), 10);
        assert_eq!(producing(&sys, &sig, true, true), sig[2].rail1);
        assert_eq!(producing(&sys, &sig, false, true), sig[2].rail0);
    }

    #[test]
    fn gate_rejects_overlap() {
        let mut b = Network::builder();
        let a = DualRailSignal::declare(&mut b, "A").unwrap();
        let y = DualRailSignal::declare(&mut b, "Y").unwrap();
        assert!(matches!(
            add_gate(&mut b, (&a, &a), &y, &GateSpec::nand(1.0), 1.0),
            Err(ProtocolError::SignalOverlap(_))
        ));
        assert!(matches!(
            add_biological_gate(&mut b, (&a, &y), &y, 1.0, 1.0),
            Err(ProtocolError::SignalOverlap(_))
        ));
    }

    #[test]
    fn biological_gate_shape() {
        let (sys, sig) = biological_gate_network(("A", "B", "Y"), 1e-11, 0.016).unwrap();
        let net = sys.network();
        assert_eq!(net.reactions().len(), 11);
        let [a, b, y] = &sig;
        let has = |r: (SpeciesId, SpeciesId), p: (SpeciesId, SpeciesId)| {
            net.reactions().iter().any(|x| {
                x.reactants == pair(r.0, r.1) && x.products == pair(p.0, p.1) && x.rate == 1e-11
            })
        };
        assert!(has((a.rail0, b.rail0), (a.rail0, y.rail1)));
        assert!(has((a.rail1, b.rail0), (a.rail1, y.rail0)));
        assert!(has((a.rail0, b.rail0), (y.rail1, b.rail0)));
    }

    #[test]
    fn make_signal_examples() {
        let s = SignalSpec::new(100, 80, true).unwrap();
        assert_eq!(
            make_signal(s, 0.1).unwrap(),
            RailCounts {
                rail0: 10,
                rail1: 90
            }
        );
        let s = SignalSpec::new(100, 100, false).unwrap();
        assert_eq!(
            make_signal(s, 0.0).unwrap(),
            RailCounts {
                rail0: 100,
                rail1: 0
            }
        );
        let s = SignalSpec::new(100, 90, true).unwrap();
        assert_eq!(
            make_signal(s, 0.1),
            Err(ProtocolError::GapViolation {
                n: 100,
                delta: 90,
                wrong: 10
            })
        );
        // 0.125 * 20 = 2.5 rounds to 2
        let s = SignalSpec::new(20, 0, true).unwrap();
        assert_eq!(make_signal(s, 0.125).unwrap().rail0, 2);
        assert!(SignalSpec::new(10, 11, true).is_err());
    }

    #[test]
    fn read_signal_examples() {
        let sig = DualRailSignal::new("X", SpeciesId(0), SpeciesId(1)).unwrap();
        let c = |a, b| Configuration(vec![a, b]);
        assert_eq!(read_signal(&c(10, 90), &sig, 0.75), Readout::One);
        assert_eq!(read_signal(&c(50, 50), &sig, 0.75), Readout::Undefined);
        assert_eq!(read_signal(&c(0, 0), &sig, 0.75), Readout::Undefined);
        assert_eq!(read_signal(&c(80, 20), &sig, 0.75), Readout::Zero);
    }

    #[test]
    fn truth_table_strings() {
        assert_eq!(TruthTable::NAND.to_string(), "1110");
        assert_eq!("0110".parse::<TruthTable>().unwrap(), TruthTable::XOR);
        assert!("012".parse::<TruthTable>().is_err());
        assert_eq!(TruthTable::by_name("nor"), Some(BIOLOGICAL_GATE_TABLE));
    }

    proptest! {
        #[test]
        fn encode_then_read(n in 1u64..100_000, e in 0.0f64..0.25, value in any::<bool>()) {
            let wrong = (e * n as f64).round_ties_even() as u64;
            let spec = SignalSpec::new(n, n - 2 * wrong.min(n / 2), value).unwrap();
            let counts = make_signal(spec, e).unwrap();
            let sig = DualRailSignal::new("X", SpeciesId(0), SpeciesId(1)).unwrap();
            let cfg = Configuration(vec![counts.rail0, counts.rail1]);
            // rounding can push the wrong share just above e; stay clear of θ
            prop_assume!((wrong as f64) < 0.25 * n as f64);
            prop_assert_eq!(read_signal(&cfg, &sig, 0.75), Readout::from_bool(value));
        }
    }
}
