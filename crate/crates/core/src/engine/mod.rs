//! Exact (Gillespie direct method) and tau-leaping simulation.

mod stop;

pub use stop::{check_stop, StopCondition};

use std::fmt::Write as _;

use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crn::{Configuration, CrnError, Network, ReactionTag, SpeciesId};
use crate::rng::{exp1, rng_from_seed, uniform01, SimRng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogisticScope {
    Duplications,
    AllReactions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthModel {
    Pure,
    /// Propensities in scope are scaled by `max(0, 1 - N/K)`, where `N` is
    /// the total over `counted` (all species when `None`).
    Logistic {
        capacity: u64,
        counted: Option<Vec<SpeciesId>>,
        scope: LogisticScope,
    },
}

impl GrowthModel {
    pub fn logistic(capacity: u64) -> Self {
        GrowthModel::Logistic {
            capacity,
            counted: None,
            scope: LogisticScope::Duplications,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    EveryEvent,
    Interval(f64),
    /// `k` evenly spaced intervals over the stop condition's time horizon;
    /// initial and terminal state only when there is no horizon.
    Evenly(usize),
    StopOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationOptions {
    pub seed: u64,
    pub growth: GrowthModel,
    pub tau_epsilon: f64,
    pub tau_exact_switch: f64,
    pub sampling: Sampling,
    pub record_events: bool,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        SimulationOptions {
            seed: 0,
            growth: GrowthModel::Pure,
            tau_epsilon: 0.03,
            tau_exact_switch: 10.0,
            sampling: Sampling::Evenly(512),
            record_events: false,
        }
    }
}

impl SimulationOptions {
    pub fn with_seed(seed: u64) -> Self {
        SimulationOptions {
            seed,
            ..Default::default()
        }
    }

    pub fn stop_only(mut self) -> Self {
        self.sampling = Sampling::StopOnly;
        self
    }

    fn validate(&self) -> Result<(), EngineError> {
        if !(self.tau_epsilon > 0.0 && self.tau_epsilon < 1.0) {
            return Err(EngineError::InvalidOptions(format!(
                "tau_epsilon must lie in (0,1), got {}",
                self.tau_epsilon
            )));
        }
        if !(self.tau_exact_switch > 0.0) {
            return Err(EngineError::InvalidOptions(
                "tau_exact_switch must be positive".into(),
            ));
        }
        if let GrowthModel::Logistic { capacity, .. } = self.growth {
            if capacity == 0 {
                return Err(EngineError::InvalidOptions(
                    "carrying capacity must be >= 1".into(),
                ));
            }
        }
        match self.sampling {
            Sampling::Interval(dt) if !(dt > 0.0 && dt.is_finite()) => Err(
                EngineError::InvalidOptions("sampling interval must be positive".into()),
            ),
            Sampling::Evenly(0) => Err(EngineError::InvalidOptions(
                "need at least one sample interval".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// `count` firings of `reaction` applied at `time`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub time: f64,
    pub reaction: usize,
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Terminal {
    pub time: f64,
    pub config: Configuration,
    pub fired: StopCondition,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<(f64, Configuration)>,
    pub terminal: Terminal,
    pub event_count: u64,
    pub events: Vec<EventRecord>,
}

impl Trajectory {
    /// CSV with header `time,<species...>`.
    pub fn to_csv(&self, network: &Network) -> String {
        let mut out = String::from("time");
        for name in network.species_names() {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (t, c) in &self.samples {
            let _ = write!(out, "{t}");
            for v in c.counts() {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    /// Terminal summary `{t_end, fired, events, counts}`.
    pub fn summary_json(&self, network: &Network) -> serde_json::Value {
        let counts: serde_json::Map<String, serde_json::Value> = network
            .species_names()
            .iter()
            .zip(self.terminal.config.counts())
            .map(|(n, &c)| (n.clone(), c.into()))
            .collect();
        serde_json::json!({
            "t_end": self.terminal.time,
            "fired": self.terminal.fired,
            "events": self.event_count,
            "counts": counts,
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("total propensity is zero at t={time} before any stop condition fired")]
    DeadlockBeforeStop {
        time: f64,
        config: Configuration,
        events: u64,
    },
    #[error("stop condition has no time, event or population bound")]
    Unbounded,
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error(transparent)]
    Crn(#[from] CrnError),
}

struct Compiled {
    factor: Vec<f64>,
    reactants: Vec<Vec<(usize, u32)>>,
    delta: Vec<Vec<(usize, i64)>>,
    scaled: Vec<bool>,
    logistic: Option<(f64, Option<Vec<usize>>)>,
}

impl Compiled {
    fn new(net: &Network, growth: &GrowthModel) -> Self {
        let rs = net.reactions();
        let v = net.volume();
        let (logistic, scope) = match growth {
            GrowthModel::Pure => (None, LogisticScope::Duplications),
            GrowthModel::Logistic {
                capacity,
                counted,
                scope,
            } => (
                Some((
                    *capacity as f64,
                    counted.as_ref().map(|c| c.iter().map(|s| s.0).collect()),
                )),
                *scope,
            ),
        };
        Compiled {
            factor: rs.iter().map(|r| r.rate / v).collect(),
            reactants: rs
                .iter()
                .map(|r| r.reactants.iter().map(|(s, n)| (s.0, n)).collect())
                .collect(),
            delta: rs
                .iter()
                .map(|r| r.net_change().into_iter().map(|(s, d)| (s.0, d)).collect())
                .collect(),
            scaled: rs
                .iter()
                .map(|r| {
                    logistic.is_some()
                        && (scope == LogisticScope::AllReactions
                            || r.tag == ReactionTag::Duplication)
                })
                .collect(),
            logistic,
        }
    }

    fn growth_factor(&self, x: &[u64]) -> f64 {
        match &self.logistic {
            None => 1.0,
            Some((k, counted)) => {
                let n: f64 = match counted {
                    None => x.iter().map(|&c| c as f64).sum(),
                    Some(idx) => idx.iter().map(|&i| x[i] as f64).sum(),
                };
                (1.0 - n / k).max(0.0)
            }
        }
    }

    fn propensities(&self, x: &[u64], out: &mut [f64]) -> f64 {
        self.propensities_with(x, out, self.growth_factor(x))
    }

    /// Total propensity ignoring the growth factor.
    fn raw_total(&self, x: &[u64], scratch: &mut [f64]) -> f64 {
        self.propensities_with(x, scratch, 1.0)
    }

    fn propensities_with(&self, x: &[u64], out: &mut [f64], g: f64) -> f64 {
        let mut total = 0.0;
        for (j, a) in out.iter_mut().enumerate() {
            let mut p = self.factor[j];
            for &(s, n) in &self.reactants[j] {
                let c = x[s];
                if n == 1 {
                    p *= c as f64;
                } else if c < u64::from(n) {
                    p = 0.0;
                } else {
                    for i in 0..u64::from(n) {
                        p *= (c - i) as f64 / (i + 1) as f64;
                    }
                }
            }
            if self.scaled[j] {
                p *= g;
            }
            *a = p;
            total += p;
        }
        total
    }

    fn fire(&self, x: &mut [u64], j: usize, times: u64) -> Result<(), CrnError> {
        for &(s, d) in &self.delta[j] {
            let step = d
                .unsigned_abs()
                .checked_mul(times)
                .ok_or(CrnError::Overflow(SpeciesId(s)))?;
            x[s] = if d >= 0 {
                x[s].checked_add(step)
                    .ok_or(CrnError::Overflow(SpeciesId(s)))?
            } else {
                x[s].checked_sub(step).ok_or(CrnError::NotApplicable {
                    species: SpeciesId(s),
                    available: x[s],
                    required: step,
                })?
            };
        }
        Ok(())
    }
}

/// Records samples according to the sampling policy.
struct Recorder {
    mode: Sampling,
    dt: Option<f64>,
    next_grid: u64,
    samples: Vec<(f64, Configuration)>,
    events: Option<Vec<EventRecord>>,
}

impl Recorder {
    fn new(opts: &SimulationOptions, stop: &StopCondition, init: &Configuration) -> Self {
        let dt = match opts.sampling {
            Sampling::Interval(dt) => Some(dt),
            Sampling::Evenly(k) => stop.horizon().filter(|h| *h > 0.0).map(|h| h / k as f64),
            _ => None,
        };
        Recorder {
            mode: opts.sampling.clone(),
            dt,
            next_grid: 1,
            samples: vec![(0.0, init.clone())],
            events: opts.record_events.then(Vec::new),
        }
    }

    /// Emits grid samples strictly before `t` using the current state.
    fn advance_to(&mut self, t: f64, x: &[u64]) {
        if let Some(dt) = self.dt {
            loop {
                let g = self.next_grid as f64 * dt;
                if g >= t {
                    break;
                }
                self.samples.push((g, Configuration(x.to_vec())));
                self.next_grid += 1;
            }
        }
    }

    fn event(&mut self, t: f64, reaction: usize, count: u64, x: &[u64]) {
        if let Some(ev) = self.events.as_mut() {
            ev.push(EventRecord {
                time: t,
                reaction,
                count,
            });
        }
        if self.mode == Sampling::EveryEvent {
            self.push(t, x);
        }
    }

    fn push(&mut self, t: f64, x: &[u64]) {
        match self.samples.last_mut() {
            Some(last) if last.0 == t => last.1 = Configuration(x.to_vec()),
            _ => self.samples.push((t, Configuration(x.to_vec()))),
        }
    }

    fn finish(mut self, t: f64, x: &[u64], fired: StopCondition, events: u64) -> Trajectory {
        // grid points up to and including t
        self.advance_to(t, x);
        if let Some(dt) = self.dt {
            if self.next_grid as f64 * dt == t {
                self.next_grid += 1;
            }
        }
        self.push(t, x);
        Trajectory {
            samples: self.samples,
            terminal: Terminal {
                time: t,
                config: Configuration(x.to_vec()),
                fired,
            },
            event_count: events,
            events: self.events.unwrap_or_default(),
        }
    }
}

fn prepare(
    network: &Network,
    init: &Configuration,
    stop: &StopCondition,
    opts: &SimulationOptions,
) -> Result<(), EngineError> {
    opts.validate()?;
    network.check_configuration(init)?;
    if !stop.is_bounded() {
        return Err(EngineError::Unbounded);
    }
    Ok(())
}

fn select(props: &[f64], total: f64, u: f64) -> usize {
    let target = u * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (j, &a) in props.iter().enumerate() {
        if a > 0.0 {
            acc += a;
            last = j;
            if target < acc {
                return j;
            }
        }
    }
    // rounding at the top end
    last
}

struct ExactState<'a> {
    comp: &'a Compiled,
    x: Vec<u64>,
    t: f64,
    events: u64,
    props: Vec<f64>,
}

enum StepOutcome {
    Fired(StopCondition),
    Continue,
}

impl ExactState<'_> {
    /// One exact SSA step (or a jump to the next time boundary).
    fn step(
        &mut self,
        rng: &mut SimRng,
        stop: &StopCondition,
        rec: &mut Recorder,
    ) -> Result<StepOutcome, EngineError> {
        let total = self.comp.propensities(&self.x, &mut self.props);
        if !(total > 0.0) {
            return self.stalled(stop, rec);
        }
        let tau = exp1(rng) / total;
        let t_next = self.t + tau;
        if let Some(h) = stop.next_time_boundary(self.t) {
            if t_next > h {
                // memoryless: restart the clock at the boundary
                rec.advance_to(h, &self.x);
                self.t = h;
                return Ok(
                    match check_stop(&Configuration(self.x.clone()), self.t, self.events, stop) {
                        Some(f) => StepOutcome::Fired(f),
                        None => StepOutcome::Continue,
                    },
                );
            }
        }
        let j = select(&self.props, total, uniform01(rng));
        rec.advance_to(t_next, &self.x);
        self.comp.fire(&mut self.x, j, 1)?;
        self.t = t_next;
        self.events += 1;
        rec.event(self.t, j, 1, &self.x);
        Ok(self.check(stop))
    }

    /// Zero total propensity. A state frozen only by the growth factor sits
    /// still until the next time boundary; anything else is a deadlock.
    fn stalled(
        &mut self,
        stop: &StopCondition,
        rec: &mut Recorder,
    ) -> Result<StepOutcome, EngineError> {
        let mut scratch = vec![0.0; self.props.len()];
        if self.comp.raw_total(&self.x, &mut scratch) > 0.0 {
            if let Some(h) = stop.next_time_boundary(self.t) {
                rec.advance_to(h, &self.x);
                self.t = h;
                return Ok(self.check(stop));
            }
        }
        Err(EngineError::DeadlockBeforeStop {
            time: self.t,
            config: Configuration(self.x.clone()),
            events: self.events,
        })
    }

    fn check(&self, stop: &StopCondition) -> StepOutcome {
        // avoid allocating a Configuration for the common not-fired case
        let cfg = ConfigView(&self.x);
        match cfg.check(self.t, self.events, stop) {
            Some(f) => StepOutcome::Fired(f),
            None => StepOutcome::Continue,
        }
    }
}

struct ConfigView<'a>(&'a [u64]);

impl ConfigView<'_> {
    fn check(&self, t: f64, events: u64, stop: &StopCondition) -> Option<StopCondition> {
        let get = |s: SpeciesId| self.0.get(s.0).copied().unwrap_or(0);
        let fired = match stop {
            StopCondition::Extinction(sp) => sp.iter().any(|&s| get(s) == 0),
            StopCondition::Consensus(a, b) => get(*a) == 0 || get(*b) == 0,
            StopCondition::TargetCount(sp, th) => sp.iter().map(|&s| get(s)).sum::<u64>() >= *th,
            StopCondition::TimeHorizon(h) => t >= *h,
            StopCondition::MaxEvents(k) => events >= *k,
            StopCondition::PopulationCap(cap) => self.0.iter().sum::<u64>() >= *cap,
            StopCondition::Any(cs) => return cs.iter().find_map(|c| self.check(t, events, c)),
            StopCondition::All(cs) => {
                !cs.is_empty() && cs.iter().all(|c| self.check(t, events, c).is_some())
            }
        };
        fired.then(|| stop.clone())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    TauLeap,
}

pub fn simulate<N: AsRef<Network>>(
    method: Method,
    system: &N,
    init: &Configuration,
    stop: &StopCondition,
    opts: &SimulationOptions,
) -> Result<Trajectory, EngineError> {
    match method {
        Method::Exact => simulate_exact(system, init, stop, opts),
        Method::TauLeap => simulate_tau_leap(system, init, stop, opts),
    }
}

/// Gillespie direct method.
pub fn simulate_exact<N: AsRef<Network>>(
    system: &N,
    init: &Configuration,
    stop: &StopCondition,
    opts: &SimulationOptions,
) -> Result<Trajectory, EngineError> {
    let network = system.as_ref();
    prepare(network, init, stop, opts)?;
    let comp = Compiled::new(network, &opts.growth);
    let mut rng = rng_from_seed(opts.seed);
    let mut rec = Recorder::new(opts, stop, init);
    let mut st = ExactState {
        comp: &comp,
        x: init.0.clone(),
        t: 0.0,
        events: 0,
        props: vec![0.0; network.reactions().len()],
    };
    if let StepOutcome::Fired(f) = st.check(stop) {
        return Ok(rec.finish(st.t, &st.x, f, 0));
    }
    loop {
        if let StepOutcome::Fired(f) = st.step(&mut rng, stop, &mut rec)? {
            return Ok(rec.finish(st.t, &st.x, f, st.events));
        }
    }
}

/// Highest-order-of-reaction factor `g_i` for the tau selection rule.
fn g_factor(comp: &Compiled, species: usize, x: u64) -> f64 {
    let mut g: f64 = 1.0;
    for rs in &comp.reactants {
        let order: u32 = rs.iter().map(|&(_, n)| n).sum();
        if let Some(&(_, n)) = rs.iter().find(|&&(s, _)| s == species) {
            let gi = match (order, n) {
                (1, _) => 1.0,
                (2, 1) => 2.0,
                (2, 2) => 2.0 + 1.0 / (x.max(2) - 1) as f64,
                (3, 1) => 3.0,
                (3, 2) => 1.5 * (2.0 + 1.0 / (x.max(2) - 1) as f64),
                (3, 3) => 3.0 + 1.0 / (x.max(3) - 1) as f64 + 2.0 / (x.max(3) - 2) as f64,
                (o, _) => o as f64,
            };
            g = g.max(gi);
        }
    }
    g
}

/// Bounded relative propensity change step size.
fn select_tau(
    comp: &Compiled,
    x: &[u64],
    props: &[f64],
    eps: f64,
    reactant_species: &[usize],
) -> f64 {
    let mut tau = f64::INFINITY;
    for &i in reactant_species {
        let mut mu = 0.0;
        let mut sigma2 = 0.0;
        for (j, d) in comp.delta.iter().enumerate() {
            if let Some(&(_, v)) = d.iter().find(|&&(s, _)| s == i) {
                mu += v as f64 * props[j];
                sigma2 += (v * v) as f64 * props[j];
            }
        }
        let bound = (eps * x[i] as f64 / g_factor(comp, i, x[i])).max(1.0);
        if mu != 0.0 {
            tau = tau.min(bound / mu.abs());
        }
        if sigma2 > 0.0 {
            tau = tau.min(bound * bound / sigma2);
        }
    }
    tau
}

const EXACT_BURST: usize = 100;

/// Tau-leaping with the bounded relative change rule, halving on negative
/// counts and falling back to exact steps when a leap would carry fewer
/// than `tau_exact_switch` expected events.
pub fn simulate_tau_leap<N: AsRef<Network>>(
    system: &N,
    init: &Configuration,
    stop: &StopCondition,
    opts: &SimulationOptions,
) -> Result<Trajectory, EngineError> {
    let network = system.as_ref();
    prepare(network, init, stop, opts)?;
    let comp = Compiled::new(network, &opts.growth);
    let mut rng = rng_from_seed(opts.seed);
    let mut rec = Recorder::new(opts, stop, init);
    let m = network.reactions().len();
    let mut reactant_species: Vec<usize> =
        comp.reactants.iter().flatten().map(|&(s, _)| s).collect();
    reactant_species.sort_unstable();
    reactant_species.dedup();

    let mut st = ExactState {
        comp: &comp,
        x: init.0.clone(),
        t: 0.0,
        events: 0,
        props: vec![0.0; m],
    };
    if let StepOutcome::Fired(f) = st.check(stop) {
        return Ok(rec.finish(st.t, &st.x, f, 0));
    }
    let mut counts = vec![0u64; m];
    let mut trial = vec![0u64; init.len()];
    loop {
        let total = comp.propensities(&st.x, &mut st.props);
        if !(total > 0.0) {
            if let StepOutcome::Fired(f) = st.stalled(stop, &mut rec)? {
                return Ok(rec.finish(st.t, &st.x, f, st.events));
            }
            continue;
        }
        let mut tau = select_tau(&comp, &st.x, &st.props, opts.tau_epsilon, &reactant_species);
        if let Some(h) = stop.next_time_boundary(st.t) {
            tau = tau.min(h - st.t);
        }
        if total * tau < opts.tau_exact_switch {
            for _ in 0..EXACT_BURST {
                if let StepOutcome::Fired(f) = st.step(&mut rng, stop, &mut rec)? {
                    return Ok(rec.finish(st.t, &st.x, f, st.events));
                }
            }
            continue;
        }
        loop {
            trial.copy_from_slice(&st.x);
            let mut ok = true;
            for j in 0..m {
                let mean = st.props[j] * tau;
                counts[j] = if mean > 0.0 {
                    Poisson::new(mean)
                        .map(|p| p.sample(&mut rng) as u64)
                        .unwrap_or(0)
                } else {
                    0
                };
            }
            // apply consumption first so that negativity is detected regardless of order
            'apply: for (j, &k) in counts.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                for &(s, d) in &comp.delta[j] {
                    if d < 0 {
                        let need = d.unsigned_abs().saturating_mul(k);
                        match trial[s].checked_sub(need) {
                            Some(v) => trial[s] = v,
                            None => {
                                ok = false;
                                break 'apply;
                            }
                        }
                    }
                }
            }
            if ok {
                for (j, &k) in counts.iter().enumerate() {
                    for &(s, d) in &comp.delta[j] {
                        if d > 0 && k > 0 {
                            let add = (d as u64)
                                .checked_mul(k)
                                .ok_or(CrnError::Overflow(SpeciesId(s)))?;
                            trial[s] = trial[s]
                                .checked_add(add)
                                .ok_or(CrnError::Overflow(SpeciesId(s)))?;
                        }
                    }
                }
                break;
            }
            tau *= 0.5;
            if total * tau < opts.tau_exact_switch {
                break;
            }
        }
        if total * tau < opts.tau_exact_switch {
            // halving pushed us into the exact regime
            if let StepOutcome::Fired(f) = st.step(&mut rng, stop, &mut rec)? {
                return Ok(rec.finish(st.t, &st.x, f, st.events));
            }
            continue;
        }
        let t_next = st.t + tau;
        rec.advance_to(t_next, &st.x);
        st.x.copy_from_slice(&trial);
        st.t = t_next;
        for (j, &k) in counts.iter().enumerate() {
            if k > 0 {
                st.events += k;
                rec.event(st.t, j, k, &st.x);
            }
        }
        if let StepOutcome::Fired(f) = st.check(stop) {
            return Ok(rec.finish(st.t, &st.x, f, st.events));
        }
    }
}

/// Replays an event log from `init`.
pub fn replay(
    network: &Network,
    init: &Configuration,
    events: &[EventRecord],
) -> Result<Configuration, CrnError> {
    let mut c = init.clone();
    for e in events {
        crate::crn::apply_reaction_in_place(&mut c, &network.reactions()[e.reaction], e.count)?;
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crn::{Reaction, StoichVector};

    fn ab(g: f64, d: f64) -> Network {
        let mut b = Network::builder();
        let a = b.species("A").unwrap();
        let bb = b.species("B").unwrap();
        b.add_reaction(Reaction::duplication(a, g)).unwrap();
        b.add_reaction(Reaction::duplication(bb, g)).unwrap();
        b.add_reaction(Reaction::new(
            StoichVector::from_pairs([(a, 1), (bb, 1)]),
            StoichVector::new(),
            d,
            ReactionTag::Death,
        ))
        .unwrap();
        b.build().unwrap()
    }

    fn consensus() -> StopCondition {
        StopCondition::any([
            StopCondition::Consensus(SpeciesId(0), SpeciesId(1)),
            StopCondition::MaxEvents(10_000_000),
        ])
    }

    #[test]
    fn consensus_at_start() {
        let net = ab(1.0, 1.0);
        let tr = simulate_exact(
            &net,
            &Configuration(vec![5, 0]),
            &consensus(),
            &SimulationOptions::default(),
        )
        .unwrap();
        assert_eq!(tr.terminal.time, 0.0);
        assert_eq!(tr.event_count, 0);
        assert_eq!(
            tr.terminal.fired,
            StopCondition::Consensus(SpeciesId(0), SpeciesId(1))
        );
    }

    #[test]
    fn deadlock_on_empty() {
        let net = ab(1.0, 1.0);
        let stop = StopCondition::TimeHorizon(1.0);
        let opts = SimulationOptions::default();
        let zero = Configuration(vec![0, 0]);
        assert!(matches!(
            simulate_exact(&net, &zero, &stop, &opts),
            Err(EngineError::DeadlockBeforeStop { .. })
        ));
        assert!(matches!(
            simulate_tau_leap(&net, &zero, &stop, &opts),
            Err(EngineError::DeadlockBeforeStop { .. })
        ));
    }

    #[test]
    fn rejects_unbounded_and_bad_options() {
        let net = ab(1.0, 1.0);
        let init = Configuration(vec![1, 1]);
        let opts = SimulationOptions::default();
        let unbounded = StopCondition::Consensus(SpeciesId(0), SpeciesId(1));
        assert_eq!(
            simulate_exact(&net, &init, &unbounded, &opts),
            Err(EngineError::Unbounded)
        );
        let bad = SimulationOptions {
            tau_epsilon: 1.5,
            ..opts
        };
        assert!(matches!(
            simulate_exact(&net, &init, &consensus(), &bad),
            Err(EngineError::InvalidOptions(_))
        ));
    }

    #[test]
    fn deterministic_and_replayable() {
        let net = ab(1.0, 1.0);
        let init = Configuration(vec![30, 20]);
        let opts = SimulationOptions {
            seed: 42,
            sampling: Sampling::EveryEvent,
            record_events: true,
            ..Default::default()
        };
        let a = simulate_exact(&net, &init, &consensus(), &opts).unwrap();
        let b = simulate_exact(&net, &init, &consensus(), &opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.events.len() as u64, a.event_count);
        for (k, (t, c)) in a.samples.iter().enumerate().skip(1) {
            assert_eq!(a.events[k - 1].time, *t);
            assert_eq!(&replay(&net, &init, &a.events[..k]).unwrap(), c);
        }
        assert!(a.samples.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn horizon_is_hit_exactly() {
        let net = ab(1.0, 0.001);
        let init = Configuration(vec![10, 10]);
        let opts = SimulationOptions {
            seed: 3,
            ..Default::default()
        };
        let tr = simulate_exact(&net, &init, &StopCondition::TimeHorizon(1.0), &opts).unwrap();
        assert_eq!(tr.terminal.time, 1.0);
        assert_eq!(tr.samples.len(), 513);
        assert_eq!(tr.samples.last().unwrap().0, 1.0);
        assert!(tr.samples.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn interval_samples_replay() {
        let net = ab(1.0, 0.01);
        let init = Configuration(vec![20, 20]);
        let opts = SimulationOptions {
            seed: 5,
            sampling: Sampling::Interval(0.1),
            record_events: true,
            ..Default::default()
        };
        for tr in [
            simulate_exact(&net, &init, &StopCondition::TimeHorizon(2.0), &opts).unwrap(),
            simulate_tau_leap(&net, &init, &StopCondition::TimeHorizon(2.0), &opts).unwrap(),
        ] {
            for (t, c) in &tr.samples {
                let upto: Vec<_> = tr.events.iter().copied().filter(|e| e.time <= *t).collect();
                assert_eq!(&replay(&net, &init, &upto).unwrap(), c, "t={t}");
            }
        }
    }

    #[test]
    fn logistic_freezes_at_capacity() {
        let mut b = Network::builder();
        let x = b.species("X").unwrap();
        b.add_reaction(Reaction::duplication(x, 1.0)).unwrap();
        let net = b.build().unwrap();
        let opts = SimulationOptions {
            seed: 1,
            growth: GrowthModel::logistic(50),
            ..Default::default()
        };
        let tr = simulate_exact(
            &net,
            &Configuration(vec![50]),
            &StopCondition::TimeHorizon(1.0),
            &opts,
        )
        .unwrap();
        assert_eq!((tr.terminal.time, tr.event_count), (1.0, 0));
        let r = simulate_exact(
            &net,
            &Configuration(vec![50]),
            &StopCondition::MaxEvents(1),
            &opts,
        );
        assert!(matches!(r, Err(EngineError::DeadlockBeforeStop { .. })));
        let tr = simulate_exact(
            &net,
            &Configuration(vec![5]),
            &StopCondition::MaxEvents(45),
            &opts,
        )
        .unwrap();
        assert_eq!(tr.terminal.config, Configuration(vec![50]));
    }

    #[test]
    fn csv_and_summary() {
        let net = ab(1.0, 1.0);
        let tr = simulate_exact(
            &net,
            &Configuration(vec![3, 0]),
            &consensus(),
            &SimulationOptions::default(),
        )
        .unwrap();
        assert_eq!(tr.to_csv(&net), "time,A,B\n0,3,0\n");
        let j = tr.summary_json(&net);
        assert_eq!(j["counts"]["A"], 3);
        assert_eq!(j["events"], 0);
    }
}
