//! Static data model for mass-action reaction networks and birth systems.
//!
//! A [`Network`] owns its species table and an ordered list of
//! [`Reaction`]s. Species are addressed by dense [`SpeciesId`] indices; a
//! [`Configuration`] is a vector of 64-bit counts indexed the same way.
//! Propensities follow stochastic mass-action kinetics:
//! `(rate / volume) * prod_S C(c(S), r(S))`.

mod format;

pub use format::{format_network, parse_network, ParseError};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense index of a species within one network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SpeciesId(pub usize);

impl SpeciesId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Role label attached to a reaction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReactionTag {
    Duplication,
    Death,
    Logic,
    Conjugation,
    Other,
}

impl ReactionTag {
    pub fn as_str(self) -> &'static str {
        match self {
            ReactionTag::Duplication => "duplication",
            ReactionTag::Death => "death",
            ReactionTag::Logic => "logic",
            ReactionTag::Conjugation => "conjugation",
            ReactionTag::Other => "other",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "duplication" => ReactionTag::Duplication,
            "death" => ReactionTag::Death,
            "logic" => ReactionTag::Logic,
            "conjugation" => ReactionTag::Conjugation,
            "other" => ReactionTag::Other,
            _ => return None,
        })
    }
}

impl fmt::Display for ReactionTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Sparse multiset of species, kept sorted by species index with no zero
/// entries.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StoichVector(Vec<(SpeciesId, u32)>);

impl StoichVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (SpeciesId, u32)>>(pairs: I) -> Self {
        let mut merged: BTreeMap<SpeciesId, u32> = BTreeMap::new();
        for (s, n) in pairs {
            *merged.entry(s).or_default() += n;
        }
        StoichVector(merged.into_iter().filter(|&(_, n)| n > 0).collect())
    }

    pub fn single(species: SpeciesId, count: u32) -> Self {
        Self::from_pairs([(species, count)])
    }

    pub fn get(&self, species: SpeciesId) -> u32 {
        self.0
            .iter()
            .find(|(s, _)| *s == species)
            .map_or(0, |&(_, n)| n)
    }

    pub fn iter(&self) -> impl Iterator<Item = (SpeciesId, u32)> + '_ {
        self.0.iter().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Total molecularity.
    pub fn order(&self) -> u32 {
        self.0.iter().map(|&(_, n)| n).sum()
    }

    pub fn species(&self) -> impl Iterator<Item = SpeciesId> + '_ {
        self.0.iter().map(|&(s, _)| s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reaction {
    pub reactants: StoichVector,
    pub products: StoichVector,
    pub rate: f64,
    pub tag: ReactionTag,
}

impl Reaction {
    pub fn new(
        reactants: StoichVector,
        products: StoichVector,
        rate: f64,
        tag: ReactionTag,
    ) -> Self {
        Reaction {
            reactants,
            products,
            rate,
            tag,
        }
    }

    /// `X -> 2X` at the given rate.
    pub fn duplication(species: SpeciesId, rate: f64) -> Self {
        Reaction::new(
            StoichVector::single(species, 1),
            StoichVector::single(species, 2),
            rate,
            ReactionTag::Duplication,
        )
    }

    /// True when the reaction has the exact shape `X -> 2X`.
    pub fn duplicated_species(&self) -> Option<SpeciesId> {
        let mut r = self.reactants.iter();
        let mut p = self.products.iter();
        match (r.next(), r.next(), p.next(), p.next()) {
            (Some((s, 1)), None, Some((t, 2)), None) if s == t => Some(s),
            _ => None,
        }
    }

    pub fn is_applicable(&self, config: &Configuration) -> bool {
        self.reactants
            .iter()
            .all(|(s, n)| config.get(s) >= u64::from(n))
    }

    /// Net change `p - r` per touched species.
    pub fn net_change(&self) -> Vec<(SpeciesId, i64)> {
        let mut delta: BTreeMap<SpeciesId, i64> = BTreeMap::new();
        for (s, n) in self.reactants.iter() {
            *delta.entry(s).or_default() -= i64::from(n);
        }
        for (s, n) in self.products.iter() {
            *delta.entry(s).or_default() += i64::from(n);
        }
        delta.into_iter().filter(|&(_, d)| d != 0).collect()
    }

    /// The reaction with reactants and products swapped.
    pub fn reversed(&self) -> Reaction {
        Reaction::new(
            self.products.clone(),
            self.reactants.clone(),
            self.rate,
            self.tag,
        )
    }
}

/// Species counts, indexed by [`SpeciesId`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration(pub Vec<u64>);

impl Configuration {
    pub fn zeros(len: usize) -> Self {
        Configuration(vec![0; len])
    }

    pub fn from_counts<I: IntoIterator<Item = u64>>(counts: I) -> Self {
        Configuration(counts.into_iter().collect())
    }

    pub fn get(&self, species: SpeciesId) -> u64 {
        self.0.get(species.0).copied().unwrap_or(0)
    }

    pub fn set(&mut self, species: SpeciesId, count: u64) {
        self.0[species.0] = count;
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn counts(&self) -> &[u64] {
        &self.0
    }

    /// Checked total over all species.
    pub fn total(&self) -> Option<u64> {
        self.0.iter().try_fold(0u64, |acc, &c| acc.checked_add(c))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CrnError {
    #[error("reaction is not applicable: {species:?} has {available}, needs {required}")]
    NotApplicable {
        species: SpeciesId,
        available: u64,
        required: u64,
    },
    #[error("count of {0:?} would overflow u64")]
    Overflow(SpeciesId),
    #[error("unknown species {0:?}")]
    UnknownSpecies(SpeciesId),
    #[error("duplicate species name `{0}`")]
    DuplicateSpecies(String),
    #[error("invalid species name `{0}`")]
    InvalidName(String),
    #[error("rate constant must be finite and non-negative, got {0}")]
    InvalidRate(f64),
    #[error("reaction has neither reactants nor products")]
    EmptyReaction,
    #[error("volume must be positive, got {0}")]
    InvalidVolume(f64),
    #[error("configuration has {got} entries, network has {expected} species")]
    ShapeMismatch { expected: usize, got: usize },
}

/// An immutable reaction network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Network {
    species: Vec<String>,
    reactions: Vec<Reaction>,
    volume: f64,
}

impl Network {
    pub fn builder() -> NetworkBuilder {
        NetworkBuilder::default()
    }

    pub fn species_count(&self) -> usize {
        self.species.len()
    }

    pub fn species_names(&self) -> &[String] {
        &self.species
    }

    pub fn species_ids(&self) -> impl Iterator<Item = SpeciesId> {
        (0..self.species.len()).map(SpeciesId)
    }

    pub fn species_name(&self, id: SpeciesId) -> &str {
        &self.species[id.0]
    }

    pub fn species_id(&self, name: &str) -> Option<SpeciesId> {
        self.species.iter().position(|s| s == name).map(SpeciesId)
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn zero_configuration(&self) -> Configuration {
        Configuration::zeros(self.species.len())
    }

    /// Builds a configuration from `(name, count)` pairs; unnamed species are 0.
    pub fn configuration(&self, counts: &[(&str, u64)]) -> Result<Configuration, String> {
        let mut c = self.zero_configuration();
        for &(name, n) in counts {
            let id = self
                .species_id(name)
                .ok_or_else(|| format!("unknown species `{name}`"))?;
            c.set(id, n);
        }
        Ok(c)
    }

    pub fn check_configuration(&self, config: &Configuration) -> Result<(), CrnError> {
        if config.len() != self.species.len() {
            return Err(CrnError::ShapeMismatch {
                expected: self.species.len(),
                got: config.len(),
            });
        }
        Ok(())
    }

    /// Same species table, only the selected reactions (in the given order).
    pub fn subnetwork(&self, reaction_indices: &[usize]) -> Network {
        Network {
            species: self.species.clone(),
            reactions: reaction_indices
                .iter()
                .map(|&i| self.reactions[i].clone())
                .collect(),
            volume: self.volume,
        }
    }

    pub fn propensity(&self, reaction: usize, config: &Configuration) -> f64 {
        propensity(&self.reactions[reaction], config, self.volume)
    }
}

/// Incremental constructor that interns species by name.
#[derive(Clone, Debug)]
pub struct NetworkBuilder {
    species: Vec<String>,
    reactions: Vec<Reaction>,
    volume: f64,
}

impl Default for NetworkBuilder {
    fn default() -> Self {
        NetworkBuilder {
            species: Vec::new(),
            reactions: Vec::new(),
            volume: 1.0,
        }
    }
}

pub(crate) fn is_valid_species_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn volume(&mut self, volume: f64) -> &mut Self {
        self.volume = volume;
        self
    }

    /// Returns the id of `name`, declaring it if needed.
    pub fn species(&mut self, name: &str) -> Result<SpeciesId, CrnError> {
        if let Some(id) = self.lookup(name) {
            return Ok(id);
        }
        if !is_valid_species_name(name) {
            return Err(CrnError::InvalidName(name.to_string()));
        }
        self.species.push(name.to_string());
        Ok(SpeciesId(self.species.len() - 1))
    }

    /// Declares a new species; errors if the name is already taken.
    pub fn declare(&mut self, name: &str) -> Result<SpeciesId, CrnError> {
        if self.lookup(name).is_some() {
            return Err(CrnError::DuplicateSpecies(name.to_string()));
        }
        self.species(name)
    }

    pub fn lookup(&self, name: &str) -> Option<SpeciesId> {
        self.species.iter().position(|s| s == name).map(SpeciesId)
    }

    pub fn species_count(&self) -> usize {
        self.species.len()
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    pub fn add_reaction(&mut self, reaction: Reaction) -> Result<usize, CrnError> {
        if !reaction.rate.is_finite() || reaction.rate < 0.0 {
            return Err(CrnError::InvalidRate(reaction.rate));
        }
        if reaction.reactants.is_empty() && reaction.products.is_empty() {
            return Err(CrnError::EmptyReaction);
        }
        for s in reaction
            .reactants
            .species()
            .chain(reaction.products.species())
        {
            if s.0 >= self.species.len() {
                return Err(CrnError::UnknownSpecies(s));
            }
        }
        self.reactions.push(reaction);
        Ok(self.reactions.len() - 1)
    }

    /// Adds `X -> 2X` unless the species already has a duplication reaction.
    pub fn ensure_duplication(&mut self, species: SpeciesId, rate: f64) -> Result<(), CrnError> {
        let present = self
            .reactions
            .iter()
            .any(|r| r.duplicated_species() == Some(species));
        if !present {
            self.add_reaction(Reaction::duplication(species, rate))?;
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Network, CrnError> {
        if !(self.volume.is_finite() && self.volume > 0.0) {
            return Err(CrnError::InvalidVolume(self.volume));
        }
        Ok(Network {
            species: self.species.clone(),
            reactions: self.reactions.clone(),
            volume: self.volume,
        })
    }
}

fn binomial_f64(n: u64, k: u32) -> f64 {
    match k {
        0 => 1.0,
        1 => n as f64,
        _ => {
            if n < u64::from(k) {
                return 0.0;
            }
            let mut acc = 1.0;
            for i in 0..u64::from(k) {
                acc *= (n - i) as f64 / (i + 1) as f64;
            }
            acc
        }
    }
}

/// Mass-action propensity `(rate / volume) * prod_S C(c(S), r(S))`.
///
/// Zero exactly when the reaction is not applicable (or the rate is 0).
pub fn propensity(reaction: &Reaction, config: &Configuration, volume: f64) -> f64 {
    let mut a = reaction.rate / volume;
    for (s, n) in reaction.reactants.iter() {
        let c = config.get(s);
        if n == 1 {
            a *= c as f64;
        } else {
            a *= binomial_f64(c, n);
        }
    }
    a
}

/// Returns `c - r + p`, leaving `config` untouched.
pub fn apply_reaction(
    config: &Configuration,
    reaction: &Reaction,
) -> Result<Configuration, CrnError> {
    let mut next = config.clone();
    apply_reaction_in_place(&mut next, reaction, 1)?;
    Ok(next)
}

/// Fires `reaction` `times` times in place. On error `config` is unchanged.
pub fn apply_reaction_in_place(
    config: &mut Configuration,
    reaction: &Reaction,
    times: u64,
) -> Result<(), CrnError> {
    for (s, n) in reaction.reactants.iter() {
        let required = u64::from(n)
            .checked_mul(times)
            .ok_or(CrnError::Overflow(s))?;
        let available = config.get(s);
        if s.0 >= config.len() {
            return Err(CrnError::UnknownSpecies(s));
        }
        // Species that are reactants and products still need the full amount present.
        if available < required {
            return Err(CrnError::NotApplicable {
                species: s,
                available,
                required,
            });
        }
    }
    let delta = reaction.net_change();
    let mut updated = Vec::with_capacity(delta.len());
    for &(s, d) in &delta {
        let cur = *config.0.get(s.0).ok_or(CrnError::UnknownSpecies(s))?;
        let step = (d.unsigned_abs())
            .checked_mul(times)
            .ok_or(CrnError::Overflow(s))?;
        let v = if d >= 0 {
            cur.checked_add(step).ok_or(CrnError::Overflow(s))?
        } else {
            cur.checked_sub(step).ok_or(CrnError::NotApplicable {
                species: s,
                available: cur,
                required: step,
            })?
        };
        updated.push((s, v));
    }
    for (s, v) in updated {
        config.0[s.0] = v;
    }
    Ok(())
}

/// Sum of counts over `species`.
pub fn total_population(config: &Configuration, species: &[SpeciesId]) -> u64 {
    species.iter().map(|&s| config.get(s)).sum()
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BirthSystemError {
    #[error("species `{0}` has no duplication reaction")]
    MissingDuplication(String),
    #[error("species `{species}` duplicates at rate {found}, expected {expected}")]
    RateMismatch {
        species: String,
        found: f64,
        expected: f64,
    },
    #[error("species `{0}` has more than one duplication reaction")]
    DuplicateDuplication(String),
    #[error("duplication rate must be positive, got {0}")]
    InvalidRate(f64),
    #[error("{0}")]
    Crn(#[from] CrnError),
}

/// A network in which every species duplicates at the common rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BirthSystem {
    network: Network,
    inputs: BTreeSet<SpeciesId>,
    outputs: BTreeSet<SpeciesId>,
    internals: BTreeSet<SpeciesId>,
    duplication_rate: f64,
    initial_counts: Configuration,
}

/// Checks the birth-system conditions: every species has exactly one
/// `X -> 2X` reaction, all at rate `gamma`.
///
/// The result has every species internal with zero initial counts; use
/// [`BirthSystem::with_io`] and [`BirthSystem::with_initial`] to refine.
pub fn validate_birth_system(
    candidate: Network,
    gamma: f64,
) -> Result<BirthSystem, BirthSystemError> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(BirthSystemError::InvalidRate(gamma));
    }
    let mut seen: Vec<Option<f64>> = vec![None; candidate.species_count()];
    for r in candidate.reactions() {
        if let Some(s) = r.duplicated_species() {
            let name = candidate.species_name(s).to_string();
            if seen[s.0].is_some() {
                return Err(BirthSystemError::DuplicateDuplication(name));
            }
            seen[s.0] = Some(r.rate);
        }
    }
    for (i, rate) in seen.iter().enumerate() {
        let name = candidate.species_name(SpeciesId(i)).to_string();
        match rate {
            None => return Err(BirthSystemError::MissingDuplication(name)),
            Some(found) if *found != gamma => {
                return Err(BirthSystemError::RateMismatch {
                    species: name,
                    found: *found,
                    expected: gamma,
                })
            }
            Some(_) => {}
        }
    }
    let internals = candidate.species_ids().collect();
    let initial_counts = candidate.zero_configuration();
    Ok(BirthSystem {
        network: candidate,
        inputs: BTreeSet::new(),
        outputs: BTreeSet::new(),
        internals,
        duplication_rate: gamma,
        initial_counts,
    })
}

impl BirthSystem {
    /// Declares input and output species; everything else becomes internal.
    pub fn with_io(mut self, inputs: &[SpeciesId], outputs: &[SpeciesId]) -> Self {
        self.inputs = inputs.iter().copied().collect();
        self.outputs = outputs.iter().copied().collect();
        self.internals = self
            .network
            .species_ids()
            .filter(|s| !self.inputs.contains(s) && !self.outputs.contains(s))
            .collect();
        self
    }

    pub fn with_initial(mut self, species: SpeciesId, count: u64) -> Self {
        self.initial_counts.set(species, count);
        self
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn into_network(self) -> Network {
        self.network
    }

    pub fn inputs(&self) -> impl Iterator<Item = SpeciesId> + '_ {
        self.inputs.iter().copied()
    }

    pub fn outputs(&self) -> impl Iterator<Item = SpeciesId> + '_ {
        self.outputs.iter().copied()
    }

    pub fn internals(&self) -> impl Iterator<Item = SpeciesId> + '_ {
        self.internals.iter().copied()
    }

    pub fn duplication_rate(&self) -> f64 {
        self.duplication_rate
    }

    /// Initial counts for internal and output species (inputs are 0 here).
    pub fn initial_counts(&self) -> &Configuration {
        &self.initial_counts
    }

    /// Initial configuration with the given input counts filled in.
    pub fn initial_configuration(&self, inputs: &[(SpeciesId, u64)]) -> Configuration {
        let mut c = self.initial_counts.clone();
        for &(s, n) in inputs {
            c.set(s, n);
        }
        c
    }
}

impl AsRef<Network> for BirthSystem {
    fn as_ref(&self) -> &Network {
        &self.network
    }
}

impl AsRef<Network> for Network {
    fn as_ref(&self) -> &Network {
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ab(gamma: f64, delta: f64) -> (Network, SpeciesId, SpeciesId) {
        let mut b = Network::builder();
        let a = b.species("A").unwrap();
        let bb = b.species("B").unwrap();
        b.add_reaction(Reaction::duplication(a, gamma)).unwrap();
        b.add_reaction(Reaction::duplication(bb, gamma)).unwrap();
        b.add_reaction(Reaction::new(
            StoichVector::from_pairs([(a, 1), (bb, 1)]),
            StoichVector::new(),
            delta,
            ReactionTag::Death,
        ))
        .unwrap();
        (b.build().unwrap(), a, bb)
    }

    #[test]
    fn propensity_bimolecular() {
        let mut b = Network::builder();
        let a = b.species("A").unwrap();
        let bs = b.species("B").unwrap();
        let c = b.species("C").unwrap();
        let alpha = 0.7;
        let r = Reaction::new(
            StoichVector::from_pairs([(a, 1), (bs, 1)]),
            StoichVector::from_pairs([(bs, 2), (c, 1)]),
            alpha,
            ReactionTag::Other,
        );
        let cfg = Configuration(vec![3, 2, 0]);
        assert!((propensity(&r, &cfg, 1.0) - 6.0 * alpha).abs() < 1e-12);
    }

    #[test]
    fn propensity_non_applicable_is_zero() {
        let (net, _, _) = ab(1.0, 1.0);
        let cfg = Configuration(vec![0, 4]);
        assert_eq!(propensity(&net.reactions()[2], &cfg, 1.0), 0.0);
    }

    #[test]
    fn propensity_duplication() {
        let (net, _, _) = ab(1.5, 1.0);
        let cfg = Configuration(vec![5, 0]);
        assert_eq!(propensity(&net.reactions()[0], &cfg, 1.0), 7.5);
    }

    #[test]
    fn propensity_uses_binomial_for_higher_order() {
        let mut b = Network::builder();
        let x = b.species("X").unwrap();
        let r = Reaction::new(
            StoichVector::single(x, 2),
            StoichVector::single(x, 1),
            1.0,
            ReactionTag::Other,
        );
        assert_eq!(propensity(&r, &Configuration(vec![5]), 1.0), 10.0);
        assert_eq!(propensity(&r, &Configuration(vec![1]), 1.0), 0.0);
    }

    #[test]
    fn apply_examples() {
        let (net, _, _) = ab(1.0, 1.0);
        let death = &net.reactions()[2];
        let c = Configuration(vec![3, 2]);
        assert_eq!(
            apply_reaction(&c, death).unwrap(),
            Configuration(vec![2, 1])
        );
        assert_eq!(c, Configuration(vec![3, 2]));
        let dup = &net.reactions()[0];
        assert_eq!(
            apply_reaction(&Configuration(vec![1, 0]), dup).unwrap(),
            Configuration(vec![2, 0])
        );
        assert!(matches!(
            apply_reaction(&Configuration(vec![0, 2]), death),
            Err(CrnError::NotApplicable { .. })
        ));
    }

    #[test]
    fn apply_overflow_is_checked() {
        let (net, _, _) = ab(1.0, 1.0);
        let c = Configuration(vec![u64::MAX, 0]);
        assert_eq!(
            apply_reaction(&c, &net.reactions()[0]),
            Err(CrnError::Overflow(SpeciesId(0)))
        );
    }

    #[test]
    fn validate_examples() {
        let (net, a, bs) = ab(1.0, 1.0);
        let sys = validate_birth_system(net, 1.0).unwrap();
        assert_eq!(
            sys.network()
                .reactions()
                .iter()
                .filter(|r| r.tag == ReactionTag::Duplication)
                .count(),
            2
        );

        let mut b = Network::builder();
        b.species("A").unwrap();
        b.species("B").unwrap();
        b.add_reaction(Reaction::duplication(a, 1.0)).unwrap();
        assert_eq!(
            validate_birth_system(b.build().unwrap(), 1.0),
            Err(BirthSystemError::MissingDuplication("B".into()))
        );

        let mut b = Network::builder();
        b.species("A").unwrap();
        b.species("B").unwrap();
        b.add_reaction(Reaction::duplication(a, 1.0)).unwrap();
        b.add_reaction(Reaction::duplication(bs, 2.0)).unwrap();
        assert!(matches!(
            validate_birth_system(b.build().unwrap(), 1.0),
            Err(BirthSystemError::RateMismatch { ref species, .. }) if species == "B"
        ));

        let mut b = Network::builder();
        b.species("A").unwrap();
        b.add_reaction(Reaction::duplication(a, 1.0)).unwrap();
        b.add_reaction(Reaction::duplication(a, 1.0)).unwrap();
        assert_eq!(
            validate_birth_system(b.build().unwrap(), 1.0),
            Err(BirthSystemError::DuplicateDuplication("A".into()))
        );
    }

    #[test]
    fn total_population_examples() {
        let c = Configuration(vec![60, 40]);
        assert_eq!(total_population(&c, &[SpeciesId(0), SpeciesId(1)]), 100);
        assert_eq!(total_population(&c, &[]), 0);
        assert_eq!(total_population(&c, &[SpeciesId(0)]), 60);
    }

    #[test]
    fn builder_rejects_bad_input() {
        let mut b = Network::builder();
        assert!(matches!(b.species("2X"), Err(CrnError::InvalidName(_))));
        let x = b.species("X").unwrap();
        assert!(matches!(b.declare("X"), Err(CrnError::DuplicateSpecies(_))));
        assert!(matches!(
            b.add_reaction(Reaction::duplication(x, -1.0)),
            Err(CrnError::InvalidRate(_))
        ));
        assert!(matches!(
            b.add_reaction(Reaction::new(
                StoichVector::new(),
                StoichVector::new(),
                1.0,
                ReactionTag::Other
            )),
            Err(CrnError::EmptyReaction)
        ));
        assert!(matches!(
            b.add_reaction(Reaction::duplication(SpeciesId(7), 1.0)),
            Err(CrnError::UnknownSpecies(_))
        ));
        b.volume(0.0);
        assert!(matches!(b.build(), Err(CrnError::InvalidVolume(_))));
    }

    proptest! {
        #[test]
        fn propensity_zero_iff_inapplicable(a in 0u64..20, b in 0u64..20, rate in 0.01f64..10.0) {
            let (net, _, _) = ab(rate, rate);
            let c = Configuration(vec![a, b]);
            for r in net.reactions() {
                let p = propensity(r, &c, 1.0);
                prop_assert_eq!(p == 0.0, !r.is_applicable(&c));
            }
        }

        #[test]
        fn apply_then_reverse_roundtrips(a in 1u64..1000, b in 1u64..1000, which in 0usize..3) {
            let (net, _, _) = ab(1.0, 1.0);
            let c = Configuration(vec![a, b]);
            let r = &net.reactions()[which];
            let next = apply_reaction(&c, r).unwrap();
            prop_assert_eq!(apply_reaction(&next, &r.reversed()).unwrap(), c);
        }

        #[test]
        fn propensity_homogeneous(a in 0u64..50, b in 0u64..50, rate in 0.01f64..10.0, v in 0.1f64..10.0) {
            let (net, _, _) = ab(rate, rate);
            let c = Configuration(vec![a, b]);
            for r in net.reactions() {
                let base = propensity(r, &c, v);
                let mut doubled = r.clone();
                doubled.rate *= 2.0;
                prop_assert!((propensity(&doubled, &c, v) - 2.0 * base).abs() <= 1e-9 * base.max(1.0));
                prop_assert!((propensity(r, &c, v / 2.0) - 2.0 * base).abs() <= 1e-9 * base.max(1.0));
            }
        }
    }
}
