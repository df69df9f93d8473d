use serde::{Deserialize, Serialize};

use crate::crn::{Configuration, SpeciesId};

/// When a simulation run ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopCondition {
    /// Any listed species has count 0.
    Extinction(Vec<SpeciesId>),
    /// Either species of the pair has count 0.
    Consensus(SpeciesId, SpeciesId),
    /// Total over the listed species is at least the threshold.
    TargetCount(Vec<SpeciesId>, u64),
    TimeHorizon(f64),
    MaxEvents(u64),
    /// Total over all species is at least the cap.
    PopulationCap(u64),
    Any(Vec<StopCondition>),
    All(Vec<StopCondition>),
}

impl StopCondition {
    pub fn any(conds: impl IntoIterator<Item = StopCondition>) -> Self {
        StopCondition::Any(conds.into_iter().collect())
    }

    pub fn all(conds: impl IntoIterator<Item = StopCondition>) -> Self {
        StopCondition::All(conds.into_iter().collect())
    }

    /// True if the condition is guaranteed to fire eventually on any
    /// trajectory: time, event count or population limits.
    pub fn is_bounded(&self) -> bool {
        match self {
            StopCondition::TimeHorizon(t) => t.is_finite(),
            StopCondition::MaxEvents(_) | StopCondition::PopulationCap(_) => true,
            StopCondition::Any(cs) => cs.iter().any(StopCondition::is_bounded),
            StopCondition::All(cs) => !cs.is_empty() && cs.iter().all(StopCondition::is_bounded),
            _ => false,
        }
    }

    /// Smallest time horizon strictly after `t`, if any leaf has one.
    pub fn next_time_boundary(&self, t: f64) -> Option<f64> {
        match self {
            StopCondition::TimeHorizon(h) if *h > t => Some(*h),
            StopCondition::Any(cs) | StopCondition::All(cs) => cs
                .iter()
                .filter_map(|c| c.next_time_boundary(t))
                .min_by(|a, b| a.total_cmp(b)),
            _ => None,
        }
    }

    /// Largest time horizon appearing anywhere in the tree.
    pub fn horizon(&self) -> Option<f64> {
        match self {
            StopCondition::TimeHorizon(h) => Some(*h),
            StopCondition::Any(cs) | StopCondition::All(cs) => cs
                .iter()
                .filter_map(StopCondition::horizon)
                .max_by(|a, b| a.total_cmp(b)),
            _ => None,
        }
    }
}

/// Evaluates `stop`. For `Any`, reports the first fired clause in
/// declaration order; `All` reports itself.
pub fn check_stop(
    config: &Configuration,
    t: f64,
    events: u64,
    stop: &StopCondition,
) -> Option<StopCondition> {
    let fired = match stop {
        StopCondition::Extinction(species) => species.iter().any(|&s| config.get(s) == 0),
        StopCondition::Consensus(a, b) => config.get(*a) == 0 || config.get(*b) == 0,
        StopCondition::TargetCount(species, threshold) => {
            species.iter().map(|&s| config.get(s)).sum::<u64>() >= *threshold
        }
        StopCondition::TimeHorizon(h) => t >= *h,
        StopCondition::MaxEvents(k) => events >= *k,
        StopCondition::PopulationCap(cap) => config.counts().iter().sum::<u64>() >= *cap,
        StopCondition::Any(cs) => {
            return cs.iter().find_map(|c| check_stop(config, t, events, c));
        }
        StopCondition::All(cs) => {
            !cs.is_empty()
                && cs
                    .iter()
                    .all(|c| check_stop(config, t, events, c).is_some())
        }
    };
    fired.then(|| stop.clone())
}
