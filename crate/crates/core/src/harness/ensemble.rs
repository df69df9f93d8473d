//! Seeded, index-ordered parallel trials and the A-B experiments.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{AbSweepConfig, AbTimeGridConfig};
use super::stats::{AbOutcome, EnsembleStats};
use super::HarnessError;
use crate::analysis::majority_failure_bound;
use crate::crn::BirthSystem;
use crate::engine::{simulate_exact, SimulationOptions, StopCondition};
use crate::protocols::ab_network;
use crate::rng::mix64;

/// Runs `f(seed, index)` for `index` in `first..first + count`, with
/// `seed = mix64(master_seed, index)`. Results come back in index order, so
/// the output does not depend on `workers` (0 = all cores).
pub fn run_indexed<T, F>(
    first: u64,
    count: u64,
    master_seed: u64,
    workers: usize,
    f: F,
) -> Result<Vec<T>, HarnessError>
where
    T: Send,
    F: Fn(u64, u64) -> T + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        (first..first + count)
            .into_par_iter()
            .map(|i| f(mix64(master_seed, i), i))
            .collect()
    }))
}

/// One A-B run from `(a0, b0)` to consensus or `max_events`. The majority
/// is A when `a0 >= b0`.
pub fn ab_trial(sys: &BirthSystem, a0: u64, b0: u64, seed: u64, max_events: u64) -> AbOutcome {
    let net = sys.network();
    let (sa, sb) = (
        net.species_ids().next().unwrap(),
        net.species_ids().nth(1).unwrap(),
    );
    let mut init = net.zero_configuration();
    init.set(sa, a0);
    init.set(sb, b0);
    let stop = StopCondition::any([
        StopCondition::Consensus(sa, sb),
        StopCondition::MaxEvents(max_events),
    ]);
    let Ok(t) = simulate_exact(
        sys,
        &init,
        &stop,
        &SimulationOptions::with_seed(seed).stop_only(),
    ) else {
        return AbOutcome::Failed;
    };
    let (a, b) = (t.terminal.config.get(sa), t.terminal.config.get(sb));
    let time = t.terminal.time;
    let a_majority = a0 >= b0;
    match (a, b) {
        (0, 0) => AbOutcome::Tie(time),
        (_, 0) if a > 0 => {
            if a_majority {
                AbOutcome::Majority(time)
            } else {
                AbOutcome::Minority(time)
            }
        }
        (0, _) => {
            if a_majority {
                AbOutcome::Minority(time)
            } else {
                AbOutcome::Majority(time)
            }
        }
        _ => AbOutcome::NoConsensus,
    }
}

/// Runs `trials` A-B trials at one grid point starting at global index
/// `first`.
pub fn ab_ensemble(
    sys: &BirthSystem,
    a0: u64,
    b0: u64,
    trials: u64,
    first: u64,
    master_seed: u64,
    workers: usize,
    max_events: u64,
) -> Result<EnsembleStats, HarnessError> {
    let outcomes = run_indexed(first, trials, master_seed, workers, |seed, _| {
        ab_trial(sys, a0, b0, seed, max_events)
    })?;
    Ok(EnsembleStats::from_outcomes(&outcomes))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbSweepRow {
    pub n_init: u64,
    pub delta: u64,
    pub a0: u64,
    pub b0: u64,
    /// `1 - I_{1/2}(A0, B0)`, the lower bound on the majority winning.
    pub bound: f64,
    pub stats: EnsembleStats,
}

impl AbSweepRow {
    pub const CSV_HEADER: &'static str =
        "n_init,delta,trials,wins_majority,p_hat,ci_lo,ci_hi,bound";

    pub fn csv_line(&self) -> String {
        let (lo, hi) = self.stats.wilson();
        format!(
            "{},{},{},{},{},{},{},{}",
            self.n_init,
            self.delta,
            self.stats.trials,
            self.stats.majority_wins,
            self.stats.p_hat(),
            lo,
            hi,
            self.bound
        )
    }
}

/// The gaps swept at total `n`: `points` evenly spaced values from 0 to
/// `min(n, 8 sqrt(n ln n))` plus `4 sqrt(n ln n)`, each rounded to the
/// parity of `n` so that `A0 = (n + Δ)/2` is an integer.
pub fn sweep_gaps(n: u64, points: usize) -> Vec<u64> {
    let scale = ((n as f64) * (n as f64).ln()).sqrt();
    let top = (8.0 * scale).min(n as f64);
    let fix = |d: f64| {
        let mut d = d.round() as u64;
        if (n - d.min(n)) % 2 == 1 {
            d += 1;
        }
        if d > n {
            d -= 2;
        }
        d
    };
    let mut gaps: Vec<u64> = (0..points.max(1))
        .map(|i| {
            let f = if points > 1 {
                i as f64 / (points - 1) as f64
            } else {
                0.0
            };
            fix(f * top)
        })
        .collect();
    if 4.0 * scale <= n as f64 {
        gaps.push(fix(4.0 * scale));
    }
    gaps.sort_unstable();
    gaps.dedup();
    gaps
}

pub fn ab_sweep(
    cfg: &AbSweepConfig,
    master_seed: u64,
    workers: usize,
) -> Result<Vec<AbSweepRow>, HarnessError> {
    if cfg.totals.is_empty() || cfg.trials == 0 || cfg.points == 0 {
        return Err(HarnessError::Config(
            "ab_sweep needs totals, points and trials".into(),
        ));
    }
    let sys = ab_network(cfg.gamma, cfg.delta).map_err(|e| HarnessError::Config(e.to_string()))?;
    let mut rows = Vec::new();
    let mut index = 0u64;
    for &n in &cfg.totals {
        if n < 2 {
            return Err(HarnessError::Config(format!("total {n} too small")));
        }
        for d in sweep_gaps(n, cfg.points) {
            let a0 = (n + d) / 2;
            let b0 = n - a0;
            if b0 == 0 {
                continue;
            }
            let trials = if d == 0 {
                cfg.trials_at_zero.max(1)
            } else {
                cfg.trials
            };
            let stats = ab_ensemble(
                &sys,
                a0,
                b0,
                trials,
                index,
                master_seed,
                workers,
                cfg.max_events,
            )?;
            index += trials;
            let bound = 1.0 - majority_failure_bound(a0, b0).expect("a0 >= b0 >= 1");
            rows.push(AbSweepRow {
                n_init: n,
                delta: d,
                a0,
                b0,
                bound,
                stats,
            });
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGridRow {
    pub grid: String,
    pub gamma: f64,
    pub delta: f64,
    pub a0: u64,
    pub b0: u64,
    pub stats: EnsembleStats,
}

impl TimeGridRow {
    pub const CSV_HEADER: &'static str =
        "grid,gamma,delta,a0,b0,trials,no_consensus,mean_time,se_time,log10_mean_time";

    pub fn csv_line(&self) -> String {
        let m = self.stats.time_mean();
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.grid,
            self.gamma,
            self.delta,
            self.a0,
            self.b0,
            self.stats.trials,
            self.stats.no_consensus,
            m,
            self.stats.time_se(),
            m.log10()
        )
    }
}

pub fn log_grid(lo: f64, hi: f64, size: usize) -> Vec<f64> {
    if size == 1 {
        return vec![10f64.powf(lo)];
    }
    (0..size)
        .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (size - 1) as f64))
        .collect()
}

/// Mean consensus time over a `γ × δ` grid at fixed initial counts, and
/// over an `A0 × B0` grid at fixed rates.
pub fn ab_time_grid(
    cfg: &AbTimeGridConfig,
    master_seed: u64,
    workers: usize,
) -> Result<Vec<TimeGridRow>, HarnessError> {
    if cfg.size == 0 || cfg.trials == 0 {
        return Err(HarnessError::Config(
            "ab_time_grid needs size and trials".into(),
        ));
    }
    let mut rows = Vec::new();
    let mut index = 0u64;
    let rates = log_grid(cfg.rate_log10.0, cfg.rate_log10.1, cfg.size);
    let (a0, b0) = cfg.rate_grid_init;
    for &gamma in &rates {
        for &delta in &rates {
            let sys = ab_network(gamma, delta).map_err(|e| HarnessError::Config(e.to_string()))?;
            let stats = ab_ensemble(
                &sys,
                a0,
                b0,
                cfg.trials,
                index,
                master_seed,
                workers,
                cfg.max_events,
            )?;
            index += cfg.trials;
            rows.push(TimeGridRow {
                grid: "rates".into(),
                gamma,
                delta,
                a0,
                b0,
                stats,
            });
        }
    }
    let pops: Vec<u64> = log_grid(cfg.population_log10.0, cfg.population_log10.1, cfg.size)
        .into_iter()
        .map(|x| x.round().max(1.0) as u64)
        .collect();
    let (gamma, delta) = cfg.population_grid_rates;
    let sys = ab_network(gamma, delta).map_err(|e| HarnessError::Config(e.to_string()))?;
    for &a0 in &pops {
        for &b0 in &pops {
            let stats = ab_ensemble(
                &sys,
                a0,
                b0,
                cfg.trials,
                index,
                master_seed,
                workers,
                cfg.max_events,
            )?;
            index += cfg.trials;
            rows.push(TimeGridRow {
                grid: "populations".into(),
                gamma,
                delta,
                a0,
                b0,
                stats,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worker_count_does_not_change_results() {
        let sys = ab_network(1.0, 1.0).unwrap();
        let one = ab_ensemble(&sys, 30, 20, 64, 5, 11, 1, 1_000_000).unwrap();
        let four = ab_ensemble(&sys, 30, 20, 64, 5, 11, 4, 1_000_000).unwrap();
        assert_eq!(one, four);
        let again = ab_ensemble(&sys, 30, 20, 64, 5, 11, 2, 1_000_000).unwrap();
        assert_eq!(
            serde_json::to_string(&one).unwrap(),
            serde_json::to_string(&again).unwrap()
        );
    }

    #[test]
    fn gaps_have_the_right_parity() {
        for n in [100u64, 101, 1000, 10_000] {
            let g = sweep_gaps(n, 21);
            assert_eq!(g[0], n % 2);
            assert!(g.iter().all(|d| (n - d) % 2 == 0 && *d <= n));
            assert!(g.windows(2).all(|w| w[0] < w[1]));
        }
        assert_eq!(*sweep_gaps(100, 21).last().unwrap(), 100);
    }

    #[test]
    fn outcomes_are_labelled_by_initial_majority() {
        let sys = ab_network(1.0, 1.0).unwrap();
        let o = ab_trial(&sys, 1, 0, 0, 10);
        assert!(matches!(o, AbOutcome::Majority(t) if t == 0.0));
        let o = ab_trial(&sys, 0, 1, 0, 10);
        assert!(matches!(o, AbOutcome::Majority(_)));
        assert_eq!(ab_trial(&sys, 5, 5, 0, 1), AbOutcome::NoConsensus);
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(-2.0, 1.0, 12);
        assert_eq!(g.len(), 12);
        assert!((g[0] - 0.01).abs() < 1e-15 && (g[11] - 10.0).abs() < 1e-12);
    }
}
