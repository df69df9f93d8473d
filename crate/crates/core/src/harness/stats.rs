//! Ensemble statistics, Wilson intervals and the Kolmogorov-Smirnov test.

use serde::{Deserialize, Serialize};

use crate::analysis::beta::neumaier_sum;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959964;

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Standard error of a Bernoulli frequency.
pub fn bernoulli_sigma(p: f64, trials: u64) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = neumaier_sum(xs.iter().copied()) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = neumaier_sum(xs.iter().map(|x| (x - mean) * (x - mean))) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// How a single A-B trial ended.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "outcome", content = "time")]
pub enum AbOutcome {
    /// The initially larger species (A on ties) survived.
    Majority(f64),
    Minority(f64),
    /// Both died in the same reaction.
    Tie(f64),
    /// The event cap was hit first.
    NoConsensus,
    /// The engine reported an error.
    Failed,
}

/// Counts plus the sorted consensus times. Keeping the full sorted sample
/// makes [`merge`](Self::merge) exact, so any grouping of trials gives
/// identical results.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub trials: u64,
    pub majority_wins: u64,
    pub minority_wins: u64,
    pub ties: u64,
    pub no_consensus: u64,
    pub failed: u64,
    pub consensus_times: Vec<f64>,
}

impl EnsembleStats {
    pub fn from_outcomes<'a, I: IntoIterator<Item = &'a AbOutcome>>(outcomes: I) -> Self {
        let mut s = EnsembleStats::default();
        for o in outcomes {
            s.trials += 1;
            match *o {
                AbOutcome::Majority(t) => {
                    s.majority_wins += 1;
                    s.consensus_times.push(t);
                }
                AbOutcome::Minority(t) => {
                    s.minority_wins += 1;
                    s.consensus_times.push(t);
                }
                AbOutcome::Tie(t) => {
                    s.ties += 1;
                    s.consensus_times.push(t);
                }
                AbOutcome::NoConsensus => s.no_consensus += 1,
                AbOutcome::Failed => s.failed += 1,
            }
        }
        s.consensus_times.sort_by(f64::total_cmp);
        s
    }

    pub fn merge(&self, other: &EnsembleStats) -> EnsembleStats {
        let mut times =
            Vec::with_capacity(self.consensus_times.len() + other.consensus_times.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.consensus_times, &other.consensus_times);
        while i < a.len() && j < b.len() {
            if a[i].total_cmp(&b[j]).is_le() {
                times.push(a[i]);
                i += 1;
            } else {
                times.push(b[j]);
                j += 1;
            }
        }
        times.extend_from_slice(&a[i..]);
        times.extend_from_slice(&b[j..]);
        EnsembleStats {
            trials: self.trials + other.trials,
            majority_wins: self.majority_wins + other.majority_wins,
            minority_wins: self.minority_wins + other.minority_wins,
            ties: self.ties + other.ties,
            no_consensus: self.no_consensus + other.no_consensus,
            failed: self.failed + other.failed,
            consensus_times: times,
        }
    }

    pub fn p_hat(&self) -> f64 {
        if self.trials == 0 {
            return f64::NAN;
        }
        self.majority_wins as f64 / self.trials as f64
    }

    pub fn minority_frequency(&self) -> f64 {
        if self.trials == 0 {
            return f64::NAN;
        }
        self.minority_wins as f64 / self.trials as f64
    }

    pub fn wilson(&self) -> (f64, f64) {
        wilson_interval(self.majority_wins, self.trials, Z95)
    }

    pub fn time_mean(&self) -> f64 {
        mean_and_se(&self.consensus_times).0
    }

    pub fn time_se(&self) -> f64 {
        mean_and_se(&self.consensus_times).1
    }

    pub fn time_variance(&self) -> f64 {
        let n = self.consensus_times.len();
        let se = self.time_se();
        se * se * n as f64
    }

    /// Linear-interpolated quantile of the consensus times.
    pub fn time_quantile(&self, q: f64) -> f64 {
        let t = &self.consensus_times;
        if t.is_empty() {
            return f64::NAN;
        }
        let pos = q.clamp(0.0, 1.0) * (t.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        t[lo] + (t[hi] - t[lo]) * (pos - lo as f64)
    }
}

/// `sup |F_n - F|` for a sample against a continuous distribution function.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic p-value of the one-sample KS statistic `d` at sample size
/// `n`, with Stephens' small-sample correction.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub n: usize,
    pub statistic: f64,
    pub p_value: f64,
}

pub fn ks_test(sample: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let d = ks_statistic(sample, cdf);
    KsResult {
        n: sample.len(),
        statistic: d,
        p_value: ks_pvalue(d, sample.len()),
    }
}
