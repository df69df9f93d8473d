//! Ensemble checks of the coupled chains: per-step invariants, collision
//! frequencies, the beta limit and the stuttering waiting-time law.

use serde::{Deserialize, Serialize};

use super::config::CoupleCheckConfig;
use super::ensemble::run_indexed;
use super::stats::{bernoulli_sigma, ks_test, mean_and_se, KsResult};
use super::HarnessError;
use crate::analysis::beta::i_half;
use crate::couplings::{
    ab_yule_run, abm_run, frozen_waiting_time, yule_ratio_limit, yule_run, AbmState, Component,
    RandomStreams, Threshold, Winner,
};
use crate::rng::{mix64, rng_from_seed};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeComparison {
    pub t: f64,
    pub p_m_extinct: f64,
    pub p_consensus: f64,
    pub sigma: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbmSummary {
    pub a0: u64,
    pub b0: u64,
    pub runs: u64,
    pub violations: u64,
    pub capped: u64,
    /// Runs where M died strictly before the A-B chain reached consensus.
    pub order_violations: u64,
    pub probes: Vec<ProbeComparison>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbYuleSummary {
    pub a0: u64,
    pub b0: u64,
    pub runs: u64,
    pub violations: u64,
    pub collision_violations: u64,
    pub unresolved: u64,
    pub p_ab_collision: f64,
    pub p_xy_collision: f64,
    pub p_b_wins: f64,
    /// `P(A=B) <= P(X=Y) + 3σ`.
    pub comparison_holds: bool,
    /// Standard error of the per-run difference `1{A=B} - 2·1{B wins}`.
    pub factor_two_sigma: f64,
    /// `|P(A=B) - 2 P(B wins)| <= 3σ` (only meaningful when A0 > B0).
    pub factor_two_holds: bool,
    /// Both species died in the same reaction.
    pub p_tie: f64,
    /// Standard error of `1{A=B} - 2·1{B wins} - 1{tie}`.
    pub tie_corrected_sigma: f64,
    /// `|P(A=B) - 2 P(B wins) - P(tie)| <= 3σ`. A tie can only follow a
    /// collision, and from a collision A and B win equally often.
    pub tie_corrected_holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct YuleCollision {
    pub x0: u64,
    pub y0: u64,
    pub runs: u64,
    pub unresolved: u64,
    pub frequency: f64,
    pub sigma: f64,
    pub expected: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitCheck {
    pub x0: u64,
    pub y0: u64,
    pub samples: u64,
    pub mean: f64,
    pub se: f64,
    pub expected_mean: f64,
    pub ks_uniform: Option<KsResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StutterCheck {
    pub component: String,
    pub state: (u64, u64, u64),
    pub rate: f64,
    pub ks: KsResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoupleReport {
    pub abm: Vec<AbmSummary>,
    pub ab_yule: Vec<AbYuleSummary>,
    pub yule_collision: YuleCollision,
    pub limits: Vec<LimitCheck>,
    pub stuttering: Vec<StutterCheck>,
    /// Deterministic invariant violations over all runs.
    pub violations: u64,
}

pub fn abm_summary(
    cfg: &CoupleCheckConfig,
    a0: u64,
    b0: u64,
    first: u64,
    seed: u64,
    workers: usize,
) -> Result<AbmSummary, HarnessError> {
    let recs = run_indexed(first, cfg.abm_runs, seed, workers, |s, _| {
        abm_run(a0, b0, cfg.gamma, cfg.delta, s, cfg.abm_max_steps)
    })?;
    let n = recs.len() as u64;
    let probes = cfg
        .probe_times
        .iter()
        .map(|&t| {
            let by = |x: Option<f64>| x.is_some_and(|v| v <= t);
            let pm = recs.iter().filter(|r| by(r.m_extinction_time)).count() as f64 / n as f64;
            let pc = recs.iter().filter(|r| by(r.consensus_time)).count() as f64 / n as f64;
            // difference of two correlated frequencies; the larger σ is conservative enough
            let sigma = bernoulli_sigma(pm, n).max(bernoulli_sigma(pc, n));
            ProbeComparison {
                t,
                p_m_extinct: pm,
                p_consensus: pc,
                sigma,
                holds: pm <= pc + 3.0 * sigma,
            }
        })
        .collect();
    Ok(AbmSummary {
        a0,
        b0,
        runs: n,
        violations: recs.iter().map(|r| r.violations).sum(),
        capped: recs.iter().filter(|r| r.capped).count() as u64,
        order_violations: recs
            .iter()
            .filter(|r| {
                matches!((r.consensus_time, r.m_extinction_time), (Some(c), Some(m)) if m < c)
                    || (r.m_extinction_time.is_some() && r.consensus_time.is_none())
            })
            .count() as u64,
        probes,
    })
}

pub fn ab_yule_summary(
    cfg: &CoupleCheckConfig,
    a0: u64,
    b0: u64,
    first: u64,
    seed: u64,
    workers: usize,
) -> Result<AbYuleSummary, HarnessError> {
    let recs = run_indexed(first, cfg.ab_yule_runs, seed, workers, |s, _| {
        ab_yule_run(a0, b0, cfg.gamma, cfg.delta, s, cfg.n_max, cfg.tol)
    })?;
    let recs: Vec<_> = recs
        .into_iter()
        .collect::<Result<_, _>>()
        .map_err(|e| HarnessError::Config(format!("ab_yule init ({a0},{b0}): {e}")))?;
    let n = recs.len() as u64;
    let freq = |f: &dyn Fn(&crate::couplings::AbYuleRecord) -> bool| {
        recs.iter().filter(|r| f(r)).count() as f64 / n as f64
    };
    let p_ab = freq(&|r| r.ab_collided);
    let p_xy = freq(&|r| r.xy_collided);
    let p_b = freq(&|r| r.winner == Some(Winner::B));
    let p_tie = freq(&|r| r.winner == Some(Winner::Neither));
    let diffs: Vec<f64> = recs
        .iter()
        .map(|r| {
            f64::from(u8::from(r.ab_collided))
                - 2.0 * f64::from(u8::from(r.winner == Some(Winner::B)))
        })
        .collect();
    let (d_mean, d_se) = mean_and_se(&diffs);
    let ind = |b: bool| f64::from(u8::from(b));
    let corrected: Vec<f64> = recs
        .iter()
        .map(|r| {
            ind(r.ab_collided)
                - 2.0 * ind(r.winner == Some(Winner::B))
                - ind(r.winner == Some(Winner::Neither))
        })
        .collect();
    let (c_mean, c_se) = mean_and_se(&corrected);
    let sigma = bernoulli_sigma(p_ab, n).max(bernoulli_sigma(p_xy, n));
    Ok(AbYuleSummary {
        a0,
        b0,
        runs: n,
        violations: recs.iter().map(|r| r.violations).sum(),
        collision_violations: recs.iter().map(|r| r.collision_violations).sum(),
        unresolved: recs.iter().filter(|r| !r.xy_resolved).count() as u64,
        p_ab_collision: p_ab,
        p_xy_collision: p_xy,
        p_b_wins: p_b,
        comparison_holds: p_ab <= p_xy + 3.0 * sigma,
        factor_two_sigma: d_se,
        factor_two_holds: d_mean.abs() <= 3.0 * d_se.max(1.0 / n as f64),
        p_tie,
        tie_corrected_sigma: c_se,
        tie_corrected_holds: c_mean.abs() <= 3.0 * c_se.max(1.0 / n as f64),
    })
}

/// Frequency of `X = Y` ever happening in the two-species Yule chain.
pub fn yule_collision(
    x0: u64,
    y0: u64,
    runs: u64,
    n_max: u64,
    tol: f64,
    seed: u64,
    first: u64,
    workers: usize,
) -> Result<YuleCollision, HarnessError> {
    let hits = run_indexed(first, runs, seed, workers, |s, _| {
        let mut rng = rng_from_seed(s);
        yule_run(
            x0.max(y0),
            x0.min(y0),
            Threshold::HALF,
            n_max,
            tol,
            &mut rng,
        )
    })?;
    let count = hits.iter().filter(|h| h.hit).count();
    let p = count as f64 / runs as f64;
    let sigma = bernoulli_sigma(p, runs);
    let expected = if x0 == y0 {
        1.0
    } else {
        2.0 * i_half(x0.max(y0), x0.min(y0))
    };
    Ok(YuleCollision {
        x0,
        y0,
        runs,
        unresolved: hits.iter().filter(|h| !h.resolved).count() as u64,
        frequency: p,
        sigma,
        expected,
        holds: (p - expected).abs() <= 3.0 * sigma.max(1.0 / runs as f64),
    })
}

pub fn limit_check(
    x0: u64,
    y0: u64,
    samples: u64,
    n_max: u64,
    tol: f64,
    seed: u64,
    first: u64,
    workers: usize,
) -> Result<LimitCheck, HarnessError> {
    let ratios = run_indexed(first, samples, seed, workers, |s, _| {
        yule_ratio_limit(x0, y0, n_max, s, Some(tol)).ratio
    })?;
    let (mean, se) = mean_and_se(&ratios);
    Ok(LimitCheck {
        x0,
        y0,
        samples,
        mean,
        se,
        expected_mean: x0 as f64 / (x0 + y0) as f64,
        ks_uniform: (x0 == 1 && y0 == 1).then(|| ks_test(&ratios, |x| x.clamp(0.0, 1.0))),
    })
}

/// Waiting times until a non-stuttering move with the state held fixed,
/// tested against the exponential law with the component's own rate.
pub fn stutter_check(
    state: &AbmState,
    component: Component,
    samples: u64,
    seed: u64,
) -> StutterCheck {
    let mut streams = RandomStreams::new(seed);
    let waits: Vec<f64> = (0..samples)
        .map(|_| frozen_waiting_time(state, component, &mut streams))
        .collect();
    let rate = match component {
        Component::Ab => state.lambda_ab(),
        Component::M => state.lambda_m(),
    };
    StutterCheck {
        component: match component {
            Component::Ab => "ab".into(),
            Component::M => "m".into(),
        },
        state: (state.a, state.b, state.m),
        rate,
        ks: ks_test(&waits, |t| 1.0 - (-rate * t).exp()),
    }
}

pub fn couple_check(
    cfg: &CoupleCheckConfig,
    seed: u64,
    workers: usize,
) -> Result<CoupleReport, HarnessError> {
    // disjoint index blocks per sub-experiment
    const BLOCK: u64 = 1 << 40;
    let mut block = 0u64;
    let mut next = || {
        block += 1;
        block * BLOCK
    };
    let mut abm = Vec::new();
    for &(a0, b0) in &cfg.abm_inits {
        abm.push(abm_summary(cfg, a0, b0, next(), seed, workers)?);
    }
    let mut ab_yule = Vec::new();
    for &(a0, b0) in &cfg.ab_yule_inits {
        ab_yule.push(ab_yule_summary(cfg, a0, b0, next(), seed, workers)?);
    }
    let (x0, y0) = cfg.yule_collision_init;
    let yule_collision = yule_collision(
        x0,
        y0,
        cfg.yule_collision_runs,
        cfg.n_max,
        cfg.tol,
        seed,
        next(),
        workers,
    )?;
    let limits = vec![
        limit_check(
            1,
            1,
            cfg.limit_samples,
            cfg.limit_n_max,
            cfg.tol,
            seed,
            next(),
            workers,
        )?,
        limit_check(
            3,
            1,
            cfg.limit_samples,
            cfg.limit_n_max,
            cfg.tol,
            seed,
            next(),
            workers,
        )?,
    ];
    let frozen = AbmState::new(4, 6, cfg.gamma, cfg.delta);
    let stuttering = vec![
        stutter_check(&frozen, Component::M, cfg.ks_samples, mix64(seed, next())),
        stutter_check(&frozen, Component::Ab, cfg.ks_samples, mix64(seed, next())),
    ];
    let violations = abm
        .iter()
        .map(|s| s.violations + s.order_violations)
        .sum::<u64>()
        + ab_yule
            .iter()
            .map(|s| s.violations + s.collision_violations)
            .sum::<u64>();
    Ok(CoupleReport {
        abm,
        ab_yule,
        yule_collision,
        limits,
        stuttering,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_check_is_clean() {
        let cfg = CoupleCheckConfig {
            abm_runs: 50,
            ab_yule_runs: 200,
            yule_collision_runs: 2000,
            limit_samples: 500,
            limit_n_max: 10_000,
            ks_samples: 300,
            ..Default::default()
        };
        let r = couple_check(&cfg, 3, 1).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.yule_collision.holds, "{:?}", r.yule_collision);
        assert!(
            r.stuttering.iter().all(|s| s.ks.p_value > 1e-4),
            "{:?}",
            r.stuttering
        );
    }
}
