//! Grid comparison of every closed-form bound against an exact or Monte
//! Carlo oracle. Violations are data, not errors.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::beta::{i_half, i_three_quarters, reg_inc_beta};
use super::bounds::{closed_form_bound, BoundKind, OMEGA_CONSTANT};
use super::extinction::expected_extinction_time;
use super::BetaArgs;
use crate::couplings::{yule_run, Threshold};
use crate::rng::{mix64, rng_from_seed};

/// Which way the closed form is supposed to sit relative to the oracle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `oracle <= closed_form`
    Upper,
    /// `closed_form <= oracle`
    Lower,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditPoint {
    pub params: BTreeMap<String, f64>,
    pub closed_form: f64,
    pub oracle: f64,
    /// Standard error of a Monte Carlo oracle; the comparison allows 3σ.
    pub oracle_sigma: Option<f64>,
    pub satisfied: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditSummary {
    pub points: usize,
    pub violations: usize,
    pub fraction_satisfied: f64,
    /// Largest amount by which the bound is exceeded (0 when none).
    pub max_violation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub relation: Relation,
    pub closed_form: String,
    pub oracle: String,
    pub points: Vec<AuditPoint>,
    pub summary: AuditSummary,
}

impl BoundReport {
    fn new(
        name: &str,
        relation: Relation,
        closed_form: &str,
        oracle: &str,
        points: Vec<AuditPoint>,
    ) -> Self {
        let violations = points.iter().filter(|p| !p.satisfied).count();
        let max_violation = points
            .iter()
            .filter(|p| !p.satisfied)
            .map(|p| match relation {
                Relation::Upper => p.oracle - p.closed_form,
                Relation::Lower => p.closed_form - p.oracle,
            })
            .fold(0.0, f64::max);
        let n = points.len();
        BoundReport {
            name: name.into(),
            relation,
            closed_form: closed_form.into(),
            oracle: oracle.into(),
            summary: AuditSummary {
                points: n,
                violations,
                fraction_satisfied: if n == 0 {
                    1.0
                } else {
                    (n - violations) as f64 / n as f64
                },
                max_violation,
            },
            points,
        }
    }

    /// One row per grid point; parameter columns first, in name order.
    pub fn to_csv(&self) -> String {
        let keys: Vec<&String> = self
            .points
            .first()
            .map(|p| p.params.keys().collect())
            .unwrap_or_default();
        let mut out = String::new();
        for k in &keys {
            let _ = write!(out, "{k},");
        }
        out.push_str("closed_form,oracle,oracle_sigma,satisfied\n");
        for p in &self.points {
            for k in &keys {
                let _ = write!(out, "{},", p.params[*k]);
            }
            let sigma = p.oracle_sigma.map(|s| s.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{:e},{:e},{sigma},{}",
                p.closed_form, p.oracle, p.satisfied
            );
        }
        out
    }

    pub fn point(&self, params: &[(&str, f64)]) -> Option<&AuditPoint> {
        self.points
            .iter()
            .find(|p| params.iter().all(|(k, v)| p.params.get(*k) == Some(v)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AuditGrids {
    /// `m` values; `Δ` runs over `1..=m`.
    pub half_gap_m: Vec<u64>,
    pub i34: Vec<(u64, u64)>,
    pub drop: Vec<(u64, u64)>,
    pub drop_trials: u64,
    pub drop_n_max: u64,
    pub drop_tol: f64,
    pub seed: u64,
    /// `n` values; `Δ` runs over `n/64` steps up to `n/8`.
    pub gate_gap_n: Vec<u64>,
    pub gate_inputs: Vec<(u64, u64, u64)>,
    pub time_upper: Vec<(f64, f64)>,
    pub time_upper_m0: Vec<u64>,
}

impl Default for AuditGrids {
    fn default() -> Self {
        let mut i34 = vec![(81, 19)];
        for y in [2u64, 5, 10, 19, 40] {
            for x in [3 * y, 4 * y, 5 * y, 8 * y] {
                i34.push((x, y));
            }
        }
        AuditGrids {
            half_gap_m: vec![16, 64, 256, 1024],
            i34,
            drop: vec![(85, 15)],
            drop_trials: 100_000,
            drop_n_max: 1 << 24,
            drop_tol: 1e-9,
            seed: 0,
            gate_gap_n: vec![800, 1600, 3200],
            gate_inputs: [100u64, 1000]
                .into_iter()
                .flat_map(|n| [6, 7, 8, 9].map(|k| (n, k * n / 10, n)))
                .collect(),
            time_upper: [0.5, 1.0, 2.0]
                .into_iter()
                .flat_map(|g| [0.5, 1.0, 2.0].map(|d| (g, d)))
                .collect(),
            time_upper_m0: vec![1, 10, 100, 1000],
        }
    }
}

fn params(kv: &[(&str, f64)]) -> BTreeMap<String, f64> {
    kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn exact_point(kv: &[(&str, f64)], closed: f64, oracle: f64, rel: Relation) -> AuditPoint {
    let satisfied = match rel {
        Relation::Upper => oracle <= closed,
        Relation::Lower => closed <= oracle,
    };
    AuditPoint {
        params: params(kv),
        closed_form: closed,
        oracle,
        oracle_sigma: None,
        satisfied,
    }
}

fn half_gap_reports(ms: &[u64]) -> [BoundReport; 2] {
    let mut closed = Vec::new();
    let mut hoeffding = Vec::new();
    for &m in ms {
        for d in 1..=m {
            let exact = i_half(m + d, m);
            let kv = [("m", m as f64), ("delta", d as f64)];
            if let Ok(c) = closed_form_bound(&BoundKind::HalfGap { m, delta: d }) {
                closed.push(exact_point(&kv, c, exact, Relation::Upper));
            }
            let h = (-((d * d) as f64) / (8.0 * m as f64)).exp();
            hoeffding.push(exact_point(&kv, h, exact, Relation::Upper));
        }
    }
    [
        BoundReport::new(
            "half_gap_closed",
            Relation::Upper,
            "1/2 exp(-(Δ+1)^2/(4(m-1)))",
            "exact I_{1/2}(m+Δ, m)",
            closed,
        ),
        BoundReport::new(
            "half_gap_hoeffding",
            Relation::Upper,
            "exp(-Δ^2/(8m))",
            "exact I_{1/2}(m+Δ, m)",
            hoeffding,
        ),
    ]
}

fn i34_report(grid: &[(u64, u64)]) -> BoundReport {
    let pts = grid
        .iter()
        .filter_map(|&(x, y)| {
            let c = closed_form_bound(&BoundKind::I34 { x, y }).ok()?;
            Some(exact_point(
                &[("x", x as f64), ("y", y as f64)],
                c,
                i_three_quarters(x, y),
                Relation::Upper,
            ))
        })
        .collect();
    BoundReport::new(
        "i34",
        Relation::Upper,
        "1/2 exp(-(X-Y+1)^2/(4(Y-1)) + (X+Y-1) ln(3/2))",
        "exact I_{3/4}(X, Y)",
        pts,
    )
}

/// Fraction of Polya-urn runs from `(x0, y0)` whose ratio ever drops to 3/4,
/// with its standard error. Runs that hit `n_max` unresolved count as hits
/// (conservative for an upper bound) and are returned separately.
pub fn drop_frequency(
    x0: u64,
    y0: u64,
    trials: u64,
    n_max: u64,
    tol: f64,
    seed: u64,
) -> (f64, f64, u64) {
    let mut hits = 0u64;
    let mut open = 0u64;
    for i in 0..trials {
        let mut rng = rng_from_seed(mix64(seed, i));
        let h = yule_run(x0, y0, Threshold::THREE_QUARTERS, n_max, tol, &mut rng);
        if h.hit || !h.resolved {
            hits += 1;
        }
        if !h.resolved {
            open += 1;
        }
    }
    let p = hits as f64 / trials as f64;
    (p, (p * (1.0 - p) / trials as f64).sqrt(), open)
}

fn drop_report(g: &AuditGrids) -> BoundReport {
    let pts = g
        .drop
        .iter()
        .filter_map(|&(x0, y0)| {
            let c = closed_form_bound(&BoundKind::Drop { x0, y0 }).ok()?;
            let (p, sigma, open) =
                drop_frequency(x0, y0, g.drop_trials, g.drop_n_max, g.drop_tol, g.seed);
            // with zero hits the binomial σ vanishes; use the one-event scale
            let slack = 3.0 * sigma.max(1.0 / g.drop_trials as f64);
            Some(AuditPoint {
                params: params(&[
                    ("x0", x0 as f64),
                    ("y0", y0 as f64),
                    ("trials", g.drop_trials as f64),
                    ("unresolved", open as f64),
                ]),
                closed_form: c,
                oracle: p,
                oracle_sigma: Some(sigma),
                satisfied: p <= c + slack,
            })
        })
        .collect();
    BoundReport::new(
        "drop",
        Relation::Upper,
        "I_{3/4}(X0, Y0) / 0.444",
        "Monte Carlo P(ratio ever <= 3/4) of the two-species Yule chain",
        pts,
    )
}

/// `P(Bin(n, 9/16) > (n+Δ)/2)`: the chance that the output gap exceeds `Δ`
/// when each output is correct with probability `(3/4)^2`.
pub fn gate_gap_oracle(n: u64, delta: u64) -> f64 {
    let k = (n + delta) / 2 + 1;
    if k > n {
        return 0.0;
    }
    reg_inc_beta(BetaArgs {
        z: 9.0 / 16.0,
        a: k,
        b: n - k + 1,
    })
}

fn gate_gap_report(ns: &[u64]) -> BoundReport {
    let mut pts = Vec::new();
    for &n in ns {
        let step = (n / 64).max(1);
        for d in (0..=n / 8).step_by(step as usize) {
            if let Ok(c) = closed_form_bound(&BoundKind::GateGap { n, delta: d }) {
                pts.push(exact_point(
                    &[("n", n as f64), ("delta", d as f64)],
                    c,
                    gate_gap_oracle(n, d),
                    Relation::Lower,
                ));
            }
        }
    }
    BoundReport::new(
        "gate_gap",
        Relation::Lower,
        "1 - exp(-(n/8 - Δ)^2/(2n))",
        "exact P(Bin(n, 9/16) > (n+Δ)/2)",
        pts,
    )
}

/// `(1 - I_{3/4}(X0, Y0)/0.444)^2` at the worst `(n, Δ)`-correct inputs.
pub fn gate_inputs_oracle(n: u64, delta: u64) -> f64 {
    let x0 = (n + delta).div_ceil(2);
    let y0 = n - x0;
    if y0 == 0 {
        return 1.0;
    }
    let inner = (1.0 - i_three_quarters(x0, y0) / OMEGA_CONSTANT).max(0.0);
    inner * inner
}

fn gate_inputs_report(grid: &[(u64, u64, u64)]) -> BoundReport {
    let pts = grid
        .iter()
        .filter_map(|&(n, delta, max)| {
            let c = closed_form_bound(&BoundKind::GateInputs { n, delta, max }).ok()?;
            Some(exact_point(
                &[
                    ("n", n as f64),
                    ("delta", delta as f64),
                    ("max", max as f64),
                ],
                c,
                gate_inputs_oracle(n, delta),
                Relation::Lower,
            ))
        })
        .collect();
    BoundReport::new(
        "gate_inputs",
        Relation::Lower,
        "(1 - exp((-Δ^2/(n-Δ) + max)/2)/(2·0.444))^2",
        "(1 - I_{3/4}(⌈(n+Δ)/2⌉, ⌊(n-Δ)/2⌋)/0.444)^2",
        pts,
    )
}

fn time_upper_report(rates: &[(f64, f64)], m0s: &[u64]) -> BoundReport {
    let mut pts = Vec::new();
    for &(gamma, delta) in rates {
        let Ok(c) = closed_form_bound(&BoundKind::TimeUpper { gamma, delta }) else {
            continue;
        };
        for &m0 in m0s {
            if let Ok(e) = expected_extinction_time(m0, gamma, delta, 1e-12) {
                pts.push(exact_point(
                    &[("gamma", gamma), ("delta", delta), ("m0", m0 as f64)],
                    c,
                    e.value + e.tail_bound,
                    Relation::Upper,
                ));
            }
        }
    }
    BoundReport::new(
        "time_upper",
        Relation::Upper,
        "e^(γ/δ) π^2/(6δ)",
        "series E[T] plus tail certificate",
        pts,
    )
}

pub fn bounds_audit(grids: &AuditGrids) -> Vec<BoundReport> {
    let [closed, hoeffding] = half_gap_reports(&grids.half_gap_m);
    vec![
        closed,
        hoeffding,
        i34_report(&grids.i34),
        drop_report(grids),
        gate_gap_report(&grids.gate_gap_n),
        gate_inputs_report(&grids.gate_inputs),
        time_upper_report(&grids.time_upper, &grids.time_upper_m0),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> AuditGrids {
        AuditGrids {
            half_gap_m: vec![16, 64],
            drop_trials: 2000,
            gate_gap_n: vec![800],
            time_upper_m0: vec![1, 50],
            ..Default::default()
        }
    }

    #[test]
    fn flags_i34_and_keeps_hoeffding() {
        let reports = bounds_audit(&small());
        let by = |n: &str| reports.iter().find(|r| r.name == n).unwrap();
        let p = by("i34").point(&[("x", 81.0), ("y", 19.0)]).unwrap();
        assert!(!p.satisfied);
        assert!(p.oracle > 0.06 && p.oracle < 0.08, "{}", p.oracle);
        assert_eq!(by("half_gap_hoeffding").summary.violations, 0);
        assert!(by("half_gap_closed").summary.violations > 0);
        assert_eq!(by("gate_gap").summary.violations, 0);
        assert_eq!(by("time_upper").summary.violations, 0);
        assert_eq!(by("drop").summary.violations, 0);
    }

    #[test]
    fn gate_gap_oracle_values() {
        // Δ beyond n: the gap cannot exceed n
        assert_eq!(gate_gap_oracle(10, 10), 0.0);
        // n = 1, Δ = 0: one correct output
        assert!((gate_gap_oracle(1, 0) - 9.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn csv_shape() {
        let r = half_gap_reports(&[2])[1].clone();
        let csv = r.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(
            lines[0],
            "delta,m,closed_form,oracle,oracle_sigma,satisfied"
        );
        assert_eq!(lines.len(), 3);
    }
}
