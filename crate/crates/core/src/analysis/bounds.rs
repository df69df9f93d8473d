//! Closed-form bounds, evaluated literally, plus the quantities
//! they are meant to bound.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::beta::{i_half, i_three_quarters};
use super::AnalysisError;

/// The lower bound on the limit probability used by the ratio-drop bound.
pub const OMEGA_CONSTANT: f64 = 0.444;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundKind {
    /// `1/2 exp(-(Δ+1)^2 / (4(m-1)))`, meant to bound `I_{1/2}(m+Δ, m)`.
    HalfGap { m: u64, delta: u64 },
    /// `1/2 exp(-(X-Y+1)^2/(4(Y-1)) + (X+Y-1) ln(3/2))`, meant to bound `I_{3/4}(X, Y)`.
    I34 { x: u64, y: u64 },
    /// `I_{3/4}(X0, Y0) / 0.444`, bounds the probability that a two-species
    /// Yule ratio ever drops to 3/4.
    Drop { x0: u64, y0: u64 },
    /// `(1 - exp((-Δ^2/(n-Δ) + max)/2) / (2*0.444))^2`, a lower bound on
    /// both gate inputs keeping their ratio above 3/4 forever.
    GateInputs { n: u64, delta: u64, max: u64 },
    /// `1 - exp(-(n/8 - Δ)^2 / (2n))`, a lower bound on the output gap
    /// exceeding Δ once n outputs exist.
    GateGap { n: u64, delta: u64 },
    /// `e^(γ/δ) π^2 / (6δ)`, bounds the expected extinction time of the
    /// birth-death chain with birth rate γM and death rate δM^2.
    TimeUpper { gamma: f64, delta: f64 },
}

fn domain(msg: impl Into<String>) -> AnalysisError {
    AnalysisError::DomainViolation(msg.into())
}

pub fn closed_form_bound(kind: &BoundKind) -> Result<f64, AnalysisError> {
    match *kind {
        BoundKind::HalfGap { m, delta } => {
            if m < 2 {
                return Err(domain("half_gap requires m >= 2"));
            }
            let d = delta as f64 + 1.0;
            Ok(0.5 * (-(d * d) / (4.0 * (m as f64 - 1.0))).exp())
        }
        BoundKind::I34 { x, y } => {
            if y < 2 || x < y {
                return Err(domain("i34 requires X >= Y >= 2"));
            }
            let d = (x - y) as f64 + 1.0;
            let e = -(d * d) / (4.0 * (y as f64 - 1.0)) + (x + y - 1) as f64 * 1.5f64.ln();
            Ok(0.5 * e.exp())
        }
        BoundKind::Drop { x0, y0 } => {
            if y0 < 1 || x0 <= 3 * y0 {
                return Err(domain("drop requires X0/(X0+Y0) > 3/4 and Y0 >= 1"));
            }
            Ok(i_three_quarters(x0, y0) / OMEGA_CONSTANT)
        }
        BoundKind::GateInputs { n, delta, max } => {
            if 2 * delta <= n || delta >= n {
                return Err(domain("gate_inputs requires n/2 < Δ < n"));
            }
            if max < n {
                return Err(domain("gate_inputs requires max >= n"));
            }
            let (n, d) = (n as f64, delta as f64);
            let e = 0.5 * (-(d * d) / (n - d) + max as f64);
            let inner = 1.0 - e.exp() / (2.0 * OMEGA_CONSTANT);
            Ok(inner * inner)
        }
        BoundKind::GateGap { n, delta } => {
            if n == 0 || 8 * delta > n {
                return Err(domain("gate_gap requires n >= 1 and Δ <= n/8"));
            }
            let n = n as f64;
            let g = n / 8.0 - delta as f64;
            Ok(1.0 - (-(g * g) / (2.0 * n)).exp())
        }
        BoundKind::TimeUpper { gamma, delta } => {
            if !(delta > 0.0) || !(gamma >= 0.0) {
                return Err(domain("time_upper requires γ >= 0 and δ > 0"));
            }
            Ok((gamma / delta).exp() * PI * PI / (6.0 * delta))
        }
    }
}

/// Upper bound on the probability that the A-B protocol started at
/// `(a0, b0)` ends with the initial minority surviving: `I_{1/2}(a0, b0)`.
pub fn majority_failure_bound(a0: u64, b0: u64) -> Result<f64, AnalysisError> {
    if a0 < b0 {
        return Err(AnalysisError::ArgumentOrder { a0, b0 });
    }
    if b0 == 0 {
        return Err(domain("B0 must be >= 1"));
    }
    Ok(i_half(a0, b0))
}

/// Smallest feasible `y` on the line `x = 3y - r`.
fn minimal_point(x0: u64, y0: u64, r: u64) -> (u64, u64) {
    let y = (y0 + 1).max((x0 + r).div_ceil(3)).max(1);
    (3 * y - r, y)
}

/// `inf { I_{3/4}(x,y) : x >= X0, y >= Y0+1, x in 3y - {0,1,2} }`.
///
/// Along each residue line the infimum sits at the line's smallest feasible
/// point: the `x = 3y` line is non-decreasing under `(x,y) -> (x+3,y+1)` and
/// stays below 1/2, while the other two lines stay above 1/2 (checked
/// against [`omega_scan`] in the tests).
pub fn omega_lower_bound(x0: u64, y0: u64) -> f64 {
    (0..3)
        .map(|r| {
            let (x, y) = minimal_point(x0, y0, r);
            i_three_quarters(x, y)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Brute-force minimum over the feasible set with `y <= y_max`.
pub fn omega_scan(x0: u64, y0: u64, y_max: u64) -> f64 {
    let mut best = f64::INFINITY;
    for y in (y0 + 1).max(1)..=y_max {
        for r in 0..3 {
            let x = 3 * y - r;
            if x >= x0 && x >= 1 {
                best = best.min(i_three_quarters(x, y));
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gate_gap_examples() {
        let v = closed_form_bound(&BoundKind::GateGap { n: 800, delta: 50 }).unwrap();
        assert!((v - (1.0 - (-1.5625f64).exp())).abs() < 1e-15);
        assert!((v - 0.790388).abs() < 1e-6);
        assert_eq!(
            closed_form_bound(&BoundKind::GateGap { n: 800, delta: 100 }).unwrap(),
            0.0
        );
        assert!(closed_form_bound(&BoundKind::GateGap { n: 800, delta: 101 }).is_err());
    }

    #[test]
    fn time_upper_value() {
        let v = closed_form_bound(&BoundKind::TimeUpper {
            gamma: 1.0,
            delta: 1.0,
        })
        .unwrap();
        // e * pi^2 / 6
        assert!((v - 4.471_394_382_9).abs() < 1e-9);
        assert!(v <= 4.472715);
    }

    #[test]
    fn closed_forms() {
        let i34 = closed_form_bound(&BoundKind::I34 { x: 81, y: 19 }).unwrap();
        assert!((i34 - 1.554e-7).abs() < 1e-9, "{i34}");
        assert!(i_three_quarters(81, 19) > i34);
        let drop = closed_form_bound(&BoundKind::Drop { x0: 85, y0: 15 }).unwrap();
        assert!((drop - 0.0141219).abs() < 1e-6, "{drop}");
        assert!(closed_form_bound(&BoundKind::HalfGap { m: 1, delta: 1 }).is_err());
        assert!(closed_form_bound(&BoundKind::Drop { x0: 75, y0: 25 }).is_err());
        assert!(closed_form_bound(&BoundKind::GateInputs {
            n: 100,
            delta: 40,
            max: 100
        })
        .is_err());
        let gi = closed_form_bound(&BoundKind::GateInputs {
            n: 100,
            delta: 80,
            max: 100,
        })
        .unwrap();
        assert!(gi > 0.999 && gi <= 1.0);
    }

    #[test]
    fn majority_bound() {
        assert_eq!(majority_failure_bound(2, 1).unwrap(), 0.25);
        assert_eq!(majority_failure_bound(7, 7).unwrap(), 0.5);
        assert!((majority_failure_bound(60, 40).unwrap() - 0.021_937_646_793_507_6).abs() < 1e-15);
        assert_eq!(
            majority_failure_bound(1, 2),
            Err(AnalysisError::ArgumentOrder { a0: 1, b0: 2 })
        );
    }

    #[test]
    fn omega_values() {
        assert_eq!(omega_lower_bound(1, 1), 0.4449462890625);
        assert!(omega_lower_bound(1, 1) > OMEGA_CONSTANT);
        assert_eq!(i_three_quarters(4, 2), 0.6328125);
        assert_eq!(i_three_quarters(5, 2), 0.533935546875);
    }

    #[test]
    fn omega_matches_scan_and_is_monotone() {
        for x0 in 1..40 {
            for y0 in 1..12 {
                let w = omega_lower_bound(x0, y0);
                let s = omega_scan(x0, y0, y0 + 64 + x0 / 3);
                assert_eq!(w, s, "({x0},{y0})");
                assert!(omega_lower_bound(x0 + 1, y0) >= w);
                assert!(omega_lower_bound(x0, y0 + 1) >= w);
            }
        }
    }
}
