//! Expected extinction time of the birth-death chain with birth rate `γM`
//! and death rate `δM^2`.

use serde::{Deserialize, Serialize};

use super::beta::neumaier_sum;
use super::AnalysisError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionTime {
    pub value: f64,
    /// Upper bound on the truncated tail mass (already divided by δ).
    pub tail_bound: f64,
    pub terms: u64,
}

/// `E T = (1/δ) sum_{j=1}^{M0} ((j-1)!/α^j) sum_{k>=j} α^k / (k! k)`, `α = γ/δ`.
///
/// The inner series is generated as `u_j = 1/j^2`,
/// `u_{k+1} = u_k · α/(k+1) · k/(k+1)` and cut once a term drops below
/// `tol` times the partial sum; the remainder is bounded geometrically by
/// `u_K r/(1-r)` with `r = α/(K+1)`.
pub fn expected_extinction_time(
    m0: u64,
    gamma: f64,
    delta: f64,
    tol: f64,
) -> Result<ExtinctionTime, AnalysisError> {
    if !(delta > 0.0) || !(gamma >= 0.0) {
        return Err(AnalysisError::DomainViolation(
            "need γ >= 0 and δ > 0".into(),
        ));
    }
    if !(tol > 0.0) {
        return Err(AnalysisError::DomainViolation(
            "tolerance must be positive".into(),
        ));
    }
    let alpha = gamma / delta;
    let mut outer = Vec::with_capacity(m0 as usize);
    let mut tail = 0.0;
    let mut terms = 0u64;
    for j in 1..=m0 {
        let mut u = 1.0 / (j as f64 * j as f64);
        let mut inner = vec![u];
        let mut partial = u;
        let mut k = j;
        loop {
            let r = alpha / (k + 1) as f64;
            if r < 1.0 && (u < tol * partial || u == 0.0) {
                tail += u * r / (1.0 - r);
                break;
            }
            u *= r * k as f64 / (k + 1) as f64;
            inner.push(u);
            partial += u;
            k += 1;
        }
        terms += inner.len() as u64;
        inner.reverse();
        outer.push(neumaier_sum(inner));
    }
    outer.reverse();
    Ok(ExtinctionTime {
        value: neumaier_sum(outer) / delta,
        tail_bound: tail / delta,
        terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SERIES_ONE: f64 = 1.317_902_151_454_404_3;

    #[test]
    fn examples() {
        assert_eq!(
            expected_extinction_time(0, 1.0, 1.0, 1e-12).unwrap().value,
            0.0
        );
        assert_eq!(
            expected_extinction_time(1, 0.0, 1.0, 1e-12).unwrap().value,
            1.0
        );
        let e = expected_extinction_time(1, 1.0, 1.0, 1e-12).unwrap();
        assert!((e.value - SERIES_ONE).abs() < 1e-12, "{}", e.value);
        assert!(e.tail_bound < 1e-12);
        assert!(e.value <= 4.472715);
    }

    #[test]
    fn pure_death_is_basel_partial_sum() {
        let e = expected_extinction_time(50, 0.0, 2.0, 1e-12).unwrap();
        let direct: f64 = (1..=50).map(|j| 1.0 / (2.0 * (j * j) as f64)).sum();
        assert!((e.value - direct).abs() < 1e-14);
    }

    #[test]
    fn bounded_and_increasing_up_to_ten_thousand() {
        let bound = std::f64::consts::E * std::f64::consts::PI.powi(2) / 6.0;
        let mut prev = 0.0;
        for m0 in (0..=10_000).step_by(250).chain([1, 2, 3, 5, 20]) {
            let v = expected_extinction_time(m0, 1.0, 1.0, 1e-12).unwrap().value;
            assert!(v <= bound && v <= 4.472715);
            if m0 > 0 && m0 % 250 == 0 {
                assert!(v > prev);
                prev = v;
            }
        }
    }

    proptest! {
        #[test]
        fn below_time_upper(m0 in 0u64..200, gamma in 0.0f64..4.0, delta in 0.1f64..4.0) {
            let v = expected_extinction_time(m0, gamma, delta, 1e-12).unwrap().value;
            let bound = (gamma / delta).exp() * std::f64::consts::PI.powi(2) / (6.0 * delta);
            prop_assert!(v <= bound * (1.0 + 1e-12));
        }
    }
}
