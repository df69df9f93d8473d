//! Regularized incomplete beta function for integer shape parameters.
//!
//! `I_z(a, b)` is the Beta(a, b) distribution function at `z`. For integer
//! `a, b` it equals the binomial tail
//! `sum_{j=a}^{n} C(n, j) z^j (1-z)^(n-j)` with `n = a + b - 1`.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::AnalysisError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaArgs {
    pub z: f64,
    pub a: u64,
    pub b: u64,
}

impl BetaArgs {
    pub fn new(z: f64, a: u64, b: u64) -> Result<Self, AnalysisError> {
        if !(0.0..=1.0).contains(&z) {
            return Err(AnalysisError::DomainViolation(format!(
                "z = {z} outside [0,1]"
            )));
        }
        if a == 0 || b == 0 {
            return Err(AnalysisError::DomainViolation(
                "shape parameters must be >= 1".into(),
            ));
        }
        Ok(BetaArgs { z, a, b })
    }
}

/// Neumaier compensated sum.
pub(crate) fn neumaier_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// `ln C(n, k)` as a compensated sum of log ratios.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    neumaier_sum((0..k).map(|i| ((n - i) as f64 / (i + 1) as f64).ln()))
}

/// Numerator of the binomial tail `sum_{j=lo}^{n} C(n,j) p^j (q-p)^(n-j)`
/// (the tail probability times `q^n`).
fn binomial_tail_numerator(p: &BigUint, q: &BigUint, n: u64, lo: u64) -> BigUint {
    if lo > n {
        return BigUint::zero();
    }
    let r = q - p;
    if p.is_zero() {
        return if lo == 0 {
            num_traits::pow(r, n as usize)
        } else {
            BigUint::zero()
        };
    }
    let mut term = num_traits::pow(p.clone(), n as usize);
    let mut acc = term.clone();
    // T_{j-1} = T_j * j * (q-p) / ((n-j+1) * p), always exact
    let mut j = n;
    while j > lo {
        term = term * BigUint::from(j) * &r / (BigUint::from(n - j + 1) * p);
        acc += &term;
        j -= 1;
    }
    acc
}

fn rational_parts(z: &BigRational) -> Result<(BigUint, BigUint), AnalysisError> {
    if z < &BigRational::zero() || z > &BigRational::one() {
        return Err(AnalysisError::DomainViolation(format!(
            "z = {z} outside [0,1]"
        )));
    }
    let p = z.numer().to_biguint().expect("non-negative");
    let q = z.denom().to_biguint().expect("positive");
    Ok((p, q))
}

/// Exact `I_z(a, b)` for rational `z`.
pub fn reg_inc_beta_exact(z: &BigRational, a: u64, b: u64) -> Result<BigRational, AnalysisError> {
    if a == 0 || b == 0 {
        return Err(AnalysisError::DomainViolation(
            "shape parameters must be >= 1".into(),
        ));
    }
    let (p, q) = rational_parts(z)?;
    let n = a + b - 1;
    let num = binomial_tail_numerator(&p, &q, n, a);
    Ok(BigRational::new(
        BigInt::from(num),
        BigInt::from(num_traits::pow(q, n as usize)),
    ))
}

/// The appendix binomial-sum expression taken literally:
/// `sum_{j=0}^{a-1} C(a+b-1, j) z^(a+b-1-j) (1-z)^j`.
///
/// Under the integral definition this is `I_z(b, a)`, not `I_z(a, b)`.
pub fn binomial_sum_form_exact(
    z: &BigRational,
    a: u64,
    b: u64,
) -> Result<BigRational, AnalysisError> {
    if a == 0 || b == 0 {
        return Err(AnalysisError::DomainViolation(
            "shape parameters must be >= 1".into(),
        ));
    }
    let (p, q) = rational_parts(z)?;
    let n = a + b - 1;
    // substitute k = n - j: sum_{k=b}^{n} C(n,k) z^k (1-z)^(n-k)
    let num = binomial_tail_numerator(&p, &q, n, b);
    Ok(BigRational::new(
        BigInt::from(num),
        BigInt::from(num_traits::pow(q, n as usize)),
    ))
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// `z` as `k / 2^e` with `e <= 6`, when representable that way.
fn small_dyadic(z: f64) -> Option<BigRational> {
    for e in 0..=6u32 {
        let scaled = z * f64::from(1u32 << e);
        if scaled.fract() == 0.0 {
            return Some(BigRational::new(
                BigInt::from(scaled as u64),
                BigInt::from(1u64 << e),
            ));
        }
    }
    None
}

/// `I_z(a, b)`. Quarter-like `z` (small dyadic rationals such as 1/4, 1/2,
/// 3/4, 9/16) go through exact rational arithmetic; everything else through
/// a compensated floating-point sum.
pub fn reg_inc_beta(args: BetaArgs) -> f64 {
    let BetaArgs { z, a, b } = args;
    if z <= 0.0 {
        return 0.0;
    }
    if z >= 1.0 {
        return 1.0;
    }
    match small_dyadic(z) {
        Some(q) => to_f64(&reg_inc_beta_exact(&q, a, b).expect("validated")),
        None => reg_inc_beta_float(z, a, b),
    }
}

/// Floating-point binomial tail. Terms are generated outward from the largest
/// term in the summation range, anchored by its log value.
pub fn reg_inc_beta_float(z: f64, a: u64, b: u64) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    if z >= 1.0 {
        return 1.0;
    }
    let n = a + b - 1;
    let mode = (((n + 1) as f64) * z).floor() as u64;
    let anchor = mode.clamp(a, n);
    let odds = z / (1.0 - z);
    let ln_anchor =
        ln_binomial(n, anchor) + anchor as f64 * z.ln() + (n - anchor) as f64 * (1.0 - z).ln();

    let mut up = Vec::new();
    let mut t = 1.0;
    let mut j = anchor;
    while j < n {
        t *= (n - j) as f64 / (j + 1) as f64 * odds;
        up.push(t);
        if t < 1e-18 {
            break;
        }
        j += 1;
    }
    let mut down = Vec::new();
    let mut t = 1.0;
    let mut j = anchor;
    while j > a {
        t *= j as f64 / (n - j + 1) as f64 / odds;
        down.push(t);
        if t < 1e-18 {
            break;
        }
        j -= 1;
    }
    // smallest terms first
    let rel = neumaier_sum(
        up.iter()
            .rev()
            .chain(down.iter().rev())
            .copied()
            .chain(std::iter::once(1.0)),
    );
    (ln_anchor.exp() * rel).clamp(0.0, 1.0)
}

pub fn i_half(a: u64, b: u64) -> f64 {
    reg_inc_beta(BetaArgs { z: 0.5, a, b })
}

pub fn i_three_quarters(a: u64, b: u64) -> f64 {
    reg_inc_beta(BetaArgs { z: 0.75, a, b })
}

pub fn ratio(p: u64, q: u64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(i_half(1, 1), 0.5);
        assert_eq!(i_half(2, 1), 0.25);
        assert_eq!(
            reg_inc_beta_exact(&ratio(3, 4), 6, 2).unwrap(),
            ratio(3645, 8192)
        );
        assert_eq!(i_three_quarters(6, 2), 0.4449462890625);
    }

    #[test]
    fn binomial_sum_form_is_swapped() {
        let half = ratio(1, 2);
        assert_eq!(
            binomial_sum_form_exact(&half, 2, 1).unwrap(),
            ratio(3, 4)
        );
        for (a, b) in [(2, 1), (5, 3), (7, 7), (3, 9)] {
            assert_eq!(
                binomial_sum_form_exact(&ratio(3, 4), a, b).unwrap(),
                reg_inc_beta_exact(&ratio(3, 4), b, a).unwrap()
            );
        }
    }

    #[test]
    fn float_path_matches_exact() {
        for &(a, b) in &[
            (1, 1),
            (2, 1),
            (6, 2),
            (60, 40),
            (550, 450),
            (81, 19),
            (3, 200),
            (200, 3),
        ] {
            for &(p, q) in &[(1u64, 4u64), (1, 2), (3, 4), (9, 16)] {
                let exact = to_f64(&reg_inc_beta_exact(&ratio(p, q), a, b).unwrap());
                let float = reg_inc_beta_float(p as f64 / q as f64, a, b);
                assert!(
                    (exact - float).abs() <= 1e-13 + 1e-11 * exact,
                    "{a} {b} {p}/{q}: {exact} vs {float}"
                );
            }
        }
    }

    #[test]
    fn non_dyadic_z() {
        // I_z(1, b) = 1 - (1-z)^b and I_z(a, 1) = z^a
        let z = 0.3;
        assert!((reg_inc_beta(BetaArgs { z, a: 1, b: 7 }) - (1.0 - 0.7f64.powi(7))).abs() < 1e-15);
        assert!((reg_inc_beta(BetaArgs { z, a: 4, b: 1 }) - 0.3f64.powi(4)).abs() < 1e-16);
    }

    #[test]
    fn args_validation() {
        assert!(BetaArgs::new(1.5, 1, 1).is_err());
        assert!(BetaArgs::new(0.5, 0, 1).is_err());
        assert!(BetaArgs::new(0.5, 3, 1).is_ok());
    }

    proptest! {
        #[test]
        fn reflection(a in 1u64..60, b in 1u64..60, k in 1u64..4) {
            let z = ratio(k, 4);
            let w = ratio(4 - k, 4);
            let s = reg_inc_beta_exact(&z, a, b).unwrap() + reg_inc_beta_exact(&w, b, a).unwrap();
            prop_assert_eq!(s, BigRational::one());
        }

        #[test]
        fn strictly_monotone_in_shapes(a in 1u64..80, b in 1u64..80, k in 1u64..4) {
            let z = ratio(k, 4);
            let base = reg_inc_beta_exact(&z, a, b).unwrap();
            prop_assert!(reg_inc_beta_exact(&z, a + 1, b).unwrap() < base);
            prop_assert!(reg_inc_beta_exact(&z, a, b + 1).unwrap() > base);
        }
    }
}
