mod support;

use growthsim::analysis::beta::{ratio, reg_inc_beta_exact};
use growthsim::analysis::{expected_extinction_time, reg_inc_beta, BetaArgs};
use proptest::prelude::*;

#[test]
fn small_exact_values() {
    // P(Bin(4, 1/2) >= 3) = 5/16, I_z(2, 1) = z^2, I_z(1, 3) = 1 - (1-z)^3
    assert_eq!(reg_inc_beta_exact(&ratio(1, 2), 3, 2).unwrap(), ratio(5, 16));
    assert_eq!(reg_inc_beta_exact(&ratio(3, 4), 2, 1).unwrap(), ratio(9, 16));
    assert_eq!(reg_inc_beta_exact(&ratio(1, 4), 1, 3).unwrap(), ratio(37, 64));
}

#[test]
fn single_particle_extinction_is_ei_minus_euler() {
    // E T for M0 = 1, γ = δ = 1 is sum 1/(k k!) = Ei(1) - γ_E
    let want = 1.895_117_816_355_936_8 - 0.577_215_664_901_532_9;
    let got = expected_extinction_time(1, 1.0, 1.0, 1e-16).unwrap();
    assert!((got.value - want).abs() < 1e-13, "{}", got.value);
    assert!(got.tail_bound < 1e-14);
}

#[test]
fn extinction_scales_with_delta() {
    // only α = γ/δ matters once time is measured in units of 1/δ
    let a = expected_extinction_time(7, 2.0, 4.0, 1e-15).unwrap().value;
    let b = expected_extinction_time(7, 0.5, 1.0, 1e-15).unwrap().value;
    assert!((4.0 * a - b).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matches_quadrature(z in 0.01f64..0.99, a in 1u64..50, b in 1u64..50) {
        let got = reg_inc_beta(BetaArgs::new(z, a, b).unwrap());
        let want = support::beta_by_quadrature(z, a, b);
        prop_assert!((got - want).abs() < 1e-10, "z={} a={} b={}: {} vs {}", z, a, b, got, want);
    }
}
