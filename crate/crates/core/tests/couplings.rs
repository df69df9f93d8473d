use growthsim::analysis::beta::i_half;
use growthsim::couplings::{yule_ratio_limit, yule_run, Threshold};
use growthsim::harness::stats::{bernoulli_sigma, ks_test, mean_and_se};
use growthsim::rng::{mix64, rng_from_seed};

#[test]
fn collision_probability_is_twice_the_beta_tail() {
    // from (3, 1): 2 I_{1/2}(3, 1) = 2 P(Bin(3, 1/2) >= 3) = 1/4
    let runs = 20_000u64;
    let hits = (0..runs)
        .filter(|&i| {
            let mut rng = rng_from_seed(mix64(17, i));
            yule_run(3, 1, Threshold::HALF, 1 << 22, 1e-9, &mut rng).hit
        })
        .count();
    let p = hits as f64 / runs as f64;
    assert_eq!(2.0 * i_half(3, 1), 0.25);
    assert!((p - 0.25).abs() < 4.0 * bernoulli_sigma(0.25, runs), "{p}");
}

#[test]
fn ratio_limit_is_beta_distributed() {
    // (1, 1) converges to Uniform(0, 1); (3, 1) to Beta(3, 1) with mean 3/4
    let uni: Vec<f64> = (0..3000).map(|s| yule_ratio_limit(1, 1, 100_000, s, Some(1e-9)).ratio).collect();
    assert!(ks_test(&uni, |x| x.clamp(0.0, 1.0)).p_value > 1e-3);
    let b31: Vec<f64> = (0..3000).map(|s| yule_ratio_limit(3, 1, 100_000, 10_000 + s, Some(1e-9)).ratio).collect();
    assert!(ks_test(&b31, |x| x.clamp(0.0, 1.0).powi(3)).p_value > 1e-3);
    let (m, se) = mean_and_se(&b31);
    assert!((m - 0.75).abs() < 4.0 * se);
}
