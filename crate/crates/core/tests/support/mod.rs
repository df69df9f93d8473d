//! Independent oracles shared by the integration tests.

/// `ln B(a, b)` for integer arguments from log-factorials.
pub fn ln_beta(a: u64, b: u64) -> f64 {
    ln_factorial(a - 1) + ln_factorial(b - 1) - ln_factorial(a + b - 1)
}

fn ln_factorial(n: u64) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// `I_z(a, b)` by double-exponential quadrature of the beta density.
/// The range is split at the mode and a few widths either side so the
/// peak never falls between two coarse nodes.
pub fn beta_by_quadrature(z: f64, a: u64, b: u64) -> f64 {
    let lb = ln_beta(a, b);
    let (af, bf) = (a as f64, b as f64);
    let density = |t: f64| {
        if t <= 0.0 || t >= 1.0 {
            return match (t <= 0.0, a, b) {
                (true, 1, _) => (-lb).exp(),
                (false, _, 1) => (-lb).exp(),
                _ => 0.0,
            };
        }
        ((af - 1.0) * t.ln() + (bf - 1.0) * (1.0 - t).ln() - lb).exp()
    };
    let n = af + bf;
    let mode = if n > 2.0 { (af - 1.0) / (n - 2.0) } else { 0.5 };
    let width = (af * bf / (n * n * (n + 1.0))).sqrt();
    let mut cuts = vec![0.0];
    for k in [-6.0, -2.0, 0.0, 2.0, 6.0] {
        let c = mode + k * width;
        if c > 0.0 && c < z {
            cuts.push(c);
        }
    }
    cuts.push(z);
    cuts.windows(2)
        .map(|w| quadrature::double_exponential::integrate(density, w[0], w[1], 1e-14).integral)
        .sum()
}
