//! The two couplings of the A-B chain, driven by explicit random streams so
//! that every step is a pure function and the pathwise inequalities can be
//! checked on every step.
//!
//! - continuous time: `(A, B)` against the single-species chain `M` with
//!   birth rate `γM` and death rate `δM^2`; `min(A, B) <= M` holds always.
//! - discrete time: `(A, B)` against two independent Yule processes `(X, Y)`;
//!   `X - Y <= A - B` holds as long as `X >= Y` has held.

use rand::{Rng, SeedableRng};
use rand_distr::{Beta, Binomial, Distribution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{exp1, mix64, uniform01, SimRng};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CouplingError {
    #[error("state (0,0,0) is absorbing")]
    Absorbed,
    #[error("invalid initial state: {0}")]
    InvalidInit(String),
}

/// Independent uniform `[0,1)` and Exp(1) streams derived from one seed.
pub struct RandomStreams {
    uniform: SimRng,
    exponential: SimRng,
}

impl RandomStreams {
    pub fn new(seed: u64) -> Self {
        RandomStreams {
            uniform: SimRng::seed_from_u64(mix64(seed, 0)),
            exponential: SimRng::seed_from_u64(mix64(seed, 1)),
        }
    }

    pub fn xi(&mut self) -> f64 {
        uniform01(&mut self.uniform)
    }

    pub fn eta(&mut self) -> f64 {
        exp1(&mut self.exponential)
    }

    /// Access to the uniform stream for integer draws.
    pub fn uniform_rng(&mut self) -> &mut SimRng {
        &mut self.uniform
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbmState {
    pub a: u64,
    pub b: u64,
    pub m: u64,
    pub t: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl AbmState {
    /// Starts `M` at `min(A, B)`.
    pub fn new(a: u64, b: u64, gamma: f64, delta: f64) -> Self {
        AbmState {
            a,
            b,
            m: a.min(b),
            t: 0.0,
            gamma,
            delta,
        }
    }

    pub fn lambda_ab(&self) -> f64 {
        let (a, b) = (self.a as f64, self.b as f64);
        self.gamma * (a + b) + self.delta * a * b
    }

    pub fn lambda_m(&self) -> f64 {
        let m = self.m as f64;
        self.gamma * m + self.delta * m * m
    }

    pub fn big_lambda(&self) -> f64 {
        self.lambda_ab().max(self.lambda_m())
    }

    pub fn invariant_holds(&self) -> bool {
        self.a.min(self.b) <= self.m
    }
}

/// One step of the continuous-time coupling.
///
/// With `lo <= hi` the smaller and larger of `A, B` (ties keep `A` first),
/// the A-B update is `lo+1` on `[0, γ lo/Λ)`, `hi+1` on
/// `[γ lo/Λ, γ(lo+hi)/Λ)`, a death on `[1 - δ lo hi/Λ, 1)`, and a stutter
/// otherwise. `M` moves up on `[0, γM/Λ)` and down on `[1 - δM²/Λ, 1)`.
/// Time advances by `η/Λ`.
pub fn abm_step(state: &AbmState, xi: f64, eta: f64) -> Result<AbmState, CouplingError> {
    if state.a == 0 && state.b == 0 && state.m == 0 {
        return Err(CouplingError::Absorbed);
    }
    let lam = state.big_lambda();
    let g = state.gamma;
    let d = state.delta;
    let swapped = state.a > state.b;
    let (lo, hi) = if swapped {
        (state.b, state.a)
    } else {
        (state.a, state.b)
    };
    let (lo_f, hi_f) = (lo as f64, hi as f64);
    let (lo2, hi2) = if xi < g * lo_f / lam {
        (lo + 1, hi)
    } else if xi < g * (lo_f + hi_f) / lam {
        (lo, hi + 1)
    } else if xi >= 1.0 - d * lo_f * hi_f / lam {
        (lo - 1, hi - 1)
    } else {
        (lo, hi)
    };
    let (a, b) = if swapped { (hi2, lo2) } else { (lo2, hi2) };
    let m_f = state.m as f64;
    let m = if xi < g * m_f / lam {
        state.m + 1
    } else if xi >= 1.0 - d * m_f * m_f / lam {
        state.m - 1
    } else {
        state.m
    };
    Ok(AbmState {
        a,
        b,
        m,
        t: state.t + eta / lam,
        ..*state
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbmRecord {
    /// First time `min(A, B) = 0`.
    pub consensus_time: Option<f64>,
    /// First time `M = 0`.
    pub m_extinction_time: Option<f64>,
    pub steps: u64,
    pub violations: u64,
    pub capped: bool,
    pub final_state: AbmState,
}

/// Runs the continuous-time coupling until both `min(A,B) = 0` and `M = 0`
/// have happened, or `max_steps` steps.
pub fn abm_run(a0: u64, b0: u64, gamma: f64, delta: f64, seed: u64, max_steps: u64) -> AbmRecord {
    let mut streams = RandomStreams::new(seed);
    let mut s = AbmState::new(a0, b0, gamma, delta);
    let mut rec = AbmRecord {
        consensus_time: None,
        m_extinction_time: None,
        steps: 0,
        violations: u64::from(!s.invariant_holds()),
        capped: false,
        final_state: s,
    };
    let note = |s: &AbmState, rec: &mut AbmRecord| {
        if rec.consensus_time.is_none() && s.a.min(s.b) == 0 {
            rec.consensus_time = Some(s.t);
        }
        if rec.m_extinction_time.is_none() && s.m == 0 {
            rec.m_extinction_time = Some(s.t);
        }
    };
    note(&s, &mut rec);
    while rec.consensus_time.is_none() || rec.m_extinction_time.is_none() {
        if rec.steps >= max_steps {
            rec.capped = true;
            break;
        }
        let (xi, eta) = (streams.xi(), streams.eta());
        s = match abm_step(&s, xi, eta) {
            Ok(next) => next,
            Err(_) => break,
        };
        rec.steps += 1;
        if !s.invariant_holds() {
            rec.violations += 1;
        }
        note(&s, &mut rec);
    }
    rec.final_state = s;
    rec
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbYuleState {
    pub a: u64,
    pub b: u64,
    pub x: u64,
    pub y: u64,
    pub k: u64,
    pub m: u64,
    pub gamma: f64,
    pub delta: f64,
}

impl AbYuleState {
    /// `X0 = A0`, `Y0 = B0`.
    pub fn new(a0: u64, b0: u64, gamma: f64, delta: f64) -> Self {
        AbYuleState {
            a: a0,
            b: b0,
            x: a0,
            y: b0,
            k: 0,
            m: 0,
            gamma,
            delta,
        }
    }
}

/// One step of the discrete-time coupling.
///
/// With `λ = γ(A+B) + δAB` and `d = δAB/λ`: on `[0, d)` a death
/// (`X, Y` stutter, `m` increments); on `[d, 1 - γB/λ)` `A+1`, else `B+1`;
/// `X+1` on `[d, 1 - (γ(A+B)/λ)·Y/(X+Y))`, else `Y+1`.
pub fn ab_yule_step(state: &AbYuleState, xi: f64) -> AbYuleState {
    let s = *state;
    if s.a.max(s.b) == 0 || s.x.max(s.y) == 0 {
        return AbYuleState { k: s.k + 1, ..s };
    }
    let (a, b) = (s.a as f64, s.b as f64);
    let births = s.gamma * (a + b);
    let lam = births + s.delta * a * b;
    let d = s.delta * a * b / lam;
    let mut next = AbYuleState { k: s.k + 1, ..s };
    if xi < d {
        next.a -= 1;
        next.b -= 1;
        next.m += 1;
        return next;
    }
    if xi < 1.0 - s.gamma * b / lam {
        next.a += 1;
    } else {
        next.b += 1;
    }
    let y_share = s.y as f64 / (s.x + s.y) as f64;
    if xi < 1.0 - births / lam * y_share {
        next.x += 1;
    } else {
        next.y += 1;
    }
    next
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Winner {
    A,
    B,
    /// Both species died in the same step.
    Neither,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbYuleRecord {
    pub winner: Option<Winner>,
    pub ab_collided: bool,
    pub xy_collided: bool,
    /// False when the run hit the cap before `X = Y` was decided.
    pub xy_resolved: bool,
    /// Steps where `X - Y <= A - B` failed while `X >= Y` had held.
    pub violations: u64,
    /// First `A = B` without `X = Y` at or before that step.
    pub collision_violations: u64,
    pub steps: u64,
    pub deaths: u64,
}

/// Azuma bound on a Polya-urn ratio at total `n` ever moving from `r` to
/// `theta`: the ratio is a martingale with increments at most `1/(N+1)`.
pub fn azuma_hit_bound(r: f64, theta: f64, n: u64) -> f64 {
    let e = r - theta;
    (-(e * e) * n as f64 / 2.0).exp()
}

/// Ratio threshold `p/q` for `X/(X+Y)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Threshold {
    pub p: u64,
    pub q: u64,
}

impl Threshold {
    pub const HALF: Threshold = Threshold { p: 1, q: 2 };
    pub const THREE_QUARTERS: Threshold = Threshold { p: 3, q: 4 };

    /// `x/(x+y) <= p/q` in integer arithmetic.
    pub fn reached(&self, x: u64, y: u64) -> bool {
        u128::from(x) * u128::from(self.q) <= u128::from(self.p) * (u128::from(x) + u128::from(y))
    }

    pub fn value(&self) -> f64 {
        self.p as f64 / self.q as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct YuleHit {
    pub hit: bool,
    /// False when the cap was reached with the question still open.
    pub resolved: bool,
    pub x: u64,
    pub y: u64,
}

/// Continues a two-species Yule jump chain (a Polya urn) from `(x, y)` until
/// the ratio `X/(X+Y)` reaches `theta`, or the Azuma bound on ever reaching
/// it falls below `tol`, or the total reaches `n_max`.
pub fn yule_run<R: Rng + ?Sized>(
    x: u64,
    y: u64,
    theta: Threshold,
    n_max: u64,
    tol: f64,
    rng: &mut R,
) -> YuleHit {
    let (mut x, mut y) = (x, y);
    let mut check_at = x + y;
    loop {
        if theta.reached(x, y) {
            return YuleHit {
                hit: true,
                resolved: true,
                x,
                y,
            };
        }
        let n = x + y;
        if n >= check_at {
            let r = x as f64 / n as f64;
            if azuma_hit_bound(r, theta.value(), n) < tol {
                return YuleHit {
                    hit: false,
                    resolved: true,
                    x,
                    y,
                };
            }
            // the bound moves slowly; re-evaluate every ~1% growth
            check_at = n + (n / 100).max(1);
        }
        if n >= n_max {
            return YuleHit {
                hit: false,
                resolved: false,
                x,
                y,
            };
        }
        if rng.random_range(0..n) < x {
            x += 1;
        } else {
            y += 1;
        }
    }
}

/// Runs the discrete-time coupling from `X0 = A0 >= B0 = Y0` until the A-B
/// chain reaches consensus and the `X = Y` question is settled.
///
/// After consensus the A-B chain has no deaths left, so `(X, Y)` evolves as
/// a plain Polya urn and is finished with [`yule_run`].
pub fn ab_yule_run(
    a0: u64,
    b0: u64,
    gamma: f64,
    delta: f64,
    seed: u64,
    n_max: u64,
    tol: f64,
) -> Result<AbYuleRecord, CouplingError> {
    if a0 < b0 || b0 == 0 {
        return Err(CouplingError::InvalidInit(format!(
            "need A0 >= B0 >= 1, got ({a0},{b0})"
        )));
    }
    let mut streams = RandomStreams::new(seed);
    let mut s = AbYuleState::new(a0, b0, gamma, delta);
    let mut rec = AbYuleRecord {
        winner: None,
        ab_collided: a0 == b0,
        xy_collided: a0 == b0,
        xy_resolved: a0 == b0,
        violations: 0,
        collision_violations: 0,
        steps: 0,
        deaths: 0,
    };
    let mut armed = true;
    while s.a.min(s.b) > 0 {
        if s.x + s.y >= n_max {
            break;
        }
        let next = ab_yule_step(&s, streams.xi());
        if next.m > s.m {
            rec.deaths += 1;
        }
        s = next;
        rec.steps += 1;
        if s.x == s.y {
            rec.xy_collided = true;
            rec.xy_resolved = true;
        }
        if s.x < s.y {
            armed = false;
        }
        if armed && (s.x as i128 - s.y as i128) > (s.a as i128 - s.b as i128) {
            rec.violations += 1;
        }
        if s.a == s.b && !rec.ab_collided {
            rec.ab_collided = true;
            if !rec.xy_collided {
                rec.collision_violations += 1;
            }
        }
    }
    rec.winner = match (s.a, s.b) {
        (0, 0) => Some(Winner::Neither),
        (0, _) => Some(Winner::B),
        (_, 0) => Some(Winner::A),
        _ => None,
    };
    if !rec.xy_collided {
        let hit = yule_run(s.x, s.y, Threshold::HALF, n_max, tol, streams.uniform_rng());
        rec.xy_collided = hit.hit;
        rec.xy_resolved = hit.resolved;
    }
    Ok(rec)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct YuleLimit {
    pub ratio: f64,
    pub hit_equal: bool,
    pub x: u64,
    pub y: u64,
}

/// Samples `X/(X+Y)` at total `n_max` for the stutter-free two-species Yule
/// chain started at `(x0, y0)`, plus whether `X = Y` occurred on the way.
///
/// With `shortcut`, the chain is stepped only until the `X = Y` question is
/// decided (hit, or Azuma bound below `tol`); the remaining growth to
/// `n_max` is drawn in one go from its exact law, a beta-binomial with the
/// current counts as parameters. Without it every step is simulated.
pub fn yule_ratio_limit(
    x0: u64,
    y0: u64,
    n_max: u64,
    seed: u64,
    shortcut: Option<f64>,
) -> YuleLimit {
    let mut rng = SimRng::seed_from_u64(seed);
    let (mut x, mut y) = (x0, y0);
    let mut hit_equal = x == y;
    match shortcut {
        Some(tol) if x != y => {
            // run towards the diagonal from whichever side we start on
            let (hi, lo) = if x > y { (x, y) } else { (y, x) };
            let h = yule_run(hi, lo, Threshold::HALF, n_max, tol, &mut rng);
            hit_equal = h.hit;
            (x, y) = if x > y { (h.x, h.y) } else { (h.y, h.x) };
        }
        _ => {}
    }
    if shortcut.is_some() {
        let remaining = n_max.saturating_sub(x + y);
        if remaining > 0 {
            let p = Beta::new(x as f64, y as f64)
                .expect("positive shapes")
                .sample(&mut rng);
            let dx = Binomial::new(remaining, p)
                .expect("valid p")
                .sample(&mut rng);
            x += dx;
            y += remaining - dx;
        }
    } else {
        while x + y < n_max {
            if rng.random_range(0..x + y) < x {
                x += 1;
            } else {
                y += 1;
            }
            hit_equal |= x == y;
        }
    }
    YuleLimit {
        ratio: x as f64 / (x + y) as f64,
        hit_equal,
        x,
        y,
    }
}

/// Extinction time of the chain with birth rate `γM` and death rate `δM^2`
/// (direct SSA; the quadratic death rate is not a mass-action propensity).
pub fn m_chain_extinction_time<R: Rng + ?Sized>(
    m0: u64,
    gamma: f64,
    delta: f64,
    max_steps: u64,
    rng: &mut R,
) -> Option<f64> {
    let mut m = m0;
    let mut t = 0.0;
    let mut steps = 0;
    while m > 0 {
        if steps >= max_steps {
            return None;
        }
        let mf = m as f64;
        let birth = gamma * mf;
        let total = birth + delta * mf * mf;
        t += exp1(rng) / total;
        if uniform01(rng) * total < birth {
            m += 1;
        } else {
            m -= 1;
        }
        steps += 1;
    }
    Some(t)
}

/// Which component's effective moves a frozen-state waiting time measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Component {
    Ab,
    M,
}

/// Holds `state` fixed and accumulates `η/Λ` over coupled steps until the
/// chosen component makes a non-stuttering move. The result is
/// exponential with rate `λ(A,B)` or `λ(M)`.
pub fn frozen_waiting_time(
    state: &AbmState,
    component: Component,
    streams: &mut RandomStreams,
) -> f64 {
    let mut t = 0.0;
    loop {
        let (xi, eta) = (streams.xi(), streams.eta());
        let next = abm_step(state, xi, eta).expect("frozen state is not absorbing");
        t += next.t - state.t;
        let moved = match component {
            Component::Ab => (next.a, next.b) != (state.a, state.b),
            Component::M => next.m != state.m,
        };
        if moved {
            return t;
        }
    }
}
