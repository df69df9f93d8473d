use growthsim::crn::{parse_network, Network, Reaction};
use growthsim::engine::{simulate, EngineError, Method, SimulationOptions, StopCondition};
use growthsim::harness::stats::mean_and_se;

fn yule(gamma: f64) -> Network {
    let mut b = Network::builder();
    let x = b.species("X").unwrap();
    b.add_reaction(Reaction::duplication(x, gamma)).unwrap();
    b.build().unwrap()
}

fn final_counts(net: &Network, x0: u64, t: f64, method: Method, runs: u64) -> Vec<f64> {
    let init = net.configuration(&[("X", x0)]).unwrap();
    let stop = StopCondition::TimeHorizon(t);
    (0..runs)
        .map(|s| {
            let traj = simulate(method, net, &init, &stop, &SimulationOptions::with_seed(s).stop_only()).unwrap();
            assert_eq!(traj.terminal.time, t);
            traj.terminal.config.counts()[0] as f64
        })
        .collect()
}

#[test]
fn yule_mean_and_variance() {
    // E X(t) = x0 e^t, Var X(t) = x0 e^t (e^t - 1)
    let net = yule(1.0);
    let xs = final_counts(&net, 50, 1.0, Method::Exact, 4000);
    let (mean, se) = mean_and_se(&xs);
    let e = 1f64.exp();
    assert!((mean - 50.0 * e).abs() < 4.0 * se, "{mean} ± {se}");
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    let want = 50.0 * e * (e - 1.0);
    assert!((var / want - 1.0).abs() < 0.1, "{var} vs {want}");
}

#[test]
fn tau_leap_tracks_exact_mean() {
    let net = yule(0.5);
    let (exact, _) = mean_and_se(&final_counts(&net, 200, 2.0, Method::Exact, 1000));
    let (tau, _) = mean_and_se(&final_counts(&net, 200, 2.0, Method::TauLeap, 1000));
    assert!((tau / exact - 1.0).abs() < 0.03, "{tau} vs {exact}");
}

#[test]
fn annihilation_is_deterministic() {
    let net = parse_network("A + B -> 0 @ 1\n").unwrap();
    let init = net.configuration(&[("A", 5), ("B", 3)]).unwrap();
    let (a, b) = (net.species_id("A").unwrap(), net.species_id("B").unwrap());
    let stop = StopCondition::any([StopCondition::Consensus(a, b), StopCondition::MaxEvents(100)]);
    let t = simulate(Method::Exact, &net, &init, &stop, &SimulationOptions::with_seed(9)).unwrap();
    assert_eq!(t.terminal.config.counts(), &[2, 0]);
    assert_eq!(t.event_count, 3);
    // nothing can fire after B is gone
    let stop = StopCondition::TimeHorizon(1.0);
    let err = simulate(Method::Exact, &net, &t.terminal.config, &stop, &SimulationOptions::with_seed(9)).unwrap_err();
    assert!(matches!(err, EngineError::DeadlockBeforeStop { .. }), "{err:?}");
}
