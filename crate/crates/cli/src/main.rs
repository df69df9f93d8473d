use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use growthsim::analysis::beta::{ratio, reg_inc_beta_exact};
use growthsim::analysis::{reg_inc_beta, BetaArgs};
use growthsim::crn::parse_network;
use growthsim::engine::{simulate, Method, Sampling, SimulationOptions, StopCondition};
use growthsim::harness::{
    emit_report, run_experiment, Experiment, ExperimentConfig, HarnessError, OutputFile,
    RunManifest,
};

const EXIT_CONFIG: u8 = 2;
const EXIT_VIOLATION: u8 = 3;

#[derive(Parser)]
#[command(
    name = "growthsim",
    version,
    about = "Simulate and analyse birth-system reaction networks"
)]
struct Cli {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Trials per grid point (samples for nand-sim).
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Exact,
    TauLeap,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Exact => Method::Exact,
            MethodArg::TauLeap => Method::TauLeap,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Majority-win probability against the initial gap.
    AbSweep,
    /// Mean consensus time over rate and population grids.
    AbTimeGrid,
    /// Conjugation gate with amplifiers under logistic growth.
    NandSim,
    /// Run a circuit file repeatedly and tally the output readouts.
    CircuitRun {
        #[arg(long)]
        circuit: Option<PathBuf>,
        /// Input value, e.g. `a=1`; repeatable.
        #[arg(long = "input", value_parser = parse_input)]
        inputs: Vec<(String, bool)>,
        /// Initial total of each input signal.
        #[arg(long)]
        n: Option<u64>,
    },
    /// Check the coupled chains' invariants and laws.
    CoupleCheck,
    /// Compare every closed-form bound with its oracle.
    BoundsAudit,
    /// Evaluate the regularized incomplete beta function.
    Beta {
        #[arg(long)]
        z: f64,
        #[arg(long)]
        a: u64,
        #[arg(long)]
        b: u64,
    },
    /// Simulate a network file.
    Simulate {
        #[arg(long)]
        network: PathBuf,
        /// Initial counts, e.g. `A=10,B=5`.
        #[arg(long)]
        init: String,
        #[arg(long, default_value_t = 10.0)]
        t_end: f64,
        #[arg(long, value_enum, default_value = "exact")]
        method: MethodArg,
        /// Evenly spaced samples over the horizon.
        #[arg(long, default_value_t = 512)]
        samples: usize,
    },
}

fn parse_input(s: &str) -> Result<(String, bool), String> {
    let (name, v) = s.split_once('=').ok_or("expected NAME=0 or NAME=1")?;
    match v.trim() {
        "0" => Ok((name.trim().to_string(), false)),
        "1" => Ok((name.trim().to_string(), true)),
        _ => Err(format!("value for `{name}` must be 0 or 1")),
    }
}

enum Failure {
    Config(String),
    Other(String),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(m) => Failure::Config(m),
            e @ HarnessError::Io { .. } => Failure::Other(e.to_string()),
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            ExperimentConfig::from_toml(&text)
                .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.run.seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.run.workers = w;
    }
    if let Some(o) = &cli.out {
        cfg.run.out = o.clone();
    }
    if let Some(t) = cli.trials {
        if t == 0 {
            return Err(Failure::Config("--trials must be at least 1".into()));
        }
        cfg.ab_sweep.trials = t;
        cfg.ab_sweep.trials_at_zero = t;
        cfg.ab_time_grid.trials = t;
        cfg.nand_sim.samples = t;
        cfg.couple_check.abm_runs = t;
        cfg.couple_check.ab_yule_runs = t;
        cfg.bounds_audit.drop_trials = t;
        cfg.circuit_run.trials = t;
    }
    Ok(cfg)
}

fn beta_output(z: f64, a: u64, b: u64) -> Result<(Vec<OutputFile>, serde_json::Value), Failure> {
    let args = BetaArgs::new(z, a, b).map_err(|e| Failure::Config(e.to_string()))?;
    let value = reg_inc_beta(args);
    // exact rational value for quarter-like z
    let exact = (0..=6u32).find_map(|e| {
        let s = z * f64::from(1u32 << e);
        (s.fract() == 0.0).then(|| {
            reg_inc_beta_exact(&ratio(s as u64, 1u64 << e), a, b)
                .ok()
                .map(|r| r.to_string())
        })
    });
    let summary =
        serde_json::json!({ "z": z, "a": a, "b": b, "value": value, "exact": exact.flatten() });
    let file = OutputFile::new(
        "beta.json",
        serde_json::to_string_pretty(&summary).unwrap() + "\n",
    );
    Ok((vec![file], summary))
}

fn simulate_output(
    network: &PathBuf,
    init: &str,
    t_end: f64,
    method: Method,
    samples: usize,
    seed: u64,
) -> Result<(Vec<OutputFile>, serde_json::Value), Failure> {
    let text = std::fs::read_to_string(network)
        .map_err(|e| Failure::Config(format!("{}: {e}", network.display())))?;
    let net =
        parse_network(&text).map_err(|e| Failure::Config(format!("{}: {e}", network.display())))?;
    let mut pairs = Vec::new();
    for part in init.split(',').filter(|p| !p.trim().is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Failure::Config(format!("bad initial count `{part}`")))?;
        let v: u64 = v
            .trim()
            .parse()
            .map_err(|_| Failure::Config(format!("bad count in `{part}`")))?;
        pairs.push((k.trim(), v));
    }
    let init = net.configuration(&pairs).map_err(Failure::Config)?;
    let opts = SimulationOptions {
        seed,
        sampling: Sampling::Evenly(samples.max(1)),
        ..Default::default()
    };
    let traj = simulate(
        method,
        &net,
        &init,
        &StopCondition::TimeHorizon(t_end),
        &opts,
    )
    .map_err(|e| Failure::Other(e.to_string()))?;
    let summary = traj.summary_json(&net);
    let files = vec![
        OutputFile::new("trajectory.csv", traj.to_csv(&net)),
        OutputFile::new(
            "summary.json",
            serde_json::to_string_pretty(&summary).unwrap() + "\n",
        ),
    ];
    Ok((files, summary))
}

fn run(cli: &Cli) -> Result<u64, Failure> {
    let mut cfg = load_config(cli)?;
    let (files, summary, violations) = match &cli.command {
        Command::Beta { z, a, b } => {
            let (f, s) = beta_output(*z, *a, *b)?;
            (f, s, 0)
        }
        Command::Simulate {
            network,
            init,
            t_end,
            method,
            samples,
        } => {
            let (f, s) = simulate_output(
                network,
                init,
                *t_end,
                (*method).into(),
                *samples,
                cfg.run.seed,
            )?;
            (f, s, 0)
        }
        cmd => {
            let kind = match cmd {
                Command::AbSweep => Experiment::AbSweep,
                Command::AbTimeGrid => Experiment::AbTimeGrid,
                Command::NandSim => Experiment::NandSim,
                Command::CoupleCheck => Experiment::CoupleCheck,
                Command::BoundsAudit => Experiment::BoundsAudit,
                Command::CircuitRun { circuit, inputs, n } => {
                    if circuit.is_some() {
                        cfg.circuit_run.circuit = circuit.clone();
                    }
                    if !inputs.is_empty() {
                        cfg.circuit_run.inputs = inputs.clone();
                    }
                    if let Some(n) = n {
                        cfg.circuit_run.n = *n;
                    }
                    Experiment::CircuitRun
                }
                Command::Beta { .. } | Command::Simulate { .. } => unreachable!(),
            };
            let out = run_experiment(kind, &cfg)?;
            (out.files, out.summary, out.violations)
        }
    };
    let manifest = RunManifest::new(std::env::args().collect(), &cfg);
    emit_report(&cfg.run.out, &files, manifest)?;
    println!("{}", serde_json::to_string_pretty(&summary).unwrap());
    Ok(violations)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(v) => {
            eprintln!("growthsim: {v} invariant violations");
            ExitCode::from(EXIT_VIOLATION)
        }
        Err(Failure::Config(m)) => {
            eprintln!("growthsim: {m}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Other(m)) => {
            eprintln!("growthsim: {m}");
            ExitCode::FAILURE
        }
    }
}
