use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tabular_rl::concurrent::run_concurrent_with;
use tabular_rl::harness::{
    build_learner, prepare_env, q_snapshot_csv, run_experiment, scaling_csv, schedule_csv, sweep_scaling,
    RunConfig, Settings,
};
use tabular_rl::learner::LearnerRegistry;
use tabular_rl::mdp::{backward_induction, policy_evaluation, write_text};
use tabular_rl::metrics::switching_bound;
use tabular_rl::{Error, Result, StageSchedule};

#[derive(Parser)]
#[command(name = "tabrl", version, about = "Tabular episodic RL experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single run; writes the per-episode log and Q/V snapshots.
    Run(Common),
    /// Cumulative regret at several horizons over several seeds.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Episode multipliers applied to --episodes, e.g. 1,2,4,8
        #[arg(long)]
        multipliers: Option<String>,
        /// Seeds, e.g. 0,1,2
        #[arg(long)]
        seeds: Option<String>,
    },
    /// Concurrent rounds with M agents sharing one learner.
    Concurrent {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        agents: Option<usize>,
        /// Target suboptimality of the returned policy
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Print exact optimal values and policy for an environment.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Also dump the model in the plain-text format
        #[arg(long)]
        dump_model: bool,
    },
    /// Print the stage table `i,e_i,end_i`.
    Schedule {
        #[arg(long = "H")]
        horizon: usize,
        #[arg(long, default_value_t = 1000)]
        n_max: u64,
    },
    /// List registered algorithms.
    Algos,
}

#[derive(Args, Default)]
struct Common {
    /// `key = value` config file; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// random | jao | file:PATH
    #[arg(long)]
    env: Option<String>,
    #[arg(long = "S")]
    states: Option<usize>,
    #[arg(long = "A")]
    actions: Option<usize>,
    #[arg(long = "H")]
    horizon: Option<usize>,
    #[arg(long)]
    sparsity: Option<f64>,
    #[arg(long)]
    env_seed: Option<u64>,
    /// JAO gap between the two actions at s0
    #[arg(long)]
    gap: Option<f64>,
    /// JAO mixing probability
    #[arg(long)]
    delta: Option<f64>,
    /// JAO good action per layer, comma separated
    #[arg(long)]
    jao_actions: Option<String>,
    /// fixed:S | cyclic:S,S,.. | random:SEED
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    episodes: Option<u64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    c2: Option<f64>,
    #[arg(long)]
    c3: Option<f64>,
    #[arg(long)]
    c4: Option<f64>,
    #[arg(long)]
    c5: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    n0_override: Option<u64>,
    #[arg(long)]
    k_eps_override: Option<u64>,
    /// Bonus constant of classic-qucb
    #[arg(long)]
    cb: Option<f64>,
    /// every | pow2 | auto
    #[arg(long)]
    cadence: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit non-zero on any invariant breach
    #[arg(long)]
    strict: bool,
}

impl Common {
    fn settings(&self, extra: &[(&str, Option<String>)]) -> Result<Settings> {
        let mut st = match &self.config {
            Some(path) => Settings::parse_file(path)?,
            None => Settings::new(),
        };
        let flags: [(&str, Option<String>); 26] = [
            ("env", self.env.clone()),
            ("S", self.states.map(|v| v.to_string())),
            ("A", self.actions.map(|v| v.to_string())),
            ("H", self.horizon.map(|v| v.to_string())),
            ("sparsity", self.sparsity.map(|v| v.to_string())),
            ("env-seed", self.env_seed.map(|v| v.to_string())),
            ("gap", self.gap.map(|v| v.to_string())),
            ("delta", self.delta.map(|v| v.to_string())),
            ("jao-actions", self.jao_actions.clone()),
            ("init", self.init.clone()),
            ("algo", self.algo.clone()),
            ("episodes", self.episodes.map(|v| v.to_string())),
            ("p", self.p.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("c1", self.c1.map(|v| v.to_string())),
            ("c2", self.c2.map(|v| v.to_string())),
            ("c3", self.c3.map(|v| v.to_string())),
            ("c4", self.c4.map(|v| v.to_string())),
            ("c5", self.c5.map(|v| v.to_string())),
            ("beta", self.beta.map(|v| v.to_string())),
            ("n0-override", self.n0_override.map(|v| v.to_string())),
            ("k-eps-override", self.k_eps_override.map(|v| v.to_string())),
            ("cb", self.cb.map(|v| v.to_string())),
            ("cadence", self.cadence.clone()),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
            ("strict", self.strict.then(|| "true".to_string())),
        ];
        let mut cli = Settings::new();
        for (key, value) in flags.into_iter().chain(extra.iter().cloned()) {
            if let Some(v) = value {
                cli.set(key, v, format!("--{key}"))?;
            }
        }
        st.merge(cli);
        Ok(st)
    }

    fn config(&self, extra: &[(&str, Option<String>)]) -> Result<RunConfig> {
        RunConfig::from_settings(&self.settings(extra)?)
    }
}

fn emit(out: Option<&PathBuf>, name: &str, contents: &str) -> Result<()> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|source| Error::File { path: dir.clone(), source })?;
            let path = dir.join(name);
            std::fs::write(&path, contents).map_err(|source| Error::File { path, source })
        }
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let registry = LearnerRegistry::builtin();
    match cli.command {
        Command::Run(common) => {
            let cfg = common.config(&[])?;
            let out = run_experiment(&cfg, &registry)?;
            if cfg.out.is_none() {
                print!("{}", out.episodes_csv);
            }
            eprintln!("{}", out.summary.line());
        }
        Command::Sweep { common, multipliers, seeds } => {
            let cfg = common.config(&[("multipliers", multipliers), ("seeds", seeds)])?;
            let rows = sweep_scaling(&cfg, &registry)?;
            emit(cfg.out.as_ref(), "scaling.csv", &scaling_csv(&rows))?;
        }
        Command::Concurrent { common, agents, epsilon } => {
            let cfg = common.config(&[
                ("agents", agents.map(|v| v.to_string())),
                ("epsilon", epsilon.map(|v| v.to_string())),
            ])?;
            let (mdp, optimal) = prepare_env(&cfg)?;
            let d = mdp.dims();
            let budget = cfg.concurrent.budget(d.states, d.actions, d.horizon)?;
            let mut learner =
                build_learner(&cfg, &registry, &mdp, &optimal, budget + cfg.concurrent.agents as u64)?;
            let outcome = run_concurrent_with(learner.as_mut(), &mdp, &cfg.concurrent, cfg.seed)?;
            emit(cfg.out.as_ref(), "rounds.csv", &outcome.to_csv())?;
            let s1 = mdp.initial_state(0);
            let gap = optimal.v(0, s1) - policy_evaluation(&mdp, &outcome.output_policy).v(0, s1);
            eprintln!(
                "rounds={} early_breaks={} episodes_used={} budget={} output_episode={} suboptimality={:.6} epsilon={}",
                outcome.rounds.len(),
                outcome.early_break_rounds(),
                outcome.episodes_used,
                outcome.budget,
                outcome.output_episode,
                gap,
                cfg.concurrent.epsilon
            );
            if cfg.strict {
                let bound = outcome.early_break_rounds() + budget.div_ceil(cfg.concurrent.agents as u64) + 1;
                if outcome.rounds.len() as u64 > bound {
                    return Err(Error::Invariant(format!("{} rounds exceed {bound}", outcome.rounds.len())));
                }
            }
        }
        Command::Solve { common, dump_model } => {
            let cfg = common.config(&[])?;
            let mdp = cfg.build_env()?;
            let (vt, pi) = backward_induction(&mdp);
            let d = mdp.dims();
            let mut v = String::from("h,s,V,action\n");
            for h in 0..d.horizon {
                for s in 0..d.states {
                    v.push_str(&format!("{},{s},{},{}\n", h + 1, vt.v(h, s), pi.action(h, s)));
                }
            }
            let oracle = tabular_rl::learner::OracleAgent::new(d, vt.q_table().to_vec())?;
            emit(cfg.out.as_ref(), "v_star.csv", &v)?;
            if cfg.out.is_none() {
                println!();
            }
            emit(cfg.out.as_ref(), "q_star.csv", &q_snapshot_csv(&oracle))?;
            if dump_model {
                let mut buf = Vec::new();
                write_text(&mdp, &mut buf)?;
                emit(cfg.out.as_ref(), "model.txt", &String::from_utf8_lossy(&buf))?;
            }
            eprintln!(
                "V*_1(s1)={} switching_bound(K=1000)={:.3}",
                vt.v(0, mdp.initial_state(0)),
                switching_bound(d.states, d.actions, d.horizon, d.steps(1000))
            );
        }
        Command::Schedule { horizon, n_max } => {
            if horizon == 0 || n_max == 0 {
                return Err(Error::InvalidConstant("--H and --n-max must be positive".into()));
            }
            print!("{}", schedule_csv(&StageSchedule::new(horizon, n_max)));
        }
        Command::Algos => {
            for (name, summary) in registry.describe() {
                println!("{name:16} {summary}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
