use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::RunConfig;
use crate::error::{Error, Result};
use crate::learner::{run_episode, AlgoConstants, Learner, LearnerRegistry, LearnerSpec};
use crate::mdp::{backward_induction, EpisodicMdp, ValueTables};
use crate::metrics::{switching_bound, EpisodeRecord, MonitorTotals, RunMonitor, EPISODE_CSV_HEADER};
use crate::rng::seeded_stream;
use crate::schedule::StageSchedule;

pub const SCALING_CSV_HEADER: &str = "T,seed,cum_regret";

/// Which episodes get a row in the per-episode log.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cadence {
    Every,
    /// Episodes `1, 2, 4, 8, ...` plus the final one.
    PowerOfTwo,
    /// Every episode up to 100 000 episodes, powers of two beyond.
    Auto,
}

impl Cadence {
    pub fn resolve(self, episodes: u64) -> Cadence {
        match self {
            Cadence::Auto if episodes > 100_000 => Cadence::PowerOfTwo,
            Cadence::Auto => Cadence::Every,
            other => other,
        }
    }

    /// Whether 1-based episode `k` out of `total` is logged.
    pub fn logs(self, k: u64, total: u64) -> bool {
        match self.resolve(total) {
            Cadence::PowerOfTwo => k.is_power_of_two() || k == total,
            _ => true,
        }
    }
}

impl FromStr for Cadence {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "every" => Ok(Cadence::Every),
            "pow2" => Ok(Cadence::PowerOfTwo),
            "auto" => Ok(Cadence::Auto),
            other => Err(format!("unknown cadence `{other}`")),
        }
    }
}

/// Builds the model and its exact optimal values.
pub fn prepare_env(cfg: &RunConfig) -> Result<(EpisodicMdp, ValueTables)> {
    let mdp = cfg.build_env()?;
    let (optimal, _) = backward_induction(&mdp);
    Ok((mdp, optimal))
}

/// Instantiates `cfg.algo` for a run that may feed up to `episodes` episodes.
pub fn build_learner(
    cfg: &RunConfig,
    registry: &LearnerRegistry,
    mdp: &EpisodicMdp,
    optimal: &ValueTables,
    episodes: u64,
) -> Result<Box<dyn Learner>> {
    let dims = mdp.dims();
    let spec = LearnerSpec {
        dims,
        constants: AlgoConstants::with_overrides(dims, cfg.p, &cfg.overrides)?,
        n_max: dims.steps(episodes) + 1,
        bonus_cb: cfg.bonus_cb,
        optimal_q: Some(optimal.q_table().to_vec()),
    };
    registry.create(&cfg.algo, &spec)
}

/// Plays `episodes` episodes with environment noise from stream
/// `(seed, 0, "env")`, handing every record to `on_record`.
pub fn simulate(
    learner: &mut dyn Learner,
    mdp: &EpisodicMdp,
    optimal: &ValueTables,
    episodes: u64,
    seed: u64,
    mut on_record: impl FnMut(&EpisodeRecord, &dyn Learner),
) -> Result<MonitorTotals> {
    let mut rng = seeded_stream(seed, 0, "env");
    let mut monitor = RunMonitor::new(mdp, optimal, learner);
    for k in 0..episodes {
        let s1 = mdp.initial_state(k);
        monitor.begin_episode(learner, s1);
        let outcome = run_episode(learner, mdp, s1, &mut rng)?;
        let record = monitor.end_episode(learner, &outcome);
        on_record(&record, learner);
    }
    Ok(monitor.totals())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub algo: String,
    pub episodes: u64,
    pub steps: u64,
    pub cum_regret: f64,
    pub switching_cost: u64,
    pub switching_bound: f64,
    pub optimism_violations: u64,
    pub monotonicity_breaches: u64,
    pub negative_regret_episodes: u64,
    pub q_updates: u64,
    pub ref_states_fixed: u64,
    pub monotone_q: bool,
    pub stage_switching: bool,
    pub wall_time: Duration,
}

impl RunSummary {
    /// Invariant breaches that `--strict` turns into errors.
    pub fn breaches(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.monotone_q && self.monotonicity_breaches > 0 {
            out.push(format!("{} Q entries increased", self.monotonicity_breaches));
        }
        if self.stage_switching && self.switching_cost as f64 > self.switching_bound {
            out.push(format!("switching cost {} above ceiling {:.3}", self.switching_cost, self.switching_bound));
        }
        if self.negative_regret_episodes > 0 {
            out.push(format!("{} episodes with negative regret", self.negative_regret_episodes));
        }
        out
    }

    pub fn line(&self) -> String {
        format!(
            "algo={} episodes={} T={} cum_regret={:.6} N_switch={} switching_bound={:.3} optimism_violations={} \
             q_updates={} ref_states_fixed={} wall_time={:.3}s",
            self.algo,
            self.episodes,
            self.steps,
            self.cum_regret,
            self.switching_cost,
            self.switching_bound,
            self.optimism_violations,
            self.q_updates,
            self.ref_states_fixed,
            self.wall_time.as_secs_f64()
        )
    }
}

pub struct RunOutput {
    /// Per-episode CSV, header included.
    pub episodes_csv: String,
    pub summary: RunSummary,
    pub learner: Box<dyn Learner>,
}

/// One full run; deterministic in `(cfg, cfg.seed)` apart from wall time.
/// Writes `episodes.csv`, `q.csv` and `v.csv` when `cfg.out` is set.
pub fn run_experiment(cfg: &RunConfig, registry: &LearnerRegistry) -> Result<RunOutput> {
    let start = Instant::now();
    let (mdp, optimal) = prepare_env(cfg)?;
    let mut learner = build_learner(cfg, registry, &mdp, &optimal, cfg.episodes)?;
    let mut csv = String::from(EPISODE_CSV_HEADER);
    csv.push('\n');
    let cadence = cfg.cadence.resolve(cfg.episodes);
    let totals = simulate(learner.as_mut(), &mdp, &optimal, cfg.episodes, cfg.seed, |rec, _| {
        if cadence.logs(rec.k, cfg.episodes) {
            rec.write_csv_row(&mut csv);
        }
    })?;
    let d = mdp.dims();
    let g = learner.guarantees();
    let summary = RunSummary {
        algo: cfg.algo.clone(),
        episodes: cfg.episodes,
        steps: d.steps(cfg.episodes),
        cum_regret: totals.cum_regret,
        switching_cost: totals.switching_cost,
        switching_bound: switching_bound(d.states, d.actions, d.horizon, d.steps(cfg.episodes)),
        optimism_violations: totals.optimism_violations,
        monotonicity_breaches: totals.monotonicity_breaches,
        negative_regret_episodes: totals.negative_regret_episodes,
        q_updates: totals.q_updates,
        ref_states_fixed: learner.refs_fixed() as u64,
        monotone_q: g.monotone_q,
        stage_switching: g.stage_switching,
        wall_time: start.elapsed(),
    };
    if let Some(dir) = &cfg.out {
        write_file(dir, "episodes.csv", &csv)?;
        write_file(dir, "q.csv", &q_snapshot_csv(learner.as_ref()))?;
        write_file(dir, "v.csv", &v_snapshot_csv(learner.as_ref()))?;
    }
    if cfg.strict {
        let breaches = summary.breaches();
        if !breaches.is_empty() {
            return Err(Error::Invariant(breaches.join("; ")));
        }
    }
    Ok(RunOutput { episodes_csv: csv, summary, learner })
}

pub(crate) fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::File { path: dir.to_path_buf(), source })?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|source| Error::File { path, source })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRow {
    pub episodes: u64,
    /// `T = K H`.
    pub steps: u64,
    pub seed: u64,
    pub cum_regret: f64,
}

/// Cumulative regret at `K = cfg.episodes * m` for every multiplier `m`
/// and every seed in `cfg.seeds`. Each seed is one run up to the largest
/// `K`; seeds run in parallel. Rows are ordered by `T`, then by the
/// position of the seed in `cfg.seeds`.
pub fn sweep_scaling(cfg: &RunConfig, registry: &LearnerRegistry) -> Result<Vec<ScalingRow>> {
    let (mdp, optimal) = prepare_env(cfg)?;
    let checkpoints: Vec<u64> = cfg.multipliers.iter().map(|m| cfg.episodes * m).collect();
    let max = *checkpoints.last().expect("multipliers are non-empty");
    let per_seed: Vec<Vec<ScalingRow>> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let mut learner = build_learner(cfg, registry, &mdp, &optimal, max)?;
            let mut rows = Vec::with_capacity(checkpoints.len());
            let mut next = 0;
            simulate(learner.as_mut(), &mdp, &optimal, max, seed, |rec, _| {
                if next < checkpoints.len() && rec.k == checkpoints[next] {
                    rows.push(ScalingRow {
                        episodes: rec.k,
                        steps: mdp.dims().steps(rec.k),
                        seed,
                        cum_regret: rec.cum_regret,
                    });
                    next += 1;
                }
            })?;
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(checkpoints.len() * cfg.seeds.len());
    for i in 0..checkpoints.len() {
        rows.extend(per_seed.iter().map(|r| r[i]));
    }
    Ok(rows)
}

pub fn scaling_csv(rows: &[ScalingRow]) -> String {
    let mut s = format!("{SCALING_CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{}", r.steps, r.seed, r.cum_regret);
    }
    s
}

/// `h,s,a,Q` with 1-based `h`.
pub fn q_snapshot_csv(learner: &dyn Learner) -> String {
    let d = learner.dims();
    let q = learner.q_table();
    let mut s = String::from("h,s,a,Q\n");
    for h in 0..d.horizon {
        for st in 0..d.states {
            for a in 0..d.actions {
                let _ = writeln!(s, "{},{st},{a},{}", h + 1, q[d.sah(h, st, a)]);
            }
        }
    }
    s
}

/// `h,s,V,Vref` with 1-based `h`; `Vref` is empty for learners without
/// reference values.
pub fn v_snapshot_csv(learner: &dyn Learner) -> String {
    let d = learner.dims();
    let v = learner.v_table();
    let vref = learner.reference_table();
    let mut s = String::from("h,s,V,Vref\n");
    for h in 0..d.horizon {
        for st in 0..d.states {
            let i = d.sh(h, st);
            let r = vref.map(|t| t[i].to_string()).unwrap_or_default();
            let _ = writeln!(s, "{},{st},{},{r}", h + 1, v[i]);
        }
    }
    s
}

/// `i,e_i,end_i` for every stage up to `n_max`.
pub fn schedule_csv(schedule: &StageSchedule) -> String {
    let mut s = String::from("i,e_i,end_i\n");
    for (i, (e, end)) in schedule.lengths().iter().zip(schedule.ends()).enumerate() {
        let _ = writeln!(s, "{},{e},{end}", i + 1);
    }
    s
}
