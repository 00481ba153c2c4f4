//! `key = value` settings with provenance, merged from a config file and
//! command-line flags (flags win), then resolved into a [`RunConfig`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::Cadence;
use crate::concurrent::ConcurrentConfig;
use crate::error::{Error, Result};
use crate::learner::ConstantOverrides;
use crate::mdp::{
    make_jao_chain, make_random_mdp, read_text_file, EpisodicMdp, InitialStateMode, JaoParams, OptimalActions,
};

pub const KNOWN_KEYS: &[&str] = &[
    "env", "S", "A", "H", "sparsity", "env-seed", "gap", "delta", "jao-actions", "init", "algo", "episodes",
    "p", "seed", "c1", "c2", "c3", "c4", "c5", "beta", "n0-override", "k-eps-override", "cb", "out",
    "cadence", "strict", "agents", "epsilon", "multipliers", "seeds",
];

#[derive(Debug, Clone, PartialEq, Eq)]
struct Setting {
    value: String,
    origin: String,
}

/// Raw settings keyed by flag name (without the leading `--`).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Settings {
    entries: BTreeMap<String, Setting>,
}

impl Settings {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse_str(text: &str, origin: &str) -> Result<Self> {
        let mut out = Self::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse { origin: origin.to_string(), line: i + 1, msg };
            let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(err(format!("unknown key `{key}`")));
            }
            out.entries.insert(
                key.to_string(),
                Setting { value: value.trim().to_string(), origin: format!("{origin}:{}", i + 1) },
            );
        }
        Ok(out)
    }

    pub fn parse_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::File { path: path.to_path_buf(), source })?;
        Self::parse_str(&text, &path.display().to_string())
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>, origin: impl Into<String>) -> Result<()> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(Error::Config { field: key.to_string(), msg: "unknown key".into() });
        }
        self.entries.insert(key.to_string(), Setting { value: value.into(), origin: origin.into() });
        Ok(())
    }

    /// Overlays `other` on top of `self`.
    pub fn merge(&mut self, other: Settings) {
        self.entries.extend(other.entries);
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.value.as_str())
    }

    fn error(&self, key: &str, msg: impl std::fmt::Display) -> Error {
        let origin = self.entries.get(key).map(|s| s.origin.as_str()).unwrap_or("default");
        Error::Config { field: key.to_string(), msg: format!("{msg} (from {origin})") }
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(s) => s
                .value
                .parse()
                .map(Some)
                .map_err(|_| self.error(key, format!("cannot parse `{}`", s.value))),
        }
    }

    fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?.ok_or_else(|| self.error(key, "required"))
    }

    fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        let Some(raw) = self.raw(key) else { return Ok(None) };
        raw.split(',')
            .map(|t| t.trim().parse().map_err(|_| self.error(key, format!("cannot parse list item `{t}`"))))
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }

    fn get_bool(&self, key: &str) -> Result<bool> {
        match self.raw(key) {
            None => Ok(false),
            Some("true" | "1" | "yes" | "") => Ok(true),
            Some("false" | "0" | "no") => Ok(false),
            Some(other) => Err(self.error(key, format!("expected a boolean, got `{other}`"))),
        }
    }
}

/// Where the model comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvSpec {
    Random { states: usize, actions: usize, horizon: usize, sparsity: f64, seed: u64 },
    Jao(JaoParams),
    File(PathBuf),
}

impl EnvSpec {
    pub fn build(&self) -> Result<EpisodicMdp> {
        match self {
            EnvSpec::Random { states, actions, horizon, sparsity, seed } => {
                make_random_mdp(*states, *actions, *horizon, *seed, *sparsity)
            }
            EnvSpec::Jao(params) => make_jao_chain(params),
            EnvSpec::File(path) => read_text_file(path),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub env: EnvSpec,
    pub init: Option<InitialStateMode>,
    pub algo: String,
    pub p: f64,
    pub overrides: ConstantOverrides,
    pub bonus_cb: f64,
    pub episodes: u64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub cadence: Cadence,
    pub strict: bool,
    pub concurrent: ConcurrentConfig,
    pub multipliers: Vec<u64>,
    pub seeds: Vec<u64>,
}

impl RunConfig {
    /// Desk-scale defaults: a random 3x2 model with horizon 5.
    pub fn new(env: EnvSpec) -> Self {
        Self {
            env,
            init: None,
            algo: "advantage".into(),
            p: 0.01,
            overrides: ConstantOverrides::default(),
            bonus_cb: 2.0,
            episodes: 1000,
            seed: 0,
            out: None,
            cadence: Cadence::Auto,
            strict: false,
            concurrent: ConcurrentConfig::new(1, 0.1),
            multipliers: vec![1, 2, 4, 8],
            seeds: vec![0, 1, 2],
        }
    }

    pub fn from_settings(st: &Settings) -> Result<Self> {
        let env_kind = st.raw("env").unwrap_or("random");
        let env = if let Some(path) = env_kind.strip_prefix("file:") {
            EnvSpec::File(PathBuf::from(path))
        } else {
            match env_kind {
                "random" => EnvSpec::Random {
                    states: st.get_or("S", 3)?,
                    actions: st.get_or("A", 2)?,
                    horizon: st.get_or("H", 5)?,
                    sparsity: st.get_or("sparsity", 0.0)?,
                    seed: st.get_or("env-seed", 0)?,
                },
                "jao" => {
                    if let Some(s) = st.raw("S").filter(|s| *s != "2") {
                        return Err(st.error("S", format!("the JAO chain has 2 states, not {s}")));
                    }
                    if let Some(a) = st.raw("A").filter(|a| *a != "2") {
                        return Err(st.error("A", format!("the JAO chain has 2 actions, not {a}")));
                    }
                    let optimal_actions = match st.get_list::<usize>("jao-actions")? {
                        Some(v) => OptimalActions::Given(v),
                        None => OptimalActions::Seeded(st.get_or("env-seed", 0)?),
                    };
                    EnvSpec::Jao(JaoParams {
                        horizon: st.require("H")?,
                        epsilon: st.get_or("gap", 0.1)?,
                        delta: st.get("delta")?,
                        optimal_actions,
                    })
                }
                other => {
                    return Err(st.error("env", format!("unknown environment `{other}` (random, jao, file:PATH)")))
                }
            }
        };

        let mut cfg = RunConfig::new(env);
        cfg.init = match st.raw("init") {
            None => None,
            Some(raw) => Some(parse_init(raw).map_err(|m| st.error("init", m))?),
        };
        cfg.algo = st.get_or("algo", cfg.algo)?;
        cfg.p = st.get_or("p", cfg.p)?;
        cfg.overrides = ConstantOverrides {
            beta: st.get("beta")?,
            c1: st.get("c1")?,
            c2: st.get("c2")?,
            c3: st.get("c3")?,
            c4: st.get("c4")?,
            n0: st.get("n0-override")?,
        };
        cfg.bonus_cb = st.get_or("cb", cfg.bonus_cb)?;
        cfg.episodes = st.get_or("episodes", cfg.episodes)?;
        if cfg.episodes == 0 {
            return Err(st.error("episodes", "must be at least 1"));
        }
        cfg.seed = st.get_or("seed", cfg.seed)?;
        cfg.out = st.get("out")?;
        cfg.cadence = st.get_or("cadence", cfg.cadence)?;
        cfg.strict = st.get_bool("strict")?;
        cfg.concurrent = ConcurrentConfig {
            agents: st.get_or("agents", 1)?,
            epsilon: st.get_or("epsilon", 0.1)?,
            c5: st.get_or("c5", 1.0)?,
            k_eps_override: st.get("k-eps-override")?,
        };
        if cfg.concurrent.agents == 0 {
            return Err(st.error("agents", "must be at least 1"));
        }
        if let Some(m) = st.get_list("multipliers")? {
            cfg.multipliers = m;
        }
        if cfg.multipliers.is_empty() || cfg.multipliers.windows(2).any(|w| w[0] >= w[1]) || cfg.multipliers[0] == 0 {
            return Err(st.error("multipliers", "must be positive and strictly increasing"));
        }
        if let Some(s) = st.get_list("seeds")? {
            cfg.seeds = s;
        }
        Ok(cfg)
    }

    pub fn build_env(&self) -> Result<EpisodicMdp> {
        let mdp = self.env.build()?;
        match &self.init {
            Some(mode) => mdp.with_initial_mode(mode.clone()),
            None => Ok(mdp),
        }
    }
}

/// `fixed:S`, `cyclic:S,S,...` or `random:SEED`.
fn parse_init(raw: &str) -> std::result::Result<InitialStateMode, String> {
    let (kind, arg) = raw.split_once(':').ok_or_else(|| format!("expected KIND:ARG, got `{raw}`"))?;
    let bad = || format!("bad argument `{arg}`");
    match kind {
        "fixed" => arg.trim().parse().map(InitialStateMode::Fixed).map_err(|_| bad()),
        "cyclic" => arg
            .split(',')
            .map(|t| t.trim().parse().map_err(|_| bad()))
            .collect::<std::result::Result<_, _>>()
            .map(InitialStateMode::Cyclic),
        "random" => arg.trim().parse().map(InitialStateMode::SeededRandom).map_err(|_| bad()),
        other => Err(format!("unknown initial-state mode `{other}`")),
    }
}
