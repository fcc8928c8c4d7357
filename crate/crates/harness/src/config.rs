//! Experiment configuration files.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use reprl::backward::BackwardConfig;
use reprl::bandit::{Mode, VarBanditConfig, DEFAULT_JOINT_CAP};
use reprl::estimator::{BoostConfig, EpisodicConfig, ParallelConfig};
use reprl::explore::ExploreConfig;
use reprl::lower::{mdp_from_rademacher, read_means};
use reprl::mdp::{combination_lock, random_mdp, read_mdp, RandomMdpSpec};
use reprl::{Mdp, SharedSeed};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MdpSource {
    File {
        path: PathBuf,
    },
    Random {
        states: usize,
        actions: usize,
        horizon: usize,
        #[serde(default = "default_levels")]
        reward_levels: usize,
        #[serde(default)]
        seed: u64,
    },
    CombinationLock {
        states: usize,
        actions: usize,
        horizon: usize,
        #[serde(default)]
        seed: u64,
    },
    RademacherReduction {
        /// Inline means, `[h][s]`.
        #[serde(default)]
        means: Vec<f64>,
        /// Newline-delimited means; used when `means` is empty.
        means_file: Option<PathBuf>,
        states: usize,
        actions: usize,
        horizon: usize,
        #[serde(default = "yes")]
        normalize: bool,
    },
}

fn default_levels() -> usize {
    2
}

fn yes() -> bool {
    true
}

impl MdpSource {
    /// Builds the MDP; relative paths resolve against `base`.
    pub fn build(&self, base: &Path) -> anyhow::Result<Mdp> {
        Ok(match self {
            MdpSource::File { path } => {
                let path = base.join(path);
                let f = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
                read_mdp(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))?
            }
            MdpSource::Random { states, actions, horizon, reward_levels, seed } => {
                let spec = RandomMdpSpec { num_states: *states, num_actions: *actions, horizon: *horizon, reward_levels: *reward_levels };
                random_mdp(&spec, &mut SharedSeed::new(*seed).child("mdp").stream())
            }
            MdpSource::CombinationLock { states, actions, horizon, seed } => {
                combination_lock(*states, *actions, *horizon, &mut SharedSeed::new(*seed).child("mdp").stream())
            }
            MdpSource::RademacherReduction { means, means_file, states, actions, horizon, normalize } => {
                let means = match (means.is_empty(), means_file) {
                    (false, _) => means.clone(),
                    (true, Some(p)) => {
                        let path = base.join(p);
                        let f = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
                        read_means(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))?
                    }
                    (true, None) => bail!("rademacher-reduction needs `means` or `means_file`"),
                };
                mdp_from_rademacher(&means, *states, *actions, *horizon, *normalize)?
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// Boosted episodic pipeline.
    Episodic,
    /// Tiered exploration plus backward induction, without boosting.
    EpisodicBase,
    /// Boosted parallel-sampling pipeline.
    Parallel,
    /// Parallel-sampling backward induction, without boosting.
    ParallelBase,
    /// Always the same action; ignores data.
    Constant,
    /// Uniformly random deterministic policy drawn from the environment stream.
    RandomPolicy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub eps: f64,
    pub delta: f64,
    pub rho: f64,
    pub zeta: Option<f64>,
    pub kappa: Option<f64>,
    /// Multiplies every data-volume count, explicit or formula-derived.
    pub desk_scale: f64,
    pub mode: Mode,
    /// Exploration episodes per run (`K`).
    pub episodes: Option<usize>,
    pub mean_runs: Option<usize>,
    pub collect_runs: Option<usize>,
    pub bonus_c: f64,
    /// Parallel-sampling calls per base run.
    pub calls: Option<usize>,
    /// Boosting seed count `k`.
    pub seeds: Option<usize>,
    pub heavy_samples: Option<usize>,
    pub arm_samples: Option<usize>,
    /// Treat unmet bandit sample-size preconditions as errors.
    pub strict: bool,
    pub constant_action: usize,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            eps: 0.3,
            delta: 0.1,
            rho: 0.3,
            zeta: None,
            kappa: None,
            desk_scale: 1.0,
            mode: Mode::Exact,
            episodes: None,
            mean_runs: None,
            collect_runs: None,
            bonus_c: 1.0,
            calls: None,
            seeds: None,
            heavy_samples: None,
            arm_samples: None,
            strict: false,
            constant_action: 0,
        }
    }
}

fn scaled(n: usize, scale: f64) -> usize {
    ((n as f64 * scale).ceil() as usize).max(1)
}

impl Params {
    pub fn validate(&self) -> anyhow::Result<()> {
        for (name, x) in [("eps", self.eps), ("delta", self.delta), ("rho", self.rho)] {
            if !(x > 0.0 && x < 1.0) {
                bail!("params.{name} must lie in (0, 1), got {x}");
            }
        }
        if self.delta >= self.rho {
            bail!("params.delta must be below params.rho");
        }
        if !(self.desk_scale > 0.0) {
            bail!("params.desk_scale must be positive");
        }
        if let Some(z) = self.zeta {
            if !(z > 0.0 && z < 1.0) {
                bail!("params.zeta must lie in (0, 1), got {z}");
            }
        }
        Ok(())
    }

    fn backward(&self) -> BackwardConfig {
        BackwardConfig {
            bandit: VarBanditConfig {
                mode: self.mode,
                desk_scale: if self.strict { 1.0 } else { 0.01 },
                joint_cap: DEFAULT_JOINT_CAP,
                ..VarBanditConfig::default()
            },
            reward_max: 1.0,
        }
    }

    fn boost(&self, reward_range: (f64, f64)) -> BoostConfig {
        BoostConfig {
            seeds: self.seeds,
            heavy_samples: self.heavy_samples,
            heavy_desk_scale: self.desk_scale,
            arm_samples: self.arm_samples.map(|n| scaled(n, self.desk_scale)),
            arm_desk_scale: self.desk_scale,
            reward_range,
        }
    }

    pub fn episodic(&self, reward_range: (f64, f64)) -> EpisodicConfig {
        let (_, hi) = reward_range;
        EpisodicConfig {
            explore: ExploreConfig {
                mode: self.mode,
                desk_scale: self.desk_scale,
                bonus_c: self.bonus_c,
                mean_runs: self.mean_runs,
                collect_runs: self.collect_runs,
                episodes: self.episodes.map(|k| scaled(k, self.desk_scale)),
                iota: None,
                joint_cap: DEFAULT_JOINT_CAP,
            },
            backward: BackwardConfig { reward_max: hi, ..self.backward() },
            boost: self.boost(reward_range),
            zeta: self.zeta,
            kappa: self.kappa,
            base_delta: 0.1,
        }
    }

    pub fn parallel(&self, reward_range: (f64, f64)) -> ParallelConfig {
        let (_, hi) = reward_range;
        ParallelConfig {
            backward: BackwardConfig { reward_max: hi, ..self.backward() },
            boost: self.boost(reward_range),
            calls: self.calls.map(|n| scaled(n, self.desk_scale)),
            desk_scale: self.desk_scale,
            base_delta: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub mdp: MdpSource,
    pub algorithm: Algorithm,
    #[serde(default)]
    pub params: Params,
    pub trials: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> anyhow::Result<()> {
        if self.trials == 0 {
            bail!("trials must be at least 1");
        }
        self.params.validate()
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| anyhow::anyhow!("{e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }
}

/// A base config plus a grid of dotted-path overrides.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub base: toml::Table,
    pub paired: bool,
    pub grid: BTreeMap<String, Vec<toml::Value>>,
}

impl SweepConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let mut base: toml::Table = toml::from_str(text).map_err(|e| anyhow::anyhow!("{e}"))?;
        let paired = match base.remove("paired") {
            None => false,
            Some(toml::Value::Boolean(b)) => b,
            Some(v) => bail!("`paired` must be a boolean, got {v}"),
        };
        let mut grid = BTreeMap::new();
        if let Some(g) = base.remove("grid") {
            let toml::Value::Table(g) = g else { bail!("`grid` must be a table") };
            for (k, v) in g {
                let toml::Value::Array(values) = v else { bail!("grid entry `{k}` must be an array") };
                if values.is_empty() {
                    bail!("grid entry `{k}` is empty");
                }
                grid.insert(k, values);
            }
        }
        Ok(Self { base, paired, grid })
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    /// Every grid cell, in grid order; invalid cells carry their error.
    pub fn cells(&self) -> Vec<anyhow::Result<ExperimentConfig>> {
        let keys: Vec<&String> = self.grid.keys().collect();
        let mut combos: Vec<Vec<&toml::Value>> = vec![vec![]];
        for k in &keys {
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    self.grid[*k].iter().map(move |v| {
                        let mut c = c.clone();
                        c.push(v);
                        c
                    })
                })
                .collect();
        }
        combos
            .into_iter()
            .map(|combo| {
                let mut table = self.base.clone();
                for (k, v) in keys.iter().zip(combo) {
                    set_path(&mut table, k, v.clone())?;
                }
                let cfg: ExperimentConfig =
                    toml::Value::Table(table).try_into().map_err(|e| anyhow::anyhow!("grid cell: {e}"))?;
                cfg.validate()?;
                Ok(cfg)
            })
            .collect()
    }
}

fn set_path(table: &mut toml::Table, path: &str, value: toml::Value) -> anyhow::Result<()> {
    let mut parts: Vec<&str> = path.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).with_context(|| format!("empty grid key `{path}`"))?;
    let mut cur = table;
    for p in parts {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().with_context(|| format!("grid key `{path}`: `{p}` is not a table"))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}
