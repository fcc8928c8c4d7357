//! Trial execution in single, paired and sweep modes.

use std::path::Path;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use reprl::estimator::{episodic_base, episodic_estimator, parallel_base, parallel_estimator};
use reprl::mdp::{optimal_policy, value_of_policy, Policy, Simulator};
use reprl::{Mdp, SharedSeed};

use crate::config::{Algorithm, ExperimentConfig, SweepConfig};
use crate::report::{wilson_interval, Summary};

/// One algorithm run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub config_hash: String,
    pub trial: usize,
    /// `single`, `a` or `b`.
    pub side: String,
    pub policy_hash: Option<String>,
    pub value: Option<f64>,
    pub optimal_value: f64,
    pub gap: Option<f64>,
    pub episodes: u64,
    pub samples: u64,
    pub agreement: Option<bool>,
    pub error: Option<String>,
    pub wall_ms: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Fill in `wall_ms`; this makes outputs machine-dependent.
    pub timing: bool,
}

struct Outcome {
    policy: reprl::Result<Policy>,
    episodes: u64,
    samples: u64,
    wall_ms: f64,
}

fn run_algorithm(mdp: &Mdp, cfg: &ExperimentConfig, env: &SharedSeed, xi: &SharedSeed) -> Outcome {
    let start = Instant::now();
    let p = &cfg.params;
    let range = mdp.reward_range();
    let mut sim = Simulator::new(mdp, env.stream());
    let policy = match cfg.algorithm {
        Algorithm::Episodic => episodic_estimator(&mut sim, p.eps, p.delta, p.rho, xi, &p.episodic(range)).map(|o| o.policy),
        Algorithm::EpisodicBase => episodic_base(&mut sim, p.eps, xi, &p.episodic(range)).map(|o| o.policy),
        Algorithm::Parallel => parallel_estimator(&mut sim, p.eps, p.delta, p.rho, xi, &p.parallel(range)).map(|o| o.policy),
        Algorithm::ParallelBase => parallel_base(&mut sim, p.eps, xi, &p.parallel(range)).map(|o| o.policy),
        Algorithm::Constant => {
            if p.constant_action < mdp.num_actions() {
                Ok(Policy::constant(mdp.horizon(), mdp.num_states(), p.constant_action))
            } else {
                Err(reprl::Error::InvalidParameter(format!("constant action {} out of range", p.constant_action)))
            }
        }
        Algorithm::RandomPolicy => {
            let k = mdp.num_actions();
            let rng = sim.rng();
            Ok(Policy::from_fn(mdp.horizon(), mdp.num_states(), |_, _| rng.random_range(0..k)))
        }
    };
    Outcome { policy, episodes: sim.episodes(), samples: sim.samples(), wall_ms: start.elapsed().as_secs_f64() * 1e3 }
}

fn record(mdp: &Mdp, opt: f64, hash: &str, trial: usize, side: &str, out: &Outcome, opts: RunOptions) -> TrialRecord {
    let (policy_hash, value, error) = match &out.policy {
        Ok(pi) => (Some(pi.canonical_hash()), Some(value_of_policy(mdp, pi).expect("policy fits the MDP")), None),
        Err(e) => (None, None, Some(e.to_string())),
    };
    TrialRecord {
        config_hash: hash.to_string(),
        trial,
        side: side.to_string(),
        policy_hash,
        value,
        optimal_value: opt,
        gap: value.map(|v| opt - v),
        episodes: out.episodes,
        samples: out.samples,
        agreement: None,
        error,
        wall_ms: opts.timing.then_some(out.wall_ms),
    }
}

/// Independent trials: environment `env/t`, shared randomness `xi/t`.
pub fn run_single(cfg: &ExperimentConfig, base: &Path, opts: RunOptions) -> anyhow::Result<Vec<TrialRecord>> {
    let mdp = cfg.mdp.build(base)?;
    let (_, opt) = optimal_policy(&mdp);
    let hash = cfg.hash();
    let master = SharedSeed::new(cfg.seed);
    Ok((0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let out = run_algorithm(&mdp, cfg, &master.split("env", t as u64), &master.split("xi", t as u64));
            record(&mdp, opt, &hash, t, "single", &out, opts)
        })
        .collect())
}

/// Pairs sharing `xi/t` with independent environments `envA/t` and `envB/t`.
pub fn run_paired(cfg: &ExperimentConfig, base: &Path, opts: RunOptions) -> anyhow::Result<Vec<TrialRecord>> {
    let mdp = cfg.mdp.build(base)?;
    let (_, opt) = optimal_policy(&mdp);
    let hash = cfg.hash();
    let master = SharedSeed::new(cfg.seed);
    let pairs: Vec<[TrialRecord; 2]> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let xi = master.split("xi", t as u64);
            let a = run_algorithm(&mdp, cfg, &master.split("envA", t as u64), &xi);
            let b = run_algorithm(&mdp, cfg, &master.split("envB", t as u64), &xi);
            let mut ra = record(&mdp, opt, &hash, t, "a", &a, opts);
            let mut rb = record(&mdp, opt, &hash, t, "b", &b, opts);
            let agree = matches!((&ra.policy_hash, &rb.policy_hash), (Some(x), Some(y)) if x == y);
            ra.agreement = Some(agree);
            rb.agreement = Some(agree);
            [ra, rb]
        })
        .collect();
    Ok(pairs.into_iter().flatten().collect())
}

/// One grid cell's outcome.
#[derive(Clone, Debug)]
pub struct CellResult {
    pub config: Option<ExperimentConfig>,
    pub records: Vec<TrialRecord>,
    pub summary: Summary,
}

/// Runs every cell; failing cells keep their error and the sweep continues.
/// Cells come back sorted by config hash.
pub fn sweep(sweep: &SweepConfig, base: &Path, opts: RunOptions) -> Vec<CellResult> {
    let mut cells: Vec<CellResult> = sweep
        .cells()
        .into_par_iter()
        .enumerate()
        .map(|(i, cell)| {
            let result = cell.and_then(|cfg| {
                let records = if sweep.paired { run_paired(&cfg, base, opts)? } else { run_single(&cfg, base, opts)? };
                Ok((cfg, records))
            });
            match result {
                Ok((cfg, records)) => {
                    let summary = Summary::from_records(&cfg, sweep.paired, &records);
                    CellResult { config: Some(cfg), records, summary }
                }
                Err(e) => CellResult {
                    config: None,
                    records: Vec::new(),
                    summary: Summary::failed(format!("cell-{i:04}"), format!("{e:#}")),
                },
            }
        })
        .collect();
    cells.sort_by(|a, b| a.summary.config_hash.cmp(&b.summary.config_hash));
    cells
}

/// Paired-agreement rate among pairs, with its Wilson interval.
pub fn agreement(records: &[TrialRecord]) -> (usize, usize, (f64, f64)) {
    let pairs: Vec<bool> = records.iter().filter(|r| r.side == "a").filter_map(|r| r.agreement).collect();
    let hits = pairs.iter().filter(|&&x| x).count();
    (hits, pairs.len(), wilson_interval(hits, pairs.len()))
}
