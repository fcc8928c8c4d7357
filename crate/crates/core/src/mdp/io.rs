//! Versioned JSON file format for MDPs.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{RewardDist, TabularMdp};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
const FORMAT_NAME: &str = "reprl-mdp";

/// On-disk layout. `transitions` has `H` layers; the last is all zeros.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MdpFile {
    pub format: String,
    pub version: u32,
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: usize,
    pub initial_state: usize,
    pub reward_range: [f64; 2],
    pub transitions: Vec<Vec<Vec<Vec<f64>>>>,
    pub rewards: Vec<Vec<Vec<RewardDist<f64>>>>,
}

impl MdpFile {
    pub fn from_mdp(mdp: &TabularMdp<f64>) -> Self {
        let (n, k) = (mdp.num_states(), mdp.num_actions());
        let mut transitions = mdp.transition_layers();
        transitions.push(vec![vec![vec![0.0; n]; k]; n]);
        let (lo, hi) = mdp.reward_range();
        Self {
            format: FORMAT_NAME.into(),
            version: FORMAT_VERSION,
            num_states: n,
            num_actions: k,
            horizon: mdp.horizon(),
            initial_state: mdp.initial_state(),
            reward_range: [lo, hi],
            transitions,
            rewards: mdp.reward_layers(),
        }
    }

    pub fn into_mdp(mut self) -> Result<TabularMdp<f64>> {
        if self.format != FORMAT_NAME {
            return Err(Error::Format(format!("unknown format tag {:?}", self.format)));
        }
        if self.version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {}", self.version)));
        }
        if self.transitions.len() != self.horizon || self.rewards.len() != self.horizon {
            return Err(Error::Format(format!(
                "header says horizon {}, found {} transition and {} reward layers",
                self.horizon,
                self.transitions.len(),
                self.rewards.len()
            )));
        }
        let terminal = self.transitions.pop().expect("horizon >= 1");
        if terminal.iter().flatten().flatten().any(|&p| p != 0.0) {
            return Err(Error::Format("last transition layer must be all zero".into()));
        }
        let mdp = TabularMdp::new(
            self.initial_state,
            self.transitions,
            self.rewards,
            (self.reward_range[0], self.reward_range[1]),
        )?;
        if mdp.num_states() != self.num_states || mdp.num_actions() != self.num_actions {
            return Err(Error::Format(format!(
                "header says {}x{}, body is {}x{}",
                self.num_states,
                self.num_actions,
                mdp.num_states(),
                mdp.num_actions()
            )));
        }
        Ok(mdp)
    }
}

pub fn write_mdp<W: Write>(mdp: &TabularMdp<f64>, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, &MdpFile::from_mdp(mdp))
        .map_err(|e| Error::Format(e.to_string()))?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn read_mdp<R: Read>(mut input: R) -> Result<TabularMdp<f64>> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let file: MdpFile = serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
    file.into_mdp()
}
