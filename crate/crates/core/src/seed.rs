use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Random stream handed out by [`SharedSeed::stream`] and used by simulators.
pub type Stream = ChaCha8Rng;

const DOMAIN: &[u8] = b"reprl/shared-seed/v1";

/// Hierarchical seed: a root plus a path of `(label, index)` splits.
///
/// The stream key is a SHA-256 of the length-prefixed path, so distinct
/// paths give unrelated streams and the same path always gives the same
/// stream, independent of how many draws happened elsewhere.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SharedSeed {
    root: u64,
    path: Vec<(String, u64)>,
}

impl SharedSeed {
    pub fn new(root: u64) -> Self {
        Self { root, path: Vec::new() }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    pub fn path(&self) -> &[(String, u64)] {
        &self.path
    }

    pub fn split(&self, label: &str, index: u64) -> Self {
        let mut path = self.path.clone();
        path.push((label.to_owned(), index));
        Self { root: self.root, path }
    }

    pub fn child(&self, label: &str) -> Self {
        self.split(label, 0)
    }

    pub fn key(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(DOMAIN);
        h.update(self.root.to_le_bytes());
        for (label, index) in &self.path {
            h.update((label.len() as u64).to_le_bytes());
            h.update(label.as_bytes());
            h.update(index.to_le_bytes());
        }
        h.finalize().into()
    }

    pub fn stream(&self) -> Stream {
        Stream::from_seed(self.key())
    }
}

impl std::fmt::Display for SharedSeed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.root)?;
        for (label, index) in &self.path {
            write!(f, "/{label}:{index}")?;
        }
        Ok(())
    }
}
