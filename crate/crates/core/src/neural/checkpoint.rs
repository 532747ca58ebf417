use std::path::Path;

use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{AdamState, Network, NetworkSpec, NeuralError, Result};

pub const CHECKPOINT_FORMAT: &str = "racecraft-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// JSON container for a trained network and the state needed to resume.
///
/// `meta` carries whatever the owner needs to interpret the network, such as
/// observation bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint<M> {
    pub format: String,
    pub version: u32,
    pub spec: NetworkSpec,
    pub params: Vec<f64>,
    pub adam: AdamState,
    pub rng: ChaCha8Rng,
    pub meta: M,
}

impl<M: Serialize + DeserializeOwned> Checkpoint<M> {
    pub fn new(net: &Network, adam: AdamState, rng: ChaCha8Rng, meta: M) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            spec: net.spec().clone(),
            params: net.params.clone(),
            adam,
            rng,
            meta,
        }
    }

    pub fn network(&self) -> Result<Network> {
        Network::from_params(self.spec.clone(), self.params.clone())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text)?;
        if c.format != CHECKPOINT_FORMAT || c.version != CHECKPOINT_VERSION {
            return Err(NeuralError::Checkpoint(format!("{} v{}", c.format, c.version)));
        }
        if c.adam.m.len() != c.params.len() || c.adam.v.len() != c.params.len() {
            return Err(NeuralError::Checkpoint(
                "optimizer state does not match parameters".into(),
            ));
        }
        c.network()?;
        Ok(c)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
