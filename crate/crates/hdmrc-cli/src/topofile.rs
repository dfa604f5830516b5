//! Topology file loading. One TOML document per file:
//!
//! ```toml
//! # geometric form: gains derived from pairwise distances
//! nodes = [[0.0, 0.0], [0.0, 66.0], [0.0, 30.0], [0.0, 100.0]]
//! powers = [10.0, 10.0, 10.0]   # transmit powers, nodes 1..D-1
//! noises = [0.01, 0.01, 0.01]   # receiver noises, nodes 2..D
//! kappa = 1.0                   # optional, default 1.0
//! eta = 2.0                     # optional, default 2.0
//! ```
//!
//! or, mutually exclusive with `nodes`, an explicit link-gain matrix whose
//! row `i-1`, column `k-2` entry is the gain of link `i -> k`:
//!
//! ```toml
//! gains = [[3.0, 0.3, 0.1], [0.0, 10.0, 20.0], [1.0, 0.0, 5.0]]
//! powers = [1.0, 1.0, 1.0]
//! noises = [1.0, 1.0, 1.0]
//! ```

use std::path::Path;

use hdmrc::{build_gain_matrix, GainMatrix, Topology};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyFile {
    pub nodes: Option<Vec<[f64; 2]>>,
    pub gains: Option<Vec<Vec<f64>>>,
    pub powers: Vec<f64>,
    pub noises: Vec<f64>,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
}

fn default_kappa() -> f64 {
    1.0
}

fn default_eta() -> f64 {
    2.0
}

impl TopologyFile {
    /// Builds the validated topology described by this file.
    pub fn to_topology(&self) -> Result<Topology, CliError> {
        match (&self.nodes, &self.gains) {
            (Some(_), Some(_)) => Err(CliError::Input(
                "give either nodes or gains, not both".into(),
            )),
            (None, None) => Err(CliError::Input(
                "topology file needs a nodes list or a gains matrix".into(),
            )),
            (Some(nodes), None) => Topology::from_positions(
                nodes.clone(),
                self.powers.clone(),
                self.noises.clone(),
                self.kappa,
                self.eta,
            )
            .map_err(|e| CliError::Input(e.to_string())),
            (None, Some(gains)) => Topology::from_gains(
                gains.clone(),
                self.powers.clone(),
                self.noises.clone(),
                self.kappa,
                self.eta,
            )
            .map_err(|e| CliError::Input(e.to_string())),
        }
    }
}

pub struct Loaded {
    pub file: TopologyFile,
    pub topo: Topology,
    pub gains: GainMatrix,
}

/// Reads, parses, and validates a topology file. Parse failures carry the
/// TOML line/column diagnostic.
pub fn load(path: &Path) -> Result<Loaded, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let file: TopologyFile = toml::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let topo = file.to_topology()?;
    let gains =
        build_gain_matrix(&topo).map_err(|e| CliError::Input(e.to_string()))?;
    Ok(Loaded { file, topo, gains })
}
