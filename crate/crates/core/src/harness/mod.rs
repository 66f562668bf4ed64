//! Desk-scale drivers behind the command-line tool: instance generation,
//! noise sweeps and the auxiliary lemma checks.

pub mod experiment;
pub mod lemmas;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::codes::{generate_instance, synthesize_dataset, Dataset, Instance, NoiseModel};
use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;
use crate::io::{write_codes, write_hypergraph, write_json, write_matrix, GroundTruthBundle};

/// Named hypergraph families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HypergraphKind {
    #[default]
    Cyclic,
    Complete,
    Grid,
}

impl HypergraphKind {
    pub fn build(self, m: usize, k: usize) -> Result<Hypergraph> {
        match self {
            HypergraphKind::Cyclic => Hypergraph::cyclic(m, k),
            HypergraphKind::Complete => Hypergraph::complete(m, k),
            HypergraphKind::Grid => {
                let h = Hypergraph::grid(m)?;
                if h.uniform_size() != Some(k) {
                    return Err(Error::InvalidArgument(format!(
                        "grid hypergraph on {m} vertices has edges of size {:?}, not {k}",
                        h.uniform_size()
                    )));
                }
                Ok(h)
            }
        }
    }
}

/// Largest dictionary size the drivers accept.
pub const MAX_DESK_M: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateConfig {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub hypergraph: HypergraphKind,
    pub per_support: usize,
    pub eta: f64,
    pub noise_model: NoiseModel,
    pub seed: u64,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        GenerateConfig {
            m: 4,
            n: 4,
            k: 2,
            hypergraph: HypergraphKind::Cyclic,
            per_support: 7,
            eta: 0.0,
            noise_model: NoiseModel::UniformBall,
            seed: 0,
        }
    }
}

impl GenerateConfig {
    pub fn check_caps(&self) -> Result<()> {
        if self.m > MAX_DESK_M || self.per_support > 10_000 {
            return Err(Error::CapExceeded {
                what: "generation size",
                count: format!("m={}, per_support={}", self.m, self.per_support),
                cap: MAX_DESK_M,
            });
        }
        Ok(())
    }
}

pub struct Generated {
    pub hypergraph: Hypergraph,
    pub instance: Instance,
    pub dataset: Dataset,
}

pub fn generate(cfg: &GenerateConfig) -> Result<Generated> {
    cfg.check_caps()?;
    let h = cfg.hypergraph.build(cfg.m, cfg.k)?;
    let instance = generate_instance(cfg.m, cfg.n, cfg.k, &h, cfg.per_support, cfg.seed)?;
    let dataset = synthesize_dataset(
        &instance.dictionary,
        &instance.codes,
        cfg.eta,
        cfg.noise_model,
        cfg.seed,
    )?;
    Ok(Generated {
        hypergraph: h,
        instance,
        dataset,
    })
}

/// Writes `dictionary.json`, `codes.json`, `hypergraph.json`, `signals.json`
/// and `ground_truth.json` into `dir`, returning their paths.
pub fn write_generated(dir: &Path, g: &Generated) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let paths: Vec<PathBuf> = [
        "dictionary",
        "codes",
        "hypergraph",
        "signals",
        "ground_truth",
    ]
    .iter()
    .map(|n| dir.join(format!("{n}.json")))
    .collect();
    write_matrix(&paths[0], g.instance.dictionary.matrix())?;
    write_codes(&paths[1], &g.instance.codes)?;
    write_hypergraph(&paths[2], &g.hypergraph)?;
    write_matrix(&paths[3], &g.dataset.signals)?;
    write_json(
        &paths[4],
        &GroundTruthBundle::new(&g.dataset, &g.hypergraph)?,
    )?;
    Ok(paths)
}
