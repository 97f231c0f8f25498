//! Run configuration, read from a flat TOML file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::EngineError;
use crate::descriptors::QedWeights;
use crate::vae::{ModelDims, TrainConfig, VOCAB_SIZE};

/// Where the medicinal-chemistry catalogues are applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmartsStage {
    /// Inside every chemical cycle, after the diversity filter.
    #[default]
    InLoop,
    /// Once per affinity cycle on the accumulated set, before scoring.
    PostGeneration,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    #[default]
    Mock,
    /// Precomputed scores from `oracle_scores`.
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Phase {
    pub chemical_cycles: usize,
    /// Keep a molecule only if its max Tanimoto similarity to the specific
    /// set is strictly below this.
    pub ta_threshold: f64,
    pub molecules_per_generation: usize,
    /// Affinity cycles run with this phase; the last phase repeats.
    #[serde(default = "one")]
    pub affinity_cycles: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VaeSection {
    pub hidden: usize,
    pub latent: usize,
    pub fc: usize,
    pub feed_z: bool,
}

impl Default for VaeSection {
    fn default() -> Self {
        let d = ModelDims::default();
        VaeSection {
            hidden: d.hidden,
            latent: d.latent,
            fc: d.fc,
            feed_z: d.feed_z,
        }
    }
}

impl VaeSection {
    pub fn dims(&self) -> ModelDims {
        ModelDims {
            vocab: VOCAB_SIZE,
            hidden: self.hidden,
            latent: self.latent,
            fc: self.fc,
            feed_z: self.feed_z,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Corpus for the general model; ignored when `general_checkpoint` is set.
    pub general_corpus: Option<PathBuf>,
    pub general_checkpoint: Option<PathBuf>,
    /// SMILES file of the fixed set.
    pub fixed_set: Option<PathBuf>,
    /// `id<TAB>name<TAB>reference_smiles`; bundled targets when unset.
    pub targets: Option<PathBuf>,
    pub oracle: OracleKind,
    pub oracle_scores: Option<PathBuf>,
    pub oracle_seed: u64,
    /// Cap on affinity cycles.
    pub affinity_cycles: usize,
    pub phases: Vec<Phase>,
    pub qed_min: f64,
    pub sa_max: f64,
    pub qed_weights: QedWeights,
    pub t_global_start: f64,
    pub t_ind_start: f64,
    pub delta: f64,
    pub n_min: usize,
    pub patience: usize,
    pub smarts_stage: SmartsStage,
    /// Motif catalogue file; bundled `custom_motifs` when unset.
    pub custom_motifs: Option<PathBuf>,
    /// Catalogue files; the bundled stage-2 set when unset.
    pub stage2_catalogues: Option<Vec<PathBuf>>,
    /// Maximum sampled SMILES length in characters.
    pub max_len: usize,
    /// (global, individual) pairs for the candidate report.
    pub reporting_thresholds: Vec<[f64; 2]>,
    pub histogram_bin_width: f64,
    pub cluster_epsilons: Vec<f64>,
    pub cluster_min_pts: usize,
    pub vae: VaeSection,
    pub general_training: TrainConfig,
    pub finetune_training: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            general_corpus: None,
            general_checkpoint: None,
            fixed_set: None,
            targets: None,
            oracle: OracleKind::Mock,
            oracle_scores: None,
            oracle_seed: 0,
            affinity_cycles: 15,
            phases: vec![
                Phase {
                    chemical_cycles: 40,
                    ta_threshold: 0.4,
                    molecules_per_generation: 3500,
                    affinity_cycles: 1,
                },
                Phase {
                    chemical_cycles: 10,
                    ta_threshold: 0.6,
                    molecules_per_generation: 3500,
                    affinity_cycles: 1,
                },
            ],
            qed_min: 0.8,
            sa_max: 3.0,
            qed_weights: QedWeights::Mean,
            t_global_start: -7.5,
            t_ind_start: -7.0,
            delta: 0.1,
            n_min: 50,
            patience: 3,
            smarts_stage: SmartsStage::InLoop,
            custom_motifs: None,
            stage2_catalogues: None,
            max_len: 100,
            reporting_thresholds: vec![[-7.5, -7.0], [-8.0, -7.5], [-8.5, -8.0]],
            histogram_bin_width: 0.25,
            cluster_epsilons: vec![0.3, 0.5, 0.7],
            cluster_min_pts: 2,
            vae: VaeSection::default(),
            general_training: TrainConfig::default(),
            finetune_training: TrainConfig {
                epochs: 10,
                ..TrainConfig::default()
            },
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, EngineError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| EngineError::Config(e.to_string()))?;
        Ok(cfg)
    }

    /// Parses `path` and resolves relative paths against its directory,
    /// without [`validate`](Self::validate).
    pub fn read(path: &Path) -> Result<Self, EngineError> {
        let text = fs::read_to_string(path).map_err(|e| EngineError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, EngineError> {
        let cfg = Self::read(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(q) = p {
                if q.is_relative() {
                    *q = base.join(&*q);
                }
            }
        };
        fix(&mut self.general_corpus);
        fix(&mut self.general_checkpoint);
        fix(&mut self.fixed_set);
        fix(&mut self.targets);
        fix(&mut self.oracle_scores);
        fix(&mut self.custom_motifs);
        if let Some(v) = &mut self.stage2_catalogues {
            for q in v.iter_mut() {
                if q.is_relative() {
                    *q = base.join(&*q);
                }
            }
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: String| Err(EngineError::Config(m));
        if self.general_corpus.is_none() && self.general_checkpoint.is_none() {
            return bad("one of general_corpus or general_checkpoint is required".into());
        }
        if self.fixed_set.is_none() {
            return bad("fixed_set is required".into());
        }
        if self.oracle == OracleKind::Csv && self.oracle_scores.is_none() {
            return bad("oracle = \"csv\" needs oracle_scores".into());
        }
        if self.phases.is_empty() {
            return bad("at least one phase is required".into());
        }
        for (i, p) in self.phases.iter().enumerate() {
            if !(0.0..=1.0).contains(&p.ta_threshold) || p.affinity_cycles == 0 {
                return bad(format!("phase {i}: ta_threshold must be in [0, 1] and affinity_cycles ≥ 1"));
            }
        }
        if !(self.delta >= 0.0) || self.patience == 0 {
            return bad("delta must be ≥ 0 and patience ≥ 1".into());
        }
        if !self.t_global_start.is_finite() || !self.t_ind_start.is_finite() || !self.qed_min.is_finite() || !self.sa_max.is_finite() {
            return bad("thresholds must be finite".into());
        }
        if !(self.histogram_bin_width > 0.0) || self.max_len == 0 {
            return bad("histogram_bin_width and max_len must be positive".into());
        }
        if self.reporting_thresholds.iter().flatten().any(|t| !t.is_finite()) {
            return bad("reporting thresholds must be finite".into());
        }
        if self.vae.hidden == 0 || self.vae.latent == 0 || self.vae.fc == 0 {
            return bad("VAE dimensions must be positive".into());
        }
        self.general_training.validate().map_err(|e| EngineError::Config(e.to_string()))?;
        self.finetune_training.validate().map_err(|e| EngineError::Config(e.to_string()))?;
        Ok(())
    }

    /// Phase used by 0-based affinity cycle `a`.
    pub fn phase_for(&self, a: usize) -> (usize, &Phase) {
        let mut start = 0;
        for (i, p) in self.phases.iter().enumerate() {
            if a < start + p.affinity_cycles {
                return (i, p);
            }
            start += p.affinity_cycles;
        }
        let last = self.phases.len() - 1;
        (last, &self.phases[last])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let cfg = RunConfig::from_toml(
            r#"
            seed = 3
            general_corpus = "corpus.smi"
            fixed_set = "fixed.smi"
            smarts_stage = "off"
            [[phases]]
            chemical_cycles = 2
            ta_threshold = 0.5
            molecules_per_generation = 10
            [finetune_training]
            epochs = 1
            "#,
        )
        .unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.smarts_stage, SmartsStage::Off);
        assert_eq!(cfg.qed_min, 0.8);
        assert_eq!(cfg.finetune_training.epochs, 1);
        assert_eq!(cfg.finetune_training.batch_size, 16);
        cfg.validate().unwrap();
        assert!(RunConfig::from_toml("sede = 1").is_err());
    }

    #[test]
    fn phase_schedule() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.phase_for(0).0, 0);
        assert_eq!(cfg.phase_for(1).0, 1);
        assert_eq!(cfg.phase_for(9).0, 1);
    }

    #[test]
    fn relative_paths_resolve() {
        let mut cfg = RunConfig {
            fixed_set: Some("a/fixed.smi".into()),
            general_checkpoint: Some("/abs/g.mtgw".into()),
            ..RunConfig::default()
        };
        cfg.resolve_paths(Path::new("/runs"));
        assert_eq!(cfg.fixed_set.unwrap(), PathBuf::from("/runs/a/fixed.smi"));
        assert_eq!(cfg.general_checkpoint.unwrap(), PathBuf::from("/abs/g.mtgw"));
    }
}
