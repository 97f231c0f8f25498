//! Mini-batch gradient descent on the ELBO.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::model::{elbo_grad, elbo_loss, Loss};
use super::params::VaeParams;
use super::VaeError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Global gradient-norm cap; 0 disables clipping.
    pub clip_norm: f64,
    /// Fraction of epochs over which the KL weight ramps linearly from 0.
    pub kl_warmup_fraction: f64,
    pub kl_weight_max: f64,
    pub max_len: usize,
    pub seed: u64,
    pub teacher_forcing: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            batch_size: 16,
            learning_rate: 0.05,
            momentum: 0.9,
            clip_norm: 5.0,
            kl_warmup_fraction: 1.0 / 3.0,
            kl_weight_max: 1.0,
            max_len: 100,
            seed: 0,
            teacher_forcing: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), VaeError> {
        let bad = |m: &str| Err(VaeError::Config(m.to_string()));
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must be in [0, 1)");
        }
        if self.clip_norm < 0.0 || !(0.0..=1.0).contains(&self.kl_warmup_fraction) || self.kl_weight_max < 0.0 {
            return bad("clip_norm, kl_warmup_fraction and kl_weight_max out of range");
        }
        if self.max_len == 0 {
            return bad("max_len must be positive");
        }
        Ok(())
    }

    /// KL weight for a 0-based epoch.
    pub fn kl_weight(&self, epoch: usize) -> f64 {
        let warm = self.kl_warmup_fraction * self.epochs as f64;
        if warm <= 0.0 {
            return self.kl_weight_max;
        }
        self.kl_weight_max * (epoch as f64 / warm).min(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub kl_weight: f64,
    pub total: f64,
    pub recon: f64,
    pub kl: f64,
}

#[derive(Debug, Clone)]
pub struct TrainResult {
    pub params: VaeParams,
    pub trace: Vec<EpochLoss>,
}

fn standard_normal(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Trains from `init`. Each epoch shuffles the data and draws fresh
/// reparameterization noise from the seeded generator.
pub fn train(init: VaeParams, data: &[Vec<usize>], config: &TrainConfig) -> Result<TrainResult, VaeError> {
    config.validate()?;
    if data.is_empty() {
        return Err(VaeError::EmptyDataset);
    }
    let mut params = init;
    params.seed = config.seed;
    let mut velocity = VaeParams::zeros(params.dims);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut trace = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let w = config.kl_weight(epoch);
        order.shuffle(&mut rng);
        let (mut total, mut recon, mut kl) = (0.0, 0.0, 0.0);
        for idx in order.chunks(config.batch_size) {
            let batch: Vec<Vec<usize>> = idx.iter().map(|&i| data[i].clone()).collect();
            let eps: Vec<Vec<f64>> = idx.iter().map(|_| standard_normal(&mut rng, params.dims.latent)).collect();
            let (loss, mut grad) = elbo_grad(&params, &batch, &eps, w, config.teacher_forcing)?;
            if !loss.total.is_finite() {
                return Err(VaeError::NonFinite { epoch });
            }
            let k = idx.len() as f64;
            total += loss.total * k;
            recon += loss.recon * k;
            kl += loss.kl * k;
            if config.clip_norm > 0.0 {
                let norm = grad.squared_norm().sqrt();
                if norm > config.clip_norm {
                    grad.scale(config.clip_norm / norm);
                }
            }
            velocity.scale(config.momentum);
            velocity.add_scaled(&grad, -config.learning_rate);
            params.add_scaled(&velocity, 1.0);
            params.round_to_storage();
        }
        if !params.is_finite() {
            return Err(VaeError::NonFinite { epoch });
        }
        let n = data.len() as f64;
        trace.push(EpochLoss {
            epoch,
            kl_weight: w,
            total: total / n,
            recon: recon / n,
            kl: kl / n,
        });
    }
    Ok(TrainResult { params, trace })
}

/// Training that always starts from the general weights.
pub fn finetune(general: &VaeParams, data: &[Vec<usize>], config: &TrainConfig) -> Result<TrainResult, VaeError> {
    if config.epochs == 0 {
        return Ok(TrainResult {
            params: general.clone(),
            trace: Vec::new(),
        });
    }
    train(general.clone(), data, config)
}

/// Deterministic ELBO at the posterior mean (zero noise).
pub fn evaluate(params: &VaeParams, data: &[Vec<usize>], kl_weight: f64) -> Result<Loss, VaeError> {
    let eps = vec![vec![0.0; params.dims.latent]; data.len()];
    elbo_loss(params, data, &eps, kl_weight)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vae::ModelDims;

    fn dims() -> ModelDims {
        ModelDims {
            vocab: 10,
            hidden: 8,
            latent: 4,
            fc: 6,
            feed_z: false,
        }
    }

    #[test]
    fn warmup_schedule() {
        let c = TrainConfig {
            epochs: 30,
            ..TrainConfig::default()
        };
        assert_eq!(c.kl_weight(0), 0.0);
        assert!((c.kl_weight(5) - 0.5).abs() < 1e-12);
        assert_eq!(c.kl_weight(10), 1.0);
        assert_eq!(c.kl_weight(29), 1.0);
    }

    #[test]
    fn zero_epoch_finetune_is_identity() {
        let p = VaeParams::init(dims(), 5);
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        assert_eq!(finetune(&p, &[vec![3, 2]], &cfg).unwrap().params, p);
    }

    #[test]
    fn seeded_training_is_reproducible() {
        let data = vec![vec![3, 4, 5, 2], vec![6, 7, 2], vec![3, 3, 8, 9, 2]];
        let cfg = TrainConfig {
            epochs: 5,
            batch_size: 2,
            seed: 9,
            ..TrainConfig::default()
        };
        let a = train(VaeParams::init(dims(), 1), &data, &cfg).unwrap();
        let b = train(VaeParams::init(dims(), 1), &data, &cfg).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.trace, b.trace);
        assert!(matches!(train(VaeParams::init(dims(), 1), &[], &cfg), Err(VaeError::EmptyDataset)));
    }
}
