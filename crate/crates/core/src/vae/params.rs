//! Model dimensions and parameter tensors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::linalg::Matrix;

/// Sizes of every layer. `fc` is the width of both 256-unit layers by
/// default; `feed_z` adds the latent vector to every decoder step input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub vocab: usize,
    pub hidden: usize,
    pub latent: usize,
    pub fc: usize,
    #[serde(default)]
    pub feed_z: bool,
}

impl Default for ModelDims {
    fn default() -> Self {
        ModelDims {
            vocab: super::VOCAB_SIZE,
            hidden: 256,
            latent: 128,
            fc: 256,
            feed_z: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VaeParams {
    pub dims: ModelDims,
    pub seed: u64,
    pub enc_wx: Matrix,
    pub enc_wh: Matrix,
    pub enc_b: Matrix,
    pub enc_fc_w: Matrix,
    pub enc_fc_b: Matrix,
    pub mu_w: Matrix,
    pub mu_b: Matrix,
    pub logvar_w: Matrix,
    pub logvar_b: Matrix,
    pub dec_z_w: Matrix,
    pub dec_z_b: Matrix,
    pub dec_h0_w: Matrix,
    pub dec_h0_b: Matrix,
    pub dec_wx: Matrix,
    pub dec_wh: Matrix,
    pub dec_b: Matrix,
    pub dec_wz: Option<Matrix>,
    pub out_w: Matrix,
    pub out_b: Matrix,
}

/// Rounds to the nearest f32 so checkpoints round-trip exactly.
pub(crate) fn to_storage(x: f64) -> f64 {
    x as f32 as f64
}

impl VaeParams {
    pub fn zeros(dims: ModelDims) -> Self {
        let ModelDims {
            vocab: d,
            hidden: h,
            latent: l,
            fc: f,
            feed_z,
        } = dims;
        VaeParams {
            dims,
            seed: 0,
            enc_wx: Matrix::zeros(4 * h, d),
            enc_wh: Matrix::zeros(4 * h, h),
            enc_b: Matrix::zeros(4 * h, 1),
            enc_fc_w: Matrix::zeros(f, h),
            enc_fc_b: Matrix::zeros(f, 1),
            mu_w: Matrix::zeros(l, f),
            mu_b: Matrix::zeros(l, 1),
            logvar_w: Matrix::zeros(l, f),
            logvar_b: Matrix::zeros(l, 1),
            dec_z_w: Matrix::zeros(f, l),
            dec_z_b: Matrix::zeros(f, 1),
            dec_h0_w: Matrix::zeros(h, f),
            dec_h0_b: Matrix::zeros(h, 1),
            dec_wx: Matrix::zeros(4 * h, d),
            dec_wh: Matrix::zeros(4 * h, h),
            dec_b: Matrix::zeros(4 * h, 1),
            dec_wz: feed_z.then(|| Matrix::zeros(4 * h, l)),
            out_w: Matrix::zeros(d, h),
            out_b: Matrix::zeros(d, 1),
        }
    }

    /// Uniform(±1/√fan_in) weights, zero biases except a forget-gate bias of
    /// one in both LSTMs.
    pub fn init(dims: ModelDims, seed: u64) -> Self {
        let mut p = Self::zeros(dims);
        p.seed = seed;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = dims.hidden;
        for (name, m) in p.tensors_mut() {
            if name.ends_with("_b") {
                continue;
            }
            let fan_in = match name {
                "enc_wx" | "enc_wh" | "dec_wx" | "dec_wh" | "dec_wz" => h,
                _ => m.cols,
            };
            let k = 1.0 / (fan_in as f64).sqrt();
            for x in &mut m.data {
                *x = to_storage(rng.random_range(-k..k));
            }
        }
        for b in [&mut p.enc_b, &mut p.dec_b] {
            for x in &mut b.data[h..2 * h] {
                *x = 1.0;
            }
        }
        p
    }

    /// Tensors in checkpoint order.
    pub fn tensors(&self) -> Vec<(&'static str, &Matrix)> {
        let mut v = vec![
            ("enc_wx", &self.enc_wx),
            ("enc_wh", &self.enc_wh),
            ("enc_b", &self.enc_b),
            ("enc_fc_w", &self.enc_fc_w),
            ("enc_fc_b", &self.enc_fc_b),
            ("mu_w", &self.mu_w),
            ("mu_b", &self.mu_b),
            ("logvar_w", &self.logvar_w),
            ("logvar_b", &self.logvar_b),
            ("dec_z_w", &self.dec_z_w),
            ("dec_z_b", &self.dec_z_b),
            ("dec_h0_w", &self.dec_h0_w),
            ("dec_h0_b", &self.dec_h0_b),
            ("dec_wx", &self.dec_wx),
            ("dec_wh", &self.dec_wh),
            ("dec_b", &self.dec_b),
        ];
        if let Some(m) = &self.dec_wz {
            v.push(("dec_wz", m));
        }
        v.push(("out_w", &self.out_w));
        v.push(("out_b", &self.out_b));
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut Matrix)> {
        let mut v = vec![
            ("enc_wx", &mut self.enc_wx),
            ("enc_wh", &mut self.enc_wh),
            ("enc_b", &mut self.enc_b),
            ("enc_fc_w", &mut self.enc_fc_w),
            ("enc_fc_b", &mut self.enc_fc_b),
            ("mu_w", &mut self.mu_w),
            ("mu_b", &mut self.mu_b),
            ("logvar_w", &mut self.logvar_w),
            ("logvar_b", &mut self.logvar_b),
            ("dec_z_w", &mut self.dec_z_w),
            ("dec_z_b", &mut self.dec_z_b),
            ("dec_h0_w", &mut self.dec_h0_w),
            ("dec_h0_b", &mut self.dec_h0_b),
            ("dec_wx", &mut self.dec_wx),
            ("dec_wh", &mut self.dec_wh),
            ("dec_b", &mut self.dec_b),
        ];
        if let Some(m) = &mut self.dec_wz {
            v.push(("dec_wz", m));
        }
        v.push(("out_w", &mut self.out_w));
        v.push(("out_b", &mut self.out_b));
        v
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|(_, m)| m.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, m)| m.data.iter().all(|x| x.is_finite()))
    }

    pub(crate) fn add_scaled(&mut self, other: &VaeParams, k: f64) {
        for ((_, a), (_, b)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            a.add_scaled(b, k);
        }
    }

    pub(crate) fn squared_norm(&self) -> f64 {
        self.tensors().iter().flat_map(|(_, m)| m.data.iter()).map(|x| x * x).sum()
    }

    pub(crate) fn scale(&mut self, k: f64) {
        for (_, m) in self.tensors_mut() {
            for x in &mut m.data {
                *x *= k;
            }
        }
    }

    pub(crate) fn round_to_storage(&mut self) {
        for (_, m) in self.tensors_mut() {
            for x in &mut m.data {
                *x = to_storage(*x);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_follow_dims() {
        let p = VaeParams::init(ModelDims::default(), 1);
        assert_eq!(p.mu_w.rows, 128);
        assert_eq!(p.mu_w.cols, 256);
        assert_eq!(p.logvar_w.rows, 128);
        assert_eq!(p.enc_fc_w.rows, 256);
        assert_eq!(p.out_w.rows, 50);
        assert!(p.dec_wz.is_none());
        assert!(p.is_finite());
        let q = VaeParams::init(ModelDims { feed_z: true, ..ModelDims::default() }, 1);
        assert_eq!(q.tensors().len(), p.tensors().len() + 1);
        assert_eq!(VaeParams::init(ModelDims::default(), 1), p);
    }
}
