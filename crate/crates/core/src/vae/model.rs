//! Forward pass, ELBO and hand-written backpropagation through time.

use serde::{Deserialize, Serialize};

use super::linalg::{sigmoid, softmax, Matrix};
use super::params::VaeParams;
use super::vocab::{BOS, PAD};
use super::VaeError;

pub const LOGVAR_MIN: f64 = -10.0;
pub const LOGVAR_MAX: f64 = 10.0;

/// Batch-mean losses; `total = recon + kl_weight · kl`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Loss {
    pub total: f64,
    pub recon: f64,
    pub kl: f64,
}

struct LstmStep {
    x: usize,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    tanh_c: Vec<f64>,
    h: Vec<f64>,
    c: Vec<f64>,
}

struct Lstm<'a> {
    wx: &'a Matrix,
    wh: &'a Matrix,
    b: &'a Matrix,
    wz: Option<(&'a Matrix, &'a [f64])>,
}

impl Lstm<'_> {
    fn step(&self, x: usize, h_prev: Vec<f64>, c_prev: Vec<f64>) -> LstmStep {
        let n = h_prev.len();
        let mut a = self.b.data.clone();
        self.wx.column_add(x, &mut a);
        self.wh.matvec_add(&h_prev, &mut a);
        if let Some((wz, z)) = self.wz {
            wz.matvec_add(z, &mut a);
        }
        let i: Vec<f64> = a[..n].iter().map(|&v| sigmoid(v)).collect();
        let f: Vec<f64> = a[n..2 * n].iter().map(|&v| sigmoid(v)).collect();
        let g: Vec<f64> = a[2 * n..3 * n].iter().map(|v| v.tanh()).collect();
        let o: Vec<f64> = a[3 * n..].iter().map(|&v| sigmoid(v)).collect();
        let c: Vec<f64> = (0..n).map(|k| f[k] * c_prev[k] + i[k] * g[k]).collect();
        let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
        let h = (0..n).map(|k| o[k] * tanh_c[k]).collect();
        LstmStep {
            x,
            h_prev,
            c_prev,
            i,
            f,
            g,
            o,
            tanh_c,
            h,
            c,
        }
    }
}

struct LstmGrads<'a> {
    wx: &'a mut Matrix,
    wh: &'a mut Matrix,
    b: &'a mut Matrix,
    wz: Option<&'a mut Matrix>,
}

/// Backward through one step. Returns (dh_prev, dc_prev) and adds to dz
/// when the step saw the latent vector.
fn lstm_step_back(
    s: &LstmStep,
    dh: &[f64],
    dc_next: &[f64],
    wh: &Matrix,
    wz: Option<(&Matrix, &[f64], &mut [f64])>,
    g: &mut LstmGrads,
) -> (Vec<f64>, Vec<f64>) {
    let n = dh.len();
    let mut da = vec![0.0; 4 * n];
    let mut dc_prev = vec![0.0; n];
    for k in 0..n {
        let dc = dh[k] * s.o[k] * (1.0 - s.tanh_c[k] * s.tanh_c[k]) + dc_next[k];
        da[k] = dc * s.g[k] * s.i[k] * (1.0 - s.i[k]);
        da[n + k] = dc * s.c_prev[k] * s.f[k] * (1.0 - s.f[k]);
        da[2 * n + k] = dc * s.i[k] * (1.0 - s.g[k] * s.g[k]);
        da[3 * n + k] = dh[k] * s.tanh_c[k] * s.o[k] * (1.0 - s.o[k]);
        dc_prev[k] = dc * s.f[k];
    }
    g.wx.add_to_column(s.x, &da);
    g.wh.outer_add(&da, &s.h_prev);
    g.b.add_vec(&da);
    if let (Some((wz, z, dz)), Some(gwz)) = (wz, g.wz.as_deref_mut()) {
        gwz.outer_add(&da, z);
        wz.tmatvec_add(&da, dz);
    }
    let mut dh_prev = vec![0.0; n];
    wh.tmatvec_add(&da, &mut dh_prev);
    (dh_prev, dc_prev)
}

fn relu(v: &mut [f64]) {
    for x in v {
        *x = x.max(0.0);
    }
}

fn affine(w: &Matrix, b: &Matrix, x: &[f64]) -> Vec<f64> {
    let mut out = b.data.clone();
    w.matvec_add(x, &mut out);
    out
}

/// Closed-form KL divergence of N(mu, exp(logvar)) from N(0, I).
pub fn kl_divergence(mu: &[f64], logvar: &[f64]) -> f64 {
    mu.iter()
        .zip(logvar)
        .map(|(m, lv)| 0.5 * (m * m + lv.exp() - 1.0 - lv))
        .sum()
}

/// z = mu + exp(logvar / 2) ⊙ eps
pub fn reparameterize(mu: &[f64], logvar: &[f64], eps: &[f64]) -> Vec<f64> {
    assert!(mu.len() == logvar.len() && mu.len() == eps.len(), "latent lengths differ");
    mu.iter()
        .zip(logvar)
        .zip(eps)
        .map(|((m, lv), e)| m + (lv / 2.0).exp() * e)
        .collect()
}

fn check_tokens(params: &VaeParams, tokens: &[usize]) -> Result<(), VaeError> {
    match tokens.iter().position(|&t| t >= params.dims.vocab) {
        Some(position) => Err(VaeError::OutOfVocabulary {
            token: tokens[position],
            position,
        }),
        None => Ok(()),
    }
}

/// Drops trailing PAD positions.
fn unpadded(tokens: &[usize]) -> &[usize] {
    let n = tokens.iter().rposition(|&t| t != PAD).map_or(0, |p| p + 1);
    &tokens[..n]
}

struct Encoded {
    steps: Vec<LstmStep>,
    h_last: Vec<f64>,
    fc_pre: Vec<f64>,
    fc: Vec<f64>,
    mu: Vec<f64>,
    logvar_raw: Vec<f64>,
    logvar: Vec<f64>,
}

fn encode_inner(p: &VaeParams, tokens: &[usize]) -> Encoded {
    let h = p.dims.hidden;
    let lstm = Lstm {
        wx: &p.enc_wx,
        wh: &p.enc_wh,
        b: &p.enc_b,
        wz: None,
    };
    let mut steps: Vec<LstmStep> = Vec::with_capacity(tokens.len());
    let (mut hs, mut cs) = (vec![0.0; h], vec![0.0; h]);
    for &x in tokens {
        let s = lstm.step(x, hs, cs);
        hs = s.h.clone();
        cs = s.c.clone();
        steps.push(s);
    }
    let fc_pre = affine(&p.enc_fc_w, &p.enc_fc_b, &hs);
    let mut fc = fc_pre.clone();
    relu(&mut fc);
    let mu = affine(&p.mu_w, &p.mu_b, &fc);
    let logvar_raw = affine(&p.logvar_w, &p.logvar_b, &fc);
    let logvar = logvar_raw.iter().map(|v| v.clamp(LOGVAR_MIN, LOGVAR_MAX)).collect();
    Encoded {
        steps,
        h_last: hs,
        fc_pre,
        fc,
        mu,
        logvar_raw,
        logvar,
    }
}

/// Posterior mean and (clamped) log-variance of a token sequence.
pub fn encode(params: &VaeParams, tokens: &[usize]) -> Result<(Vec<f64>, Vec<f64>), VaeError> {
    check_tokens(params, tokens)?;
    let e = encode_inner(params, unpadded(tokens));
    Ok((e.mu, e.logvar))
}

/// Decoder initial state from z: ReLU layer, then a tanh projection.
pub(crate) fn decoder_init(p: &VaeParams, z: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let q = affine(&p.dec_z_w, &p.dec_z_b, z);
    let mut r = q.clone();
    relu(&mut r);
    let h0: Vec<f64> = affine(&p.dec_h0_w, &p.dec_h0_b, &r).iter().map(|v| v.tanh()).collect();
    (q, r, h0)
}

/// Stepwise decoder used for sampling.
pub(crate) struct DecoderState<'a> {
    lstm: Lstm<'a>,
    out_w: &'a Matrix,
    out_b: &'a Matrix,
    h: Vec<f64>,
    c: Vec<f64>,
}

impl<'a> DecoderState<'a> {
    pub(crate) fn new(p: &'a VaeParams, z: &'a [f64]) -> Self {
        let (_, _, h0) = decoder_init(p, z);
        DecoderState {
            lstm: Lstm {
                wx: &p.dec_wx,
                wh: &p.dec_wh,
                b: &p.dec_b,
                wz: p.dec_wz.as_ref().map(|m| (m, z)),
            },
            out_w: &p.out_w,
            out_b: &p.out_b,
            c: vec![0.0; h0.len()],
            h: h0,
        }
    }

    /// Feeds `input` and returns the next-token distribution.
    pub(crate) fn step(&mut self, input: usize) -> Vec<f64> {
        let s = self.lstm.step(input, std::mem::take(&mut self.h), std::mem::take(&mut self.c));
        self.h = s.h;
        self.c = s.c;
        softmax(&affine(self.out_w, self.out_b, &self.h))
    }
}

fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

/// Teacher-forced next-token distributions for `targets` (inputs are BOS
/// followed by the targets shifted right). One row per target position.
pub fn decode_logits(params: &VaeParams, z: &[f64], targets: &[usize]) -> Result<Vec<Vec<f64>>, VaeError> {
    check_tokens(params, targets)?;
    assert_eq!(z.len(), params.dims.latent, "latent length");
    let mut dec = DecoderState::new(params, z);
    let mut input = BOS;
    Ok(unpadded(targets)
        .iter()
        .map(|&t| {
            let p = dec.step(input);
            input = t;
            p
        })
        .collect())
}

/// Per-sequence forward record kept for the backward pass.
struct Forward {
    enc: Encoded,
    eps: Vec<f64>,
    z: Vec<f64>,
    dz_pre: Vec<f64>,
    dz_relu: Vec<f64>,
    h0: Vec<f64>,
    steps: Vec<LstmStep>,
    probs: Vec<Vec<f64>>,
    targets: Vec<usize>,
    recon: f64,
    kl: f64,
}

fn forward(p: &VaeParams, tokens: &[usize], eps: &[f64], teacher_forcing: bool) -> Forward {
    let tokens = unpadded(tokens);
    let enc = encode_inner(p, tokens);
    let z = reparameterize(&enc.mu, &enc.logvar, eps);
    let (dz_pre, dz_relu, h0) = decoder_init(p, &z);
    let lstm = Lstm {
        wx: &p.dec_wx,
        wh: &p.dec_wh,
        b: &p.dec_b,
        wz: p.dec_wz.as_ref().map(|m| (m, z.as_slice())),
    };
    let h = p.dims.hidden;
    let mut steps = Vec::with_capacity(tokens.len());
    let mut probs: Vec<Vec<f64>> = Vec::with_capacity(tokens.len());
    let (mut hs, mut cs) = (h0.clone(), vec![0.0; h]);
    let mut recon = 0.0;
    for (t, &target) in tokens.iter().enumerate() {
        let input = match t {
            0 => BOS,
            _ if teacher_forcing => tokens[t - 1],
            _ => argmax(&probs[t - 1]),
        };
        let s = lstm.step(input, hs, cs);
        hs = s.h.clone();
        cs = s.c.clone();
        let pr = softmax(&affine(&p.out_w, &p.out_b, &hs));
        recon -= pr[target].max(f64::MIN_POSITIVE).ln();
        probs.push(pr);
        steps.push(s);
    }
    let kl = kl_divergence(&enc.mu, &enc.logvar);
    Forward {
        enc,
        eps: eps.to_vec(),
        z,
        dz_pre,
        dz_relu,
        h0,
        steps,
        probs,
        targets: tokens.to_vec(),
        recon,
        kl,
    }
}

/// Adds d(recon + w·kl)/dθ · `scale` for one sequence into `g`.
fn backward(p: &VaeParams, fw: &Forward, kl_weight: f64, scale: f64, g: &mut VaeParams) {
    let h = p.dims.hidden;
    let l = p.dims.latent;
    let mut dz = vec![0.0; l];

    // decoder
    let mut dh_next = vec![0.0; h];
    let mut dc_next = vec![0.0; h];
    {
        let VaeParams {
            dec_wx,
            dec_wh,
            dec_b,
            dec_wz,
            out_w,
            out_b,
            ..
        } = g;
        let mut lg = LstmGrads {
            wx: dec_wx,
            wh: dec_wh,
            b: dec_b,
            wz: dec_wz.as_mut(),
        };
        for t in (0..fw.steps.len()).rev() {
            let s = &fw.steps[t];
            let mut dlogits = fw.probs[t].clone();
            dlogits[fw.targets[t]] -= 1.0;
            for v in &mut dlogits {
                *v *= scale;
            }
            out_w.outer_add(&dlogits, &s.h);
            out_b.add_vec(&dlogits);
            let mut dh = dh_next;
            p.out_w.tmatvec_add(&dlogits, &mut dh);
            let wz = p.dec_wz.as_ref().map(|m| (m, fw.z.as_slice(), dz.as_mut_slice()));
            let (a, b) = lstm_step_back(s, &dh, &dc_next, &p.dec_wh, wz, &mut lg);
            dh_next = a;
            dc_next = b;
        }
    }

    // h0 = tanh(W r + b), r = relu(q), q = W z + b
    let du: Vec<f64> = dh_next.iter().zip(&fw.h0).map(|(d, h0)| d * (1.0 - h0 * h0)).collect();
    g.dec_h0_w.outer_add(&du, &fw.dz_relu);
    g.dec_h0_b.add_vec(&du);
    let mut dr = vec![0.0; p.dims.fc];
    p.dec_h0_w.tmatvec_add(&du, &mut dr);
    let dq: Vec<f64> = dr.iter().zip(&fw.dz_pre).map(|(d, q)| if *q > 0.0 { *d } else { 0.0 }).collect();
    g.dec_z_w.outer_add(&dq, &fw.z);
    g.dec_z_b.add_vec(&dq);
    p.dec_z_w.tmatvec_add(&dq, &mut dz);

    // latent heads
    let e = &fw.enc;
    let w = kl_weight * scale;
    let dmu: Vec<f64> = (0..l).map(|k| dz[k] + w * e.mu[k]).collect();
    let dlv: Vec<f64> = (0..l)
        .map(|k| {
            if e.logvar_raw[k] < LOGVAR_MIN || e.logvar_raw[k] > LOGVAR_MAX {
                return 0.0;
            }
            let s = (e.logvar[k] / 2.0).exp();
            dz[k] * fw.eps[k] * 0.5 * s + w * 0.5 * (e.logvar[k].exp() - 1.0)
        })
        .collect();
    g.mu_w.outer_add(&dmu, &e.fc);
    g.mu_b.add_vec(&dmu);
    g.logvar_w.outer_add(&dlv, &e.fc);
    g.logvar_b.add_vec(&dlv);
    let mut dfc = vec![0.0; p.dims.fc];
    p.mu_w.tmatvec_add(&dmu, &mut dfc);
    p.logvar_w.tmatvec_add(&dlv, &mut dfc);
    let dpre: Vec<f64> = dfc.iter().zip(&e.fc_pre).map(|(d, x)| if *x > 0.0 { *d } else { 0.0 }).collect();
    g.enc_fc_w.outer_add(&dpre, &e.h_last);
    g.enc_fc_b.add_vec(&dpre);
    let mut dh = vec![0.0; h];
    p.enc_fc_w.tmatvec_add(&dpre, &mut dh);

    // encoder
    let mut dc = vec![0.0; h];
    let mut lg = LstmGrads {
        wx: &mut g.enc_wx,
        wh: &mut g.enc_wh,
        b: &mut g.enc_b,
        wz: None,
    };
    for s in e.steps.iter().rev() {
        let (a, b) = lstm_step_back(s, &dh, &dc, &p.enc_wh, None, &mut lg);
        dh = a;
        dc = b;
    }
}

fn check_batch(params: &VaeParams, batch: &[Vec<usize>], eps_batch: &[Vec<f64>]) -> Result<(), VaeError> {
    assert_eq!(batch.len(), eps_batch.len(), "one noise vector per sequence");
    for (seq, eps) in batch.iter().zip(eps_batch) {
        check_tokens(params, seq)?;
        assert_eq!(eps.len(), params.dims.latent, "noise length");
    }
    Ok(())
}

fn mean_loss(parts: &[(f64, f64)], kl_weight: f64) -> Loss {
    let n = parts.len().max(1) as f64;
    let recon = parts.iter().map(|p| p.0).sum::<f64>() / n;
    let kl = parts.iter().map(|p| p.1).sum::<f64>() / n;
    Loss {
        total: recon + kl_weight * kl,
        recon,
        kl,
    }
}

/// ELBO terms averaged over the batch. Recon sums cross-entropy over the
/// non-PAD positions of each sequence.
pub fn elbo_loss(params: &VaeParams, batch: &[Vec<usize>], eps_batch: &[Vec<f64>], kl_weight: f64) -> Result<Loss, VaeError> {
    check_batch(params, batch, eps_batch)?;
    let parts: Vec<(f64, f64)> = batch
        .iter()
        .zip(eps_batch)
        .map(|(s, e)| {
            let f = forward(params, s, e, true);
            (f.recon, f.kl)
        })
        .collect();
    Ok(mean_loss(&parts, kl_weight))
}

/// Per-sequence gradient chunk size; summation order inside and across
/// chunks is fixed, so results do not depend on the thread count.
const CHUNK: usize = 4;

/// Loss and gradient of the batch-mean total.
pub fn elbo_grad(
    params: &VaeParams,
    batch: &[Vec<usize>],
    eps_batch: &[Vec<f64>],
    kl_weight: f64,
    teacher_forcing: bool,
) -> Result<(Loss, VaeParams), VaeError> {
    use rayon::prelude::*;
    check_batch(params, batch, eps_batch)?;
    let scale = 1.0 / batch.len().max(1) as f64;
    let pairs: Vec<(&Vec<usize>, &Vec<f64>)> = batch.iter().zip(eps_batch).collect();
    let chunks: Vec<(Vec<(f64, f64)>, VaeParams)> = pairs
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut g = VaeParams::zeros(params.dims);
            let parts = chunk
                .iter()
                .map(|(s, e)| {
                    let f = forward(params, s, e, teacher_forcing);
                    backward(params, &f, kl_weight, scale, &mut g);
                    (f.recon, f.kl)
                })
                .collect();
            (parts, g)
        })
        .collect();
    let mut grad = VaeParams::zeros(params.dims);
    let mut parts = Vec::with_capacity(batch.len());
    for (p, g) in chunks {
        parts.extend(p);
        grad.add_scaled(&g, 1.0);
    }
    Ok((mean_loss(&parts, kl_weight), grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vae::ModelDims;

    fn tiny() -> VaeParams {
        VaeParams::init(
            ModelDims {
                vocab: 10,
                hidden: 8,
                latent: 4,
                fc: 6,
                feed_z: false,
            },
            3,
        )
    }

    #[test]
    fn reparameterize_examples() {
        assert_eq!(reparameterize(&[1.0, 2.0], &[0.3, 0.1], &[0.0, 0.0]), vec![1.0, 2.0]);
        assert_eq!(reparameterize(&[1.0], &[0.0], &[0.5]), vec![1.5]);
        let z = reparameterize(&[0.0; 3], &[2.0 * 2f64.ln(); 3], &[1.0; 3]);
        assert!(z.iter().all(|v| (v - 2.0).abs() < 1e-12));
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_divergence(&[0.0; 128], &[0.0; 128]), 0.0);
        assert!((kl_divergence(&[1.0; 4], &[0.0; 4]) - 2.0).abs() < 1e-12);
        assert!(kl_divergence(&[0.0], &[0.5]) > 0.0);
    }

    #[test]
    fn zero_weights_give_bias_heads() {
        let mut p = VaeParams::zeros(ModelDims::default());
        p.mu_b.data[5] = 0.25;
        p.logvar_b.data[7] = -1.5;
        for seq in [vec![3, 4, 2], vec![5, 2]] {
            let (mu, lv) = encode(&p, &seq).unwrap();
            assert_eq!(mu.len(), 128);
            assert_eq!(mu, p.mu_b.data);
            assert_eq!(lv, p.logvar_b.data);
        }
        assert!(matches!(encode(&p, &[3, 99]), Err(VaeError::OutOfVocabulary { token: 99, position: 1 })));
    }

    #[test]
    fn uniform_logits_and_normalisation() {
        let p = VaeParams::zeros(ModelDims::default());
        let rows = decode_logits(&p, &[0.0; 128], &[3, 4, 2]).unwrap();
        assert!(rows.iter().flatten().all(|v| (v - 0.02).abs() < 1e-15));
        let q = tiny();
        for row in decode_logits(&q, &[0.3, -1.0, 0.5, 2.0], &[3, 4, 5, 2]).unwrap() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            assert!(row.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn padding_is_masked() {
        let p = tiny();
        let eps = vec![vec![0.1, 0.2, -0.3, 0.4]];
        let a = elbo_loss(&p, &[vec![3, 4, 2]], &eps, 1.0).unwrap();
        let b = elbo_loss(&p, &[vec![3, 4, 2, PAD, PAD]], &eps, 1.0).unwrap();
        assert_eq!(a, b);
    }
}
