//! Prior sampling and greedy decoding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::model::DecoderState;
use super::params::VaeParams;
use super::vocab::{Vocabulary, BOS, EOS};

/// Draws a token from `p` restricted to SMILES tokens and EOS.
fn draw(p: &[f64], vocab: &Vocabulary, rng: &mut ChaCha8Rng) -> usize {
    let allowed = |i: usize| i == EOS || vocab.is_emittable(i);
    let mass: f64 = p.iter().enumerate().filter(|&(i, _)| allowed(i)).map(|(_, v)| v).sum();
    let mut u = rng.random::<f64>() * mass;
    let mut last = EOS;
    for (i, &v) in p.iter().enumerate().filter(|&(i, _)| allowed(i)) {
        if u < v {
            return i;
        }
        u -= v;
        last = i;
    }
    last
}

fn pick_greedy(p: &[f64], vocab: &Vocabulary) -> usize {
    let mut best = EOS;
    for (i, &v) in p.iter().enumerate() {
        if (i == EOS || vocab.is_emittable(i)) && v > p[best] {
            best = i;
        }
    }
    best
}

/// Decodes from `z` until EOS or until the string would exceed `max_len`
/// characters.
fn decode_with(params: &VaeParams, vocab: &Vocabulary, z: &[f64], max_len: usize, mut pick: impl FnMut(&[f64]) -> usize) -> String {
    let mut dec = DecoderState::new(params, z);
    let mut out = String::new();
    let mut input = BOS;
    while out.len() < max_len {
        let t = pick(&dec.step(input));
        if t == EOS {
            break;
        }
        let sym = vocab.token(t).expect("token in vocabulary");
        if out.len() + sym.len() > max_len {
            break;
        }
        out.push_str(sym);
        input = t;
    }
    out
}

/// Argmax decoding; deterministic given (params, z).
pub fn greedy_decode(params: &VaeParams, vocab: &Vocabulary, z: &[f64], max_len: usize) -> String {
    decode_with(params, vocab, z, max_len, |p| pick_greedy(p, vocab))
}

/// `n` strings from z ~ N(0, I) with multinomial token sampling. Sample `i`
/// uses stream `i` of the seeded generator, so output is independent of
/// the thread count.
pub fn sample(params: &VaeParams, vocab: &Vocabulary, n: usize, seed: u64, max_len: usize) -> Vec<String> {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let z: Vec<f64> = (0..params.dims.latent).map(|_| StandardNormal.sample(&mut rng)).collect();
            decode_with(params, vocab, &z, max_len, |p| draw(p, vocab, &mut rng))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vae::ModelDims;

    #[test]
    fn lengths_and_determinism() {
        let v = Vocabulary::standard();
        let p = VaeParams::init(
            ModelDims {
                hidden: 16,
                latent: 8,
                fc: 16,
                ..ModelDims::default()
            },
            2,
        );
        let a = sample(&p, &v, 20, 7, 12);
        assert_eq!(a.len(), 20);
        assert!(a.iter().all(|s| s.len() <= 12));
        assert_eq!(a, sample(&p, &v, 20, 7, 12));
        assert_ne!(a, sample(&p, &v, 20, 8, 12));
        let z = vec![0.5; 8];
        assert_eq!(greedy_decode(&p, &v, &z, 30), greedy_decode(&p, &v, &z, 30));
    }
}
