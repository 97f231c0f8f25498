use mtgen::vae::{elbo_grad, elbo_loss, kl_divergence, ModelDims, VaeParams, PAD};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-4;

fn model(feed_z: bool, seed: u64) -> VaeParams {
    let mut p = VaeParams::init(
        ModelDims {
            vocab: 10,
            hidden: 8,
            latent: 4,
            fc: 6,
            feed_z,
        },
        seed,
    );
    // non-zero biases so every tensor gets a generic gradient
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
    for (name, m) in p.tensors_mut() {
        if name.ends_with("_b") {
            for x in &mut m.data {
                *x += rng.random_range(-0.3..0.3);
            }
        }
    }
    p
}

fn check(feed_z: bool, seed: u64) {
    let p = model(feed_z, seed);
    let batch = vec![vec![3, 4, 5, 6, 2], vec![7, 8, 9, 2, PAD]];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps: Vec<Vec<f64>> = (0..2).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let w = 0.7;
    let (loss, grad) = elbo_grad(&p, &batch, &eps, w, true).unwrap();
    assert_eq!(loss, elbo_loss(&p, &batch, &eps, w).unwrap());

    let names: Vec<&str> = p.tensors().iter().map(|(n, _)| *n).collect();
    for (t, name) in names.iter().enumerate() {
        let analytic = &grad.tensors()[t].1.data;
        let mut numeric = vec![0.0; analytic.len()];
        for (k, num) in numeric.iter_mut().enumerate() {
            let mut plus = p.clone();
            plus.tensors_mut()[t].1.data[k] += STEP;
            let mut minus = p.clone();
            minus.tensors_mut()[t].1.data[k] -= STEP;
            let fp = elbo_loss(&plus, &batch, &eps, w).unwrap().total;
            let fm = elbo_loss(&minus, &batch, &eps, w).unwrap().total;
            *num = (fp - fm) / (2.0 * STEP);
        }
        let diff: f64 = analytic.iter().zip(&numeric).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
        let scale: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt() + numeric.iter().map(|n| n * n).sum::<f64>().sqrt();
        let rel = if scale == 0.0 { 0.0 } else { diff / scale };
        println!("feed_z={feed_z} {name:10} |g|={:.3e} rel={rel:.2e}", scale / 2.0);
        assert!(scale > 0.0, "{name} has an all-zero gradient");
        assert!(rel < 1e-4, "{name}: relative error {rel:e}");
    }
}

#[test]
fn gradients_match_finite_differences() {
    check(false, 1);
    check(false, 2);
}

#[test]
fn gradients_match_with_latent_fed_every_step() {
    check(true, 3);
}

#[test]
fn kl_spot_checks() {
    assert_eq!(kl_divergence(&[0.0; 4], &[0.0; 4]), 0.0);
    for d in 0..4 {
        let mut mu = [0.0; 4];
        mu[d] = 1.0;
        assert!((kl_divergence(&mu, &[0.0; 4]) - 0.5).abs() < 1e-12);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let mu: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
        let lv: Vec<f64> = (0..4).map(|_| rng.random_range(-5.0..5.0)).collect();
        assert!(kl_divergence(&mu, &lv) > 1e-9);
    }
}
