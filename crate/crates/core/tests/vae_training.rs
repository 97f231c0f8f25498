use std::time::Instant;

use mtgen::vae::{
    evaluate, finetune, load_checkpoint, sample, save_checkpoint, train, ModelDims, TrainConfig, VaeParams, Vocabulary,
};

fn toy_corpus() -> Vec<String> {
    include_str!("../data/toy_corpus.smi")
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| l.split_whitespace().next().unwrap().to_string())
        .collect()
}

fn dims() -> ModelDims {
    ModelDims {
        hidden: 64,
        ..ModelDims::default()
    }
}

#[test]
fn toy_corpus_loss_decreases() {
    let vocab = Vocabulary::standard();
    let data: Vec<Vec<usize>> = toy_corpus().iter().map(|s| vocab.encode(s, 100).unwrap()).collect();
    assert_eq!(data.len(), 100);
    let cfg = TrainConfig {
        epochs: 200,
        batch_size: 10,
        seed: 1,
        ..TrainConfig::default()
    };
    let t = Instant::now();
    let r = train(VaeParams::init(dims(), 1), &data, &cfg).unwrap();
    let first = &r.trace[0];
    let last = r.trace.last().unwrap();
    println!("first {first:?}\nlast {last:?}\n{:.1}s", t.elapsed().as_secs_f64());
    assert!(last.total < first.total);
}

#[test]
fn single_smiles_is_memorised() {
    let vocab = Vocabulary::standard();
    let target = "CC(=O)Oc1ccccc1C(=O)O";
    let data = vec![vocab.encode(target, 100).unwrap(); 16];
    let cfg = TrainConfig {
        epochs: 60,
        batch_size: 8,
        seed: 2,
        ..TrainConfig::default()
    };
    let r = train(VaeParams::init(dims(), 2), &data, &cfg).unwrap();
    println!("{:?}", r.trace.last().unwrap());
    let out = sample(&r.params, &vocab, 100, 3, 100);
    let hits = out.iter().filter(|s| *s == target).count();
    println!("{hits}/100 {:?}", &out[..5]);
    assert!(hits > 50);
}

fn small_dims() -> ModelDims {
    ModelDims {
        hidden: 32,
        latent: 16,
        fc: 32,
        ..ModelDims::default()
    }
}

#[test]
fn seeded_runs_and_checkpoints_are_bit_exact() {
    let vocab = Vocabulary::standard();
    let data: Vec<Vec<usize>> = toy_corpus()[..30].iter().map(|s| vocab.encode(s, 100).unwrap()).collect();
    let cfg = TrainConfig {
        epochs: 3,
        batch_size: 7,
        seed: 11,
        ..TrainConfig::default()
    };
    let a = train(VaeParams::init(small_dims(), 4), &data, &cfg).unwrap();
    let b = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| train(VaeParams::init(small_dims(), 4), &data, &cfg).unwrap());
    assert_eq!(a.params, b.params);
    assert_eq!(mtgen::vae::digest(&a.params), mtgen::vae::digest(&b.params));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("general.mtgw");
    save_checkpoint(&a.params, &path).unwrap();
    let loaded = load_checkpoint(&path).unwrap();
    assert_eq!(loaded, a.params);
    assert_eq!(sample(&loaded, &vocab, 25, 5, 80), sample(&a.params, &vocab, 25, 5, 80));
}

#[test]
fn finetuning_fits_the_specific_set_better() {
    let vocab = Vocabulary::standard();
    let corpus = toy_corpus();
    let general_data: Vec<Vec<usize>> = corpus.iter().map(|s| vocab.encode(s, 100).unwrap()).collect();
    let cfg = TrainConfig {
        epochs: 10,
        batch_size: 10,
        seed: 21,
        ..TrainConfig::default()
    };
    let general = train(VaeParams::init(small_dims(), 8), &general_data, &cfg).unwrap().params;
    let specific: Vec<Vec<usize>> = ["O=C(O)c1ccccc1O", "CC(=O)Nc1ccc(O)cc1", "Nc1ccc(cc1)S(N)(=O)=O", "OC(=O)CCc1ccccc1"]
        .iter()
        .map(|s| vocab.encode(s, 100).unwrap())
        .collect();
    let ft_cfg = TrainConfig { epochs: 20, batch_size: 4, ..cfg };
    let tuned = finetune(&general, &specific, &ft_cfg).unwrap().params;
    let before = evaluate(&general, &specific, 1.0).unwrap().recon;
    let after = evaluate(&tuned, &specific, 1.0).unwrap().recon;
    assert!(after < before, "recon {after} not below {before}");
    // a second fine-tune from the same general weights is identical
    assert_eq!(finetune(&general, &specific, &ft_cfg).unwrap().params, tuned);
}

#[test]
fn default_dimension_shapes() {
    let vocab = Vocabulary::standard();
    let p = VaeParams::init(ModelDims::default(), 0);
    let toks = vocab.encode("c1ccccc1O", 100).unwrap();
    let (mu, lv) = mtgen::vae::encode(&p, &toks).unwrap();
    assert_eq!((mu.len(), lv.len()), (128, 128));
    for row in mtgen::vae::decode_logits(&p, &mu, &toks).unwrap() {
        assert_eq!(row.len(), 50);
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    }
}
