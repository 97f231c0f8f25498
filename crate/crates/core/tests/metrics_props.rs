use std::collections::{BTreeSet, HashSet};

use mtgen::chem::{canonical_smiles, parse_smiles};
use mtgen::metrics::{
    cluster_count, dbscan, density_reachability_oracle, generation_stats, labels_consistent, score_histogram,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn corpus() -> Vec<String> {
    include_str!("../data/toy_corpus.smi")
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split_whitespace().next().unwrap().to_string())
        .collect()
}

const INVALID: &[&str] = &["C(", "c1cccc1", "XYZ", "C1CC", "[Cx]", "C==C", "", "N(C)(C)(C)(C)C"];

#[test]
fn stats_match_brute_force_on_random_mixes() {
    let corpus = corpus();
    let canon: Vec<String> = corpus.iter().map(|s| canonical_smiles(&parse_smiles(s).unwrap())).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let n = rng.random_range(0..40);
        let mut generated: Vec<String> = Vec::new();
        for _ in 0..n {
            let r: f64 = rng.random();
            let k = rng.random_range(0..corpus.len());
            generated.push(if r < 0.2 {
                INVALID[rng.random_range(0..INVALID.len())].to_string()
            } else if r < 0.5 {
                canon[k].clone()
            } else if r < 0.6 && !generated.is_empty() {
                generated[rng.random_range(0..generated.len())].clone()
            } else {
                corpus[k].clone()
            });
        }
        let known: HashSet<String> = canon.iter().filter(|_| rng.random_bool(0.3)).cloned().collect();
        let s = generation_stats(&generated, &known);

        // brute force: explicit loops, no shared helpers
        let valid: Vec<String> = generated
            .iter()
            .filter_map(|g| parse_smiles(g).ok())
            .map(|m| canonical_smiles(&m))
            .collect();
        let mut unique: Vec<&String> = Vec::new();
        for v in &valid {
            if !unique.contains(&v) {
                unique.push(v);
            }
        }
        let unk = unique.iter().filter(|u| !known.iter().any(|k| k == **u)).count();
        assert_eq!((s.n_gen, s.n_val, s.n_uni, s.n_unk), (generated.len(), valid.len(), unique.len(), unk));
        if n > 0 {
            assert!((s.validity.unwrap() - 100.0 * valid.len() as f64 / n as f64).abs() < 1e-9);
        }
        if let (Some(v), Some(u), Some(nov)) = (s.validity, s.uniqueness, s.novelty) {
            let chain = v * u * nov / 1e4;
            assert!((chain - 100.0 * unk as f64 / n as f64).abs() < 1e-9);
        }
    }
}

fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.random::<f64>(), rng.random::<f64>())).collect();
    pts.iter()
        .map(|a| pts.iter().map(|b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()).collect())
        .collect()
}

#[test]
fn dbscan_equals_closure_oracle_on_50_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..50 {
        let d = random_points(&mut rng, 12);
        let eps = rng.random_range(0.05..0.5);
        let min_pts = rng.random_range(1..5);
        let labels = dbscan(&d, eps, min_pts).unwrap();
        let oracle = density_reachability_oracle(&d, eps, min_pts).unwrap();
        assert!(labels_consistent(&labels, &d, eps, &oracle));
        assert_eq!(cluster_count(&labels), oracle.core_components.len());
    }
}

/// Partition of core points as sets, independent of label values.
fn core_partition(labels: &[Option<usize>], core: &[bool]) -> BTreeSet<BTreeSet<usize>> {
    let ids: BTreeSet<usize> = labels.iter().flatten().copied().collect();
    ids.into_iter()
        .map(|c| (0..labels.len()).filter(|&i| core[i] && labels[i] == Some(c)).collect())
        .collect()
}

proptest! {
    #[test]
    fn dbscan_is_permutation_invariant(seed in any::<u64>(), eps in 0.05f64..0.6, min_pts in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 12;
        let d = random_points(&mut rng, n);
        let mut perm: Vec<usize> = (0..n).collect();
        use rand::seq::SliceRandom;
        perm.shuffle(&mut rng);
        let pd: Vec<Vec<f64>> = perm.iter().map(|&i| perm.iter().map(|&j| d[i][j]).collect()).collect();
        let a = dbscan(&d, eps, min_pts).unwrap();
        let b = dbscan(&pd, eps, min_pts).unwrap();
        let core = density_reachability_oracle(&d, eps, min_pts).unwrap().core;
        // map b back to original indices
        let mut back: Vec<Option<usize>> = vec![None; n];
        for (new, &old) in perm.iter().enumerate() {
            back[old] = b[new];
        }
        prop_assert_eq!(core_partition(&a, &core), core_partition(&back, &core));
        let noise = |l: &[Option<usize>]| l.iter().enumerate().filter(|(_, x)| x.is_none()).map(|(i, _)| i).collect::<Vec<_>>();
        prop_assert_eq!(noise(&a), noise(&back));
    }

    #[test]
    fn histogram_conserves_totals(values in proptest::collection::vec(-20.0f64..20.0, 0..200), w in 0.05f64..3.0) {
        let h = score_histogram(&values, w);
        prop_assert_eq!(h.iter().map(|b| b.count).sum::<usize>(), values.len());
        for pair in h.windows(2) {
            prop_assert!((pair[0].hi - pair[1].lo).abs() < 1e-9);
        }
    }

    #[test]
    fn chain_identity_on_counts(n_gen in 1usize..10_000, a in 0.0f64..=1.0, b in 0.0f64..=1.0, c in 0.0f64..=1.0) {
        let n_val = ((n_gen as f64) * a) as usize;
        let n_uni = ((n_val as f64) * b) as usize;
        let n_unk = ((n_uni as f64) * c) as usize;
        let s = mtgen::metrics::GenerationStats::from_counts(n_gen, n_val, n_uni, n_unk);
        if let (Some(v), Some(u), Some(nov)) = (s.validity, s.uniqueness, s.novelty) {
            prop_assert!((v * u * nov / 1e4 - 100.0 * n_unk as f64 / n_gen as f64).abs() < 1e-9);
        }
    }
}
