use mtgen::chem::{canonical_smiles, murcko_scaffold, parse_smiles, MolGraph};
use mtgen::fingerprints::{morgan4, morgan_fingerprint, tanimoto};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn corpus() -> Vec<MolGraph> {
    include_str!("../data/toy_corpus.smi")
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| parse_smiles(l.split_whitespace().next().unwrap()).unwrap())
        .collect()
}

fn shuffled(mol: &MolGraph, rng: &mut ChaCha8Rng) -> MolGraph {
    let mut order: Vec<usize> = (0..mol.atom_count()).collect();
    order.shuffle(rng);
    mol.permuted(&order)
}

#[test]
fn canonical_form_survives_100_permutations() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for mol in corpus() {
        let reference = canonical_smiles(&mol);
        for _ in 0..100 {
            assert_eq!(canonical_smiles(&shuffled(&mol, &mut rng)), reference);
        }
    }
}

#[test]
fn fingerprint_survives_100_permutations() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for mol in corpus() {
        let reference = morgan4(&mol).unwrap();
        for _ in 0..100 {
            assert_eq!(morgan4(&shuffled(&mol, &mut rng)).unwrap(), reference);
        }
    }
}

#[test]
fn round_trip_preserves_graph() {
    for mol in corpus() {
        let text = canonical_smiles(&mol);
        let back = parse_smiles(&text).unwrap();
        assert_eq!(back.atom_count(), mol.atom_count(), "{text}");
        assert_eq!(back.bond_count(), mol.bond_count(), "{text}");
        assert_eq!(back.formula(), mol.formula(), "{text}");
        assert_eq!(canonical_smiles(&back), text);
    }
}

#[test]
fn scaffold_is_idempotent_on_corpus() {
    for mol in corpus() {
        let s = murcko_scaffold(&mol);
        assert_eq!(canonical_smiles(&murcko_scaffold(&s)), canonical_smiles(&s));
    }
}

#[test]
fn tanimoto_bounds_and_folding() {
    let fps: Vec<_> = corpus().iter().map(|m| morgan_fingerprint(m, 2, 2048).unwrap()).collect();
    for a in &fps {
        assert!(a.fold().unwrap().popcount() <= a.popcount());
        for b in fps.iter().take(20) {
            let t = tanimoto(a, b).unwrap();
            assert!((0.0..=1.0).contains(&t));
            assert_eq!(t, tanimoto(b, a).unwrap());
        }
    }
}

const ALPHABET: &[&str] = &[
    "C", "c", "N", "n", "O", "o", "S", "s", "F", "Cl", "Br", "(", ")", "=", "#", "1", "2", "%1", "[", "]", "+", "-", "H",
    "@", "/", ".", ":", "*", "x", "3",
];

proptest! {
    #[test]
    fn arbitrary_bytes_never_panic(bytes in proptest::collection::vec(any::<u8>(), 1..40)) {
        let text = String::from_utf8_lossy(&bytes).into_owned();
        if let Err(e) = parse_smiles(&text) {
            prop_assert!(e.position < text.chars().count());
        }
    }

    #[test]
    fn token_soup_reports_valid_positions(tokens in proptest::collection::vec(0..ALPHABET.len(), 1..25)) {
        let text: String = tokens.iter().map(|&i| ALPHABET[i]).collect();
        match parse_smiles(&text) {
            Err(e) => prop_assert!(e.position < text.chars().count()),
            Ok(mol) => {
                let canon = canonical_smiles(&mol);
                let back = parse_smiles(&canon);
                prop_assert!(back.is_ok(), "canonical form {canon} of {text} does not reparse");
                prop_assert_eq!(canonical_smiles(&back.unwrap()), canon);
            }
        }
    }
}
