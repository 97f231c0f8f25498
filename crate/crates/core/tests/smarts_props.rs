use mtgen::chem::{parse_smiles, MolGraph};
use mtgen::smarts::{brute_force_match, parse_smarts, screen, substructure_match, Catalogue, QueryGraph};
use proptest::prelude::*;

fn grid() -> Vec<(String, String, bool)> {
    include_str!("fixtures/matcher_grid.tsv")
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            (f[0].to_string(), f[1].to_string(), f[2] == "1")
        })
        .collect()
}

fn mapping_is_valid(mol: &MolGraph, q: &QueryGraph, map: &[usize]) -> bool {
    let mut seen = map.to_vec();
    seen.sort_unstable();
    seen.dedup();
    seen.len() == map.len()
        && q.atoms.iter().enumerate().all(|(i, e)| e.matches(mol, map[i]))
        && q.bonds.iter().all(|b| {
            mol.bond_between(map[b.begin], map[b.end])
                .is_some_and(|mb| b.expr.matches(mol, mb))
        })
}

#[test]
fn grid_agrees_with_enumeration_and_reference() {
    let rows = grid();
    assert!(rows.len() >= 1000);
    for (smiles, smarts, expected) in rows {
        let mol = parse_smiles(&smiles).unwrap();
        let q = parse_smarts(&smarts).unwrap();
        assert!(mol.heavy_atom_count() <= 8 && q.atom_count() <= 4);
        let found = substructure_match(&mol, &q);
        if let Some(map) = &found {
            assert!(mapping_is_valid(&mol, &q, map), "{smiles} {smarts}");
        }
        assert_eq!(found.is_some(), brute_force_match(&mol, &q), "{smiles} {smarts}");
        assert_eq!(found.is_some(), expected, "{smiles} {smarts}");
    }
}

const ELEMENTS: &[&str] = &["C", "C", "C", "N", "N", "O", "S", "Cl", "[N+]", "[O-]"];
const BONDS: &[&str] = &["", "", "", "", "", "=", "#"];

/// Random tree molecule with at most one ring closure, written as SMILES.
fn molecule() -> impl Strategy<Value = String> {
    (1usize..=8)
        .prop_flat_map(|n| {
            (
                proptest::collection::vec(0..ELEMENTS.len(), n),
                proptest::collection::vec(0..BONDS.len(), n),
                proptest::collection::vec(any::<bool>(), n),
                any::<bool>(),
            )
        })
        .prop_map(|(atoms, bonds, branch, ring)| {
            let mut s = String::new();
            let mut open = 0;
            for (i, &a) in atoms.iter().enumerate() {
                if i > 0 {
                    s.push_str(BONDS[bonds[i]]);
                }
                s.push_str(ELEMENTS[a]);
                if i == 0 && ring && atoms.len() >= 3 {
                    s.push('1');
                }
                if branch[i] && i + 1 < atoms.len() {
                    s.push('(');
                    open += 1;
                }
            }
            if ring && atoms.len() >= 3 {
                s.push('1');
            }
            s.push_str(&")".repeat(open));
            s.replace("()", "")
        })
}

const QATOMS: &[&str] = &[
    "C", "N", "O", "*", "[#6]", "[O,N]", "[!C]", "[R]", "[D2]", "[H1]", "[C;!R]", "[X4]", "[+]", "[-]", "A", "[v4]",
];
const QBONDS: &[&str] = &["", "-", "=", "~", "#", "@", "!-", "!@"];

fn query() -> impl Strategy<Value = String> {
    (1usize..=4)
        .prop_flat_map(|n| {
            (
                proptest::collection::vec(0..QATOMS.len(), n),
                proptest::collection::vec(0..QBONDS.len(), n),
                any::<bool>(),
                any::<bool>(),
            )
        })
        .prop_map(|(atoms, bonds, branch, ring)| {
            let n = atoms.len();
            let mut s = String::new();
            for (i, &a) in atoms.iter().enumerate() {
                if i > 0 {
                    if branch && i == 2 && n == 4 {
                        s.push(')');
                    }
                    s.push_str(QBONDS[bonds[i]]);
                }
                s.push_str(QATOMS[a]);
                if i == 0 && ring && n >= 3 {
                    s.push('1');
                }
                if branch && i == 1 && n == 4 {
                    s.push('(');
                    s.push_str(QBONDS[bonds[0]]);
                    s.push('C');
                }
            }
            if ring && n >= 3 {
                s.push('1');
            }
            s
        })
        .prop_filter("at most four atoms", |s| parse_smarts(s).is_ok_and(|q| q.atom_count() <= 4))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn matcher_equals_brute_force(smiles in molecule(), smarts in query()) {
        let Ok(mol) = parse_smiles(&smiles) else { return Ok(()); };
        let q = parse_smarts(&smarts).unwrap();
        let found = substructure_match(&mol, &q);
        if let Some(map) = &found {
            prop_assert!(mapping_is_valid(&mol, &q, map));
        }
        prop_assert_eq!(found.is_some(), brute_force_match(&mol, &q), "{} {}", smiles, smarts);
    }

    #[test]
    fn matching_ignores_atom_order(smiles in molecule(), smarts in query(), seed in any::<u64>()) {
        let Ok(mol) = parse_smiles(&smiles) else { return Ok(()); };
        let q = parse_smarts(&smarts).unwrap();
        let n = mol.atom_count();
        let mut order: Vec<usize> = (0..n).collect();
        // deterministic shuffle from the seed
        let mut x = seed | 1;
        for i in (1..n).rev() {
            x ^= x << 13; x ^= x >> 7; x ^= x << 17;
            order.swap(i, (x % (i as u64 + 1)) as usize);
        }
        let p = mol.permuted(&order);
        prop_assert_eq!(substructure_match(&mol, &q).is_some(), substructure_match(&p, &q).is_some());
    }

    #[test]
    fn screen_is_monotone(smiles in molecule(), subset in proptest::collection::vec(any::<bool>(), 5), extra in 0usize..5) {
        let Ok(mol) = parse_smiles(&smiles) else { return Ok(()); };
        let all = Catalogue::all_bundled();
        let base: Vec<Catalogue> = all.iter().zip(&subset).filter(|(_, &k)| k).map(|(c, _)| c.clone()).collect();
        let mut more = base.clone();
        more.push(all[extra].clone());
        if !screen(&mol, &base).pass {
            prop_assert!(!screen(&mol, &more).pass);
        }
        prop_assert!(screen(&mol, &more).hits.len() >= screen(&mol, &base).hits.len());
    }
}

#[test]
fn bundled_screen_on_corpus_is_order_invariant() {
    let cats = Catalogue::all_bundled();
    for line in include_str!("../data/toy_corpus.smi").lines().filter(|l| !l.starts_with('#')) {
        let mol = parse_smiles(line.split_whitespace().next().unwrap()).unwrap();
        let rev: Vec<usize> = (0..mol.atom_count()).rev().collect();
        assert_eq!(screen(&mol, &cats), screen(&mol.permuted(&rev), &cats), "{line}");
    }
}

#[test]
fn generators_mostly_yield_valid_inputs() {
    use proptest::strategy::ValueTree;
    use proptest::test_runner::TestRunner;
    let mut runner = TestRunner::deterministic();
    let strat = molecule();
    let ok = (0..500)
        .filter(|_| parse_smiles(&strat.new_tree(&mut runner).unwrap().current()).is_ok())
        .count();
    assert!(ok >= 200, "only {ok}/500 generated molecules parse");
}
