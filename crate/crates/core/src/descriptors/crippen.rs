//! Atom-contribution logP.

use std::collections::HashMap;
use std::sync::OnceLock;

use crate::chem::{BondOrder, MolGraph};
use crate::smarts::{matches_at, parse_smarts, QueryGraph};

struct Table {
    heavy: Vec<(String, QueryGraph, f64)>,
    hydrogen: HashMap<String, f64>,
}

const DATA: &str = include_str!("../../data/alogp_contrib.tsv");

fn table() -> &'static Table {
    static TABLE: OnceLock<Table> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut heavy = Vec::new();
        let mut hydrogen = HashMap::new();
        for line in DATA.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
            let f: Vec<&str> = line.split('\t').collect();
            let value: f64 = f[2].parse().expect("numeric logp");
            if f[1].starts_with("[#1]") {
                hydrogen.insert(f[0].to_string(), value);
            } else {
                let q = parse_smarts(f[1]).expect("bundled logp pattern parses");
                heavy.push((f[0].to_string(), q, value));
            }
        }
        Table { heavy, hydrogen }
    })
}

/// Type of a hydrogen attached to `parent`. Neighbour classes are by
/// element only; aromatic [nH] hydrogens fall under the N–H type.
fn hydrogen_type(mol: &MolGraph, parent: usize) -> &'static str {
    let a = mol.atom(parent);
    match a.element {
        6 => return "H1",
        7 => return "H3",
        8 => {}
        _ => return "H2",
    }
    let others = || mol.neighbors(parent).iter().map(|&(n, _)| n);
    let is_sp3_or_arom_c = |n: usize| {
        let x = mol.atom(n);
        x.element == 6 && (x.aromatic || mol.connectivity(n) == 4)
    };
    // a second hydrogen counts as a non-CNOS neighbour
    let has_other_element = a.total_h() >= 2 || others().any(|n| !matches!(mol.atom(n).element, 6 | 7 | 8 | 16));
    if others().any(is_sp3_or_arom_c) || has_other_element {
        return "H2";
    }
    if others().any(|n| mol.atom(n).element == 7) {
        return "H3";
    }
    let acyl = others().any(|n| {
        mol.atom(n).element == 6
            && mol.neighbors(n).iter().any(|&(m, b)| {
                mol.bond(b).order == BondOrder::Double && matches!(mol.atom(m).element, 6 | 7 | 8 | 16)
            })
    });
    if acyl || others().any(|n| matches!(mol.atom(n).element, 8 | 16)) {
        return "H4";
    }
    "HS"
}

/// Per-atom contributions; hydrogens are folded into their parent atom.
pub fn atom_contributions(mol: &MolGraph) -> Vec<f64> {
    let t = table();
    (0..mol.atom_count())
        .map(|i| {
            let heavy = t
                .heavy
                .iter()
                .find(|(_, q, _)| matches_at(mol, q, i))
                .map_or(0.0, |(_, _, v)| *v);
            let h = mol.atom(i).total_h() as f64;
            let hv = if h > 0.0 { t.hydrogen[hydrogen_type(mol, i)] } else { 0.0 };
            heavy + h * hv
        })
        .collect()
}

pub fn alogp(mol: &MolGraph) -> f64 {
    super::order_free_sum(atom_contributions(mol))
}

/// Heavy-atom type label, for diagnostics.
pub fn atom_type(mol: &MolGraph, i: usize) -> Option<&'static str> {
    table()
        .heavy
        .iter()
        .find(|(_, q, _)| matches_at(mol, q, i))
        .map(|(id, _, _)| id.as_str())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    fn logp(s: &str) -> f64 {
        alogp(&parse_smiles(s).unwrap())
    }

    #[test]
    fn small_molecules() {
        // C1, C3, O2, H1 x5, H2
        let expect = 0.1441 - 0.2035 - 0.2893 + 5.0 * 0.123 - 0.2677;
        assert!((logp("CCO") - expect).abs() < 1e-9);
        // C18 x6, H1 x6
        assert!((logp("c1ccccc1") - 6.0 * (0.1581 + 0.123)).abs() < 1e-9);
    }

    #[test]
    fn hydrogen_types() {
        let m = parse_smiles("OC(=O)CNc1cc[nH]c1S").unwrap();
        assert_eq!(hydrogen_type(&m, 0), "H4");
        assert_eq!(hydrogen_type(&m, 4), "H3");
        assert_eq!(hydrogen_type(&m, 8), "H3");
        assert_eq!(hydrogen_type(&m, 10), "H2");
        let water = parse_smiles("O").unwrap();
        assert_eq!(hydrogen_type(&water, 0), "H2");
    }
}
