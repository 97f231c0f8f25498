//! Potential tetrahedral stereocentres of a graph without stereo markup.

use super::canon::symmetry_classes;
use super::graph::{BondOrder, MolGraph};

/// Atoms that could carry tetrahedral stereo: an sp3 centre whose
/// neighbours (implicit hydrogen included) fall into pairwise distinct
/// symmetry classes.
pub fn potential_stereocenters(mol: &MolGraph) -> Vec<usize> {
    let classes = symmetry_classes(mol);
    (0..mol.atom_count())
        .filter(|&i| is_candidate(mol, i))
        .filter(|&i| {
            let mut nb: Vec<usize> = mol.neighbors(i).iter().map(|&(j, _)| classes[j]).collect();
            let n = nb.len();
            nb.sort_unstable();
            nb.dedup();
            nb.len() == n
        })
        .collect()
}

fn is_candidate(mol: &MolGraph, i: usize) -> bool {
    let a = mol.atom(i);
    if a.aromatic || a.total_h() > 1 {
        return false;
    }
    let conn = mol.connectivity(i);
    let multiple = mol
        .neighbors(i)
        .iter()
        .filter(|&&(_, b)| mol.bond(b).order != BondOrder::Single)
        .count();
    match (a.element, a.formal_charge) {
        (6 | 14, 0) => conn == 4 && multiple == 0,
        (7, 1) | (15, 1) => conn == 4 && multiple == 0,
        // sulfoxides and sulfinyl groups, phosphine oxides and phosphates
        (16 | 34, 0) => conn == 3 && mol.total_valence(i) == 4,
        (15, 0) => conn == 4 && mol.total_valence(i) == 5,
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    fn count(s: &str) -> usize {
        potential_stereocenters(&parse_smiles(s).unwrap()).len()
    }

    #[test]
    fn simple_centres() {
        assert_eq!(count("CC(O)CC"), 1);
        assert_eq!(count("CC(O)C"), 0);
        assert_eq!(count("CCO"), 0);
        assert_eq!(count("CS(=O)CC"), 1);
        assert_eq!(count("OC(F)(Cl)Br"), 1);
    }
}
