//! Bemis-Murcko scaffolds.

use super::graph::{BondOrder, MolGraph};

/// Ring systems plus the linkers between them. Terminal chains are pruned;
/// an atom double-bonded to a kept atom is retained, as in RDKit's
/// `MurckoScaffold`. Acyclic molecules give an empty graph.
pub fn murcko_scaffold(mol: &MolGraph) -> MolGraph {
    let n = mol.atom_count();
    let mut keep = vec![true; n];
    let mut degree: Vec<usize> = (0..n).map(|i| mol.degree(i)).collect();
    let mut stack: Vec<usize> = (0..n)
        .filter(|&i| !mol.is_ring_atom(i) && degree[i] <= 1)
        .collect();
    while let Some(a) = stack.pop() {
        if !keep[a] {
            continue;
        }
        keep[a] = false;
        for &(nb, _) in mol.neighbors(a) {
            if keep[nb] {
                degree[nb] -= 1;
                if !mol.is_ring_atom(nb) && degree[nb] <= 1 {
                    stack.push(nb);
                }
            }
        }
    }
    let core = keep.clone();
    for a in 0..n {
        if core[a] || mol.degree(a) != 1 {
            continue;
        }
        let (nb, b) = mol.neighbors(a)[0];
        if core[nb] && mol.bond(b).order == BondOrder::Double {
            keep[a] = true;
        }
    }
    let kept: Vec<usize> = (0..n).filter(|&i| keep[i]).collect();
    // ring atoms are never pruned, so aromatic flags carry over unchanged
    mol.induced_subgraph(&kept)
}
