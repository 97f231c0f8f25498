//! Ring perception: cyclic bonds and a smallest set of smallest rings.
//!
//! Cyclic bonds are the non-bridge edges. The SSSR is a minimum cycle basis
//! picked greedily (shortest first) from Horton's candidate set, with
//! independence tested by GF(2) elimination over edge bitsets.

use std::collections::HashSet;

use super::graph::MolGraph;

#[derive(Debug, Clone, Default)]
pub struct RingInfo {
    /// SSSR rings as atom sequences in traversal order.
    pub rings: Vec<Vec<usize>>,
    /// Bond indices of each SSSR ring.
    pub ring_bonds: Vec<Vec<usize>>,
    pub atom_ring_count: Vec<u8>,
    pub bond_ring_count: Vec<u8>,
    /// Smallest SSSR ring containing the atom, 0 when acyclic.
    pub atom_min_ring: Vec<u8>,
    pub atom_in_cycle: Vec<bool>,
    pub bond_in_cycle: Vec<bool>,
}

impl RingInfo {
    pub fn num_rings(&self) -> usize {
        self.rings.len()
    }

    pub fn atom_in_ring_of_size(&self, atom: usize, size: usize) -> bool {
        self.rings.iter().any(|r| r.len() == size && r.contains(&atom))
    }
}

pub(crate) fn perceive(mol: &MolGraph) -> RingInfo {
    let n = mol.atoms.len();
    let m = mol.bonds.len();
    let bridges = find_bridges(mol);
    let bond_in_cycle: Vec<bool> = (0..m).map(|b| !bridges[b]).collect();
    let mut atom_in_cycle = vec![false; n];
    for (i, b) in mol.bonds.iter().enumerate() {
        if bond_in_cycle[i] {
            atom_in_cycle[b.begin] = true;
            atom_in_cycle[b.end] = true;
        }
    }
    let components = mol.components().len();
    let rank = (m + components).saturating_sub(n);

    let mut info = RingInfo {
        atom_ring_count: vec![0; n],
        bond_ring_count: vec![0; m],
        atom_min_ring: vec![0; n],
        atom_in_cycle,
        bond_in_cycle,
        ..Default::default()
    };
    if rank == 0 {
        return info;
    }

    let mut candidates = horton_candidates(mol, &info.bond_in_cycle, &info.atom_in_cycle);
    candidates.sort_by(|a, b| a.1.len().cmp(&b.1.len()).then_with(|| a.1.cmp(&b.1)));

    let words = m.div_ceil(64);
    let mut basis: Vec<(usize, Vec<u64>)> = Vec::new(); // (pivot bit, reduced vector)
    for (atoms, bonds) in candidates {
        if info.rings.len() == rank {
            break;
        }
        let mut v = vec![0u64; words];
        for &b in &bonds {
            v[b / 64] |= 1 << (b % 64);
        }
        for (pivot, row) in &basis {
            if v[pivot / 64] >> (pivot % 64) & 1 == 1 {
                for (x, y) in v.iter_mut().zip(row) {
                    *x ^= y;
                }
            }
        }
        let Some(pivot) = first_bit(&v) else { continue };
        // keep rows fully reduced on their pivots
        for (_, row) in basis.iter_mut() {
            if row[pivot / 64] >> (pivot % 64) & 1 == 1 {
                for (x, y) in row.iter_mut().zip(&v) {
                    *x ^= y;
                }
            }
        }
        basis.push((pivot, v));
        info.rings.push(atoms);
        info.ring_bonds.push(bonds);
    }

    for (ring, bonds) in info.rings.iter().zip(&info.ring_bonds) {
        for &a in ring {
            info.atom_ring_count[a] += 1;
            let size = ring.len() as u8;
            if info.atom_min_ring[a] == 0 || size < info.atom_min_ring[a] {
                info.atom_min_ring[a] = size;
            }
        }
        for &b in bonds {
            info.bond_ring_count[b] += 1;
        }
    }
    info
}

fn first_bit(v: &[u64]) -> Option<usize> {
    v.iter()
        .enumerate()
        .find(|(_, w)| **w != 0)
        .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
}

/// Bridges via iterative Tarjan low-link.
fn find_bridges(mol: &MolGraph) -> Vec<bool> {
    let n = mol.atoms.len();
    let mut is_bridge = vec![false; mol.bonds.len()];
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut time = 0;
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        // (atom, parent bond, next neighbor cursor)
        let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
        disc[root] = time;
        low[root] = time;
        time += 1;
        while let Some(&mut (u, pb, ref mut cursor)) = stack.last_mut() {
            if *cursor < mol.adjacency[u].len() {
                let (v, b) = mol.adjacency[u][*cursor];
                *cursor += 1;
                if b == pb {
                    continue;
                }
                if disc[v] == usize::MAX {
                    disc[v] = time;
                    low[v] = time;
                    time += 1;
                    stack.push((v, b, 0));
                } else {
                    low[u] = low[u].min(disc[v]);
                }
            } else {
                stack.pop();
                if let Some(&(p, _, _)) = stack.last() {
                    low[p] = low[p].min(low[u]);
                    if low[u] > disc[p] {
                        is_bridge[pb] = true;
                    }
                }
            }
        }
    }
    is_bridge
}

type Candidate = (Vec<usize>, Vec<usize>);

fn horton_candidates(mol: &MolGraph, bond_in_cycle: &[bool], atom_in_cycle: &[bool]) -> Vec<Candidate> {
    let n = mol.atoms.len();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut out = Vec::new();
    for root in (0..n).filter(|&a| atom_in_cycle[a]) {
        // BFS over cyclic bonds
        let mut parent = vec![(usize::MAX, usize::MAX); n]; // (parent atom, bond)
        let mut dist = vec![usize::MAX; n];
        dist[root] = 0;
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &(v, b) in &mol.adjacency[u] {
                if bond_in_cycle[b] && dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    parent[v] = (u, b);
                    queue.push_back(v);
                }
            }
        }
        let path = |mut a: usize| -> (Vec<usize>, Vec<usize>) {
            let mut atoms = vec![a];
            let mut bonds = Vec::new();
            while a != root {
                let (p, b) = parent[a];
                bonds.push(b);
                atoms.push(p);
                a = p;
            }
            (atoms, bonds)
        };
        for (bi, b) in mol.bonds.iter().enumerate() {
            if !bond_in_cycle[bi] || dist[b.begin] == usize::MAX || dist[b.end] == usize::MAX {
                continue;
            }
            if parent[b.begin].1 == bi || parent[b.end].1 == bi {
                continue;
            }
            let (pa, ba) = path(b.begin);
            let (pb, bb) = path(b.end);
            // paths must meet only at the root
            let set_a: HashSet<usize> = pa.iter().copied().collect();
            if pb.iter().filter(|x| set_a.contains(x)).count() != 1 {
                continue;
            }
            let mut bonds: Vec<usize> = ba.iter().chain(bb.iter()).copied().collect();
            bonds.push(bi);
            bonds.sort_unstable();
            if !seen.insert(bonds.clone()) {
                continue;
            }
            // atoms in cyclic order: begin .. root .. end
            let mut atoms: Vec<usize> = pa.clone();
            atoms.extend(pb.iter().rev().skip(1));
            out.push((atoms, bonds));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use crate::chem::parse_smiles;

    fn ring_sizes(s: &str) -> Vec<usize> {
        let m = parse_smiles(s).unwrap();
        let mut v: Vec<usize> = m.ring_info().rings.iter().map(|r| r.len()).collect();
        v.sort();
        v
    }

    #[test]
    fn sssr_sizes() {
        assert_eq!(ring_sizes("CCO"), Vec::<usize>::new());
        assert_eq!(ring_sizes("c1ccccc1"), vec![6]);
        assert_eq!(ring_sizes("c1ccc2ccccc2c1"), vec![6, 6]);
        assert_eq!(ring_sizes("C1CC2CCC1C2"), vec![5, 5]); // norbornane
        assert_eq!(ring_sizes("C12C3C4C1C5C2C3C45"), vec![4, 4, 4, 4, 4]); // cubane
        assert_eq!(ring_sizes("C1CCC2(CC1)CCC2"), vec![4, 6]);
    }

    #[test]
    fn cyclic_bonds_exclude_linkers() {
        let m = parse_smiles("c1ccccc1CCc1ccccc1").unwrap();
        let ring_bonds = (0..m.bond_count()).filter(|&b| m.is_ring_bond(b)).count();
        assert_eq!(ring_bonds, 12);
        assert!(!m.is_ring_atom(6));
    }
}
