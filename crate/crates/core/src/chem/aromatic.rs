//! Kekulization of lowercase input and Hückel aromaticity perception.

use super::element;
use super::graph::{BondOrder, MolGraph};

/// Assigns alternating single/double orders to aromatic bonds and clears the
/// aromatic flags. On failure returns the atom that could not be satisfied.
pub(crate) fn kekulize(mol: &mut MolGraph) -> Result<(), (usize, String)> {
    let n = mol.atoms.len();
    if !mol.atoms.iter().any(|a| a.aromatic) && !mol.bonds.iter().any(|b| b.order == BondOrder::Aromatic) {
        return Ok(());
    }
    for i in 0..n {
        if mol.atoms[i].aromatic {
            if !mol.is_ring_atom(i) {
                return Err((i, "aromatic atom outside a ring".into()));
            }
            if !element::can_be_aromatic(mol.atoms[i].element) {
                return Err((i, format!("{} cannot be aromatic", mol.atoms[i].symbol())));
            }
        }
    }

    let need: Vec<bool> = (0..n).map(|i| needs_double(mol, i)).collect();
    // candidate bonds per atom
    let mut options: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (bi, b) in mol.bonds.iter().enumerate() {
        if b.order == BondOrder::Aromatic
            && mol.atoms[b.begin].aromatic
            && mol.atoms[b.end].aromatic
            && need[b.begin]
            && need[b.end]
        {
            options[b.begin].push((b.end, bi));
            options[b.end].push((b.begin, bi));
        }
    }
    let mut matched: Vec<Option<usize>> = vec![None; n];
    let pending: Vec<usize> = (0..n).filter(|&i| need[i]).collect();
    if !match_all(&pending, &options, &mut matched) {
        let bad = pending
            .iter()
            .copied()
            .find(|&i| options[i].is_empty())
            .or_else(|| pending.first().copied())
            .unwrap_or(0);
        return Err((bad, "cannot kekulize aromatic system".into()));
    }
    for (i, b) in mol.bonds.iter_mut().enumerate() {
        if b.order == BondOrder::Aromatic {
            b.kekule = if matched[b.begin] == Some(i) {
                BondOrder::Double
            } else {
                BondOrder::Single
            };
            b.order = b.kekule;
        }
    }
    for a in mol.atoms.iter_mut() {
        a.aromatic = false;
    }
    Ok(())
}

fn needs_double(mol: &MolGraph, i: usize) -> bool {
    let atom = &mol.atoms[i];
    if !atom.aromatic {
        return false;
    }
    let mut used = 0u8;
    for &(_, b) in &mol.adjacency[i] {
        let bond = &mol.bonds[b];
        if matches!(bond.order, BondOrder::Double | BondOrder::Triple) {
            return false;
        }
        used += bond.order.valence();
    }
    used += atom.explicit_h;
    match element::target_valence(atom.element, atom.formal_charge, used) {
        Some(t) => t > used,
        None => false,
    }
}

/// Backtracking perfect matching, always branching on the unmatched atom
/// with the fewest remaining choices.
fn match_all(pending: &[usize], options: &[Vec<(usize, usize)>], matched: &mut Vec<Option<usize>>) -> bool {
    let mut best: Option<(usize, usize)> = None;
    for &a in pending {
        if matched[a].is_some() {
            continue;
        }
        let free = options[a].iter().filter(|&&(nb, _)| matched[nb].is_none()).count();
        if free == 0 {
            return false;
        }
        if best.is_none_or(|(_, f)| free < f) {
            best = Some((a, free));
        }
    }
    let Some((a, _)) = best else { return true };
    for &(nb, b) in &options[a] {
        if matched[nb].is_some() {
            continue;
        }
        matched[a] = Some(b);
        matched[nb] = Some(b);
        if match_all(pending, options, matched) {
            return true;
        }
        matched[a] = None;
        matched[nb] = None;
    }
    false
}

/// Pi electrons an atom contributes to a ring, or `None` when it cannot be
/// part of an aromatic ring.
fn pi_electrons(mol: &MolGraph, i: usize) -> Option<u8> {
    let atom = &mol.atoms[i];
    if !element::can_be_aromatic(atom.element) || mol.connectivity(i) > 3 {
        return None;
    }
    let mut double = None;
    for &(nb, b) in &mol.adjacency[i] {
        match mol.bonds[b].kekule {
            BondOrder::Triple => return None,
            BondOrder::Double => {
                if double.is_some() {
                    return None;
                }
                double = Some((nb, b));
            }
            _ => {}
        }
    }
    if let Some((nb, b)) = double {
        if mol.is_ring_bond(b) {
            return Some(1);
        }
        return match mol.atoms[nb].element {
            7 | 8 | 16 if atom.element == 6 => Some(0),
            _ => None,
        };
    }
    let conn = mol.connectivity(i);
    match (atom.element, atom.formal_charge) {
        (7 | 15 | 33, 0) if conn == 3 => Some(2),
        (7 | 15 | 33, -1) if conn == 2 => Some(2),
        (8 | 16 | 34 | 52, 0) if conn == 2 => Some(2),
        (6, -1) => Some(2),
        (6, 1) => Some(0),
        _ => None,
    }
}

/// Fused systems with more rings than this only have pairs examined.
const MAX_SUBSET_RINGS: usize = 12;

/// Marks atoms and bonds of 4n+2 rings aromatic. Candidates are the SSSR
/// rings and the envelopes of connected groups of fused rings.
pub(crate) fn perceive(mol: &mut MolGraph) {
    let n = mol.atoms.len();
    let electrons: Vec<Option<u8>> = (0..n)
        .map(|i| if mol.is_ring_atom(i) { pi_electrons(mol, i) } else { None })
        .collect();
    let rings = &mol.ring_info.rings;
    let ring_bonds = &mol.ring_info.ring_bonds;
    // only rings whose atoms can all take part
    let eligible: Vec<usize> = (0..rings.len())
        .filter(|&r| rings[r].iter().all(|&a| electrons[a].is_some()))
        .collect();
    let fused = |r: usize, s: usize| ring_bonds[r].iter().any(|b| ring_bonds[s].contains(b));

    let mut aromatic_bonds: Vec<usize> = Vec::new();
    let mut try_group = |group: &[usize]| {
        let mut atoms: Vec<usize> = group.iter().flat_map(|&r| rings[r].iter().copied()).collect();
        atoms.sort_unstable();
        atoms.dedup();
        let total: u32 = atoms.iter().map(|&a| electrons[a].unwrap_or(0) as u32).sum();
        if total % 4 == 2 {
            aromatic_bonds.extend(group.iter().flat_map(|&r| ring_bonds[r].iter().copied()));
        }
    };

    // fused systems among eligible rings
    let mut system = vec![usize::MAX; eligible.len()];
    let mut systems: Vec<Vec<usize>> = Vec::new();
    for i in 0..eligible.len() {
        if system[i] != usize::MAX {
            continue;
        }
        system[i] = systems.len();
        let mut members = vec![i];
        let mut k = 0;
        while k < members.len() {
            let x = members[k];
            for j in 0..eligible.len() {
                if system[j] == usize::MAX && fused(eligible[x], eligible[j]) {
                    system[j] = systems.len();
                    members.push(j);
                }
            }
            k += 1;
        }
        systems.push(members.into_iter().map(|m| eligible[m]).collect());
    }

    for sys in &systems {
        for &r in sys {
            try_group(&[r]);
        }
        let k = sys.len();
        if k < 2 {
            continue;
        }
        if k > MAX_SUBSET_RINGS {
            for i in 0..k {
                for j in i + 1..k {
                    if fused(sys[i], sys[j]) {
                        try_group(&[sys[i], sys[j]]);
                    }
                }
            }
            continue;
        }
        for mask in 1u32..(1 << k) {
            if mask.count_ones() < 2 {
                continue;
            }
            let group: Vec<usize> = (0..k).filter(|&i| mask >> i & 1 == 1).map(|i| sys[i]).collect();
            if is_connected(&group, &fused) {
                try_group(&group);
            }
        }
    }
    for b in aromatic_bonds {
        let (x, y) = (mol.bonds[b].begin, mol.bonds[b].end);
        mol.bonds[b].order = BondOrder::Aromatic;
        mol.atoms[x].aromatic = true;
        mol.atoms[y].aromatic = true;
    }
}

fn is_connected(group: &[usize], fused: &impl Fn(usize, usize) -> bool) -> bool {
    let mut seen = vec![false; group.len()];
    seen[0] = true;
    let mut stack = vec![0];
    while let Some(i) = stack.pop() {
        for j in 0..group.len() {
            if !seen[j] && fused(group[i], group[j]) {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen.iter().all(|&s| s)
}
