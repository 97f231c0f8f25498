//! Canonical atom ranking and canonical SMILES output.

use super::element;
use super::graph::{BondOrder, MolGraph};

/// Graph-invariant classes after iterative refinement; symmetry-equivalent
/// atoms share a class.
pub fn symmetry_classes(mol: &MolGraph) -> Vec<usize> {
    let keys: Vec<(u8, i8, usize, u8, bool, bool)> = (0..mol.atom_count())
        .map(|i| {
            let a = mol.atom(i);
            (a.element, a.formal_charge, mol.degree(i), a.total_h(), mol.is_ring_atom(i), a.aromatic)
        })
        .collect();
    let mut ranks = dense_ranks(&keys);
    refine(mol, &mut ranks);
    ranks
}

/// Canonical rank for every atom, a permutation of `0..n`.
pub fn canonical_ranks(mol: &MolGraph) -> Vec<usize> {
    let n = mol.atom_count();
    let mut ranks = symmetry_classes(mol);
    loop {
        let classes = distinct(&ranks);
        if classes == n {
            break;
        }
        // break the lowest tie by lifting its first member
        let mut counts = vec![0usize; n];
        for &r in &ranks {
            counts[r] += 1;
        }
        let tied = (0..n).find(|&r| counts[r] > 1).expect("a tie exists");
        let pick = (0..n).find(|&i| ranks[i] == tied).expect("tied atom");
        for (i, r) in ranks.iter_mut().enumerate() {
            *r = *r * 2 + usize::from(i != pick);
        }
        let compact = dense_ranks(&ranks);
        ranks = compact;
        refine(mol, &mut ranks);
    }
    ranks
}

fn distinct(ranks: &[usize]) -> usize {
    let mut v = ranks.to_vec();
    v.sort_unstable();
    v.dedup();
    v.len()
}

fn dense_ranks<K: Ord + Clone>(keys: &[K]) -> Vec<usize> {
    let mut sorted: Vec<K> = keys.to_vec();
    sorted.sort();
    sorted.dedup();
    keys.iter()
        .map(|k| sorted.binary_search(k).expect("key present"))
        .collect()
}

fn refine(mol: &MolGraph, ranks: &mut Vec<usize>) {
    let mut classes = distinct(ranks);
    loop {
        let keys: Vec<(usize, Vec<(usize, u8)>)> = (0..mol.atom_count())
            .map(|i| {
                let mut nb: Vec<(usize, u8)> = mol
                    .neighbors(i)
                    .iter()
                    .map(|&(j, b)| (ranks[j], mol.bond(b).order.code()))
                    .collect();
                nb.sort_unstable();
                (ranks[i], nb)
            })
            .collect();
        let next = dense_ranks(&keys);
        let c = distinct(&next);
        *ranks = next;
        if c == classes {
            break;
        }
        classes = c;
    }
}

/// Writes the canonical SMILES of a molecule. Equal graphs give equal
/// strings regardless of input atom order.
pub fn canonical_smiles(mol: &MolGraph) -> String {
    if mol.is_empty() {
        return String::new();
    }
    let ranks = canonical_ranks(mol);
    let mut comps = mol.components();
    comps.sort_by_key(|c| c.iter().map(|&a| ranks[a]).min());
    let mut parts = Vec::with_capacity(comps.len());
    for comp in comps {
        let start = *comp.iter().min_by_key(|&&a| ranks[a]).expect("non-empty component");
        parts.push(Writer::new(mol, &ranks).write(start));
    }
    parts.join(".")
}

struct Writer<'a> {
    mol: &'a MolGraph,
    ranks: &'a [usize],
    order: Vec<usize>,
    tree_bond: Vec<bool>,
    children: Vec<Vec<(usize, usize)>>,
    /// per atom: ring-closure bonds it opens, as (partner, bond)
    opens: Vec<Vec<(usize, usize)>>,
    closes: Vec<Vec<(usize, usize)>>,
    digit_of_bond: Vec<Option<usize>>,
    digits_in_use: Vec<bool>,
    out: String,
}

impl<'a> Writer<'a> {
    fn new(mol: &'a MolGraph, ranks: &'a [usize]) -> Self {
        let n = mol.atom_count();
        Writer {
            mol,
            ranks,
            order: vec![usize::MAX; n],
            tree_bond: vec![false; mol.bond_count()],
            children: vec![Vec::new(); n],
            opens: vec![Vec::new(); n],
            closes: vec![Vec::new(); n],
            digit_of_bond: vec![None; mol.bond_count()],
            digits_in_use: vec![false; 100],
            out: String::new(),
        }
    }

    fn sorted_neighbors(&self, a: usize) -> Vec<(usize, usize)> {
        let mut nb = self.mol.neighbors(a).to_vec();
        nb.sort_by_key(|&(j, _)| self.ranks[j]);
        nb
    }

    fn write(mut self, start: usize) -> String {
        self.spanning_tree(start);
        self.emit(start, None);
        self.out
    }

    fn spanning_tree(&mut self, start: usize) {
        let mut counter = 0;
        self.order[start] = counter;
        counter += 1;
        let mut stack: Vec<(usize, Vec<(usize, usize)>, usize)> = vec![(start, self.sorted_neighbors(start), 0)];
        while let Some((u, nbs, cursor)) = stack.last_mut() {
            let u = *u;
            if *cursor == nbs.len() {
                stack.pop();
                continue;
            }
            let (v, b) = nbs[*cursor];
            *cursor += 1;
            if self.tree_bond[b] {
                continue;
            }
            if self.order[v] == usize::MAX {
                self.order[v] = counter;
                counter += 1;
                self.tree_bond[b] = true;
                self.children[u].push((v, b));
                let next = self.sorted_neighbors(v);
                stack.push((v, next, 0));
            } else if self.order[v] < self.order[u] {
                self.opens[v].push((u, b));
                self.closes[u].push((v, b));
            }
        }
        for a in 0..self.opens.len() {
            let ranks = self.ranks;
            let order = &self.order;
            self.opens[a].sort_by_key(|&(p, _)| (order[p], ranks[p]));
            self.closes[a].sort_by_key(|&(p, _)| order[p]);
        }
    }

    fn emit(&mut self, a: usize, via: Option<usize>) {
        if let Some(b) = via {
            let s = self.bond_symbol(b);
            self.out.push_str(s);
        }
        let atom = self.atom_text(a);
        self.out.push_str(&atom);

        // allocate opening digits before releasing closing ones so a digit
        // is never closed and reopened on the same atom
        let opens = self.opens[a].clone();
        let mut opened = Vec::with_capacity(opens.len());
        for &(_, b) in &opens {
            let d = (1..100).find(|&d| !self.digits_in_use[d]).expect("fewer than 99 open rings");
            self.digits_in_use[d] = true;
            self.digit_of_bond[b] = Some(d);
            opened.push((b, d));
        }
        for &(_, b) in &self.closes[a].clone() {
            let d = self.digit_of_bond[b].expect("ring closure was opened");
            self.digits_in_use[d] = false;
            push_digit(&mut self.out, d);
        }
        for (b, d) in opened {
            let s = self.bond_symbol(b);
            self.out.push_str(s);
            push_digit(&mut self.out, d);
        }

        let children = self.children[a].clone();
        let last = children.len().saturating_sub(1);
        for (i, &(c, b)) in children.iter().enumerate() {
            if i < last {
                self.out.push('(');
                self.emit(c, Some(b));
                self.out.push(')');
            } else {
                self.emit(c, Some(b));
            }
        }
    }

    fn bond_symbol(&self, b: usize) -> &'static str {
        let bond = self.mol.bond(b);
        match bond.order {
            BondOrder::Double => "=",
            BondOrder::Triple => "#",
            BondOrder::Aromatic => "",
            BondOrder::Single => {
                if self.mol.atom(bond.begin).aromatic && self.mol.atom(bond.end).aromatic {
                    "-"
                } else {
                    ""
                }
            }
        }
    }

    fn atom_text(&self, i: usize) -> String {
        let atom = self.mol.atom(i);
        let sym = if atom.aromatic {
            atom.symbol().to_ascii_lowercase()
        } else {
            atom.symbol().to_string()
        };
        if !needs_bracket(self.mol, i) {
            return sym;
        }
        let mut s = format!("[{sym}");
        match atom.total_h() {
            0 => {}
            1 => s.push('H'),
            h => s.push_str(&format!("H{h}")),
        }
        match atom.formal_charge {
            0 => {}
            1 => s.push('+'),
            -1 => s.push('-'),
            c if c > 0 => s.push_str(&format!("+{c}")),
            c => s.push_str(&format!("-{}", -c)),
        }
        s.push(']');
        s
    }
}

fn push_digit(out: &mut String, d: usize) {
    if d < 10 {
        out.push(char::from(b'0' + d as u8));
    } else {
        out.push_str(&format!("%{d}"));
    }
}

/// True when the atom cannot be written in the organic subset without the
/// reader inferring a different hydrogen count or kekulé pattern.
fn needs_bracket(mol: &MolGraph, i: usize) -> bool {
    let atom = mol.atom(i);
    if atom.formal_charge != 0 || !element::is_organic_subset(atom.element) {
        return true;
    }
    if atom.aromatic && !matches!(atom.element, 5 | 6 | 7 | 8 | 15 | 16) {
        return true;
    }
    let mut used = 0u8;
    let mut explicit_double = false;
    let mut kekule_double = false;
    for &(_, b) in mol.neighbors(i) {
        let bond = mol.bond(b);
        used += bond.order.valence();
        if matches!(bond.order, BondOrder::Double | BondOrder::Triple) {
            explicit_double = true;
        }
        if bond.order == BondOrder::Aromatic && bond.kekule == BondOrder::Double {
            kekule_double = true;
        }
    }
    let Some(target) = element::target_valence(atom.element, 0, used) else {
        return true;
    };
    let reader_needs = atom.aromatic && !explicit_double && target > used;
    let reader_h = if reader_needs { target - used - 1 } else { target - used };
    reader_needs != kekule_double || reader_h != atom.total_h()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    fn canon(s: &str) -> String {
        canonical_smiles(&parse_smiles(s).unwrap())
    }

    #[test]
    fn equivalent_inputs_agree() {
        assert_eq!(canon("OCC"), canon("CCO"));
        assert_eq!(canon("C1=CC=CC=C1"), canon("c1ccccc1"));
        assert_eq!(canon("c1ccccc1C(=O)O"), canon("OC(=O)c1ccccc1"));
        assert_eq!(canon("CC(=O)Oc1ccccc1C(=O)O"), canon("OC(=O)c1ccccc1OC(C)=O"));
        assert_eq!(canon("[CH4]"), canon("C"));
        assert_eq!(canon("c1cc[nH]c1"), canon("C1=CNC=C1"));
    }

    #[test]
    fn output_reparses_to_itself() {
        for s in [
            "CCO",
            "c1ccc2[nH]ccc2c1",
            "O=c1cccc[nH]1",
            "c1ccccc1-c1ccccc1",
            "C[N+](C)(C)C.[Cl-]",
            "C1CC2CCC1C2",
            "C12C3C4C1C5C2C3C45",
            "CC(C)Cc1ccc(cc1)C(C)C(=O)O",
            "Cn1cnc2c1c(=O)n(C)c(=O)n2C",
            "c1ccc2c(c1)ccc1ccccc12",
            "O=S(=O)(N)c1ccc(Cl)cc1",
        ] {
            let c = canon(s);
            assert_eq!(canon(&c), c, "input {s}");
        }
    }

    #[test]
    fn pyrrole_nitrogen_is_bracketed() {
        assert!(canon("c1cc[nH]c1").contains("[nH]"));
        assert!(!canon("c1ccncc1").contains('['));
    }

    #[test]
    fn ranks_are_a_permutation() {
        let m = parse_smiles("CC(C)(C)c1ccccc1").unwrap();
        let mut r = canonical_ranks(&m);
        r.sort_unstable();
        assert_eq!(r, (0..m.atom_count()).collect::<Vec<_>>());
    }
}
