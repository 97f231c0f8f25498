//! Attributed molecular graph.

use std::fmt;

use super::element::{self, AtomicNumber};
use super::rings::{self, RingInfo};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Contribution to the valence sum, with aromatic bonds counted as one.
    pub fn valence(self) -> u8 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub element: AtomicNumber,
    pub aromatic: bool,
    pub formal_charge: i8,
    /// Hydrogens written inside a bracket atom.
    pub explicit_h: u8,
    /// Hydrogens implied by the default valence of an organic-subset atom.
    pub implicit_h: u8,
    /// True when implicit hydrogens are derived from the valence table
    /// (unbracketed organic-subset atoms).
    pub(crate) implicit_from_valence: bool,
}

impl Atom {
    pub fn new(element: AtomicNumber) -> Self {
        Atom {
            element,
            aromatic: false,
            formal_charge: 0,
            explicit_h: 0,
            implicit_h: 0,
            implicit_from_valence: true,
        }
    }

    pub fn total_h(&self) -> u8 {
        self.explicit_h + self.implicit_h
    }

    pub fn symbol(&self) -> &'static str {
        element::symbol(self.element)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bond {
    pub begin: usize,
    pub end: usize,
    pub order: BondOrder,
    /// Localized order (single/double/triple) from kekulization; equals
    /// `order` for non-aromatic bonds.
    pub kekule: BondOrder,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if self.begin == atom {
            self.end
        } else {
            self.begin
        }
    }
}

/// A hydrogen-suppressed molecular graph.
#[derive(Debug, Clone, Default)]
pub struct MolGraph {
    pub(crate) atoms: Vec<Atom>,
    pub(crate) bonds: Vec<Bond>,
    /// Per atom: (neighbor, bond index), in bond insertion order.
    pub(crate) adjacency: Vec<Vec<(usize, usize)>>,
    pub(crate) ring_info: RingInfo,
}

impl MolGraph {
    /// Assembles a graph and derives ring information. Atoms and bonds are
    /// taken as-is; no valence or aromaticity processing happens here.
    pub(crate) fn from_parts(atoms: Vec<Atom>, bonds: Vec<Bond>) -> Self {
        let mut adjacency = vec![Vec::new(); atoms.len()];
        for (i, b) in bonds.iter().enumerate() {
            adjacency[b.begin].push((b.end, i));
            adjacency[b.end].push((b.begin, i));
        }
        let mut mol = MolGraph {
            atoms,
            bonds,
            adjacency,
            ring_info: RingInfo::default(),
        };
        mol.ring_info = rings::perceive(&mol);
        mol
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn atom(&self, i: usize) -> &Atom {
        &self.atoms[i]
    }

    pub fn bond(&self, i: usize) -> &Bond {
        &self.bonds[i]
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn neighbors(&self, atom: usize) -> &[(usize, usize)] {
        &self.adjacency[atom]
    }

    /// Number of heavy-atom neighbors.
    pub fn degree(&self, atom: usize) -> usize {
        self.adjacency[atom].len()
    }

    /// Heavy neighbors plus hydrogens.
    pub fn connectivity(&self, atom: usize) -> usize {
        self.degree(atom) + self.atoms[atom].total_h() as usize
    }

    /// Sum of bond orders with aromatic bonds at their kekulé order, plus
    /// hydrogens.
    pub fn total_valence(&self, atom: usize) -> u8 {
        let bonds: u8 = self.adjacency[atom]
            .iter()
            .map(|&(_, b)| self.bonds[b].kekule.valence())
            .sum();
        bonds + self.atoms[atom].total_h()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adjacency[a]
            .iter()
            .find(|&&(n, _)| n == b)
            .map(|&(_, bi)| bi)
    }

    pub fn ring_info(&self) -> &RingInfo {
        &self.ring_info
    }

    pub fn is_ring_atom(&self, atom: usize) -> bool {
        self.ring_info.atom_in_cycle[atom]
    }

    pub fn is_ring_bond(&self, bond: usize) -> bool {
        self.ring_info.bond_in_cycle[bond]
    }

    /// Connected components as sorted atom lists, ordered by first atom.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.atoms.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut i = 0;
            while i < comp.len() {
                let a = comp[i];
                for &(nb, _) in &self.adjacency[a] {
                    if !seen[nb] {
                        seen[nb] = true;
                        comp.push(nb);
                    }
                }
                i += 1;
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn fragment_count(&self) -> usize {
        self.components().len()
    }

    pub fn is_single_fragment(&self) -> bool {
        self.fragment_count() == 1
    }

    pub fn heavy_atom_count(&self) -> usize {
        self.atoms.iter().filter(|a| a.element != 1).count()
    }

    /// Returns a copy with atoms reordered so that new index `i` holds old
    /// atom `order[i]`. Bonds are re-emitted in the order given by the new
    /// atom indices.
    pub fn permuted(&self, order: &[usize]) -> MolGraph {
        assert_eq!(order.len(), self.atoms.len());
        let mut new_index = vec![0usize; order.len()];
        for (new, &old) in order.iter().enumerate() {
            new_index[old] = new;
        }
        let atoms = order.iter().map(|&old| self.atoms[old].clone()).collect();
        let mut bonds: Vec<Bond> = self
            .bonds
            .iter()
            .map(|b| {
                let (x, y) = (new_index[b.begin], new_index[b.end]);
                Bond {
                    begin: x.min(y),
                    end: x.max(y),
                    order: b.order,
                    kekule: b.kekule,
                }
            })
            .collect();
        bonds.sort_by_key(|b| (b.begin, b.end));
        MolGraph::from_parts(atoms, bonds)
    }

    /// Induced subgraph on `keep` (sorted, deduplicated). Organic-subset atoms
    /// get their implicit hydrogens recomputed; other atoms receive explicit
    /// hydrogens for every bond they lose.
    pub(crate) fn induced_subgraph(&self, keep: &[usize]) -> MolGraph {
        let mut map = vec![usize::MAX; self.atoms.len()];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let mut atoms: Vec<Atom> = keep.iter().map(|&i| self.atoms[i].clone()).collect();
        let mut bonds = Vec::new();
        for b in &self.bonds {
            let (x, y) = (map[b.begin], map[b.end]);
            if x != usize::MAX && y != usize::MAX {
                bonds.push(Bond {
                    begin: x,
                    end: y,
                    order: b.order,
                    kekule: b.kekule,
                });
            } else if x != usize::MAX || y != usize::MAX {
                let kept = if x != usize::MAX { x } else { y };
                let atom = &mut atoms[kept];
                if !atom.implicit_from_valence {
                    atom.explicit_h += b.kekule.valence();
                }
            }
        }
        let mut mol = MolGraph::from_parts(atoms, bonds);
        for i in 0..mol.atoms.len() {
            if mol.atoms[i].implicit_from_valence {
                let used: u8 = mol.adjacency[i]
                    .iter()
                    .map(|&(_, b)| mol.bonds[b].kekule.valence())
                    .sum();
                let a = &mol.atoms[i];
                let target = element::target_valence(a.element, a.formal_charge, used).unwrap_or(used);
                mol.atoms[i].implicit_h = target - used;
            }
        }
        mol
    }

    /// Molecular formula in Hill order, e.g. `C2H6O`.
    pub fn formula(&self) -> String {
        let mut counts = std::collections::BTreeMap::<&str, usize>::new();
        let mut h = 0usize;
        for a in &self.atoms {
            if a.element == 1 {
                h += 1;
            } else {
                *counts.entry(a.symbol()).or_default() += 1;
            }
            h += a.total_h() as usize;
        }
        let mut out = String::new();
        let mut push = |sym: &str, n: usize| {
            if n > 0 {
                out.push_str(sym);
                if n > 1 {
                    out.push_str(&n.to_string());
                }
            }
        };
        if let Some(c) = counts.remove("C") {
            push("C", c);
            push("H", h);
            h = 0;
        }
        let rest: Vec<_> = counts.into_iter().collect();
        let mut all: Vec<(&str, usize)> = rest;
        if h > 0 {
            all.push(("H", h));
            all.sort();
        }
        for (s, n) in all {
            push(s, n);
        }
        out
    }
}

impl fmt::Display for MolGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::canonical_smiles(self))
    }
}
