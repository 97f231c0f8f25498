//! Query graph types and predicate evaluation.

use crate::chem::{BondOrder, MolGraph};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AtomPrimitive {
    Any,
    AtomicNumber(u8),
    /// Element with the aromaticity implied by the symbol's case.
    Element { z: u8, aromatic: bool },
    Aromatic,
    Aliphatic,
    Charge(i8),
    /// Heavy-atom neighbours (`D`).
    Degree(u8),
    /// Total hydrogens (`H`).
    TotalH(u8),
    /// Total connections including hydrogens (`X`).
    Connectivity(u8),
    /// Total bond order including hydrogens (`v`).
    Valence(u8),
    /// Member of any ring (`R` or `r` without a number).
    InRing,
    /// Member of exactly n SSSR rings (`Rn`, `R0` = acyclic).
    RingCount(u8),
    /// Smallest SSSR ring containing the atom has this size (`rN`).
    SmallestRing(u8),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AtomExpr {
    Prim(AtomPrimitive),
    Not(Box<AtomExpr>),
    And(Vec<AtomExpr>),
    Or(Vec<AtomExpr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BondPrimitive {
    Single,
    Double,
    Triple,
    Aromatic,
    Any,
    Ring,
    /// Unwritten bond: single or aromatic.
    Implicit,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BondExpr {
    Prim(BondPrimitive),
    Not(Box<BondExpr>),
    And(Vec<BondExpr>),
    Or(Vec<BondExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryBond {
    pub begin: usize,
    pub end: usize,
    pub expr: BondExpr,
}

/// Parsed SMARTS pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryGraph {
    pub name: String,
    pub smarts: String,
    pub atoms: Vec<AtomExpr>,
    pub bonds: Vec<QueryBond>,
    pub(crate) adjacency: Vec<Vec<(usize, usize)>>,
}

impl QueryGraph {
    pub(crate) fn new(smarts: &str, atoms: Vec<AtomExpr>, bonds: Vec<QueryBond>) -> Self {
        let mut adjacency = vec![Vec::new(); atoms.len()];
        for (i, b) in bonds.iter().enumerate() {
            adjacency[b.begin].push((b.end, i));
            adjacency[b.end].push((b.begin, i));
        }
        QueryGraph {
            name: String::new(),
            smarts: smarts.to_string(),
            atoms,
            bonds,
            adjacency,
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }
}

impl AtomPrimitive {
    pub fn matches(&self, mol: &MolGraph, i: usize) -> bool {
        let a = mol.atom(i);
        match *self {
            AtomPrimitive::Any => true,
            AtomPrimitive::AtomicNumber(z) => a.element == z,
            AtomPrimitive::Element { z, aromatic } => a.element == z && a.aromatic == aromatic,
            AtomPrimitive::Aromatic => a.aromatic,
            AtomPrimitive::Aliphatic => !a.aromatic,
            AtomPrimitive::Charge(c) => a.formal_charge == c,
            AtomPrimitive::Degree(d) => mol.degree(i) == d as usize,
            AtomPrimitive::TotalH(h) => a.total_h() == h,
            AtomPrimitive::Connectivity(x) => mol.connectivity(i) == x as usize,
            AtomPrimitive::Valence(v) => mol.total_valence(i) == v,
            AtomPrimitive::InRing => mol.is_ring_atom(i),
            AtomPrimitive::RingCount(0) => !mol.is_ring_atom(i),
            AtomPrimitive::RingCount(n) => mol.ring_info().atom_ring_count[i] == n,
            AtomPrimitive::SmallestRing(n) => mol.ring_info().atom_min_ring[i] == n,
        }
    }
}

impl AtomExpr {
    pub fn matches(&self, mol: &MolGraph, i: usize) -> bool {
        match self {
            AtomExpr::Prim(p) => p.matches(mol, i),
            AtomExpr::Not(e) => !e.matches(mol, i),
            AtomExpr::And(es) => es.iter().all(|e| e.matches(mol, i)),
            AtomExpr::Or(es) => es.iter().any(|e| e.matches(mol, i)),
        }
    }
}

impl BondExpr {
    pub fn matches(&self, mol: &MolGraph, b: usize) -> bool {
        match self {
            BondExpr::Prim(p) => {
                let order = mol.bond(b).order;
                match p {
                    BondPrimitive::Single => order == BondOrder::Single,
                    BondPrimitive::Double => order == BondOrder::Double,
                    BondPrimitive::Triple => order == BondOrder::Triple,
                    BondPrimitive::Aromatic => order == BondOrder::Aromatic,
                    BondPrimitive::Any => true,
                    BondPrimitive::Ring => mol.is_ring_bond(b),
                    BondPrimitive::Implicit => matches!(order, BondOrder::Single | BondOrder::Aromatic),
                }
            }
            BondExpr::Not(e) => !e.matches(mol, b),
            BondExpr::And(es) => es.iter().all(|e| e.matches(mol, b)),
            BondExpr::Or(es) => es.iter().any(|e| e.matches(mol, b)),
        }
    }
}
