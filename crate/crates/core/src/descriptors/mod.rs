//! Physicochemical properties, QED and synthetic accessibility.

mod crippen;
mod qed;
mod sa;
mod tpsa;

use std::collections::BTreeSet;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::chem::{element, BondOrder, MolGraph};
use crate::smarts::{has_match, parse_smarts, QueryGraph};

pub use crippen::{alogp, atom_contributions as alogp_contributions, atom_type as alogp_atom_type};
pub use qed::{desirabilities, qed, qed_with, AdsParams, QedWeights};
pub use sa::{
    bridgehead_atom_count, build_fragment_table, sa_breakdown, sa_score, sa_score_with, spiro_atom_count,
    FragmentTable, FragmentTableError, SaBreakdown, SA_RADIUS, UNKNOWN_FRAGMENT,
};
pub use tpsa::{atom_contribution as tpsa_contribution, tpsa};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DescriptorError {
    #[error("molecule has {0} fragments; descriptors need a single fragment")]
    MultiFragment(usize),
    #[error("empty molecule")]
    Empty,
}

/// The eight QED inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropertyVector {
    pub mw: f64,
    pub alogp: f64,
    pub hba: u32,
    pub hbd: u32,
    pub psa: f64,
    pub rotb: u32,
    pub arom: u32,
    pub alerts: u32,
}

impl PropertyVector {
    pub fn as_array(&self) -> [f64; 8] {
        [
            self.mw,
            self.alogp,
            self.hba as f64,
            self.hbd as f64,
            self.psa,
            self.rotb as f64,
            self.arom as f64,
            self.alerts as f64,
        ]
    }
}

pub fn compute_properties(mol: &MolGraph) -> Result<PropertyVector, DescriptorError> {
    if mol.is_empty() {
        return Err(DescriptorError::Empty);
    }
    let frags = mol.fragment_count();
    if frags > 1 {
        return Err(DescriptorError::MultiFragment(frags));
    }
    Ok(PropertyVector {
        mw: molecular_weight(mol),
        alogp: alogp(mol),
        hba: hba(mol),
        hbd: hbd(mol),
        psa: tpsa(mol),
        rotb: rotatable_bonds(mol),
        arom: aromatic_ring_count(mol),
        alerts: alert_count(mol),
    })
}

/// Sum in sorted order, so per-atom totals do not depend on atom numbering.
pub(crate) fn order_free_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.into_iter().collect();
    v.sort_by(f64::total_cmp);
    v.into_iter().sum()
}

/// Average molecular weight including implicit hydrogens.
pub fn molecular_weight(mol: &MolGraph) -> f64 {
    let h = element::atomic_mass(1);
    order_free_sum(
        mol.atoms()
            .iter()
            .map(|a| element::atomic_mass(a.element) + a.total_h() as f64 * h),
    )
}

/// Neutral three-connected trivalent N that is not bonded to a C=O or S=O.
fn is_amine_like_acceptor(mol: &MolGraph, i: usize) -> bool {
    let a = mol.atom(i);
    if a.element != 7 || a.aromatic || a.formal_charge != 0 || mol.connectivity(i) != 3 || mol.total_valence(i) != 3 {
        return false;
    }
    !mol.neighbors(i).iter().any(|&(n, b)| {
        let x = mol.atom(n);
        matches!(mol.bond(b).order, BondOrder::Single | BondOrder::Aromatic)
            && !x.aromatic
            && matches!(x.element, 6 | 16)
            && mol.neighbors(n).iter().any(|&(m, b2)| {
                m != i && mol.bond(b2).order == BondOrder::Double && mol.atom(m).element == 8 && !mol.atom(m).aromatic
            })
    })
}

const ACCEPTOR_SMARTS: &[&str] = &[
    "[oH0;X2]",
    "[OH1;X2;v2]",
    "[OH0;X2;v2]",
    "[OH0;X1;v2]",
    "[O-;X1]",
    "[SH0;X2;v2]",
    "[SH0;X1;v2]",
    "[S-;X1]",
    "[nH0;X2]",
    "[NH0;X1;v3]",
];

fn acceptor_queries() -> &'static [QueryGraph] {
    static Q: OnceLock<Vec<QueryGraph>> = OnceLock::new();
    Q.get_or_init(|| ACCEPTOR_SMARTS.iter().map(|s| parse_smarts(s).expect("acceptor pattern")).collect())
}

/// Acceptor count: atoms matching each acceptor class, summed over classes.
pub fn hba(mol: &MolGraph) -> u32 {
    let mut n = 0;
    for i in 0..mol.atom_count() {
        n += acceptor_queries().iter().filter(|q| q.atoms[0].matches(mol, i)).count() as u32;
        n += is_amine_like_acceptor(mol, i) as u32;
    }
    n
}

/// Donor count: N–H, O–H, S–H and aromatic n–H atoms.
pub fn hbd(mol: &MolGraph) -> u32 {
    mol.atoms()
        .iter()
        .enumerate()
        .filter(|&(i, a)| {
            let h = a.total_h();
            let v = mol.total_valence(i);
            match (a.element, a.aromatic) {
                (7, false) => h > 0 && ((v == 3) || (a.formal_charge == 1 && v == 4)),
                (8 | 16, false) => h == 1 && a.formal_charge == 0,
                (7, true) => h == 1 && a.formal_charge == 0,
                _ => false,
            }
        })
        .count() as u32
}

fn has_triple(mol: &MolGraph, i: usize) -> bool {
    mol.neighbors(i).iter().any(|&(_, b)| mol.bond(b).order == BondOrder::Triple)
}

/// Central atom of CF3, CCl3, CBr3 or a tert-butyl group.
fn is_symmetric_terminus(mol: &MolGraph, i: usize) -> bool {
    let a = mol.atom(i);
    if a.element != 6 || a.aromatic {
        return false;
    }
    [9u8, 17, 35].iter().any(|&z| mol.neighbors(i).iter().filter(|&&(n, _)| mol.atom(n).element == z).count() >= 3)
        || mol
            .neighbors(i)
            .iter()
            .filter(|&&(n, _)| {
                let x = mol.atom(n);
                x.element == 6 && !x.aromatic && x.total_h() == 3
            })
            .count()
            >= 3
}

fn rotor_end(mol: &MolGraph, i: usize) -> bool {
    let a = mol.atom(i);
    !has_triple(mol, i)
        && mol.degree(i) != 1
        && !is_symmetric_terminus(mol, i)
        && !(a.element == 6 && !a.aromatic && a.total_h() == 3)
}

fn is_cd3(mol: &MolGraph, i: usize) -> bool {
    let a = mol.atom(i);
    a.element == 6 && !a.aromatic && mol.degree(i) == 3
}

/// Aliphatic C of degree 3 double-bonded to an atom accepted by `partner`.
fn has_double_to(mol: &MolGraph, c: usize, partner: impl Fn(usize) -> bool) -> bool {
    mol.neighbors(c)
        .iter()
        .any(|&(n, b)| mol.bond(b).order == BondOrder::Double && partner(n))
}

fn is_nos_aliphatic(mol: &MolGraph, i: usize) -> bool {
    let a = mol.atom(i);
    !a.aromatic && matches!(a.element, 7 | 8 | 16)
}

/// `[#7,O,S!D1]`
fn is_amide_hetero(mol: &MolGraph, i: usize) -> bool {
    let a = mol.atom(i);
    a.element == 7 || (!a.aromatic && a.element == 8) || (!a.aromatic && a.element == 16 && mol.degree(i) != 1)
}

fn is_n_plus(mol: &MolGraph, i: usize) -> bool {
    let a = mol.atom(i);
    a.element == 7 && !a.aromatic && a.formal_charge == 1
}

/// False when atom `i` is the carbonyl-like carbon or heteroatom of an
/// amide, ester, thioamide or amidine-type bond leaving through an acyclic
/// single bond.
fn amide_ok(mol: &MolGraph, i: usize) -> bool {
    let acyclic_single = |x: usize| {
        mol.neighbors(x)
            .iter()
            .filter(move |&&(_, b)| mol.bond(b).order == BondOrder::Single && !mol.is_ring_bond(b))
            .map(|&(n, _)| n)
    };
    if is_cd3(mol, i) {
        if has_double_to(mol, i, |n| is_nos_aliphatic(mol, n)) && acyclic_single(i).any(|n| is_amide_hetero(mol, n)) {
            return false;
        }
        if has_double_to(mol, i, |n| is_n_plus(mol, n))
            && acyclic_single(i).any(|n| mol.atom(n).element == 7 && mol.degree(n) != 1)
        {
            return false;
        }
    }
    if is_amide_hetero(mol, i)
        && acyclic_single(i).any(|c| is_cd3(mol, c) && has_double_to(mol, c, |n| is_nos_aliphatic(mol, n)))
    {
        return false;
    }
    if mol.atom(i).element == 7
        && mol.degree(i) != 1
        && acyclic_single(i).any(|c| is_cd3(mol, c) && has_double_to(mol, c, |n| is_n_plus(mol, n)))
    {
        return false;
    }
    true
}

/// Rotatable bonds, strict definition: acyclic single bonds between
/// non-terminal atoms, excluding triple-bonded atoms, CX3/tert-butyl
/// termini, methyls and amide-like C–N/O/S bonds.
pub fn rotatable_bonds(mol: &MolGraph) -> u32 {
    mol.bonds()
        .iter()
        .enumerate()
        .filter(|&(b, bond)| {
            if mol.is_ring_bond(b) || !matches!(bond.order, BondOrder::Single | BondOrder::Aromatic) {
                return false;
            }
            let (x, y) = (bond.begin, bond.end);
            rotor_end(mol, x) && rotor_end(mol, y) && (amide_ok(mol, x) || amide_ok(mol, y))
        })
        .count() as u32
}

/// Rings left after deleting every aliphatic ring atom that has a
/// non-aromatic neighbour over a single bond, counted as the cycle rank of
/// the remainder.
pub fn aromatic_ring_count(mol: &MolGraph) -> u32 {
    let n = mol.atom_count();
    let removed: Vec<bool> = (0..n)
        .map(|i| {
            !mol.atom(i).aromatic
                && mol.is_ring_atom(i)
                && mol.neighbors(i).iter().any(|&(nb, b)| {
                    !mol.atom(nb).aromatic && matches!(mol.bond(b).order, BondOrder::Single | BondOrder::Aromatic)
                })
        })
        .collect();
    let kept = removed.iter().filter(|&&r| !r).count();
    let edges = mol.bonds().iter().filter(|b| !removed[b.begin] && !removed[b.end]).count();
    // components of the remainder
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut components = kept;
    for b in mol.bonds() {
        if removed[b.begin] || removed[b.end] {
            continue;
        }
        let (ra, rb) = (find(&mut parent, b.begin), find(&mut parent, b.end));
        if ra != rb {
            parent[ra] = rb;
            components -= 1;
        }
    }
    (edges + components - kept) as u32
}

struct Alerts {
    ids: Vec<String>,
    queries: Vec<(usize, QueryGraph)>,
}

fn alerts() -> &'static Alerts {
    static A: OnceLock<Alerts> = OnceLock::new();
    A.get_or_init(|| {
        let mut ids: Vec<String> = Vec::new();
        let mut queries = Vec::new();
        for line in include_str!("../../data/qed_alerts.tsv").lines() {
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let (id, smarts) = line.split_once('\t').expect("alert line");
            let k = match ids.iter().position(|x| x == id) {
                Some(k) => k,
                None => {
                    ids.push(id.to_string());
                    ids.len() - 1
                }
            };
            queries.push((k, parse_smarts(smarts).expect("alert pattern").with_name(id)));
        }
        Alerts { ids, queries }
    })
}

/// Ids of the structural alerts present in the molecule.
pub fn matched_alerts(mol: &MolGraph) -> Vec<&'static str> {
    let a = alerts();
    let hit: BTreeSet<usize> = a.queries.iter().filter(|(_, q)| has_match(mol, q)).map(|(k, _)| *k).collect();
    hit.into_iter().map(|k| a.ids[k].as_str()).collect()
}

pub fn alert_count(mol: &MolGraph) -> u32 {
    matched_alerts(mol).len() as u32
}

/// Number of distinct structural alerts in the bundled list.
pub fn alert_catalogue_size() -> usize {
    alerts().ids.len()
}

/// QED and SA together.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrugScores {
    pub qed: f64,
    pub sa: f64,
}

pub fn drug_scores(mol: &MolGraph, weights: QedWeights) -> Result<DrugScores, DescriptorError> {
    let props = compute_properties(mol)?;
    Ok(DrugScores {
        qed: qed_with(&props, weights),
        sa: sa_score(mol),
    })
}

/// Inclusive thresholds: keep iff qed ≥ `qed_min` and sa ≤ `sa_max`.
pub fn passes_thresholds(scores: &DrugScores, qed_min: f64, sa_max: f64) -> bool {
    scores.qed >= qed_min && scores.sa <= sa_max
}
