//! Topological polar surface area from N and O contributions.

use std::sync::OnceLock;

use crate::chem::{BondOrder, MolGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Env {
    element: u8,
    nbrs: u8,
    h: u8,
    single: u8,
    double: u8,
    triple: u8,
    arom: u8,
    charge: i8,
}

struct Row {
    env: Env,
    in3ring: Option<bool>,
    value: f64,
}

const DATA: &str = include_str!("../../data/psa_contrib.tsv");

fn table() -> &'static [Row] {
    static TABLE: OnceLock<Vec<Row>> = OnceLock::new();
    TABLE.get_or_init(|| {
        DATA.lines()
            .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
            .map(|l| {
                let f: Vec<&str> = l.split('\t').collect();
                let n = |i: usize| f[i].parse::<u8>().expect("count");
                Row {
                    env: Env {
                        element: if f[0] == "N" { 7 } else { 8 },
                        nbrs: n(1),
                        h: n(2),
                        single: n(3),
                        double: n(4),
                        triple: n(5),
                        arom: n(6),
                        charge: f[7].parse().expect("charge"),
                    },
                    in3ring: match f[8] {
                        "*" => None,
                        s => Some(s == "1"),
                    },
                    value: f[9].parse().expect("psa value"),
                }
            })
            .collect()
    })
}

pub fn atom_contribution(mol: &MolGraph, i: usize) -> f64 {
    let a = mol.atom(i);
    if !matches!(a.element, 7 | 8) {
        return 0.0;
    }
    let mut env = Env {
        element: a.element,
        nbrs: mol.degree(i) as u8,
        h: a.total_h(),
        single: 0,
        double: 0,
        triple: 0,
        arom: 0,
        charge: a.formal_charge,
    };
    for &(_, b) in mol.neighbors(i) {
        match mol.bond(b).order {
            BondOrder::Single => env.single += 1,
            BondOrder::Double => env.double += 1,
            BondOrder::Triple => env.triple += 1,
            BondOrder::Aromatic => env.arom += 1,
        }
    }
    let in3 = mol.ring_info().atom_in_ring_of_size(i, 3);
    if let Some(row) = table().iter().find(|r| r.env == env && r.in3ring.is_none_or(|x| x == in3)) {
        return row.value;
    }
    let (base, per_nbr) = if a.element == 7 { (30.5, 8.2) } else { (28.5, 8.6) };
    (base - per_nbr * env.nbrs as f64 + 1.5 * env.h as f64).max(0.0)
}

pub fn tpsa(mol: &MolGraph) -> f64 {
    super::order_free_sum((0..mol.atom_count()).map(|i| atom_contribution(mol, i)))
}
