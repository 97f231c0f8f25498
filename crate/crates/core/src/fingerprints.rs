//! Morgan circular fingerprints and Tanimoto similarity.
//!
//! Atom identifiers start from the invariant (atomic number, charge, heavy
//! degree, total H, ring flag, aromatic flag) and are updated once per radius
//! from the sorted (bond order, neighbor id) list. An environment whose bond
//! set was already produced (at a smaller radius, or by another atom at the
//! same radius) is dropped and its atom stops growing, as in ECFP.

use std::collections::HashSet;
use std::fmt;

use crate::chem::MolGraph;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FingerprintError {
    #[error("cannot fingerprint an empty molecule")]
    EmptyMolecule,
    #[error("fingerprint length {0} is not a power of two")]
    InvalidLength(usize),
    #[error("fingerprint length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("reference set is empty")]
    EmptyReference,
    #[error("invalid fingerprint hex: {0}")]
    Hex(String),
}

pub const DEFAULT_RADIUS: u32 = 4;
pub const DEFAULT_BITS: usize = 2048;

/// Fixed-length bit vector.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    words: Vec<u64>,
    n_bits: usize,
}

impl Fingerprint {
    pub fn new(n_bits: usize) -> Result<Self, FingerprintError> {
        if n_bits == 0 || !n_bits.is_power_of_two() {
            return Err(FingerprintError::InvalidLength(n_bits));
        }
        Ok(Fingerprint {
            words: vec![0; n_bits.div_ceil(64)],
            n_bits,
        })
    }

    pub fn from_bits(n_bits: usize, on: impl IntoIterator<Item = usize>) -> Result<Self, FingerprintError> {
        let mut fp = Fingerprint::new(n_bits)?;
        for i in on {
            fp.set(i % n_bits);
        }
        Ok(fp)
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    pub fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn popcount(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn on_bits(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_bits).filter(|&i| self.get(i))
    }

    /// Folds to half length by OR-ing the upper half onto the lower half.
    pub fn fold(&self) -> Result<Fingerprint, FingerprintError> {
        let half = self.n_bits / 2;
        Fingerprint::from_bits(half, self.on_bits().map(|i| i % half))
    }

    /// Lowercase hex, least significant word first, each word little-endian.
    pub fn to_hex(&self) -> String {
        let bytes: Vec<u8> = self
            .words
            .iter()
            .flat_map(|w| w.to_le_bytes())
            .take(self.n_bits.div_ceil(8))
            .collect();
        hex::encode(bytes)
    }

    pub fn from_hex(text: &str) -> Result<Self, FingerprintError> {
        let bytes = hex::decode(text).map_err(|e| FingerprintError::Hex(e.to_string()))?;
        let n_bits = bytes.len() * 8;
        let mut fp = Fingerprint::new(n_bits)?;
        for (i, chunk) in bytes.chunks(8).enumerate() {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            fp.words[i] = u64::from_le_bytes(buf);
        }
        Ok(fp)
    }
}

impl fmt::Debug for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fingerprint({} bits, {} on)", self.n_bits, self.popcount())
    }
}

/// One circular environment: centre atom, radius and 64-bit identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Environment {
    pub atom: usize,
    pub radius: u32,
    pub id: u64,
}

fn mix64(mut x: u64) -> u64 {
    // splitmix64 finalizer
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Order-dependent hash of a word sequence.
pub(crate) fn hash_words(words: &[u64]) -> u64 {
    words.iter().fold(0x243f_6a88_85a3_08d3, |h, &w| {
        mix64(h.rotate_left(23) ^ w ^ 0x9e37_79b9_7f4a_7c15)
    })
}

fn initial_id(mol: &MolGraph, i: usize) -> u64 {
    let a = mol.atom(i);
    hash_words(&[
        a.element as u64,
        (a.formal_charge as i64) as u64,
        mol.degree(i) as u64,
        a.total_h() as u64,
        mol.is_ring_atom(i) as u64,
        a.aromatic as u64,
    ])
}

/// All non-redundant environments of radius 0..=radius.
pub fn morgan_environments(mol: &MolGraph, radius: u32) -> Vec<Environment> {
    let n = mol.atom_count();
    let words = mol.bond_count().div_ceil(64).max(1);
    let mut ids: Vec<u64> = (0..n).map(|i| initial_id(mol, i)).collect();
    let mut out: Vec<Environment> = (0..n)
        .map(|atom| Environment { atom, radius: 0, id: ids[atom] })
        .collect();
    let mut cover: Vec<Vec<u64>> = vec![vec![0; words]; n];
    // radius-0 environments cover no bonds
    let mut seen: HashSet<Vec<u64>> = HashSet::from([vec![0; words]]);
    let mut dead = vec![false; n];

    for r in 1..=radius {
        let mut round: Vec<(Vec<u64>, u64, usize)> = Vec::new();
        let mut next_ids = ids.clone();
        let mut next_cover = cover.clone();
        for a in 0..n {
            if dead[a] {
                continue;
            }
            let mut nbrs: Vec<(u64, u64)> = mol
                .neighbors(a)
                .iter()
                .map(|&(j, b)| (mol.bond(b).order.code() as u64, ids[j]))
                .collect();
            nbrs.sort_unstable();
            let mut seq = vec![r as u64, ids[a]];
            for (code, id) in nbrs {
                seq.push(code);
                seq.push(id);
            }
            next_ids[a] = hash_words(&seq);
            let cov = &mut next_cover[a];
            for &(j, b) in mol.neighbors(a) {
                cov[b / 64] |= 1 << (b % 64);
                for (x, y) in cov.iter_mut().zip(&cover[j]) {
                    *x |= y;
                }
            }
            round.push((next_cover[a].clone(), next_ids[a], a));
        }
        round.sort();
        for (bonds, id, atom) in round {
            if seen.contains(&bonds) {
                dead[atom] = true;
                continue;
            }
            seen.insert(bonds);
            out.push(Environment { atom, radius: r, id });
        }
        ids = next_ids;
        cover = next_cover;
        if dead.iter().all(|&d| d) {
            break;
        }
    }
    out
}

pub fn morgan_fingerprint(mol: &MolGraph, radius: u32, n_bits: usize) -> Result<Fingerprint, FingerprintError> {
    if mol.is_empty() {
        return Err(FingerprintError::EmptyMolecule);
    }
    let envs = morgan_environments(mol, radius);
    Fingerprint::from_bits(n_bits, envs.iter().map(|e| (e.id % n_bits as u64) as usize))
}

/// Radius 4, 2048 bits.
pub fn morgan4(mol: &MolGraph) -> Result<Fingerprint, FingerprintError> {
    morgan_fingerprint(mol, DEFAULT_RADIUS, DEFAULT_BITS)
}

pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> Result<f64, FingerprintError> {
    if a.n_bits != b.n_bits {
        return Err(FingerprintError::LengthMismatch(a.n_bits, b.n_bits));
    }
    let (mut both, mut either) = (0u32, 0u32);
    for (x, y) in a.words.iter().zip(&b.words) {
        both += (x & y).count_ones();
        either += (x | y).count_ones();
    }
    if either == 0 {
        return Ok(1.0);
    }
    Ok(both as f64 / either as f64)
}

pub fn max_similarity(query: &Fingerprint, reference: &[Fingerprint]) -> Result<f64, FingerprintError> {
    if reference.is_empty() {
        return Err(FingerprintError::EmptyReference);
    }
    let mut best = 0.0f64;
    for r in reference {
        best = best.max(tanimoto(query, r)?);
    }
    Ok(best)
}

/// Diversity filter: keep iff the best similarity to the reference set is
/// strictly below `threshold`. An empty reference set keeps everything.
pub fn passes_diversity(query: &Fingerprint, reference: &[Fingerprint], threshold: f64) -> Result<bool, FingerprintError> {
    if reference.is_empty() {
        return Ok(true);
    }
    Ok(max_similarity(query, reference)? < threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    fn fp(s: &str) -> Fingerprint {
        morgan4(&parse_smiles(s).unwrap()).unwrap()
    }

    #[test]
    fn same_molecule_same_bits() {
        assert_eq!(fp("OCC"), fp("CCO"));
        assert_eq!(fp("C1=CC=CC=C1"), fp("c1ccccc1"));
    }

    #[test]
    fn methane() {
        let f = fp("C");
        assert!(f.popcount() >= 1 && f.popcount() <= DEFAULT_RADIUS + 1);
        assert_eq!(morgan_environments(&parse_smiles("C").unwrap(), 4).len(), 1);
    }

    #[test]
    fn benzene_differs_from_cyclohexane() {
        assert_ne!(fp("c1ccccc1"), fp("C1CCCCC1"));
    }

    #[test]
    fn benzene_environments() {
        // one id per radius until the ring is covered
        let envs = morgan_environments(&parse_smiles("c1ccccc1").unwrap(), 4);
        let ids: HashSet<u64> = envs.iter().map(|e| e.id).collect();
        assert_eq!(ids.len(), 4);
    }

    #[test]
    fn tanimoto_examples() {
        let a = Fingerprint::from_bits(4, [0, 1]).unwrap();
        let b = Fingerprint::from_bits(4, [0, 2]).unwrap();
        assert!((tanimoto(&a, &b).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        let c = Fingerprint::from_bits(4, [3]).unwrap();
        assert_eq!(tanimoto(&a, &c).unwrap(), 0.0);
        assert_eq!(tanimoto(&a, &a).unwrap(), 1.0);
        let e = Fingerprint::new(4).unwrap();
        assert_eq!(tanimoto(&e, &e).unwrap(), 1.0);
        let long = Fingerprint::new(8).unwrap();
        assert!(matches!(tanimoto(&a, &long), Err(FingerprintError::LengthMismatch(4, 8))));
    }

    #[test]
    fn max_similarity_examples() {
        let q = fp("CCO");
        let disjoint = Fingerprint::new(DEFAULT_BITS).unwrap();
        assert_eq!(max_similarity(&q, &[q.clone(), disjoint.clone()]).unwrap(), 1.0);
        assert_eq!(max_similarity(&q, &[disjoint]).unwrap(), 0.0);
        assert!(matches!(max_similarity(&q, &[]), Err(FingerprintError::EmptyReference)));
    }

    #[test]
    fn diversity_is_strict() {
        let q = Fingerprint::from_bits(4, [0, 1]).unwrap();
        let r = Fingerprint::from_bits(4, [0, 2]).unwrap();
        assert!(!passes_diversity(&q, &[r.clone()], 1.0 / 3.0).unwrap());
        assert!(passes_diversity(&q, &[r], 0.34).unwrap());
    }

    #[test]
    fn hex_round_trip() {
        let f = fp("CC(=O)Oc1ccccc1C(=O)O");
        let h = f.to_hex();
        assert_eq!(h.len(), DEFAULT_BITS / 4);
        assert_eq!(Fingerprint::from_hex(&h).unwrap(), f);
    }

    #[test]
    fn bad_lengths() {
        assert!(Fingerprint::new(100).is_err());
        assert!(matches!(
            morgan_fingerprint(&MolGraph::default(), 2, 64),
            Err(FingerprintError::EmptyMolecule)
        ));
    }
}
