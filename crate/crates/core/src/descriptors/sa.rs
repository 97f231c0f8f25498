//! Synthetic accessibility score from fragment contributions and
//! complexity penalties.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::OnceLock;

use crate::chem::{potential_stereocenters, MolGraph};
use crate::fingerprints::morgan_environments;

/// Environment radius used for fragment lookup.
pub const SA_RADIUS: u32 = 2;
/// Contribution of an environment missing from the table.
pub const UNKNOWN_FRAGMENT: f64 = -4.0;

#[derive(Debug, thiserror::Error)]
pub enum FragmentTableError {
    #[error("line {line}: expected `env_id_hex<TAB>score`")]
    Format { line: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Environment id to fragment score.
#[derive(Debug, Clone, Default)]
pub struct FragmentTable {
    scores: HashMap<u64, f64>,
}

impl FragmentTable {
    /// Parses `env_id_hex<TAB>score` lines; `#` lines are comments.
    pub fn parse(text: &str) -> Result<Self, FragmentTableError> {
        let mut scores = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut f = line.split('\t');
            let (Some(id), Some(score), None) = (f.next(), f.next(), f.next()) else {
                return Err(FragmentTableError::Format { line: i + 1 });
            };
            let id = u64::from_str_radix(id.trim(), 16).map_err(|_| FragmentTableError::Format { line: i + 1 })?;
            let score: f64 = score.trim().parse().map_err(|_| FragmentTableError::Format { line: i + 1 })?;
            scores.insert(id, score);
        }
        Ok(FragmentTable { scores })
    }

    pub fn from_file(path: &Path) -> Result<Self, FragmentTableError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn bundled() -> &'static FragmentTable {
        static TABLE: OnceLock<FragmentTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            Self::parse(include_str!("../../data/sa_fragments.tsv")).expect("bundled SA table parses")
        })
    }

    pub fn get(&self, id: u64) -> Option<f64> {
        self.scores.get(&id).copied()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Serializes in the file format, sorted by id.
    pub fn to_tsv(&self, header: &str) -> String {
        let mut out = String::new();
        for line in header.lines() {
            let _ = writeln!(out, "# {line}");
        }
        let sorted: BTreeMap<u64, f64> = self.scores.iter().map(|(k, v)| (*k, *v)).collect();
        for (id, score) in sorted {
            let _ = writeln!(out, "{id:016x}\t{score:.6}");
        }
        out
    }
}

/// Builds a table from a reference compound set: each environment scores
/// ln(count / c80), where c80 is the count of the environment at which the
/// most frequent environments first cover 80% of all occurrences.
pub fn build_fragment_table<'a>(mols: impl IntoIterator<Item = &'a MolGraph>) -> FragmentTable {
    let mut counts: HashMap<u64, u64> = HashMap::new();
    for mol in mols {
        for env in morgan_environments(mol, SA_RADIUS) {
            *counts.entry(env.id).or_default() += 1;
        }
    }
    if counts.is_empty() {
        return FragmentTable::default();
    }
    let mut sorted: Vec<u64> = counts.values().copied().collect();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let total: u64 = sorted.iter().sum();
    let mut acc = 0;
    let mut c80 = sorted[0];
    for &c in &sorted {
        acc += c;
        c80 = c;
        if acc * 5 >= total * 4 {
            break;
        }
    }
    let scores = counts
        .into_iter()
        .map(|(id, c)| (id, (c as f64 / c80 as f64).ln()))
        .collect();
    FragmentTable { scores }
}

/// Atoms shared by two SSSR rings that have no bond in common.
pub fn spiro_atom_count(mol: &MolGraph) -> usize {
    let ri = mol.ring_info();
    let mut spiro = vec![false; mol.atom_count()];
    for i in 0..ri.rings.len() {
        for j in i + 1..ri.rings.len() {
            let shared: Vec<usize> = ri.rings[i].iter().copied().filter(|a| ri.rings[j].contains(a)).collect();
            if shared.len() == 1 {
                spiro[shared[0]] = true;
            }
        }
    }
    spiro.iter().filter(|&&s| s).count()
}

/// Ends of the shared bond path of two SSSR rings sharing more than one bond.
pub fn bridgehead_atom_count(mol: &MolGraph) -> usize {
    let ri = mol.ring_info();
    let mut bridge = vec![false; mol.atom_count()];
    for i in 0..ri.ring_bonds.len() {
        for j in i + 1..ri.ring_bonds.len() {
            let shared: Vec<usize> = ri.ring_bonds[i].iter().copied().filter(|b| ri.ring_bonds[j].contains(b)).collect();
            if shared.len() < 2 {
                continue;
            }
            let mut hits: HashMap<usize, u32> = HashMap::new();
            for &b in &shared {
                *hits.entry(mol.bond(b).begin).or_default() += 1;
                *hits.entry(mol.bond(b).end).or_default() += 1;
            }
            for (a, n) in hits {
                if n == 1 {
                    bridge[a] = true;
                }
            }
        }
    }
    bridge.iter().filter(|&&b| b).count()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaBreakdown {
    pub fragment: f64,
    pub size_penalty: f64,
    pub stereo_penalty: f64,
    pub spiro_penalty: f64,
    pub bridge_penalty: f64,
    pub macrocycle_penalty: f64,
    pub density_correction: f64,
    pub score: f64,
}

pub fn sa_breakdown(mol: &MolGraph, table: &FragmentTable) -> SaBreakdown {
    let envs = morgan_environments(mol, SA_RADIUS);
    let mut counts: BTreeMap<u64, u32> = BTreeMap::new();
    for e in &envs {
        *counts.entry(e.id).or_default() += 1;
    }
    let nf = envs.len().max(1) as f64;
    let fragment = counts
        .iter()
        .map(|(id, &c)| table.get(*id).unwrap_or(UNKNOWN_FRAGMENT) * c as f64)
        .sum::<f64>()
        / nf;

    let n_atoms = mol.heavy_atom_count() as f64;
    let size_penalty = n_atoms.powf(1.005) - n_atoms;
    // input carries no stereo, so every potential centre counts
    let stereo_penalty = (potential_stereocenters(mol).len() as f64 + 1.0).log10();
    let spiro_penalty = (spiro_atom_count(mol) as f64 + 1.0).log10();
    let bridge_penalty = (bridgehead_atom_count(mol) as f64 + 1.0).log10();
    let macrocycle_penalty = if mol.ring_info().rings.iter().any(|r| r.len() > 8) {
        2f64.log10()
    } else {
        0.0
    };
    let n_bits = counts.len() as f64;
    let density_correction = if n_atoms > n_bits && n_bits > 0.0 {
        0.5 * (n_atoms / n_bits).ln()
    } else {
        0.0
    };
    let raw = fragment - size_penalty - stereo_penalty - spiro_penalty - bridge_penalty - macrocycle_penalty
        + density_correction;
    SaBreakdown {
        fragment,
        size_penalty,
        stereo_penalty,
        spiro_penalty,
        bridge_penalty,
        macrocycle_penalty,
        density_correction,
        score: rescale(raw),
    }
}

/// Maps the raw score onto [1, 10], 1 = easy.
fn rescale(raw: f64) -> f64 {
    const MIN: f64 = -4.0;
    const MAX: f64 = 2.5;
    let mut s = 11.0 - (raw - MIN + 1.0) / (MAX - MIN) * 9.0;
    if s > 8.0 {
        s = 8.0 + (s - 8.0).ln();
    }
    s.clamp(1.0, 10.0)
}

pub fn sa_score_with(mol: &MolGraph, table: &FragmentTable) -> f64 {
    if mol.is_empty() {
        return 10.0;
    }
    sa_breakdown(mol, table).score
}

/// SA score with the bundled fragment table.
pub fn sa_score(mol: &MolGraph) -> f64 {
    sa_score_with(mol, FragmentTable::bundled())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    #[test]
    fn rescale_bounds() {
        assert_eq!(rescale(100.0), 1.0);
        assert_eq!(rescale(-100.0), 10.0);
        assert!(rescale(-6.0) > 8.0);
    }

    #[test]
    fn ring_topology_counts() {
        let spiro = parse_smiles("C1CCC2(CC1)CCCC2").unwrap();
        assert_eq!(spiro_atom_count(&spiro), 1);
        assert_eq!(bridgehead_atom_count(&spiro), 0);
        let norbornane = parse_smiles("C1CC2CCC1C2").unwrap();
        assert_eq!(bridgehead_atom_count(&norbornane), 2);
        let decalin = parse_smiles("C1CCC2CCCCC2C1").unwrap();
        assert_eq!(bridgehead_atom_count(&decalin), 0);
        assert_eq!(spiro_atom_count(&decalin), 0);
    }

    #[test]
    fn table_round_trip() {
        let mols: Vec<MolGraph> = ["CCO", "CCN", "c1ccccc1O"].iter().map(|s| parse_smiles(s).unwrap()).collect();
        let t = build_fragment_table(&mols);
        assert!(!t.is_empty());
        let back = FragmentTable::parse(&t.to_tsv("test table")).unwrap();
        assert_eq!(back.len(), t.len());
        assert!(FragmentTable::parse("zz\t1.0").is_err());
    }

    #[test]
    fn ethanol_is_easy() {
        assert!(sa_score(&parse_smiles("CCO").unwrap()) < 3.0);
    }
}
