//! Scoring oracles: the interface, a deterministic mock and a CSV file-drop
//! adapter for external docking.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::thresholds::ScoreRecord;
use super::AffinityError;
use crate::chem::{canonical_smiles, parse_smiles, MolGraph};
use crate::fingerprints::{morgan_fingerprint, tanimoto, Fingerprint};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Target {
    pub id: String,
    pub name: String,
    /// Reference ligand used by the mock oracle.
    pub reference_smiles: String,
}

/// Parses `id<TAB>name<TAB>reference_smiles` lines; `#` lines are comments.
pub fn parse_targets(text: &str) -> Result<Vec<Target>, AffinityError> {
    let mut out: Vec<Target> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 3 {
            return Err(AffinityError::Format(format!("targets line {}: expected 3 columns", i + 1)));
        }
        if out.iter().any(|t| t.id == f[0]) {
            return Err(AffinityError::Format(format!("duplicate target id {}", f[0])));
        }
        out.push(Target {
            id: f[0].to_string(),
            name: f[1].to_string(),
            reference_smiles: f[2].to_string(),
        });
    }
    Ok(out)
}

pub fn bundled_targets() -> Vec<Target> {
    parse_targets(include_str!("../../data/targets.tsv")).expect("bundled targets parse")
}

/// Deterministic per (molecule, target, oracle seed).
pub trait AffinityOracle: Sync {
    /// Score in kcal/mol (lower binds better) for a canonical SMILES.
    fn score(&self, canonical: &str, target: &Target) -> Result<f64, AffinityError>;

    /// One record per molecule, scored in parallel; order follows `molecules`.
    fn score_all(&self, molecules: &[String], targets: &[Target]) -> Result<Vec<ScoreRecord>, AffinityError> {
        molecules
            .par_iter()
            .map(|m| {
                let mut scores = BTreeMap::new();
                for t in targets {
                    scores.insert(t.id.clone(), self.score(m, t)?);
                }
                Ok(ScoreRecord { key: m.clone(), scores })
            })
            .collect()
    }

    /// Identifier recorded in ledgers and cache keys.
    fn describe(&self) -> String;
}

pub const MOCK_MIN: f64 = -12.0;
pub const MOCK_MAX: f64 = -2.0;
const MOCK_RADIUS: u32 = 2;
const MOCK_BITS: usize = 2048;

/// Hash noise plus a similarity bonus toward each target's reference:
/// score = −2 − 10·(0.2 + 0.3·u + 0.5·sim), with u uniform from a keyed hash
/// and sim the radius-2 Tanimoto similarity to the reference.
#[derive(Debug, Clone)]
pub struct MockOracle {
    pub seed: u64,
    references: HashMap<String, Fingerprint>,
}

fn mock_fp(mol: &MolGraph) -> Fingerprint {
    morgan_fingerprint(mol, MOCK_RADIUS, MOCK_BITS).expect("valid fingerprint size")
}

impl MockOracle {
    pub fn new(targets: &[Target], seed: u64) -> Result<Self, AffinityError> {
        let mut references = HashMap::new();
        for t in targets {
            let mol = parse_smiles(&t.reference_smiles)
                .map_err(|e| AffinityError::Format(format!("reference for {}: {e}", t.id)))?;
            references.insert(t.id.clone(), mock_fp(&mol));
        }
        Ok(MockOracle { seed, references })
    }

    fn noise(&self, canonical: &str, target: &str) -> f64 {
        let h = Sha256::digest(format!("{canonical}\t{target}\t{}", self.seed));
        let x = u64::from_le_bytes(h[..8].try_into().expect("eight bytes"));
        (x >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn score_mol(&self, mol: &MolGraph, target: &Target) -> Result<f64, AffinityError> {
        let canonical = canonical_smiles(mol);
        let reference = self
            .references
            .get(&target.id)
            .ok_or_else(|| AffinityError::UnknownTarget(target.id.clone()))?;
        let sim = tanimoto(&mock_fp(mol), reference).expect("equal lengths");
        let u = self.noise(&canonical, &target.id);
        Ok((MOCK_MAX - 10.0 * (0.2 + 0.3 * u + 0.5 * sim)).clamp(MOCK_MIN, MOCK_MAX))
    }
}

impl AffinityOracle for MockOracle {
    fn score(&self, canonical: &str, target: &Target) -> Result<f64, AffinityError> {
        let mol = parse_smiles(canonical).map_err(|e| AffinityError::Format(format!("{canonical}: {e}")))?;
        self.score_mol(&mol, target)
    }

    fn describe(&self) -> String {
        format!("mock:{}", self.seed)
    }
}

/// Scores read from an exchange CSV `canonical_smiles,target_id,score_kcal_mol`.
#[derive(Debug, Clone, Default)]
pub struct CsvOracle {
    scores: HashMap<(String, String), f64>,
    source: String,
}

impl CsvOracle {
    pub fn parse(text: &str, source: &str) -> Result<Self, AffinityError> {
        let mut scores = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (i == 0 && line.starts_with("canonical_smiles")) {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            let bad = || AffinityError::Format(format!("{source} line {}: expected smiles,target,score", i + 1));
            if f.len() != 3 {
                return Err(bad());
            }
            let s: f64 = f[2].trim().parse().map_err(|_| bad())?;
            if !s.is_finite() {
                return Err(bad());
            }
            scores.insert((f[0].to_string(), f[1].to_string()), s);
        }
        Ok(CsvOracle {
            scores,
            source: source.to_string(),
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, AffinityError> {
        Self::parse(&std::fs::read_to_string(path)?, &path.display().to_string())
    }
}

impl AffinityOracle for CsvOracle {
    fn score(&self, canonical: &str, target: &Target) -> Result<f64, AffinityError> {
        self.scores
            .get(&(canonical.to_string(), target.id.clone()))
            .copied()
            .ok_or_else(|| AffinityError::MissingScore {
                molecule: canonical.to_string(),
                target: target.id.clone(),
            })
    }

    fn describe(&self) -> String {
        format!("csv:{}", self.source)
    }
}

/// Request file listing the pairs an external docking process must score.
pub fn score_requests_csv(molecules: &[String], targets: &[Target]) -> String {
    let mut out = String::from("canonical_smiles,target_id\n");
    for m in molecules {
        for t in targets {
            let _ = writeln!(out, "{m},{}", t.id);
        }
    }
    out
}

/// Scores in the exchange format, 6 decimals.
pub fn scores_csv(records: &[ScoreRecord]) -> String {
    let mut out = String::from("canonical_smiles,target_id,score_kcal_mol\n");
    for r in records {
        for (t, s) in &r.scores {
            let _ = writeln!(out, "{},{t},{s:.6}", r.key);
        }
    }
    out
}

/// Result of the fixed-set rule, with every record for reporting.
#[derive(Debug, Clone)]
pub struct FixedSet {
    pub kept: Vec<String>,
    pub records: Vec<ScoreRecord>,
}

/// Keeps molecules scoring ≤ `threshold` against every target. Input SMILES
/// are canonicalized and deduplicated; unparseable ones are skipped.
pub fn build_fixed_set(
    molecules: &[String],
    oracle: &dyn AffinityOracle,
    targets: &[Target],
    threshold: f64,
) -> Result<FixedSet, AffinityError> {
    let mut canon: Vec<String> = molecules
        .iter()
        .filter_map(|s| parse_smiles(s).ok())
        .map(|m| canonical_smiles(&m))
        .collect();
    canon.sort();
    canon.dedup();
    let records = oracle.score_all(&canon, targets)?;
    let kept = records
        .iter()
        .filter(|r| r.scores.values().all(|&s| s <= threshold))
        .map(|r| r.key.clone())
        .collect();
    Ok(FixedSet { kept, records })
}

/// Scores cached by (canonical SMILES, target id) for one oracle.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreCache {
    pub entries: BTreeMap<String, BTreeMap<String, f64>>,
}

impl ScoreCache {
    pub fn get(&self, molecule: &str, targets: &[Target]) -> Option<ScoreRecord> {
        let m = self.entries.get(molecule)?;
        let mut scores = BTreeMap::new();
        for t in targets {
            scores.insert(t.id.clone(), *m.get(&t.id)?);
        }
        Some(ScoreRecord {
            key: molecule.to_string(),
            scores,
        })
    }

    pub fn insert(&mut self, r: &ScoreRecord) {
        let e = self.entries.entry(r.key.clone()).or_default();
        for (t, s) in &r.scores {
            e.insert(t.clone(), *s);
        }
    }

    /// Records for `molecules`, scoring only the ones not cached yet.
    /// Returns the records and the newly scored subset.
    pub fn score_with(
        &mut self,
        molecules: &[String],
        oracle: &dyn AffinityOracle,
        targets: &[Target],
    ) -> Result<(Vec<ScoreRecord>, Vec<ScoreRecord>), AffinityError> {
        let missing: Vec<String> = molecules.iter().filter(|m| self.get(m, targets).is_none()).cloned().collect();
        let fresh = oracle.score_all(&missing, targets)?;
        for r in &fresh {
            self.insert(r);
        }
        let all = molecules
            .iter()
            .map(|m| self.get(m, targets).expect("scored above"))
            .collect();
        Ok((all, fresh))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Table(Vec<f64>);

    impl AffinityOracle for Table {
        fn score(&self, canonical: &str, target: &Target) -> Result<f64, AffinityError> {
            let i: usize = target.id.parse().unwrap();
            Ok(self.0[i] + if canonical == "C" { 0.0 } else { 100.0 })
        }
        fn describe(&self) -> String {
            "table".into()
        }
    }

    fn targets(n: usize) -> Vec<Target> {
        (0..n)
            .map(|i| Target {
                id: i.to_string(),
                name: String::new(),
                reference_smiles: "C".into(),
            })
            .collect()
    }

    #[test]
    fn fixed_set_rule() {
        let t = targets(3);
        let keep = build_fixed_set(&["C".into()], &Table(vec![-6.0, -6.1, -6.2]), &t, -5.9).unwrap();
        assert_eq!(keep.kept, vec!["C".to_string()]);
        let drop = build_fixed_set(&["C".into()], &Table(vec![-6.0, -6.1, -5.0]), &t, -5.9).unwrap();
        assert!(drop.kept.is_empty());
        let none = build_fixed_set(&["C".into()], &Table(vec![-60.0; 3]), &t, f64::NEG_INFINITY).unwrap();
        assert!(none.kept.is_empty());
    }

    #[test]
    fn mock_is_deterministic_and_bounded() {
        let t = bundled_targets();
        let o = MockOracle::new(&t, 42).unwrap();
        for s in ["CCO", "c1ccccc1O", "CC(=O)Oc1ccccc1C(=O)O"] {
            for tg in &t {
                let a = o.score(s, tg).unwrap();
                assert_eq!(a, o.score(s, tg).unwrap());
                assert!((MOCK_MIN..=MOCK_MAX).contains(&a));
            }
        }
        let other = MockOracle::new(&t, 43).unwrap();
        assert_ne!(o.score("CCO", &t[0]).unwrap(), other.score("CCO", &t[0]).unwrap());
    }

    #[test]
    fn csv_round_trip() {
        let t = bundled_targets();
        let o = MockOracle::new(&t, 1).unwrap();
        let recs = o.score_all(&["CCO".into(), "CCN".into()], &t).unwrap();
        let csv = CsvOracle::parse(&scores_csv(&recs), "mem").unwrap();
        let back = csv.score_all(&["CCO".into(), "CCN".into()], &t).unwrap();
        for (a, b) in recs.iter().zip(&back) {
            for (x, y) in a.scores.values().zip(b.scores.values()) {
                assert!((x - y).abs() < 1e-6);
            }
        }
        assert!(matches!(csv.score("CCC", &t[0]), Err(AffinityError::MissingScore { .. })));
        assert!(CsvOracle::parse("a,b\n", "x").is_err());
        assert!(score_requests_csv(&["C".into()], &t).lines().count() == 1 + t.len());
    }

    #[test]
    fn cache_scores_once() {
        let t = bundled_targets();
        let o = MockOracle::new(&t, 1).unwrap();
        let mut cache = ScoreCache::default();
        let (_, fresh) = cache.score_with(&["CCO".into(), "CCN".into()], &o, &t).unwrap();
        assert_eq!(fresh.len(), 2);
        let (all, fresh) = cache.score_with(&["CCO".into(), "CCC".into()], &o, &t).unwrap();
        assert_eq!((all.len(), fresh.len()), (2, 1));
    }
}
