//! Generation statistics, score histograms and scaffold clustering.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chem::{canonical_smiles, murcko_scaffold, parse_smiles};
use crate::fingerprints::{morgan4, tanimoto, Fingerprint};

/// Counts and percentages for one batch of generated SMILES. Percentages
/// are `None` when their denominator is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub n_gen: usize,
    pub n_val: usize,
    pub n_uni: usize,
    pub n_unk: usize,
    pub validity: Option<f64>,
    pub uniqueness: Option<f64>,
    pub novelty: Option<f64>,
}

fn percent(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| 100.0 * num as f64 / den as f64)
}

impl GenerationStats {
    pub fn from_counts(n_gen: usize, n_val: usize, n_uni: usize, n_unk: usize) -> Self {
        GenerationStats {
            n_gen,
            n_val,
            n_uni,
            n_unk,
            validity: percent(n_val, n_gen),
            uniqueness: percent(n_uni, n_val),
            novelty: percent(n_unk, n_uni),
        }
    }
}

/// Validity is a successful parse; uniqueness deduplicates canonical
/// SMILES; novelty is absence from `known` (canonical SMILES).
pub fn generation_stats(generated: &[String], known: &HashSet<String>) -> GenerationStats {
    let canon: Vec<String> = generated
        .par_iter()
        .filter_map(|s| parse_smiles(s).ok().map(|m| canonical_smiles(&m)))
        .collect();
    let unique: BTreeSet<&String> = canon.iter().collect();
    let unknown = unique.iter().filter(|s| !known.contains(s.as_str())).count();
    GenerationStats::from_counts(generated.len(), canon.len(), unique.len(), unknown)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Half-open bins `[k·w, (k+1)·w)` from the lowest to the highest occupied
/// bin, empty bins in between included. Non-finite values are skipped.
pub fn score_histogram(values: &[f64], bin_width: f64) -> Vec<HistogramBin> {
    assert!(bin_width > 0.0, "bin width must be positive");
    let idx: Vec<i64> = values
        .iter()
        .filter(|v| v.is_finite())
        .map(|v| (v / bin_width).floor() as i64)
        .collect();
    let (Some(&lo), Some(&hi)) = (idx.iter().min(), idx.iter().max()) else {
        return Vec::new();
    };
    let mut counts = vec![0usize; (hi - lo + 1) as usize];
    for k in idx {
        counts[(k - lo) as usize] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| {
            let k = lo + i as i64;
            HistogramBin {
                lo: k as f64 * bin_width,
                hi: (k + 1) as f64 * bin_width,
                count,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DbscanError {
    #[error("distance matrix is not square")]
    NotSquare,
    #[error("distance matrix is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),
    #[error("distance matrix has a non-zero diagonal at {0}")]
    NonZeroDiagonal(usize),
    #[error("epsilon must be positive and min_pts at least 1")]
    BadParameters,
}

fn check_matrix(d: &[Vec<f64>], epsilon: f64, min_pts: usize) -> Result<(), DbscanError> {
    if epsilon.is_nan() || epsilon <= 0.0 || min_pts == 0 {
        return Err(DbscanError::BadParameters);
    }
    let n = d.len();
    for (i, row) in d.iter().enumerate() {
        if row.len() != n {
            return Err(DbscanError::NotSquare);
        }
        if row[i] != 0.0 {
            return Err(DbscanError::NonZeroDiagonal(i));
        }
        for j in 0..i {
            if (row[j] - d[j][i]).abs() > 1e-12 {
                return Err(DbscanError::NotSymmetric(j, i));
            }
        }
    }
    Ok(())
}

fn neighbourhood(d: &[Vec<f64>], i: usize, epsilon: f64) -> Vec<usize> {
    (0..d.len()).filter(|&j| d[i][j] <= epsilon).collect()
}

fn mass(nb: &[usize], weights: &[usize]) -> usize {
    nb.iter().map(|&j| weights[j]).sum()
}

/// Density-based clustering over a precomputed distance matrix. A point is
/// core when at least `min_pts` points (itself included) lie within
/// `epsilon`. Returns a cluster id per point, `None` for noise. Border points
/// join the first cluster that reaches them in index order.
pub fn dbscan(d: &[Vec<f64>], epsilon: f64, min_pts: usize) -> Result<Vec<Option<usize>>, DbscanError> {
    dbscan_weighted(d, &vec![1; d.len()], epsilon, min_pts)
}

/// DBSCAN where point `i` stands for `weights[i]` coincident samples; the
/// core test sums weights over the neighbourhood.
pub fn dbscan_weighted(
    d: &[Vec<f64>],
    weights: &[usize],
    epsilon: f64,
    min_pts: usize,
) -> Result<Vec<Option<usize>>, DbscanError> {
    check_matrix(d, epsilon, min_pts)?;
    assert_eq!(weights.len(), d.len(), "one weight per point");
    let n = d.len();
    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut visited = vec![false; n];
    let mut next = 0;
    for p in 0..n {
        if visited[p] {
            continue;
        }
        visited[p] = true;
        let nb = neighbourhood(d, p, epsilon);
        if mass(&nb, weights) < min_pts {
            continue;
        }
        let c = next;
        next += 1;
        labels[p] = Some(c);
        let mut queue = nb;
        let mut k = 0;
        while k < queue.len() {
            let q = queue[k];
            k += 1;
            if labels[q].is_none() {
                labels[q] = Some(c);
            }
            if visited[q] {
                continue;
            }
            visited[q] = true;
            let qn = neighbourhood(d, q, epsilon);
            if mass(&qn, weights) >= min_pts {
                queue.extend(qn);
            }
        }
    }
    Ok(labels)
}

/// Core points, the partition of core points into clusters (connected
/// components of the epsilon graph restricted to core points), and noise.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityStructure {
    pub core: Vec<bool>,
    pub core_components: Vec<BTreeSet<usize>>,
    pub noise: BTreeSet<usize>,
}

/// Reference computation by transitive closure of density reachability;
/// quadratic memory, for tests.
pub fn density_reachability_oracle(d: &[Vec<f64>], epsilon: f64, min_pts: usize) -> Result<DensityStructure, DbscanError> {
    density_reachability_oracle_weighted(d, &vec![1; d.len()], epsilon, min_pts)
}

pub fn density_reachability_oracle_weighted(
    d: &[Vec<f64>],
    weights: &[usize],
    epsilon: f64,
    min_pts: usize,
) -> Result<DensityStructure, DbscanError> {
    check_matrix(d, epsilon, min_pts)?;
    let n = d.len();
    let core: Vec<bool> = (0..n)
        .map(|i| (0..n).filter(|&j| d[i][j] <= epsilon).map(|j| weights[j]).sum::<usize>() >= min_pts)
        .collect();
    // reach[i][j]: j is density-reachable from core point i
    let mut reach = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            reach[i][j] = core[i] && d[i][j] <= epsilon;
        }
    }
    for k in 0..n {
        if !core[k] {
            continue;
        }
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let mut components: Vec<BTreeSet<usize>> = Vec::new();
    for i in (0..n).filter(|&i| core[i]) {
        if components.iter().any(|c| c.contains(&i)) {
            continue;
        }
        components.push((0..n).filter(|&j| core[j] && reach[i][j]).collect());
    }
    let noise = (0..n).filter(|&j| !(0..n).any(|i| reach[i][j])).collect();
    Ok(DensityStructure { core, core_components: components, noise })
}

/// Checks DBSCAN labels against the oracle: same noise set, same core
/// partition up to renaming, and every border point in a cluster that owns
/// one of its core neighbours.
pub fn labels_consistent(labels: &[Option<usize>], d: &[Vec<f64>], epsilon: f64, oracle: &DensityStructure) -> bool {
    let noise: BTreeSet<usize> = (0..labels.len()).filter(|&i| labels[i].is_none()).collect();
    if noise != oracle.noise {
        return false;
    }
    let mut seen_labels = BTreeSet::new();
    for comp in &oracle.core_components {
        let ls: BTreeSet<Option<usize>> = comp.iter().map(|&i| labels[i]).collect();
        if ls.len() != 1 || !seen_labels.insert(*ls.iter().next().expect("one label")) {
            return false;
        }
    }
    (0..labels.len())
        .filter(|&i| !oracle.core[i] && labels[i].is_some())
        .all(|i| (0..labels.len()).any(|j| oracle.core[j] && d[i][j] <= epsilon && labels[j] == labels[i]))
}

pub fn cluster_count(labels: &[Option<usize>]) -> usize {
    labels.iter().flatten().collect::<BTreeSet<_>>().len()
}

/// Pairwise Tanimoto distances, rows computed in parallel.
pub fn tanimoto_distance_matrix(fps: &[Fingerprint]) -> Vec<Vec<f64>> {
    (0..fps.len())
        .into_par_iter()
        .map(|i| {
            (0..fps.len())
                .map(|j| if i == j { 0.0 } else { 1.0 - tanimoto(&fps[i], &fps[j]).expect("equal lengths") })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRow {
    pub cycle: usize,
    pub epsilon: f64,
    pub n_molecules: usize,
    pub n_scaffolds: usize,
    pub n_clusters: usize,
    pub n_noise: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub epsilons: Vec<f64>,
    pub min_pts: usize,
    pub rows: Vec<ClusterRow>,
}

impl ClusterReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cycle,epsilon,n_molecules,n_scaffolds,n_clusters,n_noise,min_pts\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:.6},{},{},{},{},{}",
                r.cycle, r.epsilon, r.n_molecules, r.n_scaffolds, r.n_clusters, r.n_noise, self.min_pts
            );
        }
        out
    }
}

/// Unique non-empty Murcko scaffolds (canonical SMILES, sorted) of the
/// parseable molecules, each with the number of distinct molecules behind it.
pub fn unique_scaffolds(smiles: &[String]) -> Vec<(String, usize)> {
    let molecules: BTreeSet<String> = smiles
        .iter()
        .filter_map(|s| parse_smiles(s).ok())
        .map(|m| canonical_smiles(&m))
        .collect();
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for s in &molecules {
        let scaffold = murcko_scaffold(&parse_smiles(s).expect("canonical SMILES reparses"));
        if !scaffold.is_empty() {
            *counts.entry(canonical_smiles(&scaffold)).or_default() += 1;
        }
    }
    counts.into_iter().collect()
}

/// Per cycle: deduplicated Murcko scaffolds, radius-4 fingerprints, Tanimoto
/// distances, then DBSCAN at every epsilon. Each scaffold point is weighted
/// by its distinct molecule count, so repeated molecules change nothing but
/// a scaffold shared by several molecules can be core on its own.
pub fn scaffold_cluster_report(cycles: &[Vec<String>], epsilons: &[f64], min_pts: usize) -> ClusterReport {
    let mut rows = Vec::new();
    for (cycle, smiles) in cycles.iter().enumerate() {
        let scaffolds = unique_scaffolds(smiles);
        let fps: Vec<Fingerprint> = scaffolds
            .iter()
            .map(|(s, _)| morgan4(&parse_smiles(s).expect("canonical scaffold reparses")).expect("non-empty scaffold"))
            .collect();
        let d = tanimoto_distance_matrix(&fps);
        let weights: Vec<usize> = scaffolds.iter().map(|(_, w)| *w).collect();
        for &eps in epsilons {
            let labels = dbscan_weighted(&d, &weights, eps, min_pts).expect("valid distance matrix");
            rows.push(ClusterRow {
                cycle,
                epsilon: eps,
                n_molecules: smiles.len(),
                n_scaffolds: scaffolds.len(),
                n_clusters: cluster_count(&labels),
                n_noise: labels.iter().filter(|l| l.is_none()).count(),
            });
        }
    }
    ClusterReport {
        epsilons: epsilons.to_vec(),
        min_pts,
        rows,
    }
}

/// Average ranks (1-based), ties sharing the mean rank.
fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation; `None` for fewer than two points or a
/// constant input.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    if x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn stats_examples() {
        let s = GenerationStats::from_counts(100, 59, 59, 59);
        assert_eq!(s.validity, Some(59.0));
        let g = strings(&["CCO", "OCC", "C(C)O", "xx"]);
        let s = generation_stats(&g, &HashSet::new());
        assert_eq!((s.n_gen, s.n_val, s.n_uni, s.n_unk), (4, 3, 1, 1));
        assert!((s.uniqueness.unwrap() - 100.0 / 3.0).abs() < 1e-12);
        let known: HashSet<String> = ["CCO".to_string()].into();
        assert_eq!(generation_stats(&g, &known).novelty, Some(0.0));
        let empty = generation_stats(&[], &known);
        assert_eq!((empty.validity, empty.uniqueness, empty.novelty), (None, None, None));
    }

    #[test]
    fn histogram_examples() {
        let h = score_histogram(&[-8.1, -8.1, -8.1], 0.25);
        assert_eq!(h.len(), 1);
        assert_eq!(h[0].count, 3);
        assert!(h[0].lo <= -8.1 && -8.1 < h[0].hi);
        assert!(score_histogram(&[], 0.5).is_empty());
        let h = score_histogram(&[0.0, 0.49, 0.5, 1.7], 0.5);
        assert_eq!(h.iter().map(|b| b.count).collect::<Vec<_>>(), vec![2, 1, 0, 1]);
    }

    #[test]
    fn dbscan_trivial() {
        let zero = vec![vec![0.0; 5]; 5];
        let l = dbscan(&zero, 0.1, 2).unwrap();
        assert!(l.iter().all(|x| *x == Some(0)));
        let mut one = vec![vec![1.0; 5]; 5];
        for (i, row) in one.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        assert!(dbscan(&one, 0.1, 2).unwrap().iter().all(Option::is_none));
        let bad = vec![vec![0.0, 1.0], vec![0.5, 0.0]];
        assert!(matches!(dbscan(&bad, 0.1, 2), Err(DbscanError::NotSymmetric(0, 1))));
    }

    #[test]
    fn one_scaffold_one_cluster() {
        let cyc = vec![strings(&["Cc1ccccc1", "CCc1ccccc1", "OCc1ccccc1"])];
        let r = scaffold_cluster_report(&cyc, &[0.1, 0.3, 0.5], 2);
        assert!(r.rows.iter().all(|row| row.n_scaffolds == 1 && row.n_clusters == 1));
        let dup = vec![strings(&["Cc1ccccc1", "CCc1ccccc1", "OCc1ccccc1", "c1ccccc1C", "C1CCCCC1"])];
        let r2 = scaffold_cluster_report(&dup, &[0.1, 0.3, 0.5], 2);
        let with_dup: Vec<usize> = r2.rows.iter().map(|r| r.n_clusters).collect();
        let mut single = dup.clone();
        single[0].remove(3);
        let r3 = scaffold_cluster_report(&single, &[0.1, 0.3, 0.5], 2);
        assert_eq!(with_dup, r3.rows.iter().map(|r| r.n_clusters).collect::<Vec<_>>());
    }

    #[test]
    fn spearman_basic() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]), Some(1.0));
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), Some(-1.0));
        assert_eq!(spearman(&[1.0, 1.0], &[1.0, 2.0]), None);
    }
}
