//! CSV reports derived from a run state.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::state::RunState;
use super::EngineError;
use crate::affinity::evaluate_at;
use crate::chem::parse_smiles;
use crate::fingerprints::morgan4;
use crate::metrics::{scaffold_cluster_report, score_histogram};

/// File name and contents, in write order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunReport {
    pub files: Vec<(String, String)>,
}

impl RunReport {
    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

#[derive(Serialize)]
struct Summary<'a> {
    version: &'a str,
    seed: u64,
    oracle: &'a str,
    stop_reason: Option<super::state::StopReason>,
    affinity_cycles: usize,
    chemical_cycles: usize,
    t_global: f64,
    t_ind: f64,
    patience_counter: usize,
    fixed: usize,
    accumulated: usize,
    updated: usize,
    scored: usize,
    general_digest: &'a str,
    current_checkpoint: &'a str,
}

pub fn build_report(state: &RunState) -> Result<RunReport, EngineError> {
    let cfg = state.config();
    let ids = state.target_ids();
    let mut files = Vec::new();

    let mut s = String::from("cycle,n_passed,t_global_before,t_ind_before,t_global_after,t_ind_after,decayed,counter,stop\n");
    for r in &state.affinity {
        let t = &r.transition;
        let _ = writeln!(
            s,
            "{},{},{:.6},{:.6},{:.6},{:.6},{},{},{}",
            t.cycle, t.n_passed, t.t_global_before, t.t_ind_before, t.t_global_after, t.t_ind_after, t.decayed, t.counter, t.stop
        );
    }
    files.push(("thresholds.csv".to_string(), s));

    let mut s = String::from("step,affinity_cycle,chemical_cycle,fixed,accumulated,updated\n");
    for r in &state.sizes {
        let a = r.affinity_cycle.map(|x| x.to_string()).unwrap_or_default();
        let c = r.chemical_cycle.map(|x| x.to_string()).unwrap_or_default();
        let _ = writeln!(s, "{},{a},{c},{},{},{}", r.step, r.fixed, r.accumulated, r.updated);
    }
    files.push(("set_sizes.csv".to_string(), s));

    let mut s = String::from(
        "affinity_cycle,chemical_cycle,phase,ta_threshold,n_gen,n_val,n_uni,n_unk,validity,uniqueness,novelty,\
         custom_motifs,qed_sa,diversity,stage2_catalogues,added,accumulated,train_size\n",
    );
    for r in &state.chemical {
        let st = &r.stats;
        let passed: Vec<String> = r
            .filters
            .iter()
            .map(|f| if f.applied { f.passed.to_string() } else { String::new() })
            .collect();
        let _ = writeln!(
            s,
            "{},{},{},{:.6},{},{},{},{},{},{},{},{},{},{},{}",
            r.affinity_cycle,
            r.chemical_cycle,
            r.phase,
            r.ta_threshold,
            st.n_gen,
            st.n_val,
            st.n_uni,
            st.n_unk,
            opt(st.validity),
            opt(st.uniqueness),
            opt(st.novelty),
            passed.join(","),
            r.added.len(),
            r.accumulated_size,
            r.finetune.train_size
        );
    }
    files.push(("generation.csv".to_string(), s));

    let mut s = String::from("affinity_cycle,lo,hi,count\n");
    for r in &state.affinity {
        let globals: Vec<f64> = r
            .evaluated
            .iter()
            .filter_map(|m| state.cache.get(m, &state.started.targets))
            .map(|rec| rec.global(&ids))
            .collect::<Result<_, _>>()?;
        for b in score_histogram(&globals, cfg.histogram_bin_width) {
            let _ = writeln!(s, "{},{:.6},{:.6},{}", r.affinity_cycle, b.lo, b.hi, b.count);
        }
    }
    files.push(("histograms.csv".to_string(), s));

    // Candidates: every scored molecule passing at least one reporting pair.
    let pairs = &cfg.reporting_thresholds;
    let mut counts = vec![0usize; pairs.len()];
    let mut s = String::from("canonical_smiles");
    for t in &ids {
        let _ = write!(s, ",{t}");
    }
    s.push_str(",global");
    for p in pairs {
        let _ = write!(s, ",pass_{:.2}_{:.2}", p[0], p[1]);
    }
    s.push_str(",morgan4_hex\n");
    for m in state.cache.entries.keys() {
        let Some(rec) = state.cache.get(m, &state.started.targets) else {
            continue;
        };
        let flags: Vec<bool> = pairs
            .iter()
            .map(|p| evaluate_at(&rec, &ids, p[0], p[1]))
            .collect::<Result<_, _>>()?;
        if !flags.iter().any(|&f| f) {
            continue;
        }
        for (c, &f) in counts.iter_mut().zip(&flags) {
            *c += f as usize;
        }
        s.push_str(m);
        for t in &ids {
            let _ = write!(s, ",{:.6}", rec.score(t)?);
        }
        let _ = write!(s, ",{:.6}", rec.global(&ids)?);
        for f in &flags {
            let _ = write!(s, ",{}", *f as u8);
        }
        let fp = morgan4(&parse_smiles(m).map_err(|e| EngineError::Data(format!("{m}: {e}")))?)?;
        let _ = writeln!(s, ",{}", fp.to_hex());
    }
    let mut c = String::from("t_global,t_ind,n_scored,n_candidates\n");
    for (p, n) in pairs.iter().zip(&counts) {
        let _ = writeln!(c, "{:.6},{:.6},{},{}", p[0], p[1], state.cache.entries.len(), n);
    }
    files.push(("candidate_counts.csv".to_string(), c));
    files.push(("candidates.csv".to_string(), s));

    // Scaffold clusters: the fixed set, then each affinity cycle's updated set.
    let mut sets = vec![state.started.fixed.clone()];
    sets.extend(state.affinity.iter().map(|r| r.survivors.clone()));
    let clusters = scaffold_cluster_report(&sets, &cfg.cluster_epsilons, cfg.cluster_min_pts);
    files.push(("scaffold_clusters.csv".to_string(), clusters.to_csv()));

    let summary = Summary {
        version: &state.started.version,
        seed: state.started.seed,
        oracle: &state.started.oracle,
        stop_reason: state.completed.as_ref().map(|c| c.reason),
        affinity_cycles: state.affinity.len(),
        chemical_cycles: state.chemical.len(),
        t_global: state.thresholds.t_global(),
        t_ind: state.thresholds.t_ind(),
        patience_counter: state.thresholds.counter,
        fixed: state.fixed.len(),
        accumulated: state.accumulated.len(),
        updated: state.updated.len(),
        scored: state.cache.entries.len(),
        general_digest: &state.started.general.digest,
        current_checkpoint: &state.current.file,
    };
    files.push(("summary.json".to_string(), serde_json::to_string_pretty(&summary)? + "\n"));

    let mut s = String::new();
    for m in &state.updated {
        let _ = writeln!(s, "{}", m.0);
    }
    files.push(("updated.smi".to_string(), s));
    Ok(RunReport { files })
}

pub fn write_report(report: &RunReport, dir: &Path) -> Result<(), EngineError> {
    fs::create_dir_all(dir)?;
    for (name, content) in &report.files {
        fs::write(dir.join(name), content)?;
    }
    Ok(())
}
