//! Global/individual thresholds with linear decay and patience stopping.
//!
//! Thresholds are held in integer thousandths of kcal/mol so repeated decay
//! is exact.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::AffinityError;

/// kcal/mol to integer thousandths, rounding to nearest.
pub fn to_milli(kcal: f64) -> i64 {
    (kcal * 1000.0).round() as i64
}

pub fn from_milli(m: i64) -> f64 {
    m as f64 / 1000.0
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdState {
    pub t_global_milli: i64,
    pub t_ind_milli: i64,
    pub delta_milli: i64,
    pub n_min: usize,
    pub patience: usize,
    /// Consecutive affinity cycles without decay.
    pub counter: usize,
    /// Completed affinity cycles.
    pub cycle: usize,
}

impl ThresholdState {
    pub fn new(t_global: f64, t_ind: f64, delta: f64, n_min: usize, patience: usize) -> Result<Self, AffinityError> {
        if !(delta >= 0.0) || !t_global.is_finite() || !t_ind.is_finite() {
            return Err(AffinityError::Config("delta must be ≥ 0 and thresholds finite".into()));
        }
        if patience == 0 {
            return Err(AffinityError::Config("patience must be ≥ 1".into()));
        }
        Ok(ThresholdState {
            t_global_milli: to_milli(t_global),
            t_ind_milli: to_milli(t_ind),
            delta_milli: to_milli(delta),
            n_min,
            patience,
            counter: 0,
            cycle: 0,
        })
    }

    pub fn t_global(&self) -> f64 {
        from_milli(self.t_global_milli)
    }

    pub fn t_ind(&self) -> f64 {
        from_milli(self.t_ind_milli)
    }

    pub fn delta(&self) -> f64 {
        from_milli(self.delta_milli)
    }

    pub fn is_stopped(&self) -> bool {
        self.counter >= self.patience
    }
}

/// Per-target scores for one molecule, keyed by canonical SMILES.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub key: String,
    pub scores: BTreeMap<String, f64>,
}

impl ScoreRecord {
    /// Mean over the given targets.
    pub fn global(&self, targets: &[String]) -> Result<f64, AffinityError> {
        let mut sum = 0.0;
        for t in targets {
            sum += self.score(t)?;
        }
        Ok(sum / targets.len() as f64)
    }

    pub fn score(&self, target: &str) -> Result<f64, AffinityError> {
        self.scores.get(target).copied().ok_or_else(|| AffinityError::MissingScore {
            molecule: self.key.clone(),
            target: target.to_string(),
        })
    }
}

/// Pass iff mean ≤ t_global and every per-target score ≤ t_ind.
pub fn evaluate_at(record: &ScoreRecord, targets: &[String], t_global: f64, t_ind: f64) -> Result<bool, AffinityError> {
    let global = record.global(targets)?;
    let mut all = true;
    for t in targets {
        all &= record.score(t)? <= t_ind;
    }
    Ok(global <= t_global && all)
}

pub fn evaluate(record: &ScoreRecord, targets: &[String], st: &ThresholdState) -> Result<bool, AffinityError> {
    evaluate_at(record, targets, st.t_global(), st.t_ind())
}

/// Both thresholds drop by δ iff `n_passed ≥ n_min`. Returns whether they did.
pub fn decay(st: &ThresholdState, n_passed: usize) -> (ThresholdState, bool) {
    let mut next = st.clone();
    let decayed = n_passed >= st.n_min;
    if decayed {
        next.t_global_milli -= st.delta_milli;
        next.t_ind_milli -= st.delta_milli;
    }
    (next, decayed)
}

/// Resets the counter on decay, otherwise increments it; the flag is the
/// stop signal.
pub fn update_patience(st: &ThresholdState, decayed: bool) -> (ThresholdState, bool) {
    let mut next = st.clone();
    next.counter = if decayed { 0 } else { st.counter + 1 };
    let stop = next.counter >= next.patience;
    (next, stop)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleTransition {
    pub cycle: usize,
    pub n_passed: usize,
    pub t_global_before: f64,
    pub t_ind_before: f64,
    pub t_global_after: f64,
    pub t_ind_after: f64,
    pub decayed: bool,
    pub counter: usize,
    pub stop: bool,
}

/// Decay then patience for one completed affinity cycle.
pub fn advance(st: &ThresholdState, n_passed: usize) -> (ThresholdState, CycleTransition) {
    let (decayed_state, decayed) = decay(st, n_passed);
    let (mut next, stop) = update_patience(&decayed_state, decayed);
    next.cycle = st.cycle + 1;
    let tr = CycleTransition {
        cycle: next.cycle,
        n_passed,
        t_global_before: st.t_global(),
        t_ind_before: st.t_ind(),
        t_global_after: next.t_global(),
        t_ind_after: next.t_ind(),
        decayed,
        counter: next.counter,
        stop,
    };
    (next, tr)
}

/// Runs a scripted pass-count sequence until it ends or stopping fires.
pub fn simulate(start: &ThresholdState, pass_counts: &[usize]) -> (ThresholdState, Vec<CycleTransition>) {
    let mut st = start.clone();
    let mut rows = Vec::new();
    for &n in pass_counts {
        let (next, tr) = advance(&st, n);
        st = next;
        let stop = tr.stop;
        rows.push(tr);
        if stop {
            break;
        }
    }
    (st, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(v: &[f64]) -> (ScoreRecord, Vec<String>) {
        let targets: Vec<String> = (0..v.len()).map(|i| format!("t{i}")).collect();
        let scores = targets.iter().cloned().zip(v.iter().copied()).collect();
        (
            ScoreRecord {
                key: "m".into(),
                scores,
            },
            targets,
        )
    }

    fn default_start() -> ThresholdState {
        ThresholdState::new(-7.5, -7.0, 0.1, 50, 3).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let (r, t) = rec(&[-8.1, -7.9, -8.3]);
        assert!(evaluate_at(&r, &t, -8.0, -7.8).unwrap());
        let (r, t) = rec(&[-9.5, -9.5, -6.0]);
        assert!(!evaluate_at(&r, &t, -8.0, -7.8).unwrap());
        let (r, t) = rec(&[-8.0, -8.0, -8.0]);
        assert!(evaluate_at(&r, &t, -8.0, -8.0).unwrap());
        let (r, _) = rec(&[-8.0]);
        assert!(matches!(
            evaluate_at(&r, &["t0".into(), "zz".into()], -1.0, -1.0),
            Err(AffinityError::MissingScore { .. })
        ));
    }

    #[test]
    fn decay_examples() {
        let st = default_start();
        let (a, d) = decay(&st, 60);
        assert!(d);
        assert_eq!(a.t_global(), -7.6);
        assert_eq!(a.t_ind(), -7.1);
        let (b, d) = decay(&st, 49);
        assert!(!d);
        assert_eq!(b, st);
        let mut s = st;
        for _ in 0..10 {
            s = decay(&s, 50).0;
        }
        assert_eq!((s.t_global(), s.t_ind()), (-8.5, -8.0));
    }

    #[test]
    fn patience_examples() {
        let st = default_start();
        let (a, stop) = update_patience(&st, true);
        assert_eq!((a.counter, stop), (0, false));
        let mut s = st.clone();
        let mut stops = Vec::new();
        for _ in 0..3 {
            let (n, stop) = update_patience(&s, false);
            s = n;
            stops.push(stop);
        }
        assert_eq!(stops, vec![false, false, true]);
        let mut s = st;
        for d in [false, false, true] {
            s = update_patience(&s, d).0;
        }
        assert_eq!(s.counter, 0);
    }

    #[test]
    fn negative_delta_rejected() {
        assert!(ThresholdState::new(-7.5, -7.0, -0.1, 50, 3).is_err());
    }
}
