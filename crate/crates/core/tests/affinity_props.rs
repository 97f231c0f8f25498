use std::collections::BTreeMap;

use mtgen::affinity::{
    bundled_targets, evaluate_at, simulate, AffinityOracle, MockOracle, ScoreRecord, ThresholdState,
};
use mtgen::chem::canonicalize;
use proptest::prelude::*;

fn default_start() -> ThresholdState {
    ThresholdState::new(-7.5, -7.0, 0.1, 50, 3).unwrap()
}

/// (n_passed, t_global_after, t_ind_after, counter, stop), computed by hand.
const ABLATED: [(usize, f64, f64, usize, bool); 15] = [
    (60, -7.6, -7.1, 0, false),
    (75, -7.7, -7.2, 0, false),
    (10, -7.7, -7.2, 1, false),
    (50, -7.8, -7.3, 0, false),
    (90, -7.9, -7.4, 0, false),
    (51, -8.0, -7.5, 0, false),
    (49, -8.0, -7.5, 1, false),
    (66, -8.1, -7.6, 0, false),
    (52, -8.2, -7.7, 0, false),
    (58, -8.3, -7.8, 0, false),
    (70, -8.4, -7.9, 0, false),
    (55, -8.5, -8.0, 0, false),
    (12, -8.5, -8.0, 1, false),
    (30, -8.5, -8.0, 2, false),
    (8, -8.5, -8.0, 3, true),
];

const REGULAR: [(usize, f64, f64, usize, bool); 13] = [
    (80, -7.6, -7.1, 0, false),
    (64, -7.7, -7.2, 0, false),
    (50, -7.8, -7.3, 0, false),
    (20, -7.8, -7.3, 1, false),
    (71, -7.9, -7.4, 0, false),
    (53, -8.0, -7.5, 0, false),
    (3, -8.0, -7.5, 1, false),
    (60, -8.1, -7.6, 0, false),
    (57, -8.2, -7.7, 0, false),
    (50, -8.3, -7.8, 0, false),
    (41, -8.3, -7.8, 1, false),
    (0, -8.3, -7.8, 2, false),
    (17, -8.3, -7.8, 3, true),
];

fn check_table(table: &[(usize, f64, f64, usize, bool)], final_t: (f64, f64)) {
    // trailing counts after the stop must be ignored
    let mut counts: Vec<usize> = table.iter().map(|r| r.0).collect();
    counts.extend([500, 500]);
    let (end, rows) = simulate(&default_start(), &counts);
    assert_eq!(rows.len(), table.len());
    for (row, want) in rows.iter().zip(table) {
        assert_eq!(
            (row.n_passed, row.t_global_after, row.t_ind_after, row.counter, row.stop),
            *want,
            "cycle {}",
            row.cycle
        );
    }
    assert_eq!((end.t_global(), end.t_ind()), final_t);
    assert!(end.is_stopped());
}

#[test]
fn ablated_trajectory() {
    assert_eq!(ABLATED.iter().filter(|r| r.0 >= 50).count(), 10);
    check_table(&ABLATED, (-8.5, -8.0));
}

#[test]
fn regular_trajectory() {
    assert_eq!(REGULAR.iter().filter(|r| r.0 >= 50).count(), 8);
    check_table(&REGULAR, (-8.3, -7.8));
}

#[test]
fn reference_ligand_outscores_corpus() {
    let targets = bundled_targets();
    let oracle = MockOracle::new(&targets, 7).unwrap();
    let corpus: Vec<String> = include_str!("../data/toy_corpus.smi")
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| canonicalize(l.split_whitespace().next().unwrap()).unwrap())
        .collect();
    for t in &targets {
        let reference = oracle.score(&canonicalize(&t.reference_smiles).unwrap(), t).unwrap();
        let beaten = corpus.iter().filter(|m| reference <= oracle.score(m, t).unwrap()).count();
        assert!(beaten * 10 >= corpus.len() * 9, "{}: {beaten}/{}", t.id, corpus.len());
    }
}

proptest! {
    #[test]
    fn thresholds_never_rise_and_keep_their_gap(counts in proptest::collection::vec(0usize..120, 0..40), delta in 0.0f64..0.5) {
        let start = ThresholdState::new(-7.5, -7.0, delta, 50, 3).unwrap();
        let (_, rows) = simulate(&start, &counts);
        let mut prev = (start.t_global(), start.t_ind());
        for r in &rows {
            prop_assert!(r.t_global_after <= prev.0 && r.t_ind_after <= prev.1);
            prop_assert_eq!(
                mtgen::affinity::to_milli(r.t_global_after) - mtgen::affinity::to_milli(r.t_ind_after),
                -500
            );
            prev = (r.t_global_after, r.t_ind_after);
            prop_assert!(r.counter <= 3);
        }
        // stop fires exactly when the counter reaches patience
        for (i, r) in rows.iter().enumerate() {
            prop_assert_eq!(r.stop, r.counter == 3);
            if r.stop {
                prop_assert_eq!(i + 1, rows.len());
            }
        }
    }

    #[test]
    fn relaxing_thresholds_never_fails_a_pass(
        scores in proptest::collection::vec(-12.0f64..-2.0, 3),
        tg in -10.0f64..-5.0, ti in -10.0f64..-5.0,
        dg in 0.0f64..2.0, di in 0.0f64..2.0,
    ) {
        let targets: Vec<String> = vec!["a".into(), "b".into(), "c".into()];
        let rec = ScoreRecord {
            key: "m".into(),
            scores: targets.iter().cloned().zip(scores).collect::<BTreeMap<_, _>>(),
        };
        if evaluate_at(&rec, &targets, tg, ti).unwrap() {
            prop_assert!(evaluate_at(&rec, &targets, tg + dg, ti + di).unwrap());
        }
    }
}
