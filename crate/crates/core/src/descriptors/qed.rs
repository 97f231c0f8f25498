//! Quantitative estimate of drug-likeness.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::PropertyVector;

/// Weight set used to combine the eight desirabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QedWeights {
    Max,
    #[default]
    Mean,
    Unweighted,
}

#[derive(Debug, Clone, Copy)]
pub struct AdsParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
    pub dmax: f64,
}

impl AdsParams {
    /// Asymmetric double sigmoid, normalized by its maximum.
    pub fn desirability(&self, x: f64) -> f64 {
        let exp1 = 1.0 + (-(x - self.c + self.d / 2.0) / self.e).exp();
        let exp2 = 1.0 + (-(x - self.c - self.d / 2.0) / self.f).exp();
        (self.a + self.b / exp1 * (1.0 - 1.0 / exp2)) / self.dmax
    }
}

pub struct QedTable {
    pub params: [AdsParams; 8],
    pub weights_max: [f64; 8],
    pub weights_mean: [f64; 8],
    pub weights_none: [f64; 8],
}

const DATA: &str = include_str!("../../data/qed_params.tsv");
const ORDER: [&str; 8] = ["mw", "alogp", "hba", "hbd", "psa", "rotb", "arom", "alerts"];

pub fn table() -> &'static QedTable {
    static TABLE: OnceLock<QedTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let rows: Vec<Vec<&str>> = DATA
            .lines()
            .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
            .map(|l| l.split('\t').collect())
            .collect();
        let get = |name: &str| -> Vec<f64> {
            let row = rows.iter().find(|r| r[0] == name).expect("qed property row");
            row[1..].iter().map(|v| v.parse().expect("qed number")).collect()
        };
        let mut params = [AdsParams { a: 0.0, b: 0.0, c: 0.0, d: 0.0, e: 1.0, f: 1.0, dmax: 1.0 }; 8];
        let mut weights_max = [0.0; 8];
        let mut weights_mean = [0.0; 8];
        let mut weights_none = [0.0; 8];
        for (k, name) in ORDER.iter().enumerate() {
            let v = get(name);
            params[k] = AdsParams { a: v[0], b: v[1], c: v[2], d: v[3], e: v[4], f: v[5], dmax: v[6] };
            weights_max[k] = v[7];
            weights_mean[k] = v[8];
            weights_none[k] = v[9];
        }
        QedTable { params, weights_max, weights_mean, weights_none }
    })
}

/// The eight desirabilities in table order.
pub fn desirabilities(props: &PropertyVector) -> [f64; 8] {
    let t = table();
    let x = props.as_array();
    std::array::from_fn(|k| t.params[k].desirability(x[k]))
}

pub fn qed_with(props: &PropertyVector, weights: QedWeights) -> f64 {
    let t = table();
    let w = match weights {
        QedWeights::Max => &t.weights_max,
        QedWeights::Mean => &t.weights_mean,
        QedWeights::Unweighted => &t.weights_none,
    };
    let d = desirabilities(props);
    let num: f64 = w.iter().zip(d).map(|(wi, di)| wi * di.ln()).sum();
    let den: f64 = w.iter().sum();
    (num / den).exp()
}

/// Weighted-mean QED.
pub fn qed(props: &PropertyVector) -> f64 {
    qed_with(props, QedWeights::Mean)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_loads() {
        let t = table();
        assert!((t.weights_mean.iter().sum::<f64>() - 3.92).abs() < 1e-9);
        assert!((t.params[0].dmax - 104.9805561).abs() < 1e-9);
    }

    #[test]
    fn desirability_peaks_near_one() {
        let t = table();
        for p in &t.params {
            let best = (0..4000).map(|i| p.desirability(i as f64 * 0.25 - 10.0)).fold(0.0, f64::max);
            assert!(best > 0.9 && best < 1.01, "{best}");
        }
    }
}
