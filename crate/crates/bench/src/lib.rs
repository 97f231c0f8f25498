//! Shared inputs for the criterion benchmarks.

use mtgen::chem::io::parse_smiles_list;

/// The bundled toy corpus.
pub fn corpus() -> Vec<String> {
    parse_smiles_list(include_str!("../../core/data/toy_corpus.smi"))
        .into_iter()
        .map(|r| r.smiles)
        .collect()
}
