//! Multi-target molecular generation with nested active learning.

pub mod affinity;
pub mod al_engine;
pub mod chem;
pub mod descriptors;
pub mod fingerprints;
pub mod metrics;
pub mod smarts;
pub mod vae;

pub use chem::{canonical_smiles, murcko_scaffold, parse_smiles, MolGraph, ParseDiagnostics, ParseErrorKind};
pub use fingerprints::{morgan_fingerprint, tanimoto, Fingerprint};
