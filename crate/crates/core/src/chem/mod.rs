//! Molecular graphs from SMILES: parsing, valence checks, aromaticity,
//! canonical output and Murcko scaffolds.

mod aromatic;
mod canon;
pub mod element;
mod graph;
pub mod io;
mod rings;
mod scaffold;
mod smiles;
mod stereo;

pub use canon::{canonical_ranks, canonical_smiles, symmetry_classes};
pub use stereo::potential_stereocenters;
pub use graph::{Atom, Bond, BondOrder, MolGraph};
pub use rings::RingInfo;
pub use scaffold::murcko_scaffold;
pub use smiles::{parse_smiles, ParseDiagnostics, ParseErrorKind};

/// Parses and returns the canonical form in one step.
pub fn canonicalize(smiles: &str) -> Result<String, ParseDiagnostics> {
    parse_smiles(smiles).map(|m| canonical_smiles(&m))
}
