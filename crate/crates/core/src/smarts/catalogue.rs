//! Named SMARTS catalogues and molecule screening.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::matcher::has_match;
use super::parse::{parse_smarts, SmartsError};
use super::query::QueryGraph;
use crate::chem::MolGraph;

#[derive(Debug, thiserror::Error)]
pub enum CatalogueError {
    #[error("{source_name}:{line}: expected `pattern_id<TAB>SMARTS[<TAB>family]`")]
    Format { source_name: String, line: usize },
    #[error("{source_name}:{line}: duplicate pattern id '{id}'")]
    DuplicateId { source_name: String, line: usize, id: String },
    #[error("{source_name}:{line}: {error}")]
    Smarts {
        source_name: String,
        line: usize,
        error: SmartsError,
    },
    #[error("unknown bundled catalogue '{0}'")]
    Unknown(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct CatalogueEntry {
    pub id: String,
    pub family: String,
    pub query: QueryGraph,
}

#[derive(Debug, Clone)]
pub struct Catalogue {
    pub name: String,
    pub entries: Vec<CatalogueEntry>,
}

const BUNDLED: &[(&str, &str)] = &[
    ("custom_motifs", include_str!("../../data/catalogues/custom_motifs.tsv")),
    ("pains_subset", include_str!("../../data/catalogues/pains_subset.tsv")),
    ("brenk_subset", include_str!("../../data/catalogues/brenk_subset.tsv")),
    ("nih_subset", include_str!("../../data/catalogues/nih_subset.tsv")),
    ("chembl_subset", include_str!("../../data/catalogues/chembl_subset.tsv")),
];

/// Names of the medicinal-chemistry catalogues applied after the motif filter.
pub const STAGE2_CATALOGUES: &[&str] = &["pains_subset", "brenk_subset", "nih_subset", "chembl_subset"];

impl Catalogue {
    pub fn parse(name: &str, text: &str) -> Result<Self, CatalogueError> {
        let mut entries = Vec::new();
        let mut seen = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t');
            let (Some(id), Some(smarts)) = (fields.next(), fields.next()) else {
                return Err(CatalogueError::Format {
                    source_name: name.to_string(),
                    line: i + 1,
                });
            };
            let id = id.trim();
            let smarts = smarts.trim();
            if id.is_empty() || smarts.is_empty() {
                return Err(CatalogueError::Format {
                    source_name: name.to_string(),
                    line: i + 1,
                });
            }
            let family = fields.next().map(str::trim).unwrap_or(name).to_string();
            if !seen.insert(id.to_string()) {
                return Err(CatalogueError::DuplicateId {
                    source_name: name.to_string(),
                    line: i + 1,
                    id: id.to_string(),
                });
            }
            let query = parse_smarts(smarts)
                .map_err(|error| CatalogueError::Smarts {
                    source_name: name.to_string(),
                    line: i + 1,
                    error,
                })?
                .with_name(id);
            entries.push(CatalogueEntry {
                id: id.to_string(),
                family,
                query,
            });
        }
        Ok(Catalogue {
            name: name.to_string(),
            entries,
        })
    }

    /// Loads a catalogue file; the catalogue is named after the file stem.
    pub fn from_file(path: &Path) -> Result<Self, CatalogueError> {
        let text = fs::read_to_string(path)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        Self::parse(&name, &text)
    }

    pub fn bundled(name: &str) -> Result<Self, CatalogueError> {
        let (_, text) = BUNDLED
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| CatalogueError::Unknown(name.to_string()))?;
        Self::parse(name, text)
    }

    pub fn bundled_names() -> impl Iterator<Item = &'static str> {
        BUNDLED.iter().map(|(n, _)| *n)
    }

    pub fn all_bundled() -> Vec<Catalogue> {
        Self::bundled_names()
            .map(|n| Self::bundled(n).expect("bundled catalogues parse"))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogueHit {
    pub catalogue: String,
    pub pattern_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScreenResult {
    pub pass: bool,
    pub hits: Vec<CatalogueHit>,
}

/// Fails iff any pattern of any catalogue matches. Every matching pattern is
/// reported, in catalogue order.
pub fn screen(mol: &MolGraph, catalogues: &[Catalogue]) -> ScreenResult {
    let hits: Vec<CatalogueHit> = catalogues
        .iter()
        .flat_map(|c| {
            c.entries.iter().filter(|e| has_match(mol, &e.query)).map(|e| CatalogueHit {
                catalogue: c.name.clone(),
                pattern_id: e.id.clone(),
            })
        })
        .collect();
    ScreenResult {
        pass: hits.is_empty(),
        hits,
    }
}
