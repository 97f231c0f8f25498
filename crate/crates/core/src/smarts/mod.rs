//! SMARTS subset: parsing, substructure search and catalogue screening.

mod catalogue;
mod matcher;
mod parse;
mod query;

pub use catalogue::{screen, Catalogue, CatalogueEntry, CatalogueError, CatalogueHit, ScreenResult, STAGE2_CATALOGUES};
pub use matcher::{brute_force_match, count_matches, has_match, matches_at, substructure_match};
pub use parse::{parse_smarts, SmartsError};
pub use query::{AtomExpr, AtomPrimitive, BondExpr, BondPrimitive, QueryBond, QueryGraph};
