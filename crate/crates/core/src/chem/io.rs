//! SMILES list files: one `SMILES[<TAB>id]` record per line, `#` comments
//! and blank lines ignored.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmilesRecord {
    pub smiles: String,
    pub id: Option<String>,
    /// 1-based line number in the source.
    pub line: usize,
}

pub fn parse_smiles_list(text: &str) -> Vec<SmilesRecord> {
    text.lines()
        .enumerate()
        .filter_map(|(i, raw)| {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                return None;
            }
            let mut fields = line.split(['\t', ' ']).filter(|f| !f.is_empty());
            let smiles = fields.next()?.to_string();
            let id = fields.next().map(str::to_string);
            Some(SmilesRecord { smiles, id, line: i + 1 })
        })
        .collect()
}

pub fn read_smiles_file(path: &Path) -> io::Result<Vec<SmilesRecord>> {
    Ok(parse_smiles_list(&fs::read_to_string(path)?))
}

pub fn write_smiles_file<'a, I>(path: &Path, smiles: I) -> io::Result<()>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut out = io::BufWriter::new(fs::File::create(path)?);
    for s in smiles {
        writeln!(out, "{s}")?;
    }
    out.flush()
}
