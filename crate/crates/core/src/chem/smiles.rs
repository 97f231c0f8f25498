//! SMILES reader.
//!
//! Supported: organic-subset and bracket atoms (element, aromatic form,
//! hydrogen count, charge), branches, ring closures including `%nn`, bond
//! symbols `- = # :` and `.` fragments. Stereo marks, isotopes, atom classes
//! and wildcards are reported as unsupported features.

use std::collections::BTreeMap;
use std::fmt;

use super::aromatic;
use super::element;
use super::graph::{Atom, Bond, BondOrder, MolGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseErrorKind {
    Syntax,
    UnclosedRing,
    Valence,
    UnsupportedFeature,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParseErrorKind::Syntax => "syntax",
            ParseErrorKind::UnclosedRing => "unclosed_ring",
            ParseErrorKind::Valence => "valence",
            ParseErrorKind::UnsupportedFeature => "unsupported_feature",
        })
    }
}

/// Why a SMILES string was rejected, and where.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{kind} error at position {position}: {message}")]
pub struct ParseDiagnostics {
    pub kind: ParseErrorKind,
    /// Character offset of the first offending character.
    pub position: usize,
    pub message: String,
}

impl ParseDiagnostics {
    fn new(kind: ParseErrorKind, position: usize, message: impl Into<String>) -> Self {
        ParseDiagnostics {
            kind,
            position,
            message: message.into(),
        }
    }
}

struct RingOpen {
    atom: usize,
    order: Option<BondOrder>,
    position: usize,
}

struct Parser<'a> {
    text: &'a [u8],
    pos: usize,
    atoms: Vec<Atom>,
    atom_pos: Vec<usize>,
    bonds: Vec<(usize, usize, BondOrder, usize)>,
    prev: Option<usize>,
    branches: Vec<(Option<usize>, usize)>,
    pending: Option<(BondOrder, usize)>,
    rings: BTreeMap<u32, RingOpen>,
}

/// Parses a SMILES string into a valence-checked, aromaticity-perceived graph.
pub fn parse_smiles(text: &str) -> Result<MolGraph, ParseDiagnostics> {
    if text.is_empty() {
        return Err(ParseDiagnostics::new(ParseErrorKind::Syntax, 0, "empty SMILES"));
    }
    if let Some(i) = text.bytes().position(|b| !b.is_ascii()) {
        return Err(ParseDiagnostics::new(ParseErrorKind::Syntax, i, "non-ASCII character"));
    }
    let mut p = Parser {
        text: text.as_bytes(),
        pos: 0,
        atoms: Vec::new(),
        atom_pos: Vec::new(),
        bonds: Vec::new(),
        prev: None,
        branches: Vec::new(),
        pending: None,
        rings: BTreeMap::new(),
    };
    p.run()?;
    p.finish()
}

impl Parser<'_> {
    fn err<T>(&self, kind: ParseErrorKind, at: usize, msg: impl Into<String>) -> Result<T, ParseDiagnostics> {
        Err(ParseDiagnostics::new(kind, at.min(self.text.len().saturating_sub(1)), msg))
    }

    fn peek(&self) -> Option<u8> {
        self.text.get(self.pos).copied()
    }

    fn run(&mut self) -> Result<(), ParseDiagnostics> {
        use ParseErrorKind::*;
        while let Some(c) = self.peek() {
            let start = self.pos;
            match c {
                b'(' => {
                    if self.prev.is_none() || self.pending.is_some() {
                        return self.err(Syntax, start, "branch without a preceding atom");
                    }
                    self.branches.push((self.prev, start));
                    self.pos += 1;
                }
                b')' => {
                    if self.pending.is_some() {
                        return self.err(Syntax, start, "bond before ')'");
                    }
                    let Some((atom, open)) = self.branches.pop() else {
                        return self.err(Syntax, start, "unmatched ')'");
                    };
                    if self.prev == atom && self.text[start - 1] == b'(' {
                        return self.err(Syntax, open, "empty branch");
                    }
                    self.prev = atom;
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' => {
                    if self.prev.is_none() || self.pending.is_some() {
                        return self.err(Syntax, start, "misplaced bond symbol");
                    }
                    let order = match c {
                        b'-' => BondOrder::Single,
                        b'=' => BondOrder::Double,
                        b'#' => BondOrder::Triple,
                        _ => BondOrder::Aromatic,
                    };
                    self.pending = Some((order, start));
                    self.pos += 1;
                }
                b'/' | b'\\' => return self.err(UnsupportedFeature, start, "directional bonds (stereo) are not supported"),
                b'$' => return self.err(UnsupportedFeature, start, "quadruple bonds are not supported"),
                b'*' => return self.err(UnsupportedFeature, start, "wildcard atoms are not supported"),
                b'.' => {
                    if self.prev.is_none() || self.pending.is_some() {
                        return self.err(Syntax, start, "misplaced '.'");
                    }
                    self.prev = None;
                    self.pos += 1;
                }
                b'0'..=b'9' | b'%' => self.ring_bond()?,
                b'[' => {
                    let atom = self.bracket_atom()?;
                    self.add_atom(atom, start)?;
                }
                _ => {
                    let atom = self.organic_atom()?;
                    self.add_atom(atom, start)?;
                }
            }
        }
        if let Some((_, at)) = self.pending {
            return self.err(Syntax, at, "dangling bond symbol");
        }
        if let Some(&(_, open)) = self.branches.last() {
            return self.err(Syntax, open, "unclosed branch");
        }
        if let Some(r) = self.rings.values().min_by_key(|r| r.position) {
            return self.err(UnclosedRing, r.position, "ring bond opened but never closed");
        }
        Ok(())
    }

    fn add_atom(&mut self, atom: Atom, at: usize) -> Result<(), ParseDiagnostics> {
        let idx = self.atoms.len();
        self.atoms.push(atom);
        self.atom_pos.push(at);
        if let Some(prev) = self.prev {
            let order = match self.pending.take() {
                Some((o, _)) => o,
                None => self.implicit_order(prev, idx),
            };
            self.bonds.push((prev, idx, order, at));
        } else if let Some((_, bat)) = self.pending {
            return self.err(ParseErrorKind::Syntax, bat, "bond without a preceding atom");
        }
        self.prev = Some(idx);
        Ok(())
    }

    fn implicit_order(&self, a: usize, b: usize) -> BondOrder {
        if self.atoms[a].aromatic && self.atoms[b].aromatic {
            BondOrder::Aromatic
        } else {
            BondOrder::Single
        }
    }

    fn ring_bond(&mut self) -> Result<(), ParseDiagnostics> {
        use ParseErrorKind::*;
        let start = self.pos;
        let Some(prev) = self.prev else {
            return self.err(Syntax, start, "ring bond without a preceding atom");
        };
        let number = if self.text[start] == b'%' {
            let d: Vec<u8> = self.text[start + 1..].iter().take(2).copied().collect();
            if d.len() < 2 || !d.iter().all(u8::is_ascii_digit) {
                return self.err(Syntax, start, "'%' must be followed by two digits");
            }
            self.pos += 3;
            ((d[0] - b'0') * 10 + (d[1] - b'0')) as u32
        } else {
            self.pos += 1;
            (self.text[start] - b'0') as u32
        };
        let order = self.pending.take().map(|(o, _)| o);
        match self.rings.remove(&number) {
            None => {
                self.rings.insert(number, RingOpen { atom: prev, order, position: start });
            }
            Some(open) => {
                if open.atom == prev {
                    return self.err(Syntax, start, "ring bond closes on its own atom");
                }
                let order = match (open.order, order) {
                    (Some(a), Some(b)) if a != b => {
                        return self.err(Syntax, start, "conflicting ring bond orders");
                    }
                    (Some(a), _) | (None, Some(a)) => a,
                    (None, None) => self.implicit_order(open.atom, prev),
                };
                let exists = self.bonds.iter().any(|&(x, y, _, _)| {
                    (x == open.atom && y == prev) || (x == prev && y == open.atom)
                });
                if exists {
                    return self.err(Syntax, start, "duplicate bond between the same atoms");
                }
                self.bonds.push((open.atom, prev, order, start));
            }
        }
        Ok(())
    }

    fn organic_atom(&mut self) -> Result<Atom, ParseDiagnostics> {
        let start = self.pos;
        let c = self.text[start];
        let next = self.text.get(start + 1).copied();
        let (z, aromatic, len) = match (c, next) {
            (b'C', Some(b'l')) => (17, false, 2),
            (b'B', Some(b'r')) => (35, false, 2),
            (b'B', _) => (5, false, 1),
            (b'C', _) => (6, false, 1),
            (b'N', _) => (7, false, 1),
            (b'O', _) => (8, false, 1),
            (b'P', _) => (15, false, 1),
            (b'S', _) => (16, false, 1),
            (b'F', _) => (9, false, 1),
            (b'I', _) => (53, false, 1),
            (b'b', _) => (5, true, 1),
            (b'c', _) => (6, true, 1),
            (b'n', _) => (7, true, 1),
            (b'o', _) => (8, true, 1),
            (b'p', _) => (15, true, 1),
            (b's', _) => (16, true, 1),
            _ => {
                return self.err(
                    ParseErrorKind::Syntax,
                    start,
                    format!("unexpected character '{}'", c as char),
                )
            }
        };
        self.pos += len;
        let mut atom = Atom::new(z);
        atom.aromatic = aromatic;
        Ok(atom)
    }

    fn bracket_atom(&mut self) -> Result<Atom, ParseDiagnostics> {
        use ParseErrorKind::*;
        let open = self.pos;
        self.pos += 1;
        if matches!(self.peek(), Some(b'0'..=b'9')) {
            return self.err(UnsupportedFeature, self.pos, "isotope labels are not supported");
        }
        let sym_at = self.pos;
        let rest = &self.text[self.pos..];
        let (z, aromatic, len) = bracket_symbol(rest).ok_or_else(|| {
            ParseDiagnostics::new(Syntax, sym_at.min(self.text.len() - 1), "unknown element symbol")
        })?;
        self.pos += len;
        let mut atom = Atom::new(z);
        atom.aromatic = aromatic;
        atom.implicit_from_valence = false;
        if self.peek() == Some(b'@') {
            return self.err(UnsupportedFeature, self.pos, "chirality is not supported");
        }
        if self.peek() == Some(b'H') {
            self.pos += 1;
            atom.explicit_h = match self.peek() {
                Some(d @ b'0'..=b'9') => {
                    self.pos += 1;
                    d - b'0'
                }
                _ => 1,
            };
        }
        if let Some(sign @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let mut magnitude: i8 = 1;
            match self.peek() {
                Some(d @ b'0'..=b'9') => {
                    self.pos += 1;
                    magnitude = (d - b'0') as i8;
                }
                _ => {
                    while self.peek() == Some(sign) && magnitude < 9 {
                        self.pos += 1;
                        magnitude += 1;
                    }
                }
            }
            atom.formal_charge = if sign == b'+' { magnitude } else { -magnitude };
        }
        match self.peek() {
            Some(b']') => {
                self.pos += 1;
                Ok(atom)
            }
            Some(b':') => self.err(UnsupportedFeature, self.pos, "atom classes are not supported"),
            Some(_) => self.err(Syntax, self.pos, "unexpected character in bracket atom"),
            None => self.err(Syntax, open, "unterminated bracket atom"),
        }
    }

    fn finish(self) -> Result<MolGraph, ParseDiagnostics> {
        let atom_pos = self.atom_pos;
        let bonds: Vec<Bond> = self
            .bonds
            .iter()
            .map(|&(a, b, order, _)| Bond {
                begin: a,
                end: b,
                order,
                kekule: if order == BondOrder::Aromatic { BondOrder::Single } else { order },
            })
            .collect();
        let mut mol = MolGraph::from_parts(self.atoms, bonds);
        aromatic::kekulize(&mut mol).map_err(|(atom, msg)| {
            ParseDiagnostics::new(ParseErrorKind::Valence, atom_pos[atom], msg)
        })?;
        assign_hydrogens(&mut mol).map_err(|atom| {
            ParseDiagnostics::new(
                ParseErrorKind::Valence,
                atom_pos[atom],
                format!("atom {} exceeds its allowed valence", atom + 1),
            )
        })?;
        aromatic::perceive(&mut mol);
        Ok(mol)
    }
}

fn bracket_symbol(rest: &[u8]) -> Option<(u8, bool, usize)> {
    let two = |n: usize| std::str::from_utf8(&rest[..n.min(rest.len())]).ok();
    // aromatic two-letter forms first
    for (sym, z) in [("se", 34u8), ("as", 33), ("te", 52)] {
        if two(2) == Some(sym) {
            return Some((z, true, 2));
        }
    }
    let first = *rest.first()?;
    if first.is_ascii_lowercase() {
        let z = match first {
            b'b' => 5,
            b'c' => 6,
            b'n' => 7,
            b'o' => 8,
            b'p' => 15,
            b's' => 16,
            _ => return None,
        };
        return Some((z, true, 1));
    }
    if !first.is_ascii_uppercase() {
        return None;
    }
    if rest.len() >= 2 && rest[1].is_ascii_lowercase() {
        if let Some(z) = two(2).and_then(element::from_symbol) {
            return Some((z, false, 2));
        }
    }
    element::from_symbol(two(1)?).map(|z| (z, false, 1))
}

/// Fills implicit hydrogens from the valence table and checks every atom
/// against its allowed valences. Returns the first offending atom.
pub(crate) fn assign_hydrogens(mol: &mut MolGraph) -> Result<(), usize> {
    for i in 0..mol.atoms.len() {
        let used: u8 = mol.adjacency[i]
            .iter()
            .map(|&(_, b)| mol.bonds[b].kekule.valence())
            .sum();
        let atom = &mol.atoms[i];
        if atom.implicit_from_valence {
            let target = element::target_valence(atom.element, atom.formal_charge, used).ok_or(i)?;
            mol.atoms[i].implicit_h = target - used;
        } else {
            let total = used + atom.explicit_h;
            let allowed = element::allowed_valences(atom.element, atom.formal_charge);
            if let Some(&max) = allowed.last() {
                if total > max {
                    return Err(i);
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hs(s: &str) -> Vec<u8> {
        parse_smiles(s).unwrap().atoms().iter().map(|a| a.total_h()).collect()
    }

    #[test]
    fn ethanol_hydrogens() {
        let m = parse_smiles("CCO").unwrap();
        assert_eq!(m.atom_count(), 3);
        assert_eq!(hs("CCO"), vec![3, 2, 1]);
    }

    #[test]
    fn benzene_is_aromatic_with_one_h_each() {
        let m = parse_smiles("c1ccccc1").unwrap();
        assert!(m.atoms().iter().all(|a| a.aromatic && a.element == 6 && a.implicit_h == 1));
        assert!(m.bonds().iter().all(|b| b.order == BondOrder::Aromatic));
    }

    #[test]
    fn kekule_benzene_becomes_aromatic() {
        let m = parse_smiles("C1=CC=CC=C1").unwrap();
        assert!(m.atoms().iter().all(|a| a.aromatic));
    }

    #[test]
    fn error_kinds_and_positions() {
        let e = parse_smiles("C1CC").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnclosedRing);
        assert_eq!(e.position, 1);

        let e = parse_smiles("C(C)(C)(C)(C)C").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Valence);
        assert_eq!(e.position, 0);

        let e = parse_smiles("C[C@H](N)O").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnsupportedFeature);
        assert_eq!(e.position, 3);

        let e = parse_smiles("F/C=C/F").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnsupportedFeature);

        let e = parse_smiles("CCX").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Syntax);
        assert_eq!(e.position, 2);

        assert_eq!(parse_smiles("C(").unwrap_err().kind, ParseErrorKind::Syntax);
        assert_eq!(parse_smiles("C)").unwrap_err().kind, ParseErrorKind::Syntax);
        assert_eq!(parse_smiles("C=").unwrap_err().kind, ParseErrorKind::Syntax);
        assert_eq!(parse_smiles("C11").unwrap_err().kind, ParseErrorKind::Syntax);
        assert_eq!(parse_smiles("[C").unwrap_err().kind, ParseErrorKind::Syntax);
    }

    #[test]
    fn unkekulizable_rings_are_rejected() {
        assert_eq!(parse_smiles("c1cccc1").unwrap_err().kind, ParseErrorKind::Valence);
        assert_eq!(parse_smiles("c1ccnc1").unwrap_err().kind, ParseErrorKind::Valence);
        assert!(parse_smiles("c1cc[nH]c1").is_ok());
        assert!(parse_smiles("Cn1cccc1").is_ok());
    }

    #[test]
    fn heteroaromatics() {
        let pyridine = parse_smiles("c1ccncc1").unwrap();
        assert_eq!(pyridine.atom(3).total_h(), 0);
        assert!(pyridine.atoms().iter().all(|a| a.aromatic));

        let furan = parse_smiles("c1ccoc1").unwrap();
        assert!(furan.atoms().iter().all(|a| a.aromatic));
        assert_eq!(furan.atom(3).total_h(), 0);

        let pyridone = parse_smiles("O=c1cccc[nH]1").unwrap();
        assert!(pyridone.atom(1).aromatic);
        assert_eq!(pyridone.atom(6).explicit_h, 1);

        let indole = parse_smiles("c1ccc2[nH]ccc2c1").unwrap();
        assert!(indole.atoms().iter().all(|a| a.aromatic));

        let naphthalene = parse_smiles("C1=CC2=CC=CC=C2C=C1").unwrap();
        assert!(naphthalene.atoms().iter().all(|a| a.aromatic));
    }

    #[test]
    fn non_aromatic_rings_stay_aliphatic() {
        let m = parse_smiles("C1=CCC=C1").unwrap();
        assert!(m.atoms().iter().all(|a| !a.aromatic));
        let m = parse_smiles("C1CCCCC1").unwrap();
        assert!(m.atoms().iter().all(|a| !a.aromatic));
    }

    #[test]
    fn charges_and_brackets() {
        let m = parse_smiles("C[N+](C)(C)C").unwrap();
        assert_eq!(m.atom(1).formal_charge, 1);
        let m = parse_smiles("[O-]C(=O)C").unwrap();
        assert_eq!(m.atom(0).formal_charge, -1);
        assert_eq!(m.atom(0).total_h(), 0);
        let m = parse_smiles("[NH4+]").unwrap();
        assert_eq!(m.atom(0).explicit_h, 4);
        let m = parse_smiles("[Fe++]").unwrap();
        assert_eq!(m.atom(0).formal_charge, 2);
        assert_eq!(parse_smiles("[NH5]").unwrap_err().kind, ParseErrorKind::Valence);
        let m = parse_smiles("c1cc[se]c1").unwrap();
        assert!(m.atom(3).aromatic);
    }

    #[test]
    fn ring_closure_variants() {
        let m = parse_smiles("C%10CCCCC%10").unwrap();
        assert_eq!(m.ring_info().num_rings(), 1);
        let m = parse_smiles("C1CCCCC=1").unwrap();
        assert_eq!(m.bond_count(), 6);
        assert_eq!(parse_smiles("C=1CCCCC#1").unwrap_err().kind, ParseErrorKind::Syntax);
    }

    #[test]
    fn fragments_are_parsed() {
        let m = parse_smiles("CC(=O)[O-].[Na+]").unwrap();
        assert_eq!(m.fragment_count(), 2);
        assert!(!m.is_single_fragment());
    }
}
