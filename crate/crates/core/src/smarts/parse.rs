//! SMARTS subset reader.
//!
//! Atom primitives: `*`, `a`, `A`, element symbols, `#n`, charge, `D`, `H`,
//! `X`, `v`, `R`/`Rn`, `r`/`rN`. Bond primitives: `- = # : ~ @`. Logical
//! operators `!`, `&`, `,`, `;` with the usual precedence. Branches, ring
//! closures (including `%nn`) and `.` components are accepted. Recursive
//! environments, chirality, isotopes and atom maps are rejected.

use std::collections::BTreeMap;

use super::query::{AtomExpr, AtomPrimitive, BondExpr, BondPrimitive, QueryBond, QueryGraph};
use crate::chem::element;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SmartsError {
    #[error("SMARTS syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unsupported SMARTS primitive '{primitive}' at position {position}")]
    UnsupportedPrimitive { position: usize, primitive: String },
}

impl SmartsError {
    pub fn position(&self) -> usize {
        match self {
            SmartsError::Syntax { position, .. } | SmartsError::UnsupportedPrimitive { position, .. } => *position,
        }
    }
}

pub fn parse_smarts(pattern: &str) -> Result<QueryGraph, SmartsError> {
    if pattern.is_empty() {
        return Err(syntax(0, "empty pattern"));
    }
    if let Some(i) = pattern.bytes().position(|b| !b.is_ascii()) {
        return Err(syntax(i, "non-ASCII character"));
    }
    let mut p = Parser {
        s: pattern.as_bytes(),
        pos: 0,
        atoms: Vec::new(),
        bonds: Vec::new(),
        prev: None,
        branches: Vec::new(),
        pending: None,
        rings: BTreeMap::new(),
    };
    p.run()?;
    Ok(QueryGraph::new(pattern, p.atoms, p.bonds))
}

fn syntax(position: usize, message: &str) -> SmartsError {
    SmartsError::Syntax {
        position,
        message: message.to_string(),
    }
}

fn unsupported(position: usize, primitive: &str) -> SmartsError {
    SmartsError::UnsupportedPrimitive {
        position,
        primitive: primitive.to_string(),
    }
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    atoms: Vec<AtomExpr>,
    bonds: Vec<QueryBond>,
    prev: Option<usize>,
    branches: Vec<(Option<usize>, usize)>,
    pending: Option<(BondExpr, usize)>,
    rings: BTreeMap<u32, (usize, Option<BondExpr>, usize)>,
}

const BOND_CHARS: &[u8] = b"-=#:~@!&,;";

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn run(&mut self) -> Result<(), SmartsError> {
        while let Some(c) = self.peek() {
            let start = self.pos;
            match c {
                b'(' => {
                    if self.prev.is_none() || self.pending.is_some() {
                        return Err(syntax(start, "branch without a preceding atom"));
                    }
                    self.branches.push((self.prev, start));
                    self.pos += 1;
                }
                b')' => {
                    if self.pending.is_some() {
                        return Err(syntax(start, "bond before ')'"));
                    }
                    let Some((atom, _)) = self.branches.pop() else {
                        return Err(syntax(start, "unmatched ')'"));
                    };
                    self.prev = atom;
                    self.pos += 1;
                }
                b'.' => {
                    if self.prev.is_none() || self.pending.is_some() {
                        return Err(syntax(start, "misplaced '.'"));
                    }
                    self.prev = None;
                    self.pos += 1;
                }
                b'0'..=b'9' | b'%' => self.ring_bond()?,
                _ if BOND_CHARS.contains(&c) => {
                    if self.prev.is_none() || self.pending.is_some() {
                        return Err(syntax(start, "misplaced bond"));
                    }
                    let expr = self.bond_expr()?;
                    self.pending = Some((expr, start));
                }
                b'[' => {
                    self.pos += 1;
                    let expr = self.low_and()?;
                    if self.peek() != Some(b']') {
                        return Err(match self.peek() {
                            None => syntax(start, "unterminated bracket atom"),
                            Some(_) => syntax(self.pos, "unexpected character in bracket atom"),
                        });
                    }
                    self.pos += 1;
                    self.add_atom(expr)?;
                }
                b'$' => return Err(unsupported(start, "$")),
                b'/' | b'\\' => return Err(unsupported(start, &(c as char).to_string())),
                _ => {
                    let expr = self.organic_atom()?;
                    self.add_atom(expr)?;
                }
            }
        }
        if let Some((_, at)) = self.pending {
            return Err(syntax(at, "dangling bond"));
        }
        if let Some(&(_, at)) = self.branches.last() {
            return Err(syntax(at, "unclosed branch"));
        }
        if let Some((_, _, at)) = self.rings.values().min_by_key(|r| r.2) {
            return Err(syntax(*at, "unclosed ring bond"));
        }
        if self.atoms.is_empty() {
            return Err(syntax(0, "no atoms"));
        }
        Ok(())
    }

    fn add_atom(&mut self, expr: AtomExpr) -> Result<(), SmartsError> {
        let idx = self.atoms.len();
        self.atoms.push(expr);
        if let Some(prev) = self.prev {
            let bond = match self.pending.take() {
                Some((e, _)) => e,
                None => BondExpr::Prim(BondPrimitive::Implicit),
            };
            self.bonds.push(QueryBond { begin: prev, end: idx, expr: bond });
        }
        self.prev = Some(idx);
        Ok(())
    }

    fn ring_bond(&mut self) -> Result<(), SmartsError> {
        let start = self.pos;
        let Some(prev) = self.prev else {
            return Err(syntax(start, "ring bond without a preceding atom"));
        };
        let number = if self.s[start] == b'%' {
            let d = &self.s[start + 1..(start + 3).min(self.s.len())];
            if d.len() < 2 || !d.iter().all(u8::is_ascii_digit) {
                return Err(syntax(start, "'%' must be followed by two digits"));
            }
            self.pos += 3;
            ((d[0] - b'0') * 10 + (d[1] - b'0')) as u32
        } else {
            self.pos += 1;
            (self.s[start] - b'0') as u32
        };
        let bond = self.pending.take().map(|(e, _)| e);
        match self.rings.remove(&number) {
            None => {
                self.rings.insert(number, (prev, bond, start));
            }
            Some((open, open_bond, _)) => {
                if open == prev {
                    return Err(syntax(start, "ring bond closes on its own atom"));
                }
                let expr = match (open_bond, bond) {
                    (Some(a), Some(b)) if a != b => return Err(syntax(start, "conflicting ring bonds")),
                    (Some(a), _) | (None, Some(a)) => a,
                    (None, None) => BondExpr::Prim(BondPrimitive::Implicit),
                };
                self.bonds.push(QueryBond { begin: open, end: prev, expr });
            }
        }
        Ok(())
    }

    fn organic_atom(&mut self) -> Result<AtomExpr, SmartsError> {
        let start = self.pos;
        let c = self.s[start];
        let next = self.s.get(start + 1).copied();
        let (prim, len) = match (c, next) {
            (b'C', Some(b'l')) => (elem(17, false), 2),
            (b'B', Some(b'r')) => (elem(35, false), 2),
            (b'B', _) => (elem(5, false), 1),
            (b'C', _) => (elem(6, false), 1),
            (b'N', _) => (elem(7, false), 1),
            (b'O', _) => (elem(8, false), 1),
            (b'P', _) => (elem(15, false), 1),
            (b'S', _) => (elem(16, false), 1),
            (b'F', _) => (elem(9, false), 1),
            (b'I', _) => (elem(53, false), 1),
            (b'b', _) => (elem(5, true), 1),
            (b'c', _) => (elem(6, true), 1),
            (b'n', _) => (elem(7, true), 1),
            (b'o', _) => (elem(8, true), 1),
            (b'p', _) => (elem(15, true), 1),
            (b's', _) => (elem(16, true), 1),
            (b'*', _) => (AtomPrimitive::Any, 1),
            (b'a', _) => (AtomPrimitive::Aromatic, 1),
            (b'A', _) => (AtomPrimitive::Aliphatic, 1),
            _ => return Err(syntax(start, &format!("unexpected character '{}'", c as char))),
        };
        self.pos += len;
        Ok(AtomExpr::Prim(prim))
    }

    // atom expressions: ';' < ',' < '&'/juxtaposition < '!'

    fn low_and(&mut self) -> Result<AtomExpr, SmartsError> {
        let mut terms = vec![self.or()?];
        while self.peek() == Some(b';') {
            self.pos += 1;
            terms.push(self.or()?);
        }
        Ok(collapse(terms, AtomExpr::And))
    }

    fn or(&mut self) -> Result<AtomExpr, SmartsError> {
        let mut terms = vec![self.high_and()?];
        while self.peek() == Some(b',') {
            self.pos += 1;
            terms.push(self.high_and()?);
        }
        Ok(collapse(terms, AtomExpr::Or))
    }

    fn high_and(&mut self) -> Result<AtomExpr, SmartsError> {
        let mut terms = vec![self.not()?];
        loop {
            match self.peek() {
                Some(b'&') => {
                    self.pos += 1;
                    terms.push(self.not()?);
                }
                Some(b';' | b',' | b']') | None => break,
                Some(_) => terms.push(self.not()?),
            }
        }
        Ok(collapse(terms, AtomExpr::And))
    }

    fn not(&mut self) -> Result<AtomExpr, SmartsError> {
        if self.peek() == Some(b'!') {
            self.pos += 1;
            return Ok(AtomExpr::Not(Box::new(self.not()?)));
        }
        self.primitive().map(AtomExpr::Prim)
    }

    fn number(&mut self) -> Option<u32> {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        if self.pos == start {
            return None;
        }
        std::str::from_utf8(&self.s[start..self.pos]).ok()?.parse().ok()
    }

    fn small(&mut self, default: u32, at: usize) -> Result<u8, SmartsError> {
        let n = self.number().unwrap_or(default);
        u8::try_from(n).map_err(|_| syntax(at, "count out of range"))
    }

    fn primitive(&mut self) -> Result<AtomPrimitive, SmartsError> {
        let start = self.pos;
        let Some(c) = self.peek() else {
            return Err(syntax(start, "expected an atom primitive"));
        };
        let two = self.s.get(start..start + 2).and_then(|b| std::str::from_utf8(b).ok());
        // aromatic two-letter symbols
        if let Some(sym @ ("se" | "as" | "te")) = two {
            self.pos += 2;
            let z = element::from_symbol(&capitalize(sym)).expect("known symbol");
            return Ok(elem(z, true));
        }
        // uppercase element symbols, two letters first
        if c.is_ascii_uppercase() {
            if let Some(t) = two {
                if t.as_bytes()[1].is_ascii_lowercase() {
                    if let Some(z) = element::from_symbol(t) {
                        self.pos += 2;
                        return Ok(elem(z, false));
                    }
                }
            }
        }
        self.pos += 1;
        match c {
            b'*' => Ok(AtomPrimitive::Any),
            b'a' => Ok(AtomPrimitive::Aromatic),
            b'A' => Ok(AtomPrimitive::Aliphatic),
            b'#' => {
                let z = self.number().ok_or_else(|| syntax(start, "'#' needs an atomic number"))?;
                let z = u8::try_from(z).map_err(|_| syntax(start, "atomic number out of range"))?;
                Ok(AtomPrimitive::AtomicNumber(z))
            }
            b'H' => Ok(AtomPrimitive::TotalH(self.small(1, start)?)),
            b'D' => Ok(AtomPrimitive::Degree(self.small(1, start)?)),
            b'X' => Ok(AtomPrimitive::Connectivity(self.small(1, start)?)),
            b'v' => Ok(AtomPrimitive::Valence(self.small(1, start)?)),
            b'R' => Ok(match self.number() {
                None => AtomPrimitive::InRing,
                Some(n) => AtomPrimitive::RingCount(u8::try_from(n).map_err(|_| syntax(start, "ring count out of range"))?),
            }),
            b'r' => Ok(match self.number() {
                None => AtomPrimitive::InRing,
                Some(0) => AtomPrimitive::RingCount(0),
                Some(n) => AtomPrimitive::SmallestRing(u8::try_from(n).map_err(|_| syntax(start, "ring size out of range"))?),
            }),
            b'+' | b'-' => {
                let sign: i32 = if c == b'+' { 1 } else { -1 };
                let mut magnitude = match self.number() {
                    Some(n) => n as i32,
                    None => 1,
                };
                if magnitude == 1 {
                    while self.peek() == Some(c) {
                        self.pos += 1;
                        magnitude += 1;
                    }
                }
                let charge = i8::try_from(sign * magnitude).map_err(|_| syntax(start, "charge out of range"))?;
                Ok(AtomPrimitive::Charge(charge))
            }
            b'c' => Ok(elem(6, true)),
            b'n' => Ok(elem(7, true)),
            b'o' => Ok(elem(8, true)),
            b's' => Ok(elem(16, true)),
            b'p' => Ok(elem(15, true)),
            b'b' => Ok(elem(5, true)),
            b'$' => Err(unsupported(start, "$")),
            b'@' => Err(unsupported(start, "@")),
            b'0'..=b'9' => Err(unsupported(start, "isotope")),
            b':' => Err(unsupported(start, "atom map")),
            b'h' | b'x' | b'^' | b'z' | b'Z' => Err(unsupported(start, &(c as char).to_string())),
            _ if c.is_ascii_uppercase() => {
                let sym = (c as char).to_string();
                element::from_symbol(&sym)
                    .map(|z| elem(z, false))
                    .ok_or_else(|| syntax(start, "unknown element symbol"))
            }
            _ => Err(syntax(start, &format!("unexpected character '{}'", c as char))),
        }
    }

    // bond expressions, same precedence scheme

    fn bond_expr(&mut self) -> Result<BondExpr, SmartsError> {
        let mut terms = vec![self.bond_or()?];
        while self.peek() == Some(b';') {
            self.pos += 1;
            terms.push(self.bond_or()?);
        }
        Ok(collapse(terms, BondExpr::And))
    }

    fn bond_or(&mut self) -> Result<BondExpr, SmartsError> {
        let mut terms = vec![self.bond_and()?];
        while self.peek() == Some(b',') {
            self.pos += 1;
            terms.push(self.bond_and()?);
        }
        Ok(collapse(terms, BondExpr::Or))
    }

    fn bond_and(&mut self) -> Result<BondExpr, SmartsError> {
        let mut terms = vec![self.bond_not()?];
        loop {
            match self.peek() {
                Some(b'&') => {
                    self.pos += 1;
                    terms.push(self.bond_not()?);
                }
                Some(b'-' | b'=' | b'#' | b':' | b'~' | b'@' | b'!') => terms.push(self.bond_not()?),
                _ => break,
            }
        }
        Ok(collapse(terms, BondExpr::And))
    }

    fn bond_not(&mut self) -> Result<BondExpr, SmartsError> {
        let start = self.pos;
        let Some(c) = self.peek() else {
            return Err(syntax(start, "expected a bond primitive"));
        };
        self.pos += 1;
        let prim = match c {
            b'!' => return Ok(BondExpr::Not(Box::new(self.bond_not()?))),
            b'-' => BondPrimitive::Single,
            b'=' => BondPrimitive::Double,
            b'#' => BondPrimitive::Triple,
            b':' => BondPrimitive::Aromatic,
            b'~' => BondPrimitive::Any,
            b'@' => BondPrimitive::Ring,
            _ => return Err(syntax(start, "expected a bond primitive")),
        };
        Ok(BondExpr::Prim(prim))
    }
}

fn elem(z: u8, aromatic: bool) -> AtomPrimitive {
    AtomPrimitive::Element { z, aromatic }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_ascii_uppercase().to_string() + c.as_str(),
        None => String::new(),
    }
}

fn collapse<T>(mut terms: Vec<T>, wrap: fn(Vec<T>) -> T) -> T {
    if terms.len() == 1 {
        terms.pop().expect("one term")
    } else {
        wrap(terms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn benzene_query() {
        let q = parse_smarts("c1ccccc1").unwrap();
        assert_eq!(q.atoms.len(), 6);
        assert_eq!(q.bonds.len(), 6);
        assert!(q.atoms.iter().all(|a| *a == AtomExpr::Prim(elem(6, true))));
    }

    #[test]
    fn conjunction() {
        let q = parse_smarts("[#7;+]").unwrap();
        assert_eq!(
            q.atoms[0],
            AtomExpr::And(vec![
                AtomExpr::Prim(AtomPrimitive::AtomicNumber(7)),
                AtomExpr::Prim(AtomPrimitive::Charge(1)),
            ])
        );
    }

    #[test]
    fn precedence() {
        // ',' binds tighter than ';', juxtaposition tighter than ','
        let q = parse_smarts("[N,O;H1]").unwrap();
        assert!(matches!(&q.atoms[0], AtomExpr::And(v) if matches!(v[0], AtomExpr::Or(_))));
        let q = parse_smarts("[NH2,O]").unwrap();
        assert!(matches!(&q.atoms[0], AtomExpr::Or(v) if matches!(v[0], AtomExpr::And(_))));
    }

    #[test]
    fn element_symbols_in_brackets() {
        let q = parse_smarts("[Hg,Cl,Se,se,H1]").unwrap();
        let AtomExpr::Or(v) = &q.atoms[0] else { panic!() };
        assert_eq!(v[0], AtomExpr::Prim(elem(80, false)));
        assert_eq!(v[1], AtomExpr::Prim(elem(17, false)));
        assert_eq!(v[2], AtomExpr::Prim(elem(34, false)));
        assert_eq!(v[3], AtomExpr::Prim(elem(34, true)));
        assert_eq!(v[4], AtomExpr::Prim(AtomPrimitive::TotalH(1)));
    }

    #[test]
    fn charges() {
        for (s, c) in [("[N+]", 1), ("[O-]", -1), ("[N++]", 2), ("[Fe+3]", 3), ("[N+0]", 0)] {
            let q = parse_smarts(s).unwrap();
            let found = match &q.atoms[0] {
                AtomExpr::And(v) => v.contains(&AtomExpr::Prim(AtomPrimitive::Charge(c))),
                AtomExpr::Prim(AtomPrimitive::Charge(x)) => *x == c,
                _ => false,
            };
            assert!(found, "{s}");
        }
    }

    #[test]
    fn bonds() {
        let q = parse_smarts("C=!@C~N").unwrap();
        assert_eq!(
            q.bonds[0].expr,
            BondExpr::And(vec![
                BondExpr::Prim(BondPrimitive::Double),
                BondExpr::Not(Box::new(BondExpr::Prim(BondPrimitive::Ring))),
            ])
        );
        assert_eq!(q.bonds[1].expr, BondExpr::Prim(BondPrimitive::Any));
    }

    #[test]
    fn unsupported_and_syntax() {
        assert!(matches!(
            parse_smarts("[$(CC)]"),
            Err(SmartsError::UnsupportedPrimitive { position: 1, .. })
        ));
        assert!(matches!(parse_smarts("[C@H]"), Err(SmartsError::UnsupportedPrimitive { .. })));
        assert!(matches!(parse_smarts("[13C]"), Err(SmartsError::UnsupportedPrimitive { .. })));
        assert!(matches!(parse_smarts("C1CC"), Err(SmartsError::Syntax { .. })));
        assert!(matches!(parse_smarts("[C"), Err(SmartsError::Syntax { .. })));
        assert!(matches!(parse_smarts(""), Err(SmartsError::Syntax { .. })));
        assert!(matches!(parse_smarts("C)"), Err(SmartsError::Syntax { .. })));
    }

    #[test]
    fn disconnected_components() {
        let q = parse_smarts("F.F.F").unwrap();
        assert_eq!(q.atoms.len(), 3);
        assert!(q.bonds.is_empty());
    }
}
