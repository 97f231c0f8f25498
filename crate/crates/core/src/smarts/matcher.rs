//! Subgraph isomorphism between a query and a molecule.

use super::query::QueryGraph;
use crate::chem::MolGraph;

/// Query atoms in BFS order per component, each paired with an already
/// ordered neighbour (None for component roots).
fn search_order(query: &QueryGraph) -> Vec<(usize, Option<usize>)> {
    let n = query.atoms.len();
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        order.push((root, None));
        let mut k = order.len() - 1;
        while k < order.len() {
            let q = order[k].0;
            for &(nb, _) in &query.adjacency[q] {
                if !seen[nb] {
                    seen[nb] = true;
                    order.push((nb, Some(q)));
                }
            }
            k += 1;
        }
    }
    order
}

struct State<'a> {
    mol: &'a MolGraph,
    query: &'a QueryGraph,
    order: Vec<(usize, Option<usize>)>,
    map: Vec<usize>,
    used: Vec<bool>,
    /// Molecule atom that query atom 0 must map to.
    root: Option<usize>,
}

const UNMAPPED: usize = usize::MAX;

impl State<'_> {
    fn new<'a>(mol: &'a MolGraph, query: &'a QueryGraph) -> State<'a> {
        State {
            mol,
            query,
            order: search_order(query),
            map: vec![UNMAPPED; query.atoms.len()],
            used: vec![false; mol.atom_count()],
            root: None,
        }
    }

    /// Atom predicate plus every bond to an already mapped query neighbour.
    fn feasible(&self, q: usize, m: usize) -> bool {
        if self.used[m] || !self.query.atoms[q].matches(self.mol, m) {
            return false;
        }
        self.query.adjacency[q].iter().all(|&(qn, qb)| {
            let mn = self.map[qn];
            if mn == UNMAPPED {
                return true;
            }
            match self.mol.bond_between(m, mn) {
                Some(b) => self.query.bonds[qb].expr.matches(self.mol, b),
                None => false,
            }
        })
    }

    /// Depth-first extension. `visit` returns false to stop the search.
    fn extend(&mut self, depth: usize, visit: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if depth == self.order.len() {
            return visit(&self.map);
        }
        let (q, parent) = self.order[depth];
        let candidates: Vec<usize> = match (parent, self.root) {
            (Some(p), _) => self.mol.neighbors(self.map[p]).iter().map(|&(n, _)| n).collect(),
            (None, Some(r)) if depth == 0 => vec![r],
            (None, _) => (0..self.mol.atom_count()).collect(),
        };
        for m in candidates {
            if !self.feasible(q, m) {
                continue;
            }
            self.map[q] = m;
            self.used[m] = true;
            let go_on = self.extend(depth + 1, visit);
            self.map[q] = UNMAPPED;
            self.used[m] = false;
            if !go_on {
                return false;
            }
        }
        true
    }
}

/// First mapping found (query atom index → molecule atom index), if any.
pub fn substructure_match(mol: &MolGraph, query: &QueryGraph) -> Option<Vec<usize>> {
    if query.atoms.len() > mol.atom_count() {
        return None;
    }
    let mut state = State::new(mol, query);
    let mut found = None;
    state.extend(0, &mut |m| {
        found = Some(m.to_vec());
        false
    });
    found
}

/// True if some embedding maps query atom 0 onto molecule atom `atom`.
pub fn matches_at(mol: &MolGraph, query: &QueryGraph, atom: usize) -> bool {
    if query.atoms.len() > mol.atom_count() || atom >= mol.atom_count() {
        return false;
    }
    let mut state = State::new(mol, query);
    state.root = Some(atom);
    let mut found = false;
    state.extend(0, &mut |_| {
        found = true;
        false
    });
    found
}

pub fn has_match(mol: &MolGraph, query: &QueryGraph) -> bool {
    substructure_match(mol, query).is_some()
}

/// Number of distinct embeddings, capped at `limit`. Automorphisms of the
/// query are counted separately.
pub fn count_matches(mol: &MolGraph, query: &QueryGraph, limit: usize) -> usize {
    if query.atoms.len() > mol.atom_count() || limit == 0 {
        return 0;
    }
    let mut state = State::new(mol, query);
    let mut n = 0;
    state.extend(0, &mut |_| {
        n += 1;
        n < limit
    });
    n
}

/// Exhaustive check over all injective maps. Exponential; meant as a test
/// oracle for small inputs.
pub fn brute_force_match(mol: &MolGraph, query: &QueryGraph) -> bool {
    let nq = query.atoms.len();
    let nm = mol.atom_count();
    if nq > nm {
        return false;
    }
    let mut map = vec![0usize; nq];
    let mut used = vec![false; nm];
    fn rec(d: usize, mol: &MolGraph, query: &QueryGraph, map: &mut [usize], used: &mut [bool]) -> bool {
        if d == map.len() {
            return query.atoms.iter().enumerate().all(|(q, e)| e.matches(mol, map[q]))
                && query.bonds.iter().all(|qb| match mol.bond_between(map[qb.begin], map[qb.end]) {
                    Some(b) => qb.expr.matches(mol, b),
                    None => false,
                });
        }
        for m in 0..used.len() {
            if used[m] {
                continue;
            }
            used[m] = true;
            map[d] = m;
            let ok = rec(d + 1, mol, query, map, used);
            used[m] = false;
            if ok {
                return true;
            }
        }
        false
    }
    rec(0, mol, query, &mut map, &mut used)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;
    use crate::smarts::parse_smarts;

    fn hit(smiles: &str, smarts: &str) -> bool {
        has_match(&parse_smiles(smiles).unwrap(), &parse_smarts(smarts).unwrap())
    }

    #[test]
    fn basic_matches() {
        assert!(hit("Cc1ccccc1", "c1ccccc1"));
        assert!(!hit("CCO", "[N+]"));
        assert!(hit("C[N+](C)(C)C", "[N+]"));
        assert!(hit("CCO", "[OX2H1]"));
        assert!(!hit("C1CCCCC1", "c"));
        assert!(hit("C1CCCCC1", "[CR1]"));
        assert!(!hit("CCCC", "[R]"));
        assert!(hit("CC(=O)O", "C(=O)[OH]"));
        assert!(!hit("CC(=O)OC", "C(=O)[OH]"));
        assert!(hit("c1ccccc1", "c:c"));
        assert!(hit("c1ccccc1", "cc"));
        assert!(!hit("C=CC", "C=CC=C"));
        assert!(hit("CCO.N", "O.N"));
    }

    #[test]
    fn mapping_is_valid() {
        let mol = parse_smiles("OCCc1ccc(N)cc1").unwrap();
        let q = parse_smarts("Nc1ccccc1").unwrap();
        let m = substructure_match(&mol, &q).unwrap();
        assert_eq!(mol.atom(m[0]).element, 7);
        let mut s = m.clone();
        s.sort_unstable();
        s.dedup();
        assert_eq!(s.len(), m.len());
    }

    #[test]
    fn ring_closure_queries() {
        assert!(hit("C1CC1C", "C1CC1"));
        assert!(!hit("CCCC", "C1CC1"));
        assert!(hit("C1CC1", "[r3]"));
        assert!(!hit("C1CCC1", "[r3]"));
    }

    #[test]
    fn rooted() {
        let mol = parse_smiles("CCO").unwrap();
        let q = parse_smarts("[CH3]C").unwrap();
        assert!(matches_at(&mol, &q, 0));
        assert!(!matches_at(&mol, &q, 1));
    }

    #[test]
    fn counting() {
        let mol = parse_smiles("CCC").unwrap();
        assert_eq!(count_matches(&mol, &parse_smarts("C").unwrap(), 100), 3);
        assert_eq!(count_matches(&mol, &parse_smarts("CC").unwrap(), 100), 4);
        assert_eq!(count_matches(&mol, &parse_smarts("CC").unwrap(), 2), 2);
    }

    #[test]
    fn agrees_with_brute_force() {
        let mols = ["CCO", "c1ccccc1O", "C1CC1N", "CC(=O)N", "C#N", "OCC(O)CO"];
        let queries = ["C", "CO", "C=O", "[#6]~[#8]", "c:c", "[R]N", "C(C)(C)", "[!#6]", "C#N", "O.O"];
        for s in mols {
            let mol = parse_smiles(s).unwrap();
            for q in queries {
                let q = parse_smarts(q).unwrap();
                assert_eq!(has_match(&mol, &q), brute_force_match(&mol, &q), "{s} {}", q.smarts);
            }
        }
    }
}
