//! Periodic table data: symbols, average atomic masses and default valences.

/// Symbols and average atomic weights for Z = 1..=86, indexed by `Z - 1`.
const ELEMENTS: [(&str, f64); 86] = [
    ("H", 1.008),
    ("He", 4.003),
    ("Li", 6.941),
    ("Be", 9.012),
    ("B", 10.812),
    ("C", 12.011),
    ("N", 14.007),
    ("O", 15.999),
    ("F", 18.998),
    ("Ne", 20.18),
    ("Na", 22.99),
    ("Mg", 24.305),
    ("Al", 26.982),
    ("Si", 28.086),
    ("P", 30.974),
    ("S", 32.067),
    ("Cl", 35.453),
    ("Ar", 39.948),
    ("K", 39.098),
    ("Ca", 40.078),
    ("Sc", 44.956),
    ("Ti", 47.867),
    ("V", 50.944),
    ("Cr", 51.996),
    ("Mn", 54.938),
    ("Fe", 55.845),
    ("Co", 58.933),
    ("Ni", 58.693),
    ("Cu", 63.546),
    ("Zn", 65.39),
    ("Ga", 69.723),
    ("Ge", 72.61),
    ("As", 74.922),
    ("Se", 78.96),
    ("Br", 79.904),
    ("Kr", 83.8),
    ("Rb", 85.468),
    ("Sr", 87.62),
    ("Y", 88.906),
    ("Zr", 91.224),
    ("Nb", 92.906),
    ("Mo", 95.94),
    ("Tc", 98.0),
    ("Ru", 101.07),
    ("Rh", 102.906),
    ("Pd", 106.42),
    ("Ag", 107.868),
    ("Cd", 112.412),
    ("In", 114.818),
    ("Sn", 118.711),
    ("Sb", 121.76),
    ("Te", 127.6),
    ("I", 126.904),
    ("Xe", 131.29),
    ("Cs", 132.905),
    ("Ba", 137.328),
    ("La", 138.906),
    ("Ce", 140.116),
    ("Pr", 140.908),
    ("Nd", 144.24),
    ("Pm", 145.0),
    ("Sm", 150.36),
    ("Eu", 151.964),
    ("Gd", 157.25),
    ("Tb", 158.925),
    ("Dy", 162.5),
    ("Ho", 164.93),
    ("Er", 167.26),
    ("Tm", 168.934),
    ("Yb", 173.04),
    ("Lu", 174.967),
    ("Hf", 178.49),
    ("Ta", 180.948),
    ("W", 183.84),
    ("Re", 186.207),
    ("Os", 190.23),
    ("Ir", 192.217),
    ("Pt", 195.078),
    ("Au", 196.967),
    ("Hg", 200.59),
    ("Tl", 204.383),
    ("Pb", 207.2),
    ("Bi", 208.98),
    ("Po", 209.0),
    ("At", 210.0),
    ("Rn", 222.0),];

/// Atomic number of an element.
pub type AtomicNumber = u8;

pub fn symbol(z: AtomicNumber) -> &'static str {
    ELEMENTS[(z as usize).saturating_sub(1)].0
}

pub fn atomic_mass(z: AtomicNumber) -> f64 {
    ELEMENTS[(z as usize).saturating_sub(1)].1
}

/// Looks up an element by its capitalized symbol (`"Cl"`, not `"cl"`).
pub fn from_symbol(sym: &str) -> Option<AtomicNumber> {
    ELEMENTS
        .iter()
        .position(|(s, _)| *s == sym)
        .map(|i| (i + 1) as AtomicNumber)
}

/// Elements that may be written without brackets in SMILES.
pub fn is_organic_subset(z: AtomicNumber) -> bool {
    matches!(z, 5 | 6 | 7 | 8 | 9 | 15 | 16 | 17 | 35 | 53)
}

/// Elements allowed to carry the lowercase aromatic form.
pub fn can_be_aromatic(z: AtomicNumber) -> bool {
    matches!(z, 5 | 6 | 7 | 8 | 15 | 16 | 33 | 34 | 52)
}

fn neutral_valences(z: AtomicNumber) -> &'static [u8] {
    match z {
        1 => &[1],
        2 | 10 | 18 | 36 | 54 | 86 => &[0],
        5 => &[3],
        6 => &[4],
        7 => &[3],
        8 => &[2],
        9 | 17 | 35 | 53 => &[1],
        14 => &[4],
        15 => &[3, 5],
        16 => &[2, 4, 6],
        33 => &[3, 5],
        34 | 52 => &[2, 4, 6],
        _ => &[],
    }
}

fn period(z: AtomicNumber) -> u8 {
    match z {
        1..=2 => 1,
        3..=10 => 2,
        11..=18 => 3,
        19..=36 => 4,
        37..=54 => 5,
        _ => 6,
    }
}

/// Allowed total valences for an element carrying `charge`.
///
/// Charged atoms take the valences of the isoelectronic element in the same
/// period (N+ behaves like C, O- like F). An empty slice means the valence is
/// unconstrained (metals, unusual charge states).
pub fn allowed_valences(z: AtomicNumber, charge: i8) -> &'static [u8] {
    if charge == 0 {
        return neutral_valences(z);
    }
    let shifted = z as i16 - charge as i16;
    if !(1..=86).contains(&shifted) {
        return &[];
    }
    let shifted = shifted as AtomicNumber;
    if period(shifted) != period(z) {
        return &[];
    }
    neutral_valences(shifted)
}

/// Smallest allowed valence that accommodates `used` bond orders.
pub fn target_valence(z: AtomicNumber, charge: i8, used: u8) -> Option<u8> {
    allowed_valences(z, charge).iter().copied().find(|&v| v >= used)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbol_roundtrip() {
        for z in 1..=86u8 {
            assert_eq!(from_symbol(symbol(z)), Some(z));
        }
        assert_eq!(from_symbol("Cl"), Some(17));
        assert_eq!(from_symbol("cl"), None);
    }

    #[test]
    fn charged_valences_follow_isoelectronic_neighbor() {
        assert_eq!(allowed_valences(7, 1), &[4]);
        assert_eq!(allowed_valences(8, -1), &[1]);
        assert_eq!(allowed_valences(8, 1), &[3]);
        assert_eq!(allowed_valences(6, -1), &[3]);
        assert_eq!(allowed_valences(17, -1), &[0]);
        assert!(allowed_valences(26, 2).is_empty());
    }

    #[test]
    fn ethanol_masses() {
        let mw = 2.0 * atomic_mass(6) + atomic_mass(8) + 6.0 * atomic_mass(1);
        assert!((mw - 46.069).abs() < 0.01);
    }
}
