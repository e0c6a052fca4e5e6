use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Operator, ZERO};
use crate::error::{Error, Result};

/// Names one generalized Gell-Mann matrix of a `d`-level qudit.
///
/// Levels are 1-based: `W(m)` for `2 <= m <= d`, `X(a, b)` / `Y(a, b)` for
/// `1 <= a < b <= d`. The text form is `W:m`, `X:a:b`, `Y:a:b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum GellMannLabel {
    W(usize),
    X(usize, usize),
    Y(usize, usize),
}

impl GellMannLabel {
    pub fn is_valid_for(&self, d: usize) -> bool {
        match *self {
            GellMannLabel::W(m) => (2..=d).contains(&m),
            GellMannLabel::X(a, b) | GellMannLabel::Y(a, b) => 1 <= a && a < b && b <= d,
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if self.is_valid_for(d) {
            Ok(())
        } else {
            Err(Error::InvalidLabel {
                label: self.to_string(),
                dim: d,
            })
        }
    }

    /// Diagonal (Cartan) labels are the `W` family.
    pub fn is_diagonal(&self) -> bool {
        matches!(self, GellMannLabel::W(_))
    }

    /// Nonzero entries `(row, col, value)` with 0-based indices.
    pub fn entries(&self) -> Vec<(usize, usize, Complex64)> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match *self {
            GellMannLabel::W(m) => {
                let norm = 1.0 / ((m * (m - 1)) as f64).sqrt();
                let mut out: Vec<_> = (0..m - 1)
                    .map(|k| (k, k, Complex64::new(norm, 0.0)))
                    .collect();
                out.push((m - 1, m - 1, Complex64::new(-((m - 1) as f64) * norm, 0.0)));
                out
            }
            GellMannLabel::X(a, b) => vec![
                (a - 1, b - 1, Complex64::new(h, 0.0)),
                (b - 1, a - 1, Complex64::new(h, 0.0)),
            ],
            GellMannLabel::Y(a, b) => vec![
                (a - 1, b - 1, Complex64::new(0.0, -h)),
                (b - 1, a - 1, Complex64::new(0.0, h)),
            ],
        }
    }

    /// All `d^2 - 1` labels of a `d`-level qudit: `W(2..=d)`, then `X(a, b)`
    /// and `Y(a, b)` for each level pair in lexicographic order.
    pub fn all(d: usize) -> Vec<GellMannLabel> {
        let mut out: Vec<_> = (2..=d).map(GellMannLabel::W).collect();
        for a in 1..=d {
            for b in a + 1..=d {
                out.push(GellMannLabel::X(a, b));
                out.push(GellMannLabel::Y(a, b));
            }
        }
        out
    }
}

impl fmt::Display for GellMannLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GellMannLabel::W(m) => write!(f, "W:{m}"),
            GellMannLabel::X(a, b) => write!(f, "X:{a}:{b}"),
            GellMannLabel::Y(a, b) => write!(f, "Y:{a}:{b}"),
        }
    }
}

impl FromStr for GellMannLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad Gell-Mann label {s:?}"));
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |p: &str| p.trim().parse::<usize>().map_err(|_| bad());
        match parts.as_slice() {
            ["W", m] => Ok(GellMannLabel::W(num(m)?)),
            ["X", a, b] => Ok(GellMannLabel::X(num(a)?, num(b)?)),
            ["Y", a, b] => Ok(GellMannLabel::Y(num(a)?, num(b)?)),
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for GellMannLabel {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<GellMannLabel> for String {
    fn from(l: GellMannLabel) -> String {
        l.to_string()
    }
}

pub fn gellmann_matrix(d: usize, label: GellMannLabel) -> Result<Operator> {
    label.validate(d)?;
    let mut m = Operator::from_element(d, d, ZERO);
    for (r, c, v) in label.entries() {
        m[(r, c)] = v;
    }
    Ok(m)
}

/// The full Gell-Mann basis, ordered as [`GellMannLabel::all`].
pub fn gellmann_basis(d: usize) -> Result<Vec<(GellMannLabel, Operator)>> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    GellMannLabel::all(d)
        .into_iter()
        .map(|l| gellmann_matrix(d, l).map(|m| (l, m)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{commutator, hs_inner, identity, is_hermitian, max_abs, I};
    use crate::random::{random_hermitian, seeded};

    fn diag(values: &[f64]) -> Operator {
        Operator::from_diagonal(&nalgebra::DVector::from_iterator(
            values.len(),
            values.iter().map(|&v| Complex64::new(v, 0.0)),
        ))
    }

    #[test]
    fn w_matrices_match_definition() {
        let s2 = 2f64.sqrt();
        let w2 = gellmann_matrix(2, GellMannLabel::W(2)).unwrap();
        assert!(max_abs(&(w2 - diag(&[1.0 / s2, -1.0 / s2]))) < 1e-15);
        let s6 = 6f64.sqrt();
        let w3 = gellmann_matrix(3, GellMannLabel::W(3)).unwrap();
        assert!(max_abs(&(w3 - diag(&[1.0 / s6, 1.0 / s6, -2.0 / s6]))) < 1e-15);
    }

    #[test]
    fn x_matches_pauli_over_root_two() {
        let x = gellmann_matrix(2, GellMannLabel::X(1, 2)).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(x[(0, 1)], Complex64::new(h, 0.0));
        assert_eq!(x[(1, 0)], Complex64::new(h, 0.0));
        assert_eq!(x[(0, 0)], ZERO);
    }

    #[test]
    fn invalid_labels_rejected() {
        assert!(gellmann_matrix(3, GellMannLabel::W(4)).is_err());
        assert!(gellmann_matrix(3, GellMannLabel::W(1)).is_err());
        assert!(gellmann_matrix(3, GellMannLabel::X(2, 2)).is_err());
        assert!(gellmann_matrix(3, GellMannLabel::Y(3, 1)).is_err());
        assert!(gellmann_matrix(2, GellMannLabel::X(1, 3)).is_err());
        assert!(gellmann_basis(1).is_err());
    }

    #[test]
    fn basis_counts_and_orthonormality() {
        assert_eq!(
            gellmann_basis(2)
                .unwrap()
                .iter()
                .map(|p| p.0)
                .collect::<Vec<_>>(),
            vec![
                GellMannLabel::W(2),
                GellMannLabel::X(1, 2),
                GellMannLabel::Y(1, 2)
            ]
        );
        for d in 2..=6 {
            let basis = gellmann_basis(d).unwrap();
            assert_eq!(basis.len(), d * d - 1);
            for (i, (_, gi)) in basis.iter().enumerate() {
                assert!(is_hermitian(gi));
                assert!(gi.trace().norm() < 1e-14);
                for (j, (_, gj)) in basis.iter().enumerate() {
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!((hs_inner(gi, gj) - expected).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn basis_is_complete() {
        let mut rng = seeded(11);
        for d in 2..=6 {
            let h = random_hermitian(d, &mut rng);
            let mut rebuilt = identity(d) * (h.trace() / d as f64);
            for (_, g) in gellmann_basis(d).unwrap() {
                rebuilt += &g * hs_inner(&g, &h);
            }
            assert!(max_abs(&(rebuilt - &h)) < 1e-11);
        }
    }

    #[test]
    fn ladder_commutators() {
        for b in 2..=6usize {
            for d in b..=6 {
                let x = gellmann_matrix(d, GellMannLabel::X(b - 1, b)).unwrap();
                let y = gellmann_matrix(d, GellMannLabel::Y(b - 1, b)).unwrap();
                let wb = gellmann_matrix(d, GellMannLabel::W(b)).unwrap();
                let lhs = commutator(&wb, &x) * (-I);
                let ratio = (b as f64 / (b - 1) as f64).sqrt();
                assert!(max_abs(&(lhs - y * Complex64::new(ratio, 0.0))) < 1e-13);
                for a in b + 1..=d {
                    let wa = gellmann_matrix(d, GellMannLabel::W(a)).unwrap();
                    assert!(max_abs(&commutator(&wa, &x)) < 1e-14);
                }
            }
        }
    }

    #[test]
    fn label_text_round_trip() {
        for d in 2..=4 {
            for l in GellMannLabel::all(d) {
                assert_eq!(l.to_string().parse::<GellMannLabel>().unwrap(), l);
            }
        }
        assert!("Z:1".parse::<GellMannLabel>().is_err());
        assert!("X:1".parse::<GellMannLabel>().is_err());
    }

    #[test]
    fn random_hermitian_helper_is_hermitian() {
        let mut rng = seeded(5);
        assert!(is_hermitian(&random_hermitian(5, &mut rng)));
    }
}
