use std::f64::consts::PI;

use num_complex::Complex64;

use super::{identity, zeros, Operator, ONE};
use crate::error::{Error, Result};

/// One representative per phase class of the `d`-dimensional Pauli group:
/// `X^a Z^b` for `a, b in 0..d`, with `X|j> = |j+1 mod d>` and
/// `Z|j> = w^j |j>`, `w = e^{2 pi i / d}`. The identity comes first.
///
/// Summing `U J U^dagger` over the returned set gives `d tr(J) I`.
pub fn heisenberg_weyl(d: usize) -> Result<Vec<Operator>> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    let mut shift = zeros(d);
    for j in 0..d {
        shift[((j + 1) % d, j)] = ONE;
    }
    let clock = Operator::from_diagonal(&nalgebra::DVector::from_iterator(
        d,
        (0..d).map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / d as f64)),
    ));
    let mut out = Vec::with_capacity(d * d);
    let mut xa = identity(d);
    for _ in 0..d {
        let mut zb = identity(d);
        for _ in 0..d {
            out.push(&xa * &zb);
            zb = &zb * &clock;
        }
        xa = &xa * &shift;
    }
    Ok(out)
}

/// `Z_a = I - 2|a><a|` for a 1-based level `a`.
pub fn z_a(d: usize, a: usize) -> Result<Operator> {
    if !(1..=d).contains(&a) {
        return Err(Error::LevelOutOfRange(format!(
            "Z_{a} on a {d}-level qudit"
        )));
    }
    let mut m = identity(d);
    m[(a - 1, a - 1)] = -ONE;
    Ok(m)
}

/// Unitary sending `|i> -> |images[i-1]>` for levels `1..=images.len()` and
/// fixing all higher levels. `images` must permute `1..=images.len()`.
pub fn permutation_unitary(d: usize, images: &[usize]) -> Result<Operator> {
    let r = images.len();
    if r > d {
        return Err(Error::LevelOutOfRange(format!(
            "permutation of {r} levels on a {d}-level qudit"
        )));
    }
    let mut seen = vec![false; r];
    for &img in images {
        if !(1..=r).contains(&img) || std::mem::replace(&mut seen[img - 1], true) {
            return Err(Error::LevelOutOfRange(format!(
                "{images:?} is not a permutation of 1..={r}"
            )));
        }
    }
    let mut m = zeros(d);
    for i in 0..d {
        let target = if i < r { images[i] - 1 } else { i };
        m[(target, i)] = ONE;
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gellmann_matrix, is_unitary, max_abs, GellMannLabel};
    use crate::random::{random_hermitian, random_matrix, seeded};

    fn twirl(d: usize, j: &Operator, skip_identity: bool) -> Operator {
        let group = heisenberg_weyl(d).unwrap();
        let start = usize::from(skip_identity);
        group[start..]
            .iter()
            .fold(zeros(d), |acc, u| acc + u * j * u.adjoint())
    }

    #[test]
    fn group_shape() {
        for d in 2..=5 {
            let g = heisenberg_weyl(d).unwrap();
            assert_eq!(g.len(), d * d);
            assert_eq!(g[0], identity(d));
            assert!(g.iter().all(is_unitary));
        }
        assert!(heisenberg_weyl(1).is_err());
    }

    #[test]
    fn qubit_twirl_of_projector() {
        let mut j = zeros(2);
        j[(0, 0)] = ONE;
        assert!(max_abs(&(twirl(2, &j, false) - identity(2) * Complex64::new(2.0, 0.0))) < 1e-14);
    }

    #[test]
    fn twirl_gives_trace_times_identity() {
        let mut rng = seeded(21);
        for d in 2..=5 {
            for _ in 0..20 {
                let j = random_matrix(d, &mut rng);
                let expected = identity(d) * (j.trace() * d as f64);
                assert!(max_abs(&(twirl(d, &j, false) - expected)) < 1e-11);
            }
        }
    }

    #[test]
    fn non_identity_twirl_negates_traceless() {
        let mut rng = seeded(22);
        for d in 2..=5 {
            for _ in 0..20 {
                let mut j = random_hermitian(d, &mut rng);
                let shift = j.trace() / d as f64;
                j -= identity(d) * shift;
                assert!(max_abs(&(twirl(d, &j, true) + &j)) < 1e-11);
            }
        }
    }

    #[test]
    fn z_a_definition_and_errors() {
        let z1 = z_a(2, 1).unwrap();
        assert_eq!(z1[(0, 0)], -ONE);
        assert_eq!(z1[(1, 1)], ONE);
        assert!(z_a(3, 0).is_err());
        assert!(z_a(3, 4).is_err());
    }

    #[test]
    fn z_a_anticommutes_with_touching_offdiagonals() {
        let z1 = z_a(3, 1).unwrap();
        let x12 = gellmann_matrix(3, GellMannLabel::X(1, 2)).unwrap();
        assert!(max_abs(&(&z1 * &x12 * &z1 + &x12)) < 1e-15);
        let z3 = z_a(3, 3).unwrap();
        let w2 = gellmann_matrix(3, GellMannLabel::W(2)).unwrap();
        assert!(max_abs(&(&z3 * &w2 * &z3 - &w2)) < 1e-15);
    }

    #[test]
    fn permutation_maps_levels() {
        let p = permutation_unitary(4, &[2, 3, 1]).unwrap();
        assert!(is_unitary(&p));
        assert_eq!(p[(1, 0)], ONE);
        assert_eq!(p[(2, 1)], ONE);
        assert_eq!(p[(0, 2)], ONE);
        assert_eq!(p[(3, 3)], ONE);
        assert!(permutation_unitary(3, &[1, 1]).is_err());
        assert!(permutation_unitary(2, &[1, 2, 3]).is_err());
    }
}
