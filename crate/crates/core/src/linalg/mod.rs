//! Dense complex matrices and the operator zoo built on them.
//!
//! Basis levels of a qudit are 1-based (`|1>..|d>`) wherever a label or
//! special unitary names them; qudit indices are 0-based. Tensor products
//! put qudit 0 in the most significant position.

mod gellmann;
mod local;
mod weyl;

pub use gellmann::{gellmann_basis, gellmann_matrix, GellMannLabel};
pub use local::LocalUnitary;
pub use weyl::{heisenberg_weyl, permutation_unitary, z_a};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense square complex matrix.
pub type Operator = DMatrix<Complex64>;

/// Relative tolerance for Hermiticity and unitarity checks.
pub const STRUCTURE_TOL: f64 = 1e-12;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn identity(dim: usize) -> Operator {
    Operator::identity(dim, dim)
}

pub fn zeros(dim: usize) -> Operator {
    Operator::zeros(dim, dim)
}

pub fn kron(a: &Operator, b: &Operator) -> Operator {
    a.kronecker(b)
}

/// Largest entry modulus.
pub fn max_abs(m: &Operator) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// `tr(A^dagger B)`.
pub fn hs_inner(a: &Operator, b: &Operator) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn frobenius_norm(m: &Operator) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest singular value.
pub fn spectral_norm(m: &Operator) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone().singular_values().max()
}

/// `AB - BA`.
pub fn commutator(a: &Operator, b: &Operator) -> Operator {
    a * b - b * a
}

/// Checks `|M - M^dagger|_max` against [`STRUCTURE_TOL`] relative to the
/// matrix scale, reporting the worst entry on failure.
pub fn check_hermitian(m: &Operator) -> Result<()> {
    check_hermitian_tol(m, STRUCTURE_TOL)
}

pub fn check_hermitian_tol(m: &Operator, tol: f64) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    let n = m.nrows();
    let mut worst = (0.0, 0, 0);
    for r in 0..n {
        for c in r..n {
            let gap = (m[(r, c)] - m[(c, r)].conj()).norm();
            if gap > worst.0 {
                worst = (gap, r, c);
            }
        }
    }
    if worst.0 > tol * max_abs(m).max(1.0) {
        return Err(Error::NotHermitian {
            max_asymmetry: worst.0,
            row: worst.1,
            col: worst.2,
        });
    }
    Ok(())
}

pub fn is_hermitian(m: &Operator) -> bool {
    check_hermitian(m).is_ok()
}

/// `|U^dagger U - I|_max`.
pub fn unitarity_defect(u: &Operator) -> f64 {
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - identity(n)))
}

pub fn is_unitary(u: &Operator) -> bool {
    u.is_square() && unitarity_defect(u) < STRUCTURE_TOL
}

/// `(M + M^dagger) / 2`.
pub fn hermitian_part(m: &Operator) -> Operator {
    (m + m.adjoint()).scale(0.5)
}

/// `e^{-iHt}` through the Hermitian eigendecomposition of `h`.
pub fn hermitian_exp(h: &Operator, t: f64) -> Result<Operator> {
    check_hermitian(h)?;
    let n = h.nrows();
    if t == 0.0 {
        return Ok(identity(n));
    }
    let eig = hermitian_part(h).symmetric_eigen();
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (k, lambda) in eig.eigenvalues.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, -lambda * t);
        for r in 0..n {
            scaled[(r, k)] *= phase;
        }
    }
    Ok(scaled * v.adjoint())
}

/// Kronecker product over `system_dims`, placing each given operator on its
/// qudit and the identity everywhere else.
pub fn embed(system_dims: &[usize], placements: &[(usize, &Operator)]) -> Result<Operator> {
    let mut slots: Vec<Option<&Operator>> = vec![None; system_dims.len()];
    for &(q, op) in placements {
        let d = *system_dims.get(q).ok_or(Error::QuditOutOfRange {
            index: q,
            len: system_dims.len(),
        })?;
        if op.nrows() != d || op.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: op.nrows(),
            });
        }
        slots[q] = Some(op);
    }
    let mut out = identity(1);
    for (q, slot) in slots.into_iter().enumerate() {
        out = match slot {
            Some(op) => kron(&out, op),
            None => kron(&out, &identity(system_dims[q])),
        };
    }
    Ok(out)
}

/// Computes `(I ⊗ U ⊗ I) M` with `u` acting on `qudit`, without forming the
/// full Kronecker product.
pub fn apply_local_left(m: &Operator, dims: &[usize], qudit: usize, u: &Operator) -> Operator {
    let d = dims[qudit];
    let stride: usize = dims[qudit + 1..].iter().product();
    let total = m.nrows();
    let mut out = zeros(total);
    let block = d * stride;
    for outer in (0..total).step_by(block) {
        for inner in 0..stride {
            for a in 0..d {
                let row = outer + a * stride + inner;
                for b in 0..d {
                    let coeff = u[(a, b)];
                    if coeff == ZERO {
                        continue;
                    }
                    let src = outer + b * stride + inner;
                    for c in 0..m.ncols() {
                        out[(row, c)] += coeff * m[(src, c)];
                    }
                }
            }
        }
    }
    out
}

/// `(I ⊗ U ⊗ I) M (I ⊗ U ⊗ I)^dagger`.
pub fn conjugate_local(m: &Operator, dims: &[usize], qudit: usize, u: &Operator) -> Operator {
    let left = apply_local_left(m, dims, qudit, u);
    apply_local_left(&left.adjoint(), dims, qudit, u).adjoint()
}

/// Exact check for the identity matrix (entries exactly 0 or 1).
pub(crate) fn is_exact_identity(m: &Operator) -> bool {
    m.is_square()
        && m.iter().enumerate().all(|(k, z)| {
            let (r, c) = (k % m.nrows(), k / m.nrows());
            if r == c {
                *z == ONE
            } else {
                *z == ZERO
            }
        })
}
