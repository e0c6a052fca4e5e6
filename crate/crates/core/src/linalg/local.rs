use super::{
    conjugate_local, identity, is_exact_identity, unitarity_defect, Operator, STRUCTURE_TOL,
};
use crate::error::{Error, Result};

/// A product unitary `U_0 ⊗ U_1 ⊗ ... ⊗ U_{n-1}`, one factor per qudit.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalUnitary {
    factors: Vec<Operator>,
}

impl LocalUnitary {
    pub fn new(dims: &[usize], factors: Vec<Operator>) -> Result<Self> {
        if factors.len() != dims.len() {
            return Err(Error::DimensionMismatch {
                expected: dims.len(),
                found: factors.len(),
            });
        }
        for (f, &d) in factors.iter().zip(dims) {
            if f.nrows() != d || f.ncols() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: f.nrows(),
                });
            }
            let defect = unitarity_defect(f);
            if defect >= STRUCTURE_TOL {
                return Err(Error::NotUnitary(defect));
            }
        }
        Ok(LocalUnitary { factors })
    }

    pub fn identity(dims: &[usize]) -> Self {
        LocalUnitary {
            factors: dims.iter().map(|&d| identity(d)).collect(),
        }
    }

    /// Identity everywhere except the given placements.
    pub fn from_placements(dims: &[usize], placements: &[(usize, Operator)]) -> Result<Self> {
        let mut factors: Vec<Operator> = dims.iter().map(|&d| identity(d)).collect();
        for (q, u) in placements {
            if *q >= dims.len() {
                return Err(Error::QuditOutOfRange {
                    index: *q,
                    len: dims.len(),
                });
            }
            factors[*q] = u.clone();
        }
        Self::new(dims, factors)
    }

    pub fn factors(&self) -> &[Operator] {
        &self.factors
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.nrows()).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.factors.iter().all(is_exact_identity)
    }

    pub fn adjoint(&self) -> Self {
        LocalUnitary {
            factors: self.factors.iter().map(|f| f.adjoint()).collect(),
        }
    }

    /// The full `D x D` matrix.
    pub fn to_dense(&self) -> Operator {
        self.factors
            .iter()
            .fold(identity(1), |acc, f| acc.kronecker(f))
    }

    /// `U M U^dagger`, applied factor by factor.
    pub fn conjugate(&self, m: &Operator) -> Operator {
        let dims = self.dims();
        let mut out = m.clone();
        for (q, f) in self.factors.iter().enumerate() {
            if !is_exact_identity(f) {
                out = conjugate_local(&out, &dims, q, f);
            }
        }
        out
    }
}
