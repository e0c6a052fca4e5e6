//! Retargeting one traceless Hermitian operator onto another.
//!
//! For traceless Hermitian `A` and `B != 0` we find positive `c_n` and
//! unitaries `U_n`, at most `d^2` of them, with `A = sum_n c_n U_n B U_n^dagger`:
//!
//! 1. diagonalize both, spectra sorted descending;
//! 2. choose the smallest `c` with `spec(A) ≺ c spec(B)`;
//! 3. build a doubly stochastic `D` with `spec(A) = D (c spec(B))` as a chain
//!    of T-transforms;
//! 4. split `D` into permutation matrices (Birkhoff);
//! 5. each permutation `P` gives `U = V_A P V_B^dagger`.
//!
//! Applying this per tensor factor retargets a whole coupling term onto any
//! other coupling with the same support.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    check_hermitian, gellmann_matrix, identity, max_abs, LocalUnitary, Operator, ONE, ZERO,
};
use crate::model::{CouplingTerm, QuditSystem};
use crate::program::SimulationProgram;

const TRACE_TOL: f64 = 1e-10;
/// Entries at or below this (relative) are outside a matrix's support.
const SUPPORT_TOL: f64 = 1e-13;

/// Eigen-decomposition with eigenvalues sorted descending; column `k` of
/// `eigenvectors` belongs to `eigenvalues[k]`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Operator,
}

impl Spectrum {
    pub fn of(h: &Operator) -> Result<Self> {
        check_hermitian(h)?;
        let eig = crate::linalg::hermitian_part(h).symmetric_eigen();
        let n = h.nrows();
        let mut order: Vec<usize> = (0..n).collect();
        // stable: equal eigenvalues keep the solver's order
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let eigenvectors = Operator::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        Ok(Spectrum {
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn reconstruct(&self) -> Operator {
        let d = Operator::from_diagonal(&nalgebra::DVector::from_iterator(
            self.eigenvalues.len(),
            self.eigenvalues.iter().map(|&l| Complex64::new(l, 0.0)),
        ));
        &self.eigenvectors * d * self.eigenvectors.adjoint()
    }
}

fn scale_of(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn check_spectrum_traceless(v: &[f64]) -> Result<()> {
    let sum: f64 = v.iter().sum();
    if sum.abs() > TRACE_TOL * scale_of(v).max(1.0) {
        return Err(Error::NotTraceless(sum));
    }
    Ok(())
}

/// Smallest `c >= 0` with `a ≺ c b`: the largest ratio of prefix sums.
/// Both spectra must be sorted descending and sum to zero.
pub fn scale_factor(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: b.len(),
            found: a.len(),
        });
    }
    check_spectrum_traceless(a)?;
    check_spectrum_traceless(b)?;
    let b_scale = scale_of(b);
    if b_scale == 0.0 {
        return Err(Error::ZeroOperator);
    }
    let (mut sa, mut sb) = (0.0, 0.0);
    let mut c: f64 = 0.0;
    for k in 0..a.len().saturating_sub(1) {
        sa += a[k];
        sb += b[k];
        if sb <= 1e-14 * b_scale {
            return Err(Error::ZeroOperator);
        }
        c = c.max(sa / sb);
    }
    Ok(c)
}

/// Doubly stochastic `D` with `a = D target`, for `a ≺ target`, both sorted
/// descending. Built as a product of at most `d - 1` T-transforms, each
/// repairing the largest index where `target` still exceeds `a`.
pub fn transfer_matrix(a: &[f64], target: &[f64]) -> Result<DMatrix<f64>> {
    let n = a.len();
    if target.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: target.len(),
        });
    }
    let tol = 1e-13 * scale_of(target).max(scale_of(a)).max(1e-300);
    let (mut sa, mut st) = (0.0, 0.0);
    for k in 0..n {
        sa += a[k];
        st += target[k];
        if sa - st > 1e3 * tol {
            return Err(Error::MajorizationViolated {
                index: k,
                deficit: sa - st,
            });
        }
    }
    let mut y = target.to_vec();
    let mut d = DMatrix::<f64>::identity(n, n);
    for _ in 0..n {
        let Some(j) = (0..n).rev().find(|&i| y[i] - a[i] > tol) else {
            break;
        };
        let Some(k) = (j + 1..n).find(|&i| a[i] - y[i] > tol) else {
            return Err(Error::MajorizationViolated {
                index: j,
                deficit: y[j] - a[j],
            });
        };
        let delta = (y[j] - a[j]).min(a[k] - y[k]);
        let mix = delta / (y[j] - y[k]);
        let lambda = 1.0 - mix;
        let mut t = DMatrix::<f64>::identity(n, n);
        t[(j, j)] = lambda;
        t[(k, k)] = lambda;
        t[(j, k)] = mix;
        t[(k, j)] = mix;
        let (yj, yk) = (y[j], y[k]);
        y[j] = lambda * yj + mix * yk;
        y[k] = mix * yj + lambda * yk;
        d = t * d;
    }
    for v in d.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok(d)
}

/// Perfect matching `row -> col` using only entries `>= threshold`.
fn perfect_matching(m: &DMatrix<f64>, threshold: f64) -> Option<Vec<usize>> {
    let n = m.nrows();
    let mut col_owner: Vec<Option<usize>> = vec![None; n];
    fn augment(
        row: usize,
        m: &DMatrix<f64>,
        threshold: f64,
        visited: &mut [bool],
        col_owner: &mut [Option<usize>],
    ) -> bool {
        for col in 0..m.ncols() {
            if m[(row, col)] >= threshold && !visited[col] {
                visited[col] = true;
                let free = match col_owner[col] {
                    None => true,
                    Some(other) => augment(other, m, threshold, visited, col_owner),
                };
                if free {
                    col_owner[col] = Some(row);
                    return true;
                }
            }
        }
        false
    }
    for row in 0..n {
        let mut visited = vec![false; n];
        if !augment(row, m, threshold, &mut visited, &mut col_owner) {
            return None;
        }
    }
    let mut perm = vec![0; n];
    for (col, owner) in col_owner.into_iter().enumerate() {
        perm[owner.expect("perfect")] = col;
    }
    Some(perm)
}

/// Birkhoff decomposition `D = sum p_k P_k`. Each permutation is returned
/// as `perm[row] = col`. Greedy: repeatedly take the perfect matching on
/// the current support whose smallest entry is largest, and subtract it.
pub fn birkhoff(d: &DMatrix<f64>) -> Result<Vec<(f64, Vec<usize>)>> {
    let n = d.nrows();
    if n != d.ncols() {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: d.ncols(),
        });
    }
    let mut residual = d.clone();
    let mut out = Vec::new();
    let support = SUPPORT_TOL;
    for _ in 0..n * n + 1 {
        let mass = (0..n).map(|r| residual.row(r).sum()).sum::<f64>() / n as f64;
        if mass <= 1e-11 {
            break;
        }
        let mut levels: Vec<f64> = residual.iter().copied().filter(|&v| v > support).collect();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        // largest threshold still admitting a perfect matching
        let (mut lo, mut hi) = (0usize, levels.len());
        let mut best = None;
        while lo < hi {
            let mid = (lo + hi) / 2;
            match perfect_matching(&residual, levels[mid]) {
                Some(p) => {
                    best = Some(p);
                    lo = mid + 1;
                }
                None => hi = mid,
            }
        }
        let Some(perm) = best else {
            return Err(Error::NoPerfectMatching { residual: mass });
        };
        let weight = perm
            .iter()
            .enumerate()
            .map(|(r, &c)| residual[(r, c)])
            .fold(f64::INFINITY, f64::min);
        for (r, &c) in perm.iter().enumerate() {
            residual[(r, c)] -= weight;
            if residual[(r, c)] <= support {
                residual[(r, c)] = 0.0;
            }
        }
        out.push((weight, perm));
    }
    Ok(out)
}

fn permutation_matrix(perm: &[usize]) -> Operator {
    let n = perm.len();
    let mut m = Operator::from_element(n, n, ZERO);
    for (r, &c) in perm.iter().enumerate() {
        m[(r, c)] = ONE;
    }
    m
}

/// `A = sum_n c_n U_n B U_n^dagger` with every `c_n > 0`.
#[derive(Debug, Clone)]
pub struct UhlmannDecomposition {
    pub pairs: Vec<(f64, Operator)>,
}

impl UhlmannDecomposition {
    pub fn apply(&self, b: &Operator) -> Operator {
        let n = b.nrows();
        self.pairs
            .iter()
            .fold(Operator::from_element(n, n, ZERO), |acc, (c, u)| {
                acc + (u * b * u.adjoint()).scale(*c)
            })
    }

    pub fn total_weight(&self) -> f64 {
        self.pairs.iter().map(|(c, _)| c).sum()
    }
}

pub fn uhlmann_decompose(a: &Operator, b: &Operator) -> Result<UhlmannDecomposition> {
    if a.nrows() != b.nrows() || !a.is_square() || !b.is_square() {
        return Err(Error::DimensionMismatch {
            expected: b.nrows(),
            found: a.nrows(),
        });
    }
    check_hermitian(a)?;
    check_hermitian(b)?;
    let scale = max_abs(a).max(max_abs(b)).max(1.0);
    for m in [a, b] {
        let tr = m.trace();
        if tr.norm() > TRACE_TOL * scale {
            return Err(Error::NotTraceless(tr.re));
        }
    }
    if max_abs(b) == 0.0 {
        return Err(Error::ZeroOperator);
    }
    let n = a.nrows();
    if max_abs(&(a - b)) <= 1e-15 * scale {
        return Ok(UhlmannDecomposition {
            pairs: vec![(1.0, identity(n))],
        });
    }
    if max_abs(a) <= 1e-15 * max_abs(b) {
        return Ok(UhlmannDecomposition { pairs: vec![] });
    }
    let sa = Spectrum::of(a)?;
    let sb = Spectrum::of(b)?;
    let c = scale_factor(&sa.eigenvalues, &sb.eigenvalues)?;
    let target: Vec<f64> = sb.eigenvalues.iter().map(|x| c * x).collect();
    let d = transfer_matrix(&sa.eigenvalues, &target)?;
    let pairs = birkhoff(&d)?
        .into_iter()
        .map(|(p, perm)| {
            let u = &sa.eigenvectors * permutation_matrix(&perm) * sb.eigenvectors.adjoint();
            (c * p, u)
        })
        .collect();
    Ok(UhlmannDecomposition { pairs })
}

/// Program turning `child` (whose effective Hamiltonian is
/// `source_coeff * source`) into `target_coeff * target`, by per-factor
/// Uhlmann decompositions. The coefficient ratio is folded into the first
/// support qudit.
pub fn retarget_program(
    child: SimulationProgram,
    source: &CouplingTerm,
    source_coeff: f64,
    target: &CouplingTerm,
    target_coeff: f64,
    system: &QuditSystem,
) -> Result<SimulationProgram> {
    if source.support() != target.support() {
        return Err(Error::SupportMismatch(format!(
            "source {source} vs target {target}"
        )));
    }
    if source_coeff == 0.0 || !source_coeff.is_finite() {
        return Err(Error::ZeroCoefficient);
    }
    let ratio = target_coeff / source_coeff;
    if ratio == 0.0 {
        return Err(Error::Precondition("target coefficient is zero".into()));
    }
    let mut per_factor: Vec<(usize, Vec<(f64, Operator)>)> = Vec::new();
    for (i, q) in source.support().into_iter().enumerate() {
        let d = system.dims()[q];
        let b = gellmann_matrix(d, source.label(q).expect("support"))?;
        let mut a = gellmann_matrix(d, target.label(q).expect("support"))?;
        if i == 0 {
            a = a.scale(ratio);
        }
        per_factor.push((q, uhlmann_decompose(&a, &b)?.pairs));
    }
    let mut branches: Vec<(f64, Vec<(usize, Operator)>)> = vec![(1.0, vec![])];
    for (q, pairs) in &per_factor {
        let mut next = Vec::with_capacity(branches.len() * pairs.len());
        for (w, placed) in &branches {
            for (c, u) in pairs {
                let mut p = placed.clone();
                p.push((*q, u.clone()));
                next.push((w * c, p));
            }
        }
        branches = next;
    }
    let terms = branches
        .into_iter()
        .map(|(w, placed)| {
            let lu = LocalUnitary::from_placements(system.dims(), &placed)?;
            Ok((w, SimulationProgram::conjugate(lu, child.clone())))
        })
        .collect::<Result<Vec<_>>>()?;
    SimulationProgram::sum(terms)
}

/// Program whose effective Hamiltonian is `target_coeff * target` when the
/// resource Hamiltonian is `source_coeff * source`.
pub fn retarget_term(
    source: &CouplingTerm,
    source_coeff: f64,
    target: &CouplingTerm,
    target_coeff: f64,
    system: &QuditSystem,
) -> Result<SimulationProgram> {
    retarget_program(
        SimulationProgram::source(),
        source,
        source_coeff,
        target,
        target_coeff,
        system,
    )
}
