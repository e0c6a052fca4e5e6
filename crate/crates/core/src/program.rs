//! Simulation programs: trees of Hamiltonian evolutions joined by the
//! combinators tabulated below.
//!
//! A program's meaning is the effective Hamiltonian it simulates:
//!
//! | node                | effective Hamiltonian   |
//! |---------------------|-------------------------|
//! | `Native(w)`         | `w H`                   |
//! | `Local(q, A)`       | `A` on qudit `q`        |
//! | `Conjugate(U, p)`   | `U H_p U^dagger`        |
//! | `Sum[(w_i, p_i)]`   | `sum_i w_i H_{p_i}`     |
//! | `Commutator(l, r)`  | `i [H_l, H_r]`          |
//!
//! Subprograms are reference counted and may be shared; evaluation visits
//! each distinct node once, so deeply staged pipelines stay linear in the
//! number of nodes.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    check_hermitian, embed, heisenberg_weyl, hermitian_exp, identity, max_abs, spectral_norm,
    zeros, LocalUnitary, Operator, I,
};
use crate::model::{CouplingTerm, QuditSystem};

/// Default cap on the number of leaf evolutions per product-formula slice.
pub const DEFAULT_BRANCH_CAP: u128 = 4096;

#[derive(Debug)]
pub enum ProgramNode {
    Native {
        weight: f64,
    },
    Local {
        qudit: usize,
        operator: Operator,
    },
    Conjugate {
        unitary: LocalUnitary,
        child: SimulationProgram,
    },
    Sum {
        terms: Vec<(f64, SimulationProgram)>,
    },
    Commutator {
        left: SimulationProgram,
        right: SimulationProgram,
    },
}

#[derive(Debug, Clone)]
pub struct SimulationProgram(Arc<ProgramNode>);

fn positive(w: f64) -> Result<f64> {
    if w > 0.0 && w.is_finite() {
        Ok(w)
    } else {
        Err(Error::NonPositiveWeight(w))
    }
}

impl SimulationProgram {
    pub fn native(weight: f64) -> Result<Self> {
        Ok(Self::wrap(ProgramNode::Native {
            weight: positive(weight)?,
        }))
    }

    /// `Native(1)`: evolve the resource Hamiltonian as is.
    pub fn source() -> Self {
        Self::wrap(ProgramNode::Native { weight: 1.0 })
    }

    pub fn local(qudit: usize, operator: Operator) -> Result<Self> {
        check_hermitian(&operator)?;
        Ok(Self::wrap(ProgramNode::Local { qudit, operator }))
    }

    pub fn conjugate(unitary: LocalUnitary, child: SimulationProgram) -> Self {
        Self::wrap(ProgramNode::Conjugate { unitary, child })
    }

    pub fn sum(terms: Vec<(f64, SimulationProgram)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Precondition("empty sum".into()));
        }
        for (w, _) in &terms {
            positive(*w)?;
        }
        Ok(Self::wrap(ProgramNode::Sum { terms }))
    }

    pub fn commutator(left: SimulationProgram, right: SimulationProgram) -> Self {
        Self::wrap(ProgramNode::Commutator { left, right })
    }

    fn wrap(node: ProgramNode) -> Self {
        SimulationProgram(Arc::new(node))
    }

    pub fn node(&self) -> &ProgramNode {
        &self.0
    }

    pub(crate) fn key(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn children(&self) -> Vec<&SimulationProgram> {
        match self.node() {
            ProgramNode::Native { .. } | ProgramNode::Local { .. } => vec![],
            ProgramNode::Conjugate { child, .. } => vec![child],
            ProgramNode::Sum { terms } => terms.iter().map(|(_, p)| p).collect(),
            ProgramNode::Commutator { left, right } => vec![left, right],
        }
    }

    /// Distinct nodes in post-order (children before parents).
    pub fn post_order(&self) -> Vec<SimulationProgram> {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        let mut stack: Vec<(SimulationProgram, bool)> = vec![(self.clone(), false)];
        while let Some((p, expanded)) = stack.pop() {
            if expanded {
                out.push(p);
                continue;
            }
            if !seen.insert(p.key()) {
                continue;
            }
            stack.push((p.clone(), true));
            for c in p.children().into_iter().rev() {
                if !seen.contains(&c.key()) {
                    stack.push((c.clone(), false));
                }
            }
        }
        out
    }

    pub fn node_count(&self) -> usize {
        self.post_order().len()
    }

    pub fn commutator_count(&self) -> usize {
        self.post_order()
            .iter()
            .filter(|p| matches!(p.node(), ProgramNode::Commutator { .. }))
            .count()
    }

    /// Every `Native` and `Sum` weight is strictly positive.
    pub fn weights_positive(&self) -> bool {
        self.post_order().iter().all(|p| match p.node() {
            ProgramNode::Native { weight } => *weight > 0.0,
            ProgramNode::Sum { terms } => terms.iter().all(|(w, _)| *w > 0.0),
            _ => true,
        })
    }

    /// Number of leaf evolutions in one product-formula slice, counting
    /// shared subprograms once per use (saturating).
    pub fn branch_count(&self) -> u128 {
        let mut memo: HashMap<usize, u128> = HashMap::new();
        for p in self.post_order() {
            let count = match p.node() {
                ProgramNode::Native { .. } | ProgramNode::Local { .. } => 1,
                ProgramNode::Conjugate { child, .. } => memo[&child.key()],
                ProgramNode::Sum { terms } => terms
                    .iter()
                    .fold(0u128, |acc, (_, c)| acc.saturating_add(memo[&c.key()])),
                ProgramNode::Commutator { left, right } => memo[&left.key()]
                    .saturating_add(memo[&right.key()])
                    .saturating_mul(2),
            };
            memo.insert(p.key(), count);
        }
        memo[&self.key()]
    }
}

fn check_source(h: &Operator, system: &QuditSystem) -> Result<()> {
    let dim = system.total_dim();
    if h.nrows() != dim || h.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: h.nrows(),
        });
    }
    check_hermitian(h)
}

fn check_unitary_dims(u: &LocalUnitary, system: &QuditSystem) -> Result<()> {
    if u.dims() != system.dims() {
        return Err(Error::Precondition(format!(
            "conjugation acts on dims {:?}, system is {:?}",
            u.dims(),
            system.dims()
        )));
    }
    Ok(())
}

fn embed_local(qudit: usize, op: &Operator, system: &QuditSystem) -> Result<Operator> {
    embed(system.dims(), &[(qudit, op)])
}

/// Effective Hamiltonian of `p` when `h` is the resource Hamiltonian.
pub fn effective_hamiltonian(
    p: &SimulationProgram,
    h: &Operator,
    system: &QuditSystem,
) -> Result<Operator> {
    check_source(h, system)?;
    let dim = system.total_dim();
    let mut memo: HashMap<usize, Operator> = HashMap::new();
    for node in p.post_order() {
        let value = match node.node() {
            ProgramNode::Native { weight } => h.scale(*weight),
            ProgramNode::Local { qudit, operator } => embed_local(*qudit, operator, system)?,
            ProgramNode::Conjugate { unitary, child } => {
                check_unitary_dims(unitary, system)?;
                unitary.conjugate(&memo[&child.key()])
            }
            ProgramNode::Sum { terms } => {
                let mut acc = zeros(dim);
                for (w, c) in terms {
                    acc += memo[&c.key()].scale(*w);
                }
                acc
            }
            ProgramNode::Commutator { left, right } => {
                let (l, r) = (&memo[&left.key()], &memo[&right.key()]);
                (l * r - r * l) * I
            }
        };
        memo.insert(node.key(), value);
    }
    Ok(memo.remove(&p.key()).expect("root evaluated"))
}

/// Sum of conjugations by the `d^2 - 1` non-identity Heisenberg-Weyl
/// unitaries on `qudit`. Maps any effective Hamiltonian that is traceless on
/// `qudit` to its negative.
pub fn negate(
    child: SimulationProgram,
    qudit: usize,
    system: &QuditSystem,
) -> Result<SimulationProgram> {
    system.check_qudit(qudit)?;
    let group = heisenberg_weyl(system.dims()[qudit])?;
    let terms = group
        .into_iter()
        .skip(1)
        .map(|u| {
            let lu = LocalUnitary::from_placements(system.dims(), &[(qudit, u)])?;
            Ok((1.0, SimulationProgram::conjugate(lu, child.clone())))
        })
        .collect::<Result<Vec<_>>>()?;
    SimulationProgram::sum(terms)
}

/// Program whose effective Hamiltonian is minus `term`, when the resource
/// Hamiltonian is `term` itself. The twirl acts on the lowest support qudit.
pub fn negate_isolated_term(
    term: &CouplingTerm,
    system: &QuditSystem,
) -> Result<SimulationProgram> {
    let q = *term.support().first().ok_or(Error::EmptyTerm)?;
    negate(SimulationProgram::source(), q, system)
}

struct Compiler<'a> {
    system: &'a QuditSystem,
    h_eig: nalgebra::linalg::SymmetricEigen<Complex64, nalgebra::Dyn>,
}

impl<'a> Compiler<'a> {
    fn new(h: &Operator, system: &'a QuditSystem) -> Self {
        Compiler {
            system,
            h_eig: crate::linalg::hermitian_part(h).symmetric_eigen(),
        }
    }

    fn native_exp(&self, tau: f64) -> Operator {
        let v = &self.h_eig.eigenvectors;
        let mut scaled = v.clone();
        for (k, lambda) in self.h_eig.eigenvalues.iter().enumerate() {
            let phase = Complex64::from_polar(1.0, -lambda * tau);
            for r in 0..v.nrows() {
                scaled[(r, k)] *= phase;
            }
        }
        scaled * v.adjoint()
    }

    /// Unitaries in application order approximating `e^{-i H_p tau}`.
    fn slice(&self, p: &SimulationProgram, tau: f64, out: &mut Vec<Operator>) -> Result<()> {
        if tau < 0.0 {
            let mut forward = Vec::new();
            self.slice(p, -tau, &mut forward)?;
            out.extend(forward.into_iter().rev().map(|u| u.adjoint()));
            return Ok(());
        }
        match p.node() {
            ProgramNode::Native { weight } => out.push(self.native_exp(weight * tau)),
            ProgramNode::Local { qudit, operator } => {
                let full = embed_local(*qudit, operator, self.system)?;
                out.push(hermitian_exp(&full, tau)?);
            }
            ProgramNode::Conjugate { unitary, child } => {
                check_unitary_dims(unitary, self.system)?;
                let u = unitary.to_dense();
                out.push(u.adjoint());
                self.slice(child, tau, out)?;
                out.push(u);
            }
            ProgramNode::Sum { terms } => {
                for (w, c) in terms {
                    self.slice(c, w * tau, out)?;
                }
            }
            ProgramNode::Commutator { left, right } => {
                let delta = tau.sqrt();
                self.slice(right, delta, out)?;
                self.slice(left, -delta, out)?;
                self.slice(right, -delta, out)?;
                self.slice(left, delta, out)?;
            }
        }
        Ok(())
    }
}

fn check_compile_args(p: &SimulationProgram, t: f64, steps: usize, cap: u128) -> Result<()> {
    if steps == 0 {
        return Err(Error::InvalidSteps);
    }
    if !t.is_finite() {
        return Err(Error::Precondition(format!("time {t} is not finite")));
    }
    let count = p.branch_count();
    if count > cap {
        return Err(Error::BranchCapExceeded { count, cap });
    }
    Ok(())
}

/// Product-formula compilation of `p` for total time `t` in `steps` equal
/// slices. Returns the unitaries in application order: the simulated
/// evolution is `U_last ... U_1 U_0`.
///
/// Sums interleave their children (first-order Lie-Trotter), commutators
/// use the four-factor group commutator with `Delta = sqrt(t / steps)`,
/// conjugations wrap their child's factors.
pub fn trotter_compile(
    p: &SimulationProgram,
    h: &Operator,
    system: &QuditSystem,
    t: f64,
    steps: usize,
    cap: u128,
) -> Result<Vec<Operator>> {
    check_source(h, system)?;
    check_compile_args(p, t, steps, cap)?;
    let compiler = Compiler::new(h, system);
    let mut slice = Vec::new();
    compiler.slice(p, t / steps as f64, &mut slice)?;
    let mut out = Vec::with_capacity(slice.len() * steps);
    for _ in 0..steps {
        out.extend(slice.iter().cloned());
    }
    Ok(out)
}

/// `U_last ... U_0` for a sequence in application order.
pub fn sequence_product(seq: &[Operator], dim: usize) -> Operator {
    seq.iter().fold(identity(dim), |acc, u| u * acc)
}

fn matrix_power(m: &Operator, mut n: usize) -> Operator {
    let mut result = identity(m.nrows());
    let mut base = m.clone();
    while n > 0 {
        if n & 1 == 1 {
            result = &result * &base;
        }
        base = &base * &base;
        n >>= 1;
    }
    result
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    /// Operator-norm error at the largest step count.
    pub effective_norm_error: f64,
    /// `(steps, |product - e^{-i H_eff t}|_2)` per requested step count.
    pub trotter_errors: Vec<(usize, f64)>,
    /// Least-squares slope of `-log(error)` against `log(steps)`; absent when
    /// fewer than two errors are above the floating-point floor.
    pub order_estimate: Option<f64>,
    /// `|H_eff - H_eff^dagger|_max`.
    pub hermiticity_residual: f64,
}

/// Errors below this are treated as exact when estimating the order.
const ERROR_FLOOR: f64 = 1e-13;

/// Compares product-formula compilations of `p` against the exact evolution
/// under its effective Hamiltonian for each step count.
pub fn verify(
    p: &SimulationProgram,
    h: &Operator,
    system: &QuditSystem,
    t: f64,
    steps_list: &[usize],
    cap: u128,
) -> Result<VerificationReport> {
    check_source(h, system)?;
    for &steps in steps_list {
        check_compile_args(p, t, steps, cap)?;
    }
    if steps_list.is_empty() {
        return Err(Error::InvalidSteps);
    }
    let eff = effective_hamiltonian(p, h, system)?;
    let hermiticity_residual = max_abs(&(&eff - eff.adjoint()));
    let exact = hermitian_exp(&crate::linalg::hermitian_part(&eff), t)?;
    let compiler = Compiler::new(h, system);
    let dim = system.total_dim();
    let mut trotter_errors = Vec::with_capacity(steps_list.len());
    for &steps in steps_list {
        let mut slice = Vec::new();
        compiler.slice(p, t / steps as f64, &mut slice)?;
        let product = matrix_power(&sequence_product(&slice, dim), steps);
        trotter_errors.push((steps, spectral_norm(&(product - &exact))));
    }
    let mut sorted = trotter_errors.clone();
    sorted.sort_by_key(|&(s, _)| s);
    let effective_norm_error = sorted.last().map(|&(_, e)| e).unwrap_or(0.0);
    Ok(VerificationReport {
        effective_norm_error,
        order_estimate: order_estimate(&sorted),
        trotter_errors,
        hermiticity_residual,
    })
}

fn order_estimate(errors: &[(usize, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = errors
        .iter()
        .filter(|&&(_, e)| e > ERROR_FLOOR)
        .map(|&(s, e)| ((s as f64).ln(), -e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}
