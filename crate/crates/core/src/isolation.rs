//! Term isolation: from a Hamiltonian `H = sum_a h_a H_a`, build a program
//! whose effective Hamiltonian is a positive multiple of one chosen term.
//!
//! The pipeline runs fixed stages, each a linear map that acts diagonally
//! on coupling terms, so every stage has an exact symbolic counterpart on
//! the [`Expansion`]:
//!
//! - precondition: local rotation taking the chosen term to `⊗ W_{b_j}`;
//! - `D`: Heisenberg-Weyl twirl on every qudit outside the target support;
//! - `T`: pairwise filters that keep only full-support terms;
//! - `Z`: `Z_a` sums that remove every `X`/`Y` factor;
//! - `P`: level-permutation sums that remove `W_a` with `a < b_j`;
//! - `X`: commutators with `X_{b_j-1, b_j}` that leave `⊗ Y_{b_j-1, b_j}`;
//! - retarget onto the chosen term.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    gellmann_matrix, heisenberg_weyl, permutation_unitary, z_a, GellMannLabel, LocalUnitary,
    Operator, ZERO,
};
use crate::majorization::retarget_program;
use crate::model::{expand, reconstruct, CouplingTerm, Expansion, QuditSystem, EPS_ZERO};
use crate::program::SimulationProgram;

/// Local rotation taking the target term to `⊗ W_{b_j}`.
#[derive(Debug, Clone)]
pub struct CanonicalTarget {
    pub conjugation: LocalUnitary,
    /// `b_j` per support qudit.
    pub cartan_indices: BTreeMap<usize, usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StageName {
    D,
    T,
    Z,
    P,
    X,
}

impl fmt::Display for StageName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: StageName,
    pub surviving_terms: usize,
    /// Factor this stage applied to the target term.
    pub target_scale: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// A stage program wrapped around its input, and the symbolic image of the
/// input expansion.
#[derive(Debug, Clone)]
pub struct StageOutput {
    pub program: SimulationProgram,
    pub expansion: Expansion,
    pub report: StageReport,
}

fn rethreshold(mut e: Expansion) -> Expansion {
    e.threshold(EPS_ZERO);
    e
}

fn lookup(e: &Expansion, term: &CouplingTerm) -> Result<f64> {
    let h = e
        .coefficient(term)
        .ok_or_else(|| Error::TermNotFound(term.to_string()))?;
    let cutoff = e.zero_cutoff(EPS_ZERO);
    if h.abs() <= cutoff {
        return Err(Error::TermBelowThreshold {
            term: term.to_string(),
            magnitude: h.abs(),
            threshold: cutoff,
        });
    }
    Ok(h)
}

/// Unitary `U` on a `d`-level qudit with `U G U^dagger = W_2` for an
/// off-diagonal label `G`; identity for diagonal labels.
fn rotation_to_cartan(d: usize, label: GellMannLabel) -> (Operator, usize) {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (a, b, phase) = match label {
        GellMannLabel::W(m) => return (crate::linalg::identity(d), m),
        GellMannLabel::X(a, b) => (a - 1, b - 1, Complex64::new(1.0, 0.0)),
        GellMannLabel::Y(a, b) => (a - 1, b - 1, Complex64::new(0.0, 1.0)),
    };
    // rows of U are the eigenvectors (+, -, then untouched levels ascending)
    let mut u = Operator::from_element(d, d, ZERO);
    u[(0, a)] = Complex64::new(h, 0.0);
    u[(0, b)] = (phase * h).conj();
    u[(1, a)] = Complex64::new(h, 0.0);
    u[(1, b)] = -(phase * h).conj();
    let rest = (0..d).filter(|&k| k != a && k != b);
    for (row, level) in (2..d).zip(rest) {
        u[(row, level)] = Complex64::new(1.0, 0.0);
    }
    (u, 2)
}

/// Rotates the whole expansion so that `alpha` becomes `⊗ W_{b_j}`.
pub fn precondition(e: &Expansion, alpha: &CouplingTerm) -> Result<(CanonicalTarget, Expansion)> {
    let h = lookup(e, alpha)?;
    let system = &e.system;
    let mut placements = Vec::new();
    let mut cartan_indices = BTreeMap::new();
    for (&q, &label) in alpha.factors() {
        let (u, b) = rotation_to_cartan(system.dims()[q], label);
        placements.push((q, u));
        cartan_indices.insert(q, b);
    }
    let conjugation = LocalUnitary::from_placements(system.dims(), &placements)?;
    let rotated = if conjugation.is_identity() {
        e.clone()
    } else {
        expand(&conjugation.conjugate(&reconstruct(e)), system)?
    };
    let image = cartan_term(&cartan_indices, system)?;
    let h_image = rotated.coefficient(&image).unwrap_or(0.0);
    if (h_image - h).abs() > 1e-9 * h.abs().max(1.0) {
        return Err(Error::Precondition(format!(
            "rotated target coefficient {h_image} differs from {h}"
        )));
    }
    Ok((
        CanonicalTarget {
            conjugation,
            cartan_indices,
        },
        rotated,
    ))
}

fn cartan_term(b: &BTreeMap<usize, usize>, system: &QuditSystem) -> Result<CouplingTerm> {
    CouplingTerm::from_pairs(b.iter().map(|(&q, &m)| (q, GellMannLabel::W(m))), system)
}

fn ladder_term(b: &BTreeMap<usize, usize>, system: &QuditSystem) -> Result<CouplingTerm> {
    CouplingTerm::from_pairs(
        b.iter().map(|(&q, &m)| (q, GellMannLabel::Y(m - 1, m))),
        system,
    )
}

/// Maps every term through `factor`; terms with factor zero disappear.
fn map_terms(
    e: &Expansion,
    offset_factor: f64,
    mut factor: impl FnMut(&CouplingTerm) -> f64,
) -> Expansion {
    let terms = e
        .terms
        .iter()
        .filter_map(|(t, &h)| {
            let f = factor(t);
            (f != 0.0).then(|| (t.clone(), h * f))
        })
        .collect();
    rethreshold(Expansion {
        system: e.system.clone(),
        terms,
        trace_offset: e.trace_offset * offset_factor,
    })
}

fn cartesian_weyl(system: &QuditSystem, qudits: &[usize]) -> Result<Vec<Vec<(usize, Operator)>>> {
    let mut out: Vec<Vec<(usize, Operator)>> = vec![vec![]];
    for &q in qudits {
        let group = heisenberg_weyl(system.dims()[q])?;
        let mut next = Vec::with_capacity(out.len() * group.len());
        for partial in &out {
            for u in &group {
                let mut p = partial.clone();
                p.push((q, u.clone()));
                next.push(p);
            }
        }
        out = next;
    }
    Ok(out)
}

fn conjugation_sum(
    child: &SimulationProgram,
    system: &QuditSystem,
    mut branches: Vec<(f64, Vec<(usize, Operator)>)>,
) -> Result<SimulationProgram> {
    let terms = branches
        .drain(..)
        .map(|(w, placed)| {
            if placed.is_empty() {
                return Ok((w, child.clone()));
            }
            let lu = LocalUnitary::from_placements(system.dims(), &placed)?;
            Ok((w, SimulationProgram::conjugate(lu, child.clone())))
        })
        .collect::<Result<Vec<_>>>()?;
    SimulationProgram::sum(terms)
}

/// Twirls every qudit outside `support` over its Heisenberg-Weyl group.
/// Terms reaching outside the support vanish; the rest scale by
/// `prod_{j outside} d_j^2`.
pub fn stage_depolarize(
    e: &Expansion,
    support: &[usize],
    child: &SimulationProgram,
) -> Result<StageOutput> {
    let system = &e.system;
    let outside: Vec<usize> = (0..system.len()).filter(|q| !support.contains(q)).collect();
    let scale: f64 = outside
        .iter()
        .map(|&q| (system.dims()[q] as f64).powi(2))
        .product();
    let (program, expansion) = if outside.is_empty() {
        (child.clone(), e.clone())
    } else {
        let branches = cartesian_weyl(system, &outside)?
            .into_iter()
            .map(|placed| (1.0, placed))
            .collect();
        let program = conjugation_sum(child, system, branches)?;
        let expansion = map_terms(e, scale, |t| {
            if t.support().iter().all(|q| support.contains(q)) {
                scale
            } else {
                0.0
            }
        });
        (program, expansion)
    };
    Ok(StageOutput {
        report: StageReport {
            stage: StageName::D,
            surviving_terms: expansion.len(),
            target_scale: scale,
            note: None,
        },
        program,
        expansion,
    })
}

/// Symbolic factor of `T_m^{(j)}` on a term: `(d_j^2 - 1) + s_m s_j` with
/// `s = -1` on a traceless factor and `d^2 - 1` on an identity factor.
fn pair_filter_factor(term: Option<&CouplingTerm>, m: usize, j: usize, dims: &[usize]) -> f64 {
    let s = |q: usize| {
        let d2 = (dims[q] * dims[q]) as f64;
        match term {
            Some(t) if t.acts_on(q) => -1.0,
            _ => d2 - 1.0,
        }
    };
    let dj2 = (dims[j] * dims[j]) as f64;
    (dj2 - 1.0) + s(m) * s(j)
}

fn pair_filter(
    e: &Expansion,
    child: &SimulationProgram,
    m: usize,
    j: usize,
) -> Result<(SimulationProgram, Expansion)> {
    let system = &e.system;
    let dims = system.dims();
    let dj2 = (dims[j] * dims[j]) as f64;
    let gm = heisenberg_weyl(dims[m])?;
    let gj = heisenberg_weyl(dims[j])?;
    let mut branches = vec![(dj2 - 1.0, vec![])];
    for um in gm.iter().skip(1) {
        for uj in gj.iter().skip(1) {
            branches.push((1.0, vec![(m, um.clone()), (j, uj.clone())]));
        }
    }
    let program = conjugation_sum(child, system, branches)?;
    let expansion = map_terms(e, pair_filter_factor(None, m, j, dims), |t| {
        pair_filter_factor(Some(t), m, j, dims)
    });
    Ok((program, expansion))
}

fn check_within(e: &Expansion, support: &[usize]) -> Result<()> {
    if let Some(t) = e
        .terms
        .keys()
        .find(|t| !t.support().iter().all(|q| support.contains(q)))
    {
        return Err(Error::Precondition(format!(
            "term {t} reaches outside the support {support:?}"
        )));
    }
    Ok(())
}

fn filter_stage(
    e: &Expansion,
    support: &[usize],
    child: &SimulationProgram,
    pairs: Vec<(usize, usize)>,
    note: &str,
) -> Result<StageOutput> {
    check_within(e, support)?;
    let mut program = child.clone();
    let mut expansion = e.clone();
    let mut scale = 1.0;
    for (m, j) in pairs {
        let (p, x) = pair_filter(&expansion, &program, m, j)?;
        program = p;
        expansion = x;
        scale *= (e.system.dims()[j] * e.system.dims()[j]) as f64;
    }
    Ok(StageOutput {
        report: StageReport {
            stage: StageName::T,
            surviving_terms: expansion.len(),
            target_scale: scale,
            note: Some(note.to_string()),
        },
        program,
        expansion,
    })
}

/// Keeps only terms supported on all of `support`, composing the pairwise
/// filter over every ordered pair of distinct support qudits. A term on a
/// strict subset picks up a zero at a pair `(m in S_b, j not in S_b)`;
/// full-support terms scale by `prod d_j^2` over the pairs.
pub fn stage_full_support_filter(
    e: &Expansion,
    support: &[usize],
    child: &SimulationProgram,
) -> Result<StageOutput> {
    let pairs = support
        .iter()
        .flat_map(|&m| {
            support
                .iter()
                .filter(move |&&j| j != m)
                .map(move |&j| (m, j))
        })
        .collect();
    filter_stage(e, support, child, pairs, "all ordered pairs")
}

/// Single-anchor variant: filters `(anchor, j)` only, anchor being the
/// lowest support qudit. Equivalent to [`stage_full_support_filter`] when
/// all support dimensions agree; with mixed dimensions terms that avoid the
/// anchor can survive with factor `d_j^2 - d_anchor^2`.
pub fn stage_full_support_filter_anchored(
    e: &Expansion,
    support: &[usize],
    child: &SimulationProgram,
) -> Result<StageOutput> {
    let anchor = *support.iter().min().ok_or(Error::EmptySubset)?;
    let pairs = support
        .iter()
        .filter(|&&j| j != anchor)
        .map(|&j| (anchor, j))
        .collect();
    filter_stage(e, support, child, pairs, "single anchor")
}

/// `H -> H + Z_a H Z_a` for every level `a` of every support qudit.
/// Removes every term with an `X`/`Y` factor on the support; diagonal
/// factors (and identities) double at each step.
pub fn stage_cartan_filter(
    e: &Expansion,
    support: &[usize],
    child: &SimulationProgram,
) -> Result<StageOutput> {
    let system = &e.system;
    let mut program = child.clone();
    let mut expansion = e.clone();
    let mut scale = 1.0;
    for &j in support {
        let d = system.dims()[j];
        for a in 1..=d {
            let z = z_a(d, a)?;
            program = conjugation_sum(&program, system, vec![(1.0, vec![]), (1.0, vec![(j, z)])])?;
            expansion = map_terms(&expansion, 2.0, |t| match t.label(j) {
                Some(GellMannLabel::X(l, m)) | Some(GellMannLabel::Y(l, m)) if a == l || a == m => {
                    0.0
                }
                _ => 2.0,
            });
            scale *= 2.0;
        }
    }
    Ok(StageOutput {
        report: StageReport {
            stage: StageName::Z,
            surviving_terms: expansion.len(),
            target_scale: scale,
            note: None,
        },
        program,
        expansion,
    })
}

/// All permutations of `1..=r` in lexicographic order.
fn permutations(r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (1..=r).collect();
    loop {
        out.push(current.clone());
        let Some(i) = (0..r.saturating_sub(1))
            .rev()
            .find(|&i| current[i] < current[i + 1])
        else {
            break;
        };
        let j = (i + 1..r)
            .rev()
            .find(|&j| current[j] > current[i])
            .expect("successor");
        current.swap(i, j);
        current[i + 1..].reverse();
    }
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Sums conjugations by every permutation of levels `1..b_j-1` on each
/// support qudit. Kills `W_a` with `a < b_j`; `W_a` with `a >= b_j` scales
/// by `(b_j - 1)!`.
pub fn stage_permutation_filter(
    e: &Expansion,
    cartan_indices: &BTreeMap<usize, usize>,
    child: &SimulationProgram,
) -> Result<StageOutput> {
    if let Some(t) = e
        .terms
        .keys()
        .find(|t| t.factors().values().any(|l| !l.is_diagonal()))
    {
        return Err(Error::Precondition(format!(
            "term {t} is not a Cartan product"
        )));
    }
    let system = &e.system;
    let mut program = child.clone();
    let mut expansion = e.clone();
    let mut scale = 1.0;
    for (&j, &b) in cartan_indices {
        if b <= 2 {
            continue;
        }
        let f = factorial(b - 1);
        let d = system.dims()[j];
        let branches = permutations(b - 1)
            .into_iter()
            .map(|images| Ok((1.0, vec![(j, permutation_unitary(d, &images)?)])))
            .collect::<Result<Vec<_>>>()?;
        program = conjugation_sum(&program, system, branches)?;
        expansion = map_terms(&expansion, f, |t| match t.label(j) {
            Some(GellMannLabel::W(a)) if a < b => 0.0,
            _ => f,
        });
        scale *= f;
    }
    Ok(StageOutput {
        report: StageReport {
            stage: StageName::P,
            surviving_terms: expansion.len(),
            target_scale: scale,
            note: None,
        },
        program,
        expansion,
    })
}

/// `H -> -i[H, X_{b_j-1, b_j}]` on each support qudit, encoded as
/// `Commutator(Local(X), H)`. `W_{b_j}` becomes
/// `sqrt(b_j / (b_j - 1)) Y_{b_j-1, b_j}`; `W_a` with `a > b_j` and identity
/// factors vanish. Exactly one term survives.
pub fn stage_ladder(
    e: &Expansion,
    cartan_indices: &BTreeMap<usize, usize>,
    child: &SimulationProgram,
) -> Result<StageOutput> {
    let system = &e.system;
    for t in e.terms.keys() {
        for (&j, &b) in cartan_indices {
            match t.label(j) {
                Some(GellMannLabel::W(a)) if a >= b => {}
                None => {}
                _ => {
                    return Err(Error::Precondition(format!(
                        "term {t} is not a product of W_a with a >= b_j"
                    )))
                }
            }
        }
    }
    let mut program = child.clone();
    let mut expansion = e.clone();
    let mut scale = 1.0;
    for (&j, &b) in cartan_indices {
        let x = gellmann_matrix(system.dims()[j], GellMannLabel::X(b - 1, b))?;
        program = SimulationProgram::commutator(SimulationProgram::local(j, x)?, program);
        let ratio = (b as f64 / (b - 1) as f64).sqrt();
        let terms = expansion
            .terms
            .iter()
            .filter(|(t, _)| t.label(j) == Some(GellMannLabel::W(b)))
            .map(|(t, &h)| {
                let image = t
                    .with_label(j, Some(GellMannLabel::Y(b - 1, b)))
                    .expect("non-empty");
                (image, h * ratio)
            })
            .collect();
        expansion = rethreshold(Expansion {
            system: system.clone(),
            terms,
            trace_offset: 0.0,
        });
        scale *= ratio;
    }
    if expansion.len() != 1 {
        return Err(Error::Precondition(format!(
            "ladder left {} terms instead of one",
            expansion.len()
        )));
    }
    Ok(StageOutput {
        report: StageReport {
            stage: StageName::X,
            surviving_terms: expansion.len(),
            target_scale: scale,
            note: None,
        },
        program,
        expansion,
    })
}

/// Output of the stages before the final retarget: `program` simulates
/// `coefficient * term` with `term = ⊗ Y_{b_j-1, b_j}`.
#[derive(Debug, Clone)]
pub struct Ladder {
    pub program: SimulationProgram,
    pub term: CouplingTerm,
    pub coefficient: f64,
}

#[derive(Debug, Clone)]
pub struct Isolation {
    /// Effective Hamiltonian `scale * term`.
    pub program: SimulationProgram,
    pub term: CouplingTerm,
    pub scale: f64,
    pub target: CanonicalTarget,
    pub stages: Vec<StageReport>,
    pub ladder: Ladder,
}

impl Isolation {
    /// Reuses the staged prefix to simulate `coeff * target` instead, for any
    /// `target` on the same support.
    pub fn retarget(&self, target: &CouplingTerm, coeff: f64) -> Result<SimulationProgram> {
        retarget_program(
            self.ladder.program.clone(),
            &self.ladder.term,
            self.ladder.coefficient,
            target,
            coeff,
            &self.term_system(),
        )
    }

    fn term_system(&self) -> QuditSystem {
        QuditSystem::new(self.target.conjugation.dims()).expect("valid system")
    }
}

/// Isolates `alpha` from the Hamiltonian described by `e`, which the
/// resource program `Native(1)` evolves.
pub fn isolate_term(e: &Expansion, alpha: &CouplingTerm) -> Result<Isolation> {
    isolate_from(e, alpha, &SimulationProgram::source())
}

/// Isolates `alpha` where `source` is any program whose effective
/// Hamiltonian has expansion `e`.
pub fn isolate_from(
    e: &Expansion,
    alpha: &CouplingTerm,
    source: &SimulationProgram,
) -> Result<Isolation> {
    let system = e.system.clone();
    let (target, rotated) = precondition(e, alpha)?;
    let support = alpha.support();
    let mut program = if target.conjugation.is_identity() {
        source.clone()
    } else {
        SimulationProgram::conjugate(target.conjugation.clone(), source.clone())
    };
    let mut stages = Vec::with_capacity(5);
    let mut expansion = rotated;

    let out = stage_depolarize(&expansion, &support, &program)?;
    (program, expansion) = (out.program, out.expansion);
    stages.push(out.report);

    if support.len() > 1 {
        let out = stage_full_support_filter(&expansion, &support, &program)?;
        (program, expansion) = (out.program, out.expansion);
        stages.push(out.report);
    }

    let out = stage_cartan_filter(&expansion, &support, &program)?;
    (program, expansion) = (out.program, out.expansion);
    stages.push(out.report);

    let out = stage_permutation_filter(&expansion, &target.cartan_indices, &program)?;
    (program, expansion) = (out.program, out.expansion);
    stages.push(out.report);

    let out = stage_ladder(&expansion, &target.cartan_indices, &program)?;
    (program, expansion) = (out.program, out.expansion);
    stages.push(out.report);

    let term = ladder_term(&target.cartan_indices, &system)?;
    let coefficient = expansion
        .coefficient(&term)
        .ok_or_else(|| Error::Precondition(format!("ladder survivor is not {term}")))?;
    if coefficient.abs() <= f64::MIN_POSITIVE {
        return Err(Error::TermBelowThreshold {
            term: alpha.to_string(),
            magnitude: coefficient.abs(),
            threshold: f64::MIN_POSITIVE,
        });
    }
    let ladder = Ladder {
        program,
        term,
        coefficient,
    };
    let scale = coefficient.abs();
    let program = retarget_program(
        ladder.program.clone(),
        &ladder.term,
        coefficient,
        alpha,
        scale,
        &system,
    )?;
    Ok(Isolation {
        program,
        term: alpha.clone(),
        scale,
        target,
        stages,
        ladder,
    })
}
