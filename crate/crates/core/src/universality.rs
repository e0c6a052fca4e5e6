//! Removing qudits from couplings, and building spanning sets of verified
//! two-body couplings for entangling Hamiltonians with a non-qubit.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::isolation::isolate_from;
use crate::linalg::{commutator, frobenius_norm, GellMannLabel, Operator, I};
use crate::majorization::retarget_program;
use crate::model::{
    classify, expand, project, reconstruct, CouplingTerm, Expansion, QuditSystem, Verdict,
};
use crate::program::{effective_hamiltonian, SimulationProgram};

/// Edge programs whose relative residual exceeds this are rejected.
pub const EDGE_TOLERANCE: f64 = 1e-9;

/// `X(1,2)` on every qudit of `support`.
pub fn canonical_term(support: &[usize], system: &QuditSystem) -> Result<CouplingTerm> {
    CouplingTerm::from_pairs(support.iter().map(|&q| (q, GellMannLabel::X(1, 2))), system)
}

/// Partner for the elimination commutator: equal to `alpha` on `q`,
/// `X(1,3)` on the other non-qubits and `Y(1,2)` on the other qubits.
/// `alpha` must carry `X(1,2)` away from `q`.
pub fn partner_term(alpha: &CouplingTerm, q: usize, system: &QuditSystem) -> Result<CouplingTerm> {
    let Some(kept) = alpha.label(q) else {
        return Err(Error::Precondition(format!(
            "qudit {q} is outside the support of {alpha}"
        )));
    };
    let rest: Vec<usize> = alpha.support().into_iter().filter(|&j| j != q).collect();
    if rest.iter().all(|&j| system.is_qubit(j)) {
        return Err(Error::Precondition(format!(
            "the support of {alpha} without qudit {q} holds qubits only"
        )));
    }
    let mut pairs = vec![(q, kept)];
    for j in rest {
        if alpha.label(j) != Some(GellMannLabel::X(1, 2)) {
            return Err(Error::Precondition(format!(
                "{alpha} must carry X:1:2 on qudit {j}"
            )));
        }
        let label = if system.is_qubit(j) {
            GellMannLabel::Y(1, 2)
        } else {
            GellMannLabel::X(1, 3)
        };
        pairs.push((j, label));
    }
    CouplingTerm::from_pairs(pairs, system)
}

/// Partner differing from the canonical term on every support qudit:
/// `X(1,3)` on non-qubits and `Y(1,2)` on qubits. Its commutator with
/// [`canonical_term`] couples the whole support whenever the support holds a
/// non-qubit.
pub fn recipe_partner(support: &[usize], system: &QuditSystem) -> Result<CouplingTerm> {
    CouplingTerm::from_pairs(
        support.iter().map(|&q| {
            let label = if system.is_qubit(q) {
                GellMannLabel::Y(1, 2)
            } else {
                GellMannLabel::X(1, 3)
            };
            (q, label)
        }),
        system,
    )
}

/// Expansion of `i[alpha, beta]`.
pub fn commutator_expansion(
    alpha: &CouplingTerm,
    beta: &CouplingTerm,
    system: &QuditSystem,
) -> Result<Expansion> {
    if alpha.support() != beta.support() {
        return Err(Error::SupportMismatch(format!("{alpha} vs {beta}")));
    }
    let c = commutator(&alpha.operator(system), &beta.operator(system)) * I;
    let e = expand(&c, system)?;
    if e.is_empty() {
        return Err(Error::ZeroCommutator(format!("[{alpha}, {beta}] = 0")));
    }
    Ok(e)
}

/// A program whose effective Hamiltonian is `scale * term`, with `scale`
/// predicted symbolically.
#[derive(Debug, Clone)]
pub struct Coupling {
    pub program: SimulationProgram,
    pub term: CouplingTerm,
    pub scale: f64,
}

/// Brings `e` (the effective Hamiltonian of `source`) down to a program
/// simulating `alpha` with some stored coefficient: the isolation ladder
/// when other terms are present, `source` itself otherwise.
fn isolated(e: &Expansion, alpha: &CouplingTerm, source: &SimulationProgram) -> Result<Coupling> {
    if e.len() == 1 && e.trace_offset == 0.0 {
        if let Some(h) = e.coefficient(alpha) {
            return Ok(Coupling {
                program: source.clone(),
                term: alpha.clone(),
                scale: h,
            });
        }
    }
    let iso = isolate_from(e, alpha, source)?;
    Ok(Coupling {
        program: iso.ladder.program,
        term: iso.ladder.term,
        scale: iso.ladder.coefficient,
    })
}

fn largest_full_support(e: &Expansion, support: &[usize]) -> Option<(CouplingTerm, f64)> {
    let mut best: Option<(CouplingTerm, f64)> = None;
    for (t, &h) in &e.terms {
        if t.support() != support {
            continue;
        }
        if best.as_ref().is_none_or(|(_, b)| h.abs() > b.abs()) {
            best = Some((t.clone(), h));
        }
    }
    best
}

/// Removes qudit `q` from the support of `alpha`, where `e` is the
/// expansion of the Hamiltonian evolved by `Native(1)`.
pub fn drop_qudit(e: &Expansion, alpha: &CouplingTerm, q: usize) -> Result<Coupling> {
    drop_qudit_from(e, alpha, q, &SimulationProgram::source())
}

/// [`drop_qudit`] for an arbitrary `source` program with expansion `e`.
pub fn drop_qudit_from(
    e: &Expansion,
    alpha: &CouplingTerm,
    q: usize,
    source: &SimulationProgram,
) -> Result<Coupling> {
    let system = &e.system;
    let support = alpha.support();
    if !alpha.acts_on(q) {
        return Err(Error::Precondition(format!(
            "qudit {q} is outside the support of {alpha}"
        )));
    }
    if support.len() < 2 {
        return Err(Error::Precondition(format!(
            "{alpha} acts on a single qudit"
        )));
    }
    let canonical = canonical_term(&support, system)?;
    let partner = partner_term(&canonical, q, system)?;
    let base = isolated(e, alpha, source)?;
    let left = retarget_program(
        base.program.clone(),
        &base.term,
        base.scale,
        &canonical,
        1.0,
        system,
    )?;
    let right = retarget_program(base.program, &base.term, base.scale, &partner, 1.0, system)?;
    let program = SimulationProgram::commutator(left, right);
    let expansion = commutator_expansion(&canonical, &partner, system)?;

    let keep: Vec<usize> = (0..system.len()).filter(|&j| j != q).collect();
    let twirled = crate::isolation::stage_depolarize(&expansion, &keep, &program)?;
    let rest: Vec<usize> = support.iter().copied().filter(|&j| j != q).collect();
    let (gamma, _) = largest_full_support(&twirled.expansion, &rest).ok_or_else(|| {
        Error::ZeroCommutator(format!(
            "no term on {rest:?} survives the twirl on qudit {q}"
        ))
    })?;
    let iso = isolate_from(&twirled.expansion, &gamma, &twirled.program)?;
    Ok(Coupling {
        program: iso.program,
        term: gamma,
        scale: iso.scale,
    })
}

/// A compiled two-qudit coupling between `center` and `other`.
#[derive(Debug, Clone)]
pub struct Edge {
    pub center: usize,
    pub other: usize,
    pub coupling: Coupling,
}

/// Star of two-body couplings centred at the non-qubit `anchor`, one per
/// other qudit of `alpha`'s support.
pub fn reduce_to_two_body(e: &Expansion, alpha: &CouplingTerm, anchor: usize) -> Result<Vec<Edge>> {
    let edges = reduce_from(e, alpha, anchor, &SimulationProgram::source())?;
    let h = reconstruct(e);
    for edge in &edges {
        verify_coupling(&edge.coupling, &h, &e.system)?;
    }
    Ok(edges)
}

/// [`reduce_to_two_body`] for an arbitrary `source` program with expansion
/// `e`; the edges are not verified.
pub fn reduce_from(
    e: &Expansion,
    alpha: &CouplingTerm,
    anchor: usize,
    source: &SimulationProgram,
) -> Result<Vec<Edge>> {
    let system = &e.system;
    let support = alpha.support();
    if support.len() < 2 {
        return Err(Error::Precondition(format!(
            "{alpha} acts on a single qudit"
        )));
    }
    if !alpha.acts_on(anchor) || system.is_qubit(anchor) {
        return Err(Error::Precondition(format!(
            "anchor {anchor} must be a non-qubit in the support of {alpha}"
        )));
    }
    let mut edges = Vec::with_capacity(support.len() - 1);
    for &j in support.iter().filter(|&&j| j != anchor) {
        let coupling = if support.len() == 2 {
            let iso = isolate_from(e, alpha, source)?;
            Coupling {
                program: iso.program,
                term: iso.term,
                scale: iso.scale,
            }
        } else {
            let mut current = e.clone();
            let mut term = alpha.clone();
            let mut program = source.clone();
            let mut last = None;
            for &q in support.iter().rev().filter(|&&q| q != anchor && q != j) {
                let dropped = drop_qudit_from(&current, &term, q, &program)?;
                current = Expansion::single(system.clone(), dropped.term.clone(), dropped.scale);
                term = dropped.term.clone();
                program = dropped.program.clone();
                last = Some(dropped);
            }
            last.expect("at least one qudit dropped")
        };
        edges.push(Edge {
            center: anchor,
            other: j,
            coupling,
        });
    }
    Ok(edges)
}

/// Dense check of a coupling against the resource Hamiltonian `h`.
/// Returns the measured scale and the residual relative to the predicted one.
pub fn verify_coupling(c: &Coupling, h: &Operator, system: &QuditSystem) -> Result<(f64, f64)> {
    let eff = effective_hamiltonian(&c.program, h, system)?;
    let expected = c.term.operator(system) * num_complex::Complex64::new(c.scale, 0.0);
    let residual = frobenius_norm(&(&eff - &expected)) / frobenius_norm(&expected);
    let measured = project(&eff, &c.term, system);
    if residual.is_nan() || residual >= EDGE_TOLERANCE || measured <= 0.0 {
        return Err(Error::Verification(format!(
            "program for {} has residual {residual:e} and scale {measured}",
            c.term
        )));
    }
    Ok((measured, residual))
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateEdge {
    pub i: usize,
    pub j: usize,
    pub term: CouplingTerm,
    /// Scale measured on the dense effective Hamiltonian.
    pub scale: f64,
    pub residual: f64,
    #[serde(skip)]
    pub program: SimulationProgram,
}

/// Verified spanning set of two-qudit couplings.
#[derive(Debug, Clone, Serialize)]
pub struct UniversalityCertificate {
    pub anchor: usize,
    pub edges: Vec<CertificateEdge>,
    pub verdict: Verdict,
    pub iterations: usize,
}

impl UniversalityCertificate {
    /// Whether the edges connect all `n` qudits.
    pub fn is_spanning(&self, n: usize) -> bool {
        let mut uf = crate::model::UnionFind::new(n);
        for e in &self.edges {
            uf.union(e.i, e.j);
        }
        let root = uf.find(0);
        (0..n).all(|q| uf.find(q) == root)
    }

    /// Whether every qubit endpoint has an edge to a non-qubit.
    pub fn qubits_attached(&self, system: &QuditSystem) -> bool {
        self.edges
            .iter()
            .flat_map(|e| [e.i, e.j])
            .filter(|&q| system.is_qubit(q))
            .all(|q| {
                self.edges.iter().any(|e| {
                    (e.i == q && !system.is_qubit(e.j)) || (e.j == q && !system.is_qubit(e.i))
                })
            })
    }
}

fn pick_frontier<'a>(e: &'a Expansion, covered: &BTreeSet<usize>) -> Option<&'a CouplingTerm> {
    e.terms
        .keys()
        .filter(|t| {
            let s = t.support();
            s.iter().any(|q| covered.contains(q)) && !s.iter().all(|q| covered.contains(q))
        })
        .min_by(|a, b| a.support().cmp(&b.support()).then_with(|| a.cmp(b)))
}

/// Builds and verifies a spanning two-body certificate for a Hamiltonian
/// that is entangling and has at least one non-qubit.
pub fn connect_all(e: &Expansion) -> Result<UniversalityCertificate> {
    let verdict = classify(e)?;
    match verdict {
        Verdict::UniversalConstructive => {}
        Verdict::NonEntangling { .. } => return Err(Error::NotEntangling(verdict)),
        _ => return Err(Error::NotConstructive(verdict)),
    }
    let system = &e.system;
    let n = system.len();
    let anchor = (0..n)
        .find(|&q| !system.is_qubit(q))
        .expect("constructive verdict has a non-qubit");
    let mut covered = BTreeSet::from([anchor]);
    let mut edges: Vec<Edge> = Vec::new();
    let mut iterations = 0;
    let source = SimulationProgram::source();

    while covered.len() < n {
        iterations += 1;
        if iterations > n.saturating_sub(1) {
            return Err(Error::Verification(format!(
                "certificate loop exceeded {} iterations",
                n - 1
            )));
        }
        let beta = pick_frontier(e, &covered)
            .ok_or_else(|| Error::Precondition("no coupling leaves the covered set".into()))?
            .clone();
        let support = beta.support();
        let star = match support.iter().copied().find(|&q| !system.is_qubit(q)) {
            Some(m) => reduce_from(e, &beta, m, &source)?,
            None => {
                let j = *support
                    .iter()
                    .find(|q| covered.contains(q))
                    .expect("frontier term");
                let edge = edges
                    .iter()
                    .find(|x| x.other == j && !system.is_qubit(x.center))
                    .ok_or_else(|| {
                        Error::Precondition(format!("qubit {j} has no edge to a non-qubit"))
                    })?;
                let m = edge.center;
                let edge_target = CouplingTerm::from_pairs(
                    [(m, GellMannLabel::X(1, 2)), (j, GellMannLabel::W(2))],
                    system,
                )?;
                let left = retarget_program(
                    edge.coupling.program.clone(),
                    &edge.coupling.term,
                    edge.coupling.scale,
                    &edge_target,
                    1.0,
                    system,
                )?;
                let isolated_beta = isolated(e, &beta, &source)?;
                let beta_target = canonical_term(&support, system)?;
                let right = retarget_program(
                    isolated_beta.program,
                    &isolated_beta.term,
                    isolated_beta.scale,
                    &beta_target,
                    1.0,
                    system,
                )?;
                let program = SimulationProgram::commutator(left, right);
                let c =
                    commutator(&edge_target.operator(system), &beta_target.operator(system)) * I;
                let combined = expand(&c, system)?;
                let mut joint = support.clone();
                joint.push(m);
                joint.sort_unstable();
                let (tau, _) = largest_full_support(&combined, &joint).ok_or_else(|| {
                    Error::ZeroCommutator(format!(
                        "edge ({m},{j}) and {beta} give no joint coupling"
                    ))
                })?;
                reduce_from(&combined, &tau, m, &program)?
            }
        };
        for edge in star {
            let duplicate = edges.iter().any(|x| {
                (x.center, x.other) == (edge.center, edge.other)
                    || (x.center, x.other) == (edge.other, edge.center)
            });
            covered.insert(edge.center);
            covered.insert(edge.other);
            if !duplicate {
                edges.push(edge);
            }
        }
    }

    let h = reconstruct(e);
    let edges = edges
        .into_iter()
        .map(|edge| {
            let (scale, residual) = verify_coupling(&edge.coupling, &h, system)?;
            Ok(CertificateEdge {
                i: edge.center,
                j: edge.other,
                term: edge.coupling.term,
                scale,
                residual,
                program: edge.coupling.program,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(UniversalityCertificate {
        anchor,
        edges,
        verdict,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_expansion, seeded};

    fn sys(dims: &[usize]) -> QuditSystem {
        QuditSystem::new(dims.to_vec()).unwrap()
    }

    fn term(s: &QuditSystem, spec: &str) -> CouplingTerm {
        CouplingTerm::parse(spec, s).unwrap()
    }

    #[test]
    fn partner_examples() {
        let s = sys(&[3, 3]);
        let beta = partner_term(&term(&s, "0:X:1:2,1:X:1:2"), 0, &s).unwrap();
        assert_eq!(beta, term(&s, "0:X:1:2,1:X:1:3"));

        let s = sys(&[3, 2, 2]);
        let beta = partner_term(&term(&s, "0:X:1:2,1:X:1:2,2:X:1:2"), 1, &s).unwrap();
        assert_eq!(beta, term(&s, "0:X:1:3,1:X:1:2,2:Y:1:2"));

        let s = sys(&[3, 2]);
        assert!(partner_term(&term(&s, "0:X:1:2,1:X:1:2"), 0, &s).is_err());
        assert!(partner_term(&term(&s, "0:X:1:2"), 1, &s).is_err());
    }

    #[test]
    fn single_qutrit_commutator() {
        let s = sys(&[3]);
        let e = commutator_expansion(&term(&s, "0:X:1:2"), &term(&s, "0:X:1:3"), &s).unwrap();
        assert_eq!(e.len(), 1);
        let c = e.coefficient(&term(&s, "0:Y:2:3")).unwrap();
        assert!((c + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-14);
    }

    #[test]
    fn recipe_commutators_have_full_support() {
        for dims in [
            vec![3, 3],
            vec![3, 2],
            vec![4, 3],
            vec![3, 2, 2],
            vec![2, 2, 3],
        ] {
            let s = sys(&dims);
            let support: Vec<usize> = (0..dims.len()).collect();
            let alpha = canonical_term(&support, &s).unwrap();
            let beta = recipe_partner(&support, &s).unwrap();
            let e = commutator_expansion(&alpha, &beta, &s).unwrap();
            assert!(e.terms.keys().all(|t| t.support() == support), "{dims:?}");
            for q in support.clone() {
                let Ok(beta) = partner_term(&alpha, q, &s) else {
                    continue;
                };
                let e = commutator_expansion(&alpha, &beta, &s).unwrap();
                let rest: Vec<usize> = support.iter().copied().filter(|&j| j != q).collect();
                assert!(
                    e.terms.keys().any(|t| t.support() == rest),
                    "{dims:?} q={q}"
                );
                assert!(e
                    .terms
                    .keys()
                    .all(|t| t.support() == support || t.support() == rest));
            }
        }
    }

    #[test]
    fn qubit_pair_commutators_lose_support() {
        let s = sys(&[2, 2]);
        let xx = term(&s, "0:X:1:2,1:X:1:2");
        let yy = recipe_partner(&[0, 1], &s).unwrap();
        assert!(matches!(
            commutator_expansion(&xx, &yy, &s),
            Err(Error::ZeroCommutator(_))
        ));
        let e = commutator_expansion(&xx, &term(&s, "0:X:1:2,1:Y:1:2"), &s).unwrap();
        assert!(e.terms.keys().all(|t| t.weight() < 2));
    }

    #[test]
    fn drop_from_qutrit_pair() {
        let s = sys(&[3, 3]);
        let alpha = term(&s, "0:X:1:2,1:X:1:2");
        let e = Expansion::single(s.clone(), alpha.clone(), 1.0);
        let d = drop_qudit(&e, &alpha, 0).unwrap();
        assert_eq!(d.term, term(&s, "1:Y:2:3"));
        verify_coupling(&d, &reconstruct(&e), &s).unwrap();
    }

    #[test]
    fn drop_from_mixed_triple() {
        let mut rng = seeded(71);
        let s = sys(&[3, 2, 2]);
        let alpha = term(&s, "0:W:3,1:X:1:2,2:Y:1:2");
        let mut e = random_expansion(&s, 4, &mut rng);
        e.terms.insert(alpha.clone(), 0.8);
        let d = drop_qudit(&e, &alpha, 2).unwrap();
        assert_eq!(d.term.support(), vec![0, 1]);
        verify_coupling(&d, &reconstruct(&e), &s).unwrap();
    }

    #[test]
    fn drop_errors() {
        let s = sys(&[3, 2, 2]);
        let alpha = term(&s, "0:X:1:2,1:X:1:2");
        let e = Expansion::single(s.clone(), alpha.clone(), 1.0);
        assert!(drop_qudit(&e, &alpha, 2).is_err());
        assert!(drop_qudit(&e, &alpha, 0).is_err());
    }

    #[test]
    fn star_from_two_body_term_is_isolation() {
        let s = sys(&[3, 2]);
        let alpha = term(&s, "0:X:1:2,1:W:2");
        let e = Expansion::from_terms(
            s.clone(),
            [(alpha.clone(), 0.5), (term(&s, "0:W:3"), 0.3)]
                .into_iter()
                .collect(),
            0.1,
        );
        let edges = reduce_to_two_body(&e, &alpha, 0).unwrap();
        assert_eq!(edges.len(), 1);
        assert_eq!((edges[0].center, edges[0].other), (0, 1));
        assert_eq!(edges[0].coupling.term, alpha);
    }

    #[test]
    fn star_on_three_qudits() {
        let s = sys(&[3, 2, 2]);
        let alpha = term(&s, "0:X:1:2,1:X:1:2,2:X:1:2");
        let e = Expansion::single(s.clone(), alpha.clone(), 1.0);
        let edges = reduce_to_two_body(&e, &alpha, 0).unwrap();
        let pairs: Vec<_> = edges.iter().map(|x| (x.center, x.other)).collect();
        assert_eq!(pairs, vec![(0, 1), (0, 2)]);
        for x in &edges {
            assert_eq!(x.coupling.term.support(), vec![x.center, x.other]);
        }
        assert!(reduce_to_two_body(&e, &alpha, 1).is_err());
    }

    #[test]
    fn connect_mixed_chain() {
        let s = sys(&[3, 2, 2]);
        let e = Expansion::from_terms(
            s.clone(),
            [
                (term(&s, "0:X:1:2,1:X:1:2"), 1.0),
                (term(&s, "1:W:2,2:W:2"), 0.5),
            ]
            .into_iter()
            .collect(),
            0.0,
        );
        let cert = connect_all(&e).unwrap();
        assert_eq!(cert.anchor, 0);
        assert_eq!(cert.iterations, 2);
        assert_eq!(cert.edges.len(), 2);
        assert!(cert.is_spanning(3));
        assert!(cert.qubits_attached(&s));
        assert!(cert
            .edges
            .iter()
            .all(|x| x.residual < EDGE_TOLERANCE && x.scale > 0.0));
    }

    #[test]
    fn connect_single_edge() {
        let s = sys(&[3, 2]);
        let e = Expansion::single(s.clone(), term(&s, "0:Y:1:3,1:X:1:2"), -0.4);
        let cert = connect_all(&e).unwrap();
        assert_eq!(cert.edges.len(), 1);
        assert_eq!((cert.edges[0].i, cert.edges[0].j), (0, 1));
    }

    #[test]
    fn connect_refuses_qubits_and_products() {
        let s = sys(&[2, 2, 2]);
        let odd = Expansion::single(s.clone(), term(&s, "0:X:1:2,1:X:1:2,2:X:1:2"), 1.0);
        assert!(matches!(
            connect_all(&odd),
            Err(Error::NotConstructive(Verdict::OddQubitOnly))
        ));
        let even = Expansion::from_terms(
            s.clone(),
            [
                (term(&s, "0:X:1:2,1:X:1:2"), 1.0),
                (term(&s, "1:W:2,2:W:2"), 1.0),
            ]
            .into_iter()
            .collect(),
            0.0,
        );
        assert!(matches!(
            connect_all(&even),
            Err(Error::NotConstructive(Verdict::UniversalByEvenTerm))
        ));
        let s = sys(&[3, 2]);
        let product = Expansion::single(s.clone(), term(&s, "0:W:2"), 1.0);
        assert!(matches!(
            connect_all(&product),
            Err(Error::NotEntangling(_))
        ));
    }
}
