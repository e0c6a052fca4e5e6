//! Multi-qudit systems, Gell-Mann expansions of Hamiltonians, coupling
//! hypergraph connectivity and universality classification.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_hermitian, embed, gellmann_matrix, zeros, GellMannLabel, Operator};

/// Default relative zero threshold for expansion coefficients.
pub const EPS_ZERO: f64 = 1e-12;

/// Total dimensions above this are refused.
pub const MAX_TOTAL_DIM: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct QuditSystem {
    dims: Vec<usize>,
}

impl QuditSystem {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::EmptySubset);
        }
        if let Some(&d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidDimension(d));
        }
        let total = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
        match total {
            Some(t) if t <= MAX_TOTAL_DIM => Ok(QuditSystem { dims }),
            _ => Err(Error::Precondition(format!(
                "total dimension of {dims:?} exceeds {MAX_TOTAL_DIM}"
            ))),
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_qubit(&self, q: usize) -> bool {
        self.dims[q] == 2
    }

    pub fn all_qubits(&self) -> bool {
        self.dims.iter().all(|&d| d == 2)
    }

    pub fn check_qudit(&self, q: usize) -> Result<()> {
        if q < self.dims.len() {
            Ok(())
        } else {
            Err(Error::QuditOutOfRange {
                index: q,
                len: self.dims.len(),
            })
        }
    }
}

impl TryFrom<Vec<usize>> for QuditSystem {
    type Error = Error;
    fn try_from(dims: Vec<usize>) -> Result<Self> {
        QuditSystem::new(dims)
    }
}

impl From<QuditSystem> for Vec<usize> {
    fn from(s: QuditSystem) -> Vec<usize> {
        s.dims
    }
}

/// A tensor product of Gell-Mann matrices on a non-empty support, identity
/// elsewhere.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CouplingTerm {
    factors: BTreeMap<usize, GellMannLabel>,
}

impl CouplingTerm {
    pub fn new(factors: BTreeMap<usize, GellMannLabel>, system: &QuditSystem) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::EmptyTerm);
        }
        for (&q, label) in &factors {
            system.check_qudit(q)?;
            label.validate(system.dims()[q])?;
        }
        Ok(CouplingTerm { factors })
    }

    pub fn from_pairs(
        pairs: impl IntoIterator<Item = (usize, GellMannLabel)>,
        system: &QuditSystem,
    ) -> Result<Self> {
        Self::new(pairs.into_iter().collect(), system)
    }

    /// Parses `"0:W:2,1:X:1:2"`.
    pub fn parse(spec: &str, system: &QuditSystem) -> Result<Self> {
        let mut factors = BTreeMap::new();
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (q, label) = part
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("bad factor {part:?}")))?;
            let q: usize = q
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad qudit index in {part:?}")))?;
            if factors.insert(q, label.parse()?).is_some() {
                return Err(Error::Parse(format!("qudit {q} repeated in {spec:?}")));
            }
        }
        Self::new(factors, system)
    }

    pub fn factors(&self) -> &BTreeMap<usize, GellMannLabel> {
        &self.factors
    }

    pub fn label(&self, q: usize) -> Option<GellMannLabel> {
        self.factors.get(&q).copied()
    }

    pub fn support(&self) -> Vec<usize> {
        self.factors.keys().copied().collect()
    }

    pub fn weight(&self) -> usize {
        self.factors.len()
    }

    pub fn acts_on(&self, q: usize) -> bool {
        self.factors.contains_key(&q)
    }

    /// The same term with the label on `q` replaced (or removed when
    /// `label` is `None`). Returns `None` if nothing would remain.
    pub fn with_label(&self, q: usize, label: Option<GellMannLabel>) -> Option<Self> {
        let mut factors = self.factors.clone();
        match label {
            Some(l) => {
                factors.insert(q, l);
            }
            None => {
                factors.remove(&q);
            }
        }
        (!factors.is_empty()).then_some(CouplingTerm { factors })
    }

    /// Dense embedding into the full system.
    pub fn operator(&self, system: &QuditSystem) -> Operator {
        let mats: Vec<(usize, Operator)> = self
            .factors
            .iter()
            .map(|(&q, &l)| {
                (
                    q,
                    gellmann_matrix(system.dims()[q], l).expect("validated label"),
                )
            })
            .collect();
        let refs: Vec<(usize, &Operator)> = mats.iter().map(|(q, m)| (*q, m)).collect();
        embed(system.dims(), &refs).expect("validated term")
    }

    /// Nonzero entries of the embedded operator.
    pub(crate) fn sparse_entries(&self, system: &QuditSystem) -> Vec<(usize, usize, Complex64)> {
        let mut acc = vec![(0usize, 0usize, Complex64::new(1.0, 0.0))];
        for (q, &d) in system.dims().iter().enumerate() {
            let local: Vec<(usize, usize, Complex64)> = match self.factors.get(&q) {
                Some(l) => l.entries(),
                None => (0..d).map(|k| (k, k, Complex64::new(1.0, 0.0))).collect(),
            };
            let mut next = Vec::with_capacity(acc.len() * local.len());
            for &(r, c, v) in &acc {
                for &(lr, lc, lv) in &local {
                    next.push((r * d + lr, c * d + lc, v * lv));
                }
            }
            acc = next;
        }
        acc
    }

    /// `tr(H_a^2)`: product of the dimensions of unsupported qudits.
    pub fn norm_sqr(&self, system: &QuditSystem) -> f64 {
        system
            .dims()
            .iter()
            .enumerate()
            .filter(|(q, _)| !self.acts_on(*q))
            .map(|(_, &d)| d as f64)
            .product()
    }
}

impl fmt::Display for CouplingTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|(q, l)| format!("{q}:{l}"))
            .collect();
        f.write_str(&parts.join(","))
    }
}

impl Serialize for CouplingTerm {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// `H = trace_offset * I + sum_a h_a H_a` with real `h_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct Expansion {
    pub system: QuditSystem,
    pub terms: BTreeMap<CouplingTerm, f64>,
    pub trace_offset: f64,
}

impl Expansion {
    /// Builds an expansion, dropping coefficients at or below
    /// [`EPS_ZERO`] relative to the largest one.
    pub fn from_terms(
        system: QuditSystem,
        terms: BTreeMap<CouplingTerm, f64>,
        trace_offset: f64,
    ) -> Self {
        let mut e = Expansion {
            system,
            terms,
            trace_offset,
        };
        e.threshold(EPS_ZERO);
        e
    }

    pub fn single(system: QuditSystem, term: CouplingTerm, coeff: f64) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(term, coeff);
        Self::from_terms(system, terms, 0.0)
    }

    pub fn max_coefficient(&self) -> f64 {
        self.terms.values().fold(0.0, |m, h| m.max(h.abs()))
    }

    /// Absolute cutoff `eps * max |h_a|`.
    pub fn zero_cutoff(&self, eps: f64) -> f64 {
        eps * self.max_coefficient()
    }

    pub fn threshold(&mut self, eps: f64) {
        let cutoff = self.zero_cutoff(eps);
        self.terms.retain(|_, h| h.abs() > cutoff && *h != 0.0);
        if self.trace_offset.abs() <= cutoff {
            self.trace_offset = 0.0;
        }
    }

    pub fn coefficient(&self, term: &CouplingTerm) -> Option<f64> {
        self.terms.get(term).copied()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Drops the global-phase part.
    pub fn traceless(&self) -> Self {
        Expansion {
            trace_offset: 0.0,
            ..self.clone()
        }
    }
}

/// Hilbert-Schmidt projection of `h` onto a single coupling term:
/// `tr(H_a H) / tr(H_a^2)`.
pub fn project(h: &Operator, term: &CouplingTerm, system: &QuditSystem) -> f64 {
    let raw: Complex64 = term
        .sparse_entries(system)
        .into_iter()
        .map(|(r, c, v)| v * h[(c, r)])
        .sum();
    raw.re / term.norm_sqr(system)
}

fn all_terms(system: &QuditSystem) -> Vec<CouplingTerm> {
    let mut out: Vec<BTreeMap<usize, GellMannLabel>> = vec![BTreeMap::new()];
    for (q, &d) in system.dims().iter().enumerate() {
        let labels = GellMannLabel::all(d);
        let mut next = Vec::with_capacity(out.len() * (labels.len() + 1));
        for partial in &out {
            next.push(partial.clone());
            for &l in &labels {
                let mut f = partial.clone();
                f.insert(q, l);
                next.push(f);
            }
        }
        out = next;
    }
    out.into_iter()
        .filter(|f| !f.is_empty())
        .map(|factors| CouplingTerm { factors })
        .collect()
}

pub fn expand(h: &Operator, system: &QuditSystem) -> Result<Expansion> {
    expand_with_eps(h, system, EPS_ZERO)
}

/// Gell-Mann expansion of a Hermitian matrix; coefficients at or below
/// `eps` times the largest are dropped.
pub fn expand_with_eps(h: &Operator, system: &QuditSystem, eps: f64) -> Result<Expansion> {
    let dim = system.total_dim();
    if h.nrows() != dim || h.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: h.nrows(),
        });
    }
    check_hermitian(h)?;
    let terms = all_terms(system)
        .into_iter()
        .map(|t| {
            let c = project(h, &t, system);
            (t, c)
        })
        .collect();
    let mut e = Expansion {
        system: system.clone(),
        terms,
        trace_offset: h.trace().re / dim as f64,
    };
    e.threshold(eps);
    Ok(e)
}

pub fn reconstruct(e: &Expansion) -> Operator {
    let dim = e.system.total_dim();
    let mut out = zeros(dim);
    for k in 0..dim {
        out[(k, k)] = Complex64::new(e.trace_offset, 0.0);
    }
    for (term, &h) in &e.terms {
        for (r, c, v) in term.sparse_entries(&e.system) {
            out[(r, c)] += v * h;
        }
    }
    out
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Connectivity {
    Connected,
    /// The component holding the lowest qudit, and everything else.
    Partition(Vec<usize>, Vec<usize>),
}

/// Whether the coupling hypergraph restricted to `subset` is connected.
pub fn is_entangling(e: &Expansion, subset: &[usize]) -> Result<Connectivity> {
    let mut vertices: Vec<usize> = subset.to_vec();
    vertices.sort_unstable();
    vertices.dedup();
    if vertices.is_empty() {
        return Err(Error::EmptySubset);
    }
    for &q in &vertices {
        e.system.check_qudit(q)?;
    }
    let slot = |q: usize| vertices.binary_search(&q).ok();
    let mut uf = UnionFind::new(vertices.len());
    for term in e.terms.keys() {
        let mut members = term.factors.keys().filter_map(|&q| slot(q));
        if let Some(first) = members.next() {
            for other in members {
                uf.union(first, other);
            }
        }
    }
    let root = uf.find(0);
    let (inside, outside): (Vec<usize>, Vec<usize>) =
        (0..vertices.len()).partition(|&i| uf.find(i) == root);
    if outside.is_empty() {
        Ok(Connectivity::Connected)
    } else {
        Ok(Connectivity::Partition(
            inside.into_iter().map(|i| vertices[i]).collect(),
            outside.into_iter().map(|i| vertices[i]).collect(),
        ))
    }
}

/// Simulation-universality class of a Hamiltonian.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Verdict {
    /// Some bipartition is crossed by no coupling term.
    NonEntangling { part: Vec<usize>, rest: Vec<usize> },
    /// All qubits, every term couples an odd number of them.
    OddQubitOnly,
    /// All qubits with at least one even term; universal, no program emitted.
    UniversalByEvenTerm,
    /// Entangling with at least one non-qubit; a certificate can be built.
    UniversalConstructive,
}

impl Verdict {
    pub fn is_universal(&self) -> bool {
        matches!(
            self,
            Verdict::UniversalByEvenTerm | Verdict::UniversalConstructive
        )
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let set = |s: &[usize]| {
            let items: Vec<String> = s.iter().map(usize::to_string).collect();
            format!("{{{}}}", items.join(","))
        };
        match self {
            Verdict::NonEntangling { part, rest } => {
                write!(f, "NonEntangling {}|{}", set(part), set(rest))
            }
            Verdict::OddQubitOnly => f.write_str("OddQubitOnly"),
            Verdict::UniversalByEvenTerm => f.write_str("UniversalByEvenTerm"),
            Verdict::UniversalConstructive => f.write_str("UniversalConstructive"),
        }
    }
}

pub fn classify(e: &Expansion) -> Result<Verdict> {
    if e.is_empty() {
        return Err(Error::EmptyExpansion);
    }
    let everyone: Vec<usize> = (0..e.system.len()).collect();
    if let Connectivity::Partition(part, rest) = is_entangling(e, &everyone)? {
        return Ok(Verdict::NonEntangling { part, rest });
    }
    if !e.system.all_qubits() {
        return Ok(Verdict::UniversalConstructive);
    }
    if e.terms.keys().all(|t| t.weight() % 2 == 1) {
        Ok(Verdict::OddQubitOnly)
    } else {
        Ok(Verdict::UniversalByEvenTerm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{commutator, identity, kron, max_abs, I};
    use crate::random::{random_expansion, random_hermitian, seeded};
    use GellMannLabel::{W, X, Y};

    fn sys(dims: &[usize]) -> QuditSystem {
        QuditSystem::new(dims.to_vec()).unwrap()
    }

    fn pauli_z() -> Operator {
        Operator::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(-1.0, 0.0),
        ]))
    }

    #[test]
    fn zz_expands_to_single_term() {
        let s = sys(&[2, 2]);
        let zz = kron(&pauli_z(), &pauli_z());
        let e = expand(&zz, &s).unwrap();
        assert_eq!(e.len(), 1);
        let t = CouplingTerm::parse("0:W:2,1:W:2", &s).unwrap();
        assert!((e.coefficient(&t).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(e.trace_offset, 0.0);
    }

    #[test]
    fn identity_expands_to_offset() {
        let s = sys(&[2, 2]);
        let e = expand(&identity(4), &s).unwrap();
        assert!(e.is_empty());
        assert!((e.trace_offset - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reconstruct_examples() {
        let s = sys(&[2, 2]);
        let empty = Expansion::from_terms(s.clone(), BTreeMap::new(), 0.0);
        assert_eq!(reconstruct(&empty), zeros(4));
        let t = CouplingTerm::parse("0:X:1:2", &s).unwrap();
        let e = Expansion::single(s.clone(), t, 1.0);
        let x = gellmann_matrix(2, X(1, 2)).unwrap();
        assert!(max_abs(&(reconstruct(&e) - kron(&x, &identity(2)))) < 1e-15);
    }

    #[test]
    fn round_trip_random_hermitians() {
        let mut rng = seeded(31);
        for dims in [vec![2, 2], vec![3, 2], vec![2, 2, 2], vec![4, 3]] {
            let s = sys(&dims);
            for _ in 0..50 {
                let h = random_hermitian(s.total_dim(), &mut rng);
                let e = expand(&h, &s).unwrap();
                assert!(max_abs(&(reconstruct(&e) - &h)) < 1e-11);
            }
        }
    }

    #[test]
    fn expansion_is_fixed_point_of_round_trip() {
        let mut rng = seeded(32);
        let s = sys(&[3, 2]);
        for _ in 0..10 {
            let e = random_expansion(&s, 6, &mut rng);
            let again = expand(&reconstruct(&e), &s).unwrap();
            assert_eq!(again.terms.len(), e.terms.len());
            for (t, h) in &e.terms {
                assert!((again.coefficient(t).unwrap() - h).abs() < 1e-12);
            }
            assert!((again.trace_offset - e.trace_offset).abs() < 1e-12);
        }
    }

    #[test]
    fn coefficients_are_real_for_hermitian_input() {
        let mut rng = seeded(33);
        let s = sys(&[3, 2]);
        let h = random_hermitian(6, &mut rng);
        for t in all_terms(&s) {
            let raw: Complex64 = t
                .sparse_entries(&s)
                .into_iter()
                .map(|(r, c, v)| v * h[(c, r)])
                .sum();
            assert!(raw.im.abs() < 1e-12);
        }
    }

    #[test]
    fn expand_rejects_bad_input() {
        let s = sys(&[2, 2]);
        assert!(matches!(
            expand(&identity(3), &s),
            Err(Error::DimensionMismatch { .. })
        ));
        let mut m = identity(4);
        m[(0, 3)] = Complex64::new(1.0, 0.0);
        assert!(matches!(expand(&m, &s), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn term_validation() {
        let s = sys(&[2, 3]);
        assert!(CouplingTerm::parse("0:W:3", &s).is_err());
        assert!(CouplingTerm::parse("1:W:3", &s).is_ok());
        assert!(CouplingTerm::parse("2:W:2", &s).is_err());
        assert!(CouplingTerm::parse("", &s).is_err());
        assert!(CouplingTerm::parse("0:W:2,0:X:1:2", &s).is_err());
        assert!(QuditSystem::new(vec![2, 1]).is_err());
        assert!(QuditSystem::new(vec![]).is_err());
    }

    fn expansion_with_supports(dims: &[usize], supports: &[&[usize]]) -> Expansion {
        let s = sys(dims);
        let terms = supports
            .iter()
            .map(|sup| {
                let t = CouplingTerm::from_pairs(sup.iter().map(|&q| (q, W(2))), &s).unwrap();
                (t, 1.0)
            })
            .collect();
        Expansion::from_terms(s, terms, 0.0)
    }

    #[test]
    fn connectivity_examples() {
        let e = expansion_with_supports(&[2, 2, 2], &[&[0, 1]]);
        assert_eq!(
            is_entangling(&e, &[0, 1, 2]).unwrap(),
            Connectivity::Partition(vec![0, 1], vec![2])
        );
        let e = expansion_with_supports(&[2, 2, 2], &[&[0, 1], &[1, 2]]);
        assert_eq!(
            is_entangling(&e, &[0, 1, 2]).unwrap(),
            Connectivity::Connected
        );
        let e = expansion_with_supports(&[2, 2, 2, 2], &[&[0, 1], &[2, 3]]);
        assert_eq!(
            is_entangling(&e, &[0, 1, 2, 3]).unwrap(),
            Connectivity::Partition(vec![0, 1], vec![2, 3])
        );
        assert!(matches!(is_entangling(&e, &[]), Err(Error::EmptySubset)));
    }

    #[test]
    fn subset_connectivity_uses_restricted_hyperedges() {
        let e = expansion_with_supports(&[2, 2, 2], &[&[0, 1, 2]]);
        assert_eq!(is_entangling(&e, &[0, 2]).unwrap(), Connectivity::Connected);
    }

    #[test]
    fn classification_examples() {
        let odd = expansion_with_supports(&[2, 2, 2], &[&[0, 1, 2]]);
        assert_eq!(classify(&odd).unwrap(), Verdict::OddQubitOnly);
        let s = sys(&[2, 2]);
        let xx = Expansion::single(
            s.clone(),
            CouplingTerm::parse("0:X:1:2,1:X:1:2", &s).unwrap(),
            1.0,
        );
        assert_eq!(classify(&xx).unwrap(), Verdict::UniversalByEvenTerm);
        let mixed = expansion_with_supports(&[3, 2], &[&[0, 1]]);
        assert_eq!(classify(&mixed).unwrap(), Verdict::UniversalConstructive);
        let local = expansion_with_supports(&[2, 2], &[&[0]]);
        let v = classify(&local).unwrap();
        assert_eq!(v.to_string(), "NonEntangling {0}|{1}");
        let empty = Expansion::from_terms(s, BTreeMap::new(), 0.0);
        assert!(matches!(classify(&empty), Err(Error::EmptyExpansion)));
    }

    /// Odd qubit Hamiltonians stay odd under commutation: the closure of a
    /// three-qubit coupling with single-qubit terms never produces a
    /// two-qubit coupling.
    #[test]
    fn odd_closure_contains_no_even_coupling() {
        let s = sys(&[2, 2, 2]);
        let mut generators: Vec<Operator> =
            vec![
                CouplingTerm::from_pairs([(0, X(1, 2)), (1, X(1, 2)), (2, X(1, 2))], &s)
                    .unwrap()
                    .operator(&s),
            ];
        for q in 0..3 {
            for l in [W(2), X(1, 2), Y(1, 2)] {
                generators.push(CouplingTerm::from_pairs([(q, l)], &s).unwrap().operator(&s));
            }
        }
        let mut layer = generators.clone();
        for _ in 0..2 {
            let mut next = Vec::new();
            for a in &layer {
                for b in &generators {
                    let c = commutator(a, b) * I;
                    if max_abs(&c) > 1e-9 {
                        next.push(c);
                    }
                }
            }
            for op in &next {
                let e = expand(op, &s).unwrap();
                assert!(e.terms.keys().all(|t| t.weight() % 2 == 1));
            }
            layer = next;
        }
    }
}
