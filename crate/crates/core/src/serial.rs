//! JSON file formats for Hamiltonian inputs and for compiled programs.
//!
//! Programs are stored as a node table in post-order so that shared
//! subprograms are written once; children refer to earlier node ids.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    check_hermitian_tol, hermitian_part, is_exact_identity, LocalUnitary, Operator,
};
use crate::model::{expand_with_eps, CouplingTerm, Expansion, QuditSystem};
use crate::program::{ProgramNode, SimulationProgram};
use crate::universality::UniversalityCertificate;

/// Tolerance on `|M - M^dagger|` for matrix inputs.
pub const MATRIX_HERMITIAN_TOL: f64 = 1e-10;

pub type ComplexEntry = [f64; 2];
pub type MatrixEntries = Vec<Vec<ComplexEntry>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermEntry {
    pub coeff: f64,
    pub factors: BTreeMap<usize, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianFile {
    pub dims: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<TermEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<MatrixEntries>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_offset: Option<f64>,
}

pub fn matrix_to_entries(m: &Operator) -> MatrixEntries {
    (0..m.nrows())
        .map(|r| {
            (0..m.ncols())
                .map(|c| [m[(r, c)].re, m[(r, c)].im])
                .collect()
        })
        .collect()
}

pub fn entries_to_matrix(rows: &MatrixEntries) -> Result<Operator> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse("matrix must be square and non-empty".into()));
    }
    Ok(Operator::from_fn(n, n, |r, c| {
        Complex64::new(rows[r][c][0], rows[r][c][1])
    }))
}

fn term_from_entry(entry: &TermEntry, system: &QuditSystem) -> Result<CouplingTerm> {
    let factors = entry
        .factors
        .iter()
        .map(|(&q, label)| Ok((q, label.parse()?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    CouplingTerm::new(factors, system)
}

fn entry_from_term(term: &CouplingTerm, coeff: f64) -> TermEntry {
    TermEntry {
        coeff,
        factors: term
            .factors()
            .iter()
            .map(|(&q, l)| (q, l.to_string()))
            .collect(),
    }
}

/// A parsed Hamiltonian input before thresholding.
#[derive(Debug, Clone)]
pub struct LoadedHamiltonian {
    pub system: QuditSystem,
    /// Terms as written (or projected from the matrix), not thresholded.
    pub raw: Expansion,
}

impl LoadedHamiltonian {
    pub fn expansion(&self, eps: f64) -> Expansion {
        let mut e = self.raw.clone();
        e.threshold(eps);
        e
    }
}

impl HamiltonianFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(&self) -> Result<LoadedHamiltonian> {
        let system = QuditSystem::new(self.dims.clone())?;
        let raw = match (&self.terms, &self.matrix) {
            (Some(_), Some(_)) => {
                return Err(Error::Parse("give either terms or matrix, not both".into()))
            }
            (None, None) => return Err(Error::Parse("missing terms or matrix".into())),
            (Some(entries), None) => {
                let mut terms = BTreeMap::new();
                for entry in entries {
                    if !entry.coeff.is_finite() {
                        return Err(Error::Parse(format!(
                            "non-finite coefficient {}",
                            entry.coeff
                        )));
                    }
                    let term = term_from_entry(entry, &system)?;
                    if terms.insert(term.clone(), entry.coeff).is_some() {
                        return Err(Error::Parse(format!("term {term} listed twice")));
                    }
                }
                Expansion {
                    system: system.clone(),
                    terms,
                    trace_offset: self.trace_offset.unwrap_or(0.0),
                }
            }
            (None, Some(rows)) => {
                let m = entries_to_matrix(rows)?;
                if m.nrows() != system.total_dim() {
                    return Err(Error::DimensionMismatch {
                        expected: system.total_dim(),
                        found: m.nrows(),
                    });
                }
                check_hermitian_tol(&m, MATRIX_HERMITIAN_TOL)?;
                let mut e = expand_with_eps(&hermitian_part(&m), &system, 0.0)?;
                e.trace_offset += self.trace_offset.unwrap_or(0.0);
                e
            }
        };
        Ok(LoadedHamiltonian { system, raw })
    }

    /// Terms form of an expansion, readable back by [`HamiltonianFile::load`].
    pub fn from_expansion(e: &Expansion) -> Self {
        HamiltonianFile {
            dims: e.system.dims().to_vec(),
            terms: Some(
                e.terms
                    .iter()
                    .map(|(t, &h)| entry_from_term(t, h))
                    .collect(),
            ),
            matrix: None,
            trace_offset: Some(e.trace_offset),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum NodeEntry {
    Native {
        weight: f64,
    },
    Local {
        qudit: usize,
        operator: MatrixEntries,
    },
    /// One factor per qudit; `null` marks an identity factor.
    Conjugate {
        factors: Vec<Option<MatrixEntries>>,
        child: usize,
    },
    Sum {
        terms: Vec<(f64, usize)>,
    },
    Commutator {
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramFile {
    pub dims: Vec<usize>,
    pub nodes: Vec<NodeEntry>,
    pub root: usize,
}

impl ProgramFile {
    pub fn from_program(p: &SimulationProgram, system: &QuditSystem) -> Self {
        let order = p.post_order();
        let ids: HashMap<usize, usize> = order
            .iter()
            .enumerate()
            .map(|(i, n)| (n.key(), i))
            .collect();
        let nodes = order
            .iter()
            .map(|n| match n.node() {
                ProgramNode::Native { weight } => NodeEntry::Native { weight: *weight },
                ProgramNode::Local { qudit, operator } => NodeEntry::Local {
                    qudit: *qudit,
                    operator: matrix_to_entries(operator),
                },
                ProgramNode::Conjugate { unitary, child } => NodeEntry::Conjugate {
                    factors: unitary
                        .factors()
                        .iter()
                        .map(|f| (!is_exact_identity(f)).then(|| matrix_to_entries(f)))
                        .collect(),
                    child: ids[&child.key()],
                },
                ProgramNode::Sum { terms } => NodeEntry::Sum {
                    terms: terms.iter().map(|(w, c)| (*w, ids[&c.key()])).collect(),
                },
                ProgramNode::Commutator { left, right } => NodeEntry::Commutator {
                    left: ids[&left.key()],
                    right: ids[&right.key()],
                },
            })
            .collect();
        ProgramFile {
            dims: system.dims().to_vec(),
            nodes,
            root: order.len() - 1,
        }
    }

    pub fn to_program(&self) -> Result<(SimulationProgram, QuditSystem)> {
        let system = QuditSystem::new(self.dims.clone())?;
        let mut built: Vec<SimulationProgram> = Vec::with_capacity(self.nodes.len());
        for (id, entry) in self.nodes.iter().enumerate() {
            let child = |c: usize| -> Result<SimulationProgram> {
                built.get(c).cloned().ok_or_else(|| {
                    Error::Parse(format!(
                        "node {id} refers to node {c}, which is not defined before it"
                    ))
                })
            };
            let node = match entry {
                NodeEntry::Native { weight } => SimulationProgram::native(*weight)?,
                NodeEntry::Local { qudit, operator } => {
                    system.check_qudit(*qudit)?;
                    let op = entries_to_matrix(operator)?;
                    if op.nrows() != system.dims()[*qudit] {
                        return Err(Error::DimensionMismatch {
                            expected: system.dims()[*qudit],
                            found: op.nrows(),
                        });
                    }
                    SimulationProgram::local(*qudit, op)?
                }
                NodeEntry::Conjugate { factors, child: c } => {
                    if factors.len() != system.len() {
                        return Err(Error::DimensionMismatch {
                            expected: system.len(),
                            found: factors.len(),
                        });
                    }
                    let dense = factors
                        .iter()
                        .zip(system.dims())
                        .map(|(f, &d)| match f {
                            Some(rows) => entries_to_matrix(rows),
                            None => Ok(crate::linalg::identity(d)),
                        })
                        .collect::<Result<Vec<_>>>()?;
                    SimulationProgram::conjugate(
                        LocalUnitary::new(system.dims(), dense)?,
                        child(*c)?,
                    )
                }
                NodeEntry::Sum { terms } => SimulationProgram::sum(
                    terms
                        .iter()
                        .map(|&(w, c)| Ok((w, child(c)?)))
                        .collect::<Result<Vec<_>>>()?,
                )?,
                NodeEntry::Commutator { left, right } => {
                    SimulationProgram::commutator(child(*left)?, child(*right)?)
                }
            };
            built.push(node);
        }
        let root = built
            .get(self.root)
            .cloned()
            .ok_or_else(|| Error::Parse(format!("root {} is not a node", self.root)))?;
        Ok((root, system))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeFile {
    pub i: usize,
    pub j: usize,
    pub term: String,
    pub scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    pub program: ProgramFile,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateFile {
    pub dims: Vec<usize>,
    pub anchor: usize,
    pub verdict: crate::model::Verdict,
    pub iterations: usize,
    pub edges: Vec<EdgeFile>,
}

impl CertificateFile {
    pub fn from_certificate(c: &UniversalityCertificate, system: &QuditSystem) -> Self {
        CertificateFile {
            dims: system.dims().to_vec(),
            anchor: c.anchor,
            verdict: c.verdict.clone(),
            iterations: c.iterations,
            edges: c
                .edges
                .iter()
                .map(|e| EdgeFile {
                    i: e.i,
                    j: e.j,
                    term: e.term.to_string(),
                    scale: e.scale,
                    residual: Some(e.residual),
                    program: ProgramFile::from_program(&e.program, system),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isolation::isolate_term;
    use crate::linalg::max_abs;
    use crate::model::reconstruct;
    use crate::program::effective_hamiltonian;
    use crate::random::{random_expansion, seeded};

    #[test]
    fn terms_file_round_trip() {
        let mut rng = seeded(81);
        let s = QuditSystem::new(vec![3, 2]).unwrap();
        let e = random_expansion(&s, 5, &mut rng);
        let text = serde_json::to_string(&HamiltonianFile::from_expansion(&e)).unwrap();
        let back = HamiltonianFile::parse(&text)
            .unwrap()
            .load()
            .unwrap()
            .expansion(1e-12);
        assert_eq!(back, e);
    }

    #[test]
    fn matrix_file_expands() {
        let text = r#"{"dims":[2,2],"matrix":[
            [[1,0],[0,0],[0,0],[0,0]],
            [[0,0],[-1,0],[0,0],[0,0]],
            [[0,0],[0,0],[-1,0],[0,0]],
            [[0,0],[0,0],[0,0],[1,0]]]}"#;
        let e = HamiltonianFile::parse(text)
            .unwrap()
            .load()
            .unwrap()
            .expansion(1e-12);
        assert_eq!(e.len(), 1);
        let (t, h) = e.terms.iter().next().unwrap();
        assert_eq!(t.to_string(), "0:W:2,1:W:2");
        assert!((h - 2.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_inputs() {
        let non_hermitian = r#"{"dims":[2],"matrix":[[[0,0],[1,0]],[[0,0],[0,0]]]}"#;
        let err = HamiltonianFile::parse(non_hermitian)
            .unwrap()
            .load()
            .unwrap_err();
        assert!(matches!(err, Error::NotHermitian { .. }));
        let both = r#"{"dims":[2],"terms":[],"matrix":[[[0,0],[0,0]],[[0,0],[0,0]]]}"#;
        assert!(HamiltonianFile::parse(both).unwrap().load().is_err());
        let bad_label = r#"{"dims":[2],"terms":[{"coeff":1,"factors":{"0":"W:3"}}]}"#;
        assert!(HamiltonianFile::parse(bad_label).unwrap().load().is_err());
        assert!(HamiltonianFile::parse("{").is_err());
    }

    #[test]
    fn program_round_trip_preserves_semantics_and_sharing() {
        let mut rng = seeded(82);
        let s = QuditSystem::new(vec![3, 2]).unwrap();
        let mut e = random_expansion(&s, 4, &mut rng);
        let alpha = CouplingTerm::parse("0:X:1:2,1:W:2", &s).unwrap();
        e.terms.insert(alpha.clone(), 0.5);
        let iso = isolate_term(&e, &alpha).unwrap();
        let file = ProgramFile::from_program(&iso.program, &s);
        assert_eq!(file.nodes.len(), iso.program.node_count());
        let text = serde_json::to_string(&file).unwrap();
        let (back, system) = serde_json::from_str::<ProgramFile>(&text)
            .unwrap()
            .to_program()
            .unwrap();
        let h = reconstruct(&e);
        let a = effective_hamiltonian(&iso.program, &h, &s).unwrap();
        let b = effective_hamiltonian(&back, &h, &system).unwrap();
        assert!(max_abs(&(a - b)) < 1e-12);
        assert_eq!(back.node_count(), iso.program.node_count());
    }

    #[test]
    fn program_file_rejects_forward_references() {
        let file = ProgramFile {
            dims: vec![2],
            nodes: vec![
                NodeEntry::Commutator { left: 1, right: 1 },
                NodeEntry::Native { weight: 1.0 },
            ],
            root: 0,
        };
        assert!(file.to_program().is_err());
    }
}
