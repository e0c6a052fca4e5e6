//! Seeded generators for random operators and expansions.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{identity, GellMannLabel, Operator};
use crate::model::{CouplingTerm, Expansion, QuditSystem};

pub type TestRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn entry<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// Entries uniform in the unit square, no structure.
pub fn random_matrix<R: Rng>(d: usize, rng: &mut R) -> Operator {
    Operator::from_fn(d, d, |_, _| entry(rng))
}

pub fn random_hermitian<R: Rng>(d: usize, rng: &mut R) -> Operator {
    let m = random_matrix(d, rng);
    (&m + m.adjoint()).scale(0.5)
}

pub fn random_traceless_hermitian<R: Rng>(d: usize, rng: &mut R) -> Operator {
    let mut h = random_hermitian(d, rng);
    let shift = h.trace() / d as f64;
    h -= identity(d) * shift;
    h
}

/// A uniformly drawn non-empty coupling term on `system`.
pub fn random_term<R: Rng>(system: &QuditSystem, rng: &mut R) -> CouplingTerm {
    loop {
        let mut factors = BTreeMap::new();
        for (q, &d) in system.dims().iter().enumerate() {
            if rng.random_bool(0.5) {
                let labels = GellMannLabel::all(d);
                factors.insert(q, *labels.choose(rng).expect("d >= 2"));
            }
        }
        if let Ok(t) = CouplingTerm::new(factors, system) {
            return t;
        }
    }
}

/// A random coupling term on exactly the given support.
pub fn random_term_on<R: Rng>(
    system: &QuditSystem,
    support: &[usize],
    rng: &mut R,
) -> CouplingTerm {
    let factors = support
        .iter()
        .map(|&q| {
            let labels = GellMannLabel::all(system.dims()[q]);
            (q, *labels.choose(rng).expect("d >= 2"))
        })
        .collect();
    CouplingTerm::new(factors, system).expect("support within system")
}

/// Up to `n_terms` random terms with coefficients in `[-1, -0.2] ∪ [0.2, 1]`
/// and a random trace offset.
pub fn random_expansion<R: Rng>(system: &QuditSystem, n_terms: usize, rng: &mut R) -> Expansion {
    let mut terms = BTreeMap::new();
    for _ in 0..n_terms {
        terms.insert(random_term(system, rng), random_coefficient(rng));
    }
    let offset = rng.random_range(-1.0..1.0);
    Expansion::from_terms(system.clone(), terms, offset)
}

pub fn random_coefficient<R: Rng>(rng: &mut R) -> f64 {
    let magnitude = rng.random_range(0.2..1.0);
    if rng.random_bool(0.5) {
        magnitude
    } else {
        -magnitude
    }
}
