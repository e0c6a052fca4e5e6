//! Heisenberg-Weyl twirls: the full group sends any operator to a multiple
//! of the identity, and the non-identity elements negate traceless ones.

use qudit_sim::linalg::{heisenberg_weyl, identity, max_abs, Operator};
use qudit_sim::random::{random_matrix, random_traceless_hermitian, seeded};

fn main() -> qudit_sim::Result<()> {
    let mut rng = seeded(3);
    for d in 2..=5 {
        let group = heisenberg_weyl(d)?;
        let j = random_matrix(d, &mut rng);
        let full = group
            .iter()
            .fold(Operator::zeros(d, d), |acc, u| acc + u * &j * u.adjoint());
        let expected = identity(d) * (j.trace() * d as f64);

        let t = random_traceless_hermitian(d, &mut rng);
        let partial = group
            .iter()
            .skip(1)
            .fold(Operator::zeros(d, d), |acc, u| acc + u * &t * u.adjoint());
        println!(
            "d = {d}: |sum U J U^+ - d tr(J) I| = {:.1e}   |sum' U T U^+ + T| = {:.1e}",
            max_abs(&(full - expected)),
            max_abs(&(partial + &t))
        );
    }
    Ok(())
}
