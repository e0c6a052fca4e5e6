//! Expands a random two-qutrit Hamiltonian over Gell-Mann products and
//! rebuilds it from the coefficients.

use qudit_sim::linalg::{gellmann_basis, hs_inner, max_abs};
use qudit_sim::random::{random_hermitian, seeded};
use qudit_sim::{expand, reconstruct, QuditSystem};

fn main() -> qudit_sim::Result<()> {
    for (label, g) in gellmann_basis(3)? {
        println!("{label:>7}  tr(G^2) = {:.3}", hs_inner(&g, &g).re);
    }

    let system = QuditSystem::new(vec![3, 3])?;
    let h = random_hermitian(system.total_dim(), &mut seeded(7));
    let e = expand(&h, &system)?;
    println!("\n{} terms, trace offset {:+.4}", e.len(), e.trace_offset);
    for (term, coeff) in e.terms.iter().take(6) {
        println!("  {coeff:+.4}  {term}");
    }
    println!("  ...");
    println!(
        "reconstruction error {:.2e}",
        max_abs(&(reconstruct(&e) - &h))
    );
    Ok(())
}
