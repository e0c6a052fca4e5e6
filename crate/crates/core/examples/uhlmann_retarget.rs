//! Writes one traceless Hermitian operator as a positive mixture of unitary
//! conjugates of another, then uses the same construction to turn a
//! coupling `W_3 (x) X` into `X_13 (x) Y`.

use qudit_sim::linalg::max_abs;
use qudit_sim::majorization::{retarget_term, uhlmann_decompose};
use qudit_sim::program::effective_hamiltonian;
use qudit_sim::random::{random_traceless_hermitian, seeded};
use qudit_sim::{CouplingTerm, QuditSystem};

fn main() -> qudit_sim::Result<()> {
    let mut rng = seeded(11);
    let a = random_traceless_hermitian(4, &mut rng);
    let b = random_traceless_hermitian(4, &mut rng);
    let dec = uhlmann_decompose(&a, &b)?;
    println!(
        "A = sum c_n U_n B U_n^+ with {} unitaries (at most 16)",
        dec.pairs.len()
    );
    for (c, _) in &dec.pairs {
        println!("  c = {c:.6}");
    }
    println!("residual {:.2e}", max_abs(&(dec.apply(&b) - &a)));

    let system = QuditSystem::new(vec![3, 2])?;
    let source = CouplingTerm::parse("0:W:3,1:X:1:2", &system)?;
    let target = CouplingTerm::parse("0:X:1:3,1:Y:1:2", &system)?;
    let program = retarget_term(&source, 0.8, &target, 0.25, &system)?;
    let h = source.operator(&system) * num_complex::Complex64::new(0.8, 0.0);
    let eff = effective_hamiltonian(&program, &h, &system)?;
    let expected = target.operator(&system) * num_complex::Complex64::new(0.25, 0.0);
    println!(
        "\nretarget {source} -> {target}: {} nodes, residual {:.2e}",
        program.node_count(),
        max_abs(&(eff - expected))
    );
    Ok(())
}
