//! A qutrit coupled to a qubit, plus a coupling between two qubits. The
//! certificate connects all three qudits with verified two-body programs;
//! the qubit-qubit term is routed through an edge to the qutrit.

use qudit_sim::universality::connect_all;
use qudit_sim::{CouplingTerm, Expansion, QuditSystem};

fn main() -> qudit_sim::Result<()> {
    let system = QuditSystem::new(vec![3, 2, 2])?;
    let terms = [("0:X:1:2,1:X:1:2", 1.0), ("1:W:2,2:W:2", 0.5)]
        .into_iter()
        .map(|(spec, h)| Ok((CouplingTerm::parse(spec, &system)?, h)))
        .collect::<qudit_sim::Result<_>>()?;
    let e = Expansion::from_terms(system.clone(), terms, 0.0);

    let cert = connect_all(&e)?;
    println!(
        "verdict {}, anchor {}, {} iterations",
        cert.verdict, cert.anchor, cert.iterations
    );
    for edge in &cert.edges {
        println!(
            "  ({}, {})  {}  scale {:.3}  residual {:.1e}",
            edge.i, edge.j, edge.term, edge.scale, edge.residual
        );
    }
    println!(
        "spanning: {}, qubits attached to a non-qubit: {}",
        cert.is_spanning(3),
        cert.qubits_attached(&system)
    );
    Ok(())
}
