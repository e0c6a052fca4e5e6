//! Removes qudits from a three-body coupling one at a time, then reduces the
//! coupling to a star of verified two-body couplings.

use qudit_sim::universality::{drop_qudit, reduce_to_two_body, verify_coupling};
use qudit_sim::{reconstruct, CouplingTerm, Expansion, QuditSystem};

fn main() -> qudit_sim::Result<()> {
    let system = QuditSystem::new(vec![4, 3, 2])?;
    let alpha = CouplingTerm::parse("0:W:4,1:X:2:3,2:Y:1:2", &system)?;
    let e = Expansion::single(system.clone(), alpha.clone(), 0.6);
    let h = reconstruct(&e);

    let dropped = drop_qudit(&e, &alpha, 2)?;
    let (scale, residual) = verify_coupling(&dropped, &h, &system)?;
    println!(
        "drop qudit 2 from {alpha}: {} with scale {scale:.4}, residual {residual:.1e}",
        dropped.term
    );

    for edge in reduce_to_two_body(&e, &alpha, 0)? {
        let (scale, residual) = verify_coupling(&edge.coupling, &h, &system)?;
        println!(
            "edge ({}, {}): {} scale {scale:.4} residual {residual:.1e} ({} nodes)",
            edge.center,
            edge.other,
            edge.coupling.term,
            edge.coupling.program.node_count()
        );
    }
    Ok(())
}
