//! Serializes an isolation program to JSON and loads it back. Shared
//! subprograms are written once in the node table.

use qudit_sim::isolation::isolate_term;
use qudit_sim::linalg::max_abs;
use qudit_sim::program::effective_hamiltonian;
use qudit_sim::serial::ProgramFile;
use qudit_sim::{reconstruct, CouplingTerm, Expansion, QuditSystem};

fn main() -> qudit_sim::Result<()> {
    let system = QuditSystem::new(vec![3, 2])?;
    let alpha = CouplingTerm::parse("0:X:1:2,1:W:2", &system)?;
    let other = CouplingTerm::parse("0:W:3", &system)?;
    let e = Expansion::from_terms(
        system.clone(),
        [(alpha.clone(), 0.4), (other, 1.0)].into(),
        0.2,
    );
    let iso = isolate_term(&e, &alpha)?;

    let text = serde_json::to_string(&ProgramFile::from_program(&iso.program, &system))?;
    println!(
        "{} nodes, {} bytes of JSON",
        iso.program.node_count(),
        text.len()
    );
    let (loaded, _) = serde_json::from_str::<ProgramFile>(&text)?.to_program()?;
    let h = reconstruct(&e);
    let diff = effective_hamiltonian(&iso.program, &h, &system)?
        - effective_hamiltonian(&loaded, &h, &system)?;
    println!("effective Hamiltonians agree to {:.1e}", max_abs(&diff));
    Ok(())
}
