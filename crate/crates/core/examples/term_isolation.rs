use qudit_sim::isolation::isolate_term;
use qudit_sim::model::project;
use qudit_sim::program::effective_hamiltonian;
use qudit_sim::random::{random_expansion, seeded};
use qudit_sim::{reconstruct, CouplingTerm, QuditSystem};

fn main() -> qudit_sim::Result<()> {
    let system = QuditSystem::new(vec![3, 2, 2])?;
    let mut e = random_expansion(&system, 8, &mut seeded(5));
    let target = CouplingTerm::parse("0:Y:1:3,2:X:1:2", &system)?;
    e.terms.insert(target.clone(), -0.35);
    println!(
        "Hamiltonian with {} terms; isolating {target} (h = -0.35)",
        e.len()
    );

    let iso = isolate_term(&e, &target)?;
    for stage in &iso.stages {
        println!(
            "  stage {}: {} surviving terms, target scaled by {:.4}",
            stage.stage, stage.surviving_terms, stage.target_scale
        );
    }
    let eff = effective_hamiltonian(&iso.program, &reconstruct(&e), &system)?;
    println!("predicted scale {:.6}", iso.scale);
    println!("measured scale  {:.6}", project(&eff, &target, &system));
    println!(
        "program: {} distinct nodes, {} commutators, {} leaf evolutions per slice",
        iso.program.node_count(),
        iso.program.commutator_count(),
        iso.program.branch_count()
    );
    Ok(())
}
