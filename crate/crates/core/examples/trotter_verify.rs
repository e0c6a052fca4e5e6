//! Lowers two small programs to product formulas and compares them with
//! exact evolution under their effective Hamiltonians. A positive sum
//! converges at first order; a commutator converges more slowly.

use qudit_sim::linalg::{gellmann_matrix, GellMannLabel};
use qudit_sim::program::{verify, SimulationProgram, DEFAULT_BRANCH_CAP};
use qudit_sim::random::{random_hermitian, seeded};
use qudit_sim::QuditSystem;

fn main() -> qudit_sim::Result<()> {
    let system = QuditSystem::new(vec![3, 2])?;
    let mut rng = seeded(2);
    let h = random_hermitian(6, &mut rng);
    let field = random_hermitian(3, &mut rng);

    let sum = SimulationProgram::sum(vec![
        (1.0, SimulationProgram::source()),
        (0.5, SimulationProgram::local(0, field)?),
    ])?;
    let x = gellmann_matrix(3, GellMannLabel::X(1, 2))?;
    let comm =
        SimulationProgram::commutator(SimulationProgram::local(0, x)?, SimulationProgram::source());

    for (name, p) in [("sum", &sum), ("commutator", &comm)] {
        let report = verify(
            p,
            &h,
            &system,
            0.5,
            &[16, 32, 64, 128, 256],
            DEFAULT_BRANCH_CAP,
        )?;
        println!("{name}:");
        for (steps, err) in &report.trotter_errors {
            println!("  {steps:>4} steps  error {err:.3e}");
        }
        if let Some(order) = report.order_estimate {
            println!("  fitted order {order:.2}");
        }
    }
    Ok(())
}
