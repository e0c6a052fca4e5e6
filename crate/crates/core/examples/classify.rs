use qudit_sim::{classify, CouplingTerm, Expansion, QuditSystem};

fn build(dims: &[usize], terms: &[&str]) -> qudit_sim::Result<Expansion> {
    let system = QuditSystem::new(dims.to_vec())?;
    let terms = terms
        .iter()
        .map(|spec| Ok((CouplingTerm::parse(spec, &system)?, 1.0)))
        .collect::<qudit_sim::Result<_>>()?;
    Ok(Expansion::from_terms(system, terms, 0.0))
}

fn main() -> qudit_sim::Result<()> {
    let cases: [(&[usize], &[&str]); 5] = [
        (&[2, 2, 2], &["0:X:1:2,1:X:1:2,2:X:1:2", "1:W:2"]),
        (&[2, 2, 2], &["0:X:1:2,1:X:1:2", "1:W:2,2:W:2"]),
        (&[3, 2], &["0:W:2,1:X:1:2"]),
        (&[2, 2], &["0:W:2"]),
        (&[3, 3, 2], &["0:X:1:3,1:Y:2:3", "2:W:2"]),
    ];
    for (dims, terms) in cases {
        let verdict = classify(&build(dims, terms)?)?;
        println!(
            "{dims:?} {terms:?}\n  -> {verdict} (universal: {})",
            verdict.is_universal()
        );
    }
    Ok(())
}
