//! Command-line front end.
//!
//! Every command prints a JSON report on stdout. Exit codes: 0 on success
//! or a universal verdict, 1 on a negative verdict or failed verification,
//! 2 on invalid input.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::isolation::isolate_term;
use crate::linalg::{frobenius_norm, hs_inner, max_abs};
use crate::model::{
    classify, expand_with_eps, project, reconstruct, CouplingTerm, Expansion, QuditSystem, EPS_ZERO,
};
use crate::program::{effective_hamiltonian, verify, DEFAULT_BRANCH_CAP};
use crate::serial::{CertificateFile, EdgeFile, HamiltonianFile, LoadedHamiltonian, ProgramFile};
use crate::universality::{connect_all, reduce_to_two_body, EDGE_TOLERANCE};

#[derive(Debug, Parser)]
#[command(
    name = "qudit-sim",
    version,
    about = "Universality analysis and simulation programs for qudit Hamiltonians"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Hamiltonian file (JSON with `dims` and `terms` or `matrix`).
    #[arg(short, long)]
    pub input: PathBuf,
    /// Where to write the command's payload file.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Relative threshold below which coefficients count as zero.
    #[arg(long, default_value_t = EPS_ZERO)]
    pub eps: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Expand a Hamiltonian over Gell-Mann products.
    Expand(Common),
    /// Classify the Hamiltonian's universality class.
    Classify(Common),
    /// Compile a program isolating one coupling term.
    Isolate {
        #[command(flatten)]
        common: Common,
        /// Term spec such as `0:X:1:2,1:W:2`.
        #[arg(long)]
        term: String,
    },
    /// Reduce a coupling term to a star of two-body couplings.
    Reduce {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        term: String,
        /// Centre of the star; defaults to the lowest non-qubit in the support.
        #[arg(long)]
        anchor: Option<usize>,
    },
    /// Build a verified spanning certificate of two-body couplings.
    Connect(Common),
    /// Compare product-formula compilations of a program with exact evolution.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Program file written by `isolate` or by hand.
        #[arg(short, long)]
        program: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        time: f64,
        /// Comma-separated step counts.
        #[arg(long, value_delimiter = ',', default_values_t = vec![64usize, 128, 256])]
        steps: Vec<usize>,
        #[arg(long, default_value_t = DEFAULT_BRANCH_CAP)]
        branch_cap: u128,
    },
    /// Run the full pipeline on a built-in three-qudit example.
    Demo {
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

/// Outcome of a command: the stdout report and the exit code.
struct Outcome {
    report: Value,
    code: i32,
}

impl Outcome {
    fn ok(report: Value) -> Self {
        Outcome { report, code: 0 }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NotConstructive(_)
        | Error::NotEntangling(_)
        | Error::Verification(_)
        | Error::BranchCapExceeded { .. } => 1,
        _ => 2,
    }
}

fn read_hamiltonian(path: &Path) -> Result<LoadedHamiltonian> {
    let text = std::fs::read_to_string(path)?;
    HamiltonianFile::parse(&text)?.load()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn expansion_report(e: &Expansion) -> Value {
    serde_json::to_value(HamiltonianFile::from_expansion(e)).expect("serializable")
}

fn parse_term(spec: &str, system: &QuditSystem) -> Result<CouplingTerm> {
    CouplingTerm::parse(spec, system)
}

/// Looks the term up in the thresholded expansion, distinguishing an absent
/// term from one removed by the threshold.
fn require_term(loaded: &LoadedHamiltonian, e: &Expansion, term: &CouplingTerm) -> Result<()> {
    if e.coefficient(term).is_some() {
        return Ok(());
    }
    match loaded.raw.coefficient(term) {
        Some(h) if h != 0.0 => Err(Error::TermBelowThreshold {
            term: term.to_string(),
            magnitude: h.abs(),
            threshold: loaded
                .raw
                .zero_cutoff(EPS_ZERO)
                .max(e.zero_cutoff(EPS_ZERO)),
        }),
        _ => Err(Error::TermNotFound(term.to_string())),
    }
}

fn cmd_expand(c: &Common) -> Result<Outcome> {
    let loaded = read_hamiltonian(&c.input)?;
    let e = loaded.expansion(c.eps);
    let mut report = json!({ "command": "expand" });
    merge(&mut report, expansion_report(&e));
    if let Some(path) = &c.output {
        write_json(path, &HamiltonianFile::from_expansion(&e))?;
    }
    Ok(Outcome::ok(report))
}

fn merge(into: &mut Value, from: Value) {
    if let (Value::Object(a), Value::Object(b)) = (into, from) {
        a.extend(b);
    }
}

fn cmd_classify(c: &Common) -> Result<Outcome> {
    let e = read_hamiltonian(&c.input)?.expansion(c.eps);
    let verdict = classify(&e)?;
    let code = if verdict.is_universal() { 0 } else { 1 };
    let report = json!({
        "command": "classify",
        "dims": e.system.dims(),
        "verdict": verdict,
        "summary": verdict.to_string(),
    });
    if let Some(path) = &c.output {
        write_json(path, &report)?;
    }
    Ok(Outcome { report, code })
}

fn cmd_isolate(c: &Common, spec: &str) -> Result<Outcome> {
    let loaded = read_hamiltonian(&c.input)?;
    let e = loaded.expansion(c.eps);
    let term = parse_term(spec, &e.system)?;
    require_term(&loaded, &e, &term)?;
    let iso = isolate_term(&e, &term)?;
    let eff = effective_hamiltonian(&iso.program, &reconstruct(&e), &e.system)?;
    let target = term.operator(&e.system);
    let cosine = hs_inner(&target, &eff).re / (frobenius_norm(&eff) * frobenius_norm(&target));
    let measured = project(&eff, &term, &e.system);
    let expected = &target * Complex64::new(iso.scale, 0.0);
    let residual = frobenius_norm(&(&eff - &expected)) / frobenius_norm(&expected);
    if let Some(path) = &c.output {
        write_json(path, &ProgramFile::from_program(&iso.program, &e.system))?;
    }
    let passed = (1.0 - cosine).abs() < EDGE_TOLERANCE && measured > 0.0;
    Ok(Outcome {
        code: if passed { 0 } else { 1 },
        report: json!({
            "command": "isolate",
            "dims": e.system.dims(),
            "term": term,
            "coefficient": e.coefficient(&term),
            "scale": iso.scale,
            "measured_scale": measured,
            "cosine_deviation": (1.0 - cosine).abs(),
            "relative_residual": residual,
            "stages": iso.stages,
            "node_count": iso.program.node_count(),
            "commutator_count": iso.program.commutator_count(),
            "branch_count": iso.program.branch_count().to_string(),
        }),
    })
}

fn cmd_reduce(c: &Common, spec: &str, anchor: Option<usize>) -> Result<Outcome> {
    let loaded = read_hamiltonian(&c.input)?;
    let e = loaded.expansion(c.eps);
    let term = parse_term(spec, &e.system)?;
    require_term(&loaded, &e, &term)?;
    let anchor = match anchor {
        Some(a) => a,
        None => term
            .support()
            .into_iter()
            .find(|&q| !e.system.is_qubit(q))
            .ok_or_else(|| Error::Precondition(format!("{term} acts on qubits only")))?,
    };
    let edges = reduce_to_two_body(&e, &term, anchor)?;
    let h = reconstruct(&e);
    let mut files = Vec::with_capacity(edges.len());
    for edge in &edges {
        let (scale, residual) =
            crate::universality::verify_coupling(&edge.coupling, &h, &e.system)?;
        files.push(EdgeFile {
            i: edge.center,
            j: edge.other,
            term: edge.coupling.term.to_string(),
            scale,
            residual: Some(residual),
            program: ProgramFile::from_program(&edge.coupling.program, &e.system),
        });
    }
    let summary: Vec<Value> = files
        .iter()
        .map(|f| json!({ "i": f.i, "j": f.j, "term": f.term, "scale": f.scale, "residual": f.residual }))
        .collect();
    if let Some(path) = &c.output {
        write_json(
            path,
            &json!({ "dims": e.system.dims(), "anchor": anchor, "edges": files }),
        )?;
    }
    Ok(Outcome::ok(json!({
        "command": "reduce",
        "dims": e.system.dims(),
        "term": term,
        "anchor": anchor,
        "edges": summary,
    })))
}

fn certificate_report(e: &Expansion, output: Option<&Path>) -> Result<Value> {
    let cert = connect_all(e)?;
    let file = CertificateFile::from_certificate(&cert, &e.system);
    if let Some(path) = output {
        write_json(path, &file)?;
    }
    Ok(json!({
        "dims": e.system.dims(),
        "verdict": cert.verdict,
        "anchor": cert.anchor,
        "iterations": cert.iterations,
        "spanning": cert.is_spanning(e.system.len()),
        "qubits_attached": cert.qubits_attached(&e.system),
        "edges": cert.edges,
    }))
}

fn cmd_connect(c: &Common) -> Result<Outcome> {
    let e = read_hamiltonian(&c.input)?.expansion(c.eps);
    let mut report = json!({ "command": "connect" });
    merge(&mut report, certificate_report(&e, c.output.as_deref())?);
    Ok(Outcome::ok(report))
}

fn cmd_verify(
    c: &Common,
    program: &Path,
    time: f64,
    steps: &[usize],
    cap: u128,
) -> Result<Outcome> {
    let e = read_hamiltonian(&c.input)?.expansion(c.eps);
    let text = std::fs::read_to_string(program)?;
    let file: ProgramFile =
        serde_json::from_str(&text).map_err(|err| Error::Parse(err.to_string()))?;
    let (p, system) = file.to_program()?;
    if system != e.system {
        return Err(Error::Parse(format!(
            "program dims {:?} differ from Hamiltonian dims {:?}",
            system.dims(),
            e.system.dims()
        )));
    }
    let h = reconstruct(&e);
    let eff = effective_hamiltonian(&p, &h, &system)?;
    let eff_expansion = expand_with_eps(&crate::linalg::hermitian_part(&eff), &system, c.eps)?;
    let mut report = json!({
        "command": "verify",
        "dims": system.dims(),
        "time": time,
        "branch_count": p.branch_count().to_string(),
        "effective_hamiltonian": expansion_report(&eff_expansion),
        "hermiticity_residual": max_abs(&(&eff - eff.adjoint())),
    });
    let result = verify(&p, &h, &system, time, steps, cap);
    let v = match result {
        Ok(v) => v,
        Err(err @ Error::BranchCapExceeded { .. }) => {
            report["error"] = json!(err.to_string());
            return Ok(Outcome { report, code: 1 });
        }
        Err(err) => return Err(err),
    };
    let mut sorted = v.trotter_errors.clone();
    sorted.sort_by_key(|&(s, _)| s);
    let converging = sorted.windows(2).all(|w| w[1].1 < w[0].1 || w[1].1 < 1e-13);
    let ratios: Vec<Value> = sorted
        .windows(2)
        .map(|w| json!({ "steps": [w[0].0, w[1].0], "ratio": w[0].1 / w[1].1 }))
        .collect();
    report["trotter_errors"] = json!(v
        .trotter_errors
        .iter()
        .map(|&(s, err)| json!({ "steps": s, "error": err }))
        .collect::<Vec<_>>());
    report["error_ratios"] = json!(ratios);
    report["order_estimate"] = json!(v.order_estimate);
    report["converging"] = json!(converging);
    Ok(Outcome {
        report,
        code: if converging { 0 } else { 1 },
    })
}

/// Qutrit coupled to a qubit, plus a qubit-qubit coupling and a local field.
pub fn demo_hamiltonian() -> Expansion {
    let system = QuditSystem::new(vec![3, 2, 2]).expect("valid dims");
    let terms = [
        ("0:X:1:2,1:X:1:2", 1.0),
        ("1:W:2,2:W:2", 0.5),
        ("0:W:3", 0.3),
    ]
    .into_iter()
    .map(|(spec, h)| (CouplingTerm::parse(spec, &system).expect("valid term"), h))
    .collect();
    Expansion::from_terms(system, terms, 0.0)
}

fn cmd_demo(output: Option<&Path>) -> Result<Outcome> {
    let e = demo_hamiltonian();
    let verdict = classify(&e)?;
    let target = CouplingTerm::parse("1:W:2,2:W:2", &e.system)?;
    let iso = isolate_term(&e, &target)?;
    let eff = effective_hamiltonian(&iso.program, &reconstruct(&e), &e.system)?;
    let measured = project(&eff, &target, &e.system);
    Ok(Outcome::ok(json!({
        "command": "demo",
        "hamiltonian": expansion_report(&e),
        "verdict": verdict,
        "isolation": {
            "term": target,
            "scale": iso.scale,
            "measured_scale": measured,
            "stages": iso.stages,
        },
        "certificate": certificate_report(&e, output)?,
    })))
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Expand(c) => cmd_expand(c),
        Command::Classify(c) => cmd_classify(c),
        Command::Isolate { common, term } => cmd_isolate(common, term),
        Command::Reduce {
            common,
            term,
            anchor,
        } => cmd_reduce(common, term, *anchor),
        Command::Connect(c) => cmd_connect(c),
        Command::Verify {
            common,
            program,
            time,
            steps,
            branch_cap,
        } => cmd_verify(common, program, *time, steps, *branch_cap),
        Command::Demo { output } => cmd_demo(output.as_deref()),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Reports go to `out`, diagnostics and timing to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    let start = Instant::now();
    let result = dispatch(&cli);
    let elapsed = start.elapsed().as_secs_f64();
    let code = match result {
        Ok(outcome) => {
            let text = serde_json::to_string_pretty(&outcome.report).expect("serializable report");
            let _ = writeln!(out, "{text}");
            if let Some(msg) = outcome.report.get("error").and_then(Value::as_str) {
                let _ = writeln!(err, "error: {msg}");
            }
            outcome.code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    };
    let _ = writeln!(err, "wall_time_s: {elapsed:.3}");
    code
}
