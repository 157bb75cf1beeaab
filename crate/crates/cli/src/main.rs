//! `carleman`: closed-form solutions of polynomial recurrence systems.
//!
//! Exit codes: 0 success, 1 parse or usage error, 2 solver-stage error,
//! 3 verification failure.

use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use carleman_core::parser::{self, pretty_print};
use carleman_core::recurrence::{apply_affine, check_shift_admissible, PolySystem, TransformParams};
use carleman_core::scalar::parse_rational;
use carleman_core::solver::{
    self, eval_closed_form_history, eval_direct, prepare, transition, verify, ClosedFormSolution, ShiftSpec,
    SolveOptions, VerificationReport,
};
use carleman_core::{Error, Matrix, Mode, Monomial, Scalar, SolveError};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use num_rational::BigRational;
use serde_json::json;

#[derive(Parser, Debug)]
#[command(
    name = "carleman",
    version,
    about = "Closed-form solutions of polynomial recurrence systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the closed-form coefficient functions.
    Solve(Common),
    /// Print the truncated transition matrix of the transformed system.
    Matrix(Common),
    /// Check the closed form against symbolic iteration.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Verify this solution JSON instead of solving.
        #[arg(long)]
        solution: Option<PathBuf>,
    },
    /// Evaluate by direct iteration and by the closed form.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Step index i.
        #[arg(long)]
        step: usize,
        /// Initial history u_0, .., u_{n-1}, comma-separated (k values per step).
        #[arg(long, allow_hyphen_values = true)]
        initial: String,
    },
    /// Show fixed-point candidates, admissibility and the transformed system.
    Transform(Common),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Recurrence file, or `-` for stdin.
    input: String,
    /// Truncation order N.
    #[arg(long, env = "CARLEMAN_DEFAULT_ORDER", default_value_t = solver::DEFAULT_ORDER)]
    order: u32,
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    mode: ModeArg,
    /// `auto`, `none`, or comma-separated fixed-point coordinates.
    #[arg(long, default_value = "auto", allow_hyphen_values = true)]
    shift: String,
    /// Linear transform A in z = A z' + B, as JSON rows or a path to a JSON file.
    #[arg(long)]
    matrix_a: Option<String>,
    /// Largest step checked by `verify`.
    #[arg(long, default_value_t = 5)]
    max_power: u32,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Relative tolerance for float-mode verification.
    #[arg(long, default_value_t = 1e-8)]
    tolerance: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write output here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ModeArg {
    Exact,
    Float,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Text,
    Json,
}

/// A terminal outcome: exit code plus message for stderr.
struct Failure {
    code: u8,
    message: String,
    /// Output still printed on failure (e.g. a FAIL table).
    output: Option<String>,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
            output: None,
        }
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        Self {
            code: 2,
            message: e.to_string(),
            output: None,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let common = match &cli.command {
        Command::Solve(c) | Command::Matrix(c) | Command::Transform(c) => c,
        Command::Verify { common, .. } | Command::Eval { common, .. } => common,
    };
    let result = match common.mode {
        ModeArg::Exact => run::<BigRational>(&cli.command, common),
        ModeArg::Float => run::<Complex64>(&cli.command, common),
    };
    let (output, code) = match result {
        Ok(out) => (Some(out), 0),
        Err(f) => {
            eprintln!("error: {}", f.message);
            (f.output, f.code)
        }
    };
    if let Some(out) = output {
        if let Err(e) = emit(common, &out) {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    ExitCode::from(code)
}

fn emit(common: &Common, out: &str) -> std::io::Result<()> {
    match &common.output {
        Some(path) => std::fs::write(path, out),
        None => {
            print!("{out}");
            Ok(())
        }
    }
}

fn run<S: Scalar>(command: &Command, common: &Common) -> Result<String, Failure> {
    if common.order == 0 {
        return Err(Failure::usage("--order must be at least 1"));
    }
    if common.tolerance.is_nan() || common.tolerance <= 0.0 {
        return Err(Failure::usage("--tolerance must be positive"));
    }
    let source = read_input(&common.input)?;
    let system: PolySystem<S> = parser::parse_system(&source).map_err(|e| match e {
        Error::Parse(p) => Failure::usage(p.render(&source)),
        other => Failure::usage(other.to_string()),
    })?;
    let opts = options::<S>(common, &system)?;
    match command {
        Command::Solve(_) => cmd_solve(&system, &opts, common.format),
        Command::Matrix(_) => cmd_matrix(&system, &opts, common.format),
        Command::Verify { solution, .. } => cmd_verify(&system, &opts, solution.as_ref(), common.format),
        Command::Eval { step, initial, .. } => cmd_eval(&system, &opts, *step, initial, common.format),
        Command::Transform(_) => cmd_transform(&system, &opts, common.format),
    }
}

fn read_input(path: &str) -> Result<String, Failure> {
    if path == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Failure::usage(format!("reading stdin: {e}")))?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("reading {path}: {e}")))
    }
}

fn parse_scalar<S: Scalar>(text: &str) -> Result<S, Failure> {
    let text = text.trim();
    if let Ok(r) = parse_rational(text) {
        return Ok(S::from_rational(&r));
    }
    if S::MODE == Mode::Float {
        if let Ok(x) = text.parse::<f64>() {
            if x.is_finite() {
                if let Some(s) = S::from_complex(Complex64::new(x, 0.0)) {
                    return Ok(s);
                }
            }
        }
    }
    Err(Failure::usage(format!("malformed {} scalar `{text}`", S::MODE)))
}

fn parse_scalars<S: Scalar>(text: &str) -> Result<Vec<S>, Failure> {
    text.split(',').map(parse_scalar).collect()
}

fn options<S: Scalar>(common: &Common, system: &PolySystem<S>) -> Result<SolveOptions<S>, Failure> {
    let shift = match common.shift.trim() {
        "auto" => ShiftSpec::Auto,
        "none" => ShiftSpec::None,
        list => ShiftSpec::Explicit(parse_scalars(list)?),
    };
    let nk = system.k() * system.depth();
    if let ShiftSpec::Explicit(b) = &shift {
        if b.len() != nk {
            return Err(Failure::usage(format!("--shift needs {nk} values, got {}", b.len())));
        }
    }
    let matrix_a = match &common.matrix_a {
        None => None,
        Some(spec) => {
            let text = if spec.trim_start().starts_with('[') {
                spec.clone()
            } else {
                std::fs::read_to_string(spec).map_err(|e| Failure::usage(format!("reading {spec}: {e}")))?
            };
            let value: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| Failure::usage(format!("--matrix-a: {e}")))?;
            let a = Matrix::<S>::from_json(&value).map_err(|e| Failure::usage(format!("--matrix-a: {e}")))?;
            if a.rows() != nk || a.cols() != nk {
                return Err(Failure::usage(format!("--matrix-a must be {nk}x{nk}")));
            }
            Some(a)
        }
    };
    Ok(SolveOptions {
        order: common.order,
        shift,
        matrix_a,
        max_verify_power: common.max_power,
        seed: common.seed,
        tolerance: common.tolerance,
        ..SolveOptions::default()
    })
}

fn pretty_json(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn render_vec<S: Scalar>(v: &[S]) -> String {
    format!("[{}]", v.iter().map(Scalar::render).collect::<Vec<_>>().join(", "))
}

fn render_matrix<S: Scalar>(m: &Matrix<S>) -> String {
    format!(
        "[{}]",
        (0..m.rows())
            .map(|i| render_vec(m.row(i)))
            .collect::<Vec<_>>()
            .join(", ")
    )
}

fn render_transform<S: Scalar>(t: &TransformParams<S>) -> String {
    format!("A = {}, B = {}", render_matrix(t.a()), render_vec(t.b()))
}

/// Initial value of reduced variable `v`: `u^l_{n-1-j}` for `v = j*k + l`.
fn initial_name(names: &[String], k: usize, depth: usize, v: usize) -> String {
    format!("{}[{}]", names[v % k], depth - 1 - v / k)
}

fn render_monomial(names: &[String], k: usize, depth: usize, m: &Monomial) -> String {
    m.exponents()
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > 0)
        .map(|(v, &e)| {
            let base = initial_name(names, k, depth, v);
            if e == 1 {
                base
            } else {
                format!("{base}^{e}")
            }
        })
        .collect::<Vec<_>>()
        .join("*")
}

fn render_solution<S: Scalar>(sol: &ClosedFormSolution<S>) -> String {
    let originals = &sol.names[..sol.k];
    let mut out = format!(
        "order: {}, mode: {}\ntransform: {}\n",
        sol.order,
        S::MODE,
        render_transform(&sol.transform)
    );
    if sol.depth > 1 {
        out.push_str(&format!(
            "depth {}: step i of the closed form is step i+{} of the recurrence\n",
            sol.depth,
            sol.depth - 1
        ));
    }
    for (p, map) in sol.original.iter().enumerate() {
        let mut parts: Vec<String> = Vec::new();
        if !sol.offsets[p].is_zero() {
            parts.push(sol.offsets[p].render());
        }
        for (m, e) in map {
            let mono = render_monomial(originals, sol.k, sol.depth, m);
            parts.push(if mono.is_empty() {
                format!("({})", e.render())
            } else {
                format!("({})*{mono}", e.render())
            });
        }
        let rhs = if parts.is_empty() {
            "0".to_string()
        } else {
            parts.join(" + ")
        };
        out.push_str(&format!("{}[i] = {rhs}\n", sol.names[p]));
    }
    out
}

fn cmd_solve<S: Scalar>(system: &PolySystem<S>, opts: &SolveOptions<S>, format: Format) -> Result<String, Failure> {
    let sol = solver::solve(system, opts)?;
    Ok(match format {
        Format::Json => pretty_json(&sol.to_json()),
        Format::Text => render_solution(&sol),
    })
}

fn cmd_matrix<S: Scalar>(system: &PolySystem<S>, opts: &SolveOptions<S>, format: Format) -> Result<String, Failure> {
    let prepared = prepare(system, opts)?;
    let t = transition(&prepared, opts.order)?;
    Ok(match format {
        Format::Json => {
            let mut v = t.to_json();
            v["transform"] = prepared.transform.to_json();
            pretty_json(&v)
        }
        Format::Text => {
            let mut out = format!(
                "transform: {}\nsize: {}\ntriangular: {}\neigenvalues: {}\nbasis:\n",
                render_transform(&prepared.transform),
                t.size(),
                t.is_triangular(),
                render_vec(&t.eigenvalues())
            );
            for m in t.basis().monomials() {
                out.push_str(&format!("  {:?}\n", m.exponents()));
            }
            out.push_str("rows:\n");
            for i in 0..t.size() {
                out.push_str(&format!("  {}\n", render_vec(t.entries().row(i))));
            }
            out
        }
    })
}

fn report_text<S: Scalar>(report: &VerificationReport<S>, names: &[String]) -> String {
    let mut out = format!(
        "coordinates: {}\n{:>4}  {:>12}  status\n",
        report.coordinates, "i", "passed"
    );
    for (i, passed, total) in report.per_step() {
        let status = if passed == total { "PASS" } else { "FAIL" };
        out.push_str(&format!("{i:>4}  {:>12}  {status}\n", format!("{passed}/{total}")));
    }
    out.push_str(&format!("max discrepancy: {:e}\n", report.max_discrepancy));
    for f in report.failures().take(20) {
        out.push_str(&format!(
            "FAIL i={} {} {:?}: expected {}, got {}\n",
            f.step,
            names[f.variable],
            f.monomial.exponents(),
            f.expected.render(),
            f.actual.render()
        ));
    }
    out.push_str(if report.all_pass() {
        "result: PASS\n"
    } else {
        "result: FAIL\n"
    });
    out
}

fn report_json<S: Scalar>(report: &VerificationReport<S>) -> serde_json::Value {
    json!({
        "coordinates": report.coordinates,
        "steps": report.per_step().into_iter().map(|(i, passed, total)| json!({
            "i": i, "passed": passed, "total": total, "pass": passed == total,
        })).collect::<Vec<_>>(),
        "max_discrepancy": report.max_discrepancy,
        "pass": report.all_pass(),
        "failures": report.failures().map(|f| json!({
            "i": f.step,
            "variable": f.variable,
            "monomial": f.monomial.exponents(),
            "expected": f.expected.to_json(),
            "actual": f.actual.to_json(),
        })).collect::<Vec<_>>(),
    })
}

fn cmd_verify<S: Scalar>(
    system: &PolySystem<S>,
    opts: &SolveOptions<S>,
    solution: Option<&PathBuf>,
    format: Format,
) -> Result<String, Failure> {
    let sol = match solution {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::usage(format!("reading {}: {e}", path.display())))?;
            let value: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| Failure::usage(format!("--solution: {e}")))?;
            ClosedFormSolution::<S>::from_json(&value).map_err(|e| Failure::usage(format!("--solution: {e}")))?
        }
        None => solver::solve(system, opts)?,
    };
    let opts = SolveOptions {
        order: sol.order,
        ..opts.clone()
    };
    let report = verify(&sol, system, &opts).map_err(|e| Failure {
        code: 3,
        message: format!("verification: {e}"),
        output: None,
    })?;
    let out = match format {
        Format::Json => pretty_json(&report_json(&report)),
        Format::Text => report_text(&report, &sol.names),
    };
    if report.all_pass() {
        Ok(out)
    } else {
        Err(Failure {
            code: 3,
            message: format!("verification failed ({} mismatches)", report.failures().count()),
            output: Some(out),
        })
    }
}

fn cmd_eval<S: Scalar>(
    system: &PolySystem<S>,
    opts: &SolveOptions<S>,
    step: usize,
    initial: &str,
    format: Format,
) -> Result<String, Failure> {
    let (k, n) = (system.k(), system.depth());
    let values = parse_scalars::<S>(initial)?;
    if values.len() != n * k {
        return Err(Failure::usage(format!(
            "--initial needs {} values (u_0..u_{} with {k} each), got {}",
            n * k,
            n - 1,
            values.len()
        )));
    }
    let history: Vec<Vec<S>> = values.chunks(k).map(<[S]>::to_vec).collect();
    let direct = eval_direct(system, step, &history).map_err(|e| Failure::usage(e.to_string()))?;
    let sol = solver::solve(system, opts)?;
    let closed = eval_closed_form_history(&sol, step, &history).map_err(|e| Failure::usage(e.to_string()))?;
    let rows: Vec<(String, S, S, S)> = system
        .names()
        .iter()
        .zip(direct.iter().zip(&closed))
        .map(|(name, (d, c))| (name.clone(), d.clone(), c.clone(), c.clone() - d.clone()))
        .collect();
    Ok(match format {
        Format::Json => pretty_json(&json!({
            "step": step,
            "order": sol.order,
            "values": rows.iter().map(|(name, d, c, diff)| json!({
                "name": name, "direct": d.to_json(), "closed_form": c.to_json(), "difference": diff.to_json(),
            })).collect::<Vec<_>>(),
        })),
        Format::Text => {
            let mut out = format!("step: {step}, order: {}\n", sol.order);
            for (name, d, c, diff) in &rows {
                out.push_str(&format!(
                    "{name}: direct {}  closed-form {}  difference {}\n",
                    d.render(),
                    c.render(),
                    diff.render()
                ));
            }
            out
        }
    })
}

fn cmd_transform<S: Scalar>(system: &PolySystem<S>, opts: &SolveOptions<S>, format: Format) -> Result<String, Failure> {
    let prepared = prepare(system, opts)?;
    let max_power = opts.order;
    let bound = opts.root_of_unity_bound;
    // (shift, verdict text, pass)
    let candidates: Vec<(Vec<S>, String, bool)> = match &prepared.selection {
        Some(sel) => sel
            .candidates
            .iter()
            .map(|c| {
                let text = match &c.report {
                    Ok(r) => r.summary(),
                    Err(e) => format!("FAIL ({e})"),
                };
                (c.shift.clone(), text, c.passes())
            })
            .collect(),
        None => {
            let shift = prepared.transform.b().to_vec();
            let report = apply_affine(&prepared.reduced, &TransformParams::shift(shift.clone()))
                .and_then(|s| check_shift_admissible(&s, max_power, bound));
            match report {
                Ok(r) => vec![(shift, r.summary(), r.pass)],
                Err(e) => vec![(shift, format!("FAIL ({e})"), false)],
            }
        }
    };
    let chosen = prepared.selection.as_ref().map_or(0, |s| s.chosen);
    let dsl = pretty_print(&prepared.transformed);
    Ok(match format {
        Format::Json => pretty_json(&json!({
            "candidates": candidates.iter().map(|(b, text, pass)| json!({
                "shift": b.iter().map(Scalar::to_json).collect::<Vec<_>>(),
                "pass": pass,
                "report": text,
            })).collect::<Vec<_>>(),
            "chosen": chosen,
            "transform": prepared.transform.to_json(),
            "system": dsl,
        })),
        Format::Text => {
            let mut out = String::from("candidates:\n");
            for (idx, (b, text, _)) in candidates.iter().enumerate() {
                let mark = if idx == chosen { '*' } else { ' ' };
                out.push_str(&format!("{mark} B = {}: {text}\n", render_vec(b)));
            }
            out.push_str(&format!("transform: {}\n", render_transform(&prepared.transform)));
            if prepared.transform.is_identity() {
                out.push_str("(identity transform)\n");
            }
            out.push_str("transformed system:\n");
            out.push_str(&dsl);
            out
        }
    })
}
