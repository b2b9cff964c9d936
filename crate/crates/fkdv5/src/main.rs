use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::rc::Rc;

use clap::{Args, Parser, Subcommand};

use fkdv5::algebra::{identify_algebra, structure_constants, subalgebra};
use fkdv5::classify::{classify, symmetry_basis, symmetry_basis_original, Case};
use fkdv5::gauge::{constantize, reducibility_residual, EquationSpec};
use fkdv5::reduce::{exact_catalog, integrate_ode, lift, pull_back_field, reduction_for};
use fkdv5::report::{
    basis_json, classification_json, equiv_json, fmt_float, report, residual_json,
    structure_json, write_csv, Json,
};
use fkdv5::verify::{fd_residual, pde_residual, GridSpec};
use fkdv5::TimeFn;

#[derive(Parser)]
#[command(name = "fkdv5", version, about = "Symmetry classification, reduction and \
verification for u_t + u^n u_x + α(t)u + β(t)u_xxxxx = 0")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Classify the equation and report its Lie symmetry structure
    Classify(EqArgs),
    /// Reduce along a subalgebra, integrate the reduced ODE, lift and verify
    #[command(alias = "solve")]
    Reduce(ReduceArgs),
    /// Evaluate the constant-coefficient reducibility criterion
    Criterion(EqArgs),
    /// List closed-form solutions applicable to the equation, with residuals
    Catalog(CatalogArgs),
    /// Check tabulated solution data (CSV) against the equation
    Verify(VerifyArgs),
}

#[derive(Args, Clone)]
struct EqArgs {
    /// Nonlinearity power n (n ∉ {0, 1})
    #[arg(long, allow_negative_numbers = true)]
    n: f64,
    /// Coefficient α(t) as an expression in t
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    alpha: String,
    /// Coefficient β(t) as an expression in t
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    beta: String,
    /// Time window a:b
    #[arg(long = "t-range", default_value = "1:2", allow_hyphen_values = true)]
    t_range: String,
    /// Classification / verification tolerance
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    /// Write the JSON report to this path (also printed to stdout)
    #[arg(long)]
    json: Option<PathBuf>,
    /// Write sample/residual CSV to this path
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct ReduceArgs {
    #[command(flatten)]
    eq: EqArgs,
    /// Optimal-system subalgebra NAME[:param], e.g. g4.1:-1 or g2.2:0.5
    #[arg(long, allow_hyphen_values = true)]
    subalgebra: String,
    /// Initial values v0,v1,v2,v3,v4 = φ..φ⁗ at the span start
    #[arg(long, allow_hyphen_values = true)]
    ic: String,
    /// Integration span for the invariant variable, a:b
    #[arg(long = "omega-span", default_value = "-4:4", allow_hyphen_values = true)]
    omega_span: String,
    /// Verification grid NtxNx
    #[arg(long, default_value = "8x32")]
    grid: String,
}

#[derive(Args)]
struct CatalogArgs {
    #[command(flatten)]
    eq: EqArgs,
    /// Shortcut for a constant-coefficient equation: sets β = ε, α = 0
    #[arg(long, allow_negative_numbers = true)]
    epsilon: Option<f64>,
    /// Verification grid NtxNx
    #[arg(long, default_value = "8x32")]
    grid: String,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    eq: EqArgs,
    /// CSV file with columns t,x,u on a uniform rectangular grid
    #[arg(long)]
    solution: PathBuf,
}

struct CliError(String);

impl<E: std::fmt::Display> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError(e.to_string())
    }
}

fn parse_pair(s: &str, sep: char, what: &str) -> Result<(f64, f64), CliError> {
    let (a, b) = s
        .split_once(sep)
        .ok_or_else(|| CliError(format!("{what}: expected A{sep}B, got {s:?}")))?;
    Ok((
        a.trim().parse::<f64>().map_err(|e| CliError(format!("{what}: {e}")))?,
        b.trim().parse::<f64>().map_err(|e| CliError(format!("{what}: {e}")))?,
    ))
}

fn parse_grid(s: &str) -> Result<(usize, usize), CliError> {
    let (a, b) = s
        .split_once('x')
        .ok_or_else(|| CliError(format!("grid: expected NTxNX, got {s:?}")))?;
    Ok((
        a.parse().map_err(|e| CliError(format!("grid: {e}")))?,
        b.parse().map_err(|e| CliError(format!("grid: {e}")))?,
    ))
}

fn parse_ic(s: &str) -> Result<[f64; 5], CliError> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError(format!("ic: {e}")))?;
    vals.as_slice()
        .try_into()
        .map_err(|_| CliError(format!("ic: expected five values, got {}", vals.len())))
}

fn parse_subalgebra(s: &str) -> (String, Option<f64>) {
    match s.split_once(':') {
        Some((name, p)) => (name.to_string(), p.parse().ok()),
        None => (s.to_string(), None),
    }
}

fn equation(args: &EqArgs) -> Result<EquationSpec, CliError> {
    let interval = parse_pair(&args.t_range, ':', "t-range")?;
    let alpha = TimeFn::parse(&args.alpha).map_err(|e| CliError(format!("alpha: {e}")))?;
    let beta = TimeFn::parse(&args.beta).map_err(|e| CliError(format!("beta: {e}")))?;
    Ok(EquationSpec::new(args.n, alpha, beta, interval)?)
}

fn input_json(args: &EqArgs, interval: (f64, f64)) -> Json {
    Json::obj(vec![
        ("n", Json::Num(args.n)),
        ("alpha", Json::str(&args.alpha)),
        ("beta", Json::str(&args.beta)),
        (
            "t_range",
            Json::Arr(vec![Json::Num(interval.0), Json::Num(interval.1)]),
        ),
        ("tol", Json::Num(args.tol)),
    ])
}

fn emit(args: &EqArgs, doc: &Json) -> Result<(), CliError> {
    let text = doc.to_pretty();
    print!("{text}");
    if let Some(path) = &args.json {
        fs::write(path, &text).map_err(|e| CliError(format!("write {path:?}: {e}")))?;
    }
    Ok(())
}

fn emit_csv(args: &EqArgs, points: &[(f64, f64, f64, f64)]) -> Result<(), CliError> {
    if let Some(path) = &args.csv {
        let mut buf = Vec::new();
        write_csv(&mut buf, points).map_err(|e| CliError(e.to_string()))?;
        fs::write(path, buf).map_err(|e| CliError(format!("write {path:?}: {e}")))?;
    }
    Ok(())
}

fn cmd_classify(args: &EqArgs) -> Result<u8, CliError> {
    let e = equation(args)?;
    let c = classify(&e, args.tol)?;
    let canonical = symmetry_basis(&c, e.n);
    let original = symmetry_basis_original(&e, &c)?;
    let crit = reducibility_residual(&e, 64)?;

    let mut sections = vec![
        ("input", input_json(args, e.interval)),
        ("classification", classification_json(&c)),
        (
            "reducibility",
            Json::obj(vec![
                ("residual", Json::Num(crit)),
                ("reducible", Json::Bool(crit <= args.tol.max(1e-10))),
            ]),
        ),
        ("basis_canonical", basis_json(&canonical)),
        ("basis_original", basis_json(&original)),
    ];

    if canonical.len() > 1 {
        let sc = structure_constants(&canonical, c.canonical_interval)?;
        let label = identify_algebra(&canonical, c.canonical_interval)?;
        sections.push(("algebra", Json::str(label.to_string())));
        sections.push(("structure", structure_json(&sc)));
    } else {
        sections.push(("algebra", Json::str("A1")));
    }
    sections.push((
        "optimal_system",
        Json::Arr(
            fkdv5::algebra::optimal_system(&c)
                .into_iter()
                .map(Json::Str)
                .collect(),
        ),
    ));

    let doc = report("classify", sections);
    emit(args, &doc)?;
    if c.case == Case::Generic {
        eprintln!(
            "warning: GENERIC case — β(t) satisfies no classifying ODE within tolerance; \
             only the x-translation symmetry is available"
        );
        return Ok(2);
    }
    Ok(0)
}

fn cmd_reduce(args: &ReduceArgs) -> Result<u8, CliError> {
    let e = equation(&args.eq)?;
    let c = classify(&e, args.eq.tol)?;
    let (name, param) = parse_subalgebra(&args.subalgebra);
    if name == "g0" {
        return Err(CliError(
            "subalgebra g0 = ⟨∂x⟩: reduction yields constants only".into(),
        ));
    }
    // validate the name against the optimal system for this case
    let _ = subalgebra(&c, &name, param)?;
    let red = reduction_for(&c, &name, param)?;

    let span = parse_pair(&args.omega_span, ':', "omega-span")?;
    let ic = parse_ic(&args.ic)?;
    let traj = integrate_ode(&red.ode, ic, span, args.eq.tol.min(1e-9))?;
    let truncated = traj.truncated;
    let reached = traj.reached;
    let canonical_field = lift(&red, Rc::new(traj))?;
    let field = pull_back_field(&c.normalizer, e.interval, &canonical_field);

    let domain_ok = field.x_domain.0 < field.x_domain.1;
    if !domain_ok && !truncated {
        return Err(CliError(format!(
            "lifted field has empty x-domain over the time window \
             (ω-span {:?} too narrow)",
            span
        )));
    }
    // a truncated (blown-up) trajectory is still reported, without residuals
    let res = if domain_ok {
        let (nt, nx) = parse_grid(&args.grid)?;
        let shrink = |r: (f64, f64)| {
            let pad = 0.02 * (r.1 - r.0);
            (r.0 + pad, r.1 - pad)
        };
        let grid = GridSpec::new(shrink(field.t_domain), shrink(field.x_domain), nt, nx);
        Some(pde_residual(&e, &field, &grid)?)
    } else {
        None
    };

    let doc = report(
        "reduce",
        vec![
            ("input", input_json(&args.eq, e.interval)),
            ("classification", classification_json(&c)),
            (
                "reduction",
                Json::obj(vec![
                    ("subalgebra", Json::str(&red.name)),
                    (
                        "ode",
                        Json::obj(vec![
                            ("epsilon", Json::Num(red.ode.epsilon)),
                            ("n", Json::Num(red.ode.n)),
                            ("c_omega", Json::Num(red.ode.c_omega)),
                            ("c_const", Json::Num(red.ode.c_const)),
                            ("c_phi", Json::Num(red.ode.c_phi)),
                        ]),
                    ),
                    ("omega", Json::str(format!("({})*x + ({})", red.w, red.v))),
                    ("mu", Json::str(red.mu.to_string())),
                ]),
            ),
            (
                "trajectory",
                Json::obj(vec![
                    (
                        "span",
                        Json::Arr(vec![Json::Num(span.0), Json::Num(span.1)]),
                    ),
                    ("reached", Json::Num(reached)),
                    ("truncated", Json::Bool(truncated)),
                    (
                        "ic",
                        Json::Arr(ic.iter().map(|&v| Json::Num(v)).collect()),
                    ),
                ]),
            ),
            (
                "residual",
                res.as_ref()
                    .map_or(Json::Null, |r| residual_json(r, args.eq.tol)),
            ),
        ],
    );
    emit(&args.eq, &doc)?;
    if let Some(r) = &res {
        emit_csv(&args.eq, &r.points)?;
    }
    Ok(0)
}

fn cmd_criterion(args: &EqArgs) -> Result<u8, CliError> {
    let e = equation(args)?;
    let residual = reducibility_residual(&e, 64)?;
    let reducible = residual <= args.tol;
    let mut sections = vec![
        ("input", input_json(args, e.interval)),
        (
            "criterion",
            Json::obj(vec![
                ("residual", Json::Num(residual)),
                ("reducible", Json::Bool(reducible)),
            ]),
        ),
    ];
    if reducible {
        let (g, a, b) = constantize(&e, args.tol)?;
        sections.push((
            "constantizing_transform",
            Json::obj(vec![
                ("transform", equiv_json(&g)),
                ("alpha_out", Json::Num(a)),
                ("beta_out", Json::Num(b)),
            ]),
        ));
    }
    let doc = report("criterion", sections);
    emit(args, &doc)?;
    Ok(0)
}

fn cmd_catalog(args: &CatalogArgs) -> Result<u8, CliError> {
    let mut eq_args = args.eq.clone();
    if let Some(eps) = args.epsilon {
        eq_args.alpha = "0".into();
        eq_args.beta = fmt_float(eps);
    }
    let e = equation(&eq_args)?;
    let c = classify(&e, eq_args.tol)?;
    let fields = exact_catalog(&e, &c);
    let (nt, nx) = parse_grid(&args.grid)?;

    let mut entries = Vec::new();
    let mut all_points = Vec::new();
    for f in &fields {
        // verification window: bounded part of the field's domain
        let t_range = (
            f.t_domain.0.max(e.interval.0),
            f.t_domain.1.min(e.interval.1),
        );
        let x_range = (f.x_domain.0.max(0.5), f.x_domain.1.min(3.0));
        let grid = GridSpec::new(t_range, x_range, nt, nx);
        let res = pde_residual(&e, f, &grid)?;
        entries.push(Json::obj(vec![
            ("label", Json::str(&f.label)),
            ("residual", residual_json(&res, eq_args.tol)),
        ]));
        all_points.extend(res.points);
    }
    let doc = report(
        "catalog",
        vec![
            ("input", input_json(&eq_args, e.interval)),
            ("case", Json::str(c.case.to_string())),
            ("solutions", Json::Arr(entries)),
        ],
    );
    emit(&eq_args, &doc)?;
    emit_csv(&eq_args, &all_points)?;
    Ok(0)
}

fn cmd_verify(args: &VerifyArgs) -> Result<u8, CliError> {
    let e = equation(&args.eq)?;
    let text = fs::read_to_string(&args.solution)
        .map_err(|err| CliError(format!("read {:?}: {err}", args.solution)))?;
    let (ts, xs, u) = read_solution_csv(&text)?;
    let res = fd_residual(&e, &ts, &xs, &u)?;
    let doc = report(
        "verify",
        vec![
            ("input", input_json(&args.eq, e.interval)),
            (
                "data",
                Json::obj(vec![
                    ("rows", Json::Int((ts.len() * xs.len()) as i64)),
                    ("nt", Json::Int(ts.len() as i64)),
                    ("nx", Json::Int(xs.len() as i64)),
                ]),
            ),
            ("residual", residual_json(&res, args.eq.tol)),
        ],
    );
    emit(&args.eq, &doc)?;
    emit_csv(&args.eq, &res.points)?;
    Ok(0)
}

/// Parse `t,x,u[,...]` rows into a rectangular grid (row-major in t).
fn read_solution_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>, Vec<Vec<f64>>), CliError> {
    let mut ts: Vec<f64> = Vec::new();
    let mut xs: Vec<f64> = Vec::new();
    let mut rows: Vec<(f64, f64, f64)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.starts_with('t')) {
            continue;
        }
        let mut cols = line.split(',');
        let mut next = |name: &str| -> Result<f64, CliError> {
            cols.next()
                .ok_or_else(|| CliError(format!("line {}: missing {name}", lineno + 1)))?
                .trim()
                .parse::<f64>()
                .map_err(|e| CliError(format!("line {}: {name}: {e}", lineno + 1)))
        };
        let (t, x, u) = (next("t")?, next("x")?, next("u")?);
        if ts.last() != Some(&t) && !ts.contains(&t) {
            ts.push(t);
        }
        if ts.len() == 1 {
            xs.push(x);
        }
        rows.push((t, x, u));
    }
    if ts.is_empty() || xs.is_empty() {
        return Err(CliError("solution CSV contains no data rows".into()));
    }
    if rows.len() != ts.len() * xs.len() {
        return Err(CliError(format!(
            "solution CSV is not a full {}x{} grid ({} rows)",
            ts.len(),
            xs.len(),
            rows.len()
        )));
    }
    let mut u = vec![vec![0.0; xs.len()]; ts.len()];
    for (k, &(_, _, v)) in rows.iter().enumerate() {
        u[k / xs.len()][k % xs.len()] = v;
    }
    Ok((ts, xs, u))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.cmd {
        Cmd::Classify(a) => cmd_classify(a),
        Cmd::Reduce(a) => cmd_reduce(a),
        Cmd::Criterion(a) => cmd_criterion(a),
        Cmd::Catalog(a) => cmd_catalog(a),
        Cmd::Verify(a) => cmd_verify(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(CliError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
