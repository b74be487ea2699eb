//! Command-line front end.
//!
//! Exit codes: 0 on success / checks passed, 2 on a failed mathematical
//! check (counterexample in the report), 1 on usage or config errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use treeflow::averaging::{verify_axioms, AveragingKind, AveragingSpec};
use treeflow::closedform::{
    finite_support_exact, geometric_eigen, level_constant_solution, monomial_example,
    scaling_eigen, subfactorial_datum,
};
use treeflow::config::{ExperimentConfig, GridConfig, TreeConfig};
use treeflow::datum::InitialDatum;
use treeflow::decay::{check_decay_trajectory, support_stats, BoundKind};
use treeflow::error::Error;
use treeflow::export::{
    atomic_write, field_summary_json, format_float, polynomial_csv, write_decay_csv,
    write_field_csv, write_json,
};
use treeflow::fuzz::ordered_pair;
use treeflow::solver::{
    picard_iterate, residual_norm, solve_ivp, solve_summary, ClosureRule, TimeGrid,
};
use treeflow::tree::TreeShape;
use treeflow::Result;

#[derive(Parser)]
#[command(name = "treeflow", version, about = "Diffusion driven by averaging operators on m-ary trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the initial-value problem and export the field
    Solve(SolveArgs),
    /// Verify the averaging-operator axioms on seeded random vectors
    Axioms(AxiomArgs),
    /// Solve and check the applicable decay bound
    DecayCheck(DecayArgs),
    /// Check the numeric solution against the exact eigen-solution
    EigenCheck(EigenArgs),
    /// Verify the comparison principle on seeded ordered pairs
    Compare(CompareArgs),
    /// Emit closed-form oracle values or exact polynomial solutions
    ClosedForm(ClosedFormArgs),
    /// Picard iteration with contraction-ratio diagnostics
    Picard(PicardArgs),
}

#[derive(Args, Clone, Default)]
struct OverrideArgs {
    /// Branching factor m
    #[arg(long)]
    m: Option<usize>,
    /// Truncation depth (maximum stored level)
    #[arg(long)]
    depth: Option<usize>,
    /// Operator: mean | p-average | median-mean | median-midrange | minmax-mean
    #[arg(long)]
    operator: Option<String>,
    /// Exponent for p-average
    #[arg(long)]
    p: Option<f64>,
    /// Blend weight for the blended operators
    #[arg(long)]
    alpha: Option<f64>,
    /// Datum: fn | geometric | scaling | inline JSON object
    #[arg(long)]
    datum: Option<String>,
    /// Level of the optimal datum f_n (n! at level n)
    #[arg(long)]
    n: Option<usize>,
    /// Geometric datum amplitude k
    #[arg(long)]
    k: Option<f64>,
    /// Eigenvalue lambda
    #[arg(long)]
    lambda: Option<f64>,
    /// Scaling datum amplitude C
    #[arg(long)]
    c: Option<f64>,
    /// Seed for the randomized geometric datum (omit for the exact eigen-datum)
    #[arg(long)]
    datum_seed: Option<u64>,
    /// Final time T
    #[arg(long = "T")]
    t_end: Option<f64>,
    /// Time step (steps = round(T / dt))
    #[arg(long)]
    dt: Option<f64>,
    /// Number of time steps (overrides --dt)
    #[arg(long)]
    steps: Option<usize>,
    /// Closure below the truncation: auto | zero | geometric | eigen
    #[arg(long)]
    closure: Option<String>,
    /// Experiment seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SolveArgs {
    /// JSON config file; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: OverrideArgs,
    /// Full field CSV (vertex,level,psi,t,value)
    #[arg(long)]
    out_csv: Option<PathBuf>,
    /// Run summary JSON (written to stdout when omitted)
    #[arg(long)]
    out_json: Option<PathBuf>,
}

#[derive(Args)]
struct AxiomArgs {
    /// Operator: mean | p-average | median-mean | median-midrange | minmax-mean
    #[arg(long, default_value = "mean")]
    operator: String,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 3)]
    m: usize,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_json: Option<PathBuf>,
}

#[derive(Args)]
struct DecayArgs {
    #[command(flatten)]
    overrides: OverrideArgs,
    /// Additive slack on top of the bound (scheme error)
    #[arg(long, default_value_t = 1e-5)]
    abs_tol: f64,
    #[arg(long)]
    out_json: Option<PathBuf>,
    /// Plot-ready CSV t,max_abs_u,bound
    #[arg(long)]
    out_csv: Option<PathBuf>,
}

#[derive(Args)]
struct EigenArgs {
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    k: f64,
    #[arg(long, default_value_t = 3)]
    m: usize,
    #[arg(long, default_value_t = 8)]
    depth: usize,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long = "T", default_value_t = 5.0)]
    t_end: f64,
    /// Bound on both the root sup-error and the integral-equation residual
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    #[arg(long)]
    out_json: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long, default_value_t = 50)]
    pairs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    m: usize,
    #[arg(long, default_value_t = 4)]
    depth: usize,
    /// Support level a(f) of the generated pairs
    #[arg(long, default_value_t = 3)]
    support: usize,
    #[arg(long = "T", default_value_t = 2.0)]
    t_end: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long)]
    out_json: Option<PathBuf>,
}

#[derive(Args)]
struct ClosedFormArgs {
    /// monomial | geometric-eigen | scaling-eigen | level-constant |
    /// subfactorial | polynomial
    #[arg(long)]
    kind: String,
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    k: f64,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, default_value_t = 8)]
    level_max: usize,
    #[arg(long, default_value_t = 3)]
    m: usize,
    #[arg(long)]
    depth: Option<usize>,
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PicardArgs {
    #[command(flatten)]
    overrides: OverrideArgs,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    #[arg(long)]
    out_json: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0u8,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<bool> {
    match command {
        Command::Solve(args) => cmd_solve(args),
        Command::Axioms(args) => cmd_axioms(args),
        Command::DecayCheck(args) => cmd_decay_check(args),
        Command::EigenCheck(args) => cmd_eigen_check(args),
        Command::Compare(args) => cmd_compare(args),
        Command::ClosedForm(args) => cmd_closed_form(args),
        Command::Picard(args) => cmd_picard(args),
    }
}

fn build_operator(name: &str, p: Option<f64>, alpha: Option<f64>, m: usize) -> Result<AveragingSpec> {
    let kind = match name {
        "mean" => AveragingKind::ArithmeticMean,
        "p-average" | "p_average" => AveragingKind::PAverage { p: p.unwrap_or(2.0) },
        "median-mean" | "median_mean_blend" => AveragingKind::MedianMeanBlend {
            alpha: alpha.unwrap_or(0.5),
        },
        "median-midrange" | "median_midrange_blend" => AveragingKind::MedianMidrangeBlend {
            alpha: alpha.unwrap_or(0.5),
        },
        "minmax-mean" | "min_max_mean_blend" => AveragingKind::MinMaxMeanBlend {
            alpha: alpha.unwrap_or(0.5),
        },
        other => return Err(Error::Config(format!("unknown operator {other:?}"))),
    };
    AveragingSpec::new(kind, m)
}

fn build_datum(ov: &OverrideArgs) -> Result<InitialDatum> {
    let name = ov.datum.as_deref().unwrap_or("fn");
    match name {
        "fn" => Ok(InitialDatum::monomial_family(ov.n.unwrap_or(2))),
        "geometric" => Ok(InitialDatum::Geometric {
            k: ov.k.unwrap_or(1.0),
            lambda: ov.lambda.unwrap_or(0.5),
            seed: ov.datum_seed,
        }),
        "scaling" => Ok(InitialDatum::ScalingEigen {
            c: ov.c.unwrap_or(1.0),
            lambda: ov.lambda.unwrap_or(2.0),
        }),
        s if s.trim_start().starts_with('{') => Ok(serde_json::from_str(s)?),
        other => Err(Error::Config(format!("unknown datum {other:?}"))),
    }
}

fn build_closure(name: Option<&str>, ov: &OverrideArgs, datum: &InitialDatum) -> Result<ClosureRule> {
    match name.unwrap_or("auto") {
        "auto" => Ok(match datum {
            InitialDatum::Geometric { k, lambda, .. } => ClosureRule::GeometricEnvelope {
                k: *k,
                lambda: *lambda,
            },
            InitialDatum::ScalingEigen { c, lambda } => ClosureRule::EigenExtension {
                c: *c,
                lambda: *lambda,
            },
            _ => ClosureRule::ZeroBoundary,
        }),
        "zero" => Ok(ClosureRule::ZeroBoundary),
        "geometric" => Ok(ClosureRule::GeometricEnvelope {
            k: ov.k.unwrap_or(1.0),
            lambda: ov.lambda.unwrap_or(0.5),
        }),
        "eigen" => Ok(ClosureRule::EigenExtension {
            c: ov.c.unwrap_or(1.0),
            lambda: ov.lambda.unwrap_or(2.0),
        }),
        other => Err(Error::Config(format!("unknown closure {other:?}"))),
    }
}

/// Config file (when given) merged with flag overrides; flags win.
fn effective_config(config: Option<&Path>, ov: &OverrideArgs) -> Result<ExperimentConfig> {
    let mut cfg = match config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => {
            let m = ov.m.unwrap_or(3);
            let datum = build_datum(ov)?;
            let closure = build_closure(ov.closure.as_deref(), ov, &datum)?;
            ExperimentConfig {
                operator: build_operator(ov.operator.as_deref().unwrap_or("mean"), ov.p, ov.alpha, m)?,
                datum,
                tree: TreeConfig {
                    m,
                    depth: ov.depth.unwrap_or(6),
                },
                grid: GridConfig {
                    t_end: 10.0,
                    steps: 10_000,
                },
                closure,
                seed: ov.seed.unwrap_or(0),
            }
        }
    };
    if let Some(m) = ov.m {
        cfg.tree.m = m;
    }
    if let Some(depth) = ov.depth {
        cfg.tree.depth = depth;
    }
    if let Some(op) = &ov.operator {
        cfg.operator = build_operator(op, ov.p, ov.alpha, cfg.tree.m)?;
    }
    if ov.datum.is_some() {
        cfg.datum = build_datum(ov)?;
        cfg.closure = build_closure(ov.closure.as_deref(), ov, &cfg.datum)?;
    } else if ov.closure.is_some() {
        cfg.closure = build_closure(ov.closure.as_deref(), ov, &cfg.datum)?;
    }
    if let Some(t_end) = ov.t_end {
        cfg.grid.t_end = t_end;
        cfg.grid.steps = (t_end / ov.dt.unwrap_or(1e-3)).round().max(1.0) as usize;
    }
    if let Some(dt) = ov.dt {
        cfg.grid.steps = (cfg.grid.t_end / dt).round().max(1.0) as usize;
    }
    if let Some(steps) = ov.steps {
        cfg.grid.steps = steps;
    }
    if let Some(seed) = ov.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => atomic_write(path, text.as_bytes()),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn cmd_solve(args: SolveArgs) -> Result<bool> {
    let cfg = effective_config(args.config.as_deref(), &args.overrides)?;
    let (shape, spec, datum, grid, closure) = cfg.build()?;
    if let Some(csv_path) = &args.out_csv {
        let field = solve_ivp(shape, spec, &datum, grid, closure)?;
        write_field_csv(&field, csv_path)?;
        let residual = residual_norm(&field, &spec);
        let summary = field_summary_json(&field, Some(residual))?;
        emit(&summary, args.out_json.as_deref())?;
    } else {
        // streaming mode: two time levels in memory, no post-hoc field
        let summary = solve_summary(shape, spec, &datum, grid, closure, true)?;
        let text = treeflow::export::summary_json(&cfg, &summary)?;
        emit(&text, args.out_json.as_deref())?;
    }
    Ok(true)
}

fn cmd_axioms(args: AxiomArgs) -> Result<bool> {
    let spec = build_operator(&args.operator, args.p, args.alpha, args.m)?;
    let report = verify_axioms(&spec, args.samples, args.seed);
    let text = serde_json::to_string_pretty(&report)?;
    emit(&text, args.out_json.as_deref())?;
    Ok(report.all_pass())
}

fn cmd_decay_check(args: DecayArgs) -> Result<bool> {
    let ov = &args.overrides;
    let datum = build_datum(ov)?;
    let kind = match &datum {
        InitialDatum::Geometric { k, lambda, .. } => BoundKind::Geometric {
            k: *k,
            lambda: *lambda,
        },
        _ => BoundKind::FiniteSupport {
            stats: support_stats(&datum)?,
        },
    };
    let m = ov.m.unwrap_or(3);
    let default_depth = match &kind {
        BoundKind::FiniteSupport { stats } => stats.mu.max(1),
        BoundKind::Geometric { .. } => 8,
    };
    let shape = TreeShape::new(m, ov.depth.unwrap_or(default_depth))?;
    let spec = build_operator(ov.operator.as_deref().unwrap_or("mean"), ov.p, ov.alpha, m)?;
    let t_end = ov.t_end.unwrap_or(15.0);
    let dt = ov.dt.unwrap_or(1e-3);
    let grid = TimeGrid::new(t_end, ov.steps.unwrap_or((t_end / dt).round().max(1.0) as usize))?;
    let closure = build_closure(ov.closure.as_deref(), ov, &datum)?;

    let summary = solve_summary(shape, spec, &datum, grid, closure, false)?;
    let trajectory: Vec<(f64, f64)> = summary
        .sup_norm_trajectory
        .iter()
        .enumerate()
        .map(|(k, &v)| (grid.node(k), v))
        .collect();
    let report = check_decay_trajectory(&trajectory, &kind, args.abs_tol)?;

    if let Some(path) = &args.out_csv {
        write_decay_csv(&report, path)?;
    }
    let overview = json!({
        "kind": report.kind,
        "first_valid_time": report.first_valid_time,
        "monotone": report.monotone,
        "all_pass": report.all_pass(),
        "nodes": report.nodes.len(),
        "final_ratio": report.nodes.last().map(|n| n.max_abs_u / n.bound),
    });
    if let Some(path) = &args.out_json {
        write_json(&report, path)?;
    }
    println!("{}", serde_json::to_string_pretty(&overview)?);
    let pass = match kind {
        // validity is only promised for t large enough
        BoundKind::FiniteSupport { .. } => report.first_valid_time.is_some(),
        BoundKind::Geometric { .. } => report.all_pass(),
    };
    Ok(pass)
}

fn cmd_eigen_check(args: EigenArgs) -> Result<bool> {
    let shape = TreeShape::new(args.m, args.depth)?;
    let spec = AveragingSpec::mean(args.m);
    let datum = InitialDatum::Geometric {
        k: args.k,
        lambda: args.lambda,
        seed: None,
    };
    let closure = ClosureRule::GeometricEnvelope {
        k: args.k,
        lambda: args.lambda,
    };
    let steps = (args.t_end / args.dt).round().max(1.0) as usize;
    let grid = TimeGrid::new(args.t_end, steps)?;
    let summary = solve_summary(shape, spec, &datum, grid, closure, true)?;
    let mut sup_error = 0.0f64;
    for (k, &u_root) in summary.root_trajectory.iter().enumerate() {
        let exact = geometric_eigen(args.k, args.lambda, 0, grid.node(k))?;
        sup_error = sup_error.max((u_root - exact).abs());
    }
    let residual = summary.residual.unwrap();
    let pass = sup_error <= args.tol && residual <= args.tol;
    let text = serde_json::to_string_pretty(&json!({
        "lambda": args.lambda,
        "m": args.m,
        "depth": args.depth,
        "dt": grid.dt(),
        "T": args.t_end,
        "sup_error_root": sup_error,
        "residual": residual,
        "tol": args.tol,
        "pass": pass,
    }))?;
    emit(&text, args.out_json.as_deref())?;
    Ok(pass)
}

fn cmd_compare(args: CompareArgs) -> Result<bool> {
    let shape = TreeShape::new(args.m, args.depth)?;
    let steps = (args.t_end / args.dt).round().max(1.0) as usize;
    let grid = TimeGrid::new(args.t_end, steps)?;
    let operators = [
        build_operator("mean", None, None, args.m)?,
        build_operator("minmax-mean", None, Some(0.5), args.m)?,
        build_operator("median-mean", None, Some(0.5), args.m)?,
    ];
    let mut worst = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    for i in 0..args.pairs {
        let (lower, upper) = ordered_pair(&shape, args.support.min(shape.depth() + 1), args.seed + i as u64);
        let spec = operators[i % operators.len()];
        let u = solve_ivp(shape, spec, &lower, grid, ClosureRule::ZeroBoundary)?;
        let v = solve_ivp(shape, spec, &upper, grid, ClosureRule::ZeroBoundary)?;
        for k in 0..grid.len() {
            for rank in 0..shape.vertex_count() {
                let gap = u.at(rank, k) - v.at(rank, k);
                worst = worst.max(gap);
                if gap > args.tol && failures.len() < 5 {
                    failures.push(json!({
                        "pair": i,
                        "vertex": shape.path_of(rank).to_string(),
                        "t": grid.node(k),
                        "u_minus_v": gap,
                    }));
                }
            }
        }
    }
    let pass = worst <= args.tol;
    let text = serde_json::to_string_pretty(&json!({
        "pairs": args.pairs,
        "worst_u_minus_v": worst,
        "tol": args.tol,
        "pass": pass,
        "counterexamples": failures,
    }))?;
    emit(&text, args.out_json.as_deref())?;
    Ok(pass)
}

fn cmd_closed_form(args: ClosedFormArgs) -> Result<bool> {
    let text = match args.kind.as_str() {
        "monomial" => {
            let mut out = String::from("level,value\n");
            for level in 0..=args.n {
                out.push_str(&format!(
                    "{level},{}\n",
                    format_float(monomial_example(args.n, level, args.t))
                ));
            }
            out
        }
        "geometric-eigen" => {
            let mut out = String::from("level,value\n");
            for level in 0..=args.level_max {
                out.push_str(&format!(
                    "{level},{}\n",
                    format_float(geometric_eigen(args.k, args.lambda, level, args.t)?)
                ));
            }
            out
        }
        "scaling-eigen" => {
            let mut out = String::from("level,value\n");
            for level in 0..=args.level_max {
                out.push_str(&format!(
                    "{level},{}\n",
                    format_float(scaling_eigen(args.c, args.lambda, level, args.t)?)
                ));
            }
            out
        }
        "level-constant" => {
            let mut out = String::from("level,value\n");
            for n in 0..=args.level_max {
                out.push_str(&format!(
                    "{n},{}\n",
                    format_float(level_constant_solution(args.alpha, n, args.t)?)
                ));
            }
            out
        }
        "subfactorial" => {
            let mut out = String::from("n,datum\n");
            for n in 0..=args.level_max {
                out.push_str(&format!("{n},{}\n", subfactorial_datum(n as u32)?));
            }
            out
        }
        "polynomial" => {
            let depth = args.depth.unwrap_or(args.n.max(1));
            let shape = TreeShape::new(args.m, depth)?;
            let spec = AveragingSpec::mean(args.m);
            let datum = InitialDatum::monomial_family(args.n);
            let solution = finite_support_exact(&shape, &spec, &datum)?;
            polynomial_csv(&solution)
        }
        other => return Err(Error::Config(format!("unknown closed form {other:?}"))),
    };
    emit(text.trim_end(), args.out.as_deref())?;
    Ok(true)
}

fn cmd_picard(args: PicardArgs) -> Result<bool> {
    let ov = &args.overrides;
    let m = ov.m.unwrap_or(3);
    let shape = TreeShape::new(m, ov.depth.unwrap_or(4))?;
    let spec = build_operator(ov.operator.as_deref().unwrap_or("mean"), ov.p, ov.alpha, m)?;
    let datum = build_datum(ov)?;
    let closure = build_closure(ov.closure.as_deref(), ov, &datum)?;
    let t_end = ov.t_end.unwrap_or(1.0);
    let dt = ov.dt.unwrap_or(1e-3);
    let grid = TimeGrid::new(t_end, ov.steps.unwrap_or((t_end / dt).round().max(1.0) as usize))?;

    let (field, trace) = picard_iterate(shape, spec, &datum, grid, closure, args.max_iter, args.tol)?;
    let bound = 1.0 - (-t_end).exp();
    let ratios: Vec<f64> = trace
        .windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| w[1] / w[0])
        .collect();
    let ratio_ok = ratios.iter().all(|r| *r <= bound + 1e-9);

    // cross-check against the marching solver
    let marched = solve_ivp(shape, spec, &datum, grid, closure)?;
    let mut disagreement = 0.0f64;
    for k in 0..grid.len() {
        for rank in 0..shape.vertex_count() {
            disagreement = disagreement.max((field.at(rank, k) - marched.at(rank, k)).abs());
        }
    }

    let text = serde_json::to_string_pretty(&json!({
        "T": t_end,
        "iterations": trace.len(),
        "trace": trace,
        "ratios": ratios,
        "contraction_bound": bound,
        "ratio_ok": ratio_ok,
        "solver_disagreement": disagreement,
    }))?;
    emit(&text, args.out_json.as_deref())?;
    Ok(ratio_ok)
}
