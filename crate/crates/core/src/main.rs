use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use dc_ode::coefficients::{generate_euler_coeffs, generate_trapezoid_coeffs, to_f64};
use dc_ode::harness::{
    compute_reference, convergence_study, format_float, write_report_csv, ReferenceSolution, Truth,
    DEFAULT_SAMPLE_CAP,
};
use dc_ode::problems::{self, BenchmarkProblem};
use dc_ode::stability::stability_scan;
use dc_ode::stream::march;
use dc_ode::{Family, NewtonConfig, SchemeSpec};

#[derive(Parser)]
#[command(name = "dc-ode", version, about = "Deferred-correction ODE solvers and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one benchmark problem and optionally write the trajectory.
    Run(RunArgs),
    /// Measure errors and convergence orders over a list of step sizes.
    Convergence(ConvergenceArgs),
    /// Compute and store a reference solution.
    Reference(ReferenceArgs),
    /// Scan the complex plane for absolute stability.
    Stability(StabilityArgs),
    /// Print the exact correction coefficients.
    Coeffs(CoeffsArgs),
}

#[derive(Args)]
struct ProblemArgs {
    /// oscillator | krogh | robertson | d6 | oregonator | vdp
    #[arg(long)]
    problem: String,
    /// Override the final time.
    #[arg(long)]
    t_end: Option<f64>,
    /// Van der Pol stiffness parameter.
    #[arg(long, default_value_t = 1000.0)]
    mu: f64,
}

impl ProblemArgs {
    fn build(&self) -> Result<BenchmarkProblem> {
        let problem = if self.problem == "vdp" {
            problems::make_vdp(self.mu, 3000.0)
        } else {
            problems::by_name(&self.problem).with_context(|| {
                format!(
                    "unknown problem '{}', expected one of {}",
                    self.problem,
                    problems::PROBLEM_NAMES.join(", ")
                )
            })?
        };
        Ok(match self.t_end {
            Some(t) => problem.with_t_end(t)?,
            None => problem,
        })
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, default_value = "trapezoid")]
    family: Family,
    #[arg(long)]
    order: u32,
    #[arg(long)]
    dt: f64,
    /// CSV file receiving `t, u_1, ..., u_d`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write every `every`-th state only.
    #[arg(long, default_value_t = 1)]
    every: i64,
}

#[derive(Args)]
struct ConvergenceArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, default_value = "trapezoid")]
    family: Family,
    /// Comma-separated scheme orders.
    #[arg(long, value_delimiter = ',', default_value = "2,4,6,8,10")]
    orders: Vec<u32>,
    /// Comma-separated, strictly decreasing step sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    dts: Vec<f64>,
    /// Reference solution file written by `dc-ode reference`.
    #[arg(long, conflicts_with = "exact")]
    reference: Option<PathBuf>,
    /// Compare against the exact solution.
    #[arg(long)]
    exact: bool,
    /// Errors at or below this value are excluded from the order fit.
    #[arg(long, default_value_t = 0.0)]
    floor: f64,
    #[arg(long, default_value_t = DEFAULT_SAMPLE_CAP)]
    cap: usize,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct ReferenceArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, default_value = "trapezoid")]
    family: Family,
    #[arg(long, default_value_t = 10)]
    order: u32,
    #[arg(long)]
    dt: f64,
    #[arg(long, default_value_t = DEFAULT_SAMPLE_CAP)]
    cap: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct StabilityArgs {
    #[arg(long, default_value = "trapezoid")]
    family: Family,
    #[arg(long)]
    order: u32,
    /// Real parts as `start:step:end`.
    #[arg(long, allow_hyphen_values = true)]
    re: String,
    /// Imaginary parts as `start:step:end`.
    #[arg(long, allow_hyphen_values = true)]
    im: String,
    #[arg(long, default_value_t = 400)]
    steps: usize,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CoeffsArgs {
    /// trapezoid | euler
    #[arg(long, default_value = "trapezoid")]
    family: String,
    #[arg(long)]
    p: usize,
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Parses `start:step:end` (or a single value) into the sampled points.
fn parse_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().with_context(|| format!("bad number '{p}' in '{s}'")))
        .collect::<Result<_>>()?;
    match parts.as_slice() {
        [x] => Ok(vec![*x]),
        [a, step, b] => {
            if *step == 0.0 || (b - a) / step < 0.0 {
                bail!("range '{s}' does not progress from start to end");
            }
            let n = ((b - a) / step + 1e-9).floor() as usize + 1;
            Ok((0..n).map(|i| a + step * i as f64).collect())
        }
        _ => bail!("expected start:step:end, got '{s}'"),
    }
}

fn run(args: RunArgs) -> Result<()> {
    let bench = args.problem.build()?;
    let spec = SchemeSpec::new(args.family, args.order)?;
    let newton = NewtonConfig::for_initial_state(bench.problem.u0());
    let mut writer = match &args.out {
        Some(p) => {
            let mut w = csv::Writer::from_path(p)?;
            let mut header = vec!["t".to_string()];
            header.extend((1..=bench.problem.dim()).map(|i| format!("u_{i}")));
            w.write_record(&header)?;
            Some(w)
        }
        None => None,
    };
    let every = args.every.max(1);
    let mut last = (0i64, bench.problem.u0().to_vec());
    let mut max_exact_error: Option<f64> = bench.exact.as_ref().map(|_| 0.0);
    let mut write_error = None;
    let stats = march(&bench.problem, &spec, args.dt, &newton, |n, u| {
        let t = n as f64 * args.dt;
        if let (Some(err), Some(exact)) = (max_exact_error.as_mut(), bench.exact.as_ref()) {
            for (a, b) in u.iter().zip(exact(t)) {
                *err = err.max((a - b).abs());
            }
        }
        if let Some(w) = writer.as_mut() {
            if n % every == 0 && write_error.is_none() {
                let mut rec = vec![format_float(t)];
                rec.extend(u.iter().map(|&x| format_float(x)));
                if let Err(e) = w.write_record(&rec) {
                    write_error = Some(e);
                }
            }
        }
        last.0 = n;
        last.1.copy_from_slice(u);
    })?;
    if let Some(e) = write_error {
        return Err(e.into());
    }
    if let Some(mut w) = writer {
        w.flush()?;
    }
    println!("problem   {}", bench.name());
    println!("scheme    {}", spec.label());
    println!("steps     {}", stats.n_steps);
    println!("t_final   {}", format_float(last.0 as f64 * args.dt));
    for (i, x) in last.1.iter().enumerate() {
        println!("u_{}       {}", i + 1, format_float(*x));
    }
    if let Some(e) = max_exact_error {
        println!("max_abs_error_vs_exact {}", format_float(e));
    }
    println!(
        "newton    {} solves, {} iterations, at most {} per step",
        stats.steps.implicit_solves, stats.steps.newton_iterations, stats.steps.max_newton_iterations
    );
    Ok(())
}

fn convergence(args: ConvergenceArgs) -> Result<()> {
    let bench = args.problem.build()?;
    let newton = NewtonConfig::for_initial_state(bench.problem.u0());
    let reference = match &args.reference {
        Some(p) => Some(ReferenceSolution::load(p).with_context(|| format!("loading {}", p.display()))?),
        None => None,
    };
    let exact = bench.exact.clone();
    let truth = match (&reference, args.exact) {
        (Some(r), _) => Truth::Reference(r),
        (None, true) => Truth::Exact(
            exact
                .as_deref()
                .with_context(|| format!("problem '{}' has no exact solution", bench.name()))?,
        ),
        (None, false) => bail!("pass --reference <file> or --exact"),
    };
    let mut reports = Vec::new();
    for &order in &args.orders {
        let spec = SchemeSpec::new(args.family, order)?;
        let report = convergence_study(&bench, &spec, &args.dts, truth, args.floor, &newton, args.cap)?;
        let orders: Vec<String> = report.orders.iter().map(|o| o.to_string()).collect();
        eprintln!("{} {}: order {}", bench.name(), spec.label(), orders.join(" "));
        reports.push(report);
    }
    write_report_csv(&reports, output(&args.report)?)?;
    Ok(())
}

fn reference(args: ReferenceArgs) -> Result<()> {
    let bench = args.problem.build()?;
    let spec = SchemeSpec::new(args.family, args.order)?;
    let newton = NewtonConfig::for_initial_state(bench.problem.u0());
    let r = compute_reference(&bench, &spec, args.dt, args.cap, &newton, Some(&args.out))?;
    let m = r.meta();
    println!(
        "wrote {}: {} {} k={} steps={} stride={} samples={} sha256={}",
        args.out.display(),
        m.problem,
        spec.label(),
        m.k,
        m.n_steps,
        m.stride,
        m.n_samples,
        m.digest
    );
    Ok(())
}

fn stability(args: StabilityArgs) -> Result<()> {
    let spec = SchemeSpec::new(args.family, args.order)?;
    let re = parse_range(&args.re)?;
    let im = parse_range(&args.im)?;
    let scan = stability_scan(&spec, &re, &im, args.steps)?;
    let mut w = csv::Writer::from_writer(output(&args.out)?);
    w.write_record(["re", "im", "decayed", "max_modulus", "tail_ratio"])?;
    for s in &scan.samples {
        w.write_record([
            format_float(s.re),
            format_float(s.im),
            (s.decayed as u8).to_string(),
            format_float(s.max_modulus),
            format_float(s.tail_ratio),
        ])?;
    }
    w.flush()?;
    for (re, im) in &scan.skipped {
        eprintln!("skipped pole z = {}", Complex64::new(*re, *im));
    }
    eprintln!(
        "{}: {:.1}% of left-half-plane samples decayed",
        spec.label(),
        100.0 * scan.left_half_plane_decay_fraction()
    );
    Ok(())
}

fn coeffs(args: CoeffsArgs) -> Result<()> {
    if args.p == 0 {
        bail!("--p must be at least 1");
    }
    let mut out = output(&None)?;
    match args.family.as_str() {
        "trapezoid" => {
            for (i, c) in generate_trapezoid_coeffs(args.p).iter() {
                writeln!(out, "{i} {}/{} {}", c.numer(), c.denom(), format_float(to_f64(c)))?;
            }
        }
        "euler" => {
            for (i, a) in generate_euler_coeffs(args.p).iter() {
                writeln!(out, "{i} {}/{} {}", a.numer(), a.denom(), format_float(to_f64(a)))?;
            }
        }
        other => bail!("unknown coefficient family '{other}', expected trapezoid or euler"),
    }
    out.flush()?;
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(a) => run(a),
        Command::Convergence(a) => convergence(a),
        Command::Reference(a) => reference(a),
        Command::Stability(a) => stability(a),
        Command::Coeffs(a) => coeffs(a),
    }
}
