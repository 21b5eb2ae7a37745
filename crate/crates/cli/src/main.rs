use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum, ValueHint};
use nrflat::boundary::{sample_boundary, samples_to_csv, to_svg};
use nrflat::family::{build_family_matrix, predicted_flats, ymax};
use nrflat::flatdetect::{analyze_with, AnalyzeOptions, DEFAULT_N_PHI};
use nrflat::io::{format_float, to_deterministic_json, write_atomic, MatrixFile};
use nrflat::verify::{run_suite, Suite, VerifyConfig};
use nrflat::{FamilyParams, Matrix, NrError};

const EXIT_INVALID: u8 = 2;
const EXIT_MISMATCH: u8 = 3;

/// Flat portions on the boundary of the numerical range of a 4x4 matrix.
#[derive(Parser)]
#[command(name = "nrflat", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect flat portions of W(A) for a matrix file.
    Analyze(AnalyzeOpts),
    /// Construct a member of the two-flat nilpotent family and print its predicted flats.
    Family(FamilyOpts),
    /// Run the built-in acceptance checks.
    Verify(VerifyOpts),
    /// Sample the boundary of W(A) and export it.
    Boundary(BoundaryOpts),
}

#[derive(Args)]
struct Outputs {
    /// Write the report as JSON.
    #[arg(long, value_hint = ValueHint::FilePath)]
    out_json: Option<PathBuf>,
    /// Write the sampled boundary as CSV.
    #[arg(long, value_hint = ValueHint::FilePath)]
    out_csv: Option<PathBuf>,
    /// Write an SVG plot of the boundary and its flats.
    #[arg(long, value_hint = ValueHint::FilePath)]
    out_svg: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeOpts {
    /// Matrix file: {"dim": n, "re": [[..]], "im": [[..]]}.
    #[arg(value_hint = ValueHint::FilePath)]
    input: PathBuf,
    #[command(flatten)]
    out: Outputs,
    /// Angular grid of the eigenvalue sweep (also the boundary sample count).
    #[arg(long, default_value_t = DEFAULT_N_PHI)]
    n_phi: usize,
    /// Singularity search radius in the (u, v) plane.
    #[arg(long)]
    radius: Option<f64>,
    /// Seed grid resolution of the singularity search.
    #[arg(long, default_value_t = 64)]
    grid_n: usize,
}

#[derive(Args)]
struct FamilyOpts {
    #[arg(long)]
    d: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    x: Option<f64>,
    /// Defaults to the largest admissible value for d, theta and x.
    #[arg(long)]
    y: Option<f64>,
    /// Rotation e^{it} applied to the whole matrix.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    t: f64,
    /// Exchange the roles of delta1 and delta2.
    #[arg(long)]
    swap: bool,
    /// One-parameter member A_k.
    #[arg(long)]
    k: Option<f64>,
    /// Use the longest-flat member x = y for the given d and theta.
    #[arg(long)]
    maximal: bool,
    /// Read --theta and --t in degrees.
    #[arg(long)]
    degrees: bool,
    /// Write the constructed matrix as a matrix file.
    #[arg(long, value_hint = ValueHint::FilePath)]
    out_matrix: Option<PathBuf>,
    #[command(flatten)]
    out: Outputs,
    /// Boundary samples for the CSV and SVG exports.
    #[arg(long, default_value_t = DEFAULT_N_PHI)]
    n: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Paper,
    Random,
    All,
}

#[derive(Args)]
struct VerifyOpts {
    #[arg(long, value_enum, default_value_t = SuiteArg::All)]
    suite: SuiteArg,
    /// Random matrices for the flat-count bound.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Write the results as JSON.
    #[arg(long, value_hint = ValueHint::FilePath)]
    out_json: Option<PathBuf>,
}

#[derive(Args)]
struct BoundaryOpts {
    #[arg(value_hint = ValueHint::FilePath)]
    input: PathBuf,
    /// Number of support directions.
    #[arg(long, default_value_t = 2048)]
    n: usize,
    /// CSV output; printed to stdout when neither output is given.
    #[arg(long, value_hint = ValueHint::FilePath)]
    out_csv: Option<PathBuf>,
    #[arg(long, value_hint = ValueHint::FilePath)]
    out_svg: Option<PathBuf>,
}

/// Error carrying an explicit exit code.
#[derive(Debug)]
struct Exit(u8, String);

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.1)
    }
}

impl std::error::Error for Exit {}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Exit(EXIT_INVALID, msg.into()).into()
}

/// Library errors caused by the input map to the validation exit code.
fn classify(e: NrError) -> anyhow::Error {
    match e {
        NrError::Parse(_) | NrError::Domain(_) | NrError::Shape(_) | NrError::Dimension { .. } | NrError::Io { .. } => {
            invalid(e.to_string())
        }
        other => other.into(),
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("NR_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| invalid(format!("NR_THREADS must be a non-negative integer (got {v:?})")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    Ok(())
}

fn write_out(path: &Path, contents: &str) -> Result<()> {
    write_atomic(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn load(path: &Path) -> Result<Matrix> {
    MatrixFile::read(path).and_then(|m| m.to_matrix()).map_err(classify)
}

fn print_matrix(a: &Matrix) {
    for i in 0..a.dim() {
        let row: Vec<String> = (0..a.dim())
            .map(|j| {
                let z = a.get(i, j);
                format!("{:>10.6}{:+.6}i", z.re, z.im)
            })
            .collect();
        println!("  [{}]", row.join("  "));
    }
}

fn fmt_point(p: [f64; 2]) -> String {
    format!("({}, {})", format_float(p[0]), format_float(p[1]))
}

fn cmd_analyze(o: &AnalyzeOpts) -> Result<u8> {
    let a = load(&o.input)?;
    if o.n_phi < 360 {
        return Err(invalid(format!("--n-phi must be at least 360 (got {})", o.n_phi)));
    }
    if o.grid_n < 2 {
        return Err(invalid("--grid-n must be at least 2"));
    }
    if let Some(r) = o.radius.filter(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(invalid(format!("--radius must be positive (got {r})")));
    }
    let opts = AnalyzeOptions {
        n_phi: o.n_phi,
        radius: o.radius,
        grid_n: o.grid_n,
        ..AnalyzeOptions::default()
    };
    let report = analyze_with(&a, &opts).map_err(classify)?;

    println!("{}: {} flat(s), {} singularities", o.input.display(), report.flats.len(), report.singularities.len());
    for (k, f) in report.flats.iter().enumerate() {
        println!(
            "  flat {}: length {}  distance {}  normal {}  [{:?}]",
            k + 1,
            format_float(f.length),
            format_float(f.distance),
            format_float(f.normal_angle),
            f.source
        );
        println!("    {} -> {}", fmt_point(f.endpoint1), fmt_point(f.endpoint2));
    }
    if let Some(s) = &report.symmetry {
        println!("  symmetry axis {}  hausdorff {}", format_float(s.axis_angle), format_float(s.hausdorff));
    }
    for d in &report.cross_check.discrepancies {
        println!("  cross-check {:?}: {}", d.kind, d.detail);
    }

    if let Some(p) = &o.out.out_json {
        write_out(p, &to_deterministic_json(&report)?)?;
    }
    if o.out.out_csv.is_some() || o.out.out_svg.is_some() {
        let (poly, samples) = sample_boundary(&a, o.n_phi).map_err(classify)?;
        if let Some(p) = &o.out.out_csv {
            write_out(p, &samples_to_csv(&samples))?;
        }
        if let Some(p) = &o.out.out_svg {
            write_out(p, &to_svg(&poly, &report.flats, report.symmetry.as_ref().map(|s| s.axis_angle)))?;
        }
    }
    Ok(if report.cross_check.matched { 0 } else { EXIT_MISMATCH })
}

fn family_params(o: &FamilyOpts) -> Result<FamilyParams> {
    let ang = |v: f64| if o.degrees { v.to_radians() } else { v };
    let explicit = o.x.is_some() || o.y.is_some();
    let modes = [o.k.is_some(), o.maximal, explicit || (!o.maximal && o.k.is_none())];
    if modes.iter().filter(|m| **m).count() != 1 {
        return Err(invalid("give exactly one of: --d --theta --x --y | --k | --d --theta --maximal"));
    }
    let t = ang(o.t);
    let need = |name: &str, v: Option<f64>| v.ok_or_else(|| invalid(format!("--{name} is required in this mode")));
    let p = if let Some(k) = o.k {
        if o.d.is_some() || o.theta.is_some() {
            return Err(invalid("--k fixes d and theta; do not pass them"));
        }
        let mut p = FamilyParams::from_k(k).map_err(classify)?;
        if o.swap {
            p.swap_deltas = !p.swap_deltas;
        }
        FamilyParams::new(p.d, p.theta, p.x, p.y, t, p.swap_deltas)
    } else if o.maximal {
        let (d, theta) = (need("d", o.d)?, ang(need("theta", o.theta)?));
        FamilyParams::maximal(d, theta, t).map(|p| FamilyParams { swap_deltas: o.swap, ..p })
    } else {
        let (d, theta) = (need("d", o.d)?, ang(need("theta", o.theta)?));
        let x = need("x", o.x)?;
        let y = match o.y {
            Some(y) => y,
            None => ymax(d, theta, x).map_err(classify)?,
        };
        FamilyParams::new(d, theta, x, y, t, o.swap)
    };
    p.map_err(classify)
}

fn cmd_family(o: &FamilyOpts) -> Result<u8> {
    let params = family_params(o)?;
    let a = build_family_matrix(&params).map_err(classify)?;
    let pred = predicted_flats(&params).map_err(classify)?;

    println!(
        "d={} theta={} x={} y={} t={}",
        format_float(params.d),
        format_float(params.theta),
        format_float(params.x),
        format_float(params.y),
        format_float(params.t)
    );
    println!("delta1={} delta2={}", format_float(pred.delta1), format_float(pred.delta2));
    println!("A =");
    print_matrix(&a);
    println!("L={}", format_float(pred.length));
    println!("distance={}", format_float(pred.distance));
    println!("angle={}", format_float(pred.angle_between_lines));
    println!("symmetry_line={}", format_float(pred.symmetry_line_angle));
    println!("trace_invariant={}", format_float(pred.trace_invariant));
    for (k, f) in pred.flats.iter().enumerate() {
        println!("flat {}: {} -> {}", k + 1, fmt_point(f.endpoint1), fmt_point(f.endpoint2));
    }

    if let Some(p) = &o.out_matrix {
        write_out(p, &to_deterministic_json(&MatrixFile::from_matrix(&a))?)?;
    }
    if let Some(p) = &o.out.out_json {
        write_out(p, &to_deterministic_json(&pred)?)?;
    }
    if o.out.out_csv.is_some() || o.out.out_svg.is_some() {
        if o.n < 64 {
            return Err(invalid("--n must be at least 64"));
        }
        let (poly, samples) = sample_boundary(&a, o.n).map_err(classify)?;
        if let Some(p) = &o.out.out_csv {
            write_out(p, &samples_to_csv(&samples))?;
        }
        if let Some(p) = &o.out.out_svg {
            write_out(p, &to_svg(&poly, &pred.flats, Some(pred.symmetry_line_angle)))?;
        }
    }
    Ok(0)
}

fn cmd_verify(o: &VerifyOpts) -> Result<u8> {
    let mut cfg = VerifyConfig { seed: o.seed, ..VerifyConfig::default() };
    if let Some(n) = o.samples {
        cfg.flat_count_samples = n;
    }
    let suite = match o.suite {
        SuiteArg::Paper => Suite::Paper,
        SuiteArg::Random => Suite::Random,
        SuiteArg::All => Suite::All,
    };
    let results = run_suite(suite, &cfg);
    for r in &results {
        println!("{}", r.line());
    }
    if let Some(p) = &o.out_json {
        write_out(p, &to_deterministic_json(&results)?)?;
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} passed, {} failed", results.len() - failed, failed);
    Ok(if failed == 0 { 0 } else { 1 })
}

fn cmd_boundary(o: &BoundaryOpts) -> Result<u8> {
    let a = load(&o.input)?;
    if o.n < 64 {
        return Err(invalid(format!("--n must be at least 64 (got {})", o.n)));
    }
    let (poly, samples) = sample_boundary(&a, o.n).map_err(classify)?;
    let csv = samples_to_csv(&samples);
    if let Some(p) = &o.out_csv {
        write_out(p, &csv)?;
    }
    if let Some(p) = &o.out_svg {
        write_out(p, &to_svg(&poly, &[], None))?;
    }
    if o.out_csv.is_none() && o.out_svg.is_none() {
        print!("{csv}");
    }
    Ok(0)
}

fn run(cli: &Cli) -> Result<u8> {
    configure_threads()?;
    match &cli.command {
        Command::Analyze(o) => cmd_analyze(o),
        Command::Family(o) => cmd_family(o),
        Command::Verify(o) => cmd_verify(o),
        Command::Boundary(o) => cmd_boundary(o),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<Exit>().map_or(1, |x| x.0);
            ExitCode::from(code)
        }
    }
}
