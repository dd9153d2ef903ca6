//! `surfflow` command-line driver.
//!
//! Exit codes: 0 success, 2 invalid arguments or parameters, 3 solver did not
//! converge, 4 I/O or malformed input files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use surfflow::geometry::build_geometry;
use surfflow::io::{self, Manifest};
use surfflow::metrics::flow_errors;
use surfflow::model::{energy, energy_gradient, DEFAULT_ALPHA};
use surfflow::solver::solve;
use surfflow::{
    Error, FlowProblem, GridSpec, Method, SolverConfig, SolverReport, SyntheticScene, VectorField,
};

const EXIT_INVALID: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(
    name = "surfflow",
    version,
    about = "Optical flow on evolving graph surfaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate flow between frame pairs of a manifest.
    Flow(FlowArgs),
    /// Render a synthetic scene with ground truth.
    Synth(SynthArgs),
    /// Colour-code a flow file as binary PPM.
    Color(ColorArgs),
    /// Evaluate the energy of a flow file for a frame pair.
    Energy(EnergyArgs),
    /// Compare a flow file against ground truth.
    Eval(EvalArgs),
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("must be positive, got {s}"))
    }
}

#[derive(Args, Clone)]
struct ProblemArgs {
    /// Dataset manifest.
    #[arg(long)]
    manifest: PathBuf,
    /// First frame index.
    #[arg(short = 'i', long = "from", default_value_t = 0)]
    i: usize,
    /// Second frame index, default i + 1.
    #[arg(short = 'j', long = "to")]
    j: Option<usize>,
    /// Weight of the data term.
    #[arg(long, default_value_t = DEFAULT_ALPHA, value_parser = positive)]
    alpha: f64,
    /// Grid spacing, overrides the manifest.
    #[arg(long, value_parser = positive)]
    h: Option<f64>,
    /// Time between consecutive frames, overrides the manifest.
    #[arg(long, value_parser = positive)]
    dt: Option<f64>,
}

#[derive(Args)]
struct FlowArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Process every consecutive pair (i, i + 1).
    #[arg(long, conflicts_with_all = ["i", "j"])]
    all: bool,
    #[arg(long, default_value = "sor", value_parser = parse_method)]
    method: Method,
    /// Stop once the largest gradient component is at most this.
    #[arg(long, default_value_t = 1e-6, value_parser = positive)]
    tol: f64,
    #[arg(long, default_value_t = 50_000)]
    max_iter: usize,
    /// SOR relaxation factor in (0, 2).
    #[arg(long, default_value_t = 1.9)]
    omega: f64,
    /// Output directory.
    #[arg(short, long)]
    out: PathBuf,
    /// Also write a colour-coded PPM per pair.
    #[arg(long)]
    color: bool,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Args)]
struct SynthArgs {
    /// Scene name, e.g. flat-translate, paraboloid-rotate, moving-bump.
    scene: String,
    /// Comma-separated key=value overrides, e.g. "vx=0.5,seed=3".
    #[arg(long, default_value = "")]
    params: String,
    #[arg(long, default_value_t = 128)]
    width: usize,
    #[arg(long, default_value_t = 128)]
    height: usize,
    #[arg(long, default_value_t = 2)]
    frames: usize,
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    h: f64,
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    dt: f64,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct ColorArgs {
    flow: PathBuf,
    #[arg(short, long)]
    out: PathBuf,
    /// Magnitude mapped to full saturation, default the 99th percentile.
    #[arg(long, value_parser = positive)]
    max: Option<f64>,
}

#[derive(Args)]
struct EnergyArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Flow to evaluate.
    #[arg(long)]
    flow: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    flow: PathBuf,
    truth: PathBuf,
}

#[derive(Debug)]
enum Failure {
    Error(Error),
    NotConverged,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Flow(a) => cmd_flow(&a),
        Command::Synth(a) => cmd_synth(&a),
        Command::Color(a) => cmd_color(&a),
        Command::Energy(a) => cmd_energy(&a),
        Command::Eval(a) => cmd_eval(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::NotConverged) => {
            eprintln!("error: solver did not converge");
            ExitCode::from(EXIT_NOT_CONVERGED)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { EXIT_IO } else { EXIT_INVALID })
        }
    }
}

/// Manifest with command-line overrides of `h` and `dt` applied.
fn open_manifest(p: &ProblemArgs) -> Result<Manifest, Error> {
    let mut m = io::read_manifest(&p.manifest)?;
    if let Some(h) = p.h {
        m.spec.h = h;
    }
    if let Some(dt) = p.dt {
        m.spec.dt = dt;
    }
    Ok(m)
}

fn check_pair(m: &Manifest, i: usize, j: usize) -> Result<(), Error> {
    let n = m.frame_paths.len();
    if i < j && j < n {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "frame pair ({i}, {j}) needs 0 <= i < j < {n}"
        )))
    }
}

fn build_problem(m: &Manifest, i: usize, j: usize, alpha: f64) -> Result<FlowProblem, Error> {
    check_pair(m, i, j)?;
    let seq = io::load_frames(m, &[i, j])?;
    let dt = m.spec.dt * (j - i) as f64;
    let spec = GridSpec { dt, ..m.spec };
    let geom = if seq.is_static() {
        build_geometry(seq.height(0), None, &spec)?
    } else {
        build_geometry(seq.height(0), Some(seq.height(1)), &spec)?
    };
    FlowProblem::from_frames(&seq.frames[0], &seq.frames[1], dt, geom, alpha)
}

fn create_dir(dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn report_text(i: usize, j: usize, m: &Manifest, alpha: f64, r: &SolverReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "frame_i={i}");
    let _ = writeln!(s, "frame_j={j}");
    let _ = writeln!(s, "width={}", m.spec.width);
    let _ = writeln!(s, "height={}", m.spec.height);
    let _ = writeln!(s, "alpha={alpha}");
    let _ = writeln!(s, "h={}", m.spec.h);
    let _ = writeln!(s, "dt={}", m.spec.dt);
    let _ = writeln!(s, "static_surface={}", m.is_static());
    let _ = writeln!(s, "method={}", r.method);
    let _ = writeln!(s, "iterations={}", r.iterations);
    let _ = writeln!(s, "grad_inf_norm={:e}", r.grad_inf_norm);
    let _ = writeln!(s, "energy_initial={:e}", r.energy_initial);
    let _ = writeln!(s, "energy_final={:e}", r.energy_final);
    let _ = writeln!(s, "converged={}", r.converged);
    s
}

fn run_pair(
    a: &FlowArgs,
    m: &Manifest,
    i: usize,
    j: usize,
    config: &SolverConfig,
) -> Result<(String, bool), Error> {
    let alpha = a.problem.alpha;
    let problem = build_problem(m, i, j, alpha)?;
    let (u, report) = solve(&problem, config, None)?;
    let stem = a.out.join(format!("flow_{i:03}_{j:03}"));
    io::write_flow(stem.with_extension("flo"), &u)?;
    let text = report_text(i, j, m, alpha, &report);
    write_text(&stem.with_extension("txt"), &text)?;
    if a.color {
        io::write_ppm(stem.with_extension("ppm"), &io::colorize(&u, None)?)?;
    }
    Ok((text, report.converged))
}

fn cmd_flow(a: &FlowArgs) -> Outcome {
    let m = open_manifest(&a.problem)?;
    let config = SolverConfig {
        method: a.method,
        tol: a.tol,
        max_iter: a.max_iter,
        omega: a.omega,
    };
    config.validate()?;
    let pairs: Vec<(usize, usize)> = if a.all {
        (1..m.frame_paths.len()).map(|j| (j - 1, j)).collect()
    } else {
        let i = a.problem.i;
        vec![(i, a.problem.j.unwrap_or(i + 1))]
    };
    if pairs.is_empty() {
        return Err(Error::InvalidParameter("manifest has fewer than two frames".into()).into());
    }
    for &(i, j) in &pairs {
        check_pair(&m, i, j)?;
    }
    create_dir(&a.out)?;
    let results: Vec<Result<(String, bool), Error>> = pairs
        .par_iter()
        .map(|&(i, j)| run_pair(a, &m, i, j, &config))
        .collect();
    let mut all_converged = true;
    for (k, r) in results.into_iter().enumerate() {
        let (text, converged) = r?;
        if k > 0 {
            println!();
        }
        print!("{text}");
        all_converged &= converged;
    }
    if all_converged {
        Ok(())
    } else {
        Err(Failure::NotConverged)
    }
}

fn cmd_synth(a: &SynthArgs) -> Outcome {
    let spec = GridSpec::new(a.width, a.height, a.h, a.dt)?;
    let scene = SyntheticScene::from_name(&a.scene, &a.params, spec, a.frames)?;
    let seq = scene.render()?;
    create_dir(&a.out)?;
    let mut frame_paths = Vec::with_capacity(a.frames);
    for (k, f) in seq.frames.iter().enumerate() {
        let p = a.out.join(format!("frame_{k:03}.pfm"));
        io::write_float_image(&p, f)?;
        frame_paths.push(p);
    }
    let heights = if scene.surface.is_static() {
        &seq.heights[..1]
    } else {
        &seq.heights[..]
    };
    let mut height_paths = Vec::with_capacity(heights.len());
    for (k, z) in heights.iter().enumerate() {
        let p = a.out.join(format!("height_{k:03}.pfm"));
        io::write_float_image(&p, z)?;
        height_paths.push(p);
    }
    for (k, t) in seq.truth.iter().enumerate() {
        io::write_flow(a.out.join(format!("truth_{k:03}.flo")), t)?;
    }
    let manifest = Manifest {
        version: 1,
        spec,
        frame_paths,
        height_paths,
        intensity_range: (0.0, 1.0),
    };
    let path = a.out.join("manifest.toml");
    manifest.write(&path)?;
    println!("scene={}", a.scene);
    println!("frames={}", a.frames);
    println!("width={}", a.width);
    println!("height={}", a.height);
    println!("static_surface={}", scene.surface.is_static());
    println!("manifest={}", path.display());
    Ok(())
}

/// Reads a flow file as a field on a unit grid of its own size.
fn read_flow_any(path: &Path) -> Result<VectorField, Error> {
    let f = io::read_flow(path)?;
    f.to_field(GridSpec::new(f.width, f.height, 1.0, 1.0)?)
}

fn cmd_color(a: &ColorArgs) -> Outcome {
    let u = read_flow_any(&a.flow)?;
    io::write_ppm(&a.out, &io::colorize(&u, a.max)?)?;
    Ok(())
}

fn cmd_energy(a: &EnergyArgs) -> Outcome {
    let p = &a.problem;
    let m = open_manifest(p)?;
    let j = p.j.unwrap_or(p.i + 1);
    let problem = build_problem(&m, p.i, j, p.alpha)?;
    let u = io::read_flow_field(&a.flow, problem.spec)?;
    println!("frame_i={}", p.i);
    println!("frame_j={j}");
    println!("energy={:e}", energy(&problem, &u)?);
    println!(
        "grad_inf_norm={:e}",
        energy_gradient(&problem, &u)?.max_abs()
    );
    Ok(())
}

fn cmd_eval(a: &EvalArgs) -> Outcome {
    let u = read_flow_any(&a.flow)?;
    let truth = io::read_flow(&a.truth)?;
    let spec = *u.spec();
    if (truth.width, truth.height) != (spec.width, spec.height) {
        return Err(Error::DimensionMismatch {
            path: a.truth.clone(),
            expected: format!("{}x{}", spec.width, spec.height),
            found: format!("{}x{}", truth.width, truth.height),
        }
        .into());
    }
    let e = flow_errors(&u, &truth.to_field(spec)?)?;
    println!("mean_epe={}", e.mean_epe);
    println!("median_epe={}", e.median_epe);
    println!("max_epe={}", e.max_epe);
    println!("mean_angular_error_deg={}", e.mean_angular);
    println!("max_magnitude={}", e.max_magnitude);
    Ok(())
}
