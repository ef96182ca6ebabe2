//! Command-line front end: `solve` for single instances, `sweep` for
//! parameter-space phase diagrams, `verify` for the checker suites,
//! and `kernel build` for precomputing kernel caches.
//!
//! Exit codes: 0 success (all checks pass / solver converged),
//! 1 runtime failure (solver did not converge, I/O error, check
//! failed), 2 usage or validation error.

use crate::error::{Error, Result};
use crate::functional::{self, Params, Verdict};
use crate::kernel::{self, KernelMatrix};
use crate::radial::{self, RadialFunction, RadialGrid};
use crate::solver::{self, SolutionFile, SolverConfig};
use crate::verify::{self, CheckReport};
use clap::{Args, Parser, Subcommand};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// Environment variable naming the kernel cache directory (overridden
/// by --cache-dir and the config-file key `cache_dir`).
pub const CACHE_DIR_ENV: &str = "HENON_CACHE_DIR";

const SWEEPABLE: [&str; 6] = ["q", "alpha", "beta", "gamma", "s", "p"];

#[derive(Parser)]
#[command(
    name = "henon",
    about = "Radial ground states of the mixed local-nonlocal weighted problem",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a single instance and write a report.
    Solve(SolveArgs),
    /// Sweep parameter ranges into a CSV phase diagram.
    Sweep(SweepArgs),
    /// Run a named verification suite.
    Verify(VerifyArgs),
    /// Kernel cache maintenance.
    Kernel(KernelCmd),
}

/// Problem and discretization flags shared by all subcommands. Every
/// flag mirrors a config-file key; flags override file values.
#[derive(Args, Clone, Debug, Default)]
struct ProblemArgs {
    /// Space dimension.
    #[arg(long = "N")]
    n: Option<i64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    /// Fractional order in (0,1], forced to 1 when gamma > 0.
    #[arg(long)]
    s: Option<f64>,
    /// Local-nonlocal mix in [0,1].
    #[arg(long)]
    gamma: Option<f64>,
    /// Source weight exponent.
    #[arg(long)]
    alpha: Option<f64>,
    /// Confining weight exponent.
    #[arg(long)]
    beta: Option<f64>,
    /// Truncation radius.
    #[arg(long = "R")]
    r_max: Option<f64>,
    /// Number of mesh cells.
    #[arg(long = "M")]
    cells: Option<usize>,
    /// Mesh grading exponent (>= 1).
    #[arg(long)]
    grading: Option<f64>,
    /// Residual tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Key=value configuration file mirroring these flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Kernel cache directory (also via HENON_CACHE_DIR).
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Report file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Swept range, repeatable: NAME=START:STOP:STEP with NAME among
    /// q, alpha, beta, gamma, s, p.
    #[arg(long = "sweep", value_name = "NAME=START:STOP:STEP")]
    sweeps: Vec<String>,
    /// CSV output path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Suite: strauss | interpolation | compactness | degiorgi |
    /// scaling | pohozaev | kernel-oracle | gradient.
    suite: String,
    #[command(flatten)]
    problem: ProblemArgs,
    /// Monte Carlo sample count (kernel-oracle), e.g. 1e7.
    #[arg(long)]
    samples: Option<String>,
    /// Solution file to check (degiorgi, strauss); generated when
    /// omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Report file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct KernelCmd {
    #[command(subcommand)]
    action: KernelAction,
}

#[derive(Subcommand, Debug)]
enum KernelAction {
    /// Assemble the kernel matrix for the given grid and parameters
    /// and write it to the cache directory.
    Build(KernelBuildArgs),
}

#[derive(Args, Debug)]
struct KernelBuildArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Output directory; defaults to the cache directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Fully resolved configuration: flag > config file > default.
#[derive(Debug, Clone)]
struct Resolved {
    params: Params,
    r_max: f64,
    cells: usize,
    grading: f64,
    tol: f64,
    seed: u64,
    cache_dir: Option<PathBuf>,
}

/// Parse a plain `key = value` config file; '#' starts a comment.
fn parse_config_file(path: &Path) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path)?;
    let mut map = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!(
                "{}:{}: expected key = value, got {raw:?}",
                path.display(),
                lineno + 1
            ))
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn config_get<T: std::str::FromStr>(map: &HashMap<String, String>, key: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    match map.get(key) {
        None => Ok(None),
        Some(v) => v
            .parse::<T>()
            .map(Some)
            .map_err(|e| Error::Config(format!("config key {key}: cannot parse {v:?}: {e}"))),
    }
}

impl ProblemArgs {
    /// Merge flags, config file, environment, and defaults.
    fn resolve(&self) -> Result<Resolved> {
        let file = match &self.config {
            Some(path) => parse_config_file(path)?,
            None => HashMap::new(),
        };
        macro_rules! pick {
            ($flag:expr, $key:literal, $default:expr) => {
                match $flag {
                    Some(v) => v,
                    None => config_get(&file, $key)?.unwrap_or($default),
                }
            };
        }
        let n = pick!(self.n, "N", 3);
        let p = pick!(self.p, "p", 2.0);
        let q = pick!(self.q, "q", 4.0);
        let s = pick!(self.s, "s", 1.0);
        let gamma = pick!(self.gamma, "gamma", 1.0);
        let alpha = pick!(self.alpha, "alpha", 0.0);
        let beta = pick!(self.beta, "beta", 2.0);
        let r_max = pick!(self.r_max, "R", 15.0);
        let cells = pick!(self.cells, "M", 400);
        let grading = pick!(self.grading, "grading", 2.0);
        let tol = pick!(self.tol, "tol", 1e-6);
        let seed = pick!(self.seed, "seed", 2024);
        let cache_dir = match &self.cache_dir {
            Some(d) => Some(d.clone()),
            None => match config_get::<String>(&file, "cache_dir")? {
                Some(d) => Some(PathBuf::from(d)),
                None => std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from),
            },
        };
        let params = Params::new(n, p, q, s, gamma, alpha, beta)?;
        Ok(Resolved {
            params,
            r_max,
            cells,
            grading,
            tol,
            seed,
            cache_dir,
        })
    }
}

impl Resolved {
    fn grid(&self) -> Result<Arc<RadialGrid>> {
        Ok(Arc::new(radial::make_grid(
            self.params.dimension(),
            self.r_max,
            self.cells,
            self.grading,
        )?))
    }

    /// Kernel matrix, from the cache directory when one is set; None
    /// for the purely local case s = 1.
    fn kernel(&self, grid: &RadialGrid) -> Result<Option<KernelMatrix>> {
        if self.params.s() >= 1.0 {
            return Ok(None);
        }
        Ok(Some(kernel::load_or_assemble(
            self.cache_dir.as_deref(),
            grid,
            &self.params,
        )?))
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve(args) => run_solve(&args),
        Command::Sweep(args) => run_sweep(&args),
        Command::Verify(args) => run_verify(&args),
        Command::Kernel(cmd) => match cmd.action {
            KernelAction::Build(args) => run_kernel_build(&args),
        },
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_)
                | Error::InvalidDimension(_)
                | Error::Precondition(_)
                | Error::NotApplicable(_) => 2,
                _ => 1,
            }
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            let mut file = std::fs::File::create(path)?;
            file.write_all(text.as_bytes())?;
            file.write_all(b"\n")?;
        }
        None => println!("{text}"),
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

fn run_solve(args: &SolveArgs) -> Result<i32> {
    let resolved = args.problem.resolve()?;
    let params = resolved.params;
    if params.q() <= params.p() {
        return Err(Error::Config("q must exceed p".into()));
    }
    let grid = resolved.grid()?;
    let kernel = resolved.kernel(&grid)?;
    let report = functional::classify(&params);
    eprintln!("classification: {}", report.verdict);
    if report.verdict == Verdict::NonexistenceGuaranteed {
        eprintln!("warning: parameters are in the nonexistence regime; solving anyway");
    }
    let config = SolverConfig {
        residual_tolerance: resolved.tol,
        seed: resolved.seed,
        max_iterations: args
            .max_iterations
            .unwrap_or(SolverConfig::default().max_iterations),
        restarts: args.restarts.unwrap_or(SolverConfig::default().restarts),
        ..SolverConfig::default()
    };
    let solve = solver::solve_ground_state(&params, &grid, kernel.as_ref(), &config)?;
    eprintln!(
        "converged: {} (residual {:.3e} after {} iterations), nehari_level {:.9e}",
        solve.converged, solve.residual, solve.iterations, solve.nehari_level
    );
    let payload = serde_json::to_string_pretty(&solve.to_file(&params))?;
    emit(args.out.as_deref(), &payload)?;
    Ok(if solve.converged { 0 } else { 1 })
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

/// One swept parameter: name plus the inclusive value list.
#[derive(Debug, Clone)]
struct SweepAxis {
    name: String,
    values: Vec<f64>,
}

fn parse_sweep(text: &str) -> Result<SweepAxis> {
    let (name, range) = text
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("sweep {text:?}: expected NAME=START:STOP:STEP")))?;
    let name = name.trim().to_string();
    if !SWEEPABLE.contains(&name.as_str()) {
        return Err(Error::Config(format!(
            "sweep parameter {name:?} not among {SWEEPABLE:?}"
        )));
    }
    let parts: Vec<&str> = range.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!(
            "sweep {text:?}: expected START:STOP:STEP"
        )));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("sweep {text:?}: {e}")))
        })
        .collect::<Result<_>>()?;
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0) || stop < start {
        return Err(Error::Config(format!(
            "sweep {text:?}: empty range (need step > 0 and stop >= start)"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    let values = (0..count).map(|i| start + step * i as f64).collect();
    Ok(SweepAxis { name, values })
}

fn with_swept(params: &Params, names: &[&str], values: &[f64]) -> Result<Params> {
    let mut v = (
        params.dimension(),
        params.p(),
        params.q(),
        params.s(),
        params.gamma(),
        params.alpha(),
        params.beta(),
    );
    for (name, &value) in names.iter().zip(values.iter()) {
        match *name {
            "p" => v.1 = value,
            "q" => v.2 = value,
            "s" => v.3 = value,
            "gamma" => v.4 = value,
            "alpha" => v.5 = value,
            "beta" => v.6 = value,
            _ => unreachable!("validated sweep name"),
        }
    }
    Params::new(v.0, v.1, v.2, v.3, v.4, v.5, v.6)
}

/// Render an f64 for CSV: shortest round-trip representation.
fn csv_num(x: f64) -> String {
    format!("{x}")
}

fn run_sweep(args: &SweepArgs) -> Result<i32> {
    let resolved = args.problem.resolve()?;
    if args.sweeps.is_empty() {
        return Err(Error::Config(
            "sweep needs at least one --sweep range".into(),
        ));
    }
    let axes: Vec<SweepAxis> = args
        .sweeps
        .iter()
        .map(|t| parse_sweep(t))
        .collect::<Result<_>>()?;
    let names: Vec<&str> = axes.iter().map(|a| a.name.as_str()).collect();
    let grid = resolved.grid()?;

    // Cartesian product in axis order (first axis outermost).
    let mut tuples: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in &axes {
        let mut next = Vec::with_capacity(tuples.len() * axis.values.len());
        for prefix in &tuples {
            for &v in &axis.values {
                let mut t = prefix.clone();
                t.push(v);
                next.push(t);
            }
        }
        tuples = next;
    }

    // Instantiate parameter tuples, skipping invalid combinations.
    let mut instances: Vec<(Vec<f64>, Params)> = Vec::with_capacity(tuples.len());
    for t in tuples {
        match with_swept(&resolved.params, &names, &t) {
            Ok(p) => instances.push((t, p)),
            Err(e) => eprintln!("skipping tuple {names:?} = {t:?}: {e}"),
        }
    }
    if instances.is_empty() {
        return Err(Error::Config(
            "sweep produced no valid parameter tuples".into(),
        ));
    }

    // Kernel caches shared across tuples with the same (s, p); the
    // grid is common to the whole sweep.
    let mut kernels: HashMap<(u64, u64), KernelMatrix> = HashMap::new();
    for (_, p) in &instances {
        if p.s() < 1.0 {
            let key = (p.s().to_bits(), p.p().to_bits());
            if !kernels.contains_key(&key) {
                kernels.insert(
                    key,
                    kernel::load_or_assemble(resolved.cache_dir.as_deref(), &grid, p)?,
                );
            }
        }
    }

    let config = SolverConfig {
        residual_tolerance: resolved.tol,
        seed: resolved.seed,
        max_iterations: args
            .max_iterations
            .unwrap_or(SolverConfig::default().max_iterations),
        restarts: args.restarts.unwrap_or(SolverConfig::default().restarts),
        ..SolverConfig::default()
    };

    // Solve tuples in parallel; rows are emitted in tuple order.
    let rows = crate::par::map_indexed(instances.len(), |i| {
        let (_, p) = &instances[i];
        let verdict = functional::classify(p).verdict;
        let kern = if p.s() < 1.0 {
            kernels.get(&(p.s().to_bits(), p.p().to_bits()))
        } else {
            None
        };
        let solved = if p.q() > p.p() {
            solver::solve_ground_state(p, &grid, kern, &config).ok()
        } else {
            None
        };
        let (converged, level, residual, conc, peak) = match &solved {
            Some(r) => (
                r.converged.to_string(),
                csv_num(r.nehari_level),
                csv_num(r.residual),
                csv_num(r.diagnostics.concentration_index),
                csv_num(r.diagnostics.peak_radius),
            ),
            None => (
                "false".to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ),
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            p.dimension(),
            csv_num(p.p()),
            csv_num(p.q()),
            csv_num(p.s()),
            csv_num(p.gamma()),
            csv_num(p.alpha()),
            csv_num(p.beta()),
            csv_num(resolved.r_max),
            resolved.cells,
            verdict,
            converged,
            level,
            residual,
            conc,
            peak
        )
    });

    let mut csv = String::from(
        "N,p,q,s,gamma,alpha,beta,R,M,verdict,converged,nehari_level,residual,concentration_index,peak_radius\n",
    );
    for row in &rows {
        csv.push_str(row);
        csv.push('\n');
    }
    std::fs::write(&args.out, &csv)?;

    // Companion plot data for two-axis sweeps: one (x, y, class)
    // record per grid point.
    if axes.len() == 2 {
        let plot_path = plot_data_path(&args.out);
        let mut plot = String::from("x,y,class\n");
        for (t, p) in &instances {
            plot.push_str(&format!(
                "{},{},{}\n",
                csv_num(t[0]),
                csv_num(t[1]),
                functional::classify(p).verdict
            ));
        }
        std::fs::write(&plot_path, &plot)?;
        eprintln!("plot data written to {}", plot_path.display());
    }
    eprintln!("{} rows written to {}", rows.len(), args.out.display());
    Ok(0)
}

/// name.csv -> name.plot.csv (appends when there is no extension).
fn plot_data_path(out: &Path) -> PathBuf {
    match out.extension().and_then(|e| e.to_str()) {
        Some(ext) => out.with_extension(format!("plot.{ext}")),
        None => out.with_extension("plot"),
    }
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

fn parse_samples(text: Option<&str>, default: u64) -> Result<u64> {
    match text {
        None => Ok(default),
        Some(t) => {
            let v: f64 = t
                .parse()
                .map_err(|e| Error::Config(format!("--samples {t:?}: {e}")))?;
            if !(v >= 1.0) {
                return Err(Error::Config("--samples must be at least 1".into()));
            }
            Ok(v as u64)
        }
    }
}

/// Seeded bump family used by the statistical suites.
fn bump_family(grid: &Arc<RadialGrid>, count: usize, seed: u64) -> Vec<RadialFunction> {
    let r_max = grid.truncation_radius();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let center: f64 = 0.4 * r_max * rng.gen::<f64>();
            let width = r_max * (0.05 + 0.2 * rng.gen::<f64>());
            let height = 0.5 + 2.0 * rng.gen::<f64>();
            RadialFunction::from_fn(grid.clone(), move |r| {
                let z = (r - center) / width;
                height * (-z * z).exp()
            })
        })
        .collect()
}

/// Load the input solution or quickly solve the resolved instance.
fn profile_for_verify(args: &VerifyArgs, resolved: &Resolved) -> Result<RadialFunction> {
    if let Some(path) = &args.input {
        let text = std::fs::read_to_string(path)?;
        let file: SolutionFile = serde_json::from_str(&text)?;
        return file.to_solution();
    }
    let grid = resolved.grid()?;
    let kernel = resolved.kernel(&grid)?;
    let config = SolverConfig {
        residual_tolerance: resolved.tol.max(1e-5),
        seed: resolved.seed,
        restarts: 2,
        ..SolverConfig::default()
    };
    Ok(solver::solve_ground_state(&resolved.params, &grid, kernel.as_ref(), &config)?.solution)
}

fn run_verify(args: &VerifyArgs) -> Result<i32> {
    let resolved = args.problem.resolve()?;
    let params = resolved.params;
    let report = match args.suite.as_str() {
        "pohozaev" => {
            let r = verify::pohozaev_sign_check(&params, 1000, resolved.seed)?;
            println!("threshold: {}", r.threshold);
            CheckReport {
                name: "pohozaev".into(),
                params,
                pass: r.consistent,
                measured: r.threshold,
                bound: params.p_star().unwrap_or(f64::INFINITY),
                tolerance: 0.0,
            }
        }
        "strauss" => {
            let grid = resolved.grid()?;
            let kernel = resolved.kernel(&grid)?;
            let family = bump_family(&grid, 50, resolved.seed);
            let max_est = |g: &Arc<RadialGrid>, k: Option<&KernelMatrix>| -> Result<f64> {
                let fam = bump_family(g, 50, resolved.seed);
                let mut worst = 0.0f64;
                for f in &fam {
                    worst = worst.max(verify::strauss_check(f, &params, k)?.c_est);
                }
                Ok(worst)
            };
            let coarse = {
                let mut worst = 0.0f64;
                for f in &family {
                    worst = worst.max(verify::strauss_check(f, &params, kernel.as_ref())?.c_est);
                }
                worst
            };
            let fine_grid = Arc::new(radial::make_grid(
                params.dimension(),
                resolved.r_max,
                2 * resolved.cells,
                resolved.grading,
            )?);
            let fine_kernel = resolved.kernel(&fine_grid)?;
            let fine = max_est(&fine_grid, fine_kernel.as_ref())?;
            let drift = (fine - coarse).abs() / coarse;
            CheckReport {
                name: "strauss".into(),
                params,
                pass: coarse.is_finite() && drift < 0.10,
                measured: coarse,
                bound: fine,
                tolerance: 0.10,
            }
        }
        "interpolation" => {
            let grid = resolved.grid()?;
            let kernel = resolved.kernel(&grid)?;
            let family = bump_family(&grid, 20, resolved.seed);
            let r = verify::interpolation_check(&family, &params, kernel.as_ref())?;
            let doubled: Vec<RadialFunction> = family.iter().map(|f| f.scale(2.0)).collect();
            let r2 = verify::interpolation_check(&doubled, &params, kernel.as_ref())?;
            let drift = (r2.max_ratio - r.max_ratio).abs() / r.max_ratio;
            CheckReport {
                name: "interpolation".into(),
                params,
                pass: r.max_ratio.is_finite() && drift <= 1e-10,
                measured: r.max_ratio,
                bound: r.max_ratio_printed,
                tolerance: 1e-10,
            }
        }
        "compactness" => {
            let grid = resolved.grid()?;
            let kernel = resolved.kernel(&grid)?;
            let r = verify::compactness_probe(&params, &grid, kernel.as_ref(), 10.0)?;
            if r.inconclusive {
                eprintln!("inconclusive: spreading sequence reached R; raise --R");
            }
            let first = r.spreading.first().copied().unwrap_or(0.0);
            let last = r.spreading.last().copied().unwrap_or(0.0);
            CheckReport {
                name: "compactness".into(),
                params,
                pass: r.pass,
                measured: last,
                bound: first / 10.0,
                tolerance: 10.0,
            }
        }
        "degiorgi" => {
            let solution = profile_for_verify(args, &resolved)?;
            // rescale to the smallness regime E_0 < epsilon
            let epsilon = 1e-3;
            let e0 = radial::weighted_lp_power(&solution, params.q(), params.alpha())?;
            let scaled = if e0 > 0.0 {
                solution.scale((0.5 * epsilon / e0).powf(1.0 / params.q()))
            } else {
                solution
            };
            let trace = verify::degiorgi_trace(&scaled, &params, 30)?;
            let monotone = trace.energies.windows(2).all(|w| w[1] <= w[0]);
            let vanished = trace.vanished(1e-12);
            let spread_ok = trace.recursion_spread().map_or(true, |s| s < 10.0);
            CheckReport {
                name: "degiorgi".into(),
                params,
                pass: monotone && vanished && spread_ok,
                measured: *trace.energies.last().unwrap(),
                bound: 1e-12 * trace.energies[0],
                tolerance: 1e-12,
            }
        }
        "scaling" => {
            let grid = resolved.grid()?;
            let f = RadialFunction::from_fn(grid, |r| (-r * r / 4.0).exp());
            let r = verify::scaling_decay_check(&f, &params, &[1.5, 2.0, 4.0], 2.0)?;
            let worst = r
                .entries
                .iter()
                .map(|e| e.norm_ratio / e.required_ratio)
                .fold(0.0f64, f64::max);
            CheckReport {
                name: "scaling".into(),
                params,
                pass: r.pass,
                measured: worst,
                bound: 1.0,
                tolerance: r.tolerance,
            }
        }
        "kernel-oracle" => {
            if params.s() >= 1.0 {
                return Err(Error::Config(
                    "kernel-oracle needs s < 1 (pass --gamma 0 --s 0.5, say)".into(),
                ));
            }
            let samples = parse_samples(args.samples.as_deref(), 1_000_000)?;
            let grid = resolved.grid()?;
            let kernel = resolved.kernel(&grid)?;
            let f = RadialFunction::from_fn(grid, |r| (-r * r / 4.0).exp());
            let quad = kernel::seminorm_power(&f, &params, kernel.as_ref())?;
            let mc = kernel::seminorm_oracle(&f, &params, samples, resolved.seed)?;
            let diff = (quad - mc.estimate).abs();
            let tolerance = (0.02 * quad).max(3.0 * mc.std_error);
            println!(
                "quadrature: {quad}, oracle: {} +- {} ({} samples)",
                mc.estimate, mc.std_error, mc.samples
            );
            CheckReport {
                name: "kernel-oracle".into(),
                params,
                pass: diff <= tolerance,
                measured: diff,
                bound: tolerance,
                tolerance,
            }
        }
        "gradient" => {
            let mut rng = ChaCha8Rng::seed_from_u64(resolved.seed);
            let mut worst = 0.0f64;
            let mut passed = 0;
            let trials = 20;
            for trial in 0..trials {
                let cells = 16 + 8 * (trial % 3);
                let grid = Arc::new(radial::make_grid(
                    params.dimension(),
                    resolved.r_max,
                    cells,
                    resolved.grading,
                )?);
                let center: f64 = 3.0 * rng.gen::<f64>();
                let width = 1.0 + 2.0 * rng.gen::<f64>();
                let f = RadialFunction::from_fn(grid.clone(), move |r| {
                    let z = (r - center) / width;
                    (-z * z).exp()
                });
                let mut dir_values: Vec<f64> =
                    (0..cells).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
                dir_values[cells - 1] = 0.0;
                let dir = RadialFunction::from_values(grid.clone(), dir_values)?;
                let g = functional::gradient(&f, &params, None)?;
                let pairing: f64 = g
                    .values()
                    .iter()
                    .zip(dir.values().iter())
                    .map(|(a, b)| a * b)
                    .sum();
                let h = 1e-6;
                let shifted = |sign: f64| -> Result<f64> {
                    let values: Vec<f64> = f
                        .values()
                        .iter()
                        .zip(dir.values().iter())
                        .map(|(&a, &b)| a + sign * h * b)
                        .collect();
                    let g = RadialFunction::from_values(grid.clone(), values)?;
                    Ok(functional::energy(&g, &params, None)?.j)
                };
                let fd = (shifted(1.0)? - shifted(-1.0)?) / (2.0 * h);
                let rel = (fd - pairing).abs() / pairing.abs().max(1e-8);
                worst = worst.max(rel);
                if rel < 1e-5 {
                    passed += 1;
                }
            }
            println!("{passed}/{trials} finite-difference checks passed");
            CheckReport {
                name: "gradient".into(),
                params,
                pass: passed == trials,
                measured: worst,
                bound: 1e-5,
                tolerance: 1e-5,
            }
        }
        other => {
            return Err(Error::Config(format!(
                "unknown suite {other:?}; expected one of strauss, interpolation, compactness, degiorgi, scaling, pohozaev, kernel-oracle, gradient"
            )));
        }
    };
    let text = serde_json::to_string_pretty(&report)?;
    emit(args.out.as_deref(), &text)?;
    println!(
        "{}: {}",
        report.name,
        if report.pass { "PASS" } else { "FAIL" }
    );
    Ok(if report.pass { 0 } else { 1 })
}

// ---------------------------------------------------------------------------
// kernel build
// ---------------------------------------------------------------------------

fn run_kernel_build(args: &KernelBuildArgs) -> Result<i32> {
    let resolved = args.problem.resolve()?;
    let params = resolved.params;
    if params.s() >= 1.0 {
        return Err(Error::Config(
            "kernel build needs s < 1 (the s = 1 case uses the local gradient)".into(),
        ));
    }
    let grid = resolved.grid()?;
    let dir = args
        .out
        .clone()
        .or(resolved.cache_dir.clone())
        .ok_or_else(|| {
            Error::Config(format!(
                "no output directory: pass --out, --cache-dir, or set {CACHE_DIR_ENV}"
            ))
        })?;
    std::fs::create_dir_all(&dir)?;
    let matrix = kernel::assemble_kernel_matrix(&grid, &params)?;
    let path = dir.join(kernel::cache_file_name(&grid, &params));
    kernel::write_cache(&path, &matrix)?;
    println!("kernel cache written to {}", path.display());
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_range_parsing() {
        let axis = parse_sweep("q=2.2:3.0:0.2").unwrap();
        assert_eq!(axis.name, "q");
        assert_eq!(axis.values.len(), 5);
        assert!((axis.values[4] - 3.0).abs() < 1e-12);
        // empty and malformed ranges rejected
        assert!(parse_sweep("q=3.0:2.0:0.2").is_err());
        assert!(parse_sweep("q=1:2:0").is_err());
        assert!(parse_sweep("zeta=1:2:0.5").is_err());
        assert!(parse_sweep("q=1:2").is_err());
    }

    #[test]
    fn sweep_single_point_range() {
        let axis = parse_sweep("alpha=1.0:1.0:0.5").unwrap();
        assert_eq!(axis.values, vec![1.0]);
    }

    #[test]
    fn config_file_parsing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "# comment\nq = 5.0\nM=100\n\nR = 20 # inline\n").unwrap();
        let map = parse_config_file(&path).unwrap();
        assert_eq!(map.get("q").unwrap(), "5.0");
        assert_eq!(map.get("M").unwrap(), "100");
        assert_eq!(map.get("R").unwrap(), "20");
        // flags override the file
        let args = ProblemArgs {
            q: Some(6.0),
            config: Some(path),
            ..ProblemArgs::default()
        };
        let resolved = args.resolve().unwrap();
        assert_eq!(resolved.params.q(), 6.0);
        assert_eq!(resolved.cells, 100);
        assert_eq!(resolved.r_max, 20.0);
    }

    #[test]
    fn config_file_rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.conf");
        std::fs::write(&path, "this is not a key value line\n").unwrap();
        assert!(parse_config_file(&path).is_err());
    }

    #[test]
    fn plot_path_naming() {
        assert_eq!(
            plot_data_path(Path::new("out/sweep.csv")),
            PathBuf::from("out/sweep.plot.csv")
        );
        assert_eq!(
            plot_data_path(Path::new("sweep")),
            PathBuf::from("sweep.plot")
        );
    }

    #[test]
    fn swept_tuple_construction() {
        let base = Params::new(3, 2.0, 4.0, 1.0, 1.0, 0.0, 2.0).unwrap();
        let p = with_swept(&base, &["q", "alpha"], &[5.0, 1.5]).unwrap();
        assert_eq!(p.q(), 5.0);
        assert_eq!(p.alpha(), 1.5);
        assert_eq!(p.beta(), 2.0);
        // invalid combination propagates the constructor error
        assert!(with_swept(&base, &["s"], &[0.5]).is_err());
    }
}
