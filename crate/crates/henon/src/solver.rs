//! Ground-state computation by Nehari-manifold reduction.
//!
//! The ground state is found by minimizing the scale-invariant Nehari
//! quotient Q(f) = A(f) / B(f)^{p/q} over nonzero nonnegative
//! profiles with projected Barzilai-Borwein descent, then scaling the
//! minimizer onto the Nehari manifold by the closed-form fiber root
//! t* = (A/B)^{1/(q-p)}. Also provides a sampling check of the
//! mountain-pass geometry (J positive on a small sphere, negative far
//! out along a fixed direction).

use crate::error::{Error, Result};
use crate::functional::{self, EnergyBreakdown, Params, Verdict};
use crate::kernel::KernelMatrix;
use crate::radial::{GridSpec, RadialFunction, RadialGrid};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Projected-descent configuration.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iterations: usize,
    pub residual_tolerance: f64,
    /// Step used on the first iteration and whenever the
    /// Barzilai-Borwein step is unusable.
    pub initial_step: f64,
    /// Backtracking shrink factor, in (0, 1).
    pub shrink: f64,
    /// Armijo sufficient-decrease constant.
    pub sufficient_decrease: f64,
    pub max_backtracks: usize,
    /// Number of seeded initial guesses tried; the best Nehari level
    /// wins, ties resolved by restart order.
    pub restarts: usize,
    pub seed: u64,
    /// Residual is evaluated every this many iterations.
    pub check_interval: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iterations: 50_000,
            residual_tolerance: 1e-6,
            initial_step: 1e-2,
            shrink: 0.5,
            sufficient_decrease: 1e-4,
            max_backtracks: 40,
            restarts: 3,
            seed: 2024,
            check_interval: 10,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.residual_tolerance > 0.0) {
            return Err(Error::Config("residual tolerance must be positive".into()));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::Config("shrink factor must lie in (0, 1)".into()));
        }
        if self.restarts == 0 || self.max_iterations == 0 || self.check_interval == 0 {
            return Err(Error::Config(
                "restarts, max_iterations and check_interval must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Post-hoc diagnostics of a converged (or stalled) run.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Least-squares slope of log u against log r over the mid-range
    /// of the domain; None when the profile has no usable tail.
    pub decay_exponent_fit: Option<f64>,
    /// Fraction of the B-mass carried by the innermost 5% of the
    /// domain radius.
    pub concentration_index: f64,
    /// Radius at which the profile attains its maximum.
    pub peak_radius: f64,
    /// Smallest constant C' with (1 - p/q)||u_n||^p <= C'(p + ||u_n||)
    /// along the recorded iterates (Palais-Smale boundedness check).
    pub ps_bound_constant: f64,
}

/// Solver outcome: the scaled critical-point candidate plus
/// convergence data.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: RadialFunction,
    pub energy: EnergyBreakdown,
    pub residual: f64,
    /// (1/p - 1/q) A(u*) at the Nehari-scaled solution.
    pub nehari_level: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Set when the parameters classify as nonexistence-guaranteed;
    /// the run still proceeds (threshold experiments need it).
    pub nonexistence_warning: bool,
    pub diagnostics: Diagnostics,
}

/// On-disk solution payload: parameters, grid spec, nodal values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionFile {
    pub params: Params,
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl SolutionFile {
    pub fn from_solution(params: &Params, f: &RadialFunction) -> Self {
        let g = f.grid();
        SolutionFile {
            params: *params,
            grid: GridSpec {
                r_max: g.truncation_radius(),
                cells: g.num_nodes(),
                grading: g.grading(),
            },
            values: f.values().to_vec(),
        }
    }

    pub fn to_solution(&self) -> Result<RadialFunction> {
        let grid = crate::radial::make_grid(
            self.params.dimension(),
            self.grid.r_max,
            self.grid.cells,
            self.grid.grading,
        )?;
        RadialFunction::from_values(Arc::new(grid), self.values.clone())
    }
}

/// Serializable view of a [`SolveReport`] (full solution payload
/// included).
#[derive(Debug, Clone, Serialize)]
pub struct SolveReportFile {
    pub params: Params,
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub energy: EnergyBreakdown,
    pub residual: f64,
    pub nehari_level: f64,
    pub iterations: usize,
    pub converged: bool,
    pub nonexistence_warning: bool,
    pub diagnostics: Diagnostics,
}

impl SolveReport {
    pub fn to_file(&self, params: &Params) -> SolveReportFile {
        let sol = SolutionFile::from_solution(params, &self.solution);
        SolveReportFile {
            params: *params,
            grid: sol.grid,
            values: sol.values,
            energy: self.energy,
            residual: self.residual,
            nehari_level: self.nehari_level,
            iterations: self.iterations,
            converged: self.converged,
            nonexistence_warning: self.nonexistence_warning,
            diagnostics: self.diagnostics,
        }
    }
}

/// Closed-form fiber scaling t* = (A/B)^{1/(q-p)} putting f on the
/// Nehari manifold.
pub fn nehari_scale(
    f: &RadialFunction,
    params: &Params,
    kernel: Option<&KernelMatrix>,
) -> Result<f64> {
    let e = functional::energy(f, params, kernel)?;
    if e.b <= 0.0 {
        return Err(Error::DegenerateDirection);
    }
    if e.a <= 0.0 {
        return Err(Error::Domain("A(f) must be positive".into()));
    }
    if params.q() <= params.p() {
        return Err(Error::Config("fiber scaling needs q > p".into()));
    }
    Ok((e.a / e.b).powf(1.0 / (params.q() - params.p())))
}

/// Seeded positive bump for restart `index`: centers cycle through
/// {0, R/8, R/4} with small multiplicative jitter, catching possible
/// off-origin peaks of the weighted problem.
fn initial_bump(grid: &Arc<RadialGrid>, index: usize, seed: u64) -> RadialFunction {
    let r_max = grid.truncation_radius();
    let centers = [0.0, r_max / 8.0, r_max / 4.0];
    let center = centers[index % centers.len()];
    let width = r_max / 6.0 * (1.0 + 0.2 * (index / centers.len()) as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(index as u64));
    let mut f = RadialFunction::from_fn(grid.clone(), |r| {
        let z = (r - center) / width;
        (-z * z).exp()
    });
    let mut values = f.values().to_vec();
    let m = values.len();
    for v in values.iter_mut().take(m - 1) {
        *v *= 1.0 + 0.05 * (rng.gen::<f64>() - 0.5);
    }
    f.set_values(values).expect("jittered bump");
    f
}

/// State produced by one restart of the quotient minimization.
struct Candidate {
    profile: RadialFunction,
    quotient: f64,
    iterations: usize,
    converged: bool,
    residual: f64,
    ps_bound_constant: f64,
}

/// Minimize Q(v) = A(v)/B(v)^{p/q} by projected Barzilai-Borwein
/// descent from the given start.
fn minimize_quotient(
    start: RadialFunction,
    params: &Params,
    kernel: Option<&KernelMatrix>,
    hat_norms: &[f64],
    config: &SolverConfig,
) -> Result<Candidate> {
    let grid = start.grid().clone();
    let m = grid.num_nodes();
    let (p, q) = (params.p(), params.q());
    let pq = p / q;

    let project = |mut values: Vec<f64>| -> Vec<f64> {
        for v in values.iter_mut() {
            *v = v.abs();
        }
        values[m - 1] = 0.0;
        values
    };

    // (A, B) from one pass; both are exactly homogeneous so they also
    // follow from the gradient pairing, but backtracking needs them
    // without gradients.
    let values_ab = |f: &RadialFunction| -> Result<(f64, f64)> {
        let e = functional::energy(f, params, kernel)?;
        Ok((e.a, e.b))
    };

    let mut v = RadialFunction::from_values(grid.clone(), project(start.values().to_vec()))?;
    let (mut a, mut b) = values_ab(&v)?;
    if b <= 0.0 || !a.is_finite() || !b.is_finite() {
        return Err(Error::DegenerateDirection);
    }
    let mut quotient = a / b.powf(pq);

    // Jacobi preconditioner: the discrete Hessian diagonal scales
    // like the p-th power of the hat space norms, which vary over
    // orders of magnitude on graded meshes.
    let precond: Vec<f64> = hat_norms.iter().map(|h| h.powf(p)).collect();

    let mut prev_v: Option<Vec<f64>> = None;
    let mut prev_d: Option<Vec<f64>> = None;
    let mut converged = false;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut ps_bound = 0.0f64;
    let mut stalls = 0usize;
    // nonmonotone line-search reference: the worst of the last few
    // accepted quotient values
    let mut recent: std::collections::VecDeque<f64> = std::collections::VecDeque::new();

    for iter in 0..config.max_iterations {
        iterations = iter + 1;
        let (da, db) = functional::nehari_gradients(&v, params, kernel)?;
        // quotient-rule gradient of Q at v
        let scale = b.powf(pq);
        let ratio = pq * a / b;
        let g: Vec<f64> = da
            .iter()
            .zip(db.iter())
            .map(|(&x, &y)| (x - ratio * y) / scale)
            .collect();
        let d: Vec<f64> = g
            .iter()
            .enumerate()
            .map(|(i, &x)| if i + 1 < m { x / precond[i] } else { 0.0 })
            .collect();
        let gd: f64 = g.iter().zip(d.iter()).map(|(x, y)| x * y).sum();

        // Residual of the scaled iterate; gradients are homogeneous
        // so no extra integral passes are needed.
        if iter % config.check_interval == 0 {
            let t = (a / b).powf(1.0 / (q - p));
            let gu_max = da
                .iter()
                .zip(db.iter())
                .zip(hat_norms.iter())
                .map(|((&x, &y), &h)| (t.powf(p - 1.0) * x / p - t.powf(q - 1.0) * y / q).abs() / h)
                .fold(0.0f64, f64::max);
            let u = v.scale(t);
            let norm = functional::space_norm(&u, params, kernel)?;
            residual = gu_max / norm.powf(p - 1.0).max(1.0);
            ps_bound = ps_bound.max((1.0 - p / q) * norm.powf(p) / (p + norm));
            if residual <= config.residual_tolerance {
                converged = true;
                break;
            }
        }

        // Barzilai-Borwein step from the previous (v, d) pair,
        // falling back to a magnitude-scaled first step.
        let d_max = d.iter().fold(0.0f64, |s, &x| s.max(x.abs()));
        let v_max = v.values().iter().fold(0.0f64, |s, &x| s.max(x.abs()));
        let mut step = config.initial_step * (1.0 + v_max) / (d_max + 1e-300);
        if let (Some(pv), Some(pd)) = (&prev_v, &prev_d) {
            let mut sv = 0.0;
            let mut sg = 0.0;
            for i in 0..m {
                let dv = v.values()[i] - pv[i];
                let dd = d[i] - pd[i];
                sv += dv * dv;
                sg += dv * dd;
            }
            if sg > 0.0 && sv > 0.0 {
                step = (sv / sg).clamp(1e-14, 1e14);
            }
        }

        // Nonmonotone backtracking: sufficient decrease against the
        // worst recent quotient (plain Armijo cripples the two-point
        // step on ill-conditioned meshes).
        let q_ref = recent.iter().cloned().fold(quotient, f64::max);
        let mut accepted = false;
        for _ in 0..=config.max_backtracks {
            let trial_values = project(
                v.values()
                    .iter()
                    .zip(d.iter())
                    .map(|(&x, &dx)| x - step * dx)
                    .collect(),
            );
            let trial = RadialFunction::from_values(grid.clone(), trial_values)?;
            let (ta, tb) = values_ab(&trial)?;
            if tb > 0.0 && ta.is_finite() {
                let tq = ta / tb.powf(pq);
                if tq <= q_ref - config.sufficient_decrease * step * gd {
                    prev_v = Some(v.values().to_vec());
                    prev_d = Some(d.clone());
                    v = trial;
                    a = ta;
                    b = tb;
                    quotient = tq;
                    recent.push_back(tq);
                    if recent.len() > 10 {
                        recent.pop_front();
                    }
                    accepted = true;
                    break;
                }
            }
            step *= config.shrink;
        }
        if !accepted {
            stalls += 1;
            prev_v = None;
            prev_d = None;
            recent.clear();
            if stalls >= 10 {
                break;
            }
        } else {
            stalls = 0;
        }

        // Q is scale-invariant; renormalize if the iterate magnitude
        // drifts, resetting the two-point step memory.
        let peak = v.values().iter().fold(0.0f64, |s, &x| s.max(x));
        if !(1e-3..=1e3).contains(&peak) && peak > 0.0 {
            v = v.scale(1.0 / peak);
            let scale_pow = |e: f64| peak.powf(-e);
            a *= scale_pow(p);
            b *= scale_pow(q);
            prev_v = None;
            prev_d = None;
        }
    }

    // Final residual check when the loop ran out of iterations
    // between checkpoints.
    if !converged {
        let t = (a / b).powf(1.0 / (q - p));
        let u = v.scale(t);
        residual = functional::residual_with(&u, params, kernel, hat_norms)?;
        let norm = functional::space_norm(&u, params, kernel)?;
        ps_bound = ps_bound.max((1.0 - p / q) * norm.powf(p) / (p + norm));
        converged = residual <= config.residual_tolerance;
    }

    Ok(Candidate {
        profile: v,
        quotient,
        iterations,
        converged,
        residual,
        ps_bound_constant: ps_bound,
    })
}

/// Compute the ground-state candidate: parallel seeded restarts of
/// the quotient minimization, best Nehari level kept (ties broken by
/// restart order), then the fiber scaling t*.
pub fn solve_ground_state(
    params: &Params,
    grid: &Arc<RadialGrid>,
    kernel: Option<&KernelMatrix>,
    config: &SolverConfig,
) -> Result<SolveReport> {
    config.validate()?;
    if params.q() <= params.p() {
        return Err(Error::Config(format!(
            "q must exceed p for the Nehari reduction (q = {}, p = {})",
            params.q(),
            params.p()
        )));
    }
    let report = functional::classify(params);
    let nonexistence_warning = report.verdict == Verdict::NonexistenceGuaranteed;

    let hat_norms = functional::hat_norms(grid, params, kernel)?;
    let outcomes = crate::par::map_indexed(config.restarts, |j| {
        let start = initial_bump(grid, j, config.seed);
        minimize_quotient(start, params, kernel, &hat_norms, config)
    });

    let mut best: Option<Candidate> = None;
    for outcome in outcomes {
        let cand = match outcome {
            Ok(c) => c,
            Err(Error::DegenerateDirection) => continue,
            Err(e) => return Err(e),
        };
        if !cand.quotient.is_finite() {
            continue;
        }
        let better = match &best {
            None => true,
            Some(b) => cand.quotient < b.quotient,
        };
        if better {
            best = Some(cand);
        }
    }
    let best = best.ok_or(Error::NoCandidate)?;

    let t = nehari_scale(&best.profile, params, kernel)?;
    let solution = best.profile.scale(t);
    let energy = functional::energy(&solution, params, kernel)?;
    let level = (1.0 / params.p() - 1.0 / params.q()) * energy.a;
    let diagnostics = Diagnostics {
        decay_exponent_fit: decay_exponent_fit(&solution),
        concentration_index: concentration_index(&solution, params)?,
        peak_radius: peak_radius(&solution),
        ps_bound_constant: best.ps_bound_constant,
    };
    Ok(SolveReport {
        solution,
        energy,
        residual: best.residual,
        nehari_level: level,
        iterations: best.iterations,
        converged: best.converged,
        nonexistence_warning,
        diagnostics,
    })
}

/// Least-squares slope of log u vs log r over nodes in
/// [0.3 R, 0.8 R] with positive values.
fn decay_exponent_fit(f: &RadialFunction) -> Option<f64> {
    let grid = f.grid();
    let r_max = grid.truncation_radius();
    let pts: Vec<(f64, f64)> = grid
        .nodes()
        .iter()
        .zip(f.values().iter())
        .filter(|(&r, &v)| r >= 0.3 * r_max && r <= 0.8 * r_max && v > 1e-280)
        .map(|(&r, &v)| (r.ln(), v.ln()))
        .collect();
    if pts.len() < 4 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

/// Fraction of the B-mass inside r <= 0.05 R.
fn concentration_index(f: &RadialFunction, params: &Params) -> Result<f64> {
    let grid = f.grid();
    let n = grid.dimension() as f64;
    let omega = crate::radial::sphere_area(grid.dimension())?;
    let cutoff = 0.05 * grid.truncation_radius();
    let (q, alpha) = (params.q(), params.alpha());
    let mut inner = 0.0;
    let mut total = 0.0;
    for c in 0..grid.num_cells() {
        for (r, w) in grid.cell_rule(c) {
            let v = f.eval_in_cell(c, r).abs();
            if v == 0.0 {
                continue;
            }
            let mass = omega * w * r.powf(n - 1.0 + alpha) * v.powf(q);
            total += mass;
            if r <= cutoff {
                inner += mass;
            }
        }
    }
    if total == 0.0 {
        Ok(0.0)
    } else {
        Ok(inner / total)
    }
}

/// Radius of the maximal nodal value. The profile is constant on the
/// innermost cell, so a maximum at the first node reports radius 0.
fn peak_radius(f: &RadialFunction) -> f64 {
    let grid = f.grid();
    let mut best = (0usize, f64::NEG_INFINITY);
    for (i, &v) in f.values().iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    if best.0 == 0 {
        0.0
    } else {
        grid.nodes()[best.0]
    }
}

/// Mountain-pass geometry report: minimum of J over random
/// directions on the small sphere, and a witness scaling with
/// negative energy.
#[derive(Debug, Clone, Serialize)]
pub struct GeometryReport {
    pub radius: f64,
    pub min_j_on_sphere: f64,
    pub condition_i: bool,
    pub witness_t: Option<f64>,
    pub condition_ii: bool,
    /// q <= p: the energy has no mountain-pass structure.
    pub non_mountain_pass: bool,
}

/// Sample the two geometry conditions: (i) J > 0 on the sphere of
/// space-norm `radius`, over `samples` seeded random directions;
/// (ii) some t <= 1e3 with J(t w) < 0 along a fixed positive bump w.
pub fn mountain_pass_geometry_check(
    params: &Params,
    grid: &Arc<RadialGrid>,
    kernel: Option<&KernelMatrix>,
    radius: f64,
    samples: usize,
    seed: u64,
) -> Result<GeometryReport> {
    if !(radius > 0.0) {
        return Err(Error::Config("sphere radius must be positive".into()));
    }
    let m = grid.num_nodes();
    let non_mountain_pass = params.q() <= params.p();

    // (i): random sign-varying directions normalized to the sphere.
    let j_values = crate::par::map_indexed(samples, |k| -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
        let mut values: Vec<f64> = (0..m).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        values[m - 1] = 0.0;
        let dir = RadialFunction::from_values(grid.clone(), values)?;
        let norm = functional::space_norm(&dir, params, kernel)?;
        if norm == 0.0 {
            return Err(Error::DegenerateDirection);
        }
        let u = dir.scale(radius / norm);
        Ok(functional::energy(&u, params, kernel)?.j)
    });
    let mut min_j = f64::INFINITY;
    for jv in j_values {
        min_j = min_j.min(jv?);
    }

    // (ii): scale a positive bump until the q-term dominates.
    let bump = initial_bump(grid, 0, seed);
    let norm = functional::space_norm(&bump, params, kernel)?;
    let w = bump.scale(1.0 / norm);
    let mut witness_t = None;
    if !non_mountain_pass {
        let mut t = 1.0;
        while t <= 1e3 {
            let j = functional::energy(&w.scale(t), params, kernel)?.j;
            if j < 0.0 {
                witness_t = Some(t);
                break;
            }
            t *= 2.0;
        }
    }

    Ok(GeometryReport {
        radius,
        min_j_on_sphere: min_j,
        condition_i: min_j > 0.0,
        witness_t,
        condition_ii: witness_t.is_some(),
        non_mountain_pass,
    })
}
