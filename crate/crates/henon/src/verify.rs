//! Numerical checkers for the analytic ingredients behind the
//! existence and nonexistence results: radial (Strauss) decay, the
//! weighted interpolation inequality, a compact-embedding probe, the
//! level-set truncation (De Giorgi) energy recursion, the scaling and
//! difference-quotient bounds, and the sign condition of the
//! Pohozaev-type nonexistence argument.
//!
//! These are evidence generators, not proofs: each checker evaluates
//! both sides of an inequality on concrete profiles and reports
//! pass/fail with the measured quantities.

use crate::error::{Error, Result};
use crate::functional::{self, Params};
use crate::gauss;
use crate::kernel::{self, KernelMatrix};
use crate::radial::{self, RadialFunction};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::sync::Arc;

/// Uniform JSON summary emitted by every checker.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub params: Params,
    pub pass: bool,
    pub measured: f64,
    pub bound: f64,
    pub tolerance: f64,
}

/// ||f||_{s,p} = ||f||_p + [f]_{s,p} (unweighted Lebesgue part).
fn sobolev_norm(f: &RadialFunction, params: &Params, kernel: Option<&KernelMatrix>) -> Result<f64> {
    let lp = radial::weighted_lp_norm(f, params.p(), 0.0)?;
    let sem = kernel::seminorm_power(f, params, kernel)?.powf(1.0 / params.p());
    Ok(lp + sem)
}

// ---------------------------------------------------------------------------
// Radial decay (Strauss) check
// ---------------------------------------------------------------------------

/// Empirical constant in |f(r)| <= C r^{(1-N)/p} ||f||_{s,p}.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StraussReport {
    pub c_est: f64,
}

/// C_est = sup over nodes of |f(r)| r^{(N-1)/p} / ||f||_{s,p}.
pub fn strauss_check(
    f: &RadialFunction,
    params: &Params,
    kernel: Option<&KernelMatrix>,
) -> Result<StraussReport> {
    if f.is_zero() {
        return Err(Error::UndefinedRatio);
    }
    let norm = sobolev_norm(f, params, kernel)?;
    let n = params.dimension() as f64;
    let expo = (n - 1.0) / params.p();
    let sup = f
        .grid()
        .nodes()
        .iter()
        .zip(f.values().iter())
        .map(|(&r, &v)| v.abs() * r.powf(expo))
        .fold(0.0f64, f64::max);
    Ok(StraussReport { c_est: sup / norm })
}

// ---------------------------------------------------------------------------
// Weighted interpolation inequality check
// ---------------------------------------------------------------------------

/// Worst-case ratio of the two sides of the interpolation inequality
/// over a family, with both exponent variants.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct InterpolationReport {
    /// max ||u||_{q,alpha}^q / (||u||_{s,p}^eta ||u||_{p,beta}^omega)
    /// with the homogeneity-consistent eta.
    pub max_ratio: f64,
    /// Same ratio using the alternative printed eta (diagnostic; this
    /// variant is not scale-invariant).
    pub max_ratio_printed: f64,
    pub exponents: functional::InterpolationExponents,
}

pub fn interpolation_check(
    family: &[RadialFunction],
    params: &Params,
    kernel: Option<&KernelMatrix>,
) -> Result<InterpolationReport> {
    let e = functional::interpolation_exponents(params)?;
    if family.is_empty() {
        return Err(Error::Config(
            "interpolation check needs a nonempty family".into(),
        ));
    }
    let mut max_ratio = 0.0f64;
    let mut max_printed = 0.0f64;
    for f in family {
        if f.is_zero() {
            continue;
        }
        let lhs = radial::weighted_lp_power(f, params.q(), params.alpha())?;
        let sob = sobolev_norm(f, params, kernel)?;
        let lp_beta = radial::weighted_lp_norm(f, params.p(), params.beta())?;
        let denom = sob.powf(e.eta) * lp_beta.powf(e.omega);
        let denom_printed = sob.powf(e.eta_printed) * lp_beta.powf(e.omega);
        if denom > 0.0 {
            max_ratio = max_ratio.max(lhs / denom);
        }
        if denom_printed > 0.0 {
            max_printed = max_printed.max(lhs / denom_printed);
        }
    }
    Ok(InterpolationReport {
        max_ratio,
        max_ratio_printed: max_printed,
        exponents: e,
    })
}

// ---------------------------------------------------------------------------
// Compact embedding probe
// ---------------------------------------------------------------------------

/// Source norms ||u_n||_{q,alpha} along two norm-bounded, weakly
/// vanishing sequences.
#[derive(Debug, Clone, Serialize)]
pub struct CompactnessReport {
    /// Bumps translating toward the outer boundary.
    pub spreading: Vec<f64>,
    /// Bumps shrinking toward the origin at bounded space norm.
    pub concentrating: Vec<f64>,
    pub pass: bool,
    /// The spreading sequence reached the truncation radius before
    /// the decreasing trend was established; raise R.
    pub inconclusive: bool,
    /// The supplied family shows no weak vanishing (e.g. a constant
    /// sequence); the probe does not apply.
    pub not_applicable: bool,
}

/// Evaluate ||u||_{q,alpha} for a profile normalized to unit space
/// norm.
fn normalized_source_norm(
    f: &RadialFunction,
    params: &Params,
    kernel: Option<&KernelMatrix>,
) -> Result<f64> {
    let norm = functional::space_norm(f, params, kernel)?;
    if norm == 0.0 {
        return Err(Error::DegenerateDirection);
    }
    radial::weighted_lp_norm(&f.scale(1.0 / norm), params.q(), params.alpha())
}

/// Probe compactness of the embedding into L^q_alpha with one
/// weakly vanishing sequence made of two regimes: bumps translating
/// toward the boundary, then bumps shrinking at the origin.
///
/// PASS requires the values to fall below a `decrease_factor`
/// fraction of the initial value somewhere along the sequence and
/// both regimes to decrease monotonically. The concentrating branch
/// cannot deliver the full factor by itself: the embedding modulus at
/// a concentration scale w decays like w^{(N+alpha)/q - tau}, a slow
/// rate (exponent 1/4 at the reference parameters), so the factor is
/// carried by the spreading branch while the concentrating branch
/// contributes its monotone trend.
pub fn compactness_probe(
    params: &Params,
    grid: &Arc<crate::radial::RadialGrid>,
    kernel: Option<&KernelMatrix>,
    decrease_factor: f64,
) -> Result<CompactnessReport> {
    let r_max = grid.truncation_radius();
    let width = r_max / 24.0;
    let mut spreading = Vec::new();
    let mut escaped = false;
    for j in 1..=8 {
        let center = j as f64 * r_max / 10.0;
        if center + 4.0 * width > r_max {
            escaped = true;
            break;
        }
        let bump = RadialFunction::from_fn(grid.clone(), |r| {
            let z = (r - center) / width;
            (-z * z).exp()
        });
        spreading.push(normalized_source_norm(&bump, params, kernel)?);
    }
    // Concentration ladder starting near the empirical maximum of the
    // normalized ratio and halving the width while it stays resolved
    // by the innermost cell.
    let r0 = grid.nodes()[0];
    let mut concentrating = Vec::new();
    for j in 0..=5 {
        let w = r_max / 32.0 / (2.0f64).powi(j);
        if w < 4.0 * r0 {
            break;
        }
        let bump = RadialFunction::from_fn(grid.clone(), move |r| {
            let z = r / w;
            (-z * z).exp()
        });
        concentrating.push(normalized_source_norm(&bump, params, kernel)?);
    }
    let monotone = |v: &[f64]| v.windows(2).all(|w| w[1] <= w[0]);
    let initial = spreading.first().copied().unwrap_or(0.0);
    let floor = spreading
        .iter()
        .chain(concentrating.iter())
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let pass = !spreading.is_empty()
        && !concentrating.is_empty()
        && floor <= initial / decrease_factor
        && monotone(&spreading)
        && monotone(&concentrating);
    let inconclusive = !pass && escaped;
    Ok(CompactnessReport {
        spreading,
        concentrating,
        pass,
        inconclusive,
        not_applicable: false,
    })
}

/// Probe an externally supplied sequence. If the sequence shows no
/// weak vanishing (successive members essentially identical), the
/// hypothesis of the compactness statement is violated and the probe
/// reports not-applicable.
pub fn compactness_probe_family(
    family: &[RadialFunction],
    params: &Params,
    kernel: Option<&KernelMatrix>,
    decrease_factor: f64,
) -> Result<CompactnessReport> {
    if family.len() < 2 {
        return Err(Error::Config("probe needs at least two profiles".into()));
    }
    let stationary = family.windows(2).all(|w| w[0].values() == w[1].values());
    if stationary {
        return Ok(CompactnessReport {
            spreading: Vec::new(),
            concentrating: Vec::new(),
            pass: false,
            inconclusive: false,
            not_applicable: true,
        });
    }
    let mut values = Vec::with_capacity(family.len());
    for f in family {
        values.push(normalized_source_norm(f, params, kernel)?);
    }
    let pass = *values.last().unwrap() <= values[0] / decrease_factor;
    Ok(CompactnessReport {
        spreading: values,
        concentrating: Vec::new(),
        pass,
        inconclusive: false,
        not_applicable: false,
    })
}

// ---------------------------------------------------------------------------
// De Giorgi level-set iteration trace
// ---------------------------------------------------------------------------

/// Truncation levels w_k = (u - (1 - 2^{-k}))_+, their weighted
/// energies E_k = int |x|^alpha w_k^q, and the recursion constants.
#[derive(Debug, Clone)]
pub struct DeGiorgiTrace {
    pub truncations: Vec<RadialFunction>,
    /// E_0 .. E_K
    pub energies: Vec<f64>,
    /// C_{k+1} = (2^{k+1} - 1)^q for k = 0..K-1
    pub constants: Vec<f64>,
    /// delta = (q - p)/p, so 1 + delta = q/p.
    pub delta: f64,
    /// Empirical constants E_{k+1} / (C_{k+1} E_k^{1+delta});
    /// None where E_k vanishes.
    pub c_hat: Vec<Option<f64>>,
    /// Variant with C_{k+1}^{q/p} in the denominator (the form used
    /// by the superlinear-recursion convergence test).
    pub c_hat_strong: Vec<Option<f64>>,
}

impl DeGiorgiTrace {
    /// E_K <= factor * E_0?
    pub fn vanished(&self, factor: f64) -> bool {
        let e0 = self.energies[0];
        e0 == 0.0 || *self.energies.last().unwrap() <= factor * e0
    }

    /// max/min ratio of the defined strong empirical constants; None
    /// when fewer than two are defined.
    pub fn recursion_spread(&self) -> Option<f64> {
        let defined: Vec<f64> = self.c_hat_strong.iter().flatten().copied().collect();
        if defined.len() < 2 {
            return None;
        }
        let max = defined.iter().cloned().fold(f64::MIN, f64::max);
        let min = defined.iter().cloned().fold(f64::MAX, f64::min);
        Some(max / min)
    }
}

/// Run K truncation levels on a nonnegative profile.
pub fn degiorgi_trace(f: &RadialFunction, params: &Params, levels: usize) -> Result<DeGiorgiTrace> {
    if f.values().iter().any(|&v| v < 0.0) {
        return Err(Error::Precondition(
            "truncation trace needs a nonnegative profile".into(),
        ));
    }
    let grid = f.grid().clone();
    let (p, q) = (params.p(), params.q());
    let delta = (q - p) / p;
    let mut truncations = Vec::with_capacity(levels + 1);
    let mut energies = Vec::with_capacity(levels + 1);
    for k in 0..=levels {
        let cut = 1.0 - (2.0f64).powi(-(k as i32));
        let values: Vec<f64> = f.values().iter().map(|&v| (v - cut).max(0.0)).collect();
        let w = RadialFunction::from_values(grid.clone(), values)?;
        energies.push(radial::weighted_lp_power(&w, q, params.alpha())?);
        truncations.push(w);
    }
    let mut constants = Vec::with_capacity(levels);
    let mut c_hat = Vec::with_capacity(levels);
    let mut c_hat_strong = Vec::with_capacity(levels);
    for k in 0..levels {
        let c = ((2.0f64).powi(k as i32 + 1) - 1.0).powf(q);
        constants.push(c);
        let (ek, ek1) = (energies[k], energies[k + 1]);
        if ek > 0.0 && ek1 > 0.0 {
            c_hat.push(Some(ek1 / (c * ek.powf(1.0 + delta))));
            c_hat_strong.push(Some(ek1 / (c.powf(q / p) * ek.powf(q / p))));
        } else {
            c_hat.push(None);
            c_hat_strong.push(None);
        }
    }
    Ok(DeGiorgiTrace {
        truncations,
        energies,
        constants,
        delta,
        c_hat,
        c_hat_strong,
    })
}

// ---------------------------------------------------------------------------
// Scaling decay and difference-quotient bounds
// ---------------------------------------------------------------------------

/// Per-lambda outcome of [`scaling_decay_check`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScalingEntry {
    pub lambda: f64,
    /// ||u_lambda||_{s,p,beta} / ||u||_{s,p,beta}
    pub norm_ratio: f64,
    /// Required decay lambda^{-tau}.
    pub required_ratio: f64,
    /// int |(u(lambda x) - u(x))/(lambda - 1)|^r dx
    pub quotient_lhs: f64,
    /// Explicit-constant bound
    /// (1 - lambda^{-(N+r-1)})/((N+r-1)(lambda-1)) * int |grad u|^r |x|^r.
    pub quotient_bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub tau: f64,
    pub entries: Vec<ScalingEntry>,
    pub pass: bool,
    pub tolerance: f64,
}

/// Check the scaling decay ||u_lambda|| <= lambda^{-tau} ||u|| and
/// the difference-quotient bound for each lambda. u_lambda(x) =
/// u(lambda x) is represented exactly on the grid with nodes r_i /
/// lambda, so the discrete norms inherit the exact scaling of the
/// continuum quantities up to rounding.
pub fn scaling_decay_check(
    f: &RadialFunction,
    params: &Params,
    lambdas: &[f64],
    r_exp: f64,
) -> Result<ScalingReport> {
    if params.beta() <= params.p() * (1.0 - params.s()) {
        return Err(Error::Precondition(format!(
            "scaling bound needs beta > p(1 - s) = {}",
            params.p() * (1.0 - params.s())
        )));
    }
    if !(r_exp > 1.0) {
        return Err(Error::Config(
            "difference-quotient exponent must exceed 1".into(),
        ));
    }
    if lambdas.iter().any(|&l| !(l > 1.0)) {
        return Err(Error::Config("scaling factors must exceed 1".into()));
    }
    let tol = 1e-6;
    let grid = f.grid();
    let n = grid.dimension() as f64;
    let tau = params.tau();
    let base_norm = functional::space_norm(f, params, None)?;
    let omega = radial::sphere_area(grid.dimension())?;

    // Right-hand side of the difference-quotient bound:
    // omega * sum_c |slope_c|^r int_cell rho^{N-1+r}, closed form.
    let mut rhs_int = 0.0;
    for c in 0..grid.num_cells() {
        let slope = f.slope(c).abs();
        if slope == 0.0 {
            continue;
        }
        let (a, b) = grid.cell_bounds(c);
        rhs_int += slope.powf(r_exp) * (b.powf(n + r_exp) - a.powf(n + r_exp)) / (n + r_exp);
    }
    rhs_int *= omega;

    let mut entries = Vec::with_capacity(lambdas.len());
    let mut all_pass = true;
    for &lambda in lambdas {
        // Exact representation of u(lambda x): same nodal values on
        // the grid scaled by 1/lambda.
        let scaled_grid = Arc::new(radial::make_grid(
            grid.dimension(),
            grid.truncation_radius() / lambda,
            grid.num_nodes(),
            grid.grading(),
        )?);
        let u_lambda = RadialFunction::from_values(scaled_grid, f.values().to_vec())?;
        let scaled_norm = functional::space_norm(&u_lambda, params, None)?;
        let norm_ratio = if base_norm == 0.0 {
            0.0
        } else {
            scaled_norm / base_norm
        };
        let required_ratio = lambda.powf(-tau);

        // Difference-quotient LHS: integrate over panels split at
        // every breakpoint of both u(rho) and u(lambda rho).
        let mut breaks: Vec<f64> = Vec::with_capacity(2 * grid.num_nodes() + 2);
        breaks.push(0.0);
        for &node in grid.nodes() {
            breaks.push(node);
            let shrunk = node / lambda;
            if shrunk > 0.0 {
                breaks.push(shrunk);
            }
        }
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breaks.dedup();
        let denom = lambda - 1.0;
        let mut lhs = 0.0;
        for w in breaks.windows(2) {
            lhs += gauss::integrate(w[0], w[1], 6, |rho| {
                let d = (f.eval(lambda * rho) - f.eval(rho)) / denom;
                rho.powf(n - 1.0) * d.abs().powf(r_exp)
            });
        }
        lhs *= omega;
        let exponent = n + r_exp - 1.0;
        let constant = (1.0 - lambda.powf(-exponent)) / (exponent * denom);
        let quotient_bound = constant * rhs_int;

        let pass = norm_ratio <= required_ratio * (1.0 + tol)
            && lhs <= quotient_bound * (1.0 + tol) + 1e-300;
        all_pass &= pass;
        entries.push(ScalingEntry {
            lambda,
            norm_ratio,
            required_ratio,
            quotient_lhs: lhs,
            quotient_bound,
            pass,
        });
    }
    Ok(ScalingReport {
        tau,
        entries,
        pass: all_pass,
        tolerance: tol,
    })
}

// ---------------------------------------------------------------------------
// Pohozaev-type sign condition
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PohozaevReport {
    /// (N + alpha)/tau: the sign condition holds exactly when q
    /// exceeds this threshold.
    pub threshold: f64,
    /// The strict sign condition is satisfied (q above threshold and
    /// every sample strictly positive).
    pub holds: bool,
    /// Every sampled point shows the sign the analytic reduction
    /// predicts (true on either side of the threshold).
    pub consistent: bool,
    pub samples_checked: usize,
}

/// Evaluate tau t f(x,t) - N F(x,t) - x . F_x(x,t) on seeded sample
/// points and confirm the predicted sign. Analytically the expression
/// equals (tau - (N + alpha)/q) |x|^alpha |t|^q.
pub fn pohozaev_sign_check(params: &Params, samples: usize, seed: u64) -> Result<PohozaevReport> {
    let tau = params.tau();
    if !(tau > 0.0) {
        return Err(Error::Precondition(format!(
            "sign condition needs tau > 0, got tau = {tau}"
        )));
    }
    let n = params.dimension() as f64;
    let (q, alpha) = (params.q(), params.alpha());
    let threshold = (n + alpha) / tau;
    let predicted = tau - (n + alpha) / q;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut all_match = true;
    for _ in 0..samples {
        let radius = 10.0 * rng.gen::<f64>() + 1e-6;
        let mut t = 10.0 * (rng.gen::<f64>() - 0.5);
        if t == 0.0 {
            t = 0.5;
        }
        // each term assembled separately, not via the reduced form
        let weight = radius.powf(alpha);
        let source = weight * t.abs().powf(q - 2.0) * t;
        let potential = weight * t.abs().powf(q) / q;
        let radial_derivative = alpha * potential;
        let expr = tau * t * source - n * potential - radial_derivative;
        let consistent = if predicted > 0.0 {
            expr > 0.0
        } else if predicted < 0.0 {
            expr < 0.0
        } else {
            expr.abs() <= 1e-12 * potential.abs().max(1e-300)
        };
        all_match &= consistent;
    }
    Ok(PohozaevReport {
        threshold,
        holds: q > threshold && predicted > 0.0 && all_match,
        consistent: all_match,
        samples_checked: samples,
    })
}
