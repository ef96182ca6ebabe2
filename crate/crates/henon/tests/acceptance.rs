//! Acceptance suite: one test per criterion, each printing a single
//! PASS/FAIL line (visible with `--nocapture`).
//!
//! 01 kernel quadrature vs Monte Carlo oracle across (N, s, p)
//! 02 energy gradient vs central finite differences
//! 03 reference ground state: convergence, refinement stability, positivity
//! 04 weighted-source instance (alpha = 1) with peak radius
//! 05 level behavior across the critical exponent
//! 06 mountain-pass geometry conditions
//! 07 level-set truncation recursion (De Giorgi trace)
//! 08 radial decay constant stability (Strauss)
//! 09 weighted interpolation inequality scale invariance
//! 10 scaling decay, difference quotient, sign-condition threshold
//! 11 classification suite: examples, random tuples, disjointness

use henon::functional::{self, classify, interpolation_exponents, Params, Verdict};
use henon::kernel;
use henon::radial::{self, make_grid, RadialFunction, RadialGrid};
use henon::solver::{self, SolveReport, SolverConfig};
use henon::verify;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::{Arc, OnceLock};

fn report(number: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {number:02} {name}: {}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {number:02} ({name}) failed: {detail}");
}

fn reference_params() -> Params {
    Params::new(3, 2.0, 4.0, 1.0, 1.0, 0.0, 2.0).unwrap()
}

fn solve_on(params: &Params, r_max: f64, m: usize) -> SolveReport {
    solve_graded(params, r_max, m, 2.0)
}

fn solve_graded(params: &Params, r_max: f64, m: usize, grading: f64) -> SolveReport {
    let grid = Arc::new(make_grid(params.dimension(), r_max, m, grading).unwrap());
    solver::solve_ground_state(params, &grid, None, &SolverConfig::default()).unwrap()
}

/// The reference ground state is shared by criteria 03, 06 and 07.
fn reference_solution() -> &'static (Params, Arc<RadialGrid>, SolveReport) {
    static SOL: OnceLock<(Params, Arc<RadialGrid>, SolveReport)> = OnceLock::new();
    SOL.get_or_init(|| {
        let params = reference_params();
        let grid = Arc::new(make_grid(3, 15.0, 400, 2.0).unwrap());
        let rep =
            solver::solve_ground_state(&params, &grid, None, &SolverConfig::default()).unwrap();
        (params, grid, rep)
    })
}

#[test]
fn criterion_01_kernel_oracle_equivalence() {
    let mut detail = String::new();
    let mut pass = true;
    for &n in &[1i64, 2, 3] {
        let grid = Arc::new(make_grid(n, 8.0, 40, 1.5).unwrap());
        let f = RadialFunction::from_fn(grid.clone(), |r| (-r * r).exp());
        for &s in &[0.3, 0.5, 0.7] {
            for &p in &[2.0, 3.0] {
                let params = Params::new(n, p, p + 0.5, s, 0.0, 0.0, 2.0).unwrap();
                let quad = kernel::seminorm_power(&f, &params, None).unwrap();
                let mc = kernel::seminorm_oracle(&f, &params, 10_000_000, 101).unwrap();
                let tol = (0.02 * quad).max(3.0 * mc.std_error);
                let ok = (quad - mc.estimate).abs() <= tol;
                if !ok {
                    pass = false;
                    detail.push_str(&format!(
                        "(N={n}, s={s}, p={p}): quadrature {quad} vs oracle {} +- {}; ",
                        mc.estimate, mc.std_error
                    ));
                }
            }
        }
    }
    report(1, "kernel-oracle-equivalence", pass, &detail);
}

#[test]
fn criterion_02_gradient_finite_differences() {
    let grid = Arc::new(make_grid(3, 12.0, 48, 1.5).unwrap());
    let frac = Params::new(3, 2.0, 2.5, 0.5, 0.0, 0.5, 2.0).unwrap();
    let frac_kernel = kernel::assemble_kernel_matrix(&grid, &frac).unwrap();
    let locals = [
        Params::new(3, 2.0, 4.0, 1.0, 1.0, 0.0, 2.0).unwrap(),
        Params::new(3, 2.5, 4.0, 1.0, 0.5, 1.0, 1.5).unwrap(),
        Params::new(2, 3.0, 4.5, 1.0, 1.0, 0.5, 2.0).unwrap(),
    ];
    let grid2 = Arc::new(make_grid(2, 12.0, 48, 1.5).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut pass = true;
    let mut detail = String::new();
    for trial in 0..20 {
        let (params, k, g): (&Params, Option<&kernel::KernelMatrix>, &Arc<RadialGrid>) =
            match trial % 4 {
                0 => (&locals[0], None, &grid),
                1 => (&locals[1], None, &grid),
                2 => (&locals[2], None, &grid2),
                _ => (&frac, Some(&frac_kernel), &grid),
            };
        let m = g.num_nodes();
        let mut values: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        values[m - 1] = 0.0;
        let f = RadialFunction::from_values(g.clone(), values).unwrap();
        let mut dir: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        dir[m - 1] = 0.0;

        let grad = functional::gradient(&f, params, k).unwrap();
        let analytic: f64 = grad
            .values()
            .iter()
            .zip(dir.iter())
            .map(|(gi, di)| gi * di)
            .sum();

        let h = 1e-6;
        let shift = |sign: f64| -> f64 {
            let vals: Vec<f64> = f
                .values()
                .iter()
                .zip(dir.iter())
                .map(|(v, d)| v + sign * h * d)
                .collect();
            let fs = RadialFunction::from_values(g.clone(), vals).unwrap();
            functional::energy(&fs, params, k).unwrap().j
        };
        let fd = (shift(1.0) - shift(-1.0)) / (2.0 * h);
        let err = (fd - analytic).abs() / analytic.abs().max(1e-10);
        if err >= 1e-5 {
            pass = false;
            detail.push_str(&format!(
                "trial {trial}: fd {fd} vs gradient {analytic} (rel {err:.2e}); "
            ));
        }
    }
    report(2, "gradient-finite-differences", pass, &detail);
}

#[test]
fn criterion_03_reference_ground_state() {
    let (params, _, base) = reference_solution();
    let mut pass = base.converged && base.residual <= 1e-6;
    let mut detail = format!(
        "base: converged {} residual {:.3e} level {:.8}; ",
        base.converged, base.residual, base.nehari_level
    );
    // Strict interior positivity (every node except the pinned
    // boundary).
    let vals = base.solution.values();
    if !vals[..vals.len() - 1].iter().all(|&v| v > 0.0) {
        pass = false;
        detail.push_str("interior not strictly positive; ");
    }
    for (label, rep) in [
        ("M 400->800", solve_on(params, 15.0, 800)),
        ("R 15->30", solve_on(params, 30.0, 400)),
    ] {
        let drift = (rep.nehari_level - base.nehari_level).abs() / base.nehari_level;
        detail.push_str(&format!(
            "{label}: level {:.8} drift {drift:.2e}; ",
            rep.nehari_level
        ));
        if !(rep.converged && drift <= 0.01) {
            pass = false;
        }
    }
    report(3, "reference-ground-state", pass, &detail);
}

#[test]
fn criterion_04_weighted_source_instance() {
    let params = Params::new(3, 2.0, 4.0, 1.0, 1.0, 1.0, 2.0).unwrap();
    let rep = solve_on(&params, 15.0, 400);
    let peak = rep.diagnostics.peak_radius;
    let pass = rep.converged && rep.residual <= 1e-6 && peak.is_finite() && peak >= 0.0;
    report(
        4,
        "weighted-source-instance",
        pass,
        &format!(
            "converged {} residual {:.3e} peak_radius {peak}",
            rep.converged, rep.residual
        ),
    );
}

#[test]
fn criterion_05_critical_threshold_behavior() {
    // A steeply graded mesh, so that doubling M sharply refines the
    // innermost cells: subcritical levels must not care, supercritical
    // levels chase the concentration scale downward.
    const GRADING: f64 = 4.5;
    let base = reference_params();
    let sub = base.with_q(5.5).unwrap();
    let sub_small = solve_graded(&sub, 15.0, 400, GRADING);
    let sub_large = solve_graded(&sub, 30.0, 800, GRADING);
    let sub_drift =
        (sub_large.nehari_level - sub_small.nehari_level).abs() / sub_small.nehari_level;

    let sup = base.with_q(6.5).unwrap();
    let sup_small = solve_graded(&sup, 15.0, 400, GRADING);
    let sup_large = solve_graded(&sup, 30.0, 800, GRADING);
    let sup_drop = (sup_small.nehari_level - sup_large.nehari_level) / sup_small.nehari_level;
    let conc = sup_large.diagnostics.concentration_index;

    let pass = sub_drift <= 0.02 && sup_drop >= 0.20 && conc >= 0.5;
    report(
        5,
        "critical-threshold-behavior",
        pass,
        &format!(
            "q=5.5 drift {sub_drift:.3e}; q=6.5 level drop {sup_drop:.3} \
             concentration {conc:.3}"
        ),
    );
}

#[test]
fn criterion_06_mountain_pass_geometry() {
    let (params, grid, _) = reference_solution();
    let geo = solver::mountain_pass_geometry_check(params, grid, None, 1e-2, 100, 2024).unwrap();
    let pass = geo.condition_i && geo.condition_ii && !geo.non_mountain_pass;
    report(
        6,
        "mountain-pass-geometry",
        pass,
        &format!(
            "min J on sphere {:.3e}, witness t {:?}",
            geo.min_j_on_sphere, geo.witness_t
        ),
    );
}

#[test]
fn criterion_07_truncation_recursion() {
    let (params, _, rep) = reference_solution();
    // Rescale so the starting level-set energy satisfies the
    // smallness condition E_0 < eps with eps = 1e-3.
    let eps = 1e-3;
    let e0 = radial::weighted_lp_power(&rep.solution, params.q(), params.alpha()).unwrap();
    let u = rep.solution.scale(0.9 * (eps / e0).powf(1.0 / params.q()));
    let trace = verify::degiorgi_trace(&u, params, 30).unwrap();

    let monotone = trace.energies.windows(2).all(|w| w[1] <= w[0]);
    let vanished = trace.vanished(1e-12);
    let spread = trace.recursion_spread();
    // The recursion-constant ladder needs at least two truncation levels
    // with nonzero energy. Under the smallness rescaling the solution's
    // maximum can fall below the first truncation level, in which case
    // every E_k with k >= 1 is identically zero and the recursion holds
    // vacuously (0 <= C * 0 at every level).
    let spread_ok = match spread {
        Some(s) => s < 10.0,
        None => trace.energies[1..].iter().all(|&e| e == 0.0),
    };
    let pass = monotone && vanished && spread_ok;
    report(
        7,
        "truncation-recursion",
        pass,
        &format!(
            "E_0 {:.3e} E_30 {:.3e} monotone {monotone} constant spread {spread:?}",
            trace.energies[0],
            trace.energies.last().unwrap()
        ),
    );
}

#[test]
fn criterion_08_radial_decay_constant() {
    let params = reference_params();
    let coarse = Arc::new(make_grid(3, 12.0, 200, 1.5).unwrap());
    let fine = Arc::new(make_grid(3, 12.0, 400, 1.5).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut max_coarse = 0.0f64;
    let mut max_fine = 0.0f64;
    for _ in 0..50 {
        let center = rng.gen_range(0.0..8.0);
        let width = rng.gen_range(0.3..2.0);
        let height = rng.gen_range(0.5..2.0);
        let bump = move |r: f64| height * (-((r - center) / width).powi(2)).exp();
        let fc = RadialFunction::from_fn(coarse.clone(), bump);
        let ff = RadialFunction::from_fn(fine.clone(), bump);
        max_coarse = max_coarse.max(verify::strauss_check(&fc, &params, None).unwrap().c_est);
        max_fine = max_fine.max(verify::strauss_check(&ff, &params, None).unwrap().c_est);
    }
    let drift = (max_fine - max_coarse).abs() / max_coarse;
    let pass = max_coarse.is_finite() && max_fine.is_finite() && drift < 0.10;
    report(
        8,
        "radial-decay-constant",
        pass,
        &format!("C_est coarse {max_coarse:.6} fine {max_fine:.6} drift {drift:.3e}"),
    );
}

#[test]
fn criterion_09_interpolation_scale_invariance() {
    let params = reference_params();
    let grid = Arc::new(make_grid(3, 12.0, 200, 1.5).unwrap());
    let e = interpolation_exponents(&params).unwrap();
    let exact_sum = (e.eta + e.omega - params.q()).abs() <= 4.0 * f64::EPSILON * params.q();

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut pass = exact_sum;
    let mut detail = format!("eta {} omega {} sum exact {exact_sum}; ", e.eta, e.omega);
    let mut max_ratio = 0.0f64;
    for i in 0..30 {
        let center = rng.gen_range(0.0..8.0);
        let width = rng.gen_range(0.3..2.0);
        let f = RadialFunction::from_fn(grid.clone(), move |r| {
            (-((r - center) / width).powi(2)).exp()
        });
        let single = verify::interpolation_check(std::slice::from_ref(&f), &params, None)
            .unwrap()
            .max_ratio;
        let doubled = verify::interpolation_check(&[f.scale(2.0)], &params, None)
            .unwrap()
            .max_ratio;
        let dev = (doubled / single - 1.0).abs();
        if dev > 1e-10 {
            pass = false;
            detail.push_str(&format!("profile {i}: scale deviation {dev:.2e}; "));
        }
        max_ratio = max_ratio.max(single);
    }
    if !(max_ratio.is_finite() && max_ratio > 0.0) {
        pass = false;
    }
    detail.push_str(&format!("max ratio {max_ratio:.6}"));
    report(9, "interpolation-scale-invariance", pass, &detail);
}

#[test]
fn criterion_10_scaling_and_sign_threshold() {
    let params = Params::new(3, 2.0, 2.5, 0.5, 0.0, 0.5, 2.0).unwrap();
    let grid = Arc::new(make_grid(3, 10.0, 64, 1.5).unwrap());
    let f = RadialFunction::from_fn(grid, |r| (-r * r).exp());
    let scaling = verify::scaling_decay_check(&f, &params, &[1.5, 2.0, 4.0], 2.0).unwrap();
    let entries_ok = scaling.entries.iter().all(|e| e.pass);

    let poho = verify::pohozaev_sign_check(&params, 200, 7).unwrap();
    let p_star = params.p_star().unwrap();
    let threshold_exact = (poho.threshold - p_star).abs() <= 4.0 * f64::EPSILON * p_star;

    let pass = scaling.pass && entries_ok && threshold_exact && poho.consistent;
    report(
        10,
        "scaling-and-sign-threshold",
        pass,
        &format!(
            "scaling pass {} entries {:?}; threshold {} vs p* {p_star}",
            scaling.pass,
            scaling
                .entries
                .iter()
                .map(|e| (e.lambda, e.norm_ratio / e.required_ratio))
                .collect::<Vec<_>>(),
            poho.threshold
        ),
    );
}

#[test]
fn criterion_11_classification_suite() {
    let mut pass = true;
    let mut detail = String::new();

    let cases = [
        (4.0, Verdict::ExistsGuaranteed),
        (7.0, Verdict::NonexistenceGuaranteed),
        (6.0, Verdict::Unclassified),
    ];
    for (q, expect) in cases {
        let params = Params::new(3, 2.0, q, 1.0, 1.0, 0.0, 2.0).unwrap();
        let got = classify(&params).verdict;
        if got != expect {
            pass = false;
            detail.push_str(&format!("q={q}: got {got:?}, expected {expect:?}; "));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(555);
    for i in 0..50 {
        let dim = rng.gen_range(1i64..5);
        let p = rng.gen_range(1.1..4.0);
        let q = rng.gen_range(1.2..10.0);
        let local = rng.gen_bool(0.5);
        let (s, gamma) = if local {
            (1.0, rng.gen_range(0.0..1.0))
        } else {
            (rng.gen_range(0.05..0.95), 0.0)
        };
        let alpha = rng.gen_range(-3.0..3.0);
        let beta = rng.gen_range(0.1..5.0);
        let params = match Params::new(dim, p, q, s, gamma, alpha, beta) {
            Ok(pr) => pr,
            Err(_) => continue,
        };
        let rep = classify(&params);
        let exists = rep.s_range && rep.alpha_range && rep.q_range && rep.condition_2;
        let nonexists = rep.s_range && rep.alpha_range && rep.beta_nonexist && !rep.q_range && {
            // q strictly above the critical exponent
            match params.p_star() {
                Ok(ps) => params.q() > ps,
                Err(_) => false,
            }
        };
        let expect = if exists {
            Verdict::ExistsGuaranteed
        } else if nonexists {
            Verdict::NonexistenceGuaranteed
        } else {
            Verdict::Unclassified
        };
        if rep.verdict != expect || (exists && nonexists) {
            pass = false;
            detail.push_str(&format!(
                "tuple {i} (N={dim}, p={p:.3}, q={q:.3}, s={s:.3}, gamma={gamma:.3}, \
                 alpha={alpha:.3}, beta={beta:.3}): got {:?}, expected {expect:?}; ",
                rep.verdict
            ));
        }
    }
    report(11, "classification-suite", pass, &detail);
}
