//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Standard configuration unless noted: n = 3, m = 1/3, q = 4.5, p = 2,
//! R = 1, one hole at the origin with radius 0.1, delta1 = 0.4,
//! C1 = C2 = 1, hole flux level alpha = 2m(q + 4/delta1^2), geometric grid
//! with 400 cells, newton_tol = 1e-10.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use fastdiff::continuation::{
    check_blowup_exponent_window, check_cauchy_ratios, check_monotone_decrease,
    run_domain_expansion, run_hole_continuation, shrink_schedule, ContinuationOptions,
    ContinuationReport,
};
use fastdiff::model::{
    alpha_flux, barrier_upper_coefficient, validate_spec, BarrierLower, BarrierUpper,
    EnvelopeChoice, FluxProfile, FluxSchedule, Hole, InitialData, ProblemSpec, ScalingMode,
    SingularDataParams, SingularProfile, ValidatedSpec,
};
use fastdiff::planar::{
    build_masked_grid, check_mass_balance2d, solve2d, PlanarField, PlanarOuter, PlanarProblem,
    PlanarShape,
};
use fastdiff::radial::{
    build_radial_grid, solve, Grading, Mobility, RadialField, RadialGrid, RadialProblem,
    RegularizedMobility, Trajectory,
};
use fastdiff::stepping::{sync_times, StepperConfig};
use fastdiff::verify::{
    check_aronson_benilan, check_barrier_sandwich, check_mass_balance, l1_contraction_suite,
    CheckReport,
};
use std::sync::LazyLock;
use std::time::Instant;

const M: f64 = 1.0 / 3.0;
const Q: f64 = 4.5;
const D1: f64 = 0.4;
const HOLE: f64 = 0.1;
const R_OUT: f64 = 1.0;
const N_CELLS: usize = 400;

fn standard_spec() -> ValidatedSpec {
    validate_spec(ProblemSpec {
        n: 3,
        m: M,
        q: Q,
        p: 2.0,
        outer_radius: R_OUT,
        holes: vec![Hole { center: vec![0.0, 0.0, 0.0], radius: HOLE }],
        delta1: D1,
        initial_data: InitialData::Singular {
            c1: 1.0,
            c2: 1.0,
            envelope: EnvelopeChoice::GeometricMean,
        },
        schedule: FluxSchedule {
            outer: FluxProfile::zero(),
            holes: vec![FluxProfile::Constant { value: alpha_flux(M, Q, D1) }],
            scaling: ScalingMode::PaperScaled,
        },
    })
    .expect("standard configuration is admissible")
}

fn standard_grid() -> RadialGrid {
    build_radial_grid(HOLE, R_OUT, N_CELLS, Grading::Geometric { ratio: 1.05 }, 3).unwrap()
}

fn singular_profile() -> SingularProfile {
    SingularProfile {
        params: SingularDataParams { c1: 1.0, c2: 1.0, q: Q, delta1: D1 },
        choice: EnvelopeChoice::GeometricMean,
    }
}

fn standard_problem(grid: &RadialGrid, inner: FluxProfile) -> RadialProblem {
    RadialProblem {
        grid: grid.clone(),
        mobility: Mobility::Bare { m: M },
        inner_flux: inner,
        outer_flux: FluxProfile::zero(),
        inner_scale: HOLE.powf(-(M * Q + 1.0)),
    }
}

fn verdict(criterion: &str, report: &CheckReport) {
    println!(
        "ACCEPTANCE {criterion}: {} ({}: worst margin {:.3e}, tolerance {:.1e}, {} samples)",
        if report.pass { "PASS" } else { "FAIL" },
        report.name,
        report.worst_margin,
        report.tolerance,
        report.samples
    );
    assert!(report.pass, "{criterion} failed: {report:?}");
}

/// The 5-level shrinking-hole continuation shared by criteria 4, 5 and 6.
static CONTINUATION: LazyLock<(ValidatedSpec, ContinuationReport)> = LazyLock::new(|| {
    let spec = standard_spec();
    let schedule = shrink_schedule(&spec, 4, 0.5).expect("standard shrink schedule");
    let radii: Vec<f64> = (0..=4).map(|j| 0.1 * 0.5f64.powi(j)).collect();
    assert_eq!(schedule.radii, radii, "eps_j = 0.1 * 2^-j");
    let report = run_hole_continuation(&spec, &schedule, &ContinuationOptions::default())
        .expect("continuation completes");
    (spec, report)
});

#[test]
fn criterion_01_mass_identity() {
    // Standard run, constant unscaled g = alpha, f = 0: per-snapshot relative
    // mass-balance error <= 1e-8 on [0, 1]; runtime <= 30 s.
    let start = Instant::now();
    let grid = standard_grid();
    let alpha = alpha_flux(M, Q, D1);
    let problem = standard_problem(&grid, FluxProfile::Constant { value: alpha });
    let profile = singular_profile();
    let u0 = RadialField::from_profile(&grid, |r| profile.eval(r));
    let traj = solve(&problem, &u0, &StepperConfig::default(), 1.0, &sync_times(1.0, 0.05))
        .expect("standard solve");
    let report = check_mass_balance(&traj, &problem, 1e-8);
    let elapsed = start.elapsed();
    println!("criterion 1 runtime: {elapsed:?} ({} steps)", traj.steps.len());
    assert!(elapsed.as_secs_f64() <= 30.0, "runtime budget exceeded: {elapsed:?}");
    verdict("1 (mass identity)", &report);
}

#[test]
fn criterion_02_l1_contraction_100_pairs() {
    // 100 seeded ordered pairs: zero violations beyond 1e-8 * scale.
    let start = Instant::now();
    let grid = build_radial_grid(HOLE, R_OUT, 96, Grading::Uniform, 3).unwrap();
    let reports = l1_contraction_suite(&grid, M, 1.0 / 128.0, 0.5, 100, 20240812, 1e-8)
        .expect("all pairs solve");
    let elapsed = start.elapsed();
    println!("criterion 2 runtime: {elapsed:?}");
    assert!(elapsed.as_secs_f64() <= 300.0, "runtime budget exceeded: {elapsed:?}");
    assert_eq!(reports.len(), 100);
    let worst = reports
        .iter()
        .min_by(|a, b| a.worst_margin.partial_cmp(&b.worst_margin).unwrap())
        .unwrap();
    verdict("2 (L1 contraction, 100 pairs)", worst);
    assert!(reports.iter().all(|r| r.pass));
}

#[test]
fn criterion_03_aronson_benilan() {
    // f = 0, g(t) = alpha (1+t)^(-1/2): intrinsic rate bound within 1e-6 on
    // t in [0.1, 1].
    let grid = standard_grid();
    let alpha = alpha_flux(M, Q, D1);
    let problem = standard_problem(
        &grid,
        FluxProfile::PowerDecay { amplitude: alpha, exponent: 0.5 },
    );
    let profile = singular_profile();
    let u0 = RadialField::from_profile(&grid, |r| profile.eval(r));
    let traj = solve(&problem, &u0, &StepperConfig::default(), 1.0, &sync_times(1.0, 0.05))
        .expect("decreasing-g solve");
    let report =
        check_aronson_benilan(&traj, M, &problem.outer_flux, &problem.inner_flux, 0.1, 1e-6)
            .expect("schedule satisfies the hypotheses");
    verdict("3 (intrinsic rate bound)", &report);
}

#[test]
fn criterion_04_barrier_sandwich_all_levels() {
    // eps_j = 0.1 * 2^-j, j = 0..4: lower margin >= -1e-10 * scale and upper
    // margin >= -1e-8 * scale on [eps_j, delta1), t in [0, 1], for every j.
    let (_, report) = &*CONTINUATION;
    for (j, run) in report.runs.iter().enumerate() {
        let (lo, hi) = run.sandwich.as_ref().expect("sandwich computed per level");
        verdict(&format!("4 (lower barrier, j={j})"), lo);
        verdict(&format!("4 (upper barrier, j={j})"), hi);
    }
}

#[test]
fn criterion_05_blowup_exponent() {
    // Finest level: fitted exponent within 5% of q for t in [0.25, 1] over
    // the window [2 eps_4, delta1/4].
    let (spec, report) = &*CONTINUATION;
    assert!(report.fit_window.0 >= 2.0 * 0.1 * 0.5f64.powi(4) * 0.99);
    assert!(report.fit_window.1 <= D1 / 4.0 * 1.01);
    let check = check_blowup_exponent_window(report, spec.q, 0.25, 1.0, 0.05);
    verdict("5 (blow-up exponent)", &check);
}

#[test]
fn criterion_06_continuation_cauchy() {
    // Pairwise sup-differences on r >= delta1/2, t in [0.5, 1], drop by at
    // least 1.5x per consecutive level.
    let (_, report) = &*CONTINUATION;
    println!("pairwise sup diffs: {:?}", report.pairwise_sup_diffs);
    assert_eq!(report.pairwise_sup_diffs.len(), 4);
    let check = check_cauchy_ratios(report, 1.5);
    verdict("6 (continuation Cauchy)", &check);
}

#[test]
fn criterion_07_clamp_insensitivity() {
    // Two clamp windows differing 10x, both inactive: trajectories within
    // 1e-8 in sup norm.
    let grid = build_radial_grid(HOLE, R_OUT, 200, Grading::Uniform, 3).unwrap();
    let u0 = RadialField::from_profile(&grid, |r| {
        1.0 + 0.5 * (std::f64::consts::PI * (r - HOLE) / (R_OUT - HOLE)).cos()
    });
    let sync = sync_times(0.5, 0.05);
    let run = |n1: f64, n2: f64| -> Trajectory {
        let problem = RadialProblem {
            grid: grid.clone(),
            mobility: Mobility::Regularized(RegularizedMobility::new(M, n1, n2).unwrap()),
            inner_flux: FluxProfile::Constant { value: 0.3 },
            outer_flux: FluxProfile::zero(),
            inner_scale: 1.0,
        };
        solve(&problem, &u0, &StepperConfig::default(), 0.5, &sync).unwrap()
    };
    let ta = run(0.25, 4.0);
    let tb = run(0.025, 40.0);
    let report = fastdiff::verify::check_clamp_insensitivity(
        &ta,
        &tb,
        M,
        (0.125, 8.0),
        (0.0125, 80.0),
        1e-8,
    )
    .expect("both value ranges stay inside both windows");
    verdict("7 (clamp insensitivity)", &report);
}

fn bounded_zero_flux_final(n: usize, dt: f64, t_end: f64) -> RadialField {
    let grid = build_radial_grid(HOLE, R_OUT, n, Grading::Uniform, 3).unwrap();
    let problem = RadialProblem {
        grid: grid.clone(),
        mobility: Mobility::Bare { m: M },
        inner_flux: FluxProfile::zero(),
        outer_flux: FluxProfile::zero(),
        inner_scale: 1.0,
    };
    let u0 = RadialField::from_profile(&grid, |r| {
        1.0 + 0.5 * (std::f64::consts::PI * (r - HOLE) / (R_OUT - HOLE)).cos()
    });
    solve(&problem, &u0, &StepperConfig::fixed(dt), t_end, &[])
        .unwrap()
        .final_field()
        .clone()
}

#[test]
fn criterion_08_scheme_convergence() {
    // Spatial order >= 1.8 on N in {100, 200, 400} against an N = 1600
    // reference; temporal order >= 0.9 in a dt-halving study.
    let t_end = 0.05;
    let dt = 5e-5; // small enough that the spatial error dominates
    let reference = bounded_zero_flux_final(1600, dt, t_end);
    let spatial_err = |n: usize| -> f64 {
        let coarse = bounded_zero_flux_final(n, dt, t_end);
        let ratio = 1600 / n;
        coarse
            .values
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                let avg = reference.values[k * ratio..(k + 1) * ratio]
                    .iter()
                    .sum::<f64>()
                    / ratio as f64;
                (c - avg).abs()
            })
            .fold(0.0, f64::max)
    };
    let (e100, e200, e400) = (spatial_err(100), spatial_err(200), spatial_err(400));
    let s1 = (e100 / e200).log2();
    let s2 = (e200 / e400).log2();
    println!(
        "spatial errors: {e100:.3e} {e200:.3e} {e400:.3e}; orders {s1:.3}, {s2:.3}"
    );

    let t_end = 0.2;
    let temporal_final =
        |dt: f64| -> RadialField { bounded_zero_flux_final(200, dt, t_end) };
    let ref_t = temporal_final(1.25e-4);
    let terr = |dt: f64| -> f64 {
        temporal_final(dt)
            .values
            .iter()
            .zip(&ref_t.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    };
    let (t1, t2, t3) = (terr(4e-3), terr(2e-3), terr(1e-3));
    let o1 = (t1 / t2).log2();
    let o2 = (t2 / t3).log2();
    println!("temporal errors: {t1:.3e} {t2:.3e} {t3:.3e}; orders {o1:.3}, {o2:.3}");

    let pass = s1 >= 1.8 && s2 >= 1.8 && o1 >= 0.9 && o2 >= 0.9;
    println!(
        "ACCEPTANCE 8 (scheme convergence): {} (spatial {:.2}/{:.2}, temporal {:.2}/{:.2})",
        if pass { "PASS" } else { "FAIL" },
        s1,
        s2,
        o1,
        o2
    );
    assert!(pass);
}

#[test]
fn criterion_09_domain_expansion() {
    // R in {2, 4, 8} with f = 0: pairwise differences on [delta1/2, 1.5] at
    // t = 1 decrease monotonically; the mass identity holds per run.
    let spec = standard_spec();
    let report = run_domain_expansion(
        &spec,
        &[2.0, 4.0, 8.0],
        (D1 / 2.0, 1.5),
        &ContinuationOptions::default(),
    )
    .expect("expansion completes");
    println!("expansion pairwise diffs: {:?}", report.pairwise_sup_diffs);
    for run in &report.runs {
        verdict(&format!("9 (mass identity, R={})", run.radius), &run.mass_report);
    }
    let check = check_monotone_decrease(&report);
    verdict("9 (monotone differences)", &check);
}

#[test]
fn criterion_10_planar_property_suite() {
    // Disk with one hole at h = delta/8: mass identity <= 1e-6 relative and
    // agreement with the radial solver <= 5% away from the boundaries at
    // t = 0.5.
    let h = HOLE / 8.0;
    let shape = PlanarShape {
        outer: PlanarOuter::Disk { radius: R_OUT },
        holes: vec![Hole { center: vec![0.0, 0.0], radius: HOLE }],
    };
    let grid2 = build_masked_grid(&shape, h).unwrap();
    let profile =
        |r: f64| 1.0 + 0.5 * (std::f64::consts::PI * (r - HOLE) / (R_OUT - HOLE)).cos();
    let p2 = PlanarProblem {
        grid: grid2.clone(),
        mobility: Mobility::Bare { m: M },
        outer_flux: FluxProfile::zero(),
        hole_flux: vec![FluxProfile::Constant { value: 2.0 }],
        hole_scale: vec![1.0],
    };
    let u0_2 = PlanarField::from_profile(&grid2, |x, y| profile((x * x + y * y).sqrt()));
    let cfg = StepperConfig::default();
    let traj2 = solve2d(&p2, &u0_2, &cfg, 0.5, &sync_times(0.5, 0.25)).unwrap();
    let mass_report = check_mass_balance2d(&traj2, &p2, 1e-6);
    verdict("10 (planar mass identity)", &mass_report);

    // radial oracle: same problem in its 1D n = 2 reduction
    let grid1 = build_radial_grid(HOLE, R_OUT, 600, Grading::Geometric { ratio: 1.05 }, 2).unwrap();
    let p1 = RadialProblem {
        grid: grid1.clone(),
        mobility: Mobility::Bare { m: M },
        inner_flux: FluxProfile::Constant { value: 2.0 },
        outer_flux: FluxProfile::zero(),
        inner_scale: 1.0,
    };
    let u0_1 = RadialField::from_profile(&grid1, profile);
    let traj1 = solve(&p1, &u0_1, &cfg, 0.5, &sync_times(0.5, 0.25)).unwrap();
    let f1 = traj1.final_field();
    let f2 = traj2.final_field();
    let interp = |r: f64| -> f64 {
        let c = &grid1.centers;
        let i = c.partition_point(|&x| x < r).clamp(1, c.len() - 1);
        let w = (r - c[i - 1]) / (c[i] - c[i - 1]);
        f1.values[i - 1] * (1.0 - w) + f1.values[i] * w
    };
    let mut worst = 0.0f64;
    let mut compared = 0usize;
    for k in 0..grid2.n_cells() {
        let (x, y) = grid2.center(k);
        let r = (x * x + y * y).sqrt();
        if r - HOLE < 3.0 * h || R_OUT - r < 3.0 * h {
            continue;
        }
        let oracle = interp(r);
        worst = worst.max((f2.values[k] - oracle).abs() / oracle.abs());
        compared += 1;
    }
    println!(
        "ACCEPTANCE 10 (radial agreement): {} (worst rel diff {:.4} over {} cells)",
        if worst <= 0.05 { "PASS" } else { "FAIL" },
        worst,
        compared
    );
    assert!(compared > 10_000);
    assert!(worst <= 0.05);
}

#[test]
fn criterion_11_negative_controls() {
    // Halving A1 below the closed form must fail the upper-barrier check;
    // an increasing hole flux must be rejected by the rate-bound check.
    let grid = standard_grid();
    let alpha = alpha_flux(M, Q, D1);
    let problem = standard_problem(&grid, FluxProfile::Constant { value: alpha });
    let profile = singular_profile();
    let u0 = RadialField::from_profile(&grid, |r| profile.eval(r));
    let traj = solve(&problem, &u0, &StepperConfig::default(), 0.25, &sync_times(0.25, 0.05))
        .expect("short standard solve");
    let a1 = barrier_upper_coefficient(1.0, M, 3, Q, alpha);
    let lower = BarrierLower { c1: 1.0, q: Q, delta1: D1 };
    let halved = BarrierUpper { a1: a1 / 2.0, q: Q, m: M, delta1: D1 };
    let (_, hi) = check_barrier_sandwich(
        &traj,
        &grid,
        &lower,
        &halved,
        a1,
        HOLE,
        D1,
        &problem.inner_flux,
        1e-10,
        1e-8,
    )
    .expect("preconditions hold");
    println!(
        "ACCEPTANCE 11a (halved A1 fails upper check): {} (margin {:.3e})",
        if !hi.pass { "PASS" } else { "FAIL" },
        hi.worst_margin
    );
    assert!(!hi.pass);

    let increasing = FluxProfile::PowerDecay { amplitude: alpha, exponent: -0.5 };
    let err = check_aronson_benilan(&traj, M, &problem.outer_flux, &increasing, 0.1, 1e-6);
    let rejected = matches!(err, Err(fastdiff::CheckError::PreconditionError(_)));
    println!(
        "ACCEPTANCE 11b (increasing g raises PreconditionError): {}",
        if rejected { "PASS" } else { "FAIL" }
    );
    assert!(rejected);
}
