//! Subcommand pipelines: setup, solve, check, persist, plot.

use crate::Failure;
use fastdiff::config::{
    CheckSpec, RecordPolicy, RunConfig, RunConfigFile, RunMode, SweepParam,
};
use fastdiff::continuation::{
    check_blowup_exponent_window, check_cauchy_ratios, check_monotone_decrease,
    run_domain_expansion, run_hole_continuation, shrink_schedule, ContinuationReport,
};
use fastdiff::io::{
    read_grid_faces, read_time_series, read_trajectory, write_report, write_trajectory,
    write_trajectory2d,
};
use fastdiff::model::{
    barrier_upper_coefficient, global_bound_coefficient, BarrierLower, BarrierUpper,
    InitialData, ValidatedSpec,
};
use fastdiff::planar::{
    build_masked_grid, check_mass_balance2d, solve2d, PlanarField, PlanarOuter, PlanarProblem,
    PlanarShape, Trajectory2d,
};
use fastdiff::plot::{heatmap_svg, Plot, Series};
use fastdiff::radial::{
    build_radial_grid, solve, Grading, Mobility, RadialField, RadialGrid, RadialProblem,
    RegularizedMobility, Trajectory,
};
use fastdiff::stepping::sync_times;
use fastdiff::verify::{
    ab_margin_series, check_aronson_benilan, check_barrier_sandwich, check_clamp_insensitivity,
    check_global_bound, check_mass_balance, check_positivity, l1_contraction_suite, CheckReport,
    Location,
};
use serde_json::json;
use std::fs;
use std::path::Path;

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .map_err(|e| Failure { code: 3, message: format!("cannot create {}: {e}", dir.display()) })
}

fn write_svg(dir: &Path, name: &str, svg: String) -> Result<(), Failure> {
    fs::write(dir.join(name), svg)
        .map_err(|e| Failure { code: 3, message: format!("cannot write {name}: {e}") })
}

fn single_origin_hole(spec: &ValidatedSpec) -> Result<f64, Failure> {
    if spec.holes.len() != 1 {
        return Err(Failure::config(
            "radial runs require exactly one hole; use planar mode for several",
        ));
    }
    let norm: f64 = spec.holes[0].center.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 1e-12 {
        return Err(Failure::config("radial runs require the hole centered at the origin"));
    }
    Ok(spec.holes[0].radius)
}

fn radial_setup(cfg: &RunConfig) -> Result<(RadialGrid, RadialProblem, RadialField), Failure> {
    let spec = &cfg.spec;
    let delta = single_origin_hole(spec)?;
    let grid = build_radial_grid(
        delta,
        spec.outer_radius,
        cfg.file.grid.cells,
        cfg.file.grid.grading(),
        spec.n,
    )?;
    let problem = RadialProblem {
        grid: grid.clone(),
        mobility: Mobility::Bare { m: spec.m },
        inner_flux: spec.schedule.holes[0].clone(),
        outer_flux: spec.schedule.outer.clone(),
        inner_scale: spec.schedule.hole_scale(delta, spec.m, spec.q),
    };
    let u0 = RadialField::from_profile(&grid, |r| {
        spec.initial_data
            .eval_radial(r, delta, spec.outer_radius, spec.q, spec.delta1)
    });
    Ok((grid, problem, u0))
}

fn record_times<'a>(cfg: &RunConfig, sync: &'a [f64]) -> Option<&'a [f64]> {
    match cfg.file.run.record {
        RecordPolicy::All => None,
        RecordPolicy::Sync => Some(sync),
        RecordPolicy::Final => Some(&sync[sync.len() - 1..]),
    }
}

/// Barriers implied by the configured singular data, or an error if the
/// initial-data family carries no envelope amplitudes.
fn barriers_from(
    spec: &ValidatedSpec,
    sup_g: f64,
    a1_factor: f64,
) -> Result<(BarrierLower, BarrierUpper, f64), Failure> {
    let (c1, c2) = match spec.initial_data {
        InitialData::Singular { c1, c2, .. } => (c1, c2),
        _ => {
            return Err(Failure::config(
                "barrier checks require the singular initial-data family (C1, C2)",
            ))
        }
    };
    let a1_required = barrier_upper_coefficient(c2, spec.m, spec.n, spec.q, sup_g);
    Ok((
        BarrierLower { c1, q: spec.q, delta1: spec.delta1 },
        BarrierUpper {
            a1: a1_required * a1_factor,
            q: spec.q,
            m: spec.m,
            delta1: spec.delta1,
        },
        a1_required,
    ))
}

fn run_radial_checks(
    cfg: &RunConfig,
    grid: &RadialGrid,
    problem: &RadialProblem,
    u0: &RadialField,
    traj: &Trajectory,
) -> Result<Vec<CheckReport>, Failure> {
    let spec = &cfg.spec;
    let t_end = cfg.file.run.t_end;
    let mut reports = Vec::new();
    for check in &cfg.file.checks {
        match check {
            CheckSpec::MassBalance { tol } => {
                reports.push(check_mass_balance(traj, problem, *tol));
            }
            CheckSpec::L1Contraction { tol, pairs, dt, t_end, cells } => {
                let pair_grid = build_radial_grid(
                    spec.holes[0].radius,
                    spec.outer_radius,
                    *cells,
                    Grading::Uniform,
                    spec.n,
                )?;
                let suite = l1_contraction_suite(
                    &pair_grid,
                    spec.m,
                    *dt,
                    *t_end,
                    *pairs,
                    cfg.file.run.seed,
                    *tol,
                )?;
                reports.extend(suite);
            }
            CheckSpec::AronsonBenilan { tol, t_min } => {
                reports.push(check_aronson_benilan(
                    traj,
                    spec.m,
                    &problem.outer_flux,
                    &problem.inner_flux,
                    *t_min,
                    *tol,
                )?);
            }
            CheckSpec::BarrierSandwich { tol_lower, tol_upper, a1_factor } => {
                let sup_g = problem.inner_flux.sup_on(t_end);
                let (lower, upper, a1_required) = barriers_from(spec, sup_g, *a1_factor)?;
                let (lo, hi) = check_barrier_sandwich(
                    traj,
                    grid,
                    &lower,
                    &upper,
                    a1_required,
                    grid.inner_radius(),
                    spec.delta1,
                    &problem.inner_flux,
                    *tol_lower,
                    *tol_upper,
                )?;
                reports.push(lo);
                reports.push(hi);
            }
            CheckSpec::Positivity { t_min } => {
                reports.push(check_positivity(traj, *t_min));
            }
            CheckSpec::GlobalBound { tol, delta2, a2_factor } => {
                // M is the observed sup at the first cell beyond delta2; the
                // closed form then dominates it by construction of the max
                let cell = grid
                    .centers
                    .iter()
                    .position(|&r| r >= *delta2)
                    .ok_or_else(|| Failure::config("delta2 beyond the outer radius"))?;
                let big_m = traj
                    .fields
                    .iter()
                    .map(|f| f.values[cell])
                    .fold(0.0f64, f64::max);
                let sup_u0 = u0.max();
                let a2 = global_bound_coefficient(
                    spec.m,
                    spec.n,
                    *delta2,
                    problem.outer_flux.sup_on(t_end),
                    big_m,
                    sup_u0,
                ) * a2_factor;
                reports.push(check_global_bound(traj, grid, spec.m, a2, *delta2, *tol)?);
            }
            CheckSpec::ClampInsensitivity { tol, window_a, window_b } => {
                let sync = sync_times(t_end, cfg.file.run.sync_dt);
                let clamp_traj = |w: &[f64; 2]| -> Result<Trajectory, Failure> {
                    let mob = RegularizedMobility::new(spec.m, w[0], w[1])?;
                    let p = RadialProblem {
                        mobility: Mobility::Regularized(mob),
                        ..problem.clone()
                    };
                    Ok(solve(&p, u0, &cfg.file.stepper, t_end, &sync)?)
                };
                let ta = clamp_traj(window_a)?;
                let tb = clamp_traj(window_b)?;
                let wa = (window_a[0] / 2.0, 2.0 * window_a[1]);
                let wb = (window_b[0] / 2.0, 2.0 * window_b[1]);
                reports.push(check_clamp_insensitivity(&ta, &tb, spec.m, wa, wb, *tol)?);
            }
        }
    }
    Ok(reports)
}

fn plot_radial(
    dir: &Path,
    cfg: &RunConfig,
    grid: &RadialGrid,
    problem: &RadialProblem,
    traj: &Trajectory,
) -> Result<(), Failure> {
    let spec = &cfg.spec;
    let singular = matches!(spec.initial_data, InitialData::Singular { .. });
    let mut profiles = Plot::new("radial profiles", "r", "u");
    if singular {
        profiles = profiles.loglog();
    }
    let n_show = 5usize.min(traj.fields.len());
    for k in 0..n_show {
        let idx = k * (traj.fields.len() - 1) / n_show.saturating_sub(1).max(1);
        let f = &traj.fields[idx];
        let pts: Vec<(f64, f64)> = grid.centers.iter().cloned().zip(f.values.iter().cloned()).collect();
        profiles = profiles.with(Series::new(format!("t={:.3}", f.time), pts));
    }
    if singular {
        let sup_g = problem.inner_flux.sup_on(cfg.file.run.t_end);
        if let Ok((lower, upper, _)) = barriers_from(spec, sup_g, 1.0) {
            let rs: Vec<f64> = grid
                .centers
                .iter()
                .cloned()
                .filter(|&r| r < spec.delta1 * 0.999)
                .collect();
            profiles = profiles.with(Series::reference(
                "lower barrier",
                rs.iter().map(|&r| (r, lower.value_extended(r))).collect(),
            ));
            let t_end = cfg.file.run.t_end;
            profiles = profiles.with(Series::reference(
                "upper barrier (t_end)",
                rs.iter()
                    .map(|&r| (r, upper.value(r, t_end).unwrap_or(f64::NAN)))
                    .collect(),
            ));
        }
    }
    write_svg(dir, "profiles.svg", profiles.svg())?;

    let m0 = fastdiff::radial::mass(&traj.fields[0], grid)?;
    let mass_pts: Vec<(f64, f64)> = std::iter::once((0.0, m0))
        .chain(traj.steps.iter().map(|s| (s.t, s.mass)))
        .collect();
    let inflow_pts: Vec<(f64, f64)> = std::iter::once((0.0, m0))
        .chain(
            traj.steps
                .iter()
                .map(|s| (s.t, m0 + s.cum_inflow_outer + s.cum_inflow_inner)),
        )
        .collect();
    let mass_plot = Plot::new("mass vs boundary inflow", "t", "mass")
        .with(Series::new("mass(t)", mass_pts))
        .with(Series::reference("mass(0) + inflow", inflow_pts));
    write_svg(dir, "mass.svg", mass_plot.svg())?;

    if cfg
        .file
        .checks
        .iter()
        .any(|c| matches!(c, CheckSpec::AronsonBenilan { .. }))
    {
        let t_min = cfg
            .file
            .checks
            .iter()
            .find_map(|c| match c {
                CheckSpec::AronsonBenilan { t_min, .. } => Some(*t_min),
                _ => None,
            })
            .unwrap_or(0.1);
        let series = ab_margin_series(traj, spec.m, t_min);
        let plot = Plot::new("intrinsic rate-bound margin", "t", "min margin / scale")
            .with(Series::new("margin", series));
        write_svg(dir, "ab_margin.svg", plot.svg())?;
    }
    Ok(())
}

/// `solve`: one radial or planar run with its configured checks.
pub fn run_solve(cfg: &RunConfig, out: &Path) -> Result<Vec<CheckReport>, Failure> {
    ensure_dir(out)?;
    match cfg.file.run.mode {
        RunMode::Radial => {
            let (grid, problem, u0) = radial_setup(cfg)?;
            let sync = sync_times(cfg.file.run.t_end, cfg.file.run.sync_dt);
            let traj = solve(&problem, &u0, &cfg.file.stepper, cfg.file.run.t_end, &sync)?;
            write_trajectory(out, &traj, &grid, record_times(cfg, &sync))?;
            let reports = run_radial_checks(cfg, &grid, &problem, &u0, &traj)?;
            if cfg.file.output.plots {
                plot_radial(out, cfg, &grid, &problem, &traj)?;
            }
            write_report(&out.join("report.json"), &reports)?;
            Ok(reports)
        }
        RunMode::Planar => {
            let (grid, problem, u0) = planar_setup(cfg)?;
            let sync = sync_times(cfg.file.run.t_end, cfg.file.run.sync_dt);
            let traj = solve2d(&problem, &u0, &cfg.file.stepper, cfg.file.run.t_end, &sync)?;
            write_trajectory2d(out, &traj, &grid, record_times(cfg, &sync))?;
            let reports = run_planar_checks(cfg, &traj, &problem)?;
            if cfg.file.output.plots {
                write_svg(
                    out,
                    "heatmap.svg",
                    heatmap_svg(&grid, traj.final_field(), "final state"),
                )?;
            }
            write_report(&out.join("report.json"), &reports)?;
            Ok(reports)
        }
    }
}

fn planar_setup(cfg: &RunConfig) -> Result<(fastdiff::planar::MaskedGrid, PlanarProblem, PlanarField), Failure> {
    let spec = &cfg.spec;
    let h = cfg
        .file
        .grid
        .h
        .ok_or_else(|| Failure::config("planar runs need grid.h"))?;
    let shape = PlanarShape {
        outer: PlanarOuter::Disk { radius: spec.outer_radius },
        holes: spec
            .holes
            .iter()
            .map(|hole| fastdiff::model::Hole {
                center: hole.center[..2].to_vec(),
                radius: hole.radius,
            })
            .collect(),
    };
    let grid = build_masked_grid(&shape, h)?;
    let problem = PlanarProblem {
        grid: grid.clone(),
        mobility: Mobility::Bare { m: spec.m },
        outer_flux: spec.schedule.outer.clone(),
        hole_flux: spec.schedule.holes.clone(),
        hole_scale: spec
            .holes
            .iter()
            .map(|hole| spec.schedule.hole_scale(hole.radius, spec.m, spec.q))
            .collect(),
    };
    let spec2 = spec.clone();
    let u0 = PlanarField::from_profile(&grid, move |x, y| {
        // distance to the nearest hole center drives the singular family
        let r = spec2
            .holes
            .iter()
            .map(|hole| ((x - hole.center[0]).powi(2) + (y - hole.center[1]).powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min);
        spec2.initial_data.eval_radial(
            r,
            spec2.holes[0].radius,
            spec2.outer_radius,
            spec2.q,
            spec2.delta1,
        )
    });
    Ok((grid, problem, u0))
}

fn run_planar_checks(
    cfg: &RunConfig,
    traj: &Trajectory2d,
    problem: &PlanarProblem,
) -> Result<Vec<CheckReport>, Failure> {
    let mut reports = Vec::new();
    for check in &cfg.file.checks {
        match check {
            CheckSpec::MassBalance { tol } => {
                reports.push(check_mass_balance2d(traj, problem, *tol));
            }
            CheckSpec::Positivity { t_min } => {
                let mut worst = f64::INFINITY;
                let mut loc = None;
                let mut samples = 0u64;
                for f in &traj.fields {
                    if f.time < *t_min {
                        continue;
                    }
                    for (c, &u) in f.values.iter().enumerate() {
                        samples += 1;
                        if u < worst {
                            worst = u;
                            loc = Some(Location { cell: Some(c), time: f.time });
                        }
                    }
                }
                reports.push(CheckReport {
                    name: "positivity".into(),
                    tolerance: 0.0,
                    worst_margin: worst,
                    worst_location: loc,
                    pass: worst > 0.0,
                    samples,
                });
            }
            other => {
                return Err(Failure::config(format!(
                    "check {other:?} is not available in planar mode"
                )))
            }
        }
    }
    Ok(reports)
}

fn continuation_report_json(
    report: &ContinuationReport,
    alpha: f64,
    checks: &[CheckReport],
) -> serde_json::Value {
    json!({
        "schema_version": 1,
        "alpha": alpha,
        "radii": report.runs.iter().map(|r| r.radius).collect::<Vec<_>>(),
        "cmp_region": [report.cmp_region.0, report.cmp_region.1],
        "cmp_t_lo": report.cmp_t_lo,
        "pairwise_sup_diffs": report.pairwise_sup_diffs,
        "fit_window": [report.fit_window.0, report.fit_window.1],
        "qhat_per_time": report.qhat_per_time,
        "checks": checks,
    })
}

/// `continue`: the shrinking-hole study with sandwich, Cauchy and exponent checks.
pub fn run_continuation(cfg: &RunConfig, out: &Path) -> Result<Vec<CheckReport>, Failure> {
    ensure_dir(out)?;
    let spec = &cfg.spec;
    let section = cfg.file.continuation.clone().unwrap_or_default();
    let schedule = shrink_schedule(spec, section.j_max, section.ratio)?;
    let report = run_hole_continuation(spec, &schedule, &section.options)?;

    let mut checks = Vec::new();
    for (j, run) in report.runs.iter().enumerate() {
        let dir = out.join(format!("j_{j}"));
        let sync = sync_times(section.options.t_end, section.options.sync_dt);
        write_trajectory(&dir, &run.trajectory, &run.grid, Some(&sync))?;
        let mut mass = run.mass_report.clone();
        mass.name = format!("mass_balance[j={j}]");
        checks.push(mass);
        if let Some((lo, hi)) = &run.sandwich {
            let mut lo = lo.clone();
            let mut hi = hi.clone();
            lo.name = format!("barrier_lower[j={j}]");
            hi.name = format!("barrier_upper[j={j}]");
            checks.push(lo);
            checks.push(hi);
        }
    }
    checks.push(check_cauchy_ratios(&report, section.cauchy_factor));
    checks.push(check_blowup_exponent_window(
        &report,
        spec.q,
        section.qhat_t_lo,
        section.qhat_t_hi,
        section.qhat_band,
    ));

    if cfg.file.output.plots {
        let finest = report.runs.last().unwrap();
        let mut profiles = Plot::new("finest-level profiles", "r", "u").loglog();
        for &t in &[0.0f64, 0.25, 0.5, 1.0] {
            if let Some(k) = finest.trajectory.index_of_time(t.min(section.options.t_end)) {
                let f = &finest.trajectory.fields[k];
                let pts = finest
                    .grid
                    .centers
                    .iter()
                    .cloned()
                    .zip(f.values.iter().cloned())
                    .collect();
                profiles = profiles.with(Series::new(format!("t={:.2}", f.time), pts));
            }
        }
        if let Ok((lower, upper, _)) = barriers_from(spec, schedule.alpha, 1.0) {
            let rs: Vec<f64> = finest
                .grid
                .centers
                .iter()
                .cloned()
                .filter(|&r| r < spec.delta1 * 0.999)
                .collect();
            profiles = profiles.with(Series::reference(
                "lower barrier",
                rs.iter().map(|&r| (r, lower.value_extended(r))).collect(),
            ));
            profiles = profiles.with(Series::reference(
                "upper barrier (t_end)",
                rs.iter()
                    .map(|&r| (r, upper.value(r, section.options.t_end).unwrap_or(f64::NAN)))
                    .collect(),
            ));
        }
        write_svg(out, "profiles.svg", profiles.svg())?;

        let qplot = Plot::new("fitted blow-up exponent", "t", "q-hat").with(Series::new(
            "q-hat(t)",
            report.qhat_per_time.iter().map(|s| (s.t, s.qhat)).collect(),
        ));
        write_svg(out, "qhat.svg", qplot.svg())?;

        let dplot = Plot::new("pairwise sup differences", "level j", "sup |u_j - u_{j-1}|")
            .with(Series::new(
                "diffs",
                report
                    .pairwise_sup_diffs
                    .iter()
                    .enumerate()
                    .map(|(j, &d)| ((j + 1) as f64, d.max(1e-300)))
                    .collect(),
            ));
        write_svg(out, "pairwise_diffs.svg", dplot.svg())?;
    }

    let json = continuation_report_json(&report, schedule.alpha, &checks);
    fs::write(
        out.join("continuation_report.json"),
        serde_json::to_string_pretty(&json).expect("serializable") + "\n",
    )
    .map_err(|e| Failure::solver(e.to_string()))?;
    write_report(&out.join("report.json"), &checks)?;
    Ok(checks)
}

/// `expand`: growing outer balls with zero outer flux.
pub fn run_expansion(cfg: &RunConfig, out: &Path) -> Result<Vec<CheckReport>, Failure> {
    ensure_dir(out)?;
    let spec = &cfg.spec;
    let section = cfg.file.expansion.clone().unwrap_or_default();
    let report = run_domain_expansion(
        spec,
        &section.radii,
        (section.compare[0], section.compare[1]),
        &section.options,
    )?;
    let mut checks = Vec::new();
    for run in report.runs.iter() {
        let dir = out.join(format!("R_{}", run.radius));
        let sync = sync_times(section.options.t_end, section.options.sync_dt);
        write_trajectory(&dir, &run.trajectory, &run.grid, Some(&sync))?;
        let mut mass = run.mass_report.clone();
        mass.name = format!("mass_balance[R={}]", run.radius);
        checks.push(mass);
    }
    checks.push(check_monotone_decrease(&report));
    if cfg.file.output.plots {
        let dplot = Plot::new("pairwise sup differences", "level", "sup difference").with(
            Series::new(
                "diffs",
                report
                    .pairwise_sup_diffs
                    .iter()
                    .enumerate()
                    .map(|(j, &d)| ((j + 1) as f64, d.max(1e-300)))
                    .collect(),
            ),
        );
        write_svg(out, "pairwise_diffs.svg", dplot.svg())?;
    }
    let json = continuation_report_json(&report, spec.alpha, &checks);
    fs::write(
        out.join("expansion_report.json"),
        serde_json::to_string_pretty(&json).expect("serializable") + "\n",
    )
    .map_err(|e| Failure::solver(e.to_string()))?;
    write_report(&out.join("report.json"), &checks)?;
    Ok(checks)
}

/// `verify`: re-run checks against stored output.
pub fn run_verify(cfg: &RunConfig, out: &Path) -> Result<Vec<CheckReport>, Failure> {
    if !out.exists() {
        return Err(Failure::config(format!("{} does not exist", out.display())));
    }
    // planar outputs have 4-column snapshots; recheck the stored identity
    let first_snap = out.join("snapshots").join("snap_00000.csv");
    let is_planar = fs::read_to_string(&first_snap)
        .ok()
        .map(|text| text.lines().next().map(|l| l.trim() == "t,x,y,u").unwrap_or(false))
        .unwrap_or(false);
    let reports = if is_planar {
        let rows = read_time_series(out)?;
        let m0 = rows.first().map(|r| r.mass).unwrap_or(0.0);
        let mut worst = 0.0f64;
        let mut loc = None;
        for r in rows.iter().skip(1) {
            let err = (r.mass - (m0 + r.cum_inflow_outer + r.cum_inflow_inner)).abs()
                / m0.max(r.mass).max(1e-300);
            if err > worst {
                worst = err;
                loc = Some(Location { cell: None, time: r.t });
            }
        }
        vec![CheckReport {
            name: "mass_balance_columns".into(),
            tolerance: 1e-8,
            worst_margin: -worst,
            worst_location: loc,
            pass: worst <= 1e-8,
            samples: rows.len().saturating_sub(1) as u64,
        }]
    } else {
        let faces = read_grid_faces(out)?;
        let grid = RadialGrid::from_faces(cfg.spec.n, faces, cfg.file.grid.grading())?;
        let traj = read_trajectory(out, &grid)?;
        let delta = grid.inner_radius();
        let problem = RadialProblem {
            grid: grid.clone(),
            mobility: Mobility::Bare { m: cfg.spec.m },
            inner_flux: cfg.spec.schedule.holes[0].clone(),
            outer_flux: cfg.spec.schedule.outer.clone(),
            inner_scale: cfg.spec.schedule.hole_scale(delta, cfg.spec.m, cfg.spec.q),
        };
        let u0 = traj.fields[0].clone();
        let mut filtered = cfg.clone();
        filtered.file.checks.retain(|c| {
            let keep = !matches!(c, CheckSpec::ClampInsensitivity { .. });
            if !keep {
                eprintln!("notice: clamp_insensitivity needs fresh solves; skipped by verify");
            }
            keep
        });
        run_radial_checks(&filtered, &grid, &problem, &u0, &traj)?
    };
    write_report(&out.join("report_verify.json"), &reports)?;
    Ok(reports)
}

/// `barrier`: evaluate and audit the closed forms.
pub fn run_barrier_audit(cfg: &RunConfig, out: Option<&Path>) -> Result<Vec<CheckReport>, Failure> {
    let spec = &cfg.spec;
    let (c1, c2) = match spec.initial_data {
        InitialData::Singular { c1, c2, .. } => (c1, c2),
        _ => (1.0, 1.0),
    };
    let threshold = spec.m * (spec.q + 4.0 / (spec.delta1 * spec.delta1));
    let sup_g = spec.schedule.holes[0].sup_on(cfg.file.run.t_end);
    let a1 = barrier_upper_coefficient(c2, spec.m, spec.n, spec.q, sup_g);
    let delta2 = spec.delta1 / 2.0;
    let a2 = global_bound_coefficient(spec.m, spec.n, delta2, spec.schedule.outer.sup_on(cfg.file.run.t_end), 1.0, 1.0);
    let bound = fastdiff::continuation::shrink_radius_bound(spec.m, spec.q, spec.delta0, spec.delta1);
    println!("n = {}, m = {:.12}, q = {}, delta1 = {}", spec.n, spec.m, spec.q, spec.delta1);
    println!("delta0 (hole separation)      = {:.12}", spec.delta0);
    println!("alpha = 2m(q + 4/delta1^2)    = {:.12}", spec.alpha);
    println!("lower-barrier flux threshold  = {:.12}", threshold);
    println!("alpha / threshold             = {:.12}", spec.alpha / threshold);
    println!("shrink radius bound           = {:.12}", bound);
    println!("A1 (C2 = {c2}, sup g = {sup_g:.6}) = {a1:.6e}");
    println!("A2 (delta2 = {delta2}, M = 1, sup u0 = 1) = {a2:.6e}");

    let lower = BarrierLower { c1, q: spec.q, delta1: spec.delta1 };
    let mut rows = Vec::new();
    let mut worst = f64::INFINITY;
    let n_pts = 96;
    for k in 0..n_pts {
        let r = spec.delta1 * 2e-3f64.powf(1.0 - k as f64 / (n_pts - 1) as f64) * 0.9995;
        let margin = lower.laplacian_margin(spec.m, spec.n, r)?;
        worst = worst.min(margin);
        let upper0 = BarrierUpper { a1, q: spec.q, m: spec.m, delta1: spec.delta1 }
            .value(r, 0.0)
            .unwrap_or(f64::NAN);
        rows.push((r, lower.value_extended(r), upper0, margin));
    }
    let checks = vec![
        CheckReport {
            name: "barrier_lower_subharmonic".into(),
            tolerance: 1e-12,
            worst_margin: worst,
            worst_location: None,
            pass: worst >= -1e-12,
            samples: n_pts as u64,
        },
        CheckReport {
            name: "alpha_factor_two".into(),
            tolerance: 1e-12,
            worst_margin: -((spec.alpha / threshold) - 2.0).abs(),
            worst_location: None,
            pass: ((spec.alpha / threshold) - 2.0).abs() <= 1e-12,
            samples: 1,
        },
    ];
    if let Some(dir) = out {
        ensure_dir(dir)?;
        let mut csv = String::from("r,lower,upper_t0,laplacian_margin\n");
        for (r, lo, hi, margin) in &rows {
            csv.push_str(&format!(
                "{},{},{},{}\n",
                fastdiff::io::fmt_f64(*r),
                fastdiff::io::fmt_f64(*lo),
                fastdiff::io::fmt_f64(*hi),
                fastdiff::io::fmt_f64(*margin)
            ));
        }
        fs::write(dir.join("barrier_audit.csv"), csv)
            .map_err(|e| Failure::solver(e.to_string()))?;
        let summary = json!({
            "schema_version": 1,
            "alpha": spec.alpha,
            "threshold": threshold,
            "shrink_radius_bound": bound,
            "a1": a1,
            "a2": a2,
            "delta0": spec.delta0,
            "checks": checks,
        });
        fs::write(
            dir.join("barrier_summary.json"),
            serde_json::to_string_pretty(&summary).expect("serializable") + "\n",
        )
        .map_err(|e| Failure::solver(e.to_string()))?;
    }
    Ok(checks)
}

/// `sweep`: cartesian product of parameter overrides, run in parallel.
pub fn run_sweep(
    cfg: &RunConfig,
    out: &Path,
    tol_overrides: &[(String, f64)],
    apply: &(dyn Fn(&mut RunConfigFile, &str, f64) -> Result<(), Failure> + Sync),
) -> Result<Vec<CheckReport>, Failure> {
    use rayon::prelude::*;
    ensure_dir(out)?;
    let section = cfg
        .file
        .sweep
        .clone()
        .ok_or_else(|| Failure::config("sweep requires a [sweep] section"))?;
    if section.grid.is_empty() {
        return Err(Failure::config("sweep grid is empty"));
    }
    let params: &[SweepParam] = &section.grid;
    let mut combos: Vec<Vec<(String, f64)>> = vec![Vec::new()];
    for p in params {
        if p.values.is_empty() {
            return Err(Failure::config(format!("sweep parameter {} has no values", p.param)));
        }
        let mut next = Vec::new();
        for combo in &combos {
            for &v in &p.values {
                let mut c = combo.clone();
                c.push((p.param.clone(), v));
                next.push(c);
            }
        }
        combos = next;
    }

    let results: Vec<Result<(usize, Vec<CheckReport>), (usize, Failure)>> = combos
        .par_iter()
        .enumerate()
        .map(|(idx, combo)| {
            let mut file = cfg.file.clone();
            for (p, v) in combo {
                apply(&mut file, p, *v).map_err(|e| (idx, e))?;
            }
            let mut case = fastdiff::config::resolve(file).map_err(|e| (idx, Failure::from(e)))?;
            crate::apply_tol_overrides(&mut case.file.checks, tol_overrides)
                .map_err(|e| (idx, e))?;
            let dir = out.join(format!("case_{idx:03}"));
            let meta = json!({ "overrides": combo });
            fs::create_dir_all(&dir)
                .and_then(|_| {
                    fs::write(
                        dir.join("case_meta.json"),
                        serde_json::to_string_pretty(&meta).expect("serializable") + "\n",
                    )
                })
                .map_err(|e| (idx, Failure::solver(e.to_string())))?;
            let mut reports = run_solve(&case, &dir).map_err(|e| (idx, e))?;
            for r in reports.iter_mut() {
                r.name = format!("case_{idx:03}/{}", r.name);
            }
            Ok((idx, reports))
        })
        .collect();

    let mut all = Vec::new();
    let mut first_err: Option<(usize, Failure)> = None;
    for r in results {
        match r {
            Ok((_, reports)) => all.extend(reports),
            Err((idx, f)) => {
                if first_err.as_ref().map(|(i, _)| idx < *i).unwrap_or(true) {
                    first_err = Some((idx, f));
                }
            }
        }
    }
    if let Some((idx, f)) = first_err {
        return Err(Failure {
            code: f.code,
            message: format!("sweep case {idx}: {}", f.message),
        });
    }
    let summary = json!({
        "schema_version": 1,
        "cases": combos.len(),
        "checks": all,
    });
    fs::write(
        out.join("sweep_summary.json"),
        serde_json::to_string_pretty(&summary).expect("serializable") + "\n",
    )
    .map_err(|e| Failure::solver(e.to_string()))?;
    Ok(all)
}
