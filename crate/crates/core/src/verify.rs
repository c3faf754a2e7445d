//! Pass/fail checks with margins for each desk-checkable statement: the mass
//! identity, L1 contraction of ordered runs, the intrinsic bound
//! u_t <= u/((1-m)t) under decreasing boundary input, barrier sandwiches,
//! positivity, the global exponential-in-r bound, and clamp insensitivity.
//!
//! Margins are signed and normalized; a check passes iff its worst margin is
//! >= -tolerance. "scale" in relative margins is max(1, sup of the relevant
//! field over the check region), which avoids division blowup near
//! extinction-small values. Checks are pure functions of immutable
//! trajectories: re-running one yields a bit-identical report.

use crate::error::CheckError;
use crate::model::{BarrierLower, BarrierUpper, FluxProfile};
use crate::radial::{mass, RadialField, RadialGrid, RadialProblem, Trajectory};
use crate::stepping::StepperConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Cell/time coordinates of the worst margin. `cell` is absent for checks of
/// integral quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub cell: Option<usize>,
    pub time: f64,
}

/// Outcome of one verification run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub tolerance: f64,
    /// Signed worst margin; more negative than -tolerance means violation.
    pub worst_margin: f64,
    pub worst_location: Option<Location>,
    pub pass: bool,
    pub samples: u64,
}

impl CheckReport {
    fn from_margin(
        name: impl Into<String>,
        tolerance: f64,
        worst_margin: f64,
        worst_location: Option<Location>,
        samples: u64,
    ) -> Self {
        CheckReport {
            name: name.into(),
            tolerance,
            worst_margin,
            worst_location,
            pass: worst_margin >= -tolerance,
            samples,
        }
    }
}

fn field_scale(fields: &[&RadialField]) -> f64 {
    let mut s: f64 = 1.0;
    for f in fields {
        for &v in &f.values {
            s = s.max(v.abs());
        }
    }
    s
}

/// Discrete mass identity: at every snapshot, the mass recomputed from the
/// field values equals the initial mass plus the recorded cumulative boundary
/// inflows. The two sides travel independent paths (cell values times shell
/// volumes vs the stepper's flux bookkeeping), and the relative error is
/// reported against max(mass(0), mass(t)).
pub fn check_mass_balance(traj: &Trajectory, problem: &RadialProblem, tol: f64) -> CheckReport {
    let grid = &problem.grid;
    let m0 = mass(&traj.fields[0], grid).expect("trajectory matches grid");
    let mut worst = f64::INFINITY;
    let mut loc = None;
    for (k, s) in traj.steps.iter().enumerate() {
        let cum = s.cum_inflow_outer + s.cum_inflow_inner;
        let mk = mass(&traj.fields[k + 1], grid).expect("trajectory matches grid");
        let err = (mk - (m0 + cum)).abs() / m0.max(mk).max(1e-300);
        if -err < worst {
            worst = -err;
            loc = Some(Location { cell: None, time: s.t });
        }
    }
    if traj.steps.is_empty() {
        worst = 0.0;
    }
    CheckReport::from_margin("mass_balance", tol, worst, loc, traj.steps.len() as u64)
}

fn same_snapshot_times(a: &Trajectory, b: &Trajectory) -> Result<(), CheckError> {
    if a.fields.len() != b.fields.len() {
        return Err(CheckError::GridMismatch(format!(
            "snapshot counts differ: {} vs {}",
            a.fields.len(),
            b.fields.len()
        )));
    }
    for (fa, fb) in a.fields.iter().zip(&b.fields) {
        if (fa.time - fb.time).abs() > 1e-12 * fa.time.abs().max(1.0) {
            return Err(CheckError::GridMismatch(format!(
                "snapshot times differ: {} vs {}",
                fa.time, fb.time
            )));
        }
        if fa.values.len() != fb.values.len() {
            return Err(CheckError::GridMismatch("cell counts differ".into()));
        }
    }
    Ok(())
}

/// L1 contraction of ordered data (discrete comparison lemma): at every
/// snapshot, the positive-part L1 gap is bounded by the initial gap plus the
/// time-integrated positive part of the flux differences.
pub fn check_l1_contraction(
    traj_a: &Trajectory,
    traj_b: &Trajectory,
    problem_a: &RadialProblem,
    problem_b: &RadialProblem,
    tol: f64,
) -> Result<CheckReport, CheckError> {
    same_snapshot_times(traj_a, traj_b)?;
    let grid = &problem_a.grid;
    if grid.faces != problem_b.grid.faces {
        return Err(CheckError::GridMismatch("runs use different grids".into()));
    }
    let gap = |fa: &RadialField, fb: &RadialField| -> f64 {
        fa.values
            .iter()
            .zip(&fb.values)
            .zip(&grid.volumes)
            .map(|((a, b), v)| (a - b).max(0.0) * v)
            .sum()
    };
    let scale = field_scale(&[&traj_a.fields[0], traj_a.final_field(), traj_b.final_field()]);
    let initial_gap = gap(&traj_a.fields[0], &traj_b.fields[0]);
    let a_in = grid.face_areas[0];
    let a_out = *grid.face_areas.last().unwrap();
    let mut flux_gap = 0.0;
    let mut worst = f64::INFINITY;
    let mut loc = None;
    for (k, s) in traj_a.steps.iter().enumerate() {
        let df = (problem_a.outer_conormal(s.t) - problem_b.outer_conormal(s.t)).max(0.0);
        let dg = (problem_a.inner_conormal(s.t) - problem_b.inner_conormal(s.t)).max(0.0);
        flux_gap += s.dt * (a_out * df + a_in * dg);
        let lhs = gap(&traj_a.fields[k + 1], &traj_b.fields[k + 1]);
        let margin = (initial_gap + flux_gap - lhs) / scale;
        if margin < worst {
            worst = margin;
            loc = Some(Location { cell: None, time: s.t });
        }
    }
    if traj_a.steps.is_empty() {
        worst = 0.0;
    }
    Ok(CheckReport::from_margin(
        "l1_contraction",
        tol,
        worst,
        loc,
        traj_a.steps.len() as u64,
    ))
}

/// Intrinsic rate bound u_t <= u/((1-m)t) for zero outer flux and
/// nonincreasing hole flux. The backward difference is evaluated at the
/// implicit endpoint t_k, matching the scheme; snapshots before `t_min` are
/// skipped because the discrete estimate needs t bounded away from 0.
pub fn check_aronson_benilan(
    traj: &Trajectory,
    m: f64,
    outer: &FluxProfile,
    hole: &FluxProfile,
    t_min: f64,
    tol: f64,
) -> Result<CheckReport, CheckError> {
    if !outer.is_zero() {
        return Err(CheckError::PreconditionError(
            "the u_t bound requires f = 0 on the outer boundary".into(),
        ));
    }
    let t_last = traj.final_field().time;
    if !hole.is_nonincreasing() {
        return Err(CheckError::PreconditionError(
            "the u_t bound requires nonincreasing hole flux".into(),
        ));
    }
    // audit the monotone flag against samples
    let mut prev = hole.value(0.0);
    for k in 1..=256 {
        let t = t_last * k as f64 / 256.0;
        let v = hole.value(t);
        if v > prev * (1.0 + 1e-12) + 1e-300 {
            return Err(CheckError::PreconditionError(format!(
                "hole flux increases between samples near t = {t}"
            )));
        }
        prev = v;
    }
    let included: Vec<&RadialField> = traj.fields.iter().filter(|f| f.time >= t_min).collect();
    let scale = field_scale(&included);
    let mut worst = f64::INFINITY;
    let mut loc = None;
    let mut samples = 0u64;
    for k in 1..traj.fields.len() {
        let now = &traj.fields[k];
        if now.time < t_min {
            continue;
        }
        let prev = &traj.fields[k - 1];
        let dt = now.time - prev.time;
        let rate_bound = 1.0 / ((1.0 - m) * now.time);
        for (c, (&u, &u_prev)) in now.values.iter().zip(&prev.values).enumerate() {
            let ut = (u - u_prev) / dt;
            let margin = (u * rate_bound - ut) / scale;
            samples += 1;
            if margin < worst {
                worst = margin;
                loc = Some(Location { cell: Some(c), time: now.time });
            }
        }
    }
    if samples == 0 {
        worst = 0.0;
    }
    Ok(CheckReport::from_margin("aronson_benilan", tol, worst, loc, samples))
}

/// Per-snapshot worst intrinsic-rate margin, for plotting: at each retained
/// snapshot time the minimum over cells of (u/((1-m)t) - u_t)/scale.
pub fn ab_margin_series(traj: &Trajectory, m: f64, t_min: f64) -> Vec<(f64, f64)> {
    let included: Vec<&RadialField> = traj.fields.iter().filter(|f| f.time >= t_min).collect();
    let scale = field_scale(&included);
    let mut out = Vec::new();
    for k in 1..traj.fields.len() {
        let now = &traj.fields[k];
        if now.time < t_min {
            continue;
        }
        let prev = &traj.fields[k - 1];
        let dt = now.time - prev.time;
        let rate_bound = 1.0 / ((1.0 - m) * now.time);
        let margin = now
            .values
            .iter()
            .zip(&prev.values)
            .map(|(&u, &u_prev)| (u * rate_bound - (u - u_prev) / dt) / scale)
            .fold(f64::INFINITY, f64::min);
        out.push((now.time, margin));
    }
    out
}

/// Pointwise barrier sandwich on r in [r_lo, r_hi): the solution stays above
/// the lower barrier and below the upper barrier at every snapshot.
///
/// Preconditions: the unscaled hole-flux factor must exceed the lower-barrier
/// threshold m(q + 4/delta1^2) for all times, and the initial data must sit
/// below the upper barrier on the region. The upper report additionally
/// audits the supplied amplitude against `a1_required` (the closed-form
/// value): a non-conforming A1 contributes a negative margin
/// (a1 - a1_required)/a1_required, so deliberately undersized amplitudes fail.
#[allow(clippy::too_many_arguments)]
pub fn check_barrier_sandwich(
    traj: &Trajectory,
    grid: &RadialGrid,
    lower: &BarrierLower,
    upper: &BarrierUpper,
    a1_required: f64,
    r_lo: f64,
    r_hi: f64,
    hole_g: &FluxProfile,
    tol_lower: f64,
    tol_upper: f64,
) -> Result<(CheckReport, CheckReport), CheckError> {
    let m = upper.m;
    let q = upper.q;
    let t_last = traj.final_field().time;
    let threshold = m * (q + 4.0 / (lower.delta1 * lower.delta1));
    if !(hole_g.inf_on(t_last) > threshold) {
        return Err(CheckError::PreconditionError(format!(
            "lower barrier requires inf g > m(q + 4/delta1^2) = {threshold:e}, got {:e}",
            hole_g.inf_on(t_last)
        )));
    }
    let cells: Vec<usize> = grid
        .centers
        .iter()
        .enumerate()
        .filter(|&(_, &r)| r >= r_lo && r < r_hi)
        .map(|(k, _)| k)
        .collect();
    // hypothesis (2.4): initial data below the upper barrier on the region
    for &c in &cells {
        let r = grid.centers[c];
        let u0 = traj.fields[0].values[c];
        if u0 > upper.value(r, 0.0).unwrap_or(f64::INFINITY) {
            return Err(CheckError::PreconditionError(format!(
                "initial data exceeds the upper barrier at r = {r}"
            )));
        }
    }
    let scale = {
        let mut s: f64 = 1.0;
        for f in &traj.fields {
            for &c in &cells {
                s = s.max(f.values[c]);
            }
        }
        s
    };
    let mut worst_lo = f64::INFINITY;
    let mut worst_hi = if upper.a1 < a1_required {
        (upper.a1 - a1_required) / a1_required
    } else {
        f64::INFINITY
    };
    let mut loc_lo = None;
    let mut loc_hi = None;
    let mut samples = 0u64;
    for f in &traj.fields {
        for &c in &cells {
            let r = grid.centers[c];
            let u = f.values[c];
            samples += 1;
            let mlo = (u - lower.value_extended(r)) / scale;
            if mlo < worst_lo {
                worst_lo = mlo;
                loc_lo = Some(Location { cell: Some(c), time: f.time });
            }
            let mhi = (upper.value(r, f.time).expect("region inside (0, delta1)") - u) / scale;
            if mhi < worst_hi {
                worst_hi = mhi;
                loc_hi = Some(Location { cell: Some(c), time: f.time });
            }
        }
    }
    if samples == 0 {
        worst_lo = 0.0;
        if worst_hi == f64::INFINITY {
            worst_hi = 0.0;
        }
    }
    Ok((
        CheckReport::from_margin("barrier_lower", tol_lower, worst_lo, loc_lo, samples),
        CheckReport::from_margin("barrier_upper", tol_upper, worst_hi, loc_hi, samples + 1),
    ))
}

/// Strict positivity of every cell for t >= t_min (the discrete analogue of
/// instantaneous positivity). The reported margin is the minimum cell value;
/// the check passes only for strictly positive minima.
pub fn check_positivity(traj: &Trajectory, t_min: f64) -> CheckReport {
    let mut worst = f64::INFINITY;
    let mut loc = None;
    let mut samples = 0u64;
    for f in &traj.fields {
        if f.time < t_min {
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
    if samples == 0 {
        worst = 0.0;
    }
    CheckReport {
        name: "positivity".into(),
        tolerance: 0.0,
        worst_margin: worst,
        worst_location: loc,
        pass: worst > 0.0,
        samples,
    }
}

/// Global bound u(r, t) <= A2 (1+t)^(1/(1-m)) e^(r/delta2) on r >= delta2,
/// for bounded data on a ball-shaped domain (c0 = 1).
pub fn check_global_bound(
    traj: &Trajectory,
    grid: &RadialGrid,
    m: f64,
    a2: f64,
    delta2: f64,
    tol: f64,
) -> Result<CheckReport, CheckError> {
    if delta2 >= grid.outer_radius() {
        return Err(CheckError::PreconditionError(format!(
            "delta2 = {delta2} lies outside the annulus"
        )));
    }
    let cells: Vec<usize> = grid
        .centers
        .iter()
        .enumerate()
        .filter(|&(_, &r)| r >= delta2)
        .map(|(k, _)| k)
        .collect();
    let scale = {
        let mut s: f64 = 1.0;
        for f in &traj.fields {
            for &c in &cells {
                s = s.max(f.values[c]);
            }
        }
        s
    };
    let mut worst = f64::INFINITY;
    let mut loc = None;
    let mut samples = 0u64;
    for f in &traj.fields {
        let growth = (1.0 + f.time).powf(1.0 / (1.0 - m));
        for &c in &cells {
            let r = grid.centers[c];
            let w = a2 * growth * (r / delta2).exp();
            let margin = (w - f.values[c]) / scale;
            samples += 1;
            if margin < worst {
                worst = margin;
                loc = Some(Location { cell: Some(c), time: f.time });
            }
        }
    }
    if samples == 0 {
        worst = 0.0;
    }
    Ok(CheckReport::from_margin("global_bound", tol, worst, loc, samples))
}

/// Two runs whose value ranges never left either clamp window must coincide:
/// the clamp levels are proof scaffolding, not physics.
pub fn check_clamp_insensitivity(
    traj_a: &Trajectory,
    traj_b: &Trajectory,
    m: f64,
    window_a: (f64, f64),
    window_b: (f64, f64),
    tol: f64,
) -> Result<CheckReport, CheckError> {
    same_snapshot_times(traj_a, traj_b)?;
    for (label, traj) in [("first", traj_a), ("second", traj_b)] {
        for f in &traj.fields {
            for &u in &f.values {
                let v = u.powf(m);
                for (wlabel, w) in [("first", window_a), ("second", window_b)] {
                    if v < w.0 || v > w.1 {
                        return Err(CheckError::PreconditionError(format!(
                            "{label} run leaves the {wlabel} clamp window: u^m = {v:e} \
                             outside [{:e}, {:e}] at t = {}",
                            w.0, w.1, f.time
                        )));
                    }
                }
            }
        }
    }
    let mut worst = 0.0f64;
    let mut loc = None;
    let mut samples = 0u64;
    for (fa, fb) in traj_a.fields.iter().zip(&traj_b.fields) {
        for (c, (&a, &b)) in fa.values.iter().zip(&fb.values).enumerate() {
            samples += 1;
            let d = (a - b).abs();
            if d > worst {
                worst = d;
                loc = Some(Location { cell: Some(c), time: fa.time });
            }
        }
    }
    Ok(CheckReport::from_margin(
        "clamp_insensitivity",
        tol,
        -worst,
        loc,
        samples,
    ))
}

/// One randomized ordered pair for the contraction suite: bounded cellwise
/// data with a nonnegative gap, piecewise-constant ordered flux schedules.
pub struct OrderedPair {
    pub problem_a: RadialProblem,
    pub problem_b: RadialProblem,
    pub u0_a: RadialField,
    pub u0_b: RadialField,
}

pub fn random_ordered_pair(grid: &RadialGrid, m: f64, seed: u64) -> OrderedPair {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nc = grid.n_cells();
    let mut base = Vec::with_capacity(nc);
    let mut upper = Vec::with_capacity(nc);
    for _ in 0..nc {
        let b = rng.random_range(0.3..1.8);
        base.push(b);
        upper.push(b + rng.random_range(0.0..1.0));
    }
    let piecewise_pair = |rng: &mut ChaCha8Rng| {
        let breakpoints = vec![0.125, 0.25, 0.375];
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for _ in 0..4 {
            let a = rng.random_range(0.0..1.5);
            lo.push(a);
            hi.push(a + rng.random_range(0.0..1.0));
        }
        (
            FluxProfile::PiecewiseConstant { breakpoints: breakpoints.clone(), values: lo },
            FluxProfile::PiecewiseConstant { breakpoints, values: hi },
        )
    };
    let (g_lo, g_hi) = piecewise_pair(&mut rng);
    let (f_lo, f_hi) = piecewise_pair(&mut rng);
    let make = |inner: FluxProfile, outer: FluxProfile| RadialProblem {
        grid: grid.clone(),
        mobility: crate::radial::Mobility::Bare { m },
        inner_flux: inner,
        outer_flux: outer,
        inner_scale: 1.0,
    };
    OrderedPair {
        problem_a: make(g_lo, f_lo),
        problem_b: make(g_hi, f_hi),
        u0_a: RadialField { values: base, time: 0.0 },
        u0_b: RadialField { values: upper, time: 0.0 },
    }
}

/// Run `pairs` seeded ordered pairs on a shared grid with fixed step times
/// and check the contraction inequality on each. Pairs run in parallel;
/// per-pair seeding keeps the outcome independent of the thread count.
pub fn l1_contraction_suite(
    grid: &RadialGrid,
    m: f64,
    dt: f64,
    t_end: f64,
    pairs: usize,
    seed: u64,
    tol: f64,
) -> Result<Vec<CheckReport>, crate::error::SolverError> {
    use rayon::prelude::*;
    let cfg = StepperConfig::fixed(dt);
    (0..pairs)
        .into_par_iter()
        .map(|k| {
            let pair = random_ordered_pair(grid, m, seed.wrapping_add(k as u64));
            let ta = crate::radial::solve(&pair.problem_a, &pair.u0_a, &cfg, t_end, &[])?;
            let tb = crate::radial::solve(&pair.problem_b, &pair.u0_b, &cfg, t_end, &[])?;
            let mut report =
                check_l1_contraction(&ta, &tb, &pair.problem_a, &pair.problem_b, tol)
                    .expect("shared grid and step times");
            report.name = format!("l1_contraction[{k}]");
            Ok(report)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{alpha_flux, barrier_upper_coefficient, global_bound_coefficient};
    use crate::radial::{build_radial_grid, solve, Grading, Mobility};

    fn grid40() -> RadialGrid {
        build_radial_grid(0.1, 1.0, 40, Grading::Uniform, 3).unwrap()
    }

    fn zero_problem(grid: RadialGrid) -> RadialProblem {
        RadialProblem {
            grid,
            mobility: Mobility::Bare { m: 1.0 / 3.0 },
            inner_flux: FluxProfile::zero(),
            outer_flux: FluxProfile::zero(),
            inner_scale: 1.0,
        }
    }

    #[test]
    fn mass_balance_constant_run_is_exact() {
        let p = zero_problem(grid40());
        let u0 = RadialField::constant(&p.grid, 1.0);
        let traj = solve(&p, &u0, &StepperConfig::fixed(0.05), 0.5, &[]).unwrap();
        let r = check_mass_balance(&traj, &p, 1e-8);
        assert!(r.pass);
        assert!(r.worst_margin > -1e-14);
    }

    #[test]
    fn mass_balance_randomized_schedules_pass() {
        let mut p = zero_problem(grid40());
        p.inner_flux = FluxProfile::PiecewiseConstant {
            breakpoints: vec![0.1, 0.3],
            values: vec![2.0, 0.7, 1.3],
        };
        p.outer_flux = FluxProfile::PowerDecay { amplitude: 0.5, exponent: 1.0 };
        let u0 = RadialField::from_profile(&p.grid, |r| 1.0 + r);
        let traj = solve(&p, &u0, &StepperConfig::default(), 0.5, &[]).unwrap();
        let r = check_mass_balance(&traj, &p, 1e-8);
        assert!(r.pass, "margin {:e}", r.worst_margin);
    }

    #[test]
    fn contraction_identical_runs_zero_margin() {
        let p = zero_problem(grid40());
        let u0 = RadialField::from_profile(&p.grid, |r| 1.0 + r * r);
        let cfg = StepperConfig::fixed(0.05);
        let t1 = solve(&p, &u0, &cfg, 0.3, &[]).unwrap();
        let t2 = solve(&p, &u0, &cfg, 0.3, &[]).unwrap();
        let r = check_l1_contraction(&t1, &t2, &p, &p, 1e-8).unwrap();
        assert!(r.pass);
        assert_eq!(r.worst_margin, 0.0);
        // determinism: bit-identical on re-run
        let r2 = check_l1_contraction(&t1, &t2, &p, &p, 1e-8).unwrap();
        assert_eq!(r, r2);
    }

    #[test]
    fn contraction_ordered_pair_and_perturbed_fluxes() {
        let pair = random_ordered_pair(&grid40(), 1.0 / 3.0, 7);
        let cfg = StepperConfig::fixed(1.0 / 64.0);
        let ta = solve(&pair.problem_a, &pair.u0_a, &cfg, 0.5, &[]).unwrap();
        let tb = solve(&pair.problem_b, &pair.u0_b, &cfg, 0.5, &[]).unwrap();
        let r = check_l1_contraction(&ta, &tb, &pair.problem_a, &pair.problem_b, 1e-8).unwrap();
        assert!(r.pass, "margin {:e}", r.worst_margin);
        // reversed (unordered) fluxes: inequality still holds, margin positive
        let r_rev =
            check_l1_contraction(&tb, &ta, &pair.problem_b, &pair.problem_a, 1e-8).unwrap();
        assert!(r_rev.pass, "margin {:e}", r_rev.worst_margin);
    }

    #[test]
    fn contraction_suite_runs_clean() {
        let grid = build_radial_grid(0.1, 1.0, 24, Grading::Uniform, 3).unwrap();
        let reports =
            l1_contraction_suite(&grid, 1.0 / 3.0, 1.0 / 32.0, 0.25, 8, 42, 1e-8).unwrap();
        assert_eq!(reports.len(), 8);
        assert!(reports.iter().all(|r| r.pass));
    }

    #[test]
    fn aronson_benilan_constant_solution_passes() {
        let p = zero_problem(grid40());
        let u0 = RadialField::constant(&p.grid, 2.0);
        let traj = solve(&p, &u0, &StepperConfig::fixed(0.05), 1.0, &[]).unwrap();
        let r = check_aronson_benilan(&traj, 1.0 / 3.0, &p.outer_flux, &p.inner_flux, 0.1, 1e-6)
            .unwrap();
        assert!(r.pass);
        assert!(r.worst_margin > 0.0); // u_t = 0 < u/((1-m)t)
    }

    #[test]
    fn aronson_benilan_rejects_increasing_flux_and_nonzero_outer() {
        let p = zero_problem(grid40());
        let u0 = RadialField::constant(&p.grid, 1.0);
        let traj = solve(&p, &u0, &StepperConfig::fixed(0.1), 0.2, &[]).unwrap();
        let increasing = FluxProfile::PowerDecay { amplitude: 1.0, exponent: -0.5 };
        assert!(matches!(
            check_aronson_benilan(&traj, 1.0 / 3.0, &p.outer_flux, &increasing, 0.1, 1e-6),
            Err(CheckError::PreconditionError(_))
        ));
        let f = FluxProfile::Constant { value: 0.5 };
        assert!(matches!(
            check_aronson_benilan(&traj, 1.0 / 3.0, &f, &p.inner_flux, 0.1, 1e-6),
            Err(CheckError::PreconditionError(_))
        ));
    }

    #[test]
    fn sandwich_zero_time_at_lower_barrier_and_a1_audit() {
        let (m, q, d1) = (1.0 / 3.0, 4.5, 0.4);
        let grid = build_radial_grid(0.1, 1.0, 60, Grading::Uniform, 3).unwrap();
        let lower = BarrierLower { c1: 1.0, q, delta1: d1 };
        let alpha = alpha_flux(m, q, d1);
        let a1 = barrier_upper_coefficient(1.0, m, 3, q, alpha);
        let upper = BarrierUpper { a1, q, m, delta1: d1 };
        // single-snapshot trajectory initialized exactly at the lower barrier
        let u0 = RadialField::from_profile(&grid, |r| lower.value_extended(r).max(1e-12));
        let traj = Trajectory { fields: vec![u0], steps: vec![] };
        let g = FluxProfile::Constant { value: alpha };
        let (lo, hi) =
            check_barrier_sandwich(&traj, &grid, &lower, &upper, a1, 0.1, d1, &g, 1e-10, 1e-8)
                .unwrap();
        assert!(lo.pass && hi.pass);
        assert!(lo.worst_margin.abs() < 1e-12); // margin 0 at t = 0
        // halving A1 below the formula flags non-conformance and fails
        let halved = BarrierUpper { a1: a1 / 2.0, ..upper };
        let (_, hi2) =
            check_barrier_sandwich(&traj, &grid, &lower, &halved, a1, 0.1, d1, &g, 1e-10, 1e-8)
                .unwrap();
        assert!(!hi2.pass);
        assert!(hi2.worst_margin <= -0.5 + 1e-12);
        // sub-threshold flux violates the lower-barrier hypothesis
        let weak = FluxProfile::Constant { value: alpha / 4.0 };
        assert!(matches!(
            check_barrier_sandwich(&traj, &grid, &lower, &upper, a1, 0.1, d1, &weak, 1e-10, 1e-8),
            Err(CheckError::PreconditionError(_))
        ));
    }

    #[test]
    fn positivity_strict() {
        let grid = grid40();
        let pos = Trajectory {
            fields: vec![RadialField::constant(&grid, 0.5)],
            steps: vec![],
        };
        assert!(check_positivity(&pos, 0.0).pass);
        let zero = Trajectory {
            fields: vec![RadialField::constant(&grid, 0.0)],
            steps: vec![],
        };
        let r = check_positivity(&zero, 0.0);
        assert!(!r.pass);
        assert_eq!(r.worst_margin, 0.0);
    }

    #[test]
    fn global_bound_formula_passes_and_zero_a2_fails() {
        let (m, delta2) = (1.0 / 3.0, 0.2);
        let p = zero_problem(grid40());
        let u0 = RadialField::constant(&p.grid, 0.5);
        let traj = solve(&p, &u0, &StepperConfig::fixed(0.1), 0.5, &[]).unwrap();
        let a2 = global_bound_coefficient(m, 3, delta2, 0.0, 0.5, 0.5);
        let ok = check_global_bound(&traj, &p.grid, m, a2, delta2, 1e-8).unwrap();
        assert!(ok.pass);
        assert!(ok.worst_margin > 1.0); // large margin for small constant data
        let bad = check_global_bound(&traj, &p.grid, m, 0.0, delta2, 1e-8).unwrap();
        assert!(!bad.pass);
    }

    #[test]
    fn clamp_insensitivity_identical_and_active() {
        let p = zero_problem(grid40());
        let u0 = RadialField::constant(&p.grid, 1.0); // u^m = 1
        let cfg = StepperConfig::fixed(0.1);
        let t1 = solve(&p, &u0, &cfg, 0.3, &[]).unwrap();
        let t2 = solve(&p, &u0, &cfg, 0.3, &[]).unwrap();
        let r = check_clamp_insensitivity(&t1, &t2, 1.0 / 3.0, (0.5, 2.0), (0.25, 4.0), 1e-8)
            .unwrap();
        assert!(r.pass);
        assert_eq!(r.worst_margin, 0.0);
        // a window the range exits is a precondition failure
        assert!(matches!(
            check_clamp_insensitivity(&t1, &t2, 1.0 / 3.0, (1.5, 2.0), (0.25, 4.0), 1e-8),
            Err(CheckError::PreconditionError(_))
        ));
    }
}
