//! Limit procedures that manufacture singular solutions: shrinking holes
//! eps_j -> 0 with hole flux alpha/eps_j^(qm+1), and expanding outer balls
//! with zero outer flux. Each level is one radial solve; the report collects
//! barrier-sandwich margins, pairwise sup-differences on a fixed compact
//! region (the empirical Cauchy property behind the compactness argument),
//! and fitted blow-up exponents.
//!
//! Grids across levels share a nested face set: every eps_j is a face of the
//! master grid and level j solves on its suffix, so pairwise differences need
//! no interpolation. Runs at different levels are independent and execute in
//! parallel.

use crate::error::{CheckError, ModelError, RunError};
use crate::model::{
    barrier_upper_coefficient, BarrierLower, BarrierUpper, FluxProfile, InitialData,
    ValidatedSpec,
};
use crate::radial::{
    solve, Grading, Mobility, RadialField, RadialGrid, RadialProblem, Trajectory,
};
use crate::stepping::{sync_times, StepperConfig};
use crate::verify::{check_barrier_sandwich, check_mass_balance, CheckReport};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Strictly decreasing hole radii with the continuation flux level alpha;
/// level j prescribes conormal flux alpha/eps_j^(qm+1) on the hole.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShrinkSchedule {
    pub radii: Vec<f64>,
    pub alpha: f64,
}

/// Largest admissible starting radius:
/// min(delta1/2, ((1-m)q/(4+(1-m)q))^2, (1-m)q delta0/(4+(1-m)q)).
pub fn shrink_radius_bound(m: f64, q: f64, delta0: f64, delta1: f64) -> f64 {
    let frac = (1.0 - m) * q / (4.0 + (1.0 - m) * q);
    (delta1 / 2.0).min(frac * frac).min(frac * delta0)
}

/// Geometric shrink schedule eps_j = eps_0 ratio^j, j = 0..=j_max, starting
/// from the spec's hole radius.
pub fn shrink_schedule(
    spec: &ValidatedSpec,
    j_max: usize,
    ratio: f64,
) -> Result<ShrinkSchedule, ModelError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(ModelError::constraint("shrink ratio in (0,1)", ratio, 1.0));
    }
    let eps0 = spec.holes[0].radius;
    let bound = shrink_radius_bound(spec.m, spec.q, spec.delta0, spec.delta1);
    if !(eps0 < bound) {
        return Err(ModelError::constraint(
            "eps_0 < min(delta1/2, ((1-m)q/(4+(1-m)q))^2, (1-m)q delta0/(4+(1-m)q))",
            eps0,
            bound,
        ));
    }
    let radii = (0..=j_max).map(|j| eps0 * ratio.powi(j as i32)).collect();
    Ok(ShrinkSchedule { radii, alpha: spec.alpha })
}

/// Knobs of the continuation drivers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuationOptions {
    pub t_end: f64,
    /// Exact landing times; snapshots at these times align across levels.
    pub sync_dt: f64,
    /// Pairwise differences use snapshots with t >= this.
    pub cmp_t_lo: f64,
    /// Nested-grid resolution: cells per octave of radius.
    pub cells_per_octave: usize,
    /// Cells dropped from each end of the blow-up fit window.
    pub fit_trim_cells: usize,
    pub tol_mass: f64,
    pub tol_lower: f64,
    pub tol_upper: f64,
    pub stepper: StepperConfig,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            t_end: 1.0,
            sync_dt: 0.05,
            cmp_t_lo: 0.5,
            cells_per_octave: 55,
            fit_trim_cells: 2,
            tol_mass: 1e-8,
            tol_lower: 1e-10,
            tol_upper: 1e-8,
            stepper: StepperConfig::default(),
        }
    }
}

/// One level of a continuation: its radius parameter, solve, and checks.
#[derive(Debug, Clone)]
pub struct ContinuationRun {
    /// eps_j for hole shrinking, R_j for domain expansion.
    pub radius: f64,
    pub grid: RadialGrid,
    pub trajectory: Trajectory,
    pub mass_report: CheckReport,
    pub sandwich: Option<(CheckReport, CheckReport)>,
}

/// Blow-up exponent fit at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QhatSample {
    pub t: f64,
    pub qhat: f64,
    pub residual: f64,
}

/// Assembled outcome of a continuation.
#[derive(Debug, Clone)]
pub struct ContinuationReport {
    pub runs: Vec<ContinuationRun>,
    /// sup |u_j - u_{j-1}| over the compare region and t >= cmp_t_lo, j >= 1.
    pub pairwise_sup_diffs: Vec<f64>,
    pub cmp_region: (f64, f64),
    pub cmp_t_lo: f64,
    /// Fit window [2 eps_min, delta1/4] of the finest run (hole shrinking only).
    pub fit_window: (f64, f64),
    pub qhat_per_time: Vec<QhatSample>,
}

/// Least-squares slope of log u against log r over cells with centers in
/// [r_lo, r_hi], negated, with the RMS fit residual.
pub fn fit_blowup_exponent(
    field: &RadialField,
    grid: &RadialGrid,
    r_lo: f64,
    r_hi: f64,
) -> Result<(f64, f64), CheckError> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (k, &r) in grid.centers.iter().enumerate() {
        if r >= r_lo && r <= r_hi && field.values[k] > 0.0 {
            xs.push(r.ln());
            ys.push(field.values[k].ln());
        }
    }
    let n = xs.len();
    if n < 8 {
        return Err(CheckError::WindowTooSmall { r_lo, r_hi, got: n, need: 8 });
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    Ok((-slope, (ss / nf).sqrt()))
}

/// Log-uniform faces hitting every anchor exactly (anchors ascending).
fn nested_faces(anchors: &[f64], cells_per_octave: usize) -> Vec<f64> {
    let mut faces = vec![anchors[0]];
    for w in anchors.windows(2) {
        let (a, b) = (w[0], w[1]);
        let n = ((cells_per_octave as f64) * (b / a).log2()).ceil().max(1.0) as usize;
        for k in 1..=n {
            faces.push(a * (b / a).powf(k as f64 / n as f64));
        }
        *faces.last_mut().unwrap() = b;
    }
    faces
}

fn require_radial_setting(spec: &ValidatedSpec) -> Result<(), ModelError> {
    if spec.holes.len() != 1 {
        return Err(ModelError::constraint(
            "radial continuation needs exactly one hole",
            spec.holes.len() as f64,
            1.0,
        ));
    }
    let norm: f64 = spec.holes[0].center.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 1e-12 {
        return Err(ModelError::constraint(
            "radial continuation needs the hole centered at the origin",
            norm,
            0.0,
        ));
    }
    Ok(())
}

fn initial_profile<'a>(
    spec: &'a ValidatedSpec,
    r_inner: f64,
    r_outer: f64,
) -> impl Fn(f64) -> f64 + 'a {
    move |r| {
        spec.initial_data
            .eval_radial(r, r_inner, r_outer, spec.q, spec.delta1)
    }
}

/// Pairwise sup-differences over shared cells in the compare region at shared
/// snapshot times >= cmp_t_lo. `align_inner` means the runs share their inner
/// cells (domain expansion); otherwise they share the outer cells (shrinking).
fn pairwise_diffs(
    runs: &[ContinuationRun],
    region: (f64, f64),
    cmp_times: &[f64],
    align_inner: bool,
) -> Vec<f64> {
    let mut out = Vec::new();
    for pair in runs.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let (na, nb) = (a.grid.n_cells(), b.grid.n_cells());
        let offset = nb.saturating_sub(na); // extra cells of the larger run
        let mut sup = 0.0f64;
        for &t in cmp_times {
            let (ka, kb) = match (a.trajectory.index_of_time(t), b.trajectory.index_of_time(t)) {
                (Some(x), Some(y)) => (x, y),
                _ => continue,
            };
            let fa = &a.trajectory.fields[ka];
            let fb = &b.trajectory.fields[kb];
            for (ca, &r) in a.grid.centers.iter().enumerate() {
                if r < region.0 || r > region.1 {
                    continue;
                }
                let cb = if align_inner { ca } else { ca + offset };
                sup = sup.max((fa.values[ca] - fb.values[cb]).abs());
            }
        }
        out.push(sup);
    }
    out
}

/// Shrinking-hole continuation: for each eps_j solve on [eps_j, R] with hole
/// flux alpha/eps_j^(qm+1) and the spec's singular data, then collect
/// sandwich margins, pairwise differences on r >= delta1/2, and blow-up fits.
pub fn run_hole_continuation(
    spec: &ValidatedSpec,
    schedule: &ShrinkSchedule,
    opts: &ContinuationOptions,
) -> Result<ContinuationReport, RunError> {
    require_radial_setting(spec)?;
    if !matches!(spec.initial_data, InitialData::Singular { .. }) {
        return Err(ModelError::constraint(
            "hole continuation requires the singular initial-data family",
            0.0,
            1.0,
        )
        .into());
    }
    let (c1, c2) = match spec.initial_data {
        InitialData::Singular { c1, c2, .. } => (c1, c2),
        _ => unreachable!(),
    };
    if schedule.radii.is_empty() {
        return Err(ModelError::constraint("nonempty shrink schedule", 0.0, 1.0).into());
    }
    let eps_min = *schedule
        .radii
        .iter()
        .min_by(|a, b| a.partial_cmp(b).unwrap())
        .unwrap();

    // nested master grid: every level radius, delta1 and R are faces
    let mut anchors: Vec<f64> = schedule.radii.clone();
    anchors.push(spec.delta1);
    anchors.push(spec.outer_radius);
    anchors.sort_by(|a, b| a.partial_cmp(b).unwrap());
    anchors.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let faces = nested_faces(&anchors, opts.cells_per_octave);
    let ratio = 2f64.powf(1.0 / opts.cells_per_octave as f64);
    let master = RadialGrid::from_faces(spec.n, faces, Grading::Geometric { ratio })
        .map_err(RunError::from)?;

    let sync = sync_times(opts.t_end, opts.sync_dt);
    let lower = BarrierLower { c1, q: spec.q, delta1: spec.delta1 };
    let a1 = barrier_upper_coefficient(c2, spec.m, spec.n, spec.q, schedule.alpha);
    let upper = BarrierUpper { a1, q: spec.q, m: spec.m, delta1: spec.delta1 };

    let runs: Vec<ContinuationRun> = schedule
        .radii
        .par_iter()
        .enumerate()
        .map(|(j, &eps)| -> Result<ContinuationRun, RunError> {
            let tag = |e: RunError| RunError::tagged(format!("j={j} eps={eps:e}"), e);
            let grid = master.truncate_inner(eps).map_err(|e| tag(e.into()))?;
            let hole_g = FluxProfile::Constant { value: schedule.alpha };
            let problem = RadialProblem {
                grid: grid.clone(),
                mobility: Mobility::Bare { m: spec.m },
                inner_flux: hole_g.clone(),
                outer_flux: spec.schedule.outer.clone(),
                inner_scale: eps.powf(-(spec.m * spec.q + 1.0)),
            };
            let u0 = RadialField::from_profile(
                &grid,
                initial_profile(spec, eps, spec.outer_radius),
            );
            let trajectory = solve(&problem, &u0, &opts.stepper, opts.t_end, &sync)
                .map_err(|e| tag(e.into()))?;
            let mass_report = check_mass_balance(&trajectory, &problem, opts.tol_mass);
            let sandwich = check_barrier_sandwich(
                &trajectory,
                &grid,
                &lower,
                &upper,
                a1,
                eps,
                spec.delta1,
                &hole_g,
                opts.tol_lower,
                opts.tol_upper,
            )
            .map_err(|e| tag(e.into()))?;
            Ok(ContinuationRun {
                radius: eps,
                grid,
                trajectory,
                mass_report,
                sandwich: Some(sandwich),
            })
        })
        .collect::<Result<_, _>>()?;

    let cmp_region = (spec.delta1 / 2.0, spec.outer_radius);
    let cmp_times: Vec<f64> = sync
        .iter()
        .cloned()
        .filter(|&t| t >= opts.cmp_t_lo)
        .collect();
    let pairwise_sup_diffs = pairwise_diffs(&runs, cmp_region, &cmp_times, false);

    // blow-up exponent on the finest run, window [2 eps_min, delta1/4];
    // skipped when the schedule is too coarse for the window to exist
    let finest = runs.last().unwrap();
    let fit_window = trimmed_window(
        &finest.grid,
        2.0 * eps_min,
        spec.delta1 / 4.0,
        opts.fit_trim_cells,
    );
    let mut qhat_per_time = Vec::new();
    if finest.grid.cells_in(fit_window.0, fit_window.1) >= 8 {
        for &t in &sync {
            if let Some(k) = finest.trajectory.index_of_time(t) {
                let (qhat, residual) = fit_blowup_exponent(
                    &finest.trajectory.fields[k],
                    &finest.grid,
                    fit_window.0,
                    fit_window.1,
                )
                .map_err(RunError::from)?;
                qhat_per_time.push(QhatSample { t, qhat, residual });
            }
        }
    }

    Ok(ContinuationReport {
        runs,
        pairwise_sup_diffs,
        cmp_region,
        cmp_t_lo: opts.cmp_t_lo,
        fit_window,
        qhat_per_time,
    })
}

/// Empirical Cauchy property: each pairwise sup-difference must shrink by at
/// least `factor` relative to its predecessor. The margin is the worst of
/// (D_j / (factor * D_{j+1}) - 1) over consecutive pairs.
pub fn check_cauchy_ratios(report: &ContinuationReport, factor: f64) -> CheckReport {
    let d = &report.pairwise_sup_diffs;
    let mut worst = f64::INFINITY;
    let mut samples = 0u64;
    for w in d.windows(2) {
        samples += 1;
        let margin = w[0] / (factor * w[1].max(1e-300)) - 1.0;
        worst = worst.min(margin);
    }
    if samples == 0 {
        worst = 0.0;
    }
    CheckReport {
        name: format!("continuation_cauchy(factor={factor})"),
        tolerance: 0.0,
        worst_margin: worst,
        worst_location: None,
        pass: worst >= 0.0,
        samples,
    }
}

/// Monotone decrease of pairwise differences (domain expansion): margin is
/// the worst relative drop (D_j - D_{j+1})/D_j over consecutive pairs.
/// Differences below the roundoff floor (1e-12 of the compared field scale)
/// count as converged: the outer boundary's influence on the compare annulus
/// can sit far below double precision, making every difference exactly zero.
pub fn check_monotone_decrease(report: &ContinuationReport) -> CheckReport {
    let d = &report.pairwise_sup_diffs;
    let mut scale: f64 = 1.0;
    for run in &report.runs {
        for (k, &r) in run.grid.centers.iter().enumerate() {
            if r >= report.cmp_region.0 && r <= report.cmp_region.1 {
                scale = scale.max(run.trajectory.final_field().values[k].abs());
            }
        }
    }
    let floor = 1e-12 * scale;
    let mut worst = f64::INFINITY;
    let mut samples = 0u64;
    for w in d.windows(2) {
        samples += 1;
        if w[0] <= floor && w[1] <= floor {
            worst = worst.min(0.0);
        } else {
            worst = worst.min((w[0] - w[1]) / w[0].max(1e-300));
        }
    }
    if samples == 0 {
        worst = 0.0;
    }
    CheckReport {
        name: "expansion_monotone_decrease".into(),
        tolerance: 0.0,
        worst_margin: worst,
        worst_location: None,
        pass: worst >= 0.0,
        samples,
    }
}

/// Fitted exponent stays inside [(1-band) q, (1+band) q] for fit times in
/// [t_lo, t_hi]; the margin is the worst distance to the band, relative to q.
pub fn check_blowup_exponent_window(
    report: &ContinuationReport,
    q: f64,
    t_lo: f64,
    t_hi: f64,
    band: f64,
) -> CheckReport {
    let mut worst = f64::INFINITY;
    let mut samples = 0u64;
    let mut loc = None;
    for s in &report.qhat_per_time {
        if s.t < t_lo || s.t > t_hi {
            continue;
        }
        samples += 1;
        let margin = ((s.qhat - (1.0 - band) * q).min((1.0 + band) * q - s.qhat)) / q;
        if margin < worst {
            worst = margin;
            loc = Some(crate::verify::Location { cell: None, time: s.t });
        }
    }
    if samples == 0 {
        worst = -1.0; // no fits in the window is a failure, not a vacuous pass
    }
    CheckReport {
        name: format!("blowup_exponent(band={band})"),
        tolerance: 0.0,
        worst_margin: worst,
        worst_location: loc,
        pass: worst >= 0.0 && samples > 0,
        samples,
    }
}

/// Shrink [r_lo, r_hi] so the `trim` cells nearest each end of the window are
/// excluded (they sit closest to the barrier poles and carry the largest
/// discretization bias).
fn trimmed_window(grid: &RadialGrid, r_lo: f64, r_hi: f64, trim: usize) -> (f64, f64) {
    let centers: Vec<f64> = grid
        .centers
        .iter()
        .cloned()
        .filter(|&r| r >= r_lo && r <= r_hi)
        .collect();
    if centers.len() <= 2 * trim + 8 {
        return (r_lo, r_hi);
    }
    (centers[trim] * (1.0 - 1e-12), centers[centers.len() - 1 - trim] * (1.0 + 1e-12))
}

/// Domain expansion: solve on [delta, R_i] for increasing outer radii with
/// zero outer flux, and report pairwise differences on a fixed compact
/// annulus at the final time.
pub fn run_domain_expansion(
    spec: &ValidatedSpec,
    radii: &[f64],
    cmp_window: (f64, f64),
    opts: &ContinuationOptions,
) -> Result<ContinuationReport, RunError> {
    require_radial_setting(spec)?;
    if radii.is_empty() {
        return Err(ModelError::constraint("nonempty radius list", 0.0, 1.0).into());
    }
    if !radii.windows(2).all(|w| w[0] < w[1]) {
        return Err(ModelError::constraint("radius list strictly increasing", 0.0, 1.0).into());
    }
    let max_center: f64 = spec
        .holes
        .iter()
        .map(|h| h.center.iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    if !(radii[0] > 3.0 * max_center) {
        return Err(ModelError::constraint("R_0 > 3 max|a_i|", radii[0], 3.0 * max_center).into());
    }
    let delta = spec.holes[0].radius;
    let mut anchors = vec![delta, spec.delta1];
    anchors.extend_from_slice(radii);
    anchors.sort_by(|a, b| a.partial_cmp(b).unwrap());
    anchors.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let faces = nested_faces(&anchors, opts.cells_per_octave);
    let ratio = 2f64.powf(1.0 / opts.cells_per_octave as f64);
    let master = RadialGrid::from_faces(spec.n, faces, Grading::Geometric { ratio })
        .map_err(RunError::from)?;
    let sync = sync_times(opts.t_end, opts.sync_dt);

    let runs: Vec<ContinuationRun> = radii
        .par_iter()
        .enumerate()
        .map(|(j, &r_out)| -> Result<ContinuationRun, RunError> {
            let tag = |e: RunError| RunError::tagged(format!("R={r_out:e} (run {j})"), e);
            let grid = master.truncate_outer(r_out).map_err(|e| tag(e.into()))?;
            let problem = RadialProblem {
                grid: grid.clone(),
                mobility: Mobility::Bare { m: spec.m },
                inner_flux: spec.schedule.holes[0].clone(),
                // zero outer flux is the construction's boundary condition
                outer_flux: FluxProfile::zero(),
                inner_scale: spec.schedule.hole_scale(delta, spec.m, spec.q),
            };
            let u0 = RadialField::from_profile(&grid, initial_profile(spec, delta, r_out));
            let trajectory = solve(&problem, &u0, &opts.stepper, opts.t_end, &sync)
                .map_err(|e| tag(e.into()))?;
            let mass_report = check_mass_balance(&trajectory, &problem, opts.tol_mass);
            Ok(ContinuationRun {
                radius: r_out,
                grid,
                trajectory,
                mass_report,
                sandwich: None,
            })
        })
        .collect::<Result<_, _>>()?;

    let pairwise_sup_diffs = pairwise_diffs(&runs, cmp_window, &[opts.t_end], true);
    Ok(ContinuationReport {
        runs,
        pairwise_sup_diffs,
        cmp_region: cmp_window,
        cmp_t_lo: opts.t_end,
        fit_window: (0.0, 0.0),
        qhat_per_time: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        alpha_flux, validate_spec, EnvelopeChoice, FluxSchedule, Hole, ProblemSpec, ScalingMode,
        SingularDataParams, SingularProfile,
    };
    use crate::radial::build_radial_grid;

    fn rel_eq(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol * b.abs().max(1e-300), "a = {a:e}, b = {b:e}");
    }

    fn standard_spec(hole_radius: f64) -> ValidatedSpec {
        let m = 1.0 / 3.0;
        validate_spec(ProblemSpec {
            n: 3,
            m,
            q: 4.5,
            p: 2.0,
            outer_radius: 1.0,
            holes: vec![Hole { center: vec![0.0, 0.0, 0.0], radius: hole_radius }],
            delta1: 0.4,
            initial_data: InitialData::Singular {
                c1: 1.0,
                c2: 1.0,
                envelope: EnvelopeChoice::GeometricMean,
            },
            schedule: FluxSchedule {
                outer: FluxProfile::zero(),
                holes: vec![FluxProfile::Constant { value: alpha_flux(m, 4.5, 0.4) }],
                scaling: ScalingMode::PaperScaled,
            },
        })
        .unwrap()
    }

    #[test]
    fn shrink_bound_matches_arithmetic_oracle() {
        // min(0.2, (3/7)^2, 3*0.5/7) = 9/49 at the standard parameters
        let b = shrink_radius_bound(1.0 / 3.0, 4.5, 0.5, 0.4);
        rel_eq(b, 9.0 / 49.0, 1e-15);
    }

    #[test]
    fn shrink_schedule_halving_and_bound() {
        let spec = standard_spec(0.1);
        let s = shrink_schedule(&spec, 5, 0.5).unwrap();
        assert_eq!(s.radii.len(), 6);
        for (j, &e) in s.radii.iter().enumerate() {
            rel_eq(e, 0.1 * 0.5f64.powi(j as i32), 1e-15);
        }
        rel_eq(s.alpha, 59.0 / 3.0, 1e-14);
        // eps_0 above the bound is rejected
        let fat = standard_spec(0.19); // valid spec, but 0.19 > 9/49
        assert!(matches!(
            shrink_schedule(&fat, 3, 0.5),
            Err(ModelError::ConstraintViolation { .. })
        ));
        assert!(shrink_schedule(&spec, 3, 1.5).is_err());
    }

    #[test]
    fn fit_exact_power_law_recovers_q() {
        let grid = build_radial_grid(0.01, 1.0, 64, Grading::Geometric { ratio: 1.05 }, 3).unwrap();
        let q = 4.5;
        let f = RadialField::from_profile(&grid, |r| r.powf(-q));
        let (qhat, resid) = fit_blowup_exponent(&f, &grid, 0.02, 0.25).unwrap();
        rel_eq(qhat, q, 1e-10);
        assert!(resid < 1e-10);
        // constant field fits slope zero
        let c = RadialField::constant(&grid, 3.0);
        let (q0, _) = fit_blowup_exponent(&c, &grid, 0.02, 0.25).unwrap();
        assert!(q0.abs() < 1e-12);
        // window with too few cells
        assert!(matches!(
            fit_blowup_exponent(&f, &grid, 0.02, 0.021),
            Err(CheckError::WindowTooSmall { .. })
        ));
    }

    #[test]
    fn fit_on_lower_barrier_shows_positive_psi_bias() {
        // the barrier's log-slope is -(q + r^2/(delta1^2 - r^2)^2); over any
        // window the fit must land between q and q + max bias
        let (q, d1) = (4.5, 0.4);
        let grid = build_radial_grid(0.005, 1.0, 200, Grading::Geometric { ratio: 1.05 }, 3).unwrap();
        let b = BarrierLower { c1: 1.0, q, delta1: d1 };
        let f = RadialField::from_profile(&grid, |r| b.value_extended(r).max(1e-300));
        let (w_lo, w_hi) = (0.0125, 0.1);
        let (qhat, _) = fit_blowup_exponent(&f, &grid, w_lo, w_hi).unwrap();
        let bias_hi = w_hi * w_hi / (d1 * d1 - w_hi * w_hi).powi(2);
        assert!(qhat > q && qhat < q + bias_hi, "qhat = {qhat}");
    }

    #[test]
    fn nested_faces_hit_anchors() {
        let anchors = [0.025, 0.05, 0.1, 0.4, 1.0];
        let faces = nested_faces(&anchors, 20);
        for a in anchors {
            assert!(faces.iter().any(|&f| f == a), "anchor {a} missing");
        }
        assert!(faces.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn degenerate_schedule_gives_zero_pairwise_difference() {
        let spec = standard_spec(0.1);
        let schedule = ShrinkSchedule {
            radii: vec![0.1, 0.1],
            alpha: spec.alpha,
        };
        let opts = ContinuationOptions {
            t_end: 0.05,
            sync_dt: 0.025,
            cmp_t_lo: 0.025,
            cells_per_octave: 16,
            ..Default::default()
        };
        let report = run_hole_continuation(&spec, &schedule, &opts).unwrap();
        assert_eq!(report.pairwise_sup_diffs.len(), 1);
        assert_eq!(report.pairwise_sup_diffs[0], 0.0);
    }

    #[test]
    fn small_hole_continuation_smoke() {
        let spec = standard_spec(0.1);
        let schedule = shrink_schedule(&spec, 1, 0.5).unwrap();
        let opts = ContinuationOptions {
            t_end: 0.1,
            sync_dt: 0.05,
            cmp_t_lo: 0.05,
            cells_per_octave: 20,
            ..Default::default()
        };
        let report = run_hole_continuation(&spec, &schedule, &opts).unwrap();
        assert_eq!(report.runs.len(), 2);
        for run in &report.runs {
            assert!(run.mass_report.pass, "mass margin {:e}", run.mass_report.worst_margin);
            let (lo, hi) = run.sandwich.as_ref().unwrap();
            assert!(lo.pass, "lower margin {:e}", lo.worst_margin);
            assert!(hi.pass, "upper margin {:e}", hi.worst_margin);
        }
        assert_eq!(report.pairwise_sup_diffs.len(), 1);
        assert!(report.pairwise_sup_diffs[0].is_finite());
        // window [2*0.05, 0.1] is degenerate at this coarse schedule: no fits
        assert!(report.qhat_per_time.is_empty());
    }

    #[test]
    fn expansion_single_radius_trivial_report() {
        let spec = standard_spec(0.1);
        let opts = ContinuationOptions {
            t_end: 0.05,
            sync_dt: 0.05,
            cells_per_octave: 16,
            ..Default::default()
        };
        let report = run_domain_expansion(&spec, &[2.0], (0.2, 1.5), &opts).unwrap();
        assert_eq!(report.runs.len(), 1);
        assert!(report.pairwise_sup_diffs.is_empty());
        assert!(report.runs[0].mass_report.pass);
        // decreasing radius list is rejected
        assert!(run_domain_expansion(&spec, &[4.0, 2.0], (0.2, 1.5), &opts).is_err());
    }

    #[test]
    fn lower_barrier_profile_envelope_consistency() {
        // sanity: the run's own initial data sits between the envelopes so the
        // sandwich starts with nonnegative margins
        let spec = standard_spec(0.1);
        let params = SingularDataParams { c1: 1.0, c2: 1.0, q: spec.q, delta1: spec.delta1 };
        let profile = SingularProfile { params, choice: EnvelopeChoice::GeometricMean };
        for k in 1..200 {
            let r = 0.002 * k as f64;
            if r >= spec.delta1 {
                break;
            }
            assert!(profile.eval(r) >= params.lower_envelope(r));
        }
    }
}
