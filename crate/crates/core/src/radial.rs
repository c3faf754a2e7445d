//! Conservative implicit finite-volume solver for u_t = r^(1-n) (r^(n-1) (u^m)_r)_r
//! on the annulus delta <= r <= R with prescribed conormal flux on both
//! boundaries.
//!
//! The scheme is flux-form backward Euler: per cell,
//!
//!   V_k (u_k - u_k_old) = dt (G_{k+1} - G_k),
//!
//! where G_j = A(r_j) (v_j - v_{j-1})/(c_j - c_{j-1}) approximates the face
//! flux A r^(n-1) d_r(u^m) with v = u^m evaluated at adjacent cell centers,
//! and the two boundary faces carry the prescribed values: G_0 = -A(delta) g_s
//! (outward normal at r = delta is -e_r, so inflow for g_s > 0) and
//! G_N = +A(R) f. Summing the residual telescopes, which makes the discrete
//! mass identity exact up to the Newton tolerance.

use crate::error::SolverError;
use crate::model::{unit_sphere_area, FluxProfile};
use crate::stepping::{adaptive_drive, Accepted, StepperConfig};
use serde::{Deserialize, Serialize};

/// Radial grading of the cell faces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Grading {
    Uniform,
    /// Cell widths grow by `ratio` per cell away from the hole, capped at
    /// four times the uniform width so the outer region stays resolved.
    Geometric { ratio: f64 },
}

/// Cell-face radii, centers, shell volumes and face areas of the annulus.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    pub dim: u32,
    pub faces: Vec<f64>,
    pub centers: Vec<f64>,
    pub volumes: Vec<f64>,
    pub face_areas: Vec<f64>,
    pub grading: Grading,
}

impl RadialGrid {
    pub fn n_cells(&self) -> usize {
        self.centers.len()
    }

    pub fn inner_radius(&self) -> f64 {
        self.faces[0]
    }

    pub fn outer_radius(&self) -> f64 {
        *self.faces.last().unwrap()
    }

    /// Number of cell centers inside [lo, hi].
    pub fn cells_in(&self, lo: f64, hi: f64) -> usize {
        self.centers.iter().filter(|&&c| c >= lo && c <= hi).count()
    }

    /// Build a grid from explicit face radii (strictly increasing, first > 0).
    pub fn from_faces(dim: u32, faces: Vec<f64>, grading: Grading) -> Result<Self, SolverError> {
        if faces.len() < 3 {
            return Err(SolverError::BadGeometry(
                "need at least 2 cells (3 faces)".into(),
            ));
        }
        if !(faces[0] > 0.0) || !faces.windows(2).all(|w| w[0] < w[1]) {
            return Err(SolverError::BadGeometry(
                "faces must be strictly increasing and positive".into(),
            ));
        }
        let omega = unit_sphere_area(dim);
        let nf = dim as f64;
        let centers: Vec<f64> = faces.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let volumes: Vec<f64> = faces
            .windows(2)
            .map(|w| omega * (w[1].powi(dim as i32) - w[0].powi(dim as i32)) / nf)
            .collect();
        let face_areas: Vec<f64> = faces.iter().map(|r| omega * r.powi(dim as i32 - 1)).collect();
        Ok(RadialGrid {
            dim,
            faces,
            centers,
            volumes,
            face_areas,
            grading,
        })
    }

    /// Sub-grid keeping faces >= r (which must itself be a face).
    pub fn truncate_inner(&self, r: f64) -> Result<Self, SolverError> {
        let idx = self
            .faces
            .iter()
            .position(|&f| (f - r).abs() <= 1e-12 * r.max(1.0))
            .ok_or_else(|| SolverError::BadGeometry(format!("{r} is not a face of the grid")))?;
        RadialGrid::from_faces(self.dim, self.faces[idx..].to_vec(), self.grading)
    }

    /// Sub-grid keeping faces <= r (which must itself be a face).
    pub fn truncate_outer(&self, r: f64) -> Result<Self, SolverError> {
        let idx = self
            .faces
            .iter()
            .position(|&f| (f - r).abs() <= 1e-12 * r.max(1.0))
            .ok_or_else(|| SolverError::BadGeometry(format!("{r} is not a face of the grid")))?;
        RadialGrid::from_faces(self.dim, self.faces[..=idx].to_vec(), self.grading)
    }
}

/// Build the annulus grid [delta, R] with `n_cells` cells.
pub fn build_radial_grid(
    delta: f64,
    r_outer: f64,
    n_cells: usize,
    grading: Grading,
    dim: u32,
) -> Result<RadialGrid, SolverError> {
    if !(delta > 0.0 && delta < r_outer) {
        return Err(SolverError::BadGeometry(format!(
            "need 0 < delta < R, got delta = {delta}, R = {r_outer}"
        )));
    }
    if n_cells < 8 {
        return Err(SolverError::BadGeometry(format!(
            "need at least 8 cells, got {n_cells}"
        )));
    }
    let span = r_outer - delta;
    let faces = match grading {
        Grading::Uniform => (0..=n_cells)
            .map(|k| delta + span * k as f64 / n_cells as f64)
            .collect::<Vec<_>>(),
        Grading::Geometric { ratio } => {
            if !(ratio >= 1.0 && ratio <= 2.0) {
                return Err(SolverError::BadGeometry(format!(
                    "grading ratio must lie in [1, 2], got {ratio}"
                )));
            }
            // Cell widths grow by `ratio` per cell away from the hole,
            // saturated at the log-uniform face ratio (R/delta)^(1/N): large
            // cell budgets refine toward the hole instead of shrinking the
            // first cell without bound.
            let g = ratio.min((r_outer / delta).powf(1.0 / n_cells as f64));
            if g <= 1.0 + 1e-12 {
                (0..=n_cells)
                    .map(|k| delta + span * k as f64 / n_cells as f64)
                    .collect()
            } else {
                let w0 = span * (g - 1.0) / (g.powi(n_cells as i32) - 1.0);
                let mut faces = Vec::with_capacity(n_cells + 1);
                faces.push(delta);
                let mut w = w0;
                for _ in 0..n_cells {
                    let last = *faces.last().unwrap();
                    faces.push(last + w);
                    w *= g;
                }
                *faces.last_mut().unwrap() = r_outer;
                faces
            }
        }
    };
    RadialGrid::from_faces(dim, faces, grading)
}

/// Cell-averaged nonnegative solution values at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialField {
    pub values: Vec<f64>,
    pub time: f64,
}

impl RadialField {
    pub fn from_profile(grid: &RadialGrid, profile: impl Fn(f64) -> f64) -> Self {
        RadialField {
            values: grid.centers.iter().map(|&r| profile(r)).collect(),
            time: 0.0,
        }
    }

    pub fn constant(grid: &RadialGrid, value: f64) -> Self {
        RadialField {
            values: vec![value; grid.n_cells()],
            time: 0.0,
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Integral of the field over the annulus: sum of values times shell volumes.
pub fn mass(field: &RadialField, grid: &RadialGrid) -> Result<f64, SolverError> {
    if field.values.len() != grid.n_cells() {
        return Err(SolverError::SizeMismatch {
            expected: grid.n_cells(),
            got: field.values.len(),
        });
    }
    Ok(field
        .values
        .iter()
        .zip(&grid.volumes)
        .map(|(u, v)| u * v)
        .sum())
}

mod mobility;
pub use mobility::{mobility_value, Mobility, RegularizedMobility};

/// One radial Neumann problem: grid, mobility, and the two boundary fluxes.
/// `inner_scale` multiplies the unscaled hole factor g (delta^-(mq+1) under
/// the paper scaling, 1 under raw mode).
#[derive(Debug, Clone)]
pub struct RadialProblem {
    pub grid: RadialGrid,
    pub mobility: Mobility,
    pub inner_flux: FluxProfile,
    pub outer_flux: FluxProfile,
    pub inner_scale: f64,
}

impl RadialProblem {
    /// Conormal flux d(u^m)/dnu prescribed on the hole boundary at time t.
    pub fn inner_conormal(&self, t: f64) -> f64 {
        self.inner_flux.value(t) * self.inner_scale
    }

    /// Conormal flux prescribed on the outer boundary at time t.
    pub fn outer_conormal(&self, t: f64) -> f64 {
        self.outer_flux.value(t)
    }

    /// Mass inflow rates (outer, inner) at time t: boundary area times flux.
    pub fn inflow_rates(&self, t: f64) -> (f64, f64) {
        let a_in = self.grid.face_areas[0];
        let a_out = *self.grid.face_areas.last().unwrap();
        (a_out * self.outer_conormal(t), a_in * self.inner_conormal(t))
    }
}

/// Cumulative boundary inflow over [t0, t1] by the stepper's quadrature rule
/// (rectangle at the implicit endpoint). Exact for constant fluxes; for
/// time-varying schedules the trajectory's own per-step bookkeeping is the
/// authoritative record.
pub fn boundary_inflow(problem: &RadialProblem, t0: f64, t1: f64) -> (f64, f64) {
    let (outer_rate, inner_rate) = problem.inflow_rates(t1);
    ((t1 - t0) * outer_rate, (t1 - t0) * inner_rate)
}

/// Diagnostics of one accepted implicit step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDiag {
    pub t: f64,
    pub dt: f64,
    pub newton_iters: u32,
    pub mass: f64,
    pub min_u: f64,
    pub max_u: f64,
    pub cum_inflow_outer: f64,
    pub cum_inflow_inner: f64,
}

/// Time-ordered snapshots with per-step diagnostics. `fields[0]` is the
/// initial state at t = 0 and `steps[k]` describes the step into `fields[k+1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub fields: Vec<RadialField>,
    pub steps: Vec<StepDiag>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.fields.iter().map(|f| f.time).collect()
    }

    pub fn final_field(&self) -> &RadialField {
        self.fields.last().unwrap()
    }

    /// Index of the snapshot at time t (within 1e-12 absolute-relative), if any.
    pub fn index_of_time(&self, t: f64) -> Option<usize> {
        self.fields
            .iter()
            .position(|f| (f.time - t).abs() <= 1e-12 * t.abs().max(1.0))
    }
}

/// Backward difference (u_k - u_{k-1}) / dt_k, consistent with the implicit
/// scheme so downstream inequality checks see the object the stepper controls.
pub fn discrete_time_derivative(traj: &Trajectory, k: usize) -> Result<RadialField, SolverError> {
    if k == 0 || k >= traj.fields.len() {
        return Err(SolverError::IndexError {
            index: k,
            len: traj.fields.len(),
        });
    }
    let now = &traj.fields[k];
    let prev = &traj.fields[k - 1];
    let dt = now.time - prev.time;
    Ok(RadialField {
        values: now
            .values
            .iter()
            .zip(&prev.values)
            .map(|(a, b)| (a - b) / dt)
            .collect(),
        time: now.time,
    })
}

/// One backward-Euler step of size dt from `state` at time t.
///
/// Newton iterates on the full nonlinear residual in u with a tridiagonal
/// Jacobian; iterates are damped to stay strictly positive. Post-solve
/// clipping is forbidden: a nonpositive converged value is an error the
/// caller treats as divergence.
pub fn step(
    problem: &RadialProblem,
    state: &RadialField,
    t: f64,
    dt: f64,
    cfg: &StepperConfig,
) -> Result<(RadialField, u32), SolverError> {
    let grid = &problem.grid;
    let nc = grid.n_cells();
    if state.values.len() != nc {
        return Err(SolverError::SizeMismatch {
            expected: nc,
            got: state.values.len(),
        });
    }
    let t_new = t + dt;
    let g0 = -grid.face_areas[0] * problem.inner_conormal(t_new);
    let gn = grid.face_areas[nc] * problem.outer_conormal(t_new);
    let mob = &problem.mobility;

    let u_old = &state.values;
    let mut u = u_old.clone();
    let mut v = vec![0.0; nc];
    let mut resid = vec![0.0; nc];

    let compute_residual = |u: &[f64], v: &mut [f64], resid: &mut [f64]| -> f64 {
        for k in 0..nc {
            v[k] = mob.phi(u[k]);
        }
        let mut norm = 0.0;
        for k in 0..nc {
            let g_left = if k == 0 {
                g0
            } else {
                grid.face_areas[k] * (v[k] - v[k - 1]) / (grid.centers[k] - grid.centers[k - 1])
            };
            let g_right = if k == nc - 1 {
                gn
            } else {
                grid.face_areas[k + 1] * (v[k + 1] - v[k])
                    / (grid.centers[k + 1] - grid.centers[k])
            };
            resid[k] = grid.volumes[k] * (u[k] - u_old[k]) - dt * (g_right - g_left);
            norm += resid[k].abs();
        }
        norm
    };

    let mut norm = compute_residual(&u, &mut v, &mut resid);
    let mut lower = vec![0.0; nc];
    let mut diag = vec![0.0; nc];
    let mut upper = vec![0.0; nc];
    let mut rhs = vec![0.0; nc];
    let mut iters = 0u32;

    loop {
        if !norm.is_finite() {
            return Err(SolverError::NewtonDivergence { t, dt, residual: norm });
        }
        // assemble the tridiagonal Jacobian
        for k in 0..nc {
            let dphi = mob.phi_prime(u[k]);
            let w_left = if k > 0 {
                grid.face_areas[k] / (grid.centers[k] - grid.centers[k - 1])
            } else {
                0.0
            };
            let w_right = if k < nc - 1 {
                grid.face_areas[k + 1] / (grid.centers[k + 1] - grid.centers[k])
            } else {
                0.0
            };
            diag[k] = grid.volumes[k] + dt * dphi * (w_left + w_right);
            if k > 0 {
                lower[k] = -dt * w_left * mob.phi_prime(u[k - 1]);
            }
            if k < nc - 1 {
                upper[k] = -dt * w_right * mob.phi_prime(u[k + 1]);
            }
            rhs[k] = -resid[k];
        }
        // Thomas solve (in place on diag/rhs copies)
        let mut b = diag.clone();
        let mut d = rhs.clone();
        for k in 1..nc {
            let w = lower[k] / b[k - 1];
            b[k] -= w * upper[k - 1];
            d[k] -= w * d[k - 1];
        }
        let mut delta = vec![0.0; nc];
        delta[nc - 1] = d[nc - 1] / b[nc - 1];
        for k in (0..nc - 1).rev() {
            delta[k] = (d[k] - upper[k] * delta[k + 1]) / b[k];
        }
        // damp so every iterate stays strictly positive
        let mut lambda: f64 = 1.0;
        for k in 0..nc {
            if delta[k] < 0.0 {
                lambda = lambda.min(0.9 * u[k] / (-delta[k]));
            }
        }
        if !(lambda > 1e-12) {
            return Err(SolverError::NewtonDivergence { t, dt, residual: norm });
        }
        for k in 0..nc {
            u[k] += lambda * delta[k];
        }
        iters += 1;
        norm = compute_residual(&u, &mut v, &mut resid);
        if norm <= cfg.newton_tol {
            break;
        }
        if iters >= cfg.newton_max_iter {
            return Err(SolverError::NewtonDivergence { t, dt, residual: norm });
        }
    }
    for (k, &uk) in u.iter().enumerate() {
        if !(uk > 0.0) || !uk.is_finite() {
            return Err(SolverError::NegativeValue { t, cell: k, value: uk });
        }
    }
    Ok((RadialField { values: u, time: t_new }, iters))
}

/// Adaptive time stepping from t = 0 to `t_end`, landing exactly on every
/// `sync` time; records per-step diagnostics and terminates with the final
/// time equal to t_end.
pub fn solve(
    problem: &RadialProblem,
    u0: &RadialField,
    cfg: &StepperConfig,
    t_end: f64,
    sync: &[f64],
) -> Result<Trajectory, SolverError> {
    let grid = &problem.grid;
    let mut initial = u0.clone();
    initial.time = 0.0;
    let m0 = mass(&initial, grid)?;
    let mut traj = Trajectory {
        fields: vec![initial.clone()],
        steps: Vec::new(),
    };
    let mut cum_outer = 0.0;
    let mut cum_inner = 0.0;
    let _ = m0;

    let rel_floor = |old: &RadialField| 1e-6 * old.max().max(0.0) + 1e-300;

    adaptive_drive(
        cfg,
        t_end,
        sync,
        initial,
        |state, t, dt| step(problem, state, t, dt, cfg),
        |old, new| {
            let floor = rel_floor(old);
            old.values
                .iter()
                .zip(&new.values)
                .map(|(a, b)| (b - a).abs() / (a.abs() + floor))
                .fold(0.0, f64::max)
        },
        |acc: Accepted<'_, RadialField>| {
            let mut field = acc.state.clone();
            field.time = acc.t;
            let (outer_rate, inner_rate) = problem.inflow_rates(acc.t);
            cum_outer += acc.dt * outer_rate;
            cum_inner += acc.dt * inner_rate;
            let m = mass(&field, grid).expect("field matches grid");
            traj.steps.push(StepDiag {
                t: acc.t,
                dt: acc.dt,
                newton_iters: acc.newton_iters,
                mass: m,
                min_u: field.min(),
                max_u: field.max(),
                cum_inflow_outer: cum_outer,
                cum_inflow_inner: cum_inner,
            });
            traj.fields.push(field);
        },
    )?;
    Ok(traj)
}
