//! Adaptive backward-Euler driving loop shared by the radial and planar solvers.

use crate::error::{ModelError, SolverError};
use serde::{Deserialize, Serialize};

/// Time-stepping controls for the implicit solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepperConfig {
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Newton succeeds when the l1 norm of the mass residual drops below this.
    pub newton_tol: f64,
    pub newton_max_iter: u32,
    /// dt multiplier after `easy_steps_before_growth` consecutive easy steps.
    pub growth_factor: f64,
    /// dt multiplier on Newton divergence or excessive relative change.
    pub shrink_factor: f64,
    /// Largest accepted max-relative cell change per step.
    pub max_rel_change: f64,
    pub easy_steps_before_growth: u32,
}

impl Default for StepperConfig {
    fn default() -> Self {
        StepperConfig {
            dt_init: 1e-6,
            dt_min: 1e-14,
            dt_max: 0.05,
            newton_tol: 1e-10,
            newton_max_iter: 60,
            growth_factor: 1.25,
            shrink_factor: 0.5,
            max_rel_change: 0.1,
            easy_steps_before_growth: 3,
        }
    }
}

impl StepperConfig {
    /// Fixed-step mode: dt never adapts, so two runs share identical step times.
    pub fn fixed(dt: f64) -> Self {
        StepperConfig {
            dt_init: dt,
            dt_min: dt,
            dt_max: dt,
            ..StepperConfig::default()
        }
    }

    pub fn is_fixed(&self) -> bool {
        self.dt_min == self.dt_max
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.dt_min <= self.dt_init && self.dt_init <= self.dt_max) {
            return Err(ModelError::constraint(
                "dt_min <= dt_init <= dt_max",
                self.dt_init,
                self.dt_max,
            ));
        }
        if !(self.newton_tol > 0.0) {
            return Err(ModelError::constraint("newton_tol > 0", self.newton_tol, 0.0));
        }
        if !(self.shrink_factor > 0.0 && self.shrink_factor < 1.0) {
            return Err(ModelError::constraint("0 < shrink_factor < 1", self.shrink_factor, 1.0));
        }
        if !(self.growth_factor >= 1.0) {
            return Err(ModelError::constraint("growth_factor >= 1", self.growth_factor, 1.0));
        }
        Ok(())
    }
}

/// Result of one accepted step handed to the trajectory recorder.
pub(crate) struct Accepted<'a, S> {
    pub state: &'a S,
    pub t: f64,
    pub dt: f64,
    pub newton_iters: u32,
}

/// Drive `try_step` from t = 0 to `t_end`, landing exactly on every time in
/// `sync` (sorted, within (0, t_end]) and on t_end itself. dt halves on
/// divergence or when the relative change exceeds the configured bound, and
/// grows after a run of easy steps. Returns `StepFailure` once dt underflows.
pub(crate) fn adaptive_drive<S: Clone>(
    cfg: &StepperConfig,
    t_end: f64,
    sync: &[f64],
    state0: S,
    mut try_step: impl FnMut(&S, f64, f64) -> Result<(S, u32), SolverError>,
    mut rel_change: impl FnMut(&S, &S) -> f64,
    mut on_accept: impl FnMut(Accepted<'_, S>),
) -> Result<(), SolverError> {
    cfg.validate()
        .map_err(|e| SolverError::BadGeometry(e.to_string()))?;
    if !(t_end > 0.0) {
        return Err(SolverError::BadGeometry(format!("t_end must be positive, got {t_end}")));
    }
    let mut state = state0;
    let mut t = 0.0_f64;
    let mut dt = cfg.dt_init;
    let mut easy = 0u32;
    let fixed = cfg.is_fixed();
    let mut sync_idx = 0usize;

    while t < t_end {
        while sync_idx < sync.len() && sync[sync_idx] <= t * (1.0 + 1e-14) {
            sync_idx += 1;
        }
        let target = sync.get(sync_idx).copied().unwrap_or(t_end).min(t_end);
        let gap = target - t;
        let clipped = dt >= gap;
        let dt_used = if clipped { gap } else { dt };

        match try_step(&state, t, dt_used) {
            Ok((new_state, iters)) => {
                let rc = rel_change(&state, &new_state);
                if !fixed && rc > cfg.max_rel_change && dt_used > cfg.dt_min * 1.000001 {
                    dt = (dt_used * cfg.shrink_factor).max(cfg.dt_min);
                    easy = 0;
                    continue;
                }
                let t_new = if clipped { target } else { t + dt_used };
                on_accept(Accepted {
                    state: &new_state,
                    t: t_new,
                    dt: dt_used,
                    newton_iters: iters,
                });
                state = new_state;
                t = t_new;
                if rc <= 0.5 * cfg.max_rel_change {
                    easy += 1;
                    if easy >= cfg.easy_steps_before_growth {
                        dt = (dt * cfg.growth_factor).min(cfg.dt_max);
                        easy = 0;
                    }
                } else {
                    easy = 0;
                }
            }
            Err(SolverError::NewtonDivergence { .. }) | Err(SolverError::NegativeValue { .. }) => {
                if fixed || dt_used <= cfg.dt_min * 1.000001 {
                    return Err(SolverError::StepFailure { t, dt_min: cfg.dt_min });
                }
                dt = (dt_used * cfg.shrink_factor).max(cfg.dt_min);
                easy = 0;
            }
            Err(other) => return Err(other),
        }
    }
    Ok(())
}

/// Build the list of exact landing times from a uniform spacing.
pub fn sync_times(t_end: f64, spacing: f64) -> Vec<f64> {
    let mut out = Vec::new();
    if spacing <= 0.0 {
        return out;
    }
    let n = (t_end / spacing).round() as usize;
    for k in 1..=n {
        let t = spacing * k as f64;
        if t < t_end * (1.0 - 1e-12) {
            out.push(t);
        }
    }
    out.push(t_end);
    out
}
