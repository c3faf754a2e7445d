//! Problem description, hypothesis validation, and closed-form coefficients.
//!
//! Houses the data that everything else consumes: the problem parameters
//! (n, m, q, p, domain radii, holes, flux schedules, initial-data family),
//! the barrier functions used for sandwich checks, and the explicit
//! coefficients A1, A2, alpha together with the hole-flux scaling rule
//! g / delta^(mq+1).
//!
//! All values are plain f64; everything here is immutable after validation
//! and safe to share across concurrent solver runs.

use crate::error::ModelError;
use serde::{Deserialize, Serialize};

/// Surface area of the unit sphere S^(n-1) in R^n.
///
/// n = 1 gives 2 (two endpoints), n = 2 gives 2*pi, n = 3 gives 4*pi.
pub fn unit_sphere_area(n: u32) -> f64 {
    // 2 pi^(n/2) / Gamma(n/2), by the recurrence A(n) = 2 pi / (n - 2) * A(n - 2).
    match n {
        0 => panic!("dimension must be >= 1"),
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        _ => 2.0 * std::f64::consts::PI / (n as f64 - 2.0) * unit_sphere_area(n - 2),
    }
}

/// Time-dependent boundary flux profile (spatially constant on its boundary).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FluxProfile {
    Constant { value: f64 },
    /// amplitude * (1 + t)^(-exponent); nonincreasing when exponent >= 0.
    PowerDecay { amplitude: f64, exponent: f64 },
    /// values[i] on [breakpoints[i-1], breakpoints[i]); values has one more
    /// entry than breakpoints and the last value extends to t = infinity.
    PiecewiseConstant {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
}

impl FluxProfile {
    pub fn zero() -> Self {
        FluxProfile::Constant { value: 0.0 }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            FluxProfile::Constant { value } => *value,
            FluxProfile::PowerDecay {
                amplitude,
                exponent,
            } => amplitude * (1.0 + t).powf(-exponent),
            FluxProfile::PiecewiseConstant {
                breakpoints,
                values,
            } => {
                let idx = breakpoints.partition_point(|&b| b <= t);
                values[idx]
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            FluxProfile::Constant { value } => *value == 0.0,
            FluxProfile::PowerDecay { amplitude, .. } => *amplitude == 0.0,
            FluxProfile::PiecewiseConstant { values, .. } => values.iter().all(|&v| v == 0.0),
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        match self {
            FluxProfile::Constant { value } => *value >= 0.0,
            FluxProfile::PowerDecay { amplitude, .. } => *amplitude >= 0.0,
            FluxProfile::PiecewiseConstant { values, .. } => values.iter().all(|&v| v >= 0.0),
        }
    }

    /// Monotone nonincreasing in t on [0, infinity), decided analytically.
    pub fn is_nonincreasing(&self) -> bool {
        match self {
            FluxProfile::Constant { .. } => true,
            FluxProfile::PowerDecay {
                amplitude,
                exponent,
            } => *amplitude == 0.0 || (*amplitude > 0.0 && *exponent >= 0.0),
            FluxProfile::PiecewiseConstant { values, .. } => {
                values.windows(2).all(|w| w[1] <= w[0])
            }
        }
    }

    /// Supremum over [0, t_end].
    pub fn sup_on(&self, t_end: f64) -> f64 {
        match self {
            FluxProfile::Constant { value } => *value,
            FluxProfile::PowerDecay { .. } => self.value(0.0).max(self.value(t_end)),
            FluxProfile::PiecewiseConstant {
                breakpoints,
                values,
            } => {
                let idx = breakpoints.partition_point(|&b| b < t_end);
                values[..=idx].iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }

    /// Infimum over [0, t_end].
    pub fn inf_on(&self, t_end: f64) -> f64 {
        match self {
            FluxProfile::Constant { value } => *value,
            FluxProfile::PowerDecay { .. } => self.value(0.0).min(self.value(t_end)),
            FluxProfile::PiecewiseConstant {
                breakpoints,
                values,
            } => {
                let idx = breakpoints.partition_point(|&b| b < t_end);
                values[..=idx].iter().cloned().fold(f64::INFINITY, f64::min)
            }
        }
    }

    fn validate(&self, ctx: &str) -> Result<(), ModelError> {
        if let FluxProfile::PiecewiseConstant {
            breakpoints,
            values,
        } = self
        {
            if values.len() != breakpoints.len() + 1 {
                return Err(ModelError::constraint(
                    format!("{ctx}: piecewise flux needs len(values) = len(breakpoints)+1"),
                    values.len() as f64,
                    breakpoints.len() as f64 + 1.0,
                ));
            }
            if !breakpoints.windows(2).all(|w| w[0] < w[1]) {
                return Err(ModelError::constraint(
                    format!("{ctx}: piecewise flux breakpoints strictly increasing"),
                    f64::NAN,
                    f64::NAN,
                ));
            }
        }
        Ok(())
    }
}

/// How the per-hole flux factor g_i relates to the prescribed conormal flux.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingMode {
    /// g_i(t) is the conormal flux directly.
    Raw,
    /// The conormal flux is g_i(t) / delta^(mq+1), delta the hole radius.
    PaperScaled,
}

/// Outer flux f and per-hole flux factors g_i, plus the scaling rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxSchedule {
    pub outer: FluxProfile,
    pub holes: Vec<FluxProfile>,
    pub scaling: ScalingMode,
}

impl FluxSchedule {
    /// Conormal flux on hole `i` of radius `delta` at time `t`.
    pub fn hole_conormal(&self, i: usize, t: f64, delta: f64, m: f64, q: f64) -> f64 {
        let g = self.holes[i].value(t);
        match self.scaling {
            ScalingMode::Raw => g,
            ScalingMode::PaperScaled => scaled_hole_flux(g, delta, m, q),
        }
    }

    /// Multiplier turning the unscaled factor g_i into the conormal flux.
    pub fn hole_scale(&self, delta: f64, m: f64, q: f64) -> f64 {
        match self.scaling {
            ScalingMode::Raw => 1.0,
            ScalingMode::PaperScaled => delta.powf(-(m * q + 1.0)),
        }
    }
}

/// One spherical hole: excluded ball B_delta(center).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hole {
    pub center: Vec<f64>,
    pub radius: f64,
}

/// Geometric data of the holes relative to a ball of radius `outer_radius`:
/// delta0 = min over i, j of (dist(a_i, boundary), |a_i - a_j|) / 2.
pub fn hole_separation_radius(outer_radius: f64, holes: &[Hole]) -> Result<f64, ModelError> {
    if holes.is_empty() {
        return Err(ModelError::constraint("at least one hole required", 0.0, 1.0));
    }
    let norm = |c: &[f64]| c.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut d0 = f64::INFINITY;
    for (i, h) in holes.iter().enumerate() {
        let dist_boundary = outer_radius - norm(&h.center);
        if dist_boundary <= h.radius {
            return Err(ModelError::constraint(
                format!("hole {i} strictly inside outer boundary: dist(a_i, boundary) > delta_i"),
                dist_boundary,
                h.radius,
            ));
        }
        d0 = d0.min(dist_boundary);
        for (j, g) in holes.iter().enumerate().skip(i + 1) {
            let sep: f64 = h
                .center
                .iter()
                .zip(&g.center)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if sep <= h.radius + g.radius {
                return Err(ModelError::constraint(
                    format!("holes {i} and {j} pairwise disjoint: |a_i - a_j| > delta_i + delta_j"),
                    sep,
                    h.radius + g.radius,
                ));
            }
            d0 = d0.min(sep);
        }
    }
    Ok(d0 / 2.0)
}

/// Parameters of the singular initial-data family:
/// C1 / (r^q e^(1/(delta1^2 - r^2))) <= u0(r) <= C2 / r^q on (0, delta1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularDataParams {
    pub c1: f64,
    pub c2: f64,
    pub q: f64,
    pub delta1: f64,
}

impl SingularDataParams {
    /// Lower envelope C1 r^(-q) e^(-1/(delta1^2 - r^2)), zero for r >= delta1.
    pub fn lower_envelope(&self, r: f64) -> f64 {
        if r >= self.delta1 {
            return 0.0;
        }
        self.c1 * r.powf(-self.q) * (-1.0 / (self.delta1 * self.delta1 - r * r)).exp()
    }

    /// Upper envelope C2 r^(-q).
    pub fn upper_envelope(&self, r: f64) -> f64 {
        self.c2 * r.powf(-self.q)
    }

    /// The envelopes cross iff C1 > C2 e^(1/delta1^2) (the bound is tightest
    /// as r -> 0 where the exponential factor is largest).
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.c1 > 0.0 && self.c2 > 0.0) {
            return Err(ModelError::constraint("C1 > 0 and C2 > 0", self.c1.min(self.c2), 0.0));
        }
        let limit = self.c2 * (1.0 / (self.delta1 * self.delta1)).exp();
        if self.c1 > limit {
            return Err(ModelError::EnvelopeError { c1: self.c1, limit });
        }
        Ok(())
    }
}

/// Which profile between the two envelopes the generated data follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeChoice {
    /// sqrt(lower * upper); smooth and satisfies both bounds by construction.
    GeometricMean,
    Lower,
    Upper,
}

/// A radial profile satisfying the singular-data envelopes on (0, delta1],
/// extended for r >= delta1 by the constant value of the upper envelope at
/// delta1 (bounded; the theorems only constrain u0 near the holes).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularProfile {
    pub params: SingularDataParams,
    pub choice: EnvelopeChoice,
}

/// Build the singular initial-data profile, validating envelope consistency.
pub fn make_singular_initial_data(
    params: SingularDataParams,
    choice: EnvelopeChoice,
) -> Result<SingularProfile, ModelError> {
    params.validate()?;
    Ok(SingularProfile { params, choice })
}

impl SingularProfile {
    pub fn eval(&self, r: f64) -> f64 {
        let p = &self.params;
        if r >= p.delta1 {
            return p.upper_envelope(p.delta1);
        }
        match self.choice {
            EnvelopeChoice::GeometricMean => (p.lower_envelope(r) * p.upper_envelope(r)).sqrt(),
            EnvelopeChoice::Lower => p.lower_envelope(r),
            EnvelopeChoice::Upper => p.upper_envelope(r),
        }
    }
}

/// Initial-data family for a radial run on the annulus [r_inner, r_outer].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    Constant { value: f64 },
    /// base + amplitude cos(pi (r - r_inner)/(r_outer - r_inner)); slope
    /// vanishes at both boundaries, compatible with zero-flux data.
    CosineBump { base: f64, amplitude: f64 },
    Singular { c1: f64, c2: f64, envelope: EnvelopeChoice },
}

impl InitialData {
    /// Resolve against spec parameters (q, delta1) into a radial profile.
    pub fn eval_radial(
        &self,
        r: f64,
        r_inner: f64,
        r_outer: f64,
        q: f64,
        delta1: f64,
    ) -> f64 {
        match self {
            InitialData::Constant { value } => *value,
            InitialData::CosineBump { base, amplitude } => {
                let s = (r - r_inner) / (r_outer - r_inner);
                base + amplitude * (std::f64::consts::PI * s).cos()
            }
            InitialData::Singular { c1, c2, envelope } => SingularProfile {
                params: SingularDataParams {
                    c1: *c1,
                    c2: *c2,
                    q,
                    delta1,
                },
                choice: *envelope,
            }
            .eval(r),
        }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self, InitialData::Singular { .. })
    }
}

/// Full problem description prior to validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    /// Spatial dimension, n >= 3.
    pub n: u32,
    /// Diffusion exponent, 0 < m <= (n-2)/n.
    pub m: f64,
    /// Blow-up exponent, q >= max(n/(2m), (n-2)/m).
    pub q: f64,
    /// Integrability exponent, p > n(1-m)/2.
    pub p: f64,
    /// Radius R of the outer ball.
    pub outer_radius: f64,
    pub holes: Vec<Hole>,
    /// Barrier radius delta1.
    pub delta1: f64,
    pub initial_data: InitialData,
    pub schedule: FluxSchedule,
}

/// A spec that passed `validate_spec`, annotated with derived constants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidatedSpec {
    spec: ProblemSpec,
    /// Hole-separation radius delta0.
    pub delta0: f64,
    /// alpha = 2m(q + 4/delta1^2), the continuation flux level.
    pub alpha: f64,
}

impl std::ops::Deref for ValidatedSpec {
    type Target = ProblemSpec;
    fn deref(&self) -> &ProblemSpec {
        &self.spec
    }
}

impl ValidatedSpec {
    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }
}

/// Check every hypothesis and return the spec annotated with (delta0, alpha).
///
/// The lower-barrier subharmonicity argument needs delta1^2 < m/2 (the sign
/// condition the proof actually uses), which is enforced here together with
/// the blow-up-theorem bound delta1 < min((1-m)q/(4+(1-m)q), delta0).
pub fn validate_spec(spec: ProblemSpec) -> Result<ValidatedSpec, ModelError> {
    let n = spec.n;
    let nf = n as f64;
    let m = spec.m;
    if n < 3 {
        return Err(ModelError::constraint("n >= 3", nf, 3.0));
    }
    if !(m > 0.0) {
        return Err(ModelError::constraint("m > 0", m, 0.0));
    }
    let m_max = (nf - 2.0) / nf;
    if m > m_max {
        return Err(ModelError::constraint("m <= (n-2)/n", m, m_max));
    }
    let p_min = nf * (1.0 - m) / 2.0;
    if !(spec.p > p_min) {
        return Err(ModelError::constraint("p > n(1-m)/2", spec.p, p_min));
    }
    let q_min = (nf / (2.0 * m)).max((nf - 2.0) / m);
    if !(spec.q >= q_min) {
        return Err(ModelError::constraint("q >= max(n/(2m),(n-2)/m)", spec.q, q_min));
    }
    if !(spec.outer_radius > 0.0) {
        return Err(ModelError::constraint("R > 0", spec.outer_radius, 0.0));
    }
    for (i, h) in spec.holes.iter().enumerate() {
        if h.center.len() != n as usize {
            return Err(ModelError::constraint(
                format!("hole {i} center has n coordinates"),
                h.center.len() as f64,
                nf,
            ));
        }
        if !(h.radius > 0.0) {
            return Err(ModelError::constraint(format!("hole {i} radius > 0"), h.radius, 0.0));
        }
    }
    let delta0 = hole_separation_radius(spec.outer_radius, &spec.holes)?;
    let d1 = spec.delta1;
    let thm_bound = (1.0 - m) * spec.q / (4.0 + (1.0 - m) * spec.q);
    if !(d1 > 0.0 && d1 < thm_bound.min(delta0)) {
        return Err(ModelError::constraint(
            "delta1 < min((1-m)q/(4+(1-m)q), delta0)",
            d1,
            thm_bound.min(delta0),
        ));
    }
    if !(d1 * d1 < m / 2.0) {
        return Err(ModelError::constraint("delta1^2 < m/2", d1 * d1, m / 2.0));
    }
    for (i, h) in spec.holes.iter().enumerate() {
        if !(h.radius < d1 / 2.0) {
            return Err(ModelError::constraint(
                format!("hole {i} radius < delta1/2"),
                h.radius,
                d1 / 2.0,
            ));
        }
    }
    if spec.schedule.holes.len() != spec.holes.len() {
        return Err(ModelError::constraint(
            "one flux profile per hole",
            spec.schedule.holes.len() as f64,
            spec.holes.len() as f64,
        ));
    }
    spec.schedule.outer.validate("outer flux")?;
    if !spec.schedule.outer.is_nonnegative() {
        return Err(ModelError::constraint("outer flux f >= 0", spec.schedule.outer.inf_on(1.0), 0.0));
    }
    for (i, g) in spec.schedule.holes.iter().enumerate() {
        g.validate(&format!("hole {i} flux"))?;
        if !g.is_nonnegative() {
            return Err(ModelError::constraint(format!("hole {i} flux g >= 0"), g.inf_on(1.0), 0.0));
        }
    }
    match &spec.initial_data {
        InitialData::Constant { value } => {
            if *value < 0.0 {
                return Err(ModelError::constraint("initial data >= 0", *value, 0.0));
            }
        }
        InitialData::CosineBump { base, amplitude } => {
            if base - amplitude.abs() < 0.0 {
                return Err(ModelError::constraint(
                    "initial data >= 0",
                    base - amplitude.abs(),
                    0.0,
                ));
            }
        }
        InitialData::Singular { c1, c2, .. } => {
            SingularDataParams {
                c1: *c1,
                c2: *c2,
                q: spec.q,
                delta1: d1,
            }
            .validate()?;
        }
    }
    let alpha = alpha_flux(m, spec.q, d1);
    Ok(ValidatedSpec { spec, delta0, alpha })
}

/// alpha = 2m(q + 4/delta1^2), exactly twice the lower-barrier flux threshold
/// m(q + 4/delta1^2).
pub fn alpha_flux(m: f64, q: f64, delta1: f64) -> f64 {
    2.0 * m * (q + 4.0 / (delta1 * delta1))
}

/// Conormal flux scaling g / delta^(mq+1) on a hole of radius delta.
pub fn scaled_hole_flux(g: f64, delta: f64, m: f64, q: f64) -> f64 {
    g / delta.powf(m * q + 1.0)
}

/// Upper-barrier amplitude
/// A1 = max{ C2, (m(mq^2+2q+2n+4)/(1-m))^(1/(1-m)), (2 (sup g)_+ / (mq))^(1/m) }.
pub fn barrier_upper_coefficient(c2: f64, m: f64, n: u32, q: f64, sup_g: f64) -> f64 {
    let nf = n as f64;
    let t2 = (m * (m * q * q + 2.0 * q + 2.0 * nf + 4.0) / (1.0 - m)).powf(1.0 / (1.0 - m));
    let t3 = (2.0 * sup_g.max(0.0) / (m * q)).powf(1.0 / m);
    c2.max(t2).max(t3)
}

/// Global-bound amplitude for a ball-shaped domain (c0 = 1):
/// A2 = max{ (m(1-m)(m+n-1)/delta2^2)^(1/(1-m)), (delta2/m (sup f)_+)^(1/m), M, sup u0 }.
pub fn global_bound_coefficient(
    m: f64,
    n: u32,
    delta2: f64,
    sup_f: f64,
    big_m: f64,
    sup_u0: f64,
) -> f64 {
    // c0 = 1 for balls; general convex domains are out of scope.
    let c0 = 1.0;
    let nf = n as f64;
    let t1 = (m * (1.0 - m) * (m + nf - 1.0) / (delta2 * delta2)).powf(1.0 / (1.0 - m));
    let t2 = (delta2 / (m * c0) * sup_f.max(0.0)).powf(1.0 / m);
    t1.max(t2).max(big_m).max(sup_u0)
}

/// Upper barrier phi_A1(r, t) = A1 (1+t)^(1/(1-m)) / (r^q (delta1 - r)^(2/(1-m))).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierUpper {
    pub a1: f64,
    pub q: f64,
    pub m: f64,
    pub delta1: f64,
}

impl BarrierUpper {
    pub fn value(&self, r: f64, t: f64) -> Result<f64, ModelError> {
        if !(r > 0.0 && r < self.delta1) {
            return Err(ModelError::DomainError {
                what: format!("upper barrier needs 0 < r < delta1 = {}", self.delta1),
                value: r,
            });
        }
        let growth = (1.0 + t).powf(1.0 / (1.0 - self.m));
        Ok(self.a1 * growth / (r.powf(self.q) * (self.delta1 - r).powf(2.0 / (1.0 - self.m))))
    }
}

/// Lower barrier phi(r) = C1 r^(-q) e^(-1/(delta1^2 - r^2)), zero outside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierLower {
    pub c1: f64,
    pub q: f64,
    pub delta1: f64,
}

impl BarrierLower {
    pub fn value(&self, r: f64) -> Result<f64, ModelError> {
        if !(r > 0.0 && r < self.delta1) {
            return Err(ModelError::DomainError {
                what: format!("lower barrier needs 0 < r < delta1 = {}", self.delta1),
                value: r,
            });
        }
        Ok(self.value_extended(r))
    }

    /// Extended evaluation: defined as 0 for r >= delta1.
    pub fn value_extended(&self, r: f64) -> f64 {
        if r >= self.delta1 {
            return 0.0;
        }
        self.c1 * r.powf(-self.q) * (-1.0 / (self.delta1 * self.delta1 - r * r)).exp()
    }

    /// Radial Laplacian of phi^m at r, by the closed-form expansion
    ///
    ///   Delta phi^m = r^(-mq) psi^m [ mq(mq+2-n) r^(-2) + 4 m^2 q / s^2
    ///                 + (2m/s^4)(2m r^2 - 4 r^2 s - n s^2) ],   s = delta1^2 - r^2.
    ///
    /// Nonnegative whenever q >= max(n/(2m), (n-2)/m) and delta1^2 < m/2.
    pub fn laplacian_margin(&self, m: f64, n: u32, r: f64) -> Result<f64, ModelError> {
        if !(r > 0.0 && r < self.delta1) {
            return Err(ModelError::DomainError {
                what: format!("laplacian margin needs 0 < r < delta1 = {}", self.delta1),
                value: r,
            });
        }
        let nf = n as f64;
        let q = self.q;
        let s = self.delta1 * self.delta1 - r * r;
        let term1 = m * q * (m * q + 2.0 - nf) / (r * r);
        let term2 = 4.0 * m * m * q / (s * s);
        let term3 = 2.0 * m / (s * s * s * s)
            * (2.0 * m * r * r - 4.0 * r * r * s - nf * s * s);
        let prefactor = self.c1.powf(m) * r.powf(-m * q) * (-m / s).exp();
        Ok(prefactor * (term1 + term2 + term3))
    }
}
