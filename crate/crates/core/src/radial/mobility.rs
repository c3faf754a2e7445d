//! Pressure law u -> u^m and its clamped regularization.
//!
//! The existence proof replaces the degenerate law by a positive, monotone
//! decreasing H with H(s) = m s^(1-1/m) on [n1/2, 2n2] and constant tails
//! below n1/4 and above 4n2, smoothly interpolated in between (cubic Hermite
//! here). The solver consumes the induced flux function Phi with
//! Phi'(u) = H(Phi(u)); on the exact window Phi(u) = u^m, so runs whose
//! values never leave the window coincide with the bare law.

use crate::error::ModelError;

/// Clamped mobility H of the existence proof.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularizedMobility {
    pub m: f64,
    pub n1: f64,
    pub n2: f64,
    // panel boundaries in s = u^m space
    s_a: f64, // n1/4
    s_b: f64, // n1/2
    s_c: f64, // 2 n2
    s_d: f64, // 4 n2
    // u-space anchors of the induced flux function
    u_a: f64,
    u_b: f64,
    u_c: f64,
    u_d: f64,
}

fn hermite(s: f64, a: f64, b: f64, ya: f64, da: f64, yb: f64, db: f64) -> f64 {
    let h = b - a;
    let t = (s - a) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * ya
        + (t3 - 2.0 * t2 + t) * h * da
        + (-2.0 * t3 + 3.0 * t2) * yb
        + (t3 - t2) * h * db
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels.max(2) & !1; // even
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + h * k as f64);
    }
    sum * h / 3.0
}

impl RegularizedMobility {
    pub fn new(m: f64, n1: f64, n2: f64) -> Result<Self, ModelError> {
        if !(m > 0.0 && m < 1.0) {
            return Err(ModelError::constraint("0 < m < 1", m, 1.0));
        }
        if !(n1 > 0.0 && n1 <= n2) {
            return Err(ModelError::constraint("0 < n1 <= n2", n1, n2));
        }
        let power = |s: f64| m * s.powf(1.0 - 1.0 / m);
        let (s_a, s_b, s_c, s_d) = (n1 / 4.0, n1 / 2.0, 2.0 * n2, 4.0 * n2);
        let mut mob = RegularizedMobility {
            m,
            n1,
            n2,
            s_a,
            s_b,
            s_c,
            s_d,
            u_a: 0.0,
            u_b: s_b.powf(1.0 / m),
            u_c: s_c.powf(1.0 / m),
            u_d: 0.0,
        };
        mob.u_a = mob.u_b - simpson(|s| 1.0 / mob.value(s), s_a, s_b, 256);
        mob.u_d = mob.u_c + simpson(|s| 1.0 / mob.value(s), s_c, s_d, 256);
        let _ = power;
        Ok(mob)
    }

    /// Regularized mobility H(s): the paper's clamped m s^(1-1/m).
    pub fn value(&self, s: f64) -> f64 {
        let m = self.m;
        let power = |s: f64| m * s.powf(1.0 - 1.0 / m);
        let dpower = |s: f64| -(1.0 - m) * s.powf(-1.0 / m);
        if s <= self.s_a {
            power(self.s_a)
        } else if s < self.s_b {
            hermite(s, self.s_a, self.s_b, power(self.s_a), 0.0, power(self.s_b), dpower(self.s_b))
        } else if s <= self.s_c {
            power(s)
        } else if s < self.s_d {
            hermite(s, self.s_c, self.s_d, power(self.s_c), dpower(self.s_c), power(self.s_d), 0.0)
        } else {
            power(self.s_d)
        }
    }

    /// The window [n1/2, 2n2] in s = u^m space where H is the exact power law.
    pub fn window(&self) -> (f64, f64) {
        (self.s_b, self.s_c)
    }

    /// u as a function of v = Phi(u), integrating du/dv = 1/H(v) away from
    /// the exact window where u = v^(1/m).
    fn u_of_v(&self, v: f64) -> f64 {
        if v >= self.s_b && v <= self.s_c {
            v.powf(1.0 / self.m)
        } else if v > self.s_c {
            if v <= self.s_d {
                self.u_c + simpson(|s| 1.0 / self.value(s), self.s_c, v, 64)
            } else {
                self.u_d + (v - self.s_d) / self.value(self.s_d)
            }
        } else if v >= self.s_a {
            self.u_b - simpson(|s| 1.0 / self.value(s), v, self.s_b, 64)
        } else {
            self.u_a - (self.s_a - v) / self.value(self.s_a)
        }
    }

    /// Phi(u): inverse of `u_of_v`. Exactly u^m for u inside the window.
    pub fn phi(&self, u: f64) -> f64 {
        if u >= self.u_b && u <= self.u_c {
            return u.powf(self.m);
        }
        if u > self.u_c {
            if u > self.u_d {
                return self.s_d + (u - self.u_d) * self.value(self.s_d);
            }
            return self.invert_in(u, self.s_c, self.s_d);
        }
        if u >= self.u_a {
            return self.invert_in(u, self.s_a, self.s_b);
        }
        self.s_a - (self.u_a - u) * self.value(self.s_a)
    }

    fn invert_in(&self, u: f64, mut lo: f64, mut hi: f64) -> f64 {
        // safeguarded Newton on u_of_v(v) = u; u_of_v' = 1/H > 0
        let mut v = 0.5 * (lo + hi);
        for _ in 0..80 {
            let fu = self.u_of_v(v) - u;
            if fu.abs() <= 1e-14 * u.abs().max(1.0) {
                return v;
            }
            if fu > 0.0 {
                hi = v;
            } else {
                lo = v;
            }
            let newton = v - fu * self.value(v);
            v = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        v
    }
}

/// Evaluate the regularized mobility (the spec-level entry point).
pub fn mobility_value(h: &RegularizedMobility, s: f64) -> f64 {
    h.value(s)
}

/// Flux law used by the solvers: the bare power u^m or its regularization.
#[derive(Debug, Clone, PartialEq)]
pub enum Mobility {
    Bare { m: f64 },
    Regularized(RegularizedMobility),
}

impl Mobility {
    pub fn m(&self) -> f64 {
        match self {
            Mobility::Bare { m } => *m,
            Mobility::Regularized(h) => h.m,
        }
    }

    /// Phi(u): what the face fluxes difference.
    pub fn phi(&self, u: f64) -> f64 {
        match self {
            Mobility::Bare { m } => {
                if u <= 0.0 {
                    0.0
                } else {
                    u.powf(*m)
                }
            }
            Mobility::Regularized(h) => h.phi(u),
        }
    }

    /// dPhi/du; for the regularization this is H(Phi(u)).
    pub fn phi_prime(&self, u: f64) -> f64 {
        match self {
            Mobility::Bare { m } => {
                let u = u.max(1e-300);
                m * u.powf(m - 1.0)
            }
            Mobility::Regularized(h) => h.value(h.phi(u)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_eq(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol * b.abs().max(1e-300), "a = {a:e}, b = {b:e}");
    }

    #[test]
    fn power_law_on_window() {
        // m = 1/2: H(s) = 0.5/s, so H(1) = 0.5 with 1 inside the window
        let h = RegularizedMobility::new(0.5, 0.5, 4.0).unwrap();
        rel_eq(h.value(1.0), 0.5, 1e-15);
        rel_eq(h.value(2.0), 0.25, 1e-15);
    }

    #[test]
    fn constant_tails() {
        let m = 0.5;
        let h = RegularizedMobility::new(m, 1.0, 4.0).unwrap();
        // below n1/4 = 0.25: H = m (n1/4)^(1-1/m) = 0.5 * 4 = 2, independent of s
        let expected = m * 0.25f64.powf(1.0 - 1.0 / m);
        rel_eq(h.value(0.2), expected, 1e-15);
        rel_eq(h.value(0.01), expected, 1e-15);
        rel_eq(h.value(-3.0), expected, 1e-15);
        // above 4 n2 = 16: H = m (4 n2)^(1-1/m)
        let hi = m * 16f64.powf(1.0 - 1.0 / m);
        rel_eq(h.value(20.0), hi, 1e-15);
        rel_eq(mobility_value(&h, 100.0), hi, 1e-15);
    }

    #[test]
    fn monotone_nonincreasing_and_continuous() {
        for &(m, n1, n2) in &[(0.5, 0.5, 4.0), (1.0 / 3.0, 0.02, 30.0), (0.9, 1.0, 1.0)] {
            let h = RegularizedMobility::new(m, n1, n2).unwrap();
            // 1e4 ordered pairs spanning all panels
            let smax = 6.0 * n2;
            let mut prev = h.value(0.0);
            for k in 1..10_000 {
                let s = smax * k as f64 / 10_000.0;
                let v = h.value(s);
                assert!(v > 0.0);
                assert!(
                    v <= prev * (1.0 + 1e-12),
                    "H not nonincreasing at s = {s} (m={m}, n1={n1}, n2={n2})"
                );
                prev = v;
            }
            // continuity at the four panel joins
            for s in [n1 / 4.0, n1 / 2.0, 2.0 * n2, 4.0 * n2] {
                let eps = 1e-9 * s;
                rel_eq(h.value(s - eps), h.value(s + eps), 1e-6);
            }
        }
    }

    #[test]
    fn phi_equals_power_inside_window() {
        let m = 1.0 / 3.0;
        let h = RegularizedMobility::new(m, 0.5, 8.0).unwrap();
        let (lo, hi) = h.window();
        for k in 0..=50 {
            let v = lo + (hi - lo) * k as f64 / 50.0;
            let u = v.powf(1.0 / m);
            assert_eq!(h.phi(u), u.powf(m));
        }
    }

    #[test]
    fn phi_is_increasing_and_inverts_u_of_v() {
        let m = 0.5;
        let h = RegularizedMobility::new(m, 1.0, 2.0).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for k in 0..200 {
            // u sweep across all panels, including below the lower anchor
            let u = -1.0 + 0.12 * k as f64;
            let v = h.phi(u);
            assert!(v > prev);
            prev = v;
            rel_eq(h.u_of_v(v), u, 1e-9);
        }
    }

    #[test]
    fn phi_prime_matches_finite_difference() {
        let m = 1.0 / 3.0;
        let h = RegularizedMobility::new(m, 0.5, 3.0).unwrap();
        let mob = Mobility::Regularized(h);
        for &u in &[0.05, 0.2, 0.5, 1.0, 30.0, 300.0, 3000.0] {
            let eps = 1e-6 * u;
            let fd = (mob.phi(u + eps) - mob.phi(u - eps)) / (2.0 * eps);
            rel_eq(mob.phi_prime(u), fd, 1e-5);
        }
    }

    #[test]
    fn bare_mobility_is_the_power_law() {
        let mob = Mobility::Bare { m: 0.5 };
        rel_eq(mob.phi(4.0), 2.0, 1e-15);
        rel_eq(mob.phi_prime(4.0), 0.25, 1e-15);
        assert_eq!(mob.phi(0.0), 0.0);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(RegularizedMobility::new(1.5, 1.0, 2.0).is_err());
        assert!(RegularizedMobility::new(0.5, 0.0, 2.0).is_err());
        assert!(RegularizedMobility::new(0.5, 3.0, 2.0).is_err());
    }
}
