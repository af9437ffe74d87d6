//! Group-separable proximal map of the weighted `ℓ_{2,p}` term.
//!
//! For each degree group the linearized subproblem reduces to
//! `min_v β‖v‖^p + M‖v − z‖²`, whose minimizer is colinear with `z`; the
//! radial part is the scalar problem `min_{t≥0} βt^p + M(t − r)²`.

use num_complex::Complex64;

use crate::coeffs::norm;
use crate::error::{Error, Result};

/// Scalar instance `min_{t≥0} h(t) = βt^p + M(t − r)²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxInstance {
    pub r: f64,
    pub beta: f64,
    pub p: f64,
    pub m: f64,
}

impl ProxInstance {
    pub fn new(r: f64, beta: f64, p: f64, m: f64) -> Result<Self> {
        if !(r >= 0.0 && beta >= 0.0 && p > 0.0 && p < 1.0 && m > 0.0) || !(r.is_finite() && m.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "invalid prox instance (r = {r}, beta = {beta}, p = {p}, M = {m})"
            )));
        }
        Ok(Self { r, beta, p, m })
    }

    pub fn objective(&self, t: f64) -> f64 {
        let pen = if t == 0.0 { 0.0 } else { self.beta * t.powf(self.p) };
        pen + self.m * (t - self.r) * (t - self.r)
    }

    /// `h'(t) = pβt^{p−1} + 2M(t − r)` for `t > 0`.
    fn stationarity(&self, t: f64) -> f64 {
        self.p * self.beta * t.powf(self.p - 1.0) + 2.0 * self.m * (t - self.r)
    }

    fn stationarity_slope(&self, t: f64) -> f64 {
        self.p * (self.p - 1.0) * self.beta * t.powf(self.p - 2.0) + 2.0 * self.m
    }
}

/// `z_l = α_{l·} − ∂_ᾱf_{l·} / M`: completing the square in
/// `2 Re⟨grad, v − α⟩ + M‖v − α‖²` gives `M‖v − z‖²` plus a constant.
pub fn shifted_center(alpha_group: &[Complex64], grad_group: &[Complex64], m: f64) -> Vec<Complex64> {
    alpha_group.iter().zip(grad_group).map(|(a, g)| a - g / m).collect()
}

/// Global minimizer of `βt^p + M(t − r)²` over `t ≥ 0`; ties go to `0`.
///
/// `h'` is convex on `(0, ∞)` and tends to `+∞` at `0⁺`, so it has at most
/// two roots; only the larger one can be a local minimizer. It is located by
/// safeguarded Newton on the bracket `[t_c, r]`, where `t_c` minimizes `h'`,
/// and then compared with `h(0) = Mr²`.
pub fn scalar_prox(inst: ProxInstance) -> f64 {
    let ProxInstance { r, beta, p, m } = inst;
    if r == 0.0 {
        return 0.0;
    }
    if beta == 0.0 {
        return r;
    }
    let t_c = (p * (1.0 - p) * beta / (2.0 * m)).powf(1.0 / (2.0 - p));
    if t_c >= r || inst.stationarity(t_c) >= 0.0 {
        return 0.0;
    }

    let tol = 1e-12 * (1.0 + m * r);
    let (mut lo, mut hi) = (t_c, r);
    let mut t = r;
    for _ in 0..200 {
        let f = inst.stationarity(t);
        if f.abs() <= tol {
            break;
        }
        if f > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let step = f / inst.stationarity_slope(t);
        let next = t - step;
        t = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }

    if inst.objective(t) < m * r * r {
        t
    } else {
        0.0
    }
}

/// Vector prox: `(t*/‖z‖)·z` with `t* = scalar_prox(‖z‖, β, p, M)`.
pub fn group_prox(z: &[Complex64], beta: f64, p: f64, m: f64) -> Vec<Complex64> {
    let r = norm(z);
    let zero = || vec![Complex64::new(0.0, 0.0); z.len()];
    if r == 0.0 {
        return zero();
    }
    let t = scalar_prox(ProxInstance { r, beta, p, m });
    if t == 0.0 {
        zero()
    } else {
        let s = t / r;
        z.iter().map(|v| v * s).collect()
    }
}

/// Smallest `r` with a nonzero prox output: where the interior minimum ties
/// with `t = 0`.
pub fn threshold(beta: f64, p: f64, m: f64) -> f64 {
    // at the tie, t̄ = 2(1−p)/(2−p) · r̄ and r̄ follows from h'(t̄) = 0
    let k = 2.0 * (1.0 - p) / (2.0 - p);
    let a = p * beta / (2.0 * m);
    // pβ t^{p-1} = 2M(r − t) with t = k r → a k^{p−1} r^{p−1} = (1 − k) r
    (a * k.powf(p - 1.0) / (1.0 - k)).powf(1.0 / (2.0 - p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(r: f64, beta: f64, p: f64, m: f64) -> ProxInstance {
        ProxInstance::new(r, beta, p, m).unwrap()
    }

    #[test]
    fn zero_radius() {
        assert_eq!(scalar_prox(inst(0.0, 1.0, 0.5, 1.0)), 0.0);
    }

    #[test]
    fn interior_solution() {
        let i = inst(2.0, 1.0, 0.5, 1.0);
        let t = scalar_prox(i);
        assert!((t - 1.814).abs() <= 1e-3, "{t}");
        assert!((i.objective(t) - 1.382).abs() < 1e-3);
        assert!(i.objective(t) < 4.0);
    }

    #[test]
    fn below_threshold_gives_zero() {
        assert_eq!(scalar_prox(inst(0.5, 1.0, 0.5, 1.0)), 0.0);
    }

    #[test]
    fn pure_projection_when_beta_zero() {
        let z = vec![Complex64::new(1.0, -2.0), Complex64::new(0.5, 0.0)];
        assert_eq!(group_prox(&z, 0.0, 0.5, 3.0), z);
    }

    #[test]
    fn zero_group_stays_zero() {
        let z = vec![Complex64::new(0.0, 0.0); 5];
        assert_eq!(group_prox(&z, 1.0, 0.5, 1.0), z);
    }

    #[test]
    fn shifted_center_examples() {
        let a = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let g = vec![Complex64::new(2.0, 0.0), Complex64::new(0.0, 0.0)];
        assert_eq!(shifted_center(&a, &g, 2.0), vec![Complex64::new(0.0, 0.0); 2]);
        let zero = vec![Complex64::new(0.0, 0.0); 2];
        assert_eq!(shifted_center(&a, &zero, 5.0), a);
    }

    #[test]
    fn threshold_separates_branches() {
        for &(beta, p, m) in &[(1.0, 0.5, 1.0), (2.0, 0.3, 5.0), (0.7, 0.7, 0.2)] {
            let rbar = threshold(beta, p, m);
            assert_eq!(scalar_prox(inst(rbar * 0.999, beta, p, m)), 0.0);
            assert!(scalar_prox(inst(rbar * 1.001, beta, p, m)) > 0.0);
        }
    }

    #[test]
    fn invalid_instance_rejected() {
        assert!(ProxInstance::new(-1.0, 1.0, 0.5, 1.0).is_err());
        assert!(ProxInstance::new(1.0, 1.0, 1.0, 1.0).is_err());
        assert!(ProxInstance::new(1.0, 1.0, 0.5, 0.0).is_err());
    }
}
