//! Objective pieces: the group `ℓ_{2,p}` term `Φ`, the quadratic constraint
//! `g`, the exact penalty, its smoothing and their Wirtinger gradients.
//!
//! Gradients are stored as the conjugate-coordinate part `∂_ᾱ`; the gradient
//! with respect to the real pair `(Re α, Im α)` is `2 (Re ∂_ᾱ, Im ∂_ᾱ)`.

use num_complex::Complex64;

use crate::coeffs::{dot, norm, CoefficientVector};
use crate::discretization::{DegreeWeights, DiscreteModel};
use crate::error::{Error, Result};

/// Penalty weight `λ` and smoothing parameter `μ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingParams {
    lambda: f64,
    mu: f64,
}

impl SmoothingParams {
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        if !(lambda > 0.0 && mu > 0.0) || !lambda.is_finite() || !mu.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "smoothing parameters must be positive (lambda = {lambda}, mu = {mu})"
            )));
        }
        Ok(Self { lambda, mu })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

/// `Φ(α) = Σ_l β_l ‖α_{l·}‖^p`.
pub fn phi(alpha: &CoefficientVector, weights: &DegreeWeights) -> f64 {
    let p = weights.p();
    alpha
        .groups()
        .enumerate()
        .map(|(l, g)| {
            let r = norm(g);
            if r == 0.0 {
                0.0
            } else {
                weights.beta(l) * r.powf(p)
            }
        })
        .sum()
}

/// Constraint value with the `Ŷα` product it needed, reused by gradients.
#[derive(Debug, Clone)]
pub struct ConstraintEval {
    pub value: f64,
    /// `Ŷα − α̂°`, i.e. `∂_ᾱ g(α)`.
    pub residual: Vec<Complex64>,
}

/// `g(α) = α^H Ŷ α − 2 Re(α^H α̂°) + c − ϱ` together with `Ŷα − α̂°`.
pub fn constraint(alpha: &CoefficientVector, model: &DiscreteModel) -> ConstraintEval {
    let a = alpha.as_slice();
    let ya = model.gram().matvec(a);
    let quad: f64 = a.iter().zip(&ya).map(|(x, y)| (x.conj() * y).re).sum();
    let cross = dot(a, model.rhs()).re;
    let value = quad - 2.0 * cross + model.c() - model.rho();
    let residual = ya.iter().zip(model.rhs()).map(|(y, b)| y - b).collect();
    ConstraintEval { value, residual }
}

pub fn g(alpha: &CoefficientVector, model: &DiscreteModel) -> f64 {
    constraint(alpha, model).value
}

/// Exact penalty `F_λ(α) = Φ(α) + λ (g(α))₊`.
pub fn penalty_f(alpha: &CoefficientVector, model: &DiscreteModel, lambda: f64) -> f64 {
    phi(alpha, model.weights()) + lambda * g(alpha, model).max(0.0)
}

/// `ψ_{λ,μ}(s) = λ max_{0≤t≤1} (st − μt²/2)`.
pub fn psi(s: f64, params: SmoothingParams) -> f64 {
    let (lambda, mu) = (params.lambda, params.mu);
    if s <= 0.0 {
        0.0
    } else if s <= mu {
        lambda * s * s / (2.0 * mu)
    } else {
        lambda * s - lambda * mu / 2.0
    }
}

/// `ψ'_{λ,μ}(s) = λ min(max(s/μ, 0), 1)`.
pub fn psi_prime(s: f64, params: SmoothingParams) -> f64 {
    params.lambda * (s / params.mu).clamp(0.0, 1.0)
}

/// `f_{λ,μ}(α) = ψ_{λ,μ}(g(α))`.
pub fn smooth_f(alpha: &CoefficientVector, model: &DiscreteModel, params: SmoothingParams) -> f64 {
    psi(g(alpha, model), params)
}

/// `∂_ᾱ f_{λ,μ}(α) = ψ'(g(α)) (Ŷα − α̂°)`.
pub fn smooth_f_grad(alpha: &CoefficientVector, model: &DiscreteModel, params: SmoothingParams) -> Vec<Complex64> {
    smooth_f_grad_from(&constraint(alpha, model), params)
}

pub fn smooth_f_grad_from(eval: &ConstraintEval, params: SmoothingParams) -> Vec<Complex64> {
    let scale = psi_prime(eval.value, params);
    eval.residual.iter().map(|r| r * scale).collect()
}

/// Smoothed penalty `F_{λ,μ} = Φ + f_{λ,μ}`.
pub fn smoothed_penalty(alpha: &CoefficientVector, model: &DiscreteModel, params: SmoothingParams) -> f64 {
    phi(alpha, model.weights()) + smooth_f(alpha, model, params)
}

/// Threshold below which a group counts as zero for gradient purposes.
pub fn zero_group_tolerance(alpha: &CoefficientVector) -> f64 {
    1e-12 * (1.0 + alpha.norm())
}

/// `∂_ᾱ Φ` on nonzero groups, `(p/2) β_l ‖α_{l·}‖^{p−2} α_{l·}`; groups at or
/// below [`zero_group_tolerance`] contribute zero.
pub fn phi_grad_nonzero(alpha: &CoefficientVector, weights: &DegreeWeights) -> Vec<Complex64> {
    let p = weights.p();
    let tol = zero_group_tolerance(alpha);
    let mut out = vec![Complex64::new(0.0, 0.0); alpha.len()];
    let mut start = 0;
    for (l, grp) in alpha.groups().enumerate() {
        let r = norm(grp);
        if r > tol {
            let scale = 0.5 * p * weights.beta(l) * r.powf(p - 2.0);
            for (o, a) in out[start..start + grp.len()].iter_mut().zip(grp) {
                *o = a * scale;
            }
        }
        start += grp.len();
    }
    out
}
