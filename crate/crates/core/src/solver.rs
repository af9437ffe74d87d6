//! Smoothing penalty method with a nonmonotone proximal gradient inner solver.
//!
//! The outer loop drives `λ → ∞`, `μ → 0` on
//! `F_{λ,μ}(α) = Φ(α) + ψ_{λ,μ}(g(α))`, restarting from the feasible point
//! `α̃` whenever the current iterate is worse than it. Each smoothed problem
//! is solved by NPG: a groupwise prox step with Barzilai–Borwein curvature
//! seeding, accepted against the max of the last `N + 1` objective values.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coeffs::{norm, CoefficientVector};
use crate::diagnostics::{kkt_report, KktReport};
use crate::discretization::{DegreeWeights, DiscreteModel};
use crate::error::{Error, Result};
use crate::linalg::Cholesky;
use crate::objective::{constraint, phi, phi_grad_nonzero, psi, smooth_f_grad_from, SmoothingParams};
use crate::prox::{group_prox, shifted_center};

/// Inner NPG parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NpgConfig {
    pub m_min: f64,
    pub m_max: f64,
    pub eta_tilde: f64,
    pub b: f64,
    /// Nonmonotone memory `N`: the acceptance test looks back `N + 1` values.
    pub memory: usize,
    pub max_inner_iterations: usize,
    /// How many times the displacement tolerance is tightened (×0.1) when the
    /// practical stopping rule fires before the scaled residual is small.
    pub max_resumptions: usize,
}

impl Default for NpgConfig {
    fn default() -> Self {
        Self {
            m_min: 1.0,
            m_max: 1e6,
            eta_tilde: 2.0,
            b: 1e-4,
            memory: 4,
            max_inner_iterations: 10_000,
            max_resumptions: 5,
        }
    }
}

impl NpgConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.m_min > 0.0 && self.m_min <= self.m_max) {
            return Err(Error::InvalidConfig("NPG requires 0 < M_min <= M_max".into()));
        }
        if !(self.eta_tilde > 1.0) {
            return Err(Error::InvalidConfig("NPG backtracking factor must exceed 1".into()));
        }
        if !(self.b > 0.0) {
            return Err(Error::InvalidConfig("NPG decrease constant b must be positive".into()));
        }
        if self.max_inner_iterations == 0 {
            return Err(Error::InvalidConfig("max_inner_iterations must be positive".into()));
        }
        Ok(())
    }
}

/// Outer smoothing-penalty parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PenaltyConfig {
    pub lambda0: f64,
    pub mu0: f64,
    pub eps0: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub eps_floor: f64,
    pub outer_tol: f64,
    pub max_outer_iterations: usize,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self {
            lambda0: 20.0,
            mu0: 1.0,
            eps0: 1.0,
            sigma1: 2.0,
            sigma2: 0.5,
            eps_floor: 1e-6,
            outer_tol: 1e-6,
            max_outer_iterations: 60,
        }
    }
}

impl PenaltyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda0 > 0.0 && self.mu0 > 0.0 && self.eps0 > 0.0) {
            return Err(Error::InvalidConfig("lambda0, mu0 and eps0 must be positive".into()));
        }
        if !(self.sigma1 > 1.0) {
            return Err(Error::InvalidConfig("sigma1 must exceed 1".into()));
        }
        if !(self.sigma2 > 0.0 && self.sigma2 < 1.0) {
            return Err(Error::InvalidConfig("sigma2 must lie in (0, 1)".into()));
        }
        if !(self.eps_floor >= 0.0 && self.outer_tol > 0.0) {
            return Err(Error::InvalidConfig("eps_floor must be >= 0 and outer_tol > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NpgStatus {
    Converged,
    /// Stopping rule fired but the scaled residual stayed above `ε`.
    ResidualNotMet,
    MaxIterations,
    /// Backtracking could not find an acceptable step.
    Stalled,
}

#[derive(Debug, Clone)]
pub struct NpgOutcome {
    pub alpha: CoefficientVector,
    pub iterations: usize,
    pub status: NpgStatus,
    /// `F_{λ,μ}` at the initial point followed by every accepted iterate.
    pub objective_history: Vec<f64>,
    /// BB seeds that hit the zero-displacement convention.
    pub degenerate_bb: usize,
}

/// One row of the outer-iteration trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: usize,
    pub lambda: f64,
    pub mu: f64,
    pub eps: f64,
    pub phi: f64,
    pub g: f64,
    pub gplus: f64,
    pub inner_iters: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    /// Termination test not met within `max_outer_iterations`.
    OuterLimit,
    /// The minimum of `g` is positive: no feasible point exists.
    Infeasible,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveResult {
    #[serde(skip)]
    pub alpha: CoefficientVector,
    pub status: SolveStatus,
    pub outer_iterations: usize,
    pub total_inner_iterations: usize,
    pub feasibility: f64,
    pub kkt: KktReport,
    pub trace: Vec<TraceRecord>,
    pub inner_status: Vec<NpgStatus>,
    /// Outer iterations where step (1) restarted from `α̃`.
    pub resets: Vec<usize>,
    pub phi_initial: f64,
    pub g_initial: f64,
    /// Regularization of the anchor (see [`feasible_anchor`]).
    pub anchor_shift: f64,
    /// Final `λ`, i.e. the penalty weight of the last inner solve.
    pub lambda_final: f64,
    pub mu_final: f64,
    pub eps_final: f64,
    #[serde(serialize_with = "serialize_secs")]
    pub wall_time: Duration,
}

fn serialize_secs<S: serde::Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

impl SolveResult {
    /// Whether the run ended with the termination test met and every inner
    /// solve converged.
    pub fn is_clean(&self) -> bool {
        self.status == SolveStatus::Converged && self.inner_status.iter().all(|s| *s == NpgStatus::Converged)
    }
}

/// Barzilai–Borwein curvature seed
/// `clamp(|Δα^H ΔG| / ‖Δα‖², M_min, M_max)`; returns `(M_min, true)` when the
/// displacement vanishes.
pub fn bb_init(
    alpha_prev: &[Complex64],
    alpha_cur: &[Complex64],
    grad_prev: &[Complex64],
    grad_cur: &[Complex64],
    m_min: f64,
    m_max: f64,
) -> (f64, bool) {
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = 0.0;
    for i in 0..alpha_cur.len() {
        let d = alpha_cur[i] - alpha_prev[i];
        num += d.conj() * (grad_cur[i] - grad_prev[i]);
        den += d.norm_sqr();
    }
    if den == 0.0 {
        return (m_min, true);
    }
    let q = num.norm() / den;
    if !q.is_finite() {
        return (m_max, false);
    }
    (q.max(m_min).min(m_max), false)
}

/// Groupwise prox of `Φ` at `α − ∂_ᾱf / M`, the exact minimizer of the
/// linearized subproblem.
pub fn npg_step(alpha: &CoefficientVector, grad: &[Complex64], weights: &DegreeWeights, m: f64) -> CoefficientVector {
    let mut out = CoefficientVector::zeros(alpha.band_limit());
    let mut start = 0;
    for l in 0..=alpha.degree() {
        let a = alpha.group(l);
        let z = shifted_center(a, &grad[start..start + a.len()], m);
        out.group_mut(l)
            .copy_from_slice(&group_prox(&z, weights.beta(l), weights.p(), m));
        start += a.len();
    }
    out
}

/// Per-group scaled stationarity residuals
/// `‖pβ_l‖α_{l·}‖^p α_{l·} + 2‖α_{l·}‖² g_{l·}‖` for a gradient `g`.
pub fn scaled_residuals(alpha: &CoefficientVector, grad: &[Complex64], weights: &DegreeWeights) -> Vec<f64> {
    let p = weights.p();
    let mut start = 0;
    alpha
        .groups()
        .enumerate()
        .map(|(l, a)| {
            let r = norm(a);
            let gr = &grad[start..start + a.len()];
            start += a.len();
            if r == 0.0 {
                return 0.0;
            }
            let c1 = p * weights.beta(l) * r.powf(p);
            let c2 = 2.0 * r * r;
            a.iter()
                .zip(gr)
                .map(|(x, y)| (x * c1 + y * c2).norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

/// Whether every group's scaled residual is within `eps`.
pub fn residual_ok(alpha: &CoefficientVector, model: &DiscreteModel, params: SmoothingParams, eps: f64) -> bool {
    let grad = smooth_f_grad_from(&constraint(alpha, model), params);
    scaled_residuals(alpha, &grad, model.weights())
        .iter()
        .all(|&r| r <= eps)
}

struct Point {
    alpha: CoefficientVector,
    objective: f64,
    grad_f: Vec<Complex64>,
}

impl Point {
    fn new(alpha: CoefficientVector, model: &DiscreteModel, params: SmoothingParams) -> Self {
        let eval = constraint(&alpha, model);
        let objective = phi(&alpha, model.weights()) + psi(eval.value, params);
        let grad_f = smooth_f_grad_from(&eval, params);
        Self {
            alpha,
            objective,
            grad_f,
        }
    }

    /// `∂_ᾱ f + ∂_ᾱ Φ` with zero groups contributing nothing.
    fn full_grad(&self, weights: &DegreeWeights) -> Vec<Complex64> {
        let gp = phi_grad_nonzero(&self.alpha, weights);
        self.grad_f.iter().zip(&gp).map(|(a, b)| a + b).collect()
    }
}

/// Smoothed penalty objective `F_{λ,μ}`.
pub fn smoothed_objective(alpha: &CoefficientVector, model: &DiscreteModel, params: SmoothingParams) -> f64 {
    phi(alpha, model.weights()) + psi(constraint(alpha, model).value, params)
}

/// Nonmonotone proximal gradient on `F_{λ,μ}` from `alpha_init`.
///
/// Stops when `‖αⁿ − αⁿ⁻¹‖_∞ ≤ √ε` and the relative objective change is at
/// most `min(ε^{2.2}, 10⁻⁴)`, provided the scaled residual test at `ε` also
/// holds; otherwise the displacement tolerance is tightened and iteration
/// resumes.
pub fn npg_solve(
    model: &DiscreteModel,
    params: SmoothingParams,
    alpha_init: &CoefficientVector,
    eps: f64,
    config: &NpgConfig,
) -> NpgOutcome {
    let weights = model.weights();
    let mut cur = Point::new(alpha_init.clone(), model, params);
    let mut history = vec![cur.objective];
    let mut m0 = 1.0f64.clamp(config.m_min, config.m_max);
    let mut disp_tol = eps.sqrt();
    let obj_tol = eps.powf(2.2).min(1e-4);
    let mut resumptions = 0;
    let mut degenerate_bb = 0;
    let mut iterations = 0;

    let status = loop {
        if iterations >= config.max_inner_iterations {
            break NpgStatus::MaxIterations;
        }
        let window_start = history.len().saturating_sub(config.memory + 1);
        let reference = history[window_start..]
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);

        let mut m = m0;
        let accepted = loop {
            let y = npg_step(&cur.alpha, &cur.grad_f, weights, m);
            let dist2: f64 = y
                .as_slice()
                .iter()
                .zip(cur.alpha.as_slice())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum();
            let cand = Point::new(y, model, params);
            if cand.objective <= reference - config.b * dist2 {
                break Some(cand);
            }
            m *= config.eta_tilde;
            if !m.is_finite() || m > 1e300 {
                break None;
            }
        };
        let Some(next) = accepted else {
            break NpgStatus::Stalled;
        };
        iterations += 1;

        let (seed, degenerate) = bb_init(
            cur.alpha.as_slice(),
            next.alpha.as_slice(),
            &cur.full_grad(weights),
            &next.full_grad(weights),
            config.m_min,
            config.m_max,
        );
        m0 = seed;
        if degenerate {
            degenerate_bb += 1;
        }

        let step_inf = next
            .alpha
            .as_slice()
            .iter()
            .zip(cur.alpha.as_slice())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        let rel_change = (next.objective - cur.objective).abs() / next.objective.abs().max(1.0);
        history.push(next.objective);
        cur = next;

        if step_inf <= disp_tol && rel_change <= obj_tol {
            let residuals = scaled_residuals(&cur.alpha, &cur.grad_f, weights);
            if residuals.iter().all(|&r| r <= eps) {
                break NpgStatus::Converged;
            }
            if resumptions >= config.max_resumptions {
                break NpgStatus::ResidualNotMet;
            }
            resumptions += 1;
            disp_tol *= 0.1;
        }
    };

    NpgOutcome {
        alpha: cur.alpha,
        iterations,
        status,
        objective_history: history,
        degenerate_bb,
    }
}

/// `α̃ = Ŷ⁻¹ α̂°`, the unique minimizer of `g`.
pub fn constraint_minimizer(model: &DiscreteModel) -> Result<CoefficientVector> {
    let chol = Cholesky::factor(model.gram()).map_err(|e| Error::InvalidModel(format!("Gram matrix: {e}")))?;
    CoefficientVector::from_vec(model.band_limit(), chol.solve(model.rhs()))
}

/// Smallest acceptable `min pivot² / max pivot²` of the Cholesky factor for
/// the exact solve; below it `Ŷ⁻¹ α̂°` is dominated by rounding.
pub const ANCHOR_PIVOT_RATIO: f64 = 1e-10;

/// Starting and restart point of the penalty method.
#[derive(Debug, Clone)]
pub struct Anchor {
    pub alpha: CoefficientVector,
    /// `τ` in `(Ŷ + τI)⁻¹ α̂°`; zero for the exact minimizer.
    pub shift: f64,
    pub g: f64,
}

/// `α̃ = Ŷ⁻¹ α̂°` when `Ŷ` is well conditioned. Otherwise `(Ŷ + τI)⁻¹ α̂°`
/// for `τ = 10⁻¹, 10⁻², …` (relative to the largest diagonal entry),
/// stopping once `g` changes by less than 1% between steps. A positive
/// final `g` means the problem is infeasible at this band limit.
pub fn feasible_anchor(model: &DiscreteModel) -> Result<Anchor> {
    let band = model.band_limit();
    let solve = |chol: &Cholesky| CoefficientVector::from_vec(band, chol.solve(model.rhs()));
    if let Ok(chol) = Cholesky::factor(model.gram()) {
        let piv = chol.pivots();
        let lo = piv.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = piv.iter().cloned().fold(0.0, f64::max);
        if (lo * lo) >= ANCHOR_PIVOT_RATIO * hi * hi {
            let alpha = solve(&chol)?;
            let g = constraint(&alpha, model).value;
            return Ok(Anchor { alpha, shift: 0.0, g });
        }
    }
    let scale = (0..model.dim()).map(|i| model.gram().get(i, i).re).fold(0.0, f64::max);
    let mut best: Option<Anchor> = None;
    for j in 1..=15 {
        let shift = scale * 10f64.powi(-j);
        let Ok(chol) = Cholesky::factor_shifted(model.gram(), shift) else {
            break;
        };
        let alpha = solve(&chol)?;
        let g = constraint(&alpha, model).value;
        log::debug!("anchor shift {shift:.1e}: g = {g:.6e}");
        let settled = best.as_ref().is_some_and(|b| (b.g - g).abs() <= 1e-2 * g.abs());
        best = Some(Anchor { alpha, shift, g });
        if settled {
            break;
        }
    }
    best.ok_or_else(|| Error::InvalidModel("Gram matrix is not positive semidefinite".into()))
}

/// Run the smoothing penalty method from [`feasible_anchor`].
pub fn penalty_solve(model: &DiscreteModel, penalty: &PenaltyConfig, npg: &NpgConfig) -> Result<SolveResult> {
    let start = Instant::now();
    let anchor = feasible_anchor(model)?;
    if anchor.shift > 0.0 {
        log::info!(
            "Gram matrix is ill conditioned; anchoring at shift {:.1e}",
            anchor.shift
        );
    }
    let mut result = penalty_solve_from(model, anchor.alpha, penalty, npg)?;
    result.anchor_shift = anchor.shift;
    result.wall_time = start.elapsed();
    Ok(result)
}

/// Smoothing penalty method with a caller-supplied feasible anchor `α̃`
/// (`g(α̃) ≤ 0`), used both as the starting point and as the restart point.
pub fn penalty_solve_from(
    model: &DiscreteModel,
    alpha_tilde: CoefficientVector,
    penalty: &PenaltyConfig,
    npg: &NpgConfig,
) -> Result<SolveResult> {
    penalty.validate()?;
    npg.validate()?;
    if alpha_tilde.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            actual: alpha_tilde.len(),
        });
    }
    let start = Instant::now();
    let weights = model.weights();
    let g_tilde = constraint(&alpha_tilde, model).value;
    let phi_tilde = phi(&alpha_tilde, weights);

    let finish = |alpha: CoefficientVector,
                  status: SolveStatus,
                  trace: Vec<TraceRecord>,
                  inner_status: Vec<NpgStatus>,
                  resets: Vec<usize>,
                  total_inner: usize,
                  (lambda, mu, eps): (f64, f64, f64)| {
        let g_final = constraint(&alpha, model).value;
        SolveResult {
            kkt: kkt_report(&alpha, model),
            feasibility: g_final.max(0.0),
            outer_iterations: trace.len(),
            total_inner_iterations: total_inner,
            alpha,
            status,
            trace,
            inner_status,
            resets,
            phi_initial: phi_tilde,
            g_initial: g_tilde,
            anchor_shift: 0.0,
            lambda_final: lambda,
            mu_final: mu,
            eps_final: eps,
            wall_time: start.elapsed(),
        }
    };

    if g_tilde > 0.0 {
        log::warn!("constraint minimum g(α̃) = {g_tilde:.3e} > 0: problem is infeasible at this band limit");
        return Ok(finish(
            alpha_tilde,
            SolveStatus::Infeasible,
            Vec::new(),
            Vec::new(),
            Vec::new(),
            0,
            (penalty.lambda0, penalty.mu0, penalty.eps0),
        ));
    }

    let mut lambda = penalty.lambda0;
    let mut mu = penalty.mu0;
    let mut eps = penalty.eps0;
    let mut alpha = alpha_tilde.clone();
    let mut trace = Vec::new();
    let mut inner_status = Vec::new();
    let mut resets = Vec::new();
    let mut total_inner = 0;
    let mut last_params = (lambda, mu, eps);

    for k in 0..penalty.max_outer_iterations {
        let params = SmoothingParams::new(lambda, mu)?;
        if k > 0 && smoothed_objective(&alpha, model, params) > smoothed_objective(&alpha_tilde, model, params) {
            alpha = alpha_tilde.clone();
            resets.push(k);
        }
        let outcome = npg_solve(model, params, &alpha, eps, npg);
        if outcome.status != NpgStatus::Converged {
            log::warn!("outer iteration {k}: inner solver ended with {:?}", outcome.status);
        }
        alpha = outcome.alpha;
        total_inner += outcome.iterations;
        inner_status.push(outcome.status);

        let g_val = constraint(&alpha, model).value;
        trace.push(TraceRecord {
            k,
            lambda,
            mu,
            eps,
            phi: phi(&alpha, weights),
            g: g_val,
            gplus: g_val.max(0.0),
            inner_iters: outcome.iterations,
        });
        log::debug!(
            "k={k} lambda={lambda:.3e} mu={mu:.3e} eps={eps:.3e} g={g_val:.3e} inner={}",
            outcome.iterations
        );
        last_params = (lambda, mu, eps);

        lambda *= penalty.sigma1;
        mu *= penalty.sigma2;
        eps = (penalty.sigma2 * eps).max(penalty.eps_floor);

        if g_val.max(0.0).max(0.01 * eps) <= penalty.outer_tol {
            return Ok(finish(
                alpha,
                SolveStatus::Converged,
                trace,
                inner_status,
                resets,
                total_inner,
                last_params,
            ));
        }
    }
    Ok(finish(
        alpha,
        SolveStatus::OuterLimit,
        trace,
        inner_status,
        resets,
        total_inner,
        last_params,
    ))
}
