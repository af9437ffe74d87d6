//! Scaled KKT residuals, support extraction and the nonzero-group lower bound.

use std::collections::BTreeSet;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coeffs::{norm, CoefficientVector};
use crate::discretization::DiscreteModel;
use crate::objective::{constraint, zero_group_tolerance};

/// Below this constraint value a point is treated as strictly feasible and
/// complementarity forces `ν = 0`.
const STRICT_FEASIBILITY: f64 = -1e-9;

/// Default support threshold relative to the largest group norm.
pub const DEFAULT_RELATIVE_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub nu: f64,
    /// `‖pβ_l‖α_{l·}‖^p α_{l·} + 2ν‖α_{l·}‖²(Ŷ_{l·}α − α̂°_{l·})‖` per degree.
    pub stationarity_residuals: Vec<f64>,
    pub complementarity: f64,
    pub feasibility: f64,
    pub max_residual: f64,
    pub g: f64,
    /// All groups are zero; `ν` carries no information.
    pub degenerate: bool,
}

/// Scaled KKT diagnostics at `alpha`.
///
/// `ν` is the nonnegative least-squares fit of the stacked per-group
/// stationarity equations, forced to zero when `g(α) < −10⁻⁹`.
pub fn kkt_report(alpha: &CoefficientVector, model: &DiscreteModel) -> KktReport {
    let eval = constraint(alpha, model);
    let weights = model.weights();
    let p = weights.p();
    let tol = zero_group_tolerance(alpha);

    // r_l(ν) = a_l + ν b_l on nonzero groups
    let mut terms: Vec<(Vec<Complex64>, Vec<Complex64>)> = Vec::new();
    let mut start = 0;
    let mut nonzero = 0;
    for (l, grp) in alpha.groups().enumerate() {
        let r = norm(grp);
        let res = &eval.residual[start..start + grp.len()];
        start += grp.len();
        if r <= tol {
            terms.push((Vec::new(), Vec::new()));
            continue;
        }
        nonzero += 1;
        let ca = p * weights.beta(l) * r.powf(p);
        let cb = 2.0 * r * r;
        terms.push((
            grp.iter().map(|x| x * ca).collect(),
            res.iter().map(|x| x * cb).collect(),
        ));
    }

    let degenerate = nonzero == 0;
    let nu = if degenerate || eval.value < STRICT_FEASIBILITY {
        0.0
    } else {
        let mut num = 0.0;
        let mut den = 0.0;
        for (a, b) in &terms {
            for (x, y) in a.iter().zip(b) {
                num += (x.conj() * y).re;
                den += y.norm_sqr();
            }
        }
        if den > 0.0 {
            (-num / den).max(0.0)
        } else {
            0.0
        }
    };

    let stationarity_residuals: Vec<f64> = terms
        .iter()
        .map(|(a, b)| {
            a.iter()
                .zip(b)
                .fold(0.0, |acc, (x, y)| acc + (x + y * nu).norm_sqr())
                .sqrt()
        })
        .collect();
    let max_residual = stationarity_residuals.iter().cloned().fold(0.0, f64::max);
    KktReport {
        nu,
        complementarity: (nu * eval.value).abs(),
        feasibility: eval.value.max(0.0),
        stationarity_residuals,
        max_residual,
        g: eval.value,
        degenerate,
    }
}

/// `(pβ_l / (2 ν c̃))^{1/(1−p)}` for every degree.
pub fn group_lower_bound(model: &DiscreteModel, nu: f64, c_tilde: f64) -> Vec<f64> {
    let p = model.p();
    model
        .weights()
        .values()
        .iter()
        .map(|&beta| (p * beta / (2.0 * nu * c_tilde)).powf(1.0 / (1.0 - p)))
        .collect()
}

/// Degrees whose group norm exceeds `threshold`.
pub fn support(alpha: &CoefficientVector, threshold: f64) -> BTreeSet<usize> {
    alpha
        .group_norms()
        .into_iter()
        .enumerate()
        .filter(|(_, r)| *r > threshold)
        .map(|(l, _)| l)
        .collect()
}

/// `10⁻⁸ · max_l ‖α_{l·}‖`.
pub fn default_threshold(alpha: &CoefficientVector) -> f64 {
    DEFAULT_RELATIVE_THRESHOLD * alpha.group_norms().into_iter().fold(0.0, f64::max)
}

pub fn default_support(alpha: &CoefficientVector) -> BTreeSet<usize> {
    support(alpha, default_threshold(alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::DegreeWeights;
    use crate::harmonics::BandLimit;
    use crate::linalg::HermitianMatrix;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn unit_model(rho: f64) -> DiscreteModel {
        let band = BandLimit::new(1);
        DiscreteModel::from_parts(
            HermitianMatrix::identity(4),
            vec![c(1.0, 0.0), c(0.0, 0.0), c(0.5, 0.5), c(0.0, 0.0)],
            2.0,
            rho,
            DegreeWeights::new(band, 0.5, 1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn lower_bound_examples() {
        let model = unit_model(1.0);
        let b = group_lower_bound(&model, 1.0, 0.25);
        // β_0 = 1, p = 0.5 → (0.5 / 0.5)² = 1
        assert!((b[0] - 1.0).abs() < 1e-15);
        let doubled = group_lower_bound(&model, 2.0, 0.25);
        assert!((doubled[0] - 0.25).abs() < 1e-15);
        // η = 1 makes β_1 = 1^p = β_0
        assert_eq!(b[1], b[0]);
    }

    #[test]
    fn support_examples() {
        let band = BandLimit::new(3);
        let zero = CoefficientVector::zeros(band);
        assert!(support(&zero, 0.0).is_empty());
        let mut a = CoefficientVector::zeros(band);
        a.group_mut(1)[0] = c(1.0, 0.0);
        a.group_mut(3)[2] = c(0.0, 1e-3);
        assert_eq!(support(&a, 0.0), BTreeSet::from([1, 3]));
        assert_eq!(support(&a, 1e-2), BTreeSet::from([1]));
    }

    #[test]
    fn zero_vector_is_degenerate() {
        let model = unit_model(1.0);
        let r = kkt_report(&CoefficientVector::zeros(model.band_limit()), &model);
        assert!(r.degenerate);
        assert_eq!(r.nu, 0.0);
        assert_eq!(r.max_residual, 0.0);
        assert!(r.stationarity_residuals.iter().all(|v| v.is_sign_positive()));
    }

    #[test]
    fn strictly_feasible_point_has_zero_multiplier() {
        let model = unit_model(1.9);
        let mut a = CoefficientVector::zeros(model.band_limit());
        a.as_mut_slice()[0] = c(1.0, 0.0);
        a.as_mut_slice()[2] = c(0.5, 0.5);
        let r = kkt_report(&a, &model);
        assert!(r.g < 0.0);
        assert_eq!(r.nu, 0.0);
        assert!(r.max_residual > 0.1);
    }
}
