//! Recovery metrics: relative coefficient error, field SNR and support counts.

use std::collections::BTreeSet;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coeffs::CoefficientVector;
use crate::diagnostics::support;
use crate::error::{Error, Result};

/// Reported in place of `+∞` when the estimate reproduces the truth exactly.
pub const SNR_CAP_DB: f64 = 300.0;

/// `‖α_est − α_true‖ / ‖α_true‖` over the flat vectors (shorter one
/// zero-padded).
pub fn rel_err(est: &CoefficientVector, truth: &CoefficientVector) -> Result<f64> {
    let tn = truth.norm();
    if tn == 0.0 {
        return Err(Error::InvalidConfig("relative error undefined for a zero truth".into()));
    }
    let n = est.len().max(truth.len());
    let zero = Complex64::new(0.0, 0.0);
    let diff: f64 = (0..n)
        .map(|i| {
            let a = est.as_slice().get(i).copied().unwrap_or(zero);
            let b = truth.as_slice().get(i).copied().unwrap_or(zero);
            (a - b).norm_sqr()
        })
        .sum();
    Ok(diff.sqrt() / tn)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Snr {
    pub db: f64,
    /// The estimate matched exactly and `db` holds [`SNR_CAP_DB`].
    pub capped: bool,
}

/// `20 log₁₀(‖x_true‖ / ‖x_true − x_est‖)` over node samples.
pub fn snr_db(truth: &[Complex64], est: &[Complex64]) -> Result<Snr> {
    if truth.len() != est.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            actual: est.len(),
        });
    }
    let signal: f64 = truth.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if signal == 0.0 {
        return Err(Error::InvalidConfig("SNR undefined for a zero true field".into()));
    }
    let err: f64 = truth
        .iter()
        .zip(est)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    if err == 0.0 {
        return Ok(Snr {
            db: SNR_CAP_DB,
            capped: true,
        });
    }
    let db = 20.0 * (signal / err).log10();
    Ok(Snr {
        db: db.min(SNR_CAP_DB),
        capped: db >= SNR_CAP_DB,
    })
}

/// `(nnz, false)`: common nonzero groups and spurious ones.
pub fn support_metrics(est: &CoefficientVector, truth: &CoefficientVector, threshold: f64) -> (usize, usize) {
    let s_est = support(est, threshold);
    let s_true = support(truth, 0.0);
    let nnz = s_est.intersection(&s_true).count();
    (nnz, s_est.len() - nnz)
}

/// `|x_true − x_est|` per node.
pub fn pointwise_error(truth: &[Complex64], est: &[Complex64]) -> Vec<f64> {
    truth.iter().zip(est).map(|(a, b)| (a - b).norm()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub relerr: f64,
    pub snr_db: f64,
    pub snr_capped: bool,
    /// `‖α*‖_{2,0}`.
    pub support_size: usize,
    pub nnz: usize,
    pub false_positives: usize,
    pub support_true: BTreeSet<usize>,
    pub support_est: BTreeSet<usize>,
}

impl RecoveryReport {
    pub fn build(
        est: &CoefficientVector,
        truth: &CoefficientVector,
        field_true: &[Complex64],
        field_est: &[Complex64],
        threshold: f64,
    ) -> Result<Self> {
        let snr = snr_db(field_true, field_est)?;
        let support_est = support(est, threshold);
        let support_true = support(truth, 0.0);
        let nnz = support_est.intersection(&support_true).count();
        Ok(Self {
            relerr: rel_err(est, truth)?,
            snr_db: snr.db,
            snr_capped: snr.capped,
            support_size: support_est.len(),
            nnz,
            false_positives: support_est.len() - nnz,
            support_true,
            support_est,
        })
    }

    pub fn table_header() -> &'static str {
        "RelErr\t‖α*‖_{2,0}\tnnz\tfalse\tSNR"
    }

    pub fn table_row(&self) -> String {
        format!(
            "{:.3e}\t{}\t{}\t{}\t{:.2}{}",
            self.relerr,
            self.support_size,
            self.nnz,
            self.false_positives,
            self.snr_db,
            if self.snr_capped { " (capped)" } else { "" }
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonics::BandLimit;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn sparse(groups: &[usize]) -> CoefficientVector {
        let mut a = CoefficientVector::zeros(BandLimit::new(8));
        for &l in groups {
            a.group_mut(l)[0] = Complex64::new(1.0, 0.5);
        }
        a
    }

    #[test]
    fn rel_err_examples() {
        let t = sparse(&[1, 3]);
        assert_eq!(rel_err(&t, &t).unwrap(), 0.0);
        assert!((rel_err(&CoefficientVector::zeros(t.band_limit()), &t).unwrap() - 1.0).abs() < 1e-15);
        assert!((rel_err(&t.scaled(1.1), &t).unwrap() - 0.1).abs() < 1e-12);
        assert!(rel_err(&t, &CoefficientVector::zeros(t.band_limit())).is_err());
    }

    #[test]
    fn snr_examples() {
        let truth = vec![c(10.0), c(0.0)];
        let s = snr_db(&truth, &[c(9.0), c(0.0)]).unwrap();
        assert!((s.db - 20.0).abs() < 1e-12);
        let s = snr_db(&truth, &[c(0.0), c(0.0)]).unwrap();
        assert!(s.db.abs() < 1e-12);
        let s = snr_db(&truth, &[c(10.0 - 10f64.powf(-2.5)), c(0.0)]).unwrap();
        assert!((s.db - 70.0).abs() < 1e-6);
        let s = snr_db(&truth, &truth).unwrap();
        assert!(s.capped && s.db == SNR_CAP_DB);
    }

    #[test]
    fn support_metric_examples() {
        let t = sparse(&[1, 3, 5]);
        assert_eq!(support_metrics(&t, &t, 0.0), (3, 0));
        assert_eq!(support_metrics(&sparse(&[1, 3, 5, 7]), &t, 0.0), (3, 1));
        assert_eq!(support_metrics(&sparse(&[0, 2]), &t, 0.0), (0, 2));
    }

    #[test]
    fn pointwise_error_examples() {
        let a = vec![c(1.0), c(-2.0)];
        assert_eq!(pointwise_error(&a, &a), vec![0.0, 0.0]);
        let shifted: Vec<_> = a.iter().map(|z| z + 0.25).collect();
        assert_eq!(pointwise_error(&a, &shifted), vec![0.25, 0.25]);
    }
}
