//! Degree-grouped complex harmonic coefficients.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::harmonics::{BandLimit, HarmonicIndex};

/// Complex spherical-harmonic coefficients up to degree `L`, stored flat in
/// `(l, m)` order: `(0,0), (1,-1), (1,0), (1,1), (2,-2), ...`.
///
/// Group `l` (all orders of degree `l`) is the contiguous slice
/// `l² .. (l+1)²` of length `2l + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    band_limit: BandLimit,
    data: Vec<Complex64>,
}

impl CoefficientVector {
    pub fn zeros(band_limit: BandLimit) -> Self {
        Self {
            band_limit,
            data: vec![Complex64::new(0.0, 0.0); band_limit.dim()],
        }
    }

    pub fn from_vec(band_limit: BandLimit, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != band_limit.dim() {
            return Err(Error::DimensionMismatch {
                expected: band_limit.dim(),
                actual: data.len(),
            });
        }
        Ok(Self { band_limit, data })
    }

    pub fn band_limit(&self) -> BandLimit {
        self.band_limit
    }

    pub fn degree(&self) -> usize {
        self.band_limit.degree()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn get(&self, index: HarmonicIndex) -> Complex64 {
        self.data[index.flat()]
    }

    pub fn set(&mut self, index: HarmonicIndex, value: Complex64) {
        self.data[index.flat()] = value;
    }

    pub fn group(&self, l: usize) -> &[Complex64] {
        &self.data[group_range(l)]
    }

    pub fn group_mut(&mut self, l: usize) -> &mut [Complex64] {
        &mut self.data[group_range(l)]
    }

    pub fn groups(&self) -> impl Iterator<Item = &[Complex64]> {
        (0..=self.degree()).map(move |l| self.group(l))
    }

    /// Euclidean norm of each degree group, `‖α_{l·}‖`.
    pub fn group_norms(&self) -> Vec<f64> {
        self.groups().map(norm).collect()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn norm_inf(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            band_limit: self.band_limit,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    /// Copy into a (possibly different) band limit, zero-padding or truncating.
    pub fn resized(&self, band_limit: BandLimit) -> Self {
        let mut out = Self::zeros(band_limit);
        let n = out.len().min(self.len());
        out.data[..n].copy_from_slice(&self.data[..n]);
        out
    }

    /// Whether `α_{l,-m} = (-1)^m conj(α_{l,m})` holds to `tol`, i.e. the
    /// synthesized field is real.
    pub fn is_conjugate_symmetric(&self, tol: f64) -> bool {
        for l in 0..=self.degree() {
            for m in 0..=l as i64 {
                let pos = self.get(HarmonicIndex::new(l, m));
                let neg = self.get(HarmonicIndex::new(l, -m));
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                if (neg - pos.conj() * sign).norm() > tol {
                    return false;
                }
            }
        }
        true
    }
}

pub(crate) fn group_range(l: usize) -> std::ops::Range<usize> {
    l * l..(l + 1) * (l + 1)
}

pub(crate) fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    // a^H b
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}
