//! Orthonormal complex spherical harmonics and band-limited transforms.
//!
//! Convention: `Y_{l,m}(θ, φ) = P̄_l^m(cos θ) e^{imφ}` with `P̄` fully
//! normalized (Condon–Shortley phase included) so that
//! `∫ Y_{l,m} conj(Y_{l',m'}) dσ = δ_{ll'} δ_{mm'}` for the surface measure
//! with `σ(S²) = 4π`. Negative orders follow
//! `Y_{l,-m} = (-1)^m conj(Y_{l,m})`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::coeffs::CoefficientVector;
use crate::error::{Error, Result};
use crate::grid::SphereGrid;

/// Degree/order pair `(l, m)` with `|m| ≤ l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HarmonicIndex {
    l: usize,
    m: i64,
}

impl HarmonicIndex {
    /// Panics if `|m| > l`; use [`HarmonicIndex::try_new`] for untrusted input.
    pub fn new(l: usize, m: i64) -> Self {
        Self::try_new(l, m).expect("|m| must not exceed l")
    }

    pub fn try_new(l: usize, m: i64) -> Result<Self> {
        if m.unsigned_abs() as usize > l {
            return Err(Error::InvalidIndex { l, m });
        }
        Ok(Self { l, m })
    }

    pub fn l(self) -> usize {
        self.l
    }

    pub fn m(self) -> i64 {
        self.m
    }

    /// Zero-based flat position `l² + l + m`; the one-based matrix index is
    /// this plus one.
    pub fn flat(self) -> usize {
        ((self.l * self.l + self.l) as i64 + self.m) as usize
    }

    pub fn from_flat(k: usize) -> Self {
        let l = (k as f64).sqrt() as usize;
        // guard against rounding in the square root
        let l = if (l + 1) * (l + 1) <= k {
            l + 1
        } else if l * l > k {
            l - 1
        } else {
            l
        };
        let m = k as i64 - (l * l + l) as i64;
        Self { l, m }
    }
}

/// Maximum retained degree `L`; coefficient dimension `(L+1)²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BandLimit(usize);

impl BandLimit {
    pub fn new(degree: usize) -> Self {
        Self(degree)
    }

    pub fn degree(self) -> usize {
        self.0
    }

    pub fn dim(self) -> usize {
        (self.0 + 1) * (self.0 + 1)
    }
}

/// Fully normalized associated Legendre values `P̄_l^m(x)`, `0 ≤ m ≤ l ≤ L`.
#[derive(Debug, Clone)]
pub struct LegendreTable {
    degree: usize,
    values: Vec<f64>,
}

impl LegendreTable {
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// `P̄_l^m` for `0 ≤ m ≤ l`.
    #[inline]
    pub fn get(&self, l: usize, m: usize) -> f64 {
        self.values[l * (l + 1) / 2 + m]
    }

    /// Signed value for any order, consistent with `Y_{l,-m} = (-1)^m conj(Y_{l,m})`.
    #[inline]
    pub fn signed(&self, l: usize, m: i64) -> f64 {
        let v = self.get(l, m.unsigned_abs() as usize);
        if m < 0 && m % 2 != 0 {
            -v
        } else {
            v
        }
    }
}

/// Normalized associated Legendre table at `x = cos θ`.
pub fn normalized_assoc_legendre(band_limit: usize, x: f64) -> Result<LegendreTable> {
    if !(-1.0..=1.0).contains(&x) || x.is_nan() {
        return Err(Error::Domain { value: x });
    }
    let s = ((1.0 - x) * (1.0 + x)).sqrt();
    Ok(legendre_table(band_limit, x, s))
}

/// Recurrence with `x = cos θ` and `s = sin θ` supplied separately so that
/// callers holding θ avoid cancellation in `sqrt(1 - x²)` near the poles.
pub(crate) fn legendre_table(degree: usize, x: f64, s: f64) -> LegendreTable {
    let n = (degree + 1) * (degree + 2) / 2;
    let mut values = vec![0.0; n];
    let idx = |l: usize, m: usize| l * (l + 1) / 2 + m;

    let mut pmm = 1.0 / (4.0 * PI).sqrt();
    for m in 0..=degree {
        if m > 0 {
            let mf = m as f64;
            pmm *= -((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s;
        }
        values[idx(m, m)] = pmm;
        if m == degree {
            break;
        }
        let mf = m as f64;
        let mut p_prev = pmm;
        let mut p_cur = (2.0 * mf + 3.0).sqrt() * x * pmm;
        values[idx(m + 1, m)] = p_cur;
        for l in (m + 2)..=degree {
            let lf = l as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            let p_next = a * (x * p_cur - b * p_prev);
            values[idx(l, m)] = p_next;
            p_prev = p_cur;
            p_cur = p_next;
        }
    }
    LegendreTable { degree, values }
}

/// `Y_{l,m}(θ, φ)`.
pub fn eval_ylm(index: HarmonicIndex, colatitude: f64, longitude: f64) -> Result<Complex64> {
    if !(0.0..=PI).contains(&colatitude) {
        return Err(Error::InvalidConfig(format!("colatitude {colatitude} outside [0, π]")));
    }
    if !longitude.is_finite() {
        return Err(Error::InvalidConfig(format!("longitude {longitude} is not finite")));
    }
    let table = legendre_table(index.l(), colatitude.cos(), colatitude.sin());
    let p = table.signed(index.l(), index.m());
    Ok(Complex64::from_polar(p, index.m() as f64 * longitude))
}

/// Gauss–Legendre nodes (ascending, in `(-1, 1)`) and weights on `[-1, 1]`.
pub fn gauss_legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess for the i-th largest root
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() <= 1e-16 * z.abs().max(1.0) {
                let (_, d) = legendre_and_derivative(n, z);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Evaluate the truncated expansion `Σ α_{l,m} Y_{l,m}` at every grid node.
///
/// Output is ring-major: node `i·n_φ + k` sits at `(θ_i, φ_k)`.
pub fn synthesize(coeffs: &CoefficientVector, grid: &SphereGrid) -> Result<Vec<Complex64>> {
    if coeffs.degree() > grid.supported_band_limit() {
        return Err(Error::BandLimitMismatch {
            requested: coeffs.degree(),
            supported: grid.supported_band_limit(),
        });
    }
    Ok(synthesize_rings(coeffs, grid.colatitudes(), grid.longitudes()))
}

/// Synthesis on an arbitrary tensor set of colatitudes × longitudes, with no
/// quadrature requirement (used for rendering).
pub fn synthesize_rings(coeffs: &CoefficientVector, colatitudes: &[f64], longitudes: &[f64]) -> Vec<Complex64> {
    let degree = coeffs.degree();
    let phases = phase_table(degree, longitudes, 1.0);
    let n_phi = longitudes.len();
    let width = 2 * degree + 1;
    let data = coeffs.as_slice();

    let rings: Vec<Vec<Complex64>> = colatitudes
        .par_iter()
        .map(|&theta| {
            let table = legendre_table(degree, theta.cos(), theta.sin());
            // Fourier coefficients F_m of the ring, m = -L..L at offset m + L
            let mut fm = vec![Complex64::new(0.0, 0.0); width];
            for l in 0..=degree {
                let base = l * l + l;
                for m in -(l as i64)..=(l as i64) {
                    let c = data[(base as i64 + m) as usize];
                    fm[(m + degree as i64) as usize] += c * table.signed(l, m);
                }
            }
            (0..n_phi)
                .map(|k| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (mi, f) in fm.iter().enumerate() {
                        acc += f * phases[mi * n_phi + k];
                    }
                    acc
                })
                .collect()
        })
        .collect();
    rings.into_iter().flatten().collect()
}

/// `α_{l,m} = Σ_j w_j f(x_j) conj(Y_{l,m}(x_j))` up to degree `band_limit`.
pub fn analyze(field: &[Complex64], grid: &SphereGrid, band_limit: BandLimit) -> Result<CoefficientVector> {
    let degree = band_limit.degree();
    if degree > grid.supported_band_limit() {
        return Err(Error::BandLimitMismatch {
            requested: degree,
            supported: grid.supported_band_limit(),
        });
    }
    if field.len() != grid.node_count() {
        return Err(Error::DimensionMismatch {
            expected: grid.node_count(),
            actual: field.len(),
        });
    }
    let n_phi = grid.longitudes().len();
    let phases = phase_table(degree, grid.longitudes(), -1.0);
    let width = 2 * degree + 1;
    let lon_weight = grid.longitude_weight();

    let partials: Vec<Vec<Complex64>> = (0..grid.colatitudes().len())
        .into_par_iter()
        .map(|i| {
            let ring = &field[i * n_phi..(i + 1) * n_phi];
            let mut gm = vec![Complex64::new(0.0, 0.0); width];
            for (mi, g) in gm.iter_mut().enumerate() {
                let row = &phases[mi * n_phi..(mi + 1) * n_phi];
                let mut acc = Complex64::new(0.0, 0.0);
                for (f, e) in ring.iter().zip(row) {
                    acc += f * e;
                }
                *g = acc * lon_weight;
            }
            let theta = grid.colatitudes()[i];
            let table = legendre_table(degree, theta.cos(), theta.sin());
            let w = grid.ring_weights()[i];
            let mut out = vec![Complex64::new(0.0, 0.0); band_limit.dim()];
            for l in 0..=degree {
                let base = l * l + l;
                for m in -(l as i64)..=(l as i64) {
                    out[(base as i64 + m) as usize] = gm[(m + degree as i64) as usize] * (w * table.signed(l, m));
                }
            }
            out
        })
        .collect();

    let mut acc = vec![Complex64::new(0.0, 0.0); band_limit.dim()];
    for part in &partials {
        for (a, p) in acc.iter_mut().zip(part) {
            *a += p;
        }
    }
    CoefficientVector::from_vec(band_limit, acc)
}

/// `e^{sign·i·m·φ_k}` for `m = -L..L` (row `m + L`), row-major over longitudes.
fn phase_table(degree: usize, longitudes: &[f64], sign: f64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity((2 * degree + 1) * longitudes.len());
    for m in -(degree as i64)..=(degree as i64) {
        for &phi in longitudes {
            out.push(Complex64::from_polar(1.0, sign * m as f64 * phi));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_index_roundtrip() {
        let mut k = 0;
        for l in 0..20usize {
            for m in -(l as i64)..=(l as i64) {
                let idx = HarmonicIndex::new(l, m);
                assert_eq!(idx.flat(), k);
                assert_eq!(HarmonicIndex::from_flat(k), idx);
                k += 1;
            }
        }
    }

    #[test]
    fn invalid_order_rejected() {
        assert!(HarmonicIndex::try_new(2, 3).is_err());
        assert!(HarmonicIndex::try_new(2, -3).is_err());
    }

    #[test]
    fn legendre_constant_mode() {
        let t = normalized_assoc_legendre(0, 0.3).unwrap();
        assert!((t.get(0, 0) - 0.282_094_791_773_878_1).abs() < 1e-15);
    }

    #[test]
    fn legendre_degree_one() {
        let t = normalized_assoc_legendre(1, 1.0).unwrap();
        assert!((t.get(1, 0) - (3.0 / (4.0 * PI)).sqrt()).abs() < 1e-15);
        assert!((t.get(1, 0) - 0.488_602_511_902_919_9).abs() < 1e-12);
        let t = normalized_assoc_legendre(1, 0.0).unwrap();
        assert_eq!(t.get(1, 0), 0.0);
    }

    #[test]
    fn legendre_rejects_out_of_domain() {
        assert!(matches!(normalized_assoc_legendre(3, 1.5), Err(Error::Domain { .. })));
        assert!(normalized_assoc_legendre(3, f64::NAN).is_err());
    }

    #[test]
    fn legendre_matches_closed_forms() {
        let x: f64 = 0.37;
        let s = (1.0 - x * x).sqrt();
        let t = normalized_assoc_legendre(2, x).unwrap();
        let p20 = (5.0 / (16.0 * PI)).sqrt() * (3.0 * x * x - 1.0);
        let p21 = -(15.0 / (8.0 * PI)).sqrt() * x * s;
        let p22 = (15.0 / (32.0 * PI)).sqrt() * s * s;
        assert!((t.get(2, 0) - p20).abs() < 1e-14);
        assert!((t.get(2, 1) - p21).abs() < 1e-14);
        assert!((t.get(2, 2) - p22).abs() < 1e-14);
    }

    #[test]
    fn ylm_examples() {
        let y00 = eval_ylm(HarmonicIndex::new(0, 0), 1.3, 4.0).unwrap();
        assert!((y00.re - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-15);
        assert_eq!(y00.im, 0.0);
        let y10 = eval_ylm(HarmonicIndex::new(1, 0), PI / 2.0, 0.5).unwrap();
        assert!(y10.norm() < 1e-16);
    }

    #[test]
    fn ylm_conjugate_symmetry() {
        for l in 0..12usize {
            for m in 0..=(l as i64) {
                for &(th, ph) in &[(0.1, 0.2), (1.3, 5.9), (2.9, 3.3)] {
                    let a = eval_ylm(HarmonicIndex::new(l, m), th, ph).unwrap();
                    let b = eval_ylm(HarmonicIndex::new(l, -m), th, ph).unwrap();
                    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                    assert!((a.conj() - b * sign).norm() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn gauss_legendre_small_rules() {
        let (x, w) = gauss_legendre_rule(1);
        assert_eq!(x, vec![0.0]);
        assert!((w[0] - 2.0).abs() < 1e-15);
        let (x, w) = gauss_legendre_rule(2);
        let r = 1.0 / 3f64.sqrt();
        assert!((x[0] + r).abs() < 1e-15 && (x[1] - r).abs() < 1e-15);
        assert!((w[0] - 1.0).abs() < 1e-14 && (w[1] - 1.0).abs() < 1e-14);
        // exact for x² and x³
        let i2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
        let i3: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x * x).sum();
        assert!((i2 - 2.0 / 3.0).abs() < 1e-15);
        assert!(i3.abs() < 1e-15);
    }

    #[test]
    fn gauss_legendre_polynomial_exactness() {
        let (x, w) = gauss_legendre_rule(16);
        let i10: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((i10 - 2.0 / 11.0).abs() < 1e-14);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
        for n in 1..40 {
            let (x, w) = gauss_legendre_rule(n);
            for deg in 0..(2 * n) {
                let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((approx - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }
}
