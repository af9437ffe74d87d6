//! Finite-dimensional constraint data for the truncated inpainting problem.
//!
//! For an observed field `T°` on the grid and observed region `Γ`, the data
//! misfit of a band-limited candidate `α` is
//!
//! ```text
//! ∫_Γ |T_α − T°|² dσ + ∫_{Γᶜ} |T°|² dσ = α^H Ŷ α − 2 Re(α^H α̂°) + c
//! ```
//!
//! with `Ŷ` the Gram matrix of the harmonics over `Γ`, `α̂°` the harmonic
//! moments of `T°` over `Γ`, and `c` the total energy of `T°`.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use crate::coeffs::CoefficientVector;
use crate::error::{Error, Result};
use crate::grid::{Mask, SphereGrid};
use crate::harmonics::{analyze, legendre_table, BandLimit};
use crate::linalg::HermitianMatrix;

/// Per-degree weights `β_0 = 1`, `β_l = η^l l^p` for `l ≥ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeWeights {
    p: f64,
    eta: f64,
    values: Vec<f64>,
}

impl DegreeWeights {
    pub fn new(band_limit: BandLimit, p: f64, eta: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidConfig(format!("exponent p = {p} must lie in (0, 1)")));
        }
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "weight base eta = {eta} must be positive"
            )));
        }
        let values = (0..=band_limit.degree())
            .map(|l| {
                if l == 0 {
                    1.0
                } else {
                    eta.powi(l as i32) * (l as f64).powf(p)
                }
            })
            .collect();
        Ok(Self { p, eta, values })
    }

    /// Weights used in the reported experiments: `η = 1 + 10⁻⁴`.
    pub fn standard(band_limit: BandLimit, p: f64) -> Result<Self> {
        Self::new(band_limit, p, 1.0 + 1e-4)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn beta(&self, l: usize) -> f64 {
        self.values[l]
    }

    pub fn degree(&self) -> usize {
        self.values.len() - 1
    }
}

/// `(Ŷ, α̂°, c, ϱ)` plus the penalty weights: everything the solver needs.
#[derive(Debug, Clone)]
pub struct DiscreteModel {
    gram: HermitianMatrix,
    rhs: Vec<Complex64>,
    c: f64,
    rho: f64,
    weights: DegreeWeights,
}

impl DiscreteModel {
    /// Assemble from explicit parts. Checks shapes and Hermitian symmetry but
    /// not the energy inequalities (see [`build_model`]).
    pub fn from_parts(
        gram: HermitianMatrix,
        rhs: Vec<Complex64>,
        c: f64,
        rho: f64,
        weights: DegreeWeights,
    ) -> Result<Self> {
        let dim = BandLimit::new(weights.degree()).dim();
        if gram.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: gram.dim(),
            });
        }
        if rhs.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: rhs.len(),
            });
        }
        let defect = gram.hermitian_defect();
        if defect > 1e-12 {
            return Err(Error::InvalidModel(format!(
                "Gram matrix not Hermitian (defect {defect:.3e})"
            )));
        }
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::InvalidModel(format!(
                "observed energy c = {c} must be nonnegative"
            )));
        }
        if !rho.is_finite() {
            return Err(Error::InvalidModel(format!("rho = {rho} is not finite")));
        }
        Ok(Self {
            gram,
            rhs,
            c,
            rho,
            weights,
        })
    }

    pub fn gram(&self) -> &HermitianMatrix {
        &self.gram
    }

    pub fn rhs(&self) -> &[Complex64] {
        &self.rhs
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn weights(&self) -> &DegreeWeights {
        &self.weights
    }

    pub fn p(&self) -> f64 {
        self.weights.p()
    }

    pub fn band_limit(&self) -> BandLimit {
        BandLimit::new(self.weights.degree())
    }

    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    /// Write the binary container.
    ///
    /// Layout, all little-endian: `L` as `u64`; `p`, `η`, `ϱ`, `c` as `f64`;
    /// then `Ŷ` row-major as `(re, im)` `f64` pairs; then `α̂°` likewise.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(&(self.weights.degree() as u64).to_le_bytes())?;
        for v in [self.p(), self.weights.eta(), self.rho, self.c] {
            w.write_all(&v.to_le_bytes())?;
        }
        for z in self.gram.as_slice().iter().chain(&self.rhs) {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
        w.flush()
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let wrap = |e: std::io::Error| Error::InvalidModel(format!("truncated model container: {e}"));
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8).map_err(wrap)?;
        let degree = u64::from_le_bytes(b8) as usize;
        let mut read_f64 = |r: &mut R| -> Result<f64> {
            r.read_exact(&mut b8).map_err(wrap)?;
            Ok(f64::from_le_bytes(b8))
        };
        if degree > 4096 {
            return Err(Error::InvalidModel(format!("implausible band limit {degree}")));
        }
        let p = read_f64(&mut r)?;
        let eta = read_f64(&mut r)?;
        let rho = read_f64(&mut r)?;
        let c = read_f64(&mut r)?;
        let band = BandLimit::new(degree);
        let dim = band.dim();
        let mut read_complex = |count: usize| -> Result<Vec<Complex64>> {
            let mut buf = vec![0u8; count * 16];
            r.read_exact(&mut buf).map_err(wrap)?;
            Ok(buf
                .chunks_exact(16)
                .map(|ch| {
                    let re = f64::from_le_bytes(ch[..8].try_into().unwrap());
                    let im = f64::from_le_bytes(ch[8..].try_into().unwrap());
                    Complex64::new(re, im)
                })
                .collect())
        };
        let gram = HermitianMatrix::from_row_major(dim, read_complex(dim * dim)?)?;
        let rhs = read_complex(dim)?;
        let weights = DegreeWeights::new(band, p, eta)?;
        Self::from_parts(gram, rhs, c, rho, weights)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, |w| self.write_binary(w))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_binary(std::io::BufReader::new(file))
    }
}

/// Gram matrix `Ŷ[k, k'] = Σ_{j∈Γ} w_j conj(Y_k(x_j)) Y_{k'}(x_j)`, so that
/// `α^H Ŷ α = Σ_{j∈Γ} w_j |T_α(x_j)|²`.
///
/// Evaluated ring by ring: within a colatitude ring the longitude sum only
/// depends on `m − m'`, so each unordered pair costs one multiply-add per
/// ring instead of one per node.
pub fn assemble_gram(grid: &SphereGrid, mask: &Mask, band_limit: BandLimit) -> Result<HermitianMatrix> {
    let degree = band_limit.degree();
    check_band(grid, band_limit)?;
    check_mask(grid, mask)?;
    let dim = band_limit.dim();
    let n_phi = grid.n_phi();
    let lon_w = grid.longitude_weight();
    let indicator = mask.indicator();

    let orders: Vec<i64> = (0..dim)
        .map(|k| {
            let l = (k as f64).sqrt() as usize;
            let l = if (l + 1) * (l + 1) <= k { l + 1 } else { l };
            k as i64 - (l * l + l) as i64
        })
        .collect();

    struct Ring {
        weight: f64,
        p: Vec<f64>,
        // E(Δ) for Δ = -2L..2L at offset Δ + 2L
        phase_sums: Vec<Complex64>,
    }

    let rings: Vec<Ring> = (0..grid.colatitudes().len())
        .filter_map(|i| {
            let observed: Vec<f64> = (0..n_phi)
                .filter(|&k| indicator[i * n_phi + k])
                .map(|k| grid.longitudes()[k])
                .collect();
            if observed.is_empty() {
                return None;
            }
            let theta = grid.colatitudes()[i];
            let table = legendre_table(degree, theta.cos(), theta.sin());
            let p = (0..=degree)
                .flat_map(|l| (-(l as i64)..=(l as i64)).map(move |m| (l, m)))
                .map(|(l, m)| table.signed(l, m))
                .collect();
            let phase_sums = (-(2 * degree as i64)..=(2 * degree as i64))
                .map(|delta| {
                    observed
                        .iter()
                        .map(|&phi| Complex64::from_polar(1.0, delta as f64 * phi))
                        .sum::<Complex64>()
                        * lon_w
                })
                .collect();
            Some(Ring {
                weight: grid.ring_weights()[i],
                p,
                phase_sums,
            })
        })
        .collect();

    let offset = 2 * degree as i64;
    let upper: Vec<Vec<Complex64>> = (0..dim)
        .into_par_iter()
        .map(|r| {
            let mut acc = vec![Complex64::new(0.0, 0.0); dim - r];
            let mr = orders[r];
            for ring in &rings {
                let pr = ring.p[r] * ring.weight;
                if pr == 0.0 {
                    continue;
                }
                for (c, a) in (r..dim).zip(acc.iter_mut()) {
                    let e = ring.phase_sums[(orders[c] - mr + offset) as usize];
                    *a += e * (pr * ring.p[c]);
                }
            }
            acc
        })
        .collect();

    let mut gram = HermitianMatrix::zeros(dim);
    for (r, row) in upper.into_iter().enumerate() {
        for (offset, v) in row.into_iter().enumerate() {
            let c = r + offset;
            if c == r {
                gram.set(r, r, Complex64::new(v.re, 0.0));
            } else {
                gram.set(r, c, v);
                gram.set(c, r, v.conj());
            }
        }
    }
    Ok(gram)
}

/// `α̂°_k = Σ_{j∈Γ} w_j T°(x_j) conj(Y_k(x_j))`.
pub fn assemble_rhs(
    observed: &[Complex64],
    grid: &SphereGrid,
    mask: &Mask,
    band_limit: BandLimit,
) -> Result<Vec<Complex64>> {
    check_band(grid, band_limit)?;
    check_mask(grid, mask)?;
    check_field(grid, observed)?;
    let restricted: Vec<Complex64> = observed
        .iter()
        .zip(mask.indicator())
        .map(|(v, &inside)| if inside { *v } else { Complex64::new(0.0, 0.0) })
        .collect();
    Ok(analyze(&restricted, grid, band_limit)?.into_vec())
}

/// `c = Σ_j w_j |T°(x_j)|²` over the whole sphere.
pub fn observed_energy(observed: &[Complex64], grid: &SphereGrid) -> f64 {
    grid.integrate(observed.iter().map(|z| z.norm_sqr()))
}

/// `Σ_{j∉Γ} w_j |T°(x_j)|²`, the energy of the data inside the inpainting area.
pub fn masked_energy(observed: &[Complex64], grid: &SphereGrid, mask: &Mask) -> f64 {
    grid.weights()
        .iter()
        .zip(observed)
        .zip(mask.indicator())
        .filter(|(_, &inside)| !inside)
        .map(|((w, z), _)| w * z.norm_sqr())
        .sum()
}

/// Assemble and validate the truncated model.
///
/// Requires `c > ϱ` (otherwise `α = 0` is feasible and the problem is
/// trivial). `ϱ ≤ masked_energy` is only warned about.
pub fn build_model(
    grid: &SphereGrid,
    mask: &Mask,
    observed: &[Complex64],
    band_limit: BandLimit,
    rho: f64,
    weights: DegreeWeights,
) -> Result<DiscreteModel> {
    check_field(grid, observed)?;
    if weights.degree() != band_limit.degree() {
        return Err(Error::BandLimitMismatch {
            requested: band_limit.degree(),
            supported: weights.degree(),
        });
    }
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::InvalidModel(format!("rho = {rho} must be positive")));
    }
    let c = observed_energy(observed, grid);
    if c <= rho {
        return Err(Error::InvalidModel(format!(
            "observed energy c = {c:.6e} does not exceed rho = {rho:.6e}; the zero field would be feasible"
        )));
    }
    let masked = masked_energy(observed, grid, mask);
    if rho <= masked {
        log::warn!("rho = {rho:.6e} does not exceed the energy inside the inpainting area ({masked:.6e})");
    }
    let gram = assemble_gram(grid, mask, band_limit)?;
    let rhs = assemble_rhs(observed, grid, mask, band_limit)?;
    DiscreteModel::from_parts(gram, rhs, c, rho, weights)
}

fn check_band(grid: &SphereGrid, band_limit: BandLimit) -> Result<()> {
    if band_limit.degree() > grid.supported_band_limit() {
        return Err(Error::BandLimitMismatch {
            requested: band_limit.degree(),
            supported: grid.supported_band_limit(),
        });
    }
    Ok(())
}

fn check_mask(grid: &SphereGrid, mask: &Mask) -> Result<()> {
    if mask.indicator().len() != grid.node_count() {
        return Err(Error::DimensionMismatch {
            expected: grid.node_count(),
            actual: mask.indicator().len(),
        });
    }
    Ok(())
}

fn check_field(grid: &SphereGrid, field: &[Complex64]) -> Result<()> {
    if field.len() != grid.node_count() {
        return Err(Error::DimensionMismatch {
            expected: grid.node_count(),
            actual: field.len(),
        });
    }
    Ok(())
}
