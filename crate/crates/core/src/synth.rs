//! Synthetic group-sparse truths, noise realizations and observations.

use std::collections::BTreeSet;

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::coeffs::CoefficientVector;
use crate::error::{Error, Result};
use crate::grid::{Mask, SphereGrid};
use crate::harmonics::{synthesize, BandLimit, HarmonicIndex};

// independent ChaCha streams per stochastic component
const COEFF_STREAM: u64 = 1;
const SUPPORT_STREAM: u64 = 2;
const NOISE_STREAM: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportSpec {
    /// Explicit nonzero degrees.
    Degrees(Vec<usize>),
    /// Draw this many distinct degrees from `0..=L`.
    Count(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub band_limit: usize,
    pub support: SupportSpec,
    /// Per-degree scale (length `L + 1`) applied before normalization; flat
    /// when absent.
    #[serde(default)]
    pub magnitude_profile: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
    /// Per-node noise standard deviation `δ`.
    #[serde(default)]
    pub delta: f64,
    /// When set, `δ` is chosen so that `‖Δ‖ / ‖T_true‖` equals this ratio
    /// (norms by quadrature); overrides `delta`.
    #[serde(default)]
    pub noise_ratio: Option<f64>,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if let SupportSpec::Degrees(d) = &self.support {
            if let Some(&bad) = d.iter().find(|&&l| l > self.band_limit) {
                return Err(Error::InvalidConfig(format!(
                    "support degree {bad} exceeds band limit {}",
                    self.band_limit
                )));
            }
        }
        if let SupportSpec::Count(n) = self.support {
            if n > self.band_limit + 1 {
                return Err(Error::InvalidConfig(format!(
                    "cannot choose {n} distinct degrees from 0..={}",
                    self.band_limit
                )));
            }
        }
        if let Some(profile) = &self.magnitude_profile {
            if profile.len() != self.band_limit + 1 {
                return Err(Error::InvalidConfig(format!(
                    "magnitude profile has {} entries, expected {}",
                    profile.len(),
                    self.band_limit + 1
                )));
            }
        }
        if !(self.delta >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "noise scale delta = {} must be >= 0",
                self.delta
            )));
        }
        if let Some(r) = self.noise_ratio {
            if !(r >= 0.0) {
                return Err(Error::InvalidConfig(format!("noise ratio {r} must be >= 0")));
            }
        }
        Ok(())
    }

    /// The planted support.
    pub fn resolve_support(&self) -> Result<BTreeSet<usize>> {
        self.validate()?;
        let set: BTreeSet<usize> = match &self.support {
            SupportSpec::Degrees(d) => d.iter().copied().collect(),
            SupportSpec::Count(n) => {
                let mut rng = rng(self.seed, SUPPORT_STREAM);
                sample(&mut rng, self.band_limit + 1, *n).into_iter().collect()
            }
        };
        if set.is_empty() {
            return Err(Error::InvalidConfig("support is empty".into()));
        }
        if let Some(profile) = &self.magnitude_profile {
            if let Some(&l) = set.iter().find(|&&l| !(profile[l] > 0.0)) {
                return Err(Error::InvalidConfig(format!(
                    "magnitude profile must be positive on degree {l}"
                )));
            }
        }
        Ok(set)
    }
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Unit-norm group-sparse coefficients with `α_{l,-m} = (-1)^m conj(α_{l,m})`,
/// so the synthesized field is real.
pub fn gen_true_coeffs(spec: &SynthSpec) -> Result<CoefficientVector> {
    let support = spec.resolve_support()?;
    let band = BandLimit::new(spec.band_limit);
    let mut alpha = CoefficientVector::zeros(band);
    let mut rng = rng(spec.seed, COEFF_STREAM);
    let half = std::f64::consts::FRAC_1_SQRT_2;
    for &l in &support {
        let scale = spec.magnitude_profile.as_ref().map_or(1.0, |p| p[l]);
        let re: f64 = rng.sample(StandardNormal);
        alpha.set(HarmonicIndex::new(l, 0), Complex64::new(re * scale, 0.0));
        for m in 1..=l as i64 {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let v = Complex64::new(re, im) * (half * scale);
            alpha.set(HarmonicIndex::new(l, m), v);
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            alpha.set(HarmonicIndex::new(l, -m), v.conj() * sign);
        }
    }
    let n = alpha.norm();
    Ok(alpha.scaled(1.0 / n))
}

/// `δ · N(0, 1)` at every grid node.
pub fn gen_noise(grid: &SphereGrid, delta: f64, seed: u64) -> Vec<f64> {
    let mut rng = rng(seed, NOISE_STREAM);
    (0..grid.node_count())
        .map(|_| delta * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// `‖Δ‖²_{L₂}` by quadrature; the default `ϱ`.
pub fn noise_energy(noise: &[f64], grid: &SphereGrid) -> f64 {
    grid.integrate(noise.iter().map(|v| v * v))
}

/// `T° = 1_Γ · T_true + Δ` at every node.
pub fn observe(truth: &CoefficientVector, mask: &Mask, noise: &[f64], grid: &SphereGrid) -> Result<Vec<Complex64>> {
    if noise.len() != grid.node_count() {
        return Err(Error::DimensionMismatch {
            expected: grid.node_count(),
            actual: noise.len(),
        });
    }
    let field = synthesize(truth, grid)?;
    Ok(field
        .iter()
        .zip(mask.indicator())
        .zip(noise)
        .map(|((t, &inside), n)| if inside { t + n } else { Complex64::new(*n, 0.0) })
        .collect())
}

/// Everything generated for one synthetic experiment.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub truth: CoefficientVector,
    pub support: BTreeSet<usize>,
    pub truth_field: Vec<Complex64>,
    pub noise: Vec<f64>,
    pub delta: f64,
    pub observed: Vec<Complex64>,
}

impl SyntheticData {
    pub fn noise_energy(&self, grid: &SphereGrid) -> f64 {
        noise_energy(&self.noise, grid)
    }
}

/// Truth, noise (scaled per `spec`) and observation on `grid`.
pub fn generate(spec: &SynthSpec, grid: &SphereGrid, mask: &Mask) -> Result<SyntheticData> {
    let truth = gen_true_coeffs(spec)?;
    let support = spec.resolve_support()?;
    let truth_field = synthesize(&truth, grid)?;
    let delta = match spec.noise_ratio {
        Some(ratio) => {
            let unit = gen_noise(grid, 1.0, spec.seed);
            let signal = grid.integrate(truth_field.iter().map(|z| z.norm_sqr())).sqrt();
            let unit_norm = noise_energy(&unit, grid).sqrt();
            if unit_norm == 0.0 {
                0.0
            } else {
                ratio * signal / unit_norm
            }
        }
        None => spec.delta,
    };
    let noise = gen_noise(grid, delta, spec.seed);
    let observed = observe(&truth, mask, &noise, grid)?;
    Ok(SyntheticData {
        truth,
        support,
        truth_field,
        noise,
        delta,
        observed,
    })
}
