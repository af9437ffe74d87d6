//! Reference experiments shared by the acceptance suite.
//!
//! * [`run_recovery`]: planted 7-group truth at `L = 35`, 25° polar cap
//!   removed, 2% noise, default solver settings.
//! * [`truncation_sweep`]: noiseless degree-48 truth observed on a common
//!   grid and solved at several truncation levels.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use sphinpaint::diagnostics::default_threshold;
use sphinpaint::harmonics::synthesize;
use sphinpaint::metrics::RecoveryReport;
use sphinpaint::synth::{generate, SupportSpec, SynthSpec, SyntheticData};
use sphinpaint::{
    build_grid, build_mask, build_model, penalty_solve, BandLimit, CoefficientVector, DegreeWeights, DiscreteModel,
    Mask, MaskSpec, NpgConfig, PenaltyConfig, Result, SolveResult, SphereGrid,
};

pub const RECOVERY_BAND_LIMIT: usize = 35;
pub const RECOVERY_SUPPORT: [usize; 7] = [1, 3, 5, 8, 12, 17, 23];
pub const RECOVERY_NOISE_RATIO: f64 = 0.02;
pub const CAP_RADIUS_DEG: f64 = 25.0;
pub const P: f64 = 0.5;

pub fn cap_mask_spec() -> MaskSpec {
    MaskSpec::north_cap(CAP_RADIUS_DEG * PI / 180.0)
}

pub fn recovery_spec(seed: u64) -> SynthSpec {
    SynthSpec {
        band_limit: RECOVERY_BAND_LIMIT,
        support: SupportSpec::Degrees(RECOVERY_SUPPORT.to_vec()),
        magnitude_profile: None,
        seed,
        delta: 0.0,
        noise_ratio: Some(RECOVERY_NOISE_RATIO),
    }
}

pub struct RecoveryRun {
    pub grid: SphereGrid,
    pub mask: Mask,
    pub data: SyntheticData,
    pub model: DiscreteModel,
    pub result: SolveResult,
    pub report: RecoveryReport,
    /// Model assembly plus solve.
    pub elapsed: Duration,
}

/// `ϱ = ‖Δ‖²` and the default solver settings.
pub fn run_recovery(seed: u64) -> Result<RecoveryRun> {
    let band = BandLimit::new(RECOVERY_BAND_LIMIT);
    let grid = build_grid(RECOVERY_BAND_LIMIT);
    let mask = build_mask(&cap_mask_spec(), &grid)?;
    let data = generate(&recovery_spec(seed), &grid, &mask)?;
    let start = Instant::now();
    let rho = data.noise_energy(&grid);
    let model = build_model(
        &grid,
        &mask,
        &data.observed,
        band,
        rho,
        DegreeWeights::standard(band, P)?,
    )?;
    let result = penalty_solve(&model, &PenaltyConfig::default(), &NpgConfig::default())?;
    let elapsed = start.elapsed();
    let field_est = synthesize(&result.alpha, &grid)?;
    let report = RecoveryReport::build(
        &result.alpha,
        &data.truth,
        &data.truth_field,
        &field_est,
        default_threshold(&result.alpha),
    )?;
    Ok(RecoveryRun {
        grid,
        mask,
        data,
        model,
        result,
        report,
        elapsed,
    })
}

/// `∫_Γ |T_α − T°|²` by quadrature on `grid`.
pub fn observed_misfit(
    alpha: &CoefficientVector,
    grid: &SphereGrid,
    mask: &Mask,
    observed: &[Complex64],
) -> Result<f64> {
    let field = synthesize(alpha, grid)?;
    Ok(grid
        .weights()
        .iter()
        .zip(mask.indicator())
        .zip(field.iter().zip(observed))
        .filter(|((_, &inside), _)| inside)
        .map(|((w, _), (a, b))| w * (a - b).norm_sqr())
        .sum())
}

pub const SWEEP_GRID_BAND_LIMIT: usize = 50;
pub const SWEEP_SUPPORT: [usize; 7] = [3, 12, 25, 33, 38, 43, 48];
pub const SWEEP_RHO: f64 = 1e-4;

pub struct SweepPoint {
    pub band_limit: usize,
    pub misfit: f64,
    pub result: SolveResult,
}

/// Solve the same noiseless observation at each truncation level.
pub fn truncation_sweep(levels: &[usize], seed: u64) -> Result<Vec<SweepPoint>> {
    let grid = build_grid(SWEEP_GRID_BAND_LIMIT);
    let mask = build_mask(&cap_mask_spec(), &grid)?;
    let spec = SynthSpec {
        band_limit: 48,
        support: SupportSpec::Degrees(SWEEP_SUPPORT.to_vec()),
        magnitude_profile: None,
        seed,
        delta: 0.0,
        noise_ratio: None,
    };
    let data = generate(&spec, &grid, &mask)?;
    levels
        .iter()
        .map(|&l| {
            let band = BandLimit::new(l);
            let model = build_model(
                &grid,
                &mask,
                &data.observed,
                band,
                SWEEP_RHO,
                DegreeWeights::standard(band, P)?,
            )?;
            let result = penalty_solve(&model, &PenaltyConfig::default(), &NpgConfig::default())?;
            let misfit = observed_misfit(&result.alpha, &grid, &mask, &data.observed)?;
            Ok(SweepPoint {
                band_limit: l,
                misfit,
                result,
            })
        })
        .collect()
}
