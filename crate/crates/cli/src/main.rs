//! `sphinpaint`: reproducible inpainting experiments from a JSON config.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;

use sphinpaint::diagnostics::{default_threshold, kkt_report, KktReport};
use sphinpaint::grid::{complement_area, region_area};
use sphinpaint::harmonics::synthesize;
use sphinpaint::io::{read_coefficients_csv, write_coefficients_csv, write_json, write_trace_jsonl};
use sphinpaint::metrics::RecoveryReport;
use sphinpaint::render::{render_coefficients, render_grid_values, save_map, Component};
use sphinpaint::synth::{generate, SyntheticData};
use sphinpaint::{
    build_grid, build_mask, build_model, penalty_solve, DiscreteModel, Mask, MaskSpec, NpgConfig, PenaltyConfig,
    SolveResult, SolveStatus, SphereGrid,
};

use config::{ExperimentConfig, RhoPolicy};

/// Feasibility required for a successful exit.
const FEASIBILITY_TOL: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] sphinpaint::Error),
    #[error("solver flagged: {0}")]
    Flagged(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use sphinpaint::Error as E;
        match self {
            CliError::Flagged(_) => 2,
            CliError::Config(_) => 3,
            CliError::Io { .. } => 4,
            CliError::Core(e) => match e {
                E::Io { .. } | E::Image { .. } | E::Parse { .. } => 4,
                E::NotPositiveDefinite { .. } => 2,
                _ => 3,
            },
        }
    }
}

#[derive(Parser)]
#[command(
    name = "sphinpaint",
    version,
    about = "Group-sparse inpainting of band-limited fields on the sphere"
)]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the true coefficients and render the true field.
    Synth,
    /// Describe and render the observation mask.
    Mask,
    /// Generate observations and cache the discrete model.
    Discretize,
    /// Solve the inpainting problem.
    Inpaint {
        /// Cached model from `discretize`; built from the config otherwise.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Compare recovered coefficients with the truth.
    Report {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        estimate: PathBuf,
    },
    /// Render a coefficient file as an equirectangular PNG.
    Render {
        #[arg(long)]
        coefficients: PathBuf,
        #[arg(long, default_value_t = 256)]
        height: u32,
        #[arg(long, value_enum, default_value_t = ComponentArg::Real)]
        component: ComponentArg,
        /// Image path (default: `<out>/map.png`).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Scaled KKT residuals of a coefficient file against a cached model.
    KktCheck {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        coefficients: PathBuf,
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ComponentArg {
    Real,
    Imaginary,
    Modulus,
}

impl From<ComponentArg> for Component {
    fn from(c: ComponentArg) -> Self {
        match c {
            ComponentArg::Real => Component::Real,
            ComponentArg::Imaginary => Component::Imaginary,
            ComponentArg::Modulus => Component::Modulus,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let config = |required: bool| -> Result<Option<ExperimentConfig>, CliError> {
        match &cli.config {
            Some(path) => Ok(Some(ExperimentConfig::load(path)?.resolve(cli.seed, cli.out.clone())?)),
            None if required => Err(CliError::Config("this command needs --config".into())),
            None => Ok(None),
        }
    };
    let out_dir = |cfg: Option<&ExperimentConfig>| -> PathBuf {
        cli.out
            .clone()
            .or_else(|| cfg.map(|c| c.output_dir.clone()))
            .unwrap_or_else(|| PathBuf::from("."))
    };

    match &cli.command {
        Command::Synth => {
            let cfg = config(true)?.unwrap();
            let out = prepare(&out_dir(Some(&cfg)))?;
            cmd_synth(&cfg, &out)
        }
        Command::Mask => {
            let cfg = config(true)?.unwrap();
            let out = prepare(&out_dir(Some(&cfg)))?;
            cmd_mask(&cfg, &out)
        }
        Command::Discretize => {
            let cfg = config(true)?.unwrap();
            let out = prepare(&out_dir(Some(&cfg)))?;
            cmd_discretize(&cfg, &out)
        }
        Command::Inpaint { model } => {
            let cfg = config(model.is_none())?;
            let out = prepare(&out_dir(cfg.as_ref()))?;
            cmd_inpaint(cfg.as_ref(), model.as_deref(), &out)
        }
        Command::Report { truth, estimate } => {
            let out = prepare(&out_dir(config(false)?.as_ref()))?;
            cmd_report(truth, estimate, &out)
        }
        Command::Render {
            coefficients,
            height,
            component,
            output,
        } => {
            let path = match output {
                Some(p) => p.clone(),
                None => prepare(&out_dir(config(false)?.as_ref()))?.join("map.png"),
            };
            let coeffs = read_coefficients_csv(coefficients)?;
            save_map(&render_coefficients(&coeffs, *height, (*component).into())?, &path)?;
            log::info!("wrote {}", path.display());
            Ok(())
        }
        Command::KktCheck {
            model,
            coefficients,
            tol,
        } => {
            let out = prepare(&out_dir(config(false)?.as_ref()))?;
            cmd_kkt_check(model, coefficients, *tol, &out)
        }
    }
}

fn prepare(dir: &Path) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    Ok(dir.to_path_buf())
}

struct Experiment {
    grid: SphereGrid,
    mask: Mask,
    data: SyntheticData,
}

fn experiment(cfg: &ExperimentConfig) -> Result<Experiment, CliError> {
    let grid = build_grid(cfg.grid_degree());
    let mask = build_mask(&cfg.mask, &grid)?;
    let data = generate(&cfg.synth, &grid, &mask)?;
    Ok(Experiment { grid, mask, data })
}

fn model_for(cfg: &ExperimentConfig, exp: &Experiment) -> Result<DiscreteModel, CliError> {
    let rho = match cfg.rho {
        RhoPolicy::NoiseEnergy => exp.data.noise_energy(&exp.grid),
        RhoPolicy::Explicit(rho) => rho,
    };
    Ok(build_model(
        &exp.grid,
        &exp.mask,
        &exp.data.observed,
        cfg.solve_band(),
        rho,
        cfg.weights()?,
    )?)
}

fn cmd_synth(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let truth = sphinpaint::synth::gen_true_coeffs(&cfg.synth)?;
    write_coefficients_csv(&out.join("truth.csv"), &truth)?;
    save_map(
        &render_coefficients(&truth, cfg.map_height, Component::Real)?,
        &out.join("truth.png"),
    )?;
    log::info!("wrote truth.csv and truth.png to {}", out.display());
    Ok(())
}

#[derive(Serialize)]
struct MaskSummary<'a> {
    spec: &'a MaskSpec,
    grid_degree: usize,
    node_count: usize,
    observed_nodes: usize,
    observed_area: f64,
    inpainting_area: f64,
}

fn cmd_mask(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let grid = build_grid(cfg.grid_degree());
    let mask = build_mask(&cfg.mask, &grid)?;
    let summary = MaskSummary {
        spec: &cfg.mask,
        grid_degree: cfg.grid_degree(),
        node_count: grid.node_count(),
        observed_nodes: mask.observed_count(),
        observed_area: region_area(&mask, &grid),
        inpainting_area: complement_area(&mask, &grid),
    };
    write_json(&out.join("mask.json"), &summary)?;
    let values: Vec<f64> = mask.indicator().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    save_map(
        &render_grid_values(&values, &grid, cfg.map_height)?,
        &out.join("mask.png"),
    )?;
    log::info!("wrote mask.json and mask.png to {}", out.display());
    Ok(())
}

#[derive(Serialize)]
struct ModelSummary {
    band_limit: usize,
    grid_degree: usize,
    dim: usize,
    c: f64,
    rho: f64,
    p: f64,
    eta: f64,
}

fn cmd_discretize(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let exp = experiment(cfg)?;
    let model = model_for(cfg, &exp)?;
    model.save(&out.join("model.bin"))?;
    write_json(
        &out.join("model.json"),
        &ModelSummary {
            band_limit: cfg.band_limit,
            grid_degree: cfg.grid_degree(),
            dim: model.dim(),
            c: model.c(),
            rho: model.rho(),
            p: model.p(),
            eta: model.weights().eta(),
        },
    )?;
    log::info!("wrote model.bin ({} coefficients) to {}", model.dim(), out.display());
    Ok(())
}

/// Result JSON without the wall-clock time, so reruns are byte-identical.
fn result_json(result: &SolveResult) -> Result<serde_json::Value, CliError> {
    let mut value = serde_json::to_value(result).map_err(sphinpaint::Error::from)?;
    if let Some(obj) = value.as_object_mut() {
        obj.remove("wall_time");
    }
    Ok(value)
}

#[derive(Serialize)]
struct Flag<'a> {
    status: SolveStatus,
    feasibility: f64,
    reason: &'a str,
}

fn cmd_inpaint(cfg: Option<&ExperimentConfig>, model_path: Option<&Path>, out: &Path) -> Result<(), CliError> {
    let model = match (model_path, cfg) {
        (Some(path), _) => DiscreteModel::load(path)?,
        (None, Some(cfg)) => model_for(cfg, &experiment(cfg)?)?,
        (None, None) => unreachable!("config is required without a model"),
    };
    let penalty = cfg.map_or_else(PenaltyConfig::default, |c| c.penalty.clone());
    let npg = cfg.map_or_else(NpgConfig::default, |c| c.npg.clone());
    let start = Instant::now();
    let result = penalty_solve(&model, &penalty, &npg)?;
    log::info!(
        "{:?} after {} outer / {} inner iterations in {:.2} s; (g)+ = {:.3e}, KKT residual = {:.3e}",
        result.status,
        result.outer_iterations,
        result.total_inner_iterations,
        start.elapsed().as_secs_f64(),
        result.feasibility,
        result.kkt.max_residual
    );
    write_coefficients_csv(&out.join("recovered.csv"), &result.alpha)?;
    write_json(&out.join("result.json"), &result_json(&result)?)?;
    write_trace_jsonl(&out.join("trace.jsonl"), &result.trace)?;
    let height = cfg.map_or(256, |c| c.map_height);
    save_map(
        &render_coefficients(&result.alpha, height, Component::Real)?,
        &out.join("recovered.png"),
    )?;

    let reason = if result.status != SolveStatus::Converged {
        Some(match result.status {
            SolveStatus::Infeasible => "infeasible",
            _ => "outer_limit",
        })
    } else if result.feasibility > FEASIBILITY_TOL {
        Some("feasibility")
    } else {
        None
    };
    match reason {
        None => Ok(()),
        Some(reason) => {
            let flag = Flag {
                status: result.status,
                feasibility: result.feasibility,
                reason,
            };
            println!("{}", serde_json::to_string(&flag).map_err(sphinpaint::Error::from)?);
            Err(CliError::Flagged(reason.into()))
        }
    }
}

fn cmd_report(truth_path: &Path, est_path: &Path, out: &Path) -> Result<(), CliError> {
    let truth = read_coefficients_csv(truth_path)?;
    let est = read_coefficients_csv(est_path)?;
    if truth.degree() != est.degree() {
        return Err(CliError::Config(format!(
            "band limits differ: truth has L = {}, estimate has L = {}",
            truth.degree(),
            est.degree()
        )));
    }
    let grid = build_grid(truth.degree());
    let report = RecoveryReport::build(
        &est,
        &truth,
        &synthesize(&truth, &grid)?,
        &synthesize(&est, &grid)?,
        default_threshold(&est),
    )?;
    write_json(&out.join("report.json"), &report)?;
    println!("{}", RecoveryReport::table_header());
    println!("{}", report.table_row());
    Ok(())
}

fn cmd_kkt_check(model_path: &Path, coeff_path: &Path, tol: f64, out: &Path) -> Result<(), CliError> {
    let model = DiscreteModel::load(model_path)?;
    let alpha = read_coefficients_csv(coeff_path)?;
    if alpha.len() != model.dim() {
        return Err(sphinpaint::Error::DimensionMismatch {
            expected: model.dim(),
            actual: alpha.len(),
        }
        .into());
    }
    let report: KktReport = kkt_report(&alpha, &model);
    write_json(&out.join("kkt.json"), &report)?;
    println!("{}", serde_json::to_string(&report).map_err(sphinpaint::Error::from)?);
    if report.max_residual > tol || report.feasibility > FEASIBILITY_TOL {
        return Err(CliError::Flagged(format!(
            "KKT residual {:.3e} (tol {tol:.1e}), feasibility {:.3e}",
            report.max_residual, report.feasibility
        )));
    }
    Ok(())
}
