//! Quadrature grids on the sphere and observation masks.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonics::gauss_legendre_rule;

/// Equal-angle-in-longitude, Gauss–Legendre-in-colatitude product grid.
///
/// Nodes are ring-major: node `i·n_φ + k` sits at `(θ_i, φ_k)`, with `θ`
/// ascending from the north pole and `φ_k = 2πk / n_φ`.
#[derive(Debug, Clone)]
pub struct SphereGrid {
    colatitudes: Vec<f64>,
    longitudes: Vec<f64>,
    ring_weights: Vec<f64>,
    weights: Vec<f64>,
    supported_band_limit: usize,
}

/// Extra colatitude rings beyond the `L + 1` needed for exactness.
const RING_MARGIN: usize = 1;

/// Grid whose quadrature integrates spherical polynomials of degree `≤ 2L`
/// exactly.
pub fn build_grid(band_limit: usize) -> SphereGrid {
    let n_theta = band_limit + 1 + RING_MARGIN;
    let n_phi = 2 * band_limit + 2;
    let (x, w) = gauss_legendre_rule(n_theta);
    // nodes come ascending in x = cos θ; reverse so θ ascends
    let colatitudes: Vec<f64> = x.iter().rev().map(|x| x.acos()).collect();
    let ring_weights: Vec<f64> = w.into_iter().rev().collect();
    let longitudes: Vec<f64> = (0..n_phi).map(|k| 2.0 * PI * k as f64 / n_phi as f64).collect();
    let lon_weight = 2.0 * PI / n_phi as f64;
    let weights = ring_weights
        .iter()
        .flat_map(|&rw| std::iter::repeat_n(rw * lon_weight, n_phi))
        .collect();
    SphereGrid {
        colatitudes,
        longitudes,
        ring_weights,
        weights,
        supported_band_limit: band_limit,
    }
}

impl SphereGrid {
    pub fn colatitudes(&self) -> &[f64] {
        &self.colatitudes
    }

    pub fn longitudes(&self) -> &[f64] {
        &self.longitudes
    }

    /// Gauss–Legendre weight of each ring (integrates over `cos θ ∈ [-1, 1]`).
    pub fn ring_weights(&self) -> &[f64] {
        &self.ring_weights
    }

    /// Longitude rule weight `2π / n_φ`.
    pub fn longitude_weight(&self) -> f64 {
        2.0 * PI / self.longitudes.len() as f64
    }

    /// Per-node surface weights; they sum to `4π`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn supported_band_limit(&self) -> usize {
        self.supported_band_limit
    }

    pub fn node_count(&self) -> usize {
        self.weights.len()
    }

    pub fn n_phi(&self) -> usize {
        self.longitudes.len()
    }

    /// `(θ, φ)` of node `j`.
    pub fn node(&self, j: usize) -> (f64, f64) {
        let n_phi = self.n_phi();
        (self.colatitudes[j / n_phi], self.longitudes[j % n_phi])
    }

    /// Characteristic node spacing, `π / n_θ`.
    pub fn spacing(&self) -> f64 {
        PI / self.colatitudes.len() as f64
    }

    /// Quadrature of a real nodal function.
    pub fn integrate(&self, values: impl IntoIterator<Item = f64>) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

/// Geometric primitive describing a region of the sphere. Angles in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    PolarCap {
        center_colatitude: f64,
        center_longitude: f64,
        angular_radius: f64,
    },
    LatitudeBand {
        theta_min: f64,
        theta_max: f64,
    },
    LongitudeSector {
        phi_min: f64,
        phi_max: f64,
        theta_min: f64,
        theta_max: f64,
    },
    Union {
        shapes: Vec<Shape>,
    },
}

impl Shape {
    pub fn validate(&self) -> Result<()> {
        let colat = |name: &str, v: f64| {
            if (0.0..=PI).contains(&v) {
                Ok(())
            } else {
                Err(Error::InvalidMask(format!("{name} = {v} outside [0, π]")))
            }
        };
        let lon = |name: &str, v: f64| {
            if (0.0..=2.0 * PI).contains(&v) {
                Ok(())
            } else {
                Err(Error::InvalidMask(format!("{name} = {v} outside [0, 2π]")))
            }
        };
        match self {
            Shape::PolarCap {
                center_colatitude,
                center_longitude,
                angular_radius,
            } => {
                colat("center_colatitude", *center_colatitude)?;
                lon("center_longitude", *center_longitude)?;
                colat("angular_radius", *angular_radius)
            }
            Shape::LatitudeBand { theta_min, theta_max } => {
                colat("theta_min", *theta_min)?;
                colat("theta_max", *theta_max)?;
                if theta_min > theta_max {
                    return Err(Error::InvalidMask("theta_min exceeds theta_max".into()));
                }
                Ok(())
            }
            Shape::LongitudeSector {
                phi_min,
                phi_max,
                theta_min,
                theta_max,
            } => {
                lon("phi_min", *phi_min)?;
                lon("phi_max", *phi_max)?;
                colat("theta_min", *theta_min)?;
                colat("theta_max", *theta_max)?;
                if theta_min > theta_max {
                    return Err(Error::InvalidMask("theta_min exceeds theta_max".into()));
                }
                Ok(())
            }
            Shape::Union { shapes } => shapes.iter().try_for_each(Shape::validate),
        }
    }

    /// Whether the point `(θ, φ)` lies inside the shape (boundary included).
    pub fn contains(&self, theta: f64, phi: f64) -> bool {
        match self {
            Shape::PolarCap {
                center_colatitude,
                center_longitude,
                angular_radius,
            } => angular_distance(theta, phi, *center_colatitude, *center_longitude) <= *angular_radius,
            Shape::LatitudeBand { theta_min, theta_max } => (*theta_min..=*theta_max).contains(&theta),
            Shape::LongitudeSector {
                phi_min,
                phi_max,
                theta_min,
                theta_max,
            } => {
                let in_lon = if phi_min <= phi_max {
                    (*phi_min..=*phi_max).contains(&phi)
                } else {
                    // wraps through φ = 0
                    phi >= *phi_min || phi <= *phi_max
                };
                in_lon && (*theta_min..=*theta_max).contains(&theta)
            }
            Shape::Union { shapes } => shapes.iter().any(|s| s.contains(theta, phi)),
        }
    }
}

/// Great-circle distance between two points given in colatitude/longitude.
pub fn angular_distance(theta1: f64, phi1: f64, theta2: f64, phi2: f64) -> f64 {
    // haversine form, accurate for small separations
    let dt = 0.5 * (theta1 - theta2);
    let dp = 0.5 * (phi1 - phi2);
    let h = dt.sin().powi(2) + theta1.sin() * theta2.sin() * dp.sin().powi(2);
    2.0 * h.clamp(0.0, 1.0).sqrt().asin()
}

/// Parametric mask description. With `complement = true` the shape is the
/// inpainting area `Γᶜ`; otherwise it is the observed region `Γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskSpec {
    pub shape: Shape,
    #[serde(default = "default_complement")]
    pub complement: bool,
}

fn default_complement() -> bool {
    true
}

impl MaskSpec {
    /// The whole sphere observed.
    pub fn full_sphere() -> Self {
        Self {
            shape: Shape::Union { shapes: Vec::new() },
            complement: true,
        }
    }

    /// Missing cap of the given radius around the north pole.
    pub fn north_cap(angular_radius: f64) -> Self {
        Self {
            shape: Shape::PolarCap {
                center_colatitude: 0.0,
                center_longitude: 0.0,
                angular_radius,
            },
            complement: true,
        }
    }

    /// Approximations of the four illustrative mask geometries
    /// (`1..=4`): a narrow equatorial band, a wide band plus two caps, a
    /// large polar cap and a small off-axis cap. All describe `Γᶜ`.
    pub fn preset(n: usize) -> Result<Self> {
        let deg = PI / 180.0;
        let shape = match n {
            1 => Shape::LatitudeBand {
                theta_min: 85.0 * deg,
                theta_max: 95.0 * deg,
            },
            2 => Shape::Union {
                shapes: vec![
                    Shape::LatitudeBand {
                        theta_min: 75.0 * deg,
                        theta_max: 105.0 * deg,
                    },
                    Shape::PolarCap {
                        center_colatitude: 30.0 * deg,
                        center_longitude: 60.0 * deg,
                        angular_radius: 10.0 * deg,
                    },
                    Shape::PolarCap {
                        center_colatitude: 150.0 * deg,
                        center_longitude: 240.0 * deg,
                        angular_radius: 10.0 * deg,
                    },
                ],
            },
            3 => Shape::PolarCap {
                center_colatitude: 0.0,
                center_longitude: 0.0,
                angular_radius: 40.0 * deg,
            },
            4 => Shape::PolarCap {
                center_colatitude: 60.0 * deg,
                center_longitude: 120.0 * deg,
                angular_radius: 20.0 * deg,
            },
            _ => return Err(Error::InvalidMask(format!("no preset mask {n} (expected 1..=4)"))),
        };
        Ok(Self {
            shape,
            complement: true,
        })
    }
}

/// Node-wise indicator of the observed region `Γ` (`true` = observed).
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    indicator: Vec<bool>,
    spec: MaskSpec,
}

impl Mask {
    pub fn indicator(&self) -> &[bool] {
        &self.indicator
    }

    pub fn spec(&self) -> &MaskSpec {
        &self.spec
    }

    pub fn observed_count(&self) -> usize {
        self.indicator.iter().filter(|&&b| b).count()
    }

    pub fn is_full_sphere(&self) -> bool {
        self.indicator.iter().all(|&b| b)
    }
}

/// Evaluate `spec` at every node and validate the resulting region.
///
/// `Γ` must contain a spherical cap of radius at least the grid spacing (a
/// discrete stand-in for "contains an open set"). A fully observed sphere is
/// accepted.
pub fn build_mask(spec: &MaskSpec, grid: &SphereGrid) -> Result<Mask> {
    spec.shape.validate()?;
    let indicator: Vec<bool> = (0..grid.node_count())
        .map(|j| {
            let (theta, phi) = grid.node(j);
            spec.shape.contains(theta, phi) != spec.complement
        })
        .collect();
    if !indicator.iter().any(|&b| b) {
        return Err(Error::InvalidMask("observed region Γ is empty".into()));
    }
    if !contains_open_cap(&indicator, grid, grid.spacing()) {
        return Err(Error::InvalidMask(format!(
            "observed region Γ contains no cap of radius {:.4} rad (grid spacing)",
            grid.spacing()
        )));
    }
    Ok(Mask {
        indicator,
        spec: spec.clone(),
    })
}

fn contains_open_cap(indicator: &[bool], grid: &SphereGrid, radius: f64) -> bool {
    let n_phi = grid.n_phi();
    let thetas = grid.colatitudes();
    (0..indicator.len()).filter(|&j| indicator[j]).any(|j| {
        let (t0, p0) = grid.node(j);
        thetas
            .iter()
            .enumerate()
            .filter(|(_, &t)| (t - t0).abs() <= radius)
            .all(|(i, _)| {
                (0..n_phi).all(|k| {
                    let jj = i * n_phi + k;
                    indicator[jj] || angular_distance(t0, p0, thetas[i], grid.longitudes()[k]) > radius
                })
            })
    })
}

/// Surface area of `Γ`, `Σ_{j∈Γ} w_j`.
pub fn region_area(mask: &Mask, grid: &SphereGrid) -> f64 {
    grid.weights()
        .iter()
        .zip(mask.indicator())
        .filter(|(_, &inside)| inside)
        .map(|(w, _)| w)
        .sum()
}

/// Surface area of `Γᶜ`.
pub fn complement_area(mask: &Mask, grid: &SphereGrid) -> f64 {
    grid.weights()
        .iter()
        .zip(mask.indicator())
        .filter(|(_, &inside)| !inside)
        .map(|(w, _)| w)
        .sum()
}
