//! Equirectangular grayscale maps.
//!
//! Row 0 is the north pole (`θ = 0`), the last row the south pole; column
//! `c` is longitude `φ = 2πc / width`. Values are min–max normalized to
//! 8 bits and the normalization is written to a JSON sidecar.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use image::{GrayImage, Luma};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coeffs::CoefficientVector;
use crate::error::{Error, Result};
use crate::grid::SphereGrid;
use crate::harmonics::synthesize_rings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Real,
    Imaginary,
    Modulus,
}

impl Component {
    fn pick(self, z: Complex64) -> f64 {
        match self {
            Component::Real => z.re,
            Component::Imaginary => z.im,
            Component::Modulus => z.norm(),
        }
    }
}

/// Normalization recorded next to every image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderInfo {
    pub width: u32,
    pub height: u32,
    pub min: f64,
    pub max: f64,
    pub component: Component,
}

#[derive(Debug, Clone)]
pub struct RenderedMap {
    pub image: GrayImage,
    pub info: RenderInfo,
}

/// Pixel-center angles for a `height`-row map (width `2·height`).
pub fn map_angles(height: u32) -> (Vec<f64>, Vec<f64>) {
    let width = 2 * height;
    let thetas = (0..height)
        .map(|r| {
            if height == 1 {
                0.0
            } else {
                PI * r as f64 / (height - 1) as f64
            }
        })
        .collect();
    let phis = (0..width).map(|c| 2.0 * PI * c as f64 / width as f64).collect();
    (thetas, phis)
}

/// Evaluate a coefficient vector on the map grid and quantize.
pub fn render_coefficients(coeffs: &CoefficientVector, height: u32, component: Component) -> Result<RenderedMap> {
    if height == 0 {
        return Err(Error::InvalidConfig("image height must be positive".into()));
    }
    let (thetas, phis) = map_angles(height);
    let field = synthesize_rings(coeffs, &thetas, &phis);
    let values: Vec<f64> = field.iter().map(|&z| component.pick(z)).collect();
    Ok(quantize(&values, 2 * height, height, component))
}

/// Nearest-node rendering of a field sampled on a quadrature grid.
pub fn render_grid_values(values: &[f64], grid: &SphereGrid, height: u32) -> Result<RenderedMap> {
    if values.len() != grid.node_count() {
        return Err(Error::DimensionMismatch {
            expected: grid.node_count(),
            actual: values.len(),
        });
    }
    if height == 0 {
        return Err(Error::InvalidConfig("image height must be positive".into()));
    }
    let (thetas, phis) = map_angles(height);
    let n_phi = grid.n_phi();
    let cols = grid.colatitudes();
    let mut out = Vec::with_capacity(thetas.len() * phis.len());
    for &t in &thetas {
        let i = cols
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        for &p in &phis {
            let k = ((p / (2.0 * PI) * n_phi as f64).round() as usize) % n_phi;
            out.push(values[i * n_phi + k]);
        }
    }
    Ok(quantize(&out, 2 * height, height, Component::Real))
}

fn quantize(values: &[f64], width: u32, height: u32, component: Component) -> RenderedMap {
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    let mut image = GrayImage::new(width, height);
    for (idx, v) in values.iter().enumerate() {
        let level = if span > 0.0 {
            ((v - min) / span * 255.0).round().clamp(0.0, 255.0) as u8
        } else {
            0
        };
        image.put_pixel(idx as u32 % width, idx as u32 / width, Luma([level]));
    }
    RenderedMap {
        image,
        info: RenderInfo {
            width,
            height,
            min,
            max,
            component,
        },
    }
}

/// `<image>.json` next to the PNG.
pub fn sidecar_path(png: &Path) -> PathBuf {
    let mut s = png.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Write the PNG and its normalization sidecar.
pub fn save_map(map: &RenderedMap, path: &Path) -> Result<()> {
    let mut bytes = Vec::new();
    map.image
        .write_to(&mut std::io::Cursor::new(&mut bytes), image::ImageFormat::Png)
        .map_err(|e| Error::Image {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    crate::io::write_atomic(path, |w| std::io::Write::write_all(w, &bytes))?;
    crate::io::write_json(&sidecar_path(path), &map.info)
}
