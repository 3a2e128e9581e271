//! Noise-resolution functionals of densities and their sharp bounds.
//!
//! For a normalized density `f >= 0` on `R^d` with centroid `ȳ` the
//! scale-invariant noise-resolution functional
//!
//! ```text
//! N_d[f] = 2 (∫ f²) (∫ |y - ȳ|² f)^{d/2}
//! ```
//!
//! satisfies `N_d[f] >= C̃_d`, with equality exactly at Epanechnikov
//! densities `f(y) = A (1 - |y - y₀|²/R²)₊`. The constants are
//!
//! ```text
//! C_d  = 2^d Γ(d/2) d (d+2) / (d+4)^{d/2+1},
//! C̃_d = 2 (d/4π)^{d/2} C_d,
//! ```
//!
//! giving `C_1 ≈ 0.951199`, `C_2 = 8/9`, `C_3 ≈ 0.820316` and
//! `C̃_1 = 6/(5√5) ≈ 0.536656`, `C̃_2 = 8/(9π) ≈ 0.282942`,
//! `C̃_3 = 15√27/(7^{5/2}π) ≈ 0.191372`. The equivalent product form
//! `(∫f²)² (∫|y-ȳ|²f)^d >= (d/4π)^d C_d²` is exposed as
//! [`inequality_lhs`] / [`inequality_bound`].

use crate::error::{Error, Result};
use crate::grid::GridField;

use std::f64::consts::PI;

fn check_dim(dim: usize) -> Result<()> {
    if (1..=3).contains(&dim) {
        Ok(())
    } else {
        Err(Error::UnsupportedDim { dim })
    }
}

/// Sharp constant `C_d = 2^d Γ(d/2) d (d+2) / (d+4)^{d/2+1}` for d = 1, 2, 3.
pub fn cd_constant(dim: usize) -> Result<f64> {
    check_dim(dim)?;
    let d = dim as f64;
    // Γ(1/2) = √π, Γ(1) = 1, Γ(3/2) = √π/2
    let gamma_half_d = match dim {
        1 => PI.sqrt(),
        2 => 1.0,
        3 => PI.sqrt() / 2.0,
        _ => unreachable!(),
    };
    Ok(2f64.powi(dim as i32) * gamma_half_d * d * (d + 2.0) / (d + 4.0).powf(d / 2.0 + 1.0))
}

/// Dimensionless bound `C̃_d = 2 (d/4π)^{d/2} C_d` of the noise-resolution
/// functional.
pub fn cd_tilde(dim: usize) -> Result<f64> {
    let d = dim as f64;
    Ok(2.0 * (d / (4.0 * PI)).powf(d / 2.0) * cd_constant(dim)?)
}

/// Lower bound `(d/4π)^d C_d²` for the product form [`inequality_lhs`].
pub fn inequality_bound(dim: usize) -> Result<f64> {
    let d = dim as f64;
    Ok((d / (4.0 * PI)).powi(dim as i32) * cd_constant(dim)?.powi(2))
}

/// `N_d` evaluated from already-known ingredients of a normalized density:
/// `2 · l2sq · variance^{d/2}`.
pub fn noise_resolution_value(dim: usize, l2sq: f64, variance: f64) -> f64 {
    let var_pow = match dim {
        1 => variance.sqrt(),
        2 => variance,
        _ => variance * variance.sqrt(),
    };
    2.0 * l2sq * var_pow
}

/// Summary statistics of a sampled density.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DensityStats {
    /// `∫ f` over the grid.
    pub l1: f64,
    /// `∫ f²` over the grid.
    pub l2sq: f64,
    /// Centroid `∫ y f / ∫ f`, one entry per axis.
    pub centroid: Vec<f64>,
    /// Total central second moment `∫ |y - ȳ|² f / ∫ f` (summed over axes).
    pub variance: f64,
}

/// Integrates the low-order moments of a nonnegative density.
///
/// Accepts position- or frequency-space fields. Rejects negative samples
/// beyond `-1e-12 × max f`, imaginary parts beyond the same tolerance, and
/// identically zero input.
pub fn density_stats(f: &GridField) -> Result<DensityStats> {
    let dim = f.dim();
    let n = f.samples_per_axis();
    let max = f.values().iter().map(|v| v.re).fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Err(Error::ZeroField { context: "density" });
    }
    let tol = 1e-12 * max;
    let mut mass = 0.0f64;
    let mut first = [0.0f64; 3];
    let mut second = 0.0f64; // Σ f |y|²
    for (flat, v) in f.values().iter().enumerate() {
        if v.re < -tol {
            let coords = f
                .node(flat)
                .iter()
                .map(|x| format!("{x:.6}"))
                .collect::<Vec<_>>()
                .join(", ");
            return Err(Error::NegativeDensity { value: v.re, coords });
        }
        if v.im.abs() > tol {
            return Err(Error::InvalidGrid(format!(
                "density has imaginary sample {} (tolerance {tol:.3e})",
                v.im
            )));
        }
        mass += v.re;
        let mut rem = flat;
        for a in (0..dim).rev() {
            let y = f.axis_coord(rem % n);
            rem /= n;
            first[a] += v.re * y;
            second += v.re * y * y;
        }
    }
    let vol = f.cell_volume();
    let l1 = mass * vol;
    if !(l1 > 0.0) {
        return Err(Error::ZeroField { context: "density" });
    }
    let l2sq = vol * f.values().iter().map(|v| v.re * v.re).sum::<f64>();
    let centroid: Vec<f64> = first[..dim].iter().map(|m| m / mass).collect();
    let centroid_sq: f64 = centroid.iter().map(|c| c * c).sum();
    let variance = (second / mass - centroid_sq).max(0.0);
    Ok(DensityStats { l1, l2sq, centroid, variance })
}

/// The noise-resolution functional `N_d[f] = 2 (∫f²)(∫|y-ȳ|²f)^{d/2}` of a
/// normalized density.
///
/// With `normalize = true` the input is rescaled to unit mass first; with
/// `normalize = false` the input must already integrate to 1 within 1e-6.
pub fn noise_resolution_functional(f: &GridField, normalize: bool) -> Result<f64> {
    let stats = density_stats(f)?;
    if !normalize && (stats.l1 - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidGrid(format!(
            "density integrates to {} but normalize = false requires unit mass",
            stats.l1
        )));
    }
    // Rescaling f -> f/l1 maps l2sq -> l2sq/l1²; variance is already
    // mass-normalized.
    Ok(noise_resolution_value(f.dim(), stats.l2sq / (stats.l1 * stats.l1), stats.variance))
}

/// Scale-invariant product form `(∫f²)² (∫|y-ȳ|²f)^d` for the density
/// rescaled to unit mass. Satisfies `inequality_lhs(f) >= inequality_bound(d)`.
pub fn inequality_lhs(f: &GridField) -> Result<f64> {
    let stats = density_stats(f)?;
    let l2 = stats.l2sq / (stats.l1 * stats.l1);
    Ok(l2 * l2 * stats.variance.powi(f.dim() as i32))
}

/// Normalization amplitude of the Epanechnikov density
/// `f = A (1 - |y - c|²/R²)₊` with unit mass.
pub fn epanechnikov_amplitude(dim: usize, radius: f64) -> Result<f64> {
    check_dim(dim)?;
    Ok(match dim {
        1 => 3.0 / (4.0 * radius),
        2 => 2.0 / (PI * radius * radius),
        _ => 15.0 / (8.0 * PI * radius.powi(3)),
    })
}

/// Closed-form `∫ f²` of the unit-mass Epanechnikov density.
pub fn epanechnikov_l2sq(dim: usize, radius: f64) -> Result<f64> {
    check_dim(dim)?;
    Ok(match dim {
        1 => 3.0 / (5.0 * radius),
        2 => 4.0 / (3.0 * PI * radius * radius),
        _ => 15.0 / (14.0 * PI * radius.powi(3)),
    })
}

/// Closed-form total variance of the unit-mass Epanechnikov density.
pub fn epanechnikov_variance(dim: usize, radius: f64) -> Result<f64> {
    check_dim(dim)?;
    let r2 = radius * radius;
    Ok(match dim {
        1 => r2 / 5.0,
        2 => r2 / 3.0,
        _ => 3.0 * r2 / 7.0,
    })
}

/// Samples the unit-mass Epanechnikov density `A (1 - |y-c|²/R²)₊` and
/// returns it together with its closed-form statistics (the sampled grid
/// statistics converge to these as N grows).
///
/// The support ball must fit inside the grid: `|c_a| + R <= X` per axis.
pub fn epanechnikov(
    dim: usize,
    radius: f64,
    center: &[f64],
    extent: f64,
    n: usize,
) -> Result<(GridField, DensityStats)> {
    check_dim(dim)?;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidGrid(format!("radius {radius} must be finite and > 0")));
    }
    if center.len() != dim {
        return Err(Error::InvalidGrid(format!(
            "center has {} coordinates, expected {dim}",
            center.len()
        )));
    }
    for &c in center {
        if c.abs() + radius > extent {
            return Err(Error::SupportExceedsGrid {
                what: format!("Epanechnikov support at center {c}"),
                needed: c.abs() + radius,
                extent,
            });
        }
    }
    let amp = epanechnikov_amplitude(dim, radius)?;
    let r2 = radius * radius;
    let center = center.to_vec();
    let field = GridField::from_fn(dim, extent, n, |y| {
        let dist2: f64 = y.iter().zip(&center).map(|(a, b)| (a - b) * (a - b)).sum();
        (amp * (1.0 - dist2 / r2)).max(0.0)
    })?;
    let stats = DensityStats {
        l1: 1.0,
        l2sq: epanechnikov_l2sq(dim, radius)?,
        centroid: center,
        variance: epanechnikov_variance(dim, radius)?,
    };
    Ok((field, stats))
}
