//! Normalized mode functions and their position/momentum-space summaries.
//!
//! A mode is a complex amplitude `u(r)` with unit intensity, `∫|u|² dr = 1`.
//! The quantities that drive every uncertainty statement downstream are
//! moments of the *intensity profile* `|u(r)|²` and of its Fourier partner
//! `|ũ(ξ)|²`:
//!
//! * `∫|u|⁴ dr` — the inverse effective volume of the mode,
//! * `Δr² = ∫|r − r̄|² |u|² dr` — total spatial variance (summed over axes),
//! * the same pair for `ũ(ξ) = ∫ u(r) e^{−i2πξ·r} dr`.
//!
//! Three analytic families are built in, each with closed-form moments that
//! the grid pipeline is tested against:
//!
//! * [`ModeKind::TruncatedPlaneWave`] — constant amplitude `L^{−d/2}` on a
//!   cube of side `L`, optionally with a carrier `e^{i k·r}`.  Its momentum
//!   spread diverges: the sharp edge gives `|ũ|²` tails `∝ ξ^{−2}` whose
//!   second moment is infinite.  [`MomentumRep::delta_xi`] reports `+∞`
//!   rather than whatever finite number a truncated grid would produce.
//! * [`ModeKind::Gaussian`] — `(2πσ²)^{−d/4} e^{−|r|²/4σ²}`, self-dual up to
//!   scaling, with `σ_ξ = 1/(4πσ)` per axis.
//! * [`ModeKind::EpanechnikovAmplitude`] — amplitude proportional to the
//!   parabolic bump `(1 − |r|²/R²)₊`.  Its intensity is *not* the parabolic
//!   profile (it is the square of one), so this family probes the generic
//!   case where no closed momentum form exists and the FFT path is the only
//!   route.  The amplitude kink at `|r| = R` puts a slow `ξ^{−2}` falloff on
//!   `|ξ|²|ũ|²`, so the grid estimate of `Δξ` carries an `O(1/Ξ)` truncation
//!   deficit (`Ξ` = frequency half-extent); defaults keep it under ~2%.
//!
//! Arbitrary tabulated fields enter through [`ModeSpec::from_grid`], which
//! renormalizes and keeps the applied factor for traceability.
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::density_stats;
use crate::grid::{GridField, Space};

/// Fraction of momentum-space intensity allowed beyond 90% of the frequency
/// half-extent before a transform is declared under-resolved.
const OUTER_BAND_LIMIT: f64 = 1e-3;

/// Tolerated drift of `∫|u|²` from 1 when a mode is sampled onto a grid.
const NORM_DRIFT_LIMIT: f64 = 1e-2;

/// The analytic family (or tabulated field) behind a [`ModeSpec`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModeKind {
    /// Constant amplitude `side^{−d/2}` inside a centered cube, zero outside.
    /// `wave_vector` is the carrier `k` in `e^{i k·r}`; trailing components
    /// beyond the mode dimension must be zero.
    TruncatedPlaneWave {
        side: f64,
        #[serde(default)]
        wave_vector: [f64; 3],
    },
    /// Isotropic Gaussian amplitude with intensity st.dev. `sigma` per axis.
    Gaussian { sigma: f64 },
    /// Amplitude `∝ (1 − |r|²/R²)₊` supported on the ball of radius `radius`.
    EpanechnikovAmplitude { radius: f64 },
    /// A tabulated position-space field, renormalized to unit intensity.
    /// `renorm` is the factor the raw values were multiplied by.
    Grid { field: GridField, renorm: f64 },
}

/// A normalized mode in `dim` spatial dimensions.
#[derive(Debug, Clone, Serialize)]
pub struct ModeSpec {
    dim: usize,
    #[serde(flatten)]
    kind: ModeKind,
}

/// Mirror of [`ModeSpec`] used to funnel deserialized data through the
/// validating constructors.
#[derive(Deserialize)]
struct ModeSpecRepr {
    dim: usize,
    #[serde(flatten)]
    kind: ModeKind,
}

impl<'de> Deserialize<'de> for ModeSpec {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        let repr = ModeSpecRepr::deserialize(deserializer)?;
        let spec = match repr.kind {
            ModeKind::TruncatedPlaneWave { side, wave_vector } => {
                if wave_vector[repr.dim.min(3)..].iter().any(|c| *c != 0.0) {
                    return Err(serde::de::Error::custom(format!(
                        "carrier components beyond dimension {} must be zero",
                        repr.dim
                    )));
                }
                ModeSpec::plane_wave_with_carrier(repr.dim, side, &wave_vector[..repr.dim.min(3)])
            }
            ModeKind::Gaussian { sigma } => ModeSpec::gaussian(repr.dim, sigma),
            ModeKind::EpanechnikovAmplitude { radius } => {
                ModeSpec::epanechnikov_amplitude(repr.dim, radius)
            }
            // Renormalize from scratch: the stored factor documents what was
            // applied originally but is never trusted on the way back in.
            ModeKind::Grid { field, .. } => ModeSpec::from_grid(field),
        };
        let spec = spec.map_err(serde::de::Error::custom)?;
        if spec.dim != repr.dim {
            return Err(serde::de::Error::custom(format!(
                "declared dimension {} does not match the tabulated field ({})",
                repr.dim, spec.dim
            )));
        }
        Ok(spec)
    }
}

/// Momentum-space summary of a mode: `∫|ũ|⁴`, the spread `Δξ`, and (when the
/// FFT path was taken) the transformed field itself.
#[derive(Debug, Clone)]
pub struct MomentumRep {
    /// `∫|ũ(ξ)|⁴ dξ`.
    pub l4: f64,
    /// Total momentum-space spread `sqrt(∫|ξ − ξ̄|²|ũ|² dξ)`; `+∞` when the
    /// second moment diverges (sharp-edged modes).
    pub delta_xi: f64,
    /// True when `delta_xi` is `+∞` by analysis rather than measurement.
    pub diverges: bool,
    /// Fraction of `∫|ũ|²` found beyond 90% of the frequency half-extent
    /// (zero for closed-form paths).
    pub outer_band_fraction: f64,
    /// The transformed field when it was computed numerically.
    pub field: Option<GridField>,
}

impl MomentumRep {
    /// Momentum spread in mechanical units, `Δp = 2πℏ·Δξ`.
    pub fn delta_p(&self, hbar: f64) -> f64 {
        2.0 * std::f64::consts::PI * hbar * self.delta_xi
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if (1..=3).contains(&dim) {
        Ok(())
    } else {
        Err(Error::UnsupportedDim { dim })
    }
}

fn check_positive(what: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidMode(format!(
            "{what} must be positive and finite, got {value}"
        )))
    }
}

impl ModeSpec {
    /// Plane-wave cube of side `side` with no carrier.
    pub fn plane_wave(dim: usize, side: f64) -> Result<Self> {
        check_dim(dim)?;
        Self::plane_wave_with_carrier(dim, side, &[0.0; 3][..dim])
    }

    /// Plane-wave cube of side `side` with carrier wave vector `k`
    /// (`k.len() == dim`, components in radians per unit length).
    pub fn plane_wave_with_carrier(dim: usize, side: f64, k: &[f64]) -> Result<Self> {
        check_dim(dim)?;
        check_positive("plane-wave side", side)?;
        if k.len() != dim {
            return Err(Error::InvalidMode(format!(
                "carrier has {} components for a {dim}-dimensional mode",
                k.len()
            )));
        }
        if k.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidMode("carrier components must be finite".into()));
        }
        let mut wave_vector = [0.0; 3];
        wave_vector[..dim].copy_from_slice(k);
        Ok(Self {
            dim,
            kind: ModeKind::TruncatedPlaneWave { side, wave_vector },
        })
    }

    /// Isotropic Gaussian mode with per-axis intensity st.dev. `sigma`.
    pub fn gaussian(dim: usize, sigma: f64) -> Result<Self> {
        check_dim(dim)?;
        check_positive("gaussian sigma", sigma)?;
        Ok(Self {
            dim,
            kind: ModeKind::Gaussian { sigma },
        })
    }

    /// Parabolic-amplitude mode supported on the ball of radius `radius`.
    pub fn epanechnikov_amplitude(dim: usize, radius: f64) -> Result<Self> {
        check_dim(dim)?;
        check_positive("support radius", radius)?;
        Ok(Self {
            dim,
            kind: ModeKind::EpanechnikovAmplitude { radius },
        })
    }

    /// Wrap a tabulated position-space field, renormalizing it to
    /// `∫|u|² = 1` and recording the applied scale factor.
    pub fn from_grid(field: GridField) -> Result<Self> {
        if field.space() != Space::Position {
            return Err(Error::SpaceMismatch {
                op: "mode construction",
                expected: "position",
                got: "frequency",
            });
        }
        let norm_sq = field.norm_sq();
        if !(norm_sq.is_finite() && norm_sq > 0.0) {
            return Err(Error::ZeroField {
                context: "grid mode normalization",
            });
        }
        let renorm = norm_sq.sqrt().recip();
        let dim = field.dim();
        Ok(Self {
            dim,
            kind: ModeKind::Grid {
                field: field.scaled(Complex64::new(renorm, 0.0)),
                renorm,
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &ModeKind {
        &self.kind
    }

    /// One-line description used by reports and CLI output.
    pub fn summary(&self) -> String {
        match &self.kind {
            ModeKind::TruncatedPlaneWave { side, wave_vector } => {
                let k = &wave_vector[..self.dim];
                if k.iter().all(|c| *c == 0.0) {
                    format!("plane_wave(dim={}, side={})", self.dim, side)
                } else {
                    format!("plane_wave(dim={}, side={}, k={:?})", self.dim, side, k)
                }
            }
            ModeKind::Gaussian { sigma } => format!("gaussian(dim={}, sigma={})", self.dim, sigma),
            ModeKind::EpanechnikovAmplitude { radius } => {
                format!("epanechnikov_amplitude(dim={}, radius={})", self.dim, radius)
            }
            ModeKind::Grid { field, renorm } => format!(
                "grid(dim={}, n={}, extent={}, renorm={:.6})",
                self.dim,
                field.samples_per_axis(),
                field.extent(),
                renorm
            ),
        }
    }

    /// `∫|u(r)|⁴ dr`, from the closed form when one exists.
    pub fn l4(&self) -> Result<f64> {
        match &self.kind {
            ModeKind::TruncatedPlaneWave { side, .. } => Ok(side.powi(-(self.dim as i32))),
            ModeKind::Gaussian { sigma } => {
                let d = self.dim as i32;
                Ok(1.0
                    / (2f64.powi(d)
                        * std::f64::consts::PI.powf(self.dim as f64 / 2.0)
                        * sigma.powi(d)))
            }
            ModeKind::EpanechnikovAmplitude { radius } => Ok(match self.dim {
                1 => 5.0 / (7.0 * radius),
                2 => 9.0 / (5.0 * std::f64::consts::PI * radius * radius),
                3 => 35.0 / (22.0 * std::f64::consts::PI * radius.powi(3)),
                _ => unreachable!("dimension validated at construction"),
            }),
            ModeKind::Grid { field, .. } => Ok(quartic_integral(field)),
        }
    }

    /// Total spatial variance `Δr² = ∫|r − r̄|²|u|² dr` (summed over axes).
    pub fn width_sq(&self) -> Result<f64> {
        match &self.kind {
            ModeKind::TruncatedPlaneWave { side, .. } => Ok(self.dim as f64 * side * side / 12.0),
            ModeKind::Gaussian { sigma } => Ok(self.dim as f64 * sigma * sigma),
            ModeKind::EpanechnikovAmplitude { radius } => Ok(match self.dim {
                1 => radius * radius / 7.0,
                2 => radius * radius / 4.0,
                3 => radius * radius / 3.0,
                _ => unreachable!("dimension validated at construction"),
            }),
            ModeKind::Grid { field, .. } => {
                let intensity = field.abs_sq();
                Ok(density_stats(&intensity)?.variance)
            }
        }
    }

    /// Total spatial spread `Δr = sqrt(width_sq)`.
    pub fn width(&self) -> Result<f64> {
        Ok(self.width_sq()?.sqrt())
    }

    /// Half-width of a centered cube guaranteed to contain the mode's
    /// support per axis.  Gaussians are unbounded; `8.5σ` leaves less than
    /// one part in 10¹⁵ of the intensity outside and is reported as the
    /// effective support.
    pub fn support_halfwidth(&self) -> f64 {
        match &self.kind {
            ModeKind::TruncatedPlaneWave { side, .. } => side / 2.0,
            ModeKind::Gaussian { sigma } => 8.5 * sigma,
            ModeKind::EpanechnikovAmplitude { radius } => *radius,
            ModeKind::Grid { field, .. } => field.extent(),
        }
    }

    /// Grid parameters `(extent, samples_per_axis)` that resolve this mode
    /// well enough for every numeric path in this crate.
    pub fn default_grid(&self) -> (f64, usize) {
        let n = match self.dim {
            1 => 4096,
            2 => 512,
            _ => 128,
        };
        match &self.kind {
            // Extent equal to the side puts the cube faces exactly on cell
            // boundaries whenever n is divisible by 4, so the sampled norm
            // is exact rather than carrying an O(h) edge error.
            ModeKind::TruncatedPlaneWave { side, .. } => (*side, n),
            ModeKind::Gaussian { sigma } => (10.0 * sigma, n),
            ModeKind::EpanechnikovAmplitude { radius } => (1.5 * radius, n),
            ModeKind::Grid { field, .. } => (field.extent(), field.samples_per_axis()),
        }
    }

    /// Sample the mode amplitude onto a centered position-space grid.
    /// Grid-backed modes carry their own tabulation and only accept their
    /// native `(extent, n)`.
    pub fn sample(&self, extent: f64, n: usize) -> Result<GridField> {
        match &self.kind {
            ModeKind::TruncatedPlaneWave { side, wave_vector } => {
                let half = side / 2.0;
                let amp = side.powf(-(self.dim as f64) / 2.0);
                let k = *wave_vector;
                GridField::from_fn_complex(self.dim, extent, n, |r| {
                    if r.iter().all(|x| x.abs() < half) {
                        let phase: f64 = r.iter().zip(k.iter()).map(|(x, kc)| x * kc).sum();
                        Complex64::from_polar(amp, phase)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
            }
            ModeKind::Gaussian { sigma } => {
                let norm = (2.0 * std::f64::consts::PI * sigma * sigma)
                    .powf(-(self.dim as f64) / 4.0);
                let inv = 1.0 / (4.0 * sigma * sigma);
                GridField::from_fn(self.dim, extent, n, |r| {
                    let r_sq: f64 = r.iter().map(|x| x * x).sum();
                    norm * (-r_sq * inv).exp()
                })
            }
            ModeKind::EpanechnikovAmplitude { radius } => {
                let amp_sq = match self.dim {
                    1 => 15.0 / (16.0 * radius),
                    2 => 3.0 / (std::f64::consts::PI * radius * radius),
                    3 => 105.0 / (32.0 * std::f64::consts::PI * radius.powi(3)),
                    _ => unreachable!("dimension validated at construction"),
                };
                let amp = amp_sq.sqrt();
                let r_sq_max = radius * radius;
                GridField::from_fn(self.dim, extent, n, |r| {
                    let r_sq: f64 = r.iter().map(|x| x * x).sum();
                    if r_sq < r_sq_max {
                        amp * (1.0 - r_sq / r_sq_max)
                    } else {
                        0.0
                    }
                })
            }
            ModeKind::Grid { field, .. } => {
                if extent == field.extent() && n == field.samples_per_axis() {
                    Ok(field.clone())
                } else {
                    Err(Error::InvalidMode(format!(
                        "tabulated mode carries its own grid (extent={}, n={}); \
                         resampling onto (extent={extent}, n={n}) is not supported",
                        field.extent(),
                        field.samples_per_axis()
                    )))
                }
            }
        }
    }

    /// Momentum-space summary on the default grid (closed forms where they
    /// exist, FFT otherwise).  See [`ModeSpec::momentum_on`] for the grid
    /// controls and the validity guards.
    pub fn momentum(&self) -> Result<MomentumRep> {
        match &self.kind {
            ModeKind::TruncatedPlaneWave { side, .. } => Ok(MomentumRep {
                l4: (2.0 * side / 3.0).powi(self.dim as i32),
                delta_xi: f64::INFINITY,
                diverges: true,
                outer_band_fraction: 0.0,
                field: None,
            }),
            ModeKind::Gaussian { sigma } => {
                let d = self.dim as f64;
                let sigma_xi = 1.0 / (4.0 * std::f64::consts::PI * sigma);
                let l4 = (2.0 * sigma).powf(d) * std::f64::consts::PI.powf(d / 2.0);
                Ok(MomentumRep {
                    l4,
                    delta_xi: d.sqrt() * sigma_xi,
                    diverges: false,
                    outer_band_fraction: 0.0,
                    field: None,
                })
            }
            _ => {
                let (extent, n) = self.default_grid();
                self.momentum_on(extent, n)
            }
        }
    }

    /// Momentum-space summary via the FFT on an explicit grid.  Fails with
    /// [`Error::UnderResolved`] when the sampled norm drifts from 1 or when
    /// more than 0.1% of the momentum intensity sits within 10% of the
    /// frequency boundary — both symptoms of a grid too coarse or too tight
    /// for the mode.
    pub fn momentum_on(&self, extent: f64, n: usize) -> Result<MomentumRep> {
        let position = self.sample(extent, n)?;
        let norm = position.norm_sq();
        if (norm - 1.0).abs() > NORM_DRIFT_LIMIT {
            return Err(Error::UnderResolved {
                what: "sampled mode norm",
                value: norm,
                limit: NORM_DRIFT_LIMIT,
                advice: "increase samples_per_axis or adjust the extent to cover the mode".into(),
            });
        }
        let transformed = position.dft()?;
        let intensity = transformed.abs_sq();
        let stats = density_stats(&intensity)?;
        let outer = outer_band_fraction(&intensity);
        if outer > OUTER_BAND_LIMIT {
            return Err(Error::UnderResolved {
                what: "momentum intensity near the frequency boundary",
                value: outer,
                limit: OUTER_BAND_LIMIT,
                advice: "increase samples_per_axis to widen the frequency window".into(),
            });
        }
        Ok(MomentumRep {
            l4: quartic_integral(&transformed),
            delta_xi: (stats.variance / stats.l1).max(0.0).sqrt(),
            diverges: false,
            outer_band_fraction: outer,
            field: Some(transformed),
        })
    }

    /// `∫|u|⁴` measured from a sampled grid (cross-check for the closed
    /// forms; the native path for tabulated modes).
    pub fn l4_on(&self, extent: f64, n: usize) -> Result<f64> {
        Ok(quartic_integral(&self.sample(extent, n)?))
    }

    /// `Δr²` measured from a sampled grid.
    pub fn width_sq_on(&self, extent: f64, n: usize) -> Result<f64> {
        let intensity = self.sample(extent, n)?.abs_sq();
        let stats = density_stats(&intensity)?;
        Ok(stats.variance / stats.l1)
    }
}

/// `∫|f|⁴` over the field's grid.
fn quartic_integral(field: &GridField) -> f64 {
    let sum: f64 = field.values().iter().map(|v| v.norm_sqr() * v.norm_sqr()).sum();
    sum * field.cell_volume()
}

/// Fraction of total intensity lying within the outer 10% band of the grid
/// along any axis.
fn outer_band_fraction(intensity: &GridField) -> f64 {
    let n = intensity.samples_per_axis();
    let dim = intensity.dim();
    let extent = intensity.extent();
    let threshold = 0.9 * extent;
    let mut outer = 0.0;
    let mut total = 0.0;
    // Per-axis coordinates repeat with stride n^(dim-1-axis); precompute the
    // boundary flag per index once.
    let near_edge: Vec<bool> = (0..n)
        .map(|i| intensity.axis_coord(i).abs() > threshold)
        .collect();
    for (flat, v) in intensity.values().iter().enumerate() {
        let mut rest = flat;
        let mut edge = false;
        for _ in 0..dim {
            let idx = rest % n;
            if near_edge[idx] {
                edge = true;
                break;
            }
            rest /= n;
        }
        total += v.re;
        if edge {
            outer += v.re;
        }
    }
    if total > 0.0 {
        outer / total
    } else {
        0.0
    }
}
