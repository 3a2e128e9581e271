//! Pixel-detector simulation and the per-photon information ceiling.
//!
//! A uniformly illuminated counting detector measures, cell by cell, the
//! aggregate form of the intensity–resolution inequality: with `M` spatial
//! resolution cells, squared mean-to-noise ratio `SNR²`, and `n̄` photons
//! per exposure, the quantity
//!
//! ```text
//! Q₂² = (1/2π) · M · SNR² / (n̄ + 1/2)
//! ```
//!
//! cannot exceed `1/C₂ = 9/8` for any detector, and for a detector whose
//! point-spread function has shape `f` it plateaus at `1/C[f]`, where
//! `C[f] = 2π · var(f) · ∫f²` is scale-free.  An ideal square pixel has
//! `C = π/3` (plateau `3/π ≈ 0.955`), a Gaussian spot `C = 1`, and the
//! parabolic (Epanechnikov) profile reaches the floor `C = C₂ = 8/9`.
//!
//! The simulator draws independent Poisson counts per pixel per frame and
//! the analysis pipeline re-bins pixels and re-bunches frames exactly as a
//! synchrotron-style measurement would, mapping out `Q₂²` as a surface over
//! resolution and photon number.  Each (frame, pixel) draw has its own
//! counter-mode RNG stream, so results are independent of evaluation
//! order.
//!
//! Charge sharing is modeled photon by photon: every registered photon
//! independently hops to a neighboring pixel with probabilities given by
//! the sharing kernel (periodic wrap at the edges).  Independent
//! displacement of Poisson points leaves the field Poisson with the same
//! uniform rate, so under flat illumination the blur is statistically
//! invisible — the measured plateau stays at the *pixel* value `3/π`, a
//! testable fixed point of the model.
//!
//! Frame stacks travel in the `NRU1` container: magic `NRU1`, then
//! little-endian `u32` width, `u32` height, `u32` frame count, `f64` pixel
//! pitch, then `width·height·frames` counts as `u32`, frame-major,
//! row-major within a frame.
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};
use crate::functionals::density_stats;
use crate::grid::{GridField, Space};
use crate::photon::qd_squared;

/// Hard cap on pixels × frames, matching the grid sample cap.
const MAX_CELLS: u64 = 1 << 27;

/// A stack of count frames from one detector geometry.
///
/// `counts` is frame-major and row-major within a frame:
/// `counts[(frame·height + row)·width + column]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameStack {
    width: usize,
    height: usize,
    pitch_x: f64,
    pitch_y: f64,
    n_frames: usize,
    counts: Vec<u64>,
}

impl FrameStack {
    pub fn new(
        width: usize,
        height: usize,
        pitch_x: f64,
        pitch_y: f64,
        n_frames: usize,
        counts: Vec<u64>,
    ) -> Result<Self> {
        if width == 0 || height == 0 || n_frames == 0 {
            return Err(Error::InvalidDetector(format!(
                "empty stack shape {width}×{height}×{n_frames}"
            )));
        }
        for (name, v) in [("pitch_x", pitch_x), ("pitch_y", pitch_y)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidDetector(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        let cells = width as u64 * height as u64 * n_frames as u64;
        if cells > MAX_CELLS {
            return Err(Error::InvalidDetector(format!(
                "stack of {cells} cells exceeds the cap of {MAX_CELLS}"
            )));
        }
        if counts.len() as u64 != cells {
            return Err(Error::InvalidDetector(format!(
                "shape {width}×{height}×{n_frames} needs {cells} counts, got {}",
                counts.len()
            )));
        }
        Ok(Self { width, height, pitch_x, pitch_y, n_frames, counts })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pitch_x(&self) -> f64 {
        self.pitch_x
    }

    pub fn pitch_y(&self) -> f64 {
        self.pitch_y
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn pixels_per_frame(&self) -> usize {
        self.width * self.height
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn frame(&self, index: usize) -> &[u64] {
        let n = self.pixels_per_frame();
        &self.counts[index * n..(index + 1) * n]
    }

    /// Sum of every count in the stack.
    pub fn total_counts(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Mean total counts per frame — the absolute photon-number scale `n̄`.
    pub fn mean_frame_total(&self) -> f64 {
        self.total_counts() as f64 / self.n_frames as f64
    }

    /// Merge `bin_x × bin_y` pixel blocks into effective pixels.  Counts
    /// are conserved exactly; the factors must divide the detector shape.
    pub fn bin(&self, bin_x: usize, bin_y: usize) -> Result<FrameStack> {
        if bin_x == 0 || self.width % bin_x != 0 {
            return Err(Error::NonDivisorFactor {
                what: "bin factor",
                factor: bin_x,
                axis: "width",
                size: self.width,
            });
        }
        if bin_y == 0 || self.height % bin_y != 0 {
            return Err(Error::NonDivisorFactor {
                what: "bin factor",
                factor: bin_y,
                axis: "height",
                size: self.height,
            });
        }
        let new_w = self.width / bin_x;
        let new_h = self.height / bin_y;
        let mut counts = vec![0u64; new_w * new_h * self.n_frames];
        for f in 0..self.n_frames {
            let src = self.frame(f);
            let dst = &mut counts[f * new_w * new_h..(f + 1) * new_w * new_h];
            for row in 0..self.height {
                let out_row = row / bin_y;
                for col in 0..self.width {
                    dst[out_row * new_w + col / bin_x] += src[row * self.width + col];
                }
            }
        }
        FrameStack::new(
            new_w,
            new_h,
            self.pitch_x * bin_x as f64,
            self.pitch_y * bin_y as f64,
            self.n_frames,
            counts,
        )
    }

    /// Add consecutive frames together in groups of `bunch`.  Counts are
    /// conserved exactly; the factor must divide the frame count.
    pub fn bunch(&self, bunch: usize) -> Result<FrameStack> {
        if bunch == 0 || self.n_frames % bunch != 0 {
            return Err(Error::NonDivisorFactor {
                what: "bunch factor",
                factor: bunch,
                axis: "frames",
                size: self.n_frames,
            });
        }
        let n_out = self.n_frames / bunch;
        let npix = self.pixels_per_frame();
        let mut counts = vec![0u64; npix * n_out];
        for (out_index, chunk) in counts.chunks_mut(npix).enumerate() {
            for member in 0..bunch {
                for (acc, v) in chunk.iter_mut().zip(self.frame(out_index * bunch + member)) {
                    *acc += v;
                }
            }
        }
        FrameStack::new(self.width, self.height, self.pitch_x, self.pitch_y, n_out, counts)
    }
}

/// Shape of the detector point-spread function.
///
/// Both the scale-free shape constant `C[f]` ([`c_functional`]) and the
/// charge-sharing kernel are derived from it.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "psf", rename_all = "snake_case")]
pub enum Psf {
    /// All charge lands in the pixel that was hit: `C = π/3`.
    UniformPixel,
    /// Isotropic Gaussian spot of st.dev. `sigma` (length units): `C = 1`.
    Gaussian { sigma: f64 },
    /// Parabolic spot supported on radius `radius`: `C = 8/9`, the floor.
    Epanechnikov { radius: f64 },
    /// Tabulated two-dimensional intensity profile.
    Tabulated { field: GridField },
}

impl Psf {
    fn validate(&self) -> Result<()> {
        match self {
            Psf::UniformPixel => Ok(()),
            Psf::Gaussian { sigma } => {
                if sigma.is_finite() && *sigma > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidDetector(format!(
                        "gaussian spot sigma must be positive, got {sigma}"
                    )))
                }
            }
            Psf::Epanechnikov { radius } => {
                if radius.is_finite() && *radius > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidDetector(format!(
                        "spot radius must be positive, got {radius}"
                    )))
                }
            }
            Psf::Tabulated { field } => {
                if field.dim() != 2 {
                    return Err(Error::InvalidDetector(format!(
                        "tabulated spot must be two-dimensional, got dim {}",
                        field.dim()
                    )));
                }
                if field.space() != Space::Position {
                    return Err(Error::InvalidDetector(
                        "tabulated spot must be a position-space profile".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Total (two-dimensional) variance of the spot shape, used when folding
    /// the blur into the resolution estimate.
    pub fn total_variance(&self) -> Result<f64> {
        self.validate()?;
        Ok(match self {
            Psf::UniformPixel => 0.0,
            Psf::Gaussian { sigma } => 2.0 * sigma * sigma,
            Psf::Epanechnikov { radius } => radius * radius / 3.0,
            Psf::Tabulated { field } => density_stats(field)?.variance,
        })
    }
}

/// The scale-free shape constant `C[f] = 2π · var(f) · ∫f²` of a
/// normalized two-dimensional profile.  Bounded below by `C₂ = 8/9`; the
/// measured `Q₂²` plateau sits at `1/C[f]`.
pub fn c_functional(psf: &Psf) -> Result<f64> {
    psf.validate()?;
    let tau = 2.0 * std::f64::consts::PI;
    Ok(match psf {
        // var = a²/6, ∫f² = 1/a² for any pixel side a.
        Psf::UniformPixel => tau / 6.0,
        Psf::Gaussian { .. } => 1.0,
        // var = R²/3, ∫f² = 4/(3πR²).
        Psf::Epanechnikov { .. } => 8.0 / 9.0,
        Psf::Tabulated { field } => {
            let stats = density_stats(field)?;
            tau * stats.variance * stats.l2sq / (stats.l1 * stats.l1)
        }
    })
}

/// How the spatial resolution area `Δr²` is derived from the effective
/// pixel pitches (after binning).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResolutionConvention {
    /// `Δr² = 2·√(v_x·v_y)` with per-axis variances `v = pitch²/12` —
    /// the area-equivalent form, `pitch_x·pitch_y/6` for bare pixels.
    /// Anisotropic binning then cancels exactly in `M·SNR²`, which is what
    /// keeps the measured plateau flat across bin factors.
    GeometricArea,
    /// `Δr² = v_x + v_y` — the literal total variance,
    /// `(pitch_x² + pitch_y²)/12` for bare pixels.  Penalizes anisotropy.
    AxisVariance,
}

/// `Δr²` for effective pixels of the given pitches, optionally folding in
/// the spot blur (isotropic: half the total spot variance per axis).
pub fn resolution_area_sq(
    pitch_x: f64,
    pitch_y: f64,
    convention: ResolutionConvention,
    blur: Option<&Psf>,
) -> Result<f64> {
    let spot = match blur {
        Some(psf) => psf.total_variance()? / 2.0,
        None => 0.0,
    };
    let vx = pitch_x * pitch_x / 12.0 + spot;
    let vy = pitch_y * pitch_y / 12.0 + spot;
    Ok(match convention {
        ResolutionConvention::GeometricArea => 2.0 * (vx * vy).sqrt(),
        ResolutionConvention::AxisVariance => vx + vy,
    })
}

/// Uniform-illumination experiment: geometry, flux, and noise model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub width: usize,
    pub height: usize,
    pub n_frames: usize,
    /// Mean photon count per pixel per frame.
    pub mean_counts: f64,
    /// Pixel pitch (isotropic), in length units.
    pub pixel_pitch: f64,
    /// RNG seed; every (frame, pixel) draw derives its own stream from it.
    pub seed: u64,
    /// Charge-sharing spot; `None` or `UniformPixel` disables sharing.
    #[serde(default)]
    pub sharing: Option<Psf>,
}

impl ExperimentConfig {
    fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.n_frames == 0 {
            return Err(Error::InvalidDetector(format!(
                "empty experiment shape {}×{}×{}",
                self.width, self.height, self.n_frames
            )));
        }
        let cells = self.width as u64 * self.height as u64 * self.n_frames as u64;
        if cells > MAX_CELLS {
            return Err(Error::InvalidDetector(format!(
                "experiment of {cells} cells exceeds the cap of {MAX_CELLS}"
            )));
        }
        if !(self.mean_counts.is_finite() && self.mean_counts > 0.0) {
            return Err(Error::InvalidDetector(format!(
                "mean_counts must be positive and finite, got {}",
                self.mean_counts
            )));
        }
        if !(self.pixel_pitch.is_finite() && self.pixel_pitch > 0.0) {
            return Err(Error::InvalidDetector(format!(
                "pixel_pitch must be positive and finite, got {}",
                self.pixel_pitch
            )));
        }
        if let Some(psf) = &self.sharing {
            psf.validate()?;
        }
        Ok(())
    }
}

/// Draw the Poisson frame stack for a uniform-illumination experiment.
///
/// Each (frame, pixel) pair samples from its own RNG stream, so the result
/// is a pure function of `(seed, shape, mean_counts)` — independent of
/// thread count and evaluation order.  Charge sharing, when enabled, then
/// hops each photon to a neighbor with kernel probabilities (streams offset
/// past the generation range; periodic wrap at the detector edges).
pub fn simulate_frames(config: &ExperimentConfig) -> Result<FrameStack> {
    config.validate()?;
    let npix = config.width * config.height;
    let poisson = Poisson::new(config.mean_counts)
        .map_err(|e| Error::InvalidDetector(format!("invalid Poisson rate: {e}")))?;

    let mut counts = vec![0u64; npix * config.n_frames];
    counts
        .par_chunks_mut(npix)
        .enumerate()
        .for_each(|(frame, chunk)| {
            for (pixel, slot) in chunk.iter_mut().enumerate() {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                rng.set_stream((frame * npix + pixel) as u64);
                *slot = poisson.sample(&mut rng) as u64;
            }
        });

    let stack = FrameStack::new(
        config.width,
        config.height,
        config.pixel_pitch,
        config.pixel_pitch,
        config.n_frames,
        counts,
    )?;
    match &config.sharing {
        None | Some(Psf::UniformPixel) => Ok(stack),
        Some(psf) => apply_charge_sharing(&stack, psf, config.seed),
    }
}

/// Kernel of per-pixel hop probabilities derived from a spot shape, as
/// (dx, dy, weight) triples summing to one.
fn sharing_kernel(psf: &Psf, pitch_x: f64, pitch_y: f64) -> Result<Vec<(i32, i32, f64)>> {
    psf.validate()?;
    let weight_at = |x: f64, y: f64| -> Result<f64> {
        Ok(match psf {
            Psf::UniformPixel => {
                if x == 0.0 && y == 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Psf::Gaussian { sigma } => (-(x * x + y * y) / (2.0 * sigma * sigma)).exp(),
            Psf::Epanechnikov { radius } => {
                (1.0 - (x * x + y * y) / (radius * radius)).max(0.0)
            }
            Psf::Tabulated { field } => {
                let hw = field.extent();
                if x.abs() >= hw || y.abs() >= hw {
                    0.0
                } else {
                    // Nearest-node lookup of the tabulated intensity.
                    let n = field.samples_per_axis();
                    let h = 2.0 * hw / n as f64;
                    let ix = (((x + hw) / h) as usize).min(n - 1);
                    let iy = (((y + hw) / h) as usize).min(n - 1);
                    field.values()[ix * n + iy].re.max(0.0)
                }
            }
        })
    };
    let reach = match psf {
        Psf::UniformPixel => 0.0,
        Psf::Gaussian { sigma } => 4.0 * sigma,
        Psf::Epanechnikov { radius } => *radius,
        Psf::Tabulated { field } => field.extent(),
    };
    let kx = (reach / pitch_x).ceil() as i32;
    let ky = (reach / pitch_y).ceil() as i32;
    let mut kernel = Vec::new();
    let mut total = 0.0;
    for dx in -kx..=kx {
        for dy in -ky..=ky {
            let w = weight_at(dx as f64 * pitch_x, dy as f64 * pitch_y)?;
            if w > 0.0 {
                kernel.push((dx, dy, w));
                total += w;
            }
        }
    }
    if !(total > 0.0) {
        return Err(Error::InvalidDetector(
            "sharing kernel has no support on the pixel lattice".into(),
        ));
    }
    for entry in &mut kernel {
        entry.2 /= total;
    }
    Ok(kernel)
}

/// Redistribute every photon independently according to the sharing kernel
/// (multinomial split per source pixel, periodic wrap).  Counts per frame
/// are conserved exactly.
fn apply_charge_sharing(stack: &FrameStack, psf: &Psf, seed: u64) -> Result<FrameStack> {
    let kernel = sharing_kernel(psf, stack.pitch_x, stack.pitch_y)?;
    if kernel.len() == 1 {
        return Ok(stack.clone());
    }
    let npix = stack.pixels_per_frame();
    let (w, h) = (stack.width as i32, stack.height as i32);
    // Streams [n_frames·npix, 2·n_frames·npix) — disjoint from generation.
    let stream_base = (stack.n_frames * npix) as u64;

    let frames: Vec<Vec<u64>> = (0..stack.n_frames)
        .into_par_iter()
        .map(|frame| {
            let src = stack.frame(frame);
            let mut dst = vec![0u64; npix];
            for (pixel, &count) in src.iter().enumerate() {
                if count == 0 {
                    continue;
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(stream_base + (frame * npix + pixel) as u64);
                let row = (pixel / stack.width) as i32;
                let col = (pixel % stack.width) as i32;
                let mut remaining = count;
                let mut remaining_w = 1.0f64;
                for (k, (dx, dy, weight)) in kernel.iter().enumerate() {
                    let take = if k + 1 == kernel.len() || remaining_w <= 0.0 {
                        remaining
                    } else {
                        let p = (weight / remaining_w).clamp(0.0, 1.0);
                        Binomial::new(remaining, p)
                            .expect("probability clamped to [0, 1]")
                            .sample(&mut rng)
                    };
                    if take > 0 {
                        let target_col = (col + dx).rem_euclid(w);
                        let target_row = (row + dy).rem_euclid(h);
                        dst[(target_row * w + target_col) as usize] += take;
                    }
                    remaining -= take;
                    remaining_w -= weight;
                    if remaining == 0 {
                        break;
                    }
                }
            }
            dst
        })
        .collect();

    let mut counts = Vec::with_capacity(npix * stack.n_frames);
    for frame in frames {
        counts.extend(frame);
    }
    FrameStack::new(stack.width, stack.height, stack.pitch_x, stack.pitch_y, stack.n_frames, counts)
}

/// Aggregate statistics of one analysis cell (a binned/bunched stack).
#[derive(Debug, Clone, Serialize)]
pub struct Q2Row {
    /// Pixel bin factors applied along x and y.
    pub bin_x: usize,
    pub bin_y: usize,
    /// Frame bunch factor applied.
    pub bunch: usize,
    /// Number of spatial resolution cells, `M = area/Δr²`.
    pub m_eff: f64,
    /// Mean total photons per (bunched) frame — the absolute `n̄`.
    pub n_mean_abs: f64,
    /// `n̄` relative to the reference frame total `n̄₀`.
    pub n_mean_rel: f64,
    /// Pooled squared mean-to-noise ratio per effective pixel.
    pub snr_sq: f64,
    /// `Q₂² = (1/2π)·M·SNR²/(n̄ + 1/2)`.
    pub q2: f64,
}

/// Temporal statistics of a stack: pooled per-pixel mean and variance.
fn pooled_stats(stack: &FrameStack) -> Result<(f64, f64)> {
    let n = stack.n_frames;
    if n < 2 {
        return Err(Error::DegenerateStatistics(format!(
            "need at least 2 frames for a variance, got {n}"
        )));
    }
    let npix = stack.pixels_per_frame();
    let mut grand_mean = 0.0;
    let mut pooled_var = 0.0;
    for pixel in 0..npix {
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for frame in 0..n {
            let v = stack.counts[frame * npix + pixel] as f64;
            sum += v;
            sum_sq += v * v;
        }
        let mean = sum / n as f64;
        grand_mean += mean;
        pooled_var += (sum_sq - sum * mean).max(0.0) / (n - 1) as f64;
    }
    Ok((grand_mean / npix as f64, pooled_var / npix as f64))
}

/// Evaluate the per-photon information statistic on a (binned, bunched)
/// stack.  `n0_reference` is the absolute frame total used for the
/// relative photon-number axis; `resolution_sq` is the `Δr²` assigned to
/// the effective pixels.
pub fn q2_statistic(
    stack: &FrameStack,
    n0_reference: f64,
    resolution_sq: f64,
    labels: (usize, usize, usize),
) -> Result<Q2Row> {
    let (grand_mean, pooled_var) = pooled_stats(stack)?;
    if pooled_var <= 0.0 {
        return Err(Error::DegenerateStatistics(
            "zero temporal variance; counts are constant".into(),
        ));
    }
    if grand_mean <= 0.0 {
        return Err(Error::DegenerateStatistics("zero mean count".into()));
    }
    let area = stack.width as f64 * stack.pitch_x * stack.height as f64 * stack.pitch_y;
    let m_eff = area / resolution_sq;
    let snr_sq = grand_mean * grand_mean / pooled_var;
    let n_mean_abs = grand_mean * stack.pixels_per_frame() as f64;
    let (bin_x, bin_y, bunch) = labels;
    Ok(Q2Row {
        bin_x,
        bin_y,
        bunch,
        m_eff,
        n_mean_abs,
        n_mean_rel: n_mean_abs / n0_reference,
        snr_sq,
        q2: qd_squared(2, m_eff, snr_sq, n_mean_abs)?,
    })
}

/// The measured `Q₂²` surface over resolution (bin factors) and photon
/// number (bunch factors), with its theory lines.
#[derive(Debug, Clone, Serialize)]
pub struct Q2Surface {
    pub rows: Vec<Q2Row>,
    /// Absolute ceiling `1/C₂ = 9/8`.
    pub inv_c2: f64,
    /// Plateau `1/C[f]` for the detector's spot shape.
    pub inv_cf: f64,
    /// Reference frame total `n̄₀` (mean over the raw stack).
    pub n0_reference: f64,
    pub convention: ResolutionConvention,
}

/// Map out `Q₂²` over every (bin_x, bunch) cell.  Binning is horizontal
/// only (bin_y = 1), matching the synchrotron protocol; `psf` sets the
/// plateau line and, when `blur_aware` is set, widens `Δr²`.
pub fn analyze_stack(
    stack: &FrameStack,
    bins_x: &[usize],
    bunches: &[usize],
    convention: ResolutionConvention,
    psf: &Psf,
    blur_aware: bool,
) -> Result<Q2Surface> {
    let n0_reference = stack.mean_frame_total();
    let cells: Vec<(usize, usize)> = bins_x
        .iter()
        .flat_map(|&b| bunches.iter().map(move |&k| (b, k)))
        .collect();
    let rows: Vec<Q2Row> = cells
        .par_iter()
        .map(|&(bin_x, bunch)| {
            let binned = stack.bin(bin_x, 1)?;
            let bunched = binned.bunch(bunch)?;
            let blur = if blur_aware { Some(psf) } else { None };
            let resolution_sq =
                resolution_area_sq(bunched.pitch_x(), bunched.pitch_y(), convention, blur)?;
            q2_statistic(&bunched, n0_reference, resolution_sq, (bin_x, 1, bunch))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Q2Surface {
        rows,
        inv_c2: 9.0 / 8.0,
        inv_cf: 1.0 / c_functional(psf)?,
        n0_reference,
        convention,
    })
}

const NRU1_MAGIC: &[u8; 4] = b"NRU1";

/// Serialize a stack into the NRU1 container.  Requires isotropic pixel
/// pitch and counts that fit in `u32`.
pub fn write_nru1<W: Write>(stack: &FrameStack, mut out: W) -> Result<()> {
    if stack.pitch_x != stack.pitch_y {
        return Err(Error::Format(format!(
            "container stores one pitch; stack has {} × {}",
            stack.pitch_x, stack.pitch_y
        )));
    }
    for (name, v) in [
        ("width", stack.width),
        ("height", stack.height),
        ("frames", stack.n_frames),
    ] {
        if v > u32::MAX as usize {
            return Err(Error::Format(format!("{name} {v} exceeds u32 range")));
        }
    }
    out.write_all(NRU1_MAGIC)?;
    out.write_all(&(stack.width as u32).to_le_bytes())?;
    out.write_all(&(stack.height as u32).to_le_bytes())?;
    out.write_all(&(stack.n_frames as u32).to_le_bytes())?;
    out.write_all(&stack.pitch_x.to_le_bytes())?;
    let mut buf = Vec::with_capacity(stack.counts.len() * 4);
    for &c in &stack.counts {
        let c32 = u32::try_from(c)
            .map_err(|_| Error::Format(format!("count {c} exceeds u32 range")))?;
        buf.extend_from_slice(&c32.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

/// Read a stack from the NRU1 container.
pub fn read_nru1<R: Read>(mut input: R) -> Result<FrameStack> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != NRU1_MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:02x?}; not an NRU1 container",
            magic
        )));
    }
    let mut u32buf = [0u8; 4];
    let mut read_u32 = |input: &mut R| -> Result<u32> {
        input.read_exact(&mut u32buf)?;
        Ok(u32::from_le_bytes(u32buf))
    };
    let width = read_u32(&mut input)? as usize;
    let height = read_u32(&mut input)? as usize;
    let n_frames = read_u32(&mut input)? as usize;
    let mut f64buf = [0u8; 8];
    input.read_exact(&mut f64buf)?;
    let pitch = f64::from_le_bytes(f64buf);
    let cells = width
        .checked_mul(height)
        .and_then(|v| v.checked_mul(n_frames))
        .ok_or_else(|| Error::Format("stack shape overflows".into()))?;
    if cells as u64 > MAX_CELLS {
        return Err(Error::Format(format!(
            "declared {cells} cells exceed the cap of {MAX_CELLS}"
        )));
    }
    let mut raw = vec![0u8; cells * 4];
    input.read_exact(&mut raw)?;
    let counts: Vec<u64> = raw
        .chunks_exact(4)
        .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as u64)
        .collect();
    FrameStack::new(width, height, pitch, pitch, n_frames, counts)
}

/// Read a single frame from comma-separated rows of counts (blank lines
/// and `#` comments ignored).
pub fn read_csv_frame<R: BufRead>(input: R, pitch: f64) -> Result<FrameStack> {
    let mut rows: Vec<Vec<u64>> = Vec::new();
    for (line_no, line) in input.lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let row: Vec<u64> = text
            .split(',')
            .map(|tok| {
                tok.trim().parse::<u64>().map_err(|e| {
                    Error::Format(format!("line {}: bad count {tok:?}: {e}", line_no + 1))
                })
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Format(format!(
                    "line {}: expected {} columns, got {}",
                    line_no + 1,
                    first.len(),
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    let height = rows.len();
    let width = rows.first().map(|r| r.len()).unwrap_or(0);
    if height == 0 || width == 0 {
        return Err(Error::Format("no counts found".into()));
    }
    FrameStack::new(width, height, pitch, pitch, 1, rows.concat())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    /// Plateau of the ideal pixel detector, `3/π`.
    const PLATEAU_PIXEL: f64 = 0.954_929_658_551_372;
    /// Absolute ceiling `1/C₂ = 9/8`.
    const INV_C2: f64 = 1.125;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            width: 64,
            height: 8,
            n_frames: 128,
            mean_counts: 1000.0,
            pixel_pitch: 1.0,
            seed: 17,
            sharing: None,
        }
    }

    #[test]
    fn bin_and_bunch_conserve_counts_exactly() {
        let stack = simulate_frames(&small_config()).unwrap();
        let total = stack.total_counts();
        let binned = stack.bin(4, 2).unwrap();
        assert_eq!(binned.width(), 16);
        assert_eq!(binned.height(), 4);
        assert_eq!(binned.total_counts(), total);
        assert_relative_eq!(binned.pitch_x(), 4.0, max_relative = 1e-15);
        assert_relative_eq!(binned.pitch_y(), 2.0, max_relative = 1e-15);
        let bunched = binned.bunch(16).unwrap();
        assert_eq!(bunched.n_frames(), 8);
        assert_eq!(bunched.total_counts(), total);
    }

    #[test]
    fn non_divisor_factors_are_rejected() {
        let stack = simulate_frames(&small_config()).unwrap();
        assert!(matches!(
            stack.bin(3, 1),
            Err(Error::NonDivisorFactor { axis: "width", .. })
        ));
        assert!(matches!(
            stack.bin(1, 3),
            Err(Error::NonDivisorFactor { axis: "height", .. })
        ));
        assert!(matches!(
            stack.bunch(7),
            Err(Error::NonDivisorFactor { axis: "frames", .. })
        ));
        assert!(stack.bin(1, 1).is_ok());
    }

    #[test]
    fn binning_a_known_pattern() {
        // 4×2 frame with counts 1..8, binned 2×2 → sums of the quads.
        let stack =
            FrameStack::new(4, 2, 1.0, 1.0, 1, vec![1, 2, 3, 4, 5, 6, 7, 8]).unwrap();
        let binned = stack.bin(2, 2).unwrap();
        assert_eq!(binned.counts(), &[1 + 2 + 5 + 6, 3 + 4 + 7 + 8]);
    }

    #[test]
    fn shape_constants_are_frozen() {
        assert_relative_eq!(
            c_functional(&Psf::UniformPixel).unwrap(),
            std::f64::consts::PI / 3.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            c_functional(&Psf::Gaussian { sigma: 0.3 }).unwrap(),
            1.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            c_functional(&Psf::Epanechnikov { radius: 2.0 }).unwrap(),
            8.0 / 9.0,
            max_relative = 1e-15
        );
        // A tabulated parabolic profile lands on the same constant.
        let field = crate::functionals::epanechnikov(2, 1.0, &[0.0, 0.0], 1.25, 512)
            .unwrap()
            .0;
        let c = c_functional(&Psf::Tabulated { field }).unwrap();
        assert_relative_eq!(c, 8.0 / 9.0, max_relative = 2e-3);
    }

    #[test]
    fn resolution_conventions_match_for_square_pixels() {
        let geo =
            resolution_area_sq(2.0, 2.0, ResolutionConvention::GeometricArea, None).unwrap();
        let axis =
            resolution_area_sq(2.0, 2.0, ResolutionConvention::AxisVariance, None).unwrap();
        assert_relative_eq!(geo, 4.0 / 6.0, max_relative = 1e-15);
        assert_relative_eq!(geo, axis, max_relative = 1e-15);
        // Anisotropic: geometric keeps the area, axis form penalizes.
        let geo_aniso =
            resolution_area_sq(4.0, 1.0, ResolutionConvention::GeometricArea, None).unwrap();
        let axis_aniso =
            resolution_area_sq(4.0, 1.0, ResolutionConvention::AxisVariance, None).unwrap();
        assert_relative_eq!(geo_aniso, 4.0 / 6.0, max_relative = 1e-15);
        assert!(axis_aniso > geo_aniso);
        // Blur widens the area.
        let blurred = resolution_area_sq(
            2.0,
            2.0,
            ResolutionConvention::GeometricArea,
            Some(&Psf::Gaussian { sigma: 1.0 }),
        )
        .unwrap();
        assert_relative_eq!(blurred, 2.0 * (4.0 / 12.0 + 1.0), max_relative = 1e-15);
    }

    #[test]
    fn simulation_is_deterministic_and_seed_sensitive() {
        let config = small_config();
        let a = simulate_frames(&config).unwrap();
        let b = simulate_frames(&config).unwrap();
        assert_eq!(a, b);
        let mut other = config;
        other.seed = 18;
        assert_ne!(simulate_frames(&other).unwrap(), a);
    }

    #[test]
    fn simulated_counts_follow_the_poisson_law() {
        let config = small_config();
        let stack = simulate_frames(&config).unwrap();
        let (mean, var) = pooled_stats(&stack).unwrap();
        // SE(mean) = √(λ/N) ≈ 0.12 at λ=1000, N=64·8·128.
        assert_abs_diff_eq!(mean, config.mean_counts, epsilon = 0.6);
        // Poisson: variance equals the mean; pooled SE ≈ 0.6%.
        assert_relative_eq!(var, config.mean_counts, max_relative = 0.03);
    }

    #[test]
    fn q2_statistic_on_a_constructed_stack_is_exact() {
        // Two frames, constant 90 and 110 per pixel: per-pixel mean 100,
        // sample variance 200 → SNR² = 50. 8×8 pixels of unit pitch:
        // Δr² = 1/6, M = 384, n̄ = 6400.
        let npix = 64;
        let mut counts = vec![90u64; npix];
        counts.extend(vec![110u64; npix]);
        let stack = FrameStack::new(8, 8, 1.0, 1.0, 2, counts).unwrap();
        let resolution =
            resolution_area_sq(1.0, 1.0, ResolutionConvention::GeometricArea, None).unwrap();
        let row = q2_statistic(&stack, 6400.0, resolution, (1, 1, 1)).unwrap();
        assert_relative_eq!(row.snr_sq, 50.0, max_relative = 1e-12);
        assert_relative_eq!(row.m_eff, 384.0, max_relative = 1e-12);
        assert_relative_eq!(row.n_mean_abs, 6400.0, max_relative = 1e-12);
        assert_relative_eq!(row.n_mean_rel, 1.0, max_relative = 1e-12);
        let expected =
            384.0 * 50.0 / (2.0 * std::f64::consts::PI * 6400.5);
        assert_relative_eq!(row.q2, expected, max_relative = 1e-12);
    }

    #[test]
    fn degenerate_stacks_are_rejected() {
        let one_frame = FrameStack::new(2, 2, 1.0, 1.0, 1, vec![5; 4]).unwrap();
        assert!(matches!(
            q2_statistic(&one_frame, 1.0, 1.0, (1, 1, 1)),
            Err(Error::DegenerateStatistics(_))
        ));
        let constant = FrameStack::new(2, 2, 1.0, 1.0, 3, vec![5; 12]).unwrap();
        assert!(matches!(
            q2_statistic(&constant, 1.0, 1.0, (1, 1, 1)),
            Err(Error::DegenerateStatistics(_))
        ));
    }

    #[test]
    fn q2_surface_plateaus_at_the_pixel_value() {
        let stack = simulate_frames(&small_config()).unwrap();
        let surface = analyze_stack(
            &stack,
            &[1, 2, 4],
            &[1, 2],
            ResolutionConvention::GeometricArea,
            &Psf::UniformPixel,
            false,
        )
        .unwrap();
        assert_eq!(surface.rows.len(), 6);
        assert_relative_eq!(surface.inv_cf, 1.0 / (std::f64::consts::PI / 3.0), max_relative = 1e-15);
        for row in &surface.rows {
            // Worst statistical error across these cells is ~1.6% (1σ).
            assert_relative_eq!(row.q2, PLATEAU_PIXEL, max_relative = 0.07);
            assert!(
                row.q2 < INV_C2,
                "ceiling violated at bin={} bunch={}: {}",
                row.bin_x,
                row.bunch,
                row.q2
            );
        }
        // n̄ bookkeeping: bunching multiplies the absolute photon number.
        let base = surface.rows.iter().find(|r| r.bin_x == 1 && r.bunch == 1).unwrap();
        let bunched = surface.rows.iter().find(|r| r.bin_x == 1 && r.bunch == 2).unwrap();
        assert_relative_eq!(
            bunched.n_mean_abs,
            2.0 * base.n_mean_abs,
            max_relative = 1e-12
        );
        assert_relative_eq!(base.n_mean_rel, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn charge_sharing_conserves_counts_and_statistics() {
        let mut config = small_config();
        config.sharing = Some(Psf::Gaussian { sigma: 0.8 });
        let blurred = simulate_frames(&config).unwrap();

        let mut plain_config = config.clone();
        plain_config.sharing = None;
        let plain = simulate_frames(&plain_config).unwrap();

        // Same photons, different places: totals match frame by frame.
        for f in 0..plain.n_frames() {
            assert_eq!(
                plain.frame(f).iter().sum::<u64>(),
                blurred.frame(f).iter().sum::<u64>(),
                "frame {f} total changed"
            );
        }
        assert_ne!(plain, blurred);

        // Uniform flux + independent displacement ⇒ still iid Poisson:
        // the plateau is unchanged by the blur.
        let surface = analyze_stack(
            &blurred,
            &[1, 2, 4],
            &[1, 2],
            ResolutionConvention::GeometricArea,
            &Psf::UniformPixel,
            false,
        )
        .unwrap();
        for row in &surface.rows {
            assert_relative_eq!(row.q2, PLATEAU_PIXEL, max_relative = 0.07);
            assert!(row.q2 < INV_C2);
        }
    }

    #[test]
    fn charge_sharing_is_deterministic() {
        let mut config = small_config();
        config.width = 16;
        config.n_frames = 8;
        config.sharing = Some(Psf::Epanechnikov { radius: 1.5 });
        let a = simulate_frames(&config).unwrap();
        let b = simulate_frames(&config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn nru1_roundtrip_preserves_everything() {
        let stack = simulate_frames(&small_config()).unwrap();
        let mut buf = Vec::new();
        write_nru1(&stack, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"NRU1");
        let back = read_nru1(buf.as_slice()).unwrap();
        assert_eq!(stack, back);
    }

    #[test]
    fn nru1_rejects_bad_input() {
        // Anisotropic pitch cannot be stored.
        let aniso = FrameStack::new(2, 2, 1.0, 2.0, 2, vec![0; 8]).unwrap();
        assert!(matches!(write_nru1(&aniso, Vec::new()), Err(Error::Format(_))));
        // Counts beyond u32.
        let big = FrameStack::new(1, 1, 1.0, 1.0, 2, vec![u64::MAX, 0]).unwrap();
        assert!(matches!(write_nru1(&big, Vec::new()), Err(Error::Format(_))));
        // Bad magic.
        assert!(matches!(
            read_nru1(&b"XXXX\0\0\0\0"[..]),
            Err(Error::Format(_))
        ));
        // Truncated payload.
        let stack = FrameStack::new(2, 2, 1.0, 1.0, 2, vec![1; 8]).unwrap();
        let mut buf = Vec::new();
        write_nru1(&stack, &mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(read_nru1(buf.as_slice()).is_err());
    }

    #[test]
    fn csv_frame_ingestion() {
        let text = "# comment line\n1, 2, 3\n4,5,6\n\n";
        let stack = read_csv_frame(text.as_bytes(), 0.1).unwrap();
        assert_eq!(stack.width(), 3);
        assert_eq!(stack.height(), 2);
        assert_eq!(stack.counts(), &[1, 2, 3, 4, 5, 6]);
        assert_relative_eq!(stack.pitch_x(), 0.1, max_relative = 1e-15);

        assert!(matches!(
            read_csv_frame("1,2\n3".as_bytes(), 1.0),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            read_csv_frame("1,x".as_bytes(), 1.0),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            read_csv_frame("".as_bytes(), 1.0),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn experiment_config_serde_roundtrip() {
        let config = ExperimentConfig {
            width: 256,
            height: 8,
            n_frames: 1024,
            mean_counts: 1e4,
            pixel_pitch: 0.01,
            seed: 42,
            sharing: Some(Psf::Gaussian { sigma: 0.005 }),
        };
        let text = serde_json::to_string(&config).unwrap();
        assert!(text.contains("\"psf\":\"gaussian\""), "schema drift: {text}");
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back.width, 256);
        assert!(matches!(back.sharing, Some(Psf::Gaussian { .. })));
        // `sharing` defaults to none when absent.
        let bare: ExperimentConfig = serde_json::from_str(
            r#"{"width":4,"height":4,"n_frames":8,"mean_counts":10.0,"pixel_pitch":1.0,"seed":1}"#,
        )
        .unwrap();
        assert!(bare.sharing.is_none());
    }

    #[test]
    fn config_validation_rejects_bad_shapes() {
        let mut config = small_config();
        config.width = 0;
        assert!(simulate_frames(&config).is_err());
        let mut config = small_config();
        config.mean_counts = -1.0;
        assert!(simulate_frames(&config).is_err());
        let mut config = small_config();
        config.n_frames = 1 << 24;
        assert!(simulate_frames(&config).is_err()); // cell cap
    }
}
