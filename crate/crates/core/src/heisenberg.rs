//! Position–momentum uncertainty extended by the intensity-noise floor.
//!
//! The product `Δr·Δp` of a normalized mode obeys the classical bound
//! `d·ℏ/2`.  Because the intensity–resolution inequality holds on *both*
//! sides of the Fourier transform, the two noise functionals multiply into
//! a second, independent floor: defining the bi-invariant functional
//!
//! ```text
//! SNR₀[u] = C_d^{2/d} (∫|u|²)^{4/d} / (∫|u|⁴ ∫|ũ|⁴)^{1/d},
//! ```
//!
//! the product obeys `Δr·Δp ≥ (d·ℏ/2)·max{1, SNR₀[u]}`.  `SNR₀` is
//! invariant under rescaling of both the height and the width of the mode
//! — it measures only the *shape* — and unlike the classical bound it is
//! unbounded above: low-noise (high-SNR) shapes force the phase-space
//! volume above the classical floor ("anti-squeezing").  Reference points:
//!
//! * Gaussian: `SNR₀ = C_3^{2/3} ≈ 0.876 < 1`, and `Δr·Δp = 3ℏ/2` exactly —
//!   the classical bound stays active and saturated.
//! * Truncated plane wave: `SNR₀ = (3/2)C_3^{2/3} ≈ 1.314 > 1` for every
//!   cube size, yet `Δp = ∞` (the sharp edge); the extended bound is
//!   trivially satisfied but already exceeds the classical one.
//! * Band-limited plane wave ([`band_limited_plane_wave`]): clipping the
//!   spectrum of the cube mode at a zero of its transform tames `Δp` while
//!   keeping `SNR₀ > 1` once two or more lobes are kept — a finite,
//!   explicit family sitting strictly between the classical and extended
//!   floors.  The spectrum must be cut at transform zeros: a cut anywhere
//!   else leaves a jump whose `1/x` position tails make `Δr` infinite.
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::{cd_constant, noise_resolution_value};
use crate::modes::ModeSpec;

/// The extended uncertainty chain for one mode.
///
/// Divergent entries (sharp-edged modes have `Δp = ∞`) serialize to JSON as
/// `null` per the standard float mapping.
#[derive(Debug, Clone, Serialize)]
pub struct HeisenbergReport {
    pub mode: String,
    pub dim: usize,
    pub hbar: f64,
    /// Total spatial spread `Δr`.
    pub delta_r: f64,
    /// Total momentum-fraction spread `Δξ` (may be `+∞`).
    pub delta_xi: f64,
    /// `Δp = 2πℏ·Δξ`.
    pub delta_p: f64,
    /// Shape functional `SNR₀[u]`.
    pub snr0: f64,
    /// True when `SNR₀ > 1`, i.e. the extended floor is the active one.
    pub anti_squeezed: bool,
    /// True when `Δp` diverges by analysis.
    pub diverges: bool,
    /// `d·ℏ/2`.
    pub classical_bound: f64,
    /// `(d·ℏ/2)·max{1, SNR₀}`.
    pub extended_bound: f64,
    /// `Δr·Δp`.
    pub product: f64,
    /// `product / extended_bound` (≥ 1 when the inequality holds).
    pub margin: f64,
}

/// The shape functional `SNR₀[u]` for a normalized mode:
/// `C_d^{2/d} / (∫|u|⁴ ∫|ũ|⁴)^{1/d}`.
pub fn snr0(mode: &ModeSpec) -> Result<f64> {
    let dim = mode.dim();
    let l4 = mode.l4()?;
    let l4_xi = mode.momentum()?.l4;
    snr0_from_l4(dim, l4, l4_xi)
}

/// `SNR₀` from the two quartic integrals directly.
pub fn snr0_from_l4(dim: usize, l4_position: f64, l4_frequency: f64) -> Result<f64> {
    let d = dim as f64;
    Ok(cd_constant(dim)?.powf(2.0 / d) / (l4_position * l4_frequency).powf(1.0 / d))
}

/// The position-side noise functional `2∫|u|⁴·(Δr²)^{d/2}` (bounded below
/// by the shape-optimal constant).
pub fn position_noise_resolution(mode: &ModeSpec) -> Result<f64> {
    Ok(noise_resolution_value(mode.dim(), mode.l4()?, mode.width_sq()?))
}

/// The momentum-side noise functional `2∫|ũ|⁴·(Δξ²)^{d/2}`; `+∞` when `Δξ`
/// diverges.  Subject to the same lower bound as the position side.
pub fn dual_noise_resolution(mode: &ModeSpec) -> Result<f64> {
    let momentum = mode.momentum()?;
    if momentum.diverges {
        return Ok(f64::INFINITY);
    }
    Ok(noise_resolution_value(
        mode.dim(),
        momentum.l4,
        momentum.delta_xi * momentum.delta_xi,
    ))
}

/// Evaluate the extended uncertainty chain for a mode.
pub fn extended_heisenberg(mode: &ModeSpec, hbar: f64) -> Result<HeisenbergReport> {
    if !(hbar.is_finite() && hbar > 0.0) {
        return Err(Error::InvalidState(format!(
            "hbar must be positive and finite, got {hbar}"
        )));
    }
    let dim = mode.dim();
    let delta_r = mode.width()?;
    let momentum = mode.momentum()?;
    let snr0 = snr0_from_l4(dim, mode.l4()?, momentum.l4)?;
    let delta_p = momentum.delta_p(hbar);
    let classical_bound = dim as f64 * hbar / 2.0;
    let extended_bound = classical_bound * snr0.max(1.0);
    let product = delta_r * delta_p;
    Ok(HeisenbergReport {
        mode: mode.summary(),
        dim,
        hbar,
        delta_r,
        delta_xi: momentum.delta_xi,
        delta_p,
        snr0,
        anti_squeezed: snr0 > 1.0,
        diverges: momentum.diverges,
        classical_bound,
        extended_bound,
        product,
        margin: product / extended_bound,
    })
}

/// Per-axis ingredients and the assembled chain for the band-limited
/// plane-wave cube.  The mode is separable — three identical band-limited
/// profiles — so every 3-d quantity reduces to the axis quantities:
/// `Δr² = 3·axis_position_variance`, `∫|u|⁴ = axis_l4_position³`, etc.
#[derive(Debug, Clone, Serialize)]
pub struct BandLimitedReport {
    pub side: f64,
    /// Number of transform lobes kept per axis (the spectrum is cut at the
    /// `lobes`-th zero, `ξ = lobes/side`).
    pub lobes: u32,
    /// Fraction of the mode's energy inside the kept band (per axis).
    pub norm_fraction: f64,
    pub axis_position_variance: f64,
    pub axis_frequency_variance: f64,
    pub axis_l4_position: f64,
    pub axis_l4_frequency: f64,
    pub heisenberg: HeisenbergReport,
}

/// Number of Simpson panels per lobe for the spectral integrals.
const PANELS_PER_LOBE: usize = 512;
/// Half-range of the position quadrature, in units of the cube side.
const POSITION_RANGE: f64 = 6.0;
/// Simpson panels for the position quadrature.
const POSITION_PANELS: usize = 2048;

/// Composite Simpson rule over `[0, upper]` with `panels` panels
/// (`panels` even).
fn simpson<F: Fn(f64) -> f64>(upper: f64, panels: usize, f: F) -> f64 {
    debug_assert!(panels % 2 == 0);
    let h = upper / panels as f64;
    let mut sum = f(0.0) + f(upper);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(i as f64 * h);
    }
    sum * h / 3.0
}

/// `sin(πt)/(πt)`, the unit-lobe spectrum of the cube profile.
fn lobe(t: f64) -> f64 {
    let a = std::f64::consts::PI * t;
    if a.abs() < 1e-6 {
        1.0 - a * a / 6.0
    } else {
        a.sin() / a
    }
}

/// d `lobe`/dt.
fn lobe_prime(t: f64) -> f64 {
    let a = std::f64::consts::PI * t;
    if a.abs() < 1e-4 {
        // πt·(−π/3 + π a²/30): series of (cos a − sinc a)/t
        std::f64::consts::PI * (-a / 3.0 + a * a * a / 30.0)
    } else {
        (a.cos() - lobe(t)) / t
    }
}

/// The cube mode of side `side`, spectrally clipped at its `lobes`-th
/// transform zero per axis and renormalized, assembled as a separable 3-d
/// mode.  All quadratures are dimensionless; closed scalings restore
/// `side`.
pub fn band_limited_plane_wave(side: f64, lobes: u32, hbar: f64) -> Result<BandLimitedReport> {
    if !(side.is_finite() && side > 0.0) {
        return Err(Error::InvalidMode(format!(
            "side must be positive and finite, got {side}"
        )));
    }
    if lobes == 0 {
        return Err(Error::InvalidMode(
            "at least one spectral lobe must be kept".into(),
        ));
    }
    if !(hbar.is_finite() && hbar > 0.0) {
        return Err(Error::InvalidState(format!(
            "hbar must be positive and finite, got {hbar}"
        )));
    }
    let m = lobes as f64;
    let panels = PANELS_PER_LOBE * lobes as usize;

    // Spectral integrals over the kept band, in lobe units t = side·ξ.
    let norm = 2.0 * simpson(m, panels, |t| lobe(t).powi(2));
    let q2 = 2.0 * simpson(m, panels, |t| t * t * lobe(t).powi(2));
    let q4 = 2.0 * simpson(m, panels, |t| lobe(t).powi(4));
    let p2 = 2.0 * simpson(m, panels, |t| lobe_prime(t).powi(2));

    // Renormalized position profile (in units y = x/side):
    // G(y) = 2∫₀^m lobe(t)·cos(2πty) dt, with ∫G² dy = norm before the
    // 1/√norm factor.
    let profile = |y: f64| 2.0 * simpson(m, panels, |t| lobe(t) * (2.0 * std::f64::consts::PI * t * y).cos());
    let g4 = 2.0 * simpson(POSITION_RANGE, POSITION_PANELS, |y| profile(y).powi(4));

    // Dimensionless axis quantities, then closed scalings in `side`.
    let axis_frequency_variance = q2 / (norm * side * side);
    let axis_l4_frequency = side * q4 / (norm * norm);
    // Spectrum vanishes at the cut, so the derivative route for the
    // position variance has no boundary term:
    // ∫x²|g|² = ∫|ũ′|²/(4π²·norm).
    let axis_position_variance =
        side * side * p2 / (4.0 * std::f64::consts::PI * std::f64::consts::PI * norm);
    let axis_l4_position = g4 / (norm * norm * side);

    let dim = 3usize;
    let l4_position = axis_l4_position.powi(3);
    let l4_frequency = axis_l4_frequency.powi(3);
    let snr0 = snr0_from_l4(dim, l4_position, l4_frequency)?;
    let delta_r = (3.0 * axis_position_variance).sqrt();
    let delta_xi = (3.0 * axis_frequency_variance).sqrt();
    let delta_p = 2.0 * std::f64::consts::PI * hbar * delta_xi;
    let classical_bound = dim as f64 * hbar / 2.0;
    let extended_bound = classical_bound * snr0.max(1.0);
    let product = delta_r * delta_p;

    Ok(BandLimitedReport {
        side,
        lobes,
        norm_fraction: norm,
        axis_position_variance,
        axis_frequency_variance,
        axis_l4_position,
        axis_l4_frequency,
        heisenberg: HeisenbergReport {
            mode: format!("band_limited_plane_wave(side={side}, lobes={lobes})"),
            dim,
            hbar,
            delta_r,
            delta_xi,
            delta_p,
            snr0,
            anti_squeezed: snr0 > 1.0,
            diverges: false,
            classical_bound,
            extended_bound,
            product,
            margin: product / extended_bound,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::cd_tilde;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    /// `SNR₀` of the truncated plane wave at d=3: `(3/2)·C₃^{2/3}`.
    const SNR0_PLANE_WAVE: f64 = 1.314_453_771_503_355_1;
    /// `SNR₀` of any Gaussian at d=3: `C₃^{2/3}`.
    const SNR0_GAUSSIAN: f64 = 0.876_302_514_335_570_07;
    /// `SNR₀` of the parabolic-amplitude ball at d=3 (radial quadrature).
    const SNR0_EPAN3: f64 = 1.054_460_681_04;
    /// Momentum-side functional of the same mode (radial quadrature).
    const DUAL_EPAN3: f64 = 0.310_845_908_883;
    /// Band-limited cube references at side = 1 (adaptive quadrature):
    /// (lobes, Δr·Δp/ℏ, SNR₀, extended bound/ℏ).
    const BAND_LIMITED_REFS: [(u32, f64, f64, f64); 4] = [
        (1, 1.605_325_125, 0.964_482_860_6, 1.5),
        (2, 2.375_395_401, 1.133_986_24, 1.700_979_36),
        (4, 3.416_289_78, 1.225_421_155, 1.838_131_732),
        (8, 4.866_621_619, 1.270_868_678, 1.906_303_017),
    ];
    /// Axis-level references at lobes = 4, side = 1.
    const M4_AXIS: (f64, f64, f64, f64) = (
        0.079_002_250_8,  // position variance
        0.415_783_923,    // frequency variance
        1.019_226_209,    // ∫|g|⁴ per axis
        0.701_613_766_2,  // ∫|g̃|⁴ per axis
    );

    #[test]
    fn plane_wave_snr0_is_scale_free_and_frozen() {
        for side in [0.3, 1.0, 5.0] {
            let mode = ModeSpec::plane_wave(3, side).unwrap();
            assert_relative_eq!(snr0(&mode).unwrap(), SNR0_PLANE_WAVE, max_relative = 1e-12);
        }
    }

    #[test]
    fn gaussian_snr0_and_exact_saturation() {
        for sigma in [0.2, 1.0, 3.0] {
            let mode = ModeSpec::gaussian(3, sigma).unwrap();
            assert_relative_eq!(snr0(&mode).unwrap(), SNR0_GAUSSIAN, max_relative = 1e-12);
            let report = extended_heisenberg(&mode, 1.0).unwrap();
            // Gaussians saturate the classical bound exactly: Δr·Δp = 3ℏ/2.
            assert_relative_eq!(report.product, 1.5, max_relative = 1e-12);
            assert!(!report.anti_squeezed);
            assert_relative_eq!(report.extended_bound, report.classical_bound, max_relative = 1e-15);
            assert_relative_eq!(report.margin, 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn plane_wave_report_diverges_but_stays_anti_squeezed() {
        let mode = ModeSpec::plane_wave(3, 1.0).unwrap();
        let report = extended_heisenberg(&mode, 1.0).unwrap();
        assert!(report.diverges);
        assert!(report.delta_p.is_infinite());
        assert!(report.product.is_infinite());
        assert!(report.anti_squeezed);
        assert_relative_eq!(report.snr0, SNR0_PLANE_WAVE, max_relative = 1e-12);
        assert_relative_eq!(
            report.extended_bound,
            1.5 * SNR0_PLANE_WAVE,
            max_relative = 1e-12
        );
    }

    #[test]
    fn epanechnikov_amplitude_chain_matches_radial_quadrature() {
        let mode = ModeSpec::epanechnikov_amplitude(3, 1.0).unwrap();
        // SNR₀ needs only the quartic integrals, which the grid nails.
        assert_relative_eq!(snr0(&mode).unwrap(), SNR0_EPAN3, max_relative = 5e-3);
        let report = extended_heisenberg(&mode, 1.0).unwrap();
        assert!(report.anti_squeezed);
        assert!(report.margin >= 1.0, "margin {}", report.margin);

        // The momentum-side functional carries the Δξ truncation deficit —
        // it lands below the quadrature value but never below the bound.
        let dual = dual_noise_resolution(&mode).unwrap();
        assert!(dual > cd_tilde(3).unwrap());
        assert_relative_eq!(dual, DUAL_EPAN3, max_relative = 4e-2);
        let position = position_noise_resolution(&mode).unwrap();
        assert!(position > cd_tilde(3).unwrap());
    }

    #[test]
    fn dual_functional_diverges_for_sharp_edges() {
        let mode = ModeSpec::plane_wave(3, 1.0).unwrap();
        assert!(dual_noise_resolution(&mode).unwrap().is_infinite());
    }

    #[test]
    fn band_limited_chain_matches_adaptive_quadrature_references() {
        for (lobes, product, snr0_ref, extended) in BAND_LIMITED_REFS {
            let report = band_limited_plane_wave(1.0, lobes, 1.0).unwrap();
            let h = &report.heisenberg;
            assert_relative_eq!(h.product, product, max_relative = 1e-5);
            assert_relative_eq!(h.snr0, snr0_ref, max_relative = 1e-5);
            assert_relative_eq!(h.extended_bound, extended, max_relative = 1e-5);
            assert!(h.margin >= 1.0, "lobes={lobes}: margin {}", h.margin);
            assert!(!h.diverges);
        }
    }

    #[test]
    fn band_limited_axis_quantities_at_four_lobes() {
        let report = band_limited_plane_wave(1.0, 4, 1.0).unwrap();
        let (xvar, xivar, l4x, l4xi) = M4_AXIS;
        assert_relative_eq!(report.axis_position_variance, xvar, max_relative = 1e-5);
        assert_relative_eq!(report.axis_frequency_variance, xivar, max_relative = 1e-6);
        assert_relative_eq!(report.axis_l4_position, l4x, max_relative = 1e-5);
        assert_relative_eq!(report.axis_l4_frequency, l4xi, max_relative = 1e-6);
    }

    #[test]
    fn band_limit_boundary_selects_the_active_bound() {
        // One lobe: SNR₀ < 1 → classical bound active.
        let one = band_limited_plane_wave(1.0, 1, 1.0).unwrap().heisenberg;
        assert!(!one.anti_squeezed);
        assert_relative_eq!(one.extended_bound, one.classical_bound, max_relative = 1e-15);
        // Two lobes: SNR₀ > 1 → extended bound active and larger.
        let two = band_limited_plane_wave(1.0, 2, 1.0).unwrap().heisenberg;
        assert!(two.anti_squeezed);
        assert!(two.extended_bound > two.classical_bound);
    }

    #[test]
    fn band_limited_products_are_scale_free() {
        let unit = band_limited_plane_wave(1.0, 2, 1.0).unwrap();
        let third = band_limited_plane_wave(3.0, 2, 1.0).unwrap();
        let u = &unit.heisenberg;
        let t = &third.heisenberg;
        assert_relative_eq!(u.product, t.product, max_relative = 1e-10);
        assert_relative_eq!(u.snr0, t.snr0, max_relative = 1e-10);
        // Dimensional pieces scale: Δr ∝ side, Δξ ∝ 1/side.
        assert_relative_eq!(t.delta_r, 3.0 * u.delta_r, max_relative = 1e-10);
        assert_relative_eq!(t.delta_xi, u.delta_xi / 3.0, max_relative = 1e-10);
        assert_relative_eq!(
            third.axis_l4_position,
            unit.axis_l4_position / 3.0,
            max_relative = 1e-10
        );
    }

    #[test]
    fn band_limited_norm_fraction_grows_toward_one() {
        let mut previous = 0.0;
        for lobes in [1, 2, 4, 8] {
            let kept = band_limited_plane_wave(1.0, lobes, 1.0).unwrap().norm_fraction;
            assert!(kept > previous && kept < 1.0, "lobes={lobes}: {kept}");
            previous = kept;
        }
        assert!(previous > 0.98); // eight lobes hold almost all the energy
    }

    #[test]
    fn more_lobes_widen_the_band_and_the_product() {
        // Keeping more spectrum sharpens position (smaller Δr is *not*
        // guaranteed — the profile approaches the discontinuous cube — but
        // the product and SNR₀ must both grow toward the sharp-edge values.
        let mut last_product = 0.0;
        let mut last_snr0 = 0.0;
        for lobes in [1, 2, 4, 8] {
            let h = band_limited_plane_wave(1.0, lobes, 1.0).unwrap().heisenberg;
            assert!(h.product > last_product);
            assert!(h.snr0 > last_snr0);
            last_product = h.product;
            last_snr0 = h.snr0;
        }
        assert!(last_snr0 < SNR0_PLANE_WAVE); // approaches from below
    }

    #[test]
    fn parameter_validation() {
        assert!(band_limited_plane_wave(0.0, 1, 1.0).is_err());
        assert!(band_limited_plane_wave(1.0, 0, 1.0).is_err());
        assert!(band_limited_plane_wave(1.0, 1, 0.0).is_err());
        let mode = ModeSpec::gaussian(3, 1.0).unwrap();
        assert!(extended_heisenberg(&mode, f64::NAN).is_err());
    }

    #[test]
    fn grid_and_closed_form_snr0_agree_for_gaussians() {
        let g = ModeSpec::gaussian(3, 1.0).unwrap();
        let (extent, n) = g.default_grid();
        let grid_mode = ModeSpec::from_grid(g.sample(extent, n).unwrap()).unwrap();
        assert_relative_eq!(
            snr0(&grid_mode).unwrap(),
            SNR0_GAUSSIAN,
            max_relative = 1e-6
        );
        // Position and momentum functionals are both above the bound.
        let position = position_noise_resolution(&grid_mode).unwrap();
        let dual = dual_noise_resolution(&grid_mode).unwrap();
        let floor = cd_tilde(3).unwrap();
        assert!(position >= floor && dual >= floor);
        assert_abs_diff_eq!(position, dual, epsilon = 1e-4); // self-dual shape
    }
}
