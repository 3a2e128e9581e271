//! Photon-number statistics and the quantized intensity–resolution products.
//!
//! For a single excited mode `u(r)` the time-averaged variance of the
//! electric energy density is proportional to `∫|u|⁴ dr` with a prefactor
//! fixed by the photon-number statistics of the state.  Writing the vacuum
//! scale as `W₀ = ℏω/4` and one *vacuum variance unit* as
//! `u₀ = ((ℏω)²/8)∫|u|⁴ = 2W₀²∫|u|⁴`, the exact prefactors are
//!
//! * Fock `|n⟩`:       `(ΔI_n)²  = [(n+1/2)² + 3/4]·u₀ = (n² + n + 1)·u₀`,
//! * coherent `|α⟩`:   `(ΔI_α)²  = 2(|α|² + 1/2)·u₀`,
//! * vacuum (`n = 0`): `(ΔI_vac)² = u₀` — intensity noise never vanishes.
//!
//! Both exact results are reproduced by a single affine calibration in the
//! mean `n̄` and variance `v` of the photon number,
//!
//! ```text
//! G(n̄, v) = n̄² + n̄ + 1 + v(1 − n̄),
//! ```
//!
//! with `G(n, 0) = n² + n + 1` and `G(n̄, n̄) = 2n̄ + 1`.  Arbitrary `(n̄, v)`
//! pairs extrapolate through the same formula, clamped at the vacuum floor
//! `G ≥ 1` (strongly super-Poissonian inputs with `n̄ > 1` can push the
//! affine form below the floor, which no physical state reaches).
//!
//! The central object is the dimensionless product
//! `(Δr)^d · (ΔI_ψ)²/W₀² = 2G·∫|u|⁴·(Δr²)^{d/2}`, bounded below by the
//! shape-optimal constant for every mode and state.  Normalizing instead by
//! the mode energy `W_ψ = W₀(2n̄ + 1)` tightens the bound by a
//! statistics-dependent power of `(n̄ + 1/2)` — see [`GammaClass`] — and
//! recasts it as an absolute ceiling on the per-photon information measure
//! `Q_d²` computed by [`qd_squared`].
//!
//! The normally-ordered shortcut for the same variance,
//! `(Δn)²(ℏω/2)²∫|u|⁴`, drops every commutator picked up while ordering and
//! with it the vacuum term: for a pure coherent state the quasi-probability
//! density is a delta function and the shortcut predicts *zero* intensity
//! noise.  [`p_representation_variance`] evaluates that shortcut under both
//! readings of `(Δn)²` and [`paradox_gap`] measures its distance from the
//! exact result — exactly one vacuum variance unit for every coherent
//! state.
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{cd_constant, cd_tilde};
use crate::modes::ModeSpec;

/// Mechanical scales of the mode: `ℏ` and the angular frequency `ω`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FieldUnits {
    pub hbar: f64,
    pub omega: f64,
}

impl FieldUnits {
    pub fn new(hbar: f64, omega: f64) -> Result<Self> {
        for (name, v) in [("hbar", hbar), ("omega", omega)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidState(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(Self { hbar, omega })
    }

    /// Natural units, `ℏ = ω = 1`.
    pub fn natural() -> Self {
        Self { hbar: 1.0, omega: 1.0 }
    }

    /// Vacuum energy of the electric field, `W₀ = ℏω/4`.
    pub fn vacuum_energy(&self) -> f64 {
        self.hbar * self.omega / 4.0
    }

    /// One vacuum variance unit for a mode with the given `∫|u|⁴`:
    /// `u₀ = ((ℏω)²/8)·l4`.
    pub fn variance_unit(&self, l4: f64) -> f64 {
        let hw = self.hbar * self.omega;
        hw * hw / 8.0 * l4
    }
}

/// Photon-energy statistics class, named by the field statistics it
/// produces.  Selects the exponent `γ` and the constant in the
/// energy-normalized bound `C̃_{d,γ}/(n̄ + 1/2)^γ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaClass {
    /// Gaussian field statistics (Fock states): the energy-normalized
    /// product approaches a constant, `γ = 0`, constant `C̃_d/4`.
    Gaussian,
    /// Poissonian statistics (coherent states): `γ = 1`, constant `C̃_d/2`.
    Poissonian,
    /// No statistics assumed: `γ = 2`, constant `C̃_d/4`; valid for every
    /// state, sub-Poissonian included.
    Generic,
}

impl GammaClass {
    /// The exponent `γ` in `C̃_{d,γ}/(n̄ + 1/2)^γ`.
    pub fn exponent(&self) -> u32 {
        match self {
            GammaClass::Gaussian => 0,
            GammaClass::Poissonian => 1,
            GammaClass::Generic => 2,
        }
    }

    /// The constant `C̃_{d,γ}`.
    pub fn tilde_constant(&self, dim: usize) -> Result<f64> {
        let base = cd_tilde(dim)?;
        Ok(match self {
            GammaClass::Gaussian => base / 4.0,
            GammaClass::Poissonian => base / 2.0,
            GammaClass::Generic => base / 4.0,
        })
    }

    /// The lower bound `C̃_{d,γ}/(n̄ + 1/2)^γ` on the energy-normalized
    /// product.
    pub fn bound(&self, dim: usize, n_mean: f64) -> Result<f64> {
        Ok(self.tilde_constant(dim)? / (n_mean + 0.5).powi(self.exponent() as i32))
    }
}

/// Photon-number statistics of the single excited mode.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum PhotonState {
    /// Number eigenstate `|n⟩`.
    Fock { n: u64 },
    /// Coherent state with mean photon number `|α|²`.
    Coherent { alpha_sq: f64 },
    /// Only the mean and variance of the photon number are specified.
    Generic { n_mean: f64, n_var: f64 },
}

impl PhotonState {
    pub fn fock(n: u64) -> Self {
        PhotonState::Fock { n }
    }

    pub fn coherent(alpha_sq: f64) -> Result<Self> {
        if !(alpha_sq.is_finite() && alpha_sq >= 0.0) {
            return Err(Error::InvalidState(format!(
                "coherent |α|² must be non-negative and finite, got {alpha_sq}"
            )));
        }
        Ok(PhotonState::Coherent { alpha_sq })
    }

    pub fn generic(n_mean: f64, n_var: f64) -> Result<Self> {
        for (name, v) in [("mean photon number", n_mean), ("photon-number variance", n_var)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidState(format!(
                    "{name} must be non-negative and finite, got {v}"
                )));
            }
        }
        Ok(PhotonState::Generic { n_mean, n_var })
    }

    /// Mean photon number `n̄`.
    pub fn n_mean(&self) -> f64 {
        match self {
            PhotonState::Fock { n } => *n as f64,
            PhotonState::Coherent { alpha_sq } => *alpha_sq,
            PhotonState::Generic { n_mean, .. } => *n_mean,
        }
    }

    /// Photon-number variance `v`.
    pub fn n_var(&self) -> f64 {
        match self {
            PhotonState::Fock { .. } => 0.0,
            PhotonState::Coherent { alpha_sq } => *alpha_sq,
            PhotonState::Generic { n_var, .. } => *n_var,
        }
    }

    /// The statistics class selecting the strengthened bound.
    pub fn gamma_class(&self) -> GammaClass {
        match self {
            PhotonState::Fock { .. } => GammaClass::Gaussian,
            PhotonState::Coherent { .. } => GammaClass::Poissonian,
            PhotonState::Generic { .. } => GammaClass::Generic,
        }
    }

    /// Intensity-variance prefactor in vacuum units:
    /// `max(G(n̄, v), 1)` with `G = n̄² + n̄ + 1 + v(1 − n̄)`.
    ///
    /// Exact (clamp inactive) for Fock and coherent states; the clamp keeps
    /// extrapolated `(n̄, v)` pairs at or above the vacuum floor.
    pub fn energy_factor(&self) -> f64 {
        let n = self.n_mean();
        let v = self.n_var();
        let g = n * n + n + 1.0 + v * (1.0 - n);
        g.max(1.0)
    }

    /// One-line description used by reports and CLI output.
    pub fn summary(&self) -> String {
        match self {
            PhotonState::Fock { n } => format!("fock(n={n})"),
            PhotonState::Coherent { alpha_sq } => format!("coherent(alpha_sq={alpha_sq})"),
            PhotonState::Generic { n_mean, n_var } => {
                format!("generic(n_mean={n_mean}, n_var={n_var})")
            }
        }
    }
}

/// Exact time-averaged intensity variance of the mode in the given state,
/// `(ΔI_ψ)² = energy_factor · ((ℏω)²/8) ∫|u|⁴`.
pub fn intensity_variance(state: &PhotonState, mode: &ModeSpec, units: &FieldUnits) -> Result<f64> {
    Ok(state.energy_factor() * units.variance_unit(mode.l4()?))
}

/// Intensity variance of the vacuum state: `((ℏω)²/8) ∫|u|⁴`.
pub fn vacuum_variance(mode: &ModeSpec, units: &FieldUnits) -> Result<f64> {
    Ok(units.variance_unit(mode.l4()?))
}

/// Mean electric energy of the mode, `W_ψ = W₀(2n̄ + 1)`.
pub fn mean_energy(state: &PhotonState, units: &FieldUnits) -> f64 {
    units.vacuum_energy() * (2.0 * state.n_mean() + 1.0)
}

/// Everything the noise–resolution product chain yields for one
/// mode/state pair.  All entries are dimensionless.
#[derive(Debug, Clone, Serialize)]
pub struct UncertaintyReport {
    /// Mode description.
    pub mode: String,
    /// State description.
    pub state: String,
    pub dim: usize,
    /// Mean photon number `n̄`.
    pub n_mean: f64,
    /// Spatial factor `(Δr²)^{d/2}`.
    pub delta_r_d: f64,
    /// `(ΔI_ψ)²/W₀² = 2·energy_factor·∫|u|⁴`.
    pub intensity_var_over_w0sq: f64,
    /// The vacuum-normalized product `delta_r_d · intensity_var_over_w0sq`.
    pub product: f64,
    /// Its absolute lower bound `C̃_d`.
    pub bound: f64,
    /// `product / bound` (≥ 1 when the inequality holds).
    pub product_margin: f64,
    /// Statistics class used for the strengthened bound.
    pub gamma_class: GammaClass,
    /// Energy-normalized product `(Δr)^d (ΔI_ψ)²/W_ψ² = product/(2n̄+1)²`.
    pub gamma_product: f64,
    /// Its statistics-aware bound `C̃_{d,γ}/(n̄ + 1/2)^γ`.
    pub gamma_bound: f64,
    /// `gamma_product / gamma_bound` (≥ 1 when the inequality holds).
    pub gamma_margin: f64,
    /// Per-photon information measure
    /// `Q_d² = [d/(4π)]^{d/2} / (gamma_product · (n̄ + 1/2))`.
    pub qd_sq: f64,
    /// Its absolute ceiling `1/C_d`.
    pub qd_bound: f64,
    /// `qd_bound / qd_sq` (≥ 1 when the ceiling holds).
    pub qd_margin: f64,
}

/// Evaluate the full product chain for a mode/state pair.  Unit-free: `ℏω`
/// cancels in every reported ratio.
pub fn noise_resolution_product(mode: &ModeSpec, state: &PhotonState) -> Result<UncertaintyReport> {
    let dim = mode.dim();
    let l4 = mode.l4()?;
    let width_sq = mode.width_sq()?;
    let delta_r_d = width_sq.powf(dim as f64 / 2.0);

    let intensity_var_over_w0sq = 2.0 * state.energy_factor() * l4;
    let product = delta_r_d * intensity_var_over_w0sq;
    let bound = cd_tilde(dim)?;

    let n_mean = state.n_mean();
    let gamma_class = state.gamma_class();
    let energy_ratio_sq = (2.0 * n_mean + 1.0) * (2.0 * n_mean + 1.0);
    let gamma_product = product / energy_ratio_sq;
    let gamma_bound = gamma_class.bound(dim, n_mean)?;

    let qd_sq = (dim as f64 / (4.0 * std::f64::consts::PI)).powf(dim as f64 / 2.0)
        / (gamma_product * (n_mean + 0.5));
    let qd_bound = 1.0 / cd_constant(dim)?;

    Ok(UncertaintyReport {
        mode: mode.summary(),
        state: state.summary(),
        dim,
        n_mean,
        delta_r_d,
        intensity_var_over_w0sq,
        product,
        bound,
        product_margin: product / bound,
        gamma_class,
        gamma_product,
        gamma_bound,
        gamma_margin: gamma_product / gamma_bound,
        qd_sq,
        qd_bound,
        qd_margin: qd_bound / qd_sq,
    })
}

/// The per-photon information measure from aggregate measurement data:
/// `Q_d² = [d/(4π)]^{d/2} · M · SNR² / (n̄ + 1/2)`, where `M` is the number
/// of spatial resolution cells and `SNR²` the squared mean-to-noise ratio.
/// Bounded above by `1/C_d` for every mode shape and photon statistics.
pub fn qd_squared(dim: usize, resolution_cells: f64, snr_sq: f64, n_mean: f64) -> Result<f64> {
    cd_constant(dim)?; // dimension validation
    Ok((dim as f64 / (4.0 * std::f64::consts::PI)).powf(dim as f64 / 2.0) * resolution_cells
        * snr_sq
        / (n_mean + 0.5))
}

/// The vacuum-normalized product re-expressed through spatial averages over
/// a finite cube that contains the mode.  Algebraically identical to the
/// infinite-domain product — the cube volume cancels between the occupied
/// fraction and the relative noise — which is what this report exposes.
#[derive(Debug, Clone, Serialize)]
pub struct FiniteCubeReport {
    pub box_side: f64,
    /// Number of resolution cells, `M_L = L^d/(Δr)^d`.
    pub resolution_cells: f64,
    /// Fraction of the cube occupied by the mode, `(Δr)^d/L^d`.
    pub volume_fraction: f64,
    /// Cube-averaged noise relative to the vacuum mean,
    /// `(ΔĨ_ψ)²/Ĩ₀² = 2·energy_factor·∫|u|⁴·L^d`.
    pub relative_noise: f64,
    /// `volume_fraction · relative_noise` — equals the infinite-domain
    /// product exactly.
    pub product: f64,
    pub bound: f64,
}

/// Evaluate the finite-cube form on a cube of side `box_side`.  The mode
/// support (effective support for Gaussians) must fit inside the cube.
pub fn finite_cube_product(
    mode: &ModeSpec,
    state: &PhotonState,
    box_side: f64,
) -> Result<FiniteCubeReport> {
    if !(box_side.is_finite() && box_side > 0.0) {
        return Err(Error::InvalidState(format!(
            "cube side must be positive and finite, got {box_side}"
        )));
    }
    let halfwidth = mode.support_halfwidth();
    if halfwidth > box_side / 2.0 {
        return Err(Error::SupportExceedsGrid {
            what: "mode support (averaging cube)".into(),
            needed: halfwidth,
            extent: box_side / 2.0,
        });
    }
    let dim = mode.dim();
    let volume = box_side.powi(dim as i32);
    let delta_r_d = mode.width_sq()?.powf(dim as f64 / 2.0);
    let relative_noise = 2.0 * state.energy_factor() * mode.l4()? * volume;
    let volume_fraction = delta_r_d / volume;
    Ok(FiniteCubeReport {
        box_side,
        resolution_cells: volume / delta_r_d,
        volume_fraction,
        relative_noise,
        product: volume_fraction * relative_noise,
        bound: cd_tilde(dim)?,
    })
}

/// Which number to insert for `(Δn)²` in the normally-ordered variance
/// shortcut `(Δn)²(ℏω/2)²∫|u|⁴`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NumberVarianceReading {
    /// Normally-ordered moments throughout:
    /// `⟨a†²a²⟩ − ⟨a†a⟩² = v − n̄`.  Zero for coherent states (the
    /// delta-function quasi-probability density) and *negative* for states
    /// below Poissonian noise — the signature of the dropped commutators.
    NormallyOrdered,
    /// The physical photon-number variance `v`.
    PhotonNumber,
}

/// The normally-ordered variance shortcut.  Reproduces neither exact result
/// at low photon number; see [`paradox_gap`].
pub fn p_representation_variance(
    state: &PhotonState,
    mode: &ModeSpec,
    units: &FieldUnits,
    reading: NumberVarianceReading,
) -> Result<f64> {
    let number_var = match reading {
        NumberVarianceReading::NormallyOrdered => state.n_var() - state.n_mean(),
        NumberVarianceReading::PhotonNumber => state.n_var(),
    };
    let half = units.hbar * units.omega / 2.0;
    Ok(number_var * half * half * mode.l4()?)
}

/// Exact intensity variance minus the shortcut with the physical
/// photon-number variance.  Equals `(energy_factor − 2v)` vacuum units; for
/// every coherent state this is exactly one vacuum variance unit,
/// independent of `|α|²`.
pub fn paradox_gap(state: &PhotonState, mode: &ModeSpec, units: &FieldUnits) -> Result<f64> {
    let exact = intensity_variance(state, mode, units)?;
    let shortcut =
        p_representation_variance(state, mode, units, NumberVarianceReading::PhotonNumber)?;
    Ok(exact - shortcut)
}
