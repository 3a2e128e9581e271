//! Numerical laboratory for noise-resolution uncertainty in quantized
//! electromagnetic fields.
//!
//! The central object is the dimensionless noise-resolution functional of a
//! normalized density `f` on `R^d` (`d = 1, 2, 3`),
//!
//! ```text
//! N_d[f] = 2 (∫ f²) (∫ |y - ȳ|² f)^{d/2}  >=  C̃_d,
//! ```
//!
//! which is bounded below by a universal constant `C̃_d` and minimized exactly
//! by the Epanechnikov density `f(y) ∝ (1 - |y - y₀|²/R²)₊`. Applied to the
//! intensity profile `|u|²` of a quantized electromagnetic mode it couples the
//! spatial resolution of the mode to the quantum fluctuations of its
//! intensity: narrower modes fluctuate harder. The crate provides
//!
//! * [`grid`] — sampled scalar fields on centered uniform grids with a
//!   unitary, phase-corrected discrete Fourier transform,
//! * [`functionals`] — the bound constants, density statistics, the
//!   noise-resolution functional and its Epanechnikov minimizer,
//! * [`modes`] — normalized mode profiles (truncated plane wave, Gaussian,
//!   Epanechnikov amplitude, tabulated grid modes) with analytic and grid
//!   evaluation paths, including momentum-space representations,
//! * [`photon`] — photon-counting statistics: intensity variance of Fock,
//!   coherent and generic states, noise-resolution products and their
//!   statistics-dependent bounds, and the normal-ordering (P-representation)
//!   variance paradox,
//! * [`heisenberg`] — the SNR-extended Heisenberg relation
//!   `Δr Δp >= (3ħ/2) max{1, SNR₀[u]}` together with the dual (momentum-side)
//!   noise-resolution functional,
//! * [`detector`] — a simulated photon-counting detector: Poisson frame
//!   generation, binning/bunching, the Q² information-capacity statistic and
//!   its experiment tables, plus NRU1 binary frame-stack I/O.
//!
//! All physical quantities default to natural units `ħ = ω = 1`; the photon
//! routines accept explicit [`photon::FieldUnits`] when real units matter.

pub mod detector;
pub mod error;
pub mod functionals;
pub mod grid;
pub mod heisenberg;
pub mod modes;
pub mod photon;

pub use detector::{
    ExperimentConfig, FrameStack, Psf, Q2Row, Q2Surface, ResolutionConvention,
};
pub use error::{Error, Result};
pub use functionals::DensityStats;
pub use grid::{GridField, Space};
pub use heisenberg::{BandLimitedReport, HeisenbergReport};
pub use modes::{ModeKind, ModeSpec, MomentumRep};
pub use photon::{
    FieldUnits, FiniteCubeReport, GammaClass, NumberVarianceReading, PhotonState,
    UncertaintyReport,
};
