//! Inline specification strings: `name:key=value,key=value` for modes,
//! photon states, densities, and spot shapes, or `@path.json` to load the
//! same object from a file.  Unknown names and stray parameters are
//! rejected so typos fail loudly instead of silently using a default.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nru_core::detector::Psf;
use nru_core::grid::{GridField, Space};
use nru_core::modes::ModeSpec;
use nru_core::photon::PhotonState;
use nru_core::{Error, Result};

/// Parsed `key=value` parameters of one spec string.
struct Params {
    context: &'static str,
    map: BTreeMap<String, String>,
}

impl Params {
    fn parse(context: &'static str, body: Option<&str>) -> Result<Self> {
        let mut map = BTreeMap::new();
        if let Some(body) = body {
            for pair in body.split(',').filter(|p| !p.trim().is_empty()) {
                let (key, value) = pair.split_once('=').ok_or_else(|| {
                    Error::Format(format!(
                        "{context}: expected key=value, got {pair:?}"
                    ))
                })?;
                if map
                    .insert(key.trim().to_string(), value.trim().to_string())
                    .is_some()
                {
                    return Err(Error::Format(format!(
                        "{context}: duplicate parameter {key:?}"
                    )));
                }
            }
        }
        Ok(Self { context, map })
    }

    fn f64(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.map.remove(key) {
            None => Ok(default),
            Some(text) => text.parse().map_err(|e| {
                Error::Format(format!("{}: bad {key}={text:?}: {e}", self.context))
            }),
        }
    }

    fn require_f64(&mut self, key: &str) -> Result<f64> {
        match self.map.remove(key) {
            None => Err(Error::Format(format!(
                "{}: missing required parameter {key}",
                self.context
            ))),
            Some(text) => text.parse().map_err(|e| {
                Error::Format(format!("{}: bad {key}={text:?}: {e}", self.context))
            }),
        }
    }

    fn usize(&mut self, key: &str, default: usize) -> Result<usize> {
        match self.map.remove(key) {
            None => Ok(default),
            Some(text) => text.parse().map_err(|e| {
                Error::Format(format!("{}: bad {key}={text:?}: {e}", self.context))
            }),
        }
    }

    fn u64(&mut self, key: &str, default: u64) -> Result<u64> {
        match self.map.remove(key) {
            None => Ok(default),
            Some(text) => text.parse().map_err(|e| {
                Error::Format(format!("{}: bad {key}={text:?}: {e}", self.context))
            }),
        }
    }

    /// Every recognized key must have been consumed by now.
    fn finish(self) -> Result<()> {
        if let Some(key) = self.map.keys().next() {
            return Err(Error::Format(format!(
                "{}: unknown parameter {key:?}",
                self.context
            )));
        }
        Ok(())
    }
}

fn split_name(spec: &str) -> (&str, Option<&str>) {
    match spec.split_once(':') {
        Some((name, body)) => (name.trim(), Some(body)),
        None => (spec.trim(), None),
    }
}

fn load_json<T: serde::de::DeserializeOwned>(path: &str, what: &str) -> Result<T> {
    let text = fs::read_to_string(Path::new(path))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Format(format!("{what} file {path}: {e}")))
}

/// Mode spec: `plane-wave[:side=..,dim=..,kx=..,ky=..,kz=..]`,
/// `gaussian[:sigma=..,dim=..]`, `epanechnikov[:radius=..,dim=..]`, or
/// `@mode.json`.
pub fn parse_mode(spec: &str) -> Result<ModeSpec> {
    if let Some(path) = spec.strip_prefix('@') {
        return load_json(path, "mode");
    }
    let (name, body) = split_name(spec);
    match name {
        "plane-wave" | "plane_wave" => {
            let mut p = Params::parse("plane-wave", body)?;
            let dim = p.usize("dim", 3)?;
            let side = p.f64("side", 1.0)?;
            let carrier = [p.f64("kx", 0.0)?, p.f64("ky", 0.0)?, p.f64("kz", 0.0)?];
            p.finish()?;
            if carrier.iter().any(|&k| k != 0.0) {
                ModeSpec::plane_wave_with_carrier(dim, side, &carrier[..dim.min(3)])
            } else {
                ModeSpec::plane_wave(dim, side)
            }
        }
        "gaussian" => {
            let mut p = Params::parse("gaussian", body)?;
            let dim = p.usize("dim", 3)?;
            let sigma = p.f64("sigma", 1.0)?;
            p.finish()?;
            ModeSpec::gaussian(dim, sigma)
        }
        "epanechnikov" => {
            let mut p = Params::parse("epanechnikov", body)?;
            let dim = p.usize("dim", 3)?;
            let radius = p.f64("radius", 1.0)?;
            p.finish()?;
            ModeSpec::epanechnikov_amplitude(dim, radius)
        }
        other => Err(Error::Format(format!(
            "unknown mode {other:?}; expected plane-wave, gaussian, epanechnikov, or @file.json"
        ))),
    }
}

/// State spec: `fock[:n=..]`, `vacuum`, `coherent[:alpha_sq=..]`,
/// `generic:mean=..,var=..`, or `@state.json`.
pub fn parse_state(spec: &str) -> Result<PhotonState> {
    if let Some(path) = spec.strip_prefix('@') {
        return load_json(path, "state");
    }
    let (name, body) = split_name(spec);
    match name {
        "fock" => {
            let mut p = Params::parse("fock", body)?;
            let n = p.u64("n", 0)?;
            p.finish()?;
            Ok(PhotonState::fock(n))
        }
        "vacuum" => {
            Params::parse("vacuum", body)?.finish()?;
            Ok(PhotonState::fock(0))
        }
        "coherent" => {
            let mut p = Params::parse("coherent", body)?;
            let alpha_sq = p.f64("alpha_sq", 1.0)?;
            p.finish()?;
            PhotonState::coherent(alpha_sq)
        }
        "generic" => {
            let mut p = Params::parse("generic", body)?;
            let mean = p.require_f64("mean")?;
            let var = p.require_f64("var")?;
            p.finish()?;
            PhotonState::generic(mean, var)
        }
        other => Err(Error::Format(format!(
            "unknown state {other:?}; expected fock, vacuum, coherent, generic, or @file.json"
        ))),
    }
}

/// Spot-shape spec: `uniform-pixel`, `gaussian:sigma=..`,
/// `epanechnikov:radius=..`, or `@profile.json` (tabulated grid).
pub fn parse_psf(spec: &str) -> Result<Psf> {
    if let Some(path) = spec.strip_prefix('@') {
        let field: GridField = load_json(path, "spot profile")?;
        return Ok(Psf::Tabulated { field });
    }
    let (name, body) = split_name(spec);
    match name {
        "uniform-pixel" | "pixel" => {
            Params::parse("uniform-pixel", body)?.finish()?;
            Ok(Psf::UniformPixel)
        }
        "gaussian" => {
            let mut p = Params::parse("gaussian spot", body)?;
            let sigma = p.require_f64("sigma")?;
            p.finish()?;
            Ok(Psf::Gaussian { sigma })
        }
        "epanechnikov" => {
            let mut p = Params::parse("epanechnikov spot", body)?;
            let radius = p.require_f64("radius")?;
            p.finish()?;
            Ok(Psf::Epanechnikov { radius })
        }
        other => Err(Error::Format(format!(
            "unknown spot shape {other:?}; expected uniform-pixel, gaussian, epanechnikov, or @file.json"
        ))),
    }
}

/// A density for the inequality check.
pub enum DensitySpec {
    Epanechnikov { radius: f64 },
    Gaussian { sigma: f64 },
    UniformBall { radius: f64 },
    /// `|u|²` of a mode.
    Mode(ModeSpec),
    /// A tabulated grid loaded from JSON (used as-is).
    Field(GridField),
}

/// Density spec: `epanechnikov[:radius=..]`, `gaussian[:sigma=..]`,
/// `uniform-ball[:radius=..]`, `mode:<mode spec>`, or `@density.json`.
pub fn parse_density(spec: &str) -> Result<DensitySpec> {
    if let Some(path) = spec.strip_prefix('@') {
        let field: GridField = load_json(path, "density")?;
        if field.space() != Space::Position {
            return Err(Error::Format(
                "density grids must be position-space profiles".into(),
            ));
        }
        return Ok(DensitySpec::Field(field));
    }
    if let Some(rest) = spec.strip_prefix("mode:") {
        return Ok(DensitySpec::Mode(parse_mode(rest)?));
    }
    let (name, body) = split_name(spec);
    match name {
        "epanechnikov" => {
            let mut p = Params::parse("epanechnikov density", body)?;
            let radius = p.f64("radius", 1.0)?;
            p.finish()?;
            Ok(DensitySpec::Epanechnikov { radius })
        }
        "gaussian" => {
            let mut p = Params::parse("gaussian density", body)?;
            let sigma = p.f64("sigma", 1.0)?;
            p.finish()?;
            Ok(DensitySpec::Gaussian { sigma })
        }
        "uniform-ball" | "ball" => {
            let mut p = Params::parse("uniform-ball density", body)?;
            let radius = p.f64("radius", 1.0)?;
            p.finish()?;
            Ok(DensitySpec::UniformBall { radius })
        }
        other => Err(Error::Format(format!(
            "unknown density {other:?}; expected epanechnikov, gaussian, uniform-ball, mode:<mode>, or @file.json"
        ))),
    }
}

impl DensitySpec {
    pub fn label(&self) -> String {
        match self {
            DensitySpec::Epanechnikov { radius } => format!("epanechnikov(radius={radius})"),
            DensitySpec::Gaussian { sigma } => format!("gaussian(sigma={sigma})"),
            DensitySpec::UniformBall { radius } => format!("uniform-ball(radius={radius})"),
            DensitySpec::Mode(mode) => format!("|{}|²", mode.summary()),
            DensitySpec::Field(field) => format!(
                "tabulated {}d grid ({} samples/axis)",
                field.dim(),
                field.samples_per_axis()
            ),
        }
    }

    /// Half-extent that comfortably contains the density.
    pub fn default_extent(&self) -> f64 {
        match self {
            DensitySpec::Epanechnikov { radius } | DensitySpec::UniformBall { radius } => {
                1.25 * radius
            }
            DensitySpec::Gaussian { sigma } => 8.0 * sigma,
            DensitySpec::Mode(mode) => mode.default_grid().0,
            DensitySpec::Field(field) => field.extent(),
        }
    }

    /// Sample the density on a `dim`-dimensional grid.  Tabulated grids are
    /// returned as loaded (their own dimension wins).
    pub fn build(&self, dim: usize, extent: f64, n: usize) -> Result<GridField> {
        match self {
            DensitySpec::Epanechnikov { radius } => {
                let center = vec![0.0; dim];
                Ok(nru_core::functionals::epanechnikov(dim, *radius, &center, extent, n)?.0)
            }
            DensitySpec::Gaussian { sigma } => {
                let s2 = 2.0 * sigma * sigma;
                GridField::from_fn(dim, extent, n, |r| {
                    (-r.iter().map(|x| x * x).sum::<f64>() / s2).exp()
                })
            }
            DensitySpec::UniformBall { radius } => {
                let r2 = radius * radius;
                GridField::from_fn(dim, extent, n, |r| {
                    if r.iter().map(|x| x * x).sum::<f64>() <= r2 {
                        1.0
                    } else {
                        0.0
                    }
                })
            }
            DensitySpec::Mode(mode) => {
                if mode.dim() != dim {
                    return Err(Error::Format(format!(
                        "mode is {}-dimensional but --dim is {dim}",
                        mode.dim()
                    )));
                }
                Ok(mode.sample(extent, n)?.abs_sq())
            }
            DensitySpec::Field(field) => Ok(field.clone()),
        }
    }
}

/// Comma-separated positive integers (`"1,2,4"`).
pub fn parse_usize_list(text: &str, what: &str) -> Result<Vec<usize>> {
    let list: Vec<usize> = text
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|e| Error::Format(format!("bad {what} entry {t:?}: {e}")))
        })
        .collect::<Result<_>>()?;
    if list.is_empty() {
        return Err(Error::Format(format!("{what} list is empty")));
    }
    Ok(list)
}
