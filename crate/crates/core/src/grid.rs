//! Sampled scalar fields on centered uniform grids.
//!
//! A [`GridField`] holds `N^d` complex samples of a function on the centered
//! cube `[-X, X]^d` (`d = 1, 2, 3`), taken at cell centers
//!
//! ```text
//! x_i = -X + (i + 1/2) · (2X / N),     i = 0 … N-1,
//! ```
//!
//! so integration is the midpoint rule (second order for C² integrands,
//! spectrally accurate for smooth rapidly decaying ones). The discrete
//! Fourier transform follows the convention
//!
//! ```text
//! ũ(ξ) = ∫ u(r) e^{-i 2π ξ·r} dr,
//! ```
//!
//! with phase corrections for the half-cell grid offset so that a centered
//! real even function transforms to a centered real even function. A
//! position-space field of extent `X` transforms to a frequency-space field
//! of extent `N/(4X)` per axis (the Nyquist window for step `2X/N`), and the
//! transform is exactly unitary on the grid: `∫|u|² = ∫|ũ|²` to roundoff.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Hard cap on total samples per field (memory guard): 2^27.
pub const MAX_SAMPLES: u64 = 1 << 27;

/// Which space a field lives in. Fields produced by [`GridField::dft`] are
/// frequency-space; [`GridField::idft`] maps them back.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Space {
    Position,
    Frequency,
}

impl Space {
    fn name(self) -> &'static str {
        match self {
            Space::Position => "position",
            Space::Frequency => "frequency",
        }
    }
}

/// Complex scalar field sampled at the cell centers of a centered cube.
///
/// Real fields (densities, point-spread functions) are stored with zero
/// imaginary parts; [`GridField::integrate`] integrates the real part.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    dim: usize,
    n: usize,
    extent: f64,
    space: Space,
    values: Vec<Complex64>,
}

fn check_params(dim: usize, extent: f64, n: usize) -> Result<()> {
    if !(1..=3).contains(&dim) {
        return Err(Error::UnsupportedDim { dim });
    }
    if n < 2 {
        return Err(Error::InvalidGrid(format!("samples_per_axis {n} < 2")));
    }
    if !(extent > 0.0 && extent.is_finite()) {
        return Err(Error::InvalidGrid(format!("extent {extent} must be finite and > 0")));
    }
    let requested = (n as u128).pow(dim as u32);
    if requested > MAX_SAMPLES as u128 {
        return Err(Error::GridTooLarge { requested, n, dim, cap: MAX_SAMPLES });
    }
    Ok(())
}

impl GridField {
    /// Sample a real-valued generator at the cell centers.
    ///
    /// Rejects non-finite generator output, reporting the offending node's
    /// coordinates.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(
        dim: usize,
        extent: f64,
        n: usize,
        gen: F,
    ) -> Result<Self> {
        Self::from_fn_complex(dim, extent, n, |c| Complex64::new(gen(c), 0.0))
    }

    /// Sample a complex-valued generator at the cell centers.
    pub fn from_fn_complex<F: Fn(&[f64]) -> Complex64>(
        dim: usize,
        extent: f64,
        n: usize,
        gen: F,
    ) -> Result<Self> {
        check_params(dim, extent, n)?;
        let len = n.pow(dim as u32);
        let h = 2.0 * extent / n as f64;
        let coord = |i: usize| -extent + (i as f64 + 0.5) * h;
        let mut values = Vec::with_capacity(len);
        let mut c = [0.0f64; 3];
        for flat in 0..len {
            let mut rem = flat;
            for a in (0..dim).rev() {
                c[a] = coord(rem % n);
                rem /= n;
            }
            let v = gen(&c[..dim]);
            if !v.re.is_finite() || !v.im.is_finite() {
                let coords =
                    c[..dim].iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(", ");
                return Err(Error::NonFiniteSample {
                    value: format!("{v}"),
                    coords,
                    context: "generator",
                });
            }
            values.push(v);
        }
        Ok(GridField { dim, n, extent, space: Space::Position, values })
    }

    /// Wrap existing real samples (row-major, axis 0 slowest).
    pub fn from_real_values(dim: usize, extent: f64, n: usize, values: Vec<f64>) -> Result<Self> {
        let complex: Vec<Complex64> = values.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
        Self::from_complex_values(dim, extent, n, complex)
    }

    /// Wrap existing complex samples (row-major, axis 0 slowest).
    pub fn from_complex_values(
        dim: usize,
        extent: f64,
        n: usize,
        values: Vec<Complex64>,
    ) -> Result<Self> {
        check_params(dim, extent, n)?;
        let len = n.pow(dim as u32);
        if values.len() != len {
            return Err(Error::InvalidGrid(format!(
                "value array has {} samples, grid needs {len}",
                values.len()
            )));
        }
        for (flat, v) in values.iter().enumerate() {
            if !v.re.is_finite() || !v.im.is_finite() {
                let field = GridField { dim, n, extent, space: Space::Position, values: vec![] };
                let coords = field
                    .node(flat)
                    .iter()
                    .map(|x| format!("{x:.6}"))
                    .collect::<Vec<_>>()
                    .join(", ");
                return Err(Error::NonFiniteSample {
                    value: format!("{v}"),
                    coords,
                    context: "value array",
                });
            }
        }
        Ok(GridField { dim, n, extent, space: Space::Position, values })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Samples per axis.
    pub fn samples_per_axis(&self) -> usize {
        self.n
    }

    /// Half-width of the sampled cube.
    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn space(&self) -> Space {
        self.space
    }

    /// Grid step `2X/N` per axis.
    pub fn step(&self) -> f64 {
        2.0 * self.extent / self.n as f64
    }

    /// Volume of one grid cell, `step^d`.
    pub fn cell_volume(&self) -> f64 {
        self.step().powi(self.dim as i32)
    }

    /// Total number of samples.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    /// Coordinate of cell-center `i` along one axis.
    pub fn axis_coord(&self, i: usize) -> f64 {
        -self.extent + (i as f64 + 0.5) * self.step()
    }

    /// Coordinates of the node with the given flat index.
    pub fn node(&self, flat: usize) -> Vec<f64> {
        let mut c = vec![0.0; self.dim];
        let mut rem = flat;
        for a in (0..self.dim).rev() {
            c[a] = self.axis_coord(rem % self.n);
            rem /= self.n;
        }
        c
    }

    /// True when both fields share dim, N, extent and space.
    pub fn same_grid(&self, other: &GridField) -> bool {
        self.dim == other.dim
            && self.n == other.n
            && self.extent == other.extent
            && self.space == other.space
    }

    /// Midpoint-rule integral of the real part: `cell_volume · Σ Re v_i`.
    pub fn integrate(&self) -> f64 {
        self.cell_volume() * self.values.iter().map(|v| v.re).sum::<f64>()
    }

    /// Midpoint-rule integral of the full complex samples.
    pub fn integrate_complex(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() * self.cell_volume()
    }

    /// `∫ |v|²` over the grid.
    pub fn norm_sq(&self) -> f64 {
        self.cell_volume() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }

    /// Pointwise squared magnitude, as a real field on the same grid.
    pub fn abs_sq(&self) -> GridField {
        GridField {
            dim: self.dim,
            n: self.n,
            extent: self.extent,
            space: self.space,
            values: self.values.iter().map(|v| Complex64::new(v.norm_sqr(), 0.0)).collect(),
        }
    }

    /// Largest sample magnitude.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Field multiplied by a complex constant.
    pub fn scaled(&self, factor: Complex64) -> GridField {
        GridField {
            dim: self.dim,
            n: self.n,
            extent: self.extent,
            space: self.space,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// Pointwise sum of two fields on the same grid.
    pub fn try_add(&self, other: &GridField) -> Result<GridField> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch(format!(
                "dim {}x{} N {}x{} extent {}x{} space {}x{}",
                self.dim,
                other.dim,
                self.n,
                other.n,
                self.extent,
                other.extent,
                self.space.name(),
                other.space.name()
            )));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(GridField { dim: self.dim, n: self.n, extent: self.extent, space: self.space, values })
    }

    /// Forward transform `ũ(ξ) = ∫ u(r) e^{-i 2π ξ·r} dr`, position →
    /// frequency. The result has extent `N/(4X)` per axis.
    pub fn dft(&self) -> Result<GridField> {
        if self.space != Space::Position {
            return Err(Error::SpaceMismatch {
                op: "dft",
                expected: "position",
                got: self.space.name(),
            });
        }
        let mut out = self.clone();
        transform(&mut out, Direction::Forward);
        out.extent = self.n as f64 / (4.0 * self.extent);
        out.space = Space::Frequency;
        Ok(out)
    }

    /// Inverse transform `u(r) = ∫ ũ(ξ) e^{+i 2π ξ·r} dξ`, frequency →
    /// position. Exact inverse of [`GridField::dft`] on the grid.
    pub fn idft(&self) -> Result<GridField> {
        if self.space != Space::Frequency {
            return Err(Error::SpaceMismatch {
                op: "idft",
                expected: "frequency",
                got: self.space.name(),
            });
        }
        let mut out = self.clone();
        transform(&mut out, Direction::Inverse);
        out.extent = self.n as f64 / (4.0 * self.extent);
        out.space = Space::Position;
        Ok(out)
    }
}

enum Direction {
    Forward,
    Inverse,
}

/// Separable transform along every axis.
///
/// Per axis, the continuous-transform approximation on half-cell-offset
/// grids factors into phase pre/post multiplications around a standard FFT:
/// with `c = (1-N)/2` and sample step `h`,
///
/// ```text
/// ũ_m = h · e^{-i 2π c (m + c)/N} · Σ_i [u_i e^{-i 2π c i/N}] e^{-i 2π i m/N}.
/// ```
///
/// The inverse direction conjugates the phases, uses the unnormalized inverse
/// FFT and the frequency step `δξ = 1/(Nh)` as quadrature weight; forward
/// followed by inverse is the identity to roundoff.
fn transform(field: &mut GridField, dir: Direction) {
    let n = field.n;
    let dim = field.dim;
    let h = field.step();
    let c = (1.0 - n as f64) / 2.0;
    let sign = match dir {
        Direction::Forward => -1.0,
        Direction::Inverse => 1.0,
    };
    let phase = |t: f64| Complex64::from_polar(1.0, sign * 2.0 * std::f64::consts::PI * t);
    let pre: Vec<Complex64> = (0..n).map(|i| phase(c * i as f64 / n as f64)).collect();
    let post: Vec<Complex64> =
        (0..n).map(|m| phase(c * (m as f64 + c) / n as f64) * h).collect();

    let mut planner = FftPlanner::new();
    let fft = match dir {
        Direction::Forward => planner.plan_fft_forward(n),
        Direction::Inverse => planner.plan_fft_inverse(n),
    };

    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..dim {
        let stride = n.pow((dim - 1 - axis) as u32);
        let outer = field.values.len() / (n * stride);
        for o in 0..outer {
            for s in 0..stride {
                let base = o * n * stride + s;
                for (k, slot) in line.iter_mut().enumerate() {
                    *slot = field.values[base + k * stride] * pre[k];
                }
                fft.process(&mut line);
                for (m, slot) in line.iter().enumerate() {
                    field.values[base + m * stride] = slot * post[m];
                }
            }
        }
    }
}

/// Serialized form: real samples only (row-major), with an optional imaginary
/// array for complex fields. This is the JSON schema the CLI ingests.
#[derive(serde::Serialize, serde::Deserialize)]
struct GridFieldRepr {
    dim: usize,
    extent: f64,
    samples_per_axis: usize,
    #[serde(default = "default_space")]
    space: Space,
    values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values_im: Option<Vec<f64>>,
}

fn default_space() -> Space {
    Space::Position
}

impl serde::Serialize for GridField {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let has_im = self.values.iter().any(|v| v.im != 0.0);
        let repr = GridFieldRepr {
            dim: self.dim,
            extent: self.extent,
            samples_per_axis: self.n,
            space: self.space,
            values: self.values.iter().map(|v| v.re).collect(),
            values_im: has_im.then(|| self.values.iter().map(|v| v.im).collect()),
        };
        repr.serialize(serializer)
    }
}

impl<'de> serde::Deserialize<'de> for GridField {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        let repr = GridFieldRepr::deserialize(deserializer)?;
        let values: Vec<Complex64> = match repr.values_im {
            Some(im) if im.len() == repr.values.len() => repr
                .values
                .iter()
                .zip(&im)
                .map(|(&re, &im)| Complex64::new(re, im))
                .collect(),
            Some(im) => {
                return Err(D::Error::custom(format!(
                    "values_im has {} entries, values has {}",
                    im.len(),
                    repr.values.len()
                )))
            }
            None => repr.values.iter().map(|&re| Complex64::new(re, 0.0)).collect(),
        };
        let mut field =
            GridField::from_complex_values(repr.dim, repr.extent, repr.samples_per_axis, values)
                .map_err(D::Error::custom)?;
        field.space = repr.space;
        Ok(field)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn constant_field_integrates_to_volume() {
        // d=1: ∫ 1 over [-1, 1] = 2
        let f = GridField::from_fn(1, 1.0, 64, |_| 1.0).unwrap();
        assert_abs_diff_eq!(f.integrate(), 2.0, epsilon = 1e-14);
        // d=3: ∫ 1 over [-1, 1]^3 = 8
        let f = GridField::from_fn(3, 1.0, 16, |_| 1.0).unwrap();
        assert_abs_diff_eq!(f.integrate(), 8.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_field_integrates_to_zero() {
        let f = GridField::from_fn(2, 3.0, 32, |_| 0.0).unwrap();
        assert_eq!(f.integrate(), 0.0);
    }

    #[test]
    fn gaussian_integral_2d_matches_closed_form() {
        // ∫ exp(-|r|²/2) over R² = 2π; truncation tail at X=6 is ~2.5e-8.
        let f = GridField::from_fn(2, 6.0, 64, |c| (-(c[0] * c[0] + c[1] * c[1]) / 2.0).exp())
            .unwrap();
        assert_abs_diff_eq!(f.integrate(), 2.0 * std::f64::consts::PI, epsilon = 1e-6);
    }

    #[test]
    fn non_finite_generator_rejected_with_coordinates() {
        let err = GridField::from_fn(2, 1.0, 8, |c| {
            if c[0] > 0.8 && c[1] > 0.8 {
                f64::NAN
            } else {
                1.0
            }
        })
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("non-finite"), "message: {msg}");
        assert!(msg.contains("0.875"), "expected offending coordinate in: {msg}");
    }

    #[test]
    fn sample_cap_enforced() {
        // 2048^3 = 2^33 > 2^27
        let err = GridField::from_fn(3, 1.0, 2048, |_| 1.0).unwrap_err();
        assert!(matches!(err, Error::GridTooLarge { .. }), "got: {err}");
        assert!(err.to_string().contains("2^27"));
    }

    #[test]
    fn midpoint_rule_is_second_order_on_truncated_gaussian() {
        // ∫_{-2}^{2} e^{-x²/2} dx = sqrt(2π) erf(sqrt 2); boundary derivative
        // is nonzero, so midpoint error shrinks ~4x per refinement.
        let exact = 2.392576026645216;
        let err = |n: usize| {
            let f = GridField::from_fn(1, 2.0, n, |c| (-c[0] * c[0] / 2.0).exp()).unwrap();
            (f.integrate() - exact).abs()
        };
        let (e16, e32, e64) = (err(16), err(32), err(64));
        let r1 = e16 / e32;
        let r2 = e32 / e64;
        assert!((3.7..4.3).contains(&r1), "ratio 16→32 = {r1}");
        assert!((3.7..4.3).contains(&r2), "ratio 32→64 = {r2}");
    }

    #[test]
    fn dft_of_grid_delta_has_flat_magnitude() {
        // One cell carrying weight 1/cell_volume integrates to 1 and
        // transforms to unit magnitude at every frequency node.
        let n = 32;
        let mut f = GridField::from_fn(1, 1.0, n, |_| 0.0).unwrap();
        let w = 1.0 / f.cell_volume();
        f.values_mut()[n / 2 - 3] = Complex64::new(w, 0.0);
        let ft = f.dft().unwrap();
        for v in ft.values() {
            assert_abs_diff_eq!(v.norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn dft_self_dual_gaussian() {
        // exp(-π r²) is its own transform under this convention.
        let f = GridField::from_fn(1, 8.0, 256, |c| (-std::f64::consts::PI * c[0] * c[0]).exp())
            .unwrap();
        let ft = f.dft().unwrap();
        assert_eq!(ft.space(), Space::Frequency);
        // frequency extent: N/(4X) = 256/32 = 8
        assert_abs_diff_eq!(ft.extent(), 8.0, epsilon = 1e-14);
        for (m, v) in ft.values().iter().enumerate() {
            let xi = ft.axis_coord(m);
            let expect = (-std::f64::consts::PI * xi * xi).exp();
            assert_abs_diff_eq!(v.re, expect, epsilon = 1e-6);
            assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn dft_self_dual_gaussian_3d() {
        let pi = std::f64::consts::PI;
        let f = GridField::from_fn(3, 4.0, 32, |c| {
            (-pi * c.iter().map(|x| x * x).sum::<f64>()).exp()
        })
        .unwrap();
        let ft = f.dft().unwrap();
        assert_abs_diff_eq!(ft.extent(), 2.0, epsilon = 1e-14);
        let mid = 32usize.pow(2) * 16 + 32 * 16 + 16; // node nearest origin
        let xi = ft.node(mid);
        let expect = (-pi * xi.iter().map(|x| x * x).sum::<f64>()).exp();
        assert_relative_eq!(ft.values()[mid].re, expect, max_relative = 1e-6);
    }

    #[test]
    fn parseval_holds_on_random_smooth_field() {
        // Sum of Gaussian bumps with fixed parameters.
        let f = GridField::from_fn_complex(2, 5.0, 48, |c| {
            let g1 = (-((c[0] - 0.7).powi(2) + (c[1] + 0.3).powi(2))).exp();
            let g2 = (-0.5 * ((c[0] + 1.1).powi(2) + (c[1] - 0.9).powi(2))).exp();
            Complex64::new(g1 + 0.4 * g2, 0.25 * g2)
        })
        .unwrap();
        let ft = f.dft().unwrap();
        assert_relative_eq!(f.norm_sq(), ft.norm_sq(), max_relative = 1e-9);
    }

    #[test]
    fn idft_inverts_dft() {
        let f = GridField::from_fn_complex(1, 3.0, 64, |c| {
            Complex64::new((-c[0] * c[0]).exp(), 0.3 * (-2.0 * c[0].abs()).exp())
        })
        .unwrap();
        let back = f.dft().unwrap().idft().unwrap();
        assert_eq!(back.space(), Space::Position);
        assert_abs_diff_eq!(back.extent(), f.extent(), epsilon = 1e-12);
        for (a, b) in f.values().iter().zip(back.values()) {
            assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-10);
            assert_abs_diff_eq!(a.im, b.im, epsilon = 1e-10);
        }
    }

    #[test]
    fn dft_is_linear() {
        let f = GridField::from_fn(1, 2.0, 32, |c| (-c[0] * c[0]).exp()).unwrap();
        let g = GridField::from_fn(1, 2.0, 32, |c| c[0].cos()).unwrap();
        let a = Complex64::new(1.3, -0.4);
        let combo = f.scaled(a).try_add(&g).unwrap().dft().unwrap();
        let separate = f.dft().unwrap().scaled(a).try_add(&g.dft().unwrap()).unwrap();
        for (x, y) in combo.values().iter().zip(separate.values()) {
            assert_abs_diff_eq!(x.re, y.re, epsilon = 1e-12);
            assert_abs_diff_eq!(x.im, y.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn dft_rejects_frequency_input() {
        let f = GridField::from_fn(1, 1.0, 16, |_| 1.0).unwrap();
        let ft = f.dft().unwrap();
        let err = ft.dft().unwrap_err();
        assert!(matches!(err, Error::SpaceMismatch { .. }), "got: {err}");
        let err = f.idft().unwrap_err();
        assert!(matches!(err, Error::SpaceMismatch { .. }), "got: {err}");
    }

    #[test]
    fn json_roundtrip_preserves_grid() {
        let f = GridField::from_fn(2, 1.5, 8, |c| c[0] + 2.0 * c[1]).unwrap();
        let text = serde_json::to_string(&f).unwrap();
        let back: GridField = serde_json::from_str(&text).unwrap();
        assert!(f.same_grid(&back));
        assert_eq!(f.values(), back.values());
    }
}
