//! Periodic-box spectral infrastructure: grids, fields, transforms,
//! multipliers, projection, dealiasing and norms.

mod checkpoint;
mod fft;
mod ops;
pub mod random;

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

pub use checkpoint::{read_field, read_vector_field, write_field, write_vector_field, CheckpointHeader};
pub use ops::{
    dealiased_product, divergence, fractional_laplacian, gradient, inner_product, laplacian,
    leray_project, lp_norm, partial, sobolev_norm,
};
pub(crate) use ops::{pad_to_physical, project_in_place, truncate_from_physical};

use crate::{Error, Result};
use fft::Transform;

/// Isotropic periodic box discretization.
///
/// Cloning is cheap: transform plans and wavenumber tables are shared.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

struct GridInner {
    dim: usize,
    n: usize,
    box_length: f64,
    transform: Transform,
    tables: OnceLock<ModeTables>,
    padded: OnceLock<Grid>,
    pad_map: OnceLock<Vec<usize>>,
}

/// Per-mode wavenumber data over the half-spectrum layout.
struct ModeTables {
    ksq: Vec<f64>,
    /// Derivative wavenumbers per axis; zero on the Nyquist index of that axis.
    kd: Vec<Vec<f64>>,
}

impl Grid {
    /// Builds a `dim`-dimensional box with `n` points per axis and period `box_length`.
    pub fn new(dim: usize, n: usize, box_length: f64) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::InvalidGrid {
                field: "dim",
                reason: format!("must be 2 or 3, got {dim}"),
            });
        }
        if n % 2 != 0 {
            return Err(Error::InvalidGrid {
                field: "n",
                reason: format!("must be even, got {n}"),
            });
        }
        if n < 8 {
            return Err(Error::InvalidGrid {
                field: "n",
                reason: format!("must be at least 8, got {n}"),
            });
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(Error::InvalidGrid {
                field: "box_length",
                reason: format!("must be positive and finite, got {box_length}"),
            });
        }
        Ok(Self {
            inner: Arc::new(GridInner {
                dim,
                n,
                box_length,
                transform: Transform::new(dim, n),
                tables: OnceLock::new(),
                padded: OnceLock::new(),
                pad_map: OnceLock::new(),
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn box_length(&self) -> f64 {
        self.inner.box_length
    }

    /// Grid spacing `h = L / n`.
    pub fn spacing(&self) -> f64 {
        self.inner.box_length / self.inner.n as f64
    }

    /// Lattice spacing in wavenumber space, `2π / L`.
    pub fn k_unit(&self) -> f64 {
        2.0 * PI / self.inner.box_length
    }

    pub fn volume(&self) -> f64 {
        self.inner.box_length.powi(self.inner.dim as i32)
    }

    pub fn num_points(&self) -> usize {
        self.inner.transform.physical_len()
    }

    /// Number of stored spectral coefficients (half spectrum on the last axis).
    pub fn spectral_len(&self) -> usize {
        self.inner.transform.spectral_len()
    }

    pub(crate) fn half(&self) -> usize {
        self.inner.n / 2 + 1
    }

    /// Physical coordinates of the sample with flat index `idx`.
    pub fn coords(&self, idx: usize) -> [f64; 3] {
        let (n, h) = (self.n(), self.spacing());
        let mut out = [0.0; 3];
        let mut rem = idx;
        for axis in (0..self.dim()).rev() {
            out[axis] = (rem % n) as f64 * h;
            rem /= n;
        }
        out
    }

    /// Signed integer frequency per axis of the spectral slot `idx`.
    ///
    /// The Nyquist index of a full axis is reported as `-n/2`.
    pub fn mode_index(&self, idx: usize) -> [i64; 3] {
        let (n, nh) = (self.n(), self.half());
        let mut out = [0i64; 3];
        let d = self.dim();
        out[d - 1] = (idx % nh) as i64;
        let mut rem = idx / nh;
        for axis in (0..d - 1).rev() {
            let j = rem % n;
            rem /= n;
            out[axis] = if j < n / 2 { j as i64 } else { j as i64 - n as i64 };
        }
        out
    }

    /// Spectral slot of a signed frequency, if it is stored in the half spectrum.
    pub fn spectral_index(&self, freq: &[i64]) -> Option<usize> {
        let (n, nh) = (self.n() as i64, self.half());
        let d = self.dim();
        let last = freq[d - 1];
        if last < 0 || last as usize >= nh {
            return None;
        }
        let mut idx = 0usize;
        for &f in &freq[..d - 1] {
            if f < -n / 2 || f >= n / 2 {
                return None;
            }
            idx = idx * n as usize + f.rem_euclid(n) as usize;
        }
        Some(idx * nh + last as usize)
    }

    /// Multiplicity of a half-spectrum slot in full-spectrum sums.
    #[inline]
    pub fn weight(&self, idx: usize) -> f64 {
        let c = idx % self.half();
        if c == 0 || c == self.n() / 2 {
            1.0
        } else {
            2.0
        }
    }

    /// True when any axis sits on its Nyquist index.
    pub fn is_nyquist(&self, idx: usize) -> bool {
        let half = self.n() as i64 / 2;
        self.mode_index(idx)[..self.dim()]
            .iter()
            .any(|&f| f == -half || f == half)
    }

    fn tables(&self) -> &ModeTables {
        self.inner.tables.get_or_init(|| {
            let len = self.spectral_len();
            let (d, half) = (self.dim(), self.n() as i64 / 2);
            let unit = self.k_unit();
            let mut ksq = Vec::with_capacity(len);
            let mut kd = vec![Vec::with_capacity(len); d];
            for idx in 0..len {
                let m = self.mode_index(idx);
                let mut s = 0.0;
                for axis in 0..d {
                    let k = m[axis] as f64 * unit;
                    s += k * k;
                    let deriv = if m[axis].abs() == half { 0.0 } else { k };
                    kd[axis].push(deriv);
                }
                ksq.push(s);
            }
            ModeTables { ksq, kd }
        })
    }

    /// `|k|²` per spectral slot.
    pub fn ksq(&self) -> &[f64] {
        &self.tables().ksq
    }

    /// Derivative wavenumber of `axis` per spectral slot (Nyquist zeroed).
    pub fn kd(&self, axis: usize) -> &[f64] {
        &self.tables().kd[axis]
    }

    /// Grid with twice the resolution on the same box, used for dealiasing.
    pub fn padded(&self) -> &Grid {
        self.inner
            .padded
            .get_or_init(|| Grid::new(self.dim(), 2 * self.n(), self.box_length()).expect("valid"))
    }

    /// Padded-grid slot for each coarse slot; `usize::MAX` for discarded modes.
    pub(crate) fn pad_map(&self) -> &[usize] {
        self.inner.pad_map.get_or_init(|| {
            let fine = self.padded();
            let half = self.n() as i64 / 2;
            (0..self.spectral_len())
                .map(|idx| {
                    let m = self.mode_index(idx);
                    if m[..self.dim()].iter().any(|f| f.abs() >= half) {
                        usize::MAX
                    } else {
                        fine.spectral_index(&m).expect("coarse mode fits the padded grid")
                    }
                })
                .collect()
        })
    }

    pub(crate) fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        self.inner.transform.forward(values)
    }

    pub(crate) fn inverse(&self, spectral: &[Complex64]) -> Vec<f64> {
        self.inner.transform.inverse(spectral)
    }

    /// `L^d / N²`: converts half-spectrum sums of `|f̂|²` into `∫|f|²`.
    pub(crate) fn parseval_factor(&self) -> f64 {
        let np = self.num_points() as f64;
        self.volume() / (np * np)
    }

    /// Restores conjugate symmetry inside the self-conjugate planes.
    pub(crate) fn hermitian_fix(&self, coeffs: &mut [Complex64]) {
        let nh = self.half();
        for idx in 0..coeffs.len() {
            let c = idx % nh;
            if c != 0 && c != self.n() / 2 {
                continue;
            }
            let mut m = self.mode_index(idx);
            for f in m[..self.dim() - 1].iter_mut() {
                *f = if *f == -(self.n() as i64) / 2 { *f } else { -*f };
            }
            let partner = self.spectral_index(&m).expect("partner in the same plane");
            if partner < idx {
                continue;
            }
            let avg = 0.5 * (coeffs[idx] + coeffs[partner].conj());
            coeffs[idx] = avg;
            coeffs[partner] = avg.conj();
        }
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.dim() == other.dim()
                && self.n() == other.n()
                && self.box_length().to_bits() == other.box_length().to_bits())
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim())
            .field("n", &self.n())
            .field("box_length", &self.box_length())
            .finish()
    }
}

/// Real scalar field with lazily paired physical and spectral representations.
#[derive(Clone)]
pub struct Field {
    grid: Grid,
    values: OnceLock<Vec<f64>>,
    spectral: OnceLock<Vec<Complex64>>,
}

impl Field {
    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.num_points() {
            return Err(Error::InvalidArgument {
                name: "values",
                reason: format!("expected {} samples, got {}", grid.num_points(), values.len()),
            });
        }
        Ok(Self {
            grid: grid.clone(),
            values: OnceLock::from(values),
            spectral: OnceLock::new(),
        })
    }

    /// Builds a field from half-spectrum coefficients (unnormalized forward
    /// transform convention). Self-conjugate planes are symmetrized.
    pub fn from_spectral(grid: &Grid, mut coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.spectral_len() {
            return Err(Error::InvalidArgument {
                name: "coeffs",
                reason: format!(
                    "expected {} coefficients, got {}",
                    grid.spectral_len(),
                    coeffs.len()
                ),
            });
        }
        grid.hermitian_fix(&mut coeffs);
        Ok(Self::spectral_unchecked(grid, coeffs))
    }

    pub(crate) fn spectral_unchecked(grid: &Grid, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.spectral_len());
        Self {
            grid: grid.clone(),
            values: OnceLock::new(),
            spectral: OnceLock::from(coeffs),
        }
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.num_points())
            .map(|i| f(&grid.coords(i)[..grid.dim()]))
            .collect();
        Self::from_values(grid, values).expect("length matches grid")
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::spectral_unchecked(grid, vec![Complex64::default(); grid.spectral_len()])
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        let mut coeffs = vec![Complex64::default(); grid.spectral_len()];
        coeffs[0] = Complex64::new(c * grid.num_points() as f64, 0.0);
        Self::spectral_unchecked(grid, coeffs)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        self.values.get_or_init(|| {
            let spec = self.spectral.get().expect("field holds one representation");
            self.grid.inverse(spec)
        })
    }

    pub fn spectral(&self) -> &[Complex64] {
        self.spectral.get_or_init(|| {
            let vals = self.values.get().expect("field holds one representation");
            self.grid.forward(vals)
        })
    }

    pub fn into_spectral(self) -> Vec<Complex64> {
        let _ = self.spectral();
        self.spectral.into_inner().expect("initialized above")
    }

    /// Spatial mean, read off the zero mode.
    pub fn mean(&self) -> f64 {
        self.spectral()[0].re / self.grid.num_points() as f64
    }

    pub fn is_finite(&self) -> bool {
        match (self.values.get(), self.spectral.get()) {
            (_, Some(s)) => s.iter().all(|c| c.re.is_finite() && c.im.is_finite()),
            (Some(v), None) => v.iter().all(|x| x.is_finite()),
            (None, None) => unreachable!("field holds one representation"),
        }
    }

    /// Applies a per-mode map to the coefficients.
    pub fn map_modes(&self, f: impl Fn(usize, Complex64) -> Complex64) -> Field {
        let coeffs = self.spectral().iter().enumerate().map(|(i, &c)| f(i, c)).collect();
        Self::spectral_unchecked(&self.grid, coeffs)
    }

    /// Multiplies every mode by a real symbol.
    pub fn apply_symbol(&self, symbol: impl Fn(usize) -> f64) -> Field {
        self.map_modes(|i, c| c * symbol(i))
    }

    pub fn scale(&self, a: f64) -> Field {
        self.map_modes(|_, c| c * a)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Field, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Field> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let coeffs = self
            .spectral()
            .iter()
            .zip(other.spectral())
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Self::spectral_unchecked(&self.grid, coeffs))
    }

    /// Same field with its mean removed.
    pub fn without_mean(&self) -> Field {
        self.map_modes(|i, c| if i == 0 { Complex64::default() } else { c })
    }
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field").field("grid", &self.grid).finish_non_exhaustive()
    }
}

/// `dim` scalar components on one grid.
#[derive(Clone, Debug)]
pub struct VectorField {
    components: Vec<Field>,
}

impl VectorField {
    pub fn new(components: Vec<Field>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::InvalidArgument {
                name: "components",
                reason: "empty".into(),
            });
        };
        if components.len() != first.grid().dim() {
            return Err(Error::InvalidArgument {
                name: "components",
                reason: format!("expected {} components, got {}", first.grid().dim(), components.len()),
            });
        }
        if components.iter().any(|c| c.grid() != first.grid()) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { components })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self {
            components: (0..grid.dim()).map(|_| Field::zeros(grid)).collect(),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.components[0].grid()
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, i: usize) -> &Field {
        &self.components[i]
    }

    pub fn components(&self) -> &[Field] {
        &self.components
    }

    pub fn into_components(self) -> Vec<Field> {
        self.components
    }

    pub fn map(&self, f: impl Fn(&Field) -> Field) -> VectorField {
        Self {
            components: self.components.iter().map(f).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(Field::is_finite)
    }

    /// `‖v‖_{L²}` over the box.
    pub fn l2_norm(&self) -> f64 {
        self.components
            .iter()
            .map(|c| sobolev_norm(c, 0.0).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}
