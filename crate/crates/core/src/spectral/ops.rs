use num_complex::Complex64;

use super::{Field, Grid, VectorField};
use crate::{Error, Result};

/// Relative size of the zero mode tolerated by negative fractional powers.
const MEAN_TOLERANCE: f64 = 1e-10;

/// `Λ^{2δ} f = (-Δ)^δ f`, the Fourier multiplier `|k|^{2δ}`.
///
/// The zero mode is mapped to 0 for `delta != 0`. Negative powers require a
/// mean-free input.
pub fn fractional_laplacian(f: &Field, delta: f64) -> Result<Field> {
    if !delta.is_finite() {
        return Err(Error::InvalidArgument {
            name: "delta",
            reason: format!("must be finite, got {delta}"),
        });
    }
    if delta == 0.0 {
        return Ok(f.clone());
    }
    if delta < 0.0 {
        let grid = f.grid();
        let mean_l2 = f.mean().abs() * grid.volume().sqrt();
        let norm = sobolev_norm(f, 0.0);
        if mean_l2 > MEAN_TOLERANCE * norm {
            return Err(Error::NegativePowerOnNonzeroMean { mean: f.mean(), norm });
        }
    }
    let ksq = f.grid().ksq();
    Ok(f.apply_symbol(|i| if i == 0 { 0.0 } else { ksq[i].powf(delta) }))
}

/// Spectral partial derivative along `axis`.
pub fn partial(f: &Field, axis: usize) -> Field {
    let kd = f.grid().kd(axis);
    f.map_modes(|i, c| Complex64::new(-c.im, c.re) * kd[i])
}

pub fn gradient(f: &Field) -> VectorField {
    let comps = (0..f.grid().dim()).map(|a| partial(f, a)).collect();
    VectorField::new(comps).expect("one component per axis")
}

pub fn laplacian(f: &Field) -> Field {
    let ksq = f.grid().ksq();
    f.apply_symbol(|i| -ksq[i])
}

pub fn divergence(v: &VectorField) -> Field {
    let grid = v.grid();
    let mut out = vec![Complex64::default(); grid.spectral_len()];
    for (axis, comp) in v.components().iter().enumerate() {
        let kd = grid.kd(axis);
        for ((o, c), k) in out.iter_mut().zip(comp.spectral()).zip(kd) {
            *o += Complex64::new(-c.im, c.re) * *k;
        }
    }
    Field::spectral_unchecked(grid, out)
}

/// Leray projection onto divergence-free fields, `v̂ − k (k·v̂)/|k|²` per mode.
pub fn leray_project(v: &VectorField) -> VectorField {
    let grid = v.grid();
    let mut comps: Vec<Vec<Complex64>> = v.components().iter().map(|c| c.spectral().to_vec()).collect();
    project_in_place(grid, &mut comps);
    let fields = comps
        .into_iter()
        .map(|c| Field::spectral_unchecked(grid, c))
        .collect();
    VectorField::new(fields).expect("same shape as input")
}

/// Projection on raw coefficient arrays. Modes whose derivative wavevector
/// vanishes (zero mode, pure Nyquist) pass through unchanged.
pub(crate) fn project_in_place(grid: &Grid, comps: &mut [Vec<Complex64>]) {
    let d = grid.dim();
    let kd: Vec<&[f64]> = (0..d).map(|a| grid.kd(a)).collect();
    for idx in 0..grid.spectral_len() {
        let mut k2 = 0.0;
        let mut kv = Complex64::default();
        for a in 0..d {
            k2 += kd[a][idx] * kd[a][idx];
            kv += comps[a][idx] * kd[a][idx];
        }
        if k2 == 0.0 {
            continue;
        }
        let r = kv / k2;
        for a in 0..d {
            comps[a][idx] -= r * kd[a][idx];
        }
    }
}

/// Homogeneous Sobolev norm `‖Λ^s f‖_{L²}`.
///
/// `s = 0` is the full L² norm (zero mode included); every other order
/// excludes the zero mode.
pub fn sobolev_norm(f: &Field, s: f64) -> f64 {
    let grid = f.grid();
    let ksq = grid.ksq();
    let coeffs = f.spectral();
    let mut sum = 0.0;
    if s == 0.0 {
        for (i, c) in coeffs.iter().enumerate() {
            sum += grid.weight(i) * c.norm_sqr();
        }
    } else {
        for (i, c) in coeffs.iter().enumerate().skip(1) {
            sum += grid.weight(i) * ksq[i].powf(s) * c.norm_sqr();
        }
    }
    (sum * grid.parseval_factor()).sqrt()
}

/// `∫ f g dx` computed from the coefficients.
pub fn inner_product(f: &Field, g: &Field) -> Result<f64> {
    if f.grid() != g.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = f.grid();
    let sum: f64 = f
        .spectral()
        .iter()
        .zip(g.spectral())
        .enumerate()
        .map(|(i, (a, b))| grid.weight(i) * (a * b.conj()).re)
        .sum();
    Ok(sum * grid.parseval_factor())
}

/// Rectangle-rule `‖f‖_{L^p}`; `p = f64::INFINITY` gives the grid maximum of `|f|`.
pub fn lp_norm(f: &Field, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidArgument {
            name: "p",
            reason: format!("must be >= 1 or infinity, got {p}"),
        });
    }
    let vals = f.values();
    if p.is_infinite() {
        return Ok(vals.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }
    let cell = f.grid().volume() / vals.len() as f64;
    let sum: f64 = if p == 2.0 {
        vals.iter().map(|v| v * v).sum()
    } else {
        vals.iter().map(|v| v.abs().powf(p)).sum()
    };
    Ok((sum * cell).powf(1.0 / p))
}

/// Physical samples on the padded grid of a band-limited coefficient array.
pub(crate) fn pad_to_physical(grid: &Grid, coeffs: &[Complex64]) -> Vec<f64> {
    let fine = grid.padded();
    let scale = (1u32 << grid.dim()) as f64;
    let mut padded = vec![Complex64::default(); fine.spectral_len()];
    for (c, &slot) in coeffs.iter().zip(grid.pad_map()) {
        if slot != usize::MAX {
            padded[slot] = c * scale;
        }
    }
    fine.inverse(&padded)
}

/// Transforms padded-grid samples and truncates back to the coarse modes
/// (Nyquist modes dropped).
pub(crate) fn truncate_from_physical(grid: &Grid, values: &[f64]) -> Vec<Complex64> {
    let fine = grid.padded();
    let scale = 1.0 / (1u32 << grid.dim()) as f64;
    let spec = fine.forward(values);
    grid.pad_map()
        .iter()
        .map(|&slot| {
            if slot == usize::MAX {
                Complex64::default()
            } else {
                spec[slot] * scale
            }
        })
        .collect()
}

/// Pointwise product of two or three fields evaluated on the padded grid
/// (padding factor 2) and truncated back, so no aliasing reaches the
/// retained modes.
pub fn dealiased_product(factors: &[&Field]) -> Result<Field> {
    if !(2..=3).contains(&factors.len()) {
        return Err(Error::InvalidArgument {
            name: "factors",
            reason: format!("expected 2 or 3 factors, got {}", factors.len()),
        });
    }
    let grid = factors[0].grid();
    if factors.iter().any(|f| f.grid() != grid) {
        return Err(Error::GridMismatch);
    }
    let mut acc = pad_to_physical(grid, factors[0].spectral());
    for f in &factors[1..] {
        let other = pad_to_physical(grid, f.spectral());
        for (a, b) in acc.iter_mut().zip(&other) {
            *a *= b;
        }
    }
    Ok(Field::spectral_unchecked(grid, truncate_from_physical(grid, &acc)))
}
