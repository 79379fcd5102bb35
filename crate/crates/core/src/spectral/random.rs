//! Seeded band-limited random fields.
//!
//! Coefficients are drawn for integer wavevectors in a fixed order that does
//! not depend on the grid resolution, so the same seed and band produce the
//! same continuous field on every grid large enough to hold the band.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{leray_project, Field, Grid, VectorField};

/// Random-number stream for field generation.
pub struct FieldRng {
    rng: ChaCha8Rng,
}

impl FieldRng {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Mean-free real field `Σ c_k e^{ik·x}` over `0 < |m| ≤ kmax` (integer
    /// frequencies `m`), with unit-variance complex Gaussian `c_k`.
    ///
    /// Modes beyond the grid's retained band (Nyquist included) are skipped
    /// but still consume their draws.
    pub fn band_limited(&mut self, grid: &Grid, kmax: f64) -> Field {
        let d = grid.dim();
        let kmax_i = kmax.floor() as i64;
        let np = grid.num_points() as f64;
        let half = grid.n() as i64 / 2;
        let mut coeffs = vec![Complex64::default(); grid.spectral_len()];
        let range = -kmax_i..=kmax_i;
        let mut visit = |m: [i64; 3], rng: &mut Self| {
            let norm2: i64 = m.iter().map(|x| x * x).sum();
            if norm2 == 0 || norm2 as f64 > kmax * kmax || !canonical(&m[..d]) {
                return;
            }
            let c = Complex64::new(rng.normal(), rng.normal()) * std::f64::consts::FRAC_1_SQRT_2;
            if m[..d].iter().any(|f| f.abs() >= half) {
                return;
            }
            place(grid, &mut coeffs, &m[..d], c * np);
        };
        for a in range.clone() {
            for b in range.clone() {
                if d == 2 {
                    visit([a, b, 0], self);
                } else {
                    for c in range.clone() {
                        visit([a, b, c], self);
                    }
                }
            }
        }
        Field::spectral_unchecked(grid, coeffs)
    }

    /// Independent band-limited components, Leray-projected.
    pub fn divergence_free(&mut self, grid: &Grid, kmax: f64) -> VectorField {
        let comps = (0..grid.dim()).map(|_| self.band_limited(grid, kmax)).collect();
        leray_project(&VectorField::new(comps).expect("dim components"))
    }
}

/// Representative of the pair `{m, -m}`: last nonzero component positive.
fn canonical(m: &[i64]) -> bool {
    m.iter().rev().find(|&&x| x != 0).is_some_and(|&x| x > 0)
}

/// Stores `c` at `m` and its conjugate at `-m` wherever they fall in the half spectrum.
fn place(grid: &Grid, coeffs: &mut [Complex64], m: &[i64], c: Complex64) {
    if let Some(i) = grid.spectral_index(m) {
        coeffs[i] += c;
    }
    let neg: Vec<i64> = m.iter().map(|x| -x).collect();
    if let Some(i) = grid.spectral_index(&neg) {
        coeffs[i] += c.conj();
    }
}
