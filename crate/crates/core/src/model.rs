//! Navier–Stokes–Cahn–Hilliard right-hand sides in the shifted variable
//! `φ = ϕ − ω₀`:
//!
//! ```text
//! ∂t u = P(−u·∇u − Δφ ∇φ) + Δu
//! ∂t φ = −u·∇φ − Δ²φ + Δ[(φ + ω₀)³ − φ]
//! ```
//!
//! with the pressure eliminated by the Leray projector `P`. Physical
//! constants default to 1; outside paper mode they scale the corresponding
//! terms of the unshifted model.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::spectral::{
    self, dealiased_product, divergence, laplacian, pad_to_physical, partial, sobolev_norm,
    truncate_from_physical, Field, Grid, VectorField,
};
use crate::{Error, Result};

/// Tolerance on `‖div u‖ / (1 + ‖u‖)` accepted by [`State::new`].
pub const DIVERGENCE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParams {
    /// Background pure phase; `±1` in paper mode.
    pub omega0: f64,
    /// Coefficient of the Laplacian moved from the explicit nonlinearity to
    /// the implicit operator.
    pub kappa: f64,
    pub nu: f64,
    pub mobility: f64,
    pub capillarity: f64,
    pub eps: f64,
    pub zeta: f64,
    /// Pins `omega0 = ±1` and every physical constant to 1.
    pub paper_mode: bool,
    /// Drops convection and Korteweg forcing and linearizes the cubic term
    /// about the pure phase.
    pub linearized: bool,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            omega0: 1.0,
            kappa: 1.0,
            nu: 1.0,
            mobility: 1.0,
            capillarity: 1.0,
            eps: 1.0,
            zeta: 1.0,
            paper_mode: true,
            linearized: false,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("omega0", self.omega0),
            ("kappa", self.kappa),
            ("nu", self.nu),
            ("mobility", self.mobility),
            ("capillarity", self.capillarity),
            ("eps", self.eps),
            ("zeta", self.zeta),
        ];
        for (name, v) in all {
            if !v.is_finite() {
                return Err(Error::InvalidArgument {
                    name,
                    reason: format!("must be finite, got {v}"),
                });
            }
        }
        if self.kappa < 0.0 {
            return Err(Error::InvalidArgument {
                name: "kappa",
                reason: format!("must be >= 0, got {}", self.kappa),
            });
        }
        for (name, v) in &all[2..] {
            if *v <= 0.0 {
                return Err(Error::InvalidArgument {
                    name,
                    reason: format!("must be positive, got {v}"),
                });
            }
        }
        if self.paper_mode {
            if self.omega0.abs() != 1.0 {
                return Err(Error::InvalidArgument {
                    name: "omega0",
                    reason: format!("paper mode requires ±1, got {}", self.omega0),
                });
            }
            for (name, v) in &all[2..] {
                if *v != 1.0 {
                    return Err(Error::InvalidArgument {
                        name,
                        reason: format!("paper mode pins this constant to 1, got {v}"),
                    });
                }
            }
        }
        Ok(())
    }

    /// Implicit velocity symbol `−ν|k|²`.
    pub fn implicit_symbol_u(&self, ksq: f64) -> f64 {
        -self.nu * ksq
    }

    /// Implicit phase symbol `−Mε|k|⁴ − κ|k|²`.
    pub fn implicit_symbol_phi(&self, ksq: f64) -> f64 {
        -self.mobility * self.eps * ksq * ksq - self.kappa * ksq
    }

    fn korteweg_scale(&self) -> f64 {
        self.capillarity * self.eps
    }
}

/// Velocity and shifted order parameter at one instant.
#[derive(Debug, Clone)]
pub struct State {
    pub u: VectorField,
    pub phi: Field,
    pub params: ModelParams,
    pub time: f64,
}

impl State {
    pub fn new(u: VectorField, phi: Field, params: ModelParams) -> Result<Self> {
        if u.grid() != phi.grid() {
            return Err(Error::GridMismatch);
        }
        params.validate()?;
        let state = Self {
            u,
            phi,
            params,
            time: 0.0,
        };
        let div = state.divergence_norm();
        if div > DIVERGENCE_TOLERANCE * (1.0 + state.u.l2_norm()) {
            return Err(Error::InvalidArgument {
                name: "u",
                reason: format!("velocity is not divergence-free (‖div u‖ = {div:e})"),
            });
        }
        Ok(state)
    }

    pub fn zero(grid: &Grid, params: ModelParams) -> Result<Self> {
        Self::new(VectorField::zeros(grid), Field::zeros(grid), params)
    }

    pub fn grid(&self) -> &Grid {
        self.phi.grid()
    }

    pub fn divergence_norm(&self) -> f64 {
        sobolev_norm(&divergence(&self.u), 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.phi.is_finite()
    }
}

/// `F(s) = ¼(s² − 1)²`.
pub fn double_well(s: f64) -> f64 {
    let a = s * s - 1.0;
    0.25 * a * a
}

/// `F′(s) = s³ − s`.
pub fn double_well_derivative(s: f64) -> f64 {
    s * s * s - s
}

/// Shifted order parameter plus the background phase, `φ + ω₀`.
fn unshifted(phi: &Field, omega0: f64) -> Field {
    let np = phi.grid().num_points() as f64;
    phi.map_modes(|i, c| if i == 0 { c + omega0 * np } else { c })
}

/// `μ = −εΔφ + ζ F′(φ + ω₀)`, the cubic evaluated without aliasing.
pub fn chemical_potential(phi: &Field, params: &ModelParams) -> Field {
    let full = unshifted(phi, params.omega0);
    let cube = dealiased_product(&[&full, &full, &full]).expect("same grid");
    let ksq = phi.grid().ksq();
    let coeffs = phi
        .spectral()
        .iter()
        .zip(cube.spectral())
        .zip(full.spectral())
        .enumerate()
        .map(|(i, ((p, c3), c1))| p * (params.eps * ksq[i]) + (c3 - c1) * params.zeta)
        .collect();
    Field::spectral_unchecked(phi.grid(), coeffs)
}

/// Capillary forcing `−Δφ ∇φ`.
pub fn korteweg_force(phi: &Field) -> VectorField {
    let lap = laplacian(phi);
    let comps = (0..phi.grid().dim())
        .map(|a| dealiased_product(&[&lap, &partial(phi, a)]).expect("same grid").scale(-1.0))
        .collect();
    VectorField::new(comps).expect("dim components")
}

/// Stress form of the capillary forcing, `−∇·(∇φ ⊗ ∇φ)`.
pub fn korteweg_force_stress(phi: &Field) -> VectorField {
    let d = phi.grid().dim();
    let grads: Vec<Field> = (0..d).map(|a| partial(phi, a)).collect();
    let mut comps = Vec::with_capacity(d);
    for i in 0..d {
        let mut acc = Field::zeros(phi.grid());
        for j in 0..d {
            let prod = dealiased_product(&[&grads[i], &grads[j]]).expect("same grid");
            acc = acc.sub(&partial(&prod, j)).expect("same grid");
        }
        comps.push(acc);
    }
    VectorField::new(comps).expect("dim components")
}

#[inline]
fn times_ik(c: Complex64, k: f64) -> Complex64 {
    Complex64::new(-c.im * k, c.re * k)
}

/// Explicit nonlinear pieces evaluated on the padded grid.
struct Nonlinear {
    /// `∇·(u⊗u)` per component (equals `u·∇u` for solenoidal `u`).
    convection: Vec<Vec<Complex64>>,
    /// `−Δφ ∂ᵢφ` per component.
    korteweg: Vec<Vec<Complex64>>,
    /// `u·∇φ`, mean removed.
    advection: Vec<Complex64>,
    /// `(φ + ω₀)³`.
    cube: Vec<Complex64>,
}

fn nonlinear_terms(state: &State) -> Nonlinear {
    let grid = state.grid();
    let d = grid.dim();
    let ksq = grid.ksq();
    let phi = state.phi.spectral();

    let u_pad: Vec<Vec<f64>> = state
        .u
        .components()
        .iter()
        .map(|c| pad_to_physical(grid, c.spectral()))
        .collect();
    let mut phi_pad = pad_to_physical(grid, phi);
    let grad_pad: Vec<Vec<f64>> = (0..d)
        .map(|a| {
            let kd = grid.kd(a);
            let g: Vec<Complex64> = phi.iter().zip(kd).map(|(&c, &k)| times_ik(c, k)).collect();
            pad_to_physical(grid, &g)
        })
        .collect();
    let lap: Vec<Complex64> = phi.iter().zip(ksq).map(|(&c, &k)| -c * k).collect();
    let lap_pad = pad_to_physical(grid, &lap);

    let mut convection = vec![vec![Complex64::default(); grid.spectral_len()]; d];
    let mut buf = vec![0.0; u_pad[0].len()];
    for i in 0..d {
        for j in i..d {
            for ((b, x), y) in buf.iter_mut().zip(&u_pad[i]).zip(&u_pad[j]) {
                *b = x * y;
            }
            let prod = truncate_from_physical(grid, &buf);
            let (kj, ki) = (grid.kd(j), grid.kd(i));
            for (idx, p) in prod.iter().enumerate() {
                convection[i][idx] += times_ik(*p, kj[idx]);
                if i != j {
                    convection[j][idx] += times_ik(*p, ki[idx]);
                }
            }
        }
    }

    let korteweg = (0..d)
        .map(|a| {
            for ((b, l), g) in buf.iter_mut().zip(&lap_pad).zip(&grad_pad[a]) {
                *b = -l * g;
            }
            truncate_from_physical(grid, &buf)
        })
        .collect();

    buf.iter_mut().for_each(|b| *b = 0.0);
    for a in 0..d {
        for ((b, u), g) in buf.iter_mut().zip(&u_pad[a]).zip(&grad_pad[a]) {
            *b += u * g;
        }
    }
    let mut advection = truncate_from_physical(grid, &buf);
    // ∫ u·∇φ = −∫ φ div u = 0
    advection[0] = Complex64::default();

    let omega0 = state.params.omega0;
    for p in phi_pad.iter_mut() {
        let s = *p + omega0;
        *p = s * s * s;
    }
    let cube = truncate_from_physical(grid, &phi_pad);

    Nonlinear {
        convection,
        korteweg,
        advection,
        cube,
    }
}

/// Explicit tendencies of the IMEX split: projected momentum forcing and
/// `−u·∇φ + Δ[Mζ((φ+ω₀)³ − φ) − κφ]`.
pub(crate) fn explicit_parts(state: &State) -> (Vec<Vec<Complex64>>, Vec<Complex64>) {
    let grid = state.grid();
    let p = &state.params;
    let ksq = grid.ksq();
    let phi = state.phi.spectral();
    let mz = p.mobility * p.zeta;
    if p.linearized {
        let slope = mz * (3.0 * p.omega0 * p.omega0 - 1.0) - p.kappa;
        let dphi = phi.iter().zip(ksq).map(|(&c, &k)| -c * (k * slope)).collect();
        let zeros = vec![vec![Complex64::default(); grid.spectral_len()]; grid.dim()];
        return (zeros, dphi);
    }
    let nl = nonlinear_terms(state);
    let ks = p.korteweg_scale();
    let mut mom: Vec<Vec<Complex64>> = nl
        .convection
        .iter()
        .zip(&nl.korteweg)
        .map(|(c, k)| c.iter().zip(k).map(|(&c, &k)| k * ks - c).collect())
        .collect();
    for m in mom.iter_mut() {
        // both forcings are exact divergences
        m[0] = Complex64::default();
    }
    spectral::project_in_place(grid, &mut mom);
    let dphi = nl
        .advection
        .iter()
        .zip(&nl.cube)
        .zip(phi)
        .zip(ksq)
        .map(|(((&a, &c3), &c1), &k)| -a - (c3 * mz - c1 * (mz + p.kappa)) * k)
        .collect();
    (mom, dphi)
}

/// Implicit/explicit decomposition of the tendencies.
#[derive(Debug, Clone)]
pub struct RhsSplit {
    pub implicit_u: VectorField,
    pub implicit_phi: Field,
    pub explicit_u: VectorField,
    pub explicit_phi: Field,
}

pub fn rhs_split(state: &State) -> RhsSplit {
    let grid = state.grid();
    let p = state.params;
    let ksq = grid.ksq();
    let implicit_u = state.u.map(|c| c.apply_symbol(|i| p.implicit_symbol_u(ksq[i])));
    let implicit_phi = state.phi.apply_symbol(|i| p.implicit_symbol_phi(ksq[i]));
    let (mom, dphi) = explicit_parts(state);
    let explicit_u = VectorField::new(
        mom.into_iter()
            .map(|c| Field::spectral_unchecked(grid, c))
            .collect(),
    )
    .expect("dim components");
    RhsSplit {
        implicit_u,
        implicit_phi,
        explicit_u,
        explicit_phi: Field::spectral_unchecked(grid, dphi),
    }
}

/// Full tendencies `(∂t u, ∂t φ)`.
pub fn rhs(state: &State) -> (VectorField, Field) {
    let split = rhs_split(state);
    let du = VectorField::new(
        split
            .implicit_u
            .components()
            .iter()
            .zip(split.explicit_u.components())
            .map(|(a, b)| a.add(b).expect("same grid"))
            .collect(),
    )
    .expect("dim components");
    let dphi = split.implicit_phi.add(&split.explicit_phi).expect("same grid");
    (du, dphi)
}

/// Momentum tendency before projection, without the pressure gradient:
/// `−u·∇u + Kε(−Δφ∇φ) + νΔu`.
pub fn unprojected_momentum(state: &State) -> VectorField {
    let grid = state.grid();
    let p = state.params;
    let ksq = grid.ksq();
    let (conv, kort) = if p.linearized {
        let z = vec![vec![Complex64::default(); grid.spectral_len()]; grid.dim()];
        (z.clone(), z)
    } else {
        let nl = nonlinear_terms(state);
        (nl.convection, nl.korteweg)
    };
    let comps = (0..grid.dim())
        .map(|a| {
            let u = state.u.component(a).spectral();
            let coeffs = (0..grid.spectral_len())
                .map(|i| kort[a][i] * p.korteweg_scale() - conv[a][i] + u[i] * p.implicit_symbol_u(ksq[i]))
                .collect();
            Field::spectral_unchecked(grid, coeffs)
        })
        .collect();
    VectorField::new(comps).expect("dim components")
}

/// Mean-free pressure solving `−Δπ = div(u·∇u − Kε(−Δφ∇φ))`.
pub fn recover_pressure(state: &State) -> Field {
    let grid = state.grid();
    let forcing = unprojected_momentum(state);
    let d = grid.dim();
    let coeffs = (0..grid.spectral_len())
        .map(|i| {
            let mut k2 = 0.0;
            let mut div = Complex64::default();
            for a in 0..d {
                let k = grid.kd(a)[i];
                k2 += k * k;
                div += times_ik(forcing.component(a).spectral()[i], k);
            }
            // −Δπ = −div(T)  ⇒  |k|² π̂ = −(ik·T̂)
            if k2 == 0.0 {
                Complex64::default()
            } else {
                -div / k2
            }
        })
        .collect();
    Field::spectral_unchecked(grid, coeffs)
}
