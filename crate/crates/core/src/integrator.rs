//! Time stepping: first-order IMEX with a per-mode implicit solve, and a
//! classical RK4 on the full right-hand side used as a reference.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, DiagnosticsRecord, DiagnosticsSpec};
use crate::model::{self, State};
use crate::spectral::{self, Field, VectorField};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Imex1,
    Rk4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepControls {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_cfl_safety")]
    pub cfl_safety: f64,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default)]
    pub adaptive: bool,
    /// Observers run every `stride` steps and after the last step.
    #[serde(default = "default_stride")]
    pub stride: usize,
}

fn default_cfl_safety() -> f64 {
    0.4
}

fn default_scheme() -> Scheme {
    Scheme::Imex1
}

fn default_stride() -> usize {
    1
}

impl StepControls {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            cfl_safety: default_cfl_safety(),
            scheme: Scheme::Imex1,
            adaptive: false,
            stride: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidArgument {
                name: "dt",
                reason: format!("must be positive, got {}", self.dt),
            });
        }
        if !self.t_end.is_finite() || self.t_end < 0.0 {
            return Err(Error::InvalidArgument {
                name: "t_end",
                reason: format!("must be finite and >= 0, got {}", self.t_end),
            });
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::InvalidArgument {
                name: "cfl_safety",
                reason: format!("must lie in (0, 1], got {}", self.cfl_safety),
            });
        }
        if self.stride == 0 {
            return Err(Error::InvalidArgument {
                name: "stride",
                reason: "must be >= 1".into(),
            });
        }
        Ok(())
    }
}

fn check_finite(u: &[Vec<Complex64>], phi: &[Complex64], time: f64) -> Result<()> {
    let ok = |c: &Complex64| c.re.is_finite() && c.im.is_finite();
    if u.iter().all(|c| c.iter().all(ok)) && phi.iter().all(ok) {
        Ok(())
    } else {
        Err(Error::StepDiverged { time })
    }
}

fn assemble(state: &State, u: Vec<Vec<Complex64>>, phi: Vec<Complex64>, time: f64) -> State {
    let grid = state.grid();
    let u = VectorField::new(u.into_iter().map(|c| Field::spectral_unchecked(grid, c)).collect())
        .expect("dim components");
    State {
        u,
        phi: Field::spectral_unchecked(grid, phi),
        params: state.params,
        time,
    }
}

/// One first-order IMEX step: explicit nonlinearity (plus the borrowed
/// Laplacian), implicit `νΔ` on `u` and `−MεΔ² + κΔ` on `φ`.
pub fn imex_step(state: &State, dt: f64) -> Result<State> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument {
            name: "dt",
            reason: format!("must be positive, got {dt}"),
        });
    }
    let grid = state.grid();
    let p = state.params;
    let ksq = grid.ksq();
    let (mom, nphi) = model::explicit_parts(state);
    let mut u: Vec<Vec<Complex64>> = state
        .u
        .components()
        .iter()
        .zip(&mom)
        .map(|(c, m)| {
            c.spectral()
                .iter()
                .zip(m)
                .zip(ksq)
                .map(|((&a, &b), &k)| (a + b * dt) / (1.0 - dt * p.implicit_symbol_u(k)))
                .collect()
        })
        .collect();
    spectral::project_in_place(grid, &mut u);
    let phi: Vec<Complex64> = state
        .phi
        .spectral()
        .iter()
        .zip(&nphi)
        .zip(ksq)
        .map(|((&a, &b), &k)| (a + b * dt) / (1.0 - dt * p.implicit_symbol_phi(k)))
        .collect();
    let time = state.time + dt;
    check_finite(&u, &phi, time)?;
    Ok(assemble(state, u, phi, time))
}

/// Full tendencies as raw coefficient arrays.
fn tendencies(state: &State) -> (Vec<Vec<Complex64>>, Vec<Complex64>) {
    let p = state.params;
    let ksq = state.grid().ksq();
    let (mut mom, mut nphi) = model::explicit_parts(state);
    for (m, c) in mom.iter_mut().zip(state.u.components()) {
        for ((m, &a), &k) in m.iter_mut().zip(c.spectral()).zip(ksq) {
            *m += a * p.implicit_symbol_u(k);
        }
    }
    for ((m, &a), &k) in nphi.iter_mut().zip(state.phi.spectral()).zip(ksq) {
        *m += a * p.implicit_symbol_phi(k);
    }
    (mom, nphi)
}

fn axpy_state(state: &State, a: f64, du: &[Vec<Complex64>], dphi: &[Complex64]) -> State {
    let u = state
        .u
        .components()
        .iter()
        .zip(du)
        .map(|(c, d)| c.spectral().iter().zip(d).map(|(&x, &y)| x + y * a).collect())
        .collect();
    let phi = state.phi.spectral().iter().zip(dphi).map(|(&x, &y)| x + y * a).collect();
    assemble(state, u, phi, state.time + a)
}

/// Classical four-stage Runge–Kutta step on the full tendencies.
pub fn rk4_step(state: &State, dt: f64) -> Result<State> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument {
            name: "dt",
            reason: format!("must be positive, got {dt}"),
        });
    }
    let (k1u, k1p) = tendencies(state);
    let (k2u, k2p) = tendencies(&axpy_state(state, 0.5 * dt, &k1u, &k1p));
    let (k3u, k3p) = tendencies(&axpy_state(state, 0.5 * dt, &k2u, &k2p));
    let (k4u, k4p) = tendencies(&axpy_state(state, dt, &k3u, &k3p));
    let w = dt / 6.0;
    let combine = |x: Complex64, a: Complex64, b: Complex64, c: Complex64, d: Complex64| {
        x + (a + (b + c) * 2.0 + d) * w
    };
    let mut u: Vec<Vec<Complex64>> = (0..state.grid().dim())
        .map(|i| {
            let x = state.u.component(i).spectral();
            (0..x.len())
                .map(|j| combine(x[j], k1u[i][j], k2u[i][j], k3u[i][j], k4u[i][j]))
                .collect()
        })
        .collect();
    spectral::project_in_place(state.grid(), &mut u);
    let x = state.phi.spectral();
    let phi: Vec<Complex64> = (0..x.len())
        .map(|j| combine(x[j], k1p[j], k2p[j], k3p[j], k4p[j]))
        .collect();
    let time = state.time + dt;
    check_finite(&u, &phi, time)?;
    Ok(assemble(state, u, phi, time))
}

/// Individual time-step limits; `f64::INFINITY` when a guard is inactive
/// (serialized as `null`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CflCandidates {
    /// `h / ‖u‖_∞`.
    pub advective: f64,
    /// `2ν / ‖u‖²_∞`: explicit advection against implicit viscosity.
    pub advection_diffusion: f64,
    /// `h² / (Mζ ‖3(φ+ω₀)² − 3ω₀²‖_∞)`: variation of the explicit phase
    /// coefficient about the pure phase.
    pub explicit_phi: f64,
    /// `8Mε / (c − κ)²` when the explicit linear coefficient
    /// `c = Mζ(3ω₀² − 1) − κ` exceeds `κ`; infinite otherwise, where the
    /// implicit `κΔ` alone keeps every mode factor within the unit disc.
    pub linear_phi: f64,
}

impl CflCandidates {
    pub fn min(&self) -> f64 {
        self.advective
            .min(self.advection_diffusion)
            .min(self.explicit_phi)
            .min(self.linear_phi)
    }
}

pub fn cfl_candidates(state: &State) -> CflCandidates {
    let grid = state.grid();
    let p = state.params;
    let h = grid.spacing();
    let comps: Vec<&[f64]> = state.u.components().iter().map(|c| c.values()).collect();
    let umax = (0..grid.num_points())
        .map(|i| comps.iter().map(|c| c[i] * c[i]).sum::<f64>())
        .fold(0.0f64, f64::max)
        .sqrt();
    let mz = p.mobility * p.zeta;
    let w2 = p.omega0 * p.omega0;
    let variation = if p.linearized {
        0.0
    } else {
        state
            .phi
            .values()
            .iter()
            .map(|v| {
                let s = v + p.omega0;
                (mz * 3.0 * (s * s - w2)).abs()
            })
            .fold(0.0f64, f64::max)
    };
    let excess = mz * (3.0 * w2 - 1.0) - 2.0 * p.kappa;
    let guard = |num: f64, den: f64| if den > 0.0 { num / den } else { f64::INFINITY };
    CflCandidates {
        advective: guard(h, umax),
        advection_diffusion: guard(2.0 * p.nu, umax * umax),
        explicit_phi: guard(h * h, variation),
        linear_phi: guard(8.0 * p.mobility * p.eps, if excess > 0.0 { excess * excess } else { 0.0 }),
    }
}

/// `min(controls.dt, cfl_safety · min(candidates))`.
pub fn cfl_dt(state: &State, controls: &StepControls) -> f64 {
    let limit = controls.cfl_safety * cfl_candidates(state).min();
    if limit.is_finite() {
        controls.dt.min(limit)
    } else {
        controls.dt
    }
}

/// Receives snapshots during [`integrate`].
pub trait Observer {
    fn observe(&mut self, state: &State, record: &DiagnosticsRecord);
}

impl<F: FnMut(&State, &DiagnosticsRecord)> Observer for F {
    fn observe(&mut self, state: &State, record: &DiagnosticsRecord) {
        self(state, record)
    }
}

/// Failure of [`integrate`] with the partial-trajectory metadata.
#[derive(Debug, thiserror::Error)]
#[error("{source} after {steps_completed} steps (last good time {last_time})")]
pub struct IntegrateError {
    #[source]
    pub source: Error,
    pub steps_completed: usize,
    pub last_time: f64,
}

/// Advances `state` to `controls.t_end`, calling every observer after each
/// `stride`-th step and after the final step.
pub fn integrate(
    mut state: State,
    controls: &StepControls,
    spec: &DiagnosticsSpec,
    observers: &mut [&mut dyn Observer],
) -> Result<State, IntegrateError> {
    let fail = |source, steps_completed, last_time| IntegrateError {
        source,
        steps_completed,
        last_time,
    };
    controls.validate().map_err(|e| fail(e, 0, state.time))?;
    let t0 = state.time;
    let mut steps = 0usize;
    // Relative slack so the final step is not a sliver.
    let slack = 1e-9 * controls.dt;
    while state.time < controls.t_end - slack {
        let remaining = controls.t_end - state.time;
        let mut dt = if controls.adaptive {
            cfl_dt(&state, controls)
        } else {
            controls.dt
        };
        let last = dt >= remaining - slack;
        if last {
            dt = remaining;
        }
        let next = match controls.scheme {
            Scheme::Imex1 => imex_step(&state, dt),
            Scheme::Rk4 => rk4_step(&state, dt),
        };
        let mut next = next.map_err(|e| fail(e, steps, state.time))?;
        steps += 1;
        next.time = if last {
            controls.t_end
        } else if controls.adaptive {
            next.time
        } else {
            t0 + steps as f64 * controls.dt
        };
        state = next;
        if !observers.is_empty() && (steps % controls.stride == 0 || last) {
            let rec = diagnostics::record(&state, spec).map_err(|e| fail(e, steps, state.time))?;
            for obs in observers.iter_mut() {
                obs.observe(&state, &rec);
            }
        }
    }
    Ok(state)
}
