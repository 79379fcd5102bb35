//! Trajectory functionals: energy and dissipation, the critical pair
//! `(X, Y)`, negative-order energies, Sobolev-norm series, and algebraic
//! decay fits.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::model::{chemical_potential, double_well, State};
use crate::spectral::{pad_to_physical, partial, sobolev_norm, Field};
use crate::{Error, Result};

/// Which negative orders and derivative series each record carries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsSpec {
    /// Orders `s` of the negative-order energy `ℰ_{−s}`.
    pub neg_orders: Vec<f64>,
    /// Derivative orders `k` of `‖Λᵏu‖`, `‖Λᵏφ‖`, `‖Λᵏ⁺¹φ‖`.
    pub series_orders: Vec<u32>,
}

impl Default for DiagnosticsSpec {
    fn default() -> Self {
        Self {
            neg_orders: vec![0.0, 0.25, 0.5],
            series_orders: vec![0, 1, 2],
        }
    }
}

/// One snapshot of every tracked functional.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub time: f64,
    pub kinetic: f64,
    pub free_energy: f64,
    pub dissipation: f64,
    pub x: f64,
    pub y: f64,
    /// `(s, ℰ_{−s})` in the order of [`DiagnosticsSpec::neg_orders`].
    pub neg_norms: Vec<(f64, f64)>,
    /// `(name, norm)`; φ norms are taken with the mean removed.
    pub sobolev_series: Vec<(String, f64)>,
}

impl DiagnosticsRecord {
    pub fn energy(&self) -> f64 {
        self.kinetic + self.free_energy
    }

    pub fn series(&self, name: &str) -> Option<f64> {
        self.sobolev_series.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn neg_norm(&self, s: f64) -> Option<f64> {
        self.neg_norms.iter().find(|(o, _)| *o == s).map(|(_, v)| *v)
    }
}

/// Series column names for derivative order `k`.
pub fn series_names(k: u32) -> [String; 3] {
    [format!("u_k{k}"), format!("phi_k{k}"), format!("grad_phi_k{k}")]
}

pub fn kinetic_energy(state: &State) -> f64 {
    0.5 * state.u.l2_norm().powi(2)
}

/// `K ∫ (ε/2 |∇φ|² + ζ F(φ + ω₀)) dx`.
///
/// The potential is integrated on the padded grid, which is exact for the
/// quartic of a band-limited field.
pub fn free_energy(state: &State) -> f64 {
    let p = &state.params;
    let grid = state.grid();
    let grad2 = sobolev_norm(&state.phi, 1.0).powi(2);
    let fine = pad_to_physical(grid, state.phi.spectral());
    let cell = grid.volume() / fine.len() as f64;
    let potential: f64 = fine.iter().map(|v| double_well(v + p.omega0)).sum::<f64>() * cell;
    p.capillarity * (0.5 * p.eps * grad2 + p.zeta * potential)
}

/// `½‖u‖² + ∫(½|∇φ|² + F(φ + ω₀))` (physical constants applied outside paper mode).
pub fn total_energy(state: &State) -> f64 {
    kinetic_energy(state) + free_energy(state)
}

/// `ν‖∇u‖² + K M ‖∇μ‖²`.
pub fn dissipation(state: &State) -> f64 {
    let p = &state.params;
    let grad_u: f64 = state.u.components().iter().map(|c| sobolev_norm(c, 1.0).powi(2)).sum();
    let mu = chemical_potential(&state.phi, p);
    p.nu * grad_u + p.capillarity * p.mobility * sobolev_norm(&mu, 1.0).powi(2)
}

/// Critical energy `X` and its dissipation `Y`:
///
/// ```text
/// X = ‖Λ^½u‖² + ‖Λ^½φ‖² + ‖Λ^{3/2}φ‖²
/// Y = ‖Λ^{3/2}u‖² + ‖Λ^{3/2}φ‖² + 3‖Λ^{5/2}φ‖²
/// ```
pub fn critical_pair(state: &State) -> (f64, f64) {
    let vel = |s: f64| -> f64 { state.u.components().iter().map(|c| sobolev_norm(c, s).powi(2)).sum() };
    let ph = |s: f64| sobolev_norm(&state.phi, s).powi(2);
    let x = vel(0.5) + ph(0.5) + ph(1.5);
    let y = vel(1.5) + ph(1.5) + 3.0 * ph(2.5);
    (x, y)
}

/// `ℰ_{−s} = ‖Λ^{−s}u‖² + ‖Λ^{−s}φ‖² + ‖Λ^{−s}∇φ‖²`, zero modes excluded for `s > 0`.
pub fn negative_norm(state: &State, s: f64) -> Result<f64> {
    if !s.is_finite() || s < 0.0 || (state.params.paper_mode && s > 0.5) {
        return Err(Error::InvalidArgument {
            name: "s",
            reason: format!("order must lie in [0, 1/2] in paper mode and be >= 0 otherwise, got {s}"),
        });
    }
    let sq = |f: &Field| sobolev_norm(f, -s).powi(2);
    let u: f64 = state.u.components().iter().map(sq).sum();
    let grad: f64 = (0..state.grid().dim()).map(|a| sq(&partial(&state.phi, a))).sum();
    Ok(u + sq(&state.phi) + grad)
}

/// Full snapshot of `state`.
pub fn record(state: &State, spec: &DiagnosticsSpec) -> Result<DiagnosticsRecord> {
    let (x, y) = critical_pair(state);
    let neg_norms = spec
        .neg_orders
        .iter()
        .map(|&s| negative_norm(state, s).map(|v| (s, v)))
        .collect::<Result<Vec<_>>>()?;
    let phi0 = state.phi.without_mean();
    let mut sobolev_series = Vec::with_capacity(3 * spec.series_orders.len());
    for &k in &spec.series_orders {
        let s = k as f64;
        let [nu, np, ng] = series_names(k);
        let u: f64 = state.u.components().iter().map(|c| sobolev_norm(c, s).powi(2)).sum();
        sobolev_series.push((nu, u.sqrt()));
        sobolev_series.push((np, sobolev_norm(&phi0, s)));
        sobolev_series.push((ng, sobolev_norm(&phi0, s + 1.0)));
    }
    Ok(DiagnosticsRecord {
        time: state.time,
        kinetic: kinetic_energy(state),
        free_energy: free_energy(state),
        dissipation: dissipation(state),
        x,
        y,
        neg_norms,
        sobolev_series,
    })
}

/// Relative defect of the energy law `E(t_b) − E(t_a) + ∫ D dt = 0` over a
/// run of equispaced records, with trapezoid quadrature of the dissipation.
pub fn dissipation_residual(records: &[DiagnosticsRecord]) -> Result<f64> {
    if records.len() < 3 {
        return Err(Error::InvalidArgument {
            name: "records",
            reason: format!("need at least 3 records, got {}", records.len()),
        });
    }
    let dt = records[1].time - records[0].time;
    for w in records.windows(2) {
        let step = w[1].time - w[0].time;
        if !(step > 0.0) || (step - dt).abs() > 1e-6 * dt {
            return Err(Error::InvalidArgument {
                name: "records",
                reason: format!("records are not equispaced (step {step} vs {dt})"),
            });
        }
    }
    let integral: f64 = records
        .windows(2)
        .map(|w| 0.5 * dt * (w[0].dissipation + w[1].dissipation))
        .sum();
    let (ea, eb) = (records[0].energy(), records[records.len() - 1].energy());
    Ok((eb - ea + integral).abs() / ea.max(f64::MIN_POSITIVE))
}

/// Least-squares fit of `v ≈ C (1 + t)^{−σ}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub sigma_hat: f64,
    pub window: [f64; 2],
    /// RMS misfit in `ln v`.
    pub residual: f64,
    pub points: usize,
    /// Target exponent, when one applies.
    pub sigma_paper: Option<f64>,
}

impl DecayFit {
    pub fn with_target(mut self, sigma: f64) -> Self {
        self.sigma_paper = Some(sigma);
        self
    }
}

pub const MIN_FIT_POINTS: usize = 10;

/// Fits the slope of `ln v` against `ln(1 + t)` over samples with `t` in `window`.
pub fn fit_decay(series: &[(f64, f64)], window: [f64; 2]) -> Result<DecayFit> {
    if !(window[0] < window[1]) {
        return Err(Error::InvalidArgument {
            name: "window",
            reason: format!("expected t0 < t1, got {window:?}"),
        });
    }
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, _)| *t >= window[0] && *t <= window[1])
        .copied()
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::InvalidArgument {
            name: "series",
            reason: format!("need at least {MIN_FIT_POINTS} points in the window, got {}", pts.len()),
        });
    }
    if let Some((t, v)) = pts.iter().find(|(_, v)| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument {
            name: "series",
            reason: format!("values must be positive, got {v} at t = {t}"),
        });
    }
    let xy: Vec<(f64, f64)> = pts.iter().map(|(t, v)| ((1.0 + t).ln(), v.ln())).collect();
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xy.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    Ok(DecayFit {
        sigma_hat: -slope,
        window,
        residual: (rss / n).sqrt(),
        points: pts.len(),
        sigma_paper: None,
    })
}

/// Target exponent `σ_k = (3/2)(1/p − 1/2) + k/2` for `L^p` data.
pub fn sigma_target(k: u32, p: f64, paper_mode: bool) -> Result<f64> {
    if !(p >= 1.0) || (paper_mode && !(1.5..=2.0).contains(&p)) {
        return Err(Error::InvalidArgument {
            name: "p",
            reason: format!("expected p in [3/2, 2], got {p}"),
        });
    }
    Ok(1.5 * (1.0 / p - 0.5) + 0.5 * k as f64)
}

/// Time before which a box of period `box_length` tracks whole-space
/// diffusion with the given diffusivity: the heat kernel must stay below
/// `tolerance` (relative) at distance `L/2`.
pub fn validity_horizon(box_length: f64, diffusivity: f64, tolerance: f64) -> f64 {
    let half = 0.5 * box_length;
    half * half / (4.0 * diffusivity * (1.0 / tolerance).ln())
}

/// Collects one record per observer call.
#[derive(Debug, Default)]
pub struct Recorder {
    pub records: Vec<DiagnosticsRecord>,
}

impl crate::integrator::Observer for Recorder {
    fn observe(&mut self, _state: &State, record: &DiagnosticsRecord) {
        self.records.push(record.clone());
    }
}

/// CSV header in the fixed column order.
pub fn csv_header(spec: &DiagnosticsSpec) -> Vec<String> {
    let mut cols: Vec<String> = ["time", "kinetic", "free_energy", "dissipation", "X", "Y"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    cols.extend(spec.neg_orders.iter().map(|s| format!("neg_s{s}")));
    for &k in &spec.series_orders {
        cols.extend(series_names(k));
    }
    cols
}

/// Shortest round-trip text of `v`: plain decimals for moderate magnitudes,
/// scientific notation otherwise.
fn format_value(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e16).contains(&a) || !v.is_finite() {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

/// Writes the header and one row per record. Floats use the shortest
/// round-trip representation.
pub fn write_csv<W: Write>(w: &mut W, spec: &DiagnosticsSpec, records: &[DiagnosticsRecord]) -> io::Result<()> {
    writeln!(w, "{}", csv_header(spec).join(","))?;
    for r in records {
        let mut row: Vec<String> = [r.time, r.kinetic, r.free_energy, r.dissipation, r.x, r.y]
            .iter()
            .map(|&v| format_value(v))
            .collect();
        row.extend(r.neg_norms.iter().map(|(_, v)| format_value(*v)));
        row.extend(r.sobolev_series.iter().map(|(_, v)| format_value(*v)));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}
