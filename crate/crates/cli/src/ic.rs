//! Initial-condition generators. Every kind is rescaled so that
//! `‖u‖_{Ḣ^½} + ‖φ‖_{Ḣ^½} + ‖φ‖_{Ḣ^{3/2}}` equals the requested amplitude.

use nsch_core::spectral::random::FieldRng;
use nsch_core::spectral::{leray_project, sobolev_norm};
use nsch_core::{Error, Field, Grid, ModelParams, State, VectorField};
use serde::{Deserialize, Serialize};

use crate::config::IcConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IcKind {
    TaylorGreenLike,
    RandomDivfree,
    GaussianBlob,
    SingleMode,
}

impl IcKind {
    pub const ALL: [IcKind; 4] = [
        IcKind::TaylorGreenLike,
        IcKind::RandomDivfree,
        IcKind::GaussianBlob,
        IcKind::SingleMode,
    ];
}

/// Band limit of random-divfree data when `ic.kmax` is absent.
pub const DEFAULT_BAND: f64 = 3.0;
/// Gaussian standard deviation when `ic.width` is absent; `e^{−|x|²/4}`.
pub const DEFAULT_WIDTH: f64 = std::f64::consts::SQRT_2;

/// What was generated, for report metadata.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IcInfo {
    pub kind: IcKind,
    pub amplitude: f64,
    /// Factor applied to the unit-coefficient profile.
    pub scale: f64,
    /// Achieved critical-norm sum.
    pub critical_sum: f64,
    pub phi_integral: f64,
    pub phi_peak: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kmax: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct InitialCondition {
    pub state: State,
    pub info: IcInfo,
}

/// `‖u‖_{Ḣ^½} + ‖φ‖_{Ḣ^½} + ‖φ‖_{Ḣ^{3/2}}`.
pub fn critical_sum(u: &VectorField, phi: &Field) -> f64 {
    let u_half: f64 = u.components().iter().map(|c| sobolev_norm(c, 0.5).powi(2)).sum();
    u_half.sqrt() + sobolev_norm(phi, 0.5) + sobolev_norm(phi, 1.5)
}

fn invalid(name: &'static str, reason: String) -> Error {
    Error::InvalidArgument { name, reason }
}

fn mode_number(kmax: Option<f64>, grid: &Grid) -> Result<f64, Error> {
    let m = kmax.unwrap_or(1.0);
    if m.fract() != 0.0 || m < 1.0 || m >= (grid.n() / 2) as f64 {
        return Err(invalid("kmax", format!("mode number must be an integer in [1, n/2), got {m}")));
    }
    Ok(m)
}

/// Periodized `exp(−|x − c|²/(2w²))` centred in the box.
fn gaussian(grid: &Grid, width: f64) -> Field {
    let l = grid.box_length();
    let c = 0.5 * l;
    let d = grid.dim();
    Field::from_fn(grid, |x| {
        let mut total = 0.0;
        let images = if d == 2 { 9 } else { 27 };
        for img in 0..images {
            let mut r2 = 0.0;
            let mut code = img;
            for xi in &x[..d] {
                let shift = (code % 3) as f64 - 1.0;
                code /= 3;
                let dx = xi - c + shift * l;
                r2 += dx * dx;
            }
            total += (-r2 / (2.0 * width * width)).exp();
        }
        total
    })
}

fn profile(ic: &IcConfig, grid: &Grid) -> Result<(VectorField, Field), Error> {
    let d = grid.dim();
    let comps = |f: Vec<Field>| VectorField::new(f).expect("dim components");
    Ok(match ic.kind {
        IcKind::TaylorGreenLike => {
            let k = mode_number(ic.kmax, grid)? * grid.k_unit();
            let z = move |x: &[f64]| if d == 3 { (k * x[2]).cos() } else { 1.0 };
            let mut u = vec![
                Field::from_fn(grid, |x| (k * x[0]).sin() * (k * x[1]).cos() * z(x)),
                Field::from_fn(grid, |x| -(k * x[0]).cos() * (k * x[1]).sin() * z(x)),
            ];
            if d == 3 {
                u.push(Field::zeros(grid));
            }
            let phi = Field::from_fn(grid, |x| (k * x[0]).cos() * (k * x[1]).cos() * z(x));
            (comps(u), phi)
        }
        IcKind::RandomDivfree => {
            let kmax = ic.kmax.unwrap_or(DEFAULT_BAND);
            let mut rng = FieldRng::new(ic.seed);
            let u = rng.divergence_free(grid, kmax);
            let phi = rng.band_limited(grid, kmax);
            (u, phi)
        }
        IcKind::GaussianBlob => {
            let g = gaussian(grid, ic.width.unwrap_or(DEFAULT_WIDTH));
            let mut u = vec![g.clone()];
            u.extend((1..d).map(|_| Field::zeros(grid)));
            (leray_project(&comps(u)), g)
        }
        IcKind::SingleMode => {
            let k = mode_number(ic.kmax, grid)? * grid.k_unit();
            let mut u = vec![Field::zeros(grid), Field::from_fn(grid, |x| (k * x[0]).sin())];
            if d == 3 {
                u.push(Field::zeros(grid));
            }
            (comps(u), Field::from_fn(grid, |x| (k * x[0]).cos()))
        }
    })
}

/// Builds the initial state for `ic` on `grid`.
pub fn generate_ic(ic: &IcConfig, grid: &Grid, params: ModelParams) -> Result<InitialCondition, Error> {
    if !(ic.amplitude.is_finite() && ic.amplitude > 0.0) {
        return Err(invalid("amplitude", format!("must be positive, got {}", ic.amplitude)));
    }
    let (u, phi) = profile(ic, grid)?;
    let raw = critical_sum(&u, &phi);
    if !(raw > 0.0) {
        return Err(invalid("kmax", "profile has no modes on this grid".into()));
    }
    let scale = ic.amplitude / raw;
    let u = u.map(|c| c.scale(scale));
    let phi = phi.scale(scale);
    let info = IcInfo {
        kind: ic.kind,
        amplitude: ic.amplitude,
        scale,
        critical_sum: critical_sum(&u, &phi),
        phi_integral: phi.mean() * grid.volume(),
        phi_peak: phi.values().iter().fold(0.0f64, |m, v| m.max(v.abs())),
        kmax: match ic.kind {
            IcKind::RandomDivfree => Some(ic.kmax.unwrap_or(DEFAULT_BAND)),
            IcKind::TaylorGreenLike | IcKind::SingleMode => Some(ic.kmax.unwrap_or(1.0)),
            IcKind::GaussianBlob => None,
        },
        width: (ic.kind == IcKind::GaussianBlob).then(|| ic.width.unwrap_or(DEFAULT_WIDTH)),
    };
    Ok(InitialCondition {
        state: State::new(u, phi, params)?,
        info,
    })
}
