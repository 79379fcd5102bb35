//! Empirical checks of the functional inequalities used in the small-data
//! theory, on seeded band-limited fields.
//!
//! Each checker returns the ratio `LHS / RHS` with unit constant. Only the
//! interpolation inequality has a known constant (exactly 1); for the others
//! the lab reports the worst observed ratio and its stability under grid
//! refinement.
//!
//! `L^p` norms with `p ≠ 2` are rectangle-rule sums on the padded grid;
//! `L²` and `Ḣ^s` norms are exact spectral sums.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::spectral::random::FieldRng;
use crate::spectral::{dealiased_product, fractional_laplacian, pad_to_physical, partial, sobolev_norm, Field, Grid};
use crate::{Error, Result};

/// Tolerance on exponent relations.
pub const EXPONENT_TOLERANCE: f64 = 1e-12;
/// Allowed excess over the unit constant of the interpolation inequality.
pub const INTERPOLATION_TOLERANCE: f64 = 1e-10;
const MEAN_TOLERANCE: f64 = 1e-10;

fn bad_exponent(reason: impl Into<String>, residual: f64) -> Error {
    Error::InvalidExponent {
        reason: reason.into(),
        residual,
    }
}

fn require_mean_free(f: &Field) -> Result<()> {
    let mean = f.mean();
    let norm = sobolev_norm(f, 0.0);
    if mean.abs() * f.grid().volume().sqrt() > MEAN_TOLERANCE * norm {
        return Err(Error::NegativePowerOnNonzeroMean { mean, norm });
    }
    Ok(())
}

/// `‖f‖_{L^p}`, exact for `p = 2`, padded-grid quadrature otherwise.
pub fn lebesgue_norm(f: &Field, p: f64) -> f64 {
    if p == 2.0 {
        return sobolev_norm(f, 0.0);
    }
    let samples = pad_to_physical(f.grid(), f.spectral());
    samples_norm(f.grid(), &samples, p)
}

fn samples_norm(grid: &Grid, samples: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    }
    let cell = grid.volume() / samples.len() as f64;
    let sum: f64 = samples.iter().map(|v| v.abs().powf(p)).sum();
    (sum * cell).powf(1.0 / p)
}

/// `‖∇f‖_{L^p}` of the Euclidean magnitude of the gradient.
fn gradient_norm(f: &Field, p: f64) -> f64 {
    let grid = f.grid();
    let comps: Vec<Vec<f64>> = (0..grid.dim())
        .map(|a| pad_to_physical(grid, partial(f, a).spectral()))
        .collect();
    let mag: Vec<f64> = (0..comps[0].len())
        .map(|i| comps.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
        .collect();
    samples_norm(grid, &mag, p)
}

/// `Λ^s f` (symbol `|k|^s`).
fn lambda(f: &Field, s: f64) -> Result<Field> {
    fractional_laplacian(f, 0.5 * s)
}

/// Relative level below which a norm counts as rounding noise.
const NOISE: f64 = 1e-12;

/// `ratio` with both sides below `NOISE · scale` treated as exact zeros.
fn ratio_with_floor(lhs: f64, rhs: f64, scale: f64) -> f64 {
    let clean = |v: f64| if v <= NOISE * scale { 0.0 } else { v };
    ratio(clean(lhs), clean(rhs))
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if rhs > 0.0 {
        lhs / rhs
    } else if lhs == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Sobolev embedding `‖f‖_{L^{6/(3−2s)}} / ‖f‖_{Ḣ^s}`, `0 ≤ s < 3/2`.
pub fn check_embedding(f: &Field, s: f64) -> Result<f64> {
    if !(0.0..1.5).contains(&s) {
        return Err(Error::InvalidArgument {
            name: "s",
            reason: format!("expected 0 <= s < 3/2, got {s}"),
        });
    }
    require_mean_free(f)?;
    let p = 6.0 / (3.0 - 2.0 * s);
    Ok(ratio(lebesgue_norm(f, p), sobolev_norm(f, s)))
}

/// Interpolation weight solving the Gagliardo–Nirenberg scaling relation
/// `α/3 − 1/p = (m/3 − 1/q)(1 − θ) + (l/3 − 1/r)θ`.
pub fn gn_theta(alpha: f64, m: f64, l: f64, p: f64, q: f64, r: f64) -> Result<f64> {
    let lhs = alpha / 3.0 - 1.0 / p;
    let a = m / 3.0 - 1.0 / q;
    let b = l / 3.0 - 1.0 / r;
    if (b - a).abs() < EXPONENT_TOLERANCE {
        let residual = (lhs - a).abs();
        return if residual <= EXPONENT_TOLERANCE {
            Ok(0.0)
        } else {
            Err(bad_exponent("scaling relation has no solution", residual))
        };
    }
    let theta = (lhs - a) / (b - a);
    if !(-EXPONENT_TOLERANCE..=1.0 + EXPONENT_TOLERANCE).contains(&theta) {
        let residual = if theta < 0.0 { -theta } else { theta - 1.0 } * (b - a).abs();
        return Err(bad_exponent(format!("theta = {theta} outside [0, 1]"), residual));
    }
    Ok(theta.clamp(0.0, 1.0))
}

/// Gagliardo–Nirenberg `‖Λ^α f‖_p / (‖Λ^m f‖_q^{1−θ} ‖Λ^l f‖_r^θ)`; returns `(ratio, θ)`.
pub fn check_gn(f: &Field, alpha: f64, m: f64, l: f64, p: f64, q: f64, r: f64) -> Result<(f64, f64)> {
    if !(0.0 <= m && m <= l && 0.0 <= alpha && alpha <= l) {
        return Err(Error::InvalidArgument {
            name: "alpha",
            reason: format!("need 0 <= m, alpha <= l, got m = {m}, alpha = {alpha}, l = {l}"),
        });
    }
    for (name, e) in [("p", p), ("q", q), ("r", r)] {
        if !(e >= 1.0) {
            return Err(Error::InvalidArgument {
                name,
                reason: format!("Lebesgue exponent must be >= 1, got {e}"),
            });
        }
    }
    let theta = gn_theta(alpha, m, l, p, q, r)?;
    if p.is_infinite() && !(theta > 0.0 && theta < 1.0) {
        return Err(bad_exponent("p = infinity requires 0 < theta < 1", theta.min(1.0 - theta).abs()));
    }
    require_mean_free(f)?;
    let lhs = lebesgue_norm(&lambda(f, alpha)?, p);
    let low = lebesgue_norm(&lambda(f, m)?, q);
    let high = lebesgue_norm(&lambda(f, l)?, r);
    Ok((ratio(lhs, low.powf(1.0 - theta) * high.powf(theta)), theta))
}

/// Lebesgue exponents of the Kato–Ponce estimates,
/// `1/p = 1/p1 + 1/p2 = 1/q1 + 1/q2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KatoPonceExponents {
    pub p: f64,
    pub p1: f64,
    pub p2: f64,
    pub q1: f64,
    pub q2: f64,
}

impl KatoPonceExponents {
    pub fn all_four() -> Self {
        Self { p: 2.0, p1: 4.0, p2: 4.0, q1: 4.0, q2: 4.0 }
    }

    pub fn sup_times_l2() -> Self {
        Self {
            p: 2.0,
            p1: f64::INFINITY,
            p2: 2.0,
            q1: f64::INFINITY,
            q2: 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let open = |x: f64| x > 1.0 && x.is_finite();
        if !open(self.p) || !open(self.p2) || !open(self.q2) || !(self.p1 > 1.0) || !(self.q1 > 1.0) {
            return Err(bad_exponent(
                format!("need p, p2, q2 in (1, inf) and p1, q1 in (1, inf], got {self:?}"),
                f64::INFINITY,
            ));
        }
        let r1 = (1.0 / self.p - 1.0 / self.p1 - 1.0 / self.p2).abs();
        let r2 = (1.0 / self.p - 1.0 / self.q1 - 1.0 / self.q2).abs();
        let residual = r1.max(r2);
        if residual > EXPONENT_TOLERANCE {
            return Err(bad_exponent("Hoelder relation violated", residual));
        }
        Ok(())
    }
}

/// Kato–Ponce ratios `(product rule, commutator)`:
///
/// ```text
/// ‖Λ^s(fg)‖_p            / (‖f‖_{p1} ‖Λ^s g‖_{p2}     + ‖Λ^s f‖_{q1} ‖g‖_{q2})
/// ‖Λ^s(fg) − fΛ^s g‖_p   / (‖∇f‖_{p1} ‖Λ^{s−1} g‖_{p2} + ‖Λ^s f‖_{q1} ‖g‖_{q2})
/// ```
pub fn check_kato_ponce(f: &Field, g: &Field, s: f64, e: &KatoPonceExponents) -> Result<(f64, f64)> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidArgument {
            name: "s",
            reason: format!("expected s > 0, got {s}"),
        });
    }
    e.validate()?;
    if s < 1.0 {
        require_mean_free(g)?;
    }
    let fg = dealiased_product(&[f, g])?;
    let ls_fg = lambda(&fg, s)?;
    let ls_f = lambda(f, s)?;
    let ls_g = lambda(g, s)?;
    let f_ls_g = dealiased_product(&[f, &ls_g])?;
    let commutator = ls_fg.sub(&f_ls_g)?;
    let shared = lebesgue_norm(&ls_f, e.q1) * lebesgue_norm(g, e.q2);
    let product_rhs = lebesgue_norm(f, e.p1) * lebesgue_norm(&ls_g, e.p2) + shared;
    let comm_rhs = gradient_norm(f, e.p1) * lebesgue_norm(&lambda(g, s - 1.0)?, e.p2) + shared;
    // Scale of the individual terms, for telling cancellation from rounding.
    let scale = lebesgue_norm(f, e.p1) * lebesgue_norm(&ls_g, e.p2) + shared;
    Ok((
        ratio_with_floor(lebesgue_norm(&ls_fg, e.p), product_rhs, scale),
        ratio_with_floor(lebesgue_norm(&commutator, e.p), comm_rhs, scale),
    ))
}

/// Hardy–Littlewood–Sobolev `‖f‖_{Ḣ^{−s}} / ‖f‖_{L^p}` with `1/2 + s/3 = 1/p`.
pub fn check_hls(f: &Field, s: f64, p: f64) -> Result<f64> {
    if !(0.0..1.5).contains(&s) || !(p > 1.0 && p <= 2.0) {
        return Err(Error::InvalidArgument {
            name: "s",
            reason: format!("need 0 <= s < 3/2 and 1 < p <= 2, got s = {s}, p = {p}"),
        });
    }
    let residual = (0.5 + s / 3.0 - 1.0 / p).abs();
    if residual > EXPONENT_TOLERANCE {
        return Err(bad_exponent("1/2 + s/3 = 1/p violated", residual));
    }
    require_mean_free(f)?;
    Ok(ratio(sobolev_norm(f, -s), lebesgue_norm(f, p)))
}

/// `θ = 1/(l + 1 + s)`.
pub fn interpolation_theta(l: f64, s: f64) -> f64 {
    1.0 / (l + 1.0 + s)
}

/// `‖Λ^l f‖ / (‖Λ^{l+1} f‖^{1−θ} ‖f‖_{Ḣ^{−s}}^θ)`; at most 1 by Hölder on the spectrum.
pub fn check_interpolation(f: &Field, l: f64, s: f64) -> Result<f64> {
    if !(l >= 0.0 && s >= 0.0 && l.is_finite() && s.is_finite()) {
        return Err(Error::InvalidArgument {
            name: "l",
            reason: format!("need l >= 0 and s >= 0, got l = {l}, s = {s}"),
        });
    }
    require_mean_free(f)?;
    let theta = interpolation_theta(l, s);
    let lhs = sobolev_norm(f, l);
    let rhs = sobolev_norm(f, l + 1.0).powf(1.0 - theta) * sobolev_norm(f, -s).powf(theta);
    Ok(ratio(lhs, rhs))
}

/// Exponents attached to a report; unset entries are omitted from JSON.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IneqParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exponents: Option<KatoPonceExponents>,
}

/// Worst observed ratio of one inequality over a batch of trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IneqReport {
    pub id: String,
    pub params: IneqParams,
    pub trials: usize,
    pub worst_ratio: f64,
    /// Trials above the hard bound; only counted for constant-1 inequalities.
    pub violations: usize,
    pub seed: u64,
}

/// Settings of a full inequality sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteConfig {
    /// Points per axis of the 3D `2π` box.
    pub n: usize,
    /// Band limit of the random fields. Keeping it below `n/4` makes every
    /// product exactly representable, so refinement only changes quadrature.
    pub kmax: f64,
    /// Trials per `L^p` inequality.
    pub trials: usize,
    /// Trials of the interpolation inequality.
    pub interpolation_trials: usize,
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            n: 16,
            kmax: 3.5,
            trials: 200,
            interpolation_trials: 10_000,
            seed: 0,
        }
    }
}

struct Worst {
    ratio: f64,
    params: IneqParams,
    violations: usize,
}

impl Worst {
    fn new(params: IneqParams) -> Self {
        Self { ratio: 0.0, params, violations: 0 }
    }

    fn push(&mut self, r: f64) {
        if r > self.ratio || r.is_nan() {
            self.ratio = r;
        }
    }

    fn report(self, id: &str, trials: usize, seed: u64) -> IneqReport {
        IneqReport {
            id: id.to_string(),
            params: self.params,
            trials,
            worst_ratio: self.ratio,
            violations: self.violations,
            seed,
        }
    }
}

/// Runs every checker and returns one report per inequality and exponent
/// set. Batches with zero trials are omitted.
pub fn run_suite(cfg: &SuiteConfig) -> Result<Vec<IneqReport>> {
    let grid = Grid::new(3, cfg.n, 2.0 * std::f64::consts::PI)?;
    let mut out = Vec::new();
    if cfg.trials > 0 {
        out.extend(lp_reports(&grid, cfg)?);
    }
    if cfg.interpolation_trials > 0 {
        out.push(interpolation_report(&grid, cfg)?);
    }
    Ok(out)
}

fn lp_reports(grid: &Grid, cfg: &SuiteConfig) -> Result<Vec<IneqReport>> {
    let mut rng = FieldRng::new(cfg.seed);
    let mut emb = Worst::new(IneqParams { s: Some(1.0), p: Some(6.0), ..Default::default() });
    let gn_cases = [(1.0, 0.0, 2.0, 2.0, 2.0, 2.0), (1.0, 0.0, 2.0, 4.0, 2.0, 2.0)];
    let mut gn: Vec<Worst> = Vec::new();
    for &(alpha, m, l, p, q, r) in &gn_cases {
        let theta = gn_theta(alpha, m, l, p, q, r)?;
        gn.push(Worst::new(IneqParams {
            alpha: Some(alpha),
            m: Some(m),
            l: Some(l),
            p: Some(p),
            theta: Some(theta),
            ..Default::default()
        }));
    }
    let kp_cases = [KatoPonceExponents::sup_times_l2(), KatoPonceExponents::all_four()];
    let kp_params = |e: KatoPonceExponents| IneqParams { s: Some(1.0), exponents: Some(e), ..Default::default() };
    let mut kp: Vec<(Worst, Worst)> = kp_cases
        .iter()
        .map(|&e| (Worst::new(kp_params(e)), Worst::new(kp_params(e))))
        .collect();
    let mut hls = Worst::new(IneqParams { s: Some(0.5), p: Some(1.5), ..Default::default() });

    for _ in 0..cfg.trials {
        let f = rng.band_limited(grid, cfg.kmax);
        let g = rng.band_limited(grid, cfg.kmax);
        emb.push(check_embedding(&f, 1.0)?);
        for (w, &(alpha, m, l, p, q, r)) in gn.iter_mut().zip(&gn_cases) {
            w.push(check_gn(&f, alpha, m, l, p, q, r)?.0);
        }
        for ((wp, wc), e) in kp.iter_mut().zip(&kp_cases) {
            let (rp, rc) = check_kato_ponce(&f, &g, 1.0, e)?;
            wp.push(rp);
            wc.push(rc);
        }
        hls.push(check_hls(&f, 0.5, 1.5)?);
    }

    let t = cfg.trials;
    let seed = cfg.seed;
    let mut reports = vec![emb.report("embedding", t, seed)];
    for (w, id) in gn.into_iter().zip(["gagliardo_nirenberg_l2", "gagliardo_nirenberg_l4"]) {
        reports.push(w.report(id, t, seed));
    }
    for ((wp, wc), tag) in kp.into_iter().zip(["sup_l2", "l4"]) {
        reports.push(wp.report(&format!("kato_ponce_product_{tag}"), t, seed));
        reports.push(wc.report(&format!("kato_ponce_commutator_{tag}"), t, seed));
    }
    reports.push(hls.report("hardy_littlewood_sobolev", t, seed));
    Ok(reports)
}

/// Random `(l, s)` per trial and random band limits, so the equality case
/// (a single shell) is exercised alongside broad spectra.
fn interpolation_report(grid: &Grid, cfg: &SuiteConfig) -> Result<IneqReport> {
    let mut fields = FieldRng::new(cfg.seed);
    let mut params = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let mut worst = Worst::new(IneqParams::default());
    for _ in 0..cfg.interpolation_trials {
        let l: f64 = params.random_range(0.0..3.0);
        let s: f64 = params.random_range(0.0..1.5);
        let kmax: f64 = params.random_range(1.0..=cfg.kmax.max(1.0));
        let f = fields.band_limited(grid, kmax);
        let r = check_interpolation(&f, l, s)?;
        if r > 1.0 + INTERPOLATION_TOLERANCE {
            worst.violations += 1;
        }
        if r > worst.ratio {
            worst.ratio = r;
            worst.params = IneqParams {
                s: Some(s),
                l: Some(l),
                theta: Some(interpolation_theta(l, s)),
                ..Default::default()
            };
        }
    }
    Ok(worst.report("interpolation", cfg.interpolation_trials, cfg.seed))
}

/// Worst ratios of the `L^p` inequalities on `n` and `2n` with the same
/// seed and band, paired by id.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementRow {
    pub id: String,
    pub coarse: f64,
    pub fine: f64,
    pub relative_change: f64,
}

pub fn refinement_study(cfg: &SuiteConfig) -> Result<Vec<RefinementRow>> {
    let coarse = lp_reports(&Grid::new(3, cfg.n, 2.0 * std::f64::consts::PI)?, cfg)?;
    let fine = lp_reports(&Grid::new(3, 2 * cfg.n, 2.0 * std::f64::consts::PI)?, cfg)?;
    Ok(coarse
        .into_iter()
        .zip(fine)
        .map(|(c, f)| RefinementRow {
            relative_change: (f.worst_ratio - c.worst_ratio).abs() / c.worst_ratio.abs().max(f64::MIN_POSITIVE),
            id: c.id,
            coarse: c.worst_ratio,
            fine: f.worst_ratio,
        })
        .collect())
}
