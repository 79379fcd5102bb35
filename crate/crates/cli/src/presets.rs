//! Experiment presets. Each one returns a serializable result that the
//! caller wraps with [`Metadata`] and writes as the JSON report.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nsch_core::diagnostics::{self, series_names, Recorder};
use nsch_core::inequality::{refinement_study, run_suite, IneqReport, RefinementRow};
use nsch_core::integrator::{cfl_candidates, integrate, CflCandidates, Observer};
use nsch_core::spectral::{divergence, sobolev_norm, write_field, write_vector_field};
use nsch_core::{DecayFit, DiagnosticsRecord, DiagnosticsSpec, ModelParams, Scheme, State, StepControls};
use serde::Serialize;

use crate::config::{GridConfig, Preset, RunConfig};
use crate::error::CliError;
use crate::ic::{generate_ic, IcInfo, IcKind};

/// Interpretation choices shared by every report.
pub fn adopted_indices() -> BTreeMap<&'static str, &'static str> {
    BTreeMap::from([
        ("critical_pair", "X = |u|_{H^1/2}^2 + |phi|_{H^1/2}^2 + |phi|_{H^3/2}^2"),
        ("decay_target", "sigma_k = (3/2)(1/p - 1/2) + k/2 for L^p data, 3/2 <= p <= 2"),
        ("negative_norm_decay", "derivative order l = k, exponent (k + s)/2"),
        ("ic_amplitude", "|u|_{H^1/2} + |phi|_{H^1/2} + |phi|_{H^3/2} = amplitude"),
        ("negative_orders", "s in [0, 1/2] in paper mode"),
    ])
}

pub const MEAN_REMOVAL: &str =
    "phi series are computed from phi minus its spatial mean; the mean is conserved and does not decay";

/// Largest diffusivity of the linear semigroups: `ν` for `u` and
/// `Mζ(3ω₀² − 1)` for `φ`.
pub fn effective_diffusivity(p: &ModelParams) -> f64 {
    let phi = p.mobility * p.zeta * (3.0 * p.omega0 * p.omega0 - 1.0);
    p.nu.max(phi).max(f64::MIN_POSITIVE)
}

/// The first-order IMEX scheme damps every Fourier mode for every `dt`
/// (in the linearized dynamics) when the implicit Laplacian covers at least
/// half of the explicit one.
pub fn imex_unconditionally_stable(p: &ModelParams) -> bool {
    2.0 * p.kappa >= p.mobility * p.zeta * (3.0 * p.omega0 * p.omega0 - 1.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub preset: Preset,
    pub schema_version: u32,
    pub version: &'static str,
    pub paper_mode: bool,
    pub linearized: bool,
    pub kappa: f64,
    pub omega0: f64,
    pub seed: u64,
    pub grid: GridConfig,
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    pub imex_unconditionally_stable: bool,
    pub effective_diffusivity: f64,
    pub validity_horizon: f64,
    pub horizon_tolerance: f64,
    pub adopted_indices: BTreeMap<&'static str, &'static str>,
    pub mean_removal: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ic: Option<IcInfo>,
}

impl Metadata {
    pub fn new(config: &RunConfig, preset: Preset) -> Self {
        let p = &config.params;
        let d = effective_diffusivity(p);
        let tol = config.decay_study.horizon_tolerance;
        Self {
            preset,
            schema_version: config.schema_version,
            version: env!("CARGO_PKG_VERSION"),
            paper_mode: p.paper_mode,
            linearized: p.linearized,
            kappa: p.kappa,
            omega0: p.omega0,
            seed: config.ic.seed,
            grid: config.grid,
            scheme: config.controls.scheme,
            dt: config.controls.dt,
            t_end: config.controls.t_end,
            imex_unconditionally_stable: imex_unconditionally_stable(p),
            effective_diffusivity: d,
            validity_horizon: diagnostics::validity_horizon(config.grid.box_length, d, tol),
            horizon_tolerance: tol,
            adopted_indices: adopted_indices(),
            mean_removal: MEAN_REMOVAL,
            ic: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub metadata: Metadata,
    pub result: PresetResult,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum PresetResult {
    Run(RunResult),
    EnergyCheck(EnergyCheckResult),
    Smallness(SmallnessResult),
    DecayStudy(DecayStudyResult),
    IneqSuite(IneqSuiteResult),
}

impl Report {
    /// Error to surface after the report is written, if any.
    pub fn failure(&self) -> Option<CliError> {
        match &self.result {
            PresetResult::IneqSuite(r) if r.violations > 0 => Some(CliError::Violation { count: r.violations }),
            _ => None,
        }
    }
}

/// `path` with `_tag` appended to its file stem.
pub fn suffixed(path: &Path, tag: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_{tag}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{tag}"),
    };
    path.with_file_name(name)
}

pub fn write_csv(path: &Path, spec: &DiagnosticsSpec, records: &[DiagnosticsRecord]) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    diagnostics::write_csv(&mut w, spec, records)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Writes `u` then `φ` as two checkpoint blocks.
pub fn write_checkpoint(path: &Path, state: &State) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_vector_field(&mut w, &state.u)?;
    write_field(&mut w, &state.phi)?;
    w.flush().map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckpointEntry {
    pub file: String,
    pub time: f64,
}

/// Records, invariant monitors and checkpoints of one integration.
#[derive(Debug)]
pub struct Trajectory {
    pub records: Vec<DiagnosticsRecord>,
    pub final_state: Option<State>,
    /// Divergence of the time stepper, if it happened.
    pub diverged: Option<CliError>,
    /// `max_t |mean φ(t) − mean φ(0)|`, relative to the initial RMS of `φ`.
    pub max_mean_drift: f64,
    /// `max_t ‖div u‖ / ‖∇u‖` (zero for `u = 0`).
    pub max_divergence: f64,
    pub all_finite: bool,
    pub checkpoints: Vec<CheckpointEntry>,
}

struct Monitor<'a> {
    mean0: f64,
    scale0: f64,
    drift: f64,
    divergence: f64,
    finite: bool,
    checkpoint: Option<(&'a Path, usize)>,
    count: usize,
    written: Vec<CheckpointEntry>,
    error: Option<CliError>,
}

impl Monitor<'_> {
    fn visit(&mut self, state: &State, record: &DiagnosticsRecord) {
        let drift = (state.phi.mean() - self.mean0).abs() / self.scale0;
        self.drift = self.drift.max(drift);
        let grad_u: f64 = state
            .u
            .components()
            .iter()
            .map(|c| sobolev_norm(c, 1.0).powi(2))
            .sum::<f64>()
            .sqrt();
        if grad_u > 0.0 {
            self.divergence = self.divergence.max(sobolev_norm(&divergence(&state.u), 0.0) / grad_u);
        }
        self.finite &= state.is_finite() && record_is_finite(record);
        if let Some((dir, stride)) = self.checkpoint {
            if self.error.is_none() && self.count % stride == 0 {
                let name = format!("checkpoint_{:05}.bin", self.count);
                match write_checkpoint(&dir.join(&name), state) {
                    Ok(()) => self.written.push(CheckpointEntry {
                        file: name,
                        time: state.time,
                    }),
                    Err(e) => self.error = Some(e),
                }
            }
        }
        self.count += 1;
    }
}

impl Observer for Monitor<'_> {
    fn observe(&mut self, state: &State, record: &DiagnosticsRecord) {
        self.visit(state, record);
    }
}

fn record_is_finite(r: &DiagnosticsRecord) -> bool {
    [r.time, r.kinetic, r.free_energy, r.dissipation, r.x, r.y]
        .iter()
        .chain(r.neg_norms.iter().map(|(_, v)| v))
        .chain(r.sobolev_series.iter().map(|(_, v)| v))
        .all(|v| v.is_finite())
}

/// Integrates `state`, recording the initial state and every `stride`-th
/// step. Divergence ends the run early and is reported in the result.
pub fn simulate(
    state: State,
    controls: &StepControls,
    spec: &DiagnosticsSpec,
    checkpoint: Option<(&Path, usize)>,
) -> Result<Trajectory, CliError> {
    let first = diagnostics::record(&state, spec)?;
    let rms = sobolev_norm(&state.phi, 0.0) / state.grid().volume().sqrt();
    let mut monitor = Monitor {
        mean0: state.phi.mean(),
        scale0: rms.max(f64::MIN_POSITIVE),
        drift: 0.0,
        divergence: 0.0,
        finite: true,
        checkpoint: checkpoint.filter(|(_, s)| *s > 0),
        count: 0,
        written: Vec::new(),
        error: None,
    };
    monitor.visit(&state, &first);
    let mut recorder = Recorder { records: vec![first] };
    let outcome = integrate(state, controls, spec, &mut [&mut recorder, &mut monitor]);
    if let Some(e) = monitor.error {
        return Err(e);
    }
    let (final_state, diverged) = match outcome {
        Ok(s) => (Some(s), None),
        Err(e) => match CliError::from(e) {
            d @ CliError::Diverged { .. } => (None, Some(d)),
            other => return Err(other),
        },
    };
    Ok(Trajectory {
        records: recorder.records,
        final_state,
        diverged,
        max_mean_drift: monitor.drift,
        max_divergence: monitor.divergence,
        all_finite: monitor.finite,
        checkpoints: monitor.written,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordSummary {
    pub time: f64,
    pub energy: f64,
    pub x: f64,
    pub y: f64,
}

impl From<&DiagnosticsRecord> for RecordSummary {
    fn from(r: &DiagnosticsRecord) -> Self {
        Self {
            time: r.time,
            energy: r.energy(),
            x: r.x,
            y: r.y,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunResult {
    pub csv: String,
    pub records: usize,
    pub initial: RecordSummary,
    pub last: RecordSummary,
    pub max_mean_drift: f64,
    pub max_divergence: f64,
    pub all_finite: bool,
    pub initial_cfl: CflCandidates,
    pub checkpoints: Vec<CheckpointEntry>,
}

/// Resolves an output name against the output directory.
fn output_path(out_dir: &Path, name: &Path) -> PathBuf {
    out_dir.join(name)
}

fn ic_state(config: &RunConfig, params: ModelParams, amplitude: f64) -> Result<(State, IcInfo), CliError> {
    let grid = config.build_grid()?;
    let mut ic = config.ic.clone();
    ic.amplitude = amplitude;
    let out = generate_ic(&ic, &grid, params).map_err(|e| match e {
        nsch_core::Error::InvalidArgument { name, reason } => CliError::config(format!("ic.{name}"), reason),
        other => CliError::from(other),
    })?;
    Ok((out.state, out.info))
}

/// Plain integration with CSV, checkpoints and an invariant summary.
pub fn run(config: &RunConfig, out_dir: &Path) -> Result<Report, CliError> {
    let mut metadata = Metadata::new(config, Preset::Run);
    let (state, info) = ic_state(config, config.params, config.ic.amplitude)?;
    metadata.ic = Some(info);
    let initial_cfl = cfl_candidates(&state);
    let stride = config.outputs.checkpoint_stride;
    let traj = simulate(state, &config.controls, &config.diagnostics, Some((out_dir, stride)))?;
    let csv = output_path(out_dir, &config.outputs.csv);
    write_csv(&csv, &config.diagnostics, &traj.records)?;
    let result = RunResult {
        csv: config.outputs.csv.display().to_string(),
        records: traj.records.len(),
        initial: (&traj.records[0]).into(),
        last: traj.records.last().expect("initial record").into(),
        max_mean_drift: traj.max_mean_drift,
        max_divergence: traj.max_divergence,
        all_finite: traj.all_finite,
        initial_cfl,
        checkpoints: traj.checkpoints,
    };
    let report = Report {
        metadata,
        result: PresetResult::Run(result),
    };
    write_json(&output_path(out_dir, &config.outputs.json), &report)?;
    match traj.diverged {
        Some(e) => Err(e),
        None => Ok(report),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyLevel {
    pub dt: f64,
    pub records: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyCheckResult {
    pub levels: Vec<EnergyLevel>,
    /// `log₂(r_i / r_{i+1})` per consecutive pair; `None` when either residual vanishes.
    pub orders: Vec<Option<f64>>,
    /// Order of the finest pair.
    pub observed_order: Option<f64>,
    pub csv: Vec<String>,
}

/// Residual of the energy law for `dt, dt/2, …` (`levels` values), all
/// starting from `state`.
pub fn energy_residuals(
    state: &State,
    controls: &StepControls,
    spec: &DiagnosticsSpec,
    levels: usize,
) -> Result<Vec<(EnergyLevel, Vec<DiagnosticsRecord>)>, CliError> {
    if controls.adaptive {
        return Err(CliError::config(
            "controls.adaptive",
            "energy-check needs fixed steps for equispaced records",
        ));
    }
    let mut out = Vec::with_capacity(levels);
    for i in 0..levels {
        let mut c = controls.clone();
        c.dt = controls.dt / (1u64 << i) as f64;
        let traj = simulate(state.clone(), &c, spec, None)?;
        if let Some(e) = traj.diverged {
            return Err(e);
        }
        let residual = diagnostics::dissipation_residual(&traj.records)
            .map_err(|e| CliError::config("controls.t_end", e.to_string()))?;
        out.push((
            EnergyLevel {
                dt: c.dt,
                records: traj.records.len(),
                residual,
            },
            traj.records,
        ));
    }
    Ok(out)
}

pub fn convergence_orders(residuals: &[f64]) -> Vec<Option<f64>> {
    residuals
        .windows(2)
        .map(|w| (w[0] > 0.0 && w[1] > 0.0).then(|| (w[0] / w[1]).log2()))
        .collect()
}

pub fn energy_check(config: &RunConfig, out_dir: &Path) -> Result<Report, CliError> {
    let mut metadata = Metadata::new(config, Preset::EnergyCheck);
    let (state, info) = ic_state(config, config.params, config.ic.amplitude)?;
    metadata.ic = Some(info);
    let runs = energy_residuals(&state, &config.controls, &config.diagnostics, config.energy_check.levels)?;
    let mut csv = Vec::new();
    for (i, (_, records)) in runs.iter().enumerate() {
        let name = if i == 0 {
            config.outputs.csv.clone()
        } else {
            suffixed(&config.outputs.csv, &format!("level{i}"))
        };
        write_csv(&output_path(out_dir, &name), &config.diagnostics, records)?;
        csv.push(name.display().to_string());
    }
    let levels: Vec<EnergyLevel> = runs.into_iter().map(|(l, _)| l).collect();
    let residuals: Vec<f64> = levels.iter().map(|l| l.residual).collect();
    let orders = convergence_orders(&residuals);
    let result = EnergyCheckResult {
        observed_order: orders.last().copied().flatten(),
        orders,
        levels,
        csv,
    };
    let report = Report {
        metadata,
        result: PresetResult::EnergyCheck(result),
    };
    write_json(&output_path(out_dir, &config.outputs.json), &report)?;
    Ok(report)
}

/// `max_t v(t) / v(0)`, with `0/0 = 1`.
pub fn max_ratio(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut it = values.into_iter();
    let Some(v0) = it.next() else { return 1.0 };
    let max = it.fold(v0, f64::max);
    if v0 == 0.0 {
        if max == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        max / v0
    }
}

/// Whether `values` never increases by more than `tol` relative.
pub fn is_monotone_nonincreasing(values: &[f64], tol: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] + tol * w[0].abs())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmallnessRow {
    pub amplitude: f64,
    pub x0: f64,
    pub max_x_ratio: f64,
    pub monotone: bool,
    /// `(s, max_t ℰ_{−s}(t) / ℰ_{−s}(0))`.
    pub neg_norm_ratios: Vec<(f64, f64)>,
    pub final_time: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diverged_at: Option<f64>,
    pub csv: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmallnessResult {
    /// Sorted by amplitude.
    pub rows: Vec<SmallnessRow>,
    /// Smallest amplitude at which `X` stops decaying monotonically.
    pub threshold: Option<f64>,
}

/// Smallness summary of one trajectory.
pub fn smallness_row(
    amplitude: f64,
    records: &[DiagnosticsRecord],
    spec: &DiagnosticsSpec,
    tol: f64,
    diverged_at: Option<f64>,
) -> SmallnessRow {
    let xs: Vec<f64> = records.iter().map(|r| r.x).collect();
    let neg_norm_ratios = spec
        .neg_orders
        .iter()
        .map(|&s| (s, max_ratio(records.iter().map(|r| r.neg_norm(s).unwrap_or(f64::NAN)))))
        .collect();
    SmallnessRow {
        amplitude,
        x0: xs[0],
        max_x_ratio: max_ratio(xs.iter().copied()),
        monotone: diverged_at.is_none() && is_monotone_nonincreasing(&xs, tol),
        neg_norm_ratios,
        final_time: records.last().map_or(0.0, |r| r.time),
        diverged_at,
        csv: String::new(),
    }
}

pub fn smallness(config: &RunConfig, out_dir: &Path) -> Result<Report, CliError> {
    let mut metadata = Metadata::new(config, Preset::Smallness);
    let mut amplitudes = config.smallness.amplitudes.clone();
    amplitudes.sort_by(f64::total_cmp);
    amplitudes.dedup();
    let mut rows = Vec::with_capacity(amplitudes.len());
    for (i, &a) in amplitudes.iter().enumerate() {
        let (state, info) = ic_state(config, config.params, a)?;
        if i == 0 {
            metadata.ic = Some(info);
        }
        let traj = simulate(state, &config.controls, &config.diagnostics, None)?;
        let diverged_at = match traj.diverged {
            Some(CliError::Diverged { time, .. }) => Some(time),
            _ => None,
        };
        let name = suffixed(&config.outputs.csv, &format!("a{i}"));
        write_csv(&output_path(out_dir, &name), &config.diagnostics, &traj.records)?;
        let mut row = smallness_row(
            a,
            &traj.records,
            &config.diagnostics,
            config.smallness.monotone_tolerance,
            diverged_at,
        );
        row.csv = name.display().to_string();
        rows.push(row);
    }
    let threshold = rows.iter().find(|r| !r.monotone).map(|r| r.amplitude);
    let report = Report {
        metadata,
        result: PresetResult::Smallness(SmallnessResult { rows, threshold }),
    };
    write_json(&output_path(out_dir, &config.outputs.json), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesFit {
    pub series: String,
    pub k: u32,
    pub fit: DecayFit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Increment {
    pub family: String,
    pub from_k: u32,
    pub to_k: u32,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayRun {
    pub linearized: bool,
    pub csv: String,
    pub fits: Vec<SeriesFit>,
    /// `σ̂(k+1) − σ̂(k)` per series family.
    pub increments: Vec<Increment>,
}

impl DecayRun {
    pub fn sigma(&self, series: &str) -> Option<f64> {
        self.fits.iter().find(|f| f.series == series).map(|f| f.fit.sigma_hat)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayStudyResult {
    pub window: [f64; 2],
    pub p: f64,
    pub runs: Vec<DecayRun>,
    /// `σ̂_nonlinear − σ̂_linearized` per series, when both runs are present.
    pub nonlinear_shift: Vec<(String, f64)>,
}

/// Fits every tracked series of `records` over `window`.
pub fn decay_fits(
    records: &[DiagnosticsRecord],
    spec: &DiagnosticsSpec,
    window: [f64; 2],
    p: f64,
    paper_mode: bool,
) -> Result<Vec<SeriesFit>, CliError> {
    let mut fits = Vec::new();
    for &k in &spec.series_orders {
        let target = diagnostics::sigma_target(k, p, paper_mode)?;
        for name in series_names(k) {
            let series: Vec<(f64, f64)> = records
                .iter()
                .map(|r| (r.time, r.series(&name).expect("series recorded")))
                .collect();
            let fit = diagnostics::fit_decay(&series, window)
                .map_err(|e| CliError::config("controls", format!("cannot fit {name}: {e}")))?;
            fits.push(SeriesFit {
                series: name,
                k,
                fit: fit.with_target(target),
            });
        }
    }
    Ok(fits)
}

fn increments(fits: &[SeriesFit], spec: &DiagnosticsSpec) -> Vec<Increment> {
    let mut out = Vec::new();
    let mut orders = spec.series_orders.clone();
    orders.sort_unstable();
    orders.dedup();
    for (family, tag) in ["u", "phi", "grad_phi"].into_iter().enumerate() {
        for w in orders.windows(2) {
            let lo = &series_names(w[0])[family];
            let hi = &series_names(w[1])[family];
            let sigma = |n: &str| fits.iter().find(|f| f.series == n).map(|f| f.fit.sigma_hat);
            if let (Some(a), Some(b)) = (sigma(lo), sigma(hi)) {
                out.push(Increment {
                    family: tag.to_string(),
                    from_k: w[0],
                    to_k: w[1],
                    delta: b - a,
                });
            }
        }
    }
    out
}

pub fn decay_study(config: &RunConfig, out_dir: &Path) -> Result<Report, CliError> {
    let opts = &config.decay_study;
    if config.ic.kind != IcKind::GaussianBlob {
        return Err(CliError::config("ic.kind", "decay-study needs gaussian-blob data"));
    }
    if !opts.linearized && !opts.nonlinear {
        return Err(CliError::config(
            "decay_study",
            "enable at least one of `linearized` and `nonlinear`",
        ));
    }
    let mut metadata = Metadata::new(config, Preset::DecayStudy);
    let window = [opts.fit_start, metadata.validity_horizon.min(config.controls.t_end)];
    if !(window[0] < window[1]) {
        return Err(CliError::config(
            "decay_study.fit_start",
            format!("fit window {window:?} is empty"),
        ));
    }
    let mut runs = Vec::new();
    for linearized in [true, false] {
        if (linearized && !opts.linearized) || (!linearized && !opts.nonlinear) {
            continue;
        }
        let params = ModelParams {
            linearized,
            ..config.params
        };
        let (state, info) = ic_state(config, params, config.ic.amplitude)?;
        metadata.ic.get_or_insert(info);
        let traj = simulate(state, &config.controls, &config.diagnostics, None)?;
        let tag = if linearized { "linearized" } else { "nonlinear" };
        let name = suffixed(&config.outputs.csv, tag);
        write_csv(&output_path(out_dir, &name), &config.diagnostics, &traj.records)?;
        if let Some(e) = traj.diverged {
            return Err(e);
        }
        let fits = decay_fits(&traj.records, &config.diagnostics, window, opts.p, params.paper_mode)?;
        runs.push(DecayRun {
            linearized,
            csv: name.display().to_string(),
            increments: increments(&fits, &config.diagnostics),
            fits,
        });
    }
    let nonlinear_shift = match runs.as_slice() {
        [lin, non] => lin
            .fits
            .iter()
            .filter_map(|f| non.sigma(&f.series).map(|s| (f.series.clone(), s - f.fit.sigma_hat)))
            .collect(),
        _ => Vec::new(),
    };
    let result = DecayStudyResult {
        window,
        p: opts.p,
        runs,
        nonlinear_shift,
    };
    let report = Report {
        metadata,
        result: PresetResult::DecayStudy(result),
    };
    write_json(&output_path(out_dir, &config.outputs.json), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IneqSuiteResult {
    pub reports: Vec<IneqReport>,
    pub refinement: Vec<RefinementRow>,
    /// Trials exceeding a unit constant.
    pub violations: usize,
}

pub fn ineq_suite(config: &RunConfig, out_dir: &Path) -> Result<Report, CliError> {
    let metadata = Metadata::new(config, Preset::IneqSuite);
    let suite = config.ineq_suite.suite();
    let reports = run_suite(&suite)?;
    let refinement = if config.ineq_suite.refinement && suite.trials > 0 {
        refinement_study(&suite)?
    } else {
        Vec::new()
    };
    let violations = reports.iter().map(|r| r.violations).sum();
    let report = Report {
        metadata,
        result: PresetResult::IneqSuite(IneqSuiteResult {
            reports,
            refinement,
            violations,
        }),
    };
    write_json(&output_path(out_dir, &config.outputs.json), &report)?;
    Ok(report)
}

/// Runs `preset` with outputs under `out_dir`, which is created if needed.
pub fn execute(config: &RunConfig, preset: Preset, out_dir: &Path) -> Result<Report, CliError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::config("outputs", format!("cannot create {}: {e}", out_dir.display())))?;
    match preset {
        Preset::Run => run(config, out_dir),
        Preset::EnergyCheck => energy_check(config, out_dir),
        Preset::Smallness => smallness(config, out_dir),
        Preset::DecayStudy => decay_study(config, out_dir),
        Preset::IneqSuite => ineq_suite(config, out_dir),
    }
}
