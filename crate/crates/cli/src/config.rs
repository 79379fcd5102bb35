//! JSON run configuration. Unknown fields are rejected at every level.

use std::path::PathBuf;

use nsch_core::inequality::SuiteConfig;
use nsch_core::{DiagnosticsSpec, Grid, ModelParams, StepControls};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::ic::IcKind;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub grid: GridConfig,
    #[serde(default)]
    pub params: ModelParams,
    pub controls: StepControls,
    #[serde(default)]
    pub diagnostics: DiagnosticsSpec,
    pub ic: IcConfig,
    #[serde(default)]
    pub outputs: OutputsConfig,
    #[serde(default)]
    pub experiment: Preset,
    #[serde(default)]
    pub energy_check: EnergyCheckOptions,
    #[serde(default)]
    pub smallness: SmallnessOptions,
    #[serde(default)]
    pub decay_study: DecayStudyOptions,
    #[serde(default)]
    pub ineq_suite: IneqSuiteOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub n: usize,
    pub box_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IcConfig {
    pub kind: IcKind,
    /// Target value of `‖u‖_{Ḣ^½} + ‖φ‖_{Ḣ^½} + ‖φ‖_{Ḣ^{3/2}}`.
    pub amplitude: f64,
    #[serde(default)]
    pub seed: u64,
    /// Band limit (random-divfree) or mode number (taylor-green-like, single-mode).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kmax: Option<f64>,
    /// Standard deviation of the gaussian-blob profile.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
}

/// Output file names, resolved against the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputsConfig {
    pub csv: PathBuf,
    pub json: PathBuf,
    /// Write a field checkpoint every this many records; 0 disables them.
    pub checkpoint_stride: usize,
}

impl Default for OutputsConfig {
    fn default() -> Self {
        Self {
            csv: "diagnostics.csv".into(),
            json: "report.json".into(),
            checkpoint_stride: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    #[default]
    Run,
    EnergyCheck,
    Smallness,
    DecayStudy,
    IneqSuite,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::Run,
        Preset::EnergyCheck,
        Preset::Smallness,
        Preset::DecayStudy,
        Preset::IneqSuite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Run => "run",
            Preset::EnergyCheck => "energy-check",
            Preset::Smallness => "smallness",
            Preset::DecayStudy => "decay-study",
            Preset::IneqSuite => "ineq-suite",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyCheckOptions {
    /// Number of step sizes `dt, dt/2, …`.
    pub levels: usize,
}

impl Default for EnergyCheckOptions {
    fn default() -> Self {
        Self { levels: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmallnessOptions {
    /// Amplitudes to sweep; the report sorts them ascending.
    pub amplitudes: Vec<f64>,
    /// Relative slack when testing `X` for monotone decay.
    pub monotone_tolerance: f64,
}

impl Default for SmallnessOptions {
    fn default() -> Self {
        Self {
            amplitudes: vec![1e-3, 1e-2, 1e-1, 1.0],
            monotone_tolerance: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecayStudyOptions {
    pub linearized: bool,
    pub nonlinear: bool,
    /// Lebesgue index of the initial data in the target exponent.
    pub p: f64,
    /// Relative heat-kernel tail allowed at half the box length.
    pub horizon_tolerance: f64,
    pub fit_start: f64,
}

impl Default for DecayStudyOptions {
    fn default() -> Self {
        Self {
            linearized: true,
            nonlinear: false,
            p: 1.5,
            horizon_tolerance: 1e-3,
            fit_start: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IneqSuiteOptions {
    pub n: usize,
    pub kmax: f64,
    pub trials: usize,
    pub interpolation_trials: usize,
    pub seed: u64,
    /// Also rerun the `L^p` checks on a grid twice as fine.
    pub refinement: bool,
}

impl Default for IneqSuiteOptions {
    fn default() -> Self {
        let d = SuiteConfig::default();
        Self {
            n: d.n,
            kmax: d.kmax,
            trials: d.trials,
            interpolation_trials: d.interpolation_trials,
            seed: d.seed,
            refinement: true,
        }
    }
}

impl IneqSuiteOptions {
    pub fn suite(&self) -> SuiteConfig {
        SuiteConfig {
            n: self.n,
            kmax: self.kmax,
            trials: self.trials,
            interpolation_trials: self.interpolation_trials,
            seed: self.seed,
        }
    }
}

/// Command-line overrides applied on top of a parsed config.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub linearized: bool,
    pub paper_mode: Option<bool>,
}

impl RunConfig {
    /// Parses and validates JSON text.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config = Self::from_json(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Parses JSON text without semantic checks, reporting the offending
    /// field path with line and column.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let mut de = serde_json::Deserializer::from_str(text);
        let config: RunConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            CliError::Config {
                field: path,
                message: inner.to_string(),
                line: Some(inner.line()),
                column: Some(inner.column()),
            }
        })?;
        de.end().map_err(|e| CliError::Config {
            field: ".".into(),
            message: e.to_string(),
            line: Some(e.line()),
            column: Some(e.column()),
        })?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// A small valid configuration on a 16³ box.
    pub fn example() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            grid: GridConfig {
                dim: 3,
                n: 16,
                box_length: 2.0 * std::f64::consts::PI,
            },
            params: ModelParams::default(),
            controls: StepControls::new(1e-3, 0.01),
            diagnostics: DiagnosticsSpec::default(),
            ic: IcConfig {
                kind: IcKind::RandomDivfree,
                amplitude: 1e-2,
                seed: 0,
                kmax: None,
                width: None,
            },
            outputs: OutputsConfig::default(),
            experiment: Preset::Run,
            energy_check: EnergyCheckOptions::default(),
            smallness: SmallnessOptions::default(),
            decay_study: DecayStudyOptions::default(),
            ineq_suite: IneqSuiteOptions::default(),
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.ic.seed = seed;
            self.ineq_suite.seed = seed;
        }
        if o.linearized {
            self.params.linearized = true;
        }
        if let Some(p) = o.paper_mode {
            self.params.paper_mode = p;
        }
    }

    pub fn build_grid(&self) -> Result<Grid, CliError> {
        let g = &self.grid;
        Grid::new(g.dim, g.n, g.box_length).map_err(|e| match e {
            nsch_core::Error::InvalidGrid { field, reason } => CliError::config(format!("grid.{field}"), reason),
            other => CliError::from(other),
        })
    }

    /// Semantic checks that parsing alone cannot express.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::config(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        self.build_grid()?;
        self.params.validate().map_err(|e| prefixed("params", e))?;
        self.controls.validate().map_err(|e| prefixed("controls", e))?;
        for &s in &self.diagnostics.neg_orders {
            let max = if self.params.paper_mode { 0.5 } else { f64::INFINITY };
            if !(s >= 0.0 && s <= max) {
                return Err(CliError::config(
                    "diagnostics.neg_orders",
                    format!("order {s} outside [0, {max}]"),
                ));
            }
        }
        self.ic.validate(self.grid.n)?;
        for (name, path) in [("outputs.csv", &self.outputs.csv), ("outputs.json", &self.outputs.json)] {
            if path.as_os_str().is_empty() || path.file_name().is_none() {
                return Err(CliError::config(name, "must name a file"));
            }
        }
        if self.energy_check.levels == 0 {
            return Err(CliError::config("energy_check.levels", "must be >= 1"));
        }
        let sm = &self.smallness;
        if sm.amplitudes.is_empty() || sm.amplitudes.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(CliError::config(
                "smallness.amplitudes",
                "must be a nonempty list of positive amplitudes",
            ));
        }
        if !(sm.monotone_tolerance >= 0.0) {
            return Err(CliError::config("smallness.monotone_tolerance", "must be >= 0"));
        }
        let ds = &self.decay_study;
        nsch_core::diagnostics::sigma_target(0, ds.p, self.params.paper_mode)
            .map_err(|e| CliError::config("decay_study.p", e.to_string()))?;
        if !(ds.horizon_tolerance > 0.0 && ds.horizon_tolerance < 1.0) {
            return Err(CliError::config("decay_study.horizon_tolerance", "must lie in (0, 1)"));
        }
        if !(ds.fit_start >= 0.0 && ds.fit_start.is_finite()) {
            return Err(CliError::config("decay_study.fit_start", "must be finite and >= 0"));
        }
        let suite = &self.ineq_suite;
        if suite.n % 2 != 0 || suite.n < 8 {
            return Err(CliError::config("ineq_suite.n", format!("must be even and >= 8, got {}", suite.n)));
        }
        if !(suite.kmax >= 1.0 && suite.kmax.is_finite()) {
            return Err(CliError::config("ineq_suite.kmax", "must be finite and >= 1"));
        }
        Ok(())
    }
}

impl IcConfig {
    fn validate(&self, n: usize) -> Result<(), CliError> {
        if !(self.amplitude.is_finite() && self.amplitude > 0.0) {
            return Err(CliError::config(
                "ic.amplitude",
                format!("must be positive, got {}", self.amplitude),
            ));
        }
        if let Some(k) = self.kmax {
            if !(k >= 1.0 && k < (n / 2) as f64) {
                return Err(CliError::config(
                    "ic.kmax",
                    format!("must lie in [1, n/2), got {k}"),
                ));
            }
        }
        if let Some(w) = self.width {
            if !(w.is_finite() && w > 0.0) {
                return Err(CliError::config("ic.width", format!("must be positive, got {w}")));
            }
        }
        Ok(())
    }
}

fn prefixed(section: &str, e: nsch_core::Error) -> CliError {
    match e {
        nsch_core::Error::InvalidArgument { name, reason } => CliError::config(format!("{section}.{name}"), reason),
        other => CliError::config(section, other.to_string()),
    }
}
