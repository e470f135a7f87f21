//! TOML scenario configuration.
//!
//! Every physical quantity carries its unit in the key: `_omega0` (units of
//! the damped-mode frequency ω₀), `_khz` (ordinary frequency in kHz) or
//! `_ms`. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

/// Coupling table shipped with the tool, usable as `couplings_csv`.
pub const BUILTIN_SEVEN_ION: &str = "builtin:seven-ion";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    /// Reduced-model transfer rate against γ/Vₑ.
    RateScan,
    /// Bare ET pair compared against the reduced three-level model.
    SingleSite,
    DickeHybrid,
    DickeDissipative,
    /// Steady-state donor population over resonant ΔE.
    DeltaESweep,
    BosonW,
    Ghz,
}

impl ScenarioKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::RateScan => "rate-scan",
            ScenarioKind::SingleSite => "single-site",
            ScenarioKind::DickeHybrid => "dicke-hybrid",
            ScenarioKind::DickeDissipative => "dicke-dissipative",
            ScenarioKind::DeltaESweep => "delta-e-sweep",
            ScenarioKind::BosonW => "boson-w",
            ScenarioKind::Ghz => "ghz",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub id: String,
    pub kind: ScenarioKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    /// Damped-mode Fock cutoff; each kind has its own default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_c: Option<usize>,
    pub et: EtSection,
    #[serde(default)]
    pub bath: BathSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub single_site: Option<SingleSiteSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boson_w: Option<BosonWSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ghz: Option<GhzSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<CheckSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EtSection {
    pub delta_e_omega0: f64,
    pub g_omega0: f64,
    #[serde(default)]
    pub v_omega0: f64,
    /// ω₀/2π.
    pub omega0_khz: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathSection {
    #[serde(default)]
    pub n_bar: f64,
    /// Overrides the scenario's default damping rate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_omega0: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub n_targets: usize,
    pub j_omega0: f64,
    /// kHz coupling table with a `# units: kHz` header, or
    /// `builtin:seven-ion`. Relative paths resolve against the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub couplings_csv: Option<String>,
    /// Row of the control qubit in `couplings_csv`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control_row: Option<usize>,
    #[serde(default)]
    pub b_field_omega0: f64,
    #[serde(default)]
    pub counter_rotating: bool,
    /// Synthetic control-row imbalance as a fraction of J.
    #[serde(default)]
    pub delta_j_frac: f64,
    /// Synthetic residual target coupling as a fraction of J.
    #[serde(default)]
    pub j_res_frac: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub steps: usize,
    pub tau1_ms: f64,
    pub tau2_ms: f64,
    #[serde(default = "default_repump_v")]
    pub repump_v_omega0: f64,
    #[serde(default)]
    pub repump_with_couplings: bool,
}

fn default_repump_v() -> f64 {
    0.05
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleSiteSection {
    pub duration_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BosonWSection {
    pub n_modes: usize,
    pub j_omega0: f64,
    /// Fock cutoff of each target mode.
    pub n_t: usize,
    pub n_bars: Vec<f64>,
    pub duration_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GhzSection {
    pub e0_omega0: f64,
    pub k_omega0: f64,
    pub n_half: usize,
    pub n_bars: Vec<f64>,
    pub duration_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub gamma_ratio_min: f64,
    pub gamma_ratio_max: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub n_bars: Vec<f64>,
    /// Resonances `ΔE = nω₀`.
    pub n_values: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_atol")]
    pub atol: f64,
    #[serde(default = "default_sample")]
    pub sample_dt_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_step_ms: Option<f64>,
}

fn default_rtol() -> f64 {
    1e-8
}

fn default_atol() -> f64 {
    1e-10
}

fn default_sample() -> f64 {
    0.05
}

impl Default for IntegratorSection {
    fn default() -> Self {
        Self { rtol: default_rtol(), atol: default_atol(), sample_dt_ms: default_sample(), max_step_ms: None }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    /// File stem; defaults to the scenario id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stem: Option<String>,
}

/// Expected value of a reported metric: either `expected ± tol` or a
/// `[min, max]` range (either end may be open).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSection {
    pub metric: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

impl CheckSection {
    pub fn bounds(&self) -> (f64, f64) {
        match (self.expected, self.tol) {
            (Some(e), Some(t)) => (e - t, e + t),
            _ => (self.min.unwrap_or(f64::NEG_INFINITY), self.max.unwrap_or(f64::INFINITY)),
        }
    }
}

/// Parses and validates a configuration. `base` resolves relative paths.
pub fn parse_config(text: &str, base: Option<&Path>) -> Result<ScenarioConfig, CliError> {
    let mut cfg: ScenarioConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    if let (Some(base), Some(net)) = (base, cfg.network.as_mut()) {
        if let Some(p) = net.couplings_csv.as_mut() {
            if p != BUILTIN_SEVEN_ION && Path::new(p.as_str()).is_relative() {
                *p = base.join(&*p).to_string_lossy().into_owned();
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text, path.parent())
}

pub fn to_toml(cfg: &ScenarioConfig) -> String {
    toml::to_string(cfg).expect("config serializes")
}

fn need<'a, S>(section: &'a Option<S>, name: &str, kind: ScenarioKind) -> Result<&'a S, CliError> {
    section
        .as_ref()
        .ok_or_else(|| CliError::Schema(format!("kind `{}` requires a [{name}] section", kind.as_str())))
}

fn positive(key: &str, x: f64) -> Result<(), CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::Schema(format!("`{key}` must be positive, got {x}")))
    }
}

fn non_negative(key: &str, x: f64) -> Result<(), CliError> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::Schema(format!("`{key}` must be non-negative, got {x}")))
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.id.is_empty() || !self.id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return Err(CliError::Schema(format!("`id` must be a non-empty [A-Za-z0-9_-] name, got {:?}", self.id)));
        }
        positive("et.omega0_khz", self.et.omega0_khz)?;
        non_negative("et.g_omega0", self.et.g_omega0)?;
        if !self.et.delta_e_omega0.is_finite() || !self.et.v_omega0.is_finite() {
            return Err(CliError::Schema("`et` values must be finite".into()));
        }
        non_negative("bath.n_bar", self.bath.n_bar)?;
        if let Some(g) = self.bath.gamma_omega0 {
            non_negative("bath.gamma_omega0", g)?;
        }
        if let Some(n) = self.n_c {
            if n < 2 {
                return Err(CliError::Schema(format!("`n_c` must be at least 2, got {n}")));
            }
        }
        positive("integrator.rtol", self.integrator.rtol)?;
        positive("integrator.atol", self.integrator.atol)?;
        positive("integrator.sample_dt_ms", self.integrator.sample_dt_ms)?;
        if let Some(h) = self.integrator.max_step_ms {
            positive("integrator.max_step_ms", h)?;
        }
        for c in &self.checks {
            let (lo, hi) = c.bounds();
            if c.expected.is_some() != c.tol.is_some() {
                return Err(CliError::Schema(format!("check `{}` needs both `expected` and `tol`", c.metric)));
            }
            if !(lo <= hi) {
                return Err(CliError::Schema(format!("check `{}` has an empty range", c.metric)));
            }
        }
        let kind = self.kind;
        match kind {
            ScenarioKind::RateScan => {
                let s = need(&self.scan, "scan", kind)?;
                positive("scan.gamma_ratio_min", s.gamma_ratio_min)?;
                positive("scan.gamma_ratio_max", s.gamma_ratio_max)?;
                if s.points < 2 || s.gamma_ratio_min >= s.gamma_ratio_max {
                    return Err(CliError::Schema("`scan` needs points ≥ 2 and min < max".into()));
                }
            }
            ScenarioKind::SingleSite => {
                positive("single_site.duration_ms", need(&self.single_site, "single_site", kind)?.duration_ms)?;
            }
            ScenarioKind::DickeHybrid | ScenarioKind::DickeDissipative => {
                let net = need(&self.network, "network", kind)?;
                let s = need(&self.schedule, "schedule", kind)?;
                if net.n_targets == 0 {
                    return Err(CliError::Schema("`network.n_targets` must be positive".into()));
                }
                non_negative("network.delta_j_frac", net.delta_j_frac)?;
                non_negative("network.j_res_frac", net.j_res_frac)?;
                if net.couplings_csv.is_some() != net.control_row.is_some() && net.couplings_csv.as_deref() != Some(BUILTIN_SEVEN_ION) {
                    return Err(CliError::Schema("`network.couplings_csv` requires `network.control_row`".into()));
                }
                if s.steps == 0 || s.steps > net.n_targets {
                    return Err(CliError::Schema(format!(
                        "`schedule.steps` must be in 1..={} (number of targets), got {}",
                        net.n_targets, s.steps
                    )));
                }
                positive("schedule.tau1_ms", s.tau1_ms)?;
                if s.steps > 1 {
                    positive("schedule.tau2_ms", s.tau2_ms)?;
                }
            }
            ScenarioKind::DeltaESweep => {
                let s = need(&self.sweep, "sweep", kind)?;
                if s.n_bars.is_empty() || s.n_values.is_empty() || s.n_values.contains(&0) {
                    return Err(CliError::Schema("`sweep` needs non-empty n_bars and positive n_values".into()));
                }
                if self.bath.gamma_omega0.is_none() {
                    return Err(CliError::Schema("kind `delta-e-sweep` requires `bath.gamma_omega0`".into()));
                }
            }
            ScenarioKind::BosonW => {
                let s = need(&self.boson_w, "boson_w", kind)?;
                positive("boson_w.duration_ms", s.duration_ms)?;
                if s.n_modes == 0 || s.n_t < 2 || s.n_bars.is_empty() {
                    return Err(CliError::Schema("`boson_w` needs n_modes ≥ 1, n_t ≥ 2 and a non-empty n_bars".into()));
                }
            }
            ScenarioKind::Ghz => {
                let s = need(&self.ghz, "ghz", kind)?;
                positive("ghz.duration_ms", s.duration_ms)?;
                if !(1..=2).contains(&s.n_half) || s.n_bars.is_empty() {
                    return Err(CliError::Schema("`ghz` needs n_half in {1, 2} and a non-empty n_bars".into()));
                }
            }
        }
        Ok(())
    }

    pub fn output_stem(&self) -> &str {
        self.output.stem.as_deref().unwrap_or(&self.id)
    }

    pub fn output_dir(&self) -> Option<PathBuf> {
        self.output.dir.as_ref().map(PathBuf::from)
    }

    /// Physical parameters in ω₀ units and in SI, one `key = value` per line.
    pub fn echo(&self) -> Vec<String> {
        let f0 = self.et.omega0_khz;
        let khz = |x: f64| x * f0;
        let mut out = vec![
            format!("omega0 = 2pi x {f0} kHz ({:.6} rad/ms)", std::f64::consts::TAU * f0),
            format!("delta_e = {} omega0 = {} kHz", self.et.delta_e_omega0, khz(self.et.delta_e_omega0)),
            format!("g = {} omega0 = {} kHz", self.et.g_omega0, khz(self.et.g_omega0)),
            format!("v = {} omega0 = {} kHz", self.et.v_omega0, khz(self.et.v_omega0)),
            format!("n_bar = {}", self.bath.n_bar),
        ];
        if let Some(g) = self.bath.gamma_omega0 {
            out.push(format!("gamma = {g} omega0 = {} kHz", khz(g)));
        }
        if let Some(net) = &self.network {
            out.push(format!("j = {} omega0 = {} kHz", net.j_omega0, khz(net.j_omega0)));
            out.push(format!("b_field = {} omega0 = {} kHz", net.b_field_omega0, khz(net.b_field_omega0)));
        }
        if let Some(b) = &self.boson_w {
            out.push(format!("j = {} omega0 = {} kHz", b.j_omega0, khz(b.j_omega0)));
        }
        if let Some(g) = &self.ghz {
            out.push(format!("e0 = {} omega0 = {} kHz", g.e0_omega0, khz(g.e0_omega0)));
            out.push(format!("k = {} omega0 = {} kHz", g.k_omega0, khz(g.k_omega0)));
        }
        out
    }
}
