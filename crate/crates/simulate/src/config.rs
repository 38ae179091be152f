use std::path::{Path, PathBuf};

use lindblad_npi::flow::FlowFamily;
use lindblad_npi::model::ModelConfig;
use lindblad_npi::npi::SchemeConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// On-disk experiment description. Every section has defaults so a minimal
/// file (or none at all) runs the built-in version of each experiment.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional echo of the experiment id; the command line takes precedence.
    #[serde(default)]
    pub experiment: Option<String>,
    #[serde(default)]
    pub scheme: SchemeSettings,
    #[serde(default)]
    pub grid: GridSettings,
    /// Path to a model file (transmon-style JSON); resolved relative to the
    /// config file location.
    #[serde(default)]
    pub model_path: Option<PathBuf>,
    #[serde(default)]
    pub two_qubit: TwoQubitSettings,
    #[serde(default)]
    pub cavity: CavitySettings,
    #[serde(default)]
    pub jc: JcSettings,
    #[serde(default)]
    pub scan: ScanSettings,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Explicit,
    Implicit,
}

impl Family {
    pub fn to_flow(self) -> FlowFamily {
        match self {
            Family::Explicit => FlowFamily::Explicit,
            Family::Implicit => FlowFamily::Implicit,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Family::Explicit => "explicit",
            Family::Implicit => "implicit",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSettings {
    pub order: u8,
    pub family: Family,
    /// Truncation constant; defaults to 0.5 (explicit) or 0.1 (implicit).
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default = "default_true")]
    pub renormalize: bool,
    #[serde(default)]
    pub max_rank: Option<usize>,
}

fn default_true() -> bool {
    true
}

impl Default for SchemeSettings {
    fn default() -> Self {
        SchemeSettings {
            order: 4,
            family: Family::Implicit,
            kappa: None,
            renormalize: true,
            max_rank: None,
        }
    }
}

impl SchemeSettings {
    pub fn to_scheme_config(&self) -> Result<SchemeConfig> {
        if !(1..=4).contains(&self.order) {
            return Err(CliError::Config(format!(
                "scheme order must be 1..=4, got {}",
                self.order
            )));
        }
        let mut config = match self.family {
            Family::Explicit => SchemeConfig::explicit(self.order),
            Family::Implicit => SchemeConfig::implicit(self.order),
        };
        if let Some(kappa) = self.kappa {
            if kappa < 0.0 {
                return Err(CliError::Config(format!("kappa must be >= 0, got {kappa}")));
            }
            config = config.with_kappa(kappa);
        }
        config = config.with_renormalize(self.renormalize);
        if let Some(max_rank) = self.max_rank {
            config = config.with_max_rank(max_rank);
        }
        Ok(config)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSettings {
    /// Step counts; empty means the experiment's built-in list.
    #[serde(default)]
    pub n_steps: Vec<usize>,
    /// Horizon in the experiment's native time unit (ns for the cavity
    /// problem, dimensionless otherwise).
    #[serde(default)]
    pub t_final: Option<f64>,
}

impl GridSettings {
    pub fn validate(&self) -> Result<()> {
        if self.n_steps.iter().any(|&n| n == 0) {
            return Err(CliError::Config("n_steps entries must be positive".into()));
        }
        if let Some(t) = self.t_final {
            if !(t > 0.0) {
                return Err(CliError::Config(format!("t_final must be positive, got {t}")));
            }
        }
        Ok(())
    }
}

/// Two-qubit convergence benchmark. The coupling is given in cycles and
/// multiplied by 2π internally; the decay rate is already a plain rate.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoQubitSettings {
    pub j_cycles: f64,
    pub gamma: f64,
    pub t_final: f64,
}

impl Default for TwoQubitSettings {
    fn default() -> Self {
        TwoQubitSettings { j_cycles: 0.2, gamma: 0.02, t_final: 6.0 }
    }
}

impl TwoQubitSettings {
    pub fn j_angular(&self) -> f64 {
        std::f64::consts::TAU * self.j_cycles
    }
}

/// Qudit-cavity experiment extras beyond the model file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavitySettings {
    /// Step count for the companion explicit run (rank comparison and error
    /// baseline); sits above the explicit stability limit.
    pub explicit_n_steps: usize,
    /// The dense reference uses this multiple of the finest step count.
    pub reference_multiplier: usize,
    /// Allowed self-consistency drift of the reference when its step count is
    /// halved; exceeding it aborts with the resolution-check exit code.
    #[serde(default = "default_reference_tolerance")]
    pub reference_tolerance: f64,
    /// Truncation constants for the internal implicit/explicit runs. The
    /// aggressive defaults matter on this stiff model: besides keeping the
    /// rank low they project out the fast high-photon components that the
    /// coarse-step flows amplify.
    #[serde(default = "default_kappa_implicit")]
    pub kappa_implicit: f64,
    #[serde(default = "default_kappa_explicit")]
    pub kappa_explicit: f64,
}

fn default_reference_tolerance() -> f64 {
    1e-5
}

fn default_kappa_implicit() -> f64 {
    0.1
}

fn default_kappa_explicit() -> f64 {
    0.5
}

impl Default for CavitySettings {
    fn default() -> Self {
        CavitySettings {
            explicit_n_steps: 3200,
            reference_multiplier: 10,
            reference_tolerance: default_reference_tolerance(),
            kappa_implicit: default_kappa_implicit(),
            kappa_explicit: default_kappa_explicit(),
        }
    }
}

/// Jaynes-Cummings revival / suppression experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JcSettings {
    /// Cavity levels.
    pub m: usize,
    /// Exchange coupling λ.
    pub coupling: f64,
    /// Qubit dephasing time.
    pub t2_qubit: f64,
    /// Coherent-state amplitude; default √(m/3).
    #[serde(default)]
    pub v: Option<f64>,
    /// Control amplitude A.
    pub amplitude: f64,
    /// Control width B.
    pub width: f64,
}

impl Default for JcSettings {
    fn default() -> Self {
        JcSettings {
            m: 150,
            coupling: 1.0,
            t2_qubit: 4500.0,
            v: None,
            amplitude: 0.0,
            width: 0.1,
        }
    }
}

impl JcSettings {
    pub fn coherent_amplitude(&self) -> f64 {
        self.v.unwrap_or((self.m as f64 / 3.0).sqrt())
    }

    /// Revival time t_r = 2π|v|/λ.
    pub fn revival_time(&self) -> f64 {
        std::f64::consts::TAU * self.coherent_amplitude() / self.coupling
    }
}

/// Cost-scan grid over the control parameters (A, B).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSettings {
    pub a_start: f64,
    pub a_stop: f64,
    pub a_step: f64,
    pub b_start: f64,
    pub b_stop: f64,
    pub b_step: f64,
    /// Explicit A values; overrides the range when nonempty.
    #[serde(default)]
    pub a_values: Vec<f64>,
    #[serde(default)]
    pub b_values: Vec<f64>,
    pub n_steps: usize,
    /// Worker threads for the scan.
    pub threads: usize,
}

impl Default for ScanSettings {
    fn default() -> Self {
        ScanSettings {
            a_start: 0.0,
            a_stop: 0.40,
            a_step: 0.01,
            b_start: 0.01,
            b_stop: 0.60,
            b_step: 0.01,
            a_values: Vec::new(),
            b_values: Vec::new(),
            n_steps: 6400,
            threads: 2,
        }
    }
}

fn range_values(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let n = ((stop - start) / step).round() as i64;
    for i in 0..=n.max(0) {
        out.push(start + i as f64 * step);
    }
    out
}

impl ScanSettings {
    pub fn a_grid(&self) -> Vec<f64> {
        if self.a_values.is_empty() {
            range_values(self.a_start, self.a_stop, self.a_step)
        } else {
            self.a_values.clone()
        }
    }

    pub fn b_grid(&self) -> Vec<f64> {
        if self.b_values.is_empty() {
            range_values(self.b_start, self.b_stop, self.b_step)
        } else {
            self.b_values.clone()
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        config.grid.validate()?;
        Ok(config)
    }

    /// Load the referenced model file; `base` is the config file's directory.
    pub fn load_model(&self, base: Option<&Path>) -> Result<ModelConfig> {
        let Some(rel) = &self.model_path else {
            return Err(CliError::Config("this experiment requires model_path".into()));
        };
        let path = match base {
            Some(dir) if rel.is_relative() => dir.join(rel),
            _ => rel.clone(),
        };
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}
