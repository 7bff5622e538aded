//! Experiment configuration: TOML with nested sections, layered over a named preset.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::PathBuf;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SpectrumInfinite,
    #[serde(rename = "shift-vs-L")]
    #[value(name = "shift-vs-L")]
    ShiftVsL,
    SpectrumFinite,
    G2,
    MomentumDensity,
    ModesFit,
    DelayScan,
    ParaxialCheck,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::SpectrumInfinite => "spectrum-infinite",
            Self::ShiftVsL => "shift-vs-L",
            Self::SpectrumFinite => "spectrum-finite",
            Self::G2 => "g2",
            Self::MomentumDensity => "momentum-density",
            Self::ModesFit => "modes-fit",
            Self::DelayScan => "delay-scan",
            Self::ParaxialCheck => "paraxial-check",
        }
    }

    /// Kinds that build a finite array and its quantum state.
    pub fn is_finite(self) -> bool {
        matches!(self, Self::SpectrumFinite | Self::G2 | Self::MomentumDensity | Self::ModesFit | Self::DelayScan)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// 6×6 arrays and coarse grids.
    Ci,
    /// 9×9 arrays and fine grids.
    Paper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeometryKind {
    Flat,
    Curved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub nx: usize,
    pub ny: usize,
    pub a: f64,
    pub separation: f64,
    /// 1 for a single array, 2 for a dual array.
    pub layers: usize,
    pub geometry: GeometryKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamConfig {
    pub waist: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    pub omega: f64,
    /// Fixed detuning; when absent, lock to the transmission maximum nearest `target`.
    pub detuning: Option<f64>,
    pub target: f64,
    pub window: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub delta_min: f64,
    pub delta_max: f64,
    pub delta_points: usize,
    pub separation_min: f64,
    pub separation_max: f64,
    pub separation_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationConfig {
    pub t_max: f64,
    pub t_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentumConfig {
    pub points: usize,
    pub fraction: f64,
    pub k1: [f64; 2],
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModesConfig {
    pub t_max: f64,
    pub t_points: usize,
    /// Relaxation time before reading off |−⟩; automatic when absent.
    pub settle: Option<f64>,
    /// Use an M×M periodic supercell per layer instead of the finite array.
    pub surrogate_cells: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsConfig {
    pub tol: f64,
    pub shells: usize,
    pub radial_nodes: usize,
    pub angular_nodes: usize,
    pub peak_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParaxialConfig {
    pub epsilons: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub lattice: LatticeConfig,
    pub beam: BeamConfig,
    pub drive: DriveConfig,
    pub spectrum: SpectrumConfig,
    pub correlation: CorrelationConfig,
    pub momentum: MomentumConfig,
    pub modes: ModesConfig,
    pub numerics: NumericsConfig,
    pub paraxial: ParaxialConfig,
}

impl ExperimentConfig {
    pub fn preset(preset: Preset, kind: ExperimentKind) -> Self {
        let paper = preset == Preset::Paper;
        let side = if paper { 9 } else { 6 };
        Self {
            kind,
            seed: 1,
            output: None,
            lattice: LatticeConfig { nx: side, ny: side, a: 0.6, separation: 1.55, layers: 2, geometry: GeometryKind::Curved },
            beam: BeamConfig { waist: Some(1.5) },
            drive: DriveConfig { omega: 1e-3, detuning: None, target: 0.472, window: [0.35, 0.65] },
            spectrum: SpectrumConfig {
                delta_min: -1.0,
                delta_max: 1.0,
                delta_points: if paper { 801 } else { 201 },
                separation_min: match (kind, paper) {
                    (ExperimentKind::DelayScan, _) => 1.53,
                    (_, true) => 0.05,
                    _ => 0.2,
                },
                separation_max: if kind == ExperimentKind::DelayScan { 1.6 } else { 3.0 },
                separation_points: match (kind, paper) {
                    (ExperimentKind::DelayScan, true) => 71,
                    (ExperimentKind::DelayScan, false) => 15,
                    (_, true) => 296,
                    _ => 57,
                },
            },
            correlation: CorrelationConfig { t_max: if paper { 3000.0 } else { 2000.0 }, t_points: if paper { 1201 } else { 401 } },
            momentum: MomentumConfig {
                points: if paper { 41 } else { 21 },
                fraction: 0.95,
                k1: [1.33, -1.84],
                times: vec![0.0, 10.0],
            },
            modes: ModesConfig { t_max: if paper { 400.0 } else { 200.0 }, t_points: 801, settle: None, surrogate_cells: None },
            numerics: NumericsConfig {
                tol: 1e-8,
                shells: 64,
                radial_nodes: if paper { 48 } else { 24 },
                angular_nodes: if paper { 8 } else { 4 },
                peak_samples: if paper { 4001 } else { 2001 },
            },
            paraxial: ParaxialConfig { epsilons: vec![0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.4] },
        }
    }

    /// Preset values overridden key by key with the contents of `text`.
    pub fn from_toml_over(text: &str, preset: Preset, kind: Option<ExperimentKind>) -> Result<Self, CliError> {
        let overlay: toml::Table = toml::from_str(text).map_err(|e| CliError::Config(format!("config parse error: {e}")))?;
        let file_kind = match overlay.get("kind") {
            Some(v) => Some(
                ExperimentKind::deserialize(v.clone()).map_err(|e| CliError::Config(format!("unknown experiment kind: {e}")))?,
            ),
            None => None,
        };
        let kind = kind.or(file_kind).ok_or_else(|| CliError::Config("no experiment kind given".into()))?;
        let base = toml::Table::try_from(Self::preset(preset, kind)).map_err(|e| CliError::Config(e.to_string()))?;
        let mut merged = base;
        merge(&mut merged, overlay);
        merged.insert("kind".into(), toml::Value::String(kind.name().into()));
        let cfg: Self = merged.try_into().map_err(|e: toml::de::Error| CliError::Config(format!("invalid config: {e}")))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    /// SHA-256 of the resolved config, output directory excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        Sha256::digest(c.to_toml().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn atoms(&self) -> usize {
        self.lattice.layers * self.lattice.nx * self.lattice.ny
    }
}

fn merge(base: &mut toml::Table, overlay: toml::Table) {
    for (k, v) in overlay {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}
