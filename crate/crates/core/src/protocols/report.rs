use serde::{Deserialize, Serialize};

use crate::lattice::ColoringScheme;
use crate::rfe::RfeSchedule;

use super::config::ProtocolConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    Omega,
    Xi,
    ReHopping,
    ImHopping,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// All couplings of the cluster averaged away.
    Decoupled,
    /// Frame whose first mode is `(b_i + b_j)/√2`.
    RealFrame,
    /// Frame whose first mode is `(b_i + i b_j)/√2`.
    ImagFrame,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    Omega,
    Xi,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParameterEstimate {
    pub name: String,
    pub kind: ParamKind,
    pub modes: Vec<usize>,
    pub estimate: f64,
    pub truth: Option<f64>,
    pub error: Option<f64>,
}

/// One shared RFE run: every cluster of a color measured in the same shots.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CampaignSummary {
    pub color: Option<usize>,
    pub stage: Stage,
    pub signal: SignalKind,
    pub schedule: RfeSchedule,
    pub ledger_time: f64,
    pub shots: u64,
    pub experiments: u64,
    pub zero_signal_retries: u64,
    pub arcsin_clamps: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimationReport {
    pub parameters: Vec<ParameterEstimate>,
    pub campaigns: Vec<CampaignSummary>,
    pub coloring: Option<ColoringScheme>,
    /// Sum of evolution time over every shot.
    pub total_evolution_time: f64,
    pub total_shots: u64,
    pub total_experiments: u64,
    pub config: ProtocolConfig,
    /// Not serialized: wall time is reported separately from the deterministic body.
    #[serde(skip_serializing)]
    pub wall_time_s: f64,
}

impl EstimationReport {
    pub fn get(&self, kind: ParamKind, modes: &[usize]) -> Option<&ParameterEstimate> {
        self.parameters.iter().find(|p| p.kind == kind && p.modes == modes)
    }

    pub fn estimate(&self, kind: ParamKind, modes: &[usize]) -> Option<f64> {
        self.get(kind, modes).map(|p| p.estimate)
    }

    /// Largest `|estimate - truth|` over parameters with a known truth.
    pub fn max_error(&self) -> f64 {
        self.parameters.iter().filter_map(|p| p.error).map(f64::abs).fold(0.0, f64::max)
    }

    pub fn of_kind(&self, kind: ParamKind) -> impl Iterator<Item = &ParameterEstimate> {
        self.parameters.iter().filter(move |p| p.kind == kind)
    }
}
