//! End-to-end learning: single mode, coupled pair and colored lattices.

mod campaign;
mod config;
mod engine;
mod learn;
mod report;

pub use campaign::{run_campaign, CampaignResult, Tables};
pub use config::{Backend, ProtocolConfig};
pub use engine::{stage_rotation, Probe, StageSimulator, FRAME_ANGLE};
pub use learn::{learn_lattice, learn_single_mode, learn_two_mode};
pub use report::{CampaignSummary, EstimationReport, ParamKind, ParameterEstimate, SignalKind, Stage};
