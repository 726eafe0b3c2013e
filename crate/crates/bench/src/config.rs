//! Experiment configuration files (TOML).

use std::fmt;
use std::path::Path;

use anyhow::Context;
use bosonic_learn::homodyne::{OmegaBudget, XiBudget};
use bosonic_learn::lattice::{chain_edges, grid_edges, LatticeModel};
use bosonic_learn::protocols::{Backend, ProtocolConfig};
use bosonic_learn::{rng, VERSION};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

/// Configuration rejected before any simulation ran (exit code 2).
#[derive(Debug)]
pub struct ValidationError(pub String);

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration: {}", self.0)
    }
}

impl std::error::Error for ValidationError {}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    ValidationError(msg.into()).into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Graph {
    Single,
    Pair,
    Chain { modes: usize },
    Grid { rows: usize, cols: usize },
    Custom { modes: usize, edges: Vec<(usize, usize)> },
}

impl Graph {
    pub fn num_modes(&self) -> usize {
        match self {
            Graph::Single => 1,
            Graph::Pair => 2,
            Graph::Chain { modes } | Graph::Custom { modes, .. } => *modes,
            Graph::Grid { rows, cols } => rows * cols,
        }
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        match self {
            Graph::Single => vec![],
            Graph::Pair => vec![(0, 1)],
            Graph::Chain { modes } => chain_edges(*modes),
            Graph::Grid { rows, cols } => grid_edges(*rows, *cols),
            Graph::Custom { edges, .. } => edges.clone(),
        }
    }
}

/// True parameters: fixed, or drawn uniformly from `[-1, 1]` per trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Params {
    Random,
    Explicit {
        omega: Vec<f64>,
        xi: Vec<f64>,
        /// `[Re h, Im h]` per edge, in edge order.
        #[serde(default)]
        hopping: Vec<[f64; 2]>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub graph: Graph,
    pub params: Params,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolSpec {
    pub epsilon: f64,
    pub alpha: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    /// Overrides of the derived budgets; unset values use the defaults for the amplitudes.
    pub omega_m: Option<f64>,
    pub omega_eta0: Option<f64>,
    pub omega_eta1: Option<f64>,
    pub xi_m: Option<f64>,
    pub xi_eta0: Option<f64>,
    pub xi_eta1: Option<f64>,
    pub w: f64,
    pub w_rotated: f64,
    pub cutoff: usize,
    pub leak_tol: f64,
    pub spam_strength: f64,
    pub spam_kick_radius: f64,
    pub spam_kicks: usize,
    pub backend: Backend,
}

impl Default for ProtocolSpec {
    fn default() -> Self {
        let d = ProtocolConfig::new(1e-2);
        Self {
            epsilon: d.epsilon,
            alpha: d.omega.alpha,
            alpha1: d.xi.alpha1,
            alpha2: d.xi.alpha2,
            omega_m: None,
            omega_eta0: None,
            omega_eta1: None,
            xi_m: None,
            xi_eta0: None,
            xi_eta1: None,
            w: d.w,
            w_rotated: d.w_rotated,
            cutoff: d.cutoff,
            leak_tol: d.leak_tol,
            spam_strength: d.spam_strength,
            spam_kick_radius: d.spam_kick_radius,
            spam_kicks: d.spam_kicks,
            backend: d.backend,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignSpec {
    pub trials: usize,
    pub seed: u64,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
}

impl Default for CampaignSpec {
    fn default() -> Self {
        Self { trials: 10, seed: 0, threads: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: String,
    pub json: bool,
    pub csv: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: "bench-out".into(), json: true, csv: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub epsilons: Vec<f64>,
    /// Run the fixed-time repeated-sampling control alongside.
    pub baseline: bool,
    pub baseline_trials: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self { epsilons: vec![0.1, 0.05, 0.02, 0.01], baseline: true, baseline_trials: 200 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsSpec {
    pub hoeffding_reps: usize,
    pub hoeffding_deltas: Vec<f64>,
    pub r_values: Vec<usize>,
    pub trajectories: usize,
    pub selection_models: usize,
}

impl Default for BoundsSpec {
    fn default() -> Self {
        Self {
            hoeffding_reps: 500,
            hoeffding_deltas: vec![0.1, 0.02],
            r_values: vec![8, 16, 32, 64, 128],
            trajectories: 200,
            selection_models: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub model: ModelSpec,
    #[serde(default)]
    pub protocol: ProtocolSpec,
    #[serde(default)]
    pub campaign: CampaignSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default)]
    pub bounds: BoundsSpec,
}

/// Starting points for `gen-config`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    Single,
    Pair,
    Chain,
    Grid,
}

impl ExperimentConfig {
    pub fn preset(p: Preset) -> Self {
        let (graph, params, protocol) = match p {
            Preset::Single => (Graph::Single, Params::Random, ProtocolSpec::default()),
            Preset::Pair => (
                Graph::Pair,
                Params::Explicit { omega: vec![0.3, 0.5], xi: vec![0.2, 0.4], hopping: vec![[0.2, 0.1]] },
                ProtocolSpec { epsilon: 2e-2, ..ProtocolSpec::default() },
            ),
            Preset::Chain => (
                Graph::Chain { modes: 4 },
                Params::Random,
                ProtocolSpec { epsilon: 5e-2, cutoff: 5, leak_tol: 1e-3, ..ProtocolSpec::default() },
            ),
            Preset::Grid => (
                Graph::Grid { rows: 2, cols: 2 },
                Params::Random,
                ProtocolSpec { epsilon: 5e-2, cutoff: 5, leak_tol: 1e-3, ..ProtocolSpec::default() },
            ),
        };
        Self {
            schema_version: SCHEMA_VERSION,
            model: ModelSpec { graph, params },
            protocol,
            campaign: CampaignSpec::default(),
            output: OutputSpec::default(),
            sweep: SweepSpec::default(),
            bounds: BoundsSpec::default(),
        }
    }

    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| invalid(format!("cannot parse config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        format!("{:x}", Sha256::digest(json.as_bytes()))
    }

    /// Every check that can run without simulating anything.
    pub fn validate(&self) -> anyhow::Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(format!(
                "schema_version {} is not supported (this build reads version {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let n = self.model.graph.num_modes();
        if n == 0 {
            return Err(invalid("model.graph has no modes"));
        }
        // Building a model checks edge indices, self loops and duplicates.
        self.model(0).map_err(|e| invalid(format!("model: {e}")))?;
        if let Params::Explicit { omega, xi, hopping } = &self.model.params {
            let edges = self.model.graph.edges().len();
            if omega.len() != n || xi.len() != n || hopping.len() != edges {
                return Err(invalid(format!(
                    "model.params needs {n} omega, {n} xi and {edges} hopping entries, got {}, {} and {}",
                    omega.len(),
                    xi.len(),
                    hopping.len()
                )));
            }
            let w = self.protocol.w;
            if omega.iter().chain(xi).any(|v| v.abs() >= w) {
                return Err(invalid(format!("every |omega| and |xi| must be below protocol.w = {w}")));
            }
        }
        self.protocol_config(self.protocol.epsilon, 0).map(|_| ())?;
        if self.campaign.trials == 0 {
            return Err(invalid("campaign.trials must be at least 1"));
        }
        if self.sweep.epsilons.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(invalid("sweep.epsilons must all be positive"));
        }
        if self.sweep.baseline && self.sweep.baseline_trials < 2 {
            return Err(invalid("sweep.baseline_trials must be at least 2"));
        }
        let b = &self.bounds;
        if b.hoeffding_reps == 0 || b.trajectories < 2 || b.r_values.len() < 2 || b.r_values.contains(&0) {
            return Err(invalid("bounds needs hoeffding_reps >= 1, trajectories >= 2 and at least two positive r values"));
        }
        if b.hoeffding_deltas.iter().any(|d| !(*d > 0.0 && *d < 1.0)) {
            return Err(invalid("bounds.hoeffding_deltas must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Protocol settings for one trial at target `epsilon`.
    pub fn protocol_config(&self, epsilon: f64, seed: u64) -> anyhow::Result<ProtocolConfig> {
        let p = &self.protocol;
        let mut omega = OmegaBudget::defaults(p.alpha);
        if let Some(m) = p.omega_m {
            omega = OmegaBudget { m, ..omega };
            omega.eta0 = 0.5 * bosonic_learn::homodyne::omega_eta0_bound(p.alpha, m);
            omega.eta1 = bosonic_learn::homodyne::omega_eta1_bound(p.alpha, m, omega.eta0);
        }
        omega.eta0 = p.omega_eta0.unwrap_or(omega.eta0);
        omega.eta1 = p.omega_eta1.unwrap_or(omega.eta1);
        let mut xi = XiBudget::defaults(p.alpha1, p.alpha2);
        if let Some(m) = p.xi_m {
            xi.m = m;
            xi.eta0 = 0.5 * bosonic_learn::homodyne::xi_eta0_bound(p.alpha1, p.alpha2, m);
            xi.eta1 = bosonic_learn::homodyne::xi_eta1_bound(p.alpha1, p.alpha2, m, xi.eta0);
        }
        xi.eta0 = p.xi_eta0.unwrap_or(xi.eta0);
        xi.eta1 = p.xi_eta1.unwrap_or(xi.eta1);
        let cfg = ProtocolConfig {
            epsilon,
            w: p.w,
            w_rotated: p.w_rotated,
            omega,
            xi,
            cutoff: p.cutoff,
            leak_tol: p.leak_tol,
            spam_strength: p.spam_strength,
            spam_kick_radius: p.spam_kick_radius,
            spam_kicks: p.spam_kicks,
            backend: p.backend,
            seed,
        };
        cfg.validate().map_err(|e| invalid(format!("protocol: {e}")))?;
        Ok(cfg)
    }

    /// Model for `trial` (random parameters are redrawn per trial).
    pub fn model(&self, trial: u64) -> bosonic_learn::Result<LatticeModel> {
        let n = self.model.graph.num_modes();
        let edges = self.model.graph.edges();
        match &self.model.params {
            Params::Random => {
                let mut r = rng::stream(self.campaign.seed, &[MODEL_STREAM, trial]);
                LatticeModel::random(n, &edges, &mut r)
            }
            Params::Explicit { omega, xi, hopping } => {
                let couplings: Vec<(usize, usize, Complex64)> =
                    edges.iter().zip(hopping).map(|(&(i, j), h)| (i, j, Complex64::new(h[0], h[1]))).collect();
                LatticeModel::new(n, &couplings, omega.clone(), xi.clone())
            }
        }
    }

    /// Protocol seed of `trial`.
    pub fn trial_seed(&self, trial: u64) -> u64 {
        rng::derive_seed(self.campaign.seed, &[PROTOCOL_STREAM, trial])
    }
}

const MODEL_STREAM: u64 = 1;
const PROTOCOL_STREAM: u64 = 2;

/// Header line shared by every output file.
pub fn provenance(cfg: &ExperimentConfig) -> (String, &'static str) {
    (cfg.hash(), VERSION)
}
