//! TOML scenario files.
//!
//! Agents are numbered from 1 in the file. Unknown keys are rejected.
//!
//! ```toml
//! [graph]
//! in_neighbors = [[2, 3], [1, 3], [1, 2]]   # or: file = "g.txt" / generate = { r = 2 }
//!
//! [observer]
//! n = 2
//! s = [0.0, -1.5, 6.0, 0.0]                 # row-major
//!
//! [gains]
//! mu1 = 5.9
//! mu2 = 2.0
//! alpha1 = 8.0
//! alpha2 = 3.0
//! alpha3 = 4.0
//! f = 0
//! k = 80.0
//! F = 0.6
//!
//! [[agents]]
//! role = "normal"
//! l = [0.64, 1.10, 0.08, 0.64, 0.32]
//! q0 = [0.0, 3.4557519189487724]
//! dq0 = [0.0, 0.0]
//! eta0 = [-1.5, -0.5]
//! phihat0 = [0.0, 0.0, 0.0, 0.0, 0.0]
//!
//! [sim]
//! horizon = 10.0
//! dt = 1e-4
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{ByzantineSpec, Evolution, TimeFunction, Transmission, TransmissionPolicy};
use crate::engine::{AgentSetup, ObserverCoordinates, Role, Scenario, SimConfig};
use crate::graph::{generate_r_robust_digraph, Digraph};
use crate::plant::{ArmParams, ParamVector, STANDARD_GRAVITY};
use crate::protocol::{Gains, ObserverMatrix, DEFAULT_DWELL_MIN};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Scenarios shipped with the crate, addressable by name.
pub const BUNDLED: &[(&str, &str)] = &[
    ("paper_scenario_A", include_str!("../scenarios/paper_scenario_A.toml")),
    ("paper_scenario_B", include_str!("../scenarios/paper_scenario_B.toml")),
    ("paper_scenario_C", include_str!("../scenarios/paper_scenario_C.toml")),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub graph: GraphSection,
    pub observer: ObserverSection,
    pub gains: GainsSection,
    pub agents: Vec<AgentSection>,
    #[serde(default)]
    pub sim: SimSection,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    pub file: Option<PathBuf>,
    /// 1-based in-neighbor lists, one per agent.
    pub in_neighbors: Option<Vec<Vec<usize>>>,
    pub generate: Option<GenerateSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateSection {
    pub r: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverSection {
    pub n: usize,
    pub s: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsSection {
    pub mu1: f64,
    pub mu2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub f: usize,
    pub k: f64,
    #[serde(rename = "F")]
    pub adaptation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoleName {
    Normal,
    Byzantine,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSection {
    pub role: RoleName,
    pub l: [f64; 5],
    #[serde(default = "default_grav")]
    pub grav: f64,
    pub q0: [f64; 2],
    pub dq0: [f64; 2],
    pub eta0: Vec<f64>,
    pub phihat0: [f64; 5],
    pub k: Option<f64>,
    #[serde(rename = "F")]
    pub adaptation: Option<f64>,
    pub byzantine: Option<ByzantineSection>,
}

fn default_grav() -> f64 {
    STANDARD_GRAVITY
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ByzantineSection {
    pub evolution: Evolution,
    pub broadcast_period: Option<f64>,
    #[serde(default)]
    pub transmit: Vec<TransmitSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyName {
    Honest,
    Scale,
    Inject,
    Silent,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmitSection {
    /// 1-based receiver id.
    pub to: usize,
    pub policy: PolicyName,
    pub factor: Option<f64>,
    pub freq: Option<f64>,
    pub noise: Option<Vec<TimeFunction>>,
    pub silent_from: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordinateName {
    #[default]
    Auxiliary,
    Eta,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default)]
    pub t0: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_dwell")]
    pub dwell_min: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_decimation")]
    pub decimation: usize,
    #[serde(default)]
    pub coordinates: CoordinateName,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            t0: 0.0,
            horizon: default_horizon(),
            dt: default_dt(),
            dwell_min: default_dwell(),
            seed: 0,
            decimation: default_decimation(),
            coordinates: CoordinateName::default(),
        }
    }
}

fn default_horizon() -> f64 {
    10.0
}
fn default_dt() -> f64 {
    1e-4
}
fn default_dwell() -> f64 {
    DEFAULT_DWELL_MIN
}
fn default_decimation() -> usize {
    1
}

/// Command-line overrides applied on top of a scenario file.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Overrides {
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub seed: Option<u64>,
    pub f: Option<usize>,
    pub decimation: Option<usize>,
}

impl Overrides {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }

    pub fn apply(&self, file: &mut ScenarioFile) {
        if let Some(dt) = self.dt {
            file.sim.dt = dt;
        }
        if let Some(h) = self.horizon {
            file.sim.horizon = h;
        }
        if let Some(seed) = self.seed {
            file.sim.seed = seed;
        }
        if let Some(f) = self.f {
            file.gains.f = f;
        }
        if let Some(d) = self.decimation {
            file.sim.decimation = d;
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        toml::from_str(text).map_err(|e| ScenarioError::Parse {
            line: e.span().map_or(1, |s| line_of(text, s.start)),
            message: e.message().to_string(),
        })
    }

    /// Reads a scenario from `path`, or a bundled scenario if `path` names one
    /// and no such file exists.
    pub fn load(path: &Path) -> Result<(Self, Option<PathBuf>), ScenarioError> {
        if !path.exists() {
            if let Some(text) = path.to_str().and_then(bundled) {
                return Ok((Self::parse(text)?, None));
            }
        }
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.into(), source })?;
        Ok((Self::parse(&text)?, path.parent().map(Path::to_path_buf)))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario files always serialize")
    }

    /// Builds the runnable scenario. `base_dir` resolves relative graph paths.
    pub fn build(&self, base_dir: Option<&Path>) -> Result<Scenario, ScenarioError> {
        let invalid = |m: String| ScenarioError::Invalid(m);
        let n = self.agents.len();
        if n == 0 {
            return Err(invalid("no agents configured".into()));
        }
        let graph = self.build_graph(n, base_dir)?;
        if graph.n() != n {
            return Err(invalid(format!("graph has {} vertices but {n} agents are configured", graph.n())));
        }

        let obs = &self.observer;
        if obs.s.len() != obs.n * obs.n {
            return Err(invalid(format!("observer.s needs {} entries, found {}", obs.n * obs.n, obs.s.len())));
        }
        let observer = ObserverMatrix::new(DMatrix::from_row_slice(obs.n, obs.n, &obs.s))
            .map_err(|e| invalid(e.to_string()))?;

        let g = &self.gains;
        let gains = Gains {
            mu1: g.mu1,
            mu2: g.mu2,
            k: g.k,
            adaptation: g.adaptation,
            alpha1: g.alpha1,
            alpha2: g.alpha2,
            alpha3: g.alpha3,
            f: g.f,
        };

        let mut agents = Vec::with_capacity(n);
        for (i, a) in self.agents.iter().enumerate() {
            let arm = ArmParams::new(a.l, a.grav).map_err(|e| invalid(format!("agent {}: {e}", i + 1)))?;
            let role = match (a.role, &a.byzantine) {
                (RoleName::Normal, None) => Role::Normal,
                (RoleName::Normal, Some(_)) => {
                    return Err(invalid(format!("agent {} is normal but has a byzantine section", i + 1)))
                }
                (RoleName::Byzantine, None) => {
                    return Err(invalid(format!("agent {} is byzantine but has no byzantine section", i + 1)))
                }
                (RoleName::Byzantine, Some(b)) => Role::Byzantine(build_byzantine(i, b, n)?),
            };
            agents.push(AgentSetup {
                role,
                arm,
                q0: a.q0,
                dq0: a.dq0,
                eta0: DVector::from_row_slice(&a.eta0),
                phi_hat0: ParamVector::from(a.phihat0),
                k: a.k.unwrap_or(g.k),
                adaptation: a.adaptation.unwrap_or(g.adaptation),
            });
        }

        let s = &self.sim;
        let sim = SimConfig {
            t0: s.t0,
            horizon: s.horizon,
            dt: s.dt,
            dwell_min: s.dwell_min,
            seed: s.seed,
            decimation: s.decimation,
            coordinates: match s.coordinates {
                CoordinateName::Auxiliary => ObserverCoordinates::Auxiliary,
                CoordinateName::Eta => ObserverCoordinates::Eta,
            },
        };
        Ok(Scenario { graph, observer, gains, agents, sim })
    }

    fn build_graph(&self, n: usize, base_dir: Option<&Path>) -> Result<Digraph, ScenarioError> {
        let gs = &self.graph;
        let given = [gs.file.is_some(), gs.in_neighbors.is_some(), gs.generate.is_some()];
        if given.iter().filter(|b| **b).count() != 1 {
            return Err(ScenarioError::Invalid(
                "graph section needs exactly one of `file`, `in_neighbors`, `generate`".into(),
            ));
        }
        if let Some(file) = &gs.file {
            let path = match base_dir {
                Some(dir) if file.is_relative() => dir.join(file),
                _ => file.clone(),
            };
            let text = std::fs::read_to_string(&path).map_err(|source| ScenarioError::Io { path: path.clone(), source })?;
            return text.parse().map_err(|e| ScenarioError::Invalid(format!("{}: {e}", path.display())));
        }
        if let Some(lists) = &gs.in_neighbors {
            let mut zero_based = Vec::with_capacity(lists.len());
            for (i, list) in lists.iter().enumerate() {
                let mut row = Vec::with_capacity(list.len());
                for &j in list {
                    if j == 0 || j > lists.len() {
                        return Err(ScenarioError::Invalid(format!(
                            "graph: agent {} lists out-of-range neighbor {j}",
                            i + 1
                        )));
                    }
                    row.push(j - 1);
                }
                zero_based.push(row);
            }
            return Digraph::from_in_neighbors(&zero_based).map_err(|e| ScenarioError::Invalid(format!("graph: {e}")));
        }
        let r = gs.generate.as_ref().map_or(0, |g| g.r);
        generate_r_robust_digraph(n, r, self.sim.seed).map_err(|e| ScenarioError::Invalid(format!("graph: {e}")))
    }
}

fn build_byzantine(i: usize, b: &ByzantineSection, n: usize) -> Result<ByzantineSpec, ScenarioError> {
    let invalid = |m: String| Err(ScenarioError::Invalid(format!("agent {}: {m}", i + 1)));
    let mut policies = BTreeMap::new();
    for t in &b.transmit {
        if t.to == 0 || t.to > n {
            return invalid(format!("transmit target {} out of range", t.to));
        }
        let transmission = match t.policy {
            PolicyName::Honest => Transmission::Honest,
            PolicyName::Silent => Transmission::Silent,
            PolicyName::Scale => match t.factor {
                Some(factor) => Transmission::Scale { factor },
                None => return invalid(format!("scale policy for {} needs `factor`", t.to)),
            },
            PolicyName::Inject => match (t.freq, &t.noise) {
                (Some(freq), noise) => Transmission::Inject { freq, noise: noise.clone().unwrap_or_default() },
                (None, _) => return invalid(format!("inject policy for {} needs `freq`", t.to)),
            },
        };
        let stray = match t.policy {
            PolicyName::Scale => t.freq.is_some() || t.noise.is_some(),
            PolicyName::Inject => t.factor.is_some(),
            _ => t.factor.is_some() || t.freq.is_some() || t.noise.is_some(),
        };
        if stray {
            return invalid(format!("transmit entry for {} has parameters its policy does not use", t.to));
        }
        let policy = TransmissionPolicy { transmission, silent_from: t.silent_from };
        if policies.insert(t.to - 1, policy).is_some() {
            return invalid(format!("two transmit entries for receiver {}", t.to));
        }
    }
    Ok(ByzantineSpec { agent: i, evolution: b.evolution.clone(), broadcast_period: b.broadcast_period, policies })
}
