use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("graph has {n} vertices, exhaustive enumeration is capped at {cap}")]
    SizeLimit { n: usize, cap: usize },
    #[error("no digraph on {n} vertices is {r}-robust (ceiling is {ceiling})")]
    InfeasibleRobustness { n: usize, r: usize, ceiling: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlantError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("inertia matrix is singular (det = {det:e})")]
    SingularInertia { det: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid gains: {0}")]
    InvalidGains(String),
    #[error("resilient fusion needs at least {needed} neighbor values, got {got} (f = {f})")]
    InsufficientNeighbors { got: usize, needed: usize, f: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdversaryError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("configuration error: {0}")]
    Config(String),
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("simulation diverged: agent {agent} has a non-finite state at t = {t}")]
    Diverged { agent: usize, t: f64 },
    #[error("agent {agent}: {source}")]
    Protocol { agent: usize, source: ProtocolError },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
