//! Deterministic fixed-step closed-loop simulation.
//!
//! Every step follows the normal agent's loop: ingest queued broadcasts through
//! the dwell filter, refresh the resilient fusion if storage changed, advance
//! plant, observer and adaptive estimate by RK4 with the broadcast-dependent
//! quantities held, then evaluate triggers and queue new broadcasts. Messages
//! queued at the end of a step are ingested at the start of the next one, in
//! sender-id order.

use nalgebra::{DMatrix, DVector, Vector2};
use serde::Serialize;

use crate::adversary::{byzantine_observer_evolution, byzantine_transmission, ByzantineSpec, Evolution};
use crate::error::SimError;
use crate::graph::{is_f_local_attack, Digraph, RobustnessOracle, VertexSet};
use crate::plant::{forward_dynamics, ArmParams, ParamVector, PlantState};
use crate::protocol::{
    avbrd_fuse, control_update, trigger_check, AcceptOutcome, ControllerState, Gains, NeighborStore,
    ObserverMatrix, ObserverState, DEFAULT_DWELL_MIN, TIME_EPS,
};

/// Which variable the observer integrator advances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum ObserverCoordinates {
    /// `W = e^{−St} η`, whose right-hand side is piecewise constant.
    #[default]
    Auxiliary,
    /// `η` directly.
    Eta,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub t0: f64,
    pub horizon: f64,
    pub dt: f64,
    pub dwell_min: f64,
    pub seed: u64,
    /// Record every `decimation`-th step.
    pub decimation: usize,
    pub coordinates: ObserverCoordinates,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            t0: 0.0,
            horizon: 10.0,
            dt: 1e-4,
            dwell_min: DEFAULT_DWELL_MIN,
            seed: 0,
            decimation: 1,
            coordinates: ObserverCoordinates::Auxiliary,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Role {
    Normal,
    Byzantine(ByzantineSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentSetup {
    pub role: Role,
    /// True parameters of the arm.
    pub arm: ArmParams,
    pub q0: [f64; 2],
    pub dq0: [f64; 2],
    pub eta0: DVector<f64>,
    pub phi_hat0: ParamVector,
    pub k: f64,
    pub adaptation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub graph: Digraph,
    pub observer: ObserverMatrix,
    /// Shared gains; `k` and `adaptation` are taken per agent.
    pub gains: Gains,
    pub agents: Vec<AgentSetup>,
    pub sim: SimConfig,
}

impl Scenario {
    pub fn agent_gains(&self, i: usize) -> Gains {
        Gains { k: self.agents[i].k, adaptation: self.agents[i].adaptation, ..self.gains }
    }

    pub fn byzantine_set(&self) -> VertexSet {
        self.agents
            .iter()
            .enumerate()
            .filter(|(_, a)| matches!(a.role, Role::Byzantine(_)))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn normal_set(&self) -> VertexSet {
        let byz = self.byzantine_set();
        (0..self.agents.len()).filter(|i| !byz.contains(*i)).collect()
    }

    /// Rejects numerically invalid configurations. Returns warnings for
    /// violated convergence hypotheses (robustness, f-local attack), which do
    /// not prevent a run.
    pub fn validate(&self) -> Result<Vec<String>, SimError> {
        let cfg = |m: String| Err(SimError::Config(m));
        let n = self.graph.n();
        if self.agents.len() != n {
            return cfg(format!("graph has {n} vertices but {} agents are configured", self.agents.len()));
        }
        let sim = &self.sim;
        if !(sim.dt > 0.0) || !sim.dt.is_finite() {
            return cfg(format!("dt must be positive, got {}", sim.dt));
        }
        if !(sim.horizon >= 0.0) || !sim.horizon.is_finite() {
            return cfg(format!("horizon must be non-negative, got {}", sim.horizon));
        }
        if !sim.t0.is_finite() {
            return cfg("t0 must be finite".into());
        }
        if !(sim.dwell_min >= 0.0) || !sim.dwell_min.is_finite() {
            return cfg(format!("dwell_min must be non-negative, got {}", sim.dwell_min));
        }
        if sim.dt > sim.dwell_min + TIME_EPS {
            return cfg(format!("dt = {} exceeds dwell_min = {}", sim.dt, sim.dwell_min));
        }
        if sim.decimation == 0 {
            return cfg("decimation must be at least 1".into());
        }
        let dim = self.observer.dim();
        if dim != 2 {
            return cfg(format!("the two-link arm needs a 2-dimensional observer, got {dim}"));
        }
        for (i, a) in self.agents.iter().enumerate() {
            self.agent_gains(i)
                .validate()
                .map_err(|e| SimError::Config(format!("agent {}: {e}", i + 1)))?;
            if a.eta0.len() != dim {
                return cfg(format!("agent {}: eta0 has {} components, expected {dim}", i + 1, a.eta0.len()));
            }
            let finite = a.q0.iter().chain(&a.dq0).chain(a.eta0.iter()).chain(a.phi_hat0.iter()).all(|x| x.is_finite());
            if !finite {
                return cfg(format!("agent {}: non-finite initial state", i + 1));
            }
            if let Role::Byzantine(spec) = &a.role {
                if spec.agent != i {
                    return cfg(format!("byzantine spec at position {} names agent {}", i + 1, spec.agent + 1));
                }
                spec.validate(&self.graph, dim)?;
            }
        }

        let mut warnings = Vec::new();
        let f = self.gains.f;
        let r = 2 * f + 1;
        match RobustnessOracle::default().is_r_robust(&self.graph, r) {
            Ok(true) => {}
            Ok(false) => warnings.push(format!("communication graph is not {r}-robust (needed for f = {f})")),
            Err(e) => warnings.push(format!("robustness not checked: {e}")),
        }
        if !is_f_local_attack(&self.graph, &self.byzantine_set(), f)? {
            warnings.push(format!("byzantine placement is not an {f}-local attack"));
        }
        Ok(warnings)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentSample {
    pub q: [f64; 2],
    pub dq: [f64; 2],
    pub eta: Vec<f64>,
    pub w: Vec<f64>,
    pub phi_hat_norm: f64,
    /// `‖η̂ − η‖` after any trigger reset at this instant.
    pub e_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Frame {
    pub t: f64,
    pub agents: Vec<AgentSample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TriggerEvent {
    pub t: f64,
    /// `‖e_η‖` just before the reset.
    pub error_norm: f64,
    pub threshold: f64,
    /// `‖e_η‖` just after the reset.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MessageEvent {
    /// Timestamp carried by the broadcast.
    pub t: f64,
    pub sender: usize,
    pub receiver: usize,
    pub outcome: AcceptOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub t0: f64,
    pub dt: f64,
    pub frames: Vec<Frame>,
    /// Trigger events per agent, strictly increasing in time.
    pub triggers: Vec<Vec<TriggerEvent>>,
    pub messages: Vec<MessageEvent>,
    /// Number of fusion executions per agent.
    pub fusion_runs: Vec<usize>,
    pub normal: VertexSet,
    pub warnings: Vec<String>,
}

impl SimOutput {
    pub fn agent_count(&self) -> usize {
        self.triggers.len()
    }

    pub fn trigger_times(&self, agent: usize) -> Vec<f64> {
        self.triggers[agent].iter().map(|e| e.t).collect()
    }

    pub fn rejected_messages(&self) -> usize {
        self.messages.iter().filter(|m| m.outcome == AcceptOutcome::Rejected).count()
    }
}

#[derive(Debug, Clone)]
struct Message {
    sender: usize,
    receiver: usize,
    t: f64,
    eta: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Dynamics {
    /// Normal observer in the configured coordinates.
    Protocol,
    /// Own rule for `η̇`, integrated in `η`.
    Scripted,
}

#[derive(Debug, Clone)]
struct Flow {
    q: Vector2<f64>,
    dq: Vector2<f64>,
    obs: DVector<f64>,
    phi: ParamVector,
}

impl Flow {
    fn offset(&self, k: &Flow, h: f64) -> Flow {
        Flow { q: self.q + k.q * h, dq: self.dq + k.dq * h, obs: &self.obs + &k.obs * h, phi: self.phi + k.phi * h }
    }
}

#[derive(Debug, Clone)]
struct AgentRuntime {
    plant: PlantState,
    observer: ObserverState,
    /// Integrated observer coordinate (`W` or `η`).
    coord: DVector<f64>,
    w: DVector<f64>,
    phi_hat: ParamVector,
    store: NeighborStore,
    store_dirty: bool,
    w_bar: Option<DVector<f64>>,
    next_broadcast: f64,
    eta_t0: DVector<f64>,
    e_norm: f64,
    dynamics: Dynamics,
    gains: Gains,
}

/// Small cache of `e^{St}` keyed on the exact bits of `t`.
#[derive(Debug, Default)]
struct ExpCache {
    entries: Vec<(u64, DMatrix<f64>)>,
}

impl ExpCache {
    const CAPACITY: usize = 8;

    fn get(&mut self, s: &ObserverMatrix, t: f64) -> DMatrix<f64> {
        let key = t.to_bits();
        if let Some((_, m)) = self.entries.iter().find(|(k, _)| *k == key) {
            return m.clone();
        }
        let m = s.exp(t);
        if self.entries.len() == Self::CAPACITY {
            self.entries.remove(0);
        }
        self.entries.push((key, m.clone()));
        m
    }
}

/// Stepwise simulator; [`run_scenario`] drives it to the horizon.
pub struct Simulation {
    scenario: Scenario,
    agents: Vec<AgentRuntime>,
    out_neighbors: Vec<Vec<usize>>,
    queue: Vec<Message>,
    step: u64,
    steps_total: u64,
    cache: ExpCache,
    output: SimOutput,
}

impl Simulation {
    pub fn new(scenario: Scenario) -> Result<Self, SimError> {
        let warnings = scenario.validate()?;
        for w in &warnings {
            tracing::warn!("{w}");
        }
        let n = scenario.graph.n();
        let s = &scenario.observer;
        let t0 = scenario.sim.t0;
        let mut agents = Vec::with_capacity(n);
        for (i, a) in scenario.agents.iter().enumerate() {
            let observer = ObserverState::new(s, t0, a.eta0.clone());
            let w = observer.w_self_frozen.clone();
            let mut store = NeighborStore::new(scenario.graph.in_neighbors(i));
            // every agent knows the initial state of its in-neighbors
            for j in scenario.graph.in_neighbors(i) {
                store.seed(j, t0, scenario.agents[j].eta0.clone(), s);
            }
            let (dynamics, period) = match &a.role {
                Role::Normal => (Dynamics::Protocol, None),
                Role::Byzantine(spec) => (
                    match spec.evolution {
                        Evolution::FollowProtocol => Dynamics::Protocol,
                        _ => Dynamics::Scripted,
                    },
                    spec.broadcast_period,
                ),
            };
            let coord = match (dynamics, scenario.sim.coordinates) {
                (Dynamics::Protocol, ObserverCoordinates::Auxiliary) => w.clone(),
                _ => a.eta0.clone(),
            };
            agents.push(AgentRuntime {
                plant: PlantState::new(a.q0, a.dq0),
                observer,
                coord,
                w,
                phi_hat: a.phi_hat0,
                store,
                store_dirty: true,
                w_bar: None,
                next_broadcast: t0 + period.unwrap_or(f64::INFINITY),
                eta_t0: a.eta0.clone(),
                e_norm: 0.0,
                dynamics,
                gains: scenario.agent_gains(i),
            });
        }
        let out_neighbors = (0..n).map(|j| scenario.graph.out_neighbors(j)).collect();
        let steps_total = (scenario.sim.horizon / scenario.sim.dt).round() as u64;
        let output = SimOutput {
            t0,
            dt: scenario.sim.dt,
            frames: Vec::new(),
            triggers: vec![Vec::new(); n],
            messages: Vec::new(),
            fusion_runs: vec![0; n],
            normal: scenario.normal_set(),
            warnings,
        };
        let mut sim = Self {
            scenario,
            agents,
            out_neighbors,
            queue: Vec::new(),
            step: 0,
            steps_total,
            cache: ExpCache::default(),
            output,
        };
        sim.record_frame();
        Ok(sim)
    }

    pub fn time(&self) -> f64 {
        self.time_at(self.step)
    }

    fn time_at(&self, k: u64) -> f64 {
        self.scenario.sim.t0 + k as f64 * self.scenario.sim.dt
    }

    pub fn is_finished(&self) -> bool {
        self.step >= self.steps_total
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn output(&self) -> &SimOutput {
        &self.output
    }

    /// Current observer state of agent `i`.
    pub fn eta(&self, i: usize) -> &DVector<f64> {
        &self.agents[i].observer.eta
    }

    pub fn plant(&self, i: usize) -> &PlantState {
        &self.agents[i].plant
    }

    pub fn neighbor_store(&self, i: usize) -> &NeighborStore {
        &self.agents[i].store
    }

    /// Advances the whole network by one step of `dt`.
    pub fn step(&mut self) -> Result<(), SimError> {
        let t = self.time();
        self.deliver();
        self.refresh_fusion()?;
        self.integrate(t)?;
        self.step += 1;
        let t_next = self.time();
        self.broadcast(t_next)?;
        if self.step.is_multiple_of(self.scenario.sim.decimation as u64) || self.is_finished() {
            self.record_frame();
        }
        Ok(())
    }

    pub fn run(mut self) -> Result<SimOutput, SimError> {
        while !self.is_finished() {
            self.step()?;
        }
        Ok(self.finish())
    }

    pub fn finish(self) -> SimOutput {
        self.output
    }

    fn deliver(&mut self) {
        let s = &self.scenario.observer;
        let dwell = self.scenario.sim.dwell_min;
        for msg in std::mem::take(&mut self.queue) {
            let w = self.cache.get(s, -msg.t) * &msg.eta;
            let agent = &mut self.agents[msg.receiver];
            let outcome = agent.store.accept_with_aux(msg.sender, msg.t, msg.eta, w, dwell);
            if outcome == AcceptOutcome::Accepted {
                agent.store_dirty = true;
            }
            self.output.messages.push(MessageEvent {
                t: msg.t,
                sender: msg.sender,
                receiver: msg.receiver,
                outcome,
            });
        }
    }

    fn needs_fusion(&self, i: usize) -> bool {
        match &self.scenario.agents[i].role {
            Role::Normal => true,
            Role::Byzantine(spec) => spec.evolution.needs_protocol(),
        }
    }

    fn refresh_fusion(&mut self) -> Result<(), SimError> {
        for i in 0..self.agents.len() {
            if !self.agents[i].store_dirty || !self.needs_fusion(i) {
                continue;
            }
            let agent = &mut self.agents[i];
            let fused = avbrd_fuse(&agent.store.w_columns(), agent.gains.f)
                .map_err(|source| SimError::Protocol { agent: i + 1, source })?;
            agent.w_bar = Some(fused);
            agent.store_dirty = false;
            self.output.fusion_runs[i] += 1;
        }
        Ok(())
    }

    fn integrate(&mut self, t: f64) -> Result<(), SimError> {
        let dt = self.scenario.sim.dt;
        let t_half = self.scenario.sim.t0 + (self.step as f64 + 0.5) * dt;
        let t_end = self.time_at(self.step + 1);
        let s = self.scenario.observer.clone();
        let exps = [self.cache.get(&s, t), self.cache.get(&s, t_half), self.cache.get(&s, t_end)];
        let coords = self.scenario.sim.coordinates;

        for i in 0..self.agents.len() {
            let setup = &self.scenario.agents[i];
            let agent = &self.agents[i];
            let x0 = Flow { q: agent.plant.q, dq: agent.plant.dq, obs: agent.coord.clone(), phi: agent.phi_hat };
            let field = AgentField {
                s: &s,
                gains: &agent.gains,
                arm: &setup.arm,
                role: &setup.role,
                dynamics: agent.dynamics,
                coords,
                // Ŵ − W̄ is held over the step
                w_gap: agent.w_bar.as_ref().map(|wb| &agent.observer.w_self_frozen - wb),
                agent: i,
            };
            let k1 = field.eval(&x0, t, &exps[0])?;
            let k2 = field.eval(&x0.offset(&k1, dt / 2.0), t_half, &exps[1])?;
            let k3 = field.eval(&x0.offset(&k2, dt / 2.0), t_half, &exps[1])?;
            let k4 = field.eval(&x0.offset(&k3, dt), t_end, &exps[2])?;
            let x1 = Flow {
                q: x0.q + (k1.q + k2.q * 2.0 + k3.q * 2.0 + k4.q) * (dt / 6.0),
                dq: x0.dq + (k1.dq + k2.dq * 2.0 + k3.dq * 2.0 + k4.dq) * (dt / 6.0),
                obs: &x0.obs + (&k1.obs + &k2.obs * 2.0 + &k3.obs * 2.0 + &k4.obs) * (dt / 6.0),
                phi: x0.phi + (k1.phi + k2.phi * 2.0 + k3.phi * 2.0 + k4.phi) * (dt / 6.0),
            };
            let finite = x1.q.iter().chain(x1.dq.iter()).chain(x1.obs.iter()).chain(x1.phi.iter()).all(|v| v.is_finite());
            if !finite {
                return Err(SimError::Diverged { agent: i + 1, t: t_end });
            }

            let in_aux = agent.dynamics == Dynamics::Protocol && coords == ObserverCoordinates::Auxiliary;
            let (eta, w) = if in_aux {
                (&exps[2] * &x1.obs, x1.obs.clone())
            } else {
                (x1.obs.clone(), self.cache.get(&s, -t_end) * &x1.obs)
            };
            let agent = &mut self.agents[i];
            agent.plant = PlantState { q: x1.q, dq: x1.dq };
            agent.phi_hat = x1.phi;
            agent.coord = x1.obs;
            agent.observer.eta = eta;
            agent.w = w;
        }
        Ok(())
    }

    fn broadcast(&mut self, t: f64) -> Result<(), SimError> {
        let s = self.scenario.observer.clone();
        let e_t = self.cache.get(&s, t);
        let t0 = self.scenario.sim.t0;
        for i in 0..self.agents.len() {
            let period = match &self.scenario.agents[i].role {
                Role::Normal => None,
                Role::Byzantine(spec) => spec.broadcast_period,
            };
            let agent = &mut self.agents[i];
            let gap = &agent.observer.w_self_frozen - &agent.w;
            let e_norm = (&e_t * &gap).norm();
            let send = match period {
                None => {
                    let decision = trigger_check(&(&e_t * &gap), t, t0, &agent.gains);
                    if decision.fire {
                        agent.observer.reset_trigger(t, agent.w.clone());
                        let residual = (&e_t * (&agent.observer.w_self_frozen - &agent.w)).norm();
                        self.output.triggers[i].push(TriggerEvent {
                            t,
                            error_norm: e_norm,
                            threshold: decision.threshold,
                            residual,
                        });
                    }
                    decision.fire
                }
                Some(p) => {
                    let due = t >= agent.next_broadcast - TIME_EPS;
                    if due {
                        while agent.next_broadcast <= t + TIME_EPS {
                            agent.next_broadcast += p;
                        }
                        agent.observer.reset_trigger(t, agent.w.clone());
                    }
                    due
                }
            };
            agent.e_norm = (&e_t * (&agent.observer.w_self_frozen - &agent.w)).norm();
            if send {
                self.enqueue_from(i, t)?;
            }
        }
        Ok(())
    }

    fn enqueue_from(&mut self, sender: usize, t: f64) -> Result<(), SimError> {
        let eta_self = &self.agents[sender].observer.eta;
        for &receiver in &self.out_neighbors[sender] {
            let value = match &self.scenario.agents[sender].role {
                Role::Normal => Some(eta_self.clone()),
                Role::Byzantine(spec) => byzantine_transmission(
                    spec,
                    receiver,
                    t,
                    eta_self,
                    &self.agents[receiver].observer.eta,
                    &self.agents[sender].eta_t0,
                )?,
            };
            if let Some(eta) = value {
                self.queue.push(Message { sender, receiver, t, eta });
            }
        }
        Ok(())
    }

    fn record_frame(&mut self) {
        let t = self.time();
        let agents = self
            .agents
            .iter()
            .map(|a| AgentSample {
                q: [a.plant.q[0], a.plant.q[1]],
                dq: [a.plant.dq[0], a.plant.dq[1]],
                eta: a.observer.eta.iter().copied().collect(),
                w: a.w.iter().copied().collect(),
                phi_hat_norm: a.phi_hat.norm(),
                e_norm: a.e_norm,
            })
            .collect();
        self.output.frames.push(Frame { t, agents });
    }
}

/// Closed-loop vector field of one agent with broadcast-dependent terms frozen.
struct AgentField<'a> {
    s: &'a ObserverMatrix,
    gains: &'a Gains,
    arm: &'a ArmParams,
    role: &'a Role,
    dynamics: Dynamics,
    coords: ObserverCoordinates,
    w_gap: Option<DVector<f64>>,
    agent: usize,
}

impl AgentField<'_> {
    fn protocol_eta_rate(&self, eta: &DVector<f64>, e_t: &DMatrix<f64>) -> Result<DVector<f64>, SimError> {
        let gap = self.w_gap.as_ref().ok_or_else(|| SimError::Config(format!(
            "agent {} has no fused neighbor value",
            self.agent + 1
        )))?;
        Ok(self.s.matrix() * eta - e_t * gap * self.gains.mu1)
    }

    fn eval(&self, x: &Flow, t: f64, e_t: &DMatrix<f64>) -> Result<Flow, SimError> {
        let (eta, eta_dot, obs_dot) = match (self.dynamics, self.coords) {
            (Dynamics::Protocol, ObserverCoordinates::Auxiliary) => {
                let gap = self.w_gap.as_ref().ok_or_else(|| SimError::Config(format!(
                    "agent {} has no fused neighbor value",
                    self.agent + 1
                )))?;
                let w_dot = gap * -self.gains.mu1;
                let eta = e_t * &x.obs;
                let eta_dot = self.s.matrix() * &eta + e_t * &w_dot;
                (eta, eta_dot, w_dot)
            }
            (Dynamics::Protocol, ObserverCoordinates::Eta) => {
                let rate = self.protocol_eta_rate(&x.obs, e_t)?;
                (x.obs.clone(), rate.clone(), rate)
            }
            (Dynamics::Scripted, _) => {
                let Role::Byzantine(spec) = self.role else {
                    unreachable!("only byzantine agents run scripted dynamics")
                };
                let base = match spec.evolution {
                    Evolution::InputFault { .. } => Some(self.protocol_eta_rate(&x.obs, e_t)?),
                    _ => None,
                };
                let rate = byzantine_observer_evolution(spec, t, base.as_ref())?;
                (x.obs.clone(), rate.clone(), rate)
            }
        };
        let plant = PlantState { q: x.q, dq: x.dq };
        let ctrl = ControllerState { phi_hat: x.phi };
        let out = control_update(&plant, &eta, &eta_dot, &ctrl, self.s, self.gains, self.arm.grav())
            .map_err(|source| SimError::Protocol { agent: self.agent + 1, source })?;
        let ddq = forward_dynamics(self.arm, &plant, &out.tau)?;
        Ok(Flow { q: x.dq, dq: ddq, obs: obs_dot, phi: out.phi_hat_dot })
    }
}

/// Runs `scenario` from `t0` to `t0 + horizon`.
pub fn run_scenario(scenario: Scenario) -> Result<SimOutput, SimError> {
    Simulation::new(scenario)?.run()
}
