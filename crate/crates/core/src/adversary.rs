//! Declarative Byzantine behaviors.
//!
//! A Byzantine agent may evolve its observer however it likes, send a different
//! value to each out-neighbor, and stop transmitting altogether. Time-varying
//! ingredients are restricted to [`TimeFunction`] (sinusoid sums) so that every
//! attack can be written down in a scenario file.

use std::collections::BTreeMap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::AdversaryError;
use crate::graph::Digraph;

/// `offset + Σ a·cos(ω t) + Σ b·sin(ω t)`; each pair is `[amplitude, omega]`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeFunction {
    #[serde(default)]
    pub offset: f64,
    #[serde(default)]
    pub cos: Vec<[f64; 2]>,
    #[serde(default)]
    pub sin: Vec<[f64; 2]>,
}

impl TimeFunction {
    pub fn constant(c: f64) -> Self {
        Self { offset: c, ..Self::default() }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.offset
            + self.cos.iter().map(|[a, w]| a * (w * t).cos()).sum::<f64>()
            + self.sin.iter().map(|[a, w]| a * (w * t).sin()).sum::<f64>()
    }

    fn is_finite(&self) -> bool {
        self.offset.is_finite() && self.cos.iter().chain(&self.sin).flatten().all(|x| x.is_finite())
    }
}

fn eval_all(funcs: &[TimeFunction], t: f64) -> DVector<f64> {
    DVector::from_iterator(funcs.len(), funcs.iter().map(|f| f.eval(t)))
}

/// How the Byzantine agent advances its own observer state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum Evolution {
    /// Runs the normal observer.
    FollowProtocol,
    /// `η̇(t)` is prescribed, whatever the agent receives.
    DerivativeOverride { rate: Vec<TimeFunction> },
    /// `η̇ = η̇_protocol ∘ m(t)` (fault on the observer input).
    InputFault { multiplier: Vec<TimeFunction> },
}

impl Evolution {
    pub fn needs_protocol(&self) -> bool {
        !matches!(self, Evolution::DerivativeOverride { .. })
    }
}

/// Transform applied to the value sent to one receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case", deny_unknown_fields)]
pub enum Transmission {
    Honest,
    /// Sends `factor · η`.
    Scale { factor: f64 },
    /// Sends `η + α + β` with `α_k = min{sin(freq·t)·|η_recv,k|, |η_k(t₀)|}`
    /// (false data keyed on the receiver's live state) and `β = noise(t)`.
    Inject { freq: f64, noise: Vec<TimeFunction> },
    /// Never sends.
    Silent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionPolicy {
    pub transmission: Transmission,
    /// Stops all messages to this receiver for `t > silent_from`.
    pub silent_from: Option<f64>,
}

impl TransmissionPolicy {
    pub fn honest() -> Self {
        Self { transmission: Transmission::Honest, silent_from: None }
    }

    pub fn new(transmission: Transmission) -> Self {
        Self { transmission, silent_from: None }
    }

    pub fn silent_after(mut self, t_cut: f64) -> Self {
        self.silent_from = Some(t_cut);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ByzantineSpec {
    /// 0-based agent id.
    pub agent: usize,
    pub evolution: Evolution,
    /// Fixed broadcast period. `None` broadcasts on the agent's own trigger
    /// instants, exactly like a normal agent.
    pub broadcast_period: Option<f64>,
    /// Policy per receiver (0-based id). Must cover every out-neighbor.
    pub policies: BTreeMap<usize, TransmissionPolicy>,
}

impl ByzantineSpec {
    /// An agent flagged Byzantine that behaves exactly like a normal one.
    pub fn null_attack(agent: usize, graph: &Digraph) -> Self {
        Self {
            agent,
            evolution: Evolution::FollowProtocol,
            broadcast_period: None,
            policies: graph.out_neighbors(agent).into_iter().map(|j| (j, TransmissionPolicy::honest())).collect(),
        }
    }

    /// Checks the spec against the communication graph and observer dimension.
    pub fn validate(&self, graph: &Digraph, dim: usize) -> Result<(), AdversaryError> {
        let cfg = |m: String| Err(AdversaryError::Config(format!("byzantine agent {}: {m}", self.agent + 1)));
        if self.agent >= graph.n() {
            return cfg("agent id out of range".into());
        }
        if let Some(p) = self.broadcast_period {
            if !(p > 0.0) || !p.is_finite() {
                return cfg(format!("broadcast period must be positive, got {p}"));
            }
        }
        let funcs: &[TimeFunction] = match &self.evolution {
            Evolution::FollowProtocol => &[],
            Evolution::DerivativeOverride { rate } => rate,
            Evolution::InputFault { multiplier } => multiplier,
        };
        if !funcs.is_empty() && funcs.len() != dim {
            return cfg(format!("evolution has {} components, observer has {dim}", funcs.len()));
        }
        if funcs.iter().any(|f| !f.is_finite()) {
            return cfg("non-finite time-function coefficient".into());
        }
        let outs = graph.out_neighbors(self.agent);
        for j in &outs {
            if !self.policies.contains_key(j) {
                return cfg(format!("no transmission policy for out-neighbor {}", j + 1));
            }
        }
        for (j, policy) in &self.policies {
            if !outs.contains(j) {
                return cfg(format!("policy for agent {} which is not an out-neighbor", j + 1));
            }
            match &policy.transmission {
                Transmission::Scale { factor } if !factor.is_finite() => {
                    return cfg(format!("non-finite scale factor for receiver {}", j + 1))
                }
                Transmission::Inject { freq, noise } => {
                    if !freq.is_finite() || noise.iter().any(|f| !f.is_finite()) {
                        return cfg(format!("non-finite injection parameters for receiver {}", j + 1));
                    }
                    if noise.len() != dim {
                        return cfg(format!(
                            "injection noise for receiver {} has {} components, observer has {dim}",
                            j + 1,
                            noise.len()
                        ));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Observer derivative the Byzantine agent actually integrates.
pub fn byzantine_observer_evolution(
    spec: &ByzantineSpec,
    t: f64,
    protocol_derivative: Option<&DVector<f64>>,
) -> Result<DVector<f64>, AdversaryError> {
    match &spec.evolution {
        Evolution::DerivativeOverride { rate } => Ok(eval_all(rate, t)),
        Evolution::FollowProtocol | Evolution::InputFault { .. } => {
            let base = protocol_derivative.ok_or_else(|| {
                AdversaryError::InvalidArgument("this evolution mode needs the protocol derivative".into())
            })?;
            match &spec.evolution {
                Evolution::InputFault { multiplier } => Ok(base.component_mul(&eval_all(multiplier, t))),
                _ => Ok(base.clone()),
            }
        }
    }
}

/// Message sent to `receiver` at `t`, or `None` when the link is silent.
pub fn byzantine_transmission(
    spec: &ByzantineSpec,
    receiver: usize,
    t: f64,
    eta_self: &DVector<f64>,
    eta_receiver: &DVector<f64>,
    eta_self_t0: &DVector<f64>,
) -> Result<Option<DVector<f64>>, AdversaryError> {
    let policy = spec.policies.get(&receiver).ok_or_else(|| {
        AdversaryError::Config(format!(
            "byzantine agent {} has no policy for receiver {}",
            spec.agent + 1,
            receiver + 1
        ))
    })?;
    if policy.silent_from.is_some_and(|cut| t > cut) {
        return Ok(None);
    }
    Ok(match &policy.transmission {
        Transmission::Honest => Some(eta_self.clone()),
        Transmission::Scale { factor } => Some(eta_self * *factor),
        Transmission::Silent => None,
        Transmission::Inject { freq, noise } => {
            let gain = (freq * t).sin();
            let alpha = DVector::from_iterator(
                eta_self.len(),
                (0..eta_self.len()).map(|k| (gain * eta_receiver[k].abs()).min(eta_self_t0[k].abs())),
            );
            Some(eta_self + alpha + eval_all(noise, t))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(x)
    }

    fn override_spec() -> ByzantineSpec {
        ByzantineSpec {
            agent: 4,
            evolution: Evolution::DerivativeOverride {
                rate: vec![
                    TimeFunction { cos: vec![[2.0, 4.0]], ..Default::default() },
                    TimeFunction { cos: vec![[0.4, 8.0]], sin: vec![[0.4, 6.0]], ..Default::default() },
                ],
            },
            broadcast_period: Some(1e-3),
            policies: BTreeMap::new(),
        }
    }

    #[test]
    fn derivative_override_at_start() {
        let d = byzantine_observer_evolution(&override_spec(), 0.0, None).unwrap();
        assert_eq!(d, v(&[2.0, 0.4]));
        let t = 0.3f64;
        let d = byzantine_observer_evolution(&override_spec(), t, None).unwrap();
        assert!((d[0] - 2.0 * (4.0 * t).cos()).abs() < 1e-15);
        assert!((d[1] - 0.4 * ((8.0 * t).cos() + (6.0 * t).sin())).abs() < 1e-15);
    }

    #[test]
    fn input_fault_is_a_hadamard_product() {
        let spec = ByzantineSpec {
            evolution: Evolution::InputFault {
                multiplier: vec![
                    TimeFunction::constant(0.2),
                    TimeFunction { offset: 1.0, sin: vec![[1.0, 5.0]], ..Default::default() },
                ],
            },
            ..override_spec()
        };
        let d = byzantine_observer_evolution(&spec, 0.0, Some(&v(&[1.0, 1.0]))).unwrap();
        assert_eq!(d, v(&[0.2, 1.0]));
        assert!(byzantine_observer_evolution(&spec, 0.0, None).is_err());
    }

    #[test]
    fn follow_protocol_is_identity() {
        let spec = ByzantineSpec { evolution: Evolution::FollowProtocol, ..override_spec() };
        let base = v(&[0.3, -7.0]);
        assert_eq!(byzantine_observer_evolution(&spec, 1.0, Some(&base)).unwrap(), base);
    }

    fn two_faced() -> ByzantineSpec {
        let noise = vec![
            TimeFunction { cos: vec![[0.5, 1.0]], ..Default::default() },
            TimeFunction { cos: vec![[0.05, 1.0]], ..Default::default() },
        ];
        let mut policies = BTreeMap::new();
        policies.insert(1, TransmissionPolicy::new(Transmission::Scale { factor: 0.6 }));
        policies.insert(2, TransmissionPolicy::new(Transmission::Inject { freq: 3.0, noise: noise.clone() }));
        policies.insert(3, TransmissionPolicy::new(Transmission::Inject { freq: 4.0, noise }).silent_after(0.0));
        ByzantineSpec { agent: 0, evolution: Evolution::FollowProtocol, broadcast_period: Some(1e-3), policies }
    }

    #[test]
    fn transmissions_of_the_two_faced_agent() {
        let spec = two_faced();
        let me = v(&[1.0, 1.0]);
        let t0 = v(&[-1.5, -0.5]);
        let recv = v(&[0.3, 0.9]);
        assert_eq!(byzantine_transmission(&spec, 1, 0.0, &me, &recv, &t0).unwrap(), Some(v(&[0.6, 0.6])));
        let inj = byzantine_transmission(&spec, 2, 0.0, &me, &recv, &t0).unwrap().unwrap();
        assert_eq!(inj, v(&[1.5, 1.05]));
        // receiver 4 at t0 still hears, then never again
        assert!(byzantine_transmission(&spec, 3, 0.0, &me, &recv, &t0).unwrap().is_some());
        for t in [1e-6, 1.0, 50.0] {
            assert_eq!(byzantine_transmission(&spec, 3, t, &me, &recv, &t0).unwrap(), None);
        }
        // different receivers see different values at the same instant
        let t = 0.4;
        let a = byzantine_transmission(&spec, 1, t, &me, &recv, &t0).unwrap();
        let b = byzantine_transmission(&spec, 2, t, &me, &recv, &t0).unwrap();
        assert_ne!(a, b);
        assert!(byzantine_transmission(&spec, 6, t, &me, &recv, &t0).is_err());
    }

    #[test]
    fn injection_is_capped_by_initial_state() {
        let spec = two_faced();
        let t: f64 = std::f64::consts::FRAC_PI_6; // sin(3t) = 1
        let me = v(&[0.0, 0.0]);
        let t0 = v(&[-1.5, -0.5]);
        let recv = v(&[10.0, 0.2]);
        let msg = byzantine_transmission(&spec, 2, t, &me, &recv, &t0).unwrap().unwrap();
        let beta = [0.5 * t.cos(), 0.05 * t.cos()];
        assert!((msg[0] - (1.5 + beta[0])).abs() < 1e-12);
        assert!((msg[1] - (0.2 + beta[1])).abs() < 1e-12);
    }

    #[test]
    fn validation_against_graph() {
        let g = Digraph::complete(4).unwrap();
        let mut spec = two_faced();
        assert!(spec.validate(&g, 2).is_ok());
        spec.policies.remove(&1);
        assert!(matches!(spec.validate(&g, 2), Err(AdversaryError::Config(_))));
        let mut spec = two_faced();
        spec.broadcast_period = Some(0.0);
        assert!(spec.validate(&g, 2).is_err());
        let mut spec = two_faced();
        spec.policies.insert(0, TransmissionPolicy::honest());
        assert!(spec.validate(&g, 2).is_err());
        assert!(ByzantineSpec::null_attack(2, &g).validate(&g, 2).is_ok());
    }
}
