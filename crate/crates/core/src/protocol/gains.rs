use serde::{Deserialize, Serialize};

use crate::error::ProtocolError;

/// Gains of one agent. Construction enforces the sufficient conditions for
/// resilient consensus (`k μ₂ > 1/2` and the trigger-parameter ranges).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gains {
    pub mu1: f64,
    pub mu2: f64,
    pub k: f64,
    /// Adaptation gain `F`.
    pub adaptation: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    /// Assumed bound on Byzantine in-neighbors per normal agent.
    pub f: usize,
}

impl Gains {
    /// Gains of the reference simulation with the given `f`.
    pub fn reference(f: usize) -> Self {
        Self { mu1: 5.9, mu2: 2.0, k: 80.0, adaptation: 0.6, alpha1: 8.0, alpha2: 3.0, alpha3: 4.0, f }
    }

    pub fn validate(self) -> Result<Self, ProtocolError> {
        let named = [
            ("mu1", self.mu1),
            ("mu2", self.mu2),
            ("k", self.k),
            ("F", self.adaptation),
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("alpha3", self.alpha3),
        ];
        if let Some((name, v)) = named.iter().find(|(_, v)| !v.is_finite()) {
            return Err(ProtocolError::InvalidGains(format!("{name} = {v} is not finite")));
        }
        if let Some((name, v)) = named[..5].iter().find(|(_, v)| *v <= 0.0) {
            return Err(ProtocolError::InvalidGains(format!("{name} must be > 0, got {v}")));
        }
        if self.alpha2 <= 1.0 {
            return Err(ProtocolError::InvalidGains(format!("alpha2 must be > 1, got {}", self.alpha2)));
        }
        if self.alpha3 <= 1.0 {
            return Err(ProtocolError::InvalidGains(format!("alpha3 must be > 1, got {}", self.alpha3)));
        }
        if self.k * self.mu2 <= 0.5 {
            return Err(ProtocolError::InvalidGains(format!(
                "k * mu2 must exceed 1/2, got {}",
                self.k * self.mu2
            )));
        }
        Ok(self)
    }
}
