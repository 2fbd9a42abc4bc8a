use nalgebra::DVector;

use super::Gains;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriggerDecision {
    pub fire: bool,
    pub threshold: f64,
}

/// Decaying broadcast threshold `α₁ / (t − t₀ + α₂)^{α₃}`.
pub fn trigger_threshold(t: f64, t0: f64, g: &Gains) -> f64 {
    g.alpha1 / (t - t0 + g.alpha2).powf(g.alpha3)
}

/// Fires when the self-estimation error reaches the threshold.
pub fn trigger_check(e_eta: &DVector<f64>, t: f64, t0: f64, g: &Gains) -> TriggerDecision {
    debug_assert!(t >= t0, "trigger evaluated before the start time");
    let threshold = trigger_threshold(t, t0, g);
    TriggerDecision { fire: e_eta.norm() >= threshold, threshold }
}
