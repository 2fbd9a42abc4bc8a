use nalgebra::{DVector, Vector2};

use super::{Gains, ObserverMatrix};
use crate::error::ProtocolError;
use crate::plant::{regression_matrix, ParamVector, PlantState, Regressor, Torque};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerState {
    /// Adaptive estimate `φ̂` of the arm parameters.
    pub phi_hat: ParamVector,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    pub tau: Torque,
    pub phi_hat_dot: ParamVector,
    /// Reference velocity `v`.
    pub v: Vector2<f64>,
    pub v_dot: Vector2<f64>,
    /// Sliding variable `s = q̇ − v`.
    pub s: Vector2<f64>,
    pub regressor: Regressor,
}

fn as_plane(x: &DVector<f64>) -> Result<Vector2<f64>, ProtocolError> {
    if x.len() != 2 {
        return Err(ProtocolError::InvalidArgument(format!(
            "the arm controller needs a 2-dimensional observer, got {}",
            x.len()
        )));
    }
    Ok(Vector2::new(x[0], x[1]))
}

/// Adaptive tracking law driving `q` towards the observer state `η`.
///
/// `v = Sη − μ₂(q − η)`, `s = q̇ − v`, `τ = −k s + Ω(q, q̇, v̇, v) φ̂`,
/// `φ̂̇ = −F Ωᵀ s`.
pub fn control_update(
    plant: &PlantState,
    eta: &DVector<f64>,
    eta_dot: &DVector<f64>,
    ctrl: &ControllerState,
    s_mat: &ObserverMatrix,
    g: &Gains,
    grav: f64,
) -> Result<ControlOutput, ProtocolError> {
    let s_eta = as_plane(&(s_mat.matrix() * eta))?;
    let s_eta_dot = as_plane(&(s_mat.matrix() * eta_dot))?;
    let eta = as_plane(eta)?;
    let eta_dot = as_plane(eta_dot)?;

    let v = s_eta - (plant.q - eta) * g.mu2;
    let v_dot = s_eta_dot - (plant.dq - eta_dot) * g.mu2;
    let s = plant.dq - v;
    let regressor = regression_matrix(plant, &v_dot, &v, grav);
    let tau = Torque(-s * g.k + regressor * ctrl.phi_hat);
    let phi_hat_dot = -(regressor.transpose() * s) * g.adaptation;
    Ok(ControlOutput { tau, phi_hat_dot, v, v_dot, s, regressor })
}
