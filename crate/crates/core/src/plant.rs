//! Two-link robotic arm in Euler-Lagrange form `M(q) q̈ + C(q, q̇) q̇ + g(q) = τ`.

use nalgebra::{Matrix2, SMatrix, SVector, Vector2};

use crate::error::PlantError;

/// Linear-in-parameters regressor `Ω` with `M x + C y + g = Ω ℓ`.
pub type Regressor = SMatrix<f64, 2, 5>;
/// Physical parameter vector `ℓ` (also the adaptive estimate's shape).
pub type ParamVector = SVector<f64, 5>;

pub const STANDARD_GRAVITY: f64 = 9.8;
/// Arm parameters used for every agent in the reference simulation.
pub const REFERENCE_ARM: [f64; 5] = [0.64, 1.10, 0.08, 0.64, 0.32];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmParams {
    l: ParamVector,
    grav: f64,
}

impl ArmParams {
    pub fn new(l: [f64; 5], grav: f64) -> Result<Self, PlantError> {
        if !l.iter().all(|x| x.is_finite()) || !grav.is_finite() {
            return Err(PlantError::InvalidArgument("arm parameters must be finite".into()));
        }
        // det M = l1 l2 - l3² cos² q2, positive for every q2 iff l1 l2 > l3²
        if l[0] * l[1] <= l[2] * l[2] {
            return Err(PlantError::InvalidArgument(format!(
                "inertia not positive definite for all poses: l1*l2 = {} <= l3^2 = {}",
                l[0] * l[1],
                l[2] * l[2]
            )));
        }
        Ok(Self { l: ParamVector::from(l), grav })
    }

    pub fn reference() -> Self {
        Self::new(REFERENCE_ARM, STANDARD_GRAVITY).expect("reference arm is valid")
    }

    pub fn l(&self) -> &ParamVector {
        &self.l
    }

    pub fn grav(&self) -> f64 {
        self.grav
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantState {
    pub q: Vector2<f64>,
    pub dq: Vector2<f64>,
}

impl PlantState {
    pub fn new(q: [f64; 2], dq: [f64; 2]) -> Self {
        Self { q: Vector2::from(q), dq: Vector2::from(dq) }
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.dq.iter()).all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Torque(pub Vector2<f64>);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsTerms {
    pub inertia: Matrix2<f64>,
    pub coriolis: Matrix2<f64>,
    pub gravity: Vector2<f64>,
}

pub fn dynamics_terms(p: &ArmParams, s: &PlantState) -> DynamicsTerms {
    let l = &p.l;
    let (s2, c2) = s.q[1].sin_cos();
    let c1 = s.q[0].cos();
    let c12 = (s.q[0] + s.q[1]).cos();
    let (dq1, dq2) = (s.dq[0], s.dq[1]);

    let m12 = l[1] + l[2] * c2;
    let inertia = Matrix2::new(l[0] + l[1] + 2.0 * l[2] * c2, m12, m12, l[1]);
    let coriolis = Matrix2::new(
        -l[2] * dq2 * s2,
        -l[2] * (dq1 + dq2) * s2,
        l[2] * dq1 * s2,
        0.0,
    );
    let gravity = Vector2::new(
        l[3] * p.grav * c1 + l[4] * p.grav * c12,
        l[4] * p.grav * c12,
    );
    DynamicsTerms { inertia, coriolis, gravity }
}

/// Time derivative of the inertia matrix along the motion, `∂M/∂q₂ · q̇₂`.
pub fn inertia_rate(p: &ArmParams, s: &PlantState) -> Matrix2<f64> {
    let l3 = p.l[2];
    let rate = -l3 * s.q[1].sin() * s.dq[1];
    Matrix2::new(2.0 * rate, rate, rate, 0.0)
}

/// Regressor with `M(q) x + C(q, q̇) y + g(q) = Ω ℓ` for every parameter vector `ℓ`.
pub fn regression_matrix(s: &PlantState, x: &Vector2<f64>, y: &Vector2<f64>, grav: f64) -> Regressor {
    let (s2, c2) = s.q[1].sin_cos();
    let c1 = s.q[0].cos();
    let c12 = (s.q[0] + s.q[1]).cos();
    let (dq1, dq2) = (s.dq[0], s.dq[1]);
    let (x1, x2, y1, y2) = (x[0], x[1], y[0], y[1]);

    #[rustfmt::skip]
    let omega = Regressor::new(
        x1, x1 + x2, 2.0 * c2 * x1 + c2 * x2 - dq2 * s2 * y1 - (dq1 + dq2) * s2 * y2, grav * c1, grav * c12,
        0.0, x1 + x2, c2 * x1 + dq1 * s2 * y1,                                         0.0,       grav * c12,
    );
    omega
}

/// Joint accelerations `M⁻¹ (τ − C q̇ − g)`.
pub fn forward_dynamics(p: &ArmParams, s: &PlantState, u: &Torque) -> Result<Vector2<f64>, PlantError> {
    let terms = dynamics_terms(p, s);
    let rhs = u.0 - terms.coriolis * s.dq - terms.gravity;
    let m = terms.inertia;
    let det = m.determinant();
    if !(det.abs() > f64::EPSILON) {
        return Err(PlantError::SingularInertia { det });
    }
    // explicit 2×2 inverse
    Ok(Vector2::new(
        (m[(1, 1)] * rhs[0] - m[(0, 1)] * rhs[1]) / det,
        (m[(0, 0)] * rhs[1] - m[(1, 0)] * rhs[0]) / det,
    ))
}

/// One classical RK4 step of the open-loop plant with torque held over the step.
pub fn integrate_plant_step(
    p: &ArmParams,
    s: &PlantState,
    u: &Torque,
    dt: f64,
) -> Result<PlantState, PlantError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(PlantError::InvalidArgument(format!("step size must be positive, got {dt}")));
    }
    let deriv = |st: &PlantState| -> Result<(Vector2<f64>, Vector2<f64>), PlantError> {
        Ok((st.dq, forward_dynamics(p, st, u)?))
    };
    let shift = |k: &(Vector2<f64>, Vector2<f64>), h: f64| PlantState { q: s.q + k.0 * h, dq: s.dq + k.1 * h };

    let k1 = deriv(s)?;
    let k2 = deriv(&shift(&k1, dt / 2.0))?;
    let k3 = deriv(&shift(&k2, dt / 2.0))?;
    let k4 = deriv(&shift(&k3, dt))?;
    Ok(PlantState {
        q: s.q + (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0) * (dt / 6.0),
        dq: s.dq + (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1) * (dt / 6.0),
    })
}

pub fn kinetic_energy(p: &ArmParams, s: &PlantState) -> f64 {
    0.5 * s.dq.dot(&(dynamics_terms(p, s).inertia * s.dq))
}

/// Potential whose gradient is the gravity vector.
pub fn potential_energy(p: &ArmParams, s: &PlantState) -> f64 {
    p.grav * (p.l[3] * s.q[0].sin() + p.l[4] * (s.q[0] + s.q[1]).sin())
}
