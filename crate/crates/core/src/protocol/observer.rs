use nalgebra::{DMatrix, DVector};
use tracing::warn;

use super::{avbrd_fuse, Gains, NeighborStore};
use crate::error::ProtocolError;
use crate::expm::matrix_exponential;

/// Tolerance on the real parts of the eigenvalues of the observer matrix.
const EIGEN_REAL_TOL: f64 = 1e-9;

/// System matrix `S` shared by every observer.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverMatrix {
    s: DMatrix<f64>,
    max_real_part: f64,
}

impl ObserverMatrix {
    /// Accepts any finite square matrix. Eigenvalues off the imaginary axis
    /// only produce a warning.
    pub fn new(s: DMatrix<f64>) -> Result<Self, ProtocolError> {
        if !s.is_square() || s.nrows() == 0 {
            return Err(ProtocolError::InvalidArgument(format!(
                "observer matrix must be square and nonempty, got {}x{}",
                s.nrows(),
                s.ncols()
            )));
        }
        if !s.iter().all(|x| x.is_finite()) {
            return Err(ProtocolError::InvalidArgument("observer matrix must be finite".into()));
        }
        let max_real_part = s
            .complex_eigenvalues()
            .iter()
            .map(|z| z.re.abs())
            .fold(0.0, f64::max);
        if max_real_part > EIGEN_REAL_TOL {
            warn!(max_real_part, "observer matrix has eigenvalues off the imaginary axis");
        }
        Ok(Self { s, max_real_part })
    }

    /// `S = [[0, −1.5], [6, 0]]`.
    pub fn reference() -> Self {
        Self::new(DMatrix::from_row_slice(2, 2, &[0.0, -1.5, 6.0, 0.0])).expect("valid")
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn dim(&self) -> usize {
        self.s.nrows()
    }

    /// Largest `|Re λ|` over the eigenvalues.
    pub fn max_real_part(&self) -> f64 {
        self.max_real_part
    }

    pub fn is_marginally_stable(&self) -> bool {
        self.max_real_part <= EIGEN_REAL_TOL
    }

    /// `e^{S t}`.
    pub fn exp(&self, t: f64) -> DMatrix<f64> {
        if t == 0.0 {
            return DMatrix::identity(self.dim(), self.dim());
        }
        matrix_exponential(&self.s, t)
    }
}

/// `W = e^{−S t} η`.
pub fn auxiliary_variable(s: &ObserverMatrix, t: f64, eta: &DVector<f64>) -> DVector<f64> {
    s.exp(-t) * eta
}

/// `η̂(t_now) = e^{S (t_now − t_trig)} η(t_trig)`.
pub fn open_loop_estimate(
    s: &ObserverMatrix,
    t_now: f64,
    t_trig: f64,
    eta_trig: &DVector<f64>,
) -> Result<DVector<f64>, ProtocolError> {
    if t_now < t_trig {
        return Err(ProtocolError::InvalidArgument(format!(
            "estimate requested at {t_now} before the trigger instant {t_trig}"
        )));
    }
    Ok(s.exp(t_now - t_trig) * eta_trig)
}

/// Observer state of one agent together with its latest trigger snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverState {
    pub eta: DVector<f64>,
    pub t_last_trigger: f64,
    pub eta_at_trigger: DVector<f64>,
    /// `Ŵ = e^{−S t_last_trigger} η(t_last_trigger)`, constant until the next trigger.
    pub w_self_frozen: DVector<f64>,
}

impl ObserverState {
    /// State at `t0`, which counts as the initial trigger instant.
    pub fn new(s: &ObserverMatrix, t0: f64, eta0: DVector<f64>) -> Self {
        let w = auxiliary_variable(s, t0, &eta0);
        Self { eta_at_trigger: eta0.clone(), eta: eta0, t_last_trigger: t0, w_self_frozen: w }
    }

    /// Records a trigger at `t` with the current `eta`.
    pub fn reset_trigger(&mut self, t: f64, w_now: DVector<f64>) {
        self.t_last_trigger = t;
        self.eta_at_trigger = self.eta.clone();
        self.w_self_frozen = w_now;
    }

    /// Own open-loop estimate `η̂(t)`.
    pub fn self_estimate(&self, s: &ObserverMatrix, t: f64) -> Result<DVector<f64>, ProtocolError> {
        open_loop_estimate(s, t, self.t_last_trigger, &self.eta_at_trigger)
    }
}

/// `η̇ = S η − μ₁ (η̂ − η̄)` with `η̄ = e^{S t} W̄` and `W̄` the fused neighbor
/// auxiliary variables.
pub fn observer_derivative(
    obs: &ObserverState,
    store: &NeighborStore,
    s: &ObserverMatrix,
    g: &Gains,
    t: f64,
) -> Result<DVector<f64>, ProtocolError> {
    let w_bar = avbrd_fuse(&store.w_columns(), g.f)?;
    let eta_bar = s.exp(t) * w_bar;
    let eta_hat = obs.self_estimate(s, t)?;
    Ok(s.matrix() * &obs.eta - (eta_hat - eta_bar) * g.mu1)
}

/// The same dynamics in auxiliary coordinates: `Ẇ = −μ₁ (Ŵ − W̄)`.
pub fn aux_observer_rate(w_self_frozen: &DVector<f64>, w_bar: &DVector<f64>, mu1: f64) -> DVector<f64> {
    (w_self_frozen - w_bar) * -mu1
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(x)
    }

    #[test]
    fn auxiliary_variable_examples() {
        let s = ObserverMatrix::reference();
        let eta = v(&[0.3, -1.1]);
        assert_eq!(auxiliary_variable(&s, 0.0, &eta), eta);
        let w = auxiliary_variable(&s, PI / 6.0, &v(&[0.0, 2.0]));
        assert!((w - v(&[1.0, 0.0])).norm() < 1e-12);
        for t in [0.2, 3.3, 9.7] {
            let back = s.exp(t) * auxiliary_variable(&s, t, &eta);
            assert!((back - &eta).norm() < 1e-10);
        }
    }

    #[test]
    fn open_loop_examples() {
        let s = ObserverMatrix::reference();
        let eta = v(&[1.0, 0.0]);
        assert_eq!(open_loop_estimate(&s, 2.0, 2.0, &eta).unwrap(), eta);
        let est = open_loop_estimate(&s, 1.0 + PI / 6.0, 1.0, &eta).unwrap();
        assert!((est - v(&[0.0, 2.0])).norm() < 1e-12);
        let zero = ObserverMatrix::new(DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(open_loop_estimate(&zero, 7.0, 1.0, &eta).unwrap(), eta);
        assert!(open_loop_estimate(&s, 0.5, 1.0, &eta).is_err());
    }

    #[test]
    fn eigenvalue_check() {
        assert!(ObserverMatrix::reference().is_marginally_stable());
        let unstable = ObserverMatrix::new(DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.0])).unwrap();
        assert!(!unstable.is_marginally_stable());
        assert!(ObserverMatrix::new(DMatrix::zeros(2, 3)).is_err());
    }

    fn store_with(s: &ObserverMatrix, t: f64, etas: &[DVector<f64>]) -> NeighborStore {
        let mut store = NeighborStore::new(0..etas.len());
        for (j, eta) in etas.iter().enumerate() {
            store.seed(j, t, eta.clone(), s);
        }
        store
    }

    #[test]
    fn derivative_without_correction() {
        let s = ObserverMatrix::new(DMatrix::zeros(2, 2)).unwrap();
        let g = Gains { mu1: 1.0, ..Gains::reference(0) };
        let obs = ObserverState::new(&s, 0.0, v(&[1.0, 0.0]));
        let store = store_with(&s, 0.0, &[v(&[0.0, 0.0])]);
        let d = observer_derivative(&obs, &store, &s, &g, 0.5).unwrap();
        assert_eq!(d, v(&[-1.0, 0.0]));

        let agree = store_with(&s, 0.0, &[v(&[1.0, 0.0])]);
        assert_eq!(observer_derivative(&obs, &agree, &s, &g, 0.5).unwrap(), v(&[0.0, 0.0]));
    }

    #[test]
    fn coordinate_forms_agree() {
        let s = ObserverMatrix::reference();
        let g = Gains::reference(1);
        let mut obs = ObserverState::new(&s, 0.2, v(&[0.4, -1.0]));
        obs.eta = v(&[0.5, -0.8]);
        let store = store_with(&s, 0.1, &[v(&[1.0, 2.0]), v(&[-0.3, 0.2]), v(&[0.9, -0.4])]);
        let t = 0.45;
        let eta_dot = observer_derivative(&obs, &store, &s, &g, t).unwrap();
        let w_bar = avbrd_fuse(&store.w_columns(), g.f).unwrap();
        let lhs = s.exp(-t) * (eta_dot - s.matrix() * &obs.eta);
        let rhs = aux_observer_rate(&obs.w_self_frozen, &w_bar, g.mu1);
        assert!((lhs - rhs).norm() < 1e-9);
    }

    #[test]
    fn insufficient_store_propagates() {
        let s = ObserverMatrix::reference();
        let obs = ObserverState::new(&s, 0.0, v(&[0.0, 0.0]));
        let store = NeighborStore::new(std::iter::empty());
        assert!(matches!(
            observer_derivative(&obs, &store, &s, &Gains::reference(0), 0.0),
            Err(ProtocolError::InsufficientNeighbors { got: 0, needed: 1, f: 0 })
        ));
    }
}
