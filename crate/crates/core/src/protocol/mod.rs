//! Decision stack of a normal agent: resilient fusion of neighbor auxiliary
//! variables, event-triggered broadcasting, the distributed observer and the
//! adaptive tracking controller.

mod avbrd;
mod control;
mod gains;
mod observer;
mod store;
mod trigger;

pub use avbrd::avbrd_fuse;
pub use control::{control_update, ControlOutput, ControllerState};
pub use gains::Gains;
pub use observer::{
    auxiliary_variable, aux_observer_rate, observer_derivative, open_loop_estimate,
    ObserverMatrix, ObserverState,
};
pub use store::{AcceptOutcome, NeighborRecord, NeighborStore, DEFAULT_DWELL_MIN, TIME_EPS};
pub use trigger::{trigger_check, trigger_threshold, TriggerDecision};
