//! Two-link arm model: regressor identity, passivity and an unforced swing.
//!
//! ```text
//! cargo run --example arm_dynamics
//! ```

use elrc::plant::{
    dynamics_terms, inertia_rate, integrate_plant_step, kinetic_energy, potential_energy, regression_matrix, ArmParams, PlantState,
    Torque,
};
use nalgebra::Vector2;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let arm = ArmParams::reference();
    let state = PlantState::new([0.3, -1.1], [0.7, -0.2]);
    let x = Vector2::new(0.5, -1.5);
    let y = Vector2::new(-0.4, 2.0);

    let terms = dynamics_terms(&arm, &state);
    let lhs = terms.inertia * x + terms.coriolis * y + terms.gravity;
    let omega = regression_matrix(&state, &x, &y, arm.grav());
    println!("M x + C y + g = {:?}", lhs.as_slice());
    println!("Omega l       = {:?}", (omega * arm.l()).as_slice());

    let skew = inertia_rate(&arm, &state) - terms.coriolis * 2.0;
    let p = Vector2::new(1.3, -0.8);
    println!("p^T (dM - 2C) p = {:e}", p.dot(&(skew * p)));

    // Unforced swing: total energy is conserved up to integration error.
    let energy = |s: &PlantState| kinetic_energy(&arm, s) + potential_energy(&arm, s);
    let mut s = PlantState::new([0.2, 0.9], [1.0, -0.5]);
    let e0 = energy(&s);
    let dt = 1e-3;
    let zero = Torque(Vector2::zeros());
    for k in 1..=2000 {
        s = integrate_plant_step(&arm, &s, &zero, dt)?;
        if k % 500 == 0 {
            println!("t = {:.1}  q = {:>7.4?}  energy drift {:+.2e}", k as f64 * dt, s.q.as_slice(), energy(&s) - e0);
        }
    }
    Ok(())
}
