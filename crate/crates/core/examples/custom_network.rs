//! Building a scenario in code: four arms, one of which lies to a neighbor.
//!
//! ```text
//! cargo run --release --example custom_network
//! ```

use std::collections::BTreeMap;

use elrc::adversary::{ByzantineSpec, Evolution, Transmission, TransmissionPolicy};
use elrc::analysis::compute_metrics;
use elrc::engine::{AgentSetup, Role};
use elrc::plant::{ArmParams, ParamVector};
use elrc::protocol::{Gains, ObserverMatrix};
use elrc::{run_scenario, Digraph, Scenario, SimConfig};
use nalgebra::DVector;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let graph = Digraph::complete(4)?;
    let gains = Gains::reference(1);
    let etas = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.5], [0.5, -0.5]];

    let liar = ByzantineSpec {
        agent: 3,
        evolution: Evolution::FollowProtocol,
        broadcast_period: Some(0.01),
        policies: BTreeMap::from([
            (0, TransmissionPolicy::new(Transmission::Scale { factor: -1.0 })),
            (1, TransmissionPolicy::honest()),
            (2, TransmissionPolicy::honest().silent_after(1.0)),
        ]),
    };

    let agents = etas
        .iter()
        .enumerate()
        .map(|(i, eta)| AgentSetup {
            role: if i == 3 { Role::Byzantine(liar.clone()) } else { Role::Normal },
            arm: ArmParams::reference(),
            q0: [0.2 * i as f64, -0.1],
            dq0: [0.0, 0.0],
            eta0: DVector::from_row_slice(eta),
            phi_hat0: ParamVector::zeros(),
            k: gains.k,
            adaptation: gains.adaptation,
        })
        .collect();

    let scenario = Scenario {
        graph: graph.clone(),
        observer: ObserverMatrix::reference(),
        gains,
        agents,
        sim: SimConfig { horizon: 4.0, decimation: 10, ..SimConfig::default() },
    };
    for w in scenario.validate()? {
        println!("warning: {w}");
    }
    let out = run_scenario(scenario)?;
    let m = compute_metrics(&out, &graph)?;
    println!("normal agents' aux-variable spread after 4 s: {:.3e}", m.terminal_w_spread);
    println!("messages rejected by the dwell filter: {}", m.messages_rejected);
    Ok(())
}
