//! The bundled attack scenario with and without resilient fusion.
//!
//! ```text
//! cargo run --release --example byzantine_attack
//! ```

use elrc::analysis::compute_metrics;
use elrc::scenario::{bundled, Overrides, ScenarioFile};
use elrc::run_scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = bundled("paper_scenario_C").expect("bundled scenario");
    for f in [0, 1] {
        let mut file = ScenarioFile::parse(text)?;
        Overrides { f: Some(f), ..Default::default() }.apply(&mut file);
        let scenario = file.build(None)?;
        let graph = scenario.graph.clone();
        let out = run_scenario(scenario)?;
        let m = compute_metrics(&out, &graph)?;

        println!("f = {f}: aux-variable spread {:.3e}, position spread {:.3e}", m.terminal_w_spread, m.terminal_q_spread);
        for a in &m.agents {
            let settle = a.settling_time.map_or("never".to_string(), |t| format!("{t:.3} s"));
            println!("  agent {}: {:>5} triggers, settles {settle}", a.agent + 1, a.trigger_count);
        }
    }
    Ok(())
}
