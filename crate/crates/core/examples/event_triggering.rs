//! Trigger threshold decay and the inter-event times of a live run.
//!
//! ```text
//! cargo run --release --example event_triggering
//! ```

use elrc::analysis::trigger_statistics;
use elrc::protocol::{trigger_threshold, Gains};
use elrc::scenario::{bundled, Overrides, ScenarioFile};
use elrc::Simulation;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = Gains::reference(1);
    for t in [0.0, 1.0, 2.0, 5.0, 10.0] {
        println!("threshold at t = {t:>4}: {:.3e}", trigger_threshold(t, 0.0, &g));
    }

    let mut file = ScenarioFile::parse(bundled("paper_scenario_C").expect("bundled scenario"))?;
    Overrides { horizon: Some(3.0), ..Default::default() }.apply(&mut file);
    let mut sim = Simulation::new(file.build(None)?)?;
    while !sim.is_finished() {
        sim.step()?;
    }
    let out = sim.finish();
    for i in out.normal.iter() {
        let stats = trigger_statistics(&out.trigger_times(i))?;
        let first = out.triggers[i].first().map_or(f64::NAN, |e| e.t);
        println!(
            "agent {}: {} triggers, first at {first:.4} s, shortest gap {:.4} s",
            i + 1,
            stats.count,
            stats.min_interval.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
