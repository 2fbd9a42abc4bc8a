use std::f64::consts::PI;

use elrc::adversary::ByzantineSpec;
use elrc::engine::{ObserverCoordinates, Role};
use elrc::graph::{is_f_local_attack, RobustnessOracle, VertexSet};
use elrc::scenario::{bundled, Overrides, ScenarioFile};
use elrc::{run_scenario, Scenario, Simulation};

fn load(name: &str, overrides: Overrides) -> Scenario {
    let mut file = ScenarioFile::parse(bundled(name).unwrap()).unwrap();
    overrides.apply(&mut file);
    file.build(None).unwrap()
}

fn short(horizon: f64) -> Overrides {
    Overrides { horizon: Some(horizon), ..Default::default() }
}

const ETA0: [[f64; 2]; 8] =
    [[-1.5, -0.5], [1.0, 0.5], [0.0, 0.0], [0.5, -2.0], [2.0, -1.0], [1.5, -0.5], [-1.5, -1.0], [-2.0, -2.0]];

#[test]
fn bundled_scenarios_carry_the_published_constants() {
    for name in ["paper_scenario_A", "paper_scenario_B", "paper_scenario_C"] {
        let sc = load(name, Overrides::default());
        assert_eq!(sc.observer.matrix().as_slice(), &[0.0, 6.0, -1.5, 0.0], "{name}: S column-major");
        let g = sc.gains;
        assert_eq!((g.mu1, g.mu2, g.k, g.adaptation), (5.9, 2.0, 80.0, 0.6), "{name}");
        assert_eq!((g.alpha1, g.alpha2, g.alpha3), (8.0, 3.0, 4.0), "{name}");
        assert_eq!((sc.sim.t0, sc.sim.horizon), (0.0, 10.0));
        for (i, a) in sc.agents.iter().enumerate() {
            let idx = (i + 1) as f64;
            assert_eq!(a.arm.l().as_slice(), &[0.64, 1.10, 0.08, 0.64, 0.32]);
            assert_eq!(a.arm.grav(), 9.8);
            assert!((a.q0[0] - 0.1 * PI * (idx - 1.0)).abs() < 1e-15);
            assert!((a.q0[1] + 0.1 * PI * (idx - 11.0)).abs() < 1e-15);
            assert_eq!(a.dq0, [0.0, 0.0]);
            assert_eq!(a.eta0.as_slice(), &ETA0[i]);
            assert_eq!((a.k, a.adaptation), (80.0, 0.6));
        }
    }
    assert_eq!(load("paper_scenario_A", Overrides::default()).gains.f, 0);
    assert_eq!(load("paper_scenario_B", Overrides::default()).gains.f, 0);
    assert_eq!(load("paper_scenario_C", Overrides::default()).gains.f, 1);
}

#[test]
fn bundled_topology_is_three_robust_and_the_attack_one_local() {
    let sc = load("paper_scenario_C", Overrides::default());
    assert!(RobustnessOracle::default().is_r_robust(&sc.graph, 3).unwrap());
    assert_eq!(sc.byzantine_set(), VertexSet::from([0, 4]));
    assert!(is_f_local_attack(&sc.graph, &sc.byzantine_set(), 1).unwrap());
    assert_eq!(sc.graph.out_neighbors(0), vec![1, 2, 3]);
    assert!(sc.validate().unwrap().is_empty());
    assert_eq!(sc.graph, load("paper_scenario_B", Overrides::default()).graph);
}

#[test]
fn attack_free_scenario_uses_the_generator() {
    let sc = load("paper_scenario_A", Overrides::default());
    assert_eq!(sc.graph, elrc::graph::generate_r_robust_digraph(8, 3, sc.sim.seed).unwrap());
    assert!(sc.byzantine_set().is_empty());
}

#[test]
fn null_attack_is_indistinguishable_from_a_normal_agent() {
    let honest = load("paper_scenario_A", short(1.0));
    let mut flagged = honest.clone();
    flagged.agents[4].role = Role::Byzantine(ByzantineSpec::null_attack(4, &flagged.graph));
    let a = run_scenario(honest).unwrap();
    let b = run_scenario(flagged).unwrap();
    assert_eq!(a.frames, b.frames);
    assert_eq!(a.messages, b.messages);
    for i in 0..8 {
        assert_eq!(a.triggers[i], b.triggers[i]);
    }
}

#[test]
fn silenced_links_leave_storage_at_the_initial_exchange() {
    let sc = load("paper_scenario_C", short(0.5));
    let t0 = sc.sim.t0;
    let mut sim = Simulation::new(sc).unwrap();
    while !sim.is_finished() {
        sim.step().unwrap();
    }
    // Agent 1 stops talking to agent 4; agent 5 stops talking to everyone.
    assert_eq!(sim.neighbor_store(3).record(0).unwrap().t_accept, t0);
    for receiver in [0, 5] {
        assert_eq!(sim.neighbor_store(receiver).record(4).unwrap().t_accept, t0);
    }
    assert!(sim.neighbor_store(2).record(0).unwrap().t_accept > t0);
    let out = sim.finish();
    assert!(!out.messages.iter().any(|m| m.sender == 4));
    assert!(!out.messages.iter().any(|m| m.sender == 0 && m.receiver == 3));
}

#[test]
fn periodic_broadcasts_respect_the_dwell_filter() {
    let out = run_scenario(load("paper_scenario_C", short(0.3))).unwrap();
    for receiver in 0..8 {
        let accepted: Vec<f64> = out
            .messages
            .iter()
            .filter(|m| m.sender == 0 && m.receiver == receiver && m.outcome == elrc::protocol::AcceptOutcome::Accepted)
            .map(|m| m.t)
            .collect();
        for w in accepted.windows(2) {
            assert!(w[1] - w[0] >= 1e-3 - 1e-9);
        }
    }
}

#[test]
fn coordinate_forms_agree_on_a_prefix() {
    let w_form = load("paper_scenario_C", short(0.3));
    let mut eta_form = w_form.clone();
    eta_form.sim.coordinates = ObserverCoordinates::Eta;
    let a = run_scenario(w_form).unwrap();
    let b = run_scenario(eta_form).unwrap();
    let worst = a
        .frames
        .iter()
        .zip(&b.frames)
        .flat_map(|(fa, fb)| fa.agents.iter().zip(&fb.agents))
        .map(|(x, y)| x.eta.iter().zip(&y.eta).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    assert!(worst < 1e-6, "{worst}");
}

#[test]
fn runs_are_deterministic() {
    let a = run_scenario(load("paper_scenario_C", short(0.5))).unwrap();
    let b = run_scenario(load("paper_scenario_C", short(0.5))).unwrap();
    assert_eq!(elrc::output::trajectory_csv(&a), elrc::output::trajectory_csv(&b));
    assert_eq!(elrc::output::trigger_csv(&a), elrc::output::trigger_csv(&b));
}
