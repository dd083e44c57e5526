use netshare::domain::{EnergyParams, LoadModel, NetworkModel, OperatorConfig, RadioParams, UserClassSpec};
use netshare::strategies::{compare_strategies, SolverOptions};

fn asymmetric() -> NetworkModel {
    let op = |id: &str, bs: f64, users: f64| OperatorConfig {
        id: id.into(),
        deployed_intensity: bs,
        user_intensity: users,
        active_fraction: 1.0,
        energy: EnergyParams::hlp(1000.0, 20.0),
        bandwidth_hz: None,
    };
    NetworkModel {
        colocation_fraction: 0.0,
        load_model: LoadModel::PerOperatorLiteral,
        normalize_serving_probs: false,
        radio: RadioParams::default(),
        operators: vec![op("a", 3e-6, 3e-5), op("b", 2e-6, 1.5e-5)],
        classes: UserClassSpec::from_rates(&[("ref", 1e6, 1.0)]).unwrap(),
    }
}

#[test]
fn model_survives_a_toml_round_trip() {
    let m = asymmetric();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.toml");
    std::fs::write(&path, m.to_toml_string().unwrap()).unwrap();
    assert_eq!(NetworkModel::load(&path).unwrap(), m);
}

#[test]
fn full_sharing_never_costs_more_than_a_feasible_switchoff() {
    let c = compare_strategies(&asymmetric(), &SolverOptions::default()).unwrap();
    let full = c.full_ns.energy_w_per_m2.expect("full sharing feasible");
    let baseline = c.no_sharing.total.energy_w_per_m2.expect("baseline feasible");
    assert!(full < baseline);
    if let Some(best) = c.best_switchoff() {
        assert!(full <= best.energy_w_per_m2.unwrap() * (1.0 + 1e-9));
    }
    // Every feasible point stays in the unit box with utilization at most one.
    for r in c.results() {
        if r.feasible {
            assert!(r.beta.iter().all(|b| (0.0..=1.0).contains(b)), "{}: {:?}", r.label, r.beta);
            assert!(r.utilization.iter().all(|u| *u <= 1.0 + 1e-6), "{}: {:?}", r.label, r.utilization);
        }
    }
}
