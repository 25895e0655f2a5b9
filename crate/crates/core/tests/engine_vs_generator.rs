use proptest::prelude::*;
use sitsim::kmc::{generator_matrix, Event, Mechanisms, Simulator, DEFAULT_STATE_CAP};
use sitsim::{BoundaryData, Configuration, Lattice, ModelParams};

fn params() -> ModelParams {
    ModelParams::new(1.0, 0.75, 0.25, 1.0, 0.5, 1.0).unwrap()
}

fn boundary() -> BoundaryData {
    BoundaryData::faces([0.3, 0.2, 0.1], [0.1, 0.4, 0.05])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // The simulator's total rate is the generator's exit rate, and every
    // realised jump has a positive generator entry.
    #[test]
    fn jumps_follow_the_generator(code in 0usize..1024, seed in any::<u64>()) {
        let lat = Lattice::new(2, 1).unwrap();
        let (p, b) = (params(), boundary());
        let q = generator_matrix(&lat, &p, &b, Mechanisms::ALL, DEFAULT_STATE_CAP).unwrap();
        let start = Configuration::from_code(code, lat.site_count());
        let mut sim = Simulator::new(&lat, &p, &b, start.clone(), seed).unwrap();
        let exit = -q.diagonal(code);
        prop_assert!((sim.total_rate() - exit).abs() <= 1e-12 * exit.max(1.0));
        let (_, event) = sim.step().unwrap();
        let after = sim.config().code();
        prop_assert!(q.rate(code, after) > 0.0, "{event:?} from {code} to {after}");
        if let Event::Swap { a, b } = event {
            prop_assert_ne!(start.get(a), start.get(b));
        }
    }
}

// Empirical jump frequencies out of one state match the generator row.
#[test]
fn jump_frequencies_match_rates() {
    let lat = Lattice::new(1, 1).unwrap();
    let (p, b) = (params(), boundary());
    let q = generator_matrix(&lat, &p, &b, Mechanisms::ALL, DEFAULT_STATE_CAP).unwrap();
    let start = Configuration::from_states(vec![1, 2, 0]).unwrap();
    let code = start.code();
    let exit = -q.diagonal(code);
    let trials = 40_000;
    let mut counts = std::collections::HashMap::new();
    let mut waited = 0.0;
    for seed in 0..trials {
        let mut sim = Simulator::new(&lat, &p, &b, start.clone(), seed).unwrap();
        let (t, _) = sim.step().unwrap();
        waited += t;
        *counts.entry(sim.config().code()).or_insert(0usize) += 1;
    }
    let mean_wait = waited / trials as f64;
    assert!(
        (mean_wait * exit - 1.0).abs() < 0.03,
        "mean wait {mean_wait}, exit rate {exit}"
    );
    for (&to, &c) in &counts {
        let want = q.rate(code, to) / exit;
        let got = c as f64 / trials as f64;
        let se = (want * (1.0 - want) / trials as f64).sqrt();
        assert!(
            (got - want).abs() < 4.0 * se + 1e-9,
            "to {to}: {got} vs {want}"
        );
    }
}
