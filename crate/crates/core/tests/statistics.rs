use bitrl::agent::{select_action, QNetwork, SumTree};
use bitrl::home::{
    initial_state, step, HomeConfig, LightAction, OccupantConfig, Preferred, SimRng, ZoneConfig,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Upper 1% point of chi-square with `df` degrees of freedom (Wilson–Hilferty).
fn chi2_upper_1pct(df: f64) -> f64 {
    let z = 2.326_348;
    let k = 2.0 / (9.0 * df);
    df * (1.0 - k + z * k.sqrt()).powi(3)
}

#[test]
fn full_exploration_is_uniform() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let net = QNetwork::new(8, 37, 1, &mut rng).unwrap();
    let state = vec![0.3; 8];
    let per_action = 400;
    let mut counts = vec![0usize; 37];
    for _ in 0..37 * per_action {
        counts[select_action(&net, &state, 1.0, &mut rng).unwrap().0] += 1;
    }
    let expected = per_action as f64;
    let chi: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    assert!(chi < chi2_upper_1pct(36.0), "chi-square {chi}");
}

#[test]
fn greedy_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let net = QNetwork::new(8, 11, 2, &mut rng).unwrap();
    let s = vec![0.5; 8];
    let q = net.q_values(&s).unwrap();
    let best = (0..q.len()).fold(0, |b, i| if q[i] > q[b] { i } else { b });
    for _ in 0..100 {
        assert_eq!(select_action(&net, &s, 0.0, &mut rng).unwrap().0, best);
    }
}

fn one_occupant_home(transitions: Vec<Vec<f64>>) -> HomeConfig {
    let zone = |name: &str| ZoneConfig {
        name: name.into(),
        p_max_w: 10.0,
        preferred: Preferred {
            idle: 50,
            active: 50,
        },
        synonyms: vec![],
    };
    HomeConfig {
        name: "chain".into(),
        description: String::new(),
        zones: vec![zone("a"), zone("b")],
        occupants: vec![OccupantConfig {
            name: "o".into(),
            initial: "away".into(),
            schedule: HomeConfig::uniform_schedule(transitions),
        }],
        override_threshold: 100,
        override_probability: 0.0,
        weather: Default::default(),
        activity_hours: vec![],
        scenes: Default::default(),
        start_day_of_year: Some(100),
    }
}

// Left eigenvector of the transition matrix by power iteration.
fn stationary(p: &[Vec<f64>]) -> Vec<f64> {
    let n = p.len();
    let mut pi = vec![1.0 / n as f64; n];
    for _ in 0..10_000 {
        let next: Vec<f64> = (0..n)
            .map(|j| (0..n).map(|i| pi[i] * p[i][j]).sum())
            .collect();
        let delta: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        pi = next;
        if delta < 1e-14 {
            break;
        }
    }
    pi
}

#[test]
fn occupancy_visits_match_stationary_distribution() {
    let p = vec![
        vec![0.90, 0.07, 0.03],
        vec![0.10, 0.80, 0.10],
        vec![0.05, 0.25, 0.70],
    ];
    let cfg = one_occupant_home(p.clone());
    let pi = stationary(&p);
    let mut rng = SimRng::new(77);
    let mut state = initial_state(&cfg, &mut rng);
    let steps = 200_000;
    let mut visits = [0usize; 3];
    for _ in 0..steps {
        state = step(&state, LightAction::NoOp, &cfg, &mut rng).unwrap().0;
        visits[state.occupant_locations[0]] += 1;
    }
    for (loc, (&v, &target)) in visits.iter().zip(&pi).enumerate() {
        let freq = v as f64 / steps as f64;
        assert!(
            (freq - target).abs() < 0.01,
            "location {loc}: {freq} vs {target}"
        );
    }
    let occupied_a = visits[1] as f64 / steps as f64;
    assert!((occupied_a - pi[1]).abs() < 0.01);
}

proptest! {
    #[test]
    fn sum_tree_root_is_leaf_sum(ops in prop::collection::vec((0usize..64, 0.0f64..1e3), 1..400)) {
        let mut tree = SumTree::new(64);
        let mut leaves = [0.0f64; 64];
        for (i, p) in ops {
            tree.set(i, p);
            leaves[i] = p;
        }
        let sum: f64 = leaves.iter().sum();
        prop_assert!((tree.total() - sum).abs() <= 1e-9 * sum.max(1.0));
    }

    #[test]
    fn sum_tree_find_lands_in_interval(
        priorities in prop::collection::vec(0.0f64..10.0, 1..50),
        u in 0.0f64..1.0,
    ) {
        let mut tree = SumTree::new(priorities.len());
        for (i, &p) in priorities.iter().enumerate() {
            tree.set(i, p);
        }
        prop_assume!(tree.total() > 0.0);
        let mass = u * tree.total();
        let i = tree.find(mass);
        prop_assert!(i < priorities.len());
        prop_assert!(priorities[i] > 0.0);
        let before: f64 = priorities[..i].iter().sum();
        prop_assert!(before <= mass + 1e-9);
        prop_assert!(mass <= before + priorities[i] + 1e-9);
    }
}
