mod common;

use std::f64::consts::PI;

use membrane::{BoundaryLoad, SolverConfig};
use proptest::prelude::*;

#[test]
fn cosine_load_matches_bessel_value() {
    let space = common::disk_space(64, 1);
    let load = BoundaryLoad::from_angle_fn(space.mesh(), f64::cos);
    let sol = space.solve_state(&load, &SolverConfig::default()).unwrap();
    let j = space.cost_j(&load, &sol.nodal_u).unwrap();
    let exact = common::cosine_cost();
    assert!((j - exact).abs() < 1e-2 * exact, "{j} vs {exact}");
    // P1 elements underestimate the compliance.
    assert!(j < exact);
}

#[test]
fn energy_identity_on_the_square() {
    let space = common::square_space(32, 1);
    let load = BoundaryLoad::from_fn(space.mesh(), |s| 0.5 + (2.0 * PI * s / 4.0).sin().powi(2));
    for p in [1.5, 3.0, 4.0] {
        let sol = space.solve_state(&load, &SolverConfig::with_p(p)).unwrap();
        assert!(sol.converged);
        let j = space.cost_j(&load, &sol.nodal_u).unwrap();
        let i = space.functional_i(&load, &sol.nodal_u, p).unwrap();
        assert!((i - j).abs() <= 1e-3 * j, "p = {p}: I = {i}, J = {j}");
    }
}

#[test]
fn nonnegative_load_gives_nonnegative_state() {
    let space = common::disk_space(32, 1);
    let load = BoundaryLoad::from_angle_fn(space.mesh(), |t| (t.cos()).max(0.0));
    for p in [1.5, 2.0, 3.0] {
        let sol = space.solve_state(&load, &SolverConfig::with_p(p)).unwrap();
        assert!(sol.nodal_u.iter().all(|&u| u >= -1e-10), "p = {p}");
    }
}

#[test]
fn newton_history_decreases_energy_per_stage() {
    let space = common::disk_space(32, 1);
    let load = BoundaryLoad::constant(space.mesh(), 1.0);
    let sol = space.solve_state(&load, &SolverConfig::with_p(3.0)).unwrap();
    let mut last_eps = f64::INFINITY;
    let mut last_energy = f64::INFINITY;
    for rec in &sol.history {
        if rec.epsilon != last_eps {
            last_eps = rec.epsilon;
        } else {
            assert!(rec.energy <= last_energy + 1e-12 * last_energy.abs());
        }
        last_energy = rec.energy;
    }
    assert_eq!(sol.epsilon_final, 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn homogeneity(p in 1.4..3.5f64, lambda in 0.3..3.0f64, phase in 0.0..6.3f64) {
        let space = common::disk_space(32, 0);
        let load = BoundaryLoad::from_angle_fn(space.mesh(), |t| 1.0 + 0.7 * (t + phase).cos());
        let config = SolverConfig::with_p(p);
        let j = |l: &BoundaryLoad| {
            let sol = space.solve_state(l, &config).unwrap();
            space.cost_j(l, &sol.nodal_u).unwrap()
        };
        let j1 = j(&load);
        let jl = j(&load.scaled(lambda).unwrap());
        let predicted = lambda.powf(p / (p - 1.0)) * j1;
        prop_assert!((jl - predicted).abs() <= 1e-6 * jl, "{} vs {}", jl, predicted);
    }

    #[test]
    fn state_is_a_maximizer_of_i(p in 1.5..3.0f64, seed in 0u64..1000) {
        use rand::{Rng, SeedableRng};
        let space = common::disk_space(32, 0);
        let load = BoundaryLoad::from_angle_fn(space.mesh(), |t| 1.0 + 0.5 * (2.0 * t).sin());
        let sol = space.solve_state(&load, &SolverConfig::with_p(p)).unwrap();
        let i = space.functional_i(&load, &sol.nodal_u, p).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f64> = sol.nodal_u.iter().map(|u| u + 1e-3 * rng.random_range(-1.0..1.0)).collect();
        prop_assert!(space.functional_i(&load, &v, p).unwrap() <= i + 1e-8);
    }
}
