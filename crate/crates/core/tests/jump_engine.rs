use std::sync::Arc;

use coagfrag::jump::*;
use coagfrag::rng::Seed;
use coagfrag::stats::{mean_estimate, proportion};
use proptest::prelude::*;

fn birth(power: f64) -> PureBirth {
    pure_birth_law(move |k| (k as f64).powf(power))
}

fn doubling() -> OneDim {
    one_dim_law(|x| x, OneDimStep::Deterministic(Arc::new(|x| 2.0 * x)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn identical_inputs_give_identical_trajectories(base in any::<u64>(), rep in 0u64..1000, jumps in 1u64..200) {
        let law = one_dim_law(|x| x.sqrt(), OneDimStep::Random(Arc::new(|x, rng| uniform_between(rng, x, 2.0 * x))));
        let stop = StopRule::new(jumps, f64::INFINITY, f64::INFINITY).unwrap();
        let a = simulate_chain(&law, &1.0, Seed::new(base, rep), &stop).unwrap();
        let b = simulate_chain(&law, &1.0, Seed::new(base, rep), &stop).unwrap();
        prop_assert_eq!(a.states.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), b.states.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        prop_assert_eq!(a.jump_times.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), b.jump_times.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        prop_assert_eq!(a.rates, b.rates);
    }

    #[test]
    fn jump_times_are_rebuilt_from_waits_rates_and_stream(base in any::<u64>(), rep in 0u64..1000, power in 0.0f64..2.5) {
        let stop = StopRule::new(300, f64::INFINITY, 1e12).unwrap();
        let seed = Seed::new(base, rep);
        let traj = simulate_chain(&birth(power), &1, seed, &stop).unwrap();
        let holding = seed.streams().holding();
        let mut t = 0.0;
        for l in 0..traj.jumps() {
            let wait = holding.exponential_at(l as u64) / traj.rates[l];
            prop_assert_eq!(wait.to_bits(), traj.waits[l].to_bits());
            t += wait;
            prop_assert_eq!(t.to_bits(), traj.jump_times[l + 1].to_bits());
        }
    }

    #[test]
    fn inverse_rate_partial_sums_are_monotone_and_bounded(base in any::<u64>(), power in 0.0f64..3.0) {
        let stop = StopRule::new(500, f64::INFINITY, 1e12).unwrap();
        let traj = simulate_chain(&birth(power), &1, Seed::new(base, 0), &stop).unwrap();
        let sums = &traj.inv_rate_partial_sums;
        prop_assert!(sums.windows(2).all(|w| w[1] >= w[0]));
        let min_rate = traj.rates.iter().copied().fold(f64::INFINITY, f64::min);
        for (j, s) in sums.iter().enumerate() {
            prop_assert!(*s <= j as f64 / min_rate * (1.0 + 1e-12));
        }
    }
}

#[test]
fn monte_carlo_drift_agrees_with_exact_drift() {
    // Two-point successor law: ξ → 2ξ or ξ + 1 with equal probability.
    let law = one_dim_law(
        |x| 1.0 + x,
        OneDimStep::Random(Arc::new(|x, rng| if coagfrag::rng::uniform(rng) < 0.5 { 2.0 * x } else { x + 1.0 })),
    );
    let eta = inverse_power_eta(1.0);
    let mut hits = 0;
    let reps = 400;
    for r in 0..reps {
        let x = 1.0 + r as f64 * 0.1;
        let exact = (1.0 + x) * (0.5 * (1.0 / x - 1.0 / (2.0 * x)) + 0.5 * (1.0 / x - 1.0 / (x + 1.0)));
        let mc = drift_monte_carlo(&law, &x, &eta, 500, Seed::new(7, r), &[]).unwrap();
        if (mc.estimate - exact).abs() <= 4.0 * mc.std_error {
            hits += 1;
        }
    }
    assert!(hits as f64 >= 0.99 * reps as f64, "{hits} of {reps}");
}

#[test]
fn exact_atoms_match_monte_carlo_on_doubling() {
    let law = doubling();
    let eta = inverse_power_eta(1.0);
    for x in [1.0, 3.0, 10.0] {
        let exact = drift(&law, &x, &eta, 0, Seed::new(1, 0), &[]).unwrap();
        assert!(exact.exact);
        assert_eq!(exact.std_error, 0.0);
        let mc = drift_monte_carlo(&law, &x, &eta, 100, Seed::new(1, 0), &[]).unwrap();
        assert!((mc.estimate - exact.estimate).abs() < 1e-12);
        assert!((exact.estimate - 0.5).abs() < 1e-12);
    }
}

#[test]
fn pure_birth_quadratic_mean_explosion_time() {
    // λ(k) = k², E Σ T_k / k² = π²/6.
    let law = birth(2.0);
    let stop = StopRule::new(1_000_000, f64::INFINITY, 1e8).unwrap();
    let taus: Vec<f64> = (0..1000)
        .map(|r| {
            let traj = simulate_chain_observed(&law, &1, Seed::new(11, r), &stop, Recording::Endpoints, |_| {}).unwrap();
            let v = classify(&traj, &stop, DEFAULT_TAIL_WINDOW, DEFAULT_TAIL_TOL);
            match v.verdict {
                Verdict::Exploded { tau_estimate, tau_lower } => {
                    assert!(tau_lower <= tau_estimate);
                    tau_estimate
                }
                other => panic!("{other:?}"),
            }
        })
        .collect();
    let est = mean_estimate(&taus);
    let oracle = std::f64::consts::PI.powi(2) / 6.0;
    assert!(est.within(oracle, 3.0), "{est:?} vs {oracle}");
}

#[test]
fn classification_of_pure_birth_families() {
    let reps = 300;
    let stop = StopRule::new(1_000_000, f64::INFINITY, 1e8).unwrap();
    let quad = birth(2.0);
    let exploded = (0..reps)
        .filter(|&r| {
            let traj = simulate_chain_observed(&quad, &1, Seed::new(12, r), &stop, Recording::Endpoints, |_| {}).unwrap();
            classify(&traj, &stop, DEFAULT_TAIL_WINDOW, DEFAULT_TAIL_TOL).verdict.is_exploded()
        })
        .count();
    assert!(proportion(exploded, reps as usize).fraction >= 0.99);

    let linear = birth(1.0);
    let stop = StopRule::new(1_000_000, 10.0, 1e12).unwrap();
    let survived = (0..reps)
        .filter(|&r| {
            let traj = simulate_chain_observed(&linear, &1, Seed::new(13, r), &stop, Recording::Endpoints, |_| {}).unwrap();
            matches!(classify(&traj, &stop, DEFAULT_TAIL_WINDOW, DEFAULT_TAIL_TOL).verdict, Verdict::Survived { .. })
        })
        .count();
    assert!(proportion(survived, reps as usize).fraction >= 0.99);
}

#[test]
fn martingale_increments_on_random_successor_law() {
    let law = one_dim_law(|x| x, OneDimStep::Random(Arc::new(|x, rng| uniform_between(rng, x, 2.0 * x))));
    let eta = inverse_power_eta(1.0);
    let stop = StopRule::new(20, f64::INFINITY, f64::INFINITY).unwrap();
    let paths: Vec<Vec<f64>> = (0..1000)
        .map(|r| {
            let traj = simulate_chain(&law, &1.0, Seed::new(14, r), &stop).unwrap();
            martingale_statistic(&traj, &law, &eta, 200, Seed::new(15, r)).unwrap()
        })
        .collect();
    for step in 0..20 {
        let inc: Vec<f64> = paths.iter().map(|w| w[step + 1] - w[step]).collect();
        let est = mean_estimate(&inc);
        assert!(est.mean.abs() <= 4.0 * est.std_error, "step {step}: {est:?}");
    }
}

#[test]
fn absorbed_runs_report_zero_terminal_rate() {
    let law = one_dim_law(|x| if x >= 8.0 { 0.0 } else { 1.0 }, OneDimStep::Deterministic(Arc::new(|x| 2.0 * x)));
    let stop = StopRule::new(100, f64::INFINITY, f64::INFINITY).unwrap();
    let traj = simulate_chain(&law, &1.0, Seed::new(16, 0), &stop).unwrap();
    let v = classify(&traj, &stop, DEFAULT_TAIL_WINDOW, DEFAULT_TAIL_TOL);
    assert!(matches!(v.verdict, Verdict::Absorbed { .. }));
    assert_eq!(v.terminal_rate, 0.0);
    assert_eq!(traj.jumps(), 3);
}
