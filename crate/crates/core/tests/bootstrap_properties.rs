use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use segstat_core::ci::{bootstrap_distribution, distribution_quantile};
use segstat_core::stats;
use segstat_core::{bootstrap_ci, exhaustive_bootstrap, parametric_ci, BootstrapConfig, ConfidenceLevel, MetricSeries};

const L95: ConfidenceLevel = ConfidenceLevel::NINETY_FIVE;

fn series(values: Vec<f64>) -> MetricSeries {
    MetricSeries::from_values(values).unwrap()
}

#[test]
fn monte_carlo_agrees_with_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m = 15_000;
    for case in 0..20 {
        let n = rng.random_range(1..=5);
        let s = series((0..n).map(|_| rng.random_range(0.0..100.0)).collect());
        let exact = exhaustive_bootstrap(&s, L95).unwrap();
        let atoms = bootstrap_distribution(&s).unwrap();
        let mc = bootstrap_ci(&s, &BootstrapConfig { m, level: L95, seed: case, keep_means: false }).unwrap();

        // Delta-method standard error of a sample standard deviation.
        let total: f64 = atoms.iter().map(|a| a.1 as f64).sum();
        let mu4 = atoms.iter().map(|&(v, c)| c as f64 * (v - exact.mu_star).powi(4)).sum::<f64>() / total;
        let var = exact.sem_star.powi(2);
        let se_sem = if var > 0.0 { ((mu4 - var * var) / m as f64).sqrt() / (2.0 * exact.sem_star) } else { 0.0 };
        assert!((mc.sem_star - exact.sem_star).abs() <= 3.0 * se_sem, "case {case}");

        for (p, got) in [(0.025, mc.bounds.0), (0.975, mc.bounds.1)] {
            let delta = 3.0 * (p * (1.0 - p) / m as f64).sqrt();
            let lo = distribution_quantile(&atoms, (p - delta).max(0.0));
            let hi = distribution_quantile(&atoms, (p + delta).min(1.0));
            // Resample means are summed in draw order, atoms per multiset: allow rounding.
            let slack = 1e-9 * hi.abs().max(1.0);
            assert!(lo - slack <= got && got <= hi + slack, "case {case} p={p}: {got} not in [{lo}, {hi}]");
        }
    }
}

#[test]
fn sem_star_matches_parametric_sem() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for seed in 0..5 {
        let n = rng.random_range(20..200);
        let s = series((0..n).map(|_| rng.random_range(0.0..10.0f64).powi(2)).collect());
        let b = bootstrap_ci(&s, &BootstrapConfig { m: 15_000, level: L95, seed, keep_means: false }).unwrap();
        let p = parametric_ci(&s, L95);
        assert!((b.sem_star - p.sem).abs() / p.sem < 0.03);
    }
}

#[test]
fn sem_star_dispersion_shrinks_with_m() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let s = series((0..60).map(|_| rng.random_range(50.0..100.0)).collect());
    let spread = |m: usize| {
        let sems: Vec<f64> = (0..20)
            .map(|seed| bootstrap_ci(&s, &BootstrapConfig { m, level: L95, seed, keep_means: false }).unwrap().sem_star)
            .collect();
        stats::pop_std(&sems, stats::mean(&sems))
    };
    let (a, b, c) = (spread(500), spread(2000), spread(8000));
    // Quadrupling m should roughly halve the spread.
    for ratio in [a / b, b / c] {
        assert!((1.3..3.0).contains(&ratio), "ratio {ratio}");
    }
}

#[test]
fn gaussian_widths_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let normal = Normal::new(80.0, 12.0).unwrap();
    let mut ratios = Vec::new();
    for trial in 0..100 {
        let n = 50 + trial % 60;
        let s = series((0..n).map(|_| normal.sample(&mut rng)).collect());
        let b = bootstrap_ci(&s, &BootstrapConfig { m: 2000, level: L95, seed: trial as u64, keep_means: false }).unwrap();
        ratios.push(b.width / parametric_ci(&s, L95).width);
    }
    let median = stats::median(&ratios).unwrap();
    assert!((median - 1.0).abs() < 0.05, "median ratio {median}");
}

#[test]
fn seed_determinism() {
    let s = series((0..33).map(|i| (i * i % 13) as f64).collect());
    let cfg = BootstrapConfig { m: 1000, level: L95, seed: 4, keep_means: true };
    assert_eq!(bootstrap_ci(&s, &cfg).unwrap(), bootstrap_ci(&s, &cfg).unwrap());
    let other = BootstrapConfig { seed: 5, ..cfg };
    assert_ne!(bootstrap_ci(&s, &cfg).unwrap(), bootstrap_ci(&s, &other).unwrap());
}

proptest! {
    #[test]
    fn scale_and_shift(values in prop::collection::vec(-50.0f64..50.0, 2..40), c in 0.1f64..20.0, shift in -100.0f64..100.0) {
        let base = parametric_ci(&series(values.clone()), L95);
        let scaled = parametric_ci(&series(values.iter().map(|v| v * c).collect()), L95);
        let shifted = parametric_ci(&series(values.iter().map(|v| v + shift).collect()), L95);
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()));
        prop_assert!(close(scaled.sem, base.sem * c));
        prop_assert!(close(scaled.width, base.width * c));
        if let (Some(a), Some(b)) = (base.nu, scaled.nu) {
            prop_assert!(close(a, b));
        }
        prop_assert!(close(shifted.mu, base.mu + shift));
        prop_assert!(close(shifted.sem, base.sem));
    }

    #[test]
    fn report_invariants(values in prop::collection::vec(0.0f64..100.0, 1..30), seed in any::<u64>()) {
        let s = series(values);
        let p = parametric_ci(&s, L95);
        prop_assert_eq!(p.ci.0, -p.ci.1);
        prop_assert!((p.width - 2.0 * p.z * p.sem).abs() <= 1e-12 * (1.0 + p.width));
        let b = bootstrap_ci(&s, &BootstrapConfig { m: 200, level: L95, seed, keep_means: false }).unwrap();
        prop_assert!(b.bounds.0 <= b.bounds.1);
        prop_assert!(b.sem_star >= 0.0);
    }
}
