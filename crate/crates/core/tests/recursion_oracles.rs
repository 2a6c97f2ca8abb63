mod common;

use ccl_core::recursion::{factor, LocalSpins};
use ccl_core::{
    brute_force_log_partition, enumerate_blocks, exact_sample, log_block_normalizer,
    log_partition, Dims, Lattice, ModelParams, RecursionPlan,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn recursion_matches_enumeration_for_all_small_lattices() {
    for m in 1..=16 {
        for n in 1..=16 {
            if m * n > 16 {
                continue;
            }
            for t0 in [0.0, 0.3] {
                for t1 in [-0.8, -0.4, 0.0, 0.4, 0.8] {
                    let th = ModelParams { theta0: t0, theta1: t1 };
                    let a = log_partition(th, m, n).unwrap();
                    let b = common::enum_log_z(th, m, n);
                    assert!(rel(a, b) < 1e-10, "{m}x{n} {th:?}: {a} vs {b}");
                }
            }
        }
    }
}

#[test]
fn brute_force_agrees_with_recursion() {
    for (m, n) in [(1, 2), (2, 2), (3, 3), (4, 4)] {
        for t1 in [-0.8, 0.0, 0.4, 0.8] {
            let th = ModelParams::ising(t1);
            let a = brute_force_log_partition(th, m, n).unwrap();
            let b = log_partition(th, m, n).unwrap();
            assert!(rel(a, b) < 1e-12, "{m}x{n} {t1}");
        }
    }
}

#[test]
fn spin_flip_and_transpose_symmetry() {
    for (m, n) in [(3, 7), (5, 4), (6, 11)] {
        for (t0, t1) in [(0.3, 0.4), (-1.1, 0.9), (0.7, -0.5)] {
            let a = log_partition(ModelParams { theta0: t0, theta1: t1 }, m, n).unwrap();
            let b = log_partition(ModelParams { theta0: -t0, theta1: t1 }, m, n).unwrap();
            let c = log_partition(ModelParams { theta0: t0, theta1: t1 }, n, m).unwrap();
            assert!(rel(a, b) < 1e-12);
            assert!(rel(a, c) < 1e-12);
        }
    }
}

#[test]
fn log_partition_is_convex_along_lines() {
    let h = 1e-3;
    for d in [(1.0, 0.0), (0.0, 1.0), (0.6, -0.8)] {
        for t in [-0.5, 0.0, 0.2, 0.44, 0.9] {
            let g = |s: f64| {
                log_partition(
                    ModelParams { theta0: 0.1 + s * d.0, theta1: t + s * d.1 },
                    6,
                    8,
                )
                .unwrap()
            };
            let second = g(h) - 2.0 * g(0.0) + g(-h);
            assert!(second >= -1e-9, "direction {d:?} at {t}: {second}");
        }
    }
}

#[test]
fn derivative_equals_mean_interaction_statistic() {
    let h = 1e-4;
    for (m, n) in [(2, 3), (3, 4), (2, 6)] {
        for t1 in [-0.4, 0.2, 0.4, 0.8] {
            let th = ModelParams { theta0: 0.15, theta1: t1 };
            let fd = (log_partition(ModelParams { theta1: t1 + h, ..th }, m, n).unwrap()
                - log_partition(ModelParams { theta1: t1 - h, ..th }, m, n).unwrap())
                / (2.0 * h);
            let e = common::enum_mean_s1(th, m, n);
            assert!((fd - e).abs() < 1e-6, "{m}x{n} {t1}: {fd} vs {e}");
        }
    }
}

#[test]
fn factor_product_reproduces_unnormalized_density() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let th = ModelParams { theta0: -0.3, theta1: 0.55 };
    for _ in 0..50 {
        let lat = Lattice::random(3, 3, &mut rng).unwrap();
        let plan = RecursionPlan::new(lat.dims()).unwrap();
        let log_prod: f64 = (0..lat.len())
            .map(|i| factor(th, &plan, i, LocalSpins::gather(&plan, &lat, i)))
            .sum();
        let s = lat.sufficient_statistics();
        let direct = th.theta0 * s.s0 as f64 + th.theta1 * s.s1 as f64;
        assert!((log_prod - direct).abs() < 1e-12);
    }
}

#[test]
fn block_normalizer_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for (m, n, k) in [(5, 5, 2), (4, 6, 2), (6, 5, 3), (3, 3, 2), (2, 2, 1)] {
        let lat = Lattice::random(m, n, &mut rng).unwrap();
        for t in [(0.0, 0.4), (0.25, -0.6), (-0.4, 1.1)] {
            let th = ModelParams { theta0: t.0, theta1: t.1 };
            for b in enumerate_blocks(lat.dims(), k).unwrap() {
                let a = log_block_normalizer(th, &lat, &b).unwrap();
                let e = common::enum_block_log_z(th, &lat, b.top_row, b.left_col, k);
                assert!(rel(a, e) < 1e-12, "{m}x{n} k={k} block {b:?}");
            }
        }
    }
}

#[test]
fn block_conditionals_normalize() {
    // Σ over block configurations of the conditional probability is 1.
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let base = Lattice::random(5, 4, &mut rng).unwrap();
    let th = ModelParams { theta0: 0.2, theta1: 0.7 };
    for k in 1..=2 {
        for b in enumerate_blocks(base.dims(), k).unwrap() {
            let log_z = log_block_normalizer(th, &base, &b).unwrap();
            let mut total = 0.0;
            for cfg in common::configs(k * k) {
                let mut lat = base.clone();
                for (&site, &s) in b.index_set.iter().zip(&cfg) {
                    lat.set(site, s);
                }
                // normalizer must not depend on the block's own spins
                let z2 = log_block_normalizer(th, &lat, &b).unwrap();
                assert!((z2 - log_z).abs() < 1e-12);
                total += common::enum_block_log_prob(th, &lat, b.top_row, b.left_col, k).exp();
            }
            assert!((total - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn whole_lattice_block_equals_partition() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for m in [1, 3, 6, 8] {
        let lat = Lattice::random(m, m, &mut rng).unwrap();
        let b = enumerate_blocks(lat.dims(), m).unwrap().remove(0);
        let th = ModelParams { theta0: 0.1, theta1: 0.45 };
        let a = log_block_normalizer(th, &lat, &b).unwrap();
        let z = log_partition(th, m, m).unwrap();
        assert!(rel(a, z) < 1e-12);
    }
}

#[test]
fn independent_sites_at_zero_theta() {
    let draws = 10_000;
    let mut plus = [0u32; 16];
    for s in 0..draws {
        let lat = exact_sample(ModelParams::default(), 4, 4, s).unwrap();
        for (c, &y) in plus.iter_mut().zip(lat.spins()) {
            *c += u32::from(y > 0);
        }
    }
    for (i, c) in plus.iter().enumerate() {
        let p = f64::from(*c) / draws as f64;
        assert!((p - 0.5).abs() < 0.02, "site {i}: {p}");
    }
}

#[test]
fn exact_sampler_goodness_of_fit_2x3() {
    let th = ModelParams::ising(0.4);
    for (m, n) in [(2, 3), (3, 2)] {
        let probs = common::enum_probs(th, m, n);
        let mut counts = vec![0u64; probs.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..100_000 {
            let lat = ccl_core::exact_sample_with(th, Dims::new(m, n).unwrap(), &mut rng).unwrap();
            counts[common::config_index(&lat)] += 1;
        }
        let (stat, df) = common::chi_square(&counts, &probs);
        let crit = ChiSquared::new(df as f64).unwrap().inverse_cdf(0.99);
        assert!(stat < crit, "{m}x{n}: chi2 {stat} >= {crit} (df {df})");
    }
}

#[test]
fn exact_sampler_moment_8x8() {
    let th = ModelParams::ising(0.4);
    let h = 1e-4;
    let fd = (log_partition(ModelParams::ising(0.4 + h), 8, 8).unwrap()
        - log_partition(ModelParams::ising(0.4 - h), 8, 8).unwrap())
        / (2.0 * h);
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let d = Dims::new(8, 8).unwrap();
    let s1: Vec<f64> = (0..10_000)
        .map(|_| ccl_core::exact_sample_with(th, d, &mut rng).unwrap().sufficient_statistics().s1 as f64)
        .collect();
    let n = s1.len() as f64;
    let mean = s1.iter().sum::<f64>() / n;
    let var = s1.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    assert!((mean - fd).abs() < 3.0 * se, "mean {mean} fd {fd} se {se}");
}

#[test]
fn exact_sampler_with_field_matches_enumeration() {
    // non-zero abundance and a rows > cols lattice exercise the field and transposition paths
    let th = ModelParams { theta0: 0.3, theta1: -0.5 };
    let (m, n) = (3, 2);
    let probs = common::enum_probs(th, m, n);
    let mut counts = vec![0u64; probs.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50_000 {
        let lat = ccl_core::exact_sample_with(th, Dims::new(m, n).unwrap(), &mut rng).unwrap();
        counts[common::config_index(&lat)] += 1;
    }
    let (stat, df) = common::chi_square(&counts, &probs);
    let crit = ChiSquared::new(df as f64).unwrap().inverse_cdf(0.99);
    assert!(stat < crit, "chi2 {stat} >= {crit}");
}
