mod common;

use proptest::prelude::*;
use rand::Rng;
use sparsecert_core::certificates::{erc_noise, erc_value, noise_ratio};
use sparsecert_core::{omp, womp, Dictionary, Noise, OmpConfig, OmpTrace};

fn check_trace(dict: &Dictionary, v: &[f64], trace: &OmpTrace) -> Result<(), TestCaseError> {
    let v_norm = common::norm(v);
    for w in trace.residual_norms.windows(2) {
        prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12 * v_norm);
    }
    let mut seen = trace.picked.clone();
    seen.sort_unstable();
    seen.dedup();
    prop_assert_eq!(seen.len(), trace.picked.len());

    let fit = dict.synthesize(&trace.solution).unwrap();
    let residual: Vec<f64> = v.iter().zip(&fit).map(|(a, b)| a - b).collect();
    let corr = dict.correlate(&residual).unwrap();
    for &i in &trace.picked {
        prop_assert!(corr[i].abs() <= 1e-10 * v_norm, "<r, d_{}> = {}", i, corr[i]);
    }
    let last = *trace.residual_norms.last().unwrap();
    prop_assert!((common::norm(&residual) - last).abs() <= 1e-9 * v_norm.max(1.0));
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn omp_trace_invariants(seed in any::<u64>(), n in 2usize..40, k in 1usize..6, t in 0.0f64..1.0, noise in 0.0f64..0.5) {
        let mut rng = common::rng(seed);
        let m = rng.random_range(n / 2 + 1..=n + 5);
        let dict = common::perturbed_identity(&mut rng, m, n, t);
        let signal = common::random_signal(&mut rng, n, k.min(n), 0.5, 2.0);
        let mut v = dict.synthesize(&signal).unwrap();
        for x in v.iter_mut() {
            *x += noise * common::normal(&mut rng);
        }
        if let Ok(trace) = omp(&dict, &v, &OmpConfig::default()) {
            check_trace(&dict, &v, &trace)?;
            prop_assert!(trace.iterations() <= n);
        }
    }

    #[test]
    fn weak_omp_with_unit_weakness_is_omp(seed in any::<u64>(), n in 2usize..30, eps in 0.0f64..0.3) {
        let mut rng = common::rng(seed);
        let dict = common::perturbed_identity(&mut rng, n + 3, n, 0.4);
        let signal = common::random_signal(&mut rng, n, (n / 3).max(1), 0.5, 2.0);
        let v = dict.synthesize(&signal).unwrap();
        let cfg = OmpConfig::with_epsilon(eps);
        let a = omp(&dict, &v, &cfg);
        let b = womp(&dict, &v, &cfg);
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (a, b) => prop_assert_eq!(a.is_err(), b.is_err()),
        }
    }

    #[test]
    fn weak_omp_trace_invariants(seed in any::<u64>(), n in 2usize..30, omega in 0.3f64..=1.0) {
        let mut rng = common::rng(seed);
        let dict = common::perturbed_identity(&mut rng, n + 3, n, 0.3);
        let signal = common::random_signal(&mut rng, n, (n / 4).max(1), 0.5, 2.0);
        let v = dict.synthesize(&signal).unwrap();
        let cfg = OmpConfig { weakness_omega: omega, ..OmpConfig::default() };
        if let Ok(trace) = womp(&dict, &v, &cfg) {
            check_trace(&dict, &v, &trace)?;
        }
    }
}

#[test]
fn certified_instances_are_recovered_exactly() {
    let mut rng = common::rng(1234);
    let mut certified = 0;
    let mut tried = 0;
    while certified < 250 {
        tried += 1;
        assert!(tried < 20_000);
        let n = rng.random_range(4..=40);
        let k = rng.random_range(1..=6.min(n - 1));
        let t = rng.random_range(0.0..0.5);
        let dict = common::perturbed_identity(&mut rng, n + 2, n, t);
        let signal = common::random_signal(&mut rng, n, k, 0.5, 3.0);
        let clean = dict.synthesize(&signal).unwrap();
        let noisy = rng.random::<bool>();
        let (v, cfg, r) = if noisy {
            let sigma = rng.random_range(0.001..0.1);
            let eta: Vec<f64> = clean.iter().map(|_| sigma * common::normal(&mut rng)).collect();
            let eps = common::norm(&eta);
            let r = noise_ratio(&dict, &signal, Noise::Bound(eps)).unwrap();
            (common::add(&clean, &eta), OmpConfig::with_epsilon(eps), r)
        } else {
            let r = noise_ratio(&dict, &signal, Noise::Bound(0.0)).unwrap();
            (clean, OmpConfig::default(), r)
        };
        let Ok(check) = erc_noise(&dict, signal.support(), &r) else { continue };
        if !check.pass {
            continue;
        }
        let trace = omp(&dict, &v, &cfg).unwrap();
        assert_eq!(trace.support(), signal.support());
        assert!(trace.converged);
        if !noisy {
            assert!(trace.solution.l1_distance(&signal) < 1e-8);
        }
        certified += 1;
    }
}

#[test]
fn weak_omp_recovers_when_erc_is_below_weakness() {
    let mut rng = common::rng(77);
    let mut checked = 0;
    while checked < 100 {
        let n = rng.random_range(4..=30);
        let k = rng.random_range(1..=5.min(n - 1));
        let t = rng.random_range(0.0..0.3);
        let dict = common::perturbed_identity(&mut rng, n + 2, n, t);
        let signal = common::random_signal(&mut rng, n, k, 0.5, 3.0);
        let erc = erc_value(&dict, signal.support()).unwrap();
        let omega = rng.random_range(0.3..=1.0);
        if erc >= omega {
            continue;
        }
        let v = dict.synthesize(&signal).unwrap();
        let cfg = OmpConfig { weakness_omega: omega, ..OmpConfig::default() };
        let trace = womp(&dict, &v, &cfg).unwrap();
        assert_eq!(trace.support(), signal.support());
        checked += 1;
    }
}

#[test]
fn iteration_cap_reports_non_convergence() {
    let mut rng = common::rng(8);
    let dict = common::perturbed_identity(&mut rng, 12, 10, 0.2);
    let signal = common::random_signal(&mut rng, 10, 4, 1.0, 2.0);
    let v = dict.synthesize(&signal).unwrap();
    let cfg = OmpConfig { max_iterations: Some(2), ..OmpConfig::default() };
    let trace = omp(&dict, &v, &cfg).unwrap();
    assert_eq!(trace.iterations(), 2);
    assert!(!trace.converged);
}
