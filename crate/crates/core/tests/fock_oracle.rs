mod common;

use pointcouple::fock::{scatter_state, FockWavepacketState};
use pointcouple::linalg::C64;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

#[test]
fn matches_brute_force_for_small_systems() {
    let mut rng = StdRng::seed_from_u64(2024);
    let labels = [0.0, 1.5];
    for k in 0..=3 {
        for n in 1..=3 {
            for _ in 0..20 {
                let s = common::random_device(n, &mut rng);
                let state = if k == 0 {
                    FockWavepacketState::vacuum(n)
                } else {
                    common::random_fock_state(k, n, &labels, &mut rng)
                };
                let fast = scatter_state(&state, &s).unwrap();
                let slow = common::oracle_scatter(&state, &s);
                let diff = fast.max_abs_diff(&slow);
                assert!(diff < 1e-12, "K = {k}, N = {n}: {diff:e}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn scattering_preserves_norm(seed in any::<u64>(), k in 1usize..=4, n in 1usize..=4) {
        let mut rng = StdRng::seed_from_u64(seed);
        let s = common::random_device(n, &mut rng);
        let state = common::random_fock_state(k, n, &[0.0, 2.0, 3.0], &mut rng);
        let out = scatter_state(&state, &s).unwrap();
        prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
        prop_assert_eq!(out.photon_count(), k);
    }

    #[test]
    fn scattering_composes(seed in any::<u64>(), k in 1usize..=3, n in 1usize..=3) {
        let mut rng = StdRng::seed_from_u64(seed);
        let a = common::random_device(n, &mut rng);
        let b = common::random_device(n, &mut rng);
        let state = common::random_fock_state(k, n, &[0.0, 1.0], &mut rng);
        let two_steps = scatter_state(&scatter_state(&state, &a).unwrap(), &b).unwrap();
        let one_step = scatter_state(&state, &b.compose(&a).unwrap()).unwrap();
        prop_assert!(two_steps.max_abs_diff(&one_step) < 1e-12);
    }
}

#[test]
fn single_photon_is_matrix_multiplication() {
    let mut rng = StdRng::seed_from_u64(1);
    let s = common::random_device(4, &mut rng);
    let amps = [C64::new(0.5, 0.1), C64::new(-0.3, 0.4), C64::new(0.0, 0.2), C64::new(0.6, 0.0)];
    let terms = (0..4).map(|m| (vec![(m, 0.0)], amps[m]));
    let state = FockWavepacketState::new(4, vec![0.0], terms).unwrap();
    let out = scatter_state(&state, &s).unwrap();
    for j in 0..4 {
        let expected: C64 = (0..4).map(|m| s.get(j, m) * amps[m]).sum();
        assert!((out.amplitude(&[(j, 0.0)]).unwrap() - expected).norm() < 1e-14);
    }
}
