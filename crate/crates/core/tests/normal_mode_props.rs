mod common;

use pointcouple::linalg::C64;
use pointcouple::normal_modes::{decompose_wavepacket, profile, roundtrip_error, NormalModeBasis, OmegaGrid};
use pointcouple::propagation::{Grid, Wavepacket};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn decompose_reconstruct_roundtrip(seed in any::<u64>(), n in 1usize..=4) {
        let mut rng = StdRng::seed_from_u64(seed);
        let s = common::random_device(n, &mut rng);
        let grid = Grid::new(-40.0, 0.1, 801).unwrap();
        let offsets: Vec<f64> = (0..n).map(|_| rng.random_range(-20i32..=20) as f64 * 0.1).collect();
        let params: Vec<(f64, f64, f64)> = (0..n)
            .map(|m| {
                // keep every packet at least 6 widths away from its coupling point
                let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                (offsets[m] + side * rng.random_range(12.0..25.0), rng.random_range(1.0..2.0), rng.random_range(-1.0..1.0))
            })
            .collect();
        let w = Wavepacket::from_fn(grid, offsets.clone(), |m, x| {
            let (c, width, k) = params[m];
            C64::new(-(x - c).powi(2) / (2.0 * width * width), k * x).exp()
        })
        .unwrap();
        let basis = NormalModeBasis::new(s, offsets).unwrap();
        let err = roundtrip_error(&basis, &w, &OmegaGrid::reciprocal(&grid)).unwrap();
        prop_assert!(err < 1e-6, "{err:e}");
    }

    /// Profiles of different normal modes are orthogonal on the upstream side
    /// and the whole family is unitary downstream.
    #[test]
    fn profiles_form_a_unitary_family(seed in any::<u64>(), n in 1usize..=4, omega in -3.0f64..3.0) {
        let mut rng = StdRng::seed_from_u64(seed);
        let basis = NormalModeBasis::centered(common::random_device(n, &mut rng));
        for x in [-1.5, 2.5] {
            for a in 0..n {
                for b in 0..n {
                    let overlap: C64 = (0..n)
                        .map(|m| profile(&basis, a, m, x, omega).unwrap().conj() * profile(&basis, b, m, x, omega).unwrap())
                        .sum();
                    let expected = if a == b { 1.0 } else { 0.0 };
                    prop_assert!((overlap - C64::new(expected, 0.0)).norm() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn spectra_have_plancherel_norm() {
    let mut rng = StdRng::seed_from_u64(4);
    let basis = NormalModeBasis::centered(common::random_device(2, &mut rng));
    let grid = Grid::new(-30.0, 0.1, 601).unwrap();
    let w = Wavepacket::from_fn(grid, vec![0.0, 0.0], |m, x| {
        let c = if m == 0 { -10.0 } else { 10.0 };
        C64::new(-(x - c).powi(2) / 2.0, 0.0).exp()
    })
    .unwrap();
    let omega = OmegaGrid::reciprocal(&grid);
    let spectra = decompose_wavepacket(&basis, &w, &omega).unwrap();
    let spectral: f64 = spectra.spectra.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>() * omega.step;
    assert!((spectral - w.norm_sqr()).abs() < 1e-9, "{spectral} vs {}", w.norm_sqr());
}
