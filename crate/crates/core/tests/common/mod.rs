#![allow(dead_code)]

use std::collections::BTreeMap;

use pointcouple::device::UnitaryScatteringMatrix;
use pointcouple::fock::FockWavepacketState;
use pointcouple::linalg::{CMatrix, C64, I};
use rand::rngs::StdRng;
use rand::Rng;

pub fn gaussian(rng: &mut StdRng) -> f64 {
    // Box-Muller; rand's distributions crate is not worth a dependency here.
    let u: f64 = rng.random_range(f64::EPSILON..1.0);
    let v: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

pub fn ginibre(n: usize, rng: &mut StdRng) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| C64::new(gaussian(rng), gaussian(rng)))
}

/// Haar-random unitary: QR of a Ginibre matrix with the phases of R's
/// diagonal moved into Q.
pub fn haar_unitary(n: usize, rng: &mut StdRng) -> CMatrix {
    let (q, r) = ginibre(n, rng).qr().unpack();
    CMatrix::from_fn(n, n, |i, j| {
        let d = r[(j, j)];
        q[(i, j)] * (d / d.norm())
    })
}

/// `U diag(e^{i phi}) U^dag` with Haar `U` and eigenphases drawn from
/// `[-max_phase, max_phase]`.
pub fn unitary_with_phases(n: usize, max_phase: f64, rng: &mut StdRng) -> UnitaryScatteringMatrix {
    let u = haar_unitary(n, rng);
    let d = CMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| {
        (I * rng.random_range(-max_phase..=max_phase)).exp()
    }));
    UnitaryScatteringMatrix::new(&u * d * u.adjoint()).expect("unitary by construction")
}

pub fn random_device(n: usize, rng: &mut StdRng) -> UnitaryScatteringMatrix {
    UnitaryScatteringMatrix::new(haar_unitary(n, rng)).expect("unitary by construction")
}

pub fn random_photons(k: usize, modes: usize, labels: &[f64], rng: &mut StdRng) -> Vec<(usize, f64)> {
    (0..k)
        .map(|_| (rng.random_range(0..modes), labels[rng.random_range(0..labels.len())]))
        .collect()
}

/// Normalised superposition of a few random `k`-photon occupations.
pub fn random_fock_state(k: usize, modes: usize, labels: &[f64], rng: &mut StdRng) -> FockWavepacketState {
    let terms: Vec<_> = (0..rng.random_range(1..=4))
        .map(|_| (random_photons(k, modes, labels, rng), C64::new(gaussian(rng), gaussian(rng))))
        .collect();
    FockWavepacketState::new(modes, labels.to_vec(), terms)
        .expect("valid state")
        .normalized()
}

fn factorials(key: &[(usize, u64)]) -> f64 {
    let mut counts: BTreeMap<(usize, u64), usize> = BTreeMap::new();
    for k in key {
        *counts.entry(*k).or_default() += 1;
    }
    counts.values().map(|&n| (1..=n).map(|x| x as f64).product::<f64>()).product()
}

/// Brute-force scattering: substitute `a^dag_mu -> sum_j S[j, mu] a^dag_j`
/// in every creation-operator product and expand all `N^K` terms.
pub fn oracle_scatter(state: &FockWavepacketState, s: &UnitaryScatteringMatrix) -> FockWavepacketState {
    let n = s.n_modes();
    let mut monomials: BTreeMap<Vec<(usize, u64)>, C64> = BTreeMap::new();
    for (photons, amp) in state.terms() {
        let key: Vec<(usize, u64)> = photons.iter().map(|&(m, f)| (m, f.to_bits())).collect();
        let coeff = amp / factorials(&key).sqrt();
        let k = photons.len();
        for choice in 0..n.pow(k as u32) {
            let mut c = choice;
            let mut out = Vec::with_capacity(k);
            let mut weight = coeff;
            for &(mode, freq) in &photons {
                let j = c % n;
                c /= n;
                weight *= s.get(j, mode);
                out.push((j, freq.to_bits()));
            }
            out.sort_unstable();
            *monomials.entry(out).or_default() += weight;
        }
    }
    let terms: Vec<(Vec<(usize, f64)>, C64)> = monomials
        .into_iter()
        .map(|(key, c)| {
            let amp = c * factorials(&key).sqrt();
            (key.iter().map(|&(m, f)| (m, f64::from_bits(f))).collect(), amp)
        })
        .collect();
    if terms.is_empty() {
        return FockWavepacketState::vacuum(n);
    }
    FockWavepacketState::new(n, state.frequency_labels().to_vec(), terms).expect("valid oracle state")
}
