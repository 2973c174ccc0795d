//! Single-time-step propagators for the emitter and its time bins.
//!
//! Local basis: emitter `|g>, |e>` (dimension 2), then each bin holds a
//! forward and a backward photon number, `index = n_plus * d + n_minus`
//! with `d = bin_dim`.

use crate::error::{Error, Result};
use crate::linalg::{expm_hermitian, kron, unitarity_residual, CMatrix, C64, I};

use super::config::FeedbackConfig;

const GATE_TOLERANCE: f64 = 1e-10;

/// Coefficients of the step-`k` Hamiltonian (already multiplied by `dt`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepCoupling {
    pub k: usize,
    pub detuning: f64,
    pub drive: f64,
    /// Multiplies `sigma^dag A_+[k]`.
    pub forward: C64,
    /// Multiplies `sigma^dag A_-[k]`.
    pub backward: C64,
    /// Multiplies `sigma^dag A_-[k - 2 n_d]`; present once the mirror's echo
    /// can reach the emitter.
    pub delayed: Option<C64>,
}

/// Rotating-frame couplings for step `k` (time `k dt`).
pub fn rotating_frame_coupling(config: &FeedbackConfig, k: usize) -> StepCoupling {
    let dt = config.dt;
    let n_d = config.delay_bins();
    let plus = (config.gamma_plus * dt).sqrt() * (I * config.omega0_td).exp();
    let minus = (config.gamma_minus * dt).sqrt() * (-I * config.omega0_td).exp();
    let (forward, delayed) = if k > n_d {
        let (t, r) = config.mirror_port_order.amplitudes(config.theta, config.phi);
        (plus * t, Some(plus * r))
    } else {
        (plus, None)
    };
    StepCoupling {
        k,
        detuning: config.delta_e * dt,
        drive: config.drive.amplitude(k as f64 * dt) * dt,
        forward,
        backward: minus,
        delayed,
    }
}

/// Which chain sites a gate acts on: emitter, new bin and (optionally) the
/// delayed bin, in that order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateSites {
    EmitterAndBin,
    EmitterBinAndDelayed,
}

#[derive(Debug, Clone)]
pub struct BinGate {
    pub k: usize,
    pub sites: GateSites,
    pub unitary: CMatrix,
}

fn lowering(dim: usize) -> CMatrix {
    CMatrix::from_fn(dim, dim, |r, c| {
        if c == r + 1 {
            C64::new((c as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// `(A_+, A_-)` on one time bin.
pub fn bin_operators(bin_dim: usize) -> (CMatrix, CMatrix) {
    let a = lowering(bin_dim);
    let id = CMatrix::identity(bin_dim, bin_dim);
    (kron(&a, &id), kron(&id, &a))
}

/// Emitter lowering operator `sigma = |g><e|`.
pub fn sigma() -> CMatrix {
    lowering(2)
}

/// Total photon number `n_+ + n_-` on one bin.
pub fn bin_number(bin_dim: usize) -> CMatrix {
    let (ap, am) = bin_operators(bin_dim);
    ap.adjoint() * &ap + am.adjoint() * &am
}

pub fn step_hamiltonian(coupling: &StepCoupling, bin_dim: usize) -> CMatrix {
    let s = sigma();
    let sd = s.adjoint();
    let (ap, am) = bin_operators(bin_dim);
    let bin = bin_dim * bin_dim;
    let id_bin = CMatrix::identity(bin, bin);

    let local = &sd * &s * C64::new(coupling.detuning, 0.0) + (&s + &sd) * C64::new(coupling.drive, 0.0);
    let to_new = &ap * coupling.forward + &am * coupling.backward;
    let (local, emission) = match coupling.delayed {
        None => (kron(&local, &id_bin), kron(&sd, &to_new)),
        Some(delayed) => (
            kron(&kron(&local, &id_bin), &id_bin),
            kron(&kron(&sd, &to_new), &id_bin) + kron(&kron(&sd, &id_bin), &(&am * delayed)),
        ),
    };
    let absorption = emission.adjoint();
    local + emission + absorption
}

/// `exp(-i H_k)` on the emitter, bin `k` and, after the first round trip,
/// the delayed bin `k - 2 n_d`.
pub fn build_gate(config: &FeedbackConfig, k: usize) -> Result<BinGate> {
    let coupling = rotating_frame_coupling(config, k);
    let h = step_hamiltonian(&coupling, config.bin_dim);
    let unitary = expm_hermitian(&h);
    let residual = unitarity_residual(&unitary);
    if residual > GATE_TOLERANCE {
        return Err(Error::Numerical(format!(
            "gate for step {k} deviates from unitarity by {residual:.3e}"
        )));
    }
    let sites = if coupling.delayed.is_some() {
        GateSites::EmitterBinAndDelayed
    } else {
        GateSites::EmitterAndBin
    };
    Ok(BinGate { k, sites, unitary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermiticity_residual, max_abs_diff};
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn couplings_switch_on_after_first_round_trip() {
        let c = FeedbackConfig::default();
        let early = rotating_frame_coupling(&c, 40);
        assert!(early.delayed.is_none());
        let late = rotating_frame_coupling(&c, 41);
        let r = late.delayed.unwrap();
        assert!((r.norm() - (0.5 * 0.05_f64).sqrt()).abs() < 1e-15);
        // Ideal mirror: nothing is transmitted.
        assert!(late.forward.norm() < 1e-15);
        assert!((late.backward - early.backward).norm() == 0.0);
    }

    #[test]
    fn transparent_mirror_reduces_to_free_emission() {
        let c = FeedbackConfig {
            theta: 0.0,
            ..FeedbackConfig::default()
        };
        let early = build_gate(&c, 3).unwrap();
        let late = build_gate(&c, 60).unwrap();
        assert_eq!(late.sites, GateSites::EmitterBinAndDelayed);
        let id = CMatrix::identity(4, 4);
        assert!(max_abs_diff(&late.unitary, &kron(&early.unitary, &id)) < 1e-12);
    }

    #[test]
    fn hamiltonian_is_hermitian() {
        let c = FeedbackConfig {
            theta: 0.7,
            phi: 0.3,
            delta_e: 0.2,
            bin_dim: 3,
            drive: super::super::config::Drive::Exponential {
                omega0: super::super::config::RealAmplitude(1.3),
                alpha: 0.5,
            },
            ..FeedbackConfig::default()
        };
        for k in [0, 45] {
            let h = step_hamiltonian(&rotating_frame_coupling(&c, k), 3);
            assert!(hermiticity_residual(&h) < 1e-14);
            let g = build_gate(&c, k).unwrap();
            assert!(unitarity_residual(&g.unitary) < 1e-12);
        }
    }

    #[test]
    fn single_step_emission_probability() {
        // One step from |e, vac>: the emitter stays excited with amplitude cos(sqrt(dt)).
        let c = FeedbackConfig {
            theta: FRAC_PI_2,
            ..FeedbackConfig::default()
        };
        let g = build_gate(&c, 0).unwrap();
        let excited_vac = 4; // |e> (x) |0,0>
        let stay = g.unitary[(excited_vac, excited_vac)];
        assert!((stay.norm() - (0.05_f64).sqrt().cos()).abs() < 1e-12);
    }
}
