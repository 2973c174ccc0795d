//! Normal modes of a point-coupled device.
//!
//! Normal mode `n` at frequency `omega` is the classical field obtained by
//! driving input port `n`: a plane wave `e^{i omega (x - x0)}` in mode `n`
//! upstream of the device and the column `S[:, n]` of plane waves
//! downstream. A wavepacket is decomposed onto these modes by projecting its
//! upstream part directly and its downstream part through `S^dag`, and is
//! rebuilt by evaluating the mode profiles on the grid.

use std::f64::consts::PI;

use crate::device::UnitaryScatteringMatrix;
use crate::error::{Error, Result};
use crate::linalg::{C64, I};
use crate::propagation::{Grid, Wavepacket};

/// Envelope amplitude (relative to the peak) tolerated at the grid ends.
const EDGE_AMPLITUDE_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct NormalModeBasis {
    scattering: UnitaryScatteringMatrix,
    offsets: Vec<f64>,
}

impl NormalModeBasis {
    pub fn new(scattering: UnitaryScatteringMatrix, offsets: Vec<f64>) -> Result<Self> {
        if offsets.len() != scattering.n_modes() {
            return Err(Error::DimensionMismatch {
                expected: scattering.n_modes(),
                found: offsets.len(),
                context: "device offsets vs modes",
            });
        }
        Ok(NormalModeBasis {
            scattering,
            offsets,
        })
    }

    /// All device positions at the origin.
    pub fn centered(scattering: UnitaryScatteringMatrix) -> Self {
        let n = scattering.n_modes();
        NormalModeBasis {
            scattering,
            offsets: vec![0.0; n],
        }
    }

    pub fn n_modes(&self) -> usize {
        self.scattering.n_modes()
    }

    pub fn scattering(&self) -> &UnitaryScatteringMatrix {
        &self.scattering
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    fn check_index(&self, index: usize, context: &'static str) -> Result<()> {
        if index >= self.n_modes() {
            return Err(Error::IndexOutOfRange {
                index,
                len: self.n_modes(),
                context,
            });
        }
        Ok(())
    }
}

/// One evaluated profile value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldProfileSample {
    pub normal_index: usize,
    pub mode: usize,
    pub x: f64,
    pub omega: f64,
    pub amplitude: C64,
}

/// `<vac| a_m(x) b_n^dag(omega) |vac>`; at the device position itself the
/// mean of the two one-sided values is returned.
pub fn profile(basis: &NormalModeBasis, normal_index: usize, mode: usize, x: f64, omega: f64) -> Result<C64> {
    basis.check_index(normal_index, "normal mode index")?;
    basis.check_index(mode, "optical mode index")?;
    let y = x - basis.offsets[mode];
    let wave = (I * (omega * y)).exp();
    let upstream = if mode == normal_index { 1.0 } else { 0.0 };
    let downstream = basis.scattering.get(mode, normal_index);
    let weight = if y < 0.0 {
        C64::new(upstream, 0.0)
    } else if y > 0.0 {
        downstream
    } else {
        (downstream + upstream) * 0.5
    };
    Ok(wave * weight)
}

pub fn profile_sample(
    basis: &NormalModeBasis,
    normal_index: usize,
    mode: usize,
    x: f64,
    omega: f64,
) -> Result<FieldProfileSample> {
    Ok(FieldProfileSample {
        normal_index,
        mode,
        x,
        omega,
        amplitude: profile(basis, normal_index, mode, x, omega)?,
    })
}

/// Coefficient multiplying `b_n(omega)` for an emitter that couples with
/// rate `rate` to optical mode `mode` at position `x`, summed over all
/// listed coupling points: `sum sqrt(rate) * profile(n, mode, x, omega)`.
pub fn coupling_coefficient(
    basis: &NormalModeBasis,
    couplings: &[(usize, f64, f64)],
    normal_index: usize,
    omega: f64,
) -> Result<C64> {
    couplings
        .iter()
        .map(|&(mode, x, rate)| Ok(profile(basis, normal_index, mode, x, omega)? * rate.sqrt()))
        .sum()
}

/// Uniform frequency grid `omega_k = start + k * step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl OmegaGrid {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self> {
        if !(step > 0.0) || len < 2 || !start.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "omega grid needs step > 0 and at least two points (step {step}, len {len})"
            )));
        }
        Ok(OmegaGrid { start, step, len })
    }

    /// The grid reciprocal to `grid`: same number of points, spacing
    /// `2 pi / (len dx)`, covering the Nyquist band `[-pi/dx, pi/dx)`.
    pub fn reciprocal(grid: &Grid) -> Self {
        let step = 2.0 * PI / (grid.len as f64 * grid.dx);
        OmegaGrid {
            start: -((grid.len / 2) as f64) * step,
            step,
            len: grid.len,
        }
    }

    #[inline]
    pub fn omega(&self, k: usize) -> f64 {
        self.start + k as f64 * self.step
    }

    fn weight(&self, k: usize) -> f64 {
        if k == 0 || k + 1 == self.len {
            0.5 * self.step
        } else {
            self.step
        }
    }
}

/// Per-normal-mode spectra `b_n(omega_k)`.
#[derive(Debug, Clone)]
pub struct NormalModeSpectra {
    pub omega: OmegaGrid,
    pub spectra: Vec<Vec<C64>>,
}

/// `sum_j w_j f_j e^{-i omega (x_j - x0)} dx / sqrt(2 pi)` for every omega.
fn forward_transform(grid: &Grid, x0: f64, samples: &[C64], weights: &[f64], omega: &OmegaGrid) -> Vec<C64> {
    let norm = grid.dx / (2.0 * PI).sqrt();
    (0..omega.len)
        .map(|k| {
            let w = omega.omega(k);
            let rot = (-I * (w * grid.dx)).exp();
            let mut phase = (-I * (w * (grid.x_min - x0))).exp();
            let mut acc = C64::new(0.0, 0.0);
            for (j, (&f, &wt)) in samples.iter().zip(weights).enumerate() {
                if j % 64 == 0 {
                    phase = (-I * (w * (grid.x(j) - x0))).exp();
                }
                if wt != 0.0 {
                    acc += f * wt * phase;
                }
                phase *= rot;
            }
            acc * norm
        })
        .collect()
}

/// `sum_k w_k b_k e^{i omega_k (x - x0)} / sqrt(2 pi)` for every grid point.
fn inverse_transform(grid: &Grid, x0: f64, spectrum: &[C64], omega: &OmegaGrid) -> Vec<C64> {
    let norm = 1.0 / (2.0 * PI).sqrt();
    let mut out = vec![C64::new(0.0, 0.0); grid.len];
    for (k, &b) in spectrum.iter().enumerate() {
        let w = omega.omega(k);
        let coeff = b * omega.weight(k) * norm;
        let rot = (I * (w * grid.dx)).exp();
        let mut phase = C64::new(0.0, 0.0);
        for (j, slot) in out.iter_mut().enumerate() {
            if j % 64 == 0 {
                phase = (I * (w * (grid.x(j) - x0))).exp();
            }
            *slot += coeff * phase;
            phase *= rot;
        }
    }
    out
}

/// Trapezoid weights (in units of dx) of the half-lines before and after
/// the device; a sample exactly on the device is shared equally.
fn split_weights(grid: &Grid, x0: f64) -> (Vec<f64>, Vec<f64>) {
    let tol = 1e-12 * grid.dx;
    grid.positions()
        .map(|x| {
            if (x - x0).abs() <= tol {
                (0.5, 0.5)
            } else if x < x0 {
                (1.0, 0.0)
            } else {
                (0.0, 1.0)
            }
        })
        .unzip()
}

/// Projects `w` onto the normal modes.
pub fn decompose_wavepacket(
    basis: &NormalModeBasis,
    w: &Wavepacket,
    omega: &OmegaGrid,
) -> Result<NormalModeSpectra> {
    let n = basis.n_modes();
    if w.mode_count() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: w.mode_count(),
            context: "wavepacket modes vs device modes",
        });
    }
    let grid = w.grid();
    let peak = w
        .envelopes()
        .iter()
        .flatten()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    for (m, env) in w.envelopes().iter().enumerate() {
        let edge = env[0].norm().max(env[grid.len - 1].norm());
        if edge > EDGE_AMPLITUDE_LIMIT * peak {
            return Err(Error::GridOverflow {
                context: format!(
                    "mode {m} envelope is still {:.3e} of its peak at the grid boundary",
                    edge / peak
                ),
            });
        }
    }

    let mut upstream = Vec::with_capacity(n);
    let mut downstream = Vec::with_capacity(n);
    for m in 0..n {
        let x0 = basis.offsets[m];
        let (up_w, down_w) = split_weights(grid, x0);
        upstream.push(forward_transform(grid, x0, w.envelope(m), &up_w, omega));
        downstream.push(forward_transform(grid, x0, w.envelope(m), &down_w, omega));
    }
    let s = basis.scattering.matrix();
    let spectra = (0..n)
        .map(|nm| {
            (0..omega.len)
                .map(|k| {
                    upstream[nm][k]
                        + (0..n)
                            .map(|m| s[(m, nm)].conj() * downstream[m][k])
                            .sum::<C64>()
                })
                .collect()
        })
        .collect();
    Ok(NormalModeSpectra {
        omega: *omega,
        spectra,
    })
}

/// Rebuilds the position-domain envelopes from normal-mode spectra:
/// mode `m` equals `b_m` upstream of the device and `sum_k S[m,k] b_k`
/// downstream.
pub fn reconstruct(
    basis: &NormalModeBasis,
    spectra: &NormalModeSpectra,
    grid: &Grid,
) -> Result<Wavepacket> {
    let n = basis.n_modes();
    if spectra.spectra.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: spectra.spectra.len(),
            context: "spectra vs device modes",
        });
    }
    let s = basis.scattering.matrix();
    let omega = &spectra.omega;
    let mut envelopes = Vec::with_capacity(n);
    for m in 0..n {
        let x0 = basis.offsets[m];
        let mixed: Vec<C64> = (0..omega.len)
            .map(|k| (0..n).map(|j| s[(m, j)] * spectra.spectra[j][k]).sum())
            .collect();
        let before = inverse_transform(grid, x0, &spectra.spectra[m], omega);
        let after = inverse_transform(grid, x0, &mixed, omega);
        let (up_w, _) = split_weights(grid, x0);
        envelopes.push(
            up_w.iter()
                .zip(before.iter().zip(&after))
                .map(|(&u, (&b, &a))| b * u + a * (1.0 - u))
                .collect(),
        );
    }
    Wavepacket::new(*grid, basis.offsets.clone(), envelopes)
}

/// Decompose-then-reconstruct error `max |w - w'|`, the discretization
/// error of the chosen grids.
pub fn roundtrip_error(basis: &NormalModeBasis, w: &Wavepacket, omega: &OmegaGrid) -> Result<f64> {
    let spectra = decompose_wavepacket(basis, w, omega)?;
    let back = reconstruct(basis, &spectra, w.grid())?;
    Ok(back.max_abs_diff(w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::beam_splitter;
    use crate::linalg::c;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn identity_profile_is_plane_wave() {
        let basis = NormalModeBasis::new(UnitaryScatteringMatrix::identity(2), vec![0.5, -1.0]).unwrap();
        for &x in &[-3.0, 0.5, 2.0] {
            let p = profile(&basis, 0, 0, x, 1.7).unwrap();
            assert!((p - (I * (1.7 * (x - 0.5))).exp()).norm() < 1e-15);
            assert_eq!(profile(&basis, 0, 1, x, 1.7).unwrap(), c(0., 0.));
        }
    }

    #[test]
    fn beam_splitter_downstream_profile() {
        let (theta, phi) = (0.9, 0.4);
        let basis = NormalModeBasis::centered(beam_splitter(theta, phi));
        let (x, w) = (1.3, 2.1);
        let p = profile(&basis, 0, 1, x, w).unwrap();
        let expected = -C64::from_polar(theta.sin(), -phi) * (I * (w * x)).exp();
        assert!((p - expected).norm() < 1e-15);
        assert_eq!(profile(&basis, 0, 1, -x, w).unwrap(), c(0., 0.));
    }

    #[test]
    fn value_on_device_is_two_sided_mean() {
        let basis = NormalModeBasis::centered(beam_splitter(0.3, 0.0));
        let p = profile(&basis, 0, 0, 0.0, 5.0).unwrap();
        assert!((p - c((1.0 + 0.3_f64.cos()) / 2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn perfect_mirror_modes_live_on_opposite_sides() {
        let basis = NormalModeBasis::centered(beam_splitter(FRAC_PI_2, 0.6));
        // mode 0 = forward, mode 1 = backward; normal mode 0 sits left of the
        // mirror, normal mode 1 right of it
        for &x in &[-2.0, -0.1] {
            assert_eq!(profile(&basis, 0, 1, x, 1.0).unwrap(), c(0., 0.));
            assert_eq!(profile(&basis, 1, 0, x, 1.0).unwrap(), c(0., 0.));
        }
        for &x in &[0.1, 2.0] {
            assert!(profile(&basis, 0, 0, x, 1.0).unwrap().norm() < 1e-15);
            assert!(profile(&basis, 1, 1, x, 1.0).unwrap().norm() < 1e-15);
        }
    }

    #[test]
    fn index_errors() {
        let basis = NormalModeBasis::centered(beam_splitter(0.3, 0.0));
        assert!(matches!(profile(&basis, 2, 0, 0.0, 0.0), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(profile(&basis, 0, 5, 0.0, 0.0), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn truncated_envelope_is_rejected() {
        let grid = Grid::new(-5.0, 0.1, 101).unwrap();
        let w = Wavepacket::from_fn(grid, vec![0.0], |_, x| c((-x * x / 8.0).exp(), 0.0)).unwrap();
        let basis = NormalModeBasis::centered(UnitaryScatteringMatrix::identity(1));
        let omega = OmegaGrid::reciprocal(&grid);
        assert!(matches!(
            decompose_wavepacket(&basis, &w, &omega),
            Err(Error::GridOverflow { .. })
        ));
    }
}
