//! Shift-and-scatter propagation of classical envelopes through a device.
//!
//! Every mode carries its own coordinate `x_n` with the device sitting at
//! `x_n = offset_n`. After a time `tau`, the field at displacement `y` from
//! the device is the field that was at `y - tau`, multiplied by `S` when
//! `0 < y < tau` (it crossed the device) and left alone otherwise. The two
//! window edges get `(I + S) / 2`.

use serde::{Deserialize, Serialize};

use crate::device::UnitaryScatteringMatrix;
use crate::error::{Error, Result};
use crate::json::JsonComplex;
use crate::linalg::{CMatrix, C64};

/// Amplitudes below this fraction of the peak are not counted as support.
const SUPPORT_THRESHOLD: f64 = 1e-12;

/// Uniform position grid `x_j = x_min + j * dx`, `j = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub x_min: f64,
    pub dx: f64,
    pub len: usize,
}

impl Grid {
    pub fn new(x_min: f64, dx: f64, len: usize) -> Result<Self> {
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(Error::InvalidGrid(format!("dx must be positive, got {dx}")));
        }
        if len < 2 || !x_min.is_finite() {
            return Err(Error::InvalidGrid("need at least two finite grid points".into()));
        }
        Ok(Grid { x_min, dx, len })
    }

    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.len - 1)
    }

    pub fn positions(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(|j| self.x(j))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationWindow {
    pub t0: f64,
    pub tau: f64,
}

impl PropagationWindow {
    pub fn new(t0: f64, tau: f64) -> Result<Self> {
        if !(tau >= 0.0) || !tau.is_finite() || !t0.is_finite() {
            return Err(Error::config("tau", format!("must be finite and >= 0, got {tau}")));
        }
        Ok(PropagationWindow { t0, tau })
    }
}

/// Per-mode complex envelopes sampled on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavepacket {
    grid: Grid,
    offsets: Vec<f64>,
    envelopes: Vec<Vec<C64>>,
}

impl Wavepacket {
    pub fn new(grid: Grid, offsets: Vec<f64>, envelopes: Vec<Vec<C64>>) -> Result<Self> {
        if envelopes.is_empty() {
            return Err(Error::InvalidGrid("wavepacket needs at least one mode".into()));
        }
        if offsets.len() != envelopes.len() {
            return Err(Error::DimensionMismatch {
                expected: envelopes.len(),
                found: offsets.len(),
                context: "device offsets per mode",
            });
        }
        if let Some(bad) = envelopes.iter().find(|e| e.len() != grid.len) {
            return Err(Error::DimensionMismatch {
                expected: grid.len,
                found: bad.len(),
                context: "envelope length vs grid",
            });
        }
        if envelopes.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidGrid("envelope contains non-finite samples".into()));
        }
        if offsets.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidGrid("device offsets must be finite".into()));
        }
        Ok(Wavepacket {
            grid,
            offsets,
            envelopes,
        })
    }

    /// Samples `f(mode, x)` on the grid.
    pub fn from_fn(
        grid: Grid,
        offsets: Vec<f64>,
        mut f: impl FnMut(usize, f64) -> C64,
    ) -> Result<Self> {
        let envelopes = (0..offsets.len())
            .map(|m| grid.positions().map(|x| f(m, x)).collect())
            .collect();
        Self::new(grid, offsets, envelopes)
    }

    pub fn mode_count(&self) -> usize {
        self.envelopes.len()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn envelope(&self, mode: usize) -> &[C64] {
        &self.envelopes[mode]
    }

    pub fn envelopes(&self) -> &[Vec<C64>] {
        &self.envelopes
    }

    /// `sum_modes sum_grid |amp|^2 dx`
    pub fn norm_sqr(&self) -> f64 {
        self.envelopes
            .iter()
            .flatten()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            * self.grid.dx
    }

    /// Largest sample-wise deviation between two packets on the same grid.
    pub fn max_abs_diff(&self, other: &Wavepacket) -> f64 {
        self.envelopes
            .iter()
            .flatten()
            .zip(other.envelopes.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    fn peak(&self) -> f64 {
        self.envelopes
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Integer grid offsets `(offset_n - offset_0) / dx`; cross-mode scattering
    /// needs all device positions on a common sub-lattice.
    fn offset_steps(&self) -> Result<Vec<i64>> {
        let base = self.offsets[0];
        self.offsets
            .iter()
            .map(|&o| {
                let q = (o - base) / self.grid.dx;
                let r = q.round();
                if (q - r).abs() > 1e-9 * (1.0 + q.abs()) {
                    Err(Error::InvalidGrid(format!(
                        "device offset {o} is not aligned with offset {base} on grid spacing {}",
                        self.grid.dx
                    )))
                } else {
                    Ok(r as i64)
                }
            })
            .collect()
    }
}

/// Device weight for displacement `y` after a shift of `steps` samples:
/// 0 outside the window, 1/2 on the single sample nearest each edge, 1 inside.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Window {
    Outside,
    Edge,
    Inside,
}

fn classify(y: f64, tau: f64, dx: f64) -> Window {
    let half = 0.5 * dx;
    let near = |edge: f64| y - edge > -half && y - edge <= half;
    if near(0.0) || near(tau) {
        Window::Edge
    } else if y > half && y <= tau - half {
        Window::Inside
    } else {
        Window::Outside
    }
}

/// Propagates `w` through the device `s` for `window.tau`.
///
/// `tau` is snapped to the nearest whole number of grid steps.
pub fn propagate(
    w: &Wavepacket,
    s: &UnitaryScatteringMatrix,
    window: PropagationWindow,
) -> Result<Wavepacket> {
    let n = w.mode_count();
    if s.n_modes() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: s.n_modes(),
            context: "scattering matrix size vs wavepacket modes",
        });
    }
    let grid = w.grid;
    let steps_f = (window.tau / grid.dx).round();
    let tau = steps_f * grid.dx;
    if (tau - window.tau).abs() > grid.dx / 100.0 {
        log::warn!(
            "tau = {} rounded to {} ({} grid steps of {})",
            window.tau,
            tau,
            steps_f,
            grid.dx
        );
    }
    if steps_f == 0.0 {
        return Ok(w.clone());
    }
    let steps = steps_f as i64;
    let offset_steps = w.offset_steps()?;
    let len = grid.len as i64;

    let identity = CMatrix::identity(n, n);
    let edge = (&identity + s.matrix()) * C64::new(0.5, 0.0);
    let weight = |y: f64| match classify(y, tau, grid.dx) {
        Window::Outside => None,
        Window::Edge => Some(&edge),
        Window::Inside => Some(s.matrix()),
    };

    check_overflow(w, s, &offset_steps, steps, tau, &weight)?;

    let mut out = vec![vec![C64::new(0.0, 0.0); grid.len]; n];
    for (target, out_env) in out.iter_mut().enumerate() {
        for (j, slot) in out_env.iter_mut().enumerate() {
            let y = grid.x(j) - w.offsets[target];
            let source = |mode: usize| -> C64 {
                let idx = j as i64 - steps + offset_steps[mode] - offset_steps[target];
                if (0..len).contains(&idx) {
                    w.envelopes[mode][idx as usize]
                } else {
                    C64::new(0.0, 0.0)
                }
            };
            *slot = match weight(y) {
                None => source(target),
                Some(m) => (0..n).map(|mode| m[(target, mode)] * source(mode)).sum(),
            };
        }
    }
    Wavepacket::new(grid, w.offsets.clone(), out)
}

fn check_overflow<'a>(
    w: &Wavepacket,
    s: &UnitaryScatteringMatrix,
    offset_steps: &[i64],
    steps: i64,
    tau: f64,
    weight: &impl Fn(f64) -> Option<&'a CMatrix>,
) -> Result<()> {
    let threshold = SUPPORT_THRESHOLD * w.peak();
    let len = w.grid.len as i64;
    for (mode, env) in w.envelopes.iter().enumerate() {
        for (i, z) in env.iter().enumerate() {
            if z.norm() <= threshold {
                continue;
            }
            let dest = i as i64 + steps;
            let overflow = |index: i64, target: usize| {
                if (0..len).contains(&index) {
                    Ok(())
                } else {
                    Err(Error::GridOverflow {
                        context: format!(
                            "sample {i} of mode {mode} shifted by tau = {tau} lands at index {index} of mode {target} (grid has {len} points)"
                        ),
                    })
                }
            };
            overflow(dest, mode)?;
            let y = w.grid.x_min + dest as f64 * w.grid.dx - w.offsets[mode];
            if weight(y).is_some() {
                for target in 0..w.mode_count() {
                    if target != mode && s.get(target, mode).norm() > 0.0 {
                        overflow(dest + offset_steps[target] - offset_steps[mode], target)?;
                    }
                }
            }
        }
    }
    Ok(())
}

/// JSON form of a [`Wavepacket`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WavepacketJson {
    pub x_min: f64,
    pub dx: f64,
    pub offsets: Vec<f64>,
    pub envelopes: Vec<Vec<JsonComplex>>,
}

impl WavepacketJson {
    pub fn parse(&self) -> Result<Wavepacket> {
        let len = self.envelopes.first().map_or(0, Vec::len);
        let grid = Grid::new(self.x_min, self.dx, len)?;
        let envelopes = self
            .envelopes
            .iter()
            .map(|e| e.iter().map(|&z| z.into()).collect())
            .collect();
        Wavepacket::new(grid, self.offsets.clone(), envelopes)
    }
}

impl From<&Wavepacket> for WavepacketJson {
    fn from(w: &Wavepacket) -> Self {
        WavepacketJson {
            x_min: w.grid.x_min,
            dx: w.grid.dx,
            offsets: w.offsets.clone(),
            envelopes: w
                .envelopes
                .iter()
                .map(|e| e.iter().map(|&z| z.into()).collect())
                .collect(),
        }
    }
}
