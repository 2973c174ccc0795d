use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::device::beam_splitter;
use crate::error::{Error, Result};
use crate::json::JsonComplex;
use crate::linalg::C64;

pub const DEFAULT_BOND_CAP: usize = 256;
/// Environment variable that overrides [`FeedbackConfig::bond_cap`].
pub const BOND_CAP_ENV: &str = "POINTCOUPLE_BOND_CAP";

/// A drive amplitude that must be real. Accepts a plain number or a
/// `{"re", "im"}` object with zero imaginary part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AmplitudeRepr", into = "f64")]
pub struct RealAmplitude(pub f64);

#[derive(Deserialize)]
#[serde(untagged)]
enum AmplitudeRepr {
    Real(f64),
    Complex(JsonComplex),
}

impl TryFrom<AmplitudeRepr> for RealAmplitude {
    type Error = String;

    fn try_from(value: AmplitudeRepr) -> std::result::Result<Self, String> {
        match value {
            AmplitudeRepr::Real(x) => Ok(RealAmplitude(x)),
            AmplitudeRepr::Complex(z) if z.im == 0.0 => Ok(RealAmplitude(z.re)),
            AmplitudeRepr::Complex(z) => Err(format!(
                "complex drive amplitude {}{:+}i is not supported; the drive couples through a real sigma_x",
                z.re, z.im
            )),
        }
    }
}

impl From<RealAmplitude> for f64 {
    fn from(a: RealAmplitude) -> f64 {
        a.0
    }
}

/// Classical drive `Omega(t)` on the emitter, in units of the total decay rate.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Drive {
    #[default]
    None,
    /// `omega0 * exp(-alpha t)` for `t >= 0`.
    Exponential { omega0: RealAmplitude, alpha: f64 },
    /// Piecewise-linear interpolation of `(t, Omega)` samples, zero outside.
    Table { samples: Vec<(f64, RealAmplitude)> },
}

impl Drive {
    pub fn amplitude(&self, t: f64) -> f64 {
        match self {
            Drive::None => 0.0,
            Drive::Exponential { omega0, alpha } => {
                if t < 0.0 {
                    0.0
                } else {
                    omega0.0 * (-alpha * t).exp()
                }
            }
            Drive::Table { samples } => {
                let (first, last) = match (samples.first(), samples.last()) {
                    (Some(f), Some(l)) => (f, l),
                    _ => return 0.0,
                };
                if t < first.0 || t > last.0 {
                    return 0.0;
                }
                let i = samples.partition_point(|s| s.0 <= t);
                if i == 0 {
                    return first.1 .0;
                }
                if i == samples.len() {
                    return last.1 .0;
                }
                let (t0, a0) = (samples[i - 1].0, samples[i - 1].1 .0);
                let (t1, a1) = (samples[i].0, samples[i].1 .0);
                a0 + (a1 - a0) * (t - t0) / (t1 - t0)
            }
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, Drive::None)
    }

    fn validate(&self) -> Result<()> {
        match self {
            Drive::None => Ok(()),
            Drive::Exponential { omega0, alpha } => {
                if !omega0.0.is_finite() {
                    return Err(Error::config("drive.omega0", "must be finite"));
                }
                if !alpha.is_finite() || *alpha < 0.0 {
                    return Err(Error::config("drive.alpha", "must be finite and >= 0"));
                }
                Ok(())
            }
            Drive::Table { samples } => {
                if samples.is_empty() {
                    return Err(Error::config("drive.samples", "table is empty"));
                }
                if samples.iter().any(|s| !s.0.is_finite() || !s.1 .0.is_finite()) {
                    return Err(Error::config("drive.samples", "entries must be finite"));
                }
                if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::config("drive.samples", "times must be strictly increasing"));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    #[default]
    Excited,
    Ground,
}

/// Which waveguide direction is port 1 of the mirror's beam-splitter matrix.
///
/// With `BackwardFirst` (the default) the mirror Hamiltonian reads
/// `2i tan(theta/2) e^{i phi} a_-^dag a_+ + h.c.`, so light coming back from
/// the mirror picks up `S[+, -] = -sin(theta) e^{-i phi}`; an ideal mirror
/// with `phi = 0` and `omega0 t_d = pi` then traps part of the excitation.
/// `ForwardFirst` uses `S[+, -] = sin(theta) e^{i phi}` instead, which is the
/// same mirror with `phi -> pi - phi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MirrorPortOrder {
    #[default]
    BackwardFirst,
    ForwardFirst,
}

impl MirrorPortOrder {
    /// `(transmission, reflection)` amplitudes into the forward mode:
    /// `S[+, +]` and `S[+, -]` of the mirror.
    pub fn amplitudes(self, theta: f64, phi: f64) -> (C64, C64) {
        let s = beam_splitter(theta, phi);
        let (fwd, bwd) = match self {
            MirrorPortOrder::BackwardFirst => (1, 0),
            MirrorPortOrder::ForwardFirst => (0, 1),
        };
        (s.get(fwd, fwd), s.get(fwd, bwd))
    }
}

fn default_bin_dim() -> usize {
    2
}

fn default_bond_cap() -> usize {
    DEFAULT_BOND_CAP
}

/// Emitter in front of a mirror. Rates are in units of the total decay rate
/// `gamma = gamma_plus + gamma_minus`, times in units of `1/gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackConfig {
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    #[serde(default)]
    pub delta_e: f64,
    pub omega0_td: f64,
    pub gamma_td: f64,
    pub theta: f64,
    pub phi: f64,
    #[serde(default)]
    pub drive: Drive,
    pub dt: f64,
    pub schmidt_tol: f64,
    #[serde(default = "default_bin_dim")]
    pub bin_dim: usize,
    pub t_end: f64,
    #[serde(default)]
    pub initial: InitialState,
    #[serde(default)]
    pub mirror_port_order: MirrorPortOrder,
    #[serde(default = "default_bond_cap")]
    pub bond_cap: usize,
}

impl Default for FeedbackConfig {
    /// Ideal mirror, `phi = 0`, `omega0 t_d = pi`, `gamma t_d = 2`,
    /// `gamma dt = 0.05`, Schmidt threshold 0.01, two levels per bin
    /// direction, emitter initially excited, horizon `10 / gamma`.
    fn default() -> Self {
        FeedbackConfig {
            gamma_plus: 0.5,
            gamma_minus: 0.5,
            delta_e: 0.0,
            omega0_td: PI,
            gamma_td: 2.0,
            theta: FRAC_PI_2,
            phi: 0.0,
            drive: Drive::None,
            dt: 0.05,
            schmidt_tol: 0.01,
            bin_dim: 2,
            t_end: 10.0,
            initial: InitialState::Excited,
            mirror_port_order: MirrorPortOrder::BackwardFirst,
            bond_cap: DEFAULT_BOND_CAP,
        }
    }
}

impl FeedbackConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("gamma_plus", self.gamma_plus),
            ("gamma_minus", self.gamma_minus),
            ("delta_e", self.delta_e),
            ("omega0_td", self.omega0_td),
            ("gamma_td", self.gamma_td),
            ("theta", self.theta),
            ("phi", self.phi),
            ("dt", self.dt),
            ("t_end", self.t_end),
        ];
        for (field, v) in finite {
            if !v.is_finite() {
                return Err(Error::config(field, format!("must be finite, got {v}")));
            }
        }
        if self.gamma_plus < 0.0 {
            return Err(Error::config("gamma_plus", "must be >= 0"));
        }
        if self.gamma_minus < 0.0 {
            return Err(Error::config("gamma_minus", "must be >= 0"));
        }
        let total = self.gamma_plus + self.gamma_minus;
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::config(
                "gamma_plus",
                format!("gamma_plus + gamma_minus must equal 1 (rates are in units of gamma), got {total}"),
            ));
        }
        if self.dt <= 0.0 {
            return Err(Error::config("dt", "must be > 0"));
        }
        if !(self.schmidt_tol > 0.0 && self.schmidt_tol < 1.0) {
            return Err(Error::config("schmidt_tol", "must lie in (0, 1)"));
        }
        if self.bin_dim < 2 {
            return Err(Error::config("bin_dim", "must be >= 2"));
        }
        if self.gamma_td <= 0.0 {
            return Err(Error::config("gamma_td", "must be > 0"));
        }
        if self.delay_bins() < 1 {
            return Err(Error::config(
                "dt",
                format!("delay gamma_td = {} is shorter than one time bin", self.gamma_td),
            ));
        }
        if self.t_end <= 0.0 {
            return Err(Error::config("t_end", "must be > 0"));
        }
        if self.bond_cap == 0 {
            return Err(Error::config("bond_cap", "must be >= 1"));
        }
        self.drive.validate()
    }

    /// `n_d = floor(t_d / dt)`, robust to the representation error of `dt`.
    pub fn delay_bins(&self) -> usize {
        let ratio = self.gamma_td / self.dt;
        if !ratio.is_finite() || ratio < 0.0 {
            return 0;
        }
        (ratio * (1.0 + 1e-12)).floor() as usize
    }

    /// `t_d - n_d dt`: how much delay is lost to the time-bin grid.
    pub fn delay_residual(&self) -> f64 {
        self.gamma_td - self.delay_bins() as f64 * self.dt
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    /// Applies `POINTCOUPLE_BOND_CAP` when set.
    pub fn with_env_overrides(mut self) -> Result<Self> {
        if let Ok(value) = std::env::var(BOND_CAP_ENV) {
            self.bond_cap = value.trim().parse().map_err(|_| {
                Error::config(BOND_CAP_ENV, format!("expected a positive integer, got {value:?}"))
            })?;
        }
        Ok(self)
    }
}
