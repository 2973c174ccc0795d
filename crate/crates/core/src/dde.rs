//! Delay-differential-equation reference for the single-excitation mirror
//! problem, and the MPS convergence sweep built on it.
//!
//! `d eps/dt = -(gamma/2) eps(t) - sqrt(gamma_+ gamma_-) r e^{2 i omega0 t_d} eps(t - 2 t_d)`
//! with `eps = 0` for `t < 0`, where `r` is the mirror's reflection into the
//! forward direction.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feedback::{self, FeedbackConfig, InitialState, MirrorPortOrder};
use crate::linalg::{C64, I};

pub const DEFAULT_DT_ODE: f64 = 1e-3;

/// `|eps(10/gamma)|` for the ideal mirror with `phi = 0`, `omega0 t_d = pi`,
/// `gamma t_d = 2` and `gamma_+ = gamma_-`, as computed by [`solve_dde`] at
/// the default step. Regression value for the bound-state plateau.
pub const IDEAL_MIRROR_PLATEAU: f64 = 0.340038865026160;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DdeParams {
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub t_d: f64,
    pub omega0_td: f64,
    pub theta: f64,
    pub phi: f64,
    pub port_order: MirrorPortOrder,
    pub dt_ode: f64,
    pub t_end: f64,
}

impl DdeParams {
    /// Perfect mirror with the decay split evenly between both directions.
    pub fn ideal_mirror(gamma: f64, t_d: f64, omega0_td: f64, phi: f64, t_end: f64) -> Self {
        DdeParams {
            gamma_plus: gamma / 2.0,
            gamma_minus: gamma / 2.0,
            t_d,
            omega0_td,
            theta: FRAC_PI_2,
            phi,
            port_order: MirrorPortOrder::default(),
            dt_ode: DEFAULT_DT_ODE,
            t_end,
        }
    }

    /// The undriven, initially excited problem described by `config`.
    pub fn from_feedback(config: &FeedbackConfig) -> Self {
        DdeParams {
            gamma_plus: config.gamma_plus,
            gamma_minus: config.gamma_minus,
            t_d: config.gamma_td,
            omega0_td: config.omega0_td,
            theta: config.theta,
            phi: config.phi,
            port_order: config.mirror_port_order,
            dt_ode: DEFAULT_DT_ODE,
            t_end: config.t_end,
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma_plus + self.gamma_minus
    }

    /// Coefficient `kappa` of the delayed term, `eps' = -(gamma/2) eps - kappa eps(t - 2 t_d)`.
    pub fn feedback_coefficient(&self) -> C64 {
        let (_, r) = self.port_order.amplitudes(self.theta, self.phi);
        (self.gamma_plus * self.gamma_minus).sqrt() * r * (I * 2.0 * self.omega0_td).exp()
    }

    fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("gamma_plus", self.gamma_plus),
            ("gamma_minus", self.gamma_minus),
            ("t_d", self.t_d),
            ("omega0_td", self.omega0_td),
            ("theta", self.theta),
            ("phi", self.phi),
            ("dt_ode", self.dt_ode),
            ("t_end", self.t_end),
        ] {
            if !v.is_finite() {
                return Err(Error::config(field, "must be finite"));
            }
        }
        if self.gamma_plus < 0.0 || self.gamma_minus < 0.0 || self.gamma() <= 0.0 {
            return Err(Error::config("gamma_plus", "decay rates must be >= 0 with a positive sum"));
        }
        if self.t_d <= 0.0 {
            return Err(Error::config("t_d", "must be > 0"));
        }
        if self.t_end <= 0.0 {
            return Err(Error::config("t_end", "must be > 0"));
        }
        if self.dt_ode <= 0.0 || self.dt_ode > self.t_d / 10.0 {
            return Err(Error::config("dt_ode", format!("must lie in (0, t_d/10], got {}", self.dt_ode)));
        }
        Ok(())
    }
}

/// `eps` on a uniform grid together with its derivative, so the trace can
/// be evaluated between samples by cubic Hermite interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeTrace {
    pub dt: f64,
    pub values: Vec<C64>,
    pub derivatives: Vec<C64>,
}

fn hermite(h: f64, u: f64, y0: C64, f0: C64, y1: C64, f1: C64) -> C64 {
    let u2 = u * u;
    let u3 = u2 * u;
    y0 * (2.0 * u3 - 3.0 * u2 + 1.0)
        + f0 * (h * (u3 - 2.0 * u2 + u))
        + y1 * (-2.0 * u3 + 3.0 * u2)
        + f1 * (h * (u3 - u2))
}

impl AmplitudeTrace {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn t(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.t(self.values.len() - 1)
    }

    /// `eps(t)`; zero before `t = 0`, clamped to the last sample after the end.
    pub fn value_at(&self, t: f64) -> C64 {
        self.interpolate(t, self.values.len() - 1)
    }

    pub fn abs_at(&self, t: f64) -> f64 {
        self.value_at(t).norm()
    }

    /// Interpolates using samples `0..=last` only.
    fn interpolate(&self, t: f64, last: usize) -> C64 {
        if t < 0.0 {
            return C64::new(0.0, 0.0);
        }
        let x = t / self.dt;
        let i = x.floor() as usize;
        if i >= last {
            return self.values[last];
        }
        let u = x - i as f64;
        if u == 0.0 {
            return self.values[i];
        }
        hermite(
            self.dt,
            u,
            self.values[i],
            self.derivatives[i],
            self.values[i + 1],
            self.derivatives[i + 1],
        )
    }
}

/// Integrates the delay equation with classical RK4 from `eps(0) = 1`.
///
/// The step is shrunk so that `2 t_d` is a whole number of steps; the
/// derivative jump where the echo arrives then falls on a grid point.
pub fn solve_dde(params: &DdeParams) -> Result<AmplitudeTrace> {
    params.validate()?;
    let delay = 2.0 * params.t_d;
    let per_delay = (delay / params.dt_ode).ceil().max(1.0) as usize;
    let h = delay / per_delay as f64;
    let n = (params.t_end / h).ceil() as usize;
    let half_gamma = params.gamma() / 2.0;
    let kappa = params.feedback_coefficient();

    let mut trace = AmplitudeTrace {
        dt: h,
        values: Vec::with_capacity(n + 1),
        derivatives: Vec::with_capacity(n + 1),
    };
    trace.values.push(C64::new(1.0, 0.0));

    // History seen from inside step `i`: samples up to `i` only, and the
    // left limit (zero) at the moment the echo switches on.
    let delayed = |trace: &AmplitudeTrace, i: usize, t: f64| -> C64 {
        let s = t - delay;
        if s < 0.0 || (s == 0.0 && i < per_delay) {
            C64::new(0.0, 0.0)
        } else {
            trace.interpolate(s, i)
        }
    };

    for i in 0..n {
        let t = i as f64 * h;
        let y = trace.values[i];
        let k1 = -half_gamma * y - kappa * delayed(&trace, i, t);
        trace.derivatives.push(k1);
        let mid = delayed(&trace, i, t + 0.5 * h);
        let k2 = -half_gamma * (y + 0.5 * h * k1) - kappa * mid;
        let k3 = -half_gamma * (y + 0.5 * h * k2) - kappa * mid;
        let k4 = -half_gamma * (y + h * k3) - kappa * delayed(&trace, i, t + h);
        trace.values.push(y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    }
    let last = trace.values[n];
    let end_delayed = delayed(&trace, n, n as f64 * h);
    trace.derivatives.push(-half_gamma * last - kappa * end_delayed);
    Ok(trace)
}

/// Which MPS discretisations to compare against the delay equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub dts: Vec<f64>,
    pub tols: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub dt: f64,
    pub schmidt_tol: f64,
    /// `max_k | |eps_mps(t_k)| - |eps_dde(t_k)| |`.
    pub max_deviation: f64,
    pub final_abs_eps: f64,
    pub oracle_final_abs_eps: f64,
    pub max_bond: usize,
    pub discarded_weight: f64,
    pub delay_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// For every tolerance, the deviation does not grow as `dt` shrinks.
    pub monotone_in_dt: bool,
    /// For every `dt`, the deviation does not grow as the tolerance shrinks.
    pub monotone_in_tol: bool,
}

impl SweepTable {
    pub fn write_csv(&self, mut out: impl std::io::Write) -> std::io::Result<()> {
        writeln!(
            out,
            "dt,schmidt_tol,max_deviation,final_abs_eps,oracle_final_abs_eps,max_bond,discarded_weight,delay_residual"
        )?;
        for r in &self.rows {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e},{:.16e}",
                r.dt,
                r.schmidt_tol,
                r.max_deviation,
                r.final_abs_eps,
                r.oracle_final_abs_eps,
                r.max_bond,
                r.discarded_weight,
                r.delay_residual
            )?;
        }
        Ok(())
    }
}

fn non_increasing(values: impl Iterator<Item = f64>) -> bool {
    let v: Vec<f64> = values.collect();
    v.windows(2).all(|w| w[1] <= w[0] + 1e-12)
}

/// Runs the MPS for every `(dt, tol)` pair and compares `|eps|` with the
/// delay equation. The base configuration must describe an ideal mirror.
pub fn convergence_sweep(base: &FeedbackConfig, dts: &[f64], tols: &[f64]) -> Result<SweepTable> {
    if (base.theta - FRAC_PI_2).abs() > 1e-12 {
        return Err(Error::config("theta", "the convergence sweep needs an ideal mirror (theta = pi/2)"));
    }
    if !base.drive.is_none() || base.initial != InitialState::Excited {
        return Err(Error::config(
            "drive",
            "the delay equation covers the undriven, initially excited emitter only",
        ));
    }
    if dts.is_empty() || tols.is_empty() {
        return Err(Error::config("sweep", "dts and tols must both be non-empty"));
    }
    let oracle = solve_dde(&DdeParams::from_feedback(base))?;
    let mut grid = Vec::new();
    for &dt in dts {
        for &tol in tols {
            let config = FeedbackConfig {
                dt,
                schmidt_tol: tol,
                ..base.clone()
            };
            config.validate()?;
            grid.push(config);
        }
    }
    let rows = grid
        .par_iter()
        .map(|config| {
            let run = feedback::run(config)?;
            let max_deviation = run
                .samples
                .iter()
                .map(|s| (s.abs_eps - oracle.abs_at(s.t)).abs())
                .fold(0.0, f64::max);
            let last = run.final_sample();
            Ok(SweepRow {
                dt: config.dt,
                schmidt_tol: config.schmidt_tol,
                max_deviation,
                final_abs_eps: last.abs_eps,
                oracle_final_abs_eps: oracle.abs_at(last.t),
                max_bond: run.samples.iter().map(|s| s.max_bond).max().unwrap_or(1),
                discarded_weight: last.discarded_weight,
                delay_residual: run.delay_residual,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let by_dt_desc = |tol: f64| {
        let mut v: Vec<&SweepRow> = rows.iter().filter(|r| r.schmidt_tol == tol).collect();
        v.sort_by(|a, b| b.dt.total_cmp(&a.dt));
        non_increasing(v.into_iter().map(|r| r.max_deviation))
    };
    let by_tol_desc = |dt: f64| {
        let mut v: Vec<&SweepRow> = rows.iter().filter(|r| r.dt == dt).collect();
        v.sort_by(|a, b| b.schmidt_tol.total_cmp(&a.schmidt_tol));
        non_increasing(v.into_iter().map(|r| r.max_deviation))
    };
    let monotone_in_dt = tols.iter().all(|&t| by_dt_desc(t));
    let monotone_in_tol = dts.iter().all(|&d| by_tol_desc(d));
    Ok(SweepTable {
        rows,
        monotone_in_dt,
        monotone_in_tol,
    })
}
