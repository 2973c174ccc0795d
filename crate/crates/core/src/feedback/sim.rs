//! Time stepping of the emitter + mirror chain.
//!
//! Chain layout: site 0 is the emitter, followed by the time bins in reverse
//! time order (newest first). The chain starts with `2 n_d` vacuum bins so
//! that the delayed bin for step `k` always exists; bin `j` sits at position
//! `1 + k - j` after step `k` inserted bin `k`.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

use super::config::{FeedbackConfig, InitialState};
use super::gates::{bin_number, build_gate, sigma, GateSites};
use super::mps::{CenterSide, MatrixProductState, Truncation};

/// Per-sample observables; `t` in units of `1/gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeedbackSample {
    pub t: f64,
    pub abs_eps: f64,
    pub pop: f64,
    pub discarded_weight: f64,
    pub max_bond: usize,
}

/// Photon-number bookkeeping at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExcitationCheck {
    pub t: f64,
    pub norm: f64,
    pub emitter: f64,
    pub photons: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeedbackRun {
    pub samples: Vec<FeedbackSample>,
    pub delay_bins: usize,
    pub delay_residual: f64,
    pub steps: usize,
    /// Largest relative norm loss of a single truncation before renormalising.
    pub max_norm_deficit: f64,
    pub excitation_checks: Vec<ExcitationCheck>,
}

impl FeedbackRun {
    pub fn final_sample(&self) -> &FeedbackSample {
        self.samples.last().expect("a run always has the t = 0 sample")
    }

    /// `|eps|` at the sample closest to `t`.
    pub fn abs_eps_at(&self, t: f64) -> f64 {
        self.samples
            .iter()
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
            .map(|s| s.abs_eps)
            .unwrap_or(0.0)
    }

    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "t,abs_eps,pop,discarded_weight,max_bond")?;
        for s in &self.samples {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{}",
                s.t, s.abs_eps, s.pop, s.discarded_weight, s.max_bond
            )?;
        }
        Ok(())
    }
}

/// Extra work done during a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Contract the whole chain every `n` steps (and at the end) to record
    /// norm and total excitation number; `None` skips this.
    pub excitation_stride: Option<usize>,
}

/// Emitter in its initial state followed by `2 n_d` vacuum bins.
pub fn initial_state(config: &FeedbackConfig) -> Result<MatrixProductState> {
    config.validate()?;
    let emitter = match config.initial {
        InitialState::Excited => 1,
        InitialState::Ground => 0,
    };
    let bin = config.bin_dim * config.bin_dim;
    let mut sites = vec![(2, emitter)];
    sites.extend(std::iter::repeat_n((bin, 0), 2 * config.delay_bins()));
    MatrixProductState::product(&sites)
}

fn truncation(config: &FeedbackConfig) -> Truncation {
    Truncation {
        tol: config.schmidt_tol,
        bond_cap: config.bond_cap,
    }
}

/// Advances the chain by step `k` (from `k dt` to `(k + 1) dt`). Leaves the
/// orthogonality center on the emitter.
pub fn step(mps: &mut MatrixProductState, config: &FeedbackConfig, k: usize) -> Result<()> {
    let n_d = config.delay_bins();
    let bin = config.bin_dim * config.bin_dim;
    let expected = 1 + 2 * n_d + k;
    if mps.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: mps.len(),
            context: "chain length before step",
        });
    }
    let trunc = truncation(config);
    mps.move_center(0);
    mps.insert_product_site(1, bin, 0);
    let gate = build_gate(config, k)?;
    match gate.sites {
        GateSites::EmitterAndBin => {
            mps.apply_gate(0, 2, &gate.unitary, trunc, CenterSide::Left)?;
        }
        GateSites::EmitterBinAndDelayed => {
            let delayed = 1 + 2 * n_d;
            // Bring the delayed bin next to the new bin ...
            mps.move_center(delayed - 1);
            for i in (2..delayed).rev() {
                mps.swap(i, trunc, CenterSide::Left)?;
            }
            mps.apply_gate(0, 3, &gate.unitary, trunc, CenterSide::Right)?;
            // ... and back to its place in the time ordering.
            for i in 2..delayed {
                mps.swap(i, trunc, CenterSide::Right)?;
            }
            mps.move_center(0);
        }
    }
    Ok(())
}

fn observe(mps: &MatrixProductState, t: f64) -> FeedbackSample {
    debug_assert_eq!(mps.center(), 0);
    let s = sigma();
    let pop = mps.local_expectation(&(s.adjoint() * &s)).re;
    FeedbackSample {
        t,
        abs_eps: pop.max(0.0).sqrt(),
        pop,
        discarded_weight: mps.discarded_weight(),
        max_bond: mps.max_bond(),
    }
}

fn excitation_check(mps: &MatrixProductState, t: f64, config: &FeedbackConfig) -> ExcitationCheck {
    let s = sigma();
    let emitter_op = s.adjoint() * &s;
    let number: CMatrix = bin_number(config.bin_dim);
    let (norm, photons) = mps.norm_and_sum(|i| if i == 0 { None } else { Some(&number) });
    let (_, emitter) = mps.norm_and_sum(|i| if i == 0 { Some(&emitter_op) } else { None });
    ExcitationCheck {
        t,
        norm,
        emitter: emitter.re,
        photons: photons.re,
    }
}

/// Runs from `t = 0` to `t_end`, sampling after every step.
pub fn run(config: &FeedbackConfig) -> Result<FeedbackRun> {
    run_with(config, RunOptions::default())
}

pub fn run_with(config: &FeedbackConfig, options: RunOptions) -> Result<FeedbackRun> {
    let mut mps = initial_state(config)?;
    let steps = config.n_steps();
    let mut samples = Vec::with_capacity(steps + 1);
    let mut checks = Vec::new();
    samples.push(observe(&mps, 0.0));
    if options.excitation_stride.is_some() {
        checks.push(excitation_check(&mps, 0.0, config));
    }
    for k in 0..steps {
        step(&mut mps, config, k)?;
        let t = (k + 1) as f64 * config.dt;
        samples.push(observe(&mps, t));
        if let Some(stride) = options.excitation_stride {
            if (k + 1) % stride.max(1) == 0 || k + 1 == steps {
                checks.push(excitation_check(&mps, t, config));
            }
        }
        log::debug!(
            "step {k}: pop {:.6} bond {} discarded {:.3e}",
            samples[k + 1].pop,
            samples[k + 1].max_bond,
            samples[k + 1].discarded_weight
        );
    }
    Ok(FeedbackRun {
        samples,
        delay_bins: config.delay_bins(),
        delay_residual: config.delay_residual(),
        steps,
        max_norm_deficit: mps.max_norm_deficit(),
        excitation_checks: checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_decay_before_the_echo() {
        let config = FeedbackConfig {
            t_end: 3.0,
            ..FeedbackConfig::default()
        };
        let run = run(&config).unwrap();
        // Per step the emitter keeps cos^2(sqrt(dt)) of its population.
        let per_step = (config.dt.sqrt()).cos().powi(2);
        for (k, s) in run.samples.iter().enumerate().take(81) {
            assert!((s.pop - per_step.powi(k as i32)).abs() < 1e-12, "k = {k}");
        }
        assert!((run.abs_eps_at(2.0) - (-1.0_f64).exp()).abs() < 0.01);
        assert_eq!(run.delay_bins, 40);
    }

    #[test]
    fn ground_state_stays_dark() {
        let config = FeedbackConfig {
            initial: InitialState::Ground,
            t_end: 4.5,
            ..FeedbackConfig::default()
        };
        let run = run(&config).unwrap();
        assert!(run.samples.iter().all(|s| s.pop.abs() < 1e-14));
    }

    #[test]
    fn excitation_is_conserved() {
        let config = FeedbackConfig {
            t_end: 6.0,
            theta: 1.0,
            ..FeedbackConfig::default()
        };
        let run = run_with(&config, RunOptions { excitation_stride: Some(30) }).unwrap();
        assert!(run.excitation_checks.len() >= 4);
        let bound = 2.0 * run.final_sample().discarded_weight + 1e-10;
        for c in &run.excitation_checks {
            assert!((c.norm - 1.0).abs() < 1e-10);
            assert!((c.emitter + c.photons - 1.0).abs() <= bound, "{c:?}");
            assert!((c.emitter - run.abs_eps_at(c.t).powi(2)).abs() < 1e-10);
        }
    }

    #[test]
    fn step_checks_chain_length() {
        let config = FeedbackConfig::default();
        let mut mps = initial_state(&config).unwrap();
        assert!(step(&mut mps, &config, 1).is_err());
    }

    #[test]
    fn csv_has_expected_columns() {
        let config = FeedbackConfig {
            t_end: 0.1,
            ..FeedbackConfig::default()
        };
        let mut buf = Vec::new();
        run(&config).unwrap().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,abs_eps,pop,discarded_weight,max_bond"));
        assert_eq!(lines.count(), 3);
    }
}
