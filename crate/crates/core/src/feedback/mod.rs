//! Emitter in front of a (partially reflecting) mirror, simulated with a
//! time-bin matrix product state.

mod config;
mod gates;
mod mps;
mod sim;

pub use config::{
    Drive, FeedbackConfig, InitialState, MirrorPortOrder, RealAmplitude, BOND_CAP_ENV, DEFAULT_BOND_CAP,
};
pub use gates::{bin_number, bin_operators, build_gate, rotating_frame_coupling, sigma, step_hamiltonian, BinGate, GateSites, StepCoupling};
pub use mps::{CenterSide, MatrixProductState, SiteTensor, Truncation};
pub use sim::{initial_state, run, run_with, step, ExcitationCheck, FeedbackRun, FeedbackSample, RunOptions};
