//! Point-coupled devices on chiral waveguides: Cayley-transform device
//! algebra, wavepacket and Fock-state scattering, normal modes, and
//! time-delayed feedback from a mirror.

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dde;
pub mod device;
pub mod error;
pub mod feedback;
pub mod fock;
pub mod json;
pub mod linalg;
pub mod normal_modes;
pub mod propagation;

pub use device::{
    beam_splitter, circulator, coupling_from_scattering, phase_shifter, scattering_from_coupling, CouplingMatrix,
    Device, DeviceDescriptor, UnitaryScatteringMatrix,
};
pub use error::{Error, Result};
