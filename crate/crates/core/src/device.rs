//! Classical scattering matrices, point-coupling matrices and the Cayley
//! transform between them.
//!
//! A device acting on `N` propagating modes that all couple at a single
//! point is described either by its unitary scattering matrix `S` or by the
//! Hermitian coupling matrix `V` of the point interaction. The two are
//! related by
//!
//! ```text
//! S = (I - iV/2)(I + iV/2)^-1          V = -U diag(2 tan(phi/2)) U^dag
//! ```
//!
//! where `S = U diag(e^{i phi}) U^dag`. The inverse map is singular when an
//! eigenphase reaches `pi`, so [`coupling_from_scattering`] refuses devices
//! whose spectrum comes within a guard band of `-1`.

use std::f64::consts::PI;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json::{matrix_from_json, matrix_to_json, JsonComplex};
use crate::linalg::{self, c, CMatrix, C64, I};

/// Construction tolerance for unitarity and Hermiticity checks (Frobenius).
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
/// Minimum distance (rad) between any eigenphase and `pi`.
pub const DEFAULT_EIGENPHASE_GUARD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub unitarity: f64,
    pub hermiticity: f64,
    pub eigenphase_guard: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            unitarity: DEFAULT_TOLERANCE,
            hermiticity: DEFAULT_TOLERANCE,
            eigenphase_guard: DEFAULT_EIGENPHASE_GUARD,
        }
    }
}

fn check_square(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(())
}

/// Unitary `N x N` classical scattering matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryScatteringMatrix(CMatrix);

impl UnitaryScatteringMatrix {
    pub fn new(entries: CMatrix) -> Result<Self> {
        Self::with_tolerance(entries, DEFAULT_TOLERANCE)
    }

    pub fn with_tolerance(entries: CMatrix, tolerance: f64) -> Result<Self> {
        check_square(&entries)?;
        let residual = linalg::unitarity_residual(&entries);
        if !(residual <= tolerance) {
            return Err(Error::NotUnitary {
                residual,
                tolerance,
            });
        }
        Ok(UnitaryScatteringMatrix(entries))
    }

    pub fn identity(n_modes: usize) -> Self {
        UnitaryScatteringMatrix(CMatrix::identity(n_modes, n_modes))
    }

    pub fn n_modes(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    /// Entry `S[out, input]`.
    #[inline]
    pub fn get(&self, out: usize, input: usize) -> C64 {
        self.0[(out, input)]
    }

    /// Device product `self * other`: `other` acts first.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.n_modes() != other.n_modes() {
            return Err(Error::DimensionMismatch {
                expected: self.n_modes(),
                found: other.n_modes(),
                context: "composing scattering matrices",
            });
        }
        Self::with_tolerance(&self.0 * &other.0, 1e-9)
    }
}

/// Hermitian `N x N` matrix of point-coupling strengths.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix(CMatrix);

impl CouplingMatrix {
    pub fn new(entries: CMatrix) -> Result<Self> {
        Self::with_tolerance(entries, DEFAULT_TOLERANCE)
    }

    pub fn with_tolerance(entries: CMatrix, tolerance: f64) -> Result<Self> {
        check_square(&entries)?;
        let residual = linalg::hermiticity_residual(&entries);
        if !(residual <= tolerance) {
            return Err(Error::NotHermitian {
                residual,
                tolerance,
            });
        }
        Ok(CouplingMatrix(entries))
    }

    pub fn zeros(n_modes: usize) -> Self {
        CouplingMatrix(CMatrix::zeros(n_modes, n_modes))
    }

    pub fn n_modes(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }
}

/// `S = U diag(e^{i phi}) U^dag` with phases on the branch `(-pi, pi]`.
#[derive(Debug, Clone)]
pub struct EigenphaseDecomposition {
    pub unitary_basis: CMatrix,
    pub phases: Vec<f64>,
}

impl EigenphaseDecomposition {
    pub fn of(s: &UnitaryScatteringMatrix) -> Result<Self> {
        let (basis, lambda) = linalg::normal_eigen(s.matrix())?;
        let phases = lambda
            .iter()
            .map(|z| {
                let p = z.arg();
                // atan2 returns -pi for (-1, -0.0); keep the branch half-open.
                if p <= -PI {
                    PI
                } else {
                    p
                }
            })
            .collect();
        Ok(EigenphaseDecomposition {
            unitary_basis: basis,
            phases,
        })
    }

    pub fn reconstruct(&self) -> CMatrix {
        let d = DVector::from_iterator(
            self.phases.len(),
            self.phases.iter().map(|&p| (I * p).exp()),
        );
        &self.unitary_basis * CMatrix::from_diagonal(&d) * self.unitary_basis.adjoint()
    }
}

/// `S = (I - iV/2)(I + iV/2)^-1`.
pub fn scattering_from_coupling(v: &CouplingMatrix) -> Result<UnitaryScatteringMatrix> {
    let n = v.n_modes();
    let id = CMatrix::identity(n, n);
    let half = v.matrix() * (I * 0.5);
    let plus = &id + &half;
    let minus = &id - &half;
    // Both factors are functions of V and commute, so S = plus^-1 * minus.
    let s = plus
        .clone()
        .lu()
        .solve(&minus)
        .ok_or_else(|| Error::Numerical("I + iV/2 is singular".into()))?;
    let residual = linalg::frobenius(&(&plus * &s - &minus));
    if residual > 1e-10 * (1.0 + linalg::frobenius(&minus)) {
        return Err(Error::Numerical(format!(
            "Cayley solve residual {residual:.3e} exceeds 1e-10"
        )));
    }
    UnitaryScatteringMatrix::new(s)
}

/// `V = -U diag(2 tan(phi/2)) U^dag` with the default eigenphase guard.
pub fn coupling_from_scattering(s: &UnitaryScatteringMatrix) -> Result<CouplingMatrix> {
    coupling_from_scattering_with(s, &Tolerances::default())
}

pub fn coupling_from_scattering_with(
    s: &UnitaryScatteringMatrix,
    tol: &Tolerances,
) -> Result<CouplingMatrix> {
    let decomposition = EigenphaseDecomposition::of(s)?;
    if let Some(&phase) = decomposition
        .phases
        .iter()
        .find(|p| PI - p.abs() < tol.eigenphase_guard)
    {
        return Err(Error::NonRepresentableDevice {
            phase,
            guard: tol.eigenphase_guard,
        });
    }
    let u = &decomposition.unitary_basis;
    let d = DVector::from_iterator(
        decomposition.phases.len(),
        decomposition.phases.iter().map(|&p| c(-2.0 * (p / 2.0).tan(), 0.0)),
    );
    let v = u * CMatrix::from_diagonal(&d) * u.adjoint();
    // Symmetrise away rounding; the construction is Hermitian in exact arithmetic.
    let v = (&v + v.adjoint()) * c(0.5, 0.0);
    CouplingMatrix::with_tolerance(v, tol.hermiticity.max(DEFAULT_TOLERANCE))
}

/// Single-mode phase shifter `[e^{i phase}]`.
pub fn phase_shifter(phase: f64) -> UnitaryScatteringMatrix {
    UnitaryScatteringMatrix(CMatrix::from_element(1, 1, (I * phase).exp()))
}

/// Two-mode beam splitter
/// `[[cos t, sin t e^{i phi}], [-sin t e^{-i phi}, cos t]]`.
pub fn beam_splitter(theta: f64, phi: f64) -> UnitaryScatteringMatrix {
    let (sin, cos) = theta.sin_cos();
    UnitaryScatteringMatrix(CMatrix::from_row_slice(
        2,
        2,
        &[
            c(cos, 0.0),
            (I * phi).exp() * sin,
            -(I * -phi).exp() * sin,
            c(cos, 0.0),
        ],
    ))
}

/// Three-port circulator as the cyclic permutation `[[0,1,0],[0,0,1],[1,0,0]]`.
pub fn circulator() -> UnitaryScatteringMatrix {
    let one = c(1.0, 0.0);
    let zero = c(0.0, 0.0);
    UnitaryScatteringMatrix(CMatrix::from_row_slice(
        3,
        3,
        &[zero, one, zero, zero, zero, one, one, zero, zero],
    ))
}

/// On-disk device description; exactly one of the two matrices is present.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceDescriptor {
    pub n_modes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scattering_matrix: Option<Vec<Vec<JsonComplex>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling_matrix: Option<Vec<Vec<JsonComplex>>>,
}

/// A parsed device in whichever form it was given.
#[derive(Debug, Clone)]
pub enum Device {
    Scattering(UnitaryScatteringMatrix),
    Coupling(CouplingMatrix),
}

impl Device {
    pub fn scattering(&self) -> Result<UnitaryScatteringMatrix> {
        match self {
            Device::Scattering(s) => Ok(s.clone()),
            Device::Coupling(v) => scattering_from_coupling(v),
        }
    }

    pub fn coupling(&self) -> Result<CouplingMatrix> {
        match self {
            Device::Scattering(s) => coupling_from_scattering(s),
            Device::Coupling(v) => Ok(v.clone()),
        }
    }

    pub fn n_modes(&self) -> usize {
        match self {
            Device::Scattering(s) => s.n_modes(),
            Device::Coupling(v) => v.n_modes(),
        }
    }
}

impl DeviceDescriptor {
    pub fn from_scattering(s: &UnitaryScatteringMatrix) -> Self {
        DeviceDescriptor {
            n_modes: s.n_modes(),
            scattering_matrix: Some(matrix_to_json(s.matrix())),
            coupling_matrix: None,
        }
    }

    pub fn from_coupling(v: &CouplingMatrix) -> Self {
        DeviceDescriptor {
            n_modes: v.n_modes(),
            scattering_matrix: None,
            coupling_matrix: Some(matrix_to_json(v.matrix())),
        }
    }

    pub fn parse(&self) -> Result<Device> {
        let device = match (&self.scattering_matrix, &self.coupling_matrix) {
            (Some(rows), None) => {
                let m = matrix_from_json(rows, "scattering_matrix")?;
                Device::Scattering(UnitaryScatteringMatrix::new(m)?)
            }
            (None, Some(rows)) => {
                let m = matrix_from_json(rows, "coupling_matrix")?;
                Device::Coupling(CouplingMatrix::new(m)?)
            }
            _ => {
                return Err(Error::config(
                    "scattering_matrix/coupling_matrix",
                    "exactly one of the two keys must be present",
                ))
            }
        };
        if device.n_modes() != self.n_modes {
            return Err(Error::config(
                "n_modes",
                format!(
                    "declared {} but the matrix is {}x{}",
                    self.n_modes,
                    device.n_modes(),
                    device.n_modes()
                ),
            ));
        }
        Ok(device)
    }
}
