// Normal modes of a mirror coupled at two points, and a decompose /
// reconstruct roundtrip of a wavepacket through a beam splitter.
//
// `cargo run --example normal_mode_profiles`

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use pointcouple::device::beam_splitter;
use pointcouple::linalg::C64;
use pointcouple::normal_modes::{coupling_coefficient, profile, roundtrip_error, NormalModeBasis, OmegaGrid};
use pointcouple::propagation::{Grid, Wavepacket};
use pointcouple::Result;

/// Returns the roundtrip error of the reconstruction.
pub fn run_example() -> Result<f64> {
    // Mirror: forward mode 0, backward mode 1; the emitter sits t_d away.
    let t_d = 2.0;
    let mirror = NormalModeBasis::new(beam_splitter(FRAC_PI_2, 0.0), vec![0.0, 0.0])?;
    println!("profile of normal mode 1 in the backward mode, x = -1..1:");
    for x in [-1.0, -0.5, 0.0, 0.5, 1.0] {
        let p = profile(&mirror, 1, 1, x, 1.0)?;
        println!("  x = {x:+.1}: {:+.4}{:+.4}i", p.re, p.im);
    }
    for omega in [0.0, 0.5, 1.0] {
        let g = coupling_coefficient(&mirror, &[(0, t_d, 0.5), (1, -t_d, 0.5)], 1, omega)?;
        println!("emitter coupling to normal mode 1 at omega = {omega}: |g| = {:.6}", g.norm());
    }

    let grid = Grid::new(-30.0, 0.1, 601)?;
    let w = Wavepacket::from_fn(grid, vec![0.0, 0.0], |mode, x| {
        let centre = if mode == 0 { -10.0 } else { 12.0 };
        C64::new(-(x - centre).powi(2) / 4.0, 0.3 * x).exp() * 0.5
    })?;
    let basis = NormalModeBasis::centered(beam_splitter(FRAC_PI_4, 0.4));
    let err = roundtrip_error(&basis, &w, &OmegaGrid::reciprocal(&grid))?;
    println!("decompose -> reconstruct error: {err:.3e}");
    Ok(err)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()?;
    Ok(())
}
