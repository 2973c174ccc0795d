// Canonical devices and their point-coupling matrices.
//
// `cargo run --example cayley_devices`

use std::f64::consts::FRAC_PI_4;

use pointcouple::device::{
    beam_splitter, circulator, coupling_from_scattering, phase_shifter, scattering_from_coupling,
    UnitaryScatteringMatrix,
};
use pointcouple::linalg::max_abs_diff;
use pointcouple::Result;

fn show(name: &str, s: &UnitaryScatteringMatrix) -> Result<f64> {
    let v = coupling_from_scattering(s)?;
    let back = scattering_from_coupling(&v)?;
    let err = max_abs_diff(s.matrix(), back.matrix());
    println!("{name}: V =");
    for row in v.matrix().row_iter() {
        let cells: Vec<String> = row.iter().map(|z| format!("{:+.4}{:+.4}i", z.re, z.im)).collect();
        println!("    [{}]", cells.join(", "));
    }
    println!("    roundtrip error {err:.2e}");
    Ok(err)
}

/// Returns the worst roundtrip error over the three devices.
pub fn run_example() -> Result<f64> {
    let mut worst: f64 = 0.0;
    worst = worst.max(show("phase shifter (0.7 rad)", &phase_shifter(0.7))?);
    worst = worst.max(show("50:50 beam splitter", &beam_splitter(FRAC_PI_4, 0.0))?);
    worst = worst.max(show("circulator", &circulator())?);

    // A perfect mirror has eigenphases +-pi/2 and is still representable;
    // a pi phase shifter is not.
    match coupling_from_scattering(&phase_shifter(std::f64::consts::PI)) {
        Err(e) => println!("pi phase shifter: {e}"),
        Ok(_) => unreachable!("eigenphase pi has no coupling matrix"),
    }
    Ok(worst)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()?;
    Ok(())
}
