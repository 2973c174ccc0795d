// Two identical photons on a balanced beam splitter never leave in
// different ports; distinguishable ones do half the time.
//
// `cargo run --example hong_ou_mandel`

use std::f64::consts::FRAC_PI_4;

use pointcouple::device::beam_splitter;
use pointcouple::fock::{coincidence_probability, scatter_state, CoincidenceQuery, FockWavepacketState};
use pointcouple::Result;

/// Returns the coincidence probabilities `(same frequency, different frequency)`.
pub fn run_example() -> Result<(f64, f64)> {
    let s = beam_splitter(FRAC_PI_4, 0.0);

    let same = FockWavepacketState::product(2, &[(0, 0.0), (1, 0.0)])?;
    let out = scatter_state(&same, &s)?;
    let p_same = coincidence_probability(&out, &CoincidenceQuery(vec![(0, 0.0), (1, 0.0)]))?;
    for (photons, amp) in out.terms() {
        println!("  {photons:?}: {:+.6}{:+.6}i", amp.re, amp.im);
    }

    let apart = FockWavepacketState::product(2, &[(0, 0.0), (1, 1.0)])?;
    let out = scatter_state(&apart, &s)?;
    let p_apart = coincidence_probability(&out, &CoincidenceQuery(vec![(0, 0.0), (1, 1.0)]))?
        + coincidence_probability(&out, &CoincidenceQuery(vec![(0, 1.0), (1, 0.0)]))?;

    println!("coincidences, identical photons:        {p_same:.3e}");
    println!("coincidences, distinguishable photons:  {p_apart:.6}");
    Ok((p_same, p_apart))
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()?;
    Ok(())
}
