// Emitter in front of a perfect mirror: the mirror phase decides between
// complete decay and a trapped bound state.
//
// `cargo run --release --example mirror_feedback`

use std::f64::consts::PI;

use pointcouple::dde::{solve_dde, DdeParams};
use pointcouple::feedback::{run, FeedbackConfig};
use pointcouple::Result;

/// Returns `|eps(10/gamma)|` for `phi = 0` and `phi = pi`.
pub fn run_example() -> Result<(f64, f64)> {
    let mut finals = Vec::new();
    for phi in [0.0, PI] {
        let config = FeedbackConfig {
            phi,
            ..FeedbackConfig::default()
        };
        let mps = run(&config)?;
        let dde = solve_dde(&DdeParams::from_feedback(&config))?;
        println!("phi = {phi:.3}");
        println!("     t     |eps| mps   |eps| dde   bond");
        for s in mps.samples.iter().step_by(20) {
            println!("  {:5.2}   {:9.5}   {:9.5}   {:4}", s.t, s.abs_eps, dde.abs_at(s.t), s.max_bond);
        }
        finals.push(mps.final_sample().abs_eps);
    }
    Ok((finals[0], finals[1]))
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()?;
    Ok(())
}
