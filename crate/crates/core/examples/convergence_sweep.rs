// How the MPS error against the delay equation depends on the time step
// and the Schmidt threshold.
//
// `cargo run --release --example convergence_sweep`

use pointcouple::dde::{convergence_sweep, SweepTable};
use pointcouple::feedback::FeedbackConfig;
use pointcouple::Result;

pub fn run_example() -> Result<SweepTable> {
    let table = convergence_sweep(&FeedbackConfig::default(), &[0.15, 0.1, 0.05], &[0.5, 0.1, 0.01])?;
    println!("   dt     tol    max dev   bond");
    for r in &table.rows {
        println!("  {:.2}   {:.2}   {:.5}   {:4}", r.dt, r.schmidt_tol, r.max_deviation, r.max_bond);
    }
    println!("monotone in dt: {}, in tol: {}", table.monotone_in_dt, table.monotone_in_tol);
    Ok(table)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()?;
    Ok(())
}
