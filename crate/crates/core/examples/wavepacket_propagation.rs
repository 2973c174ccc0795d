// A Gaussian pulse in mode 0 meets a 50:50 beam splitter.
//
// `cargo run --example wavepacket_propagation`

use std::f64::consts::FRAC_PI_4;

use pointcouple::device::beam_splitter;
use pointcouple::linalg::C64;
use pointcouple::propagation::{propagate, Grid, PropagationWindow, Wavepacket};
use pointcouple::Result;

/// Returns `(norm before, norm after, power in mode 1 after)`.
pub fn run_example() -> Result<(f64, f64, f64)> {
    let grid = Grid::new(-20.0, 0.05, 801)?;
    let w = Wavepacket::from_fn(grid, vec![0.0, 0.0], |mode, x| {
        if mode == 0 {
            C64::new((-(x + 8.0).powi(2) / 2.0).exp(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })?;
    let s = beam_splitter(FRAC_PI_4, 0.0);
    let out = propagate(&w, &s, PropagationWindow::new(0.0, 16.0)?)?;

    let power = |w: &Wavepacket, m: usize| w.envelope(m).iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.dx;
    println!("norm in  {:.12}", w.norm_sqr());
    println!("norm out {:.12}", out.norm_sqr());
    println!("mode 0 / mode 1 after the splitter: {:.6} / {:.6}", power(&out, 0), power(&out, 1));
    Ok((w.norm_sqr(), out.norm_sqr(), power(&out, 1)))
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()?;
    Ok(())
}
