//! Continuous-time quantum walk on small graphs, compared with the classical
//! random walk generated by the same Laplacian.

use enaqt::network::{laplacian, qw_probability, Graph};
use enaqt::quantum::matrix::C64;

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ring = Graph::cycle(6, 1.0)?;
    let l = laplacian(&ring);

    println!("t      quantum p(0->3)  classical p(0->3)");
    for k in 0..=8 {
        let t = 0.5 * k as f64;
        let quantum = qw_probability(&ring, 0, 3, t)?;
        let classical = (&l * C64::from(-t)).exp()[(3, 0)].re;
        println!("{t:<6.1} {quantum:<16.6} {classical:.6}");
    }

    let complete = Graph::complete(6, 1.0)?;
    let mut peak = 0.0f64;
    for k in 0..200 {
        peak = peak.max(qw_probability(&complete, 0, 3, 0.02 * k as f64)?);
    }
    println!("complete graph: max p(0->3) for t < 4 is {peak:.4}");
    Ok(())
}
