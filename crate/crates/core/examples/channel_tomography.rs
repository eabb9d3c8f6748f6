//! Process tomography of a single (RZX, reset) collision on one qubit.

use enaqt::collision::channel_tomography_1q;

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (coupling, dt) in [(1.0, 0.1), (2.5, 0.1), (5.0, 0.2)] {
        let report = channel_tomography_1q(coupling, dt)?;
        println!(
            "c = {coupling}, dt = {dt}: phase-flip probability {:.6} (sin² c dt = {:.6}), max deviation {:.1e}",
            report.p_z, report.expected_p, report.max_deviation
        );
        for row in report.transfer {
            println!("    [{:>8.5} {:>8.5} {:>8.5} {:>8.5}]", row[0], row[1], row[2], row[3]);
        }
    }
    Ok(())
}
