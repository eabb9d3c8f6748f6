//! Collisions on the binary site register, where the ancilla acts as a
//! random phase kick. The outcome-averaged channel, a finite ensemble and
//! the master equation are printed side by side.

use enaqt::collision::{AlgorithmicCollision, CollisionConfig};
use enaqt::grid::SimulationGrid;
use enaqt::lindblad::oracle_series;
use enaqt::network::{ExcitonNetwork, MappingKind};
use enaqt::noise::Readout;

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let network = ExcitonNetwork::ring(vec![0.44, 0.24, -3.22, 0.36], 1.0, 1.0)?;
    let grid = SimulationGrid::from_horizon(6.0, 0.01)?;
    let config = CollisionConfig::from_rates(&network, grid.dt, 1, MappingKind::Algorithmic)?;
    let model = AlgorithmicCollision::new(&network, &config)?;

    let mean = model.mean_populations(&grid, 0)?;
    let ensemble = model.ensemble(&grid, 0, 2, 9, &[], 1000, Readout::Exact)?;
    let oracle = oracle_series(&network, &grid, 0, 2)?.target_curve();

    println!("register dimension {}", model.dim());
    println!("t     channel  ensemble        oracle");
    for s in (0..=grid.steps).step_by(100) {
        println!(
            "{:<5.1} {:.4}   {:.4} ± {:.4}  {:.4}",
            s as f64 * grid.dt,
            mean[s][2],
            ensemble.mean[s],
            ensemble.stderr[s],
            oracle[s]
        );
    }
    Ok(())
}
