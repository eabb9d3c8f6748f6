//! Collision circuit with one ancilla qubit: print one Trotter block, then
//! average single-shot runs against the master equation.

use enaqt::collision::{CollisionCircuit, CollisionConfig};
use enaqt::grid::SimulationGrid;
use enaqt::lindblad::oracle_series;
use enaqt::network::{ExcitonNetwork, MappingKind};
use enaqt::noise::Readout;

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let network = ExcitonNetwork::ring(vec![0.44, 0.24, -3.22, 0.36], 1.0, 0.5)?;
    let grid = SimulationGrid::from_horizon(10.0, 0.01)?;
    let config = CollisionConfig::from_rates(&network, grid.dt, 1, MappingKind::Physical)?;
    let circuit = CollisionCircuit::new(&network, &config)?;

    println!("{} qubits, one block:", circuit.n_qubits());
    for gate in circuit.gate_sequence() {
        println!("  {:?}({:.4}) on {:?}", gate.kind, gate.angle, gate.targets);
    }

    let oracle = oracle_series(&network, &grid, 0, 2)?.target_curve();
    let ensemble = circuit.ensemble(&grid, 0, 2, 3, &[], 2000, Readout::SingleShot)?;
    for s in (0..=grid.steps).step_by(200) {
        println!(
            "t = {:>4.1}  p = {:.3} ± {:.3}  oracle {:.3}",
            s as f64 * grid.dt,
            ensemble.mean[s],
            ensemble.stderr[s],
            oracle[s]
        );
    }
    Ok(())
}
