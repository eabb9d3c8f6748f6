//! Unitary trajectories with white site-energy noise. Their average
//! reproduces site dephasing.

use enaqt::grid::SimulationGrid;
use enaqt::lindblad::oracle_series;
use enaqt::network::{ExcitonNetwork, MappingKind};
use enaqt::noise::{NoiseConfig, NoiseProblem, PropagatorMode, Readout};

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let network = ExcitonNetwork::ring(vec![0.44, 0.24, -3.22, 0.36], 1.0, 0.5)?;
    let grid = SimulationGrid::from_horizon(10.0, 0.01)?;
    let oracle = oracle_series(&network, &grid, 0, 2)?.target_curve();

    for mapping in [MappingKind::Algorithmic, MappingKind::Physical] {
        let problem = NoiseProblem::new(
            &network,
            mapping,
            NoiseConfig::matching(&network),
            grid,
            0,
            2,
            PropagatorMode::Split,
        )?;
        let ensemble = problem.ensemble(1, &[mapping as u64], 400, Readout::Exact)?;
        let worst = (0..ensemble.len())
            .map(|s| (ensemble.mean[s] - oracle[s]).abs() / ensemble.stderr[s].max(1e-3))
            .fold(0.0, f64::max);
        println!(
            "{mapping:?}: {} qubits, p_target(10) = {:.4} ± {:.4} (oracle {:.4}), worst deviation {worst:.2}σ",
            mapping.n_qubits(network.n_sites()),
            ensemble.mean.last().unwrap(),
            ensemble.stderr.last().unwrap(),
            oracle.last().unwrap(),
        );
    }
    Ok(())
}
