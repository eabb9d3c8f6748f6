//! Record reset outcomes of collision trajectories, then rerun them
//! deterministically from the bit strings alone.

use enaqt::collision::{CollisionBitString, CollisionCircuit};
use enaqt::harness::run::run_trajectories;
use enaqt::harness::ScenarioConfig;

const SCENARIO: &str = r#"
algorithm = "collision"
seed = 7
source = 1
target = 3
readout = "exact"

[network]
energies = [0.44, 0.24, -3.22, 0.36]
gamma = 1.0

[grid]
dt = 0.01
horizon = 5.0

[trajectories]
count = 8
record_bits = true
"#;

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = ScenarioConfig::from_toml(SCENARIO)?.resolve()?;
    let set = run_trajectories(&scenario)?;
    let circuit = CollisionCircuit::new(
        &scenario.network,
        &scenario.collision_config(&scenario.network, &scenario.grid)?,
    )?;

    for (id, (curve, bits)) in set.curves.iter().zip(set.bits.as_ref().unwrap()).enumerate() {
        let text = bits.to_hex();
        let parsed = CollisionBitString::from_hex(&text, bits.n_sites, bits.steps, bits.trotter)?;
        let replayed = circuit.replay(&scenario.grid, scenario.source, &parsed)?;
        let diff = curve
            .iter()
            .zip(&replayed)
            .map(|(a, row)| (a - row[scenario.target]).abs())
            .fold(0.0, f64::max);
        println!(
            "trajectory {id}: {} resets flipped, first at step {:?}, final p = {:.4}, replay difference {diff:.1e}",
            bits.count_ones(),
            bits.first_event_step(),
            curve.last().unwrap()
        );
    }
    Ok(())
}
