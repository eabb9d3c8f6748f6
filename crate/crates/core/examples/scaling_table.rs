//! Qubit and gate counts per evolution block for both encodings.

use enaqt::harness::config::{Algorithm, Topology};
use enaqt::harness::report::scaling_rows;
use enaqt::network::MappingKind;

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cases = [
        (Algorithm::Collision, MappingKind::Physical),
        (Algorithm::CollisionAlgorithmic, MappingKind::Algorithmic),
        (Algorithm::ClassicalNoise, MappingKind::Physical),
        (Algorithm::ClassicalNoise, MappingKind::Algorithmic),
    ];
    for topology in [Topology::Ring, Topology::Complete] {
        println!("{topology:?}");
        println!("  N   algorithm               mapping      qubits  gates  2q gates");
        for n in [4, 8, 12] {
            for (algorithm, mapping) in cases {
                let row = scaling_rows(n, topology, algorithm, mapping, 1)?;
                let two = row.two_qubit_gates.map_or("-".to_string(), |g| g.to_string());
                let note = if row.measured { "" } else { " (estimate)" };
                println!(
                    "  {n:<3} {:<23} {:<12} {:<7} {:<6} {two}{note}",
                    format!("{algorithm:?}"),
                    format!("{mapping:?}"),
                    row.qubits,
                    row.gates
                );
            }
        }
    }
    Ok(())
}
