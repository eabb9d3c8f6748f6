//! Halve the step of the exact collision map and watch the error against the
//! master equation shrink linearly.

use enaqt::harness::report::convergence_report;
use enaqt::harness::ScenarioConfig;

const SCENARIO: &str = r#"
algorithm = "collision"
source = 1
target = 3

[network]
energies = [0.44, 0.24, -3.22, 0.36]
gamma = 0.1

[grid]
dt = 0.004
horizon = 10.0

[collision]
channel = "exact_map"

[convergence]
halvings = 2
at = 10.0
"#;

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = ScenarioConfig::from_toml(SCENARIO)?.resolve()?;
    let report = convergence_report(&scenario)?;
    print!("{}", report.table().render());
    println!("fitted order in dt: {:.3}", report.error_order().unwrap_or(f64::NAN));
    Ok(())
}
