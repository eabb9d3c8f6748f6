//! Transport efficiency against dephasing rate from the master equation,
//! showing the assisted-transport peak between the coherent and Zeno limits.

use enaqt::harness::run::run_sweep;
use enaqt::harness::ScenarioConfig;

const SCENARIO: &str = r#"
algorithm = "lindblad"
source = 1
target = 3

[network]
energies = [0.44, 0.24, -3.22, 0.36]
topology = "ring"
coupling = 1.0

[grid]
dt = 0.01
horizon = 40.0

[sweep]
min = 1e-3
max = 1e2
points = 11
"#;

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = ScenarioConfig::from_toml(SCENARIO)?.resolve()?;
    let sweep = run_sweep(&scenario)?;
    let best = sweep.points.iter().max_by(|a, b| a.eta.total_cmp(&b.eta)).unwrap();
    for p in &sweep.points {
        let bar = "#".repeat((p.eta * 5.0) as usize);
        println!("{:>9.3e}  {:>7.3}  {bar}", p.gamma, p.eta);
    }
    println!("peak η = {:.3} at γ = {:.3}", best.eta, best.gamma);
    Ok(())
}
