//! Load a scenario file, override a few fields as the command line would,
//! and write the dynamics table with its manifest.

use std::path::Path;

use enaqt::harness::run::{execute, Command};
use enaqt::harness::{Overrides, ScenarioConfig};

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/ring_noise.toml");
    let mut config = ScenarioConfig::load(&path)?;
    config.apply(&Overrides {
        runs: Some(100),
        horizon: Some(5.0),
        ..Overrides::default()
    });
    let scenario = config.resolve()?;
    println!("scenario hash {:016x}", scenario.hash);

    let out = std::env::temp_dir().join("enaqt-scenario-example");
    let manifest = execute(Command::Dynamics, &scenario, &out)?;
    for file in &manifest.outputs {
        println!("{}  {} ({} bytes)", file.sha256, out.join(&file.name).display(), file.bytes);
    }
    Ok(())
}
