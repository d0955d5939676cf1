//! Drives the command layer from code: builds a configuration, writes it as
//! TOML, runs `solve` into a scratch directory and checks the manifest.

use critsep::cli::output::verify_manifest;
use critsep::cli::{cmd_solve, RunConfig};

fn main() -> critsep::Result<()> {
    let mut config = RunConfig::default();
    config.model.cells = 512;
    config.coupling.lambda = -10.0;
    config.output_dir = std::env::temp_dir().join("critsep_run_config_example");
    println!("{}", config.to_toml()?);

    let (manifest, summary) = cmd_solve(&config)?;
    println!("energy {:.8} in {} iterations", summary.energy, summary.iterations);
    for f in &manifest.files {
        println!("{}  {}", f.sha256, f.path);
    }
    let bad = verify_manifest(&config.output_dir)?;
    println!("manifest digests {}", if bad.is_empty() { "match" } else { "differ" });
    Ok(())
}
