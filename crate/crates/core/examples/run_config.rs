//! Runs a JSON configuration of experiments and writes artifacts, as the CLI's
//! `run` subcommand does. Pass a config path, or the bundled sample is used.

use std::path::PathBuf;

use gibbsian::experiments::{run_all, RunConfig};

fn main() -> gibbsian::Result<()> {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/all.json")));
    let text = std::fs::read_to_string(&path).map_err(|e| gibbsian::Error::Io(e.to_string()))?;
    let cfg = RunConfig::parse(&text)?;
    let out = std::env::temp_dir().join("gibbsian-example");
    for done in run_all(&cfg, &out, None, None)? {
        for c in &done.checks {
            println!("{} {}/{}: {}", if c.pass { "PASS" } else { "FAIL" }, done.name, c.name, c.detail);
        }
    }
    println!("artifacts in {}", out.display());
    Ok(())
}
