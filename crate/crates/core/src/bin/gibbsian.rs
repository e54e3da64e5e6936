use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gibbsian::experiments::{self, exit_code, Completed, Experiment, RunConfig};
use gibbsian::{Error, Result};

#[derive(Parser)]
#[command(name = "gibbsian", version, about = "Gibbs specifications, entropy densities and quenched joint measures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON file with parameters (for `run`: a full run configuration).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Seed for sampled quantities.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated volume schedule, e.g. `2,4,8`.
    #[arg(long, value_delimiter = ',')]
    schedule: Option<Vec<usize>>,
}

#[derive(Subcommand)]
enum Command {
    /// Properness, consistency and telescoping checks.
    CheckSpec(Common),
    /// Relative entropy density between 1D Ising chains.
    #[command(name = "vp-1d")]
    Vp1d(Common),
    /// Closed forms for Bernoulli product measures.
    VpProduct(Common),
    /// Zero-block rate and samples of the GriSing model.
    Grising(Common),
    /// Decimation of the Ising chain and the plus/minus sandwich.
    Decimate(Common),
    /// Joint random-field Ising measures: bounds, kernels, entropy identity.
    RfimJoint(Common),
    /// Asymptotic decoupling checks.
    AdCheck(Common),
    /// Disorder-averaged correlation decay.
    CorrDecay(Common),
    /// Oscillation of single-site kernels over annuli.
    Oscillation(Common),
    /// Runs every experiment in a configuration file.
    Run(Common),
    /// Prints the JSON schema of run configurations.
    Schema,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Parameters for a single experiment: defaults, or a JSON object of overrides.
fn single(id: &str, config: Option<&Path>) -> Result<Experiment> {
    let Some(path) = config else { return Ok(Experiment::default_for(id).expect("known id")) };
    let mut v: serde_json::Value = serde_json::from_str(&read(path)?).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let obj = v.as_object_mut().ok_or_else(|| Error::InvalidConfig("parameters must be a JSON object".into()))?;
    match obj.insert("experiment".into(), id.into()) {
        Some(serde_json::Value::String(s)) if s != id => return Err(Error::InvalidConfig(format!("file is for `{s}`, not `{id}`"))),
        _ => {}
    }
    serde_json::from_value(v).map_err(|e| Error::InvalidConfig(e.to_string()))
}

fn report(done: &[Completed]) -> bool {
    let mut ok = true;
    for c in done {
        for chk in &c.checks {
            println!("{} {}/{}: {}", if chk.pass { "PASS" } else { "FAIL" }, c.name, chk.name, chk.detail);
            ok &= chk.pass;
        }
        for f in &c.files {
            println!("wrote {}", f.display());
        }
    }
    ok
}

fn go(cli: Cli) -> Result<bool> {
    let (id, common) = match cli.command {
        Command::Schema => {
            println!("{}", serde_json::to_string_pretty(&RunConfig::schema()).expect("schema serializes"));
            return Ok(true);
        }
        Command::CheckSpec(c) => ("check-spec", c),
        Command::Vp1d(c) => ("vp-1d", c),
        Command::VpProduct(c) => ("vp-product", c),
        Command::Grising(c) => ("grising", c),
        Command::Decimate(c) => ("decimate", c),
        Command::RfimJoint(c) => ("rfim-joint", c),
        Command::AdCheck(c) => ("ad-check", c),
        Command::CorrDecay(c) => ("corr-decay", c),
        Command::Oscillation(c) => ("oscillation", c),
        Command::Run(c) => ("run", c),
    };
    if let Some(n) = common.workers {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Error::InvalidConfig(e.to_string()))?;
    }
    let schedule = common.schedule.as_deref();
    let done = if id == "run" {
        let path = common.config.as_deref().ok_or_else(|| Error::InvalidConfig("`run` needs --config".into()))?;
        experiments::run_all(&RunConfig::parse(&read(path)?)?, &common.out, common.seed, schedule)?
    } else {
        let mut e = single(id, common.config.as_deref())?;
        e.resolve(Some(0), common.seed, schedule);
        vec![experiments::execute(&e, id, &common.out)?]
    };
    Ok(report(&done))
}

fn main() -> ExitCode {
    match go(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
