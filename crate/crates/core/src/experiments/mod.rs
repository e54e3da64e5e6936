//! Batch experiments: configuration, execution and artifacts. Each
//! experiment writes `<name>.json` with the resolved configuration and
//! library version, plus CSV or JSON-lines twins.

pub mod config;
pub mod run;

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

pub use config::{Experiment, RunConfig, SCHEMA_VERSION};
pub use run::{conditional_kernel_deviation, Check, Outcome, Sidecar};

pub const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exit status for a failed run.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::StateSpaceTooLarge { .. } | Error::AnnulusTooLarge { .. } | Error::WindowTooLarge { .. } => 3,
        Error::Io(_) => 1,
        _ => 2,
    }
}

#[derive(Serialize)]
struct Artifact<'a> {
    schema_version: u32,
    library_version: &'static str,
    name: &'a str,
    config: &'a Experiment,
    checks: &'a [Check],
    results: &'a Value,
}

/// A finished experiment and the files it wrote.
#[derive(Clone, Debug)]
pub struct Completed {
    pub name: String,
    pub checks: Vec<Check>,
    pub files: Vec<PathBuf>,
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Runs one resolved experiment and writes its artifacts into `out`.
pub fn execute(e: &Experiment, name: &str, out: &Path) -> Result<Completed> {
    let outcome = run::run(e)?;
    std::fs::create_dir_all(out).map_err(|x| Error::Io(format!("{}: {x}", out.display())))?;
    let artifact = Artifact { schema_version: SCHEMA_VERSION, library_version: LIBRARY_VERSION, name, config: e, checks: &outcome.checks, results: &outcome.results };
    let mut json = serde_json::to_vec_pretty(&artifact).map_err(|x| Error::Io(x.to_string()))?;
    json.push(b'\n');
    let main = out.join(format!("{name}.json"));
    write(&main, &json)?;
    let mut files = vec![main];
    for s in &outcome.sidecars {
        let p = out.join(format!("{name}.{}", s.suffix));
        write(&p, &s.bytes)?;
        files.push(p);
    }
    Ok(Completed { name: name.to_string(), checks: outcome.checks, files })
}

/// Output names: the experiment id, suffixed by position when repeated.
pub fn names(experiments: &[Experiment]) -> Vec<String> {
    experiments
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let repeated = experiments.iter().filter(|x| x.id() == e.id()).count() > 1;
            if repeated {
                format!("{}-{i}", e.id())
            } else {
                e.id().to_string()
            }
        })
        .collect()
}

/// Resolves seeds and schedules, validates everything, then runs the
/// experiments in order.
pub fn run_all(cfg: &RunConfig, out: &Path, seed: Option<u64>, schedule: Option<&[usize]>) -> Result<Vec<Completed>> {
    let mut exps = cfg.experiments.clone();
    for e in exps.iter_mut() {
        e.resolve(cfg.seed, seed, schedule);
    }
    for e in &exps {
        e.validate()?;
    }
    names(&exps).iter().zip(&exps).map(|(n, e)| execute(e, n, out)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_rejects_unknown_fields_and_versions() {
        let ok = r#"{"schema_version": 1, "experiments": [{"experiment": "vp-1d", "betas": [0.3]}]}"#;
        let cfg = RunConfig::parse(ok).unwrap();
        assert!(matches!(&cfg.experiments[0], Experiment::Vp1d(v) if v.schedule == (1..=8).collect::<Vec<_>>()));
        let unknown = r#"{"schema_version": 1, "experiments": [{"experiment": "vp-1d", "bogus": 1}]}"#;
        assert!(matches!(RunConfig::parse(unknown), Err(Error::InvalidConfig(_))));
        let version = r#"{"schema_version": 7, "experiments": [{"experiment": "vp-1d"}]}"#;
        assert_eq!(exit_code(&RunConfig::parse(version).unwrap_err()), 2);
        assert_eq!(exit_code(&Error::StateSpaceTooLarge { states: 1e30, cap: 1 }), 3);
    }

    #[test]
    fn seeds_and_schedules_resolve() {
        let mut e = Experiment::default_for("corr-decay").unwrap();
        assert!(e.validate().is_err());
        e.resolve(Some(4), None, None);
        assert_eq!(e.seed(), Some(4));
        e.resolve(Some(4), Some(9), None);
        assert_eq!(e.seed(), Some(9));
        let mut g = Experiment::default_for("grising").unwrap();
        g.resolve(Some(0), None, Some(&[3, 1]));
        assert!(g.validate().is_err());
    }

    #[test]
    fn schema_lists_every_experiment() {
        let s = RunConfig::schema().to_string();
        for id in ["check-spec", "vp-1d", "vp-product", "grising", "decimate", "rfim-joint", "ad-check", "corr-decay", "oscillation"] {
            assert!(s.contains(id), "{id}");
        }
    }
}
