//! Versioned experiment configuration. Every experiment carries its own
//! parameters with defaults; unknown keys are rejected.

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::disorder::DisorderLaw;
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    /// Default seed for experiments that do not set one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub experiments: Vec<Experiment>,
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum Experiment {
    CheckSpec(CheckSpec),
    #[serde(rename = "vp-1d")]
    Vp1d(Vp1d),
    VpProduct(VpProduct),
    Grising(Grising),
    Decimate(Decimate),
    RfimJoint(RfimJoint),
    AdCheck(AdCheck),
    CorrDecay(CorrDecay),
    Oscillation(Oscillation),
}

/// Properness and consistency over every boundary of small windows, plus
/// random telescoping instances.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct CheckSpec {
    pub beta: f64,
    pub h: f64,
    /// Largest outer interval in one dimension.
    pub max_outer: usize,
    /// Also check the 2×2 square.
    pub square: bool,
    pub telescoping_instances: usize,
    pub seed: Option<u64>,
}

impl Default for CheckSpec {
    fn default() -> Self {
        CheckSpec { beta: 0.7, h: 0.2, max_outer: 4, square: true, telescoping_instances: 200, seed: None }
    }
}

/// Relative entropy density between 1D Ising chains, direct and via the
/// telescoping formula, over a grid of couplings.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct Vp1d {
    pub betas: Vec<f64>,
    pub schedule: Vec<usize>,
}

impl Default for Vp1d {
    fn default() -> Self {
        Vp1d { betas: vec![0.0, 0.3, 0.6, 1.0], schedule: (1..=8).collect() }
    }
}

/// Closed forms for product measures: relative entropy, entropy and `e⁺`.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct VpProduct {
    /// `(p_μ, p_ν)` probabilities of the plus symbol.
    pub pairs: Vec<(f64, f64)>,
    pub dim: usize,
    pub schedule: Vec<usize>,
}

impl Default for VpProduct {
    fn default() -> Self {
        VpProduct { pairs: vec![(0.3, 0.6), (0.5, 0.5), (0.1, 0.9), (0.7, 0.2)], dim: 1, schedule: vec![1, 2, 3, 4, 5] }
    }
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct Grising {
    pub ps: Vec<f64>,
    pub beta: f64,
    pub dim: usize,
    /// Window side lengths.
    pub schedule: Vec<usize>,
    /// Sampled windows per `p`.
    pub samples: usize,
    pub sample_side: usize,
    pub seed: Option<u64>,
}

impl Default for Grising {
    fn default() -> Self {
        Grising { ps: vec![0.1, 0.3, 0.5], beta: 0.8, dim: 1, schedule: vec![1, 2, 4, 8, 16, 32, 64], samples: 10, sample_side: 64, seed: None }
    }
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct Decimate {
    pub beta: f64,
    /// Decimated chain lengths.
    pub schedule: Vec<usize>,
    /// Coupling of the 2D plus/minus sandwich.
    pub square_beta: f64,
}

impl Default for Decimate {
    fn default() -> Self {
        Decimate { beta: 0.8, schedule: (2..=10).collect(), square_beta: 1.0 }
    }
}

/// Monte Carlo joint samples.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct JointSampling {
    pub side: usize,
    pub sweeps: usize,
    pub burn_in: usize,
    pub replicas: usize,
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct RfimJoint {
    pub beta: f64,
    pub h: f64,
    pub law: DisorderLaw,
    /// Chain lengths for the plus/minus entropy bounds.
    pub schedule: Vec<usize>,
    /// Also run the 3×3 square.
    pub square: bool,
    pub square_beta: f64,
    /// `(β, h)` points for the conditional-kernel comparison.
    pub kernel_grid: Vec<(f64, f64)>,
    /// Window radii for the plus/minus conditional gap in one dimension.
    pub gap_radii: Vec<usize>,
    /// Quenched-window margins for the conditional-kernel convergence report.
    pub margins: Vec<usize>,
    pub sampling: Option<JointSampling>,
    pub seed: Option<u64>,
}

impl Default for RfimJoint {
    fn default() -> Self {
        RfimJoint {
            beta: 0.9,
            h: 0.5,
            law: DisorderLaw::two_point(),
            schedule: (2..=10).collect(),
            square: true,
            square_beta: 1.0,
            kernel_grid: vec![(0.3, 0.2), (0.8, 0.5), (1.2, 1.0)],
            gap_radii: vec![1, 2, 3, 4],
            margins: vec![0, 1, 2, 3, 4, 5, 6],
            sampling: None,
            seed: None,
        }
    }
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct AdCheck {
    pub p: f64,
    pub beta: f64,
    pub h: f64,
    pub rfim_beta: f64,
    pub rfim_h: f64,
}

impl Default for AdCheck {
    fn default() -> Self {
        AdCheck { p: 0.3, beta: 0.8, h: 0.2, rfim_beta: 0.7, rfim_h: 0.4 }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum TierChoice {
    Exact,
    Mc,
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct CorrDecay {
    pub dim: usize,
    pub beta: f64,
    pub h: f64,
    pub law: DisorderLaw,
    pub side: usize,
    pub ms: Vec<usize>,
    pub replicas: usize,
    pub tier: TierChoice,
    pub sweeps: usize,
    pub burn_in: usize,
    pub seed: Option<u64>,
}

impl Default for CorrDecay {
    fn default() -> Self {
        CorrDecay {
            dim: 1,
            beta: 0.6,
            h: 0.3,
            law: DisorderLaw::two_point(),
            side: 12,
            ms: (1..=6).collect(),
            replicas: 16,
            tier: TierChoice::Exact,
            sweeps: 4000,
            burn_in: 200,
            seed: None,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Gibbs,
    Decimated,
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct Oscillation {
    pub kind: KernelKind,
    pub dim: usize,
    pub beta: f64,
    pub h: f64,
    pub annuli: Vec<usize>,
    /// Sampler sweeps per decimated kernel evaluation.
    pub sweeps: usize,
    pub burn_in: usize,
    pub seed: Option<u64>,
}

impl Default for Oscillation {
    fn default() -> Self {
        Oscillation { kind: KernelKind::Gibbs, dim: 1, beta: 0.8, h: 0.0, annuli: vec![0, 1, 2, 3], sweeps: 4000, burn_in: 400, seed: None }
    }
}

impl Experiment {
    pub fn id(&self) -> &'static str {
        match self {
            Experiment::CheckSpec(_) => "check-spec",
            Experiment::Vp1d(_) => "vp-1d",
            Experiment::VpProduct(_) => "vp-product",
            Experiment::Grising(_) => "grising",
            Experiment::Decimate(_) => "decimate",
            Experiment::RfimJoint(_) => "rfim-joint",
            Experiment::AdCheck(_) => "ad-check",
            Experiment::CorrDecay(_) => "corr-decay",
            Experiment::Oscillation(_) => "oscillation",
        }
    }

    /// Default parameters for an experiment id.
    pub fn default_for(id: &str) -> Option<Experiment> {
        Some(match id {
            "check-spec" => Experiment::CheckSpec(CheckSpec::default()),
            "vp-1d" => Experiment::Vp1d(Vp1d::default()),
            "vp-product" => Experiment::VpProduct(VpProduct::default()),
            "grising" => Experiment::Grising(Grising::default()),
            "decimate" => Experiment::Decimate(Decimate::default()),
            "rfim-joint" => Experiment::RfimJoint(RfimJoint::default()),
            "ad-check" => Experiment::AdCheck(AdCheck::default()),
            "corr-decay" => Experiment::CorrDecay(CorrDecay::default()),
            "oscillation" => Experiment::Oscillation(Oscillation::default()),
            _ => return None,
        })
    }

    fn seed_slot(&mut self) -> Option<&mut Option<u64>> {
        match self {
            Experiment::CheckSpec(c) => Some(&mut c.seed),
            Experiment::Grising(c) => Some(&mut c.seed),
            Experiment::RfimJoint(c) => Some(&mut c.seed),
            Experiment::CorrDecay(c) => Some(&mut c.seed),
            Experiment::Oscillation(c) => Some(&mut c.seed),
            _ => None,
        }
    }

    fn schedule_slot(&mut self) -> Option<&mut Vec<usize>> {
        match self {
            Experiment::Vp1d(c) => Some(&mut c.schedule),
            Experiment::VpProduct(c) => Some(&mut c.schedule),
            Experiment::Grising(c) => Some(&mut c.schedule),
            Experiment::Decimate(c) => Some(&mut c.schedule),
            Experiment::RfimJoint(c) => Some(&mut c.schedule),
            _ => None,
        }
    }

    /// Whether the experiment draws random numbers.
    pub fn uses_rng(&self) -> bool {
        match self {
            Experiment::CheckSpec(c) => c.telescoping_instances > 0,
            Experiment::Grising(c) => c.samples > 0,
            Experiment::RfimJoint(c) => c.sampling.is_some(),
            Experiment::CorrDecay(_) => true,
            Experiment::Oscillation(c) => c.kind == KernelKind::Decimated,
            _ => false,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        let mut e = self.clone();
        e.seed_slot().and_then(|s| *s)
    }

    /// Fills missing seeds from `default`, overrides them with `forced`, and
    /// replaces schedules with `schedule`.
    pub fn resolve(&mut self, default: Option<u64>, forced: Option<u64>, schedule: Option<&[usize]>) {
        if let Some(slot) = self.seed_slot() {
            if let Some(s) = forced {
                *slot = Some(s);
            } else if slot.is_none() {
                *slot = default;
            }
        }
        if let (Some(s), Some(slot)) = (schedule, self.schedule_slot()) {
            *slot = s.to_vec();
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("{}: {m}", self.id())));
        let increasing = |s: &[usize]| !s.is_empty() && s.windows(2).all(|w| w[0] < w[1]);
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        if self.uses_rng() && self.seed().is_none() {
            return bad("a seed is required for sampled quantities");
        }
        match self {
            Experiment::CheckSpec(c) => {
                if !finite(&[c.beta, c.h]) || c.max_outer == 0 || c.max_outer > 6 {
                    return bad("need finite couplings and 1 ≤ max_outer ≤ 6");
                }
            }
            Experiment::Vp1d(c) => {
                if c.betas.is_empty() || !finite(&c.betas) || !increasing(&c.schedule) {
                    return bad("need couplings and a strictly increasing schedule");
                }
            }
            Experiment::VpProduct(c) => {
                if c.pairs.iter().any(|(a, b)| !(*a > 0.0 && *a < 1.0 && *b > 0.0 && *b < 1.0)) || !increasing(&c.schedule) || !(1..=2).contains(&c.dim) {
                    return bad("probabilities must lie in (0, 1), dim in 1..=2, schedule strictly increasing");
                }
            }
            Experiment::Grising(c) => {
                if c.ps.iter().any(|p| !(*p > 0.0 && *p < 1.0)) || !finite(&[c.beta]) || !increasing(&c.schedule) || c.schedule[0] == 0 || !(1..=2).contains(&c.dim) {
                    return bad("probabilities must lie in (0, 1), dim in 1..=2, schedule strictly increasing from 1");
                }
            }
            Experiment::Decimate(c) => {
                if !finite(&[c.beta, c.square_beta]) || !increasing(&c.schedule) || c.schedule[0] == 0 {
                    return bad("need finite couplings and a strictly increasing schedule from 1");
                }
            }
            Experiment::RfimJoint(c) => {
                c.law.validate()?;
                if !finite(&[c.beta, c.h, c.square_beta]) || !increasing(&c.schedule) || c.schedule[0] == 0 || !increasing(&c.gap_radii) || c.gap_radii[0] == 0 {
                    return bad("need finite couplings and strictly increasing schedules from 1");
                }
                if c.margins.is_empty() || !c.margins.windows(2).all(|w| w[0] < w[1]) || *c.margins.last().expect("non-empty") > 8 {
                    return bad("margins must be strictly increasing and at most 8");
                }
                if c.sampling.as_ref().is_some_and(|s| s.side == 0 || s.sweeps == 0 || s.replicas == 0) {
                    return bad("sampling needs positive side, sweeps and replicas");
                }
            }
            Experiment::AdCheck(c) => {
                if !(c.p > 0.0 && c.p < 1.0) || !finite(&[c.beta, c.h, c.rfim_beta, c.rfim_h]) {
                    return bad("p must lie in (0, 1) and couplings must be finite");
                }
            }
            Experiment::CorrDecay(c) => {
                c.law.validate()?;
                if !finite(&[c.beta, c.h]) || !(1..=2).contains(&c.dim) || c.replicas == 0 || !increasing(&c.ms) || c.ms[0] == 0 || *c.ms.last().expect("non-empty") >= c.side {
                    return bad("need dim in 1..=2, replicas ≥ 1 and distances strictly increasing in 1..side");
                }
                if c.tier == TierChoice::Mc && c.sweeps == 0 {
                    return bad("the MC tier needs sweeps");
                }
            }
            Experiment::Oscillation(c) => {
                if !finite(&[c.beta, c.h]) || !(1..=2).contains(&c.dim) || c.annuli.is_empty() || !c.annuli.windows(2).all(|w| w[0] < w[1]) {
                    return bad("need dim in 1..=2 and strictly increasing annuli");
                }
                if c.kind == KernelKind::Decimated && (c.dim != 2 || c.sweeps == 0) {
                    return bad("the decimated kernel runs in two dimensions with positive sweeps");
                }
            }
        }
        Ok(())
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidConfig(format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", cfg.schema_version)));
        }
        if cfg.experiments.is_empty() {
            return Err(Error::InvalidConfig("no experiments listed".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        RunConfig::parse(&text)
    }

    /// The JSON schema of configuration files.
    pub fn schema() -> serde_json::Value {
        serde_json::to_value(schemars::schema_for!(RunConfig)).expect("schema serializes")
    }
}
