//! Quenched disorder: disorder laws and fields, joint (spin, disorder)
//! potentials, quenched kernels, joint measures `ℙ(dη) μ[η](dσ)` and the
//! explicit conditional kernel of a joint measure.
//!
//! A joint symbol packs a spin symbol `s` and a disorder symbol `e` as
//! `s · q_η + e`.

pub mod bounds;
pub mod correlation;
pub mod grising;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{decode_word, encode_word, for_each_word, state_count, Configuration, Exterior, Region, Site, SpinAlphabet, Window};
use crate::measure::sampler::sample_region;
use crate::measure::{ExactMeasure, SampleSet, SamplerSettings};
use crate::potential::{BoundaryCondition, EnergyPlan, Potential, PotentialKind, ENUMERATION_CAP};
use crate::specification::{gibbs_kernel, KernelTable};

pub use bounds::{ad_check, joint_entropy_bound_check, markov_decoupling_constant, mixing_log_ratio, plus_minus_tables, specification_gap, ADReport, ADRow, BoundReport, BoundRow, GapReport};
pub use correlation::{quenched_correlation_decay, CorrelationDecay, CorrelationRow, CorrelationTier};
pub use grising::{grising_log_cylinder, grising_measure, grising_sample, GriSingSample};

/// Single-site law `ℙ₀` of i.i.d. disorder.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DisorderLaw {
    /// Occupied (`1`) with probability `p`, empty (`0`) otherwise.
    BernoulliOccupancy { p: f64 },
    /// Finitely many field values, symmetric about zero.
    SymmetricField { support: Vec<f64>, weights: Vec<f64> },
}

impl DisorderLaw {
    /// Fair `±1` field.
    pub fn two_point() -> DisorderLaw {
        DisorderLaw::SymmetricField { support: vec![-1.0, 1.0], weights: vec![0.5, 0.5] }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DisorderLaw::BernoulliOccupancy { p } => {
                if !(*p > 0.0 && *p < 1.0) {
                    return Err(Error::InvalidLaw(format!("occupation probability {p} must lie in (0, 1)")));
                }
            }
            DisorderLaw::SymmetricField { support, weights } => {
                let n = support.len();
                if n == 0 || weights.len() != n {
                    return Err(Error::InvalidLaw("support and weights must be non-empty and of equal length".into()));
                }
                if support.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(Error::InvalidLaw("support must be strictly increasing".into()));
                }
                if weights.iter().any(|w| !(*w > 0.0)) {
                    return Err(Error::InvalidLaw("every support point needs positive weight".into()));
                }
                if (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidLaw("weights must sum to one".into()));
                }
                for i in 0..n {
                    if support[i] != -support[n - 1 - i] || weights[i] != weights[n - 1 - i] {
                        return Err(Error::InvalidLaw("law is not symmetric".into()));
                    }
                }
            }
        }
        Ok(())
    }

    /// Disorder alphabet; the plus symbol is the largest value.
    pub fn alphabet(&self) -> Result<Arc<SpinAlphabet>> {
        self.validate()?;
        match self {
            DisorderLaw::BernoulliOccupancy { .. } => Ok(SpinAlphabet::binary()),
            DisorderLaw::SymmetricField { support, .. } => Ok(Arc::new(SpinAlphabet::new(support.clone(), support.len() - 1)?)),
        }
    }

    /// `ℙ₀` over the alphabet symbols.
    pub fn probs(&self) -> Vec<f64> {
        match self {
            DisorderLaw::BernoulliOccupancy { p } => vec![1.0 - p, *p],
            DisorderLaw::SymmetricField { weights, .. } => weights.clone(),
        }
    }

    /// I.i.d. draw on a window from ChaCha8 stream `stream` of `seed`.
    pub fn sample(&self, window: Window, seed: u64, stream: u64) -> Result<DisorderField> {
        let alphabet = self.alphabet()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let probs = self.probs();
        let values = (0..window.len())
            .map(|_| {
                let r: f64 = rng.gen();
                let mut acc = 0.0;
                for (a, p) in probs.iter().enumerate() {
                    acc += p;
                    if r < acc {
                        return a as u8;
                    }
                }
                (probs.len() - 1) as u8
            })
            .collect();
        Ok(DisorderField { window, alphabet, values, law: Some(self.clone()), seed: Some(seed) })
    }
}

/// Disorder realization `η` on a window.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct DisorderField {
    window: Window,
    alphabet: Arc<SpinAlphabet>,
    values: Vec<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    law: Option<DisorderLaw>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

impl DisorderField {
    pub fn new(alphabet: Arc<SpinAlphabet>, window: Window, values: Vec<u8>) -> Result<DisorderField> {
        if values.len() != window.len() {
            return Err(Error::InvalidConfig("disorder values do not match the window".into()));
        }
        for v in &values {
            alphabet.check(*v)?;
        }
        Ok(DisorderField { window, alphabet, values, law: None, seed: None })
    }

    pub fn constant(alphabet: Arc<SpinAlphabet>, window: Window, symbol: u8) -> Result<DisorderField> {
        DisorderField::new(alphabet, window, vec![symbol; window.len()])
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn alphabet(&self) -> &Arc<SpinAlphabet> {
        &self.alphabet
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn law(&self) -> Option<&DisorderLaw> {
        self.law.as_ref()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn get(&self, x: &Site) -> Option<u8> {
        self.window.index_of(x).map(|i| self.values[i])
    }

    pub fn set(&mut self, x: &Site, v: u8) -> Result<()> {
        self.alphabet.check(v)?;
        let i = self.window.index_of(x).ok_or(Error::SiteOutsideWindow(*x))?;
        self.values[i] = v;
        Ok(())
    }
}

/// Spins and disorder on a shared window.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct JointConfig {
    pub sigma: Configuration,
    pub eta: DisorderField,
}

/// Boundary for the spins of a quenched measure.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaBoundary {
    Plus,
    Minus,
    Free,
    Fixed(Configuration),
}

impl SigmaBoundary {
    pub fn condition(&self, spin: &Arc<SpinAlphabet>, dim: usize) -> BoundaryCondition {
        match self {
            SigmaBoundary::Plus => BoundaryCondition::plus(spin.clone(), dim),
            SigmaBoundary::Minus => BoundaryCondition::constant(spin.clone(), dim, 0),
            SigmaBoundary::Free => BoundaryCondition::Free,
            SigmaBoundary::Fixed(c) => BoundaryCondition::Fixed(c.clone()),
        }
    }
}

/// A translation-invariant potential over joint symbols.
#[derive(Clone, PartialEq, Debug)]
pub struct JointModel {
    spin: Arc<SpinAlphabet>,
    disorder: Arc<SpinAlphabet>,
    joint: Arc<SpinAlphabet>,
    phi: Potential,
}

/// Joint alphabet with values `0..q_σ q_η` and plus `(+, +)`.
pub fn joint_alphabet(spin: &SpinAlphabet, disorder: &SpinAlphabet) -> Result<Arc<SpinAlphabet>> {
    let q = spin.len() * disorder.len();
    if q > 255 {
        return Err(Error::InvalidAlphabet("joint alphabet exceeds 255 symbols".into()));
    }
    let plus = spin.plus() as usize * disorder.len() + disorder.plus() as usize;
    Ok(Arc::new(SpinAlphabet::new((0..q).map(|i| i as f64).collect(), plus)?))
}

impl JointModel {
    pub fn new(spin: Arc<SpinAlphabet>, disorder: Arc<SpinAlphabet>, phi: Potential) -> Result<JointModel> {
        let joint = joint_alphabet(&spin, &disorder)?;
        if **phi.alphabet() != *joint {
            return Err(Error::AlphabetMismatch);
        }
        if phi.kind() != PotentialKind::TranslationInvariant {
            return Err(Error::InvalidPotential("joint potential must be translation invariant".into()));
        }
        Ok(JointModel { spin, disorder, joint: phi.alphabet().clone(), phi })
    }

    /// Random-field Ising: `Φ_{x,y} = -β σ_x σ_y`, `Φ_x = -h η_x σ_x`.
    pub fn rfim(dim: usize, beta: f64, h: f64, disorder: Arc<SpinAlphabet>) -> Result<JointModel> {
        let spin = SpinAlphabet::ising();
        let joint = joint_alphabet(&spin, &disorder)?;
        let qe = disorder.len();
        let mut phi = Potential::new(joint, dim)?;
        let s = |j: u8| spin.value(j / qe as u8);
        let e = |j: u8| disorder.value(j % qe as u8);
        let origin = Site::origin(dim);
        for k in 0..dim {
            phi.add_term_symbols(&[origin, Site::unit(dim, k)], |w| -beta * s(w[0]) * s(w[1]))?;
        }
        if h != 0.0 {
            phi.add_term_symbols(&[origin], |w| -h * e(w[0]) * s(w[0]))?;
        }
        JointModel::new(spin, disorder, phi)
    }

    pub fn spin(&self) -> &Arc<SpinAlphabet> {
        &self.spin
    }

    pub fn disorder(&self) -> &Arc<SpinAlphabet> {
        &self.disorder
    }

    pub fn joint(&self) -> &Arc<SpinAlphabet> {
        &self.joint
    }

    pub fn potential(&self) -> &Potential {
        &self.phi
    }

    pub fn dim(&self) -> usize {
        self.phi.dim()
    }

    pub fn encode(&self, s: u8, e: u8) -> u8 {
        s * self.disorder.len() as u8 + e
    }

    pub fn decode(&self, j: u8) -> (u8, u8) {
        let qe = self.disorder.len() as u8;
        (j / qe, j % qe)
    }

    /// Spin potential with `η` frozen. Terms that do not depend on the
    /// disorder stay translation invariant; the others get one table per
    /// translate lying inside the field's window.
    pub fn quenched(&self, eta: &DisorderField) -> Result<Potential> {
        if **eta.alphabet() != *self.disorder {
            return Err(Error::AlphabetMismatch);
        }
        let qs = self.spin.len();
        let qj = self.joint.len();
        let mut out = Potential::new(self.spin.clone(), self.dim())?;
        for t in self.phi.terms() {
            let n = t.sites().len();
            let mut sw = vec![0u8; n];
            let mut jw = vec![0u8; n];
            let mut independent = true;
            for_each_word(qj, n, |i, w| {
                for (s, j) in sw.iter_mut().zip(w) {
                    *s = self.decode(*j).0;
                }
                let base = encode_word(&sw.iter().map(|s| self.encode(*s, 0)).collect::<Vec<_>>(), qj);
                if t.table()[i] != t.table()[base] {
                    independent = false;
                }
            });
            if independent {
                let table = (0..state_count(qs, n, ENUMERATION_CAP)?)
                    .map(|i| {
                        decode_word(i, qs, &mut sw);
                        for (j, s) in jw.iter_mut().zip(&sw) {
                            *j = self.encode(*s, 0);
                        }
                        t.table()[encode_word(&jw, qj)]
                    })
                    .collect();
                out.add_table(t.sites(), table)?;
                continue;
            }
            let k = out.add_site_indexed(t.sites())?;
            for anchor in eta.window().sites() {
                let es: Option<Vec<u8>> = t.sites().iter().map(|a| eta.get(&anchor.add(a))).collect();
                let Some(es) = es else { continue };
                let table = (0..state_count(qs, n, ENUMERATION_CAP)?)
                    .map(|i| {
                        decode_word(i, qs, &mut sw);
                        for ((j, s), e) in jw.iter_mut().zip(&sw).zip(&es) {
                            *j = self.encode(*s, *e);
                        }
                        t.table()[encode_word(&jw, qj)]
                    })
                    .collect();
                out.set_override(k, anchor, table)?;
            }
        }
        Ok(out)
    }

    /// Trivial annealed potential `U_A = Φ_A - 1_{A={x}} log ℙ₀(η_x)` on joint symbols.
    pub fn annealed(&self, law: &DisorderLaw) -> Result<Potential> {
        if *law.alphabet()? != *self.disorder {
            return Err(Error::AlphabetMismatch);
        }
        let p0 = law.probs();
        let mut extra = Potential::new(self.joint.clone(), self.dim())?;
        extra.add_term_symbols(&[Site::origin(self.dim())], |w| -p0[self.decode(w[0]).1 as usize].ln())?;
        self.phi.plus(&extra)
    }

    /// Joint configuration from spins and disorder on the same window.
    pub fn join(&self, c: &JointConfig) -> Result<Configuration> {
        if c.sigma.window() != c.eta.window() {
            return Err(Error::WindowMismatch);
        }
        let values = c.sigma.values().iter().zip(c.eta.values()).map(|(s, e)| self.encode(*s, *e)).collect();
        Configuration::from_values(self.joint.clone(), *c.sigma.window(), values, Exterior::Undefined)
    }

    pub fn split(&self, xi: &Configuration) -> Result<JointConfig> {
        let (s, e): (Vec<u8>, Vec<u8>) = xi.values().iter().map(|j| self.decode(*j)).unzip();
        Ok(JointConfig {
            sigma: Configuration::from_values(self.spin.clone(), *xi.window(), s, Exterior::Undefined)?,
            eta: DisorderField::new(self.disorder.clone(), *xi.window(), e)?,
        })
    }
}

/// `μ_Λ^{σ̄}[η]` as a kernel table over spins.
pub fn quenched_kernel(model: &JointModel, eta: &DisorderField, volume: &Region, sigma_boundary: &Configuration) -> Result<KernelTable> {
    gibbs_kernel(&model.quenched(eta)?, volume, sigma_boundary)
}

/// Exact joint table or joint samples.
#[derive(Clone, Debug)]
pub enum JointLaw {
    Exact(ExactMeasure),
    Samples(SampleSet),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointTier {
    Exact,
    MC { settings: SamplerSettings, replicas: usize },
}

/// Disorder field on `w` grown by the range of the model, with `inner` on
/// `w` and `exterior` elsewhere.
fn padded_field(model: &JointModel, w: &Window, inner: &[u8], exterior: u8) -> Result<DisorderField> {
    let big = w.expand(model.phi.range() as usize)?;
    let mut f = DisorderField::constant(model.disorder.clone(), big, exterior)?;
    for (x, v) in w.sites().zip(inner) {
        f.set(&x, *v)?;
    }
    Ok(f)
}

/// `ℙ(η_Λ) μ_Λ^{σ̄}[η](σ_Λ)` on a window; outside the window the disorder
/// takes the constant symbol `eta_exterior`.
pub fn joint_measure(model: &JointModel, law: &DisorderLaw, window: &Window, boundary: &SigmaBoundary, eta_exterior: u8, tier: JointTier) -> Result<JointLaw> {
    model.disorder.check(eta_exterior)?;
    if *law.alphabet()? != *model.disorder {
        return Err(Error::AlphabetMismatch);
    }
    let n = window.len();
    let qs = model.spin.len();
    let qe = model.disorder.len();
    let qj = model.joint.len();
    let bc = boundary.condition(&model.spin, model.dim());
    let region = Region::from(window);
    let p0 = law.probs();
    match tier {
        JointTier::Exact => {
            let total = state_count(qj, n, ENUMERATION_CAP)?;
            let n_eta = state_count(qe, n, ENUMERATION_CAP)?;
            let n_sigma = state_count(qs, n, ENUMERATION_CAP)?;
            let blocks: Vec<Result<Vec<(usize, f64)>>> = (0..n_eta)
                .into_par_iter()
                .map(|ei| {
                    let mut ew = vec![0u8; n];
                    decode_word(ei, qe, &mut ew);
                    let pe: f64 = ew.iter().map(|e| p0[*e as usize]).product();
                    let eta = padded_field(model, window, &ew, eta_exterior)?;
                    let plan = EnergyPlan::compile(&model.quenched(&eta)?, &region, &bc)?;
                    let probs = plan.probabilities()?;
                    let mut sw = vec![0u8; n];
                    let mut jw = vec![0u8; n];
                    Ok((0..n_sigma)
                        .map(|si| {
                            decode_word(si, qs, &mut sw);
                            for k in 0..n {
                                jw[k] = model.encode(sw[k], ew[k]);
                            }
                            (encode_word(&jw, qj), pe * probs[si])
                        })
                        .collect())
                })
                .collect();
            let mut table = vec![0.0; total];
            for b in blocks {
                for (i, p) in b? {
                    table[i] = p;
                }
            }
            Ok(JointLaw::Exact(ExactMeasure::new(region, model.joint.clone(), table)?))
        }
        JointTier::MC { settings, replicas } => {
            let runs: Vec<Result<Vec<Vec<u8>>>> = (0..replicas)
                .into_par_iter()
                .map(|r| {
                    let eta = law.sample(*window, settings.seed, 2 * r as u64)?;
                    let padded = padded_field(model, window, eta.values(), eta_exterior)?;
                    let spins = sample_region(&model.quenched(&padded)?, &region, &bc, settings, 2 * r as u64 + 1)?;
                    Ok(spins.into_iter().map(|s| s.iter().zip(eta.values()).map(|(a, e)| model.encode(*a, *e)).collect()).collect())
                })
                .collect();
            let mut samples = Vec::new();
            for r in runs {
                samples.extend(r?);
            }
            Ok(JointLaw::Samples(SampleSet::from_parts(*window, model.joint.clone(), settings, replicas, samples)))
        }
    }
}

/// Finite window standing in for the infinite-volume quenched measures `μ[η]`.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct QuenchedTier {
    pub window: Window,
    pub boundary: SigmaBoundary,
}

impl QuenchedTier {
    /// The volume's bounding box grown by `margin`.
    pub fn around(volume: &Region, margin: usize, boundary: SigmaBoundary) -> Result<QuenchedTier> {
        let w = volume.bounding_window().ok_or_else(|| Error::InvalidWindow("empty volume".into()))?.expand(margin)?;
        Ok(QuenchedTier { window: w, boundary })
    }
}

/// `K[ξ_Λ | ξ_{Λ^c}] ∝ μ^{ann}(ξ_Λ) / Σ_ξ̃ μ^{ann}(ξ̃_Λ) Q(η_Λ, η̃_Λ, η_{Λ^c})` with
/// `Q(η¹, η²) = μ[η² η_{Λ^c}](e^{-ΔH(η¹, η²)})`, the quenched measure realized on
/// the tier window.
pub fn joint_conditional_kernel(model: &JointModel, law: &DisorderLaw, tier: &QuenchedTier, volume: &Region, xi: &Configuration) -> Result<KernelTable> {
    if xi.alphabet() != &model.joint {
        return Err(Error::AlphabetMismatch);
    }
    let w_region = Region::from(tier.window);
    if !volume.is_subset(&w_region) {
        return Err(Error::RegionNotContained);
    }
    let qe = model.disorder.len();
    let qj = model.joint.len();
    let nv = volume.len();
    let ann = gibbs_kernel(&model.annealed(law)?, volume, xi)?;
    let padded = tier.window.expand(model.phi.range() as usize)?;
    let mut base = DisorderField::constant(model.disorder.clone(), padded, 0)?;
    for x in padded.sites() {
        base.set(&x, model.decode(xi.try_get(&x)?).1)?;
    }
    let bc = tier.boundary.condition(&model.spin, model.dim());
    let n_eta = state_count(qe, nv, ENUMERATION_CAP)?;
    // log weights -H of σ_W for every η_Λ
    let weights: Vec<Result<Vec<f64>>> = (0..n_eta)
        .into_par_iter()
        .map(|ei| {
            let mut ew = vec![0u8; nv];
            decode_word(ei, qe, &mut ew);
            let mut eta = base.clone();
            for (x, e) in volume.sites().iter().zip(&ew) {
                eta.set(x, *e)?;
            }
            EnergyPlan::compile(&model.quenched(&eta)?, &w_region, &bc)?.log_weights()
        })
        .collect();
    let weights = weights.into_iter().collect::<Result<Vec<_>>>()?;
    let probs: Vec<Vec<f64>> = weights
        .iter()
        .map(|lw| {
            let mut p = lw.clone();
            crate::potential::normalize_log_weights(&mut p);
            p
        })
        .collect();
    // q[a][b] = μ[η^b](e^{-(H[η^a] - H[η^b])})
    let q: Vec<Vec<f64>> = (0..n_eta)
        .into_par_iter()
        .map(|a| (0..n_eta).map(|b| probs[b].iter().zip(&weights[a]).zip(&weights[b]).map(|((p, la), lb)| p * (la - lb).exp()).sum()).collect())
        .collect();
    let mut eta_mass = vec![0.0; n_eta];
    let mut ew = vec![0u8; nv];
    for_each_word(qj, nv, |i, w| {
        for (e, j) in ew.iter_mut().zip(w) {
            *e = model.decode(*j).1;
        }
        eta_mass[encode_word(&ew, qe)] += ann.probs()[i];
    });
    let denom: Vec<f64> = (0..n_eta).map(|a| (0..n_eta).map(|b| eta_mass[b] * q[a][b]).sum()).collect();
    let mut out = vec![0.0; ann.probs().len()];
    for_each_word(qj, nv, |i, w| {
        for (e, j) in ew.iter_mut().zip(w) {
            *e = model.decode(*j).1;
        }
        out[i] = ann.probs()[i] / denom[encode_word(&ew, qe)];
    });
    let z: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= z);
    KernelTable::new(volume.clone(), xi.clone(), out, None)
}

/// Per-site terms of the finite-volume identity
/// `h_Λ(K|K^free) = h_Λ(K_d|ℙ) - H(K) + H(K_d) + K(H^free_Λ) + K_d(log Z^free_Λ)`.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub struct JointEntropyTerms {
    pub sites: usize,
    pub direct: f64,
    pub disorder_relative: f64,
    pub joint_entropy: f64,
    pub disorder_entropy: f64,
    pub energy: f64,
    pub pressure: f64,
    pub total: f64,
}

/// Decomposes `h_Λ(K|K^free)` for a joint table `K` on a window, with
/// `K^free` the free-boundary joint measure of `model` and `law`.
pub fn joint_entropy_decomposition(model: &JointModel, law: &DisorderLaw, k: &ExactMeasure) -> Result<JointEntropyTerms> {
    let w = k.region().as_window().ok_or_else(|| Error::InvalidWindow("joint table must live on a box".into()))?;
    let n = w.len();
    let qe = model.disorder.len();
    let eta_ext = model.disorder.plus();
    let free = match joint_measure(model, law, &w, &SigmaBoundary::Free, eta_ext, JointTier::Exact)? {
        JointLaw::Exact(m) => m,
        JointLaw::Samples(_) => unreachable!("exact tier"),
    };
    let direct = crate::entropy::relative_entropy_fv(k, &free)?.value();
    let region = k.region().clone();
    let eta_region_values = |j: &[u8]| j.iter().map(|x| model.decode(*x).1).collect::<Vec<u8>>();
    let mut kd = vec![0.0; state_count(qe, n, ENUMERATION_CAP)?];
    for_each_word(model.joint.len(), n, |i, w| kd[encode_word(&eta_region_values(w), qe)] += k.probs()[i]);
    let kd = ExactMeasure::new(region.clone(), model.disorder.clone(), kd)?;
    let prior = ExactMeasure::product(region.clone(), model.disorder.clone(), &law.probs())?;
    let disorder_relative = crate::entropy::relative_entropy_fv(&kd, &prior)?.value();
    let plan = EnergyPlan::compile(&model.phi, &region, &BoundaryCondition::Free)?;
    let energy = k.expectation(|w| plan.energy(w));
    let bc = BoundaryCondition::Free;
    let log_z: Vec<f64> = (0..kd.probs().len())
        .into_par_iter()
        .map(|ei| {
            let mut ew = vec![0u8; n];
            decode_word(ei, qe, &mut ew);
            let eta = padded_field(model, &w, &ew, eta_ext)?;
            EnergyPlan::compile(&model.quenched(&eta)?, &region, &bc)?.log_partition()
        })
        .collect::<Result<Vec<_>>>()?;
    let pressure: f64 = kd.probs().iter().zip(&log_z).filter(|(p, _)| **p > 0.0).map(|(p, z)| p * z).sum();
    let s = n as f64;
    let joint_entropy = k.entropy() / s;
    let disorder_entropy = kd.entropy() / s;
    let t = JointEntropyTerms {
        sites: n,
        direct: direct / s,
        disorder_relative: disorder_relative / s,
        joint_entropy,
        disorder_entropy,
        energy: energy / s,
        pressure: pressure / s,
        total: 0.0,
    };
    Ok(JointEntropyTerms { total: t.disorder_relative - t.joint_entropy + t.disorder_entropy + t.energy + t.pressure, ..t })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::xi_splice;

    fn exact(l: JointLaw) -> ExactMeasure {
        match l {
            JointLaw::Exact(m) => m,
            JointLaw::Samples(_) => panic!("expected a table"),
        }
    }

    fn two_point() -> Arc<SpinAlphabet> {
        DisorderLaw::two_point().alphabet().unwrap()
    }

    #[test]
    fn laws_validate() {
        assert!(DisorderLaw::two_point().validate().is_ok());
        assert!(DisorderLaw::BernoulliOccupancy { p: 0.0 }.validate().is_err());
        let skew = DisorderLaw::SymmetricField { support: vec![-1.0, 1.0], weights: vec![0.3, 0.7] };
        assert!(skew.validate().is_err());
        let zero = DisorderLaw::SymmetricField { support: vec![-1.0, 0.0, 1.0], weights: vec![0.5, 0.0, 0.5] };
        assert!(matches!(zero.validate(), Err(Error::InvalidLaw(_))));
        let three = DisorderLaw::SymmetricField { support: vec![-2.0, 0.0, 2.0], weights: vec![0.25, 0.5, 0.25] };
        assert_eq!(three.alphabet().unwrap().len(), 3);
    }

    #[test]
    fn sampled_field_is_reproducible() {
        let w = Window::interval(0, 99).unwrap();
        let a = DisorderLaw::two_point().sample(w, 9, 0).unwrap();
        let b = DisorderLaw::two_point().sample(w, 9, 0).unwrap();
        let c = DisorderLaw::two_point().sample(w, 9, 1).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn quenched_kernel_examples() {
        let (beta, h) = (0.5, 0.3);
        let model = JointModel::rfim(1, beta, h, two_point()).unwrap();
        let w = Window::interval(-1, 1).unwrap();
        let origin = Region::single(Site::at(&[0]));
        let sigma = Configuration::plus(SpinAlphabet::ising(), w);
        let eta = DisorderField::new(two_point(), w, vec![1, 0, 1]).unwrap();
        let k = quenched_kernel(&model, &eta, &origin, &sigma).unwrap();
        let expect = 0.7f64.exp() / (2.0 * 0.7f64.cosh());
        assert!((k.probs()[1] - expect).abs() < 1e-15);
        assert!((k.probs()[1] - 0.8022).abs() < 1e-4);
        // zero field ⇒ plain Ising
        let flat = JointModel::rfim(1, beta, 0.0, two_point()).unwrap();
        let ising = gibbs_kernel(&Potential::ising(1, beta, 0.0), &origin, &sigma).unwrap();
        assert_eq!(quenched_kernel(&flat, &eta, &origin, &sigma).unwrap().probs(), ising.probs());
        let other = DisorderField::new(two_point(), w, vec![0, 0, 0]).unwrap();
        assert_eq!(quenched_kernel(&flat, &other, &origin, &sigma).unwrap().probs(), ising.probs());
    }

    #[test]
    fn zero_field_symbol_reduces_to_ising() {
        let law = DisorderLaw::SymmetricField { support: vec![-1.0, 0.0, 1.0], weights: vec![0.25, 0.5, 0.25] };
        let model = JointModel::rfim(1, 0.8, 0.6, law.alphabet().unwrap()).unwrap();
        let w = Window::interval(-1, 2).unwrap();
        let vol = Region::from(Window::interval(0, 1).unwrap());
        let sigma = Configuration::constant(SpinAlphabet::ising(), w, 0);
        let eta = DisorderField::constant(law.alphabet().unwrap(), w, 1).unwrap();
        let a = quenched_kernel(&model, &eta, &vol, &sigma).unwrap();
        let b = gibbs_kernel(&Potential::ising(1, 0.8, 0.0), &vol, &sigma).unwrap();
        for (x, y) in a.probs().iter().zip(b.probs()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn coverage_failure_is_reported() {
        let model = JointModel::rfim(1, 0.5, 0.3, two_point()).unwrap();
        let w = Window::interval(-1, 1).unwrap();
        let eta = DisorderField::constant(two_point(), Window::interval(0, 0).unwrap(), 1).unwrap();
        let vol = Region::from(w);
        let sigma = Configuration::plus(SpinAlphabet::ising(), w);
        assert!(matches!(quenched_kernel(&model, &eta, &vol, &sigma), Err(Error::ExteriorUndefined(_))));
    }

    #[test]
    fn joint_measure_structure() {
        let law = DisorderLaw::two_point();
        let w = Window::interval(0, 2).unwrap();
        let region = Region::from(w);
        // h = 0: product of ℙ and Ising
        let model = JointModel::rfim(1, 0.7, 0.0, two_point()).unwrap();
        let k = exact(joint_measure(&model, &law, &w, &SigmaBoundary::Plus, 1, JointTier::Exact).unwrap());
        let ising = crate::measure::finite_gibbs(&Potential::ising(1, 0.7, 0.0), &region, &BoundaryCondition::plus(SpinAlphabet::ising(), 1)).unwrap();
        for_each_word(4, 3, |i, jw| {
            let s: Vec<u8> = jw.iter().map(|j| model.decode(*j).0).collect();
            assert!((k.probs()[i] - ising.prob(&s) / 8.0).abs() < 1e-15);
        });
        // η-marginal is ℙ for any model
        let model = JointModel::rfim(1, 0.7, 0.9, two_point()).unwrap();
        let k = exact(joint_measure(&model, &law, &w, &SigmaBoundary::Minus, 1, JointTier::Exact).unwrap());
        let mut eta = [0.0; 8];
        for_each_word(4, 3, |i, jw| eta[encode_word(&jw.iter().map(|j| model.decode(*j).1).collect::<Vec<_>>(), 2)] += k.probs()[i]);
        assert!(eta.iter().all(|p| (p - 0.125).abs() < 1e-15));
        // β = 0: spins given η are independent single-site tilts
        let model = JointModel::rfim(1, 0.0, 0.9, two_point()).unwrap();
        let k = exact(joint_measure(&model, &law, &w, &SigmaBoundary::Plus, 1, JointTier::Exact).unwrap());
        for_each_word(4, 3, |i, jw| {
            let expect: f64 = jw
                .iter()
                .map(|j| {
                    let (s, e) = model.decode(*j);
                    let field: f64 = 0.9 * if e == 1 { 1.0 } else { -1.0 };
                    let spin: f64 = if s == 1 { 1.0 } else { -1.0 };
                    0.5 * (field * spin).exp() / (2.0 * field.cosh())
                })
                .product();
            assert!((k.probs()[i] - expect).abs() < 1e-15);
        });
    }

    #[test]
    fn mc_joint_samples_are_reproducible() {
        let model = JointModel::rfim(1, 0.5, 0.5, two_point()).unwrap();
        let w = Window::interval(0, 5).unwrap();
        let tier = JointTier::MC { settings: SamplerSettings::new(4, 50, 10), replicas: 3 };
        let run = || match joint_measure(&model, &DisorderLaw::two_point(), &w, &SigmaBoundary::Plus, 1, tier).unwrap() {
            JointLaw::Samples(s) => s,
            JointLaw::Exact(_) => panic!(),
        };
        let (a, b) = (run(), run());
        assert_eq!(a, b);
        assert_eq!(a.len(), 150);
    }

    fn brute_vs_formula(beta: f64, h: f64, n: i32, volume: &Region) -> f64 {
        let law = DisorderLaw::two_point();
        let model = JointModel::rfim(1, beta, h, two_point()).unwrap();
        let w = Window::interval(0, n - 1).unwrap();
        let k = exact(joint_measure(&model, &law, &w, &SigmaBoundary::Plus, 1, JointTier::Exact).unwrap());
        let tier = QuenchedTier { window: w, boundary: SigmaBoundary::Plus };
        let rest = Region::from(w).difference(volume);
        let mut worst = 0.0f64;
        for_each_word(4, rest.len(), |_, rw| {
            let base = Configuration::from_values(model.joint().clone(), w, vec![0; w.len()], Exterior::Constant(model.encode(1, 1))).unwrap();
            let xi = base.overwrite(rest.sites(), rw).unwrap();
            let brute = k.conditional(volume, rw).unwrap().unwrap();
            let formula = joint_conditional_kernel(&model, &law, &tier, volume, &xi).unwrap();
            for (a, b) in brute.probs().iter().zip(formula.probs()) {
                worst = worst.max((a - b).abs());
            }
        });
        worst
    }

    #[test]
    fn conditional_kernel_matches_brute_force() {
        assert!(brute_vs_formula(0.6, 0.4, 3, &Region::single(Site::at(&[1]))) <= 1e-10);
        assert!(brute_vs_formula(1.1, 0.8, 3, &Region::from(Window::interval(0, 1).unwrap())) <= 1e-10);
    }

    #[test]
    fn conditional_kernel_trivial_cases() {
        let law = DisorderLaw::two_point();
        let model = JointModel::rfim(1, 0.9, 0.0, two_point()).unwrap();
        let w = Window::interval(-2, 2).unwrap();
        let vol = Region::from(Window::interval(0, 1).unwrap());
        let tier = QuenchedTier::around(&vol, 1, SigmaBoundary::Plus).unwrap();
        assert_eq!(tier.window, Window::interval(-1, 2).unwrap());
        let vals: Vec<u8> = vec![2, 1, 3, 0, 1];
        let xi = Configuration::from_values(model.joint().clone(), w, vals, Exterior::Constant(3)).unwrap();
        let k = joint_conditional_kernel(&model, &law, &tier, &vol, &xi).unwrap();
        // h = 0: Ising kernel in σ times uniform η
        let sigma = model.split(&xi).unwrap().sigma.with_exterior(Exterior::Constant(1));
        let ising = gibbs_kernel(&Potential::ising(1, 0.9, 0.0), &vol, &sigma).unwrap();
        for_each_word(4, 2, |i, jw| {
            let s: Vec<u8> = jw.iter().map(|j| model.decode(*j).0).collect();
            assert!((k.probs()[i] - ising.prob(&s) / 4.0).abs() < 1e-14);
        });
        let _ = xi_splice;
    }

    #[test]
    fn entropy_decomposition_is_exact() {
        let law = DisorderLaw::two_point();
        let model = JointModel::rfim(1, 0.8, 0.5, two_point()).unwrap();
        let w = Window::interval(0, 3).unwrap();
        let other = JointModel::rfim(1, 0.3, 1.2, two_point()).unwrap();
        let skew = DisorderLaw::SymmetricField { support: vec![-1.0, 1.0], weights: vec![0.5, 0.5] };
        let k = exact(joint_measure(&other, &skew, &w, &SigmaBoundary::Plus, 1, JointTier::Exact).unwrap());
        let t = joint_entropy_decomposition(&model, &law, &k).unwrap();
        assert!((t.direct - t.total).abs() < 1e-10, "{t:?}");
        let own = exact(joint_measure(&model, &law, &w, &SigmaBoundary::Free, 1, JointTier::Exact).unwrap());
        let t = joint_entropy_decomposition(&model, &law, &own).unwrap();
        assert!(t.direct.abs() < 1e-12 && t.total.abs() < 1e-10);
    }
}
