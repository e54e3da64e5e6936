//! Measure representations: exact tables, transfer chains and Monte Carlo
//! sample sets, with marginals, decimation and domination checks.

pub mod decimated;
pub mod domination;
pub mod sampler;
pub mod transfer;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{decode_word, for_each_word, state_count, Region, Site, SpinAlphabet, Window};
use crate::potential::{BoundaryCondition, EnergyPlan, Potential, ENUMERATION_CAP};

pub use decimated::{DecimatedKernel, KernelTier};
pub use domination::{stochastic_domination_check, DominationReport};
pub use sampler::{gibbs_sampler, gibbs_sampler_replicas, mean_and_batch_se, SampleSet, SamplerSettings};
pub use transfer::{Edges, TransferChain};

/// Tables larger than this are not written out as JSON.
pub const JSON_TABLE_CAP: usize = 1 << 16;

/// Full probability table on a region, row-major in the region's site order.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct ExactMeasure {
    region: Region,
    alphabet: Arc<SpinAlphabet>,
    probs: Vec<f64>,
}

impl ExactMeasure {
    pub fn new(region: Region, alphabet: Arc<SpinAlphabet>, probs: Vec<f64>) -> Result<ExactMeasure> {
        let n = state_count(alphabet.len(), region.len(), ENUMERATION_CAP)?;
        if probs.len() != n {
            return Err(Error::InvalidMeasure(format!("{} entries for {} states", probs.len(), n)));
        }
        if probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidMeasure("negative or non-finite probability".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidMeasure(format!("probabilities sum to {total}")));
        }
        Ok(ExactMeasure { region, alphabet, probs })
    }

    /// Independent sites with the given single-site law.
    pub fn product(region: Region, alphabet: Arc<SpinAlphabet>, single: &[f64]) -> Result<ExactMeasure> {
        let q = alphabet.len();
        if single.len() != q {
            return Err(Error::InvalidMeasure("single-site law has wrong length".into()));
        }
        let n = region.len();
        let mut probs = vec![0.0; state_count(q, n, ENUMERATION_CAP)?];
        for_each_word(q, n, |i, w| probs[i] = w.iter().map(|a| single[*a as usize]).product());
        ExactMeasure::new(region, alphabet, probs)
    }

    /// Point mass on one configuration of the region.
    pub fn delta(region: Region, alphabet: Arc<SpinAlphabet>, values: &[u8]) -> Result<ExactMeasure> {
        let q = alphabet.len();
        let mut probs = vec![0.0; state_count(q, region.len(), ENUMERATION_CAP)?];
        probs[crate::lattice::encode_word(values, q)] = 1.0;
        ExactMeasure::new(region, alphabet, probs)
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn alphabet(&self) -> &Arc<SpinAlphabet> {
        &self.alphabet
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, values: &[u8]) -> f64 {
        self.probs[crate::lattice::encode_word(values, self.alphabet.len())]
    }

    pub fn expectation(&self, f: impl Fn(&[u8]) -> f64) -> f64 {
        let mut acc = 0.0;
        for_each_word(self.alphabet.len(), self.region.len(), |i, w| {
            if self.probs[i] > 0.0 {
                acc += self.probs[i] * f(w);
            }
        });
        acc
    }

    /// Shannon entropy `-Σ μ log μ` in nats.
    pub fn entropy(&self) -> f64 {
        -self.probs.iter().filter(|p| **p > 0.0).map(|p| p * p.ln()).sum::<f64>()
    }

    /// Exact marginal on a sub-region.
    pub fn marginal(&self, sub: &Region) -> Result<ExactMeasure> {
        if !sub.is_subset(&self.region) {
            return Err(Error::RegionNotContained);
        }
        if sub == &self.region {
            return Ok(self.clone());
        }
        let q = self.alphabet.len();
        let pos: Vec<usize> = sub.sites().iter().map(|s| self.region.index_of(s).expect("subset")).collect();
        let mut out = vec![0.0; state_count(q, sub.len(), ENUMERATION_CAP)?];
        for_each_word(q, self.region.len(), |i, w| {
            let j = pos.iter().fold(0, |acc, p| acc * q + w[*p] as usize);
            out[j] += self.probs[i];
        });
        Ok(ExactMeasure { region: sub.clone(), alphabet: self.alphabet.clone(), probs: out })
    }

    /// Image under a symbol map into another alphabet (e.g. projecting joint
    /// symbols to one component).
    pub fn map_symbols(&self, target: Arc<SpinAlphabet>, f: impl Fn(u8) -> u8) -> Result<ExactMeasure> {
        let q = self.alphabet.len();
        let qt = target.len();
        let mut out = vec![0.0; state_count(qt, self.region.len(), ENUMERATION_CAP)?];
        let mut mapped = vec![0u8; self.region.len()];
        for_each_word(q, self.region.len(), |i, w| {
            for (m, s) in mapped.iter_mut().zip(w) {
                *m = f(*s);
            }
            out[crate::lattice::encode_word(&mapped, qt)] += self.probs[i];
        });
        ExactMeasure::new(self.region.clone(), target, out)
    }

    /// Conditional law on `volume` given the values of the remaining sites
    /// (listed in region order). `None` if the condition has probability 0.
    pub fn conditional(&self, volume: &Region, rest: &[u8]) -> Result<Option<ExactMeasure>> {
        if !volume.is_subset(&self.region) {
            return Err(Error::RegionNotContained);
        }
        let q = self.alphabet.len();
        let inner: Vec<usize> = volume.sites().iter().map(|s| self.region.index_of(s).expect("subset")).collect();
        let outer: Vec<usize> = (0..self.region.len()).filter(|i| !inner.contains(i)).collect();
        if rest.len() != outer.len() {
            return Err(Error::InvalidMeasure("condition has wrong length".into()));
        }
        let mut full = vec![0u8; self.region.len()];
        for (p, v) in outer.iter().zip(rest) {
            full[*p] = *v;
        }
        let mut out = vec![0.0; state_count(q, volume.len(), ENUMERATION_CAP)?];
        for_each_word(q, volume.len(), |j, w| {
            for (p, v) in inner.iter().zip(w) {
                full[*p] = *v;
            }
            out[j] = self.probs[crate::lattice::encode_word(&full, q)];
        });
        let z: f64 = out.iter().sum();
        if z == 0.0 {
            return Ok(None);
        }
        out.iter_mut().for_each(|p| *p /= z);
        Ok(Some(ExactMeasure { region: volume.clone(), alphabet: self.alphabet.clone(), probs: out }))
    }

    /// Table as JSON, refusing tables above the size cap.
    pub fn to_json(&self) -> Result<String> {
        if self.probs.len() > JSON_TABLE_CAP {
            return Err(Error::StateSpaceTooLarge { states: self.probs.len() as f64, cap: JSON_TABLE_CAP });
        }
        Ok(serde_json::to_string(self)?)
    }
}

/// Finite-volume Gibbs measure; the same table as the specification kernel.
pub fn finite_gibbs(phi: &Potential, volume: &Region, bc: &BoundaryCondition) -> Result<ExactMeasure> {
    let plan = EnergyPlan::compile(phi, volume, bc)?;
    let probs = plan.probabilities()?;
    Ok(ExactMeasure { region: volume.clone(), alphabet: phi.alphabet().clone(), probs })
}

fn decimation_target(w: &Window, b: usize) -> Result<Window> {
    if b == 0 {
        return Err(Error::DecimationMismatch { b });
    }
    let bi = b as i32;
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for k in 0..w.dim() {
        let (l, h) = (w.lo().coord(k), w.hi().coord(k));
        if l.rem_euclid(bi) != 0 || (h - l) % bi != 0 {
            return Err(Error::DecimationMismatch { b });
        }
        lo.push(l.div_euclid(bi));
        hi.push(h.div_euclid(bi));
    }
    Window::new(Site::new(&lo)?, Site::new(&hi)?)
}

/// Sites of `w` on the sublattice `bZ^d`, in the order of the dense target window.
fn decimation_sites(w: &Window, b: usize) -> Result<(Window, Vec<Site>)> {
    let target = decimation_target(w, b)?;
    let bi = b as i32;
    let sites = target
        .sites()
        .map(|s| Site::new(&s.coords().iter().map(|c| c * bi).collect::<Vec<_>>()).expect("dimension"))
        .collect();
    Ok((target, sites))
}

/// Law of `{σ(bx)}` reindexed to a dense window. The window must have
/// corners on `bZ^d`.
pub fn decimate(mu: &ExactMeasure, b: usize) -> Result<ExactMeasure> {
    let w = mu.region.as_window().ok_or_else(|| Error::InvalidWindow("decimation needs a box".into()))?;
    let (target, sites) = decimation_sites(&w, b)?;
    let sub = Region::new(w.dim(), sites)?;
    let m = mu.marginal(&sub)?;
    Ok(ExactMeasure { region: Region::from(target), alphabet: mu.alphabet.clone(), probs: m.probs })
}

pub fn decimate_samples(set: &SampleSet, b: usize) -> Result<SampleSet> {
    let w = set.window();
    let (target, sites) = decimation_sites(&w, b)?;
    let idx: Vec<usize> = sites.iter().map(|s| w.index_of(s).expect("inside")).collect();
    let samples = set.samples().iter().map(|v| idx.iter().map(|i| v[*i]).collect()).collect();
    Ok(set.with_samples(target, samples))
}

/// Decodes a row-major table index into symbols.
pub fn word(idx: usize, q: usize, n: usize) -> Vec<u8> {
    let mut out = vec![0u8; n];
    decode_word(idx, q, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Configuration;
    use crate::specification::{GibbsSpecification, Specification};

    #[test]
    fn zero_potential_is_uniform() {
        let phi = Potential::zero(SpinAlphabet::ternary(), 2);
        let m = finite_gibbs(&phi, &Region::from(Window::cube(2, 1)), &BoundaryCondition::Free).unwrap();
        let u = 3f64.powi(-9);
        assert!(m.probs().iter().all(|p| (p - u).abs() < 1e-18));
    }

    #[test]
    fn single_site_field() {
        let h = 0.7;
        let phi = Potential::ising(1, 0.0, h);
        let m = finite_gibbs(&phi, &Region::single(Site::at(&[0])), &BoundaryCondition::Free).unwrap();
        assert!((m.probs()[1] - h.exp() / (2.0 * h.cosh())).abs() < 1e-15);
    }

    #[test]
    fn finite_gibbs_is_kernel_table() {
        let phi = Potential::ising(2, 0.45, 0.1);
        let vol = Region::from(Window::cube(2, 1));
        let omega = Configuration::constant(SpinAlphabet::ising(), Window::cube(2, 2), 0);
        let m = finite_gibbs(&phi, &vol, &BoundaryCondition::Fixed(omega.clone())).unwrap();
        let k = GibbsSpecification::new(phi).kernel(&vol, &omega).unwrap();
        assert_eq!(m.probs(), k.probs());
    }

    #[test]
    fn marginal_identity_and_product() {
        let r = Region::from(Window::interval(0, 3).unwrap());
        let m = ExactMeasure::product(r.clone(), SpinAlphabet::ising(), &[0.3, 0.7]).unwrap();
        assert_eq!(m.marginal(&r).unwrap(), m);
        let sub = Region::new(1, [Site::at(&[0]), Site::at(&[2])]).unwrap();
        let mg = m.marginal(&sub).unwrap();
        let expect = [0.09, 0.21, 0.21, 0.49];
        for (a, b) in mg.probs().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(m.marginal(&Region::single(Site::at(&[9]))).is_err());
    }

    #[test]
    fn dlr_on_subwindow() {
        // Σ_ω μ(ω) γ_Λ(σ|ω) = μ_Λ(σ) for the finite Gibbs measure itself.
        let phi = Potential::ising(1, 0.8, 0.25);
        let big = Window::interval(0, 5).unwrap();
        let plus = Configuration::plus(SpinAlphabet::ising(), big.expand(1).unwrap());
        let mu = finite_gibbs(&phi, &Region::from(big), &BoundaryCondition::Fixed(plus.clone())).unwrap();
        let inner = Region::from(Window::interval(2, 3).unwrap());
        let spec = GibbsSpecification::new(phi);
        let mut composed = vec![0.0; 4];
        for_each_word(2, big.len(), |i, w| {
            let omega = plus.overwrite(&big.sites().collect::<Vec<_>>(), w).unwrap();
            let k = spec.kernel(&inner, &omega).unwrap();
            for (c, p) in composed.iter_mut().zip(k.probs()) {
                *c += mu.probs()[i] * p;
            }
        });
        let direct = mu.marginal(&inner).unwrap();
        for (a, b) in composed.iter().zip(direct.probs()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn decimation_rules() {
        let phi = Potential::ising(1, 0.6, 0.0);
        let w = Window::interval(0, 8).unwrap();
        let mu = finite_gibbs(&phi, &Region::from(w), &BoundaryCondition::Free).unwrap();
        assert_eq!(decimate(&mu, 1).unwrap(), mu);
        let d22 = decimate(&decimate(&mu, 2).unwrap(), 2).unwrap();
        let d4 = decimate(&mu, 4).unwrap();
        assert_eq!(d22.region(), d4.region());
        for (a, b) in d22.probs().iter().zip(d4.probs()) {
            assert!((a - b).abs() < 1e-15);
        }
        let odd = finite_gibbs(&phi, &Region::from(Window::interval(0, 3).unwrap()), &BoundaryCondition::Free).unwrap();
        assert_eq!(decimate(&odd, 2), Err(Error::DecimationMismatch { b: 2 }));
    }

    #[test]
    fn decimated_product_is_product() {
        let r = Region::from(Window::new(Site::at(&[0, 0]), Site::at(&[2, 2])).unwrap());
        let m = ExactMeasure::product(r, SpinAlphabet::ising(), &[0.2, 0.8]).unwrap();
        let d = decimate(&m, 2).unwrap();
        let expect = ExactMeasure::product(d.region().clone(), SpinAlphabet::ising(), &[0.2, 0.8]).unwrap();
        for (a, b) in d.probs().iter().zip(expect.probs()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn decimated_free_chain_renormalizes() {
        let beta: f64 = 0.9;
        let beta2 = (beta.tanh().powi(2)).atanh();
        for n in 1..=10 {
            let fine = Window::interval(0, 2 * (n - 1)).unwrap();
            let mu = finite_gibbs(&Potential::ising(1, beta, 0.0), &Region::from(fine), &BoundaryCondition::Free).unwrap();
            let coarse = Window::interval(0, n - 1).unwrap();
            let nu = TransferChain::from_potential(&Potential::ising(1, beta2, 0.0), Edges::Free { lo: 0, hi: n - 1 }).unwrap().window_marginal(&coarse).unwrap();
            let d = decimate(&mu, 2).unwrap();
            for (a, b) in d.probs().iter().zip(nu.probs()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn conditional_and_map() {
        let r = Region::from(Window::interval(0, 1).unwrap());
        let m = ExactMeasure::new(r.clone(), SpinAlphabet::ising(), vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let c = m.conditional(&Region::single(Site::at(&[1])), &[1]).unwrap().unwrap();
        assert!((c.probs()[0] - 3.0 / 7.0).abs() < 1e-15);
        let collapsed = m.map_symbols(SpinAlphabet::binary(), |_| 0).unwrap();
        assert_eq!(collapsed.probs()[0], 1.0);
        assert!(ExactMeasure::new(r, SpinAlphabet::ising(), vec![0.5, 0.5, 0.5, -0.5]).is_err());
    }
}
