//! Conditional laws of a decimated finite-volume Gibbs measure. Pinning the
//! kept sites outside the volume leaves a Gibbs measure on the hidden sites
//! and the volume's preimage, which is enumerated or sampled.

use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{encode_word, for_each_word, state_count, Configuration, Exterior, Region, Site, SpinAlphabet, Window};
use crate::potential::{BoundaryCondition, EnergyPlan, Potential, ENUMERATION_CAP};
use crate::specification::{KernelTable, Specification};

use super::decimation_sites;
use super::sampler::{mean_and_batch_se, sample_region, SamplerSettings};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelTier {
    Exact,
    MC(SamplerSettings),
}

/// `γ'_Λ(σ'_Λ | σ'_{T∖Λ})` for the decimation by `b` of the Gibbs measure of
/// `phi` on `window` with constant boundary symbol `exterior`. Volumes and
/// boundaries live on the decimated window `T`.
#[derive(Clone, Debug)]
pub struct DecimatedKernel {
    phi: Potential,
    window: Window,
    target: Window,
    kept: Vec<Site>,
    exterior: u8,
    b: usize,
    tier: KernelTier,
}

impl DecimatedKernel {
    pub fn new(phi: Potential, window: Window, exterior: u8, b: usize, tier: KernelTier) -> Result<DecimatedKernel> {
        phi.alphabet().check(exterior)?;
        let (target, kept) = decimation_sites(&window, b)?;
        Ok(DecimatedKernel { phi, window, target, kept, exterior, b, tier })
    }

    pub fn target(&self) -> &Window {
        &self.target
    }

    pub fn factor(&self) -> usize {
        self.b
    }

    fn original(&self, y: &Site) -> Site {
        self.kept[self.target.index_of(y).expect("inside target")]
    }
}

/// Stream for one boundary so that parallel kernel calls stay reproducible.
fn boundary_stream(values: &[u8]) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    values.hash(&mut h);
    h.finish()
}

impl Specification for DecimatedKernel {
    fn alphabet(&self) -> &Arc<SpinAlphabet> {
        self.phi.alphabet()
    }

    fn dim(&self) -> usize {
        self.phi.dim()
    }

    fn kernel(&self, volume: &Region, boundary: &Configuration) -> Result<KernelTable> {
        let target = Region::from(self.target);
        if !volume.is_subset(&target) {
            return Err(Error::RegionNotContained);
        }
        let pinned = target.difference(volume);
        let pinned_values = boundary.read(pinned.sites())?;
        let mut fixed = Configuration::from_values(self.phi.alphabet().clone(), self.window, vec![self.exterior; self.window.len()], Exterior::Constant(self.exterior))?;
        for (y, v) in pinned.sites().iter().zip(&pinned_values) {
            fixed.set(&self.original(y), *v)?;
        }
        let pinned_orig = Region::new(self.dim(), pinned.sites().iter().map(|y| self.original(y)))?;
        let free = Region::from(self.window).difference(&pinned_orig);
        let pos: Vec<usize> = volume.sites().iter().map(|y| free.index_of(&self.original(y)).expect("volume preimage is free")).collect();
        let q = self.phi.alphabet().len();
        let bc = BoundaryCondition::Fixed(fixed);
        let out_states = state_count(q, volume.len(), ENUMERATION_CAP)?;
        let mut probs = vec![0.0; out_states];
        let mut word = vec![0u8; pos.len()];
        match self.tier {
            KernelTier::Exact => {
                let p = EnergyPlan::compile(&self.phi, &free, &bc)?.probabilities()?;
                for_each_word(q, free.len(), |i, w| {
                    for (d, k) in word.iter_mut().zip(&pos) {
                        *d = w[*k];
                    }
                    probs[encode_word(&word, q)] += p[i];
                });
                KernelTable::new(volume.clone(), boundary.clone(), probs, None)
            }
            KernelTier::MC(settings) => {
                let samples = sample_region(&self.phi, &free, &bc, settings, boundary_stream(&pinned_values))?;
                let hits: Vec<usize> = samples
                    .iter()
                    .map(|s| {
                        for (d, k) in word.iter_mut().zip(&pos) {
                            *d = s[*k];
                        }
                        encode_word(&word, q)
                    })
                    .collect();
                let mut errs = vec![0.0; out_states];
                for a in 0..out_states {
                    let series: Vec<f64> = hits.iter().map(|h| if *h == a { 1.0 } else { 0.0 }).collect();
                    let (m, se) = mean_and_batch_se(&series, 20);
                    probs[a] = m;
                    errs[a] = se;
                }
                KernelTable::new(volume.clone(), boundary.clone(), probs, Some(errs))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::for_each_word;
    use crate::measure::{decimate, finite_gibbs};
    use crate::specification::{oscillation, ExtensionFamily, LocalFunction};

    #[test]
    fn exact_kernel_is_the_conditional_of_the_decimated_table() {
        let phi = Potential::ising(1, 0.9, 0.2);
        let w = Window::interval(0, 8).unwrap();
        let table = decimate(&finite_gibbs(&phi, &Region::from(w), &BoundaryCondition::plus(SpinAlphabet::ising(), 1)).unwrap(), 2).unwrap();
        let k = DecimatedKernel::new(phi, w, 1, 2, KernelTier::Exact).unwrap();
        let vol = Region::from(Window::interval(1, 2).unwrap());
        let rest = Region::from(k.target()).difference(&vol);
        for_each_word(2, rest.len(), |_, rw| {
            let base = Configuration::plus(SpinAlphabet::ising(), *k.target());
            let omega = base.overwrite(rest.sites(), rw).unwrap();
            let got = k.kernel(&vol, &omega).unwrap();
            let want = table.conditional(&vol, rw).unwrap().unwrap();
            for (a, b) in got.probs().iter().zip(want.probs()) {
                assert!((a - b).abs() < 1e-13);
            }
        });
    }

    #[test]
    fn zero_coupling_decimation_has_no_oscillation() {
        let w = Window::cube(2, 2);
        let k = DecimatedKernel::new(Potential::ising(2, 0.0, 0.0), w, 1, 2, KernelTier::Exact).unwrap();
        let origin = Site::origin(2);
        let f = LocalFunction::indicator("plus_at_origin", vec![origin], vec![1]);
        let center = Configuration::plus(SpinAlphabet::ising(), *k.target());
        let exts: Vec<Configuration> = [0u8, 1].iter().map(|s| Configuration::constant(SpinAlphabet::ising(), *k.target(), *s)).collect();
        let r = oscillation(&k, &f, &Region::single(origin), &center, 0, &ExtensionFamily::Listed(exts)).unwrap();
        assert!(r.gap < 1e-15);
    }

    #[test]
    fn mc_kernel_tracks_exact_and_reproduces() {
        let phi = Potential::ising(2, 0.6, 0.0);
        let w = Window::cube(2, 2);
        let exact = DecimatedKernel::new(phi.clone(), w, 1, 2, KernelTier::Exact).unwrap();
        let mc = DecimatedKernel::new(phi, w, 1, 2, KernelTier::MC(SamplerSettings::new(3, 20000, 500))).unwrap();
        let vol = Region::single(Site::origin(2));
        let omega = Configuration::from_values(SpinAlphabet::ising(), *exact.target(), vec![0, 1, 0, 1, 1, 0, 1, 0, 0], Exterior::Constant(1)).unwrap();
        let a = exact.kernel(&vol, &omega).unwrap();
        let b = mc.kernel(&vol, &omega).unwrap();
        let se = b.std_errors().unwrap()[1];
        assert!((a.probs()[1] - b.probs()[1]).abs() < 4.0 * se + 1e-3, "{} {} {se}", a.probs()[1], b.probs()[1]);
        assert_eq!(b, mc.kernel(&vol, &omega).unwrap());
    }
}
