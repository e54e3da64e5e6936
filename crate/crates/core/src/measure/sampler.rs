//! Single-site heat-bath sampler. Sites are updated in raster (row-major)
//! order; each update draws from the exact single-site Gibbs kernel.

use std::io::{BufRead, Write};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Configuration, Exterior, Region, SpinAlphabet, Window};
use crate::potential::{BoundaryCondition, EnergyPlan, Potential};

pub const SAMPLER_ID: &str = "heat-bath/chacha8/raster";

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct SamplerSettings {
    pub seed: u64,
    pub sweeps: usize,
    pub burn_in: usize,
    #[serde(default = "one")]
    pub thin: usize,
}

fn one() -> usize {
    1
}

impl SamplerSettings {
    pub fn new(seed: u64, sweeps: usize, burn_in: usize) -> SamplerSettings {
        SamplerSettings { seed, sweeps, burn_in, thin: 1 }
    }
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct SampleHeader {
    pub sampler: String,
    pub seed: u64,
    pub sweeps: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub replicas: usize,
    pub window: Window,
    pub alphabet: Arc<SpinAlphabet>,
}

#[derive(Clone, PartialEq, Debug)]
pub struct SampleSet {
    header: SampleHeader,
    samples: Vec<Vec<u8>>,
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    header: SampleHeader,
}

impl SampleSet {
    pub fn header(&self) -> &SampleHeader {
        &self.header
    }

    pub fn window(&self) -> Window {
        self.header.window
    }

    pub fn alphabet(&self) -> &Arc<SpinAlphabet> {
        &self.header.alphabet
    }

    pub fn samples(&self) -> &[Vec<u8>] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn configurations(&self) -> impl Iterator<Item = Configuration> + '_ {
        let a = self.alphabet().clone();
        self.samples.iter().map(move |v| Configuration::from_values(a.clone(), self.header.window, v.clone(), Exterior::Undefined).expect("validated"))
    }

    pub(crate) fn from_parts(window: Window, alphabet: Arc<SpinAlphabet>, settings: SamplerSettings, replicas: usize, samples: Vec<Vec<u8>>) -> SampleSet {
        let header = SampleHeader {
            sampler: SAMPLER_ID.to_string(),
            seed: settings.seed,
            sweeps: settings.sweeps,
            burn_in: settings.burn_in,
            thin: settings.thin,
            replicas,
            window,
            alphabet,
        };
        SampleSet { header, samples }
    }

    pub(crate) fn with_samples(&self, window: Window, samples: Vec<Vec<u8>>) -> SampleSet {
        SampleSet { header: SampleHeader { window, ..self.header.clone() }, samples }
    }

    /// Mean of `f` over samples with a batch-means standard error (20 batches).
    pub fn estimate(&self, f: impl Fn(&[u8]) -> f64) -> (f64, f64) {
        let vals: Vec<f64> = self.samples.iter().map(|s| f(s)).collect();
        mean_and_batch_se(&vals, 20)
    }

    /// Writes a header line followed by one JSON array per sample.
    pub fn write_jsonl(&self, mut w: impl Write) -> Result<()> {
        serde_json::to_writer(&mut w, &HeaderLine { header: self.header.clone() })?;
        w.write_all(b"\n")?;
        for s in &self.samples {
            serde_json::to_writer(&mut w, s)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl(r: impl BufRead) -> Result<SampleSet> {
        let mut lines = r.lines();
        let first = lines.next().ok_or_else(|| Error::InvalidConfig("empty sample file".into()))??;
        let header: HeaderLine = serde_json::from_str(&first)?;
        let n = header.header.window.len();
        let mut samples = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let s: Vec<u8> = serde_json::from_str(&line)?;
            if s.len() != n || s.iter().any(|v| *v as usize >= header.header.alphabet.len()) {
                return Err(Error::InvalidConfig("sample does not match the header window".into()));
            }
            samples.push(s);
        }
        Ok(SampleSet { header: header.header, samples })
    }
}

pub fn mean_and_batch_se(vals: &[f64], batches: usize) -> (f64, f64) {
    let n = vals.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = vals.iter().sum::<f64>() / n as f64;
    let b = batches.min(n);
    if b < 2 {
        return (mean, f64::NAN);
    }
    let size = n / b;
    let means: Vec<f64> = (0..b).map(|k| vals[k * size..(k + 1) * size].iter().sum::<f64>() / size as f64).collect();
    let bm = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|m| (m - bm).powi(2)).sum::<f64>() / (b - 1) as f64;
    (mean, (var / b as f64).sqrt())
}

struct LocalUpdate {
    plan: EnergyPlan,
    sources: Vec<Option<usize>>,
}

/// Heat-bath chain on `window`; one recorded sample per `thin` sweeps after
/// burn-in.
pub fn gibbs_sampler(phi: &Potential, window: &Window, bc: &BoundaryCondition, settings: SamplerSettings) -> Result<SampleSet> {
    gibbs_sampler_replicas(phi, window, bc, settings, 1)
}

/// Independent replicas; replica `r` uses ChaCha8 stream `r` of the master
/// seed. Samples are concatenated in replica order.
pub fn gibbs_sampler_replicas(phi: &Potential, window: &Window, bc: &BoundaryCondition, settings: SamplerSettings, replicas: usize) -> Result<SampleSet> {
    if settings.thin == 0 {
        return Err(Error::InvalidConfig("thin must be positive".into()));
    }
    let region = Region::from(window);
    let updates = region
        .sites()
        .iter()
        .map(|x| EnergyPlan::compile_local(phi, &region, *x, bc).map(|(plan, sources)| LocalUpdate { plan, sources }))
        .collect::<Result<Vec<_>>>()?;
    let q = phi.alphabet().len();
    let runs: Vec<Vec<Vec<u8>>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut updates: Vec<LocalUpdate> = updates.iter().map(|u| LocalUpdate { plan: u.plan.clone(), sources: u.sources.clone() }).collect();
            run_chain(&mut updates, q, settings, r as u64)
        })
        .collect();
    let header = SampleHeader {
        sampler: SAMPLER_ID.into(),
        seed: settings.seed,
        sweeps: settings.sweeps,
        burn_in: settings.burn_in,
        thin: settings.thin,
        replicas,
        window: *window,
        alphabet: phi.alphabet().clone(),
    };
    Ok(SampleSet { header, samples: runs.into_iter().flatten().collect() })
}

/// Heat-bath samples of the configuration on an arbitrary finite region,
/// values in the region's site order.
pub(crate) fn sample_region(phi: &Potential, region: &Region, bc: &BoundaryCondition, settings: SamplerSettings, stream: u64) -> Result<Vec<Vec<u8>>> {
    let mut updates = region
        .sites()
        .iter()
        .map(|x| EnergyPlan::compile_local(phi, region, *x, bc).map(|(plan, sources)| LocalUpdate { plan, sources }))
        .collect::<Result<Vec<_>>>()?;
    Ok(run_chain(&mut updates, phi.alphabet().len(), settings, stream))
}

fn run_chain(updates: &mut [LocalUpdate], q: usize, settings: SamplerSettings, stream: u64) -> Vec<Vec<u8>> {
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    rng.set_stream(stream);
    let n = updates.len();
    let mut state: Vec<u8> = (0..n).map(|_| rng.gen_range(0..q) as u8).collect();
    let mut probs = vec![0.0; q];
    let mut digit = [0u8; 1];
    let mut out = Vec::with_capacity(settings.sweeps / settings.thin + 1);
    for sweep in 0..settings.burn_in + settings.sweeps {
        for (i, u) in updates.iter_mut().enumerate() {
            for (k, src) in u.sources.iter().enumerate() {
                if let Some(j) = src {
                    u.plan.set_outer_value(k, state[*j]);
                }
            }
            u.plan.probabilities_into(&mut probs, &mut digit);
            let r: f64 = rng.gen();
            let mut acc = 0.0;
            let mut pick = q - 1;
            for (a, p) in probs.iter().enumerate() {
                acc += p;
                if r < acc {
                    pick = a;
                    break;
                }
            }
            state[i] = pick as u8;
        }
        if sweep >= settings.burn_in && (sweep - settings.burn_in) % settings.thin == 0 {
            out.push(state.clone());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Site;
    use crate::measure::{finite_gibbs, Edges, TransferChain};
    use crate::specification::{GibbsSpecification, Specification};

    #[test]
    fn beta_zero_is_uniform() {
        let phi = Potential::ising(2, 0.0, 0.0);
        let w = Window::cube(2, 1);
        let set = gibbs_sampler(&phi, &w, &BoundaryCondition::Free, SamplerSettings::new(11, 4000, 10)).unwrap();
        for i in 0..w.len() {
            let (m, se) = set.estimate(|s| s[i] as f64);
            assert!((m - 0.5).abs() < 3.0 * se.max(0.5 / (set.len() as f64).sqrt()), "site {i}: {m} ± {se}");
        }
    }

    #[test]
    fn nearest_neighbour_correlation_matches_transfer() {
        let beta = 0.5;
        let phi = Potential::ising(1, beta, 0.0);
        let w = Window::interval(0, 15).unwrap();
        let set = gibbs_sampler(&phi, &w, &BoundaryCondition::Free, SamplerSettings::new(3, 20000, 200)).unwrap();
        let chain = TransferChain::from_potential(&phi, Edges::Free { lo: 0, hi: 15 }).unwrap();
        let mg = chain.marginal(&Region::new(1, [Site::at(&[7]), Site::at(&[8])]).unwrap()).unwrap();
        let exact = mg.expectation(|v| if v[0] == v[1] { 1.0 } else { -1.0 });
        let (m, se) = set.estimate(|s| if s[7] == s[8] { 1.0 } else { -1.0 });
        assert!((m - exact).abs() < 3.0 * se, "{m} ± {se} vs {exact}");
    }

    #[test]
    fn same_seed_same_samples() {
        let phi = Potential::ising(2, 0.4, 0.1);
        let w = Window::cube(2, 1);
        let s = SamplerSettings::new(99, 50, 5);
        let a = gibbs_sampler_replicas(&phi, &w, &BoundaryCondition::Free, s, 3).unwrap();
        let b = gibbs_sampler_replicas(&phi, &w, &BoundaryCondition::Free, s, 3).unwrap();
        assert_eq!(a, b);
        let mut ba = Vec::new();
        let mut bb = Vec::new();
        a.write_jsonl(&mut ba).unwrap();
        b.write_jsonl(&mut bb).unwrap();
        assert_eq!(ba, bb);
        let back = SampleSet::read_jsonl(&ba[..]).unwrap();
        assert_eq!(back, a);
        let c = gibbs_sampler_replicas(&phi, &w, &BoundaryCondition::Free, SamplerSettings::new(100, 50, 5), 3).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn local_update_equals_kernel() {
        let phi = Potential::ising(2, 0.7, -0.2);
        let w = Window::cube(2, 1);
        let omega = Configuration::constant(SpinAlphabet::ising(), w.expand(1).unwrap(), 1);
        let bc = BoundaryCondition::Fixed(omega.clone());
        let region = Region::from(w);
        let spec = GibbsSpecification::new(phi.clone());
        let state: Vec<u8> = vec![0, 1, 1, 0, 1, 0, 0, 0, 1];
        for x in region.sites() {
            let (mut plan, sources) = EnergyPlan::compile_local(&phi, &region, *x, &bc).unwrap();
            for (k, src) in sources.iter().enumerate() {
                if let Some(j) = src {
                    plan.set_outer_value(k, state[*j]);
                }
            }
            let mut probs = vec![0.0; 2];
            plan.probabilities_into(&mut probs, &mut [0u8]);
            let full = omega.overwrite(region.sites(), &state).unwrap();
            let k = spec.kernel(&Region::single(*x), &full).unwrap();
            assert_eq!(probs.as_slice(), k.probs());
        }
    }

    #[test]
    fn stationary_frequencies_on_2x2() {
        let phi = Potential::ising(2, 0.4, 0.2);
        let w = Window::with_sides(Site::at(&[0, 0]), &[2, 2]).unwrap();
        let plus = BoundaryCondition::plus(SpinAlphabet::ising(), 2);
        let exact = finite_gibbs(&phi, &Region::from(w), &plus).unwrap();
        let set = gibbs_sampler_replicas(&phi, &w, &plus, SamplerSettings::new(5, 5000, 100), 4).unwrap();
        for (idx, p) in exact.probs().iter().enumerate() {
            let word = crate::measure::word(idx, 2, 4);
            let (m, se) = set.estimate(|s| (s == word.as_slice()) as u8 as f64);
            assert!((m - p).abs() < 3.0 * se.max(1e-3), "state {idx}: {m} ± {se} vs {p}");
        }
    }
}
