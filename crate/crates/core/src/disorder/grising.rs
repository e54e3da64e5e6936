//! Griffiths-Ising field `ξ = σ η`: i.i.d. site occupation `η` with
//! probability `p`, free-boundary Ising spins on each occupied cluster.
//! Clusters are cut at the window edge and keep free boundary there.

use petgraph::unionfind::UnionFind;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{for_each_word, state_count, Configuration, Exterior, Region, Site, SpinAlphabet, Window};
use crate::measure::sampler::sample_region;
use crate::measure::{ExactMeasure, SamplerSettings};
use crate::potential::{BoundaryCondition, EnergyPlan, Potential, ENUMERATION_CAP};

use super::{DisorderLaw, JointConfig};

/// Largest cluster drawn by exact enumeration.
pub const EXACT_CLUSTER: usize = 20;

/// Heat-bath sweeps discarded before taking a large cluster's spins.
const CLUSTER_BURN_IN: usize = 500;

/// Ternary symbol of `ξ = σ η` for a spin symbol and occupation.
fn xi_symbol(spin: u8, occupied: bool) -> u8 {
    if !occupied {
        1
    } else if spin == 1 {
        2
    } else {
        0
    }
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct GriSingSample {
    pub joint: JointConfig,
    /// `ξ` over `{-1, 0, +1}`.
    pub xi: Configuration,
    pub clusters: usize,
    pub largest_cluster: usize,
    /// Fraction of occupied sites whose cluster touches the window edge.
    pub boundary_fraction: f64,
}

fn validate(p: f64, beta: f64) -> Result<()> {
    DisorderLaw::BernoulliOccupancy { p }.validate()?;
    if !beta.is_finite() {
        return Err(Error::InvalidPotential(format!("inverse temperature {beta} is not finite")));
    }
    Ok(())
}

/// Nearest-neighbour index pairs of a window.
fn bonds(w: &Window) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (i, x) in w.sites().enumerate() {
        for k in 0..w.dim() {
            if let Some(j) = w.index_of(&x.add(&Site::unit(w.dim(), k))) {
                out.push((i, j));
            }
        }
    }
    out
}

/// Draws occupation, clusters and spins. Occupation uses stream 0 of
/// `seed`, small clusters stream 1, and cluster `c` above
/// [`EXACT_CLUSTER`] sites runs its own heat-bath chain on stream `2 + c`.
pub fn grising_sample(p: f64, beta: f64, window: Window, seed: u64) -> Result<GriSingSample> {
    validate(p, beta)?;
    let dim = window.dim();
    let law = DisorderLaw::BernoulliOccupancy { p };
    let eta = law.sample(window, seed, 0)?;
    let occ: Vec<bool> = eta.values().iter().map(|v| *v == 1).collect();
    let n = window.len();
    let mut uf = UnionFind::<usize>::new(n);
    for (i, j) in bonds(&window) {
        if occ[i] && occ[j] {
            uf.union(i, j);
        }
    }
    let labels = uf.into_labeling();
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in (0..n).filter(|i| occ[*i]) {
        let root = labels[i];
        if slot[root] == usize::MAX {
            slot[root] = clusters.len();
            clusters.push(Vec::new());
        }
        clusters[slot[root]].push(i);
    }
    let edge = |i: usize| {
        let x = window.site_at(i);
        (0..dim).any(|k| x.coord(k) == window.lo().coord(k) || x.coord(k) == window.hi().coord(k))
    };
    let ising = Potential::ising(dim, beta, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut spins = vec![0u8; n];
    let mut touching = 0usize;
    for (c, members) in clusters.iter().enumerate() {
        let region = Region::new(dim, members.iter().map(|i| window.site_at(*i)))?;
        let values = if members.len() <= EXACT_CLUSTER {
            let probs = EnergyPlan::compile(&ising, &region, &BoundaryCondition::Free)?.probabilities()?;
            let r: f64 = rng.gen();
            let mut acc = 0.0;
            let mut pick = probs.len() - 1;
            for (k, q) in probs.iter().enumerate() {
                acc += q;
                if r < acc {
                    pick = k;
                    break;
                }
            }
            let mut w = vec![0u8; members.len()];
            crate::lattice::decode_word(pick, 2, &mut w);
            w
        } else {
            let settings = SamplerSettings::new(seed, 1, CLUSTER_BURN_IN);
            sample_region(&ising, &region, &BoundaryCondition::Free, settings, 2 + c as u64)?.pop().expect("one sweep kept")
        };
        for (x, v) in region.sites().iter().zip(values) {
            spins[window.index_of(x).expect("cluster inside window")] = v;
        }
        if members.iter().any(|i| edge(*i)) {
            touching += members.len();
        }
    }
    let occupied = occ.iter().filter(|o| **o).count();
    let xi_values = spins.iter().zip(&occ).map(|(s, o)| xi_symbol(*s, *o)).collect();
    Ok(GriSingSample {
        joint: JointConfig { sigma: Configuration::from_values(SpinAlphabet::ising(), window, spins, Exterior::Undefined)?, eta },
        xi: Configuration::from_values(SpinAlphabet::ternary(), window, xi_values, Exterior::Undefined)?,
        clusters: clusters.len(),
        largest_cluster: clusters.iter().map(Vec::len).max().unwrap_or(0),
        boundary_fraction: if occupied == 0 { 0.0 } else { touching as f64 / occupied as f64 },
    })
}

/// Exact law of `ξ` on the window. Given an occupation pattern the spins
/// on occupied sites carry weight `exp(β Σ σ_x σ_y)` over occupied bonds,
/// which is the product of free Ising measures over its clusters.
pub fn grising_measure(p: f64, beta: f64, window: &Window) -> Result<ExactMeasure> {
    validate(p, beta)?;
    let n = window.len();
    let total = state_count(3, n, ENUMERATION_CAP)?;
    let bonds = bonds(window);
    let mut table = vec![0.0; total];
    let mut spins = vec![0u8; n];
    for mask in 0..state_count(2, n, ENUMERATION_CAP)? {
        let occ: Vec<bool> = (0..n).map(|i| mask >> (n - 1 - i) & 1 == 1).collect();
        let sites: Vec<usize> = (0..n).filter(|i| occ[*i]).collect();
        let k = sites.len();
        let p_mask = p.powi(k as i32) * (1.0 - p).powi((n - k) as i32);
        let inner: Vec<(usize, usize)> = bonds.iter().copied().filter(|(i, j)| occ[*i] && occ[*j]).collect();
        let mut weights = Vec::with_capacity(1 << k);
        let mut idx = Vec::with_capacity(1 << k);
        for_each_word(2, k, |_, w| {
            for (s, i) in w.iter().zip(&sites) {
                spins[*i] = *s;
            }
            let e: f64 = inner.iter().map(|(i, j)| if spins[*i] == spins[*j] { 1.0 } else { -1.0 }).sum();
            weights.push(beta * e);
            idx.push((0..n).fold(0usize, |acc, i| acc * 3 + xi_symbol(spins[i], occ[i]) as usize));
        });
        crate::potential::normalize_log_weights(&mut weights);
        for (i, w) in idx.into_iter().zip(weights) {
            table[i] += p_mask * w;
        }
    }
    ExactMeasure::new(Region::from(window), SpinAlphabet::ternary(), table)
}

/// `log K(ξ_Λ = 0)` on the full window. Only the empty occupation pattern
/// produces `ξ ≡ 0`, so this is `|Λ| log(1 - p)` for every `β`.
pub fn grising_log_cylinder(p: f64, beta: f64, window: &Window) -> Result<f64> {
    validate(p, beta)?;
    Ok(window.len() as f64 * (-p).ln_1p())
}
