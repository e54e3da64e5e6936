//! Disorder-averaged truncated two-point function
//! `c(m) = sup_x ∫ ℙ(dη) |μ[η](σ_x σ_{x+m e₁}) - μ[η](σ_x) μ[η](σ_{x+m e₁})|`,
//! with the supremum over translates inside the window.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Region, Site, Window};
use crate::measure::sampler::sample_region;
use crate::measure::{finite_gibbs, SamplerSettings};

use super::{padded_field, DisorderLaw, JointModel, SigmaBoundary};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationTier {
    Exact,
    MC(SamplerSettings),
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub m: usize,
    pub mean: f64,
    /// Standard error over disorder replicas; MC runs add the sampler error in quadrature.
    pub std_error: f64,
    pub replicas: usize,
    pub pairs: usize,
    /// First site of the maximizing pair.
    pub argmax: Site,
}

/// `c(m)` rows and, per replica, the truncated correlation of each row's
/// maximizing pair.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct CorrelationDecay {
    pub rows: Vec<CorrelationRow>,
    pub per_replica: Vec<Vec<f64>>,
}

/// Per replica: single-site means and two-point means for every pair.
struct Moments {
    one: Vec<f64>,
    two: Vec<Vec<f64>>,
    /// Sampler error of each truncated correlation (zero when exact).
    err: Vec<Vec<f64>>,
}

fn spin_value(model: &JointModel, s: u8) -> f64 {
    model.spin().value(s)
}

fn exact_moments(model: &JointModel, phi: &crate::potential::Potential, region: &Region, bc: &crate::potential::BoundaryCondition) -> Result<Moments> {
    let table = finite_gibbs(phi, region, bc)?;
    let n = region.len();
    let q = model.spin().len();
    let mut one = vec![0.0; n];
    let mut two = vec![vec![0.0; n]; n];
    let mut vals = vec![0.0; n];
    crate::lattice::for_each_word(q, n, |i, w| {
        let p = table.probs()[i];
        if p == 0.0 {
            return;
        }
        for (v, s) in vals.iter_mut().zip(w) {
            *v = spin_value(model, *s);
        }
        for a in 0..n {
            one[a] += p * vals[a];
            for b in a + 1..n {
                two[a][b] += p * vals[a] * vals[b];
            }
        }
    });
    Ok(Moments { one, two, err: vec![vec![0.0; n]; n] })
}

fn mc_moments(model: &JointModel, phi: &crate::potential::Potential, region: &Region, bc: &crate::potential::BoundaryCondition, settings: SamplerSettings, stream: u64) -> Result<Moments> {
    let samples = sample_region(phi, region, bc, settings, stream)?;
    let n = region.len();
    let k = samples.len() as f64;
    let vals: Vec<Vec<f64>> = samples.iter().map(|s| s.iter().map(|a| spin_value(model, *a)).collect()).collect();
    let one: Vec<f64> = (0..n).map(|a| vals.iter().map(|v| v[a]).sum::<f64>() / k).collect();
    let mut two = vec![vec![0.0; n]; n];
    let mut err = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in a + 1..n {
            let series: Vec<f64> = vals.iter().map(|v| (v[a] - one[a]) * (v[b] - one[b])).collect();
            let (_, se) = crate::measure::mean_and_batch_se(&series, 20);
            two[a][b] = vals.iter().map(|v| v[a] * v[b]).sum::<f64>() / k;
            err[a][b] = se;
        }
    }
    Ok(Moments { one, two, err })
}

/// `c(m)` for each `m`. Replica `r` draws `η` from stream `2r` of `seed`
/// and, at the MC tier, runs its spin chain on stream `2r + 1`.
#[allow(clippy::too_many_arguments)]
pub fn quenched_correlation_decay(
    model: &JointModel,
    law: &DisorderLaw,
    ms: &[usize],
    window: &Window,
    boundary: &SigmaBoundary,
    replicas: usize,
    seed: u64,
    tier: CorrelationTier,
) -> Result<CorrelationDecay> {
    if replicas == 0 {
        return Err(Error::InvalidConfig("at least one disorder replica is required".into()));
    }
    if ms.iter().any(|m| *m == 0 || *m >= window.side(0)) {
        return Err(Error::InvalidConfig("every distance must lie in 1..side".into()));
    }
    let region = Region::from(window);
    let bc = boundary.condition(model.spin(), model.dim());
    let eta_ext = model.disorder().plus();
    let moments: Vec<Moments> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let eta = law.sample(*window, seed, 2 * r as u64)?;
            let phi = model.quenched(&padded_field(model, window, eta.values(), eta_ext)?)?;
            match tier {
                CorrelationTier::Exact => exact_moments(model, &phi, &region, &bc),
                CorrelationTier::MC(settings) => mc_moments(model, &phi, &region, &bc, settings, 2 * r as u64 + 1),
            }
        })
        .collect::<Result<_>>()?;
    let dim = window.dim();
    let e1 = Site::unit(dim, 0);
    let mut rows = Vec::with_capacity(ms.len());
    let mut per_replica = vec![Vec::with_capacity(ms.len()); replicas];
    for &m in ms {
        let shift = Site::at(&e1.coords().iter().map(|c| c * m as i32).collect::<Vec<_>>());
        let mut best: Option<(f64, f64, Site, Vec<f64>)> = None;
        let mut pairs = 0;
        for x in window.sites() {
            let y = x.add(&shift);
            let (Some(a), Some(b)) = (region.index_of(&x), region.index_of(&y)) else { continue };
            pairs += 1;
            let vals: Vec<f64> = moments.iter().map(|mo| (mo.two[a][b] - mo.one[a] * mo.one[b]).abs()).collect();
            let r = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / r;
            let var = if vals.len() > 1 { vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0) } else { 0.0 };
            let sampler: f64 = moments.iter().map(|mo| mo.err[a][b].powi(2)).sum::<f64>() / (r * r);
            let se = (var / r + sampler).sqrt();
            if best.as_ref().is_none_or(|b| mean > b.0) {
                best = Some((mean, se, x, vals));
            }
        }
        let (mean, std_error, argmax, vals) = best.expect("distance below side length");
        for (acc, v) in per_replica.iter_mut().zip(vals) {
            acc.push(v);
        }
        rows.push(CorrelationRow { m, mean, std_error, replicas, pairs, argmax });
    }
    Ok(CorrelationDecay { rows, per_replica })
}
