//! Relative entropy, Kolmogorov–Sinai entropy and the reference rates
//! `e⁺_ν`, `e^λ_ν` along the cube schedule `Λ_n = [-n, n]^d`.
//!
//! Sequences are extrapolated by least squares of `a + c/s` on the last five
//! points, with `s = 2n + 1` the side of `Λ_n`. For stationary Markov chains
//! on Z the finite-volume values are exactly of this form, so the fit returns
//! the limit up to rounding.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::lattice::{encode_word, for_each_word, Configuration, Exterior, Region, Site, SpinAlphabet, Window};
use crate::measure::{finite_gibbs, mean_and_batch_se, Edges, ExactMeasure, SampleSet, TransferChain};
use crate::potential::{BoundaryCondition, Potential};
use crate::specification::{d_function, Specification};

/// Finite value in nats or `+∞`; serialized as a number or `"+inf"`.
#[derive(Clone, Copy, PartialEq, Debug)]
pub enum Entropy {
    Finite(f64),
    Infinite,
}

impl Entropy {
    pub fn value(self) -> f64 {
        match self {
            Entropy::Finite(v) => v,
            Entropy::Infinite => f64::INFINITY,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Entropy::Finite(v) => Some(v),
            Entropy::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        self == Entropy::Infinite
    }

    fn map(self, f: impl FnOnce(f64) -> f64) -> Entropy {
        match self {
            Entropy::Finite(v) => Entropy::Finite(f(v)),
            Entropy::Infinite => Entropy::Infinite,
        }
    }
}

impl fmt::Display for Entropy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entropy::Finite(v) => write!(f, "{v}"),
            Entropy::Infinite => write!(f, "+inf"),
        }
    }
}

impl Serialize for Entropy {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Entropy::Finite(v) => s.serialize_f64(*v),
            Entropy::Infinite => s.serialize_str("+inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Entropy {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Entropy, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(Entropy::Finite(v)),
            Repr::Str(s) if s == "+inf" => Ok(Entropy::Infinite),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("expected a number or \"+inf\", got {s:?}"))),
        }
    }
}

/// How a value was computed.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub enum Tier {
    Exact,
    Transfer,
    MC,
}

/// Per-`n` values `h_{Λ_n}/|Λ_n|`, extrapolated density and bracket.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub method: Tier,
    pub points: Vec<(usize, Entropy)>,
    pub density: Entropy,
    pub bracket: (Entropy, Entropy),
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
}

/// A translation-invariant (or cube-indexed) family of marginals.
pub trait MeasureSource: Sync {
    fn alphabet(&self) -> &Arc<SpinAlphabet>;
    fn dim(&self) -> usize;
    fn tier(&self) -> Tier;
    fn marginal(&self, region: &Region) -> Result<ExactMeasure>;
    fn log_prob(&self, region: &Region, values: &[u8]) -> Result<f64> {
        Ok(self.marginal(region)?.prob(values).ln())
    }
    /// Stationary law and transition matrix, for stationary chains on Z.
    fn markov(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        None
    }
    fn samples(&self) -> Option<&SampleSet> {
        None
    }
    /// The symbol carrying all mass at every site, for point masses.
    fn atom(&self) -> Option<u8> {
        None
    }
}

/// I.i.d. sites with a fixed single-site law.
#[derive(Clone, PartialEq, Debug)]
pub struct ProductMeasure {
    alphabet: Arc<SpinAlphabet>,
    dim: usize,
    probs: Vec<f64>,
}

impl ProductMeasure {
    pub fn new(alphabet: Arc<SpinAlphabet>, dim: usize, probs: Vec<f64>) -> Result<ProductMeasure> {
        if probs.len() != alphabet.len() || probs.iter().any(|p| !(*p >= 0.0)) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMeasure("single-site law".into()));
        }
        Ok(ProductMeasure { alphabet, dim, probs })
    }

    /// `P(+1) = p` on the Ising alphabet.
    pub fn bernoulli(dim: usize, p: f64) -> Result<ProductMeasure> {
        ProductMeasure::new(SpinAlphabet::ising(), dim, vec![1.0 - p, p])
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

impl MeasureSource for ProductMeasure {
    fn alphabet(&self) -> &Arc<SpinAlphabet> {
        &self.alphabet
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn tier(&self) -> Tier {
        Tier::Exact
    }
    fn marginal(&self, region: &Region) -> Result<ExactMeasure> {
        ExactMeasure::product(region.clone(), self.alphabet.clone(), &self.probs)
    }
    fn log_prob(&self, _region: &Region, values: &[u8]) -> Result<f64> {
        Ok(values.iter().map(|v| self.probs[*v as usize].ln()).sum())
    }
    fn markov(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        (self.dim == 1).then(|| (self.probs.clone(), self.probs.repeat(self.probs.len())))
    }
}

/// Point mass on a constant configuration; `Delta::plus` is `δ_+`.
#[derive(Clone, PartialEq, Debug)]
pub struct Delta {
    alphabet: Arc<SpinAlphabet>,
    dim: usize,
    symbol: u8,
}

impl Delta {
    pub fn new(alphabet: Arc<SpinAlphabet>, dim: usize, symbol: u8) -> Result<Delta> {
        alphabet.check(symbol)?;
        Ok(Delta { alphabet, dim, symbol })
    }

    pub fn plus(alphabet: Arc<SpinAlphabet>, dim: usize) -> Delta {
        let symbol = alphabet.plus();
        Delta { alphabet, dim, symbol }
    }
}

impl MeasureSource for Delta {
    fn alphabet(&self) -> &Arc<SpinAlphabet> {
        &self.alphabet
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn tier(&self) -> Tier {
        Tier::Exact
    }
    fn marginal(&self, region: &Region) -> Result<ExactMeasure> {
        ExactMeasure::delta(region.clone(), self.alphabet.clone(), &vec![self.symbol; region.len()])
    }
    fn log_prob(&self, _region: &Region, values: &[u8]) -> Result<f64> {
        Ok(if values.iter().all(|v| *v == self.symbol) { 0.0 } else { f64::NEG_INFINITY })
    }
    fn markov(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        if self.dim != 1 {
            return None;
        }
        let q = self.alphabet.len();
        let mut pi = vec![0.0; q];
        pi[self.symbol as usize] = 1.0;
        Some((pi.clone(), pi.repeat(q)))
    }
    fn atom(&self) -> Option<u8> {
        Some(self.symbol)
    }
}

impl MeasureSource for TransferChain {
    fn alphabet(&self) -> &Arc<SpinAlphabet> {
        TransferChain::alphabet(self)
    }
    fn dim(&self) -> usize {
        1
    }
    fn tier(&self) -> Tier {
        Tier::Transfer
    }
    fn marginal(&self, region: &Region) -> Result<ExactMeasure> {
        TransferChain::marginal(self, region)
    }
    fn log_prob(&self, region: &Region, values: &[u8]) -> Result<f64> {
        let c: Vec<(i32, u8)> = region.sites().iter().map(|s| s.coord(0)).zip(values.iter().copied()).collect();
        self.log_cylinder_prob(&c)
    }
    fn markov(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        TransferChain::markov(self)
    }
}

/// A fixed table; marginals on sub-regions of its region.
impl MeasureSource for ExactMeasure {
    fn alphabet(&self) -> &Arc<SpinAlphabet> {
        ExactMeasure::alphabet(self)
    }
    fn dim(&self) -> usize {
        self.region().dim()
    }
    fn tier(&self) -> Tier {
        Tier::Exact
    }
    fn marginal(&self, region: &Region) -> Result<ExactMeasure> {
        ExactMeasure::marginal(self, region)
    }
}

/// Empirical measure of a sample set.
impl MeasureSource for SampleSet {
    fn alphabet(&self) -> &Arc<SpinAlphabet> {
        SampleSet::alphabet(self)
    }
    fn dim(&self) -> usize {
        self.window().dim()
    }
    fn tier(&self) -> Tier {
        Tier::MC
    }
    fn marginal(&self, region: &Region) -> Result<ExactMeasure> {
        let w = self.window();
        let idx = region.sites().iter().map(|s| w.index_of(s).ok_or(Error::SiteOutsideWindow(*s))).collect::<Result<Vec<_>>>()?;
        let q = SampleSet::alphabet(self).len();
        let mut counts = vec![0.0; crate::lattice::state_count(q, region.len(), crate::potential::ENUMERATION_CAP)?];
        let mut word = vec![0u8; idx.len()];
        for s in self.samples() {
            for (d, i) in word.iter_mut().zip(&idx) {
                *d = s[*i];
            }
            counts[encode_word(&word, q)] += 1.0;
        }
        let n = self.len().max(1) as f64;
        counts.iter_mut().for_each(|c| *c /= n);
        ExactMeasure::new(region.clone(), SampleSet::alphabet(self).clone(), counts)
    }
    fn samples(&self) -> Option<&SampleSet> {
        Some(self)
    }
}

/// Exterior of a finite-volume Gibbs source.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolumeBoundary {
    Free,
    Constant(u8),
}

/// Marginals of the Gibbs measure on the region's bounding box grown by
/// `margin`, with a free or constant boundary outside the box.
#[derive(Clone, Debug)]
pub struct FiniteVolumeGibbs {
    phi: Potential,
    boundary: VolumeBoundary,
    margin: usize,
    nn: Option<(Vec<f64>, Vec<f64>)>,
}

impl FiniteVolumeGibbs {
    pub fn new(phi: Potential, boundary: VolumeBoundary, margin: usize) -> Result<FiniteVolumeGibbs> {
        if let VolumeBoundary::Constant(s) = boundary {
            phi.alphabet().check(s)?;
        }
        let nn = if phi.dim() == 1 { phi.nearest_neighbour_1d().ok() } else { None };
        Ok(FiniteVolumeGibbs { phi, boundary, margin, nn })
    }

    fn box_for(&self, region: &Region) -> Result<Window> {
        region.bounding_window().ok_or_else(|| Error::InvalidWindow("empty region".into()))?.expand(self.margin)
    }

    fn chain(&self, w: &Window) -> Option<Result<TransferChain>> {
        let (single, pair) = self.nn.as_ref()?;
        let (lo, hi) = (w.lo().coord(0), w.hi().coord(0));
        let edges = match self.boundary {
            VolumeBoundary::Free => Edges::Free { lo, hi },
            VolumeBoundary::Constant(c) => Edges::Fixed { lo, hi, left: c, right: c },
        };
        Some(TransferChain::from_energies(self.phi.alphabet().clone(), single, pair, edges))
    }
}

impl MeasureSource for FiniteVolumeGibbs {
    fn alphabet(&self) -> &Arc<SpinAlphabet> {
        self.phi.alphabet()
    }
    fn dim(&self) -> usize {
        self.phi.dim()
    }
    fn tier(&self) -> Tier {
        if self.nn.is_some() {
            Tier::Transfer
        } else {
            Tier::Exact
        }
    }
    fn marginal(&self, region: &Region) -> Result<ExactMeasure> {
        let w = self.box_for(region)?;
        if let Some(chain) = self.chain(&w) {
            return chain?.marginal(region);
        }
        let bc = match self.boundary {
            VolumeBoundary::Free => BoundaryCondition::Free,
            VolumeBoundary::Constant(c) => BoundaryCondition::constant(self.phi.alphabet().clone(), self.phi.dim(), c),
        };
        finite_gibbs(&self.phi, &Region::from(w), &bc)?.marginal(region)
    }
    fn log_prob(&self, region: &Region, values: &[u8]) -> Result<f64> {
        let w = self.box_for(region)?;
        match self.chain(&w) {
            Some(chain) => MeasureSource::log_prob(&chain?, region, values),
            None => Ok(self.marginal(region)?.prob(values).ln()),
        }
    }
}

fn check_schedule(schedule: &[usize]) -> Result<()> {
    if schedule.is_empty() || schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidSchedule("schedule must be non-empty and strictly increasing".into()));
    }
    Ok(())
}

fn cube(d: usize, n: usize) -> Region {
    Region::from(Window::cube(d, n))
}

/// Least squares `y = a + c x` over the last five finite points, `x = 1/(2n+1)`.
/// The bracket spans the last three raw values and the fitted limit.
pub fn extrapolate(points: &[(usize, Entropy)]) -> (Entropy, (Entropy, Entropy)) {
    match points.last() {
        None => return (Entropy::Infinite, (Entropy::Infinite, Entropy::Infinite)),
        Some((_, Entropy::Infinite)) => return (Entropy::Infinite, (Entropy::Infinite, Entropy::Infinite)),
        _ => {}
    }
    let finite: Vec<(f64, f64)> = points.iter().filter_map(|(n, v)| v.finite().map(|y| (1.0 / (2 * n + 1) as f64, y))).collect();
    let tail = &finite[finite.len().saturating_sub(5)..];
    let a = if tail.len() < 2 {
        tail[0].1
    } else {
        let k = tail.len() as f64;
        let mx = tail.iter().map(|p| p.0).sum::<f64>() / k;
        let my = tail.iter().map(|p| p.1).sum::<f64>() / k;
        let sxx: f64 = tail.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = tail.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        my - sxy / sxx * mx
    };
    let last3 = &finite[finite.len().saturating_sub(3)..];
    let lo = last3.iter().map(|p| p.1).fold(a, f64::min);
    let hi = last3.iter().map(|p| p.1).fold(a, f64::max);
    (Entropy::Finite(a), (Entropy::Finite(lo), Entropy::Finite(hi)))
}

fn estimate(method: Tier, points: Vec<(usize, Entropy)>, std_error: Option<f64>) -> EntropyEstimate {
    let (density, bracket) = extrapolate(&points);
    EntropyEstimate { method, points, density, bracket, std_error }
}

/// `Σ μ log(μ/ν)` with `0 log 0 = 0`; `+∞` if μ charges a ν-null atom.
pub fn relative_entropy_fv(mu: &ExactMeasure, nu: &ExactMeasure) -> Result<Entropy> {
    if mu.region() != nu.region() {
        return Err(Error::WindowMismatch);
    }
    if mu.alphabet() != nu.alphabet() {
        return Err(Error::AlphabetMismatch);
    }
    let mut h = 0.0;
    for (a, b) in mu.probs().iter().zip(nu.probs()) {
        if *a > 0.0 {
            if *b == 0.0 {
                return Ok(Entropy::Infinite);
            }
            h += a * (a / b).ln();
        }
    }
    Ok(Entropy::Finite(h.max(0.0)))
}

/// `Σ_a π_λ(a) (-log π_ν(a)) + (L-1) Σ_{a,b} π_λ(a) P_λ(a,b) (-log P_ν(a,b))`,
/// the exact cross entropy of two stationary chains on `L` sites.
fn markov_cross_entropy(lam: &(Vec<f64>, Vec<f64>), nu: &(Vec<f64>, Vec<f64>), len: usize) -> Entropy {
    let q = lam.0.len();
    let mut first = 0.0;
    let mut step = 0.0;
    for a in 0..q {
        let pa = lam.0[a];
        if pa == 0.0 {
            continue;
        }
        if nu.0[a] == 0.0 {
            return Entropy::Infinite;
        }
        first -= pa * nu.0[a].ln();
        for b in 0..q {
            let t = lam.1[a * q + b];
            if t == 0.0 {
                continue;
            }
            if nu.1[a * q + b] == 0.0 && len > 1 {
                return Entropy::Infinite;
            }
            step -= pa * t * nu.1[a * q + b].ln();
        }
    }
    Entropy::Finite(first + (len as f64 - 1.0) * step)
}

fn markov_entropy(m: &(Vec<f64>, Vec<f64>), len: usize) -> f64 {
    markov_cross_entropy(m, m, len).value()
}

fn both_markov(mu: &dyn MeasureSource, nu: &dyn MeasureSource) -> Option<((Vec<f64>, Vec<f64>), (Vec<f64>, Vec<f64>))> {
    if mu.dim() != 1 || nu.dim() != 1 {
        return None;
    }
    Some((mu.markov()?, nu.markov()?))
}

fn check_pair(mu: &dyn MeasureSource, nu: &dyn MeasureSource) -> Result<()> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch { expected: nu.dim(), got: mu.dim() });
    }
    if mu.alphabet() != nu.alphabet() {
        return Err(Error::AlphabetMismatch);
    }
    Ok(())
}

/// `h(μ|ν) = lim h_{Λ_n}(μ|ν)/|Λ_n|`.
pub fn relative_entropy_density(mu: &dyn MeasureSource, nu: &dyn MeasureSource, schedule: &[usize]) -> Result<EntropyEstimate> {
    check_schedule(schedule)?;
    check_pair(mu, nu)?;
    if let Some((mm, nm)) = both_markov(mu, nu) {
        let points = schedule
            .iter()
            .map(|n| {
                let len = 2 * n + 1;
                let cross = markov_cross_entropy(&mm, &nm, len);
                (*n, cross.map(|c| (c - markov_entropy(&mm, len)).max(0.0) / len as f64))
            })
            .collect();
        return Ok(estimate(Tier::Transfer, points, None));
    }
    let d = mu.dim();
    let points = schedule
        .par_iter()
        .map(|n| {
            let r = cube(d, *n);
            let h = relative_entropy_fv(&mu.marginal(&r)?, &nu.marginal(&r)?)?;
            Ok((*n, h.map(|v| v / r.len() as f64)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(estimate(mu.tier().max(nu.tier()), points, None))
}

/// `h(μ) = lim -(1/|Λ_n|) Σ μ log μ`.
pub fn ks_entropy(mu: &dyn MeasureSource, schedule: &[usize]) -> Result<EntropyEstimate> {
    check_schedule(schedule)?;
    if let (1, Some(m)) = (mu.dim(), mu.markov()) {
        let points = schedule.iter().map(|n| (*n, Entropy::Finite(markov_entropy(&m, 2 * n + 1) / (2 * n + 1) as f64))).collect();
        return Ok(estimate(Tier::Transfer, points, None));
    }
    let d = mu.dim();
    let points = schedule
        .par_iter()
        .map(|n| {
            let r = cube(d, *n);
            Ok((*n, Entropy::Finite(mu.marginal(&r)?.entropy() / r.len() as f64)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(estimate(mu.tier(), points, None))
}

/// `e⁺_ν = -lim (1/|Λ_n|) log ν(+_{Λ_n})`; evaluated as `e^λ_ν` with `λ = δ_+`.
pub fn e_plus(nu: &dyn MeasureSource, schedule: &[usize]) -> Result<EntropyEstimate> {
    e_lambda(nu, &Delta::plus(nu.alphabet().clone(), nu.dim()), schedule)
}

/// `e^λ_ν = -lim (1/|Λ_n|) ∫ log ν(ξ_{Λ_n}) λ(dξ)`. Sample-backed `λ` gives an
/// MC estimate with batch-means standard error at the last `n`.
pub fn e_lambda(nu: &dyn MeasureSource, lambda: &dyn MeasureSource, schedule: &[usize]) -> Result<EntropyEstimate> {
    check_schedule(schedule)?;
    check_pair(lambda, nu)?;
    if let Some((lm, nm)) = both_markov(lambda, nu) {
        let points = schedule.iter().map(|n| (*n, markov_cross_entropy(&lm, &nm, 2 * n + 1).map(|c| c / (2 * n + 1) as f64))).collect();
        return Ok(estimate(Tier::Transfer, points, None));
    }
    let d = nu.dim();
    if let Some(set) = lambda.samples() {
        let w = set.window();
        let mut points = Vec::new();
        let mut se = None;
        for n in schedule {
            let r = cube(d, *n);
            let idx = r.sites().iter().map(|s| w.index_of(s).ok_or(Error::SiteOutsideWindow(*s))).collect::<Result<Vec<_>>>()?;
            let table = nu.marginal(&r)?;
            let q = nu.alphabet().len();
            let mut word = vec![0u8; idx.len()];
            let mut vals = Vec::with_capacity(set.len());
            for s in set.samples() {
                for (dst, i) in word.iter_mut().zip(&idx) {
                    *dst = s[*i];
                }
                vals.push(-table.probs()[encode_word(&word, q)].ln() / r.len() as f64);
            }
            if vals.iter().any(|v| v.is_infinite()) {
                points.push((*n, Entropy::Infinite));
                se = None;
            } else {
                let (m, e) = mean_and_batch_se(&vals, 20);
                points.push((*n, Entropy::Finite(m)));
                se = Some(e);
            }
        }
        return Ok(estimate(Tier::MC, points, se));
    }
    let points = schedule
        .par_iter()
        .map(|n| {
            let r = cube(d, *n);
            let len = r.len() as f64;
            let ce = match lambda.atom() {
                Some(a) => -nu.log_prob(&r, &vec![a; r.len()])?,
                None => {
                    let lt = lambda.marginal(&r)?;
                    let nt = nu.marginal(&r)?;
                    let mut acc = 0.0;
                    for (l, v) in lt.probs().iter().zip(nt.probs()) {
                        if *l > 0.0 {
                            acc -= l * v.ln();
                        }
                    }
                    acc
                }
            };
            Ok((*n, if ce.is_infinite() { Entropy::Infinite } else { Entropy::Finite(ce / len) }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(estimate(lambda.tier().max(nu.tier()), points, None))
}

/// Terms of `h(μ|ν) = e⁺_ν - h(μ) - ∫ D(σ⁺) μ(dσ)`.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct SullivanReport {
    pub e_plus: Entropy,
    pub ks_entropy: f64,
    pub d_mean: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_std_error: Option<f64>,
    pub density: Entropy,
    pub method: Tier,
}

/// Sites on which `D(σ⁺)` depends through `σ`: `{x ≤ 0, |x|_∞ ≤ R}`.
fn d_support(d: usize, r: u32) -> Result<(Window, Region)> {
    let w = Window::cube(d, r as usize);
    let origin = Site::origin(d);
    let past = Region::new(d, w.sites().filter(|x| x.lex_cmp(&origin) != std::cmp::Ordering::Greater))?;
    Ok((w, past))
}

/// Evaluates `e⁺_ν - h(μ) - E_μ[D(σ⁺)]` for the kernel `γ` of `ν`. The
/// `D`-average is an exact sum over the past of the origin within the
/// dependence radius, or a sample mean when `μ` is sample-backed.
pub fn sullivan_density(gamma: &dyn Specification, mu: &dyn MeasureSource, e_plus: Entropy, schedule: &[usize]) -> Result<SullivanReport> {
    if gamma.alphabet() != mu.alphabet() {
        return Err(Error::AlphabetMismatch);
    }
    let r = gamma.dependence_radius().ok_or_else(|| Error::InvalidConfig("kernel has no finite dependence radius".into()))?;
    let d = gamma.dim();
    let (w, past) = d_support(d, r)?;
    let plus = gamma.alphabet().plus();
    let base = Configuration::from_values(gamma.alphabet().clone(), w, vec![plus; w.len()], Exterior::Constant(plus))?;
    let d_of = |vals: &[u8]| -> Result<f64> { d_function(gamma, &base.overwrite(past.sites(), vals)?) };
    let ks = ks_entropy(mu, schedule)?;
    let (d_mean, d_se) = match mu.samples() {
        Some(set) => {
            let win = set.window();
            let idx = past.sites().iter().map(|s| win.index_of(s).ok_or(Error::SiteOutsideWindow(*s))).collect::<Result<Vec<_>>>()?;
            let vals = set
                .samples()
                .iter()
                .map(|s| d_of(&idx.iter().map(|i| s[*i]).collect::<Vec<_>>()))
                .collect::<Result<Vec<_>>>()?;
            let (m, e) = mean_and_batch_se(&vals, 20);
            (m, Some(e))
        }
        None => {
            let table = mu.marginal(&past)?;
            let q = gamma.alphabet().len();
            let mut words = Vec::new();
            for_each_word(q, past.len(), |i, wd| {
                if table.probs()[i] > 0.0 {
                    words.push((table.probs()[i], wd.to_vec()));
                }
            });
            let terms = words.par_iter().map(|(p, wd)| Ok(p * d_of(wd)?)).collect::<Result<Vec<f64>>>()?;
            (terms.iter().sum(), None)
        }
    };
    let ks_val = ks.density.value();
    Ok(SullivanReport {
        e_plus,
        ks_entropy: ks_val,
        d_mean,
        d_std_error: d_se,
        density: e_plus.map(|e| e - ks_val - d_mean),
        method: ks.method.max(mu.tier()),
    })
}

/// `(1/|Λ_n|) log [μ(+_{Λ_n}) / ν(+_{Λ_n})]`.
pub fn pressure_ratio_check(mu: &dyn MeasureSource, nu: &dyn MeasureSource, schedule: &[usize]) -> Result<EntropyEstimate> {
    check_schedule(schedule)?;
    check_pair(mu, nu)?;
    let d = mu.dim();
    let plus = mu.alphabet().plus();
    let points = schedule
        .par_iter()
        .map(|n| {
            let r = cube(d, *n);
            let ones = vec![plus; r.len()];
            let lm = mu.log_prob(&r, &ones)?;
            let ln = nu.log_prob(&r, &ones)?;
            if lm == f64::NEG_INFINITY {
                return Err(Error::InvalidMeasure(format!("plus cylinder has zero mass under the first measure at n = {n}")));
            }
            Ok((*n, if ln == f64::NEG_INFINITY { Entropy::Infinite } else { Entropy::Finite((lm - ln) / r.len() as f64) }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(estimate(mu.tier().max(nu.tier()), points, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{gibbs_sampler, SamplerSettings};
    use crate::specification::GibbsSpecification;
    use proptest::prelude::*;

    fn ising_chain(beta: f64) -> TransferChain {
        TransferChain::from_potential(&Potential::ising(1, beta, 0.0), Edges::Stationary).unwrap()
    }

    fn e_plus_ising(beta: f64) -> f64 {
        (2.0 * beta.cosh()).ln() - beta
    }

    fn ks_ising(beta: f64) -> f64 {
        (2.0 * beta.cosh()).ln() - beta * beta.tanh()
    }

    /// Density of KL(Ising β′ ‖ Ising β) for stationary chains.
    fn kl_ising(bp: f64, b: f64) -> f64 {
        b.cosh().ln() - bp.cosh().ln() + (bp - b) * bp.tanh()
    }

    const SCHED: [usize; 6] = [1, 2, 3, 4, 6, 8];

    #[test]
    fn finite_volume_examples() {
        let r = Region::single(Site::at(&[0]));
        let a = SpinAlphabet::ising();
        let m = ExactMeasure::product(r.clone(), a.clone(), &[0.7, 0.3]).unwrap();
        let n = ExactMeasure::product(r.clone(), a.clone(), &[0.5, 0.5]).unwrap();
        assert_eq!(relative_entropy_fv(&m, &m).unwrap(), Entropy::Finite(0.0));
        let v = relative_entropy_fv(&m, &n).unwrap().value();
        assert!((v - (0.3 * 0.6f64.ln() + 0.7 * 1.4f64.ln())).abs() < 1e-15);
        assert!((v - 0.082282).abs() < 1e-6);
        let delta = ExactMeasure::delta(r.clone(), a.clone(), &[1]).unwrap();
        let zero = ExactMeasure::delta(r.clone(), a.clone(), &[0]).unwrap();
        assert_eq!(relative_entropy_fv(&delta, &zero).unwrap(), Entropy::Infinite);
        let other = ExactMeasure::product(Region::single(Site::at(&[1])), a, &[0.5, 0.5]).unwrap();
        assert_eq!(relative_entropy_fv(&m, &other), Err(Error::WindowMismatch));
    }

    #[test]
    fn infinity_serializes_as_string() {
        assert_eq!(serde_json::to_string(&Entropy::Infinite).unwrap(), "\"+inf\"");
        assert_eq!(serde_json::from_str::<Entropy>("\"+inf\"").unwrap(), Entropy::Infinite);
        assert_eq!(serde_json::from_str::<Entropy>("0.5").unwrap(), Entropy::Finite(0.5));
    }

    #[test]
    fn product_densities_are_exact_at_every_n() {
        let (p, q): (f64, f64) = (0.3, 0.55);
        let kl = p * (p / q).ln() + (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln();
        let mu = ProductMeasure::bernoulli(1, p).unwrap();
        let nu = ProductMeasure::bernoulli(1, q).unwrap();
        let est = relative_entropy_density(&mu, &nu, &SCHED).unwrap();
        for (_, v) in &est.points {
            assert!((v.value() - kl).abs() < 1e-12);
        }
        assert!((est.density.value() - kl).abs() < 1e-10);
        // enumeration route in d = 2
        let mu2 = ProductMeasure::bernoulli(2, p).unwrap();
        let nu2 = ProductMeasure::bernoulli(2, q).unwrap();
        let est2 = relative_entropy_density(&mu2, &nu2, &[0, 1]).unwrap();
        assert_eq!(est2.method, Tier::Exact);
        for (_, v) in &est2.points {
            assert!((v.value() - kl).abs() < 1e-12);
        }
        assert_eq!(relative_entropy_density(&mu, &mu, &SCHED).unwrap().density, Entropy::Finite(0.0));
    }

    #[test]
    fn ks_closed_forms() {
        let p: f64 = 0.3;
        let hb = -p * p.ln() - (1.0 - p) * (1.0 - p).ln();
        assert!((ks_entropy(&ProductMeasure::bernoulli(1, p).unwrap(), &SCHED).unwrap().density.value() - hb).abs() < 1e-12);
        let uni = ProductMeasure::new(SpinAlphabet::ternary(), 2, vec![1.0 / 3.0; 3]).unwrap();
        for (_, v) in ks_entropy(&uni, &[0, 1]).unwrap().points {
            assert!((v.value() - 3f64.ln()).abs() < 1e-12);
        }
        for beta in [0.0, 0.3, 1.0] {
            let est = ks_entropy(&ising_chain(beta), &SCHED).unwrap();
            assert!((est.density.value() - ks_ising(beta)).abs() < 1e-10, "β={beta}");
        }
    }

    #[test]
    fn reference_rates() {
        let p: f64 = 0.3;
        let nu = ProductMeasure::bernoulli(1, p).unwrap();
        assert!((e_plus(&nu, &SCHED).unwrap().density.value() + p.ln()).abs() < 1e-12);
        let delta = Delta::plus(SpinAlphabet::ising(), 1);
        assert_eq!(e_plus(&delta, &SCHED).unwrap().density, Entropy::Finite(0.0));
        for beta in [0.0, 0.4, 1.0] {
            let est = e_plus(&ising_chain(beta), &SCHED).unwrap();
            assert!((est.density.value() - e_plus_ising(beta)).abs() < 1e-10);
            let (lo, hi) = est.bracket;
            assert!(lo.value() <= est.density.value() && est.density.value() <= hi.value());
        }
        let q: f64 = 0.6;
        let lam = ProductMeasure::bernoulli(1, q).unwrap();
        let ce = -q * p.ln() - (1.0 - q) * (1.0 - p).ln();
        assert!((e_lambda(&nu, &lam, &SCHED).unwrap().density.value() - ce).abs() < 1e-12);
        let hb = -p * p.ln() - (1.0 - p) * (1.0 - p).ln();
        assert!((e_lambda(&nu, &nu, &SCHED).unwrap().density.value() - hb).abs() < 1e-12);
    }

    #[test]
    fn e_lambda_of_delta_is_e_plus() {
        let nu = FiniteVolumeGibbs::new(Potential::ising(1, 0.5, 0.1), VolumeBoundary::Constant(0), 2).unwrap();
        let a = e_plus(&nu, &SCHED).unwrap();
        let b = e_lambda(&nu, &Delta::plus(SpinAlphabet::ising(), 1), &SCHED).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn plus_cylinder_of_symmetric_chain() {
        let beta: f64 = 0.7;
        let chain = ising_chain(beta);
        for n in [1usize, 5, 30] {
            let r = cube(1, n);
            let len = r.len() as f64;
            let exact = -(2f64.ln() + (len - 1.0) * ((2.0 * beta.cosh()).ln() - beta));
            assert!((MeasureSource::log_prob(&chain, &r, &vec![1; r.len()]).unwrap() - exact).abs() < 1e-9);
        }
    }

    #[test]
    fn ising_kl_density_closed_form() {
        for (bp, b) in [(0.3, 0.6), (1.0, 0.0), (0.6, 0.6)] {
            let est = relative_entropy_density(&ising_chain(bp), &ising_chain(b), &SCHED).unwrap();
            assert!((est.density.value() - kl_ising(bp, b)).abs() < 1e-10, "{bp} {b}");
        }
        // Bernoulli(1/2) against Ising β: log cosh β
        let fair = ProductMeasure::bernoulli(1, 0.5).unwrap();
        let est = relative_entropy_density(&fair, &ising_chain(0.8), &SCHED).unwrap();
        assert!((est.density.value() - 0.8f64.cosh().ln()).abs() < 1e-10);
    }

    #[test]
    fn markov_route_matches_enumeration() {
        let mu = ising_chain(0.3);
        let nu = ising_chain(0.9);
        let fast = relative_entropy_density(&mu, &nu, &[0, 1, 2, 3]).unwrap();
        for (n, v) in fast.points {
            let r = cube(1, n);
            let slow = relative_entropy_fv(&MeasureSource::marginal(&mu, &r).unwrap(), &MeasureSource::marginal(&nu, &r).unwrap()).unwrap();
            assert!((slow.value() / r.len() as f64 - v.value()).abs() < 1e-12);
        }
    }

    #[test]
    fn sullivan_matches_direct() {
        for (bp, b) in [(0.3, 0.6), (0.6, 0.6), (0.0, 1.0)] {
            let nu = ising_chain(b);
            let mu = ising_chain(bp);
            let gamma = GibbsSpecification::new(Potential::ising(1, b, 0.0));
            let ep = e_plus(&nu, &SCHED).unwrap().density;
            let s = sullivan_density(&gamma, &mu, ep, &SCHED).unwrap();
            let direct = relative_entropy_density(&mu, &nu, &SCHED).unwrap().density.value();
            assert!((s.density.value() - direct).abs() < 1e-8, "{bp} {b}: {} vs {direct}", s.density.value());
            // D(σ⁺) = β(σ0 − 1)(σ_{−1} + 1) averages to β(⟨σ0σ_{−1}⟩ + ⟨σ0⟩ − ⟨σ_{−1}⟩ − 1)
            assert!((s.d_mean - b * (bp.tanh() - 1.0)).abs() < 1e-12);
        }
        let fair = ProductMeasure::bernoulli(1, 0.5).unwrap();
        let gamma = GibbsSpecification::new(Potential::ising(1, 0.0, 0.0));
        let s = sullivan_density(&gamma, &fair, Entropy::Finite(2f64.ln()), &SCHED).unwrap();
        assert!(s.density.value().abs() < 1e-12);
    }

    #[test]
    fn sullivan_with_samples_is_close() {
        let phi = Potential::ising(1, 0.4, 0.0);
        let w = Window::interval(-12, 12).unwrap();
        let set = gibbs_sampler(&phi, &w, &BoundaryCondition::Free, SamplerSettings::new(5, 4000, 100)).unwrap();
        let gamma = GibbsSpecification::new(Potential::ising(1, 0.8, 0.0));
        let s = sullivan_density(&gamma, &set, Entropy::Finite(e_plus_ising(0.8)), &[0, 1, 2]).unwrap();
        let se = s.d_std_error.unwrap();
        assert!((s.d_mean - 0.8 * (0.4f64.tanh() - 1.0)).abs() < 4.0 * se + 0.02);
        assert_eq!(s.method, Tier::MC);
    }

    #[test]
    fn pressure_ratio_examples() {
        let (b1, b2): (f64, f64) = (0.3, 0.9);
        let est = pressure_ratio_check(&ising_chain(b1), &ising_chain(b2), &SCHED).unwrap();
        let expect = (b2.cosh().ln() - b2) - (b1.cosh().ln() - b1);
        assert!((est.density.value() - expect).abs() < 1e-10);
        let same = pressure_ratio_check(&ising_chain(b1), &ising_chain(b1), &SCHED).unwrap();
        assert!(same.points.iter().all(|(_, v)| v.value() == 0.0));
        let phi = Potential::ising(1, 0.8, 0.0);
        let plus = FiniteVolumeGibbs::new(phi.clone(), VolumeBoundary::Constant(1), 0).unwrap();
        let minus = FiniteVolumeGibbs::new(phi, VolumeBoundary::Constant(0), 0).unwrap();
        let est = pressure_ratio_check(&plus, &minus, &[5, 10, 20, 40, 80]).unwrap();
        assert!(est.density.value().abs() < 1e-8);
        // boundary effect is O(1): each point is 4β/|Λ|
        for (n, v) in est.points {
            assert!((v.value() - 4.0 * 0.8 / (2 * n + 1) as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn relative_entropy_grows_with_volume() {
        let big = Region::from(Window::interval(-5, 5).unwrap());
        let a = SpinAlphabet::ising();
        let mu = finite_gibbs(&Potential::ising(1, 0.9, 0.0), &big, &BoundaryCondition::plus(a.clone(), 1)).unwrap();
        let nu = finite_gibbs(&Potential::ising(1, 0.2, 0.1), &big, &BoundaryCondition::Free).unwrap();
        let mut prev = 0.0;
        for n in 0..=5 {
            let r = cube(1, n);
            let h = relative_entropy_fv(&mu.marginal(&r).unwrap(), &nu.marginal(&r).unwrap()).unwrap().value();
            assert!(h >= prev - 1e-12);
            prev = h;
        }
    }

    #[test]
    fn schedule_must_increase() {
        let mu = ProductMeasure::bernoulli(1, 0.5).unwrap();
        assert!(matches!(ks_entropy(&mu, &[2, 2]), Err(Error::InvalidSchedule(_))));
        assert!(matches!(ks_entropy(&mu, &[]), Err(Error::InvalidSchedule(_))));
    }

    #[test]
    fn extrapolation_recovers_linear_model() {
        let pts: Vec<(usize, Entropy)> = (1..8).map(|n| (n, Entropy::Finite(0.25 + 3.0 / (2 * n + 1) as f64))).collect();
        let (d, (lo, hi)) = extrapolate(&pts);
        assert!((d.value() - 0.25).abs() < 1e-12);
        assert!(lo.value() <= d.value() && d.value() <= hi.value());
        assert_eq!(extrapolate(&[(1, Entropy::Finite(0.5)), (2, Entropy::Infinite)]).0, Entropy::Infinite);
    }

    proptest! {
        #[test]
        fn relative_entropy_is_nonnegative(raw in prop::collection::vec((0.0f64..1.0, 0.01f64..1.0), 8)) {
            let r = Region::from(Window::interval(0, 2).unwrap());
            let zm: f64 = raw.iter().map(|x| x.0).sum::<f64>() + 1e-9;
            let zn: f64 = raw.iter().map(|x| x.1).sum();
            let mut pm: Vec<f64> = raw.iter().map(|x| x.0 / zm).collect();
            let fix = 1.0 - pm.iter().sum::<f64>();
            pm[0] += fix;
            let pn: Vec<f64> = raw.iter().map(|x| x.1 / zn).collect();
            let a = SpinAlphabet::ising();
            let m = ExactMeasure::new(r.clone(), a.clone(), pm).unwrap();
            let n = ExactMeasure::new(r, a, pn).unwrap();
            prop_assert!(relative_entropy_fv(&m, &n).unwrap().value() >= 0.0);
        }

        #[test]
        fn product_kl_is_additive(p in 0.05f64..0.95, q in 0.05f64..0.95, n in 0usize..4) {
            let r = cube(1, n);
            let a = SpinAlphabet::ising();
            let m = ExactMeasure::product(r.clone(), a.clone(), &[1.0 - p, p]).unwrap();
            let v = ExactMeasure::product(r.clone(), a, &[1.0 - q, q]).unwrap();
            let single = p * (p / q).ln() + (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln();
            prop_assert!((relative_entropy_fv(&m, &v).unwrap().value() - r.len() as f64 * single).abs() < 1e-12);
        }
    }
}
