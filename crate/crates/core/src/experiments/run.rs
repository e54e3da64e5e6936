//! One runner per experiment. Each returns its result rows, named pass/fail
//! checks, and sidecar CSV / JSON-lines payloads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::disorder::{
    ad_check, grising_log_cylinder, grising_measure, grising_sample, joint_conditional_kernel, joint_entropy_bound_check, joint_entropy_decomposition, joint_measure,
    markov_decoupling_constant, plus_minus_tables, quenched_correlation_decay, specification_gap, CorrelationTier, DisorderLaw, JointLaw, JointModel, JointTier, QuenchedTier,
    SigmaBoundary,
};
use crate::entropy::{e_plus, ks_entropy, relative_entropy_density, sullivan_density, Entropy, ProductMeasure, Tier};
use crate::error::Result;
use crate::lattice::{for_each_word, state_count, Configuration, Exterior, Region, Site, SpinAlphabet, Window};
use crate::measure::{decimate, finite_gibbs, stochastic_domination_check, DecimatedKernel, Edges, ExactMeasure, KernelTier, SamplerSettings, TransferChain};
use crate::potential::{BoundaryCondition, Potential};
use crate::specification::{check_consistent, check_proper, oscillation, telescoping_identity_check, CylinderEvent, ExtensionFamily, GibbsSpecification, LocalFunction};

use super::config::*;

/// A named assertion evaluated by an experiment.
#[derive(Clone, PartialEq, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, pass: bool, detail: String) -> Check {
        Check { name: name.into(), pass, detail }
    }
}

/// Extra file written next to the experiment's JSON.
#[derive(Clone, PartialEq, Debug)]
pub struct Sidecar {
    pub suffix: String,
    pub bytes: Vec<u8>,
}

#[derive(Clone, PartialEq, Debug)]
pub struct Outcome {
    pub results: Value,
    pub checks: Vec<Check>,
    pub sidecars: Vec<Sidecar>,
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| crate::Error::Io(e.to_string()))?;
    }
    w.into_inner().map_err(|e| crate::Error::Io(e.to_string()))
}

fn jsonl_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for r in rows {
        serde_json::to_writer(&mut out, r).map_err(|e| crate::Error::Io(e.to_string()))?;
        out.push(b'\n');
    }
    Ok(out)
}

fn value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("results serialize")
}

pub fn run(e: &Experiment) -> Result<Outcome> {
    e.validate()?;
    match e {
        Experiment::CheckSpec(c) => check_spec(c),
        Experiment::Vp1d(c) => vp_1d(c),
        Experiment::VpProduct(c) => vp_product(c),
        Experiment::Grising(c) => grising(c),
        Experiment::Decimate(c) => decimate_exp(c),
        Experiment::RfimJoint(c) => rfim_joint(c),
        Experiment::AdCheck(c) => ad_check_exp(c),
        Experiment::CorrDecay(c) => corr_decay(c),
        Experiment::Oscillation(c) => oscillation_exp(c),
    }
}

fn subsets(sites: &[Site]) -> Vec<Region> {
    let n = sites.len();
    (1..1usize << n).map(|m| Region::new(sites[0].dim(), (0..n).filter(|i| m >> i & 1 == 1).map(|i| sites[i])).expect("same dimension")).collect()
}

/// Every configuration on `w`, plus outside.
fn all_configs(w: Window) -> Vec<Configuration> {
    let mut out = Vec::new();
    for_each_word(2, w.len(), |_, v| out.push(Configuration::from_values(SpinAlphabet::ising(), w, v.to_vec(), Exterior::Constant(1)).expect("binary")));
    out
}

#[derive(Serialize)]
struct SpecRow {
    outer: Window,
    boundaries: usize,
    inner_regions: usize,
    properness: f64,
    consistency: f64,
    tier: Tier,
}

#[derive(Serialize)]
struct TelescopingRow {
    dim: usize,
    volume: Window,
    residual: f64,
    tier: Tier,
}

/// Properness and consistency of `spec` on `outer`, every inner region and boundary.
fn spec_row(spec: &GibbsSpecification, outer: Window, boundaries: &[Configuration]) -> Result<SpecRow> {
    let outer_region = Region::from(outer);
    let inners = subsets(outer_region.sites());
    let exterior: Vec<Site> = boundaries[0].window().sites().filter(|x| !outer.contains(x)).collect();
    let events: Vec<CylinderEvent> = {
        let mut ev = Vec::new();
        for_each_word(2, exterior.len().min(4), |_, v| ev.push(CylinderEvent { sites: exterior[..v.len()].to_vec(), values: v.to_vec() }));
        ev
    };
    let properness = check_proper(spec, &outer_region, boundaries, &events)?;
    let consistency = boundaries
        .par_iter()
        .map(|b| inners.iter().try_fold(0.0f64, |m, inner| Ok::<f64, crate::Error>(m.max(check_consistent(spec, inner, &outer_region, b)?))))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(SpecRow { outer, boundaries: boundaries.len(), inner_regions: inners.len(), properness, consistency, tier: Tier::Exact })
}

fn check_spec(c: &CheckSpec) -> Result<Outcome> {
    let mut rows = Vec::new();
    let one = GibbsSpecification::new(Potential::ising(1, c.beta, c.h));
    for m in 1..=c.max_outer as i32 {
        let outer = Window::interval(0, m - 1)?;
        rows.push(spec_row(&one, outer, &all_configs(outer.expand(1)?))?);
    }
    if c.square {
        let two = GibbsSpecification::new(Potential::ising(2, c.beta, c.h));
        let outer = Window::cube(2, 1).translate(&Site::at(&[1, 1]));
        let outer = Window::new(outer.lo(), Site::at(&[1, 1]))?;
        // the eight neighbours of the square, corners fixed to plus
        let big = outer.expand(1)?;
        let ring: Vec<Site> = big.sites().filter(|x| !outer.contains(x) && (x.coord(0) == 0 || x.coord(0) == 1 || x.coord(1) == 0 || x.coord(1) == 1)).collect();
        let mut boundaries = Vec::new();
        for_each_word(2, ring.len(), |_, v| {
            let base = Configuration::plus(SpinAlphabet::ising(), big);
            boundaries.push(base.overwrite(&ring, v).expect("ring inside window"));
        });
        rows.push(spec_row(&two, outer, &boundaries)?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed.unwrap_or(0));
    let mut tele = Vec::new();
    for k in 0..c.telescoping_instances {
        let (dim, volume) = if k % 2 == 0 {
            let len = rng.gen_range(1..=8);
            (1, Window::interval(0, len - 1)?)
        } else {
            let (a, b) = (rng.gen_range(1..=2), rng.gen_range(1..=3));
            (2, Window::with_sides(Site::at(&[0, 0]), &[a, b])?)
        };
        let spec = if dim == 1 { &one } else { &GibbsSpecification::new(Potential::ising(2, c.beta, c.h)) };
        let w = volume.expand(2)?;
        let mut draw = || Configuration::from_values(SpinAlphabet::ising(), w, (0..w.len()).map(|_| rng.gen_range(0..2u8)).collect(), Exterior::Constant(1));
        let (sigma, omega) = (draw()?, draw()?);
        tele.push(TelescopingRow { dim, volume, residual: telescoping_identity_check(spec, &Region::from(volume), &sigma, &omega)?, tier: Tier::Exact });
    }
    let max_prop = rows.iter().map(|r| r.properness).fold(0.0, f64::max);
    let max_cons = rows.iter().map(|r| r.consistency).fold(0.0, f64::max);
    let max_tele = tele.iter().map(|r| r.residual).fold(0.0, f64::max);
    let checks = vec![
        Check::new("properness", max_prop == 0.0, format!("max deviation {max_prop:e}")),
        Check::new("consistency", max_cons <= 1e-12, format!("max deviation {max_cons:e} (tolerance 1e-12)")),
        Check::new("telescoping", max_tele <= 1e-10, format!("max residual {max_tele:e} over {} instances (tolerance 1e-10)", tele.len())),
    ];
    Ok(Outcome {
        results: json!({ "windows": value(&rows), "telescoping": value(&tele), "max_properness": max_prop, "max_consistency": max_cons, "max_telescoping_residual": max_tele }),
        checks,
        sidecars: vec![],
    })
}

fn ising_chain(beta: f64) -> Result<TransferChain> {
    TransferChain::from_potential(&Potential::ising(1, beta, 0.0), Edges::Stationary)
}

#[derive(Serialize)]
struct VpRow {
    beta_prime: f64,
    beta: f64,
    direct: Entropy,
    sullivan: Entropy,
    abs_diff: f64,
    closed_form: f64,
    tier: Tier,
}

#[derive(Serialize)]
struct ClosedFormRow {
    quantity: &'static str,
    parameter: f64,
    estimate: f64,
    closed_form: f64,
    abs_diff: f64,
    tier: Tier,
}

fn vp_1d(c: &Vp1d) -> Result<Outcome> {
    let pairs: Vec<(f64, f64)> = c.betas.iter().flat_map(|bp| c.betas.iter().map(move |b| (*bp, *b))).collect();
    let rows = pairs
        .par_iter()
        .map(|&(bp, b)| {
            let mu = ising_chain(bp)?;
            let nu = ising_chain(b)?;
            let direct = relative_entropy_density(&mu, &nu, &c.schedule)?;
            let ep = e_plus(&nu, &c.schedule)?.density;
            let s = sullivan_density(&GibbsSpecification::new(Potential::ising(1, b, 0.0)), &mu, ep, &c.schedule)?;
            let closed = b.cosh().ln() - bp.cosh().ln() + (bp - b) * bp.tanh();
            Ok(VpRow { beta_prime: bp, beta: b, direct: direct.density, sullivan: s.density, abs_diff: (direct.density.value() - s.density.value()).abs(), closed_form: closed, tier: direct.method.max(s.method) })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut closed = Vec::new();
    for &b in &c.betas {
        let chain = ising_chain(b)?;
        let ep = e_plus(&chain, &c.schedule)?;
        let want = (2.0 * b.cosh()).ln() - b;
        closed.push(ClosedFormRow { quantity: "e_plus", parameter: b, estimate: ep.density.value(), closed_form: want, abs_diff: (ep.density.value() - want).abs(), tier: ep.method });
        let h = ks_entropy(&chain, &c.schedule)?;
        let want = (2.0 * b.cosh()).ln() - b * b.tanh();
        closed.push(ClosedFormRow { quantity: "ks_entropy", parameter: b, estimate: h.density.value(), closed_form: want, abs_diff: (h.density.value() - want).abs(), tier: h.method });
    }
    let worst = rows.iter().map(|r| r.abs_diff).fold(0.0, f64::max);
    let zero_iff = rows.iter().all(|r| (r.sullivan.value().abs() <= 1e-8) == (r.beta == r.beta_prime) && (r.direct.value().abs() <= 1e-8) == (r.beta == r.beta_prime));
    let worst_closed = closed.iter().map(|r| r.abs_diff).fold(0.0, f64::max);
    let checks = vec![
        Check::new("sullivan_matches_direct", worst <= 1e-6, format!("max |sullivan - direct| {worst:e} (tolerance 1e-6)")),
        Check::new("zero_iff_equal", zero_iff, "density within 1e-8 of zero exactly on the diagonal".into()),
        Check::new("ising_closed_forms", worst_closed <= 1e-10, format!("max deviation {worst_closed:e} (tolerance 1e-10)")),
    ];
    Ok(Outcome { results: json!({ "rows": value(&rows), "closed_forms": value(&closed) }), checks, sidecars: vec![Sidecar { suffix: "csv".into(), bytes: csv_bytes(&rows)? }] })
}

fn bernoulli_kl(p: f64, q: f64) -> f64 {
    let t = |a: f64, b: f64| if a == 0.0 { 0.0 } else { a * (a / b).ln() };
    t(p, q) + t(1.0 - p, 1.0 - q)
}

fn vp_product(c: &VpProduct) -> Result<Outcome> {
    let mut rows = Vec::new();
    for &(pm, pn) in &c.pairs {
        let mu = ProductMeasure::bernoulli(c.dim, pm)?;
        let nu = ProductMeasure::bernoulli(c.dim, pn)?;
        let kl = relative_entropy_density(&mu, &nu, &c.schedule)?;
        let want = bernoulli_kl(pm, pn);
        rows.push(ClosedFormRow { quantity: "relative_entropy", parameter: pm, estimate: kl.density.value(), closed_form: want, abs_diff: (kl.density.value() - want).abs(), tier: kl.method });
        let h = ks_entropy(&mu, &c.schedule)?;
        let want = -(pm * pm.ln() + (1.0 - pm) * (1.0 - pm).ln());
        rows.push(ClosedFormRow { quantity: "ks_entropy", parameter: pm, estimate: h.density.value(), closed_form: want, abs_diff: (h.density.value() - want).abs(), tier: h.method });
        let ep = e_plus(&nu, &c.schedule)?;
        let want = -pn.ln();
        rows.push(ClosedFormRow { quantity: "e_plus", parameter: pn, estimate: ep.density.value(), closed_form: want, abs_diff: (ep.density.value() - want).abs(), tier: ep.method });
        let s = sullivan_density(&GibbsSpecification::new(Potential::bernoulli(c.dim, pn)?), &mu, ep.density, &c.schedule)?;
        rows.push(ClosedFormRow { quantity: "sullivan", parameter: pm, estimate: s.density.value(), closed_form: bernoulli_kl(pm, pn), abs_diff: (s.density.value() - bernoulli_kl(pm, pn)).abs(), tier: s.method });
    }
    let worst = rows.iter().map(|r| r.abs_diff).fold(0.0, f64::max);
    Ok(Outcome {
        results: json!({ "rows": value(&rows) }),
        checks: vec![Check::new("product_closed_forms", worst <= 1e-10, format!("max deviation {worst:e} (tolerance 1e-10)"))],
        sidecars: vec![Sidecar { suffix: "csv".into(), bytes: csv_bytes(&rows)? }],
    })
}

/// Largest GriSing window tabulated exactly.
const GRISING_TABLE_SITES: usize = 12;

#[derive(Serialize)]
struct GrisingRow {
    p: f64,
    side: usize,
    sites: usize,
    rate: f64,
    table_rate: Option<f64>,
    log_one_minus_p: f64,
    abs_diff: f64,
    tier: Tier,
}

#[derive(Serialize)]
struct GrisingSampleLine {
    p: f64,
    seed: u64,
    clusters: usize,
    largest_cluster: usize,
    boundary_fraction: f64,
    zero_fraction: f64,
    xi: Vec<u8>,
}

fn grising(c: &Grising) -> Result<Outcome> {
    let mut rows = Vec::new();
    for &p in &c.ps {
        for &side in &c.schedule {
            let w = Window::with_sides(Site::origin(c.dim), &vec![side; c.dim])?;
            let rate = grising_log_cylinder(p, c.beta, &w)? / w.len() as f64;
            let table_rate = if w.len() <= GRISING_TABLE_SITES { Some(grising_measure(p, c.beta, &w)?.prob(&vec![1; w.len()]).ln() / w.len() as f64) } else { None };
            let want = (1.0 - p).ln();
            let diff = (rate - want).abs().max(table_rate.map_or(0.0, |t| (t - want).abs()));
            rows.push(GrisingRow { p, side, sites: w.len(), rate, table_rate, log_one_minus_p: want, abs_diff: diff, tier: Tier::Exact });
        }
    }
    let seed = c.seed.unwrap_or(0);
    let w = Window::with_sides(Site::origin(c.dim), &vec![c.sample_side; c.dim])?;
    let jobs: Vec<(f64, u64)> = c.ps.iter().flat_map(|p| (0..c.samples as u64).map(move |k| (*p, seed.wrapping_add(k)))).collect();
    let lines = jobs
        .par_iter()
        .map(|&(p, s)| {
            let g = grising_sample(p, c.beta, w, s)?;
            let zeros = g.xi.values().iter().filter(|v| **v == 1).count();
            Ok(GrisingSampleLine { p, seed: s, clusters: g.clusters, largest_cluster: g.largest_cluster, boundary_fraction: g.boundary_fraction, zero_fraction: zeros as f64 / w.len() as f64, xi: g.xi.values().to_vec() })
        })
        .collect::<Result<Vec<_>>>()?;
    let summary: Vec<Value> = c
        .ps
        .iter()
        .map(|p| {
            let fr: Vec<f64> = lines.iter().filter(|l| l.p == *p).map(|l| l.zero_fraction).collect();
            let bf: Vec<f64> = lines.iter().filter(|l| l.p == *p).map(|l| l.boundary_fraction).collect();
            let n = fr.len().max(1) as f64;
            let mean = fr.iter().sum::<f64>() / n;
            let se = if fr.len() > 1 { (fr.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt() } else { 0.0 };
            json!({ "p": p, "zero_fraction": mean, "std_error": se, "expected": 1.0 - p, "boundary_fraction": bf.iter().sum::<f64>() / n, "samples": fr.len(), "tier": Tier::MC })
        })
        .collect();
    let worst = rows.iter().map(|r| r.abs_diff).fold(0.0, f64::max);
    Ok(Outcome {
        results: json!({ "rows": value(&rows), "samples": summary }),
        checks: vec![Check::new("zero_block_rate", worst <= 1e-14, format!("max |rate - log(1-p)| {worst:e}"))],
        sidecars: vec![Sidecar { suffix: "csv".into(), bytes: csv_bytes(&rows)? }, Sidecar { suffix: "samples.jsonl".into(), bytes: jsonl_bytes(&lines)? }],
    })
}

#[derive(Serialize)]
struct RenormRow {
    sites: usize,
    beta: f64,
    beta_renormalized: f64,
    max_abs_diff: f64,
    tier: Tier,
}

#[derive(Serialize)]
struct SandwichRow {
    dim: usize,
    window: Window,
    beta: f64,
    /// Worst `ν⁻(f) - μ(f)` over tested monotone `f`.
    minus_vs_mu: f64,
    /// Worst `μ(f) - ν⁺(f)`.
    mu_vs_plus: f64,
    family: String,
    tier: Tier,
}

#[derive(Serialize)]
struct PlusMinusRow {
    sites: usize,
    rate: f64,
    tier: Tier,
}

fn decimate_exp(c: &Decimate) -> Result<Outcome> {
    let chain = ising_chain(c.beta)?;
    let beta_r = c.beta.tanh().powi(2).atanh();
    let renorm = ising_chain(beta_r)?;
    let mut rows = Vec::new();
    for &n in &c.schedule {
        let full = chain.marginal(&Region::from(Window::interval(0, 2 * (n as i32 - 1))?))?;
        let dec = decimate(&full, 2)?;
        let want = renorm.marginal(&Region::from(Window::interval(0, n as i32 - 1)?))?;
        let diff = dec.probs().iter().zip(want.probs()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        rows.push(RenormRow { sites: n, beta: c.beta, beta_renormalized: beta_r, max_abs_diff: diff, tier: Tier::Transfer });
    }
    let ising = SpinAlphabet::ising();
    let mut sandwich = Vec::new();
    let mut cases = vec![(1usize, Window::interval(0, 8)?, c.beta), (2, Window::new(Site::at(&[0, 0]), Site::at(&[2, 2]))?, c.square_beta)];
    cases.push((2, Window::new(Site::at(&[0, 0]), Site::at(&[2, 4]))?, c.square_beta));
    for (dim, w, beta) in cases {
        let phi = Potential::ising(dim, beta, 0.0);
        let r = Region::from(w);
        let plus = decimate(&finite_gibbs(&phi, &r, &BoundaryCondition::plus(ising.clone(), dim))?, 2)?;
        let minus = decimate(&finite_gibbs(&phi, &r, &BoundaryCondition::constant(ising.clone(), dim, 0))?, 2)?;
        let free = decimate(&finite_gibbs(&phi, &r, &BoundaryCondition::Free)?, 2)?;
        let lo = stochastic_domination_check(&minus, &free)?;
        let hi = stochastic_domination_check(&free, &plus)?;
        sandwich.push(SandwichRow { dim, window: w, beta, minus_vs_mu: lo.worst, mu_vs_plus: hi.worst, family: format!("{:?} ({} tests)", lo.family, lo.tested), tier: Tier::Exact });
    }
    let mut pm = Vec::new();
    for &n in &c.schedule {
        let (lo, hi) = (0, 2 * (n as i32 - 1));
        let p = TransferChain::from_potential(&Potential::ising(1, c.beta, 0.0), Edges::Fixed { lo, hi, left: 1, right: 1 })?;
        let m = TransferChain::from_potential(&Potential::ising(1, c.beta, 0.0), Edges::Fixed { lo, hi, left: 0, right: 0 })?;
        let cyl: Vec<(i32, u8)> = (0..n as i32).map(|k| (2 * k, 1)).collect();
        pm.push(PlusMinusRow { sites: n, rate: (p.log_cylinder_prob(&cyl)? - m.log_cylinder_prob(&cyl)?) / n as f64, tier: Tier::Transfer });
    }
    let worst = rows.iter().map(|r| r.max_abs_diff).fold(0.0, f64::max);
    let sandwich_ok = sandwich.iter().all(|s| s.minus_vs_mu <= 1e-12 && s.mu_vs_plus <= 1e-12);
    Ok(Outcome {
        results: json!({ "renormalization": value(&rows), "sandwich": value(&sandwich), "plus_minus_rate": value(&pm) }),
        checks: vec![
            Check::new("renormalized_chain", worst <= 1e-10, format!("max table deviation {worst:e} (tolerance 1e-10)")),
            Check::new("domination_sandwich", sandwich_ok, "minus ⪯ free ⪯ plus on every tested window".into()),
        ],
        sidecars: vec![Sidecar { suffix: "csv".into(), bytes: csv_bytes(&rows)? }],
    })
}

#[derive(Serialize)]
struct KernelRow {
    beta: f64,
    h: f64,
    window: Window,
    volumes: usize,
    max_deviation: f64,
    tier: Tier,
}

/// Largest deviation between the explicit conditional kernel and conditioning
/// of the plus joint table, over every volume and exterior of `w`.
pub fn conditional_kernel_deviation(model: &JointModel, law: &DisorderLaw, w: &Window) -> Result<(usize, f64)> {
    let table = match joint_measure(model, law, w, &SigmaBoundary::Plus, model.disorder().plus(), JointTier::Exact)? {
        JointLaw::Exact(m) => m,
        JointLaw::Samples(_) => unreachable!("exact tier"),
    };
    let tier = QuenchedTier { window: *w, boundary: SigmaBoundary::Plus };
    let all = Region::from(w);
    let volumes = subsets(all.sites());
    let qj = model.joint().len();
    let plus = model.joint().plus();
    let worst = volumes
        .par_iter()
        .map(|vol| {
            let rest = all.difference(vol);
            let mut words = Vec::new();
            for_each_word(qj, rest.len(), |_, rw| words.push(rw.to_vec()));
            words.iter().try_fold(0.0f64, |m, rw| {
                let base = Configuration::from_values(model.joint().clone(), *w, vec![plus; w.len()], Exterior::Constant(plus))?;
                let xi = base.overwrite(rest.sites(), rw)?;
                let Some(brute) = table.conditional(vol, rw)? else { return Ok(m) };
                let formula = joint_conditional_kernel(model, law, &tier, vol, &xi)?;
                Ok(brute.probs().iter().zip(formula.probs()).fold(m, |m, (a, b)| m.max((a - b).abs())))
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok((volumes.len(), worst.into_iter().fold(0.0, f64::max)))
}

#[derive(Serialize)]
struct BoundCsvRow {
    sites: usize,
    boundary: usize,
    h: f64,
    h_per_site: f64,
    sup_log_ratio: f64,
    h_bound: f64,
    ratio_bound: f64,
    holds: bool,
    tier: Tier,
}

#[derive(Serialize)]
struct MarginRow {
    margin: usize,
    plus: f64,
    minus: f64,
    /// Distance to the largest margin, worst of the two boundaries.
    drift: f64,
    spread: f64,
    tier: Tier,
}

/// Single-site conditional `K[σ_0 = + | ξ]` on growing quenched windows, for a
/// fixed staggered exterior `ξ`.
fn margin_convergence(model: &JointModel, law: &DisorderLaw, margins: &[usize]) -> Result<Vec<MarginRow>> {
    let top = *margins.last().expect("validated") as i32 + model.potential().range() as i32;
    let w = Window::interval(-top, top)?;
    let q = model.joint().len() as i32;
    let vals = w.sites().map(|x| x.coord(0).rem_euclid(q) as u8).collect();
    let xi = Configuration::from_values(model.joint().clone(), w, vals, Exterior::Constant(model.joint().plus()))?;
    let vol = Region::single(Site::origin(1));
    let sigma_plus: Vec<usize> = (0..model.joint().len() as u8).filter(|j| model.decode(*j).0 == model.spin().plus()).map(usize::from).collect();
    let at = |m: usize, b: SigmaBoundary| -> Result<f64> {
        let k = joint_conditional_kernel(model, law, &QuenchedTier::around(&vol, m, b)?, &vol, &xi)?;
        Ok(sigma_plus.iter().map(|j| k.probs()[*j]).sum())
    };
    let vals: Vec<(usize, f64, f64)> = margins.iter().map(|m| Ok((*m, at(*m, SigmaBoundary::Plus)?, at(*m, SigmaBoundary::Minus)?))).collect::<Result<_>>()?;
    let (_, lp, lm) = *vals.last().expect("validated");
    Ok(vals.into_iter().map(|(margin, plus, minus)| MarginRow { margin, plus, minus, drift: (plus - lp).abs().max((minus - lm).abs()), spread: (plus - minus).abs(), tier: Tier::Exact }).collect())
}

#[derive(Serialize)]
struct JointSampleLine {
    replica: usize,
    sample: usize,
    sigma: Vec<u8>,
    eta: Vec<u8>,
}

fn rfim_joint(c: &RfimJoint) -> Result<Outcome> {
    let disorder = c.law.alphabet()?;
    let eta_ext = disorder.plus();
    let model = JointModel::rfim(1, c.beta, c.h, disorder.clone())?;
    let windows: Vec<Window> = c.schedule.iter().map(|n| Window::interval(0, *n as i32 - 1)).collect::<Result<_>>()?;
    let bounds = joint_entropy_bound_check(&model, &c.law, &windows, eta_ext)?;
    let square = if c.square {
        let m2 = JointModel::rfim(2, c.square_beta, c.h, disorder.clone())?;
        Some(joint_entropy_bound_check(&m2, &c.law, &[Window::cube(2, 1)], eta_ext)?)
    } else {
        None
    };
    let mut kernel_rows = Vec::new();
    let small = [Window::interval(0, 0)?, Window::interval(0, 1)?, Window::interval(0, 2)?, Window::interval(0, 3)?];
    for &(b, h) in &c.kernel_grid {
        for w in &small {
            let m = JointModel::rfim(1, b, h, disorder.clone())?;
            let (volumes, dev) = conditional_kernel_deviation(&m, &c.law, w)?;
            kernel_rows.push(KernelRow { beta: b, h, window: *w, volumes, max_deviation: dev, tier: Tier::Exact });
        }
        let w = Window::new(Site::at(&[0, 0]), Site::at(&[1, 1]))?;
        let m = JointModel::rfim(2, b, h, disorder.clone())?;
        let (volumes, dev) = conditional_kernel_deviation(&m, &c.law, &w)?;
        kernel_rows.push(KernelRow { beta: b, h, window: w, volumes, max_deviation: dev, tier: Tier::Exact });
    }
    let margins = margin_convergence(&model, &c.law, &c.margins)?;
    let decomposition_window = Window::interval(0, 3)?;
    let (plus_table, _) = plus_minus_tables(&model, &c.law, &decomposition_window, eta_ext)?;
    let decomposition = joint_entropy_decomposition(&model, &c.law, &plus_table)?;
    let gaps = c
        .gap_radii
        .iter()
        .map(|r| specification_gap(&model, &c.law, &Window::interval(-(*r as i32), *r as i32)?, Site::at(&[0]), eta_ext))
        .collect::<Result<Vec<_>>>()?;
    let gap_2d = if c.square { Some(specification_gap(&JointModel::rfim(2, c.square_beta, c.h, disorder.clone())?, &c.law, &Window::cube(2, 1), Site::origin(2), eta_ext)?) } else { None };
    let flat: Vec<BoundCsvRow> = bounds
        .rows
        .iter()
        .map(|r| BoundCsvRow { sites: r.sites, boundary: r.boundary, h: r.h, h_per_site: r.h_per_site, sup_log_ratio: r.sup_log_ratio, h_bound: r.h_bound, ratio_bound: r.ratio_bound, holds: r.holds, tier: Tier::Exact })
        .collect();
    let mut sidecars = vec![Sidecar { suffix: "csv".into(), bytes: csv_bytes(&flat)? }];
    if let Some(s) = &c.sampling {
        let settings = SamplerSettings::new(c.seed.expect("validated"), s.sweeps, s.burn_in);
        let w = Window::interval(0, s.side as i32 - 1)?;
        if let JointLaw::Samples(set) = joint_measure(&model, &c.law, &w, &SigmaBoundary::Plus, eta_ext, JointTier::MC { settings, replicas: s.replicas })? {
            let per = set.len() / s.replicas;
            let lines: Vec<JointSampleLine> = set
                .samples()
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let (sigma, eta) = v.iter().map(|j| model.decode(*j)).unzip();
                    JointSampleLine { replica: i / per.max(1), sample: i % per.max(1), sigma, eta }
                })
                .collect();
            let mut native = Vec::new();
            set.write_jsonl(&mut native)?;
            sidecars.push(Sidecar { suffix: "samples.jsonl".into(), bytes: native });
            sidecars.push(Sidecar { suffix: "split.jsonl".into(), bytes: jsonl_bytes(&lines)? });
        }
    }
    let kernel_worst = kernel_rows.iter().map(|r| r.max_deviation).fold(0.0, f64::max);
    let mut checks = vec![
        Check::new("conditional_kernel", kernel_worst <= 1e-10, format!("max deviation {kernel_worst:e} (tolerance 1e-10)")),
        Check::new("boundary_bounds_1d", bounds.all_hold(), format!("h ≤ 4‖Φ‖|∂Λ| and sup log-ratio ≤ 8‖Φ‖|∂Λ| on {} chains", bounds.rows.len())),
        Check::new("per_site_decreasing_1d", bounds.per_site_decreasing, "h/|Λ| strictly decreasing along the schedule".into()),
        Check::new(
            "entropy_identity",
            (decomposition.direct - decomposition.total).abs() <= 1e-10,
            format!("direct {} vs decomposed {}", decomposition.direct, decomposition.total),
        ),
    ];
    if let Some(sq) = &square {
        checks.push(Check::new("boundary_bounds_2d", sq.all_hold(), "3×3 window".into()));
    }
    Ok(Outcome {
        results: json!({
            "bounds_1d": value(&bounds),
            "bounds_2d": value(&square),
            "conditional_kernel": value(&kernel_rows),
            "decomposition": value(&decomposition),
            "gap_1d": value(&gaps),
            "gap_2d": value(&gap_2d),
            "margin_convergence": value(&margins),
            "tier": Tier::Exact,
        }),
        checks,
        sidecars,
    })
}

fn ad_check_exp(c: &AdCheck) -> Result<Outcome> {
    let prod = ExactMeasure::product(Region::from(Window::interval(0, 5)?), SpinAlphabet::ising(), &[1.0 - c.p, c.p])?;
    let prod_blocks = [(Window::interval(2, 3)?, 1), (Window::interval(1, 2)?, 0), (Window::interval(0, 1)?, 1)];
    let product = ad_check(&prod, &prod_blocks, |_, _| 0.0, 0.0)?;
    let chain = TransferChain::from_potential(&Potential::ising(1, c.beta, c.h), Edges::Stationary)?;
    let (pi, p) = chain.markov().expect("stationary chain");
    let m = chain.marginal(&Region::from(Window::interval(0, 9)?))?;
    let blocks: Vec<(Window, usize)> = vec![(Window::interval(4, 5)?, 1), (Window::interval(3, 6)?, 1), (Window::interval(4, 5)?, 2), (Window::interval(4, 4)?, 3)];
    let ising = ad_check(&m, &blocks, |w, g| markov_decoupling_constant(&pi, &p, w.len(), g), 0.0)?;
    let law = DisorderLaw::two_point();
    let model = JointModel::rfim(1, c.rfim_beta, c.rfim_h, law.alphabet()?)?;
    let (plus, _) = plus_minus_tables(&model, &law, &Window::interval(0, 5)?, model.disorder().plus())?;
    let uac = model.potential().uac_norm().norm;
    let rfim = ad_check(&plus, &[(Window::interval(2, 3)?, 1), (Window::interval(1, 1)?, 1)], |_, _| 0.0, 8.0 * uac)?;
    let product_one = product.rows.iter().all(|r| r.max_log_ratio.abs() <= 1e-12 && r.min_log_ratio.abs() <= 1e-12);
    Ok(Outcome {
        results: json!({ "product": value(&product), "ising": value(&ising), "rfim": value(&rfim), "tier": Tier::Exact }),
        checks: vec![
            Check::new("product_ratios_one", product_one, "all log-ratios within 1e-12 of zero".into()),
            Check::new("ising_within_envelope", ising.all_within(), "stationary chain against its mixing constant".into()),
            Check::new("rfim_within_envelope", rfim.all_within(), format!("joint table, C = 8‖Φ‖ = {}", 8.0 * uac)),
        ],
        sidecars: vec![],
    })
}

#[derive(Serialize)]
struct CorrCsvRow {
    m: usize,
    mean: f64,
    std_error: f64,
    replicas: usize,
    envelope: f64,
    tier: Tier,
}

#[derive(Serialize)]
struct ReplicaLine {
    replica: usize,
    values: Vec<(usize, f64)>,
}

fn corr_decay(c: &CorrDecay) -> Result<Outcome> {
    let disorder = c.law.alphabet()?;
    let model = JointModel::rfim(c.dim, c.beta, c.h, disorder)?;
    let window = Window::with_sides(Site::origin(c.dim), &vec![c.side; c.dim])?;
    let seed = c.seed.expect("validated");
    let (tier, tag) = match c.tier {
        TierChoice::Exact => (CorrelationTier::Exact, Tier::Exact),
        TierChoice::Mc => (CorrelationTier::MC(SamplerSettings::new(seed, c.sweeps, c.burn_in)), Tier::MC),
    };
    state_count(2, if c.tier == TierChoice::Exact { window.len() } else { 0 }, crate::potential::ENUMERATION_CAP)?;
    let out = quenched_correlation_decay(&model, &c.law, &c.ms, &window, &SigmaBoundary::Free, c.replicas, seed, tier)?;
    let rows: Vec<CorrCsvRow> = out.rows.iter().map(|r| CorrCsvRow { m: r.m, mean: r.mean, std_error: r.std_error, replicas: r.replicas, envelope: c.beta.tanh().powi(r.m as i32), tier: tag }).collect();
    let lines: Vec<ReplicaLine> = out.per_replica.iter().enumerate().map(|(i, v)| ReplicaLine { replica: i, values: c.ms.iter().copied().zip(v.iter().copied()).collect() }).collect();
    let below = rows.iter().all(|r| r.mean <= r.envelope + 3.0 * r.std_error + 1e-12);
    let mut checks = vec![Check::new("below_tanh_envelope", below, "diagnostic, not asserted".into())];
    if c.beta == 0.0 {
        checks.push(Check::new("zero_coupling", rows.iter().all(|r| r.mean <= 1e-12 + 3.0 * r.std_error), "c(m) = 0".into()));
    }
    if c.h == 0.0 && c.dim == 1 && c.tier == TierChoice::Exact {
        let worst = rows.iter().map(|r| (r.mean - r.envelope).abs()).fold(0.0, f64::max);
        checks.push(Check::new("tanh_power", worst <= 1e-10, format!("max |c(m) - tanh^m β| {worst:e}")));
    }
    Ok(Outcome {
        results: json!({ "rows": value(&out.rows), "window": window, "boundary": "free", "tier": tag }),
        checks,
        sidecars: vec![Sidecar { suffix: "csv".into(), bytes: csv_bytes(&rows)? }, Sidecar { suffix: "replicas.jsonl".into(), bytes: jsonl_bytes(&lines)? }],
    })
}

fn checkerboard(w: Window) -> Result<Configuration> {
    let vals = w.sites().map(|x| (x.coords().iter().sum::<i32>().rem_euclid(2)) as u8).collect();
    Configuration::from_values(SpinAlphabet::ising(), w, vals, Exterior::Undefined)
}

fn oscillation_exp(c: &Oscillation) -> Result<Outcome> {
    let origin = Site::origin(c.dim);
    let f = LocalFunction::indicator("plus_at_origin", vec![origin], vec![1]);
    let vol = Region::single(origin);
    let mut reports = Vec::new();
    let mut checks = Vec::new();
    match c.kind {
        KernelKind::Gibbs => {
            let spec = GibbsSpecification::new(Potential::ising(c.dim, c.beta, c.h));
            let top = *c.annuli.last().expect("validated");
            let center = Configuration::plus(SpinAlphabet::ising(), Window::cube(c.dim, top + 1));
            for &n in &c.annuli {
                reports.push(oscillation(&spec, &f, &vol, &center, n, &ExtensionFamily::Exhaustive)?);
            }
            let closed = reports.iter().filter(|r| r.annulus >= 1).all(|r| r.gap == 0.0);
            checks.push(Check::new("finite_range_gap_closes", closed, "gap = 0 once the annulus covers the range".into()));
        }
        KernelKind::Decimated => {
            let top = *c.annuli.last().expect("validated") + 1;
            let w = Window::cube(2, 2 * top);
            let settings = SamplerSettings::new(c.seed.expect("validated"), c.sweeps, c.burn_in);
            let k = DecimatedKernel::new(Potential::ising(2, c.beta, c.h), w, 1, 2, KernelTier::MC(settings))?;
            let target = *k.target();
            let center = checkerboard(target)?.with_exterior(Exterior::Constant(1));
            let exts = vec![Configuration::plus(SpinAlphabet::ising(), target), Configuration::constant(SpinAlphabet::ising(), target, 0)];
            for &n in &c.annuli {
                reports.push(oscillation(&k, &f, &vol, &center, n, &ExtensionFamily::Listed(exts.clone()))?);
            }
        }
    }
    let rows: Vec<Value> = reports
        .iter()
        .map(|r| json!({ "annulus": r.annulus, "g_min": r.g_min, "g_max": r.g_max, "gap": r.gap, "mc_error": r.mc_error, "extensions": r.extensions, "tier": if r.mc_error.is_some() { Tier::MC } else { Tier::Exact } }))
        .collect();
    Ok(Outcome { results: json!({ "function": f.name, "rows": rows }), checks, sidecars: vec![] })
}
