//! Probability kernels `γ_Λ(·|ω)`, the specification axioms as finite checks,
//! relative energies and oscillation diagnostics.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{for_each_word, state_count, telescope_config, Configuration, Region, Site, SpinAlphabet, Window};
use crate::potential::{BoundaryCondition, EnergyPlan, Potential, ENUMERATION_CAP};

/// Largest number of exterior assignments enumerated by `oscillation`.
pub const ANNULUS_CAP: usize = 1 << 20;

/// A kernel generator: `γ_Λ(·|ω)` for any finite volume and boundary.
pub trait Specification: Sync {
    fn alphabet(&self) -> &Arc<SpinAlphabet>;
    fn dim(&self) -> usize;
    fn kernel(&self, volume: &Region, boundary: &Configuration) -> Result<KernelTable>;
    /// Radius beyond which the boundary cannot influence `γ_Λ`, if finite.
    fn dependence_radius(&self) -> Option<u32> {
        None
    }
}

/// Law of the configuration on `region` (usually the volume) given the boundary.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct KernelTable {
    region: Region,
    boundary: Configuration,
    probs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    std_errors: Option<Vec<f64>>,
}

impl KernelTable {
    pub fn new(region: Region, boundary: Configuration, probs: Vec<f64>, std_errors: Option<Vec<f64>>) -> Result<KernelTable> {
        let n = state_count(boundary.alphabet().len(), region.len(), ENUMERATION_CAP)?;
        if probs.len() != n || std_errors.as_ref().is_some_and(|s| s.len() != n) {
            return Err(Error::InvalidMeasure("kernel table has wrong size".into()));
        }
        Ok(KernelTable { region, boundary, probs, std_errors })
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn boundary(&self) -> &Configuration {
        &self.boundary
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn std_errors(&self) -> Option<&[f64]> {
        self.std_errors.as_deref()
    }

    pub fn prob(&self, values: &[u8]) -> f64 {
        self.probs[crate::lattice::encode_word(values, self.boundary.alphabet().len())]
    }

    /// Probability of the values `config` takes on the table's region.
    pub fn prob_of(&self, config: &Configuration) -> Result<f64> {
        Ok(self.prob(&config.read(self.region.sites())?))
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// `Σ_σ γ(σ|ω) f(σ ω)` for `f` reading the given sites.
    pub fn expect(&self, support: &[Site], f: &(dyn Fn(&[u8]) -> f64 + Sync)) -> Result<(f64, Option<f64>)> {
        let q = self.boundary.alphabet().len();
        let mut fixed = Vec::with_capacity(support.len());
        for s in support {
            fixed.push(match self.region.index_of(s) {
                Some(i) => Err(i),
                None => Ok(self.boundary.try_get(s)?),
            });
        }
        let mut vals = vec![0u8; support.len()];
        let mut mean = 0.0;
        let mut var = 0.0;
        for_each_word(q, self.region.len(), |i, w| {
            for (v, src) in vals.iter_mut().zip(&fixed) {
                *v = match src {
                    Ok(c) => *c,
                    Err(k) => w[*k],
                };
            }
            let fv = f(&vals);
            mean += self.probs[i] * fv;
            if let Some(se) = &self.std_errors {
                var += (fv * se[i]).powi(2);
            }
        });
        Ok((mean, self.std_errors.as_ref().map(|_| var.sqrt())))
    }
}

/// The Gibbs specification of a finite-range potential.
#[derive(Clone, PartialEq, Debug)]
pub struct GibbsSpecification {
    phi: Potential,
}

impl GibbsSpecification {
    pub fn new(phi: Potential) -> GibbsSpecification {
        GibbsSpecification { phi }
    }

    pub fn potential(&self) -> &Potential {
        &self.phi
    }
}

impl Specification for GibbsSpecification {
    fn alphabet(&self) -> &Arc<SpinAlphabet> {
        self.phi.alphabet()
    }

    fn dim(&self) -> usize {
        self.phi.dim()
    }

    fn kernel(&self, volume: &Region, boundary: &Configuration) -> Result<KernelTable> {
        gibbs_kernel(&self.phi, volume, boundary)
    }

    fn dependence_radius(&self) -> Option<u32> {
        Some(self.phi.range())
    }
}

/// `γ^Φ_Λ(σ|ω) = e^{-H_Λ(σ|ω)} / Z_Λ(ω)`.
pub fn gibbs_kernel(phi: &Potential, volume: &Region, boundary: &Configuration) -> Result<KernelTable> {
    let plan = EnergyPlan::compile(phi, volume, &BoundaryCondition::Fixed(boundary.clone()))?;
    Ok(KernelTable { region: volume.clone(), boundary: boundary.clone(), probs: plan.probabilities()?, std_errors: None })
}

/// Cylinder event `{ω : ω(sites) = values}`.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct CylinderEvent {
    pub sites: Vec<Site>,
    pub values: Vec<u8>,
}

impl CylinderEvent {
    pub fn holds(&self, c: &Configuration) -> Result<bool> {
        Ok(c.read(&self.sites)? == self.values)
    }
}

/// Largest kernel mass placed on atoms `σ_Λ ω` with `1_B(σ_Λ ω) ≠ 1_B(ω)`,
/// over the given boundaries and exterior events. Normalization rounding does
/// not enter, so a proper kernel scores exactly zero.
pub fn check_proper(spec: &dyn Specification, volume: &Region, boundaries: &[Configuration], events: &[CylinderEvent]) -> Result<f64> {
    if events.iter().any(|e| e.sites.iter().any(|s| volume.contains(s))) {
        return Err(Error::EventInsideVolume);
    }
    let mut worst = 0.0f64;
    for omega in boundaries {
        let k = spec.kernel(volume, omega)?;
        let q = omega.alphabet().len();
        for e in events {
            let ind = e.holds(omega)?;
            let mut stray = 0.0;
            let mut err = None;
            for_each_word(q, k.region.len(), |i, w| {
                if k.probs[i] == 0.0 {
                    return;
                }
                match omega.overwrite(k.region.sites(), w).and_then(|c| e.holds(&c)) {
                    Ok(b) if b != ind => stray += k.probs[i],
                    Ok(_) => {}
                    Err(x) => err = Some(x),
                }
            });
            if let Some(x) = err {
                return Err(x);
            }
            worst = worst.max(stray);
        }
    }
    Ok(worst)
}

/// `max_σ |(γ_{Λ'} γ_Λ)(σ|ω) - γ_{Λ'}(σ|ω)|` by exact composition.
pub fn check_consistent(spec: &dyn Specification, inner: &Region, outer: &Region, boundary: &Configuration) -> Result<f64> {
    if !inner.is_subset(outer) {
        return Err(Error::RegionNotContained);
    }
    let q = spec.alphabet().len();
    let big = spec.kernel(outer, boundary)?;
    if big.region != *outer {
        return Err(Error::InvalidMeasure("kernel region differs from its volume".into()));
    }
    let rest = outer.difference(inner);
    let pos_inner: Vec<usize> = inner.sites().iter().map(|s| outer.index_of(s).expect("subset")).collect();
    let pos_rest: Vec<usize> = rest.sites().iter().map(|s| outer.index_of(s).expect("subset")).collect();
    let n_rest = state_count(q, rest.len(), ENUMERATION_CAP)?;
    let n_inner = state_count(q, inner.len(), ENUMERATION_CAP)?;
    let rows: Vec<Result<f64>> = (0..n_rest)
        .into_par_iter()
        .map(|r| {
            let mut rw = vec![0u8; rest.len()];
            crate::lattice::decode_word(r, q, &mut rw);
            let omega = boundary.rewindow(cover(boundary.window(), outer)?)?.overwrite(rest.sites(), &rw)?;
            let small = spec.kernel(inner, &omega)?;
            if small.region != *inner {
                return Err(Error::InvalidMeasure("kernel region differs from its volume".into()));
            }
            let mut full = vec![0u8; outer.len()];
            for (p, v) in pos_rest.iter().zip(&rw) {
                full[*p] = *v;
            }
            let index = |full: &[u8]| crate::lattice::encode_word(full, q);
            let mut mass = 0.0;
            let mut iw = vec![0u8; inner.len()];
            for i in 0..n_inner {
                crate::lattice::decode_word(i, q, &mut iw);
                for (p, v) in pos_inner.iter().zip(&iw) {
                    full[*p] = *v;
                }
                mass += big.probs[index(&full)];
            }
            let mut worst = 0.0f64;
            for i in 0..n_inner {
                crate::lattice::decode_word(i, q, &mut iw);
                for (p, v) in pos_inner.iter().zip(&iw) {
                    full[*p] = *v;
                }
                worst = worst.max((mass * small.probs[i] - big.probs[index(&full)]).abs());
            }
            Ok(worst)
        })
        .collect();
    rows.into_iter().try_fold(0.0f64, |m, r| Ok(m.max(r?)))
}

/// Smallest window containing both the configuration window and the region.
fn cover(w: &Window, region: &Region) -> Result<Window> {
    let b = match region.bounding_window() {
        Some(b) => b,
        None => return Ok(*w),
    };
    let lo: Vec<i32> = (0..w.dim()).map(|k| w.lo().coord(k).min(b.lo().coord(k))).collect();
    let hi: Vec<i32> = (0..w.dim()).map(|k| w.hi().coord(k).max(b.hi().coord(k))).collect();
    Window::new(Site::new(&lo)?, Site::new(&hi)?)
}

/// `E⁺_Λ(σ|ω) = log γ_Λ(σ|ω) / γ_Λ(+|ω)`.
pub fn relative_energy(spec: &dyn Specification, volume: &Region, sigma: &Configuration, omega: &Configuration) -> Result<f64> {
    let k = spec.kernel(volume, omega)?;
    let s = k.prob(&sigma.read(volume.sites())?);
    let p = k.prob(&vec![spec.alphabet().plus(); volume.len()]);
    if s == 0.0 || p == 0.0 {
        return Err(Error::ZeroKernelEntry);
    }
    Ok(s.ln() - p.ln())
}

/// `H_Λ(+|ω) - H_Λ(σ|ω)`, the potential form of the relative energy.
pub fn relative_energy_potential(phi: &Potential, volume: &Region, sigma: &Configuration, omega: &Configuration) -> Result<f64> {
    let plan = EnergyPlan::compile(phi, volume, &BoundaryCondition::Fixed(omega.clone()))?;
    Ok(plan.energy(&vec![phi.alphabet().plus(); volume.len()]) - plan.energy(&sigma.read(volume.sites())?))
}

/// `D(σ) = E⁺_{0}(σ|σ)`.
pub fn d_function(spec: &dyn Specification, sigma: &Configuration) -> Result<f64> {
    let origin = Region::single(Site::origin(sigma.dim()));
    relative_energy(spec, &origin, sigma, sigma)
}

/// `|E⁺_Λ(σ|ω) - Σ_x E⁺_x(σ | T_Λ^ω[x,σ,+])|`.
pub fn telescoping_identity_check(spec: &dyn Specification, volume: &Region, sigma: &Configuration, omega: &Configuration) -> Result<f64> {
    let lhs = relative_energy(spec, volume, sigma, omega)?;
    let mut rhs = 0.0;
    for x in volume.sites() {
        let t = telescope_config(volume, x, sigma, omega)?;
        rhs += relative_energy(spec, &Region::single(*x), sigma, &t)?;
    }
    Ok((lhs - rhs).abs())
}

/// A function of the configuration on a finite support.
#[derive(Clone)]
pub struct LocalFunction {
    pub name: String,
    pub support: Vec<Site>,
    f: Arc<dyn Fn(&[u8]) -> f64 + Send + Sync>,
}

impl LocalFunction {
    pub fn new(name: impl Into<String>, support: Vec<Site>, f: impl Fn(&[u8]) -> f64 + Send + Sync + 'static) -> LocalFunction {
        LocalFunction { name: name.into(), support, f: Arc::new(f) }
    }

    /// Indicator that the support carries `values`.
    pub fn indicator(name: impl Into<String>, support: Vec<Site>, values: Vec<u8>) -> LocalFunction {
        LocalFunction::new(name, support, move |v| (v == values.as_slice()) as u8 as f64)
    }

    pub fn eval(&self, v: &[u8]) -> f64 {
        (self.f)(v)
    }
}

impl fmt::Debug for LocalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LocalFunction({}, {:?})", self.name, self.support)
    }
}

/// Exterior configurations over which `g_n^±` are taken.
#[derive(Clone, Debug)]
pub enum ExtensionFamily {
    /// Every assignment of the sites outside `Λ_n` that can influence the
    /// kernel or `f`; needs a finite dependence radius.
    Exhaustive,
    /// Declared extensions; each must cover `Λ_n` (its values there are replaced).
    Listed(Vec<Configuration>),
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct OscillationReport {
    pub function: String,
    pub volume: Region,
    pub center: Configuration,
    pub annulus: usize,
    pub g_min: f64,
    pub g_max: f64,
    pub gap: f64,
    pub mc_error: Option<f64>,
    pub extensions: usize,
}

/// `g_n^+ - g_n^-` with `g_n^±(σ) = sup/inf_ω γ_Λ f(σ_{Λ_n} ω_{Λ_n^c})`.
pub fn oscillation(spec: &dyn Specification, f: &LocalFunction, volume: &Region, center: &Configuration, n: usize, family: &ExtensionFamily) -> Result<OscillationReport> {
    let d = spec.dim();
    let cube = Window::cube(d, n);
    let cube_region = Region::from(cube);
    if !volume.is_subset(&cube_region) {
        return Err(Error::RegionNotContained);
    }
    let boundaries: Vec<Configuration> = match family {
        ExtensionFamily::Exhaustive => {
            let r = spec.dependence_radius().ok_or_else(|| Error::InvalidConfig("exhaustive extensions need a finite dependence radius".into()))?;
            let reach = Region::new(d, volume.thicken(r as usize).sites().iter().chain(&f.support).copied())?;
            let annulus = reach.difference(&cube_region);
            let q = spec.alphabet().len();
            let count = (q as f64).powi(annulus.len() as i32);
            if count > ANNULUS_CAP as f64 {
                return Err(Error::AnnulusTooLarge { states: count, cap: ANNULUS_CAP });
            }
            let base = center.rewindow(cover(&cube, &reach)?)?;
            let mut out = Vec::with_capacity(count as usize);
            let mut err = None;
            for_each_word(q, annulus.len(), |_, w| match base.overwrite(annulus.sites(), w) {
                Ok(c) => out.push(c),
                Err(e) => err = Some(e),
            });
            if let Some(e) = err {
                return Err(e);
            }
            out
        }
        ExtensionFamily::Listed(exts) => {
            let inner = center.read(cube_region.sites())?;
            exts.iter().map(|e| e.overwrite(cube_region.sites(), &inner)).collect::<Result<Vec<_>>>()?
        }
    };
    let values: Vec<Result<(f64, Option<f64>)>> = boundaries
        .par_iter()
        .map(|omega| spec.kernel(volume, omega)?.expect(&f.support, &|v| f.eval(v)))
        .collect();
    let mut g_min = f64::INFINITY;
    let mut g_max = f64::NEG_INFINITY;
    let mut mc: Option<f64> = None;
    for v in values {
        let (g, e) = v?;
        g_min = g_min.min(g);
        g_max = g_max.max(g);
        if let Some(e) = e {
            mc = Some(mc.unwrap_or(0.0).max(e));
        }
    }
    Ok(OscillationReport {
        function: f.name.clone(),
        volume: volume.clone(),
        center: center.clone(),
        annulus: n,
        g_min,
        g_max,
        gap: (g_max - g_min).max(0.0),
        mc_error: mc,
        extensions: boundaries.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{plus_splice, translate, Exterior};

    fn ising_boundary(w: Window, vals: &[u8]) -> Configuration {
        Configuration::from_values(SpinAlphabet::ising(), w, vals.to_vec(), Exterior::Constant(1)).unwrap()
    }

    #[test]
    fn uniform_at_beta_zero() {
        let spec = GibbsSpecification::new(Potential::zero(SpinAlphabet::ternary(), 1));
        let vol = Region::from(Window::interval(0, 2).unwrap());
        let k = spec.kernel(&vol, &Configuration::plus(SpinAlphabet::ternary(), Window::interval(-1, 3).unwrap())).unwrap();
        assert!(k.probs().iter().all(|p| (p - 1.0 / 27.0).abs() < 1e-16));
    }

    #[test]
    fn single_site_closed_form() {
        let beta: f64 = 0.5;
        let spec = GibbsSpecification::new(Potential::ising(1, beta, 0.0));
        let w = Window::interval(-1, 1).unwrap();
        let origin = Region::single(Site::at(&[0]));
        let k = spec.kernel(&origin, &ising_boundary(w, &[1, 0, 1])).unwrap();
        let expect = (2.0 * beta).exp() / ((2.0 * beta).exp() + (-2.0 * beta).exp());
        assert!((k.probs()[1] - expect).abs() < 1e-15);
        assert!((k.probs()[1] - 0.880797).abs() < 1e-6);
        let k = spec.kernel(&origin, &ising_boundary(w, &[1, 0, 0])).unwrap();
        assert!((k.probs()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn proper_and_misuse() {
        let spec = GibbsSpecification::new(Potential::ising(1, 0.8, 0.0));
        let w = Window::interval(-2, 2).unwrap();
        let vol = Region::from(Window::interval(0, 1).unwrap());
        let omega = ising_boundary(w, &[0, 1, 0, 1, 0]);
        let ev = CylinderEvent { sites: vec![Site::at(&[-1]), Site::at(&[2])], values: vec![1, 0] };
        assert_eq!(check_proper(&spec, &vol, &[omega.clone()], &[ev]).unwrap(), 0.0);
        let bad = CylinderEvent { sites: vec![Site::at(&[0])], values: vec![1] };
        assert_eq!(check_proper(&spec, &vol, &[omega], &[bad]), Err(Error::EventInsideVolume));
    }

    /// Kernel that also flips one exterior site.
    struct Corrupted {
        inner: GibbsSpecification,
        site: Site,
    }

    impl Specification for Corrupted {
        fn alphabet(&self) -> &Arc<SpinAlphabet> {
            self.inner.alphabet()
        }
        fn dim(&self) -> usize {
            1
        }
        fn kernel(&self, volume: &Region, boundary: &Configuration) -> Result<KernelTable> {
            let k = self.inner.kernel(volume, boundary)?;
            let region = volume.union(&Region::single(self.site));
            let pos = region.index_of(&self.site).unwrap();
            let flipped = 1 - boundary.try_get(&self.site)?;
            let mut probs = vec![0.0; 1 << region.len()];
            for_each_word(2, volume.len(), |i, w| {
                let mut full = w.to_vec();
                full.insert(pos, flipped);
                probs[crate::lattice::encode_word(&full, 2)] = k.probs()[i];
            });
            KernelTable::new(region, boundary.clone(), probs, None)
        }
    }

    #[test]
    fn corrupted_kernel_is_improper() {
        let spec = Corrupted { inner: GibbsSpecification::new(Potential::ising(1, 0.3, 0.0)), site: Site::at(&[3]) };
        let w = Window::interval(-1, 4).unwrap();
        let omega = ising_boundary(w, &[1, 1, 1, 1, 1, 1]);
        let vol = Region::from(Window::interval(0, 1).unwrap());
        let ev = CylinderEvent { sites: vec![Site::at(&[3])], values: vec![1] };
        assert_eq!(check_proper(&spec, &vol, &[omega], &[ev]).unwrap(), 1.0);
    }

    #[test]
    fn consistency_of_gibbs_kernels() {
        let spec = GibbsSpecification::new(Potential::ising(1, 0.9, 0.2));
        let w = Window::interval(-1, 4).unwrap();
        let omega = ising_boundary(w, &[0, 1, 0, 0, 1, 1]);
        let outer = Region::from(Window::interval(0, 3).unwrap());
        let inner = Region::from(Window::interval(1, 2).unwrap());
        assert!(check_consistent(&spec, &inner, &outer, &omega).unwrap() <= 1e-12);
        assert!(check_consistent(&spec, &outer, &outer, &omega).unwrap() <= 1e-15);
        assert_eq!(check_consistent(&spec, &outer, &inner, &omega), Err(Error::RegionNotContained));
    }

    /// Gibbs kernel with one entry of γ_Λ bumped by 0.01 and renormalized.
    struct Perturbed {
        inner: GibbsSpecification,
        target: Region,
    }

    impl Specification for Perturbed {
        fn alphabet(&self) -> &Arc<SpinAlphabet> {
            self.inner.alphabet()
        }
        fn dim(&self) -> usize {
            1
        }
        fn kernel(&self, volume: &Region, boundary: &Configuration) -> Result<KernelTable> {
            let k = self.inner.kernel(volume, boundary)?;
            if volume != &self.target {
                return Ok(k);
            }
            let mut p = k.probs().to_vec();
            p[0] += 0.01;
            let z: f64 = p.iter().sum();
            p.iter_mut().for_each(|x| *x /= z);
            KernelTable::new(volume.clone(), boundary.clone(), p, None)
        }
    }

    #[test]
    fn perturbed_kernel_is_inconsistent() {
        let inner = Region::from(Window::interval(1, 2).unwrap());
        let spec = Perturbed { inner: GibbsSpecification::new(Potential::ising(1, 0.9, 0.2)), target: inner.clone() };
        let omega = ising_boundary(Window::interval(-1, 4).unwrap(), &[0; 6]);
        let outer = Region::from(Window::interval(0, 3).unwrap());
        assert!(check_consistent(&spec, &inner, &outer, &omega).unwrap() > 1e-4);
    }

    #[test]
    fn relative_energy_examples() {
        let beta = 0.7;
        let phi = Potential::ising(1, beta, 0.0);
        let spec = GibbsSpecification::new(phi.clone());
        let w = Window::interval(-1, 1).unwrap();
        let origin = Region::single(Site::at(&[0]));
        let omega = ising_boundary(w, &[1, 1, 1]);
        let sigma = ising_boundary(w, &[1, 0, 1]);
        assert_eq!(relative_energy(&spec, &origin, &omega, &omega).unwrap(), 0.0);
        assert!((relative_energy(&spec, &origin, &sigma, &omega).unwrap() + 4.0 * beta).abs() < 1e-12);
        assert!((relative_energy_potential(&phi, &origin, &sigma, &omega).unwrap() + 4.0 * beta).abs() < 1e-12);
    }

    #[test]
    fn d_function_examples() {
        let beta = 0.4;
        let spec = GibbsSpecification::new(Potential::ising(1, beta, 0.0));
        let w = Window::interval(-2, 2).unwrap();
        let minus = Configuration::constant(SpinAlphabet::ising(), w, 0);
        assert!((d_function(&spec, &minus).unwrap() - 4.0 * beta).abs() < 1e-12);
        let plus0 = minus.overwrite(&[Site::at(&[0])], &[1]).unwrap();
        assert_eq!(d_function(&spec, &plus0).unwrap(), 0.0);
        let flat = GibbsSpecification::new(Potential::ising(1, 0.0, 0.0));
        assert_eq!(d_function(&flat, &minus).unwrap(), 0.0);
        // D(σ⁺) = β(σ0 − 1)(σ_{−1} + 1)
        let s = plus_splice(&minus);
        assert!((d_function(&spec, &s).unwrap() - 0.0).abs() < 1e-12);
        let far = minus.overwrite(&[Site::at(&[2])], &[1]).unwrap();
        assert_eq!(d_function(&spec, &far).unwrap(), d_function(&spec, &minus).unwrap());
    }

    #[test]
    fn telescoping_trivial_cases() {
        let spec = GibbsSpecification::new(Potential::ising(2, 0.7, 0.1));
        let w = Window::cube(2, 2);
        let a = SpinAlphabet::ising();
        let plus = Configuration::plus(a.clone(), w);
        let omega = Configuration::constant(a, w, 0);
        let vol = Region::from(Window::cube(2, 1));
        assert_eq!(telescoping_identity_check(&spec, &vol, &plus, &omega).unwrap(), 0.0);
        let one = Region::single(Site::origin(2));
        assert_eq!(telescoping_identity_check(&spec, &one, &omega, &plus).unwrap(), 0.0);
    }

    #[test]
    fn translation_covariance() {
        let spec = GibbsSpecification::new(Potential::ising(2, 0.6, 0.3));
        let w = Window::cube(2, 2);
        let vals: Vec<u8> = (0..w.len()).map(|i| (i * 7 % 3 == 0) as u8).collect();
        let omega = Configuration::from_values(SpinAlphabet::ising(), w, vals, Exterior::Constant(0)).unwrap();
        let vol = Region::from(Window::with_sides(Site::at(&[0, 0]), &[1, 2]).unwrap());
        let x = Site::at(&[1, -1]);
        let k1 = spec.kernel(&vol.translate(&x), &omega).unwrap();
        let k2 = spec.kernel(&vol, &translate(&omega, &x)).unwrap();
        assert_eq!(k1.probs(), k2.probs());
    }

    #[test]
    fn oscillation_vanishes_for_finite_range() {
        let spec = GibbsSpecification::new(Potential::ising(1, 1.2, 0.0));
        let w = Window::interval(-4, 4).unwrap();
        let center = Configuration::constant(SpinAlphabet::ising(), w, 0);
        let origin = Region::single(Site::at(&[0]));
        let f = LocalFunction::indicator("plus@0", vec![Site::at(&[0])], vec![1]);
        let r0 = oscillation(&spec, &f, &origin, &center, 0, &ExtensionFamily::Exhaustive).unwrap();
        assert!(r0.gap > 0.1);
        let r1 = oscillation(&spec, &f, &origin, &center, 1, &ExtensionFamily::Exhaustive).unwrap();
        assert_eq!(r1.gap, 0.0);
        assert_eq!(r1.extensions, 1);
    }
}
