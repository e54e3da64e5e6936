//! Oscillation of the kernel at the origin as the pinned annulus grows, for the
//! Ising kernel itself and for the kernel of the decimated 2D Ising measure.

use gibbsian::lattice::{Configuration, Exterior, Region, Site, SpinAlphabet, Window};
use gibbsian::measure::{DecimatedKernel, KernelTier, SamplerSettings};
use gibbsian::potential::Potential;
use gibbsian::specification::{oscillation, ExtensionFamily, GibbsSpecification, LocalFunction};

fn main() -> gibbsian::Result<()> {
    let origin = Site::origin(2);
    let f = LocalFunction::indicator("plus_at_origin", vec![origin], vec![1]);
    let vol = Region::single(origin);

    let spec = GibbsSpecification::new(Potential::ising(2, 0.5, 0.0));
    let center = Configuration::plus(SpinAlphabet::ising(), Window::cube(2, 2));
    for n in [0, 1] {
        let r = oscillation(&spec, &f, &vol, &center, n, &ExtensionFamily::Exhaustive)?;
        println!("Ising kernel, annulus {n}: gap {:.6} over {} extensions", r.gap, r.extensions);
    }

    let k = DecimatedKernel::new(Potential::ising(2, 0.5, 0.0), Window::cube(2, 4), 1, 2, KernelTier::MC(SamplerSettings::new(1, 800, 80)))?;
    let target = *k.target();
    let vals = target.sites().map(|x| x.coords().iter().sum::<i32>().rem_euclid(2) as u8).collect();
    let center = Configuration::from_values(SpinAlphabet::ising(), target, vals, Exterior::Constant(1))?;
    let exts = vec![Configuration::plus(SpinAlphabet::ising(), target), Configuration::constant(SpinAlphabet::ising(), target, 0)];
    for n in [0, 1] {
        let r = oscillation(&k, &f, &vol, &center, n, &ExtensionFamily::Listed(exts.clone()))?;
        println!("decimated kernel, annulus {n}: gap {:.4} ± {:.4}", r.gap, r.mc_error.unwrap_or(0.0));
    }
    Ok(())
}
