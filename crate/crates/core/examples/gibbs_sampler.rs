//! Heat-bath sampling of the 2D Ising model with plus boundary, compared with
//! exact enumeration on a small window.

use gibbsian::lattice::{Region, SpinAlphabet, Window};
use gibbsian::measure::{finite_gibbs, gibbs_sampler_replicas, SamplerSettings};
use gibbsian::potential::{BoundaryCondition, Potential};

fn main() -> gibbsian::Result<()> {
    let phi = Potential::ising(2, 0.4, 0.0);
    let w = Window::cube(2, 1);
    let bc = BoundaryCondition::plus(SpinAlphabet::ising(), 2);
    let magnetization = |v: &[u8]| v.iter().map(|s| 2.0 * f64::from(*s) - 1.0).sum::<f64>() / v.len() as f64;

    let set = gibbs_sampler_replicas(&phi, &w, &bc, SamplerSettings::new(42, 4000, 200), 4)?;
    let (mean, se) = set.estimate(magnetization);
    let exact = finite_gibbs(&phi, &Region::from(w), &bc)?.expectation(magnetization);
    println!("{} samples on 3×3: magnetization {mean:.4} ± {se:.4}, exact {exact:.4}", set.len());
    Ok(())
}
