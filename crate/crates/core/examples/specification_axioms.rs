//! Properness, consistency and the telescoping identity of the nearest-neighbour
//! Ising kernel on a short interval, checked against every boundary condition.

use gibbsian::lattice::{for_each_word, Configuration, Exterior, Region, SpinAlphabet, Window};
use gibbsian::potential::Potential;
use gibbsian::specification::{check_consistent, check_proper, relative_energy, telescoping_identity_check, CylinderEvent, GibbsSpecification};

fn main() -> gibbsian::Result<()> {
    let spec = GibbsSpecification::new(Potential::ising(1, 0.7, 0.2));
    let outer = Window::interval(0, 2)?;
    let big = outer.expand(1)?;
    let mut boundaries = Vec::new();
    for_each_word(2, big.len(), |_, v| boundaries.push(Configuration::from_values(SpinAlphabet::ising(), big, v.to_vec(), Exterior::Constant(1)).expect("binary")));

    let region = Region::from(outer);
    let left = big.lo();
    let events = vec![CylinderEvent { sites: vec![left], values: vec![1] }];
    println!("properness  {:e}", check_proper(&spec, &region, &boundaries, &events)?);

    let inner = Region::single(gibbsian::lattice::Site::at(&[1]));
    let worst = boundaries.iter().map(|b| check_consistent(&spec, &inner, &region, b)).collect::<gibbsian::Result<Vec<_>>>()?.into_iter().fold(0.0, f64::max);
    println!("consistency {worst:e}");

    let sigma = boundaries[0b10110 % boundaries.len()].clone();
    let omega = boundaries[0b01011 % boundaries.len()].clone();
    println!("relative energy H(σ|ω) = {:.6}", relative_energy(&spec, &region, &sigma, &omega)?);
    println!("telescoping residual    {:e}", telescoping_identity_check(&spec, &region, &sigma, &omega)?);
    Ok(())
}
