//! Decimating the 1D Ising chain by 2 gives the chain at tanh β' = tanh² β, and
//! decimated plus/free/minus finite-volume measures stay ordered.

use gibbsian::lattice::{Region, Site, SpinAlphabet, Window};
use gibbsian::measure::{decimate, finite_gibbs, stochastic_domination_check, Edges, TransferChain};
use gibbsian::potential::{BoundaryCondition, Potential};

fn main() -> gibbsian::Result<()> {
    let beta: f64 = 0.8;
    let beta_r = beta.tanh().powi(2).atanh();
    let chain = TransferChain::from_potential(&Potential::ising(1, beta, 0.0), Edges::Stationary)?;
    let renorm = TransferChain::from_potential(&Potential::ising(1, beta_r, 0.0), Edges::Stationary)?;
    for n in [2, 4, 6] {
        let dec = decimate(&chain.marginal(&Region::from(Window::interval(0, 2 * (n - 1))?))?, 2)?;
        let want = renorm.marginal(&Region::from(Window::interval(0, n - 1)?))?;
        let diff = dec.probs().iter().zip(want.probs()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        println!("{n} decimated sites: max deviation from β' = {beta_r:.6} is {diff:e}");
    }

    let phi = Potential::ising(2, 0.6, 0.0);
    let r = Region::from(Window::new(Site::at(&[0, 0]), Site::at(&[2, 2]))?);
    let ising = SpinAlphabet::ising();
    let plus = decimate(&finite_gibbs(&phi, &r, &BoundaryCondition::plus(ising.clone(), 2))?, 2)?;
    let minus = decimate(&finite_gibbs(&phi, &r, &BoundaryCondition::constant(ising, 2, 0))?, 2)?;
    let free = decimate(&finite_gibbs(&phi, &r, &BoundaryCondition::Free)?, 2)?;
    let lo = stochastic_domination_check(&minus, &free)?;
    let hi = stochastic_domination_check(&free, &plus)?;
    println!("3×3 square, b = 2: minus ⪯ free worst {:e}, free ⪯ plus worst {:e} ({:?}, {} tests)", lo.worst, hi.worst, lo.family, lo.tested);
    Ok(())
}
