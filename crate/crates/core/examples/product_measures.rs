//! Entropy densities of Bernoulli product measures on Z: relative entropy,
//! entropy, the ground energy e⁺ and the decomposition all match closed forms.

use gibbsian::entropy::{e_plus, ks_entropy, relative_entropy_density, sullivan_density, ProductMeasure};
use gibbsian::potential::Potential;
use gibbsian::specification::GibbsSpecification;

fn main() -> gibbsian::Result<()> {
    let schedule = [1, 2, 3, 4, 5];
    for (p, q) in [(0.3, 0.6), (0.1, 0.9), (0.5, 0.5)] {
        let mu = ProductMeasure::bernoulli(1, p)?;
        let nu = ProductMeasure::bernoulli(1, q)?;
        let kl = relative_entropy_density(&mu, &nu, &schedule)?.density.value();
        let h = ks_entropy(&mu, &schedule)?.density.value();
        let ep = e_plus(&nu, &schedule)?;
        let s = sullivan_density(&GibbsSpecification::new(Potential::bernoulli(1, q)?), &mu, ep.density, &schedule)?;
        let want = p * (p / q).ln() + (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln();
        println!("p = {p}, q = {q}: KL {kl:.12} (want {want:.12}), decomposed {:.12}, h {h:.6}, e⁺ {:.6}", s.density.value(), ep.density.value());
    }
    Ok(())
}
