//! Joint (spin, field) measures of the random-field Ising model: boundary
//! bounds on the plus/minus relative entropy, the entropy decomposition, and
//! the explicit conditional kernel against brute-force conditioning.

use gibbsian::disorder::{joint_entropy_bound_check, joint_entropy_decomposition, plus_minus_tables, DisorderLaw, JointModel};
use gibbsian::experiments::run::conditional_kernel_deviation;
use gibbsian::lattice::Window;

fn main() -> gibbsian::Result<()> {
    let law = DisorderLaw::two_point();
    let model = JointModel::rfim(1, 0.8, 0.6, law.alphabet()?)?;
    let eta_ext = model.disorder().plus();

    let windows: Vec<Window> = (2..=8).map(|n| Window::interval(0, n - 1)).collect::<gibbsian::Result<_>>()?;
    let bounds = joint_entropy_bound_check(&model, &law, &windows, eta_ext)?;
    for r in &bounds.rows {
        println!("{:>2} sites: h = {:.5} ≤ {:.3}, sup log-ratio {:.4} ≤ {:.3}", r.sites, r.h, r.h_bound, r.sup_log_ratio, r.ratio_bound);
    }

    let (plus, _) = plus_minus_tables(&model, &law, &Window::interval(0, 3)?, eta_ext)?;
    let d = joint_entropy_decomposition(&model, &law, &plus)?;
    println!("entropy identity: direct {:.12} decomposed {:.12}", d.direct, d.total);

    let (volumes, dev) = conditional_kernel_deviation(&model, &law, &Window::interval(0, 2)?)?;
    println!("conditional kernel over {volumes} volumes: max deviation {dev:e}");
    Ok(())
}
