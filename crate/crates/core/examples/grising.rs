//! Griffiths-Ising measure: site percolation decorated with Ising spins on the
//! occupied clusters. The probability of an all-empty block decays at rate
//! log(1 - p), independent of β.

use gibbsian::disorder::{grising_log_cylinder, grising_sample};
use gibbsian::lattice::{Site, Window};

fn main() -> gibbsian::Result<()> {
    let (p, beta) = (0.4, 1.2);
    for side in [2, 4, 8, 16] {
        let w = Window::with_sides(Site::origin(2), &[side, side])?;
        let rate = grising_log_cylinder(p, beta, &w)? / w.len() as f64;
        println!("side {side:>2}: rate {rate:.15}  log(1-p) {:.15}", (1.0 - p).ln());
    }
    let w = Window::with_sides(Site::origin(2), &[64, 64])?;
    let g = grising_sample(p, beta, w, 7)?;
    let empty = g.xi.values().iter().filter(|v| **v == 1).count() as f64 / w.len() as f64;
    println!("sample on 64×64: {} clusters, largest {}, empty fraction {empty:.3}, edge-touching {:.3}", g.clusters, g.largest_cluster, g.boundary_fraction);
    Ok(())
}
