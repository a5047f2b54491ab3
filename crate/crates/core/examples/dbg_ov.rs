use pwedge_core::spectral::*;
use pwedge_core::kernel::*;
use pwedge_core::C64;
use std::f64::consts::PI;
fn main() {
    let cfg = WedgeConfig::new(1.0, 1.05, 0.1, 5.0 * PI / 4.0).unwrap();
    let alpha = (C64::new(0.24247341829242475, 0.41050978835367635),
                 C64::new(0.22205455427001045, 0.44930095561405947));
    for n in [1600usize, 3200, 6400] {
        let tr = solve_traces(&cfg, &ContourParams { nodes_per_cut: n, truncation_factor: 40.0, offset_factor: 1e-6 }, &SolveOptions::default()).unwrap();
        let e = tr.engine();
        let p1 = e.psi_in_a1(alpha).unwrap();
        let p2 = e.psi_in_a2(alpha).unwrap();
        println!("n={n}: gap rel {:.3e}", (p1 - p2).norm() / p1.norm());
    }
}
