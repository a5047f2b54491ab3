use pwedge_core::spectral::*;
use pwedge_core::kernel::WedgeConfig;
use pwedge_core::C64;
use std::f64::consts::PI;
fn main() {
    let cfg = WedgeConfig::new(1.0, 1.0, 0.1, 5.0 * PI / 4.0).unwrap();
    let tr = solve_traces(&cfg, &ContourParams { nodes_per_cut: 700, truncation_factor: 40.0, offset_factor: 1e-6 }, &SolveOptions::default()).unwrap();
    let e = tr.engine();
    for alpha in [
        (C64::new(0.3, 0.4), C64::new(-0.2, 0.5)),
        (C64::new(-1.4, 0.8), C64::new(0.9, 0.3)),
        (C64::new(2.0, 0.2), C64::new(1.1, 0.9)),
    ] {
        println!("alpha = {alpha:?} region = {:?}", e.region(alpha));
        println!("  dist1 = {:.4} dist2 = {:.4} above1={} above2={}",
            e.dist_to_path(alpha.0), e.dist_to_path(alpha.1),
            e.is_above_cuts(alpha.0), e.is_above_cuts(alpha.1));
        match e.psi(alpha) { Ok(v) => println!("  psi = {}", v.value), Err(er) => println!("  ERR {er}") }
    }
}
