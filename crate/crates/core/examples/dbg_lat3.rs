use pwedge_core::halfplane::*;
use std::f64::consts::PI;
fn main() {
    let cfg = InterfaceConfig::new(2.0, 1.0, 10.0).unwrap();
    for &r in &[200.0, 400.0, 800.0] {
        let theta = PI / 6.0;
        let x = [r * theta.cos(), r * theta.sin()];
        let e = exact_scattered(x, &cfg).unwrap();
        let c0 = asympt_cylindrical(r, theta, &cfg, CylKind::Reflected).unwrap();
        let c2 = asympt_cylindrical_refined(r, theta, &cfg, CylKind::Reflected).unwrap();
        let l = asympt_lateral(r, theta, &cfg, LateralKind::PhiL1).value;
        println!(
            "r={r}: |e-c0-l|/|l| = {:.4}   |e-c2-l|/|l| = {:.4}   |e-c2|/|l| = {:.4}",
            (e - c0 - l).norm() / l.norm(),
            (e - c2 - l).norm() / l.norm(),
            (e - c2).norm() / l.norm()
        );
    }
    // refined vs plain consistency in the no-lateral zone
    let r = 150.0;
    let th = 1.7f64;
    let e = exact_scattered([r * th.cos(), r * th.sin()], &cfg).unwrap();
    let c2 = asympt_cylindrical_refined(r, th, &cfg, CylKind::Reflected).unwrap();
    println!("no-lat zone: |e-c2|/|e| = {:.2e}", (e - c2).norm() / e.norm());
    let tt = -2.0f64;
    let et = exact_transmitted([r * tt.cos(), r * tt.sin()], &cfg).unwrap();
    let ct = asympt_cylindrical_refined(r, tt, &cfg, CylKind::Transmitted).unwrap();
    println!("transmitted: |e-c2|/|e| = {:.2e}", (et - ct).norm() / et.norm());
}
