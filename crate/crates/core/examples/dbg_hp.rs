use pwedge_core::halfplane::*;
use pwedge_core::C64;
fn main() {
    let cfg = InterfaceConfig::new(2.0, 1.0, 10.0).unwrap();
    let r = 150.0;
    let theta = 1.7f64;
    let x = [r * theta.cos(), r * theta.sin()];
    let exact = exact_scattered(x, &cfg).unwrap();
    let cyl = asympt_cylindrical(r, theta, &cfg, CylKind::Reflected).unwrap();
    println!("exact = {exact}  |exact| = {}", exact.norm());
    println!("cyl   = {cyl}  |cyl|   = {}", cyl.norm());
    println!("ratio = {}", exact / cyl);
    println!("rel dev = {}", (exact - cyl).norm() / exact.norm());

    // transmitted side
    let theta2 = -2.0f64;
    let x2 = [r * theta2.cos(), r * theta2.sin()];
    let et = exact_transmitted(x2, &cfg).unwrap();
    let ct = asympt_cylindrical(r, theta2, &cfg, CylKind::Transmitted).unwrap();
    println!("T: exact = {et} cyl = {ct} ratio = {}", et / ct);

    // lateral ray
    let r3 = 400.0;
    let th3 = std::f64::consts::FRAC_PI_6;
    let x3 = [r3 * th3.cos(), r3 * th3.sin()];
    let e3 = exact_scattered(x3, &cfg).unwrap();
    let c3 = asympt_cylindrical(r3, th3, &cfg, CylKind::Reflected).unwrap();
    let l3 = asympt_lateral(r3, th3, &cfg, LateralKind::PhiL1).value;
    println!("L: exact-cyl = {}  lat = {l3}", e3 - c3);
    println!("L: ratio (exact-cyl)/lat = {}", (e3 - c3) / l3);
    let _ = C64::new(0.0, 0.0);
}
