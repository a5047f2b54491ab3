//! Closed-form penetrable half-plane interface problem: a point source above
//! a flat interface between two media, the exact spectral integrals for the
//! scattered and transmitted fields, and their far-field split into
//! cylindrical and lateral waves. Serves as the end-to-end oracle for the
//! lateral-wave machinery of the wedge pipeline.

use crate::contours::branch_sqrt;
use crate::quad::adaptive_qk15;
use crate::C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Interface problem instance. The source sits at (0, b) in the upper
/// medium (wavenumber k1); the lower medium has wavenumber k2.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct InterfaceConfig {
    pub k1: f64,
    pub k2: f64,
    pub b: f64,
}

#[derive(Debug, Error)]
pub enum HalfplaneError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("{field} requested outside its half-space at x2 = {x2}")]
    WrongHalfSpace { field: &'static str, x2: f64 },
    #[error("quadrature did not reach tolerance: achieved {achieved:.3e}, wanted {wanted:.3e}")]
    QuadratureAccuracy { achieved: f64, wanted: f64 },
    #[error("direction {theta} outside the support sector of {field}")]
    OutOfSector { field: &'static str, theta: f64 },
}

impl InterfaceConfig {
    pub fn new(k1: f64, k2: f64, b: f64) -> Result<Self, HalfplaneError> {
        if !(k1 > 0.0 && k2 > 0.0) {
            return Err(HalfplaneError::Invalid(format!(
                "wavenumbers must be positive, got k1={k1}, k2={k2}"
            )));
        }
        if !(b >= 0.0) {
            return Err(HalfplaneError::Invalid(format!(
                "source height must be nonnegative, got {b}"
            )));
        }
        Ok(InterfaceConfig { k1, k2, b })
    }

    /// Critical angle arccos(k_lesser / k_greater) of the lateral cone.
    pub fn critical_angle(&self) -> f64 {
        (self.k1.min(self.k2) / self.k1.max(self.k2)).acos()
    }
}

// ---------------------------------------------------------------------------
// Hankel function H0^(1) for positive real argument
// ---------------------------------------------------------------------------

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const HANKEL_SWITCH: f64 = 12.0;

/// H0^(1)(x) for x > 0: power series below the switchover, large-argument
/// asymptotics above, both to ~1e-10.
pub fn hankel0_1(x: f64) -> C64 {
    assert!(x > 0.0, "hankel0_1 needs a positive argument");
    if x < HANKEL_SWITCH {
        // J0 and Y0 by their ascending series
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut j0 = 1.0;
        let mut y_sum = 0.0;
        let mut harmonic = 0.0;
        for m in 1..60 {
            term *= -q / ((m * m) as f64);
            harmonic += 1.0 / m as f64;
            j0 += term;
            // Y0 series: Σ (-1)^{m+1} h_m q^m/(m!)^2 = -h_m * term
            y_sum -= harmonic * term;
            if term.abs() < 1e-18 * j0.abs().max(1.0) {
                break;
            }
        }
        let y0 = 2.0 / PI * (((0.5 * x).ln() + EULER_GAMMA) * j0 + y_sum);
        C64::new(j0, y0)
    } else {
        // H0^(1)(x) ~ sqrt(2/(πx)) e^{i(x - π/4)} Σ i^m a_m / x^m with
        // a_m = (-1)^m [(2m-1)!!]^2 / (m! 8^m)
        let mut sum = C64::new(0.0, 0.0);
        let mut a = 1.0f64;
        let mut ipow = C64::new(1.0, 0.0);
        let mut xpow = 1.0f64;
        let mut best = f64::INFINITY;
        for m in 0..24 {
            let t = a / xpow;
            if t.abs() > best {
                break; // asymptotic series started diverging
            }
            best = t.abs();
            sum += ipow * t;
            let mf = (m + 1) as f64;
            a *= -((2.0 * mf - 1.0) * (2.0 * mf - 1.0)) / (8.0 * mf);
            ipow *= C64::new(0.0, 1.0);
            xpow *= x;
        }
        let amp = (2.0 / (PI * x)).sqrt();
        let phase = C64::new(0.0, x - PI / 4.0).exp();
        phase * sum * amp
    }
}

// ---------------------------------------------------------------------------
// Exact spectral integrals on the indented real line
// ---------------------------------------------------------------------------

/// The indented integration path: straight real segments with semicircular
/// detours above the branch points on the negative axis and below those on
/// the positive axis (the side forced by Im(k) -> 0+).
struct IndentedPath {
    segments: Vec<Seg>,
}

enum Seg {
    Line(f64, f64),
    /// Arc centre, radius, theta range (traversed from .2 to .3).
    Arc(f64, f64, f64, f64),
}

fn indented_path(cfg: &InterfaceConfig, big_a: f64) -> IndentedPath {
    let mut pts = vec![cfg.k1, cfg.k2];
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-9 * cfg.k1.max(cfg.k2));
    let klo = pts[0];
    let gap = if pts.len() == 2 {
        0.5 * (pts[1] - pts[0])
    } else {
        klo
    };
    let rho = |k: f64| (0.01 * k).min(0.8 * gap).min(0.3 * klo);
    let mut segments = Vec::new();
    // negative axis, detours above; positive axis, detours below
    let mut cursor = -big_a;
    for &k in pts.iter().rev() {
        let r = rho(k);
        segments.push(Seg::Line(cursor, -k - r));
        segments.push(Seg::Arc(-k, r, PI, 0.0));
        cursor = -k + r;
    }
    for &k in pts.iter() {
        let r = rho(k);
        segments.push(Seg::Line(cursor, k - r));
        segments.push(Seg::Arc(k, r, PI, 2.0 * PI));
        cursor = k + r;
    }
    segments.push(Seg::Line(cursor, big_a));
    IndentedPath { segments }
}

impl IndentedPath {
    fn integrate<F: Fn(C64) -> C64>(&self, f: F, tol_abs: f64) -> (C64, f64) {
        let mut total = C64::new(0.0, 0.0);
        let mut err_total = 0.0;
        for seg in &self.segments {
            let (v, e) = match seg {
                Seg::Line(a, b) => {
                    adaptive_qk15(|t| f(C64::new(t, 0.0)), *a, *b, tol_abs, 30_000)
                }
                Seg::Arc(c, r, t0, t1) => adaptive_qk15(
                    |t| {
                        let z = C64::new(*c, 0.0) + C64::from_polar(*r, t);
                        let dz = C64::new(0.0, *r) * C64::new(0.0, t).exp();
                        f(z) * dz
                    },
                    *t0,
                    *t1,
                    tol_abs,
                    4_000,
                ),
            };
            total += v;
            err_total += e;
        }
        (total, err_total)
    }
}

fn s_of(ksq: f64, alpha: C64) -> C64 {
    branch_sqrt(C64::new(ksq, 0.0) - alpha * alpha)
}

/// Exact scattered field in the upper half-space x2 > 0.
pub fn exact_scattered(x: [f64; 2], cfg: &InterfaceConfig) -> Result<C64, HalfplaneError> {
    if x[1] <= 0.0 {
        return Err(HalfplaneError::WrongHalfSpace {
            field: "scattered",
            x2: x[1],
        });
    }
    let k1s = cfg.k1 * cfg.k1;
    let k2s = cfg.k2 * cfg.k2;
    let depth = (x[1] + cfg.b).max(0.05);
    let big_a = cfg.k1.max(cfg.k2) + 40.0 / depth;
    let path = indented_path(cfg, big_a);
    let tol = 1e-11;
    let f = |alpha: C64| {
        let s1 = s_of(k1s, alpha);
        let s2 = s_of(k2s, alpha);
        let refl = (s1 - s2) / (s1 + s2);
        let phase = C64::new(0.0, 1.0) * (-alpha * x[0] + s1 * (x[1] + cfg.b));
        refl * phase.exp() / s1
    };
    let (v, err) = path.integrate(f, tol);
    if err > 100.0 * tol {
        return Err(HalfplaneError::QuadratureAccuracy {
            achieved: err,
            wanted: 100.0 * tol,
        });
    }
    Ok(C64::new(0.0, 0.25 / PI) * v)
}

/// Exact transmitted field in the lower half-space x2 < 0.
pub fn exact_transmitted(x: [f64; 2], cfg: &InterfaceConfig) -> Result<C64, HalfplaneError> {
    if x[1] >= 0.0 {
        return Err(HalfplaneError::WrongHalfSpace {
            field: "transmitted",
            x2: x[1],
        });
    }
    let k1s = cfg.k1 * cfg.k1;
    let k2s = cfg.k2 * cfg.k2;
    let depth = (cfg.b + x[1].abs()).max(0.05);
    let big_a = cfg.k1.max(cfg.k2) + 40.0 / depth;
    let path = indented_path(cfg, big_a);
    let tol = 1e-11;
    let f = |alpha: C64| {
        let s1 = s_of(k1s, alpha);
        let s2 = s_of(k2s, alpha);
        let phase = C64::new(0.0, 1.0) * (-alpha * x[0] - s2 * x[1] + s1 * cfg.b);
        C64::new(2.0, 0.0) / (s1 + s2) * phase.exp()
    };
    let (v, err) = path.integrate(f, tol);
    if err > 100.0 * tol {
        return Err(HalfplaneError::QuadratureAccuracy {
            achieved: err,
            wanted: 100.0 * tol,
        });
    }
    Ok(C64::new(0.0, 0.25 / PI) * v)
}

// ---------------------------------------------------------------------------
// Far-field asymptotics
// ---------------------------------------------------------------------------

/// Which cylindrical wave to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CylKind {
    /// Upper half-space, saddle at -k1 cos(theta).
    Reflected,
    /// Lower half-space, saddle at -k2 cos(theta).
    Transmitted,
}

/// Leading-order cylindrical wave at polar point (r, theta).
///
/// Reflected sector is theta in (0, π), transmitted theta in (-π, 0).
pub fn asympt_cylindrical(
    r: f64,
    theta: f64,
    cfg: &InterfaceConfig,
    which: CylKind,
) -> Result<C64, HalfplaneError> {
    let k1s = cfg.k1 * cfg.k1;
    let k2s = cfg.k2 * cfg.k2;
    match which {
        CylKind::Reflected => {
            if !(theta > 0.0 && theta < PI) {
                return Err(HalfplaneError::OutOfSector {
                    field: "reflected cylindrical",
                    theta,
                });
            }
            // image-source coordinates: the saddle expansion is uniform in b
            // when written against the mirror point (0, -b); the displayed
            // H0(k1 r) e^{i k1 sin(theta) b} form is its r -> ∞ limit.
            let x1 = r * theta.cos();
            let x2 = r * theta.sin();
            let rp = (x1 * x1 + (x2 + cfg.b) * (x2 + cfg.b)).sqrt();
            let thp = (x2 + cfg.b).atan2(x1);
            let alpha = C64::new(-cfg.k1 * thp.cos(), 0.0);
            let s1 = s_of(k1s, alpha); // = k1 sin(theta')
            let s2 = s_of(k2s, alpha);
            let refl = (s1 - s2) / (s1 + s2);
            Ok(C64::new(0.0, 0.25) * refl * hankel0_1(cfg.k1 * rp))
        }
        CylKind::Transmitted => {
            if !(theta < 0.0 && theta > -PI) {
                return Err(HalfplaneError::OutOfSector {
                    field: "transmitted cylindrical",
                    theta,
                });
            }
            let alpha = C64::new(-cfg.k2 * theta.cos(), 0.0);
            let s1 = s_of(k1s, alpha);
            let s2 = s_of(k2s, alpha); // = k2 |sin(theta)|
            let tfac = s2 / (s1 + s2);
            let bfac = (C64::new(0.0, 1.0) * s1 * cfg.b).exp();
            Ok(C64::new(0.0, 0.5) * tfac * bfac * hankel0_1(cfg.k2 * r))
        }
    }
}

/// Second-order stationary phase for ∫ g(α) e^{i r h(α)} dα around an
/// interior saddle a0: leading term plus the O(1/r) correction, with all
/// derivatives taken numerically on a 5-point stencil.
fn stationary_phase_o2<G, H>(g: G, h: H, a0: f64, r: f64, delta: f64) -> C64
where
    G: Fn(f64) -> C64,
    H: Fn(f64) -> C64,
{
    let d = delta;
    let (gm2, gm1, g0, gp1, gp2) = (
        g(a0 - 2.0 * d),
        g(a0 - d),
        g(a0),
        g(a0 + d),
        g(a0 + 2.0 * d),
    );
    let (hm2, hm1, h0, hp1, hp2) = (
        h(a0 - 2.0 * d),
        h(a0 - d),
        h(a0),
        h(a0 + d),
        h(a0 + 2.0 * d),
    );
    let d2 = d * d;
    let g1 = (-gp2 + gp1 * 8.0 - gm1 * 8.0 + gm2) / (12.0 * d);
    let g2 = (-gp2 + gp1 * 16.0 - g0 * 30.0 + gm1 * 16.0 - gm2) / (12.0 * d2);
    let h2 = (-hp2 + hp1 * 16.0 - h0 * 30.0 + hm1 * 16.0 - hm2) / (12.0 * d2);
    let h3 = (hp2 - hp1 * 2.0 + hm1 * 2.0 - hm2) / (2.0 * d2 * d);
    let h4 = (hp2 - hp1 * 4.0 + h0 * 6.0 - hm1 * 4.0 + hm2) / (d2 * d2);
    let i = C64::new(0.0, 1.0);
    let pref = (C64::new(2.0 * PI, 0.0) / (-i * r * h2)).sqrt();
    let corr = i / (2.0 * r * h2)
        * (g2 - g1 * h3 / h2 + g0 * (h3 * h3 * 5.0 / (12.0 * h2 * h2) - h4 / (4.0 * h2)));
    (i * r * h0).exp() * pref * (g0 + corr)
}

/// Cylindrical wave including the next-order saddle correction. The leading
/// term equals [`asympt_cylindrical`]; the correction restores the O(r^{-3/2})
/// accuracy needed to resolve lateral waves against the exact integrals.
pub fn asympt_cylindrical_refined(
    r: f64,
    theta: f64,
    cfg: &InterfaceConfig,
    which: CylKind,
) -> Result<C64, HalfplaneError> {
    let k1s = cfg.k1 * cfg.k1;
    let k2s = cfg.k2 * cfg.k2;
    match which {
        CylKind::Reflected => {
            if !(theta > 0.0 && theta < PI) {
                return Err(HalfplaneError::OutOfSector {
                    field: "reflected cylindrical",
                    theta,
                });
            }
            let x1 = r * theta.cos();
            let x2 = r * theta.sin();
            let rp = (x1 * x1 + (x2 + cfg.b) * (x2 + cfg.b)).sqrt();
            let thp = (x2 + cfg.b).atan2(x1);
            let a0 = -cfg.k1 * thp.cos();
            let g = |a: f64| {
                let al = C64::new(a, 0.0);
                let s1 = s_of(k1s, al);
                let s2 = s_of(k2s, al);
                C64::new(0.0, 0.25 / PI) * (s1 - s2) / ((s1 + s2) * s1)
            };
            let h = |a: f64| {
                let al = C64::new(a, 0.0);
                -al * thp.cos() + s_of(k1s, al) * thp.sin()
            };
            let bp_dist = [cfg.k1, cfg.k2, -cfg.k1, -cfg.k2]
                .iter()
                .map(|b| (a0 - b).abs())
                .fold(f64::INFINITY, f64::min);
            let delta = (1e-3 * cfg.k1).min(0.05 * bp_dist);
            Ok(stationary_phase_o2(g, h, a0, rp, delta))
        }
        CylKind::Transmitted => {
            if !(theta < 0.0 && theta > -PI) {
                return Err(HalfplaneError::OutOfSector {
                    field: "transmitted cylindrical",
                    theta,
                });
            }
            let a0 = -cfg.k2 * theta.cos();
            let g = |a: f64| {
                let al = C64::new(a, 0.0);
                let s1 = s_of(k1s, al);
                let s2 = s_of(k2s, al);
                C64::new(0.0, 0.5 / PI) / (s1 + s2) * (C64::new(0.0, 1.0) * s1 * cfg.b).exp()
            };
            let h = |a: f64| {
                let al = C64::new(a, 0.0);
                -al * theta.cos() - s_of(k2s, al) * theta.sin()
            };
            let bp_dist = [cfg.k1, cfg.k2, -cfg.k1, -cfg.k2]
                .iter()
                .map(|b| (a0 - b).abs())
                .fold(f64::INFINITY, f64::min);
            let delta = (1e-3 * cfg.k2).min(0.05 * bp_dist);
            Ok(stationary_phase_o2(g, h, a0, r, delta))
        }
    }
}

/// Lateral wave selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LateralKind {
    PhiL1,
    PhiL2,
    PsiL1,
    PsiL2,
}

/// Result of a lateral-wave evaluation: the value plus a proximity flag for
/// the transition band around the support boundary, where the split into
/// cylindrical + lateral waves fails.
#[derive(Debug, Clone, Copy)]
pub struct LateralValue {
    pub value: C64,
    pub near_transition: bool,
}

/// Exclusion band (radians) around the lateral transition lines.
pub const TRANSITION_BAND: f64 = 0.05;

/// Leading-order lateral wave. Identically zero outside its support sector
/// and for the wavenumber ordering that does not produce it.
pub fn asympt_lateral(
    r: f64,
    theta: f64,
    cfg: &InterfaceConfig,
    kind: LateralKind,
) -> LateralValue {
    let (k1, k2, b) = (cfg.k1, cfg.k2, cfg.b);
    let zero = LateralValue {
        value: C64::new(0.0, 0.0),
        near_transition: false,
    };
    let phase_i34 = C64::from_polar(1.0, 3.0 * PI / 4.0);
    match kind {
        LateralKind::PhiL1 | LateralKind::PhiL2 => {
            if k1 <= k2 {
                return zero;
            }
            let crit = (k2 / k1).acos();
            let gamma = (k1 * k1 - k2 * k2).sqrt();
            // the glide-length denominator carries the source height; this
            // agrees with the r -> ∞ display and is uniform in b
            let (lo, hi, phase_x, denom) = match kind {
                LateralKind::PhiL1 => (
                    0.0,
                    crit,
                    k2 * theta.cos() + gamma * theta.sin(),
                    gamma * r * theta.cos() - k2 * (r * theta.sin() + b),
                ),
                _ => (
                    PI - crit,
                    PI,
                    -k2 * theta.cos() + gamma * theta.sin(),
                    gamma * r * theta.cos() + k2 * (r * theta.sin() + b),
                ),
            };
            let near = (theta - lo).abs() < TRANSITION_BAND || (theta - hi).abs() < TRANSITION_BAND;
            if !(theta > lo && theta < hi) {
                return LateralValue {
                    value: C64::new(0.0, 0.0),
                    near_transition: near,
                };
            }
            // quadrature oracle pins the overall phase: the leading factor
            // is real, so the e^{i 3π/4} carries the entire phase
            let amp = C64::new(0.5 / PI.sqrt(), 0.0) * (2.0 * k2).sqrt()
                / (k1 * k1 - k2 * k2).powf(0.25);
            let bfac = (C64::new(0.0, gamma * b)).exp();
            let osc = (C64::new(0.0, r * phase_x)).exp();
            LateralValue {
                value: amp * phase_i34 * bfac * osc / denom.abs().powf(1.5),
                near_transition: near,
            }
        }
        LateralKind::PsiL1 | LateralKind::PsiL2 => {
            if k2 <= k1 {
                return zero;
            }
            let crit = (k1 / k2).acos();
            let gamma = (k2 * k2 - k1 * k1).sqrt();
            let (lo, hi, phase_x, denom) = match kind {
                LateralKind::PsiL1 => (
                    -crit,
                    0.0,
                    k1 * theta.cos() - gamma * theta.sin(),
                    gamma * r * theta.cos() + k1 * r * theta.sin(),
                ),
                _ => (
                    -PI,
                    -PI + crit,
                    -k1 * theta.cos() - gamma * theta.sin(),
                    -gamma * r * theta.cos() + k1 * r * theta.sin(),
                ),
            };
            let near = (theta - lo).abs() < TRANSITION_BAND || (theta - hi).abs() < TRANSITION_BAND;
            if !(theta > lo && theta < hi) {
                return LateralValue {
                    value: C64::new(0.0, 0.0),
                    near_transition: near,
                };
            }
            let amp = C64::new(0.25 / PI.sqrt(), 0.0) * (2.0 * k1).sqrt()
                / (k2 * k2 - k1 * k1).powf(0.25);
            let osc = (C64::new(0.0, r * phase_x)).exp();
            LateralValue {
                value: amp * phase_i34 * osc / denom.abs().powf(1.5),
                near_transition: near,
            }
        }
    }
}

/// Full far-field asymptotics at a point: cylindrical wave for the point's
/// half-space plus the lateral waves supported there.
pub fn asympt_total(x: [f64; 2], cfg: &InterfaceConfig) -> Result<C64, HalfplaneError> {
    let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
    let theta = x[1].atan2(x[0]);
    if x[1] > 0.0 {
        let cyl = asympt_cylindrical(r, theta, cfg, CylKind::Reflected)?;
        let l1 = asympt_lateral(r, theta, cfg, LateralKind::PhiL1).value;
        let l2 = asympt_lateral(r, theta, cfg, LateralKind::PhiL2).value;
        Ok(cyl + l1 + l2)
    } else {
        let cyl = asympt_cylindrical(r, theta, cfg, CylKind::Transmitted)?;
        let l1 = asympt_lateral(r, theta, cfg, LateralKind::PsiL1).value;
        let l2 = asympt_lateral(r, theta, cfg, LateralKind::PsiL2).value;
        Ok(cyl + l1 + l2)
    }
}

/// |field| heat map of the far-field asymptotics over a centred square grid.
/// Points too close to the origin or the interface carry NaN (asymptotics
/// invalid there).
pub fn heatmap(cfg: &InterfaceConfig, half_width: f64, n: usize) -> Vec<(f64, f64, C64)> {
    let mut out = Vec::with_capacity(n * n);
    let r_min = 4.0 / cfg.k1.max(cfg.k2);
    for iy in 0..n {
        for ix in 0..n {
            let x1 = -half_width + 2.0 * half_width * ix as f64 / (n - 1) as f64;
            let x2 = -half_width + 2.0 * half_width * iy as f64 / (n - 1) as f64;
            let r = (x1 * x1 + x2 * x2).sqrt();
            let v = if r < r_min || x2.abs() < 1e-9 {
                C64::new(f64::NAN, f64::NAN)
            } else {
                asympt_total([x1, x2], cfg).unwrap_or(C64::new(f64::NAN, f64::NAN))
            };
            out.push((x1, x2, v));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hankel_reference_values() {
        let cases = [
            (0.5, 9.384_698_072_408_128_6e-1, -4.445_187_335_067_065_6e-1),
            (1.0, 7.651_976_865_579_666_1e-1, 8.825_696_421_567_695_6e-2),
            (5.0, -1.775_967_713_143_382_9e-1, -3.085_176_252_490_337_6e-1),
            (11.9, 2.504_944_169_958_964_5e-2, -2.298_332_139_433_750_5e-1),
            (12.1, 6.966_677_360_680_731_4e-2, -2.184_383_805_509_254_9e-1),
            (30.0, -8.636_798_358_104_021_1e-2, -1.172_957_316_866_640_3e-1),
            (100.0, 1.998_585_030_422_312_2e-2, -7.724_431_336_508_315_3e-2),
        ];
        for (x, re, im) in cases {
            let h = hankel0_1(x);
            assert!(
                (h - C64::new(re, im)).norm() < 2e-10,
                "H0({x}) = {h}, want ({re}, {im})"
            );
        }
    }

    #[test]
    fn transparent_interface_scatters_nothing() {
        let cfg = InterfaceConfig::new(1.0, 1.0, 2.0).unwrap();
        let v = exact_scattered([3.0, 4.0], &cfg).unwrap();
        assert!(v.norm() < 1e-10);
        let c = asympt_cylindrical(10.0, 1.0, &cfg, CylKind::Reflected).unwrap();
        assert!(c.norm() < 1e-14);
    }

    #[test]
    fn transmitted_matches_free_field_when_transparent() {
        // k1 = k2: the transmitted integral is the incident cylindrical wave
        let cfg = InterfaceConfig::new(1.3, 1.3, 2.0).unwrap();
        let x = [2.0, -3.0];
        let v = exact_transmitted(x, &cfg).unwrap();
        let dist = (x[0] * x[0] + (x[1] - cfg.b) * (x[1] - cfg.b)).sqrt();
        let free = C64::new(0.0, 0.25) * hankel0_1(cfg.k1 * dist);
        assert!(
            (v - free).norm() < 1e-8 * free.norm(),
            "v = {v}, free = {free}"
        );
    }

    #[test]
    fn scattered_field_even_in_x1() {
        let cfg = InterfaceConfig::new(2.0, 1.0, 3.0).unwrap();
        let a = exact_scattered([4.0, 2.5], &cfg).unwrap();
        let b = exact_scattered([-4.0, 2.5], &cfg).unwrap();
        assert!((a - b).norm() < 1e-9 * a.norm().max(1e-12));
    }

    #[test]
    fn reflected_amplitude_factor_at_normal_incidence() {
        // theta = π/2: reflection factor (k1-k2)/(k1+k2) = 1/3 for 2:1
        let cfg = InterfaceConfig::new(2.0, 1.0, 0.0).unwrap();
        let r = 50.0;
        let v = asympt_cylindrical(r, PI / 2.0, &cfg, CylKind::Reflected).unwrap();
        let base = C64::new(0.0, 0.25) * hankel0_1(cfg.k1 * r);
        assert_relative_eq!(v.norm() / base.norm(), 1.0 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn cylindrical_matches_exact_away_from_lateral_support() {
        // k1 = 2, k2 = 1, b = 10: lateral support is (0, π/3); test at 1.7
        let cfg = InterfaceConfig::new(2.0, 1.0, 10.0).unwrap();
        let r = 150.0;
        let theta = 1.7f64;
        let x = [r * theta.cos(), r * theta.sin()];
        let exact = exact_scattered(x, &cfg).unwrap();
        let cyl = asympt_cylindrical(r, theta, &cfg, CylKind::Reflected).unwrap();
        let rel = (exact - cyl).norm() / exact.norm();
        assert!(rel < 0.02, "relative deviation {rel}");
    }

    #[test]
    fn transmitted_cylindrical_matches_exact() {
        let cfg = InterfaceConfig::new(2.0, 1.0, 10.0).unwrap();
        let r = 150.0;
        let theta = -2.0f64;
        let x = [r * theta.cos(), r * theta.sin()];
        let exact = exact_transmitted(x, &cfg).unwrap();
        let cyl = asympt_cylindrical(r, theta, &cfg, CylKind::Transmitted).unwrap();
        let rel = (exact - cyl).norm() / exact.norm();
        assert!(rel < 0.02, "relative deviation {rel}");
    }

    #[test]
    fn lateral_support_and_ordering_rules() {
        let cfg = InterfaceConfig::new(2.0, 1.0, 10.0).unwrap();
        // support edge at arccos(1/2) = π/3
        let inside = asympt_lateral(400.0, PI / 6.0, &cfg, LateralKind::PhiL1);
        assert!(inside.value.norm() > 0.0);
        let outside = asympt_lateral(400.0, PI / 3.0 + 0.1, &cfg, LateralKind::PhiL1);
        assert_eq!(outside.value, C64::new(0.0, 0.0));
        // wrong ordering: ψ-laterals vanish identically for k2 < k1
        let psi = asympt_lateral(400.0, -0.3, &cfg, LateralKind::PsiL1);
        assert_eq!(psi.value, C64::new(0.0, 0.0));
        // near-transition flag
        let near = asympt_lateral(400.0, PI / 3.0 - 0.01, &cfg, LateralKind::PhiL1);
        assert!(near.near_transition);
    }

    #[test]
    fn lateral_reconstruction_on_ray() {
        // laterals are the subdominant residual: |exact - cyl - lat| small
        let cfg = InterfaceConfig::new(2.0, 1.0, 10.0).unwrap();
        let r = 400.0;
        let theta = PI / 6.0;
        let x = [r * theta.cos(), r * theta.sin()];
        let exact = exact_scattered(x, &cfg).unwrap();
        let cyl = asympt_cylindrical_refined(r, theta, &cfg, CylKind::Reflected).unwrap();
        let lat = asympt_lateral(r, theta, &cfg, LateralKind::PhiL1).value;
        let err = (exact - cyl - lat).norm() / lat.norm();
        assert!(err < 0.10, "lateral reconstruction error {err}");
    }

    #[test]
    fn psi_lateral_independent_of_b() {
        let c1 = InterfaceConfig::new(1.0, 2.0, 5.0).unwrap();
        let c2 = InterfaceConfig::new(1.0, 2.0, 9.0).unwrap();
        let a = asympt_lateral(300.0, -0.3, &c1, LateralKind::PsiL1).value;
        let b = asympt_lateral(300.0, -0.3, &c2, LateralKind::PsiL1).value;
        assert_eq!(a, b);
    }

    #[test]
    fn decay_orders() {
        let cfg = InterfaceConfig::new(2.0, 1.0, 10.0).unwrap();
        let slope = |f: &dyn Fn(f64) -> f64| {
            // large radii so the image-source offset r' = r + b sin(theta)
            // no longer biases the fit
            let (r1, r2) = (2000.0, 8000.0);
            (f(r2).ln() - f(r1).ln()) / (r2.ln() - r1.ln())
        };
        let s_cyl = slope(&|r| {
            asympt_cylindrical(r, 1.2, &cfg, CylKind::Reflected)
                .unwrap()
                .norm()
        });
        assert!((s_cyl + 0.5).abs() < 0.02, "cylindrical slope {s_cyl}");
        let s_lat = slope(&|r| asympt_lateral(r, PI / 6.0, &cfg, LateralKind::PhiL1).value.norm());
        assert!((s_lat + 1.5).abs() < 0.05, "lateral slope {s_lat}");
    }

    #[test]
    fn wrong_half_space_is_an_error() {
        let cfg = InterfaceConfig::new(2.0, 1.0, 1.0).unwrap();
        assert!(exact_scattered([1.0, -1.0], &cfg).is_err());
        assert!(exact_transmitted([1.0, 1.0], &cfg).is_err());
    }
}
