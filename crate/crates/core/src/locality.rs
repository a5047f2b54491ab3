//! Far-field estimation of 2D Fourier-type integrals near contributing
//! points: transversal crossings of singularities and isolated saddles on a
//! singularity (SOS), together with a brute-force windowed integral that
//! serves as the independent oracle. All integrals follow the
//! 1/(4π²) ∬ F(α) e^{-i x·α} dα normalisation.

use crate::quad::adaptive_qk15;
use crate::C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

// ---------------------------------------------------------------------------
// Gamma function (Lanczos, g = 7, n = 9, with reflection)
// ---------------------------------------------------------------------------

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function for real arguments away from the non-positive integers.
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection: Γ(x) Γ(1-x) = π / sin(πx)
        PI / ((PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut acc = LANCZOS[0];
        for (i, c) in LANCZOS.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + LANCZOS_G + 0.5;
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
    }
}

fn is_negative_integer(m: f64) -> bool {
    m < -0.5 && (m - m.round()).abs() < 1e-12
}

// ---------------------------------------------------------------------------
// Singularity descriptions
// ---------------------------------------------------------------------------

/// Which side of a real singularity trace the deformed integration surface
/// bypasses on, following the convention that `Right` means the arrow points
/// towards positive Re(α1) (towards positive Re(α2) when the trace is
/// vertical).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArrowSide {
    Left,
    Right,
}

/// Gradient of a defining function at a real-trace point.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GradAt {
    pub a: f64,
    pub b: f64,
}

impl GradAt {
    pub fn norm_sqr(&self) -> f64 {
        self.a * self.a + self.b * self.b
    }
}

/// Sign factor s = sign(n·η) from the bridge-and-arrow side and the trace
/// normal n = (a, b)/|(a, b)|.
pub fn sign_factor(arrow: ArrowSide, grad: GradAt) -> f64 {
    let lead = if grad.a.abs() > 1e-12 * grad.norm_sqr().sqrt() {
        grad.a
    } else {
        grad.b
    };
    match arrow {
        ArrowSide::Right => lead.signum(),
        ArrowSide::Left => -lead.signum(),
    }
}

/// Transversal crossing of two singularities at a real point.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CrossingSpec {
    pub grad1: GradAt,
    pub grad2: GradAt,
    pub s1: f64,
    pub s2: f64,
    /// a1 b2 - a2 b1, must be positive (swap or negate a defining function
    /// otherwise).
    pub delta_star: f64,
    pub amplitude: C64,
    pub m1: f64,
    pub m2: f64,
    pub alpha_star: [f64; 2],
}

/// Isolated saddle on a singularity.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SosSpec {
    pub grad: GradAt,
    pub s: f64,
    /// Curvature constant of the trace in rotated coordinates.
    pub xi: f64,
    pub amplitude: C64,
    pub m: f64,
    pub alpha_star: [f64; 2],
}

#[derive(Debug, Error)]
pub enum LocalityError {
    #[error("crossing with delta_star = {0} (needs > 0)")]
    BadOrientation(f64),
    #[error("flat singularity: s*xi = 0")]
    FlatSingularity,
    #[error("degenerate geometry in xi fit: {0}")]
    DegenerateXiFit(String),
    #[error("observation point on a Heaviside boundary line")]
    OnBoundaryLine,
}

/// Result of a crossing estimate. `vanishes` marks the exact-zero case of a
/// negative-integer order, where no crossing of singularities occurs.
#[derive(Debug, Clone, Copy)]
pub struct CrossingEstimate {
    pub value: C64,
    pub vanishes: bool,
}

/// Far-field contribution of a transversal crossing:
/// A e^{-i x·α*} e^{-iπ(s1 m1 + s2 m2)/2} / (Γ(m1) Γ(m2) Δ*^{m1+m2-1})
///   × H(s1 (x1 b2 - x2 a2)) / |x1 b2 - x2 a2|^{1-m1}
///   × H(s2 (-x1 b1 + x2 a1)) / |-x1 b1 + x2 a1|^{1-m2}
pub fn estimate_crossing(
    spec: &CrossingSpec,
    x: [f64; 2],
) -> Result<CrossingEstimate, LocalityError> {
    if spec.delta_star <= 0.0 {
        return Err(LocalityError::BadOrientation(spec.delta_star));
    }
    if is_negative_integer(spec.m1) || is_negative_integer(spec.m2) {
        return Ok(CrossingEstimate {
            value: C64::new(0.0, 0.0),
            vanishes: true,
        });
    }
    let u = x[0] * spec.grad2.b - x[1] * spec.grad2.a;
    let v = -x[0] * spec.grad1.b + x[1] * spec.grad1.a;
    if u == 0.0 || v == 0.0 {
        return Err(LocalityError::OnBoundaryLine);
    }
    if spec.s1 * u <= 0.0 || spec.s2 * v <= 0.0 {
        return Ok(CrossingEstimate {
            value: C64::new(0.0, 0.0),
            vanishes: false,
        });
    }
    let phase_geo = -(x[0] * spec.alpha_star[0] + x[1] * spec.alpha_star[1]);
    let phase_ord = -0.5 * PI * (spec.s1 * spec.m1 + spec.s2 * spec.m2);
    let num = spec.amplitude * C64::from_polar(1.0, phase_geo + phase_ord);
    let den = gamma(spec.m1)
        * gamma(spec.m2)
        * spec.delta_star.powf(spec.m1 + spec.m2 - 1.0)
        * u.abs().powf(1.0 - spec.m1)
        * v.abs().powf(1.0 - spec.m2);
    Ok(CrossingEstimate {
        value: num / den,
        vanishes: false,
    })
}

/// Far-field contribution of an isolated SOS:
/// A e^{-i x·α*} √π e^{-i s m π/2} / (2π (a²+b²) Γ(m)) (r/√(a²+b²))^{m-3/2}
///   × e^{∓iπ/4}/√(±sξ) depending on the sign of sξ.
pub fn estimate_sos(spec: &SosSpec, x: [f64; 2]) -> Result<C64, LocalityError> {
    if is_negative_integer(spec.m) {
        return Ok(C64::new(0.0, 0.0));
    }
    let sxi = spec.s * spec.xi;
    if sxi == 0.0 {
        return Err(LocalityError::FlatSingularity);
    }
    let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
    let grad2 = spec.grad.norm_sqr();
    let phase_geo = -(x[0] * spec.alpha_star[0] + x[1] * spec.alpha_star[1]);
    let phase_ord = -0.5 * PI * spec.s * spec.m;
    let case = if sxi > 0.0 {
        C64::from_polar(1.0 / sxi.sqrt(), -PI / 4.0)
    } else {
        C64::from_polar(1.0 / (-sxi).sqrt(), PI / 4.0)
    };
    let amp = spec.amplitude * PI.sqrt() / (2.0 * PI * grad2 * gamma(spec.m));
    let radial = (r / grad2.sqrt()).powf(spec.m - 1.5);
    Ok(amp * C64::from_polar(1.0, phase_geo + phase_ord) * radial * case)
}

// ---------------------------------------------------------------------------
// Curvature constant fit
// ---------------------------------------------------------------------------

/// Fit the curvature constant ξ in g ≈ Λ - ξ ζ² along the zero set of g,
/// in the rotated coordinates Λ = a u + b v, ζ = b u - a v (u, v the offsets
/// from `alpha_star`). Three shrinking stencil levels, Richardson
/// extrapolated.
pub fn compute_xi<G: Fn(f64, f64) -> f64>(
    g: G,
    alpha_star: [f64; 2],
    scale: f64,
) -> Result<f64, LocalityError> {
    // gradient by central differences
    let d = 1e-5 * scale;
    let gv = |u: f64, v: f64| g(alpha_star[0] + u, alpha_star[1] + v);
    let a = (gv(d, 0.0) - gv(-d, 0.0)) / (2.0 * d);
    let b = (gv(0.0, d) - gv(0.0, -d)) / (2.0 * d);
    let nsq = a * a + b * b;
    if nsq < 1e-20 {
        return Err(LocalityError::DegenerateXiFit(
            "vanishing gradient at the trace point".into(),
        ));
    }
    // point from rotated coordinates
    let pt = |lam: f64, zeta: f64| {
        let u = (a * lam + b * zeta) / nsq;
        let v = (b * lam - a * zeta) / nsq;
        (u, v)
    };
    let g_rot = |lam: f64, zeta: f64| {
        let (u, v) = pt(lam, zeta);
        gv(u, v)
    };
    // Newton solve for Λ(ζ) on the curve g = 0
    let solve_lam = |zeta: f64| -> Result<f64, LocalityError> {
        let mut lam = 0.0;
        for _ in 0..40 {
            let f = g_rot(lam, zeta);
            let dl = 1e-7 * scale;
            let fp = (g_rot(lam + dl, zeta) - g_rot(lam - dl, zeta)) / (2.0 * dl);
            if fp.abs() < 1e-18 {
                return Err(LocalityError::DegenerateXiFit("flat Newton step".into()));
            }
            let step = f / fp;
            lam -= step;
            if step.abs() < 1e-14 * scale {
                break;
            }
        }
        Ok(lam)
    };
    // shrinking stencil levels with 5 offsets each
    let h0 = 0.05 * scale;
    let mut level_estimates = Vec::new();
    for level in 0..3 {
        let h = h0 / 2f64.powi(level);
        let mut num = 0.0;
        let mut den = 0.0;
        for f in [1.0f64, 0.75, 0.5] {
            let z = f * h;
            let lp = solve_lam(z)?;
            let lm = solve_lam(-z)?;
            // symmetric average kills the odd ζ³ term
            let xi_est = 0.5 * (lp + lm) / (z * z);
            num += xi_est * z * z;
            den += z * z;
        }
        level_estimates.push(num / den);
    }
    // Richardson on O(h²) error
    let x0 = level_estimates[0];
    let x1 = level_estimates[1];
    let x2 = level_estimates[2];
    let r1 = (4.0 * x1 - x0) / 3.0;
    let r2 = (4.0 * x2 - x1) / 3.0;
    let xi = (16.0 * r2 - r1) / 15.0;
    // residual consistency check
    if (r2 - r1).abs() > 0.05 * xi.abs().max(1e-6 / (scale * scale)) {
        return Err(LocalityError::DegenerateXiFit(format!(
            "levels disagree: {r1} vs {r2}"
        )));
    }
    Ok(xi)
}

// ---------------------------------------------------------------------------
// Brute-force local integral
// ---------------------------------------------------------------------------

/// C4 smoothstep window: 1 on [0, core], 0 beyond 1, smooth in between.
fn window_taper(t: f64, core: f64) -> f64 {
    let t = t.abs();
    if t <= core {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        let u = (t - core) / (1.0 - core);
        let u = 1.0 - u;
        // 9th-order smoothstep (C4 contact at both ends)
        let u2 = u * u;
        let u4 = u2 * u2;
        u4 * u * (126.0 - 420.0 * u + 540.0 * u2 - 315.0 * u2 * u + 70.0 * u4)
    }
}

/// Brute-force evaluation of 1/(4π²) ∬ W(α) F(α) e^{-i x·α} dα over the
/// square window `alpha_star ± half_width`, with a smooth taper outside the
/// core fraction. `f` must already carry its damping (singularities off the
/// real plane); combine a ladder of dampings with [`extrapolate_damping`].
pub fn brute_force_local<F: Fn(C64, C64) -> C64>(
    f: F,
    alpha_star: [f64; 2],
    x: [f64; 2],
    half_width: f64,
    tol: f64,
) -> C64 {
    let core = 0.55;
    let outer = |a2: f64| {
        let w2 = window_taper((a2 - alpha_star[1]) / half_width, core);
        if w2 == 0.0 {
            return C64::new(0.0, 0.0);
        }
        let inner = adaptive_qk15(
            |a1: f64| {
                let w1 = window_taper((a1 - alpha_star[0]) / half_width, core);
                if w1 == 0.0 {
                    return C64::new(0.0, 0.0);
                }
                let phase = C64::new(0.0, -(x[0] * a1 + x[1] * a2)).exp();
                f(C64::new(a1, 0.0), C64::new(a2, 0.0)) * phase * w1
            },
            alpha_star[0] - half_width,
            alpha_star[0] + half_width,
            tol,
            4_000,
        )
        .0;
        inner * w2
    };
    let total = adaptive_qk15(
        |a2| outer(a2),
        alpha_star[1] - half_width,
        alpha_star[1] + half_width,
        tol * half_width,
        2_000,
    )
    .0;
    total / (4.0 * PI * PI)
}

/// Geometric extrapolation of a damping ladder f(κ), f(κ/2) -> κ = 0,
/// exact for a pure exponential κ-dependence and O(κ²) otherwise.
pub fn extrapolate_damping(f_kappa: C64, f_half: C64) -> C64 {
    if f_kappa.norm() == 0.0 {
        return f_half;
    }
    f_half * f_half / f_kappa
}
