//! Quadrature building blocks shared by the contour, half-plane and
//! locality modules: Gauss-Legendre panels, an adaptive Gauss-Kronrod
//! integrator for real segments and complex paths, and helpers for
//! oscillatory line integrals with integration-by-parts tail corrections.

use crate::C64;

/// 10-point Gauss-Legendre nodes on (-1, 1), positive half.
const GL10_X: [f64; 5] = [
    0.148_874_338_981_631_21,
    0.433_395_394_129_247_19,
    0.679_409_568_299_024_40,
    0.865_063_366_688_984_51,
    0.973_906_528_517_171_72,
];
const GL10_W: [f64; 5] = [
    0.295_524_224_714_752_87,
    0.269_266_719_309_996_36,
    0.219_086_362_515_982_04,
    0.149_451_349_150_580_59,
    0.066_671_344_308_688_14,
];

/// Gauss-Legendre nodes and weights of order 10 mapped to `[a, b]`.
pub fn gauss10(a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    (0..10).map(move |i| {
        let (x, w) = if i < 5 {
            (-GL10_X[4 - i], GL10_W[4 - i])
        } else {
            (GL10_X[i - 5], GL10_W[i - 5])
        };
        (c + h * x, h * w)
    })
}

// 15-point Kronrod extension of 7-point Gauss (QK15), abscissae on [0, 1].
const XGK15: [f64; 8] = [
    0.991_455_371_120_812_64,
    0.949_107_912_342_758_52,
    0.864_864_423_359_769_07,
    0.741_531_185_599_394_44,
    0.586_087_235_467_691_13,
    0.405_845_151_377_397_17,
    0.207_784_955_007_898_47,
    0.000_000_000_000_000_00,
];
const WGK15: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_553,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_90,
    0.190_350_578_064_785_41,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_83,
];
const WG7: [f64; 4] = [
    0.129_484_966_168_869_69,
    0.279_705_391_489_276_67,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_39,
];

/// One QK15 application to a complex-valued integrand on `[a, b]`.
/// Returns (kronrod estimate, error estimate).
pub fn qk15_c<F: FnMut(f64) -> C64>(f: &mut F, a: f64, b: f64) -> (C64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK15[7];
    let mut gauss = fc * WG7[3];
    for j in 0..7 {
        let x = h * XGK15[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        kron += (f1 + f2) * WGK15[j];
        if j % 2 == 1 {
            gauss += (f1 + f2) * WG7[j / 2];
        }
    }
    let err = ((kron - gauss) * h).norm();
    (kron * h, err)
}

/// Adaptive QK15 on a real interval, bisecting the worst panel until the
/// summed error estimate drops below `tol_abs` or `max_panels` is reached.
pub fn adaptive_qk15<F: FnMut(f64) -> C64>(
    mut f: F,
    a: f64,
    b: f64,
    tol_abs: f64,
    max_panels: usize,
) -> (C64, f64) {
    struct Panel {
        a: f64,
        b: f64,
        val: C64,
        err: f64,
    }
    let (val, err) = qk15_c(&mut f, a, b);
    let mut panels = vec![Panel { a, b, val, err }];
    loop {
        let tot_err: f64 = panels.iter().map(|p| p.err).sum();
        if tot_err <= tol_abs || panels.len() >= max_panels {
            let tot: C64 = panels.iter().map(|p| p.val).sum();
            return (tot, tot_err);
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .unwrap();
        let Panel { a, b, .. } = panels[idx];
        let m = 0.5 * (a + b);
        let (v1, e1) = qk15_c(&mut f, a, m);
        let (v2, e2) = qk15_c(&mut f, m, b);
        panels[idx] = Panel {
            a,
            b: m,
            val: v1,
            err: e1,
        };
        panels.push(Panel {
            a: m,
            b,
            val: v2,
            err: e2,
        });
    }
}

/// Adaptive integration along a straight segment in the complex plane.
pub fn adaptive_segment<F: FnMut(C64) -> C64>(
    mut f: F,
    za: C64,
    zb: C64,
    tol_abs: f64,
    max_panels: usize,
) -> (C64, f64) {
    let d = zb - za;
    let (v, e) = adaptive_qk15(|t| f(za + d * t) * d, 0.0, 1.0, tol_abs, max_panels);
    (v, e)
}

/// Adaptive integration along a parameterised complex path `z(t)` with
/// derivative supplied by finite differences of `z` itself.
pub fn adaptive_path<F, P>(mut f: F, path: P, ta: f64, tb: f64, tol_abs: f64) -> (C64, f64)
where
    F: FnMut(C64) -> C64,
    P: Fn(f64) -> C64,
{
    let h = 1e-6 * (tb - ta).abs().max(1e-6);
    let dz = |t: f64| (path(t + h) - path(t - h)) / (2.0 * h);
    adaptive_qk15(|t| f(path(t)) * dz(t), ta, tb, tol_abs, 4000)
}

/// ∫_a^b g(t) e^{-i x t} dt by adaptive quadrature of the full product.
pub fn osc_segment<F: FnMut(f64) -> C64>(
    mut g: F,
    x: f64,
    a: f64,
    b: f64,
    tol_abs: f64,
    max_panels: usize,
) -> C64 {
    let phase = |t: f64| C64::new(0.0, -x * t).exp();
    adaptive_qk15(|t| g(t) * phase(t), a, b, tol_abs, max_panels).0
}

/// Two-term integration-by-parts estimate of the tails
/// ∫_{-∞}^{-A} + ∫_{A}^{∞} of g(t) e^{-i x t} dt for a smoothly decaying g.
pub fn osc_tails<F: FnMut(f64) -> C64>(mut g: F, x: f64, big_a: f64) -> C64 {
    if x.abs() < 1e-12 {
        return C64::new(0.0, 0.0);
    }
    let ix = C64::new(0.0, x);
    let h = 1e-4 * big_a;
    let gp = (g(big_a) - g(big_a - h)) / h;
    let gm = (g(-big_a + h) - g(-big_a)) / h;
    // upper tail: g(A)e^{-ixA}/(ix) + g'(A)e^{-ixA}/(ix)^2
    let eu = C64::new(0.0, -x * big_a).exp();
    let el = C64::new(0.0, x * big_a).exp();
    let upper = g(big_a) * eu / ix + gp * eu / (ix * ix);
    let lower = -g(-big_a) * el / ix - gm * el / (ix * ix);
    upper + lower
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn qk15_polynomial_is_exact() {
        let (v, _) = qk15_c(&mut |t| C64::new(t * t * t - 2.0 * t, 0.0), -1.0, 3.0);
        // ∫ t^3 - 2t over [-1,3] = [t^4/4 - t^2] = (81/4 - 9) - (1/4 - 1)
        assert_relative_eq!(v.re, 12.0, max_relative = 1e-13);
        assert!(v.im.abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let (v, err) = adaptive_qk15(
            |t| C64::new(1.0 / (1e-4 + t * t), 0.0),
            -1.0,
            1.0,
            1e-10,
            4000,
        );
        let exact = 2.0 / 1e-2 * (1.0f64 / 1e-2).atan();
        assert!(err < 1e-8);
        assert_relative_eq!(v.re, exact, max_relative = 1e-9);
    }

    #[test]
    fn oscillatory_segment_matches_closed_form() {
        // ∫_0^1 e^{-i x t} dt = (1 - e^{-ix})/(ix)
        let x = 137.0;
        let v = osc_segment(|_| C64::new(1.0, 0.0), x, 0.0, 1.0, 1e-12, 4000);
        let ix = C64::new(0.0, x);
        let exact = (C64::new(1.0, 0.0) - (-ix).exp()) / ix;
        assert!((v - exact).norm() < 1e-10);
    }

    #[test]
    fn tail_correction_improves_truncation() {
        // g(t) = 1/(t^2+4), x = 3, full line integral = (π/2) e^{-6}.
        let g = |t: f64| C64::new(1.0 / (t * t + 4.0), 0.0);
        let x = 3.0;
        let exact = C64::new(std::f64::consts::PI / 2.0 * (-6.0f64).exp(), 0.0);
        let a = 30.0;
        let body = osc_segment(g, x, -a, a, 1e-14, 8000);
        let with_tails = body + osc_tails(g, x, a);
        assert!((with_tails - exact).norm() < (body - exact).norm());
        assert!((with_tails - exact).norm() < 1e-6);
    }
}
