//! Problem configuration, the Wiener-Hopf kernel and forcing, the four
//! one-variable factorisations of the kernel, and the two continuation
//! integrands. This module is a pure formula layer: near-zero denominators
//! are reported, never regularised; robust limits live in `spectral`.

use crate::contours::branch_sqrt;
use crate::C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Which incidence regime the configuration falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IncidenceCase {
    /// theta0 in (π, 3π/2): both forcing poles sit in the lower half-plane.
    Simple,
    /// theta0 in (π/2, π): the second forcing pole moves to the upper
    /// half-plane and a secondary pole appears.
    Complicated,
}

/// Physical problem instance: exterior/interior wavenumbers, absorption,
/// incident angle, and the derived forcing-pole locations.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WedgeConfig {
    pub k1: C64,
    pub k2: C64,
    pub kappa: f64,
    pub theta0: f64,
    pub a1: C64,
    pub a2: C64,
    pub case: IncidenceCase,
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("invalid configuration: {0:?}")]
    Invalid(Vec<String>),
}

impl WedgeConfig {
    /// Validate and derive. `k1_re`, `k2_re` are the real parts of the
    /// wavenumbers; both share the imaginary part `kappa`.
    ///
    /// `k1_re == k2_re` (the transparent wedge) is admitted as the exactly
    /// solvable limit; lateral-wave queries additionally require the
    /// non-degeneracy margin checked by [`WedgeConfig::lateral_degeneracy`].
    pub fn new(k1_re: f64, k2_re: f64, kappa: f64, theta0: f64) -> Result<Self, ConfigError> {
        let mut errs = Vec::new();
        if !(k1_re > 0.0) {
            errs.push(format!("Re(k1) must be positive, got {k1_re}"));
        }
        if !(k2_re > 0.0) {
            errs.push(format!("Re(k2) must be positive, got {k2_re}"));
        }
        if !(kappa >= 0.0) {
            errs.push(format!("kappa must be nonnegative, got {kappa}"));
        }
        if !(theta0 > PI / 2.0 && theta0 <= 5.0 * PI / 4.0) {
            errs.push(format!(
                "theta0 must lie in (pi/2, 5pi/4], got {theta0}"
            ));
        }
        if (theta0 - PI).abs() < 1e-12 {
            errs.push("grazing incidence theta0 = pi is excluded".into());
        }
        if !errs.is_empty() {
            return Err(ConfigError::Invalid(errs));
        }
        let k1 = C64::new(k1_re, kappa);
        let k2 = C64::new(k2_re, kappa);
        let a1 = k1 * theta0.cos();
        let a2 = k1 * theta0.sin();
        let case = if theta0 > PI {
            IncidenceCase::Simple
        } else {
            IncidenceCase::Complicated
        };
        Ok(WedgeConfig {
            k1,
            k2,
            kappa,
            theta0,
            a1,
            a2,
            case,
        })
    }

    /// Transparent limit: identical wavenumbers, trivial scattering.
    pub fn is_transparent(&self) -> bool {
        self.k1 == self.k2
    }

    /// Margin of the lateral-wave non-degeneracy conditions
    /// |k1^2 - 2 k2^2| and |k2^2 - 2 k1^2| relative to max(|k1|^2, |k2|^2).
    pub fn lateral_degeneracy(&self) -> f64 {
        let s1 = (self.k1 * self.k1 - self.k2 * self.k2 * 2.0).norm();
        let s2 = (self.k2 * self.k2 - self.k1 * self.k1 * 2.0).norm();
        let scale = self.k1.norm_sqr().max(self.k2.norm_sqr());
        s1.min(s2) / scale
    }

    /// Checks the non-degeneracy invariant required for lateral machinery.
    pub fn check_lateral_admissible(&self) -> Result<(), ConfigError> {
        if self.is_transparent() {
            return Err(ConfigError::Invalid(vec![
                "lateral machinery needs k1 != k2".into(),
            ]));
        }
        if self.lateral_degeneracy() <= 1e-6 {
            return Err(ConfigError::Invalid(vec![format!(
                "wavenumbers too close to the lateral coalescence degeneracy \
                 (margin {:.2e})",
                self.lateral_degeneracy()
            )]));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("evaluation on singularity: {0}")]
    OnSingularity(String),
}

fn guard(d: C64, scale: f64, what: &str) -> Result<C64, KernelError> {
    if d.norm() <= 1e-10 * scale {
        Err(KernelError::OnSingularity(format!(
            "{what} vanished (|denominator| = {:.3e})",
            d.norm()
        )))
    } else {
        Ok(d)
    }
}

/// Kernel K(α) = (k2² - α1² - α2²) / (k1² - α1² - α2²).
pub fn kernel_k(alpha: (C64, C64), cfg: &WedgeConfig) -> Result<C64, KernelError> {
    let s = alpha.0 * alpha.0 + alpha.1 * alpha.1;
    let num = cfg.k2 * cfg.k2 - s;
    let den = cfg.k1 * cfg.k1 - s;
    let scale = cfg.k1.norm_sqr().max(s.norm());
    Ok(num / guard(den, scale, "k1^2 - |alpha|^2")?)
}

/// Forcing P₊₊(α) = 1 / ((a1 - α1)(a2 - α2)).
pub fn forcing_p(alpha: (C64, C64), cfg: &WedgeConfig) -> Result<C64, KernelError> {
    let scale = cfg.k1.norm();
    let d1 = guard(cfg.a1 - alpha.0, scale, "a1 - alpha1")?;
    let d2 = guard(cfg.a2 - alpha.1, scale, "a2 - alpha2")?;
    Ok(C64::new(1.0, 0.0) / (d1 * d2))
}

/// Selector for the four one-variable factorisations of K.
///
/// `MinusA1`/`PlusA1` split in the first variable (K = K_{+∘} K_{-∘}),
/// `MinusA2`/`PlusA2` in the second (K = K_{∘+} K_{∘-}). Minus-type factors
/// are analytic in the lower half of their variable, plus-type in the upper.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelFactor {
    MinusA1,
    PlusA1,
    MinusA2,
    PlusA2,
}

/// One factor of the kernel, built from the fixed-branch square root.
pub fn factor_k(
    which: KernelFactor,
    alpha: (C64, C64),
    cfg: &WedgeConfig,
) -> Result<C64, KernelError> {
    let (a1, a2) = alpha;
    let k1sq = cfg.k1 * cfg.k1;
    let k2sq = cfg.k2 * cfg.k2;
    let scale = cfg.k1.norm();
    let (num, den) = match which {
        KernelFactor::MinusA1 => (branch_sqrt(k2sq - a2 * a2) - a1, branch_sqrt(k1sq - a2 * a2) - a1),
        KernelFactor::PlusA1 => (branch_sqrt(k2sq - a2 * a2) + a1, branch_sqrt(k1sq - a2 * a2) + a1),
        KernelFactor::MinusA2 => (branch_sqrt(k2sq - a1 * a1) - a2, branch_sqrt(k1sq - a1 * a1) - a2),
        KernelFactor::PlusA2 => (branch_sqrt(k2sq - a1 * a1) + a2, branch_sqrt(k1sq - a1 * a1) + a2),
    };
    Ok(num / guard(den, scale, "factor denominator")?)
}

/// Continuation integrand in the first variable:
/// I1(α; z1) with the trace value Ψ₊₊(z1, sqrt(k1²-z1²)) injected by the
/// caller. The module never evaluates the spectral function itself.
pub fn integrand_i1(
    alpha: (C64, C64),
    z1: C64,
    trace_a_value: C64,
    cfg: &WedgeConfig,
) -> Result<C64, KernelError> {
    let (a1, a2) = alpha;
    let k1sq = cfg.k1 * cfg.k1;
    let k2sq = cfg.k2 * cfg.k2;
    let q = branch_sqrt(k1sq - z1 * z1);
    let scale = cfg.k1.norm();
    // K_{-∘}(z1, α2) = (sqrt(k2²-α2²) - z1)/(sqrt(k1²-α2²) - z1)
    let km_num = guard(branch_sqrt(k2sq - a2 * a2) - z1, scale, "K-∘ numerator")?;
    let km_den = guard(branch_sqrt(k1sq - a2 * a2) - z1, scale, "K-∘ denominator")?;
    let d1 = guard(z1 - a1, scale, "z1 - alpha1")?;
    let d2 = guard(q - a2, scale, "sqrt(k1^2-z1^2) - alpha2")?;
    let qg = guard(q, scale, "sqrt(k1^2-z1^2)")?;
    Ok((k2sq - k1sq) * trace_a_value * km_den / (km_num * d1 * d2 * qg))
}

/// Continuation integrand in the second variable (mirror of `integrand_i1`).
pub fn integrand_i2(
    alpha: (C64, C64),
    z2: C64,
    trace_b_value: C64,
    cfg: &WedgeConfig,
) -> Result<C64, KernelError> {
    let (a1, a2) = alpha;
    let k1sq = cfg.k1 * cfg.k1;
    let k2sq = cfg.k2 * cfg.k2;
    let q = branch_sqrt(k1sq - z2 * z2);
    let scale = cfg.k1.norm();
    // K_{∘-}(α1, z2) = (sqrt(k2²-α1²) - z2)/(sqrt(k1²-α1²) - z2)
    let km_num = guard(branch_sqrt(k2sq - a1 * a1) - z2, scale, "K∘- numerator")?;
    let km_den = guard(branch_sqrt(k1sq - a1 * a1) - z2, scale, "K∘- denominator")?;
    let d2 = guard(z2 - a2, scale, "z2 - alpha2")?;
    let d1 = guard(q - a1, scale, "sqrt(k1^2-z2^2) - alpha1")?;
    let qg = guard(q, scale, "sqrt(k1^2-z2^2)")?;
    Ok((k2sq - k1sq) * trace_b_value * km_den / (km_num * d2 * d1 * qg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn cfg(k1: f64, k2: f64, kappa: f64, theta0: f64) -> WedgeConfig {
        WedgeConfig::new(k1, k2, kappa, theta0).unwrap()
    }

    #[test]
    fn config_validation_lists_all_violations() {
        let err = WedgeConfig::new(-1.0, 0.0, -0.5, 0.3).unwrap_err();
        let ConfigError::Invalid(msgs) = err;
        assert!(msgs.len() >= 4, "{msgs:?}");
    }

    #[test]
    fn config_case_assignment() {
        assert_eq!(cfg(1.0, 2.0, 0.0, 3.9).case, IncidenceCase::Simple);
        assert_eq!(cfg(1.0, 2.0, 0.0, 2.0).case, IncidenceCase::Complicated);
        assert!(WedgeConfig::new(1.0, 2.0, 0.0, std::f64::consts::PI).is_err());
    }

    #[test]
    fn derived_pole_locations() {
        let c = cfg(2.0, 1.0, 0.0, 5.0 * PI / 4.0);
        assert_relative_eq!(c.a1.re, 2.0 * (5.0 * PI / 4.0).cos(), max_relative = 1e-15);
        assert_relative_eq!(c.a2.re, 2.0 * (5.0 * PI / 4.0).sin(), max_relative = 1e-15);
    }

    #[test]
    fn kernel_examples() {
        let c = cfg(2.0, 3.0, 0.0, 5.0 * PI / 4.0);
        // α = (0,0): k2²/k1²
        let v = kernel_k((C64::new(0.0, 0.0), C64::new(0.0, 0.0)), &c).unwrap();
        assert_relative_eq!(v.re, 9.0 / 4.0, max_relative = 1e-15);
        // α = (1,1): (9-2)/(4-2) = 3.5
        let v = kernel_k((C64::new(1.0, 0.0), C64::new(1.0, 0.0)), &c).unwrap();
        assert_relative_eq!(v.re, 3.5, max_relative = 1e-15);
        // numerator zero on the k2-circle
        let v = kernel_k((C64::new(3.0, 0.0), C64::new(0.0, 0.0)), &c).unwrap();
        assert!(v.norm() < 1e-14);
    }

    #[test]
    fn forcing_examples() {
        let c = cfg(1.0, 2.0, 0.0, 5.0 * PI / 4.0);
        let one = forcing_p((c.a1 + 1.0, c.a2 + 1.0), &c).unwrap();
        assert!((one - C64::new(1.0, 0.0)).norm() < 1e-14);
        let v = forcing_p((c.a1 - 1.0, c.a2 + 2.0), &c).unwrap();
        assert!((v - C64::new(-0.5, 0.0)).norm() < 1e-14);
        assert!(forcing_p((c.a1, c.a2 + 1.0), &c).is_err());
    }

    #[test]
    fn transparent_factors_are_unity() {
        let c = cfg(1.5, 1.5, 0.1, 3.9);
        let alpha = (C64::new(0.3, 0.2), C64::new(-0.4, 0.6));
        for which in [
            KernelFactor::MinusA1,
            KernelFactor::PlusA1,
            KernelFactor::MinusA2,
            KernelFactor::PlusA2,
        ] {
            let f = factor_k(which, alpha, &c).unwrap();
            assert!((f - C64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn factorization_identity_at_point() {
        let c = cfg(1.0, 2.0, 0.0, 5.0 * PI / 4.0);
        let alpha = (C64::new(0.3, 0.0), C64::new(-0.7, 0.0));
        let k = kernel_k(alpha, &c).unwrap();
        let p1 = factor_k(KernelFactor::PlusA2, alpha, &c).unwrap()
            * factor_k(KernelFactor::MinusA2, alpha, &c).unwrap();
        let p2 = factor_k(KernelFactor::PlusA1, alpha, &c).unwrap()
            * factor_k(KernelFactor::MinusA1, alpha, &c).unwrap();
        assert!((p1 - k).norm() < 1e-12 * k.norm());
        assert!((p2 - k).norm() < 1e-12 * k.norm());
    }

    #[test]
    fn plus_a1_zero_on_interior_circle() {
        // K_{+∘} vanishes at (-k2 cos t, -k2 sin t) for t in (0, π/2)
        let c = cfg(1.0, 2.0, 0.0, 5.0 * PI / 4.0);
        for t in [0.3f64, 0.8, 1.2] {
            let alpha = (C64::new(-2.0 * t.cos(), 0.0), C64::new(-2.0 * t.sin(), 0.0));
            let f = factor_k(KernelFactor::PlusA1, alpha, &c).unwrap();
            assert!(f.norm() < 1e-13, "t={t}: {f}");
        }
    }

    #[test]
    fn factorization_identity_random_sweep() {
        let c = cfg(1.0, 2.0, 0.0, 5.0 * PI / 4.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0usize;
        while checked < 10_000 {
            let alpha = (
                C64::new(rng.gen_range(-4.0..4.0), rng.gen_range(-2.0..2.0)),
                C64::new(rng.gen_range(-4.0..4.0), rng.gen_range(-2.0..2.0)),
            );
            // keep clear of the circles and cuts so all factors are well formed
            let s = (alpha.0 * alpha.0 + alpha.1 * alpha.1).norm();
            if (s - 1.0).abs() < 0.05 || (s - 4.0).abs() < 0.05 {
                continue;
            }
            let k = match kernel_k(alpha, &c) {
                Ok(k) => k,
                Err(_) => continue,
            };
            let f = |w| factor_k(w, alpha, &c);
            let (p, m, q, n) = match (
                f(KernelFactor::PlusA2),
                f(KernelFactor::MinusA2),
                f(KernelFactor::PlusA1),
                f(KernelFactor::MinusA1),
            ) {
                (Ok(a), Ok(b), Ok(cc), Ok(d)) => (a, b, cc, d),
                _ => continue,
            };
            assert!(
                (p * m - k).norm() <= 1e-12 * k.norm().max(1e-3),
                "a2 split failed at {alpha:?}"
            );
            assert!(
                (q * n - k).norm() <= 1e-12 * k.norm().max(1e-3),
                "a1 split failed at {alpha:?}"
            );
            checked += 1;
        }
    }

    #[test]
    fn plus_type_factor_continuous_into_upper_half_plane() {
        let c = cfg(1.0, 1.4, 0.0, 5.0 * PI / 4.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let a1 = C64::new(rng.gen_range(-3.0..3.0), rng.gen_range(0.3..2.0));
            let t = rng.gen_range(-2.0..2.0);
            let lo = factor_k(KernelFactor::PlusA2, (a1, C64::new(t, 0.0)), &c).unwrap();
            let hi = factor_k(KernelFactor::PlusA2, (a1, C64::new(t, 1e-8)), &c).unwrap();
            assert!((lo - hi).norm() < 1e-6 * lo.norm().max(1.0));
        }
    }

    #[test]
    fn integrands_vanish_for_transparent_and_zero_trace() {
        let c = cfg(1.2, 1.2, 0.1, 3.9);
        let alpha = (C64::new(0.1, 0.5), C64::new(-0.3, 0.4));
        let v = integrand_i1(alpha, C64::new(-0.5, -1.0), C64::new(3.0, 1.0), &c).unwrap();
        assert_eq!(v, C64::new(0.0, 0.0));
        let c2 = cfg(1.0, 1.3, 0.1, 3.9);
        let v = integrand_i2(alpha, C64::new(-0.5, -1.0), C64::new(0.0, 0.0), &c2).unwrap();
        assert_eq!(v, C64::new(0.0, 0.0));
    }

    #[test]
    fn integrand_linear_in_trace_value() {
        let c = cfg(1.0, 1.3, 0.05, 3.9);
        let alpha = (C64::new(0.1, 0.5), C64::new(-0.3, 0.4));
        let z = C64::new(-0.4, -1.2);
        let t = C64::new(0.7, -0.2);
        let v1 = integrand_i1(alpha, z, t, &c).unwrap();
        let v2 = integrand_i1(alpha, z, t * 3.5, &c).unwrap();
        assert!((v2 - v1 * 3.5).norm() < 1e-14 * v2.norm().max(1e-30));
    }

    #[test]
    fn integrand_i2_frozen_value() {
        // α = (i, i), z2 = -2i, k1 = 1, k2 = 1.2, κ = 0, trace value 1.
        // Reference value computed independently with mpmath from the
        // displayed formula.
        let c = cfg(1.0, 1.2, 0.0, 5.0 * PI / 4.0);
        let v = integrand_i2(
            (C64::new(0.0, 1.0), C64::new(0.0, 1.0)),
            C64::new(0.0, -2.0),
            C64::new(1.0, 0.0),
            &c,
        )
        .unwrap();
        let expected = C64::new(-0.011662179694541195, 0.023066002984668255);
        assert!(
            (v - expected).norm() < 1e-12,
            "got {v}, expected {expected}"
        );
    }
}
