//! Numerical engine for the right-angled no-contrast penetrable wedge
//! diffraction problem.
//!
//! The crate evaluates the two-complex-variable spectral functions of the
//! problem on a hairpin contour around the lower branch cuts, assembles the
//! complete far-field (geometrical optics, cylindrical and lateral
//! diffraction coefficients), and ships two verification oracles: a
//! closed-form penetrable half-plane interface problem and generic
//! locality-principle estimators for 2D Fourier-type integrals.

pub mod contours;
pub mod farfield;
pub mod halfplane;
pub mod kernel;
pub mod locality;
pub mod quad;
pub mod spectral;

pub use num_complex::Complex64;

/// Shorthand used throughout the crate.
pub type C64 = Complex64;

/// Relative distance between two complex numbers, scaled by the larger
/// magnitude (returns the absolute distance when both are tiny).
pub fn rel_dist(a: C64, b: C64) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale < 1e-300 {
        (a - b).norm()
    } else {
        (a - b).norm() / scale
    }
}
