//! Fixed-point solution of the spectral-function traces on the hairpin
//! contour, and evaluation of the two-variable spectral functions anywhere in
//! their continuation domains.
//!
//! The two analytic-continuation formulas close onto the two boundary traces
//! of Ψ₊₊ along the contour; a damped Gauss-Seidel sweep between them is the
//! solver. Everything downstream (field reconstruction, diffraction
//! coefficients, diagnostics) evaluates the same two "bracket" combinations
//!
//!   B1(α) = -i/4π ∫ I2(α; z) dz + ext1(α), with Ψ₊₊ = B1 / K_{∘+},
//!   B2(α) = -i/4π ∫ I1(α; z) dz + ext2(α), with Ψ₊₊ = B2 / K_{+∘},
//!
//! which stay regular where the circle-pole factors of Ψ₊₊ blow up. The
//! products Φ = K_{∘-} B1 = K_{-∘} B2 give the kernel-multiplied function
//! robustly on the interior circle.

use crate::contours::{branch_arc, branch_sqrt, build_contour, displaced_point, Contour, ContourError, Side};
use crate::kernel::{factor_k, forcing_p, kernel_k, IncidenceCase, KernelFactor, WedgeConfig};
use crate::C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

const SCHEMA_VERSION: u32 = 1;

/// Orientation sign of the hairpin's residue compensation when a composed
/// pole crosses into the enclosed sliver (fixed by the cross-formula
/// agreement identity; see the overlap tests).
const RESIDUE_SIGN: f64 = -1.0;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error(transparent)]
    Contour(#[from] ContourError),
    #[error(
        "fixed-point iteration did not converge: residual {residual:.3e} after {iterations} sweeps"
    )]
    NonConvergence {
        residual: f64,
        iterations: usize,
        history: Vec<f64>,
    },
    #[error("evaluation point on or too close to a singularity: {0}")]
    OnSingularity(String),
    #[error("point outside every continuation domain")]
    InvalidRegion,
    #[error("{0}")]
    BadRequest(String),
    #[error("spatial grid too coarse: spacing {h} exceeds the Nyquist bound for |k| = {kmax}")]
    GridTooCoarse { h: f64, kmax: f64 },
}

/// Discretisation parameters for the hairpin contour pair.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ContourParams {
    pub nodes_per_cut: usize,
    /// Truncation as a multiple of max(|k1|, |k2|).
    pub truncation_factor: f64,
    /// Side offset as a multiple of |k1|.
    pub offset_factor: f64,
}

impl Default for ContourParams {
    fn default() -> Self {
        ContourParams {
            nodes_per_cut: 1600,
            truncation_factor: 40.0,
            offset_factor: 1e-6,
        }
    }
}

/// Fixed-point solver controls.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    /// Scale applied to the forcing; the whole solution is linear in it.
    pub forcing_scale: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-8,
            max_iter: 60,
            damping: 1.0,
            forcing_scale: 1.0,
        }
    }
}

/// Converged traces of Ψ₊₊ along the contour, with solver metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralTrace {
    pub schema_version: u32,
    pub cfg: WedgeConfig,
    pub p1: Contour,
    pub p2: Contour,
    /// Ψ₊₊(z, sqrt(k1²-z²)) at the displaced nodes of P1 ∪ P2.
    pub trace_a: Vec<C64>,
    /// Ψ₊₊(sqrt(k1²-z²), z) at the displaced nodes of P1 ∪ P2.
    pub trace_b: Vec<C64>,
    pub iterations: usize,
    pub residual: f64,
    pub residual_history: Vec<f64>,
    pub forcing_scale: f64,
}

/// Which continuation formula a point is evaluated with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvalRegion {
    /// First formula only: α1 continued below the real axis, α2 upper.
    ContinuedInA1,
    /// Second formula only: α2 continued below the real axis, α1 upper.
    ContinuedInA2,
    /// Both formulas apply; their mean is returned and the gap recorded.
    Overlap,
    Invalid,
}

/// Route selector for evaluations that care which formula is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    InA1,
    InA2,
    Auto,
}

/// Value of Ψ₊₊ with region metadata.
#[derive(Debug, Clone, Copy)]
pub struct PsiValue {
    pub value: C64,
    pub region: EvalRegion,
    /// |route1 - route2| when both formulas were evaluated.
    pub overlap_gap: Option<f64>,
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
struct NodeEval {
    /// Displaced evaluation point.
    z: C64,
    w: C64,
    /// sqrt(k1² - z²) at the displaced point.
    q: C64,
    /// Point exactly on the cut.
    on_cut: C64,
    /// Cut parameter.
    x: f64,
}

#[derive(Debug, Clone, Copy)]
struct LegInfo {
    lo: usize,
    hi: usize,
    start: C64,
    end: C64,
}

#[derive(Debug, Clone)]
struct ArcInfo {
    /// Quadrature points on the connecting arc: (z, weight, sqrt(k1²-z²)).
    points: Vec<(C64, C64, C64)>,
    /// Node indices used to extrapolate trace values to the branch point:
    /// (left nearest, left next, right nearest, right next).
    probes: [usize; 4],
}

/// Evaluation engine: precomputed node data plus the trace samples.
pub struct Engine {
    pub cfg: WedgeConfig,
    nodes: Vec<NodeEval>,
    legs: Vec<LegInfo>,
    arcs: Vec<ArcInfo>,
    trace_a: Vec<C64>,
    trace_b: Vec<C64>,
    pub forcing_scale: f64,
    cut_guard: f64,
}

impl SpectralTrace {
    /// Build the evaluation engine (precomputes displaced nodes, radicals and
    /// leg endpoints for near-pole corrections).
    pub fn engine(&self) -> Engine {
        Engine::new(
            self.cfg,
            &self.p1,
            &self.p2,
            self.trace_a.clone(),
            self.trace_b.clone(),
            self.forcing_scale,
        )
    }

    /// One extra fixed-point sweep: returns the sup-norm change (the stored
    /// residual must match this recomputation).
    pub fn recompute_residual(&self) -> f64 {
        let engine = self.engine();
        let (na, nb) = engine.sweep_once(&self.trace_a, &self.trace_b);
        sup_change(&self.trace_a, &na).max(sup_change(&self.trace_b, &nb))
    }
}

fn sup_change(old: &[C64], new: &[C64]) -> f64 {
    old.iter()
        .zip(new)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
}

impl Engine {
    fn new(
        cfg: WedgeConfig,
        p1: &Contour,
        p2: &Contour,
        trace_a: Vec<C64>,
        trace_b: Vec<C64>,
        forcing_scale: f64,
    ) -> Engine {
        let k1sq = cfg.k1 * cfg.k1;
        let mut nodes = Vec::with_capacity(p1.nodes.len() + p2.nodes.len());
        let mut legs = Vec::new();
        let mut arcs = Vec::new();
        for c in [p1, p2] {
            let cut_first_leg = legs.len();
            let mut lo = nodes.len();
            let mut side = c.nodes[0].side;
            for n in &c.nodes {
                if n.side != side {
                    legs.push(make_leg(c, side, lo, nodes.len()));
                    lo = nodes.len();
                    side = n.side;
                }
                let z = n.eval_point(c.k, c.offset);
                nodes.push(NodeEval {
                    z,
                    w: n.weight,
                    q: branch_sqrt(k1sq - z * z),
                    on_cut: n.point,
                    x: n.param,
                });
            }
            legs.push(make_leg(c, side, lo, nodes.len()));
            // connecting arc between the two legs around the branch point
            let left = legs[cut_first_leg];
            let right = legs[cut_first_leg + 1];
            let points = branch_arc(c.k, c.offset, 10)
                .into_iter()
                .map(|(z, w)| (z, w, branch_sqrt(k1sq - z * z)))
                .collect();
            arcs.push(ArcInfo {
                points,
                probes: [left.hi - 1, left.hi - 2, right.lo, right.lo + 1],
            });
        }
        let cut_guard = 0.12 * cfg.k1.norm();
        Engine {
            cfg,
            nodes,
            legs,
            arcs,
            trace_a,
            trace_b,
            forcing_scale,
            cut_guard,
        }
    }

    /// Trace value extrapolated to a cut's branch point (x -> 0).
    fn trace_at_branch(&self, arc: &ArcInfo, trace: &[C64]) -> C64 {
        let [l0, l1, r0, r1] = arc.probes;
        let ex = |i0: usize, i1: usize| {
            let (x0, x1) = (self.nodes[i0].x, self.nodes[i1].x);
            trace[i0] - (trace[i1] - trace[i0]) * (x0 / (x1 - x0))
        };
        0.5 * (ex(l0, l1) + ex(r0, r1))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Trace evaluation points in the first variable: (z_i, q_i).
    pub fn trace_points_a(&self) -> Vec<(C64, C64)> {
        self.nodes.iter().map(|n| (n.z, n.q)).collect()
    }

    /// Trace evaluation points in the second variable: (q_i, z_i).
    pub fn trace_points_b(&self) -> Vec<(C64, C64)> {
        self.nodes.iter().map(|n| (n.q, n.z)).collect()
    }

    pub fn trace_a(&self) -> &[C64] {
        &self.trace_a
    }

    pub fn trace_b(&self) -> &[C64] {
        &self.trace_b
    }

    /// Minimum distance from a point to the displaced contour.
    pub fn dist_to_path(&self, w: C64) -> f64 {
        let mut best = f64::INFINITY;
        let mut idx = 0;
        for (i, n) in self.nodes.iter().enumerate().step_by(7) {
            let d = (n.z - w).norm();
            if d < best {
                best = d;
                idx = i;
            }
        }
        let lo = idx.saturating_sub(7);
        let hi = (idx + 8).min(self.nodes.len());
        for n in &self.nodes[lo..hi] {
            best = best.min((n.z - w).norm());
        }
        best
    }

    /// True when `w` can be reached from the upper half-plane without
    /// crossing the lower cuts (evaluation side of both hairpins).
    pub fn is_above_cuts(&self, w: C64) -> bool {
        if w.im >= 0.0 {
            return true;
        }
        let scale = self.cfg.k1.norm();
        if w.re > 0.02 * scale {
            // the cuts live in Re ≤ 0 (κ ≥ 0); anything right of them is fine
            return true;
        }
        // compare against the cut point with the nearest real part, per cut
        for leg in &self.legs {
            let mut best = f64::INFINITY;
            let mut im_cut = 0.0;
            for n in &self.nodes[leg.lo..leg.hi] {
                let d = (n.on_cut.re - w.re).abs();
                if d < best {
                    best = d;
                    im_cut = n.on_cut.im;
                }
            }
            if best < 0.05 * scale && w.im < im_cut {
                return false;
            }
        }
        true
    }

    // -- core integrals ----------------------------------------------------

    /// Exact ∫ dz/(z - a) over a leg, by chained principal logs between
    /// consecutive nodes (safe against winding for any off-path `a`), and its
    /// discrete counterpart Σ w_j/(z_j - a).
    fn leg_log_and_sum(&self, leg: &LegInfo, a: C64) -> (C64, C64) {
        let mut l = C64::new(0.0, 0.0);
        let mut prev = leg.start;
        for i in leg.lo..leg.hi {
            l += ((self.nodes[i].z - a) / (prev - a)).ln();
            prev = self.nodes[i].z;
        }
        l += ((leg.end - a) / (prev - a)).ln();
        let mut s = C64::new(0.0, 0.0);
        for i in leg.lo..leg.hi {
            s += self.nodes[i].w / (self.nodes[i].z - a);
        }
        (l, s)
    }

    /// Same pair for the q-image of a leg: ∫ dq/(q - a) and
    /// Σ w_j q'_j/(q_j - a) with q' = dq/dz = -z/q.
    fn leg_qlog_and_sum(&self, leg: &LegInfo, leg_idx: usize, a: C64) -> (C64, C64) {
        let k1sq = self.cfg.k1 * self.cfg.k1;
        let q_of = |z: C64| branch_sqrt(k1sq - z * z);
        let (q_start, q_end) = (q_of(leg.start), q_of(leg.end));
        let _ = leg_idx;
        let mut l = C64::new(0.0, 0.0);
        let mut prev = q_start;
        for i in leg.lo..leg.hi {
            l += ((self.nodes[i].q - a) / (prev - a)).ln();
            prev = self.nodes[i].q;
        }
        l += ((q_end - a) / (prev - a)).ln();
        let mut s = C64::new(0.0, 0.0);
        for i in leg.lo..leg.hi {
            let n = &self.nodes[i];
            s += n.w * (-n.z / n.q) / (n.q - a);
        }
        (l, s)
    }

    /// Quadratic interpolation of node samples to the (complex) coordinate
    /// `a`, in the leg's z- or q-parameterisation. Used to evaluate pole
    /// numerators exactly at the pole, so the subtracted remainder is smooth.
    fn interp_at<F: Fn(usize) -> C64>(&self, leg: &LegInfo, a: C64, in_q: bool, value: F) -> C64 {
        let (near, _) = self.nearest_node_on_leg(leg, a, in_q);
        let lo = near
            .max(leg.lo + 1)
            .saturating_sub(1)
            .min(leg.hi.saturating_sub(3))
            .max(leg.lo);
        let coord = |i: usize| {
            if in_q {
                self.nodes[i].q
            } else {
                self.nodes[i].z
            }
        };
        let (c0, c1, c2) = (coord(lo), coord(lo + 1), coord(lo + 2));
        let (v0, v1, v2) = (value(lo), value(lo + 1), value(lo + 2));
        let l0 = (a - c1) * (a - c2) / ((c0 - c1) * (c0 - c2));
        let l1 = (a - c0) * (a - c2) / ((c1 - c0) * (c1 - c2));
        let l2 = (a - c0) * (a - c1) / ((c2 - c0) * (c2 - c1));
        v0 * l0 + v1 * l1 + v2 * l2
    }

    fn nearest_node_on_leg(&self, leg: &LegInfo, a: C64, in_q: bool) -> (usize, f64) {
        let mut best = f64::INFINITY;
        let mut near = leg.lo;
        for i in leg.lo..leg.hi {
            let d = if in_q {
                (self.nodes[i].q - a).norm()
            } else {
                (self.nodes[i].z - a).norm()
            };
            if d < best {
                best = d;
                near = i;
            }
        }
        (near, best)
    }

    /// Minimum distance from a point to the q-image of the path.
    pub fn dist_to_qpath(&self, w: C64) -> f64 {
        let mut best = f64::INFINITY;
        for n in self.nodes.iter().step_by(5) {
            best = best.min((n.q - w).norm());
        }
        best
    }

    /// First-formula bracket B1(α) = K_{∘+}(α) Ψ₊₊(α).
    pub fn bracket1(&self, alpha: (C64, C64)) -> Result<C64, SpectralError> {
        self.bracket1_with(alpha, &self.trace_b)
    }

    fn bracket1_with(&self, alpha: (C64, C64), trace_b: &[C64]) -> Result<C64, SpectralError> {
        let (a1, a2) = alpha;
        let k1sq = self.cfg.k1 * self.cfg.k1;
        let k2sq = self.cfg.k2 * self.cfg.k2;
        let c = k2sq - k1sq;
        let base = self.bracket1_plain(alpha, trace_b)?;
        if c.norm() == 0.0 || a1.im <= 0.0 {
            return Ok(base);
        }
        let z2s = -branch_sqrt(k1sq - a1 * a1);
        if !self.is_above_cuts(z2s) {
            return Err(SpectralError::OnSingularity(format!(
                "continuation pole at {z2s} has left the single-crossing regime"
            )));
        }
        let kp = (branch_sqrt(k2sq - a1 * a1) + branch_sqrt(k1sq - a1 * a1))
            / (2.0 * branch_sqrt(k1sq - a1 * a1));
        let psi_at = self.psi2_plain((a1, z2s), trace_b, false)?;
        let res = -c * psi_at / (kp * (z2s - a2) * z2s);
        Ok(base + C64::new(0.0, -0.25 / PI) * RESIDUE_SIGN * C64::new(0.0, 2.0 * PI) * res)
    }

/// Ψ through the second formula without its own continuation residue
    /// (used for the residue compensation of the first formula, where the
    /// argument is guaranteed on the plain-valid side).
    fn psi2_plain(
        &self,
        alpha: (C64, C64),
        _trace_b: &[C64],
        _recurse: bool,
    ) -> Result<C64, SpectralError> {
        let b2 = self.bracket2_plain(alpha, &self.trace_a)?;
        let kp = factor_k(KernelFactor::PlusA1, alpha, &self.cfg)
            .map_err(|e| SpectralError::OnSingularity(e.to_string()))?;
        Ok(b2 / kp)
    }

    fn psi1_plain(&self, alpha: (C64, C64)) -> Result<C64, SpectralError> {
        let b1 = self.bracket1_plain(alpha, &self.trace_b)?;
        let kp = factor_k(KernelFactor::PlusA2, alpha, &self.cfg)
            .map_err(|e| SpectralError::OnSingularity(e.to_string()))?;
        Ok(b1 / kp)
    }

    /// First bracket without the upper-half-plane residue compensation.
    fn bracket1_plain(&self, alpha: (C64, C64), trace_b: &[C64]) -> Result<C64, SpectralError> {
        let (a1, a2) = alpha;
        let cfg = &self.cfg;
        let k1sq = cfg.k1 * cfg.k1;
        let k2sq = cfg.k2 * cfg.k2;
        let c = k2sq - k1sq;
        let ext = self.ext1(alpha)?;
        if c.norm() == 0.0 {
            return Ok(ext);
        }
        let s1a = branch_sqrt(k1sq - a1 * a1);
        let s2a = branch_sqrt(k2sq - a1 * a1);
        let mut quad = C64::new(0.0, 0.0);
        for (n, b) in self.nodes.iter().zip(trace_b) {
            quad += n.w * c * b * (s1a - n.z)
                / ((s2a - n.z) * (n.q - a1) * (n.z - a2) * n.q);
        }
        for arc in &self.arcs {
            let t0 = self.trace_at_branch(arc, trace_b);
            for &(z, w, q) in &arc.points {
                quad += w * c * t0 * (s1a - z) / ((s2a - z) * (q - a1) * (z - a2) * q);
            }
        }
        if self.dist_to_path(a2) < self.cut_guard {
            for leg in self.legs.iter() {
                let (_, dist) = self.nearest_node_on_leg(leg, a2, false);
                if dist > self.cut_guard {
                    continue;
                }
                let ghat = self.interp_at(leg, a2, false, |i| {
                    let n = &self.nodes[i];
                    c * trace_b[i] * (s1a - n.z) / ((s2a - n.z) * (n.q - a1) * n.q)
                });
                let (l, srest) = self.leg_log_and_sum(leg, a2);
                quad += ghat * (l - srest);
            }
        }
        if self.dist_to_qpath(a1) < self.cut_guard {
            for (li, leg) in self.legs.iter().enumerate() {
                let (_, dist) = self.nearest_node_on_leg(leg, a1, true);
                if dist > self.cut_guard {
                    continue;
                }
                let hhat = self.interp_at(leg, a1, true, |i| {
                    let n = &self.nodes[i];
                    -c * trace_b[i] * (s1a - n.z) / ((s2a - n.z) * (n.z - a2) * n.z)
                });
                let (l, srest) = self.leg_qlog_and_sum(leg, li, a1);
                quad += hhat * (l - srest);
            }
        }
        Ok(C64::new(0.0, -0.25 / PI) * quad + ext)
    }

    /// Second-formula bracket B2(α) = K_{+∘}(α) Ψ₊₊(α).
    pub fn bracket2(&self, alpha: (C64, C64)) -> Result<C64, SpectralError> {
        self.bracket2_with(alpha, &self.trace_a)
    }

    fn bracket2_with(&self, alpha: (C64, C64), trace_a: &[C64]) -> Result<C64, SpectralError> {
        let (a1, a2) = alpha;
        let k1sq = self.cfg.k1 * self.cfg.k1;
        let k2sq = self.cfg.k2 * self.cfg.k2;
        let c = k2sq - k1sq;
        let base = self.bracket2_plain(alpha, trace_a)?;
        if c.norm() == 0.0 || a2.im <= 0.0 {
            return Ok(base);
        }
        // continuation across the q-image in the second variable
        let z1s = -branch_sqrt(k1sq - a2 * a2);
        if !self.is_above_cuts(z1s) {
            return Err(SpectralError::OnSingularity(format!(
                "continuation pole at {z1s} has left the single-crossing regime"
            )));
        }
        let km = (branch_sqrt(k2sq - a2 * a2) + branch_sqrt(k1sq - a2 * a2))
            / (2.0 * branch_sqrt(k1sq - a2 * a2));
        let psi_at = self.psi1_plain((z1s, a2))?;
        let res = -c * psi_at / (km * (z1s - a1) * z1s);
        Ok(base + C64::new(0.0, -0.25 / PI) * RESIDUE_SIGN * C64::new(0.0, 2.0 * PI) * res)
    }

    /// Second bracket without the upper-half-plane residue compensation.
    fn bracket2_plain(&self, alpha: (C64, C64), trace_a: &[C64]) -> Result<C64, SpectralError> {
        let (a1, a2) = alpha;
        let cfg = &self.cfg;
        let k1sq = cfg.k1 * cfg.k1;
        let k2sq = cfg.k2 * cfg.k2;
        let c = k2sq - k1sq;
        let ext = self.ext2(alpha)?;
        if c.norm() == 0.0 {
            return Ok(ext);
        }
        let t1a = branch_sqrt(k1sq - a2 * a2);
        let t2a = branch_sqrt(k2sq - a2 * a2);
        let mut quad = C64::new(0.0, 0.0);
        for (n, a) in self.nodes.iter().zip(trace_a) {
            quad += n.w * c * a * (t1a - n.z)
                / ((t2a - n.z) * (n.q - a2) * (n.z - a1) * n.q);
        }
        for arc in &self.arcs {
            let t0 = self.trace_at_branch(arc, trace_a);
            for &(z, w, q) in &arc.points {
                quad += w * c * t0 * (t1a - z) / ((t2a - z) * (q - a2) * (z - a1) * q);
            }
        }
        if self.dist_to_path(a1) < self.cut_guard {
            for leg in self.legs.iter() {
                let (_, dist) = self.nearest_node_on_leg(leg, a1, false);
                if dist > self.cut_guard {
                    continue;
                }
                let ghat = self.interp_at(leg, a1, false, |i| {
                    let n = &self.nodes[i];
                    c * trace_a[i] * (t1a - n.z) / ((t2a - n.z) * (n.q - a2) * n.q)
                });
                let (l, srest) = self.leg_log_and_sum(leg, a1);
                quad += ghat * (l - srest);
            }
        }
        if self.dist_to_qpath(a2) < self.cut_guard {
            for (li, leg) in self.legs.iter().enumerate() {
                let (_, dist) = self.nearest_node_on_leg(leg, a2, true);
                if dist > self.cut_guard {
                    continue;
                }
                let hhat = self.interp_at(leg, a2, true, |i| {
                    let n = &self.nodes[i];
                    -c * trace_a[i] * (t1a - n.z) / ((t2a - n.z) * (n.z - a1) * n.z)
                });
                let (l, srest) = self.leg_qlog_and_sum(leg, li, a2);
                quad += hhat * (l - srest);
            }
        }
        Ok(C64::new(0.0, -0.25 / PI) * quad + ext)
    }

    fn ext1(&self, alpha: (C64, C64)) -> Result<C64, SpectralError> {
        let cfg = &self.cfg;
        let p = forcing_p(alpha, cfg).map_err(|e| SpectralError::OnSingularity(e.to_string()))?;
        let km_a = factor_k(KernelFactor::MinusA1, (alpha.0, cfg.a2), cfg)
            .map_err(|e| SpectralError::OnSingularity(e.to_string()))?;
        let km_b = factor_k(KernelFactor::MinusA2, (alpha.0, cfg.a2), cfg)
            .map_err(|e| SpectralError::OnSingularity(e.to_string()))?;
        let km_c = factor_k(KernelFactor::MinusA1, (cfg.a1, cfg.a2), cfg)
            .map_err(|e| SpectralError::OnSingularity(e.to_string()))?;
        Ok(-self.forcing_scale * km_a * p / (km_b * km_c))
    }

    fn ext2(&self, alpha: (C64, C64)) -> Result<C64, SpectralError> {
        let cfg = &self.cfg;
        let p = forcing_p(alpha, cfg).map_err(|e| SpectralError::OnSingularity(e.to_string()))?;
        let km_a = factor_k(KernelFactor::MinusA2, (cfg.a1, alpha.1), cfg)
            .map_err(|e| SpectralError::OnSingularity(e.to_string()))?;
        let km_b = factor_k(KernelFactor::MinusA1, (cfg.a1, alpha.1), cfg)
            .map_err(|e| SpectralError::OnSingularity(e.to_string()))?;
        let km_c = factor_k(KernelFactor::MinusA2, (cfg.a1, cfg.a2), cfg)
            .map_err(|e| SpectralError::OnSingularity(e.to_string()))?;
        Ok(-self.forcing_scale * km_a * p / (km_b * km_c))
    }

    /// Ψ₊₊ through the first formula.
    pub fn psi_in_a1(&self, alpha: (C64, C64)) -> Result<C64, SpectralError> {
        let b1 = self.bracket1(alpha)?;
        let kp = factor_k(KernelFactor::PlusA2, alpha, &self.cfg)
            .map_err(|e| SpectralError::OnSingularity(e.to_string()))?;
        if kp.norm() < 1e-10 {
            return Err(SpectralError::OnSingularity(
                "interior circle pole of the spectral function".into(),
            ));
        }
        Ok(b1 / kp)
    }

    /// Ψ₊₊ through the second formula.
    pub fn psi_in_a2(&self, alpha: (C64, C64)) -> Result<C64, SpectralError> {
        let b2 = self.bracket2(alpha)?;
        let kp = factor_k(KernelFactor::PlusA1, alpha, &self.cfg)
            .map_err(|e| SpectralError::OnSingularity(e.to_string()))?;
        if kp.norm() < 1e-10 {
            return Err(SpectralError::OnSingularity(
                "interior circle pole of the spectral function".into(),
            ));
        }
        Ok(b2 / kp)
    }

    /// Region classification for a general point.
    pub fn region(&self, alpha: (C64, C64)) -> EvalRegion {
        let (a1, a2) = alpha;
        let scale = self.cfg.k1.norm();
        let tube = 5e-4 * scale;
        let clear = |w: C64| self.dist_to_path(w) > tube && self.is_above_cuts(w);
        let pole1 = (a1 - self.cfg.a1).norm() > 1e-6 * scale;
        let pole2 = (a2 - self.cfg.a2).norm() > 1e-6 * scale;
        let r1 = clear(a2) && pole1 && !self.below_truncation(a1);
        let r2 = clear(a1) && pole2 && !self.below_truncation(a2);
        // the continued variable must itself stay off the cuts
        let mut r1 = r1 && self.dist_to_path(a1) > tube;
        let mut r2 = r2 && self.dist_to_path(a2) > tube;
        // once a variable moves into the upper half-plane, the migrated
        // integrand pole must not leave the single-crossing regime
        let k1sq = self.cfg.k1 * self.cfg.k1;
        if r1 && a1.im > 0.0 {
            let z2s = -branch_sqrt(k1sq - a1 * a1);
            r1 = clear(z2s) && self.dist_to_path(z2s) > tube;
        }
        if r2 && a2.im > 0.0 {
            let z1s = -branch_sqrt(k1sq - a2 * a2);
            r2 = clear(z1s) && self.dist_to_path(z1s) > tube;
        }
        match (r1, r2) {
            (true, true) => EvalRegion::Overlap,
            (true, false) => EvalRegion::ContinuedInA1,
            (false, true) => EvalRegion::ContinuedInA2,
            (false, false) => EvalRegion::Invalid,
        }
    }

    fn below_truncation(&self, w: C64) -> bool {
        w.im < -0.9 * self.legs.last().map(|l| l.end.norm()).unwrap_or(1e9)
    }

    /// Ψ₊₊ with region dispatch; the overlap returns the mean of both
    /// formulas and records their disagreement.
    pub fn psi(&self, alpha: (C64, C64)) -> Result<PsiValue, SpectralError> {
        match self.region(alpha) {
            EvalRegion::ContinuedInA1 => Ok(PsiValue {
                value: self.psi_in_a1(alpha)?,
                region: EvalRegion::ContinuedInA1,
                overlap_gap: None,
            }),
            EvalRegion::ContinuedInA2 => Ok(PsiValue {
                value: self.psi_in_a2(alpha)?,
                region: EvalRegion::ContinuedInA2,
                overlap_gap: None,
            }),
            EvalRegion::Overlap => {
                let v1 = self.psi_in_a1(alpha)?;
                let v2 = self.psi_in_a2(alpha)?;
                Ok(PsiValue {
                    value: 0.5 * (v1 + v2),
                    region: EvalRegion::Overlap,
                    overlap_gap: Some((v1 - v2).norm()),
                })
            }
            EvalRegion::Invalid => Err(SpectralError::InvalidRegion),
        }
    }

    /// Φ = K Ψ₊₊ = -Φ₃/₄ - P₊₊, evaluated through the factorised route that
    /// cancels the interior-circle zero explicitly.
    pub fn phi(&self, alpha: (C64, C64), route: Route) -> Result<C64, SpectralError> {
        let via1 = |this: &Self| -> Result<C64, SpectralError> {
            let b1 = this.bracket1(alpha)?;
            let km = factor_k(KernelFactor::MinusA2, alpha, &this.cfg)
                .map_err(|e| SpectralError::OnSingularity(e.to_string()))?;
            Ok(km * b1)
        };
        let via2 = |this: &Self| -> Result<C64, SpectralError> {
            let b2 = this.bracket2(alpha)?;
            let km = factor_k(KernelFactor::MinusA1, alpha, &this.cfg)
                .map_err(|e| SpectralError::OnSingularity(e.to_string()))?;
            Ok(km * b2)
        };
        match route {
            Route::InA1 => via1(self),
            Route::InA2 => via2(self),
            Route::Auto => {
                // prefer the route whose multiplier stays bounded and whose
                // Cauchy pole keeps the most clearance
                let (a1, a2) = alpha;
                let k1sq = self.cfg.k1 * self.cfg.k1;
                let m1_pole = (branch_sqrt(k1sq - a1 * a1) - a2).norm();
                let m2_pole = (branch_sqrt(k1sq - a2 * a2) - a1).norm();
                let score1 = self.dist_to_path(a2).min(2.0 * m1_pole);
                let score2 = self.dist_to_path(a1).min(2.0 * m2_pole);
                if score1 >= score2 {
                    via1(self)
                } else {
                    via2(self)
                }
            }
        }
    }

    /// Φ₃/₄ = -K Ψ₊₊ - P₊₊ through the robust Φ route.
    pub fn phi34(&self, alpha: (C64, C64), route: Route) -> Result<C64, SpectralError> {
        let phi = self.phi(alpha, route)?;
        let p = forcing_p(alpha, &self.cfg)
            .map_err(|e| SpectralError::OnSingularity(e.to_string()))?;
        Ok(-phi - self.forcing_scale * p)
    }

    // -- solver ------------------------------------------------------------

    /// One alternating sweep: the first trace is refreshed from the current
    /// second trace, the second from the current first.
    fn sweep_once(&self, trace_a: &[C64], trace_b: &[C64]) -> (Vec<C64>, Vec<C64>) {
        // trace A from formula 1 at α = (z, q): consumes trace B
        let new_a: Vec<C64> = self
            .nodes
            .par_iter()
            .map(|n| {
                let alpha = (n.z, n.q);
                let b1 = self.bracket1_with(alpha, trace_b).expect("trace sweep");
                // K_{∘+}(z, q) = (sqrt(k2²-z²) + q) / (2q)
                let k2sq = self.cfg.k2 * self.cfg.k2;
                let kp = (branch_sqrt(k2sq - n.z * n.z) + n.q) / (2.0 * n.q);
                b1 / kp
            })
            .collect();
        // trace B from formula 2 at α = (q, z): consumes trace A
        let new_b: Vec<C64> = self
            .nodes
            .par_iter()
            .map(|n| {
                let alpha = (n.q, n.z);
                let b2 = self.bracket2_with(alpha, trace_a).expect("trace sweep");
                let k2sq = self.cfg.k2 * self.cfg.k2;
                let kp = (branch_sqrt(k2sq - n.z * n.z) + n.q) / (2.0 * n.q);
                b2 / kp
            })
            .collect();
        (new_a, new_b)
    }

    fn initial_traces(&self) -> Result<(Vec<C64>, Vec<C64>), SpectralError> {
        let k2sq = self.cfg.k2 * self.cfg.k2;
        let a: Result<Vec<C64>, _> = self
            .nodes
            .iter()
            .map(|n| {
                let kp = (branch_sqrt(k2sq - n.z * n.z) + n.q) / (2.0 * n.q);
                self.ext1((n.z, n.q)).map(|e| e / kp)
            })
            .collect();
        let b: Result<Vec<C64>, _> = self
            .nodes
            .iter()
            .map(|n| {
                let kp = (branch_sqrt(k2sq - n.z * n.z) + n.q) / (2.0 * n.q);
                self.ext2((n.q, n.z)).map(|e| e / kp)
            })
            .collect();
        Ok((a?, b?))
    }
}

/// Solve for the traces by damped Gauss-Seidel iteration of the coupled
/// continuation formulas, starting from their external additive terms.
pub fn solve_traces(
    cfg: &WedgeConfig,
    contour: &ContourParams,
    opts: &SolveOptions,
) -> Result<SpectralTrace, SpectralError> {
    if opts.tol <= 0.0 {
        return Err(SpectralError::BadRequest("tolerance must be positive".into()));
    }
    let kmax = cfg.k1.norm().max(cfg.k2.norm());
    let truncation = contour.truncation_factor * kmax;
    let offset = contour.offset_factor * cfg.k1.norm();
    let p1 = build_contour(1, cfg.k1, cfg.kappa, contour.nodes_per_cut, truncation, offset)?;
    let p2 = build_contour(2, cfg.k2, cfg.kappa, contour.nodes_per_cut, truncation, offset)?;
    let engine = Engine::new(*cfg, &p1, &p2, Vec::new(), Vec::new(), opts.forcing_scale);

    // guard: trace points must keep clear of the forcing poles
    let pole_guard = 1e-4 * cfg.k1.norm();
    for n in &engine.nodes {
        for (pt, pole) in [(n.z, cfg.a1), (n.q, cfg.a1), (n.z, cfg.a2), (n.q, cfg.a2)] {
            if (pt - pole).norm() < pole_guard {
                return Err(SpectralError::OnSingularity(format!(
                    "a trace point collides with a forcing pole at {pole}; \
                     increase kappa or the contour offset"
                )));
            }
        }
    }

    let (mut ta, mut tb) = engine.initial_traces()?;
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    while iterations < opts.max_iter {
        let (na, nb) = engine.sweep_once(&ta, &tb);
        let mut res = 0.0f64;
        for i in 0..ta.len() {
            let da = na[i] - ta[i];
            let db = nb[i] - tb[i];
            res = res.max(da.norm()).max(db.norm());
            ta[i] += opts.damping * da;
            tb[i] += opts.damping * db;
        }
        iterations += 1;
        history.push(res);
        residual = res;
        if res < opts.tol {
            break;
        }
    }
    if residual >= opts.tol {
        return Err(SpectralError::NonConvergence {
            residual,
            iterations,
            history,
        });
    }
    Ok(SpectralTrace {
        schema_version: SCHEMA_VERSION,
        cfg: *cfg,
        p1,
        p2,
        trace_a: ta,
        trace_b: tb,
        iterations,
        residual,
        residual_history: history,
        forcing_scale: opts.forcing_scale,
    })
}

// ---------------------------------------------------------------------------
// Lateral limits (regular bracket values at the branch points)
// ---------------------------------------------------------------------------

/// Which branch-point limit to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LateralLimitKind {
    /// lim_{α1 -> -k1} K_{∘+} Ψ₊₊ on the first-trace curve (needs k2 > k1).
    PsiL2,
    /// lim_{α2 -> -k1} K_{+∘} Ψ₊₊ on the second-trace curve (needs k2 > k1).
    PsiL1,
    /// lim_{α1 -> -k2} Φ/K_{∘-} along the interior circle (needs k1 > k2).
    PhiL2,
    /// lim_{α2 -> -k2} Φ/K_{-∘} along the interior circle (needs k1 > k2).
    PhiL1,
}

/// Extrapolated branch-point limit with its ladder of raw values and the
/// per-depth Richardson extrapolants.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LateralLimit {
    pub kind: LateralLimitKind,
    pub ladder: Vec<(f64, C64)>,
    pub extrapolants: Vec<C64>,
    pub value: C64,
}

/// The factor-weighted trace K_{∘+}(α1, sqrt(k1²-α1²)) Ψ₊₊(α1, sqrt(k1²-α1²))
/// through its regular representation (first bracket). Regular as α1 -> -k1.
pub fn residue_corrected_trace_a(engine: &Engine, a1: C64) -> Result<C64, SpectralError> {
    if engine.cfg.is_transparent() {
        return Err(SpectralError::BadRequest(
            "transparent configuration: the correction does not apply (no laterals)".into(),
        ));
    }
    let scale = engine.cfg.k1.norm();
    if (a1 + engine.cfg.k1).norm() > 0.5 * scale {
        return Err(SpectralError::BadRequest(format!(
            "requested at {a1}, outside the branch-point regime of -k1"
        )));
    }
    let q = branch_sqrt(engine.cfg.k1 * engine.cfg.k1 - a1 * a1);
    engine.bracket1((a1, q))
}

/// Evaluate one branch-point limit on a geometric δ-ladder and Richardson
/// extrapolate in sqrt(δ). `depth` is the number of extrapolation stages
/// (ladder has depth+1 rungs).
pub fn lateral_limit(
    engine: &Engine,
    kind: LateralLimitKind,
    delta0: f64,
    depth: usize,
) -> Result<LateralLimit, SpectralError> {
    let cfg = &engine.cfg;
    cfg.check_lateral_admissible()
        .map_err(|e| SpectralError::BadRequest(e.to_string()))?;
    let (k1, k2) = (cfg.k1, cfg.k2);
    let ordering_ok = match kind {
        LateralLimitKind::PsiL1 | LateralLimitKind::PsiL2 => k2.re > k1.re,
        LateralLimitKind::PhiL1 | LateralLimitKind::PhiL2 => k1.re > k2.re,
    };
    if !ordering_ok {
        return Err(SpectralError::BadRequest(format!(
            "{kind:?} is inactive for this wavenumber ordering"
        )));
    }
    let k1sq = k1 * k1;
    let k2sq = k2 * k2;
    let mut ladder = Vec::new();
    for j in 0..=depth {
        let d = delta0 / 4f64.powi(j as i32);
        let v = match kind {
            LateralLimitKind::PsiL2 => {
                let a1 = -k1 + C64::new(d, 0.0);
                engine.bracket1((a1, branch_sqrt(k1sq - a1 * a1)))?
            }
            LateralLimitKind::PsiL1 => {
                let a2 = -k1 + C64::new(d, 0.0);
                engine.bracket2((branch_sqrt(k1sq - a2 * a2), a2))?
            }
            LateralLimitKind::PhiL2 => {
                let a1 = -k2 + C64::new(d, 0.0);
                engine.bracket1((a1, -branch_sqrt(k2sq - a1 * a1)))?
            }
            LateralLimitKind::PhiL1 => {
                let a2 = -k2 + C64::new(d, 0.0);
                engine.bracket2((-branch_sqrt(k2sq - a2 * a2), a2))?
            }
        };
        ladder.push((d, v));
    }
    // Richardson in h = sqrt(δ): successive Neville columns
    let mut col: Vec<C64> = ladder.iter().map(|(_, v)| *v).collect();
    let mut extrapolants = vec![*col.last().unwrap()];
    let ratio = 2.0; // sqrt of the δ-ladder ratio 4
    let mut power = ratio;
    while col.len() > 1 {
        let mut next = Vec::with_capacity(col.len() - 1);
        for i in 0..col.len() - 1 {
            next.push((col[i + 1] * power - col[i]) / (power - 1.0));
        }
        col = next;
        extrapolants.push(*col.last().unwrap());
        power *= ratio;
    }
    Ok(LateralLimit {
        kind,
        ladder,
        extrapolants: extrapolants.clone(),
        value: *extrapolants.last().unwrap(),
    })
}

// ---------------------------------------------------------------------------
// Diagnostics and reconstruction
// ---------------------------------------------------------------------------

/// Report of the quadrant-support and interface-continuity checks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupportReport {
    pub inside_max: f64,
    pub outside_max: f64,
    pub support_ratio: f64,
    pub interface_rel: f64,
    pub grid_extent: f64,
    pub n_inside: usize,
    pub n_outside: usize,
}

/// Reconstructed physical fields at a point: transmitted (interior quadrant
/// transform) and scattered (exterior transform).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FieldSample {
    pub x: [f64; 2],
    pub psi: C64,
    pub phi_sc: C64,
}

fn incident(cfg: &WedgeConfig, x: [f64; 2]) -> C64 {
    (C64::new(0.0, -1.0) * (cfg.a1 * x[0] + cfg.a2 * x[1])).exp()
}

impl Engine {
    /// Reconstruct ψ and φ_sc at a spatial point by iterated oscillatory
    /// quadrature of the inverse transforms over [-A, A]², with the plane
    /// incident part handled in closed form.
    pub fn reconstruct(&self, x: [f64; 2], big_a: f64, tol: f64) -> Result<FieldSample, SpectralError> {
        // inner integral over α1 at fixed real α2, for both integrands:
        //   R = Ψ + P (quadrant part; its transform is ψ - φ_in H H)
        //   S = K Ψ + P = -Φ₃/₄ (its transform is -φ_sc)
        // evaluate a hair below the real axis: the lower-side limit is the
        // branch the continuation formulas define (the exactly-real line is
        // the ambiguous boundary of the composed-pole image)
        let nudge = 3e-6 * self.cfg.k1.norm();
        let line = |a2: f64| -> Result<(C64, C64), SpectralError> {
            let a2c = C64::new(a2, -nudge);
            let mut err = None;
            let eval = |a1: f64| -> (C64, C64) {
                let alpha = (C64::new(a1, -nudge), a2c);
                match self.bracket1(alpha) {
                    Ok(b1) => {
                        let kp = factor_k(KernelFactor::PlusA2, alpha, &self.cfg).unwrap();
                        let km = factor_k(KernelFactor::MinusA2, alpha, &self.cfg).unwrap();
                        let psi = b1 / kp;
                        let p = self.forcing_scale
                            * forcing_p(alpha, &self.cfg).unwrap_or(C64::new(0.0, 0.0));
                        (psi + p, km * b1 + p)
                    }
                    Err(_) => (C64::new(0.0, 0.0), C64::new(0.0, 0.0)),
                }
            };
            let fr = |a1: f64| eval(a1).0 * (C64::new(0.0, -x[0] * a1)).exp();
            let fs = |a1: f64| eval(a1).1 * (C64::new(0.0, -x[0] * a1)).exp();
            let (vr, _) = adaptive_qk15_c(&fr, -big_a, big_a, tol);
            let (vs, _) = adaptive_qk15_c(&fs, -big_a, big_a, tol);
            let tr = osc_tails_c(&|a1| eval(a1).0, x[0], big_a);
            let ts = osc_tails_c(&|a1| eval(a1).1, x[0], big_a);
            if let Some(e) = err.take() {
                return Err(e);
            }
            Ok((vr + tr, vs + ts))
        };
        // outer integral over α2
        let fr2 = |a2: f64| line(a2).map(|v| v.0).unwrap_or(C64::new(0.0, 0.0))
            * (C64::new(0.0, -x[1] * a2)).exp();
        let fs2 = |a2: f64| line(a2).map(|v| v.1).unwrap_or(C64::new(0.0, 0.0))
            * (C64::new(0.0, -x[1] * a2)).exp();
        let (qr, _) = adaptive_qk15_c(&fr2, -big_a, big_a, tol * big_a);
        let (qs, _) = adaptive_qk15_c(&fs2, -big_a, big_a, tol * big_a);
        let norm = 1.0 / (4.0 * PI * PI);
        let heav = if x[0] > 0.0 && x[1] > 0.0 { 1.0 } else { 0.0 };
        let inc = incident(&self.cfg, x) * self.forcing_scale;
        Ok(FieldSample {
            x,
            psi: qr * norm + inc * heav,
            phi_sc: -qs * norm,
        })
    }
}

fn adaptive_qk15_c(f: &dyn Fn(f64) -> C64, a: f64, b: f64, tol: f64) -> (C64, f64) {
    crate::quad::adaptive_qk15(|t| f(t), a, b, tol, 3000)
}

fn osc_tails_c(g: &dyn Fn(f64) -> C64, x: f64, big_a: f64) -> C64 {
    crate::quad::osc_tails(|t| g(t), x, big_a)
}

/// Quadrant-support verification: reconstruct ψ on a polar sampling of all
/// four quadrants and compare the maximum magnitude outside the first
/// quadrant against the inside, plus the interface-continuity check
/// ψ ≈ φ_sc + φ_in across both faces.
pub fn verify_support(
    engine: &Engine,
    n_angles: usize,
    radii: &[f64],
    big_a: f64,
    tol: f64,
) -> Result<SupportReport, SpectralError> {
    if engine.cfg.kappa <= 0.0 {
        return Err(SpectralError::BadRequest(
            "support verification needs kappa > 0".into(),
        ));
    }
    let kmax = engine.cfg.k1.norm().max(engine.cfg.k2.norm());
    // Nyquist-style guard on the angular sampling at the largest radius
    let h = radii.iter().cloned().fold(0.0, f64::max) * (2.0 * PI / n_angles as f64);
    if h * kmax > PI {
        return Err(SpectralError::GridTooCoarse { h, kmax });
    }
    let mut pts = Vec::new();
    for &r in radii {
        for i in 0..n_angles {
            let th = 2.0 * PI * (i as f64 + 0.5) / n_angles as f64;
            pts.push([r * th.cos(), r * th.sin()]);
        }
    }
    let samples: Vec<FieldSample> = pts
        .par_iter()
        .map(|&x| engine.reconstruct(x, big_a, tol).expect("reconstruction"))
        .collect();
    let margin = 0.15;
    let mut inside: f64 = 0.0;
    let mut outside: f64 = 0.0;
    let mut n_in = 0;
    let mut n_out = 0;
    for s in &samples {
        let th = s.x[1].atan2(s.x[0]);
        if th > margin && th < PI / 2.0 - margin {
            inside = inside.max(s.psi.norm());
            n_in += 1;
        } else if !(th > -margin && th < PI / 2.0 + margin) {
            outside = outside.max(s.psi.norm());
            n_out += 1;
        }
    }
    // interface continuity: ψ just inside vs φ_sc + φ_in just outside
    let delta = 1e-3 / kmax;
    let mut worst = 0.0f64;
    let rmid = radii[radii.len() / 2];
    for &t in &[0.4 * rmid, 0.8 * rmid] {
        // face x2 = 0
        let a = engine.reconstruct([t, delta], big_a, tol)?;
        let b = engine.reconstruct([t, -delta], big_a, tol)?;
        let phi_tot = b.phi_sc + incident(&engine.cfg, b.x) * engine.forcing_scale;
        let scale = a.psi.norm().max(phi_tot.norm()).max(1e-12);
        worst = worst.max((a.psi - phi_tot).norm() / scale);
        // face x1 = 0
        let c = engine.reconstruct([delta, t], big_a, tol)?;
        let d = engine.reconstruct([-delta, t], big_a, tol)?;
        let phi_tot = d.phi_sc + incident(&engine.cfg, d.x) * engine.forcing_scale;
        let scale = c.psi.norm().max(phi_tot.norm()).max(1e-12);
        worst = worst.max((c.psi - phi_tot).norm() / scale);
    }
    Ok(SupportReport {
        inside_max: inside,
        outside_max: outside,
        support_ratio: outside / inside.max(1e-300),
        interface_rel: worst,
        grid_extent: radii.iter().cloned().fold(0.0, f64::max),
        n_inside: n_in,
        n_outside: n_out,
    })
}

/// Additive-crossing diagnostic at (-k1, a2): sup over shrinking bi-circles
/// of |Φ + U1 + U2|, which stays bounded when the crossing splits into two
/// one-singularity terms.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdditiveReport {
    pub radii: Vec<f64>,
    pub sup_residuals: Vec<f64>,
    pub bounded: bool,
}

pub fn additive_crossing_diagnostic(
    engine: &Engine,
    radii: &[f64],
) -> Result<AdditiveReport, SpectralError> {
    let cfg = &engine.cfg;
    if cfg.case != IncidenceCase::Simple {
        return Err(SpectralError::BadRequest(
            "additive-crossing diagnostic applies to the simple case".into(),
        ));
    }
    let k1 = cfg.k1;
    let k1sq = k1 * k1;
    // C = K_{-∘}(-k1, a2) / (K_{-∘}(a1, a2) (-k1 - a1))
    let km_at = factor_k(KernelFactor::MinusA1, (-k1, cfg.a2), cfg)
        .map_err(|e| SpectralError::OnSingularity(e.to_string()))?;
    let km_aa = factor_k(KernelFactor::MinusA1, (cfg.a1, cfg.a2), cfg)
        .map_err(|e| SpectralError::OnSingularity(e.to_string()))?;
    let c0 = engine.forcing_scale * km_at / (km_aa * (-k1 - cfg.a1));
    let mut sup_residuals = Vec::new();
    for &rho in radii {
        let mut sup = 0.0f64;
        let m = 8;
        for i in 0..m {
            for j in 0..m {
                let t1 = 2.0 * PI * (i as f64 + 0.37) / m as f64;
                let t2 = 2.0 * PI * (j as f64 + 0.61) / m as f64;
                let a1 = -k1 + C64::from_polar(rho, t1);
                let a2 = cfg.a2 + C64::from_polar(rho, t2);
                // keep clear of the contour tubes
                if engine.dist_to_path(a1) < 0.5 * rho.min(engine.cut_guard)
                    || engine.dist_to_path(a2) < 0.5 * rho.min(engine.cut_guard)
                {
                    continue;
                }
                let phi = match engine.phi((a1, a2), Route::InA1) {
                    Ok(v) => v,
                    Err(_) => continue,
                };
                let u1 = c0 / (a2 - cfg.a2);
                let u2 = c0 * branch_sqrt(k1sq - a1 * a1) / (-cfg.a2 * cfg.a2);
                sup = sup.max((phi + u1 + u2).norm());
            }
        }
        sup_residuals.push(sup);
    }
    // bounded: the smallest-radius residual must not exceed a modest multiple
    // of the largest-radius one
    let bounded = match (sup_residuals.first(), sup_residuals.last()) {
        (Some(f), Some(l)) => *l <= 5.0 * f.max(1e-12) && l.is_finite(),
        _ => false,
    };
    Ok(AdditiveReport {
        radii: radii.to_vec(),
        sup_residuals,
        bounded,
    })
}

/// Cross-formula Wiener-Hopf residual |K Ψ(1) + Φ₃/₄(2) + P| / |P| sampled at
/// random admissible points of the overlap region. Corrupted traces break the
/// agreement between the two continuation routes and inflate this residual.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WhResidualReport {
    pub n: usize,
    pub max_rel: f64,
    pub mean_rel: f64,
    /// Same-route (definitional) residual, a plumbing smoke check.
    pub definitional_max: f64,
}

pub fn wh_residual_report(engine: &Engine, n: usize, seed: u64) -> WhResidualReport {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let kmax = engine.cfg.k1.norm().max(engine.cfg.k2.norm());
    let mut max_rel = 0.0f64;
    let mut sum_rel = 0.0f64;
    let mut max_def = 0.0f64;
    let mut count = 0usize;
    while count < n {
        let a1 = C64::new(
            (2.0 * next() - 1.0) * 2.0 * kmax,
            0.15 * kmax + 0.8 * kmax * next(),
        );
        let a2 = C64::new(
            (2.0 * next() - 1.0) * 2.0 * kmax,
            0.15 * kmax + 0.8 * kmax * next(),
        );
        let alpha = (a1, a2);
        if engine.region(alpha) != EvalRegion::Overlap {
            continue;
        }
        let (k, p) = match (kernel_k(alpha, &engine.cfg), forcing_p(alpha, &engine.cfg)) {
            (Ok(k), Ok(p)) => (k, p * engine.forcing_scale),
            _ => continue,
        };
        // keep away from the kernel zeros/poles where Ψ legitimately blows up
        if k.norm() < 0.05 || k.norm() > 20.0 {
            continue;
        }
        let psi1 = match engine.psi_in_a1(alpha) {
            Ok(v) => v,
            Err(_) => continue,
        };
        let phi2 = match engine.phi(alpha, Route::InA2) {
            Ok(v) => v,
            Err(_) => continue,
        };
        let phi34_2 = -phi2 - p;
        let rel = (k * psi1 + phi34_2 + p).norm() / p.norm().max(1e-300);
        let phi1 = engine.phi(alpha, Route::InA1).unwrap();
        let def = (k * psi1 + (-phi1 - p) + p).norm() / p.norm().max(1e-300);
        max_rel = max_rel.max(rel);
        sum_rel += rel;
        max_def = max_def.max(def);
        count += 1;
    }
    WhResidualReport {
        n: count,
        max_rel,
        mean_rel: sum_rel / count.max(1) as f64,
        definitional_max: max_def,
    }
}

/// Overlap-agreement statistics between the two continuation formulas.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OverlapReport {
    pub n: usize,
    pub max_gap: f64,
    pub max_gap_rel: f64,
}

pub fn overlap_report(engine: &Engine, n: usize, seed: u64) -> OverlapReport {
    let mut state = seed.wrapping_mul(2862933555777941757).wrapping_add(3037000493);
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let kmax = engine.cfg.k1.norm().max(engine.cfg.k2.norm());
    let mut max_gap = 0.0f64;
    let mut max_rel = 0.0f64;
    let mut count = 0;
    while count < n {
        let a1 = C64::new(
            (2.0 * next() - 1.0) * 1.5 * kmax,
            0.2 * kmax + 0.6 * kmax * next(),
        );
        let a2 = C64::new(
            (2.0 * next() - 1.0) * 1.5 * kmax,
            0.2 * kmax + 0.6 * kmax * next(),
        );
        if engine.region((a1, a2)) != EvalRegion::Overlap {
            continue;
        }
        match engine.psi((a1, a2)) {
            Ok(PsiValue {
                value,
                overlap_gap: Some(gap),
                ..
            }) => {
                max_gap = max_gap.max(gap);
                max_rel = max_rel.max(gap / value.norm().max(1e-12));
                count += 1;
            }
            _ => continue,
        }
    }
    OverlapReport {
        n: count,
        max_gap,
        max_gap_rel: max_rel,
    }
}

// needed by make_leg / Engine construction
fn make_leg(c: &Contour, side: Side, lo: usize, hi: usize) -> LegInfo {
    let z0 = displaced_point(c.k, 0.0, side, c.offset);
    let zt = displaced_point(c.k, c.truncation, side, c.offset);
    // node order: left leg runs from truncation to 0, right leg from 0 out
    let (start, end) = match side {
        Side::Left => (zt, z0),
        Side::Right => (z0, zt),
    };
    LegInfo { lo, hi, start, end }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn small_contour() -> ContourParams {
        ContourParams {
            nodes_per_cut: 1600,
            truncation_factor: 40.0,
            offset_factor: 1e-6,
        }
    }

    fn transparent_trace() -> SpectralTrace {
        let cfg = WedgeConfig::new(1.0, 1.0, 0.1, 5.0 * PI / 4.0).unwrap();
        solve_traces(&cfg, &small_contour(), &SolveOptions::default()).unwrap()
    }

    #[test]
    fn transparent_solves_in_one_sweep() {
        let tr = transparent_trace();
        assert_eq!(tr.iterations, 1);
        assert!(tr.residual < 1e-14, "residual {}", tr.residual);
        // traces equal -P₊₊ at the trace points
        let engine = tr.engine();
        let pts = engine.trace_points_a();
        for (i, (z, q)) in pts.iter().enumerate().step_by(97) {
            let p = forcing_p((*z, *q), &tr.cfg).unwrap();
            assert!(
                (tr.trace_a[i] + p).norm() < 1e-10 * p.norm().max(1.0),
                "node {i}"
            );
        }
    }

    #[test]
    fn transparent_psi_is_minus_forcing_everywhere() {
        let tr = transparent_trace();
        let engine = tr.engine();
        let pts = [
            (C64::new(0.3, 0.4), C64::new(-0.2, 0.5)),
            (C64::new(-1.4, 0.8), C64::new(0.9, 0.3)),
            (C64::new(2.0, 0.2), C64::new(1.1, 0.9)),
        ];
        for alpha in pts {
            let v = engine.psi(alpha).unwrap();
            let p = forcing_p(alpha, &tr.cfg).unwrap();
            assert!((v.value + p).norm() < 1e-10 * p.norm());
            // Φ₃/₄ vanishes identically
            let f34 = engine.phi34(alpha, Route::Auto).unwrap();
            assert!(f34.norm() < 1e-10 * p.norm());
        }
    }

    #[test]
    fn small_contrast_converges_geometrically() {
        let cfg = WedgeConfig::new(1.0, 1.05, 0.1, 5.0 * PI / 4.0).unwrap();
        let tr = solve_traces(&cfg, &small_contour(), &SolveOptions::default()).unwrap();
        assert!(tr.iterations < 20, "iterations {}", tr.iterations);
        // geometric contraction: consecutive residual ratios below 1/2
        for w in tr.residual_history.windows(2) {
            if w[0] > 1e-13 {
                assert!(w[1] < 0.5 * w[0], "history {:?}", tr.residual_history);
            }
        }
        // self-consistency: one extra sweep moves the traces by < tol
        assert!(tr.recompute_residual() < 1e-8);
    }

    #[test]
    fn overlap_and_wh_consistency() {
        let cfg = WedgeConfig::new(1.0, 1.05, 0.1, 5.0 * PI / 4.0).unwrap();
        let tr = solve_traces(&cfg, &small_contour(), &SolveOptions::default()).unwrap();
        let engine = tr.engine();
        // spec overlap point
        let alpha = (C64::new(0.2, 0.3), C64::new(0.1, 0.4));
        let v = engine.psi(alpha).unwrap();
        assert_eq!(v.region, EvalRegion::Overlap);
        let gap = v.overlap_gap.unwrap();
        assert!(
            gap <= 10.0 * tr.residual.max(1e-12),
            "gap {gap} vs residual {}",
            tr.residual
        );
        let wh = wh_residual_report(&engine, 200, 42);
        assert!(wh.n == 200);
        assert!(
            wh.max_rel < 10.0 * tr.residual.max(1e-9),
            "wh max {} residual {}",
            wh.max_rel,
            tr.residual
        );
        assert!(wh.definitional_max < 1e-9);
    }

    #[test]
    fn forcing_scaling_is_linear() {
        let cfg = WedgeConfig::new(1.0, 1.05, 0.1, 5.0 * PI / 4.0).unwrap();
        let base = solve_traces(&cfg, &small_contour(), &SolveOptions::default()).unwrap();
        let scaled = solve_traces(
            &cfg,
            &small_contour(),
            &SolveOptions {
                forcing_scale: 2.5,
                ..Default::default()
            },
        )
        .unwrap();
        let e1 = base.engine();
        let e2 = scaled.engine();
        let alpha = (C64::new(0.2, 0.3), C64::new(0.1, 0.4));
        let v1 = e1.psi(alpha).unwrap().value;
        let v2 = e2.psi(alpha).unwrap().value;
        assert!((v2 - v1 * 2.5).norm() < 1e-9 * v2.norm());
    }

    #[test]
    fn circle_limit_consistency() {
        // K·Ψ extrapolated onto the interior circle equals the robust Φ
        let cfg = WedgeConfig::new(1.0, 1.05, 0.05, 5.0 * PI / 4.0).unwrap();
        let tr = solve_traces(&cfg, &small_contour(), &SolveOptions::default()).unwrap();
        let engine = tr.engine();
        // theta away from the forcing direction, where Φ varies gently
        let theta = 0.5f64;
        // radial approach from inside along the third-quadrant arc
        let point = |eps: f64| {
            let a1 = -(cfg.k2 + eps) * theta.cos();
            let a2 = -(cfg.k2 + eps) * theta.sin();
            (a1, a2)
        };
        let kp = |alpha: (C64, C64)| {
            kernel_k(alpha, &cfg).unwrap() * engine.psi_in_a1(alpha).unwrap()
        };
        let (f1, f2) = (kp(point(0.02)), kp(point(0.01)));
        let extrap = f2 * 2.0 - f1;
        let theta_c = C64::new(theta, 0.0);
        let on_circle = engine
            .phi((-cfg.k2 * theta_c.re.cos(), -cfg.k2 * theta_c.re.sin()), Route::InA1)
            .unwrap();
        let rel = (extrap - on_circle).norm() / on_circle.norm();
        assert!(rel < 0.01, "rel {rel}");
        assert!(on_circle.norm().is_finite() && on_circle.norm() > 0.0);
    }

    #[test]
    fn lateral_limit_regularity_and_stability() {
        let cfg = WedgeConfig::new(1.0, 1.1, 0.1, 5.0 * PI / 4.0).unwrap();
        let tr = solve_traces(&cfg, &small_contour(), &SolveOptions::default()).unwrap();
        let engine = tr.engine();
        // residue-corrected trace forms a Cauchy sequence towards -k1
        let vals: Vec<C64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|d| residue_corrected_trace_a(&engine, -cfg.k1 + C64::new(*d, 0.0)).unwrap())
            .collect();
        let d01 = (vals[1] - vals[0]).norm();
        let d12 = (vals[2] - vals[1]).norm();
        assert!(d12 < d01, "not Cauchy: {d01} then {d12}");
        // Richardson-stable limit
        let l2 = lateral_limit(&engine, LateralLimitKind::PsiL2, 1e-2, 3).unwrap();
        let l2_shallow = lateral_limit(&engine, LateralLimitKind::PsiL2, 1e-2, 2).unwrap();
        let rel = (l2.value - l2_shallow.value).norm() / l2.value.norm();
        assert!(rel < 0.01, "ladder instability {rel}");
        // wrong ordering rejected
        assert!(lateral_limit(&engine, LateralLimitKind::PhiL2, 1e-2, 2).is_err());
        // transparent rejection
        let trt = transparent_trace();
        let et = trt.engine();
        assert!(residue_corrected_trace_a(&et, -trt.cfg.k1 + C64::new(1e-3, 0.0)).is_err());
    }

    #[test]
    fn additive_crossing_bounded() {
        let cfg = WedgeConfig::new(1.0, 1.05, 0.05, 5.0 * PI / 4.0).unwrap();
        let tr = solve_traces(&cfg, &small_contour(), &SolveOptions::default()).unwrap();
        let engine = tr.engine();
        let report =
            additive_crossing_diagnostic(&engine, &[1e-1, 3e-2, 1e-2, 3e-3, 1e-3]).unwrap();
        assert!(report.bounded, "{report:?}");
    }

    #[test]
    fn trace_roundtrip_serialization() {
        let tr = transparent_trace();
        let s = serde_json::to_string(&tr).unwrap();
        let back: SpectralTrace = serde_json::from_str(&s).unwrap();
        assert_eq!(back.schema_version, SCHEMA_VERSION);
        assert_eq!(back.trace_a.len(), tr.trace_a.len());
        let e = back.engine();
        let alpha = (C64::new(0.3, 0.4), C64::new(-0.2, 0.5));
        let v = e.psi(alpha).unwrap().value;
        let p = forcing_p(alpha, &back.cfg).unwrap();
        assert!((v + p).norm() < 1e-10 * p.norm());
    }
}
