//! Empirical calibration of two-sided kernel envelopes and
//! finite-difference verification of derivative bounds.
//!
//! The heat kernel admits two-sided estimates `c * E(p, h) <= p_h(p) <=
//! C * E(p, h)` for several explicit envelopes `E`; the estimates assert
//! that finite constants exist but no closed form pins them down.  This
//! module evaluates `kernel / envelope` over structured grids and reports
//! the observed constants ([`SandwichReport`]), checks the logarithmic
//! gradient bound `|grad ln p_h| <= C d / h` by finite differences along
//! the horizontal vector fields ([`grad_log_check`]), and cross-checks the
//! mixed horizontal derivative `X Y p` against its exact oscillatory
//! integral representation ([`mixed_derivative_check`]).
//!
//! All envelopes are built scale-covariantly: the ratio `kernel /
//! envelope` is invariant under the parabolic dilation `(p, h) ->
//! (delta_rho p, rho^2 h)`, so constants calibrated at one scale apply at
//! every scale.

use std::f64::consts::PI;

use num_complex::Complex64 as C;

use crate::error::{Error, Result};
use crate::geometry::{self, GeodesicData};
use crate::group::{FullPoint, RadialPoint, Signature};
use crate::kernel::{self, kernel_auto};
use crate::phase;
use crate::quad;

// ---------------------------------------------------------------------------
// Envelope comparators.
// ---------------------------------------------------------------------------

/// Explicit envelope against which the kernel is sandwiched.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Comparator {
    /// Two-sided envelope on isotropic groups `H(n)`:
    /// `h^{-(n+1)} e^{-d^2/4h} (1 + d/sqrt h)^{2(n-1)} (1 + |z|d/h)^{1/2-n}`.
    Isotropic,
    /// Two-sided envelope on the first Heisenberg group `H(1,1)`:
    /// `h^{-2} e^{-d^2/4h} (1 + |z|d/h)^{-1/2}`.
    H11,
    /// Angle-uniform two-sided envelope for a general signature, valid
    /// wherever `eps_* = sin(theta)/theta > 0`:
    /// `h^{-(n+1)} e^{-d^2/4h} (1 + |z|^2 eps_*^2/h + r_l^2/(h eps_*))^{-1/2}
    ///  * [(h + sqrt(h)|z| + r_l^2/eps_*^2) / (h + sqrt(h)|z| eps_* +
    ///  r_l^2/eps_*)]^{k_l - 1}`.
    AngleUniform,
    /// Gaussian upper envelope
    /// `h^{-Q/2} (1 + d/sqrt h)^{Q-1} e^{-d^2/4h}` (one-sided: the kernel
    /// is bounded above by a constant multiple of it).
    GaussianUpper,
    /// Gaussian lower envelope `h^{-Q/2} e^{-d^2/((4-varpi) h)}` for a
    /// slack parameter `0 < varpi < 4` (one-sided: the kernel is bounded
    /// below by a constant multiple of it).
    GaussianLower {
        /// Slack in the Gaussian rate; must lie in `(0, 4)`.
        varpi: f64,
    },
    /// Envelope `(1 + pi |s|)^{power - 1} e^{-pi |s|}` for the central
    /// transform of index `power`.  One-dimensional in the transform
    /// variable; evaluated only through [`transform_envelope_check`].
    TransformEnvelope {
        /// Index of the transform being enveloped.
        power: u32,
    },
}

/// Default slack for the Gaussian lower envelope: the midpoint of the
/// admissible interval `(0, 4)`.
pub const DEFAULT_VARPI: f64 = 2.0;

/// Geodesic quantities entering the comparators, with the origin handled
/// explicitly (the geodesic solve is undefined there, but every envelope
/// extends continuously with `d = 0`, `theta = 0`, `eps_* = 1`).
fn envelope_geometry(sig: &Signature, p: &RadialPoint) -> Result<(f64, f64)> {
    if p.is_origin() {
        return Ok((0.0, 1.0));
    }
    let geo: GeodesicData = geometry::solve_geodesic(sig, p)?;
    Ok((geo.d_sq.sqrt(), geo.epsilon_star))
}

/// Natural logarithm of [`comparator_value`].
///
/// Preferred for assembling ratios: the envelopes reach `e^{+-550}` on the
/// standard grids, where the logarithmic form stays exact while the plain
/// value would lose range.
pub fn comparator_ln(kind: Comparator, sig: &Signature, p: &RadialPoint, h: f64) -> Result<f64> {
    sig.check_point(p)?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Domain(format!(
            "scale h must be positive and finite, got {h}"
        )));
    }
    let n = f64::from(sig.n());
    let q = f64::from(sig.q());
    match kind {
        Comparator::Isotropic => {
            if !sig.is_isotropic() {
                return Err(Error::Domain(
                    "the isotropic envelope requires a single-block signature".into(),
                ));
            }
            let (d, _) = envelope_geometry(sig, p)?;
            let z = p.r_total();
            Ok(-(n + 1.0) * h.ln() - d * d / (4.0 * h)
                + 2.0 * (n - 1.0) * (d / h.sqrt()).ln_1p()
                + (0.5 - n) * (z * d / h).ln_1p())
        }
        Comparator::H11 => {
            if !(sig.is_isotropic() && sig.n() == 1) {
                return Err(Error::Domain(
                    "the H(1,1) envelope is specific to the first Heisenberg group".into(),
                ));
            }
            let (d, _) = envelope_geometry(sig, p)?;
            let z = p.r_total();
            Ok(-2.0 * h.ln() - d * d / (4.0 * h) - 0.5 * (z * d / h).ln_1p())
        }
        Comparator::AngleUniform => {
            let (d, eps_star) = envelope_geometry(sig, p)?;
            if eps_star <= 0.0 {
                return Err(Error::Domain(
                    "the angle-uniform envelope requires sin(theta)/theta > 0; \
                     the point lies on the cut locus"
                        .into(),
                ));
            }
            let z = p.r_total();
            let rl = *p.r().last().expect("signature has at least one block");
            let kl = f64::from(sig.k_last());
            let bracket = (h + h.sqrt() * z + rl * rl / (eps_star * eps_star))
                / (h + h.sqrt() * z * eps_star + rl * rl / eps_star);
            Ok(-(n + 1.0) * h.ln() - d * d / (4.0 * h)
                - 0.5 * (z * z * eps_star * eps_star / h + rl * rl / (h * eps_star)).ln_1p()
                + (kl - 1.0) * bracket.ln())
        }
        Comparator::GaussianUpper => {
            let (d, _) = envelope_geometry(sig, p)?;
            Ok(-(q / 2.0) * h.ln() + (q - 1.0) * (d / h.sqrt()).ln_1p() - d * d / (4.0 * h))
        }
        Comparator::GaussianLower { varpi } => {
            if !(varpi > 0.0 && varpi < 4.0) {
                return Err(Error::Domain(format!(
                    "the Gaussian lower envelope requires 0 < varpi < 4, got {varpi}"
                )));
            }
            let (d, _) = envelope_geometry(sig, p)?;
            Ok(-(q / 2.0) * h.ln() - d * d / ((4.0 - varpi) * h))
        }
        Comparator::TransformEnvelope { .. } => Err(Error::Domain(
            "the transform envelope is one-dimensional in the transform variable; \
             evaluate it through transform_envelope_check"
                .into(),
        )),
    }
}

/// The envelope value at a point, exactly as displayed (all distance and
/// `eps_*` dependencies included).
pub fn comparator_value(kind: Comparator, sig: &Signature, p: &RadialPoint, h: f64) -> Result<f64> {
    comparator_ln(kind, sig, p, h).map(f64::exp)
}

// ---------------------------------------------------------------------------
// Sweep grids.
// ---------------------------------------------------------------------------

/// Cap on `d^2 / (4h)` over generated grids.  Keeps every `kernel /
/// envelope` ratio representable: the widest spread (the Gaussian lower
/// envelope at default slack) reaches `exp(d^2/(4h) + polylog)`, which at
/// the cap stays below `e^{600} < f64::MAX`.
const LN_RATIO_CAP: f64 = 550.0;

/// Kernel tolerance for sweep evaluations.
const SWEEP_TOL: f64 = 1e-9;

/// A list of (reduced point, scale) evaluation entries.
#[derive(Debug, Clone)]
pub struct GridSpec {
    /// Evaluation entries: reduced point and scale `h`.
    pub entries: Vec<(RadialPoint, f64)>,
}

/// Builds a sweep grid as the product of geodesic angles, scales, and
/// size fractions.
///
/// For each angle `theta`, direction `c` (unit vector over blocks), and
/// scale `h`, the radius cap `s_cap` solves `d^2(theta, s_cap * c) = 4 h *
/// 550`, so a fraction `u` places the point at `d^2/(4h) = 550 u^2`: the
/// grid sweeps the whole Gaussian range up to the representability cap.
/// Central coordinates are chosen on the geodesic locus `t = sum_j a_j
/// mu(a_j theta) r_j^2`, so `theta` is the point's true geodesic angle.
/// Single-block signatures use the one radial direction; multi-block
/// signatures pair every fraction with both the last-block-only and the
/// equal-split direction.
pub fn build_grid(
    sig: &Signature,
    thetas: &[f64],
    hs: &[f64],
    fractions: &[f64],
) -> Result<GridSpec> {
    for &theta in thetas {
        if !(theta > 0.0 && theta < PI) {
            return Err(Error::Domain(format!(
                "grid angles must lie in (0, pi), got {theta}"
            )));
        }
    }
    for &h in hs {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Domain(format!(
                "grid scales must be positive and finite, got {h}"
            )));
        }
    }
    for &u in fractions {
        if !(u > 0.0 && u <= 1.0) {
            return Err(Error::Domain(format!(
                "grid size fractions must lie in (0, 1], got {u}"
            )));
        }
    }
    let l = sig.blocks();
    let mut directions: Vec<Vec<f64>> = Vec::new();
    if l == 1 {
        directions.push(vec![1.0]);
    } else {
        let mut last_only = vec![0.0; l];
        last_only[l - 1] = 1.0;
        directions.push(last_only);
        directions.push(vec![(l as f64).sqrt().recip(); l]);
    }

    let mut entries = Vec::new();
    for &theta in thetas {
        for dir in &directions {
            // d^2 = w^2 * m with m = sum_j (a_j theta c_j / sin(a_j theta))^2.
            let mut m = 0.0;
            for ((_, aj), &cj) in sig.iter().zip(dir) {
                if cj > 0.0 {
                    let w = aj * theta;
                    m += (w * cj / w.sin()).powi(2);
                }
            }
            for &h in hs {
                let s_cap = (4.0 * h * LN_RATIO_CAP / m).sqrt();
                for &u in fractions {
                    let w = u * s_cap;
                    let r: Vec<f64> = dir.iter().map(|&cj| w * cj).collect();
                    let mut t = 0.0;
                    for ((_, aj), &rj) in sig.iter().zip(&r) {
                        if rj > 0.0 {
                            t += aj * geometry::mu(aj * theta)? * rj * rj;
                        }
                    }
                    entries.push((RadialPoint::new(r, t)?, h));
                }
            }
        }
    }
    Ok(GridSpec { entries })
}

/// The standard 200-entry calibration grid for a signature: 5 angles
/// (near 0 through near pi) x 5 scales x 8 size fractions (single-block)
/// or 4 size fractions x 2 directions (multi-block).
pub fn standard_grid(sig: &Signature) -> Result<GridSpec> {
    let thetas = [0.05, 0.8, 1.6, 2.4, 3.04];
    let hs = [0.25, 0.5, 1.0, 2.0, 4.0];
    if sig.blocks() == 1 {
        build_grid(
            sig,
            &thetas,
            &hs,
            &[0.02, 0.1, 0.25, 0.45, 0.65, 0.8, 0.92, 1.0],
        )
    } else {
        build_grid(sig, &thetas, &hs, &[0.05, 0.35, 0.7, 1.0])
    }
}

// ---------------------------------------------------------------------------
// Sandwich sweeps.
// ---------------------------------------------------------------------------

/// One evaluated grid entry of a [`SandwichReport`].
#[derive(Debug, Clone)]
pub struct SweepSample {
    /// Block radii of the point followed by its central coordinate.
    pub coords: Vec<f64>,
    /// Scale the kernel was evaluated at.
    pub h: f64,
    /// `ln` of the kernel value.
    pub ln_kernel: f64,
    /// `ln` of the envelope value.
    pub ln_comparator: f64,
    /// `kernel / envelope` at the sample.
    pub ratio: f64,
}

/// Empirical two-sided constants of a kernel/envelope comparison over a
/// grid.
#[derive(Debug, Clone)]
pub struct SandwichReport {
    /// Envelope the kernel was compared against.
    pub comparator: Comparator,
    /// Every successfully evaluated grid entry.
    pub samples: Vec<SweepSample>,
    /// Smallest observed `kernel / envelope` ratio (empirical lower
    /// constant).
    pub ratio_min: f64,
    /// Largest observed ratio (empirical upper constant).
    pub ratio_max: f64,
    /// Index into `samples` where `ratio_min` occurred.
    pub argmin: usize,
    /// Index into `samples` where `ratio_max` occurred.
    pub argmax: usize,
    /// Grid entries that failed to evaluate: coordinates, scale, reason.
    /// Failures are recorded, never silently dropped.
    pub skipped: Vec<(Vec<f64>, f64, String)>,
}

impl SandwichReport {
    /// `ratio_max / ratio_min`: the observed two-sided spread.
    pub fn spread(&self) -> f64 {
        self.ratio_max / self.ratio_min
    }

    fn assemble(
        comparator: Comparator,
        samples: Vec<SweepSample>,
        skipped: Vec<(Vec<f64>, f64, String)>,
    ) -> Result<SandwichReport> {
        if samples.is_empty() {
            let detail = skipped
                .first()
                .map(|(_, _, reason)| format!("; first failure: {reason}"))
                .unwrap_or_default();
            return Err(Error::Domain(format!(
                "every grid entry failed to evaluate{detail}"
            )));
        }
        let mut argmin = 0;
        let mut argmax = 0;
        for (i, s) in samples.iter().enumerate() {
            if s.ratio < samples[argmin].ratio {
                argmin = i;
            }
            if s.ratio > samples[argmax].ratio {
                argmax = i;
            }
        }
        let report = SandwichReport {
            comparator,
            ratio_min: samples[argmin].ratio,
            ratio_max: samples[argmax].ratio,
            argmin,
            argmax,
            samples,
            skipped,
        };
        debug_assert!(report.ratio_min > 0.0 && report.ratio_max.is_finite());
        Ok(report)
    }
}

/// Sweeps `kernel / envelope` over a grid and reports the observed
/// two-sided constants with their attaining points.
///
/// Kernel evaluation failures at individual grid entries are skipped and
/// logged in the report; a report is only produced if at least one entry
/// evaluates, and it always satisfies `0 < ratio_min <= ratio_max <
/// infinity`.
pub fn sandwich_sweep(kind: Comparator, sig: &Signature, grid: &GridSpec) -> Result<SandwichReport> {
    let mut samples = Vec::with_capacity(grid.entries.len());
    let mut skipped = Vec::new();
    for (p, h) in &grid.entries {
        let mut coords = p.r().to_vec();
        coords.push(p.t());
        let ln_comparator = match comparator_ln(kind, sig, p, *h) {
            Ok(v) => v,
            Err(e) => {
                skipped.push((coords, *h, e.to_string()));
                continue;
            }
        };
        let ln_kernel = match kernel_auto(sig, p, *h, SWEEP_TOL) {
            Ok(k) => k.ln_value,
            Err(e) => {
                skipped.push((coords, *h, e.to_string()));
                continue;
            }
        };
        let ratio = (ln_kernel - ln_comparator).exp();
        if !(ratio.is_finite() && ratio > 0.0) {
            skipped.push((
                coords,
                *h,
                format!(
                    "non-representable ratio: ln kernel = {ln_kernel}, \
                     ln comparator = {ln_comparator}"
                ),
            ));
            continue;
        }
        samples.push(SweepSample {
            coords,
            h: *h,
            ln_kernel,
            ln_comparator,
            ratio,
        });
    }
    SandwichReport::assemble(kind, samples, skipped)
}

/// Sandwiches the central transform of index `n - 1` between multiples of
/// `(1 + pi |s|)^{n-2} e^{-pi |s|}` over a grid of transform arguments.
///
/// Requires `n >= 2`.  The samples store the transform argument as the
/// single coordinate; the scale field is fixed at 1 (the comparison is
/// scale-free).
pub fn transform_envelope_check(n: u32, s_grid: &[f64]) -> Result<SandwichReport> {
    if n < 2 {
        return Err(Error::Domain(format!(
            "the transform envelope bound is stated for n >= 2, got n = {n}"
        )));
    }
    let power = n - 1;
    let mut samples = Vec::with_capacity(s_grid.len());
    let mut skipped = Vec::new();
    for &s in s_grid {
        let value = match kernel::gaveau_transform(power, s) {
            Ok(v) => v,
            Err(e) => {
                skipped.push((vec![s], 1.0, e.to_string()));
                continue;
            }
        };
        if !(value > 0.0 && value.is_finite()) {
            skipped.push((vec![s], 1.0, format!("non-positive transform value {value}")));
            continue;
        }
        let ln_comparator = f64::from(n - 2) * (PI * s.abs()).ln_1p() - PI * s.abs();
        let ln_kernel = value.ln();
        samples.push(SweepSample {
            coords: vec![s],
            h: 1.0,
            ln_kernel,
            ln_comparator,
            ratio: (ln_kernel - ln_comparator).exp(),
        });
    }
    SandwichReport::assemble(Comparator::TransformEnvelope { power }, samples, skipped)
}

// ---------------------------------------------------------------------------
// Gradient bound by finite differences.
// ---------------------------------------------------------------------------

/// Calibrated constant for the gradient bound `|grad ln p_h| <= C d / h`.
///
/// The observed supremum of `|grad ln p_1| / d` over the calibration grids
/// is just below 1 (attained toward the origin; the ratio decays to 1/2
/// along rays to infinity), so 1.2 holds with a margin while staying
/// within a factor ~1.3 of sharp.
pub const GRAD_LOG_C: f64 = 1.2;

/// Relative finite-difference step for first derivatives of `ln p_h`.
const GRAD_REL_STEP: f64 = 1e-5;

/// Kernel tolerance for gradient evaluations.  Looser than the
/// second-derivative tolerance: first differences divide the kernel noise
/// only by `2 * step ~ 2e-5`, leaving component noise near 5e-5, orders
/// below the bound's margin.  (Pure-central points certify no better than
/// ~2e-10 on the contour route, so 1e-10 would be unattainable there.)
const GRAD_TOL: f64 = 1e-9;

/// Result of one gradient-bound check.
#[derive(Debug, Clone)]
pub struct GradLogReport {
    /// Euclidean norm of the horizontal gradient of `ln p_h`, assembled
    /// from the components along every `X_{i,j}`, `Y_{i,j}`.
    pub grad_norm: f64,
    /// The bound `GRAD_LOG_C * d / h`.
    pub bound: f64,
    /// Whether `grad_norm <= bound`.
    pub ok: bool,
}

/// Central difference with one Richardson extrapolation step:
/// `(4 D(s/2) - D(s)) / 3` where `D(s) = (f(s) - f(-s)) / (2s)`.
fn central_richardson<F: FnMut(f64) -> Result<f64>>(mut f: F, s: f64) -> Result<f64> {
    let d_full = (f(s)? - f(-s)?) / (2.0 * s);
    let d_half = (f(0.5 * s)? - f(-0.5 * s)?) / s;
    Ok((4.0 * d_half - d_full) / 3.0)
}

/// Relative step at a coordinate, with an underflow guard.
fn fd_step(coord: f64, rel: f64, what: &str) -> Result<f64> {
    let s = rel * (1.0 + coord.abs());
    if coord + s == coord || coord - s == coord {
        return Err(Error::Accuracy {
            message: format!(
                "finite-difference step {s:e} underflows at {what} coordinate {coord:e}"
            ),
            value: 0.0,
            err_estimate: f64::INFINITY,
        });
    }
    Ok(s)
}

/// Checks the pointwise gradient bound `|grad ln p_h| <= C d(g) / h` at a
/// full (non-reduced) point by central differences along the horizontal
/// left-invariant fields `X_{i,j} = d/dx + 2 a_i y d/dt`, `Y_{i,j} = d/dy
/// - 2 a_i x d/dt`.
///
/// Steps are relative (`1e-5 * (1 + |coordinate|)`) and every difference
/// is Richardson-extrapolated once.  The bound uses the module's
/// calibrated constant [`GRAD_LOG_C`] and is scaling-adjusted: the same
/// constant serves every `h` because gradient and distance scale the same
/// way under dilation.
pub fn grad_log_check(sig: &Signature, fp: &FullPoint, h: f64) -> Result<GradLogReport> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Domain(format!(
            "scale h must be positive and finite, got {h}"
        )));
    }
    check_full_point(sig, fp)?;
    let rp = fp.reduce();
    if rp.is_origin() {
        return Err(Error::Domain(
            "the gradient bound is stated away from the origin".into(),
        ));
    }
    let geo = geometry::solve_geodesic(sig, &rp)?;
    let d = geo.d_sq.sqrt();

    let ln_p = |q: &FullPoint| -> Result<f64> {
        Ok(kernel_auto(sig, &q.reduce(), h, GRAD_TOL)?.ln_value)
    };

    // The central derivative is shared by every field component.
    let st = fd_step(fp.t(), GRAD_REL_STEP, "central")?;
    let dt = central_richardson(|off| ln_p(&fp.translated(0, 0, 0.0, 0.0, off)), st)?;

    let mut norm_sq = 0.0;
    for (i, (_, ai)) in sig.iter().enumerate() {
        for j in 0..fp.coords(i).len() {
            let (x, y) = fp.coords(i)[j];
            let sx = fd_step(x, GRAD_REL_STEP, "horizontal")?;
            let sy = fd_step(y, GRAD_REL_STEP, "horizontal")?;
            let dx = central_richardson(|off| ln_p(&fp.translated(i, j, off, 0.0, 0.0)), sx)?;
            let dy = central_richardson(|off| ln_p(&fp.translated(i, j, 0.0, off, 0.0)), sy)?;
            let x_comp = dx + 2.0 * ai * y * dt;
            let y_comp = dy - 2.0 * ai * x * dt;
            norm_sq += x_comp * x_comp + y_comp * y_comp;
        }
    }
    let grad_norm = norm_sq.sqrt();
    let bound = GRAD_LOG_C * d / h;
    Ok(GradLogReport {
        grad_norm,
        bound,
        ok: grad_norm <= bound,
    })
}

/// Validates that a full point has the coordinate layout of the signature.
fn check_full_point(sig: &Signature, fp: &FullPoint) -> Result<()> {
    if fp.blocks() != sig.blocks() {
        return Err(Error::Domain(format!(
            "point has {} blocks, signature has {}",
            fp.blocks(),
            sig.blocks()
        )));
    }
    for (i, &ki) in sig.k().iter().enumerate() {
        if fp.coords(i).len() != ki as usize {
            return Err(Error::Domain(format!(
                "block {i} has {} coordinate pairs, signature requires {ki}",
                fp.coords(i).len()
            )));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Mixed second derivative against the integral representation.
// ---------------------------------------------------------------------------

/// Relative finite-difference step for second derivatives of the kernel.
const MIXED_REL_STEP: f64 = 5e-3;

/// Kernel tolerance for second-derivative evaluations; tight because the
/// stencils divide by `step^2 ~ 6e-6`.
const MIXED_TOL: f64 = 1e-12;

/// Result of one mixed-derivative cross-check.
#[derive(Debug, Clone)]
pub struct MixedDerivativeReport {
    /// `X_{1,1} Y_{1,1} p` by quadrature of the exact integral
    /// representation.
    pub quadrature: f64,
    /// The same derivative assembled from finite differences of the
    /// kernel.
    pub finite_difference: f64,
    /// `|quadrature - finite_difference|` normalized by
    /// `max(|quadrature|, kernel value)`.
    pub rel_err: f64,
}

/// Cross-checks the mixed horizontal derivative `X_{1,1} Y_{1,1} p` at a
/// full point (at scale 1) two independent ways.
///
/// Quadrature route: differentiating under the integral sign of the
/// kernel's Fourier representation and simplifying with `w / sinh(w) *
/// sinh(w) = w` and its relatives collapses the four resulting integrals
/// into one:
///
/// ```text
/// X Y p = pref * Int h(s) e^{phi(s)} [ -(i/2) a1 s
///         + (xy/4) (h2(a1 s)^2 + (a1 s)^2)
///         + (i/4) (x^2 - y^2) a1 s h2(a1 s) ] ds,
/// ```
///
/// with `h2(w) = w coth(w)` and `(x, y)` the first coordinate pair of the
/// first block.  Finite-difference route: expanding the two fields gives
/// `X(Y p) = p_xy - 2 a1 p_t - 2 a1 x p_xt + 2 a1 y p_yt - 4 a1^2 x y
/// p_tt`, each partial taken by a Richardson-extrapolated central stencil
/// on the kernel.
pub fn mixed_derivative_check(sig: &Signature, fp: &FullPoint) -> Result<MixedDerivativeReport> {
    check_full_point(sig, fp)?;
    let rp = fp.reduce();
    let (x, y) = fp.coords(0)[0];
    let a1 = sig.a()[0];
    let n = sig.n() as i32;

    // --- Quadrature route (real part of the even integrand doubles over
    // [0, inf); the odd imaginary part integrates to zero).
    let integrand = |s: f64| -> f64 {
        let w = C::new(s, 0.0);
        let amp = phase::amplitude_unchecked(sig, w).re;
        let ph = phase::phi_unchecked(sig, &rp, w);
        let aw = a1 * s;
        let h2 = phase::h2_r(aw);
        let b_re = 0.25 * x * y * (h2 * h2 + aw * aw);
        let b_im = -0.5 * aw + 0.25 * (x * x - y * y) * aw * h2;
        amp * ph.re.exp() * (ph.im.cos() * b_re - ph.im.sin() * b_im)
    };
    // |h e^{phi}| decays at least like e^{-rate * s} with polynomial-order
    // corrections; at 800 / rate the integrand is an exact 0 in f64.
    let rate: f64 = sig.iter().map(|(kj, aj)| f64::from(kj) * aj).sum();
    let upper = 800.0 / rate;
    let pts = quad::breakpoints(0.0, upper, &[1.0, 3.0, 8.0, 20.0, 50.0, 120.0]);
    let qr = quad::integrate(integrand, &pts, 1e-12, 1e-300, 200_000);
    let pref = 0.5 / (4.0 * PI).powi(n + 1);
    let quadrature = 2.0 * pref * qr.value;
    if !qr.converged {
        return Err(Error::Accuracy {
            message: "the mixed-derivative integral did not converge".into(),
            value: quadrature,
            err_estimate: 2.0 * pref * qr.err,
        });
    }

    // --- Finite-difference route.
    let f = |q: &FullPoint| -> Result<f64> {
        Ok(kernel_auto(sig, &q.reduce(), 1.0, MIXED_TOL)?.value)
    };
    let f0 = f(fp)?;
    let sx = fd_step(x, MIXED_REL_STEP, "horizontal")?;
    let sy = fd_step(y, MIXED_REL_STEP, "horizontal")?;
    let st = fd_step(fp.t(), MIXED_REL_STEP, "central")?;

    // First and pure-second central stencils in t.
    let ft = |off: f64| f(&fp.translated(0, 0, 0.0, 0.0, off));
    let p_t = central_richardson(ft, st)?;
    let d2t = |s: f64| -> Result<f64> { Ok((ft(s)? - 2.0 * f0 + ft(-s)?) / (s * s)) };
    let p_tt = (4.0 * d2t(0.5 * st)? - d2t(st)?) / 3.0;

    // Mixed four-point stencils, Richardson-extrapolated by halving both
    // steps at once (the truncation error is quadratic in each).
    let mixed = |eval: &mut dyn FnMut(f64, f64) -> Result<f64>,
                     sa: f64,
                     sb: f64|
     -> Result<f64> {
        let mut stencil = |ka: f64, kb: f64| -> Result<f64> {
            Ok(
                (eval(ka * sa, kb * sb)? - eval(ka * sa, -kb * sb)? - eval(-ka * sa, kb * sb)?
                    + eval(-ka * sa, -kb * sb)?)
                    / (4.0 * ka * sa * kb * sb),
            )
        };
        let full = stencil(1.0, 1.0)?;
        let half = stencil(0.5, 0.5)?;
        Ok((4.0 * half - full) / 3.0)
    };
    let p_xy = mixed(
        &mut |dx, dy| f(&fp.translated(0, 0, dx, dy, 0.0)),
        sx,
        sy,
    )?;
    let p_xt = mixed(
        &mut |dx, dt| f(&fp.translated(0, 0, dx, 0.0, dt)),
        sx,
        st,
    )?;
    let p_yt = mixed(
        &mut |dy, dt| f(&fp.translated(0, 0, 0.0, dy, dt)),
        sy,
        st,
    )?;

    let finite_difference =
        p_xy - 2.0 * a1 * p_t - 2.0 * a1 * x * p_xt + 2.0 * a1 * y * p_yt
            - 4.0 * a1 * a1 * x * y * p_tt;

    let rel_err = (quadrature - finite_difference).abs() / quadrature.abs().max(f0);
    Ok(MixedDerivativeReport {
        quadrature,
        finite_difference,
        rel_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::Signature;

    fn h11() -> Signature {
        Signature::isotropic(1).unwrap()
    }

    fn two_block() -> Signature {
        Signature::new(vec![1, 1], vec![0.5, 1.0]).unwrap()
    }

    #[test]
    fn comparators_at_the_origin_reduce_to_the_h_power() {
        let o1 = RadialPoint::new(vec![0.0], 0.0).unwrap();
        let v = comparator_value(Comparator::H11, &h11(), &o1, 1.0).unwrap();
        assert_eq!(v, 1.0);
        let h2 = Signature::isotropic(2).unwrap();
        let o2 = RadialPoint::new(vec![0.0], 0.0).unwrap();
        let v = comparator_value(Comparator::Isotropic, &h2, &o2, 2.0).unwrap();
        assert!((v - 2.0f64.powi(-3)).abs() < 1e-15);
        let v = comparator_value(Comparator::GaussianUpper, &h2, &o2, 2.0).unwrap();
        assert!((v - 2.0f64.powi(-3)).abs() < 1e-15);
        let ob = RadialPoint::new(vec![0.0, 0.0], 0.0).unwrap();
        let v = comparator_value(Comparator::AngleUniform, &two_block(), &ob, 4.0).unwrap();
        assert!((v - 4.0f64.powi(-3)).abs() < 1e-15);
    }

    #[test]
    fn angle_uniform_stays_within_sqrt_two_of_the_h11_envelope() {
        // On H(1,1) the bracket power k_l - 1 vanishes and the remaining
        // square-root factors differ only through eps_*^2 + 1/eps_* versus
        // theta/sin(theta), whose ratio lies in (1, 2].
        let sig = h11();
        for &theta in &[0.3, 1.2, 2.0, 2.9] {
            for &scale in &[0.4, 2.0, 11.0] {
                let r = scale;
                let t = geometry::mu(theta).unwrap() * r * r;
                let p = RadialPoint::new(vec![r], t).unwrap();
                let au = comparator_ln(Comparator::AngleUniform, &sig, &p, 1.0).unwrap();
                let hh = comparator_ln(Comparator::H11, &sig, &p, 1.0).unwrap();
                assert!(
                    (au - hh).abs() <= 0.5 * std::f64::consts::LN_2 + 1e-12,
                    "theta {theta}, scale {scale}: ln gap {}",
                    au - hh
                );
            }
        }
    }

    #[test]
    fn isotropic_envelope_matches_the_displayed_formula() {
        let sig = Signature::isotropic(2).unwrap();
        let p = RadialPoint::new(vec![3.0], 7.0).unwrap();
        let h: f64 = 0.7;
        let geo = geometry::solve_geodesic(&sig, &p).unwrap();
        let d = geo.d_sq.sqrt();
        let z = p.r_total();
        let manual = h.powi(-3)
            * (-d * d / (4.0 * h)).exp()
            * (1.0 + d / h.sqrt()).powi(2)
            * (1.0 + z * d / h).powf(-1.5);
        let v = comparator_value(Comparator::Isotropic, &sig, &p, h).unwrap();
        assert!((v / manual - 1.0).abs() < 1e-13);
    }

    #[test]
    fn comparator_preconditions_are_enforced() {
        let p2 = RadialPoint::new(vec![1.0, 0.5], 1.0).unwrap();
        assert!(matches!(
            comparator_value(Comparator::Isotropic, &two_block(), &p2, 1.0),
            Err(Error::Domain(_))
        ));
        let h2 = Signature::isotropic(2).unwrap();
        let p1 = RadialPoint::new(vec![1.0], 1.0).unwrap();
        assert!(matches!(
            comparator_value(Comparator::H11, &h2, &p1, 1.0),
            Err(Error::Domain(_))
        ));
        for bad in [0.0, 4.0, -1.0] {
            assert!(matches!(
                comparator_value(
                    Comparator::GaussianLower { varpi: bad },
                    &h11(),
                    &RadialPoint::new(vec![1.0], 0.2).unwrap(),
                    1.0
                ),
                Err(Error::Domain(_))
            ));
        }
        assert!(matches!(
            comparator_value(
                Comparator::TransformEnvelope { power: 1 },
                &h11(),
                &RadialPoint::new(vec![1.0], 0.2).unwrap(),
                1.0
            ),
            Err(Error::Domain(_))
        ));
        // Cut-locus point: eps_* = 0 excludes the angle-uniform envelope.
        let cut = RadialPoint::new(vec![1.0, 0.0], 10.0).unwrap();
        assert!(matches!(
            comparator_value(Comparator::AngleUniform, &two_block(), &cut, 1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn standard_grids_have_two_hundred_entries_on_the_geodesic_locus() {
        for sig in [h11(), two_block()] {
            let grid = standard_grid(&sig).unwrap();
            assert_eq!(grid.entries.len(), 200);
            let mut max_exponent: f64 = 0.0;
            for (p, h) in &grid.entries {
                let geo = geometry::solve_geodesic(&sig, p).unwrap();
                let e = geo.d_sq / (4.0 * h);
                assert!(e <= LN_RATIO_CAP * (1.0 + 1e-9), "exponent {e} over cap");
                max_exponent = max_exponent.max(e);
            }
            assert!(
                max_exponent > 0.99 * LN_RATIO_CAP,
                "grid never approaches the cap: {max_exponent}"
            );
        }
    }

    #[test]
    fn grid_angles_are_recovered_by_the_geodesic_solve() {
        let sig = two_block();
        let grid = build_grid(&sig, &[0.8, 3.04], &[1.0], &[0.5]).unwrap();
        assert_eq!(grid.entries.len(), 4);
        for (i, (p, _)) in grid.entries.iter().enumerate() {
            let geo = geometry::solve_geodesic(&sig, p).unwrap();
            let expect = if i < 2 { 0.8 } else { 3.04 };
            assert!(
                (geo.theta - expect).abs() < 1e-9,
                "entry {i}: theta {} vs {expect}",
                geo.theta
            );
        }
    }

    #[test]
    fn h11_envelope_spread_stays_under_fifty() {
        let sig = h11();
        let grid = standard_grid(&sig).unwrap();
        let report = sandwich_sweep(Comparator::H11, &sig, &grid).unwrap();
        assert!(report.skipped.is_empty(), "skipped: {:?}", report.skipped);
        assert_eq!(report.samples.len(), 200);
        assert!(report.ratio_min > 0.0 && report.ratio_max.is_finite());
        assert_eq!(report.samples[report.argmin].ratio, report.ratio_min);
        assert_eq!(report.samples[report.argmax].ratio, report.ratio_max);
        assert!(report.spread() < 50.0, "spread {}", report.spread());
    }

    #[test]
    fn isotropic_envelope_has_finite_spread_on_h2() {
        let sig = Signature::isotropic(2).unwrap();
        let grid = standard_grid(&sig).unwrap();
        let report = sandwich_sweep(Comparator::Isotropic, &sig, &grid).unwrap();
        assert!(report.skipped.is_empty(), "skipped: {:?}", report.skipped);
        assert!(report.ratio_min > 0.0);
        assert!(report.spread().is_finite());
    }

    #[test]
    fn gaussian_envelopes_bound_the_kernel_one_sidedly() {
        let sig = h11();
        let grid = standard_grid(&sig).unwrap();
        let upper = sandwich_sweep(Comparator::GaussianUpper, &sig, &grid).unwrap();
        assert!(upper.skipped.is_empty());
        assert!(upper.ratio_max.is_finite() && upper.ratio_min > 0.0);
        let lower = sandwich_sweep(
            Comparator::GaussianLower {
                varpi: DEFAULT_VARPI,
            },
            &sig,
            &grid,
        )
        .unwrap();
        assert!(lower.skipped.is_empty());
        assert!(lower.ratio_min > 0.0);
        // The lower envelope decays strictly faster than the kernel, so its
        // ratio grows to e^{d^2/(4h) * varpi/(4-varpi) / ...}; the grid cap
        // keeps that representable with ~e^{150} headroom.
        assert!(lower.ratio_max.is_finite() && lower.ratio_max < 1e270);
    }

    #[test]
    fn angle_uniform_envelope_sandwiches_the_two_block_kernel() {
        let sig = two_block();
        let grid = standard_grid(&sig).unwrap();
        let report = sandwich_sweep(Comparator::AngleUniform, &sig, &grid).unwrap();
        assert!(report.skipped.is_empty(), "skipped: {:?}", report.skipped);
        assert_eq!(report.samples.len(), 200);
        assert!(report.ratio_min > 0.0 && report.spread().is_finite());
    }

    #[test]
    fn grid_refinement_only_widens_the_observed_constants() {
        let sig = h11();
        let coarse = build_grid(&sig, &[0.8, 2.4], &[0.5, 2.0], &[0.1, 0.45, 0.92]).unwrap();
        let fine = build_grid(
            &sig,
            &[0.8, 2.4],
            &[0.5, 2.0],
            &[0.1, 0.25, 0.45, 0.7, 0.92],
        )
        .unwrap();
        let rc = sandwich_sweep(Comparator::H11, &sig, &coarse).unwrap();
        let rf = sandwich_sweep(Comparator::H11, &sig, &fine).unwrap();
        assert!(rf.ratio_min <= rc.ratio_min * (1.0 + 1e-12));
        assert!(rf.ratio_max >= rc.ratio_max * (1.0 - 1e-12));
    }

    #[test]
    fn envelope_ratios_are_dilation_invariant() {
        let sig = two_block();
        let base = build_grid(&sig, &[0.8, 2.4], &[1.0], &[0.3, 0.9]).unwrap();
        let dilated = GridSpec {
            entries: base
                .entries
                .iter()
                .map(|(p, h)| (p.dilate(2.0).unwrap(), 4.0 * h))
                .collect(),
        };
        for kind in [
            Comparator::AngleUniform,
            Comparator::GaussianUpper,
            Comparator::GaussianLower {
                varpi: DEFAULT_VARPI,
            },
        ] {
            let r1 = sandwich_sweep(kind, &sig, &base).unwrap();
            let r4 = sandwich_sweep(kind, &sig, &dilated).unwrap();
            assert_eq!(r1.samples.len(), r4.samples.len());
            for (s1, s4) in r1.samples.iter().zip(&r4.samples) {
                assert!(
                    (s1.ratio / s4.ratio - 1.0).abs() < 1e-6,
                    "{kind:?}: {} vs {}",
                    s1.ratio,
                    s4.ratio
                );
            }
        }
    }

    #[test]
    fn axis_points_have_vanishing_horizontal_gradient() {
        let sig = h11();
        let fp = FullPoint::new(vec![vec![(0.0, 0.0)]], 2.0).unwrap();
        let rep = grad_log_check(&sig, &fp, 1.0).unwrap();
        assert!(rep.grad_norm <= 1e-6, "grad norm {}", rep.grad_norm);
        assert!(rep.ok);
        let sig = two_block();
        let fp = FullPoint::new(vec![vec![(0.0, 0.0)], vec![(0.0, 0.0)]], 1.5).unwrap();
        let rep = grad_log_check(&sig, &fp, 2.0).unwrap();
        assert!(rep.grad_norm <= 1e-6, "grad norm {}", rep.grad_norm);
        assert!(rep.ok);
    }

    #[test]
    fn gradient_bound_holds_at_generic_points() {
        let sig = h11();
        for (coords, t, h) in [
            ((0.7, -0.3), 0.9, 1.0),
            ((2.0, 1.0), -3.0, 1.0),
            ((0.4, 0.1), 0.05, 4.0),
            ((1.3, 2.1), 6.0, 0.25),
        ] {
            let fp = FullPoint::new(vec![vec![coords]], t).unwrap();
            let rep = grad_log_check(&sig, &fp, h).unwrap();
            assert!(
                rep.ok,
                "at {coords:?}, t = {t}, h = {h}: |grad| = {} > bound {}",
                rep.grad_norm, rep.bound
            );
            assert!(rep.grad_norm > 0.0);
        }
        let sig = two_block();
        let fp = FullPoint::new(vec![vec![(0.9, 0.2)], vec![(-0.5, 1.1)]], 1.7).unwrap();
        let rep = grad_log_check(&sig, &fp, 1.0).unwrap();
        assert!(rep.ok, "|grad| = {} > bound {}", rep.grad_norm, rep.bound);
    }

    #[test]
    fn origin_is_rejected_by_the_gradient_check() {
        let sig = h11();
        let fp = FullPoint::new(vec![vec![(0.0, 0.0)]], 0.0).unwrap();
        assert!(matches!(
            grad_log_check(&sig, &fp, 1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn mixed_derivative_routes_agree() {
        let sig = h11();
        let fp = FullPoint::new(vec![vec![(0.8, -0.5)]], 0.7).unwrap();
        let rep = mixed_derivative_check(&sig, &fp).unwrap();
        assert!(
            rep.rel_err <= 1e-5,
            "H(1,1): quad {} vs fd {} (rel {})",
            rep.quadrature,
            rep.finite_difference,
            rep.rel_err
        );
        let sig = two_block();
        let fp = FullPoint::new(vec![vec![(1.1, 0.4)], vec![(0.3, -0.6)]], -0.9).unwrap();
        let rep = mixed_derivative_check(&sig, &fp).unwrap();
        assert!(
            rep.rel_err <= 1e-5,
            "two-block: quad {} vs fd {} (rel {})",
            rep.quadrature,
            rep.finite_difference,
            rep.rel_err
        );
    }

    #[test]
    fn transform_envelope_matches_the_closed_form_at_zero() {
        let s_grid: Vec<f64> = (-20..=20).map(|i| f64::from(i) * 0.5).collect();
        let report = transform_envelope_check(2, &s_grid).unwrap();
        assert!(report.skipped.is_empty());
        let at_zero = report
            .samples
            .iter()
            .find(|s| s.coords[0] == 0.0)
            .expect("grid contains s = 0");
        assert!((at_zero.ratio - PI * PI / 2.0).abs() < 1e-12);
        // Even in s.
        for s in &report.samples {
            let neg = report
                .samples
                .iter()
                .find(|m| m.coords[0] == -s.coords[0])
                .unwrap();
            assert!((s.ratio - neg.ratio).abs() <= 1e-12 * s.ratio.abs());
        }
        assert!(matches!(
            transform_envelope_check(1, &s_grid),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn transform_envelope_spread_is_small_for_n_four() {
        let s_grid: Vec<f64> = (0..=40).map(|i| f64::from(i) * 0.25).collect();
        let report = transform_envelope_check(4, &s_grid).unwrap();
        assert!(report.skipped.is_empty());
        assert!(report.spread() < 20.0, "spread {}", report.spread());
    }
}

