//! Leading-order behaviour of the kernel: classification of the
//! large-distance regimes, their matched leading-term formulas, the
//! cut-locus limit form, and the small-time expansion obtained from them by
//! dilation scaling.
//!
//! Three regimes cover the large-distance behaviour.  Away from the cut
//! locus (`|theta| <= theta0 < pi`) the kernel follows a stationary-phase
//! leading term.  Near the cut locus the angle defect `epsilon = pi -
//! |theta|` is small, and the behaviour is governed by the saddle mass
//! `D1 + D2 = -Phi''(0) epsilon^2 / 2`: when it is large the stationary
//! point still dominates; when it stays bounded the last block's radial
//! direction degenerates and a Bessel-smoothed Gaussian factor replaces the
//! plain saddle-point width.

use std::f64::consts::{LN_2, PI};

use statrs::function::gamma::ln_gamma;

use crate::bessel;
use crate::error::{Error, Result};
use crate::geometry::{self, Branch, GeodesicData};
use crate::group::{RadialPoint, Signature};
use crate::phase::{self, PhaseFrame};
use crate::quad;

// ---------------------------------------------------------------------------
// Regime classification.
// ---------------------------------------------------------------------------

/// Configurable regime thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// Angle cutoff of the bounded-angle regime; admissible in [pi/2, pi).
    /// Raising it widens the regime at the price of a larger (unquantified)
    /// remainder constant.
    pub theta0: f64,
    /// Box size of the bounded-saddle regime, `D1 + D2 <= gamma0`; must be
    /// >= 1.  The bounded-saddle formula holds for any fixed box, again
    /// with box-dependent constants.
    pub gamma0: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            theta0: 0.75 * PI,
            gamma0: 4.0,
        }
    }
}

impl Thresholds {
    fn validate(&self) -> Result<()> {
        if !(self.theta0 >= 0.5 * PI && self.theta0 < PI) {
            return Err(Error::Domain(format!(
                "theta0 must lie in [pi/2, pi), got {}",
                self.theta0
            )));
        }
        if !self.gamma0.is_finite() || self.gamma0 < 1.0 {
            return Err(Error::Domain(format!(
                "gamma0 must be a finite value >= 1, got {}",
                self.gamma0
            )));
        }
        Ok(())
    }
}

/// Which leading-term formula serves the point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeTag {
    /// `|theta| <= theta0`: plain stationary phase.
    BoundedTheta,
    /// `epsilon <= eps0` with a large saddle mass: stationary phase with
    /// the angle-defect factorization.
    SmallEpsLargeD,
    /// `epsilon <= eps0` with `D1 + D2 <= gamma0`: the Bessel-smoothed
    /// near-cut-locus form.
    SmallEpsBoundedD,
}

/// Classification result: the tag plus the thresholds it was made under.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regime {
    pub tag: RegimeTag,
    pub theta0: f64,
    /// Angle-defect threshold, fixed by the group (see the phase frame).
    pub eps0: f64,
    pub gamma0: f64,
    /// Set when `gamma0 < D1 + D2 < eps0^{-3}`: the large-saddle formula is
    /// applied below its certified range.  Empirically it degrades
    /// gracefully there, but no remainder bound is asserted.
    pub gap_warning: bool,
}

/// Assigns the point to a regime.
///
/// Requires `d^2 >= 1` (the formulas are asymptotic in the distance).
/// Overlaps are resolved by fixed priority: the small-defect tags win over
/// `BoundedTheta`, and `SmallEpsBoundedD` wins over `SmallEpsLargeD` only
/// below the certified large-saddle range.  Points with `|theta| > theta0`
/// and `epsilon > eps0` sit between the regimes; they are reported as a
/// regime error (raising `theta0`, which may be any value below pi, covers
/// them).
pub fn classify(geo: &GeodesicData, frame: &PhaseFrame, thresholds: Thresholds) -> Result<Regime> {
    thresholds.validate()?;
    check_frame(geo, frame)?;
    if !(geo.d_sq >= 1.0) {
        return Err(Error::Domain(format!(
            "regime classification requires d^2 >= 1, got d^2 = {}",
            geo.d_sq
        )));
    }
    let eps0 = frame.eps0;
    if frame.has_small_eps() {
        let se = frame.small_eps()?;
        let dd = se.d1 + se.d2;
        let large_floor = eps0.powi(-3);
        let (tag, gap_warning) = if dd >= large_floor {
            (RegimeTag::SmallEpsLargeD, false)
        } else if dd <= thresholds.gamma0 {
            (RegimeTag::SmallEpsBoundedD, false)
        } else {
            (RegimeTag::SmallEpsLargeD, true)
        };
        return Ok(Regime {
            tag,
            theta0: thresholds.theta0,
            eps0,
            gamma0: thresholds.gamma0,
            gap_warning,
        });
    }
    if geo.theta.abs() <= thresholds.theta0 {
        return Ok(Regime {
            tag: RegimeTag::BoundedTheta,
            theta0: thresholds.theta0,
            eps0,
            gamma0: thresholds.gamma0,
            gap_warning: false,
        });
    }
    Err(Error::Regime(format!(
        "theta = {} exceeds theta0 = {} while epsilon = {} exceeds eps0 = {}; \
         no regime covers the point at these thresholds (any theta0 < pi is \
         admissible)",
        geo.theta, thresholds.theta0, frame.epsilon, eps0
    )))
}

// ---------------------------------------------------------------------------
// Shared factors.
// ---------------------------------------------------------------------------

/// A positive leading-term value.  `value` underflows to 0.0 once the
/// exponent drops below about -745; `ln_value` stays exact, so ratios
/// against kernel values should be formed in logarithms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeadingTerm {
    pub value: f64,
    pub ln_value: f64,
}

impl LeadingTerm {
    fn from_ln(ln_value: f64) -> Self {
        Self {
            value: ln_value.exp(),
            ln_value,
        }
    }
}

/// `ln(x / sin x)` for `0 <= x < pi`, with a series branch at the origin
/// (`x/sin x = 1 + x^2/6 + 7x^4/360 + 31x^6/15120 + O(x^8)`).
fn x_over_sin_ln(x: f64) -> f64 {
    debug_assert!((0.0..PI).contains(&x));
    if x < 1e-2 {
        let x2 = x * x;
        (x2 / 6.0 + 7.0 * x2 * x2 / 360.0 + 31.0 * x2 * x2 * x2 / 15120.0).ln_1p()
    } else {
        (x / x.sin()).ln()
    }
}

/// `ln prod_j (a_j theta / sin(a_j theta))^{k_j}` over all blocks; needs
/// `0 <= theta < pi`.
fn angle_factor_ln(sig: &Signature, theta: f64) -> f64 {
    sig.iter()
        .map(|(kj, aj)| f64::from(kj) * x_over_sin_ln(aj * theta))
        .sum()
}

/// `ln prod_{j<l} (a_j pi / sin(a_j pi))^{k_j}`: the angle factor of the
/// blocks that stay active at the cut locus.
fn cut_angle_factor_ln(sig: &Signature) -> f64 {
    let l = sig.blocks();
    sig.iter()
        .take(l - 1)
        .map(|(kj, aj)| f64::from(kj) * x_over_sin_ln(aj * PI))
        .sum()
}

/// `ln [ 1 / (4 (4 pi)^{n + 1/2}) ]`: the stationary-phase prefactor.
fn ln_pref_half(n: u32) -> f64 {
    -(2.0 * LN_2 + (f64::from(n) + 0.5) * (4.0 * PI).ln())
}

/// `ln [ 1 / (2 (4 pi)^{n + 1}) ]`: the raw integral prefactor.
fn ln_pref_full(n: u32) -> f64 {
    -(LN_2 + (f64::from(n) + 1.0) * (4.0 * PI).ln())
}

/// The leading functions take the geodesic data and the phase frame as
/// separate arguments; reject pairs that were not built from one another.
fn check_frame(geo: &GeodesicData, frame: &PhaseFrame) -> Result<()> {
    if frame.theta != geo.theta {
        return Err(Error::Domain(format!(
            "phase frame (theta = {}) does not match the geodesic data (theta = {})",
            frame.theta, geo.theta
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Bounded-angle regime.
// ---------------------------------------------------------------------------

/// Stationary-phase leading term away from the cut locus:
///
/// `e^{-d^2/4} / (4 (4 pi)^{n+1/2}) * (-Phi''(0)/2)^{-1/2}
///  * prod_j (a_j theta / sin(a_j theta))^{k_j}`.
///
/// Requires an interior geodesic with `|theta| <= theta0`.  The relative
/// deviation from the kernel decays like `d^{-2}` along dilation rays.
pub fn leading_bounded_theta(
    sig: &Signature,
    p: &RadialPoint,
    geo: &GeodesicData,
    frame: &PhaseFrame,
    thresholds: Thresholds,
) -> Result<LeadingTerm> {
    thresholds.validate()?;
    sig.check_point(p)?;
    check_frame(geo, frame)?;
    if geo.branch != Branch::Interior {
        return Err(Error::Regime(
            "the bounded-angle leading term needs an interior geodesic; the point \
             lies on the cut locus"
                .to_string(),
        ));
    }
    if geo.theta.abs() > thresholds.theta0 {
        return Err(Error::Regime(format!(
            "the bounded-angle leading term requires |theta| <= theta0 = {}, got theta = {}",
            thresholds.theta0, geo.theta
        )));
    }
    let pp0 = frame.phi_pp0;
    if !(pp0 < 0.0) {
        return Err(Error::Domain(format!(
            "the second phase derivative must be negative away from the origin, got {pp0}"
        )));
    }
    let ln = -0.25 * geo.d_sq + ln_pref_half(sig.n()) - 0.5 * (-0.5 * pp0).ln()
        + angle_factor_ln(sig, geo.theta);
    Ok(LeadingTerm::from_ln(ln))
}

// ---------------------------------------------------------------------------
// Small defect, large saddle mass.
// ---------------------------------------------------------------------------

/// The two displayed shapes of the large-saddle leading term; they agree to
/// `O(epsilon)` relatively.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallEpsForms {
    /// `e^{-d^2/4} / (4 (4 pi)^{n+1/2}) * (D1+D2)^{-1/2} * epsilon
    ///  * prod_{j=1}^{l} (a_j theta / sin(a_j theta))^{k_j}`.
    pub primary: LeadingTerm,
    /// The same with the last block's angle factor replaced by its pole
    /// part: `epsilon (pi/epsilon)^{k_l} (D1+D2)^{-1/2}
    ///  * prod_{j<l} (a_j pi / sin(a_j pi))^{k_j}`.
    pub factored: LeadingTerm,
}

/// Leading term for a small angle defect with a large saddle mass
/// (`epsilon <= eps0`, `D1 + D2 > gamma0`; certified for
/// `D1 + D2 >= eps0^{-3}`, applied with a warning in between — see
/// [`classify`]).
pub fn leading_small_eps_large_d(
    sig: &Signature,
    p: &RadialPoint,
    geo: &GeodesicData,
    frame: &PhaseFrame,
    thresholds: Thresholds,
) -> Result<SmallEpsForms> {
    thresholds.validate()?;
    sig.check_point(p)?;
    check_frame(geo, frame)?;
    if !frame.has_small_eps() {
        return Err(Error::Regime(format!(
            "the large-saddle leading term requires epsilon <= eps0 = {}, got epsilon = {}",
            frame.eps0, frame.epsilon
        )));
    }
    let eps = frame.epsilon;
    if eps <= 0.0 {
        return Err(Error::Regime(
            "the large-saddle leading term requires epsilon > 0; the cut locus \
             itself belongs to the bounded-saddle regime"
                .to_string(),
        ));
    }
    let se = frame.small_eps()?;
    let dd = se.d1 + se.d2;
    if dd <= thresholds.gamma0 {
        return Err(Error::Regime(format!(
            "the large-saddle leading term requires D1 + D2 > gamma0 = {}, got {dd}; \
             use the bounded-saddle leading term",
            thresholds.gamma0
        )));
    }
    let base = -0.25 * geo.d_sq + ln_pref_half(sig.n()) + eps.ln() - 0.5 * dd.ln();
    let ln_primary = base + angle_factor_ln(sig, geo.theta);
    let ln_factored =
        base + f64::from(sig.k_last()) * (PI / eps).ln() + cut_angle_factor_ln(sig);
    Ok(SmallEpsForms {
        primary: LeadingTerm::from_ln(ln_primary),
        factored: LeadingTerm::from_ln(ln_factored),
    })
}

// ---------------------------------------------------------------------------
// Small defect, bounded saddle mass.
// ---------------------------------------------------------------------------

/// `int_0^inf rho^{kl-1} exp(-(rho - rho0)^2 / (2 v)) drho` for `v > 0`.
///
/// The integrand is a Gaussian of width `sqrt(v)` around `rho0` under a
/// polynomial weight; the domain is clipped where the weighted tail mass
/// drops below ~1e-60 relative so the panel scale always matches the
/// Gaussian width.
fn gaussian_rho_integral(kl: u32, rho0: f64, v: f64) -> Result<f64> {
    debug_assert!(kl >= 1 && v > 0.0 && rho0 >= 0.0);
    let m = (kl - 1) as i32;
    let sigma = v.sqrt();
    let span = sigma * (16.0 + f64::from(kl));
    let lo = (rho0 - span).max(0.0);
    let up = rho0 + span;
    let f = |rho: f64| rho.powi(m) * (-(rho - rho0) * (rho - rho0) / (2.0 * v)).exp();
    let pts = quad::breakpoints(lo, up, &[rho0 - 3.0 * sigma, rho0, rho0 + 3.0 * sigma]);
    let q = quad::integrate(f, &pts, 1e-12, 0.0, 200_000);
    if !q.converged {
        return Err(Error::Accuracy {
            message: "the cut-locus Gaussian integral did not converge".to_string(),
            value: q.value,
            err_estimate: q.err,
        });
    }
    Ok(q.value)
}

/// Leading term for a small angle defect with a bounded saddle mass
/// (`epsilon <= eps0`, `D1 + D2 <= gamma0`):
///
/// `e^{-d^2/4} / (2 (4 pi)^{n+1}) * e^{-D1 + J*} * S_{k_l}
///  * epsilon (pi/epsilon)^{k_l} * prod_{j<l} (a_j pi / sin(a_j pi))^{k_j}`,
///
/// with the smoothed Bessel factor `S_{k_l} = V(k_l; D1, D2)`.  On the cut
/// locus itself (`epsilon = 0`) the product `epsilon^{1-k_l} S_{k_l}` is
/// evaluated in the blown-up variable `rho = s / epsilon`, whose limit is a
/// Gaussian-weighted power integral centered at `(|t| - t_cut)/4` with
/// variance `G3''(0)`; nothing is ever divided by `epsilon`.
pub fn leading_small_eps_bounded_d(
    sig: &Signature,
    p: &RadialPoint,
    geo: &GeodesicData,
    frame: &PhaseFrame,
    thresholds: Thresholds,
) -> Result<LeadingTerm> {
    thresholds.validate()?;
    sig.check_point(p)?;
    check_frame(geo, frame)?;
    if !frame.has_small_eps() {
        return Err(Error::Regime(format!(
            "the bounded-saddle leading term requires epsilon <= eps0 = {}, got epsilon = {}",
            frame.eps0, frame.epsilon
        )));
    }
    let se = frame.small_eps()?;
    let dd = se.d1 + se.d2;
    if dd > thresholds.gamma0 {
        return Err(Error::Regime(format!(
            "the bounded-saddle leading term requires D1 + D2 <= gamma0 = {}, got {dd}",
            thresholds.gamma0
        )));
    }
    let eps = frame.epsilon;
    let kl = sig.k_last();
    let base = -0.25 * geo.d_sq + ln_pref_full(sig.n()) + cut_angle_factor_ln(sig);
    let ln = if eps > 0.0 {
        let s = bessel::s_factor(kl, se.d1, se.d2)?;
        base + (-se.d1 + se.j_star) + s.ln() + eps.ln() + f64::from(kl) * (PI / eps).ln()
    } else {
        let v = se.g3_pp0;
        if !(v > 0.0) {
            return Err(Error::Domain(
                "the cut-locus form needs mass off the last block: with |z| = 0 the \
                 transverse Gaussian degenerates"
                    .to_string(),
            ));
        }
        let t_cut = geometry::cut_boundary(sig, p)?;
        let rho0 = 0.25 * (p.t().abs() - t_cut);
        let integral = gaussian_rho_integral(kl, rho0, v)?;
        base + f64::from(kl) * PI.ln() + 0.5 * PI.ln()
            - 0.5 * (0.5 * v).ln()
            - ln_gamma(f64::from(kl))
            + integral.ln()
    };
    Ok(LeadingTerm::from_ln(ln))
}

// ---------------------------------------------------------------------------
// Cut-locus display.
// ---------------------------------------------------------------------------

/// The cut-locus leading term in its direct display (for `r_l = 0`,
/// `|theta| = pi`, `|z| != 0`):
///
/// `pi^{k_l - n - 1/2} / (2^{2n+3} Gamma(k_l)) * (G3''(0)/2)^{-1/2}
///  * e^{-d^2/4} * prod_{j<l} (a_j pi / sin(a_j pi))^{k_j}
///  * int_0^inf rho^{k_l - 1}
///      exp(-(rho - (|t| - t_cut)/4)^2 / (2 G3''(0))) drho`.
///
/// Algebraically identical to [`leading_small_eps_bounded_d`] at
/// `epsilon = 0`; the two assemble their constants independently.
pub fn cut_locus_leading(sig: &Signature, p: &RadialPoint) -> Result<LeadingTerm> {
    sig.check_point(p)?;
    let l = sig.blocks();
    let rl = p.r()[l - 1];
    if rl != 0.0 {
        return Err(Error::Domain(format!(
            "the cut-locus display requires r_l = 0, got r_l = {rl}"
        )));
    }
    if p.r_total_sq() == 0.0 {
        return Err(Error::Domain(
            "the cut-locus display requires |z| != 0: on the axis the transverse \
             Gaussian degenerates"
                .to_string(),
        ));
    }
    let geo = geometry::solve_geodesic(sig, p)?;
    if geo.branch != Branch::CutLocus {
        return Err(Error::Domain(format!(
            "the point is not on the cut locus: |t| = {} lies below the boundary {}",
            p.t().abs(),
            geometry::cut_boundary(sig, p)?
        )));
    }
    let frame = phase::phase_frame(sig, p, &geo)?;
    let v = frame.small_eps()?.g3_pp0;
    let t_cut = geometry::cut_boundary(sig, p)?;
    let rho0 = 0.25 * (p.t().abs() - t_cut);
    let integral = gaussian_rho_integral(sig.k_last(), rho0, v)?;
    let n = f64::from(sig.n());
    let kl = f64::from(sig.k_last());
    let ln = (kl - n - 0.5) * PI.ln() - (2.0 * n + 3.0) * LN_2 - ln_gamma(kl)
        - 0.5 * (0.5 * v).ln()
        - 0.25 * geo.d_sq
        + cut_angle_factor_ln(sig)
        + integral.ln();
    Ok(LeadingTerm::from_ln(ln))
}

// ---------------------------------------------------------------------------
// Small time.
// ---------------------------------------------------------------------------

/// Which small-time expansion applies at the point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmallTimeCase {
    /// Interior geodesic: power `n + 1/2`.
    Interior,
    /// On the cut-locus boundary `|t| = t_cut > 0` with `r_l = 0`: power
    /// `n + (k_l + 1)/2`.
    CutBoundary,
    /// Beyond the boundary (`|t| > t_cut`, `r_l = 0`): power `n + k_l`.
    CutBeyond,
}

/// Small-time leading expression `value = coefficient * h^{-power_of_h} *
/// e^{-d^2/(4h)}` together with its pieces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallTimeRecord {
    pub value: f64,
    pub power_of_h: f64,
    pub coefficient: f64,
    pub case: SmallTimeCase,
}

/// Leading small-time behaviour of the kernel at time `h` (requires
/// `0 < h <= 1` and a point away from the origin).
///
/// The case follows the geodesic branch.  On the cut locus, the boundary
/// case is selected when `|t|` equals the boundary value within a relative
/// `1e-12` (the crossover region `|t| - t_cut = O(sqrt(h))` belongs to
/// neither pure case, so the split is a set-measure-zero classification,
/// exact for points constructed from the boundary formula).
pub fn small_time(sig: &Signature, p: &RadialPoint, h: f64) -> Result<SmallTimeRecord> {
    sig.check_point(p)?;
    if p.is_origin() {
        return Err(Error::Domain(
            "the small-time expansion needs a point away from the origin".to_string(),
        ));
    }
    if !h.is_finite() || !(h > 0.0 && h <= 1.0) {
        return Err(Error::Domain(format!(
            "the small-time expansion requires 0 < h <= 1, got h = {h}"
        )));
    }
    let geo = geometry::solve_geodesic(sig, p)?;
    let n = f64::from(sig.n());
    let kl = f64::from(sig.k_last());
    let (case, power, ln_coeff) = match geo.branch {
        Branch::Interior => {
            let frame = phase::phase_frame(sig, p, &geo)?;
            let pp0 = frame.phi_pp0;
            if !(pp0 < 0.0) {
                return Err(Error::Domain(format!(
                    "the second phase derivative must be negative away from the origin, got {pp0}"
                )));
            }
            let lc = ln_pref_half(sig.n()) - 0.5 * (-0.5 * pp0).ln()
                + angle_factor_ln(sig, geo.theta);
            (SmallTimeCase::Interior, n + 0.5, lc)
        }
        Branch::CutLocus => {
            let t_cut = geometry::cut_boundary(sig, p)?;
            let tt = p.t().abs();
            if t_cut > 0.0 && (tt - t_cut).abs() <= 1e-12 * t_cut.max(1.0) {
                // |t| on the boundary: the transverse Gaussian is centered
                // at the edge of the rho half-line and integrates to half
                // its mass, weighted by rho^{kl-1}.
                let frame = phase::phase_frame(sig, p, &geo)?;
                let v = frame.small_eps()?.g3_pp0;
                let mut lc = 0.5 * (kl - 3.0) * LN_2 + (kl + 0.5) * PI.ln()
                    - (n + 1.0) * (4.0 * PI).ln()
                    + ln_gamma(0.5 * kl)
                    - ln_gamma(kl)
                    + cut_angle_factor_ln(sig);
                if sig.k_last() > 1 {
                    lc += 0.5 * (kl - 1.0) * v.ln();
                }
                (SmallTimeCase::CutBoundary, n + 0.5 * (kl + 1.0), lc)
            } else {
                let mut lc = (1.0 - kl) * 2.0 * LN_2 + (kl + 1.0) * PI.ln()
                    - (n + 1.0) * (4.0 * PI).ln()
                    - ln_gamma(kl)
                    + cut_angle_factor_ln(sig);
                if sig.k_last() > 1 {
                    lc += (kl - 1.0) * (tt - t_cut).ln();
                }
                (SmallTimeCase::CutBeyond, n + kl, lc)
            }
        }
    };
    let ln_value = ln_coeff - power * h.ln() - 0.25 * geo.d_sq / h;
    Ok(SmallTimeRecord {
        value: ln_value.exp(),
        power_of_h: power,
        coefficient: ln_coeff.exp(),
        case,
    })
}
