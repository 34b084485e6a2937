//! Amplitude and phase of the heat-kernel integral, the shifted-contour
//! phase, and the small-`epsilon` decomposition used near the cut locus.
//!
//! The kernel at `h = 1` is
//!
//! ```text
//!   p(z, t) = 1/(2 (4 pi)^{n+1}) * int_R h(lambda) e^{phi(lambda)} dlambda,
//!   h(w)    = prod_j (a_j w / sinh(a_j w))^{k_j},
//!   phi(w)  = (1/4) (i w t - sum_j |z_j|^2 a_j w coth(a_j w)).
//! ```
//!
//! Shifting the contour to `Im lambda = theta` (the geodesic parameter)
//! turns the oscillatory integral into a Laplace-type one:
//! `Phi(s) = phi(s + i theta) - phi(i theta)` satisfies `Phi(0) = Phi'(0) =
//! 0`, `Re Phi <= 0`, and `phi(i theta) = -d^2/4`.
//!
//! Near the cut locus (`epsilon = pi - theta` small) the phase on the
//! shifted line decomposes through `G_1(xi) = xi cot xi`,
//! `G_2(xi) = pi (cot xi - 1/xi)`,
//! `G_3(xi) = -sum_{j<l} (r_j^2/4) G_1(a_j (pi - xi))`, and
//! `G = G_3 + (r_l^2/4)(G_2 - G_1)`, giving the frame quantities
//! `D_1 = (pi/4) r_l^2 / eps`, `D_2 = (1/2) G''(eps) eps^2`, and
//! `J* = G(0) - G(eps) + G'(eps) eps - (1/2) G''(eps) eps^2`.

use crate::error::{Error, Result};
use crate::geometry::{self, Branch, GeodesicData};
use crate::group::{RadialPoint, Signature};
use num_complex::Complex64;
use std::f64::consts::PI;

type C = Complex64;

/// Series half-width for the entire helpers (`h_1`, `h_2`, `G_1`, `G_2`,
/// `G_2'`, `q`); their closed forms lose ~2 digits here at worst.
const SERIES_CUT: f64 = 0.1;
/// `G_2''` and `G_2'''` subtract `2/x^3` and `6/x^4` against small values,
/// so their series cover a wider interval.
const SERIES_CUT_HIGH: f64 = 0.15;

// ---------------------------------------------------------------------------
// Entire building blocks (complex and real).
// ---------------------------------------------------------------------------

/// `h_1(w) = w / sinh(w)`, removable singularity at 0.
pub fn h1_c(w: C) -> C {
    if w.norm() < SERIES_CUT {
        let y = w * w;
        C::new(1.0, 0.0)
            + y * (C::new(-1.0 / 6.0, 0.0)
                + y * (C::new(7.0 / 360.0, 0.0)
                    + y * (C::new(-31.0 / 15120.0, 0.0)
                        + y * (C::new(127.0 / 604800.0, 0.0)
                            + y * (C::new(-73.0 / 3421440.0, 0.0)
                                + y * C::new(1414477.0 / 653837184000.0, 0.0))))))
    } else if w.re > 350.0 {
        // sinh(w) = e^w / 2 to relative error e^{-2 Re w}; the exact form
        // would overflow past Re w ~ 710 (and complex sinh produces inf*0
        // NaNs there), while e^{-w} just underflows gracefully.
        2.0 * w * (-w).exp()
    } else if w.re < -350.0 {
        -2.0 * w * w.exp()
    } else {
        w / w.sinh()
    }
}

/// `h_2(w) = w coth(w)`, removable singularity at 0.
pub fn h2_c(w: C) -> C {
    if w.norm() < SERIES_CUT {
        let y = w * w;
        C::new(1.0, 0.0)
            + y * (C::new(1.0 / 3.0, 0.0)
                + y * (C::new(-1.0 / 45.0, 0.0)
                    + y * (C::new(2.0 / 945.0, 0.0)
                        + y * (C::new(-1.0 / 4725.0, 0.0)
                            + y * (C::new(2.0 / 93555.0, 0.0)
                                + y * C::new(-1382.0 / 638512875.0, 0.0))))))
    } else if w.re.abs() > 350.0 {
        // coth(w) = sign(Re w) to absolute error ~ e^{-700}; the exact form
        // overflows past |Re w| ~ 710.
        if w.re > 0.0 {
            w
        } else {
            -w
        }
    } else {
        w * w.cosh() / w.sinh()
    }
}

/// Real `h_2(w) = w coth(w)`.
pub(crate) fn h2_r(w: f64) -> f64 {
    if w.abs() < SERIES_CUT {
        let y = w * w;
        1.0 + y * (1.0 / 3.0
            + y * (-1.0 / 45.0
                + y * (2.0 / 945.0
                    + y * (-1.0 / 4725.0
                        + y * (2.0 / 93555.0 + y * (-1382.0 / 638512875.0))))))
    } else if w.abs() > 350.0 {
        w.abs()
    } else {
        w * w.cosh() / w.sinh()
    }
}

/// `|h_1(xi + i eta)|^2 = (xi^2 + eta^2) / (sinh^2 xi + sin^2 eta)`.
pub fn h1_abs_sq(xi: f64, eta: f64) -> f64 {
    let sh = xi.sinh();
    let sn = eta.sin();
    (xi * xi + eta * eta) / (sh * sh + sn * sn)
}

/// `G_1(x) = x cot x` on `|x| < pi`.
pub(crate) fn g1_r(x: f64) -> f64 {
    debug_assert!(x.abs() < PI);
    if x.abs() < SERIES_CUT {
        let y = x * x;
        1.0 + y * (-1.0 / 3.0
            + y * (-1.0 / 45.0
                + y * (-2.0 / 945.0
                    + y * (-1.0 / 4725.0
                        + y * (-2.0 / 93555.0 + y * (-1382.0 / 638512875.0))))))
    } else {
        x * x.cos() / x.sin()
    }
}

fn g1_c(z: C) -> C {
    if z.norm() < SERIES_CUT {
        let y = z * z;
        C::new(1.0, 0.0)
            + y * (C::new(-1.0 / 3.0, 0.0)
                + y * (C::new(-1.0 / 45.0, 0.0)
                    + y * (C::new(-2.0 / 945.0, 0.0)
                        + y * (C::new(-1.0 / 4725.0, 0.0)
                            + y * (C::new(-2.0 / 93555.0, 0.0)
                                + y * C::new(-1382.0 / 638512875.0, 0.0))))))
    } else {
        z * z.cos() / z.sin()
    }
}

/// `G_2(x) = pi (cot x - 1/x)`, removable singularity at 0.
pub(crate) fn g2_r(x: f64) -> f64 {
    if x.abs() < SERIES_CUT {
        let y = x * x;
        PI * x
            * (-1.0 / 3.0
                + y * (-1.0 / 45.0
                    + y * (-2.0 / 945.0
                        + y * (-1.0 / 4725.0
                            + y * (-2.0 / 93555.0
                                + y * (-1382.0 / 638512875.0 + y * (-4.0 / 18243225.0)))))))
    } else {
        PI * (x.cos() / x.sin() - 1.0 / x)
    }
}

fn g2_c(z: C) -> C {
    if z.norm() < SERIES_CUT {
        let y = z * z;
        z * (C::new(-1.0 / 3.0, 0.0)
            + y * (C::new(-1.0 / 45.0, 0.0)
                + y * (C::new(-2.0 / 945.0, 0.0)
                    + y * (C::new(-1.0 / 4725.0, 0.0)
                        + y * (C::new(-2.0 / 93555.0, 0.0)
                            + y * (C::new(-1382.0 / 638512875.0, 0.0)
                                + y * C::new(-4.0 / 18243225.0, 0.0)))))))
            * PI
    } else {
        (z.cos() / z.sin() - C::new(1.0, 0.0) / z) * PI
    }
}

/// `G_2'(x) = pi (1/x^2 - 1/sin^2 x)`.
pub(crate) fn g2p_r(x: f64) -> f64 {
    if x.abs() < SERIES_CUT {
        let y = x * x;
        PI * (-1.0 / 3.0
            + y * (-1.0 / 15.0
                + y * (-2.0 / 189.0
                    + y * (-1.0 / 675.0
                        + y * (-2.0 / 10395.0
                            + y * (-1382.0 / 58046625.0 + y * (-4.0 / 1403325.0)))))))
    } else {
        let s = x.sin();
        PI * (1.0 / (x * x) - 1.0 / (s * s))
    }
}

/// `G_2''(x) = pi (2 cos x / sin^3 x - 2/x^3)`.
pub(crate) fn g2pp_r(x: f64) -> f64 {
    if x.abs() < SERIES_CUT_HIGH {
        let y = x * x;
        PI * x
            * (-2.0 / 15.0
                + y * (-8.0 / 189.0
                    + y * (-2.0 / 225.0
                        + y * (-16.0 / 10395.0
                            + y * (-2764.0 / 11609325.0
                                + y * (-16.0 / 467775.0 + y * (-7234.0 / 1550674125.0)))))))
    } else {
        let s = x.sin();
        PI * (2.0 * x.cos() / (s * s * s) - 2.0 / (x * x * x))
    }
}

/// `G_2'''(x) = pi (6/x^4 - 2 (1 + 2 cos^2 x) / sin^4 x)`.
pub(crate) fn g2ppp_r(x: f64) -> f64 {
    if x.abs() < SERIES_CUT_HIGH {
        let y = x * x;
        PI * (-2.0 / 15.0
            + y * (-8.0 / 63.0
                + y * (-2.0 / 45.0
                    + y * (-16.0 / 1485.0
                        + y * (-2764.0 / 1289925.0
                            + y * (-16.0 / 42525.0 + y * (-7234.0 / 119282625.0)))))))
    } else {
        let s = x.sin();
        let s2 = s * s;
        let c = x.cos();
        let x2 = x * x;
        PI * (6.0 / (x2 * x2) - 2.0 * (1.0 + 2.0 * c * c) / (s2 * s2))
    }
}

/// `q(w) = (1 - w cot w) / sin^2 w`; the second phase derivative on the
/// shifted contour is `Phi''(0) = -sum_j (a_j^2 r_j^2 / 2) q(a_j theta)`.
pub(crate) fn q_r(w: f64) -> f64 {
    debug_assert!(w.abs() < PI);
    if w.abs() < SERIES_CUT {
        let y = w * w;
        1.0 / 3.0
            + y * (2.0 / 15.0
                + y * (2.0 / 63.0
                    + y * (4.0 / 675.0
                        + y * (2.0 / 2079.0
                            + y * (2764.0 / 19348875.0 + y * (4.0 / 200475.0))))))
    } else {
        let s = w.sin();
        (1.0 - g1_r(w)) / (s * s)
    }
}

// ---------------------------------------------------------------------------
// Amplitude and phase.
// ---------------------------------------------------------------------------

/// Amplitude `h(w) = prod_j h_1(a_j w)^{k_j}`; requires `|Im w| < pi`
/// (the first pole of `h_1(a_l w) = h_1(w)` sits at `w = i pi`).
pub fn amplitude(sig: &Signature, w: C) -> Result<C> {
    if w.im.abs() >= PI {
        return Err(Error::Domain(format!(
            "amplitude requires |Im w| < pi, got Im w = {}",
            w.im
        )));
    }
    Ok(amplitude_unchecked(sig, w))
}

pub(crate) fn amplitude_unchecked(sig: &Signature, w: C) -> C {
    let mut out = C::new(1.0, 0.0);
    for (kj, aj) in sig.iter() {
        out *= h1_c(w * aj).powi(kj as i32);
    }
    out
}

/// Phase `phi(w) = (1/4)(i w t - sum_j r_j^2 h_2(a_j w))`, with blocks of
/// zero radius skipped (their term vanishes identically, and skipping them
/// keeps `phi` finite at `Im w = pi` on the cut locus).  Requires
/// `|Im(a_j w)| < pi` for every block with `r_j > 0`.
pub fn phi(sig: &Signature, p: &RadialPoint, w: C) -> Result<C> {
    sig.check_point(p)?;
    for ((_, aj), &rj) in sig.iter().zip(p.r()) {
        if rj > 0.0 && (aj * w.im).abs() >= PI {
            return Err(Error::Domain(format!(
                "phi requires |Im(a_j w)| < pi on active blocks; block with a_j = {aj} fails at Im w = {}",
                w.im
            )));
        }
    }
    Ok(phi_unchecked(sig, p, w))
}

pub(crate) fn phi_unchecked(sig: &Signature, p: &RadialPoint, w: C) -> C {
    let mut s = C::new(0.0, 0.0);
    for ((_, aj), &rj) in sig.iter().zip(p.r()) {
        if rj > 0.0 {
            s += h2_c(w * aj) * (rj * rj);
        }
    }
    (C::i() * w * p.t() - s) * 0.25
}

/// Shifted phase `Phi(s) = phi(s + i theta) - phi(i theta)` for real `s`,
/// on the stationary contour of an interior point.
pub fn phi_shifted(sig: &Signature, p: &RadialPoint, geo: &GeodesicData, s: f64) -> Result<C> {
    if geo.branch != Branch::Interior {
        return Err(Error::Regime(
            "shifted phase requires an interior geodesic parameter (theta < pi)".into(),
        ));
    }
    let q = p.abs_t();
    let phi_ith = phi(sig, &q, C::new(0.0, geo.theta))?;
    Ok(phi_unchecked(sig, &q, C::new(s, geo.theta)) - phi_ith)
}

/// Closed form of `Re Phi(s)` on the shifted contour:
/// `-sum_j (r_j^2/4) [sinh^2(a_j s) / (sinh^2(a_j s) + sin^2(a_j theta))]
///  (a_j s coth(a_j s) - a_j theta cot(a_j theta))`.
pub fn re_phi_closed(sig: &Signature, p: &RadialPoint, geo: &GeodesicData, s: f64) -> Result<f64> {
    if geo.branch != Branch::Interior {
        return Err(Error::Regime(
            "closed-form Re Phi requires an interior geodesic parameter".into(),
        ));
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    let theta = geo.theta;
    let mut total = 0.0;
    for ((_, aj), &rj) in sig.iter().zip(p.r()) {
        if rj == 0.0 {
            continue;
        }
        let sh = (aj * s).sinh();
        let sn = (aj * theta).sin();
        let weight = sh * sh / (sh * sh + sn * sn);
        total -= 0.25 * rj * rj * weight * (h2_r(aj * s) - g1_r(aj * theta));
    }
    Ok(total)
}

/// `Phi''(0) = -sum_j (a_j^2 r_j^2 / 2) q(a_j theta)` on the shifted
/// contour (at `theta = 0` this is `-sum_j a_j^2 r_j^2 / 6`).
pub fn phi_pp0(sig: &Signature, p: &RadialPoint, theta: f64) -> f64 {
    let mut s = 0.0;
    for ((_, aj), &rj) in sig.iter().zip(p.r()) {
        if rj > 0.0 {
            s -= 0.5 * aj * aj * rj * rj * q_r(aj * theta);
        }
    }
    s
}

// ---------------------------------------------------------------------------
// G-decomposition near the cut locus.
// ---------------------------------------------------------------------------

/// Radius of the disc on which the `G`-family is analytic:
/// `min(1, pi (1 - a_{l-1}) / a_{l-1})` (just `1` for isotropic groups).
/// The second entry is where `G_1(a_{l-1}(pi - xi))` first hits a pole.
pub fn analyticity_radius(sig: &Signature) -> f64 {
    let l = sig.blocks();
    if l == 1 {
        1.0
    } else {
        let a_prev = sig.a()[l - 2];
        (PI * (1.0 - a_prev) / a_prev).min(1.0)
    }
}

/// Default small-`epsilon` threshold: one sixteenth of the analyticity
/// radius of the `G`-family.
pub fn eps0(sig: &Signature) -> f64 {
    analyticity_radius(sig) / 16.0
}

/// Values and derivatives of the `G`-decomposition at a real `xi`.
#[derive(Debug, Clone, PartialEq)]
pub struct GRecord {
    /// `G_1(xi) = xi cot xi`.
    pub g1: f64,
    /// `G_2(xi) = pi (cot xi - 1/xi)`.
    pub g2: f64,
    /// `G_3(xi) = -sum_{j<l} (r_j^2/4) G_1(a_j (pi - xi))`.
    pub g3: f64,
    /// `G = G_3 + (r_l^2/4)(G_2 - G_1)`.
    pub g: f64,
    pub gp: f64,
    pub gpp: f64,
    pub gppp: f64,
}

fn check_disc(sig: &Signature, norm: f64, what: &str) -> Result<()> {
    let disc = analyticity_radius(sig);
    if norm >= disc {
        return Err(Error::Domain(format!(
            "{what} requires |xi| < {disc} (analyticity radius), got |xi| = {norm}"
        )));
    }
    Ok(())
}

/// Evaluates the `G`-family and its first three derivatives at real `xi`
/// inside the analyticity disc.
///
/// Uses `G_1' = -mu`, `G_1'' = -mu'`, `G_1''' = -mu''` and the closed forms
/// of the `G_2` derivatives; no finite differencing is involved.
pub fn g_family(sig: &Signature, p: &RadialPoint, xi: f64) -> Result<GRecord> {
    sig.check_point(p)?;
    check_disc(sig, xi.abs(), "g_family")?;
    let l = sig.blocks();
    let r = p.r();
    let rl2 = r[l - 1] * r[l - 1];

    let (mut g3, mut g3p, mut g3pp, mut g3ppp) = (0.0, 0.0, 0.0, 0.0);
    for (j, (_, aj)) in sig.iter().enumerate() {
        if j + 1 == l || r[j] == 0.0 {
            continue;
        }
        let c = 0.25 * r[j] * r[j];
        let arg = aj * (PI - xi);
        g3 -= c * g1_r(arg);
        // d/dxi G_1(a (pi - xi)) = -a G_1'(arg) = a mu(arg), etc.
        g3p -= c * aj * geometry::mu_raw(arg);
        g3pp += c * aj * aj * geometry::mu_prime_raw(arg);
        g3ppp -= c * aj * aj * aj * geometry::mu_pp_raw(arg);
    }

    let g1 = g1_r(xi);
    let g2 = g2_r(xi);
    let quarter_rl2 = 0.25 * rl2;
    Ok(GRecord {
        g1,
        g2,
        g3,
        g: g3 + quarter_rl2 * (g2 - g1),
        gp: g3p + quarter_rl2 * (g2p_r(xi) + geometry::mu_raw(xi)),
        gpp: g3pp + quarter_rl2 * (g2pp_r(xi) + geometry::mu_prime_raw(xi)),
        gppp: g3ppp + quarter_rl2 * (g2ppp_r(xi) + geometry::mu_pp_raw(xi)),
    })
}

/// `G` at a complex argument inside the analyticity disc (value only).
pub fn g_complex(sig: &Signature, p: &RadialPoint, z: C) -> Result<C> {
    sig.check_point(p)?;
    check_disc(sig, z.norm(), "g_complex")?;
    let l = sig.blocks();
    let r = p.r();
    let rl2 = r[l - 1] * r[l - 1];

    let mut g3 = C::new(0.0, 0.0);
    for (j, (_, aj)) in sig.iter().enumerate() {
        if j + 1 == l || r[j] == 0.0 {
            continue;
        }
        g3 -= g1_c((C::new(PI, 0.0) - z) * aj) * (0.25 * r[j] * r[j]);
    }
    Ok(g3 + (g2_c(z) - g1_c(z)) * (0.25 * rl2))
}

/// Cubic-and-higher remainder of `G` along the vertical line through
/// `eps`: `K(u) = G(eps + iu) - G(eps) - G'(eps)(iu) - (1/2) G''(eps)(iu)^2`.
/// Its third derivative at 0 is `-i G'''(eps)`.
pub fn k_remainder(sig: &Signature, p: &RadialPoint, eps: f64, u: f64) -> Result<C> {
    let z = C::new(eps, u);
    check_disc(sig, z.norm(), "k_remainder")?;
    let g = g_family(sig, p, eps)?;
    let iu = C::new(0.0, u);
    Ok(g_complex(sig, p, z)? - g.g - g.gp * iu - 0.5 * g.gpp * iu * iu)
}

// ---------------------------------------------------------------------------
// Reduced amplitude for k_l = 1.
// ---------------------------------------------------------------------------

/// `w / sin w` (entire in the strip; zeros of `sin` lie on the real axis).
fn w_over_sin_c(w: C) -> C {
    // w / sin w = (iw) / sinh(iw)
    h1_c(C::i() * w)
}

/// Reduced amplitude for groups with `k_l = 1`:
/// `s(xi) = (xi/sin xi)(1 - xi/pi) prod_{j<l} [a_j(pi-xi) / sin(a_j(pi-xi))]^{k_j}`.
/// It satisfies `h(lambda + i theta) = (pi/xi) s(xi)` at `xi = eps + i lambda`
/// and stays bounded below on the real interval `[0, 1/16]`.
pub fn s_reduced(sig: &Signature, xi: C) -> Result<C> {
    if sig.k_last() != 1 {
        return Err(Error::Domain(format!(
            "reduced amplitude requires k_l = 1, got k_l = {}",
            sig.k_last()
        )));
    }
    check_disc(sig, xi.re.abs(), "s_reduced (real part)")?;
    let l = sig.blocks();
    let mut out = w_over_sin_c(xi) * (C::new(1.0, 0.0) - xi / PI);
    for (j, (kj, aj)) in sig.iter().enumerate() {
        if j + 1 == l {
            continue;
        }
        out *= w_over_sin_c((C::new(PI, 0.0) - xi) * aj).powi(kj as i32);
    }
    Ok(out)
}

/// `H(u) = s(eps + iu)`: the reduced amplitude along the vertical line the
/// shifted integral runs over.
pub fn h_cap(sig: &Signature, eps: f64, u: f64) -> Result<C> {
    s_reduced(sig, C::new(eps, u))
}

// ---------------------------------------------------------------------------
// Phase frame.
// ---------------------------------------------------------------------------

/// Small-`epsilon` quantities (present when `epsilon <= eps0`).
#[derive(Debug, Clone, PartialEq)]
pub struct SmallEps {
    /// `D_1 = (pi/4) r_l^2 / eps` (0 on the cut locus).
    pub d1: f64,
    /// `D_2 = (1/2) G''(eps) eps^2`.
    pub d2: f64,
    /// `J* = G(0) - G(eps) + G'(eps) eps - (1/2) G''(eps) eps^2`.
    pub j_star: f64,
    /// `G_3''(0) = sum_{j<l} (r_j^2/4) a_j^2 mu'(a_j pi)` (cut-locus
    /// curvature; strictly positive when some `r_j > 0`, `j < l`).
    pub g3_pp0: f64,
    /// The `G`-record at `xi = eps`.
    pub g_at_eps: GRecord,
}

/// Everything the asymptotic formulas need about the phase at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseFrame {
    pub theta: f64,
    pub epsilon: f64,
    /// Threshold below which the small-`epsilon` frame is populated.
    pub eps0: f64,
    /// `phi(i theta) = -d^2/4` (exactly real).
    pub phi_at_i_theta: f64,
    /// `Phi''(0)` on the shifted contour (strictly negative off the axis).
    pub phi_pp0: f64,
    small: Option<SmallEps>,
}

impl PhaseFrame {
    /// The small-`epsilon` quantities; a regime error if `epsilon > eps0`.
    pub fn small_eps(&self) -> Result<&SmallEps> {
        self.small.as_ref().ok_or_else(|| {
            Error::Regime(format!(
                "small-epsilon frame unavailable: epsilon = {} exceeds eps0 = {}",
                self.epsilon, self.eps0
            ))
        })
    }

    pub fn has_small_eps(&self) -> bool {
        self.small.is_some()
    }
}

/// Builds the phase frame at a solved point.
pub fn phase_frame(sig: &Signature, p: &RadialPoint, geo: &GeodesicData) -> Result<PhaseFrame> {
    sig.check_point(p)?;
    let q = p.abs_t();
    let phi_at_i_theta = phi(sig, &q, C::new(0.0, geo.theta))?.re;
    let pp0 = phi_pp0(sig, &q, geo.theta);
    let e0 = eps0(sig);
    let eps = geo.epsilon;

    let small = if eps <= e0 {
        let g_at_eps = g_family(sig, &q, eps)?;
        let g_zero = if eps == 0.0 {
            g_at_eps.clone()
        } else {
            g_family(sig, &q, 0.0)?
        };
        let l = sig.blocks();
        let rl = q.r()[l - 1];
        let d1 = if eps > 0.0 { 0.25 * PI * rl * rl / eps } else { 0.0 };
        let d2 = 0.5 * g_at_eps.gpp * eps * eps;
        let j_star = g_zero.g - g_at_eps.g + g_at_eps.gp * eps - 0.5 * g_at_eps.gpp * eps * eps;
        let mut g3_pp0 = 0.0;
        for (j, (_, aj)) in sig.iter().enumerate() {
            if j + 1 < l && q.r()[j] > 0.0 {
                g3_pp0 += 0.25 * q.r()[j] * q.r()[j] * aj * aj * geometry::mu_prime_raw(aj * PI);
            }
        }
        Some(SmallEps {
            d1,
            d2,
            j_star,
            g3_pp0,
            g_at_eps,
        })
    } else {
        None
    };

    Ok(PhaseFrame {
        theta: geo.theta,
        epsilon: eps,
        eps0: e0,
        phi_at_i_theta,
        phi_pp0: pp0,
        small,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::solve_geodesic;

    fn h11() -> Signature {
        Signature::isotropic(1).unwrap()
    }

    fn two_block() -> Signature {
        Signature::new(vec![1, 1], vec![0.5, 1.0]).unwrap()
    }

    #[test]
    fn amplitude_at_imaginary_argument_is_reciprocal_sine_product() {
        // h(i) on H(1,1) is 1/sin(1).
        let v = amplitude(&h11(), C::new(0.0, 1.0)).unwrap();
        assert!((v.re - 1.0 / 1.0f64.sin()).abs() < 1e-15);
        assert_eq!(v.im, 0.0);
        assert!(amplitude(&h11(), C::new(0.0, PI)).is_err());
    }

    #[test]
    fn phi_at_i_theta_is_minus_quarter_distance_squared() {
        let sig = two_block();
        let p = RadialPoint::new(vec![1.0, 1.0], 2.0).unwrap();
        let geo = solve_geodesic(&sig, &p).unwrap();
        let v = phi(&sig, &p, C::new(0.0, geo.theta)).unwrap();
        assert_eq!(v.im, 0.0);
        assert!((v.re + 0.25 * geo.d_sq).abs() <= 1e-13 * geo.d_sq);
    }

    #[test]
    fn phi_skips_inactive_blocks_at_the_cut_locus() {
        // r_l = 0 allows evaluation at Im w = pi.
        let sig = two_block();
        let p = RadialPoint::new(vec![1.0, 0.0], 6.0).unwrap();
        let v = phi(&sig, &p, C::new(0.0, PI)).unwrap();
        let geo = solve_geodesic(&sig, &p).unwrap();
        assert!((v.re + 0.25 * geo.d_sq).abs() <= 1e-13 * geo.d_sq);
        // ... but an active last block refuses the pole.
        let p2 = RadialPoint::new(vec![1.0, 1.0], 6.0).unwrap();
        assert!(phi(&sig, &p2, C::new(0.0, PI)).is_err());
    }

    #[test]
    fn shifted_phase_vanishes_at_zero_and_matches_closed_real_part() {
        let sig = two_block();
        let p = RadialPoint::new(vec![1.0, 1.0], 2.0).unwrap();
        let geo = solve_geodesic(&sig, &p).unwrap();
        let at0 = phi_shifted(&sig, &p, &geo, 0.0).unwrap();
        assert!(at0.norm() <= 1e-14 * geo.d_sq);
        for &s in &[0.05, 0.4, 1.7, 6.0, -2.2] {
            let direct = phi_shifted(&sig, &p, &geo, s).unwrap().re;
            let closed = re_phi_closed(&sig, &p, &geo, s).unwrap();
            assert!(
                (direct - closed).abs() <= 1e-12 * closed.abs().max(1.0),
                "s = {s}: {direct} vs {closed}"
            );
            assert!(closed <= 0.0);
        }
    }

    #[test]
    fn shifted_phase_has_conjugate_symmetry() {
        let sig = h11();
        let p = RadialPoint::new(vec![1.2], 0.8).unwrap();
        let geo = solve_geodesic(&sig, &p).unwrap();
        for &s in &[0.3, 1.0, 4.0] {
            let plus = phi_shifted(&sig, &p, &geo, s).unwrap();
            let minus = phi_shifted(&sig, &p, &geo, -s).unwrap();
            assert!((plus - minus.conj()).norm() <= 1e-13 * plus.norm().max(1.0));
        }
    }

    #[test]
    fn phi_pp0_matches_second_difference_of_shifted_phase() {
        let sig = two_block();
        let p = RadialPoint::new(vec![0.9, 1.1], 1.7).unwrap();
        let geo = solve_geodesic(&sig, &p).unwrap();
        let s = 1e-4;
        let f = |x: f64| phi_shifted(&sig, &p, &geo, x).unwrap().re;
        let fd = (f(s) - 2.0 * f(0.0) + f(-s)) / (s * s);
        let exact = phi_pp0(&sig, &p, geo.theta);
        assert!(exact < 0.0);
        assert!((fd - exact).abs() <= 1e-6 * exact.abs());
    }

    #[test]
    fn g_family_derivatives_match_complex_step() {
        let sig = two_block();
        let p = RadialPoint::new(vec![1.3, 0.8], 1.0).unwrap();
        let h = 1e-20;
        for &xi in &[0.0, 0.02, 0.05, -0.04] {
            let rec = g_family(&sig, &p, xi).unwrap();
            // Complex-step derivative: Im G(xi + ih)/h -> G'(xi).
            let step = g_complex(&sig, &p, C::new(xi, h)).unwrap();
            assert!((step.im / h - rec.gp).abs() <= 1e-12 * rec.gp.abs().max(1.0));
            assert!((step.re - rec.g).abs() <= 1e-13 * rec.g.abs().max(1.0));
            // First derivative by central difference of the family itself.
            let d = 1e-5;
            let up = g_family(&sig, &p, xi + d).unwrap();
            let dn = g_family(&sig, &p, xi - d).unwrap();
            assert!(((up.g - dn.g) / (2.0 * d) - rec.gp).abs() <= 1e-8);
            assert!(((up.gp - dn.gp) / (2.0 * d) - rec.gpp).abs() <= 1e-7);
            assert!(((up.gpp - dn.gpp) / (2.0 * d) - rec.gppp).abs() <= 1e-6);
        }
    }

    #[test]
    fn g_family_respects_the_analyticity_disc() {
        let sig = two_block(); // radius = min(1, pi) = 1
        assert!((analyticity_radius(&sig) - 1.0).abs() < 1e-15);
        let tight = Signature::new(vec![1, 1], vec![0.8, 1.0]).unwrap();
        let expect = PI * 0.2 / 0.8;
        assert!((analyticity_radius(&tight) - expect).abs() < 1e-15);
        let p = RadialPoint::new(vec![1.0, 1.0], 1.0).unwrap();
        assert!(g_family(&tight, &p, expect * 1.01).is_err());
        assert!(g_family(&tight, &p, -expect * 1.01).is_err());
        assert!(g_family(&tight, &p, expect * 0.99).is_ok());
        assert!((eps0(&tight) - expect / 16.0).abs() < 1e-15);
    }

    #[test]
    fn k_remainder_is_cubic_with_the_right_third_derivative() {
        let sig = two_block();
        let p = RadialPoint::new(vec![1.0, 0.5], 1.0).unwrap();
        let eps = 0.03;
        // K(0) = K'(0) = K''(0) = 0 by construction; third central
        // difference recovers K'''(0) = -i G'''(eps).
        let u = 5e-3;
        let k = |x: f64| k_remainder(&sig, &p, eps, x).unwrap();
        let third = (k(2.0 * u) - k(u) * 2.0 + k(-u) * 2.0 - k(-2.0 * u)) / (2.0 * u * u * u);
        let expect = C::new(0.0, -g_family(&sig, &p, eps).unwrap().gppp);
        assert!((third - expect).norm() <= 1e-4 * expect.norm());
        assert!(k(0.0).norm() < 1e-15);
    }

    #[test]
    fn reduced_amplitude_factorizes_the_full_amplitude() {
        // h(lambda + i theta) = (pi/xi) s(xi) at xi = eps + i lambda.
        let sig = two_block();
        let eps = 0.04;
        let theta = PI - eps;
        for &lambda in &[0.0, 0.3, 1.2] {
            let xi = C::new(eps, lambda);
            let lhs = amplitude(&sig, C::new(lambda, theta)).unwrap();
            let rhs = s_reduced(&sig, xi).unwrap() * (PI / xi);
            assert!(
                (lhs - rhs).norm() <= 1e-11 * lhs.norm(),
                "lambda = {lambda}: {lhs} vs {rhs}"
            );
        }
        // s(0) = prod_{j<l} (a_j pi / sin(a_j pi))^{k_j}.
        let s0 = s_reduced(&sig, C::new(0.0, 0.0)).unwrap();
        let expect = 0.5 * PI / (0.5 * PI).sin();
        assert!((s0.re - expect).abs() < 1e-13);
        // k_l > 1 is rejected.
        let kl2 = Signature::new(vec![1, 2], vec![0.5, 1.0]).unwrap();
        assert!(s_reduced(&kl2, C::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn frame_identity_links_d1_d2_to_phi_pp0() {
        // D1 + D2 = -(1/2) eps^2 Phi''(0) exactly.
        let sig = two_block();
        for &eps in &[0.01, 0.03, 0.0599] {
            let theta = PI - eps;
            // Build an interior point with this theta: t = sum a_j mu(a_j theta) r_j^2.
            let r = [1.0, 0.7];
            let t: f64 = sig
                .iter()
                .zip(r.iter())
                .map(|((_, aj), &rj)| aj * crate::geometry::mu_raw(aj * theta) * rj * rj)
                .sum();
            let p = RadialPoint::new(r.to_vec(), t).unwrap();
            let geo = solve_geodesic(&sig, &p).unwrap();
            assert!((geo.theta - theta).abs() < 1e-9);
            let frame = phase_frame(&sig, &p, &geo).unwrap();
            let small = frame.small_eps().unwrap();
            let lhs = small.d1 + small.d2;
            let rhs = -0.5 * geo.epsilon * geo.epsilon * frame.phi_pp0;
            assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs(), "eps = {eps}");
        }
    }

    #[test]
    fn frame_outside_small_eps_denies_access() {
        let sig = h11();
        let p = RadialPoint::new(vec![1.0], 1.0).unwrap();
        let geo = solve_geodesic(&sig, &p).unwrap();
        let frame = phase_frame(&sig, &p, &geo).unwrap();
        assert!(!frame.has_small_eps());
        assert!(matches!(frame.small_eps(), Err(Error::Regime(_))));
        assert!((frame.phi_at_i_theta + 0.25 * geo.d_sq).abs() <= 1e-13 * geo.d_sq);
    }

    #[test]
    fn frame_on_cut_locus_has_zeroed_small_eps() {
        let sig = two_block();
        let p = RadialPoint::new(vec![1.0, 0.0], 6.0).unwrap();
        let geo = solve_geodesic(&sig, &p).unwrap();
        let frame = phase_frame(&sig, &p, &geo).unwrap();
        let small = frame.small_eps().unwrap();
        assert_eq!(small.d1, 0.0);
        assert_eq!(small.d2, 0.0);
        assert_eq!(small.j_star, 0.0);
        // G_3''(0) = (r_1^2/4) a_1^2 mu'(a_1 pi) > 0.
        let expect = 0.25 * 0.25 * crate::geometry::mu_prime_raw(0.5 * PI);
        assert!((small.g3_pp0 - expect).abs() < 1e-14);
    }
}
