//! Heat-kernel evaluation by adaptive quadrature.
//!
//! The kernel at scale `h = 1` is the Fourier-type integral
//!
//! ```text
//! p(z, t) = 1/(2 (4 pi)^{n+1}) * Integral over R of  h(lam) e^{phi(lam)} d lam,
//! ```
//!
//! with the amplitude `h` and phase `phi` from [`crate::phase`]; other scales
//! reduce to `h = 1` exactly through the parabolic dilation
//! `p_h(z, t) = h^{-(n+1)} p(z / sqrt h, t / h)`.
//!
//! Three independent evaluation routes are provided and cross-checked in the
//! test suites:
//!
//! * [`kernel_direct`] integrates on the real axis.  The integrand oscillates
//!   like `e^{i lam t / 4}`, so for large `|t|` the required node count grows
//!   linearly in `|t|`; past a fixed node budget the call delegates to the
//!   contour routes below.
//! * [`kernel_shifted`] integrates on the horizontal contour through the
//!   stationary point `i theta` of the phase, where the oscillation
//!   disappears to second order and the Gaussian factor `e^{-d^2/4}` comes
//!   out in closed form.  [`kernel_auto`] picks a nearby fixed-height contour
//!   when the stationary point sits too close to the amplitude pole at
//!   `i pi` (small `epsilon`, or the cut locus itself).
//! * [`kernel_convolution`] evaluates higher-dimensional kernels as
//!   one-dimensional convolutions of `H(1,1)` factors in the central
//!   variable, an entirely independent pipeline used as an oracle.
//!
//! [`gaveau_transform`] provides the Fourier transform of powers of
//! `lam / sinh lam`; the power-1 case is Gaveau's classical closed form
//! `pi^2 / (1 + cosh(pi s))`, which anchors the absolute normalization of
//! every route (it gives `p^{H(1,1)}(0, 0) = 1/64`).

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{solve_geodesic, Branch, GeodesicData};
use crate::group::{RadialPoint, Signature};
use crate::phase::{amplitude_unchecked, phi_pp0, phi_unchecked};
use crate::quad::{breakpoints, integrate};

/// Which evaluation route produced a [`KernelValue`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Real-axis Fourier integral.
    Direct,
    /// Integral on a horizontal contour (stationary or fixed height).
    ShiftedContour,
    /// Convolution of lower-dimensional kernels in the central variable.
    Convolution,
    /// A closed-form leading term standing in for the kernel.
    Asymptotic,
}

/// A heat-kernel evaluation together with its provenance and accuracy.
#[derive(Debug, Clone)]
pub struct KernelValue {
    /// Kernel value `p_h(z, t)`.  This is `0.0` only when the true value
    /// underflows `f64` (i.e. `ln_value < ~-745`); `ln_value` stays
    /// meaningful there.
    pub value: f64,
    /// Natural logarithm of the value, assembled from the factored
    /// exponential scale so it stays finite far beyond `f64` underflow.
    pub ln_value: f64,
    /// Route that produced the value.
    pub method: Method,
    /// A-posteriori absolute error estimate (quadrature error plus the
    /// imaginary residual of the symmetric integral).
    pub err_estimate: f64,
    /// Geodesic data of the `h = 1`-reduced point when a solve was needed.
    pub meta: Option<GeodesicData>,
}

/// Pieces of the shifted-contour factorization
/// `p = prefactor * e^{peak} * M` exposed for structural checks.
#[derive(Debug, Clone)]
pub struct ShiftedParts {
    /// `M`, the real positive integral of the shifted integrand
    /// `h(lam + i theta) e^{Phi(lam)}` over the contour.
    pub envelope_integral: f64,
    /// The phase at the stationary point, `phi(i theta) = -d^2/4`.
    pub peak_exponent: f64,
    /// `ln(1 / (2 (4 pi)^{n+1}))`.
    pub ln_prefactor: f64,
}

/// `1 / (2 (4 pi)^{n+1})`.
fn prefactor(n: u32) -> f64 {
    0.5 * (4.0 * PI).powi(-(n as i32) - 1)
}

/// `ln(1 / (2 (4 pi)^{n+1}))`.
fn ln_prefactor_n(n: u32) -> f64 {
    -(2.0f64.ln() + (n as f64 + 1.0) * (4.0 * PI).ln())
}

/// Exponential decay rate of the integrand modulus along the contour:
/// the amplitude contributes `sum k_j a_j` and the phase `sum a_j r_j^2 / 4`.
fn decay_rate(sig: &Signature, p: &RadialPoint) -> f64 {
    let mut c = 0.0;
    for (j, (kj, aj)) in sig.iter().enumerate() {
        c += kj as f64 * aj + aj * p.r()[j] * p.r()[j] * 0.25;
    }
    c
}

/// Smallest `T` with `c T - sum_j k_j ln(1 + 2 a_j T) >= ln_excess`,
/// found by a short fixed-point iteration (the bound is monotone).
fn tail_cut(sig: &Signature, c: f64, ln_excess: f64) -> f64 {
    let mut t_cut = (ln_excess / c).max(4.0);
    for _ in 0..4 {
        let poly: f64 = sig
            .iter()
            .map(|(kj, aj)| kj as f64 * (1.0 + 2.0 * aj * t_cut).ln())
            .sum();
        t_cut = ((ln_excess + poly) / c).max(4.0);
    }
    t_cut
}

/// Contour height backoff near the cut locus: far enough from the pole at
/// `i pi` for the quadrature, close enough that the integrand picks up at
/// most a factor `e^2` over the true peak scale (the phase grows like
/// `(pi - eta) |t| / 4` per unit of backoff).
fn eps_fix(t_abs: f64) -> f64 {
    (8.0 / t_abs.max(1.0)).min(0.05)
}

fn check_tol(tol: f64) -> Result<()> {
    if (1e-12..=1e-3).contains(&tol) {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "relative tolerance {tol:e} outside the supported range [1e-12, 1e-3]"
        )))
    }
}

/// Reduce `(p, h)` to the unit scale: returns the dilated point (with
/// `t >= 0`; the kernel is even in `t`) and the log-scale `-(n+1) ln h`.
fn reduce_to_unit(sig: &Signature, p: &RadialPoint, h: f64) -> Result<(RadialPoint, f64)> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Domain(format!("scale h must be positive, got {h}")));
    }
    let p1 = p.dilate(h.sqrt().recip())?.abs_t();
    Ok((p1, -(sig.n() as f64 + 1.0) * h.ln()))
}

/// Result of integrating the peak-normalized integrand on one horizontal
/// contour: `integral = Int h(lam + i eta) e^{phi(lam + i eta) - peak} d lam`
/// over `lam in [-T, T]` (plus a certified tail extension), with
/// `peak = phi(i eta)` (exactly real).
struct ContourQuad {
    integral: Complex64,
    peak: f64,
    err: f64,
    converged: bool,
}

/// Integrate the kernel integrand on the horizontal contour at height
/// `eta in [0, pi)`.  Requires `p.t() >= 0`.  `d_sq` (the squared distance
/// of the point) sets the truncation: the integral is of size
/// `~ e^{-(d^2/4 + peak)}` relative to the peak-normalized integrand, and
/// the tail estimate must undercut that by the tolerance.  The truncation is
/// certified a posteriori by integrating one extension block `[T, 2T]` and
/// doubling `T` if it contributes noticeably.
fn contour_quad(
    sig: &Signature,
    p: &RadialPoint,
    eta: f64,
    d_sq: f64,
    tol: f64,
) -> ContourQuad {
    debug_assert!(p.t() >= 0.0);
    debug_assert!((0.0..PI).contains(&eta));
    let peak = phi_unchecked(sig, p, Complex64::new(0.0, eta)).re;
    let c = decay_rate(sig, p);
    let ln_excess = (0.25 * d_sq + peak).max(0.0) + tol.recip().ln() + 40.0;
    let mut t_cut = tail_cut(sig, c, ln_excess);

    // Width of the central peak, from the curvature of the phase; used as a
    // breakpoint hint so the first subdivision already brackets the peak.
    let width = (1.0 + phi_pp0(sig, p, eta).abs()).sqrt().recip();
    // Scale of the total variation, for the roundoff error floor: the
    // peak-normalized integrand has modulus amplitude(i eta) at lam = 0 and
    // decays at rate c.
    let amp_peak = amplitude_unchecked(sig, Complex64::new(0.0, eta)).norm();
    let floor = 50.0 * f64::EPSILON * amp_peak * (2.0 * width + 2.0 / c);

    let f = |lam: f64| {
        let w = Complex64::new(lam, eta);
        amplitude_unchecked(sig, w) * (phi_unchecked(sig, p, w) - peak).exp()
    };

    // Breakpoint ladder around the peak, out to 40 widths on each side.
    // The outer markers matter when the peak is much narrower than the
    // integration range (sharp stationary point at a far point): without
    // them the panels adjoining the peak are many thousands of widths long,
    // every quadrature node on them lands where `e^{Phi}` underflows to an
    // exact 0, and the flank mass beyond one width (~32% of a Gaussian
    // peak) would be dropped without any error indication.  Beyond 40
    // widths the unaccounted mass is below e^{-800}.
    let mut marks = vec![-1.0, 0.0, 1.0];
    for m in [1.0, 3.0, 8.0, 20.0, 40.0] {
        marks.push(m * width);
        marks.push(-m * width);
    }

    let mut attempt = 0;
    loop {
        let pts = breakpoints(-t_cut, t_cut, &marks);
        let main = integrate(&f, &pts, tol, floor, 2_000_000);
        // Certify the truncation: one extension block on each side (the two
        // sides are complex conjugates, so one integration covers both).
        let scale = main.value.re.abs().max(floor);
        let ext = integrate(&f, &[t_cut, 2.0 * t_cut], 0.25, 0.25 * tol * scale, 50_000);
        let add = 2.0 * ext.value.re;
        attempt += 1;
        if add.abs() <= 8.0 * tol * scale || attempt >= 3 {
            return ContourQuad {
                integral: main.value + Complex64::new(add, 0.0),
                peak,
                err: main.err + 2.0 * ext.err + add.abs(),
                converged: main.converged,
            };
        }
        t_cut *= 2.0;
    }
}

/// Assemble a [`KernelValue`] from a contour integration, folding in the
/// prefactor and the `h`-scaling.  Enforces the accuracy contract: the total
/// error estimate (quadrature error plus imaginary residual) must certify
/// the requested relative tolerance, else the best value is carried in an
/// accuracy error.
fn assemble(
    sig: &Signature,
    cq: &ContourQuad,
    ln_scale: f64,
    tol: f64,
    method: Method,
    meta: Option<GeodesicData>,
) -> Result<KernelValue> {
    let i_re = cq.integral.re;
    let imag = cq.integral.im.abs();
    let ln_pref = ln_prefactor_n(sig.n());
    let factor_ln = ln_pref + cq.peak + ln_scale;
    let factor = if factor_ln > -700.0 {
        prefactor(sig.n()) * cq.peak.exp() * ln_scale.exp()
    } else {
        0.0
    };
    let value = factor * i_re;
    let err = factor * (cq.err + imag);
    if !cq.converged || i_re <= 0.0 || cq.err + imag > tol * i_re.abs() {
        return Err(Error::Accuracy {
            message: format!(
                "quadrature could not certify relative tolerance {tol:e} \
                 (relative error estimate {:e})",
                (cq.err + imag) / i_re.abs().max(f64::MIN_POSITIVE)
            ),
            value,
            err_estimate: err,
        });
    }
    Ok(KernelValue {
        value,
        ln_value: factor_ln + i_re.ln(),
        method,
        err_estimate: err,
        meta,
    })
}

/// Heat kernel by the real-axis Fourier integral.
///
/// Reduces to `h = 1` by the exact dilation identity, truncates the integral
/// where a certified envelope bound undercuts the tolerance, and refines
/// adaptively.  For large `|t|` the oscillation `e^{i lam t/4}` makes the
/// real-axis route need a node count proportional to `|t| T`; past a budget of
/// `2*10^6` nodes the call delegates to the contour routes, which remove the
/// oscillation at the stationary point.
///
/// Errors: `Accuracy` (carrying the best value and estimate) when the
/// tolerance cannot be certified — in particular when the oscillatory
/// cancellation exceeds what `f64` roundoff allows.
pub fn kernel_direct(sig: &Signature, p: &RadialPoint, h: f64, tol: f64) -> Result<KernelValue> {
    sig.check_point(p)?;
    check_tol(tol)?;
    let (p1, ln_scale) = reduce_to_unit(sig, p, h)?;
    let geo = solve_geodesic(sig, &p1).ok();
    let d_sq = geo.as_ref().map_or(0.0, |g| g.d_sq);

    // Pre-flight truncation plan for the oscillation budget.
    let peak0 = -0.25 * p1.r_total_sq();
    let c = decay_rate(sig, &p1);
    let ln_excess = (0.25 * d_sq + peak0).max(0.0) + tol.recip().ln() + 40.0;
    let t_cut = tail_cut(sig, c, ln_excess);
    if 2.0 * t_cut * p1.t() / PI > 2e6 {
        let geo = match geo {
            Some(g) => g,
            None => solve_geodesic(sig, &p1)?,
        };
        return contour_route(sig, &p1, &geo, ln_scale, tol);
    }

    let cq = contour_quad(sig, &p1, 0.0, d_sq, tol);
    assemble(sig, &cq, ln_scale, tol, Method::Direct, geo)
}

/// Heat kernel on the contour through the stationary point `i theta`,
/// returning both the value and the factorization pieces
/// `(prefactor, e^{-d^2/4}, M)`.
///
/// `geo` must be the geodesic solve of `p` (at `h = 1`).  Requires an
/// interior point with `epsilon = pi - theta >= 1e-6`; closer to the cut
/// locus the amplitude pole at `i pi` sits too close to the contour and the
/// caller should use [`kernel_auto`] (fixed-height contour) or
/// [`kernel_direct`].
pub fn kernel_shifted_parts(
    sig: &Signature,
    p: &RadialPoint,
    geo: &GeodesicData,
    tol: f64,
) -> Result<(KernelValue, ShiftedParts)> {
    sig.check_point(p)?;
    check_tol(tol)?;
    if geo.branch != Branch::Interior || geo.epsilon < 1e-6 {
        return Err(Error::Regime(format!(
            "stationary contour needs an interior point with epsilon >= 1e-6 \
             (got epsilon = {:e}); use the direct or fixed-contour route",
            geo.epsilon
        )));
    }
    let p1 = p.abs_t();
    let cq = contour_quad(sig, &p1, geo.theta, geo.d_sq, tol);
    let kv = assemble(
        sig,
        &cq,
        0.0,
        tol,
        Method::ShiftedContour,
        Some(geo.clone()),
    )?;
    let parts = ShiftedParts {
        envelope_integral: cq.integral.re,
        peak_exponent: cq.peak,
        ln_prefactor: ln_prefactor_n(sig.n()),
    };
    Ok((kv, parts))
}

/// Heat kernel on the stationary contour (value only); see
/// [`kernel_shifted_parts`].
pub fn kernel_shifted(
    sig: &Signature,
    p: &RadialPoint,
    geo: &GeodesicData,
    tol: f64,
) -> Result<KernelValue> {
    kernel_shifted_parts(sig, p, geo, tol).map(|(kv, _)| kv)
}

/// Contour-route dispatch for a reduced point (`h = 1`, `t >= 0`): the
/// stationary contour when it is safely below the amplitude pole, otherwise
/// a fixed-height contour backed off from `i pi`.
fn contour_route(
    sig: &Signature,
    p1: &RadialPoint,
    geo: &GeodesicData,
    ln_scale: f64,
    tol: f64,
) -> Result<KernelValue> {
    let eta = match geo.branch {
        Branch::Interior if geo.epsilon >= 1e-6 => geo.theta,
        Branch::Interior => PI - eps_fix(p1.t()).max(2.0 * geo.epsilon),
        Branch::CutLocus => PI - eps_fix(p1.t()),
    };
    let cq = contour_quad(sig, p1, eta, geo.d_sq, tol);
    assemble(
        sig,
        &cq,
        ln_scale,
        tol,
        Method::ShiftedContour,
        Some(geo.clone()),
    )
}

/// Heat kernel with automatic route selection: the direct integral at the
/// origin, the stationary contour at interior points, and a fixed-height
/// contour close to (or on) the cut locus.
pub fn kernel_auto(sig: &Signature, p: &RadialPoint, h: f64, tol: f64) -> Result<KernelValue> {
    sig.check_point(p)?;
    check_tol(tol)?;
    let (p1, ln_scale) = reduce_to_unit(sig, p, h)?;
    if p1.is_origin() {
        let cq = contour_quad(sig, &p1, 0.0, 0.0, tol);
        return assemble(sig, &cq, ln_scale, tol, Method::Direct, None);
    }
    let geo = solve_geodesic(sig, &p1)?;
    contour_route(sig, &p1, &geo, ln_scale, tol)
}

/// `lam / sinh(lam)` for real `lam`, with the removable singularity filled.
fn h1_real(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x / x.sinh()
    }
}

/// Fourier transform of `(lam / sinh lam)^power` at frequency `s`:
/// `Integral over R of (lam/sinh lam)^power e^{-i lam s} d lam` (real and
/// even in `s`).
///
/// `power = 1` is Gaveau's closed form `pi^2 / (1 + cosh(pi s))`, evaluated
/// in the overflow-safe form `2 pi^2 e^{-pi|s|} / (1 + e^{-pi|s|})^2`.
/// Higher powers are computed by adaptive quadrature: on the real axis for
/// `|s| <= 1`, and for larger `|s|` on the contour `Im lam = -(pi - delta)`
/// just above the pole of the integrand at `-i pi`, where the exponential
/// factor `e^{-(pi - delta)|s|}` comes out in closed form and the remaining
/// integral carries no catastrophic cancellation (the real-axis integral
/// would need relative cancellation `e^{-pi |s|}`, hopeless in `f64`).
pub fn gaveau_transform(power: u32, s: f64) -> Result<f64> {
    if power == 0 {
        return Err(Error::Domain("transform power must be >= 1".into()));
    }
    let s = s.abs();
    if power == 1 {
        let e = (-PI * s).exp();
        return Ok(2.0 * PI * PI * e / ((1.0 + e) * (1.0 + e)));
    }
    let pw = power as f64;
    let ip = power as i32;

    if s <= 1.0 {
        // Real axis: tail ~ (2T)^p e^{-pT} must undercut the value scale
        // ~ e^{-pi s} by the working tolerance.
        let mut t_cut = ((PI * s + 36.0) / pw).max(4.0);
        for _ in 0..4 {
            t_cut = ((PI * s + 36.0 + pw * (1.0 + 2.0 * t_cut).ln()) / pw).max(4.0);
        }
        let f = |lam: f64| h1_real(lam).powi(ip) * (lam * s).cos();
        let pts = breakpoints(0.0, t_cut, &[1.0]);
        let q = integrate(f, &pts, 1e-11, 1e-300, 400_000);
        let value = 2.0 * q.value;
        if !q.converged {
            return Err(Error::Accuracy {
                message: "transform quadrature did not converge".into(),
                value,
                err_estimate: 2.0 * q.err,
            });
        }
        return Ok(value);
    }

    // Shifted contour.  With eta = pi - delta and g(x) = h1(x - i eta)^p,
    // the transform is e^{-eta s} * Int g(x) e^{-i x s} dx, and by evenness
    // of h1 the integral equals 2 Re Int_0^T g(x) e^{-i x s} dx.  The peak
    // of |g| at x = 0 has height (pi/delta)^p and width ~ delta; keeping
    // delta of the order of the oscillation period resolves both at once.
    let delta = (2.0 / s).min(0.5);
    let eta = PI - delta;
    let g = |x: f64| {
        let w = Complex64::new(x, -eta);
        let h = w / w.sinh();
        h.powi(ip) * Complex64::new(0.0, -x * s).exp()
    };
    // |g| decays like (2|x|)^p e^{-p|x|}; the integral scale is roughly
    // e^{delta * s} (bounded by e^2) times a power of s.
    let mut t_cut: f64 = 4.0;
    for _ in 0..4 {
        t_cut = ((36.0 + pw * (1.0 + 2.0 * t_cut).ln()) / pw).max(4.0);
    }
    let pts = breakpoints(0.0, t_cut, &[delta, 1.0]);
    let q = integrate(g, &pts, 1e-11, 1e-300, 600_000);
    let value = (-eta * s).exp() * 2.0 * q.value.re;
    if !q.converged {
        return Err(Error::Accuracy {
            message: "transform quadrature did not converge".into(),
            value,
            err_estimate: (-eta * s).exp() * 2.0 * q.err,
        });
    }
    Ok(value)
}

/// Heat kernel of the isotropic group with `m` complex dimensions on the
/// central axis: `p^{H(m,1)}(0, t)`.  Computed from [`gaveau_transform`],
/// so it is independent of the phase-integral routes.
pub fn axis_kernel(m: u32, t: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::Domain("axis kernel needs m >= 1".into()));
    }
    Ok(gaveau_transform(m, 0.25 * t)? * prefactor(m))
}

/// `p^{H(1,1)}(r, u)` for use inside convolution integrands: closed form on
/// the axis, kernel routes elsewhere; accuracy failures degrade to the
/// carried value and hard failures poison the quadrature with NaN.
fn h11_value(h11: &Signature, r: f64, u: f64, tol: f64) -> f64 {
    if r == 0.0 {
        return match axis_kernel(1, u) {
            Ok(v) => v,
            Err(_) => f64::NAN,
        };
    }
    let p = match RadialPoint::new(vec![r], u) {
        Ok(p) => p,
        Err(_) => return f64::NAN,
    };
    match kernel_auto(h11, &p, 1.0, tol) {
        Ok(v) => v.value,
        Err(Error::Accuracy { value, .. }) => value,
        Err(_) => f64::NAN,
    }
}

/// `p^{H(m,1)}(0, s)` for convolution integrands (NaN-poisoning on failure).
fn axis_value(m: u32, s: f64) -> f64 {
    match axis_kernel(m, s) {
        Ok(v) => v,
        Err(Error::Accuracy { value, .. }) => value,
        Err(_) => f64::NAN,
    }
}

/// Heat kernel by one-dimensional convolution identities in the central
/// variable (`h = 1`):
///
/// * isotropic `H(n,1)`, `n >= 2`:
///   `p(z, t) = Int p^{H(1,1)}(|z|, t - s) p^{H(n-1,1)}(0, s) ds`,
///   with the axis factor from [`axis_kernel`];
/// * the two-block signature `((1,1), (a1, 1))`:
///   `p(z, t) = (1/a1) Int p^{H(1,1)}(r1, (t-s)/a1) p^{H(1,1)}(r2, s) ds`.
///
/// Unsupported signatures return a domain error.  This route exists as an
/// independent cross-check of the phase-integral routes: its only shared
/// ingredient with them is the `H(1,1)` factor itself.
pub fn kernel_convolution(sig: &Signature, p: &RadialPoint, tol: f64) -> Result<KernelValue> {
    sig.check_point(p)?;
    check_tol(tol)?;
    let p1 = p.abs_t();
    let t = p1.t();
    let geo = solve_geodesic(sig, &p1).ok();
    let d_sq = geo.as_ref().map_or(0.0, |g| g.d_sq);
    let inner_tol = (tol * 1e-2).clamp(1e-12, 1e-3);
    let s_cut = t + (d_sq + 4.0 * tol.recip().ln() + 160.0) / PI + 10.0;
    let h11 = Signature::isotropic(1)?;

    let quad = if sig.is_isotropic() && sig.n() >= 2 {
        let n = sig.n();
        let r = p1.r()[0];
        if r == 0.0 {
            // Pure axis point: the convolution collapses to the axis kernel.
            let value = axis_kernel(n, t)?;
            return Ok(KernelValue {
                value,
                ln_value: value.ln(),
                method: Method::Convolution,
                err_estimate: value * 1e-11,
                meta: geo,
            });
        }
        let m = n - 1;
        let f = |s: f64| h11_value(&h11, r, t - s, inner_tol) * axis_value(m, s);
        let pts = breakpoints(-s_cut, s_cut, &[0.0, t]);
        integrate(f, &pts, 0.3 * tol, 1e-300, 100_000)
    } else if sig.blocks() == 2 && sig.k() == [1, 1] {
        let a1 = sig.a()[0];
        let (r1, r2) = (p1.r()[0], p1.r()[1]);
        let f = |s: f64| {
            h11_value(&h11, r1, (t - s) / a1, inner_tol) * h11_value(&h11, r2, s, inner_tol) / a1
        };
        let pts = breakpoints(-s_cut, s_cut, &[0.0, t]);
        integrate(f, &pts, 0.3 * tol, 1e-300, 100_000)
    } else {
        return Err(Error::Domain(
            "convolution route supports isotropic signatures with n >= 2 \
             and the two-block signature ((1,1), (a1, 1))"
                .into(),
        ));
    };

    let err = quad.err + 3.0 * quad.res_abs * inner_tol;
    if !quad.converged || quad.value <= 0.0 {
        return Err(Error::Accuracy {
            message: "convolution quadrature did not converge".into(),
            value: quad.value,
            err_estimate: err,
        });
    }
    Ok(KernelValue {
        value: quad.value,
        ln_value: quad.value.ln(),
        method: Method::Convolution,
        err_estimate: err,
        meta: geo,
    })
}
