//! Shared numerical routines: adaptive Simpson quadrature for complex
//! integrands, an embedded Runge-Kutta 4(5) integrator for scalar complex
//! ODEs, golden-section minimization, and bisection root finding.

use crate::error::{Error, Result};
use num_complex::Complex64;

/// Default absolute tolerance on each of the real and imaginary parts of a
/// quadrature result.
pub const QUAD_ABS_TOL: f64 = 1e-12;

const MAX_SIMPSON_DEPTH: u32 = 60;

fn simpson(a: f64, b: f64, fa: Complex64, fm: Complex64, fb: Complex64) -> Complex64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_step(
    f: &impl Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    fa: Complex64,
    fm: Complex64,
    fb: Complex64,
    whole: Complex64,
    tol: f64,
    depth: u32,
    worst: &mut f64,
) -> Complex64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if (delta.re.abs() <= 15.0 * tol && delta.im.abs() <= 15.0 * tol) || depth >= MAX_SIMPSON_DEPTH {
        if depth >= MAX_SIMPSON_DEPTH {
            *worst = worst.max(delta.re.abs().max(delta.im.abs()) / 15.0);
        }
        return left + right + delta / 15.0;
    }
    adaptive_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1, worst)
        + adaptive_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1, worst)
}

/// Adaptive Simpson quadrature of a complex-valued integrand over `[a, b]`.
///
/// `abs_tol` bounds the absolute error on the real and imaginary parts
/// separately. Fails with the achieved error estimate if the recursion
/// bottoms out before reaching the tolerance.
pub fn integrate_adaptive_simpson(
    f: impl Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    abs_tol: f64,
) -> Result<Complex64> {
    if a == b {
        return Ok(Complex64::ZERO);
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(a, b, fa, fm, fb);
    let mut worst = 0.0_f64;
    let value = adaptive_step(&f, a, b, fa, fm, fb, whole, abs_tol, 0, &mut worst);
    if worst > abs_tol {
        return Err(Error::QuadratureNonConvergence {
            achieved: worst,
            requested: abs_tol,
        });
    }
    Ok(value)
}

/// Integrate over `[points[0], points[n-1]]`, splitting at every interior
/// breakpoint so that piecewise-smooth integrands stay smooth within each
/// panel.
pub fn integrate_piecewise(
    f: impl Fn(f64) -> Complex64,
    points: &[f64],
    abs_tol: f64,
) -> Result<Complex64> {
    let mut total = Complex64::ZERO;
    for w in points.windows(2) {
        total += integrate_adaptive_simpson(&f, w[0], w[1], abs_tol)?;
    }
    Ok(total)
}

/// Options for the embedded Runge-Kutta 4(5) integrator.
#[derive(Debug, Clone, Copy)]
pub struct Rk45Options {
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for Rk45Options {
    fn default() -> Self {
        Rk45Options {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
        }
    }
}

// Dormand-Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate the scalar complex ODE `dy/dt = f(t, y)` from `t0` to `t1`
/// with adaptive Dormand-Prince 5(4) steps.
pub fn integrate_rk45(
    f: impl Fn(f64, Complex64) -> Complex64,
    t0: f64,
    t1: f64,
    y0: Complex64,
    opts: Rk45Options,
) -> Result<Complex64> {
    if t1 <= t0 {
        return Ok(y0);
    }
    let span = t1 - t0;
    let mut t = t0;
    let mut y = y0;
    let mut h = (span / 100.0).min(span);
    let h_min = span * 1e-14;
    let mut k = [Complex64::ZERO; 7];

    while t < t1 {
        if t + h > t1 {
            h = t1 - t;
        }
        k[0] = f(t, y);
        for stage in 1..7 {
            let mut acc = Complex64::ZERO;
            for (j, kj) in k.iter().enumerate().take(stage) {
                acc += DP_A[stage][j] * kj;
            }
            k[stage] = f(t + DP_C[stage] * h, y + h * acc);
        }
        let mut y5 = y;
        let mut y4 = y;
        for (j, kj) in k.iter().enumerate() {
            y5 += h * DP_B5[j] * kj;
            y4 += h * DP_B4[j] * kj;
        }
        let scale = opts.abs_tol + opts.rel_tol * y.norm().max(y5.norm());
        let err = (y5 - y4).norm() / scale;
        if err <= 1.0 {
            t += h;
            y = y5;
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if h < h_min && t < t1 {
            return Err(Error::StepSizeUnderflow { t, step: h });
        }
    }
    Ok(y)
}

/// Golden-section search for the minimum of `f` on `[a, b]`.
///
/// Returns `(x_min, f_min)` once the bracket is narrower than `x_tol`.
pub fn golden_section_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, x_tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_895;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (b - a).abs() > x_tol {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    // Ties break toward the smaller abscissa.
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Outcome of [`scan_refine_min`].
#[derive(Debug, Clone, Copy)]
pub struct ScanMinimum {
    pub x_min: f64,
    pub f_min: f64,
    /// The dense-scan argmin was the last grid point.
    pub argmin_at_upper: bool,
    /// The function was still descending across the last grid step, i.e.
    /// the minimum may continue beyond `b`.
    pub edge_descending: bool,
}

/// Minimize `f` over `(a, b]` by a dense scan of `n_scan` points followed by
/// golden-section refinement around the best scan cell.
///
/// Ties in the scan break toward smaller abscissae.
pub fn scan_refine_min(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    n_scan: usize,
    x_tol: f64,
) -> ScanMinimum {
    assert!(n_scan >= 2 && b > a);
    let step = (b - a) / n_scan as f64;
    let mut best_i = 1;
    let mut best_v = f64::INFINITY;
    let mut prev_v = f64::INFINITY;
    let mut last_v = f64::INFINITY;
    for i in 1..=n_scan {
        let x = a + step * i as f64;
        let v = f(x);
        if v < best_v {
            best_v = v;
            best_i = i;
        }
        prev_v = last_v;
        last_v = v;
    }
    let argmin_at_upper = best_i == n_scan;
    let edge_descending = last_v < prev_v;
    let lo = a + step * (best_i - 1) as f64;
    let hi = (a + step * (best_i + 1) as f64).min(b);
    let (x_refined, f_refined) = golden_section_min(&f, lo, hi, x_tol);
    let (x_min, f_min) = if f_refined <= best_v {
        (x_refined, f_refined)
    } else {
        (a + step * best_i as f64, best_v)
    };
    ScanMinimum { x_min, f_min, argmin_at_upper, edge_descending }
}

/// Bisection root finding on `[lo, hi]` to absolute tolerance `x_tol`.
///
/// Requires a sign change over the bracket.
pub fn bisect_root(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, x_tol: f64) -> Result<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::BracketFailure { lo, hi, f_lo, f_hi });
    }
    while hi - lo > x_tol {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
