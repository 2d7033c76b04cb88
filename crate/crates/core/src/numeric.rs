//! Small numerical toolbox: adaptive quadrature for the sphere weight,
//! bisection, and summary statistics.
//!
//! All sphere integrals run in the angle variable t = sin(theta), where the
//! latitude weight (1 - t^2)^((n-3)/2) becomes cos^(n-2)(theta): bounded for
//! every n >= 2, so one quadrature covers low and high dimension alike.
//! Exponentially weighted integrands are shifted by their log-peak before
//! integration; coefficients up to n/4 stay far from overflow.

const REL_TOL: f64 = 1e-10;
const MAX_DEPTH: u32 = 60;

fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adapt(
    f: &impl Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    fm: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, fa, m, fm, flm);
    let right = simpson(m, fm, b, fb, frm);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    adapt(f, a, fa, m, fm, flm, left, 0.5 * eps, depth - 1)
        + adapt(f, m, fm, b, fb, frm, right, 0.5 * eps, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over [a, b] at relative tolerance 1e-10.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, fa, b, fb, fm);
    // Seed the error budget from a coarse magnitude estimate so the
    // tolerance is relative; the floor keeps zero integrands cheap.
    let eps = REL_TOL * whole.abs().max(1e-280);
    adapt(&f, a, fa, b, fb, fm, whole, eps, MAX_DEPTH)
}

/// log of integral over theta in [lo, hi] of exp(coeff * sin(theta)) * cos(theta)^(n-2).
///
/// Returns -inf when the integral underflows to zero (empty caps, extreme
/// coefficients); callers treat that as mass zero.
pub fn log_sphere_weight_integral(n: usize, coeff: f64, theta_lo: f64, theta_hi: f64) -> f64 {
    assert!(n >= 2, "sphere weight needs ambient dimension >= 2");
    assert!(theta_lo <= theta_hi);
    let pow = (n - 2) as f64;
    let log_h = |theta: f64| -> f64 {
        let c = theta.cos();
        if c <= 0.0 {
            // endpoint of the sphere; the weight vanishes for n > 2
            if pow == 0.0 {
                coeff * theta.sin()
            } else {
                f64::NEG_INFINITY
            }
        } else {
            coeff * theta.sin() + pow * c.ln()
        }
    };
    // locate the log-peak on a grid, then refine by golden section
    let grid = 256;
    let step = (theta_hi - theta_lo) / grid as f64;
    let mut best_i: usize = 0;
    let mut best = f64::NEG_INFINITY;
    for i in 0..=grid {
        let v = log_h(theta_lo + step * i as f64);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    if best == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let lo = theta_lo + step * best_i.saturating_sub(1) as f64;
    let hi = (theta_lo + step * (best_i + 1) as f64).min(theta_hi);
    let shift = golden_max(&log_h, lo, hi).max(best);
    let integral = integrate(|t| (log_h(t) - shift).exp(), theta_lo, theta_hi);
    if integral <= 0.0 {
        f64::NEG_INFINITY
    } else {
        shift + integral.ln()
    }
}

fn golden_max(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    const INVPHI: f64 = 0.618_033_988_749_894_8;
    let mut a = hi - INVPHI * (hi - lo);
    let mut b = lo + INVPHI * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    for _ in 0..80 {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + INVPHI * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - INVPHI * (hi - lo);
            fa = f(a);
        }
    }
    fa.max(fb)
}

/// Root of a continuous monotone-crossing function on [lo, hi] by bisection.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> crate::Result<f64> {
    let flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(crate::Error::Parameter(format!(
            "bisection bracket [{lo}, {hi}] does not straddle a root"
        )));
    }
    let rising = fhi > 0.0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if (fm > 0.0) == rising {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Median; sorts its scratch slice in place.
pub fn median(xs: &mut [f64]) -> f64 {
    assert!(!xs.is_empty());
    xs.sort_by(f64::total_cmp);
    let mid = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[mid]
    } else {
        0.5 * (xs[mid - 1] + xs[mid])
    }
}

/// Sample mean and its standard error.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    assert!(n >= 1);
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, f64::INFINITY);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Smallest p with 2^p >= x. `ceil_log2(1) == 0`.
pub fn ceil_log2(x: u64) -> u32 {
    assert!(x >= 1);
    64 - (x - 1).leading_zeros()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomial_exactly() {
        let v = integrate(|x| 3.0 * x * x, 0.0, 2.0);
        assert!((v - 8.0).abs() < 1e-10);
    }

    #[test]
    fn integrates_peaked_gaussianish() {
        // weight for n = 1003 is a spike of width ~ 1/sqrt(n) around 0
        let l = log_sphere_weight_integral(1003, 0.0, -std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2);
        // ln of Beta(1/2, (n-1)/2)-style mass: compare to Stirling form sqrt(2 pi / (n-2))
        let expect = 0.5 * ((2.0 * std::f64::consts::PI) / 1001.0).ln();
        assert!((l - expect).abs() < 1e-3, "l={l} expect={expect}");
    }

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-13).unwrap();
        assert!((r - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn median_even_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn ceil_log2_values() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(3), 2);
        assert_eq!(ceil_log2(4096), 12);
        assert_eq!(ceil_log2(4097), 13);
    }
}
