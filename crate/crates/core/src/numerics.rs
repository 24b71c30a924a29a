//! Small numerical kernels shared by the thermodynamics and wave-fan code:
//! adaptive Simpson quadrature, a bracketed bisection root finder with
//! Newton polish, and a compensated summation accumulator.

use thiserror::Error;

/// Default absolute tolerance for adaptive quadrature.
pub const TOL_QUAD: f64 = 1e-10;
/// Maximum recursion depth of adaptive Simpson.
pub const MAX_SUBDIVISIONS: u32 = 60;
/// Residual tolerance for scalar root solves.
pub const TOL_ROOT: f64 = 1e-12;
/// Relative bracket width at which bisection hands over to Newton.
pub const BRACKET_WIDTH: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("adaptive quadrature on [{a}, {b}] did not reach tolerance {tol:e} within {depth} levels")]
    QuadratureFailure { a: f64, b: f64, tol: f64, depth: u32 },
    #[error("root is not bracketed on [{lo}, {hi}]: f(lo) = {f_lo:e}, f(hi) = {f_hi:e}")]
    NotBracketed { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("non-finite function value at x = {x}")]
    NonFinite { x: f64 },
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Uses the classic Richardson-corrected recursion. Fails if any branch
/// exhausts `max_depth` levels without meeting its share of the tolerance.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, tol: f64, max_depth: u32) -> Result<f64, NumericsError>
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    for (x, v) in [(a, fa), (m, fm), (b, fb)] {
        if !v.is_finite() {
            return Err(NumericsError::NonFinite { x });
        }
    }
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut failed = false;
    let value = simpson_step(&f, a, b, fa, fm, fb, whole, tol, max_depth, &mut failed);
    if failed || !value.is_finite() {
        return Err(NumericsError::QuadratureFailure { a, b, tol, depth: max_depth });
    }
    Ok(value)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    failed: &mut bool,
) -> f64
where
    F: Fn(f64) -> f64,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    // The floor keeps the recursion from chasing rounding noise.
    let floor = 64.0 * f64::EPSILON * (left.abs() + right.abs());
    if delta.abs() <= 15.0 * tol.max(floor) {
        return left + right + delta / 15.0;
    }
    if depth == 0 || !flm.is_finite() || !frm.is_finite() {
        *failed = true;
        return left + right;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, failed)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, failed)
}

/// Result of a bracketed scalar root solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub residual: f64,
    pub iterations: u32,
}

/// Finds a root of a monotone function on `[lo, hi]`.
///
/// Bisects until the bracket is narrower than `BRACKET_WIDTH * |hi|`, then
/// applies two Newton steps with `df`. A Newton iterate is kept only if it
/// stays inside the final bracket and does not increase `|f|`. Bisection
/// switches to geometric midpoints while the bracket spans more than a
/// factor of four on the positive axis, so roots near zero are resolved in
/// relative terms.
pub fn bracketed_root<F, D>(f: F, df: D, mut lo: f64, mut hi: f64) -> Result<Root, NumericsError>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if !f_lo.is_finite() {
        return Err(NumericsError::NonFinite { x: lo });
    }
    if !f_hi.is_finite() {
        return Err(NumericsError::NonFinite { x: hi });
    }
    if f_lo == 0.0 {
        return Ok(Root { x: lo, residual: 0.0, iterations: 0 });
    }
    if f_hi == 0.0 {
        return Ok(Root { x: hi, residual: 0.0, iterations: 0 });
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(NumericsError::NotBracketed { lo, hi, f_lo, f_hi });
    }

    let mut iterations = 0;
    while hi - lo > BRACKET_WIDTH * hi.abs().max(lo.abs()) && iterations < 400 {
        let mid = if lo > 0.0 && hi > 4.0 * lo {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if !f_mid.is_finite() {
            return Err(NumericsError::NonFinite { x: mid });
        }
        iterations += 1;
        if f_mid == 0.0 {
            return Ok(Root { x: mid, residual: 0.0, iterations });
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }

    let mut x = 0.5 * (lo + hi);
    let mut fx = f(x);
    for _ in 0..2 {
        let slope = df(x);
        if slope == 0.0 || !slope.is_finite() {
            break;
        }
        let cand = x - fx / slope;
        if !(lo..=hi).contains(&cand) {
            break;
        }
        let f_cand = f(cand);
        if f_cand.abs() <= fx.abs() {
            x = cand;
            fx = f_cand;
        }
    }
    Ok(Root { x, residual: fx, iterations })
}

/// Neumaier-compensated running sum. Summation order is the call order, so
/// results are reproducible for a fixed traversal.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Cumulative trapezoid integral of samples `values` at abscissae `times`.
/// The first entry is zero.
pub fn cumulative_trapezoid(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len());
    let mut acc = CompensatedSum::new();
    for k in 0..times.len() {
        if k > 0 {
            acc.add(0.5 * (times[k] - times[k - 1]) * (values[k] + values[k - 1]));
        }
        out.push(acc.value());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_polynomial_exact() {
        let v = adaptive_simpson(|x| x * x * x - 2.0 * x, 0.0, 2.0, 1e-12, 20).unwrap();
        assert!((v - 0.0).abs() < 1e-13, "{v}");
    }

    #[test]
    fn simpson_handles_log_like_integrand() {
        let v = adaptive_simpson(|x: f64| 1.0 / x, 1e-3, 1.0, 1e-10, 60).unwrap();
        assert!((v - 1000f64.ln()).abs() < 1e-9, "{v}");
    }

    #[test]
    fn simpson_reports_failure() {
        let err = adaptive_simpson(|x: f64| (1.0 / x).sin(), 1e-6, 1.0, 1e-14, 3).unwrap_err();
        assert!(matches!(err, NumericsError::QuadratureFailure { .. }));
    }

    #[test]
    fn root_of_sqrt_relation() {
        let target = (1.0 - 1.0 / (2.0 * 2f64.sqrt())).powi(2);
        let f = |r: f64| 2.0 * 2f64.sqrt() * (1.0 - r.sqrt()) - 1.0;
        let df = |r: f64| -(2f64.sqrt()) / r.sqrt();
        let root = bracketed_root(f, df, 1e-30, 1.0).unwrap();
        assert!((root.x - target).abs() < 1e-14);
        assert!(root.residual.abs() < 1e-14);
    }

    #[test]
    fn root_near_zero_is_resolved_relatively() {
        let f = |r: f64| r - 1e-20;
        let root = bracketed_root(f, |_| 1.0, 1e-30, 1.0).unwrap();
        assert!((root.x / 1e-20 - 1.0).abs() < 1e-10, "{}", root.x);
    }

    #[test]
    fn unbracketed_is_an_error() {
        let err = bracketed_root(|x| x + 1.0, |_| 1.0, 0.0, 1.0).unwrap_err();
        assert!(matches!(err, NumericsError::NotBracketed { .. }));
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut acc = CompensatedSum::new();
        acc.add(1.0);
        for _ in 0..10 {
            acc.add(1e-16);
        }
        acc.add(-1.0);
        assert!((acc.value() - 1e-15).abs() < 1e-30);
    }

    #[test]
    fn trapezoid_of_linear() {
        let t = [0.0, 0.5, 1.5, 2.0];
        let v: Vec<f64> = t.iter().map(|x| 2.0 * x).collect();
        let c = cumulative_trapezoid(&t, &v);
        assert_eq!(c[0], 0.0);
        assert!((c[3] - 4.0).abs() < 1e-15);
    }
}
