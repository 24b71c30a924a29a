//! Barotropic pressure laws and the thermodynamic functions derived from them.
//!
//! For a pressure law `p(rho)` the pressure potential is
//! `H(rho) = rho * int_1^rho p(z) / z^2 dz`, normalized so that `H(1) = 0`.
//! It satisfies `rho H'(rho) - H(rho) = p(rho)` and `H''(rho) = p'(rho) / rho`,
//! and `(1/2 rho |u|^2 + H(rho), (1/2 rho |u|^2 + H + p) u)` is the energy
//! (entropy) pair of the isentropic Euler system.
//!
//! Two families are supported: the gamma law `p = kappa rho^gamma`, for which
//! every quantity has a closed form, and tabulated laws interpolated by a
//! C1 piecewise-cubic Hermite spline, for which integrals go through adaptive
//! quadrature.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{adaptive_simpson, NumericsError, MAX_SUBDIVISIONS, TOL_QUAD};

/// Relative tolerance used when testing discrete second differences.
pub const TOL_CONVEXITY: f64 = 1e-12;
/// Number of log-spaced densities inspected by [`PressureLaw::validate`].
pub const VALIDATION_SAMPLES: usize = 512;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EosError {
    #[error("invalid pressure law: {0}")]
    InvalidLaw(String),
    #[error("density {rho} is outside the domain of this function")]
    DomainError { rho: f64 },
    #[error("quadrature failed: {0}")]
    QuadratureFailure(#[from] NumericsError),
    #[error("invariant integral with a vacuum endpoint is undefined for tabulated laws")]
    VacuumIntegralUndefined,
    #[error("cannot read pressure table {path}: {message}")]
    Table { path: String, message: String },
}

/// The first clause of the admissibility conditions that a law violates.
#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum ValidationError {
    #[error("pressure is not convex near rho = {0}")]
    NonConvex(f64),
    #[error("pressure is not strictly increasing near rho = {0}")]
    NonMonotone(f64),
    #[error("pressure does not vanish at vacuum")]
    NonzeroAtVacuum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GammaRecord")]
pub struct GammaLaw {
    pub kappa: f64,
    pub gamma: f64,
}

/// Tabulated pressure with Hermite-cubic interpolation between knots and
/// linear extrapolation past the last knot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TableRecord")]
pub struct TabulatedLaw {
    rho: Vec<f64>,
    p: Vec<f64>,
    #[serde(skip)]
    slopes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PressureLaw {
    Gamma(GammaLaw),
    #[serde(rename = "table")]
    Tabulated(TabulatedLaw),
}

#[derive(Deserialize)]
struct GammaRecord {
    kappa: f64,
    gamma: f64,
}

impl TryFrom<GammaRecord> for GammaLaw {
    type Error = EosError;

    fn try_from(r: GammaRecord) -> Result<Self, EosError> {
        match PressureLaw::gamma(r.kappa, r.gamma)? {
            PressureLaw::Gamma(g) => Ok(g),
            PressureLaw::Tabulated(_) => unreachable!(),
        }
    }
}

#[derive(Deserialize)]
struct TableRecord {
    rho: Vec<f64>,
    p: Vec<f64>,
}

impl TryFrom<TableRecord> for TabulatedLaw {
    type Error = EosError;

    fn try_from(r: TableRecord) -> Result<Self, EosError> {
        if r.rho.len() != r.p.len() {
            return Err(EosError::InvalidLaw("rho and p columns differ in length".into()));
        }
        let samples: Vec<(f64, f64)> = r.rho.into_iter().zip(r.p).collect();
        TabulatedLaw::new(&samples)
    }
}

impl PressureLaw {
    pub fn gamma(kappa: f64, gamma: f64) -> Result<Self, EosError> {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(EosError::InvalidLaw(format!("kappa must be positive, got {kappa}")));
        }
        if !(gamma.is_finite() && gamma > 1.0) {
            return Err(EosError::InvalidLaw(format!("gamma must exceed 1, got {gamma}")));
        }
        Ok(PressureLaw::Gamma(GammaLaw { kappa, gamma }))
    }

    /// Builds a tabulated law from `(rho, p)` samples with strictly
    /// increasing, nonnegative densities. A vacuum knot `(0, 0)` is prepended
    /// when the table starts at positive density.
    pub fn tabulated(samples: &[(f64, f64)]) -> Result<Self, EosError> {
        TabulatedLaw::new(samples).map(PressureLaw::Tabulated)
    }

    /// Reads a two-column `rho,p` CSV table with a header row.
    pub fn from_csv(path: &Path) -> Result<Self, EosError> {
        let table_err = |message: String| EosError::Table { path: path.display().to_string(), message };
        let mut reader = csv::Reader::from_path(path).map_err(|e| table_err(e.to_string()))?;
        let mut samples = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| table_err(e.to_string()))?;
            if record.len() != 2 {
                return Err(table_err(format!("expected 2 columns, found {}", record.len())));
            }
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| table_err(format!("{s:?}: {e}")));
            samples.push((parse(&record[0])?, parse(&record[1])?));
        }
        Self::tabulated(&samples)
    }

    pub fn pressure(&self, rho: f64) -> f64 {
        match self {
            PressureLaw::Gamma(g) => g.kappa * rho.max(0.0).powf(g.gamma),
            PressureLaw::Tabulated(t) => t.eval(rho).0,
        }
    }

    /// `p'(rho)`; at vacuum this is the one-sided limit.
    pub fn dpressure(&self, rho: f64) -> f64 {
        match self {
            PressureLaw::Gamma(g) => g.kappa * g.gamma * rho.max(0.0).powf(g.gamma - 1.0),
            PressureLaw::Tabulated(t) => t.eval(rho).1,
        }
    }

    pub fn d2pressure(&self, rho: f64) -> f64 {
        match self {
            PressureLaw::Gamma(g) => {
                g.kappa * g.gamma * (g.gamma - 1.0) * rho.max(0.0).powf(g.gamma - 2.0)
            }
            PressureLaw::Tabulated(t) => t.eval(rho).2,
        }
    }

    /// Checks `p(0) = 0`, `p' > 0` and convexity. Tabulated laws are first
    /// checked knot by knot, then every law is sampled on
    /// [`VALIDATION_SAMPLES`] log-spaced densities.
    pub fn validate(&self) -> Result<(), ValidationError> {
        if let PressureLaw::Tabulated(t) = self {
            t.validate_knots()?;
        }
        if self.pressure(0.0) != 0.0 {
            return Err(ValidationError::NonzeroAtVacuum);
        }
        let (lo, hi) = match self {
            PressureLaw::Gamma(_) => (1e-3, 1e3),
            PressureLaw::Tabulated(t) => {
                let top = *t.rho.last().expect("table has knots");
                (top * 1e-6, 2.0 * top)
            }
        };
        let grid = log_grid(lo, hi, VALIDATION_SAMPLES);
        for &rho in &grid {
            if !(self.dpressure(rho) > 0.0) {
                return Err(ValidationError::NonMonotone(rho));
            }
        }
        for w in grid.windows(3) {
            let (p0, p1, p2) = (self.pressure(w[0]), self.pressure(w[1]), self.pressure(w[2]));
            let s01 = (p1 - p0) / (w[1] - w[0]);
            let s12 = (p2 - p1) / (w[2] - w[1]);
            if s12 - s01 < -TOL_CONVEXITY * s12.abs().max(s01.abs()) {
                return Err(ValidationError::NonConvex(w[1]));
            }
        }
        Ok(())
    }

    /// `H(rho) = rho * int_1^rho p(z)/z^2 dz`.
    pub fn pressure_potential(&self, rho: f64) -> Result<f64, EosError> {
        if !(rho >= 0.0) || !rho.is_finite() {
            return Err(EosError::DomainError { rho });
        }
        match self {
            PressureLaw::Gamma(g) => {
                Ok(g.kappa * (rho.powf(g.gamma) - rho) / (g.gamma - 1.0))
            }
            PressureLaw::Tabulated(t) => {
                if rho == 0.0 {
                    // rho * O(log rho) -> 0 for a finite p'(0)
                    return Ok(0.0);
                }
                Ok(rho * t.integrate_log(1.0, rho, |z, p| p / (z * z))?)
            }
        }
    }

    /// `H'(rho) = (H(rho) + p(rho)) / rho`.
    pub fn dpressure_potential(&self, rho: f64) -> Result<f64, EosError> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(EosError::DomainError { rho });
        }
        match self {
            PressureLaw::Gamma(g) => {
                Ok(g.kappa * (g.gamma * rho.powf(g.gamma - 1.0) - 1.0) / (g.gamma - 1.0))
            }
            PressureLaw::Tabulated(_) => {
                Ok((self.pressure_potential(rho)? + self.pressure(rho)) / rho)
            }
        }
    }

    /// Sound speed `c = sqrt(p'(rho))`.
    pub fn sound_speed(&self, rho: f64) -> Result<f64, EosError> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(EosError::DomainError { rho });
        }
        Ok(self.dpressure(rho).sqrt())
    }

    /// Sound speed extended to vacuum by continuity; used by flux
    /// evaluations that may see empty cells.
    pub(crate) fn sound_speed_or_vacuum(&self, rho: f64) -> f64 {
        self.dpressure(rho.max(0.0)).max(0.0).sqrt()
    }

    /// Signed integral `int_a^b sqrt(p'(tau)) / tau dtau`.
    pub fn invariant_integral(&self, a: f64, b: f64) -> Result<f64, EosError> {
        for x in [a, b] {
            if !(x >= 0.0) || !x.is_finite() {
                return Err(EosError::DomainError { rho: x });
            }
        }
        if a == b {
            return Ok(0.0);
        }
        match self {
            PressureLaw::Gamma(g) => {
                let e = 0.5 * (g.gamma - 1.0);
                let scale = 2.0 * (g.kappa * g.gamma).sqrt() / (g.gamma - 1.0);
                Ok(scale * (b.powf(e) - a.powf(e)))
            }
            PressureLaw::Tabulated(t) => {
                if a == 0.0 || b == 0.0 {
                    return Err(EosError::VacuumIntegralUndefined);
                }
                t.integrate_log(a, b, |z, _| t.eval(z).1.max(0.0).sqrt() / z)
            }
        }
    }

    /// Bregman divergence of the pressure, `p(rho) - p(r) - p'(r)(rho - r)`,
    /// computed without cancellation. Nonnegative for convex laws.
    pub fn pressure_bregman(&self, rho: f64, r: f64) -> f64 {
        match self {
            PressureLaw::Gamma(g) => {
                if r == 0.0 {
                    return self.pressure(rho);
                }
                g.kappa * r.powf(g.gamma) * power_bregman(rho / r, g.gamma)
            }
            PressureLaw::Tabulated(t) => t.pressure_bregman(rho, r),
        }
    }

    /// Bregman divergence of the pressure potential,
    /// `H(rho) - H(r) - H'(r)(rho - r)`, for `r > 0`.
    pub fn potential_bregman(&self, rho: f64, r: f64) -> Result<f64, EosError> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(EosError::DomainError { rho: r });
        }
        if !(rho >= 0.0) || !rho.is_finite() {
            return Err(EosError::DomainError { rho });
        }
        match self {
            PressureLaw::Gamma(g) => {
                Ok(g.kappa / (g.gamma - 1.0) * r.powf(g.gamma) * power_bregman(rho / r, g.gamma))
            }
            PressureLaw::Tabulated(t) => t.potential_bregman(rho, r),
        }
    }
}

/// `x^gamma - 1 - gamma (x - 1)` for `x >= 0`, with a Taylor branch near
/// `x = 1` where the direct form cancels.
fn power_bregman(x: f64, gamma: f64) -> f64 {
    let d = x - 1.0;
    if d.abs() < 1e-3 {
        // sum_{k>=2} binom(gamma, k) d^k
        let mut coeff = gamma * (gamma - 1.0) / 2.0;
        let mut dk = d * d;
        let mut acc = coeff * dk;
        for k in 3..=9 {
            coeff *= (gamma - (k as f64 - 1.0)) / k as f64;
            dk *= d;
            acc += coeff * dk;
        }
        acc.max(0.0)
    } else {
        (x.max(0.0).powf(gamma) - 1.0 - gamma * d).max(0.0)
    }
}

/// `n` log-spaced points on `[lo, hi]`, endpoints included.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

impl TabulatedLaw {
    fn new(samples: &[(f64, f64)]) -> Result<Self, EosError> {
        if samples.len() < 3 {
            return Err(EosError::InvalidLaw(format!(
                "a pressure table needs at least 3 samples, got {}",
                samples.len()
            )));
        }
        let mut rho = Vec::with_capacity(samples.len() + 1);
        let mut p = Vec::with_capacity(samples.len() + 1);
        for (k, &(r, v)) in samples.iter().enumerate() {
            if !r.is_finite() || !v.is_finite() || r < 0.0 {
                return Err(EosError::InvalidLaw(format!("bad table sample #{k}: ({r}, {v})")));
            }
            if k > 0 && r <= samples[k - 1].0 {
                return Err(EosError::InvalidLaw(format!(
                    "table densities must strictly increase (sample #{k}: {r})"
                )));
            }
        }
        if samples[0].0 > 0.0 {
            rho.push(0.0);
            p.push(0.0);
        }
        for &(r, v) in samples {
            rho.push(r);
            p.push(v);
        }
        let slopes = convex_hermite_slopes(&rho, &p);
        Ok(TabulatedLaw { rho, p, slopes })
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.rho.iter().copied().zip(self.p.iter().copied())
    }

    fn validate_knots(&self) -> Result<(), ValidationError> {
        if self.rho[0] == 0.0 && self.p[0] != 0.0 {
            return Err(ValidationError::NonzeroAtVacuum);
        }
        let mut prev: Option<f64> = None;
        for k in 0..self.rho.len() - 1 {
            let secant = (self.p[k + 1] - self.p[k]) / (self.rho[k + 1] - self.rho[k]);
            if secant <= 0.0 {
                return Err(ValidationError::NonMonotone(self.rho[k + 1]));
            }
            if let Some(s) = prev {
                if secant - s < -TOL_CONVEXITY * secant.abs().max(s.abs()) {
                    return Err(ValidationError::NonConvex(self.rho[k + 1]));
                }
            }
            prev = Some(secant);
        }
        Ok(())
    }

    /// `(p, p', p'')` at `rho`.
    fn eval(&self, rho: f64) -> (f64, f64, f64) {
        let n = self.rho.len();
        let rho = rho.max(0.0);
        if rho >= self.rho[n - 1] {
            let d = self.slopes[n - 1];
            return (self.p[n - 1] + d * (rho - self.rho[n - 1]), d, 0.0);
        }
        let k = self.rho.partition_point(|&x| x <= rho).saturating_sub(1).min(n - 2);
        let h = self.rho[k + 1] - self.rho[k];
        let t = (rho - self.rho[k]) / h;
        let (y0, y1) = (self.p[k], self.p[k + 1]);
        let (d0, d1) = (self.slopes[k] * h, self.slopes[k + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * d1;
        let dv = ((6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * d0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * d1)
            / h;
        let d2v = ((12.0 * t - 6.0) * y0
            + (6.0 * t - 4.0) * d0
            + (-12.0 * t + 6.0) * y1
            + (6.0 * t - 2.0) * d1)
            / (h * h);
        (v, dv, d2v)
    }

    /// Breakpoints strictly between `lo` and `hi` (plus the endpoints).
    fn pieces(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut pts = vec![lo];
        pts.extend(self.rho.iter().copied().filter(|&x| x > lo && x < hi));
        pts.push(hi);
        pts
    }

    /// Signed `int_a^b g(z, p(z)) dz` for `a, b > 0`, evaluated piecewise
    /// between knots in the variable `s = ln z`.
    fn integrate_log<G>(&self, a: f64, b: f64, g: G) -> Result<f64, EosError>
    where
        G: Fn(f64, f64) -> f64,
    {
        if a == b {
            return Ok(0.0);
        }
        let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
        let pts = self.pieces(lo, hi);
        let tol = TOL_QUAD / (pts.len() - 1) as f64;
        let mut total = 0.0;
        for w in pts.windows(2) {
            total += adaptive_simpson(
                |s: f64| {
                    let z = s.exp();
                    g(z, self.eval(z).0) * z
                },
                w[0].ln(),
                w[1].ln(),
                tol,
                MAX_SUBDIVISIONS,
            )?;
        }
        Ok(sign * total)
    }

    /// `int_r^rho (rho - z) p''(z) dz`. The integrand is quadratic on each
    /// piece, so a single Simpson panel per piece is exact.
    fn pressure_bregman(&self, rho: f64, r: f64) -> f64 {
        if rho == r {
            return 0.0;
        }
        let (lo, hi) = if r < rho { (r, rho) } else { (rho, r) };
        let pts = self.pieces(lo, hi);
        let f = |z: f64| (rho - z) * self.eval(z).2;
        let mut total = 0.0;
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            // nudge inside the piece so p'' is taken from the correct side
            let eps = 1e-15 * (b - a);
            let m = 0.5 * (a + b);
            total += (b - a) / 6.0 * (f(a + eps) + 4.0 * f(m) + f(b - eps));
        }
        if rho < r {
            total = -total;
        }
        total
    }

    /// `int_r^rho (rho - z) p'(z) / z dz`, which equals
    /// `H(rho) - H(r) - H'(r)(rho - r)` because `H'' = p'/rho`.
    fn potential_bregman(&self, rho: f64, r: f64) -> Result<f64, EosError> {
        if rho == r {
            return Ok(0.0);
        }
        let (lo, hi) = if r < rho { (r, rho) } else { (rho, r) };
        let pts = self.pieces(lo, hi);
        let tol = TOL_QUAD / (pts.len() - 1) as f64;
        let mut total = 0.0;
        for w in pts.windows(2) {
            total += adaptive_simpson(
                |z: f64| {
                    let dp = self.eval(z).1;
                    if z == 0.0 {
                        -dp
                    } else {
                        (rho - z) * dp / z
                    }
                },
                w[0],
                w[1],
                tol,
                MAX_SUBDIVISIONS,
            )?;
        }
        if rho < r {
            total = -total;
        }
        Ok(total.max(0.0))
    }
}

/// Hermite slopes for a C1 cubic interpolant of convex increasing data.
///
/// Starts from three-point parabolic slopes clamped between neighbouring
/// secants, then repeatedly pulls slopes toward the secants until each
/// piece satisfies the cubic convexity conditions
/// `d_{k+1} - s_k <= 2 (s_k - d_k)` and `s_k - d_k <= 2 (d_{k+1} - s_k)`.
/// Data that cannot be made convex this way is left for `validate` to flag.
fn convex_hermite_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let s: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    let clamp = |v: f64, a: f64, b: f64| v.max(a.min(b)).min(a.max(b));

    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let v = (h[i] * s[i - 1] + h[i - 1] * s[i]) / (h[i - 1] + h[i]);
        d[i] = clamp(v, s[i - 1], s[i]);
    }
    let first = ((2.0 * h[0] + h[1]) * s[0] - h[0] * s[1]) / (h[0] + h[1]);
    d[0] = clamp(first, 0.0, s[0]);
    let (hl, hp) = (h[n - 2], h[n - 3]);
    let last = ((2.0 * hl + hp) * s[n - 2] - hl * s[n - 3]) / (hl + hp);
    d[n - 1] = last.max(s[n - 2]);

    for _ in 0..64 {
        let mut changed = false;
        for k in 0..n - 1 {
            let a = s[k] - d[k];
            let b = d[k + 1] - s[k];
            if a < 0.0 || b < 0.0 {
                continue;
            }
            if b > 2.0 * a {
                d[k + 1] = s[k] + 2.0 * a;
                changed = true;
            } else if a > 2.0 * b {
                d[k] = s[k] - 2.0 * b;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    d
}
