//! Independent reference implementations used as test oracles. Nothing here
//! calls into the library's thermodynamics or wave-fan code.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Closed-form gamma law `p = kappa rho^gamma`.
#[derive(Debug, Clone, Copy)]
pub struct Gamma {
    pub kappa: f64,
    pub gamma: f64,
}

impl Gamma {
    pub fn p(&self, rho: f64) -> f64 {
        self.kappa * rho.powf(self.gamma)
    }

    pub fn dp(&self, rho: f64) -> f64 {
        self.kappa * self.gamma * rho.powf(self.gamma - 1.0)
    }

    pub fn c(&self, rho: f64) -> f64 {
        self.dp(rho).sqrt()
    }

    /// `rho int_1^rho kappa z^(gamma-2) dz`.
    pub fn h(&self, rho: f64) -> f64 {
        let g = self.gamma;
        rho * self.kappa * (rho.powf(g - 1.0) - 1.0) / (g - 1.0)
    }

    /// `d/drho` of [`Gamma::h`] by the product rule.
    pub fn dh(&self, rho: f64) -> f64 {
        let g = self.gamma;
        self.kappa * (rho.powf(g - 1.0) - 1.0) / (g - 1.0) + self.kappa * rho.powf(g - 1.0)
    }

    /// `int_a^b c(z)/z dz`, integrating `sqrt(kappa gamma) z^((gamma-3)/2)`.
    pub fn riemann_integral(&self, a: f64, b: f64) -> f64 {
        let e = (self.gamma - 1.0) / 2.0;
        (self.kappa * self.gamma).sqrt() * (b.powf(e) - a.powf(e)) / e
    }

    /// Density with sound speed `c`.
    pub fn rho_from_c(&self, c: f64) -> f64 {
        (c * c / (self.kappa * self.gamma)).powf(1.0 / (self.gamma - 1.0))
    }
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// Plain bisection for an increasing or decreasing function.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let f_lo = f(lo);
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleRegime {
    TwoShocks,
    Mixed,
    Rarefactions,
    Vacuum,
}

/// Evaluates the four regime inequalities directly.
pub fn oracle_regime(law: &Gamma, rho_l: f64, u_l: f64, rho_r: f64, u_r: f64) -> OracleRegime {
    let du = u_r - u_l;
    let lower = law.riemann_integral(rho_l.min(rho_r), rho_l.max(rho_r));
    let vacuum = law.riemann_integral(0.0, rho_l) + law.riemann_integral(0.0, rho_r);
    let shock = ((rho_l - rho_r) * (law.p(rho_l) - law.p(rho_r)) / (rho_l * rho_r)).sqrt();
    if du >= vacuum {
        OracleRegime::Vacuum
    } else if du >= lower {
        OracleRegime::Rarefactions
    } else if du >= -shock {
        OracleRegime::Mixed
    } else {
        OracleRegime::TwoShocks
    }
}

/// Middle density by bisection on `I(r, rho_l) + I(r, rho_r) = du`.
pub fn oracle_middle(law: &Gamma, rho_l: f64, u_l: f64, rho_r: f64, u_r: f64) -> (f64, f64) {
    let du = u_r - u_l;
    let f = |r: f64| law.riemann_integral(r, rho_l) + law.riemann_integral(r, rho_r) - du;
    let rho = bisect(f, 0.0, rho_l.max(rho_r));
    (rho, u_l + law.riemann_integral(rho, rho_l))
}

/// Closed-form gamma-law rarefaction fan.
#[derive(Debug, Clone, Copy)]
pub struct OracleFan {
    pub law: Gamma,
    pub rho_l: f64,
    pub u_l: f64,
    pub rho_r: f64,
    pub u_r: f64,
    pub rho_c: f64,
    pub u_c: f64,
}

impl OracleFan {
    pub fn new(law: Gamma, rho_l: f64, u_l: f64, rho_r: f64, u_r: f64) -> Self {
        let (rho_c, u_c) = oracle_middle(&law, rho_l, u_l, rho_r, u_r);
        OracleFan { law, rho_l, u_l, rho_r, u_r, rho_c, u_c }
    }

    pub fn edges(&self) -> [f64; 4] {
        let l = &self.law;
        [
            self.u_l - l.c(self.rho_l),
            self.u_c - l.c(self.rho_c),
            self.u_c + l.c(self.rho_c),
            self.u_r + l.c(self.rho_r),
        ]
    }

    /// `(rho, u)` at `xi`. Inside the 1-fan `u - c = xi` and
    /// `u + 2c/(gamma-1)` is constant; the 2-fan mirrors this.
    pub fn eval(&self, xi: f64) -> (f64, f64) {
        let l = &self.law;
        let g = l.gamma;
        let e = self.edges();
        if xi < e[0] {
            (self.rho_l, self.u_l)
        } else if xi <= e[1] {
            let w = self.u_l + 2.0 * l.c(self.rho_l) / (g - 1.0);
            let c = (g - 1.0) / (g + 1.0) * (w - xi);
            (l.rho_from_c(c), xi + c)
        } else if xi < e[2] {
            (self.rho_c, self.u_c)
        } else if xi <= e[3] {
            let w = self.u_r - 2.0 * l.c(self.rho_r) / (g - 1.0);
            let c = (g - 1.0) / (g + 1.0) * (xi - w);
            (l.rho_from_c(c), xi - c)
        } else {
            (self.rho_r, self.u_r)
        }
    }
}

/// Random Riemann data spread over every regime.
pub fn random_data(rng: &mut ChaCha8Rng) -> (f64, f64, f64, f64) {
    let rho_l = 10f64.powf(rng.gen_range(-1.0..1.0));
    let rho_r = 10f64.powf(rng.gen_range(-1.0..1.0));
    let u_l = rng.gen_range(-4.0..4.0);
    let u_r = rng.gen_range(-4.0..4.0);
    (rho_l, u_l, rho_r, u_r)
}

/// Random data in the rarefaction-only regime, by rejection.
pub fn random_rarefaction_data(rng: &mut ChaCha8Rng, law: &Gamma) -> (f64, f64, f64, f64) {
    loop {
        let d = random_data(rng);
        if oracle_regime(law, d.0, d.1, d.2, d.3) == OracleRegime::Rarefactions {
            return d;
        }
    }
}

pub fn fixture(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}
