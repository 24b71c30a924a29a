//! Riemann data, regime classification and the exact rarefaction fan.
//!
//! Data `(rho_L, u_L | rho_R, u_R)` with zero transverse velocity falls into
//! one of four regimes determined by the velocity jump `du = u_R - u_L`:
//!
//! ```text
//!   du < -S              two shocks
//!   -S <= du < I_LR      one shock and one rarefaction
//!   I_LR <= du < V       two rarefactions, no vacuum
//!   V <= du              rarefactions separated by vacuum
//! ```
//!
//! with `I_LR = |int_{rho_L}^{rho_R} c(t)/t dt|`, `V` the sum of the vacuum
//! integrals `int_0^{rho} c(t)/t dt` of both states, and
//! `S = sqrt((rho_L - rho_R)(p_L - p_R) / (rho_L rho_R))`.
//!
//! Only the rarefaction regime is solved exactly. Its solution is
//! self-similar in `xi = x1 / t`: left state, 1-rarefaction on
//! `[xi_1L, xi_1C]`, middle state, 2-rarefaction on `[xi_2C, xi_2R]`, right
//! state. Inside the 1-fan `u - c(rho) = xi` and `u = u_L + int_rho^{rho_L} c/t`;
//! inside the 2-fan `u + c(rho) = xi` and `u = u_R - int_rho^{rho_R} c/t`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eos::{EosError, PressureLaw};
use crate::fvm::{FieldState, Grid};
use crate::numerics::{bracketed_root, NumericsError, TOL_ROOT};

/// Lower end of the middle-state density bracket.
pub const RHO_FLOOR: f64 = 1e-30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RiemannError {
    #[error("invalid Riemann data: {0}")]
    InvalidData(String),
    #[error("data is in the {0} regime; only rarefaction-only data can be solved exactly")]
    WrongRegime(Regime),
    #[error("root finding failed: {0}")]
    RootFindingFailure(#[from] NumericsError),
    #[error("middle state residual {residual:e} exceeds tolerance {tol:e}")]
    ResidualTooLarge { residual: f64, tol: f64 },
    #[error(transparent)]
    Eos(#[from] EosError),
}

/// Left and right constant states; transverse velocities are zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiemannData {
    pub rho_l: f64,
    pub u1_l: f64,
    pub rho_r: f64,
    pub u1_r: f64,
}

impl RiemannData {
    pub fn new(rho_l: f64, u1_l: f64, rho_r: f64, u1_r: f64) -> Result<Self, RiemannError> {
        let data = RiemannData { rho_l, u1_l, rho_r, u1_r };
        data.check()?;
        Ok(data)
    }

    pub fn check(&self) -> Result<(), RiemannError> {
        if !(self.rho_l > 0.0 && self.rho_r > 0.0) {
            return Err(RiemannError::InvalidData(format!(
                "densities must be positive, got rho_l = {}, rho_r = {}",
                self.rho_l, self.rho_r
            )));
        }
        if ![self.rho_l, self.u1_l, self.rho_r, self.u1_r].iter().all(|v| v.is_finite()) {
            return Err(RiemannError::InvalidData("non-finite state".into()));
        }
        Ok(())
    }

    pub fn velocity_jump(&self) -> f64 {
        self.u1_r - self.u1_l
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    RarefactionsOnly,
    VacuumPresent,
    TwoShocks,
    MixedShockRarefaction,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Regime::RarefactionsOnly => "RarefactionsOnly",
            Regime::VacuumPresent => "VacuumPresent",
            Regime::TwoShocks => "TwoShocks",
            Regime::MixedShockRarefaction => "MixedShockRarefaction",
        };
        f.write_str(s)
    }
}

/// The quantities compared by [`classify`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub du: f64,
    #[serde(rename = "I_LR")]
    pub i_lr: f64,
    #[serde(rename = "V")]
    pub v: f64,
    #[serde(rename = "S")]
    pub s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Classification {
    pub regime: Regime,
    pub thresholds: Thresholds,
}

pub fn thresholds(data: &RiemannData, law: &PressureLaw) -> Result<Thresholds, RiemannError> {
    data.check()?;
    let (rl, rr) = (data.rho_l, data.rho_r);
    let i_lr = law.invariant_integral(rl, rr)?.abs();
    let v = law.invariant_integral(0.0, rl)? + law.invariant_integral(0.0, rr)?;
    let s2 = (rl - rr) * (law.pressure(rl) - law.pressure(rr)) / (rl * rr);
    Ok(Thresholds { du: data.velocity_jump(), i_lr, v, s: s2.max(0.0).sqrt() })
}

/// Assigns the regime. Ties resolve as `du = I_LR` -> rarefactions,
/// `du = V` -> vacuum, `du = -S` -> mixed.
pub fn classify(data: &RiemannData, law: &PressureLaw) -> Result<Classification, RiemannError> {
    let th = thresholds(data, law)?;
    let du = th.du;
    let regime = if du >= th.v {
        Regime::VacuumPresent
    } else if du >= th.i_lr {
        Regime::RarefactionsOnly
    } else if du < -th.s {
        Regime::TwoShocks
    } else {
        Regime::MixedShockRarefaction
    };
    Ok(Classification { regime, thresholds: th })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MiddleState {
    pub rho: f64,
    pub u1: f64,
    /// Residuals of the 1-wave and 2-wave invariant relations.
    pub residuals: [f64; 2],
}

/// Solves `du = int_{rho_C}^{rho_L} c/t + int_{rho_C}^{rho_R} c/t` for the
/// middle density. The right-hand side decreases in `rho_C` from `V` at
/// vacuum to `I_LR` at `max(rho_L, rho_R)`, so the bracket always holds in
/// the rarefaction regime.
pub fn solve_middle_state(data: &RiemannData, law: &PressureLaw) -> Result<MiddleState, RiemannError> {
    let class = classify(data, law)?;
    if class.regime != Regime::RarefactionsOnly {
        return Err(RiemannError::WrongRegime(class.regime));
    }
    let du = class.thresholds.du;
    let (rl, rr) = (data.rho_l, data.rho_r);
    let hi = rl.max(rr);

    let phi = |rho: f64| -> f64 {
        let a = law.invariant_integral(rho, rl).unwrap_or(f64::NAN);
        let b = law.invariant_integral(rho, rr).unwrap_or(f64::NAN);
        a + b - du
    };
    let dphi = |rho: f64| -2.0 * law.sound_speed_or_vacuum(rho) / rho;
    let root = bracketed_root(phi, dphi, RHO_FLOOR, hi)?;
    let rho = root.x;

    let u1 = data.u1_l + law.invariant_integral(rho, rl)?;
    let r1 = u1 - data.u1_l - law.invariant_integral(rho, rl)?;
    let r2 = data.u1_r - u1 - law.invariant_integral(rho, rr)?;
    let scale = 1.0f64.max(class.thresholds.v).max(data.u1_l.abs()).max(data.u1_r.abs());
    let tol = TOL_ROOT * scale;
    let worst = r1.abs().max(r2.abs());
    if worst > tol {
        return Err(RiemannError::ResidualTooLarge { residual: worst, tol });
    }
    Ok(MiddleState { rho, u1, residuals: [r1, r2] })
}

/// Self-similar speeds bounding the two fans.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FanSpeeds {
    pub xi_1l: f64,
    pub xi_1c: f64,
    pub xi_2c: f64,
    pub xi_2r: f64,
}

impl FanSpeeds {
    pub fn as_array(&self) -> [f64; 4] {
        [self.xi_1l, self.xi_1c, self.xi_2c, self.xi_2r]
    }
}

/// Which part of the fan a point `xi` falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FanRegion {
    Left,
    OneWave,
    Middle,
    TwoWave,
    Right,
}

/// Solution value and its `xi`-derivatives at one self-similar point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FanPoint {
    pub rho: f64,
    pub u1: f64,
    pub drho_dxi: f64,
    pub du1_dxi: f64,
    pub region: FanRegion,
}

/// The exact rarefaction-only solution of a Riemann problem.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFan {
    data: RiemannData,
    law: PressureLaw,
    middle: MiddleState,
    speeds: FanSpeeds,
}

impl WaveFan {
    pub fn new(data: &RiemannData, law: &PressureLaw) -> Result<Self, RiemannError> {
        let middle = solve_middle_state(data, law)?;
        let c_l = law.sound_speed(data.rho_l)?;
        let c_r = law.sound_speed(data.rho_r)?;
        let c_c = law.sound_speed(middle.rho)?;
        let mut speeds = FanSpeeds {
            xi_1l: data.u1_l - c_l,
            xi_1c: middle.u1 - c_c,
            xi_2c: middle.u1 + c_c,
            xi_2r: data.u1_r + c_r,
        };
        // an empty wave solved to rounding can invert its edges by an ulp
        speeds.xi_1c = speeds.xi_1c.max(speeds.xi_1l);
        speeds.xi_2c = speeds.xi_2c.min(speeds.xi_2r);
        Ok(WaveFan { data: *data, law: law.clone(), middle, speeds })
    }

    pub fn data(&self) -> &RiemannData {
        &self.data
    }

    pub fn law(&self) -> &PressureLaw {
        &self.law
    }

    pub fn middle(&self) -> &MiddleState {
        &self.middle
    }

    pub fn speeds(&self) -> FanSpeeds {
        self.speeds
    }

    /// `min(rho_L, rho_C, rho_R)`, the infimum of the density over the fan.
    pub fn min_density(&self) -> f64 {
        self.data.rho_l.min(self.data.rho_r).min(self.middle.rho)
    }

    /// Largest `|xi|` at which the solution is not a far-field state.
    pub fn max_speed(&self) -> f64 {
        self.speeds.xi_1l.abs().max(self.speeds.xi_2r.abs())
    }

    pub fn region(&self, xi: f64) -> FanRegion {
        let s = &self.speeds;
        let one_wave = self.middle.rho < self.data.rho_l;
        let two_wave = self.middle.rho < self.data.rho_r;
        if xi < s.xi_1l {
            FanRegion::Left
        } else if xi <= s.xi_1c && one_wave {
            FanRegion::OneWave
        } else if xi < s.xi_2c || (xi <= s.xi_2r && !two_wave) {
            FanRegion::Middle
        } else if xi <= s.xi_2r {
            FanRegion::TwoWave
        } else {
            FanRegion::Right
        }
    }

    /// `(rho, u1)` at `xi = x1 / t`.
    pub fn evaluate(&self, xi: f64) -> Result<(f64, f64), RiemannError> {
        let pt = self.profile(xi)?;
        Ok((pt.rho, pt.u1))
    }

    /// Value and analytic `xi`-derivatives at `xi`.
    pub fn profile(&self, xi: f64) -> Result<FanPoint, RiemannError> {
        let law = &self.law;
        let d = &self.data;
        let region = self.region(xi);
        let constant = |rho, u1| FanPoint { rho, u1, drho_dxi: 0.0, du1_dxi: 0.0, region };
        match region {
            FanRegion::Left => Ok(constant(d.rho_l, d.u1_l)),
            FanRegion::Right => Ok(constant(d.rho_r, d.u1_r)),
            FanRegion::Middle => Ok(constant(self.middle.rho, self.middle.u1)),
            FanRegion::OneWave => {
                let psi = |rho: f64| {
                    d.u1_l + law.invariant_integral(rho, d.rho_l).unwrap_or(f64::NAN)
                        - law.sound_speed_or_vacuum(rho)
                        - xi
                };
                let dpsi = |rho: f64| -self.dxi_drho_magnitude(rho);
                let root = bracketed_root(psi, dpsi, self.middle.rho, d.rho_l)?;
                let rho = root.x;
                let u1 = d.u1_l + law.invariant_integral(rho, d.rho_l)?;
                let m = self.dxi_drho_magnitude(rho);
                Ok(FanPoint { rho, u1, drho_dxi: -1.0 / m, du1_dxi: self.du_dxi(rho), region })
            }
            FanRegion::TwoWave => {
                let psi = |rho: f64| {
                    d.u1_r - law.invariant_integral(rho, d.rho_r).unwrap_or(f64::NAN)
                        + law.sound_speed_or_vacuum(rho)
                        - xi
                };
                let dpsi = |rho: f64| self.dxi_drho_magnitude(rho);
                let root = bracketed_root(psi, dpsi, self.middle.rho, d.rho_r)?;
                let rho = root.x;
                let u1 = d.u1_r - law.invariant_integral(rho, d.rho_r)?;
                let m = self.dxi_drho_magnitude(rho);
                Ok(FanPoint { rho, u1, drho_dxi: 1.0 / m, du1_dxi: self.du_dxi(rho), region })
            }
        }
    }

    /// `c/rho + c'(rho)`, the magnitude of `d xi / d rho` inside either fan.
    fn dxi_drho_magnitude(&self, rho: f64) -> f64 {
        let c = self.law.sound_speed_or_vacuum(rho);
        c / rho + self.law.d2pressure(rho) / (2.0 * c)
    }

    /// `du/dxi = 2 p' / (2 p' + rho p'')` inside either fan.
    fn du_dxi(&self, rho: f64) -> f64 {
        let dp = self.law.dpressure(rho);
        2.0 * dp / (2.0 * dp + rho * self.law.d2pressure(rho))
    }

    /// Solution at `(t, x1)`; `t = 0` gives the Riemann data itself.
    pub fn sample(&self, t: f64, x1: f64) -> Result<FanPoint, RiemannError> {
        if t > 0.0 {
            return self.profile(x1 / t);
        }
        let (rho, u1, region) = if x1 <= 0.0 {
            (self.data.rho_l, self.data.u1_l, FanRegion::Left)
        } else {
            (self.data.rho_r, self.data.u1_r, FanRegion::Right)
        };
        Ok(FanPoint { rho, u1, drho_dxi: 0.0, du1_dxi: 0.0, region })
    }

    /// Samples the solution at every cell center; constant in `x2`.
    pub fn evaluate_field(&self, t: f64, grid: &Grid) -> Result<FieldState, RiemannError> {
        let mut field = FieldState::zeros(*grid, t);
        for i in 0..grid.nx1 {
            let pt = self.sample(t, grid.x1_center(i))?;
            for j in 0..grid.nx2 {
                let k = grid.index(i, j);
                field.rho[k] = pt.rho;
                field.m1[k] = pt.rho * pt.u1;
            }
        }
        Ok(field)
    }
}
