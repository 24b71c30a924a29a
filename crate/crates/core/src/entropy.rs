//! Energy, relative energy and the certificates built from them.
//!
//! The relative energy of a state `(rho, u)` with respect to a reference
//! `(r, U)` is `1/2 rho |u - U|^2 + H(rho) - H(r) - H'(r)(rho - r)`. Against
//! the exact rarefaction fan its integral can only decay for an admissible
//! solution; [`certify`] checks that numerically, together with the
//! discrete energy inequality.

use serde::Serialize;
use thiserror::Error;

use crate::eos::{EosError, PressureLaw};
use crate::fvm::{FieldState, Grid, RHO_VACUUM};
use crate::numerics::{adaptive_simpson, cumulative_trapezoid, CompensatedSum, MAX_SUBDIVISIONS};
use crate::riemann::{FanRegion, RiemannData, RiemannError, WaveFan};

/// Finite-difference step used by [`check_identities`] by default.
pub const DEFAULT_FD_STEP: f64 = 1e-5;
/// Bound on the scaled defect of the pressure splitting identity.
pub const TOL_PRESSURE_SPLIT: f64 = 1e-12;
/// Bound on the scaled defects of the identities that use fan derivatives.
pub const TOL_FAN_IDENTITIES: f64 = 1e-8;
/// Relative energy-inequality tolerance per unit time.
pub const ENERGY_TOL: f64 = 1e-10;
/// Relative roundoff allowance for the sign of the REI2 right-hand side.
pub const SIGN_TOL: f64 = 1e-12;
/// `C` in `tol_rei = C (h + dt)`, calibrated on the symmetric `gamma = 2`
/// benchmark (`a = 5`, `t_end = 1`, `nx1` from 100 to 800).
pub const DEFAULT_REI_CONSTANT: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EntropyError {
    #[error("field does not match grid: {0}")]
    GridMismatch(String),
    #[error("reference density must be positive, found {min}")]
    NonPositiveReference { min: f64 },
    #[error("sample x1 = {x1} lies within one step of the fan edge at x1 = {edge}")]
    SamplingOnKink { x1: f64, edge: f64 },
    #[error("vacuum cell {cell} (rho = {rho:e}) has no velocity")]
    VacuumCell { cell: usize, rho: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Eos(#[from] EosError),
    #[error(transparent)]
    Riemann(#[from] RiemannError),
}

/// Density and velocity at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct State {
    pub rho: f64,
    pub u: [f64; 2],
}

impl State {
    pub fn new(rho: f64, u: [f64; 2]) -> Self {
        State { rho, u }
    }

    /// Recovers the velocity from momenta; below the vacuum floor the
    /// velocity is set to zero.
    pub fn from_conserved(rho: f64, m1: f64, m2: f64) -> Self {
        if rho > RHO_VACUUM {
            State { rho, u: [m1 / rho, m2 / rho] }
        } else {
            State { rho, u: [0.0, 0.0] }
        }
    }

    pub fn conserved(&self) -> [f64; 3] {
        [self.rho, self.rho * self.u[0], self.rho * self.u[1]]
    }

    pub fn is_vacuum(&self) -> bool {
        self.rho <= RHO_VACUUM
    }

    fn kinetic(&self) -> f64 {
        if self.is_vacuum() {
            0.0
        } else {
            0.5 * self.rho * (self.u[0] * self.u[0] + self.u[1] * self.u[1])
        }
    }
}

/// Energy density `eta = 1/2 rho |u|^2 + H(rho)` and its `x1`-flux
/// `(eta + p) u1`.
pub fn entropy_pair(state: &State, law: &PressureLaw) -> Result<(f64, f64), EntropyError> {
    if state.rho == 0.0 {
        return Ok((0.0, 0.0));
    }
    let eta = state.kinetic() + law.pressure_potential(state.rho)?;
    let u1 = if state.is_vacuum() { 0.0 } else { state.u[0] };
    Ok((eta, (eta + law.pressure(state.rho)) * u1))
}

/// Relative energy of `state` with respect to `reference`.
pub fn relative_entropy(state: &State, reference: &State, law: &PressureLaw) -> Result<f64, EntropyError> {
    if !(reference.rho > 0.0) {
        return Err(EntropyError::NonPositiveReference { min: reference.rho });
    }
    let kinetic = if state.is_vacuum() {
        0.0
    } else {
        let d0 = state.u[0] - reference.u[0];
        let d1 = state.u[1] - reference.u[1];
        0.5 * state.rho * (d0 * d0 + d1 * d1)
    };
    Ok(kinetic + law.potential_bregman(state.rho, reference.rho)?)
}

fn check_field(field: &FieldState) -> Result<(), EntropyError> {
    field.check(None).map_err(|e| EntropyError::GridMismatch(e.to_string()))
}

/// Midpoint-rule integral of the relative energy of `field` against the
/// fan at time `t`.
pub fn total_relative_entropy(field: &FieldState, fan: &WaveFan, t: f64) -> Result<f64, EntropyError> {
    check_field(field)?;
    let g = field.grid;
    let law = fan.law();
    let mut acc = CompensatedSum::new();
    for i in 0..g.nx1 {
        let pt = fan.sample(t, g.x1_center(i))?;
        let reference = State::new(pt.rho, [pt.u1, 0.0]);
        for j in 0..g.nx2 {
            acc.add(relative_entropy(&field.state(g.index(i, j)), &reference, law)?);
        }
    }
    Ok(acc.value() * g.cell_area())
}

/// `-int [rho (u~ - u1)^2 + p(rho) - p(r~) - p'(r~)(rho - r~)] d_x1 u~ dx`
/// against the fan at time `t > 0`. Nonpositive for convex laws.
pub fn rei2_rhs(field: &FieldState, fan: &WaveFan, t: f64) -> Result<f64, EntropyError> {
    check_field(field)?;
    if !(t > 0.0) {
        return Err(EntropyError::InvalidInput(format!("rei2_rhs needs t > 0, got {t}")));
    }
    let g = field.grid;
    let law = fan.law();
    let mut acc = CompensatedSum::new();
    for i in 0..g.nx1 {
        let pt = fan.sample(t, g.x1_center(i))?;
        if pt.du1_dxi == 0.0 {
            continue;
        }
        let du_dx = pt.du1_dxi / t;
        for j in 0..g.nx2 {
            let s = field.state(g.index(i, j));
            let kinetic = if s.is_vacuum() { 0.0 } else { s.rho * (pt.u1 - s.u[0]).powi(2) };
            acc.add(-(kinetic + law.pressure_bregman(s.rho, pt.rho)) * du_dx);
        }
    }
    Ok(acc.value() * g.cell_area())
}

/// Number of cells below the vacuum floor.
pub fn vacuum_cells(field: &FieldState) -> usize {
    field.rho.iter().filter(|&&r| r <= RHO_VACUUM).count()
}

/// Reference values and first derivatives at one space-time point.
/// `du_dx[a][b]` is `d U^a / d x_b`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RefSample {
    pub r: f64,
    pub u: [f64; 2],
    pub dr_dt: f64,
    pub dr_dx: [f64; 2],
    pub du_dt: [f64; 2],
    pub du_dx: [[f64; 2]; 2],
}

/// A continuously differentiable reference flow `(r, U)`.
pub trait SmoothReference {
    fn sample(&self, t: f64, x1: f64, x2: f64) -> Result<RefSample, EntropyError>;
}

impl SmoothReference for WaveFan {
    fn sample(&self, t: f64, x1: f64, _x2: f64) -> Result<RefSample, EntropyError> {
        let pt = WaveFan::sample(self, t, x1)?;
        if !(t > 0.0) {
            return Ok(RefSample { r: pt.rho, u: [pt.u1, 0.0], ..Default::default() });
        }
        let xi = x1 / t;
        Ok(RefSample {
            r: pt.rho,
            u: [pt.u1, 0.0],
            dr_dt: -xi * pt.drho_dxi / t,
            dr_dx: [pt.drho_dxi / t, 0.0],
            du_dt: [-xi * pt.du1_dxi / t, 0.0],
            du_dx: [[pt.du1_dxi / t, 0.0], [0.0, 0.0]],
        })
    }
}

/// A reference that is constant in space and time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantReference(pub State);

impl SmoothReference for ConstantReference {
    fn sample(&self, _t: f64, _x1: f64, _x2: f64) -> Result<RefSample, EntropyError> {
        Ok(RefSample { r: self.0.rho, u: self.0.u, ..Default::default() })
    }
}

/// A reference given by values only; derivatives by central differences
/// (forward in time near `t = 0`).
pub struct FdReference<F> {
    pub values: F,
    pub step: f64,
}

impl<F> SmoothReference for FdReference<F>
where
    F: Fn(f64, f64, f64) -> (f64, [f64; 2]),
{
    fn sample(&self, t: f64, x1: f64, x2: f64) -> Result<RefSample, EntropyError> {
        let h = self.step;
        let f = &self.values;
        let (r, u) = f(t, x1, x2);
        let diff = |a: (f64, [f64; 2]), b: (f64, [f64; 2]), w: f64| {
            ((a.0 - b.0) / w, [(a.1[0] - b.1[0]) / w, (a.1[1] - b.1[1]) / w])
        };
        let (dr_dt, du_dt) = if t >= h {
            diff(f(t + h, x1, x2), f(t - h, x1, x2), 2.0 * h)
        } else {
            diff(f(t + h, x1, x2), (r, u), h)
        };
        let d1 = diff(f(t, x1 + h, x2), f(t, x1 - h, x2), 2.0 * h);
        let d2 = diff(f(t, x1, x2 + h), f(t, x1, x2 - h), 2.0 * h);
        Ok(RefSample {
            r,
            u,
            dr_dt,
            dr_dx: [d1.0, d2.0],
            du_dt,
            du_dx: [[d1.1[0], d2.1[0]], [d1.1[1], d2.1[1]]],
        })
    }
}

/// Terms of the full relative-energy inequality, cumulative from the first
/// snapshot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReiResidual {
    pub times: Vec<f64>,
    /// `int E(t) - int E(0)` plus the time-integrated boundary terms.
    pub lhs: Vec<f64>,
    /// Time-integrated interior right-hand side.
    pub rhs: Vec<f64>,
    /// `lhs - rhs`; nonpositive for admissible solutions.
    pub residual: Vec<f64>,
    /// Interior right-hand-side integrand integrated over the domain at
    /// each snapshot.
    pub interior_rate: Vec<f64>,
}

fn check_trajectory(snapshots: &[FieldState]) -> Result<Grid, EntropyError> {
    let first = snapshots
        .first()
        .ok_or_else(|| EntropyError::InvalidInput("empty trajectory".into()))?;
    for (k, s) in snapshots.iter().enumerate() {
        check_field(s)?;
        if s.grid != first.grid {
            return Err(EntropyError::GridMismatch(format!("snapshot {k} is on a different grid")));
        }
        if k > 0 && !(s.t > snapshots[k - 1].t) {
            return Err(EntropyError::InvalidInput(format!("snapshot times not increasing at {k}")));
        }
    }
    Ok(first.grid)
}

fn rei_interior_density(s: &State, rs: &RefSample, law: &PressureLaw) -> f64 {
    let (rho, u) = (s.rho, if s.is_vacuum() { [0.0, 0.0] } else { s.u });
    let conv = |a: usize| rs.du_dt[a] + u[0] * rs.du_dx[a][0] + u[1] * rs.du_dx[a][1];
    let inertia = rho * (conv(0) * (rs.u[0] - u[0]) + conv(1) * (rs.u[1] - u[1]));
    let pressure = (law.pressure(rs.r) - law.pressure(rho)) * (rs.du_dx[0][0] + rs.du_dx[1][1]);
    // H''(r) = p'(r) / r
    let h2 = law.dpressure(rs.r) / rs.r;
    let potential = (rs.r - rho) * h2 * rs.dr_dt
        + (rs.r * rs.u[0] - rho * u[0]) * h2 * rs.dr_dx[0]
        + (rs.r * rs.u[1] - rho * u[1]) * h2 * rs.dr_dx[1];
    inertia + pressure + potential
}

/// Assembles every term of the relative-energy inequality for a trajectory
/// with far-field states `data` against a smooth reference.
///
/// Interior integrals use the midpoint rule on the grid, time integrals the
/// trapezoid rule on the snapshots, and the `x2` boundary integrals the
/// midpoint rule on the `x2` cell centers.
pub fn rei_full_residual<R>(
    snapshots: &[FieldState],
    reference: &R,
    law: &PressureLaw,
    data: &RiemannData,
) -> Result<ReiResidual, EntropyError>
where
    R: SmoothReference + ?Sized,
{
    let g = check_trajectory(snapshots)?;
    let exterior = [
        (-g.a, State::new(data.rho_l, [data.u1_l, 0.0]), -1.0),
        (g.a, State::new(data.rho_r, [data.u1_r, 0.0]), 1.0),
    ];
    let mut times = Vec::with_capacity(snapshots.len());
    let mut energy = Vec::with_capacity(snapshots.len());
    let mut boundary = Vec::with_capacity(snapshots.len());
    let mut interior = Vec::with_capacity(snapshots.len());
    let mut min_r = f64::INFINITY;

    for field in snapshots {
        let t = field.t;
        let mut e_acc = CompensatedSum::new();
        let mut i_acc = CompensatedSum::new();
        for i in 0..g.nx1 {
            let x1 = g.x1_center(i);
            for j in 0..g.nx2 {
                let rs = reference.sample(t, x1, g.x2_center(j))?;
                min_r = min_r.min(rs.r);
                if !(rs.r > 0.0) {
                    return Err(EntropyError::NonPositiveReference { min: rs.r });
                }
                let s = field.state(g.index(i, j));
                e_acc.add(relative_entropy(&s, &State::new(rs.r, rs.u), law)?);
                i_acc.add(rei_interior_density(&s, &rs, law));
            }
        }
        let mut b_acc = CompensatedSum::new();
        for &(x1, ext, sign) in &exterior {
            for j in 0..g.nx2 {
                let rs = reference.sample(t, x1, g.x2_center(j))?;
                if !(rs.r > 0.0) {
                    return Err(EntropyError::NonPositiveReference { min: rs.r });
                }
                let e = relative_entropy(&ext, &State::new(rs.r, rs.u), law)? * ext.u[0];
                let w = (law.pressure(ext.rho) - law.pressure(rs.r)) * (ext.u[0] - rs.u[0]);
                b_acc.add(sign * (e + w));
            }
        }
        times.push(t);
        energy.push(e_acc.value() * g.cell_area());
        interior.push(i_acc.value() * g.cell_area());
        boundary.push(b_acc.value() * g.h2());
    }

    let boundary_int = cumulative_trapezoid(&times, &boundary);
    let rhs = cumulative_trapezoid(&times, &interior);
    let lhs: Vec<f64> = (0..times.len())
        .map(|k| energy[k] - energy[0] + boundary_int[k])
        .collect();
    let residual = lhs.iter().zip(&rhs).map(|(l, r)| l - r).collect();
    Ok(ReiResidual { times, lhs, rhs, residual, interior_rate: interior })
}

/// Scaled defects of the three identities that turn the fan-referenced
/// inequality into its simplified form.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct IdentityDefects {
    /// Momentum-equation rewrite of the inertial term.
    pub momentum: f64,
    /// Splitting of the pressure term.
    pub pressure_split: f64,
    /// Rewrite of the potential term using `H'' = p'/rho`.
    pub potential: f64,
}

impl IdentityDefects {
    pub fn max(&self) -> f64 {
        self.momentum.max(self.pressure_split).max(self.potential)
    }
}

fn scaled_defect(lhs: f64, rhs: f64, terms: &[f64]) -> f64 {
    let scale = terms.iter().fold(1.0f64, |m, t| m.max(t.abs()));
    (lhs - rhs).abs() / scale
}

/// Scaled defect of `(p(r) - p(rho)) = -p'(r)(rho - r) - B_p(rho, r)`
/// multiplied through by `du_dx`.
pub fn pressure_split_defect(law: &PressureLaw, rho: f64, r: f64, du_dx: f64) -> f64 {
    let lhs = (law.pressure(r) - law.pressure(rho)) * du_dx;
    let linear = -law.dpressure(r) * (rho - r) * du_dx;
    let bregman = -law.pressure_bregman(rho, r) * du_dx;
    scaled_defect(lhs, linear + bregman, &[lhs, linear, bregman])
}

/// Richardson-extrapolated central difference.
fn derivative<F>(f: F, x: f64, h: f64) -> Result<f64, EntropyError>
where
    F: Fn(f64) -> Result<f64, EntropyError>,
{
    let d = |h: f64| -> Result<f64, EntropyError> { Ok((f(x + h)? - f(x - h)?) / (2.0 * h)) };
    let coarse = d(h)?;
    let fine = d(0.5 * h)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Checks the three identities at `(t, x1)` for each `x1` in `points`,
/// with fan derivatives from Richardson-extrapolated differences of step
/// `fd_step`. Each point is tested against several free states `(rho, u1)`.
pub fn check_identities(
    fan: &WaveFan,
    t: f64,
    points: &[f64],
    fd_step: f64,
) -> Result<IdentityDefects, EntropyError> {
    if !(t > 0.0) || !(fd_step > 0.0) {
        return Err(EntropyError::InvalidInput("check_identities needs t > 0 and a positive step".into()));
    }
    let law = fan.law();
    let s = fan.speeds();
    let mid = fan.middle();
    let d = fan.data();
    let mut edges = Vec::new();
    if mid.rho < d.rho_l {
        edges.extend([s.xi_1l, s.xi_1c]);
    }
    if mid.rho < d.rho_r {
        edges.extend([s.xi_2c, s.xi_2r]);
    }

    let rho_at = |t: f64, x: f64| -> Result<f64, EntropyError> { Ok(fan.sample(t, x)?.rho) };
    let u_at = |t: f64, x: f64| -> Result<f64, EntropyError> { Ok(fan.sample(t, x)?.u1) };
    let mut out = IdentityDefects::default();
    for &x in points {
        let xi = x / t;
        // the time stencil moves xi by about xi h / t
        let reach = fd_step * (1.0 + xi.abs());
        if let Some(&edge) = edges.iter().find(|&&e| (x - e * t).abs() <= reach) {
            return Err(EntropyError::SamplingOnKink { x1: x, edge: edge * t });
        }
        let pt = fan.sample(t, x)?;
        let (rt, ut) = (pt.rho, pt.u1);
        let h = fd_step;
        let du_dt = derivative(|s| u_at(s, x), t, h)?;
        let du_dx = derivative(|y| u_at(t, y), x, h)?;
        let dr_dt = derivative(|s| rho_at(s, x), t, h)?;
        let dr_dx = derivative(|y| rho_at(t, y), x, h)?;
        let dp_dx = derivative(|y| Ok(law.pressure(rho_at(t, y)?)), x, h)?;
        let dh_dt = derivative(|s| Ok(law.dpressure_potential(rho_at(s, x)?)?), t, h)?;
        let dh_dx = derivative(|y| Ok(law.dpressure_potential(rho_at(t, y)?)?), x, h)?;
        let dp = law.dpressure(rt);

        for (rho, u) in [(0.0, ut), (0.5 * rt, ut - 0.75), (2.0 * rt, ut + 0.5), (rt, ut)] {
            let w = ut - u;
            let lhs1 = rho * (du_dt + u * du_dx) * w;
            let a1 = -(rho / rt) * dp_dx * w;
            let b1 = -rho * du_dx * w * w;
            out.momentum = out.momentum.max(scaled_defect(lhs1, a1 + b1, &[lhs1, a1, b1]));

            out.pressure_split = out.pressure_split.max(pressure_split_defect(law, rho, rt, du_dx));

            let lhs3 = (rt - rho) * dh_dt + (rt * ut - rho * u) * dh_dx;
            let terms = [
                dp * dr_dt,
                -(rho / rt) * dp * dr_dt,
                ut * dp * dr_dx,
                -(rho / rt) * u * dp * dr_dx,
            ];
            let rhs3: f64 = terms.iter().sum();
            let mut all = terms.to_vec();
            all.push(lhs3);
            out.potential = out.potential.max(scaled_defect(lhs3, rhs3, &all));
        }
    }
    Ok(out)
}

/// Smallest eigenvalue of `G + G^t` for a 2x2 velocity gradient
/// `grad[a][b] = d u^a / d x_b`.
pub fn min_symmetric_eigenvalue(grad: [[f64; 2]; 2]) -> f64 {
    let (a, d) = (grad[0][0], grad[1][1]);
    let off = grad[0][1] + grad[1][0];
    (a + d) - ((a - d).powi(2) + off * off).sqrt()
}

/// Minimum over interior `x1` cells (all `x2` cells, periodic) of the
/// smallest eigenvalue of the symmetrized central-difference velocity
/// gradient.
pub fn one_sided_bound(field: &FieldState) -> Result<f64, EntropyError> {
    check_field(field)?;
    let g = field.grid;
    if let Some(cell) = field.rho.iter().position(|&r| r <= RHO_VACUUM) {
        return Err(EntropyError::VacuumCell { cell, rho: field.rho[cell] });
    }
    let vel = |i: usize, j: usize| {
        let k = g.index(i, j);
        [field.m1[k] / field.rho[k], field.m2[k] / field.rho[k]]
    };
    let (h1, h2) = (g.h1(), g.h2());
    let mut min = f64::INFINITY;
    for i in 1..g.nx1 - 1 {
        for j in 0..g.nx2 {
            let (e, w) = (vel(i + 1, j), vel(i - 1, j));
            let (n, s) = (vel(i, (j + 1) % g.nx2), vel(i, (j + g.nx2 - 1) % g.nx2));
            let grad = [
                [(e[0] - w[0]) / (2.0 * h1), (n[0] - s[0]) / (2.0 * h2)],
                [(e[1] - w[1]) / (2.0 * h1), (n[1] - s[1]) / (2.0 * h2)],
            ];
            min = min.min(min_symmetric_eigenvalue(grad));
        }
    }
    Ok(min)
}

/// Midpoint-rule total energy `int eta dx`.
pub fn total_energy(field: &FieldState, law: &PressureLaw) -> Result<f64, EntropyError> {
    check_field(field)?;
    let mut acc = CompensatedSum::new();
    for k in 0..field.rho.len() {
        acc.add(entropy_pair(&field.state(k), law)?.0);
    }
    Ok(acc.value() * field.grid.cell_area())
}

/// Net energy outflow rate `q(right) - q(left)` through `x1 = +-a` with
/// the far-field states, per unit `x2`-length.
pub fn far_field_energy_flux(law: &PressureLaw, data: &RiemannData) -> Result<(f64, f64), EntropyError> {
    let (_, q_l) = entropy_pair(&State::new(data.rho_l, [data.u1_l, 0.0]), law)?;
    let (_, q_r) = entropy_pair(&State::new(data.rho_r, [data.u1_r, 0.0]), law)?;
    Ok((q_l, q_r))
}

/// Energy-inequality slack `int eta(t_k) - int eta(t_0) + (t_k - t_0)(q_R - q_L)`
/// for each snapshot; nonpositive for admissible solutions.
pub fn energy_budget(
    snapshots: &[FieldState],
    law: &PressureLaw,
    data: &RiemannData,
) -> Result<Vec<f64>, EntropyError> {
    check_trajectory(snapshots)?;
    let (q_l, q_r) = far_field_energy_flux(law, data)?;
    let e0 = total_energy(&snapshots[0], law)?;
    let t0 = snapshots[0].t;
    snapshots
        .iter()
        .map(|s| Ok(total_energy(s, law)? - e0 + (s.t - t0) * (q_r - q_l)))
        .collect()
}

/// `|midpoint - exact|` for the total energy of the fan at time `t` on
/// `grid`, with the exact integral from adaptive quadrature between the
/// fan edges.
pub fn fan_energy_sampling_error(fan: &WaveFan, grid: &Grid, t: f64) -> Result<f64, EntropyError> {
    let law = fan.law();
    let field = fan.evaluate_field(t, grid)?;
    let midpoint = total_energy(&field, law)?;
    let mut breaks = vec![-grid.a];
    if t > 0.0 {
        breaks.extend(fan.speeds().as_array().iter().map(|xi| (xi * t).clamp(-grid.a, grid.a)));
    } else {
        breaks.push(0.0);
    }
    breaks.push(grid.a);
    let eta = |x: f64| -> f64 {
        match WaveFan::sample(fan, t, x) {
            Ok(pt) => entropy_pair(&State::new(pt.rho, [pt.u1, 0.0]), law).map_or(f64::NAN, |e| e.0),
            Err(_) => f64::NAN,
        }
    };
    let mut exact = CompensatedSum::new();
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            // shift off the edges so each piece sees one smooth branch
            let eps = 1e-13 * (w[1] - w[0]);
            exact.add(adaptive_simpson(eta, w[0] + eps, w[1] - eps, 1e-12, MAX_SUBDIVISIONS)
                .map_err(EosError::from)?);
        }
    }
    // |T^1| = 1
    Ok((midpoint - exact.value()).abs())
}

/// Certification settings; all tolerances relative to the scales below.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct CertifySettings {
    pub rei_constant: f64,
    pub energy_tol: f64,
    pub sign_tol: f64,
}

impl Default for CertifySettings {
    fn default() -> Self {
        CertifySettings { rei_constant: DEFAULT_REI_CONSTANT, energy_tol: ENERGY_TOL, sign_tol: SIGN_TOL }
    }
}

/// Where the certified trajectory came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrajectorySource {
    /// Output of the finite-volume solver with the given largest time step.
    Numerical { dt_max: f64 },
    /// The fan itself sampled at cell centers.
    ExactSamples,
}

/// Tolerances actually applied, recorded for audit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AppliedTolerances {
    pub rei_constant: f64,
    pub h: f64,
    pub dt: f64,
    /// `rei_constant * (h + dt)`.
    pub tol_rei: f64,
    pub energy_tol: f64,
    /// Energy scale `int |eta(0)| + |q_L| + |q_R|`.
    pub energy_scale: f64,
    /// Per-snapshot quadrature allowance added to the energy tolerance.
    pub energy_allowance: Vec<f64>,
    pub sign_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Checks {
    /// `int E` rises by at most `tol_rei` between consecutive snapshots.
    pub relative_entropy_decay: bool,
    /// Energy slack stays below its tolerance at every snapshot.
    pub energy_inequality: bool,
    /// The simplified right-hand side is never positive beyond roundoff.
    pub rei2_sign: bool,
}

/// Time series and verdicts of a certification run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    pub times: Vec<f64>,
    pub total_relative_entropy: Vec<f64>,
    pub rei2_rhs: Vec<f64>,
    pub energy_slack: Vec<f64>,
    pub one_sided_min_eig: Vec<f64>,
    pub vacuum_cells: Vec<usize>,
    pub tolerances: AppliedTolerances,
    pub checks: Checks,
}

impl CertificateReport {
    /// True when every check passed. This certifies closeness to the fan
    /// within tolerance, which is evidence of uniqueness, not a proof.
    pub fn certified(&self) -> bool {
        self.checks.relative_entropy_decay && self.checks.energy_inequality && self.checks.rei2_sign
    }

    /// Largest increase of `int E` between consecutive snapshots.
    pub fn max_relative_entropy_rise(&self) -> f64 {
        self.total_relative_entropy
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Runs every certificate over a trajectory against `fan`.
pub fn certify(
    snapshots: &[FieldState],
    fan: &WaveFan,
    settings: &CertifySettings,
    source: TrajectorySource,
) -> Result<CertificateReport, EntropyError> {
    let grid = check_trajectory(snapshots)?;
    let law = fan.law();
    let data = fan.data();
    let n = snapshots.len();

    let mut times = Vec::with_capacity(n);
    let mut rel = Vec::with_capacity(n);
    let mut rei2 = Vec::with_capacity(n);
    let mut eig = Vec::with_capacity(n);
    let mut vac = Vec::with_capacity(n);
    for s in snapshots {
        times.push(s.t);
        rel.push(total_relative_entropy(s, fan, s.t)?);
        // at t = 0 the fan is a jump between cell centers; its sampled
        // gradient vanishes
        rei2.push(if s.t > 0.0 { rei2_rhs(s, fan, s.t)? } else { 0.0 });
        eig.push(one_sided_bound(s)?);
        vac.push(vacuum_cells(s));
    }
    let slack = energy_budget(snapshots, law, data)?;

    let (q_l, q_r) = far_field_energy_flux(law, data)?;
    let mut abs_energy = CompensatedSum::new();
    for k in 0..snapshots[0].rho.len() {
        abs_energy.add(entropy_pair(&snapshots[0].state(k), law)?.0.abs());
    }
    let energy_scale = abs_energy.value() * grid.cell_area() + q_l.abs() + q_r.abs();

    let (dt, energy_allowance) = match source {
        TrajectorySource::Numerical { dt_max } => (dt_max, vec![0.0; n]),
        TrajectorySource::ExactSamples => {
            let e0 = fan_energy_sampling_error(fan, &grid, times[0])?;
            let allowance = times
                .iter()
                .map(|&t| Ok(fan_energy_sampling_error(fan, &grid, t)? + e0))
                .collect::<Result<Vec<f64>, EntropyError>>()?;
            (0.0, allowance)
        }
    };
    let h = grid.h1();
    let tol_rei = settings.rei_constant * (h + dt);

    let decay = rel.windows(2).all(|w| w[1] <= w[0] + tol_rei);
    let energy = (0..n).all(|k| {
        let tol = settings.energy_tol * energy_scale * (times[k] - times[0]) + energy_allowance[k];
        slack[k] <= tol
    });
    let sign = rei2.iter().all(|&r| r <= settings.sign_tol * energy_scale);

    Ok(CertificateReport {
        times,
        total_relative_entropy: rel,
        rei2_rhs: rei2,
        energy_slack: slack,
        one_sided_min_eig: eig,
        vacuum_cells: vac,
        tolerances: AppliedTolerances {
            rei_constant: settings.rei_constant,
            h,
            dt,
            tol_rei,
            energy_tol: settings.energy_tol,
            energy_scale,
            energy_allowance,
            sign_tol: settings.sign_tol,
        },
        checks: Checks { relative_entropy_decay: decay, energy_inequality: energy, rei2_sign: sign },
    })
}

/// Fan region containing the cell center `x1` at time `t`; used by reports.
pub fn region_at(fan: &WaveFan, t: f64, x1: f64) -> FanRegion {
    if t > 0.0 {
        fan.region(x1 / t)
    } else if x1 <= 0.0 {
        FanRegion::Left
    } else {
        FanRegion::Right
    }
}
