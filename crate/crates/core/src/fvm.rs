//! First-order Rusanov finite-volume solver on `(-a, a) x T^1`.
//!
//! The `x2` direction is periodic with unit period. In `x1` the solution is
//! extended by ghost cells frozen at the far-field Riemann states, so the
//! boundary fluxes are exactly the far-field fluxes as long as no wave has
//! reached `x1 = +-a`. [`run`] checks that condition at start-up from the
//! fan speeds and after every step from the boundary cells.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entropy::State;
use crate::eos::{EosError, PressureLaw};
use crate::numerics::CompensatedSum;
use crate::riemann::{classify, Regime, RiemannData, RiemannError, WaveFan};

/// Densities below this are treated as vacuum (zero velocity).
pub const RHO_VACUUM: f64 = 1e-12;
/// Default Courant number.
pub const DEFAULT_CFL: f64 = 0.45;
/// Default cap on snapshots held in memory by [`run`].
pub const DEFAULT_MAX_SNAPSHOTS: usize = 64;
/// Relative deviation from the far-field state tolerated in boundary cells.
pub const BOUNDARY_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FvmError {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("time step violates the CFL bound (Courant number {courant:.6} > {cfl})")]
    CflViolation { courant: f64, cfl: f64 },
    #[error("negative density {rho:e} in cell {cell} at t = {t}")]
    NegativeDensity { t: f64, cell: usize, rho: f64 },
    #[error("a wave reached the x1 boundary at t = {t}")]
    BoundaryReached { t: f64 },
    #[error("run would store {needed} snapshots, more than the in-memory cap of {cap}")]
    SnapshotCapExceeded { needed: usize, cap: usize },
    #[error("field does not match grid: {0}")]
    GridMismatch(String),
    #[error("snapshot sink failed: {0}")]
    Sink(String),
    #[error(transparent)]
    Riemann(#[from] RiemannError),
    #[error(transparent)]
    Eos(#[from] EosError),
}

/// Uniform grid on `(-a, a) x T^1`; `x1 = 0` is always a cell face.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub a: f64,
    pub nx1: usize,
    pub nx2: usize,
}

impl Grid {
    pub fn new(a: f64, nx1: usize, nx2: usize) -> Result<Self, FvmError> {
        let grid = Grid { a, nx1, nx2 };
        grid.check()?;
        Ok(grid)
    }

    pub fn check(&self) -> Result<(), FvmError> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(FvmError::Grid(format!("half-width must be positive, got {}", self.a)));
        }
        if self.nx1 < 4 {
            return Err(FvmError::Grid(format!("nx1 must be at least 4, got {}", self.nx1)));
        }
        if !self.nx1.is_multiple_of(2) {
            return Err(FvmError::Grid(format!(
                "nx1 must be even so that x1 = 0 is a face, got {}",
                self.nx1
            )));
        }
        if self.nx2 < 1 {
            return Err(FvmError::Grid("nx2 must be at least 1".into()));
        }
        Ok(())
    }

    pub fn h1(&self) -> f64 {
        2.0 * self.a / self.nx1 as f64
    }

    pub fn h2(&self) -> f64 {
        1.0 / self.nx2 as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.h1() * self.h2()
    }

    pub fn cells(&self) -> usize {
        self.nx1 * self.nx2
    }

    pub fn x1_center(&self, i: usize) -> f64 {
        -self.a + (i as f64 + 0.5) * self.h1()
    }

    pub fn x2_center(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.h2()
    }

    /// Row-major index with `x2` fastest.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.nx2 + j
    }
}

/// Cell averages of `(rho, m1, m2)` at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub grid: Grid,
    pub t: f64,
    pub rho: Vec<f64>,
    pub m1: Vec<f64>,
    pub m2: Vec<f64>,
}

impl FieldState {
    pub fn zeros(grid: Grid, t: f64) -> Self {
        let n = grid.cells();
        FieldState { grid, t, rho: vec![0.0; n], m1: vec![0.0; n], m2: vec![0.0; n] }
    }

    /// Checks array lengths against the grid and, if given, that the grid
    /// matches `expected`.
    pub fn check(&self, expected: Option<&Grid>) -> Result<(), FvmError> {
        let n = self.grid.cells();
        if self.rho.len() != n || self.m1.len() != n || self.m2.len() != n {
            return Err(FvmError::GridMismatch(format!(
                "arrays of length ({}, {}, {}) on a grid of {n} cells",
                self.rho.len(),
                self.m1.len(),
                self.m2.len()
            )));
        }
        if let Some(g) = expected {
            if g != &self.grid {
                return Err(FvmError::GridMismatch(format!("{:?} vs {:?}", self.grid, g)));
            }
        }
        Ok(())
    }

    /// Primitive state of cell `k`; vacuum cells get zero velocity.
    pub fn state(&self, k: usize) -> State {
        State::from_conserved(self.rho[k], self.m1[k], self.m2[k])
    }

    /// Integrals of `(rho, m1, m2)` over the domain.
    pub fn totals(&self) -> [f64; 3] {
        let area = self.grid.cell_area();
        let sum = |v: &[f64]| v.iter().copied().collect::<CompensatedSum>().value() * area;
        [sum(&self.rho), sum(&self.m1), sum(&self.m2)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    Rho,
    M1,
    M2,
}

/// Initial perturbation `amplitude * sin(2 pi mode x2 + phase) * envelope(x1)`.
///
/// With `support = Some(w)` the envelope is 1 for `|x1| <= w/2` and decays
/// as `cos^2` to zero at `|x1| = w`; with `None` it is 1 everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub amplitude: f64,
    pub mode: u32,
    pub component: Component,
    #[serde(default)]
    pub phase: f64,
    #[serde(default)]
    pub support: Option<f64>,
}

impl Perturbation {
    pub fn envelope(&self, x1: f64) -> f64 {
        match self.support {
            None => 1.0,
            Some(w) => {
                let r = x1.abs();
                if r <= 0.5 * w {
                    1.0
                } else if r >= w {
                    0.0
                } else {
                    let c = (std::f64::consts::PI * (r - 0.5 * w) / w).cos();
                    c * c
                }
            }
        }
    }

    pub fn value(&self, x1: f64, x2: f64) -> f64 {
        let arg = 2.0 * std::f64::consts::PI * self.mode as f64 * x2 + self.phase;
        self.amplitude * arg.sin() * self.envelope(x1)
    }

    /// Half-width of the region where the perturbation is nonzero.
    pub fn extent(&self, a: f64) -> f64 {
        self.support.unwrap_or(a)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub grid: Grid,
    pub law: PressureLaw,
    pub data: RiemannData,
    pub cfl: f64,
    pub t_end: f64,
    pub snapshot_every: f64,
    pub perturbation: Option<Perturbation>,
    pub max_snapshots: usize,
    /// Relative deviation from the far-field states tolerated in the
    /// boundary cells before the run is stopped.
    pub boundary_tol: f64,
}

impl SimConfig {
    pub fn new(grid: Grid, law: PressureLaw, data: RiemannData, t_end: f64) -> Self {
        SimConfig {
            grid,
            law,
            data,
            cfl: DEFAULT_CFL,
            t_end,
            snapshot_every: t_end,
            perturbation: None,
            max_snapshots: DEFAULT_MAX_SNAPSHOTS,
            boundary_tol: BOUNDARY_TOL,
        }
    }

    /// Largest signal speed the run must contain: the outer fan speeds for
    /// rarefaction data, otherwise the far-field characteristic speeds.
    pub fn max_signal_speed(&self) -> Result<f64, FvmError> {
        let d = &self.data;
        let c_l = self.law.sound_speed(d.rho_l)?;
        let c_r = self.law.sound_speed(d.rho_r)?;
        let far = (d.u1_l.abs() + c_l).max(d.u1_r.abs() + c_r);
        if let Ok(c) = classify(d, &self.law) {
            if c.regime == Regime::RarefactionsOnly {
                return Ok(WaveFan::new(d, &self.law)?.max_speed().max(far));
            }
        }
        Ok(far)
    }

    pub fn validate(&self) -> Result<(), FvmError> {
        self.grid.check()?;
        self.data.check()?;
        if let Err(e) = self.law.validate() {
            return Err(FvmError::Config(format!("pressure law rejected: {e}")));
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(FvmError::Config(format!("cfl must lie in (0, 1), got {}", self.cfl)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(FvmError::Config(format!("t_end must be positive, got {}", self.t_end)));
        }
        if !(self.snapshot_every > 0.0) {
            return Err(FvmError::Config("snapshot_every must be positive".into()));
        }
        if self.max_snapshots < 2 {
            return Err(FvmError::Config("max_snapshots must be at least 2".into()));
        }
        let support = self.perturbation.map_or(0.0, |p| p.extent(self.grid.a));
        let reach = support + self.t_end * self.max_signal_speed()? + 2.0 * self.grid.h1();
        if reach >= self.grid.a {
            return Err(FvmError::Config(format!(
                "t_end = {} lets waves reach x1 = +-{} (reach {reach:.4})",
                self.t_end, self.grid.a
            )));
        }
        if let Some(p) = &self.perturbation {
            if p.component == Component::Rho && p.amplitude.abs() >= self.data.rho_l.min(self.data.rho_r) {
                return Err(FvmError::Config("density perturbation would create vacuum".into()));
            }
        }
        Ok(())
    }

    /// Number of snapshots [`run`] will record, `t = 0` and `t_end` included.
    pub fn snapshot_count(&self) -> usize {
        snapshot_times(self.t_end, self.snapshot_every).len()
    }
}

/// Snapshot times `0, dt, 2 dt, ...` with `t_end` always last.
pub fn snapshot_times(t_end: f64, every: f64) -> Vec<f64> {
    let mut times = vec![0.0];
    let mut k = 1u64;
    loop {
        let t = k as f64 * every;
        if t >= t_end * (1.0 - 1e-12) {
            break;
        }
        times.push(t);
        k += 1;
    }
    times.push(t_end);
    times
}

/// Cell averages of the Riemann data plus the optional perturbation.
pub fn init(config: &SimConfig) -> Result<FieldState, FvmError> {
    config.grid.check()?;
    config.data.check()?;
    let g = config.grid;
    let d = &config.data;
    let mut field = FieldState::zeros(g, 0.0);
    for i in 0..g.nx1 {
        let (rho, u1) = if i < g.nx1 / 2 { (d.rho_l, d.u1_l) } else { (d.rho_r, d.u1_r) };
        for j in 0..g.nx2 {
            let k = g.index(i, j);
            field.rho[k] = rho;
            field.m1[k] = rho * u1;
            if let Some(p) = &config.perturbation {
                let dv = p.value(g.x1_center(i), g.x2_center(j));
                match p.component {
                    Component::Rho => field.rho[k] += dv,
                    Component::M1 => field.m1[k] += dv,
                    Component::M2 => field.m2[k] += dv,
                }
            }
        }
    }
    Ok(field)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X1,
    X2,
}

/// Exact Euler flux of conserved `(rho, m1, m2)` in direction `axis`, and
/// the local signal speed `|u_axis| + c`.
#[inline]
fn physical_flux(law: &PressureLaw, u: [f64; 3], axis: Axis) -> ([f64; 3], f64) {
    let rho = u[0];
    let (v1, v2) = if rho > RHO_VACUUM { (u[1] / rho, u[2] / rho) } else { (0.0, 0.0) };
    let p = law.pressure(rho);
    let c = law.sound_speed_or_vacuum(rho);
    match axis {
        Axis::X1 => ([u[1], u[1] * v1 + p, u[1] * v2], v1.abs() + c),
        Axis::X2 => ([u[2], u[2] * v1, u[2] * v2 + p], v2.abs() + c),
    }
}

#[inline]
fn rusanov(law: &PressureLaw, left: [f64; 3], right: [f64; 3], axis: Axis) -> [f64; 3] {
    let (fl, sl) = physical_flux(law, left, axis);
    let (fr, sr) = physical_flux(law, right, axis);
    let s = sl.max(sr);
    [
        0.5 * (fl[0] + fr[0]) - 0.5 * s * (right[0] - left[0]),
        0.5 * (fl[1] + fr[1]) - 0.5 * s * (right[1] - left[1]),
        0.5 * (fl[2] + fr[2]) - 0.5 * s * (right[2] - left[2]),
    ]
}

/// Local Lax-Friedrichs (Rusanov) flux between two states.
pub fn numerical_flux(left: &State, right: &State, law: &PressureLaw, axis: Axis) -> [f64; 3] {
    rusanov(law, left.conserved(), right.conserved(), axis)
}

/// Far-field ghost states `(left, right)` in conserved variables.
pub fn ghost_states(data: &RiemannData) -> ([f64; 3], [f64; 3]) {
    (
        [data.rho_l, data.rho_l * data.u1_l, 0.0],
        [data.rho_r, data.rho_r * data.u1_r, 0.0],
    )
}

/// Largest `|u| + c` over all cells and both ghost states.
pub fn max_wave_speed(field: &FieldState, law: &PressureLaw, data: &RiemannData) -> f64 {
    let mut s: f64 = 0.0;
    for k in 0..field.rho.len() {
        let st = field.state(k);
        let speed = (st.u[0] * st.u[0] + st.u[1] * st.u[1]).sqrt();
        s = s.max(speed + law.sound_speed_or_vacuum(st.rho));
    }
    for (rho, u) in [(data.rho_l, data.u1_l), (data.rho_r, data.u1_r)] {
        s = s.max(u.abs() + law.sound_speed_or_vacuum(rho));
    }
    s
}

/// `cfl * min(h1, h2) / max(|u| + c)`.
pub fn stable_dt(field: &FieldState, config: &SimConfig) -> f64 {
    let g = &config.grid;
    config.cfl * g.h1().min(g.h2()) / max_wave_speed(field, &config.law, &config.data)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub field: FieldState,
    /// `dt * int_T (F(a) - F(-a)) dx2` for `(rho, m1, m2)`: net outflow
    /// through the `x1` boundary during the step.
    pub boundary_outflow: [f64; 3],
}

/// One explicit Euler step of size `dt` with Rusanov fluxes on every face.
pub fn step(field: &FieldState, config: &SimConfig, dt: f64) -> Result<StepOutcome, FvmError> {
    let g = config.grid;
    field.check(Some(&g))?;
    let law = &config.law;
    let smax = max_wave_speed(field, law, &config.data);
    let courant = dt * smax / g.h1().min(g.h2());
    if !(dt > 0.0) || courant > config.cfl * (1.0 + 1e-12) {
        return Err(FvmError::CflViolation { courant, cfl: config.cfl });
    }
    let (ghost_l, ghost_r) = ghost_states(&config.data);
    let (nx1, nx2) = (g.nx1, g.nx2);
    let cons = |i: usize, j: usize| {
        let k = g.index(i, j);
        [field.rho[k], field.m1[k], field.m2[k]]
    };

    // x1 faces: face i sits between cells i-1 and i, ghosts at both ends.
    let mut fx = vec![[0.0; 3]; (nx1 + 1) * nx2];
    for j in 0..nx2 {
        for i in 0..=nx1 {
            let left = if i == 0 { ghost_l } else { cons(i - 1, j) };
            let right = if i == nx1 { ghost_r } else { cons(i, j) };
            fx[i * nx2 + j] = rusanov(law, left, right, Axis::X1);
        }
    }
    // x2 faces: face j sits between cells j and j+1 (periodic).
    let mut fy = Vec::new();
    if nx2 > 1 {
        fy = vec![[0.0; 3]; nx1 * nx2];
        for i in 0..nx1 {
            for j in 0..nx2 {
                fy[g.index(i, j)] = rusanov(law, cons(i, j), cons(i, (j + 1) % nx2), Axis::X2);
            }
        }
    }

    let (l1, l2) = (dt / g.h1(), dt / g.h2());
    let mut next = FieldState::zeros(g, field.t + dt);
    for i in 0..nx1 {
        for j in 0..nx2 {
            let k = g.index(i, j);
            let (fl, fr) = (fx[i * nx2 + j], fx[(i + 1) * nx2 + j]);
            let mut u = cons(i, j);
            for c in 0..3 {
                u[c] -= l1 * (fr[c] - fl[c]);
            }
            if nx2 > 1 {
                let gd = fy[g.index(i, (j + nx2 - 1) % nx2)];
                let gu = fy[k];
                for c in 0..3 {
                    u[c] -= l2 * (gu[c] - gd[c]);
                }
            }
            if !(u[0] >= 0.0) {
                return Err(FvmError::NegativeDensity { t: field.t + dt, cell: k, rho: u[0] });
            }
            next.rho[k] = u[0];
            next.m1[k] = u[1];
            next.m2[k] = u[2];
        }
    }

    let mut outflow = [CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new()];
    for j in 0..nx2 {
        let (fl, fr) = (fx[j], fx[nx1 * nx2 + j]);
        for c in 0..3 {
            outflow[c].add(fr[c] - fl[c]);
        }
    }
    let scale = dt * g.h2();
    let boundary_outflow = [
        scale * outflow[0].value(),
        scale * outflow[1].value(),
        scale * outflow[2].value(),
    ];
    Ok(StepOutcome { field: next, boundary_outflow })
}

/// Largest deviation of the first and last cell columns from the
/// far-field states, relative to `rho (1 + |u1| + c)` of each state.
pub fn boundary_deviation(field: &FieldState, law: &PressureLaw, data: &RiemannData) -> f64 {
    let g = field.grid;
    let (gl, gr) = ghost_states(data);
    let mut dev: f64 = 0.0;
    for (i, ghost) in [(0usize, gl), (g.nx1 - 1, gr)] {
        let c = law.sound_speed_or_vacuum(ghost[0]);
        let scale = ghost[0] * (1.0 + (ghost[1] / ghost[0]).abs() + c);
        for j in 0..g.nx2 {
            let k = g.index(i, j);
            let d = (field.rho[k] - ghost[0])
                .abs()
                .max((field.m1[k] - ghost[1]).abs())
                .max(field.m2[k].abs());
            dev = dev.max(d / scale);
        }
    }
    dev
}

/// Time-step history and boundary accounting of a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunSummary {
    pub dt_history: Vec<f64>,
    pub snapshot_times: Vec<f64>,
    /// Cumulative net boundary outflow of `(rho, m1, m2)` at each snapshot.
    pub boundary_outflow: Vec<[f64; 3]>,
    /// Largest value of [`boundary_deviation`] seen during the run.
    pub max_boundary_deviation: f64,
}

/// Advances the configured problem to `t_end`, handing every snapshot to
/// `sink` as soon as it is produced.
pub fn run_streaming<S>(config: &SimConfig, mut sink: S) -> Result<RunSummary, FvmError>
where
    S: FnMut(&FieldState) -> Result<(), FvmError>,
{
    config.validate()?;
    let targets = snapshot_times(config.t_end, config.snapshot_every);
    let mut field = init(config)?;
    let mut summary = RunSummary::default();
    let mut outflow = [CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new()];
    let record = |summary: &mut RunSummary, outflow: &[CompensatedSum; 3], t: f64| {
        summary.snapshot_times.push(t);
        summary.boundary_outflow.push([outflow[0].value(), outflow[1].value(), outflow[2].value()]);
    };

    sink(&field)?;
    record(&mut summary, &outflow, 0.0);
    for &target in &targets[1..] {
        while field.t < target {
            let mut dt = stable_dt(&field, config);
            let landing = field.t + dt >= target * (1.0 - 1e-14);
            if landing {
                dt = target - field.t;
            }
            let out = step(&field, config, dt)?;
            field = out.field;
            if landing {
                field.t = target;
            }
            for (acc, v) in outflow.iter_mut().zip(out.boundary_outflow) {
                acc.add(v);
            }
            summary.dt_history.push(dt);
            let dev = boundary_deviation(&field, &config.law, &config.data);
            summary.max_boundary_deviation = summary.max_boundary_deviation.max(dev);
            if !(dev <= config.boundary_tol) {
                return Err(FvmError::BoundaryReached { t: field.t });
            }
        }
        sink(&field)?;
        record(&mut summary, &outflow, field.t);
    }
    Ok(summary)
}

/// An in-memory run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<FieldState>,
    pub summary: RunSummary,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> &FieldState {
        self.snapshots.last().expect("trajectory has snapshots")
    }
}

/// Runs to `t_end` keeping every snapshot in memory. Fails up front if the
/// run would exceed `config.max_snapshots`; use [`run_streaming`] to write
/// longer runs to disk instead.
pub fn run(config: &SimConfig) -> Result<Trajectory, FvmError> {
    let needed = config.snapshot_count();
    if needed > config.max_snapshots {
        return Err(FvmError::SnapshotCapExceeded { needed, cap: config.max_snapshots });
    }
    let mut snapshots = Vec::with_capacity(needed);
    let summary = run_streaming(config, |f| {
        snapshots.push(f.clone());
        Ok(())
    })?;
    Ok(Trajectory { snapshots, summary })
}
