//! Conservative finite-volume discretization and adaptive IMEX time
//! integration.
//!
//! Diffusion is advanced by Crank-Nicolson (cyclic tridiagonal solve on the
//! periodic domain, mirror ghosts otherwise); advection is explicit with a
//! van Leer limited upwind face reconstruction under a CFL cap. The scheme's
//! fixed points coincide exactly with zeros of the semi-discrete right-hand
//! side, so time-stepped steady states and Newton solutions agree.

use crate::diagnostics;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::kernel::KernelSpec;
use crate::linalg::{solve_cyclic_tridiag, solve_tridiag};
use crate::nonlocal::{AdhesionFunction, NonlocalOp, SensingMode};
use crate::scalar::{cast, half, two, Scalar};

#[derive(Clone, Copy, Debug)]
pub struct SimParams<T> {
    pub diffusion: T,
    pub alpha: T,
}

#[derive(Clone, Copy, Debug)]
pub struct Tolerances<T> {
    pub rel: T,
    pub abs: T,
}

impl<T: Scalar> Default for Tolerances<T> {
    fn default() -> Self {
        Tolerances { rel: cast(1e-6), abs: cast(1e-6) }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct StepControl<T> {
    /// Advective CFL number.
    pub cfl: T,
    pub dt_max: T,
    pub dt_init: T,
}

impl<T: Scalar> Default for StepControl<T> {
    fn default() -> Self {
        StepControl { cfl: cast(0.9), dt_max: cast(0.25), dt_init: cast(1e-4) }
    }
}

/// Time-stamped run record: snapshots plus mass, peak-count and energy
/// traces at the output times.
#[derive(Clone, Debug)]
pub struct Kymograph<T> {
    pub times: Vec<T>,
    pub fields: Vec<Field<T>>,
    pub mass: Vec<T>,
    pub peaks: Vec<usize>,
    pub energy: Vec<T>,
}

/// Outcome of an integrate-to-steady-state run.
#[derive(Clone, Debug)]
pub struct SteadyRun<T> {
    pub field: Field<T>,
    pub t: T,
    pub converged: bool,
}

/// Semi-discrete right-hand side of the model on one grid.
pub struct RhsOp<T> {
    grid: Grid<T>,
    op: NonlocalOp<T>,
    params: SimParams<T>,
    periodic: bool,
    k_buf: Vec<T>,
    flux: Vec<T>,
    lap_buf: Vec<T>,
}

impl<T: Scalar> RhsOp<T> {
    pub fn new(
        grid: &Grid<T>,
        spec: &KernelSpec<T>,
        mode: &SensingMode<T>,
        h: &AdhesionFunction<T>,
        params: SimParams<T>,
    ) -> Result<Self> {
        let op = NonlocalOp::new(grid, spec, mode, h)?;
        let m = grid.cell_count();
        Ok(RhsOp {
            grid: *grid,
            op,
            params,
            periodic: mode.is_periodic(),
            k_buf: vec![T::zero(); m],
            flux: vec![T::zero(); m + 1],
            lap_buf: vec![T::zero(); m],
        })
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn params(&self) -> SimParams<T> {
        self.params
    }

    pub fn set_alpha(&mut self, alpha: T) {
        self.params.alpha = alpha;
    }

    pub fn nonlocal(&self) -> &NonlocalOp<T> {
        &self.op
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    /// Advective divergence `-(F_{i+1/2} - F_{i-1/2}) / dx` into `out`;
    /// returns the maximal face speed for the CFL cap.
    pub fn advective_divergence(&mut self, u: &[T], out: &mut [T]) -> Result<T> {
        let m = self.grid.cell_count();
        let dx = self.grid.dx();
        let alpha = self.params.alpha;
        let periodic = self.periodic;
        self.op.apply_into(u, &mut self.k_buf)?;

        let mi = m as isize;
        let at = |v: &[T], i: isize| -> T {
            if periodic {
                v[(((i % mi) + mi) % mi) as usize]
            } else {
                v[i.clamp(0, mi - 1) as usize]
            }
        };

        let mut max_speed = T::zero();
        // flux[i] holds the advective flux at the left face of cell i. The
        // two upwind-biased face values are blended by the velocity sign
        // through a regularized split, so the flux is C1 in the state and
        // the Newton solver sees a consistent Jacobian.
        for i in 0..=m {
            if !periodic && (i == 0 || i == m) {
                self.flux[i] = T::zero();
                continue;
            }
            if periodic && i == m {
                self.flux[m] = self.flux[0];
                continue;
            }
            let il = i as isize - 1;
            let ic = i as isize;
            let vel = alpha * (at(&self.k_buf, il) + at(&self.k_buf, ic)) * half::<T>();
            max_speed = max_speed.max(vel.abs());
            let face_fwd = limited_face(at(u, il - 1), at(u, il), at(u, ic));
            let face_bwd = limited_face(at(u, ic + 1), at(u, ic), at(u, il));
            let nu = cast::<T>(1e-6) * alpha.abs();
            let vel_abs = smooth_abs(vel, nu);
            let vel_plus = (vel + vel_abs) * half::<T>();
            let vel_minus = (vel - vel_abs) * half::<T>();
            self.flux[i] = vel_plus * face_fwd + vel_minus * face_bwd;
        }
        for i in 0..m {
            out[i] = (self.flux[i] - self.flux[i + 1]) / dx;
        }
        Ok(max_speed)
    }

    /// Second difference `(u_{i+1} - 2 u_i + u_{i-1}) / dx^2`, mirror ghosts
    /// on bounded domains (zero diffusive flux through the walls).
    pub fn laplacian(&self, u: &[T], out: &mut [T]) {
        let m = self.grid.cell_count();
        let dx2 = self.grid.dx() * self.grid.dx();
        if self.periodic {
            for i in 0..m {
                let up = if i + 1 == m { 0 } else { i + 1 };
                let dn = if i == 0 { m - 1 } else { i - 1 };
                out[i] = (u[up] - two::<T>() * u[i] + u[dn]) / dx2;
            }
        } else {
            for i in 0..m {
                let up = (i + 1).min(m - 1);
                let dn = i.saturating_sub(1);
                out[i] = (u[up] - two::<T>() * u[i] + u[dn]) / dx2;
            }
        }
    }

    /// Full semi-discrete right-hand side.
    pub fn eval(&mut self, u: &[T], out: &mut [T]) -> Result<()> {
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState(f64::NAN));
        }
        let m = self.grid.cell_count();
        let mut lap = std::mem::take(&mut self.lap_buf);
        self.laplacian(u, &mut lap);
        self.advective_divergence(u, out)?;
        for i in 0..m {
            out[i] += self.params.diffusion * lap[i];
        }
        self.lap_buf = lap;
        Ok(())
    }

    /// One IMEX step: explicit limited advection, Crank-Nicolson diffusion.
    /// Returns the maximal advective face speed.
    fn imex_step(&mut self, u: &[T], dt: T, out: &mut Vec<T>) -> Result<T> {
        let m = self.grid.cell_count();
        let d = self.params.diffusion;
        let dx = self.grid.dx();
        let beta = dt * d * half::<T>() / (dx * dx);

        out.clear();
        out.resize(m, T::zero());
        let max_speed = self.advective_divergence(u, out)?;
        let mut lap = std::mem::take(&mut self.lap_buf);
        self.laplacian(u, &mut lap);
        for i in 0..m {
            out[i] = u[i] + dt * out[i] + dt * d * half::<T>() * lap[i];
        }
        self.lap_buf = lap;

        if beta > T::zero() {
            let sub = vec![-beta; m];
            let sup = vec![-beta; m];
            if self.periodic {
                let diag = vec![T::one() + two::<T>() * beta; m];
                solve_cyclic_tridiag(&sub, &diag, &sup, -beta, -beta, out)?;
            } else {
                let mut diag = vec![T::one() + two::<T>() * beta; m];
                diag[0] = T::one() + beta;
                diag[m - 1] = T::one() + beta;
                solve_tridiag(&sub, &diag, &sup, out)?;
            }
        }
        Ok(max_speed)
    }
}

/// `|x|` regularized near zero so the flux stays differentiable where the
/// upwind direction or the slope ratio changes sign.
#[inline]
fn smooth_abs<T: Scalar>(x: T, eps: T) -> T {
    (x * x + eps * eps).sqrt()
}

/// Van Leer limited upwind face value. `uu` is the upwind-upwind cell, `uc`
/// the donor, `ud` the downwind cell. Slope form of
/// `uc + phi(r) (ud - uc) / 2` with `phi(r) = (r + |r|) / (1 + |r|)`:
/// the limited slope is the van Leer mean
/// `(d_up |d_dn| + d_dn |d_up|) / (|d_up| + |d_dn|)`.
#[inline]
fn limited_face<T: Scalar>(uu: T, uc: T, ud: T) -> T {
    let d_up = uc - uu;
    let d_dn = ud - uc;
    let scale = d_up.abs() + d_dn.abs();
    if scale == T::zero() {
        return uc;
    }
    let eps = cast::<T>(1e-5) * scale;
    let a_dn = smooth_abs(d_dn, eps);
    let a_up = smooth_abs(d_up, eps);
    let slope = (d_up * a_dn + d_dn * a_up) / (a_dn + a_up);
    uc + half::<T>() * slope
}

/// One-shot right-hand-side evaluation.
pub fn discrete_rhs<T: Scalar>(
    u: &[T],
    params: SimParams<T>,
    spec: &KernelSpec<T>,
    mode: &SensingMode<T>,
    h: &AdhesionFunction<T>,
    grid: &Grid<T>,
) -> Result<Field<T>> {
    let mut rhs = RhsOp::new(grid, spec, mode, h, params)?;
    let mut out = vec![T::zero(); grid.cell_count()];
    rhs.eval(u, &mut out)?;
    Ok(out)
}

/// Adaptive step-doubling driver over [`RhsOp::imex_step`]. Public so
/// callers can observe the state between accepted steps.
pub struct TimeStepper<'a, T> {
    rhs: &'a mut RhsOp<T>,
    tol: Tolerances<T>,
    ctrl: StepControl<T>,
    t: T,
    dt: T,
    u: Field<T>,
    big: Field<T>,
    half1: Field<T>,
    half2: Field<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    Accepted,
    Finished,
}

impl<'a, T: Scalar> TimeStepper<'a, T> {
    pub fn new(rhs: &'a mut RhsOp<T>, u0: Field<T>, tol: Tolerances<T>, ctrl: StepControl<T>) -> Self {
        let dt = ctrl.dt_init.min(ctrl.dt_max);
        TimeStepper {
            rhs,
            tol,
            ctrl,
            t: T::zero(),
            dt,
            u: u0,
            big: Vec::new(),
            half1: Vec::new(),
            half2: Vec::new(),
        }
    }

    pub fn time(&self) -> T {
        self.t
    }

    pub fn state(&self) -> &[T] {
        &self.u
    }

    pub fn rhs_op(&mut self) -> &mut RhsOp<T> {
        self.rhs
    }

    /// Advances one accepted step, clipped so `t` never exceeds `t_end`.
    pub fn advance(&mut self, t_end: T) -> Result<StepOutcome> {
        if self.t >= t_end {
            return Ok(StepOutcome::Finished);
        }
        let dt_floor = cast::<T>(1e-13) * self.t.max(T::one());
        loop {
            let mut dt = self.dt.min(t_end - self.t).max(dt_floor);

            let speed = self.rhs.imex_step(&self.u, dt, &mut self.big)?;
            // If this dt exceeded the advective CFL cap, retry at the cap
            // before scoring the error.
            if speed > T::zero() {
                let dt_cfl = self.ctrl.cfl * self.rhs.grid().dx() / speed;
                if dt > dt_cfl {
                    self.dt = dt_cfl;
                    dt = self.dt.min(t_end - self.t).max(dt_floor);
                    self.rhs.imex_step(&self.u, dt, &mut self.big)?;
                }
            }
            let half_dt = dt * half::<T>();
            self.rhs.imex_step(&self.u, half_dt, &mut self.half1)?;
            let u_half = std::mem::take(&mut self.half1);
            self.rhs.imex_step(&u_half, half_dt, &mut self.half2)?;
            self.half1 = u_half;

            let finite =
                self.half2.iter().all(|v| v.is_finite()) && self.big.iter().all(|v| v.is_finite());
            let mut err = T::zero();
            if finite {
                for (&a, &b) in self.big.iter().zip(&self.half2) {
                    let scale = self.tol.abs + self.tol.rel * b.abs();
                    err = err.max((a - b).abs() / scale);
                }
            } else {
                err = T::infinity();
            }

            if err <= T::one() {
                let min_u = self.half2.iter().fold(T::infinity(), |m, &v| m.min(v));
                let positivity_floor = -cast::<T>(10.0) * self.tol.abs;
                if min_u < positivity_floor {
                    return Err(Error::PositivityLost {
                        t: (self.t + dt).to_f64().unwrap_or(f64::NAN),
                        min_u: min_u.to_f64().unwrap_or(f64::NAN),
                        floor: positivity_floor.to_f64().unwrap_or(f64::NAN),
                    });
                }
                std::mem::swap(&mut self.u, &mut self.half2);
                self.t += dt;
                let grow = if err > T::zero() {
                    (cast::<T>(0.9) / err.sqrt()).min(cast(5.0)).max(cast(0.2))
                } else {
                    cast(5.0)
                };
                self.dt = (dt * grow).min(self.ctrl.dt_max);
                return Ok(StepOutcome::Accepted);
            }

            let shrink = if err.is_finite() {
                (cast::<T>(0.9) / err.sqrt()).max(cast(0.1)).min(cast(0.5))
            } else {
                cast(0.25)
            };
            self.dt = dt * shrink;
            if self.dt < dt_floor {
                if !finite {
                    return Err(Error::NonFiniteState(self.t.to_f64().unwrap_or(f64::NAN)));
                }
                return Err(Error::StepSizeUnderflow {
                    t: self.t.to_f64().unwrap_or(f64::NAN),
                    dt: self.dt.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
    }
}

/// Integrates the model from `u0` to `t_end`, recording snapshots at the
/// requested output times (dense linear interpolation between steps).
#[allow(clippy::too_many_arguments)]
pub fn integrate<T: Scalar>(
    u0: &[T],
    params: SimParams<T>,
    spec: &KernelSpec<T>,
    mode: &SensingMode<T>,
    h: &AdhesionFunction<T>,
    grid: &Grid<T>,
    t_end: T,
    tol: Tolerances<T>,
    ctrl: StepControl<T>,
    output_times: &[T],
) -> Result<Kymograph<T>> {
    grid.check_field(u0)?;
    if !(t_end > T::zero()) {
        return Err(Error::InvalidParameter("t_end must be positive".into()));
    }
    let mut outputs: Vec<T> = output_times.to_vec();
    outputs.retain(|&t| t >= T::zero() && t <= t_end);
    outputs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    outputs.dedup();
    if outputs.last().copied() != Some(t_end) {
        outputs.push(t_end);
    }

    let mut rhs = RhsOp::new(grid, spec, mode, h, params)?;
    let mut kymo = Kymograph {
        times: Vec::new(),
        fields: Vec::new(),
        mass: Vec::new(),
        peaks: Vec::new(),
        energy: Vec::new(),
    };
    let periodic = mode.is_periodic();
    let record = |kymo: &mut Kymograph<T>, t: T, u: &[T]| {
        kymo.times.push(t);
        kymo.mass.push(u.iter().copied().sum::<T>() * grid.dx());
        kymo.peaks.push(diagnostics::count_peaks(u, cast(1e-4), periodic));
        kymo.energy.push(diagnostics::energy_entropy_clamped(u, spec, params, grid, periodic));
        kymo.fields.push(u.to_vec());
    };

    let mut next_out = 0usize;
    if outputs.first().copied() == Some(T::zero()) {
        record(&mut kymo, T::zero(), u0);
        next_out = 1;
    }

    let mut stepper = TimeStepper::new(&mut rhs, u0.to_vec(), tol, ctrl);
    let mut prev_t = T::zero();
    let mut prev_u = u0.to_vec();
    loop {
        match stepper.advance(t_end)? {
            StepOutcome::Finished => break,
            StepOutcome::Accepted => {
                while next_out < outputs.len() && outputs[next_out] <= stepper.t {
                    let t_out = outputs[next_out];
                    if t_out == stepper.t {
                        let u = stepper.u.clone();
                        record(&mut kymo, t_out, &u);
                    } else {
                        let w = (t_out - prev_t) / (stepper.t - prev_t);
                        let interp: Vec<T> = prev_u
                            .iter()
                            .zip(&stepper.u)
                            .map(|(&a, &b)| a + (b - a) * w)
                            .collect();
                        record(&mut kymo, t_out, &interp);
                    }
                    next_out += 1;
                }
                prev_t = stepper.t;
                prev_u.clone_from(&stepper.u);
            }
        }
    }
    Ok(kymo)
}

/// Integrates until the scaled residual `|rhs|_inf / |u|_inf` drops below
/// `ss_tol` or `t_max` is reached; returns the last field with a flag.
#[allow(clippy::too_many_arguments)]
pub fn run_to_steady<T: Scalar>(
    u0: &[T],
    params: SimParams<T>,
    spec: &KernelSpec<T>,
    mode: &SensingMode<T>,
    h: &AdhesionFunction<T>,
    grid: &Grid<T>,
    ss_tol: T,
    t_max: T,
    tol: Tolerances<T>,
    ctrl: StepControl<T>,
) -> Result<SteadyRun<T>> {
    grid.check_field(u0)?;
    let mut rhs = RhsOp::new(grid, spec, mode, h, params)?;
    let mut residual = vec![T::zero(); grid.cell_count()];

    fn scaled_residual<T: Scalar>(rhs: &mut RhsOp<T>, u: &[T], buf: &mut [T]) -> Result<T> {
        rhs.eval(u, buf)?;
        let rn = buf.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
        let un = u.iter().fold(T::zero(), |m, &v| m.max(v.abs())).max(cast(1e-30));
        Ok(rn / un)
    }

    if scaled_residual(&mut rhs, u0, &mut residual)? < ss_tol {
        return Ok(SteadyRun { field: u0.to_vec(), t: T::zero(), converged: true });
    }

    let mut stepper = TimeStepper::new(&mut rhs, u0.to_vec(), tol, ctrl);
    let mut since_check = 0usize;
    loop {
        match stepper.advance(t_max)? {
            StepOutcome::Finished => {
                let u = stepper.u.clone();
                let converged = scaled_residual(stepper.rhs, &u, &mut residual)? < ss_tol;
                return Ok(SteadyRun { field: u, t: t_max, converged });
            }
            StepOutcome::Accepted => {
                since_check += 1;
                if since_check >= 20 {
                    since_check = 0;
                    let u = stepper.u.clone();
                    let t = stepper.t;
                    if scaled_residual(stepper.rhs, &u, &mut residual)? < ss_tol {
                        return Ok(SteadyRun { field: u, t, converged: true });
                    }
                }
            }
        }
    }
}

/// Evenly spaced output times `0, t_end/(count-1), ..., t_end`.
pub fn uniform_outputs<T: Scalar>(t_end: T, count: usize) -> Vec<T> {
    let count = count.max(2);
    (0..count).map(|i| t_end * cast::<T>(i as f64) / cast::<T>((count - 1) as f64)).collect()
}
