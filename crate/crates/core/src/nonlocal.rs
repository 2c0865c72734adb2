//! The nonlocal adhesion operator on the discrete grid, under periodic and
//! bounded-domain sensing modes.
//!
//! Cell weights are per-cell integrals of the kernel weight over offset
//! intervals centered at whole-cell displacements, so the odd directional
//! weight never gets sampled at its jump and periodic sums stay exactly
//! antisymmetric. Bounded modes clip the offset window to the mode's sensing
//! limits with partial-cell weights, which keeps the operator continuous in
//! space.

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::kernel::KernelSpec;
use crate::scalar::{cast, half, two, Scalar};

/// How the sensing window behaves at the domain ends.
#[derive(Clone, Debug)]
pub enum SensingMode<T> {
    Periodic,
    /// Window clipped to the domain; repels mass from the walls.
    Naive,
    /// Window reflected at the walls so the operator vanishes there.
    NoFlux,
    /// Base operator minus its value on a reference constant, restoring the
    /// constant steady state.
    Neutral { base: Box<SensingMode<T>>, u_ref: T },
    /// Base operator plus wall-interaction terms with strengths `beta0`,
    /// `beta_l` (positive: wall adhesion, negative: wall repulsion).
    WeightedBoundary { base: Box<SensingMode<T>>, beta0: T, beta_l: T },
}

impl<T: Scalar> SensingMode<T> {
    /// The mode whose sensing limits shape the integration window.
    pub fn limits_mode(&self) -> &SensingMode<T> {
        match self {
            SensingMode::Neutral { base, .. } | SensingMode::WeightedBoundary { base, .. } => {
                base.limits_mode()
            }
            other => other,
        }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self.limits_mode(), SensingMode::Periodic)
    }
}

/// The adhesive force law `h(u)`.
#[derive(Clone, Debug)]
pub enum AdhesionFunction<T> {
    Linear,
    /// Coefficients in increasing degree: `c0 + c1 u + c2 u^2 + ...`.
    Polynomial(Vec<T>),
}

impl<T: Scalar> AdhesionFunction<T> {
    pub fn eval(&self, u: T) -> T {
        match self {
            AdhesionFunction::Linear => u,
            AdhesionFunction::Polynomial(c) => {
                c.iter().rev().fold(T::zero(), |acc, &ck| acc * u + ck)
            }
        }
    }

    pub fn deriv(&self, u: T) -> T {
        match self {
            AdhesionFunction::Linear => T::one(),
            AdhesionFunction::Polynomial(c) => {
                let mut acc = T::zero();
                for (k, &ck) in c.iter().enumerate().skip(1).rev() {
                    acc = acc * u + ck * cast::<T>(k as f64);
                }
                acc
            }
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, AdhesionFunction::Linear)
    }
}

/// Structured warnings emitted when an operator is assembled.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OpWarning {
    /// The kernel weight does not vanish at the sensing radius, so the
    /// derivative diagnostic jumps where the window starts to clip.
    EdgeWeightNonzero,
    /// The kernel weight vanishes at the origin; the wall-reflection
    /// construction carries no directional signal there.
    OriginWeightZero,
}

impl std::fmt::Display for OpWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OpWarning::EdgeWeightNonzero => write!(
                f,
                "kernel weight is nonzero at the sensing radius: the derivative \
                 diagnostic is discontinuous one radius from each wall"
            ),
            OpWarning::OriginWeightZero => write!(
                f,
                "kernel weight vanishes at the origin: wall-reflected sensing \
                 has no near-field signal and its validity is unclear"
            ),
        }
    }
}

/// Sensing limits `(f1, f2)` of the integration window at position `x`.
pub fn sensing_limits<T: Scalar>(
    mode: &SensingMode<T>,
    x: T,
    radius: T,
    length: T,
) -> Result<(T, T)> {
    if x < T::zero() || x > length {
        return Err(Error::OutOfDomain {
            x: x.to_f64().unwrap_or(f64::NAN),
            length: length.to_f64().unwrap_or(f64::NAN),
        });
    }
    let r = radius;
    Ok(match mode.limits_mode() {
        SensingMode::Periodic => (-r, r),
        SensingMode::Naive => ((-x).max(-r), (length - x).min(r)),
        SensingMode::NoFlux => ((r - two::<T>() * x).max(-r), (two::<T>() * (length - x) - r).min(r)),
        _ => unreachable!("limits_mode resolves to a base variant"),
    })
}

/// Slopes `(f1', f2')` of the sensing limits at `x`, piecewise constant.
fn limit_slopes<T: Scalar>(mode: &SensingMode<T>, x: T, radius: T, length: T) -> (T, T) {
    let zero = T::zero();
    match mode.limits_mode() {
        SensingMode::Periodic => (zero, zero),
        SensingMode::Naive => (
            if x < radius { -T::one() } else { zero },
            if x > length - radius { -T::one() } else { zero },
        ),
        SensingMode::NoFlux => (
            if x < radius { -two::<T>() } else { zero },
            if x > length - radius { -two::<T>() } else { zero },
        ),
        _ => unreachable!(),
    }
}

struct BoundaryRow<T> {
    cell: usize,
    w_plus: Vec<T>,
    w_minus: Vec<T>,
}

/// Precomputed nonlocal operator for one grid/kernel/mode/force combination.
pub struct NonlocalOp<T> {
    grid: Grid<T>,
    spec: KernelSpec<T>,
    mode: SensingMode<T>,
    h: AdhesionFunction<T>,
    periodic: bool,
    reach: usize,
    /// Interior antisymmetric weights, entry `j - 1` for offset `j`.
    w: Vec<T>,
    rows: Vec<BoundaryRow<T>>,
    /// Wall-interaction addend for weighted-boundary modes.
    additive: Vec<T>,
    /// Value of the base operator on the reference constant (neutral modes).
    neutral_corr: Option<Vec<T>>,
    neutral_corr_prime: Option<Vec<T>>,
    warnings: Vec<OpWarning>,
}

impl<T: Scalar> NonlocalOp<T> {
    pub fn new(
        grid: &Grid<T>,
        spec: &KernelSpec<T>,
        mode: &SensingMode<T>,
        h: &AdhesionFunction<T>,
    ) -> Result<Self> {
        let radius = spec.radius();
        if !(grid.length() > two::<T>() * radius) {
            return Err(Error::InvalidParameter(
                "domain must be longer than one sensing diameter (L > 2R)".into(),
            ));
        }
        let dx = grid.dx();
        let m = grid.cell_count();
        let reach = (radius / dx).to_f64().unwrap_or(0.0).round() as usize;
        let periodic = mode.is_periodic();

        let mut w = Vec::with_capacity(reach);
        for j in 1..=reach {
            let lo = (cast::<T>(j as f64) - half::<T>()) * dx;
            let hi = ((cast::<T>(j as f64) + half::<T>()) * dx).min(radius);
            w.push(spec.integral(lo, hi));
        }

        let mut rows = Vec::new();
        if !periodic {
            for i in 0..m {
                let x = grid.x(i);
                let (f1, f2) = sensing_limits(mode, x, radius, grid.length())?;
                if f1 <= -radius && f2 >= radius {
                    continue;
                }
                let plo = f1.max(T::zero());
                let phi = f2.max(T::zero());
                let slo = (-f2).max(T::zero());
                let shi = (-f1).max(T::zero());
                let cell_span = |j: usize| {
                    let lo = if j == 0 { T::zero() } else { (cast::<T>(j as f64) - half::<T>()) * dx };
                    let hi = (cast::<T>(j as f64) + half::<T>()) * dx;
                    (lo, hi)
                };
                let mut w_plus = vec![T::zero(); reach + 1];
                let mut w_minus = vec![T::zero(); reach + 1];
                for j in 0..=reach {
                    let (lo, hi) = cell_span(j);
                    if phi > plo {
                        w_plus[j] = spec.integral(lo.max(plo), hi.min(phi));
                    }
                    if shi > slo {
                        w_minus[j] = spec.integral(lo.max(slo), hi.min(shi));
                    }
                }
                rows.push(BoundaryRow { cell: i, w_plus, w_minus });
            }
        }

        let mut additive = vec![T::zero(); m];
        if let SensingMode::WeightedBoundary { beta0, beta_l, .. } = mode {
            for i in 0..m {
                let x = grid.x(i);
                if x < radius {
                    // beta0 * integral of the odd weight over [-R, -x].
                    additive[i] += -*beta0 * spec.potential(x);
                }
                if x > grid.length() - radius {
                    additive[i] += *beta_l * spec.potential(grid.length() - x);
                }
            }
        }

        let mut warnings = Vec::new();
        if !periodic {
            if spec.edge_weight_nonzero() {
                warnings.push(OpWarning::EdgeWeightNonzero);
            }
            if spec.origin_weight_zero() {
                warnings.push(OpWarning::OriginWeightZero);
            }
        }

        let mut op = NonlocalOp {
            grid: *grid,
            spec: spec.clone(),
            mode: mode.clone(),
            h: h.clone(),
            periodic,
            reach,
            w,
            rows,
            additive,
            neutral_corr: None,
            neutral_corr_prime: None,
            warnings,
        };

        if let SensingMode::Neutral { base, u_ref } = mode {
            let base_op = NonlocalOp::new(grid, spec, base, h)?;
            let const_field = vec![*u_ref; m];
            op.neutral_corr = Some(base_op.apply(&const_field)?);
            op.neutral_corr_prime = Some(base_op.apply_prime(&const_field)?);
        }

        Ok(op)
    }

    pub fn warnings(&self) -> &[OpWarning] {
        &self.warnings
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn adhesion(&self) -> &AdhesionFunction<T> {
        &self.h
    }

    fn h_values(&self, u: &[T]) -> Vec<T> {
        u.iter().map(|&v| self.h.eval(v)).collect()
    }

    fn convolve(&self, hv: &[T], out: &mut [T]) {
        let m = hv.len();
        let reach = self.reach;
        if self.periodic {
            for v in out.iter_mut() {
                *v = T::zero();
            }
            for (jm1, &wj) in self.w.iter().enumerate() {
                let j = jm1 + 1;
                if wj == T::zero() {
                    continue;
                }
                for i in 0..m {
                    let up = if i + j >= m { i + j - m } else { i + j };
                    let dn = if i >= j { i - j } else { i + m - j };
                    out[i] += wj * (hv[up] - hv[dn]);
                }
            }
        } else {
            // Interior cells use the unclipped weights; windows never leave
            // the domain there.
            for (i, v) in out.iter_mut().enumerate() {
                let mut acc = T::zero();
                for (jm1, &wj) in self.w.iter().enumerate() {
                    let j = jm1 + 1;
                    let up = (i + j).min(m - 1);
                    let dn = i.saturating_sub(j);
                    acc += wj * (hv[up] - hv[dn]);
                }
                *v = acc;
            }
            for row in &self.rows {
                let i = row.cell;
                let mut acc = T::zero();
                for j in 0..=reach {
                    let up = (i + j).min(m - 1);
                    let dn = i.saturating_sub(j);
                    acc += row.w_plus[j] * hv[up] - row.w_minus[j] * hv[dn];
                }
                out[i] = acc;
            }
        }
    }

    /// Applies the operator to a field.
    pub fn apply(&self, u: &[T]) -> Result<Field<T>> {
        let mut out = vec![T::zero(); self.grid.cell_count()];
        self.apply_into(u, &mut out)?;
        Ok(out)
    }

    pub fn apply_into(&self, u: &[T], out: &mut [T]) -> Result<()> {
        self.grid.check_field(u)?;
        let hv = self.h_values(u);
        self.convolve(&hv, out);
        for (o, &a) in out.iter_mut().zip(&self.additive) {
            *o += a;
        }
        if let Some(corr) = &self.neutral_corr {
            for (o, &c) in out.iter_mut().zip(corr) {
                *o -= c;
            }
        }
        Ok(())
    }

    /// Derivative diagnostic: interior term from differencing `h(u)` on the
    /// grid, plus the window-motion boundary terms of bounded modes.
    pub fn apply_prime(&self, u: &[T]) -> Result<Field<T>> {
        self.grid.check_field(u)?;
        let m = self.grid.cell_count();
        let dx = self.grid.dx();
        let hv = self.h_values(u);
        let mut dg = vec![T::zero(); m];
        let two_dx = two::<T>() * dx;
        if self.periodic {
            for i in 0..m {
                let up = if i + 1 == m { 0 } else { i + 1 };
                let dn = if i == 0 { m - 1 } else { i - 1 };
                dg[i] = (hv[up] - hv[dn]) / two_dx;
            }
        } else {
            for i in 0..m {
                let up = (i + 1).min(m - 1);
                let dn = i.saturating_sub(1);
                dg[i] = (hv[up] - hv[dn]) / two_dx;
            }
        }
        let mut out = vec![T::zero(); m];
        self.convolve(&dg, &mut out);

        if !self.periodic {
            let radius = self.spec.radius();
            let length = self.grid.length();
            for i in 0..m {
                let x = self.grid.x(i);
                let (f1, f2) = sensing_limits(&self.mode, x, radius, length)?;
                let (s1, s2) = limit_slopes(&self.mode, x, radius, length);
                if s2 != T::zero() {
                    let val = self.h.eval(interp(u, &self.grid, x + f2, false));
                    out[i] += s2 * val * self.spec.omega_odd(f2);
                }
                if s1 != T::zero() {
                    let val = self.h.eval(interp(u, &self.grid, x + f1, false));
                    out[i] -= s1 * val * self.spec.omega_odd(f1);
                }
            }
            if let SensingMode::WeightedBoundary { beta0, beta_l, .. } = &self.mode {
                for i in 0..m {
                    let x = self.grid.x(i);
                    if x < radius {
                        out[i] += *beta0 * self.spec.omega(x);
                    }
                    if x > length - radius {
                        out[i] += *beta_l * self.spec.omega(length - x);
                    }
                }
            }
        }
        if let Some(corr) = &self.neutral_corr_prime {
            for (o, &c) in out.iter_mut().zip(corr) {
                *o -= c;
            }
        }
        Ok(out)
    }

    /// Evaluates the operator at an arbitrary point, treating the field as
    /// piecewise constant on cells. Used for wall checks at `x = 0, L`.
    pub fn eval_at(&self, u: &[T], x: T) -> Result<T> {
        self.grid.check_field(u)?;
        let radius = self.spec.radius();
        let length = self.grid.length();
        let (f1, f2) = sensing_limits(&self.mode, x, radius, length)?;
        let mut acc = self.window_integral(u, x, f1.max(T::zero()), f2.max(T::zero()), true);
        acc = acc - self.window_integral(u, x, (-f2).max(T::zero()), (-f1).max(T::zero()), false);
        if let SensingMode::WeightedBoundary { beta0, beta_l, .. } = &self.mode {
            if x < radius {
                acc += -*beta0 * self.spec.potential(x);
            }
            if x > length - radius {
                acc += *beta_l * self.spec.potential(length - x);
            }
        }
        if let SensingMode::Neutral { base, u_ref } = &self.mode {
            let base_op = NonlocalOp::new(&self.grid, &self.spec, base, &self.h)?;
            let const_field = vec![*u_ref; u.len()];
            acc = acc - base_op.eval_at(&const_field, x)?;
        }
        Ok(acc)
    }

    /// Integral of `h(u(x +/- s)) omega(s)` for `s` in `[lo, hi]`, splitting
    /// at the cell faces crossed by `x +/- s`.
    fn window_integral(&self, u: &[T], x: T, lo: T, hi: T, forward: bool) -> T {
        if hi <= lo {
            return T::zero();
        }
        let m = self.grid.cell_count();
        let dx = self.grid.dx();
        let length = self.grid.length();
        let mut acc = T::zero();
        let mut s = lo;
        let eps = dx * cast::<T>(1e-12);
        while s < hi - eps {
            let y = if forward { x + s } else { x - s };
            let mut y_wrapped = y;
            if self.periodic {
                while y_wrapped < T::zero() {
                    y_wrapped += length;
                }
                while y_wrapped >= length {
                    y_wrapped -= length;
                }
            }
            let cell = (y_wrapped / dx)
                .floor()
                .to_f64()
                .unwrap_or(0.0)
                .clamp(0.0, (m - 1) as f64) as usize;
            // Distance until x +/- s crosses the next face.
            let y_lo = cast::<T>(cell as f64) * dx;
            let y_hi = y_lo + dx;
            let step = if forward { y_hi - y_wrapped } else { y_wrapped - y_lo };
            let s_next = (s + step.max(eps)).min(hi);
            acc += self.spec.integral(s, s_next) * self.h.eval(u[cell]);
            s = s_next;
        }
        acc
    }
}

/// Linear interpolation of cell-centered values at position `y`.
fn interp<T: Scalar>(u: &[T], grid: &Grid<T>, y: T, periodic: bool) -> T {
    let m = u.len();
    let t = y / grid.dx() - half::<T>();
    if periodic {
        let mf = cast::<T>(m as f64);
        let mut t = t;
        while t < T::zero() {
            t += mf;
        }
        while t >= mf {
            t -= mf;
        }
        let i0 = t.floor().to_f64().unwrap_or(0.0) as usize % m;
        let frac = t - t.floor();
        let i1 = (i0 + 1) % m;
        u[i0] * (T::one() - frac) + u[i1] * frac
    } else {
        if t <= T::zero() {
            return u[0];
        }
        let last = cast::<T>((m - 1) as f64);
        if t >= last {
            return u[m - 1];
        }
        let i0 = t.floor().to_f64().unwrap_or(0.0) as usize;
        let frac = t - t.floor();
        u[i0] * (T::one() - frac) + u[i0 + 1] * frac
    }
}

/// One-shot operator application (assembles the weights each call).
pub fn apply_k<T: Scalar>(
    u: &[T],
    spec: &KernelSpec<T>,
    mode: &SensingMode<T>,
    h: &AdhesionFunction<T>,
    grid: &Grid<T>,
) -> Result<Field<T>> {
    NonlocalOp::new(grid, spec, mode, h)?.apply(u)
}

/// One-shot derivative diagnostic.
pub fn apply_k_prime<T: Scalar>(
    u: &[T],
    spec: &KernelSpec<T>,
    mode: &SensingMode<T>,
    h: &AdhesionFunction<T>,
    grid: &Grid<T>,
) -> Result<Field<T>> {
    NonlocalOp::new(grid, spec, mode, h)?.apply_prime(u)
}

/// Wall strengths that balance the boundary force of the base operator for
/// the given field: `beta0 = K_base(0) / 2`, `betaL = -K_base(L) / 2`.
pub fn weighted_boundary_noflux_beta<T: Scalar>(
    spec: &KernelSpec<T>,
    u: &[T],
    base: &SensingMode<T>,
    h: &AdhesionFunction<T>,
    grid: &Grid<T>,
) -> Result<(T, T)> {
    let op = NonlocalOp::new(grid, spec, base, h)?;
    let at0 = op.eval_at(u, T::zero())?;
    let at_l = op.eval_at(u, grid.length())?;
    Ok((at0 * half::<T>(), -at_l * half::<T>()))
}
