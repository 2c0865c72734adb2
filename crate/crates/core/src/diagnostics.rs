//! Executable structural checks: area function, unit-span curvature,
//! peak counting, symmetry errors, energy functionals, and the steady-state
//! check suite.

use crate::error::{Error, Result};
use crate::grid::{mean, Field, Grid};
use crate::kernel::KernelSpec;
use crate::nonlocal::{AdhesionFunction, NonlocalOp, SensingMode};
use crate::quad::simpson;
use crate::scalar::{cast, half, two, Scalar};
use crate::solver::{RhsOp, SimParams};

/// Modified area function `w(x) = int_0^x u - ubar x` at cell centres,
/// midpoint cumulative. With `ubar = mean(u)` the periodic closure
/// `w(L) = 0` holds exactly.
pub fn area_function<T: Scalar>(u: &[T], ubar: T, grid: &Grid<T>) -> Field<T> {
    let dx = grid.dx();
    let mut acc = T::zero();
    let mut out = Vec::with_capacity(u.len());
    for (i, &ui) in u.iter().enumerate() {
        let w = (acc + ui * half::<T>()) * dx - ubar * grid.x(i);
        out.push(w);
        acc += ui;
    }
    out
}

/// Unit-span second central difference
/// `(w(x + span) + w(x - span) - 2 w(x)) / 2` on the periodic extension,
/// linear interpolation at off-grid offsets.
pub fn delta1<T: Scalar>(w: &[T], grid: &Grid<T>, span: T) -> Field<T> {
    let m = w.len();
    let at = |y: T| -> T {
        let mut t = y / grid.dx() - half::<T>();
        let mf = cast::<T>(m as f64);
        while t < T::zero() {
            t += mf;
        }
        while t >= mf {
            t -= mf;
        }
        let i0 = t.floor().to_f64().unwrap_or(0.0) as usize % m;
        let frac = t - t.floor();
        let i1 = (i0 + 1) % m;
        w[i0] * (T::one() - frac) + w[i1] * frac
    };
    (0..m)
        .map(|i| {
            let x = grid.x(i);
            (at(x + span) + at(x - span) - two::<T>() * w[i]) * half::<T>()
        })
        .collect()
}

#[derive(Clone, Copy)]
struct Extremum<T> {
    value: T,
    is_max: bool,
}

/// Alternating extrema of the sampled sequence, plateaus collapsed. On the
/// periodic domain the list is circular; on a bounded domain the walls
/// terminate monotone runs.
fn extrema_list<T: Scalar>(u: &[T], periodic: bool) -> Vec<Extremum<T>> {
    let m = u.len();
    let diff_count = if periodic { m } else { m - 1 };
    // Nonzero forward differences: (vertex index after which the run
    // starts, direction).
    let mut runs: Vec<(usize, i8)> = Vec::new();
    for i in 0..diff_count {
        let a = u[i];
        let b = u[(i + 1) % m];
        let s = if b > a {
            1i8
        } else if b < a {
            -1i8
        } else {
            continue;
        };
        runs.push((i, s));
    }
    if runs.is_empty() {
        return Vec::new();
    }

    let mut out: Vec<Extremum<T>> = Vec::new();
    if periodic {
        for w in 0..runs.len() {
            let (_, s_prev) = runs[w];
            let (i_next, s_next) = runs[(w + 1) % runs.len()];
            if s_prev != s_next {
                out.push(Extremum { value: u[i_next], is_max: s_prev > 0 });
            }
        }
    } else {
        out.push(Extremum { value: u[0], is_max: runs[0].1 < 0 });
        for w in 0..runs.len() - 1 {
            let (_, s_prev) = runs[w];
            let (i_next, s_next) = runs[w + 1];
            if s_prev != s_next {
                out.push(Extremum { value: u[i_next], is_max: s_prev > 0 });
            }
        }
        out.push(Extremum { value: u[m - 1], is_max: runs[runs.len() - 1].1 > 0 });
    }
    out
}

/// Counts peaks by prominence: local maxima standing at least
/// `mean(u) * rel_threshold` above their adjacent minima; shallower
/// max/min pairs are merged away first.
pub fn count_peaks<T: Scalar>(u: &[T], rel_threshold: T, periodic: bool) -> usize {
    if u.len() < 3 {
        return 0;
    }
    let thr = mean(u).abs() * rel_threshold;
    let mut ext = extrema_list(u, periodic);

    loop {
        let n = ext.len();
        if ext.iter().filter(|e| e.is_max).count() == 0 {
            break;
        }
        // Weakest max by prominence over its existing min neighbours.
        let mut weakest: Option<(usize, T)> = None;
        for (i, e) in ext.iter().enumerate() {
            if !e.is_max {
                continue;
            }
            let left = if periodic {
                Some((i + n - 1) % n)
            } else {
                i.checked_sub(1)
            };
            let right = if periodic {
                Some((i + 1) % n)
            } else if i + 1 < n {
                Some(i + 1)
            } else {
                None
            };
            let mut prom = T::infinity();
            for nb in [left, right].into_iter().flatten() {
                if !ext[nb].is_max {
                    prom = prom.min(e.value - ext[nb].value);
                }
            }
            if weakest.map_or(true, |(_, p)| prom < p) {
                weakest = Some((i, prom));
            }
        }
        match weakest {
            Some((i, prom)) if prom < thr => {
                // Merge: drop this max together with its higher adjacent min.
                let left = if periodic { Some((i + n - 1) % n) } else { i.checked_sub(1) };
                let right = if periodic {
                    Some((i + 1) % n)
                } else if i + 1 < n {
                    Some(i + 1)
                } else {
                    None
                };
                let pick = match (left, right) {
                    (Some(l), Some(r)) if !ext[l].is_max && !ext[r].is_max => {
                        if ext[l].value >= ext[r].value {
                            l
                        } else {
                            r
                        }
                    }
                    (Some(l), _) if !ext[l].is_max => l,
                    (_, Some(r)) if !ext[r].is_max => r,
                    _ => {
                        // Lone max with no min neighbour left.
                        ext.remove(i);
                        continue;
                    }
                };
                let mut kill = [i, pick];
                kill.sort_unstable();
                ext.remove(kill[1]);
                ext.remove(kill[0]);
            }
            _ => break,
        }
    }
    ext.iter().filter(|e| e.is_max).count()
}

/// Maximal deviation from `L/n`-shift invariance and from reflection
/// symmetry (after the best grid shift). Works in cell units, so no grid
/// is needed.
pub fn symmetry_error<T: Scalar>(u: &[T], n: usize) -> (T, T) {
    let m = u.len();
    let shift_cells = cast::<T>(m as f64) / cast::<T>(n as f64);
    let interp_at = |t: T| -> T {
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
        u[i0] * (T::one() - frac) + u[(i0 + 1) % m] * frac
    };
    let mut shift_err = T::zero();
    for i in 0..m {
        let shifted = interp_at(cast::<T>(i as f64) - shift_cells);
        shift_err = shift_err.max((u[i] - shifted).abs());
    }
    let mut reflect_err = T::infinity();
    for k in 0..m {
        let mut e = T::zero();
        for i in 0..m {
            let j = (k + m - i) % m;
            e = e.max((u[i] - u[j]).abs());
            if e >= reflect_err {
                break;
            }
        }
        reflect_err = reflect_err.min(e);
    }
    (shift_err, reflect_err)
}

fn potential_weights<T: Scalar>(spec: &KernelSpec<T>, grid: &Grid<T>) -> Vec<T> {
    let dx = grid.dx();
    let radius = spec.radius();
    let reach = (radius / dx).to_f64().unwrap_or(0.0).round() as usize;
    let quad = |a: T, b: T| -> T {
        if b <= a {
            T::zero()
        } else {
            simpson(|y| spec.potential(y), a, b, 8)
        }
    };
    let mut v = Vec::with_capacity(reach + 1);
    // Cell 0 covers both signs of the even potential.
    v.push(two::<T>() * quad(T::zero(), (dx * half::<T>()).min(radius)));
    for j in 1..=reach {
        let lo = (cast::<T>(j as f64) - half::<T>()) * dx;
        let hi = ((cast::<T>(j as f64) + half::<T>()) * dx).min(radius);
        v.push(quad(lo, hi));
    }
    v
}

fn potential_convolution<T: Scalar>(u: &[T], weights: &[T], periodic: bool) -> Vec<T> {
    let m = u.len();
    let mut out = vec![T::zero(); m];
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = weights[0] * u[i];
        for (j, &vj) in weights.iter().enumerate().skip(1) {
            if periodic {
                let up = (i + j) % m;
                let dn = (i + m - j) % m;
                acc += vj * (u[up] + u[dn]);
            } else {
                if i + j < m {
                    acc += vj * u[i + j];
                }
                if i >= j {
                    acc += vj * u[i - j];
                }
            }
        }
        *o = acc;
    }
    out
}

/// Entropy energy `dx sum(D u ln u - alpha/2 u (W*u))` and the quadratic
/// variant with `D u^2 / 2` in place of the entropy term. Errors when the
/// density is genuinely negative; exact zeros are floored at 1e-14.
pub fn energy<T: Scalar>(
    u: &[T],
    spec: &KernelSpec<T>,
    params: SimParams<T>,
    grid: &Grid<T>,
    periodic: bool,
) -> Result<(T, T)> {
    let min_u = u.iter().copied().fold(T::infinity(), T::min);
    if min_u < cast(-1e-12) {
        return Err(Error::NonPositiveDensity(min_u.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(energy_pair(u, spec, params, grid, periodic))
}

fn energy_pair<T: Scalar>(
    u: &[T],
    spec: &KernelSpec<T>,
    params: SimParams<T>,
    grid: &Grid<T>,
    periodic: bool,
) -> (T, T) {
    let weights = potential_weights(spec, grid);
    let conv = potential_convolution(u, &weights, periodic);
    let floor = cast::<T>(1e-14);
    let mut entropy = T::zero();
    let mut quadratic = T::zero();
    for (&ui, &ci) in u.iter().zip(&conv) {
        let up = ui.max(floor);
        let interaction = params.alpha * half::<T>() * ui * ci;
        entropy += params.diffusion * up * up.ln() - interaction;
        quadratic += params.diffusion * ui * ui * half::<T>() - interaction;
    }
    (entropy * grid.dx(), quadratic * grid.dx())
}

/// Entropy energy with sub-floor densities clamped; trace-friendly.
pub fn energy_entropy_clamped<T: Scalar>(
    u: &[T],
    spec: &KernelSpec<T>,
    params: SimParams<T>,
    grid: &Grid<T>,
    periodic: bool,
) -> T {
    energy_pair(u, spec, params, grid, periodic).0
}

#[derive(Clone, Debug)]
pub struct Check<T> {
    pub name: &'static str,
    pub value: T,
    pub tolerance: T,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct DiagnosticsReport<T> {
    pub checks: Vec<Check<T>>,
}

impl<T: Scalar> DiagnosticsReport<T> {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Sub-cell positions (in cell units) where a sampled function changes
/// sign. A function whose amplitude stays below `floor` has no crossings.
fn zero_crossings<T: Scalar>(v: &[T], periodic: bool, floor: T) -> Vec<T> {
    let m = v.len();
    let amp = v.iter().fold(T::zero(), |a, &x| a.max(x.abs()));
    if amp <= floor {
        return Vec::new();
    }
    let mut out = Vec::new();
    let end = if periodic { m } else { m - 1 };
    for i in 0..end {
        let a = v[i];
        let b = v[(i + 1) % m];
        if a == T::zero() {
            out.push(cast::<T>(i as f64));
        } else if a * b < T::zero() {
            let frac = a / (a - b);
            out.push(cast::<T>(i as f64) + frac);
        }
    }
    out
}

fn circular_distance<T: Scalar>(a: T, b: T, m: T) -> T {
    let mut d = (a - b).abs();
    if d > m * half::<T>() {
        d = m - d;
    }
    d
}

/// Two-sided Hausdorff distance between crossing sets, in cells.
fn crossing_hausdorff<T: Scalar>(a: &[T], b: &[T], m: usize, periodic: bool) -> T {
    if a.is_empty() && b.is_empty() {
        return T::zero();
    }
    if a.is_empty() || b.is_empty() {
        return T::infinity();
    }
    let mf = cast::<T>(m as f64);
    let one_sided = |xs: &[T], ys: &[T]| -> T {
        xs.iter()
            .map(|&x| {
                ys.iter()
                    .map(|&y| if periodic { circular_distance(x, y, mf) } else { (x - y).abs() })
                    .fold(T::infinity(), T::min)
            })
            .fold(T::zero(), T::max)
    };
    one_sided(a, b).max(one_sided(b, a))
}

#[derive(Clone, Copy, Debug)]
pub struct SteadyCheckTols<T> {
    pub residual: T,
    pub sign: T,
    pub convexity: T,
}

impl<T: Scalar> Default for SteadyCheckTols<T> {
    fn default() -> Self {
        SteadyCheckTols { residual: cast(1e-6), sign: cast(1e-8), convexity: cast(1e-6) }
    }
}

/// Structural checks on a claimed steady state: residual size, coincidence
/// of the zeros of `u'` and `K[u]`, the pointwise sign property
/// `u' K[u] >= 0`, exponential a-priori bounds, and the curvature
/// implications between `u''` and the derivative diagnostic.
pub fn steady_state_checks<T: Scalar>(
    u: &[T],
    spec: &KernelSpec<T>,
    params: SimParams<T>,
    mode: &SensingMode<T>,
    h: &AdhesionFunction<T>,
    grid: &Grid<T>,
    tols: SteadyCheckTols<T>,
) -> Result<DiagnosticsReport<T>> {
    grid.check_field(u)?;
    let m = grid.cell_count();
    let dx = grid.dx();
    let periodic = mode.is_periodic();

    let mut rhs_op = RhsOp::new(grid, spec, mode, h, params)?;
    let mut residual = vec![T::zero(); m];
    rhs_op.eval(u, &mut residual)?;
    let res_norm = crate::grid::linf(&residual);

    let op = NonlocalOp::new(grid, spec, mode, h)?;
    let k = op.apply(u)?;
    let kp = op.apply_prime(u)?;

    let mut du = vec![T::zero(); m];
    let mut d2u = vec![T::zero(); m];
    for i in 0..m {
        let (up, dn) = if periodic {
            ((i + 1) % m, (i + m - 1) % m)
        } else {
            ((i + 1).min(m - 1), i.saturating_sub(1))
        };
        du[i] = (u[up] - u[dn]) / (two::<T>() * dx);
        d2u[i] = (u[up] - two::<T>() * u[i] + u[dn]) / (dx * dx);
    }

    let ubar = mean(u);
    let scale = crate::grid::linf(u).max(T::one());

    let floor = scale * cast::<T>(1e-10);
    let zu = zero_crossings(&du, periodic, floor / dx);
    let zk = zero_crossings(&k, periodic, floor);
    let coincidence = crossing_hausdorff(&zu, &zk, m, periodic);

    let sign_min = du.iter().zip(&k).map(|(&a, &b)| a * b).fold(T::infinity(), T::min);

    // A-priori bounds with mu = (ubar + L) |omega|_inf (linear force law).
    let mu = (ubar + grid.length()) * spec.sup();
    let expo = (params.alpha * mu * grid.length()).min(cast(700.0));
    let lower = ubar * (-expo).exp();
    let upper = ubar * expo.exp();
    let mut bound_violation = T::zero();
    for &ui in u {
        bound_violation = bound_violation.max(lower - ui).max(ui - upper);
    }

    // Convexity implications, scaled by the curvature magnitude.
    let curv_scale = crate::grid::linf(&d2u).max(T::one());
    let mut convexity_violation = T::zero();
    for i in 0..m {
        if d2u[i] <= T::zero() {
            convexity_violation = convexity_violation.max(kp[i] / curv_scale);
        }
        if kp[i] >= T::zero() {
            convexity_violation = convexity_violation.max(-d2u[i] / curv_scale);
        }
    }

    let checks = vec![
        Check {
            name: "residual_inf",
            value: res_norm,
            tolerance: tols.residual,
            pass: res_norm <= tols.residual,
        },
        Check {
            name: "zero_coincidence_cells",
            value: coincidence,
            tolerance: T::one(),
            pass: coincidence <= T::one(),
        },
        Check {
            name: "sign_product_min",
            value: sign_min,
            tolerance: tols.sign,
            pass: sign_min >= -tols.sign,
        },
        Check {
            name: "apriori_bounds",
            value: bound_violation,
            tolerance: cast(1e-12),
            pass: bound_violation <= cast(1e-12),
        },
        Check {
            name: "convexity_implications",
            value: convexity_violation,
            tolerance: tols.convexity,
            pass: convexity_violation <= tols.convexity,
        },
    ];
    Ok(DiagnosticsReport { checks })
}

/// Result of aligning a field against a reference by translation (and
/// optionally reflection).
#[derive(Clone, Copy, Debug)]
pub struct Alignment<T> {
    pub err: T,
    pub shift_cells: T,
    pub reflected: bool,
}

/// Best max-norm agreement between `candidate` and `reference` over
/// translations on the periodic grid: integer lags first, then fractional
/// refinement on a periodic cubic spline interpolant.
pub fn align_translation<T: Scalar>(
    reference: &[T],
    candidate: &[T],
    try_reflection: bool,
) -> Alignment<T> {
    let m = reference.len();
    assert_eq!(m, candidate.len());

    let orientations: &[bool] = if try_reflection { &[false, true] } else { &[false] };
    let mut best = Alignment { err: T::infinity(), shift_cells: T::zero(), reflected: false };
    for &reflected in orientations {
        let cand: Vec<T> = if reflected {
            (0..m).map(|i| candidate[m - 1 - i]).collect()
        } else {
            candidate.to_vec()
        };
        let mut best_k = 0usize;
        let mut best_err = T::infinity();
        for k in 0..m {
            let mut e = T::zero();
            for (i, &r) in reference.iter().enumerate() {
                e = e.max((r - cand[(i + k) % m]).abs());
                if e >= best_err {
                    break;
                }
            }
            if e < best_err {
                best_err = e;
                best_k = k;
            }
        }
        let spline = PeriodicSpline::fit(&cand);
        let eval_err = |s: T| -> T {
            let mut e = T::zero();
            for (i, &r) in reference.iter().enumerate() {
                e = e.max((r - spline.eval(cast::<T>(i as f64) + s)).abs());
            }
            e
        };
        let golden: T = cast(0.618_033_988_749_894_9);
        let mut lo = cast::<T>(best_k as f64) - T::one();
        let mut hi = cast::<T>(best_k as f64) + T::one();
        let mut x1 = hi - golden * (hi - lo);
        let mut x2 = lo + golden * (hi - lo);
        let mut f1 = eval_err(x1);
        let mut f2 = eval_err(x2);
        for _ in 0..60 {
            if f1 < f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - golden * (hi - lo);
                f1 = eval_err(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + golden * (hi - lo);
                f2 = eval_err(x2);
            }
        }
        let (s, e) = if f1 < f2 { (x1, f1) } else { (x2, f2) };
        let (s, e) = if best_err < e { (cast::<T>(best_k as f64), best_err) } else { (s, e) };
        if e < best.err {
            best = Alignment { err: e, shift_cells: s, reflected };
        }
    }
    best
}

/// Periodic cubic spline through equally spaced samples (unit spacing).
struct PeriodicSpline<T> {
    y: Vec<T>,
    second: Vec<T>,
}

impl<T: Scalar> PeriodicSpline<T> {
    fn fit(y: &[T]) -> Self {
        let m = y.len();
        let mut rhs: Vec<T> = (0..m)
            .map(|i| {
                let up = (i + 1) % m;
                let dn = (i + m - 1) % m;
                cast::<T>(6.0) * (y[up] - two::<T>() * y[i] + y[dn])
            })
            .collect();
        let sub = vec![T::one(); m];
        let sup = vec![T::one(); m];
        let diag = vec![cast::<T>(4.0); m];
        crate::linalg::solve_cyclic_tridiag(&sub, &diag, &sup, T::one(), T::one(), &mut rhs)
            .expect("cyclic spline system is diagonally dominant");
        PeriodicSpline { y: y.to_vec(), second: rhs }
    }

    /// Evaluates at sample coordinate `t` (periodic, unit spacing).
    fn eval(&self, t: T) -> T {
        let m = self.y.len();
        let mf = cast::<T>(m as f64);
        let mut t = t;
        while t < T::zero() {
            t += mf;
        }
        while t >= mf {
            t -= mf;
        }
        let i0 = t.floor().to_f64().unwrap_or(0.0) as usize % m;
        let i1 = (i0 + 1) % m;
        let s = t - t.floor();
        let a = T::one() - s;
        a * self.y[i0]
            + s * self.y[i1]
            + ((a * a * a - a) * self.second[i0] + (s * s * s - s) * self.second[i1])
                / cast::<T>(6.0)
    }
}
