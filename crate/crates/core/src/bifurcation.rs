//! Closed-form bifurcation structure of the periodic steady-state problem
//! and a damped Newton solver for nontrivial steady states.
//!
//! Branches of the constant state `ubar` open at
//! `alpha_n = n pi / (ubar L M_n h'(ubar))`; for the linear force law the
//! cubic coefficient `alpha_{3,n}` and the second-order branch coefficient
//! `b_{2n}^1` are explicit in the sine moments, and the sign of
//! `2 M_n - M_{2n}` decides between super- and subcritical pitchforks.

use crate::diagnostics;
use crate::error::{Error, Result};
use crate::grid::{mean, Field, Grid};
use crate::kernel::{KernelSpec, DEGENERACY_THRESHOLD};
use crate::linalg::lu_solve;
use crate::nonlocal::{AdhesionFunction, SensingMode};
use crate::scalar::{cast, half, pi, tau, two, Scalar};
use crate::solver::{RhsOp, SimParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Criticality {
    Supercritical,
    Subcritical,
    Degenerate,
}

impl std::fmt::Display for Criticality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Criticality::Supercritical => write!(f, "super"),
            Criticality::Subcritical => write!(f, "sub"),
            Criticality::Degenerate => write!(f, "degenerate"),
        }
    }
}

/// One mode of the bifurcation structure. `alpha_n` and the branch
/// coefficients are absent for degenerate modes; the cubic data assumes the
/// linear force law.
#[derive(Clone, Copy, Debug)]
pub struct BifurcationRecord<T> {
    pub n: usize,
    pub m_n: T,
    pub delta_m_n: T,
    pub alpha_n: Option<T>,
    pub alpha_3n: Option<T>,
    pub b_2n1: Option<T>,
    pub criticality: Criticality,
}

/// Cubic normal-form data at mode `n` (linear force law).
#[derive(Clone, Copy, Debug)]
pub struct BifType<T> {
    pub alpha_3n: T,
    pub b_2n1: T,
    pub criticality: Criticality,
}

pub fn bif_type<T: Scalar>(spec: &KernelSpec<T>, length: T, ubar: T, n: usize) -> Result<BifType<T>> {
    let m_n = spec.sine_moment(n, length);
    if m_n.abs().to_f64().unwrap_or(0.0) < DEGENERACY_THRESHOLD {
        return Err(Error::DegenerateMode(n));
    }
    let m_2n = spec.sine_moment(2 * n, length);
    let gap = two::<T>() * m_n - m_2n;
    let k = pi::<T>() * cast::<T>(n as f64) / length;
    let u5 = ubar.powi(5);
    let u3 = ubar.powi(3);
    let alpha_3n = k.powi(3) / (cast::<T>(4.0) * u5 * m_n * m_n * gap);
    let b_2n1 = k * k / (two::<T>() * u3 * m_n * gap);
    let criticality = if gap.abs().to_f64().unwrap_or(0.0) < DEGENERACY_THRESHOLD {
        Criticality::Degenerate
    } else if alpha_3n > T::zero() {
        Criticality::Supercritical
    } else {
        Criticality::Subcritical
    };
    Ok(BifType { alpha_3n, b_2n1, criticality })
}

/// Bifurcation records for modes `1..=n_max`. `hprime_ubar` is `h'(ubar)`;
/// the cubic columns are filled from the linear-force-law formulas.
pub fn bif_points<T: Scalar>(
    spec: &KernelSpec<T>,
    length: T,
    ubar: T,
    hprime_ubar: T,
    n_max: usize,
) -> Vec<BifurcationRecord<T>> {
    (1..=n_max)
        .map(|n| {
            let m_n = spec.sine_moment(n, length);
            let delta_m_n = spec.delta_sine_moment(n, length);
            if m_n.abs().to_f64().unwrap_or(0.0) < DEGENERACY_THRESHOLD {
                return BifurcationRecord {
                    n,
                    m_n,
                    delta_m_n,
                    alpha_n: None,
                    alpha_3n: None,
                    b_2n1: None,
                    criticality: Criticality::Degenerate,
                };
            }
            let alpha_n = pi::<T>() * cast::<T>(n as f64) / (ubar * length * m_n * hprime_ubar);
            let t = bif_type(spec, length, ubar, n).expect("non-degenerate mode");
            BifurcationRecord {
                n,
                m_n,
                delta_m_n,
                alpha_n: Some(alpha_n),
                alpha_3n: Some(t.alpha_3n),
                b_2n1: Some(t.b_2n1),
                criticality: t.criticality,
            }
        })
        .collect()
}

/// The smallest positive onset value and its mode, if any.
pub fn first_onset<T: Scalar>(records: &[BifurcationRecord<T>]) -> Option<(usize, T)> {
    records
        .iter()
        .filter_map(|r| r.alpha_n.filter(|a| *a > T::zero()).map(|a| (r.n, a)))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
}

/// Local branch expansion at mode `n`: the approximate steady state and its
/// parameter value at arclength-like coordinate `s`.
pub fn local_branch<T: Scalar>(
    spec: &KernelSpec<T>,
    length: T,
    ubar: T,
    n: usize,
    s: T,
    grid: &Grid<T>,
) -> Result<(T, Field<T>)> {
    let m_n = spec.sine_moment(n, length);
    if m_n.abs().to_f64().unwrap_or(0.0) < DEGENERACY_THRESHOLD {
        return Err(Error::DegenerateMode(n));
    }
    let alpha_n = pi::<T>() * cast::<T>(n as f64) / (ubar * length * m_n);
    let t = bif_type(spec, length, ubar, n)?;
    let alpha_s = alpha_n + s * s * t.alpha_3n;
    let k1 = tau::<T>() * cast::<T>(n as f64) / length;
    let k2 = two::<T>() * k1;
    let u = (0..grid.cell_count())
        .map(|i| {
            let x = grid.x(i);
            ubar + s * alpha_n * (k1 * x).cos() + s * s * t.b_2n1 * (k2 * x).cos()
        })
        .collect();
    Ok((alpha_s, u))
}

/// Eigenvalues of the steady-state linearization at the onset of mode `n`,
/// for perturbation modes `k = 1..=k_max`.
pub fn linearized_spectrum<T: Scalar>(
    spec: &KernelSpec<T>,
    length: T,
    ubar: T,
    n: usize,
    k_max: usize,
) -> Result<Vec<T>> {
    let m_n = spec.sine_moment(n, length);
    if m_n.abs().to_f64().unwrap_or(0.0) < DEGENERACY_THRESHOLD {
        return Err(Error::DegenerateMode(n));
    }
    let _ = ubar;
    Ok((1..=k_max)
        .map(|k| {
            if k == n {
                return T::zero();
            }
            let w = tau::<T>() * cast::<T>(k as f64) / length;
            let m_k = spec.sine_moment(k, length);
            if m_k.abs().to_f64().unwrap_or(0.0) < DEGENERACY_THRESHOLD {
                return -w * w;
            }
            let ratio = cast::<T>(n as f64) / cast::<T>(k as f64) * (m_k / m_n);
            w * w * (ratio - T::one())
        })
        .collect())
}

/// Growth rate of perturbation mode `n` about the constant state at the
/// given adhesion strength.
pub fn growth_rate<T: Scalar>(
    spec: &KernelSpec<T>,
    length: T,
    ubar: T,
    hprime_ubar: T,
    params: SimParams<T>,
    n: usize,
) -> T {
    let w = tau::<T>() * cast::<T>(n as f64) / length;
    let m_n = spec.sine_moment(n, length);
    -params.diffusion * w * w
        + params.alpha * ubar * hprime_ubar * two::<T>() * w * m_n
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchVerdict {
    Stable,
    Saddle,
}

#[derive(Clone, Copy, Debug)]
pub struct BranchStability<T> {
    pub verdict: BranchVerdict,
    /// Sign of the small eigenvalue on the branch side: `-sign(alpha_3n)`.
    pub mu_sign: i8,
    /// A transverse mode with a nonnegative eigenvalue, when one exists.
    pub offending_mode: Option<usize>,
    pub alpha_3n: T,
}

/// Linear stability of the branch at mode `n` near its onset (linear force
/// law): stable iff every transverse eigenvalue is negative and the
/// pitchfork is supercritical.
pub fn branch_stability<T: Scalar>(
    spec: &KernelSpec<T>,
    length: T,
    ubar: T,
    n: usize,
) -> Result<BranchStability<T>> {
    let t = bif_type(spec, length, ubar, n)?;
    let k_max = (4 * n).max(200);
    let spectrum = linearized_spectrum(spec, length, ubar, n, k_max)?;
    let offending = spectrum
        .iter()
        .enumerate()
        .find(|(idx, &l)| idx + 1 != n && l >= T::zero())
        .map(|(idx, _)| idx + 1);
    let mu_sign = if t.alpha_3n > T::zero() { -1 } else { 1 };
    let verdict = if offending.is_none() && t.alpha_3n > T::zero() {
        BranchVerdict::Stable
    } else {
        BranchVerdict::Saddle
    };
    Ok(BranchStability { verdict, mu_sign, offending_mode: offending, alpha_3n: t.alpha_3n })
}

/// Damped Newton for steady states of the discrete model, with the mean
/// pinned to `ubar` and, on the periodic domain, a phase condition
/// `u(L/4) = u(3L/4)` removing translations. Slack unknowns unfold the
/// conserved-mass and translation null directions so the system is square.
#[allow(clippy::too_many_arguments)]
pub fn newton_steady<T: Scalar>(
    params: SimParams<T>,
    ubar: T,
    grid: &Grid<T>,
    spec: &KernelSpec<T>,
    mode: &SensingMode<T>,
    h: &AdhesionFunction<T>,
    init: &[T],
    residual_tol: T,
) -> Result<Field<T>> {
    grid.check_field(init)?;
    let m = grid.cell_count();
    let periodic = mode.is_periodic();
    let dim = m + 1 + usize::from(periodic);
    // Quarter-domain samples mirrored through L/2; their difference
    // vanishes exactly for profiles reflection-symmetric about the domain
    // midpoint, which pins the translation phase.
    let q1 = m / 4;
    let q3 = m - 1 - q1;
    let dx = grid.dx();

    let mut rhs = RhsOp::new(grid, spec, mode, h, params)?;
    let mut rhs_buf = vec![T::zero(); m];

    let mut residual = |rhs: &mut RhsOp<T>, z: &[T], out: &mut [T]| -> Result<()> {
        let (u, slack) = z.split_at(m);
        rhs.eval(u, &mut rhs_buf)?;
        let a = slack[0];
        if periodic {
            let b = slack[1];
            for i in 0..m {
                let up = if i + 1 == m { 0 } else { i + 1 };
                let dn = if i == 0 { m - 1 } else { i - 1 };
                let drift = (u[up] - u[dn]) / (two::<T>() * dx);
                out[i] = rhs_buf[i] + a + b * drift;
            }
        } else {
            for i in 0..m {
                out[i] = rhs_buf[i] + a;
            }
        }
        out[m] = mean(u) - ubar;
        if periodic {
            out[m + 1] = u[q1] - u[q3];
        }
        Ok(())
    };

    let mut z = vec![T::zero(); dim];
    z[..m].copy_from_slice(init);

    let mut f = vec![T::zero(); dim];
    residual(&mut rhs, &z, &mut f)?;
    let norm = |v: &[T]| v.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()));
    let mut fnorm = norm(&f);

    let sqrt_eps = T::epsilon().sqrt();
    let max_iter = 60usize;
    let mut jac = vec![T::zero(); dim * dim];
    let mut fpert = vec![T::zero(); dim];
    let mut step = vec![T::zero(); dim];

    for iter in 0..max_iter {
        if fnorm < residual_tol {
            return Ok(z[..m].to_vec());
        }
        // One-sided finite-difference Jacobian.
        for col in 0..dim {
            let saved = z[col];
            let delta = sqrt_eps * (T::one() + saved.abs());
            z[col] = saved + delta;
            residual(&mut rhs, &z, &mut fpert)?;
            z[col] = saved;
            for row in 0..dim {
                jac[row * dim + col] = (fpert[row] - f[row]) / delta;
            }
        }
        for (s, &fv) in step.iter_mut().zip(&f) {
            *s = -fv;
        }
        lu_solve(&mut jac, dim, &mut step)?;

        if std::env::var("ADHESIM_NEWTON_TRACE").is_ok() {
            let step_norm = step.iter().fold(T::zero(), |a, &x| a.max(x.abs()));
            eprintln!(
                "iter {iter}: fnorm {:.6e}, |step| {:.3e}, slacks {:?}",
                fnorm.to_f64().unwrap_or(f64::NAN),
                step_norm.to_f64().unwrap_or(f64::NAN),
                &z[m..]
            );
        }
        // Halve the step until the residual decreases.
        let mut damping = T::one();
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<T> = z.iter().zip(&step).map(|(&zi, &si)| zi + damping * si).collect();
            match residual(&mut rhs, &trial, &mut fpert) {
                Ok(()) => {
                    let tnorm = norm(&fpert);
                    if tnorm < fnorm || tnorm < residual_tol {
                        z = trial;
                        std::mem::swap(&mut f, &mut fpert);
                        fnorm = tnorm;
                        accepted = true;
                        break;
                    }
                }
                Err(_) => {}
            }
            damping = damping * half::<T>();
        }
        if !accepted {
            return Err(Error::NewtonDiverged {
                iter,
                residual: fnorm.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    if fnorm < residual_tol {
        return Ok(z[..m].to_vec());
    }
    Err(Error::NewtonDiverged { iter: max_iter, residual: fnorm.to_f64().unwrap_or(f64::NAN) })
}

#[derive(Clone, Copy, Debug)]
pub struct BranchPoint<T> {
    pub alpha: T,
    pub l2_amplitude: T,
    pub u_max: T,
    pub u_min: T,
    pub peaks: usize,
}

#[derive(Clone, Debug)]
pub struct BranchTable<T> {
    pub points: Vec<BranchPoint<T>>,
    /// Why the march stopped early, when it did.
    pub stopped: Option<String>,
}

/// Natural-parameter continuation of the mode-`n` branch over equally
/// spaced `alpha` values, seeding each solve with the previous solution.
/// Stops (and records why) on Newton failure or once the amplitude cap
/// `u_max > 1000 ubar` is hit.
#[allow(clippy::too_many_arguments)]
pub fn continue_branch<T: Scalar>(
    spec: &KernelSpec<T>,
    grid: &Grid<T>,
    ubar: T,
    n: usize,
    alpha_start: T,
    alpha_end: T,
    steps: usize,
    h: &AdhesionFunction<T>,
    residual_tol: T,
) -> Result<BranchTable<T>> {
    let length = grid.length();
    let records = bif_points(spec, length, ubar, T::one(), n);
    let record = records.last().filter(|r| r.n == n).ok_or(Error::DegenerateMode(n))?;
    let alpha_n = record.alpha_n.ok_or(Error::DegenerateMode(n))?;
    let alpha_3n = record.alpha_3n.unwrap_or(T::one());

    let s0 = {
        let gap = (alpha_start - alpha_n) / alpha_3n;
        if gap > T::zero() {
            gap.sqrt()
        } else {
            cast(1e-3)
        }
    };
    let (_, mut u) = local_branch(spec, length, ubar, n, s0, grid)?;

    let steps = steps.max(1);
    let mut table = BranchTable { points: Vec::new(), stopped: None };
    for k in 0..steps {
        let frac = if steps == 1 {
            T::zero()
        } else {
            cast::<T>(k as f64) / cast::<T>((steps - 1) as f64)
        };
        let alpha = alpha_start + (alpha_end - alpha_start) * frac;
        let params = SimParams { diffusion: T::one(), alpha };
        match newton_steady(params, ubar, grid, spec, &SensingMode::Periodic, h, &u, residual_tol) {
            Ok(sol) => {
                let dev: Vec<T> = sol.iter().map(|&v| v - ubar).collect();
                let point = BranchPoint {
                    alpha,
                    l2_amplitude: crate::grid::l2(&dev, grid.dx()),
                    u_max: sol.iter().copied().fold(T::neg_infinity(), T::max),
                    u_min: sol.iter().copied().fold(T::infinity(), T::min),
                    peaks: diagnostics::count_peaks(&sol, cast(1e-4), true),
                };
                table.points.push(point);
                if point.u_max > cast::<T>(1e3) * ubar {
                    table.stopped = Some(format!("amplitude cap reached at alpha = {alpha}"));
                    break;
                }
                u = sol;
            }
            Err(e) => {
                table.stopped = Some(format!("newton failed at alpha = {alpha}: {e}"));
                break;
            }
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelFamily;
    use crate::solver::discrete_rhs;

    const PI: f64 = std::f64::consts::PI;

    fn uniform() -> KernelSpec<f64> {
        KernelSpec::normalized(KernelFamily::Uniform, 1.0).unwrap()
    }

    #[test]
    fn onset_values_l5_closed_form() {
        let recs = bif_points(&uniform(), 5.0, 1.0, 1.0, 3);
        let a1 = recs[0].alpha_n.unwrap();
        let a2 = recs[1].alpha_n.unwrap();
        let a3 = recs[2].alpha_n.unwrap();
        let s5 = 5.0f64.sqrt();
        assert!((a1 - 16.0 * PI * PI / (25.0 * (5.0 - s5))).abs() < 1e-12);
        assert!((a2 - 64.0 * PI * PI / (25.0 * (5.0 + s5))).abs() < 1e-12);
        assert!((a3 - 144.0 * PI * PI / (25.0 * (5.0 + s5))).abs() < 1e-12);
        assert!((a1 - 2.2853).abs() < 1e-4);
        assert!((a2 - 3.4886).abs() < 1e-3);
        assert!((a3 - 7.8494).abs() < 1e-3);
        assert_eq!(first_onset(&recs), Some((1, a1)));
    }

    #[test]
    fn onset_values_l2_odd_modes_only() {
        let recs = bif_points(&uniform(), 2.0, 1.0, 1.0, 6);
        for r in &recs {
            if r.n % 2 == 0 {
                assert_eq!(r.criticality, Criticality::Degenerate);
                assert!(r.alpha_n.is_none());
            } else {
                let expected = (r.n as f64 * PI).powi(2) / 2.0;
                assert!((r.alpha_n.unwrap() - expected).abs() < 1e-10, "n = {}", r.n);
            }
        }
    }

    #[test]
    fn onset_scales_inversely_with_mean() {
        let spec = uniform();
        let a = bif_points(&spec, 5.0, 1.0, 1.0, 5);
        let b = bif_points(&spec, 5.0, 2.0, 1.0, 5);
        for (ra, rb) in a.iter().zip(&b) {
            if let (Some(x), Some(y)) = (ra.alpha_n, rb.alpha_n) {
                assert!((x / y - 2.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn cubic_coefficient_l2() {
        let t = bif_type(&uniform(), 2.0, 1.0, 1).unwrap();
        assert!((t.alpha_3n - (PI / 2.0).powi(6)).abs() < 1e-10);
        assert_eq!(t.criticality, Criticality::Supercritical);
    }

    #[test]
    fn uniform_always_supercritical() {
        let spec = uniform();
        for &length in &[2.5f64, 3.0, 5.0, 10.0] {
            for n in 1..=50 {
                if spec.sine_moment(n, length).abs() < DEGENERACY_THRESHOLD {
                    continue;
                }
                let t = bif_type(&spec, length, 1.0, n).unwrap();
                assert!(t.alpha_3n > 0.0, "n = {n}, L = {length}");
                assert_eq!(t.criticality, Criticality::Supercritical);
            }
        }
    }

    #[test]
    fn two_point_kernel_subcritical_mode() {
        let fam = KernelFamily::TwoPoint { a1: 8.0 / 18.0, a2: 1.0 / 18.0, r1: 0.05, r2: 0.76, sigma: 0.02 };
        let spec = KernelSpec::normalized(fam, 1.0).unwrap();
        let t = bif_type(&spec, 3.0, 1.0, 2).unwrap();
        assert_eq!(t.criticality, Criticality::Subcritical, "alpha_3 = {}", t.alpha_3n);
    }

    #[test]
    fn degenerate_mode_rejected() {
        assert!(matches!(bif_type(&uniform(), 2.0, 1.0, 2), Err(Error::DegenerateMode(2))));
        assert!(matches!(
            linearized_spectrum(&uniform(), 2.0, 1.0, 2, 5),
            Err(Error::DegenerateMode(2))
        ));
    }

    #[test]
    fn local_branch_at_zero_is_constant() {
        let grid = Grid::new(5.0, 64).unwrap();
        let (alpha, u) = local_branch(&uniform(), 5.0, 1.0, 1, 0.0, &grid).unwrap();
        let recs = bif_points(&uniform(), 5.0, 1.0, 1.0, 1);
        assert!((alpha - recs[0].alpha_n.unwrap()).abs() < 1e-14);
        assert!(u.iter().all(|&v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn local_branch_parity() {
        // Flipping s keeps alpha and shifts the profile by half a period.
        let n = 2usize;
        let grid = Grid::new(5.0, 128).unwrap();
        let m = grid.cell_count();
        let (ap, up) = local_branch(&uniform(), 5.0, 1.0, n, 0.05, &grid).unwrap();
        let (am, um) = local_branch(&uniform(), 5.0, 1.0, n, -0.05, &grid).unwrap();
        assert_eq!(ap, am);
        let shift = m / (2 * n);
        for i in 0..m {
            assert!((um[i] - up[(i + shift) % m]).abs() < 1e-12);
        }
    }

    #[test]
    fn local_branch_residual_cubic_in_s() {
        let spec = uniform();
        let grid = Grid::new(5.0, 1024).unwrap();
        let h = AdhesionFunction::Linear;
        let mut logs = Vec::new();
        for &s in &[1e-3, 3.16e-3, 1e-2, 3.16e-2, 1e-1] {
            let (alpha, u) = local_branch(&spec, 5.0, 1.0, 1, s, &grid).unwrap();
            let r = discrete_rhs(
                &u,
                SimParams { diffusion: 1.0, alpha },
                &spec,
                &SensingMode::Periodic,
                &h,
                &grid,
            )
            .unwrap();
            logs.push((s.ln(), crate::grid::linf(&r).ln()));
        }
        // Least-squares slope of log residual against log s.
        let n = logs.len() as f64;
        let sx: f64 = logs.iter().map(|p| p.0).sum();
        let sy: f64 = logs.iter().map(|p| p.1).sum();
        let sxx: f64 = logs.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = logs.iter().map(|p| p.0 * p.1).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        assert!((slope - 3.0).abs() < 0.2, "slope {slope}");
    }

    #[test]
    fn spectrum_values() {
        let spec = uniform();
        let spectrum = linearized_spectrum(&spec, 5.0, 1.0, 1, 20).unwrap();
        assert_eq!(spectrum[0], 0.0);
        for (idx, &l) in spectrum.iter().enumerate().skip(1) {
            assert!(l < 0.0, "k = {}: {l}", idx + 1);
        }
        // k = 2: (4 pi / 5)^2 (cos^2(pi/5) - 1) = -(4 pi / 5)^2 sin^2(pi/5).
        let expected = -(4.0 * PI / 5.0).powi(2) * (PI / 5.0).sin().powi(2);
        assert!((spectrum[1] - expected).abs() < 1e-12);
        assert!((spectrum[1] + 2.1822).abs() < 1e-3);
    }

    #[test]
    fn stability_verdicts() {
        let spec = uniform();
        let s1 = branch_stability(&spec, 5.0, 1.0, 1).unwrap();
        assert_eq!(s1.verdict, BranchVerdict::Stable);
        assert_eq!(s1.mu_sign, -1);
        for n in 2..=3 {
            let s = branch_stability(&spec, 5.0, 1.0, n).unwrap();
            assert_eq!(s.verdict, BranchVerdict::Saddle);
            assert!(s.offending_mode.is_some());
        }
        // Subcritical mode: unstable branch side.
        let fam = KernelFamily::TwoPoint { a1: 8.0 / 18.0, a2: 1.0 / 18.0, r1: 0.05, r2: 0.76, sigma: 0.02 };
        let sub = KernelSpec::normalized(fam, 1.0).unwrap();
        let s = branch_stability(&sub, 3.0, 1.0, 2).unwrap();
        assert_eq!(s.mu_sign, 1);
        assert_eq!(s.verdict, BranchVerdict::Saddle);
    }

    #[test]
    fn newton_below_onset_returns_constant() {
        let grid = Grid::new(5.0, 64).unwrap();
        let init = vec![1.0; grid.cell_count()];
        let sol = newton_steady(
            SimParams { diffusion: 1.0, alpha: 1.5 },
            1.0,
            &grid,
            &uniform(),
            &SensingMode::Periodic,
            &AdhesionFunction::Linear,
            &init,
            1e-10,
        )
        .unwrap();
        assert!(sol.iter().all(|&v| (v - 1.0).abs() < 1e-9));
    }

    #[test]
    fn newton_single_peak_small_grid() {
        let spec = uniform();
        let grid = Grid::new(5.0, 64).unwrap();
        let h = AdhesionFunction::Linear;
        let alpha = 3.25;
        let recs = bif_points(&spec, 5.0, 1.0, 1.0, 1);
        let a1 = recs[0].alpha_n.unwrap();
        let a31 = recs[0].alpha_3n.unwrap();
        let s = ((alpha - a1) / a31).sqrt();
        let (_, init) = local_branch(&spec, 5.0, 1.0, 1, s, &grid).unwrap();
        let sol = newton_steady(
            SimParams { diffusion: 1.0, alpha },
            1.0,
            &grid,
            &spec,
            &SensingMode::Periodic,
            &h,
            &init,
            1e-10,
        )
        .unwrap();
        // Residual of the plain right-hand side, mean, and the sign
        // property of steady states.
        let r = discrete_rhs(&sol, SimParams { diffusion: 1.0, alpha }, &spec, &SensingMode::Periodic, &h, &grid)
            .unwrap();
        assert!(crate::grid::linf(&r) < 1e-9, "residual {}", crate::grid::linf(&r));
        assert!((mean(&sol) - 1.0).abs() < 1e-10);
        assert!(crate::grid::linf(&sol) > 1.2, "should be a pattern, max {}", crate::grid::linf(&sol));
        let op = crate::nonlocal::NonlocalOp::new(&grid, &spec, &SensingMode::Periodic, &h).unwrap();
        let k = op.apply(&sol).unwrap();
        let m = grid.cell_count();
        for i in 0..m {
            let up = (i + 1) % m;
            let dn = (i + m - 1) % m;
            let du = (sol[up] - sol[dn]) / (2.0 * grid.dx());
            assert!(du * k[i] >= -1e-8, "sign property at {i}");
        }
        assert_eq!(diagnostics::count_peaks(&sol, 1e-4, true), 1);
    }

    #[test]
    fn continuation_amplitude_grows_from_onset() {
        let spec = uniform();
        let grid = Grid::new(5.0, 64).unwrap();
        let recs = bif_points(&spec, 5.0, 1.0, 1.0, 1);
        let a1 = recs[0].alpha_n.unwrap();
        let a31 = recs[0].alpha_3n.unwrap();
        let table = continue_branch(
            &spec,
            &grid,
            1.0,
            1,
            a1 + 0.05,
            a1 + 0.65,
            5,
            &AdhesionFunction::Linear,
            1e-10,
        )
        .unwrap();
        assert!(table.stopped.is_none(), "{:?}", table.stopped);
        assert_eq!(table.points.len(), 5);
        for w in table.points.windows(2) {
            assert!(w[1].l2_amplitude > w[0].l2_amplitude);
        }
        for p in &table.points {
            assert_eq!(p.peaks, 1);
        }
        // Near onset the amplitude follows the local expansion
        // |s| alpha_1 sqrt(L/2).
        let s = ((table.points[0].alpha - a1) / a31).sqrt();
        let predicted = s * a1 * (5.0f64 / 2.0).sqrt();
        let got = table.points[0].l2_amplitude;
        assert!((got - predicted).abs() / predicted < 0.2, "{got} vs {predicted}");
    }
}
