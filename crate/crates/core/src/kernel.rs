//! Interaction kernel: the even weight `omega` on `[0, R]`, its odd
//! extension used by the nonlocal operator, sine moments, raw moments and
//! the induced interaction potential.
//!
//! Every kernel is normalized so that the integral of `omega` over `[0, R]`
//! equals one half.

use crate::error::{Error, Result};
use crate::quad::{simpson, DEFAULT_PANELS};
use crate::scalar::{cast, half, pi, tau, two, Scalar};

/// Modes with a sine moment below this threshold carry no bifurcation.
pub const DEGENERACY_THRESHOLD: f64 = 1e-9;

/// Kernel families. Parameters are pre-normalization; the normalization
/// constant is computed by [`KernelSpec::normalized`].
#[derive(Clone, Debug, PartialEq)]
pub enum KernelFamily<T> {
    /// Constant weight on `[0, R]`.
    Uniform,
    /// `exp(-r / xi)`.
    Exponential { xi: T },
    /// `(r / xi) exp(-(r / xi)^2 / 2)`, vanishing at the cell centre.
    Peak { xi: T },
    /// Two Gaussian bumps of width `sigma` at `r1 < r2`, each renormalized
    /// to unit mass on `[0, R]` and mixed with weights `a1`, `a2`.
    TwoPoint { a1: T, a2: T, r1: T, r2: T, sigma: T },
    /// Piecewise-linear interpolation of `(r, omega)` samples; zero outside
    /// the sampled range.
    Tabulated { samples: Vec<(T, T)> },
}

/// A normalized interaction kernel.
#[derive(Clone, Debug)]
pub struct KernelSpec<T> {
    family: KernelFamily<T>,
    radius: T,
    omega0: T,
    /// Unit masses of the two mollified bumps, cached at normalization.
    bump_mass: Option<(T, T)>,
}

/// Sine moments of the kernel for a fixed domain length.
#[derive(Clone, Debug)]
pub struct MomentTable<T> {
    pub length: T,
    pub entries: Vec<MomentEntry<T>>,
}

#[derive(Clone, Copy, Debug)]
pub struct MomentEntry<T> {
    pub n: usize,
    pub m_n: T,
    pub delta_m_n: T,
}

impl<T: Scalar> KernelSpec<T> {
    /// Validates the parameters and computes the normalization constant so
    /// that the kernel integrates to one half on `[0, R]`.
    pub fn normalized(family: KernelFamily<T>, radius: T) -> Result<Self> {
        if !(radius > T::zero()) {
            return Err(Error::InvalidParameter("sensing radius must be positive".into()));
        }
        match &family {
            KernelFamily::Uniform => {}
            KernelFamily::Exponential { xi } | KernelFamily::Peak { xi } => {
                if !(*xi > T::zero()) {
                    return Err(Error::InvalidParameter("xi must be positive".into()));
                }
            }
            KernelFamily::TwoPoint { a1, a2, r1, r2, sigma } => {
                if !(*sigma > T::zero()) {
                    return Err(Error::InvalidParameter("sigma must be positive".into()));
                }
                if !(*a1 >= T::zero() && *a2 >= T::zero()) {
                    return Err(Error::InvalidParameter("a1, a2 must be nonnegative".into()));
                }
                if !(T::zero() < *r1 && *r1 < *r2 && *r2 < radius) {
                    return Err(Error::InvalidParameter("need 0 < r1 < r2 < R".into()));
                }
            }
            KernelFamily::Tabulated { samples } => {
                if samples.len() < 2 {
                    return Err(Error::InvalidParameter("table needs at least two samples".into()));
                }
                for w in samples.windows(2) {
                    if !(w[1].0 > w[0].0) {
                        return Err(Error::InvalidParameter("table abscissae must increase".into()));
                    }
                }
                if samples.iter().any(|&(_, v)| v < T::zero() || !v.is_finite()) {
                    return Err(Error::InvalidParameter("table values must be finite and nonnegative".into()));
                }
            }
        }

        let mut spec = KernelSpec { family, radius, omega0: T::one(), bump_mass: None };
        if let KernelFamily::TwoPoint { r1, r2, sigma, .. } = spec.family {
            let z1 = spec.bump_integral(T::zero(), spec.radius, r1, sigma);
            let z2 = spec.bump_integral(T::zero(), spec.radius, r2, sigma);
            spec.bump_mass = Some((z1, z2));
        }
        let raw = spec.integral_raw(T::zero(), radius);
        if !(raw > T::zero()) {
            return Err(Error::NonNormalizable);
        }
        spec.omega0 = half::<T>() / raw;
        Ok(spec)
    }

    pub fn family(&self) -> &KernelFamily<T> {
        &self.family
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    /// The computed normalization constant.
    pub fn omega0(&self) -> T {
        self.omega0
    }

    fn unnormalized(&self, r: T) -> T {
        if r < T::zero() || r > self.radius {
            return T::zero();
        }
        match &self.family {
            KernelFamily::Uniform => T::one(),
            KernelFamily::Exponential { xi } => (-r / *xi).exp(),
            KernelFamily::Peak { xi } => r / *xi * (-(r / *xi) * (r / *xi) * half::<T>()).exp(),
            KernelFamily::TwoPoint { a1, a2, r1, r2, sigma } => {
                let (z1, z2) = self.bump_mass.expect("bump masses cached at construction");
                let g = |c: T| {
                    let z = (r - c) / *sigma;
                    (-z * z * half::<T>()).exp()
                };
                *a1 * g(*r1) / z1 + *a2 * g(*r2) / z2
            }
            KernelFamily::Tabulated { samples } => {
                let first = samples[0].0;
                let last = samples[samples.len() - 1].0;
                if r < first || r > last {
                    return T::zero();
                }
                let k = samples.partition_point(|&(x, _)| x <= r).min(samples.len() - 1);
                let (x1, y1) = samples[k];
                let (x0, y0) = samples[k - 1];
                y0 + (y1 - y0) * (r - x0) / (x1 - x0)
            }
        }
    }

    /// Integral of the unnormalized weight over `[a, b]` clipped to `[0, R]`.
    fn integral_raw(&self, a: T, b: T) -> T {
        let a = a.max(T::zero());
        let b = b.min(self.radius);
        if b <= a {
            return T::zero();
        }
        match &self.family {
            KernelFamily::Uniform => b - a,
            KernelFamily::Exponential { xi } => *xi * ((-a / *xi).exp() - (-b / *xi).exp()),
            KernelFamily::Peak { xi } => {
                let q = |r: T| (-(r / *xi) * (r / *xi) * half::<T>()).exp();
                *xi * (q(a) - q(b))
            }
            KernelFamily::TwoPoint { a1, a2, r1, r2, sigma } => {
                let (z1, z2) = self.bump_mass.expect("bump masses cached at construction");
                *a1 * self.bump_integral(a, b, *r1, *sigma) / z1
                    + *a2 * self.bump_integral(a, b, *r2, *sigma) / z2
            }
            KernelFamily::Tabulated { .. } => {
                // Trapezoid on the interpolant, split at the sample knots.
                let KernelFamily::Tabulated { samples } = &self.family else { unreachable!() };
                let mut acc = T::zero();
                let mut lo = a;
                for w in samples.windows(2) {
                    let (x0, _) = w[0];
                    let (x1, _) = w[1];
                    let s = lo.max(x0);
                    let e = b.min(x1);
                    if e > s {
                        acc += (self.unnormalized(s) + self.unnormalized(e)) * (e - s) * half::<T>();
                        lo = e;
                    }
                }
                acc
            }
        }
    }

    /// Gaussian bump integral over `[a, b]` by Simpson with sigma-resolved panels.
    fn bump_integral(&self, a: T, b: T, centre: T, sigma: T) -> T {
        if b <= a {
            return T::zero();
        }
        let width = (b - a).to_f64().unwrap_or(0.0);
        let s = sigma.to_f64().unwrap_or(1.0);
        let panels = ((width / s * 24.0).ceil() as usize).clamp(8, 40_000);
        simpson(
            |r| {
                let z = (r - centre) / sigma;
                (-z * z * half::<T>()).exp()
            },
            a,
            b,
            panels,
        )
    }

    /// The normalized even weight at `r >= 0` (zero outside `[0, R]`).
    pub fn omega(&self, r: T) -> T {
        self.omega0 * self.unnormalized(r)
    }

    /// The odd directional weight `sgn(r) omega(|r|)`, zero at the origin.
    pub fn omega_odd(&self, r: T) -> T {
        if r == T::zero() {
            T::zero()
        } else {
            self.omega(r.abs()) * r.signum()
        }
    }

    /// Integral of the normalized weight over `[a, b]` (clipped to `[0, R]`).
    pub fn integral(&self, a: T, b: T) -> T {
        self.omega0 * self.integral_raw(a, b)
    }

    /// Sup norm of the weight on `[0, R]`.
    pub fn sup(&self) -> T {
        match &self.family {
            KernelFamily::Uniform => self.omega0,
            KernelFamily::Exponential { .. } => self.omega0,
            KernelFamily::Peak { xi } => {
                // Maximum at r = xi when inside the support, else at r = R.
                let at = if *xi <= self.radius { *xi } else { self.radius };
                self.omega(at)
            }
            KernelFamily::TwoPoint { .. } | KernelFamily::Tabulated { .. } => {
                let n = 20_000usize;
                let mut m = T::zero();
                for i in 0..=n {
                    let r = self.radius * cast::<T>(i as f64 / n as f64);
                    m = m.max(self.omega(r));
                }
                m
            }
        }
    }

    fn quad_panels(&self) -> usize {
        match &self.family {
            KernelFamily::TwoPoint { sigma, .. } => {
                let s = sigma.to_f64().unwrap_or(1.0);
                let r = self.radius.to_f64().unwrap_or(1.0);
                DEFAULT_PANELS.max(((r / s) * 400.0).ceil() as usize).min(200_000)
            }
            _ => DEFAULT_PANELS,
        }
    }

    /// Fourier sine moment `M_n = int_0^R sin(2 pi n r / L) omega(r) dr`.
    ///
    /// The uniform family uses the closed form `L/(2 pi n R) sin^2(pi n R / L)`;
    /// the other families integrate by composite Simpson.
    pub fn sine_moment(&self, n: usize, length: T) -> T {
        assert!(n >= 1, "mode index must be positive");
        let k = tau::<T>() * cast::<T>(n as f64) / length;
        match &self.family {
            KernelFamily::Uniform => {
                let s = (pi::<T>() * cast::<T>(n as f64) * self.radius / length).sin();
                length / (tau::<T>() * cast::<T>(n as f64) * self.radius) * s * s
            }
            _ => simpson(|r| (k * r).sin() * self.omega(r), T::zero(), self.radius, self.quad_panels()),
        }
    }

    /// `2 M_n - M_{2n}`, the quantity whose sign decides the pitchfork type.
    pub fn delta_sine_moment(&self, n: usize, length: T) -> T {
        two::<T>() * self.sine_moment(n, length) - self.sine_moment(2 * n, length)
    }

    /// Moment table for modes `1..=n_max`.
    pub fn moment_table(&self, length: T, n_max: usize) -> MomentTable<T> {
        let entries = (1..=n_max)
            .map(|n| MomentEntry {
                n,
                m_n: self.sine_moment(n, length),
                delta_m_n: self.delta_sine_moment(n, length),
            })
            .collect();
        MomentTable { length, entries }
    }

    /// Raw odd moment `mu_j` of the directional weight; zero for even `j`.
    pub fn raw_moment(&self, j: usize) -> T {
        if j % 2 == 0 {
            return T::zero();
        }
        match &self.family {
            KernelFamily::Uniform => {
                // 2 omega0 R^{j+1} / (j+1)
                two::<T>() * self.omega0 * self.radius.powi(j as i32 + 1) / cast::<T>((j + 1) as f64)
            }
            _ => {
                two::<T>()
                    * simpson(
                        |r| r.powi(j as i32) * self.omega(r),
                        T::zero(),
                        self.radius,
                        self.quad_panels(),
                    )
            }
        }
    }

    /// First rescaled moment `int_0^1 s omega(s R) R ds = mu_1 / (2 R)`.
    pub fn c1(&self) -> T {
        self.raw_moment(1) / (two::<T>() * self.radius)
    }

    /// Interaction potential `W(r) = int_r^R omega`, cut off at the sensing
    /// radius. Nonincreasing with `W(R) = 0`.
    pub fn potential(&self, r: T) -> T {
        if r >= self.radius {
            T::zero()
        } else {
            self.integral(r.max(T::zero()), self.radius)
        }
    }

    /// Whether the weight is effectively nonzero at the sensing radius,
    /// which makes the derivative diagnostic of bounded-domain operators
    /// discontinuous at distance `R` from the walls.
    pub fn edge_weight_nonzero(&self) -> bool {
        self.omega(self.radius).to_f64().unwrap_or(0.0).abs() > 1e-9
    }

    /// Whether the weight vanishes at the origin (no directional signal from
    /// adjacent positions), which voids the wall-reflection construction.
    pub fn origin_weight_zero(&self) -> bool {
        let eps = self.radius * cast::<T>(1e-9);
        self.omega(eps).to_f64().unwrap_or(0.0).abs() < 1e-9
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform() -> KernelSpec<f64> {
        KernelSpec::normalized(KernelFamily::Uniform, 1.0).unwrap()
    }

    #[test]
    fn uniform_weight_is_one_half() {
        let k = uniform();
        assert!((k.omega(0.3) - 0.5).abs() < 1e-15);
        assert!((k.integral(0.0, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn exponential_normalization_closed_form() {
        let k = KernelSpec::normalized(KernelFamily::Exponential { xi: 0.25 }, 1.0).unwrap();
        // omega0 * xi * (1 - e^-4) = 1/2
        let expected = 0.5 / (0.25 * (1.0 - (-4.0f64).exp()));
        assert!((k.omega0() - expected).abs() < 1e-12, "{} vs {expected}", k.omega0());
        assert!((expected - 2.0373).abs() < 1e-4);
        let quad = simpson(|r| k.omega(r), 0.0, 1.0, DEFAULT_PANELS);
        assert!((quad - 0.5).abs() < 1e-10);
    }

    #[test]
    fn peak_normalizes_and_vanishes_at_origin() {
        let k: KernelSpec<f64> = KernelSpec::normalized(KernelFamily::Peak { xi: 0.25 }, 1.0).unwrap();
        let quad = simpson(|r| k.omega(r), 0.0, 1.0, DEFAULT_PANELS);
        assert!((quad - 0.5).abs() < 1e-10);
        assert_eq!(k.omega(0.0), 0.0);
        assert!(k.origin_weight_zero());
        assert!(!k.edge_weight_nonzero() == (k.omega(1.0) < 1e-9));
    }

    #[test]
    fn zero_table_not_normalizable() {
        let fam = KernelFamily::Tabulated { samples: vec![(0.0, 0.0), (0.5, 0.0), (1.0, 0.0)] };
        match KernelSpec::<f64>::normalized(fam, 1.0) {
            Err(Error::NonNormalizable) => {}
            other => panic!("expected NonNormalizable, got {other:?}"),
        }
    }

    #[test]
    fn tabulated_matches_uniform() {
        let fam = KernelFamily::Tabulated { samples: vec![(0.0, 1.0), (1.0, 1.0)] };
        let k: KernelSpec<f64> = KernelSpec::normalized(fam, 1.0).unwrap();
        assert!((k.omega(0.7) - 0.5).abs() < 1e-14);
        assert!((k.integral(0.2, 0.6) - 0.2).abs() < 1e-14);
    }

    #[test]
    fn two_point_normalizes() {
        let fam = KernelFamily::TwoPoint { a1: 8.0 / 18.0, a2: 1.0 / 18.0, r1: 0.05, r2: 0.76, sigma: 0.02 };
        let k: KernelSpec<f64> = KernelSpec::normalized(fam, 1.0).unwrap();
        let quad = simpson(|r| k.omega(r), 0.0, 1.0, k.quad_panels());
        assert!((quad - 0.5).abs() < 1e-9, "integral {quad}");
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(KernelSpec::<f64>::normalized(KernelFamily::Exponential { xi: 0.0 }, 1.0).is_err());
        assert!(KernelSpec::<f64>::normalized(KernelFamily::Uniform, 0.0).is_err());
        let bad = KernelFamily::TwoPoint { a1: 0.5, a2: 0.1, r1: 0.9, r2: 0.3, sigma: 0.02 };
        assert!(KernelSpec::<f64>::normalized(bad, 1.0).is_err());
    }

    #[test]
    fn sine_moment_uniform_examples() {
        let k = uniform();
        // L = 2, even n: degenerate.
        for n in [2usize, 4, 6] {
            assert!(k.sine_moment(n, 2.0).abs() < 1e-14);
        }
        // L = 5, n = 1: closed form (5 / 2 pi) sin^2(pi / 5).
        let m1 = k.sine_moment(1, 5.0);
        let expected = 5.0 / (2.0 * std::f64::consts::PI) * (std::f64::consts::PI / 5.0).sin().powi(2);
        assert!((m1 - expected).abs() < 1e-14);
        assert!((m1 - 0.2749).abs() < 1e-4);
        // L = 2, n = 1: 1 / pi.
        assert!((k.sine_moment(1, 2.0) - 1.0 / std::f64::consts::PI).abs() < 1e-14);
    }

    #[test]
    fn uniform_closed_form_matches_quadrature() {
        let k = uniform();
        for n in 1..=50 {
            let closed = k.sine_moment(n, 7.3);
            let kq = 2.0 * std::f64::consts::PI * n as f64 / 7.3;
            let quad = simpson(|r| (kq * r).sin() * k.omega(r), 0.0, 1.0, DEFAULT_PANELS);
            assert!((closed - quad).abs() < 1e-8, "n = {n}: {closed} vs {quad}");
        }
    }

    #[test]
    fn delta_moment_uniform_identity_and_sign() {
        let k = uniform();
        for n in 1..=100 {
            for &length in &[2.3f64, 5.0, 9.7, 12.4] {
                let m = k.sine_moment(n, length);
                let d = k.delta_sine_moment(n, length);
                let s = (std::f64::consts::PI * n as f64 / length).sin();
                assert!((d - 2.0 * m * s * s).abs() < 1e-12);
                if m > DEGENERACY_THRESHOLD {
                    assert!(d > 0.0, "n = {n}, L = {length}");
                }
            }
        }
        let m1 = k.sine_moment(1, 5.0);
        let d1 = k.delta_sine_moment(1, 5.0);
        assert!((d1 - 0.190) < 1e-3 && (0.190 - d1) < 1e-3, "{d1}");
        assert!((d1 - 2.0 * m1 * (std::f64::consts::PI / 5.0).sin().powi(2)).abs() < 1e-14);
    }

    #[test]
    fn two_point_subcritical_moment_gap() {
        // Mixture tuned so the n = 2 mode on L = 3 keeps a positive moment
        // but a negative gap.
        let fam = KernelFamily::TwoPoint { a1: 8.0 / 18.0, a2: 1.0 / 18.0, r1: 0.05, r2: 0.76, sigma: 0.02 };
        let k: KernelSpec<f64> = KernelSpec::normalized(fam, 1.0).unwrap();
        let m2 = k.sine_moment(2, 3.0);
        let d2 = k.delta_sine_moment(2, 3.0);
        assert!(m2 > DEGENERACY_THRESHOLD, "M_2 = {m2}");
        assert!(d2 < 0.0, "delta M_2 = {d2}");
    }

    #[test]
    fn raw_moments() {
        let k = uniform();
        assert_eq!(k.raw_moment(2), 0.0);
        assert!((k.c1() - 0.25).abs() < 1e-14);
        assert!((k.raw_moment(1) - 0.5).abs() < 1e-14);
        let e = KernelSpec::normalized(KernelFamily::Exponential { xi: 0.25 }, 1.0).unwrap();
        assert_eq!(e.raw_moment(4), 0.0);
        assert!(e.raw_moment(1) > 0.0);
    }

    #[test]
    fn potential_examples() {
        let k = uniform();
        assert_eq!(k.potential(1.0), 0.0);
        assert_eq!(k.potential(3.0), 0.0);
        assert!((k.potential(0.0) - 0.5).abs() < 1e-14);
        assert!((k.potential(0.5) - 0.25).abs() < 1e-14);
        // Nonincreasing on a grid of radii, for a couple of families.
        for spec in [k, KernelSpec::normalized(KernelFamily::Peak { xi: 0.3 }, 1.0).unwrap()] {
            let mut prev = spec.potential(0.0);
            for i in 1..=100 {
                let v = spec.potential(i as f64 / 100.0);
                assert!(v <= prev + 1e-12);
                prev = v;
            }
        }
    }

    #[test]
    fn normalization_holds_for_random_parameters() {
        // Seeded parameter sweep standing in for a property test.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..40 {
            let xi = 0.05 + 0.6 * next();
            let fams: Vec<KernelFamily<f64>> = vec![
                KernelFamily::Uniform,
                KernelFamily::Exponential { xi },
                KernelFamily::Peak { xi },
                KernelFamily::TwoPoint {
                    a1: 0.1 + next(),
                    a2: 0.1 + next(),
                    r1: 0.05 + 0.3 * next(),
                    r2: 0.5 + 0.4 * next(),
                    sigma: 0.01 + 0.03 * next(),
                },
            ];
            for fam in fams {
                let k = match KernelSpec::normalized(fam, 1.0) {
                    Ok(k) => k,
                    Err(_) => continue,
                };
                let quad = simpson(|r| k.omega(r), 0.0, 1.0, k.quad_panels());
                assert!((quad - 0.5).abs() < 1e-10, "integral {quad}");
            }
        }
    }

    #[test]
    fn moment_bound_below_one_half() {
        let mut state = 0x2545f4914f6cdd1du64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let specs = vec![
            uniform(),
            KernelSpec::normalized(KernelFamily::Exponential { xi: 0.2 }, 1.0).unwrap(),
            KernelSpec::normalized(KernelFamily::Peak { xi: 0.35 }, 1.0).unwrap(),
        ];
        for spec in specs {
            for _ in 0..4 {
                let length = 2.0 + 18.0 * next();
                for n in 1..=200 {
                    let m = spec.sine_moment(n, length);
                    assert!(m.abs() < 0.5, "M_{n} = {m} at L = {length}");
                }
            }
        }
    }
}
