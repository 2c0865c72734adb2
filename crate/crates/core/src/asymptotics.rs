//! Small-adhesion asymptotic steady state of the wall-reflected (no-flux)
//! model: `u = ubar + alpha u1` with a five-piece first-order correction
//! that is flat in the interior and dips at the weakly repellent walls.
//!
//! Valid for unit sensing radius and the linear force law.

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::kernel::KernelSpec;
use crate::quad::simpson;
use crate::scalar::{cast, half, Scalar};

#[derive(Clone, Debug)]
pub struct AsymptoticProfile<T> {
    /// `ubar + alpha * u1` at cell centres.
    pub u: Field<T>,
    /// The first-order correction alone.
    pub u1: Field<T>,
    /// Interior plateau value of `u1`.
    pub plateau: T,
    /// Wall value `u1(0) = u1(L)`.
    pub wall_value: T,
    pub warnings: Vec<String>,
}

/// First-order steady-state expansion for the no-flux model at small
/// adhesion strength `alpha`.
pub fn noflux_expansion<T: Scalar>(
    spec: &KernelSpec<T>,
    length: T,
    ubar: T,
    alpha: T,
    grid: &Grid<T>,
    first_onset_alpha: Option<T>,
) -> Result<AsymptoticProfile<T>> {
    let radius_err = (spec.radius() - T::one()).abs().to_f64().unwrap_or(1.0);
    if radius_err > 1e-12 {
        return Err(Error::UnsupportedKernel(
            "expansion requires unit sensing radius".into(),
        ));
    }
    if !(length > cast(2.0)) {
        return Err(Error::InvalidParameter("need L > 2".into()));
    }
    let mut warnings = Vec::new();
    if let Some(a1) = first_onset_alpha {
        if alpha > cast::<T>(0.25) * a1 {
            warnings.push(format!(
                "alpha = {alpha} is not small against the first onset {a1}; \
                 the first-order expansion degrades"
            ));
        }
    }

    // c1 = int_0^1 r omega(r) dr; plateau and wall offsets follow from the
    // solvability condition.
    let c1 = spec.c1();
    let u2 = ubar * ubar;
    let plateau = u2 / length * c1;
    let wall_value = u2 * (T::one() - length) / length * c1;

    let potential = |r: T| spec.potential(r);
    // Outer integrals of the potential over each boundary piece; Simpson is
    // exact here for the uniform weight (polynomial integrand).
    let panels = 400usize;
    let q = |f: &dyn Fn(T) -> T, a: T, b: T| -> T {
        if b <= a {
            T::zero()
        } else {
            simpson(f, a, b, panels)
        }
    };

    let one = T::one();
    let u1_at = |x: T| -> T {
        if x <= half::<T>() {
            // u1(0) + ubar^2 int_0^x V(1 - 2s) ds
            wall_value + u2 * q(&|s| potential(one - cast::<T>(2.0) * s), T::zero(), x)
        } else if x <= one {
            // A - ubar^2 int_x^1 V(2s - 1) ds
            plateau - u2 * q(&|s| potential(cast::<T>(2.0) * s - one), x, one)
        } else if x <= length - one {
            plateau
        } else if x <= length - half::<T>() {
            plateau
                - u2 * q(
                    &|s| potential(cast::<T>(2.0) * (length - s) - one),
                    length - one,
                    x,
                )
        } else {
            wall_value
                + u2 * q(
                    &|s| potential(cast::<T>(2.0) * (s - length) + one),
                    x,
                    length,
                )
        }
    };

    let u1: Vec<T> = (0..grid.cell_count()).map(|i| u1_at(grid.x(i))).collect();
    let u: Vec<T> = u1.iter().map(|&v| ubar + alpha * v).collect();
    Ok(AsymptoticProfile { u, u1, plateau, wall_value, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::mean;
    use crate::kernel::KernelFamily;

    fn uniform() -> KernelSpec<f64> {
        KernelSpec::normalized(KernelFamily::Uniform, 1.0).unwrap()
    }

    fn profile(alpha: f64) -> (Grid<f64>, AsymptoticProfile<f64>) {
        let grid = Grid::new(5.0, 256).unwrap();
        let p = noflux_expansion(&uniform(), 5.0, 1.0, alpha, &grid, None).unwrap();
        (grid, p)
    }

    #[test]
    fn zero_alpha_is_constant() {
        let (_, p) = profile(0.0);
        assert!(p.u.iter().all(|&v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn uniform_closed_form_constants() {
        let (_, p) = profile(0.05);
        assert!((p.plateau - 0.05).abs() < 1e-12, "plateau {}", p.plateau);
        assert!((p.wall_value + 0.2).abs() < 1e-12, "wall {}", p.wall_value);
    }

    #[test]
    fn correction_properties() {
        let (grid, p) = profile(0.08);
        // Plateau on [1, L-1] exactly.
        for i in 0..grid.cell_count() {
            let x = grid.x(i);
            if x >= 1.0 && x <= 4.0 {
                assert_eq!(p.u1[i], p.plateau, "x = {x}");
            }
        }
        // Even about the midpoint.
        let m = grid.cell_count();
        for i in 0..m {
            assert!((p.u1[i] - p.u1[m - 1 - i]).abs() < 1e-12);
        }
        // Walls are depressed below every interior value.
        let wall = p.u1[0];
        for i in 1..m / 2 {
            assert!(p.u1[i] >= wall - 1e-12);
        }
        // Zero mean of the correction (mass per unit length preserved).
        assert!(mean(&p.u1).abs() < 1e-10, "mean {}", mean(&p.u1));
        assert!((mean(&p.u) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn warning_for_large_alpha() {
        let grid = Grid::new(5.0, 128).unwrap();
        let p = noflux_expansion(&uniform(), 5.0, 1.0, 1.0, &grid, Some(2.2853)).unwrap();
        assert_eq!(p.warnings.len(), 1);
    }

    #[test]
    fn non_unit_radius_rejected() {
        let spec = KernelSpec::normalized(KernelFamily::Uniform, 0.5).unwrap();
        let grid = Grid::new(5.0, 128).unwrap();
        assert!(matches!(
            noflux_expansion(&spec, 5.0, 1.0, 0.05, &grid, None),
            Err(Error::UnsupportedKernel(_))
        ));
    }
}
