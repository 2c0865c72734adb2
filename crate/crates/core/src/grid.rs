//! Cell-centered uniform 1-D mesh and field helpers.

use crate::error::{Error, Result};
use crate::scalar::{cast, half, Scalar};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Cell-averaged density values, one per grid cell.
pub type Field<T> = Vec<T>;

#[derive(Clone, Copy, Debug)]
pub struct Grid<T> {
    length: T,
    cells_per_unit: usize,
    cell_count: usize,
    dx: T,
}

impl<T: Scalar> Grid<T> {
    /// `length` is the domain size, `cells_per_unit` the resolution N; the
    /// total cell count `N * length` must be an integer.
    pub fn new(length: T, cells_per_unit: usize) -> Result<Self> {
        if !(length > T::zero()) || cells_per_unit == 0 {
            return Err(Error::InvalidParameter("grid needs L > 0 and N >= 1".into()));
        }
        let raw = (length * cast::<T>(cells_per_unit as f64)).to_f64().unwrap_or(f64::NAN);
        let cell_count = raw.round();
        if !cell_count.is_finite() || (raw - cell_count).abs() > 1e-9 * cell_count.max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "N * L = {raw} is not an integer cell count"
            )));
        }
        let cell_count = cell_count as usize;
        let dx = length / cast::<T>(cell_count as f64);
        Ok(Grid { length, cells_per_unit, cell_count, dx })
    }

    pub fn length(&self) -> T {
        self.length
    }

    pub fn cells_per_unit(&self) -> usize {
        self.cells_per_unit
    }

    pub fn cell_count(&self) -> usize {
        self.cell_count
    }

    pub fn dx(&self) -> T {
        self.dx
    }

    /// Centre of cell `i`.
    pub fn x(&self, i: usize) -> T {
        (cast::<T>(i as f64) + half::<T>()) * self.dx
    }

    pub fn centers(&self) -> Vec<T> {
        (0..self.cell_count).map(|i| self.x(i)).collect()
    }

    pub fn check_field(&self, u: &[T]) -> Result<()> {
        if u.len() != self.cell_count {
            return Err(Error::GridMismatch { expected: self.cell_count, found: u.len() });
        }
        Ok(())
    }
}

pub fn mean<T: Scalar>(u: &[T]) -> T {
    u.iter().copied().sum::<T>() / cast::<T>(u.len() as f64)
}

pub fn linf<T: Scalar>(u: &[T]) -> T {
    u.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
}

pub fn linf_diff<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |m, (&x, &y)| m.max((x - y).abs()))
}

/// Discrete L2 norm `sqrt(dx * sum u_i^2)`.
pub fn l2<T: Scalar>(u: &[T], dx: T) -> T {
    (u.iter().map(|&v| v * v).sum::<T>() * dx).sqrt()
}

/// Initial condition kinds accepted by the simulator.
#[derive(Clone, Debug)]
pub enum InitialCondition<T> {
    /// Constant plus seeded per-cell uniform noise on `[-amp, amp]`,
    /// mean-corrected so the average stays at the constant.
    ConstantNoise { ubar: T, amp: T, seed: u64 },
    /// Constant plus a cosine of the given mode.
    ConstantCos { ubar: T, amp: T, mode: usize },
}

impl<T: Scalar> InitialCondition<T> {
    pub fn build(&self, grid: &Grid<T>) -> Field<T> {
        match *self {
            InitialCondition::ConstantNoise { ubar, amp, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut noise: Vec<T> = (0..grid.cell_count())
                    .map(|_| cast::<T>(rng.gen_range(-1.0..=1.0)) * amp)
                    .collect();
                let m = mean(&noise);
                for v in &mut noise {
                    *v = *v - m + ubar;
                }
                noise
            }
            InitialCondition::ConstantCos { ubar, amp, mode } => {
                let k = crate::scalar::tau::<T>() * cast::<T>(mode as f64) / grid.length();
                (0..grid.cell_count()).map(|i| ubar + amp * (k * grid.x(i)).cos()).collect()
            }
        }
    }
}
