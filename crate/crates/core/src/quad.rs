//! Composite Simpson quadrature used wherever no antiderivative is available.

use crate::scalar::{cast, Scalar};

/// Panel count used for kernel normalization and moment integrals.
pub const DEFAULT_PANELS: usize = 10_000;

/// Composite Simpson rule on `[a, b]` with `panels` sub-intervals.
///
/// Exact for cubics on each panel; `panels` is forced even via pairing of
/// half-steps, so any positive count is accepted.
pub fn simpson<T: Scalar>(mut f: impl FnMut(T) -> T, a: T, b: T, panels: usize) -> T {
    if a == b {
        return T::zero();
    }
    let n = panels.max(1);
    let h = (b - a) / cast::<T>(n as f64);
    let half_h = h * cast::<T>(0.5);
    let mut acc = T::zero();
    for i in 0..n {
        let x0 = a + h * cast::<T>(i as f64);
        let x1 = x0 + h;
        let xm = x0 + half_h;
        acc += (f(x0) + cast::<T>(4.0) * f(xm) + f(x1)) * h / cast::<T>(6.0);
    }
    acc
}
