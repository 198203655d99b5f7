//! Dense vector kernels on slices.
//!
//! Reductions use a fixed four-lane accumulation order, so results depend only
//! on the inputs and never on scheduling.

use crate::Scalar;

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [T::zero(); 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = T::zero();
    for i in 4 * chunks..a.len() {
        tail += a[i] * b[i];
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + tail
}

/// `y += alpha * x`
#[inline]
pub fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub fn scale<T: Scalar>(alpha: T, x: &mut [T]) {
    for v in x {
        *v *= alpha;
    }
}

/// `‖a - b‖`
pub fn distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for (&p, &q) in a.iter().zip(b) {
        let d = p - q;
        acc += d * d;
    }
    acc.sqrt()
}

/// `‖a + b‖`
pub fn distance_to_negated<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for (&p, &q) in a.iter().zip(b) {
        let d = p + q;
        acc += d * d;
    }
    acc.sqrt()
}

pub fn all_finite<T: Scalar>(a: &[T]) -> bool {
    a.iter().all(|v| v.is_finite())
}
