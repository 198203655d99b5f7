use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar the solvers are generic over: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }

    /// `c += aᵀ b` for row-major `a`, `b` of shape `k × n` and `c` of shape `n × n`.
    fn gram_accumulate(k: usize, n: usize, a: &[Self], b: &[Self], c: &mut [Self]);
}

macro_rules! gram_impl {
    ($t:ty, $gemm:path) => {
        impl Scalar for $t {
            fn gram_accumulate(k: usize, n: usize, a: &[Self], b: &[Self], c: &mut [Self]) {
                assert!(a.len() >= k * n && b.len() >= k * n && c.len() >= n * n);
                let n_stride = n as isize;
                // SAFETY: the asserts above bound every index the kernel touches;
                // `aᵀ` is read through swapped strides.
                unsafe {
                    $gemm(
                        n, k, n, 1.0,
                        a.as_ptr(), 1, n_stride,
                        b.as_ptr(), n_stride, 1,
                        1.0,
                        c.as_mut_ptr(), n_stride, 1,
                    );
                }
            }
        }
    };
}

gram_impl!(f32, matrixmultiply::sgemm);
gram_impl!(f64, matrixmultiply::dgemm);

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(k: usize, n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut c = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                c[i * n + j] = (0..k).map(|l| a[l * n + i] * b[l * n + j]).sum();
            }
        }
        c
    }

    #[test]
    fn gram_matches_naive() {
        let (k, n) = (7, 5);
        let a: Vec<f64> = (0..k * n).map(|i| (i as f64 * 0.37).sin()).collect();
        let b: Vec<f64> = (0..k * n).map(|i| (i as f64 * 0.11).cos()).collect();
        let mut c = vec![1.0; n * n];
        f64::gram_accumulate(k, n, &a, &b, &mut c);
        for (got, want) in c.iter().zip(naive(k, n, &a, &b)) {
            assert!((got - (want + 1.0)).abs() < 1e-12);
        }
        let a32: Vec<f32> = a.iter().map(|&v| v as f32).collect();
        let b32: Vec<f32> = b.iter().map(|&v| v as f32).collect();
        let mut c32 = vec![0.0f32; n * n];
        f32::gram_accumulate(k, n, &a32, &b32, &mut c32);
        for (got, want) in c32.iter().zip(naive(k, n, &a, &b)) {
            assert!((*got as f64 - want).abs() < 1e-5);
        }
    }
}
