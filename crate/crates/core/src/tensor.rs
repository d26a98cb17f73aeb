//! Dense rank-4 tensors in (batch, channels, height, width) layout.
//!
//! Data is row-major: index (b, c, h, w) lives at
//! `((b * C + c) * H + h) * W + w`. Tensors are plain value types; gradient
//! bookkeeping lives on the [`crate::tape::Tape`], not here.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Extents in (batch, channels, height, width) order.
pub type Shape4 = [usize; 4];

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T: Scalar> {
    shape: Shape4,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(shape: Shape4) -> Self {
        Tensor {
            shape,
            data: vec![T::zero(); shape.iter().product()],
        }
    }

    pub fn full(shape: Shape4, value: T) -> Self {
        Tensor {
            shape,
            data: vec![value; shape.iter().product()],
        }
    }

    pub fn ones(shape: Shape4) -> Self {
        Self::full(shape, T::one())
    }

    /// A 1x1x1x1 tensor holding one value.
    pub fn scalar(value: T) -> Self {
        Tensor {
            shape: [1, 1, 1, 1],
            data: vec![value],
        }
    }

    pub fn from_vec(shape: Shape4, data: Vec<T>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(Error::ShapeMismatch {
                op: "from_vec",
                detail: format!(
                    "shape {shape:?} needs {expected} values, got {}",
                    data.len()
                ),
            });
        }
        Ok(Tensor { shape, data })
    }

    /// Uniform values in [-bound, bound). Draws f64 from the stream and casts,
    /// so f32 and f64 tensors built from the same stream see the same numbers.
    pub fn rand_uniform(shape: Shape4, bound: f64, rng: &mut ChaCha8Rng) -> Self {
        let n: usize = shape.iter().product();
        let data = (0..n)
            .map(|_| T::from_f64((rng.random::<f64>() * 2.0 - 1.0) * bound))
            .collect();
        Tensor { shape, data }
    }

    #[inline]
    pub fn shape(&self) -> Shape4 {
        self.shape
    }

    #[inline]
    pub fn numel(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn at(&self, b: usize, c: usize, h: usize, w: usize) -> T {
        let [_, ch, hh, ww] = self.shape;
        self.data[((b * ch + c) * hh + h) * ww + w]
    }

    #[inline]
    pub fn at_mut(&mut self, b: usize, c: usize, h: usize, w: usize) -> &mut T {
        let [_, ch, hh, ww] = self.shape;
        &mut self.data[((b * ch + c) * hh + h) * ww + w]
    }

    /// The single value of a 1-element tensor.
    pub fn item(&self) -> Result<T> {
        if self.numel() != 1 {
            return Err(Error::NonScalarLoss { shape: self.shape });
        }
        Ok(self.data[0])
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Tensor<T> {
        Tensor {
            shape: self.shape,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Cast element type (f64 <-> f32).
    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape,
            data: self.data.iter().map(|&v| U::from_f64(v.to_f64())).collect(),
        }
    }

    /// Maximum absolute elementwise difference; shapes must match.
    pub fn max_abs_diff(&self, other: &Tensor<T>) -> Result<f64> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                op: "max_abs_diff",
                detail: format!("{:?} vs {:?}", self.shape, other.shape),
            });
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a.to_f64() - b.to_f64()).abs())
            .fold(0.0, f64::max))
    }
}

/// Relative elementwise agreement used by the brute-force equivalence checks:
/// max over elements of |a - b| / max(|a|, |b|, 1).
pub fn max_rel_diff<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            op: "max_rel_diff",
            detail: format!("{:?} vs {:?}", a.shape(), b.shape()),
        });
    }
    Ok(a.data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let (x, y) = (x.to_f64(), y.to_f64());
            (x - y).abs() / x.abs().max(y.abs()).max(1.0)
        })
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn from_vec_rejects_bad_length() {
        let r = Tensor::<f64>::from_vec([1, 1, 2, 2], vec![1.0, 2.0, 3.0]);
        assert!(r.is_err());
    }

    #[test]
    fn indexing_is_row_major() {
        let t = Tensor::<f64>::from_vec([1, 2, 2, 2], (0..8).map(|i| i as f64).collect()).unwrap();
        assert_eq!(t.at(0, 0, 0, 0), 0.0);
        assert_eq!(t.at(0, 0, 1, 1), 3.0);
        assert_eq!(t.at(0, 1, 0, 1), 5.0);
        assert_eq!(t.at(0, 1, 1, 1), 7.0);
    }

    #[test]
    fn rand_uniform_same_stream_same_values_across_dtypes() {
        let mut r1 = ChaCha8Rng::seed_from_u64(5);
        let mut r2 = ChaCha8Rng::seed_from_u64(5);
        let a: Tensor<f64> = Tensor::rand_uniform([1, 1, 4, 4], 0.5, &mut r1);
        let b: Tensor<f32> = Tensor::rand_uniform([1, 1, 4, 4], 0.5, &mut r2);
        for (x, y) in a.data().iter().zip(b.data()) {
            assert_eq!(*y, *x as f32);
            assert!(x.abs() <= 0.5);
        }
    }
}
