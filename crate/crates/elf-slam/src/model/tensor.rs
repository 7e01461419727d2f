//! Minimal dense tensor for model parameters and gradients.

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    pub shape: Vec<usize>,
    pub data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(shape: &[usize]) -> Self {
        let numel = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![T::zero(); numel],
        }
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| U::of(v.as_f64())).collect(),
        }
    }
}

/// Adds `rhs` scaled by `alpha` into `lhs`, tensor by tensor.
pub fn axpy_all<T: Scalar>(lhs: &mut [Tensor<T>], rhs: &[Tensor<T>], alpha: T) {
    debug_assert_eq!(lhs.len(), rhs.len());
    for (l, r) in lhs.iter_mut().zip(rhs) {
        debug_assert_eq!(l.shape, r.shape);
        for (a, &b) in l.data.iter_mut().zip(&r.data) {
            *a += alpha * b;
        }
    }
}
