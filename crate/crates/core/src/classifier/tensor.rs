use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Scalar type the model is generic over (`f32` for training, `f64` for
/// gradient checks).
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + AddAssign + SubAssign + MulAssign + Default + Debug + Send + Sync + 'static
{
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("representable literal")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Dense row-major tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor<F> {
    pub shape: Vec<usize>,
    pub data: Vec<F>,
}

impl<F: Real> Tensor<F> {
    pub fn zeros(shape: &[usize]) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![F::zero(); shape.iter().product()],
        }
    }

    pub fn filled(shape: &[usize], v: F) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![v; shape.iter().product()],
        }
    }

    pub fn uniform<R: Rng>(shape: &[usize], limit: f64, rng: &mut R) -> Self {
        let n = shape.iter().product();
        let data = (0..n).map(|_| F::lit(rng.gen_range(-limit..limit))).collect();
        Tensor {
            shape: shape.to_vec(),
            data,
        }
    }

    /// Glorot-uniform for a `[fan_out, fan_in]` weight.
    pub fn glorot<R: Rng>(fan_out: usize, fan_in: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        Tensor::uniform(&[fan_out, fan_in], limit, rng)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[F] {
        let w = self.shape[1];
        &self.data[i * w..(i + 1) * w]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [F] {
        let w = self.shape[1];
        &mut self.data[i * w..(i + 1) * w]
    }

    pub fn zero_(&mut self) {
        self.data.iter_mut().for_each(|v| *v = F::zero());
    }

    pub fn cast<G: Real>(&self) -> Tensor<G> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| G::lit(v.to_f64().unwrap_or(f64::NAN))).collect(),
        }
    }
}

// Eight independent accumulators let LLVM vectorize without reassociating.
#[inline]
pub(crate) fn dot<F: Real>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [F::zero(); 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut s = ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
    for (x, y) in ra.iter().zip(rb) {
        s += *x * *y;
    }
    s
}

/// `y += a * x`
#[inline]
pub(crate) fn axpy<F: Real>(y: &mut [F], a: F, x: &[F]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * *xi;
    }
}

/// `out += W x` for `W` of shape `[out.len(), x.len()]`.
#[inline]
pub(crate) fn matvec_acc<F: Real>(out: &mut [F], w: &[F], x: &[F]) {
    let cols = x.len();
    for (o, row) in out.iter_mut().zip(w.chunks_exact(cols)) {
        *o += dot(row, x);
    }
}

/// `out += W^T d` for `W` of shape `[d.len(), out.len()]`.
#[inline]
pub(crate) fn matvec_t_acc<F: Real>(out: &mut [F], w: &[F], d: &[F]) {
    let cols = out.len();
    for (di, row) in d.iter().zip(w.chunks_exact(cols)) {
        axpy(out, *di, row);
    }
}

/// `G += d x^T` for `G` of shape `[d.len(), x.len()]`.
#[inline]
pub(crate) fn outer_acc<F: Real>(g: &mut [F], d: &[F], x: &[F]) {
    let cols = x.len();
    for (di, row) in d.iter().zip(g.chunks_exact_mut(cols)) {
        axpy(row, *di, x);
    }
}

#[inline]
pub(crate) fn sigmoid<F: Real>(x: F) -> F {
    if x >= F::zero() {
        F::one() / (F::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (F::one() + e)
    }
}
