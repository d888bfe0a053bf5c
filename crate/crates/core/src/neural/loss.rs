//! Class-balanced binary cross-entropy over the marginal outputs.
//!
//! Occupied bins are rare, so each class is weighted by the inverse
//! "effective number" of its label count: `w = (1 - beta) / (1 - beta^n)`.
//! As beta approaches 1 this tends to `1/n`, i.e. plain inverse-frequency
//! weighting; at beta = 0 both weights are 1.

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::scalar::{real, Real};

/// Probability clamp applied inside the logs.
pub const PROB_EPS: f64 = 1e-7;

/// Per-class loss weights: `w0` for empty bins, `w1` for occupied bins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassWeights<T: Real> {
    pub w0: T,
    pub w1: T,
}

impl<T: Real> ClassWeights<T> {
    pub fn uniform() -> Self {
        ClassWeights {
            w0: T::one(),
            w1: T::one(),
        }
    }
}

/// Effective-number class weights from the label counts of a stream.
pub fn class_weights<T: Real>(beta: f64, n0: u64, n1: u64) -> Result<ClassWeights<T>> {
    if !(0.0 < beta && beta < 1.0) {
        return Err(Error::invalid("class-balance beta must lie in (0, 1)"));
    }
    if n0 == 0 || n1 == 0 {
        return Err(Error::invalid("class weights need at least one label per class"));
    }
    let weight = |n: u64| -> T { real((1.0 - beta) / (1.0 - beta.powf(n as f64))) };
    Ok(ClassWeights {
        w0: weight(n0),
        w1: weight(n1),
    })
}

#[inline]
fn clamped_log<T: Real>(p: T) -> T {
    let lo = real::<T>(PROB_EPS);
    let hi = T::one() - lo;
    p.max(lo).min(hi).ln()
}

/// Weighted mean binary cross-entropy of one output vector.
pub fn class_balanced_loss<T: Real>(
    y: &Array1<T>,
    y_true: &Array1<u8>,
    weights: ClassWeights<T>,
) -> T {
    debug_assert_eq!(y.len(), y_true.len());
    let mut acc = T::zero();
    for (&p, &t) in y.iter().zip(y_true.iter()) {
        acc += if t == 1 {
            -weights.w1 * clamped_log(p)
        } else {
            -weights.w0 * clamped_log(T::one() - p)
        };
    }
    acc / real::<T>(y.len() as f64)
}

/// Gradient of [`class_balanced_loss`] with respect to the logits,
/// assuming `y = sigmoid(logits)`. Outputs pinned by the probability
/// clamp contribute zero gradient.
pub fn loss_gradient_logits<T: Real>(
    y: &Array1<T>,
    y_true: &Array1<u8>,
    weights: ClassWeights<T>,
) -> Array1<T> {
    let lo = real::<T>(PROB_EPS);
    let hi = T::one() - lo;
    let inv_d = real::<T>(y.len() as f64).recip();
    let mut grad = Array1::zeros(y.len());
    for (g, (&p, &t)) in grad.iter_mut().zip(y.iter().zip(y_true.iter())) {
        if p <= lo || p >= hi {
            continue;
        }
        *g = if t == 1 {
            -weights.w1 * (T::one() - p) * inv_d
        } else {
            weights.w0 * p * inv_d
        };
    }
    grad
}

/// Raw unweighted cross-entropy sums split by class:
/// `((occupied sum, occupied bins), (empty sum, empty bins))`. Useful for
/// aggregating across many output vectors before averaging.
pub fn bce_sums<T: Real>(y: &Array1<T>, y_true: &Array1<u8>) -> ((T, usize), (T, usize)) {
    let mut occupied = (T::zero(), 0usize);
    let mut empty = (T::zero(), 0usize);
    for (&p, &t) in y.iter().zip(y_true.iter()) {
        if t == 1 {
            occupied.0 += -clamped_log(p);
            occupied.1 += 1;
        } else {
            empty.0 += -clamped_log(T::one() - p);
            empty.1 += 1;
        }
    }
    (occupied, empty)
}

/// Unweighted mean cross-entropy split by class:
/// `(occupied-bin BCE, empty-bin BCE)`. A class absent from `y_true`
/// yields `None` on its side.
pub fn per_class_bce<T: Real>(y: &Array1<T>, y_true: &Array1<u8>) -> (Option<T>, Option<T>) {
    let (occupied, empty) = bce_sums(y, y_true);
    let finish = |acc: (T, usize)| {
        if acc.1 == 0 {
            None
        } else {
            Some(acc.0 / real::<T>(acc.1 as f64))
        }
    };
    (finish(occupied), finish(empty))
}
