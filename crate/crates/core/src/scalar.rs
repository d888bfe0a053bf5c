//! Scalar abstraction shared by every numeric module.
//!
//! Code is written against [`Real`] so the same simulation, network, and
//! detector implementations run in `f64` (default) or `f32` (training hot
//! path). Random draws always consume the underlying stream as `f64` and
//! convert afterwards, so a given seed produces the same frame content in
//! both precisions up to rounding.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};
use rand::Rng;
use rand_distr::StandardNormal;

/// Floating-point scalar usable throughout the crate.
pub trait Real:
    Float + FromPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` constant into the working precision.
///
/// Panics only if `x` cannot be represented at all (never the case for
/// finite values in `f32`/`f64`).
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("finite f64 constant must convert")
}

/// Draws a standard normal deviate, consuming the stream in `f64`.
#[inline]
pub fn draw_standard_normal<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    real(rng.sample::<f64, _>(StandardNormal))
}

/// Draws uniformly from `[lo, hi)`, consuming the stream in `f64`.
#[inline]
pub fn draw_uniform<T: Real, R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> T {
    debug_assert!(lo <= hi, "uniform bounds out of order");
    real(rng.gen_range(lo..hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn same_seed_gives_same_draws_across_precisions() {
        let mut a = ChaCha8Rng::seed_from_u64(7);
        let mut b = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let x64: f64 = draw_standard_normal(&mut a);
            let x32: f32 = draw_standard_normal(&mut b);
            assert_eq!(x64 as f32, x32);
        }
    }

    #[test]
    fn uniform_draw_respects_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let x: f64 = draw_uniform(&mut rng, -2.0, 3.0);
            assert!((-2.0..3.0).contains(&x));
        }
    }
}
