//! Scalar abstraction shared by every numerical module.

use std::fmt;

use nalgebra::RealField;
use num_traits::{FloatConst, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, Open01, StandardNormal};

/// Floating point scalar the samplers and filters are written against: `f32` or `f64`.
///
/// Elementary functions (`sqrt`, `ln`, `exp`, ...) come from nalgebra's `ComplexField`
/// and `RealField`; conversions come from num-traits. The random primitives live here
/// so generic code never has to spell out `Distribution<T>` bounds.
pub trait Real:
    RealField + Copy + ToPrimitive + FloatConst + fmt::Display + Send + Sync + 'static
{
    /// Smallest value a variance-like quantity is floored to before inversion.
    const TINY: f64;

    /// Converts an `f64` literal.
    fn lit(x: f64) -> Self;

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Uniform on the open interval (0, 1).
    fn std_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self;

    fn std_exp<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Gamma variate with unit rate. `shape` must be positive and finite.
    fn std_gamma<R: Rng + ?Sized>(shape: Self, rng: &mut R) -> Self;
}

macro_rules! impl_real {
    ($t:ty, $tiny:expr) => {
        impl Real for $t {
            const TINY: f64 = $tiny;

            #[inline]
            fn lit(x: f64) -> Self {
                x as $t
            }

            #[inline]
            fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                StandardNormal.sample(rng)
            }

            #[inline]
            fn std_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
                Open01.sample(rng)
            }

            #[inline]
            fn std_exp<R: Rng + ?Sized>(rng: &mut R) -> Self {
                Exp1.sample(rng)
            }

            #[inline]
            fn std_gamma<R: Rng + ?Sized>(shape: Self, rng: &mut R) -> Self {
                Gamma::new(shape, 1.0)
                    .expect("gamma shape validated by caller")
                    .sample(rng)
            }
        }
    };
}

impl_real!(f64, 1e-200);
impl_real!(f32, 1e-30);
