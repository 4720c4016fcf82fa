//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating point type the solver is generic over (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Panics only if the target cannot represent it.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal not representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count not representable")
    }

    /// Absolute accuracy the Ewald sums aim for by default.
    fn default_kernel_tol() -> Self;

    /// Off-node boundary residual accepted by the Dirichlet solver.
    fn default_residual_tol() -> Self;

    /// Euler–Mascheroni constant.
    #[inline]
    fn euler_gamma() -> Self {
        Self::lit(0.577_215_664_901_532_9)
    }
}

impl Real for f64 {
    fn default_kernel_tol() -> Self {
        1e-12
    }
    fn default_residual_tol() -> Self {
        1e-8
    }
}

impl Real for f32 {
    fn default_kernel_tol() -> Self {
        2e-6
    }
    fn default_residual_tol() -> Self {
        2e-4
    }
}
