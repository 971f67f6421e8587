//! Scalar abstraction. The numeric core is generic over the float type;
//! `f64` is the blessed instantiation.

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating-point scalar the library is generic over.
///
/// Validation tolerances are tiered per type so that `f32` instantiations
/// are checked at a resolution the type can actually meet. All stated
/// tolerances in this crate's documentation refer to the `f64` tier.
pub trait Scalar:
    Float
    + FromPrimitive
    + NumAssign
    + Default
    + core::fmt::Debug
    + core::fmt::Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant into the scalar type.
    ///
    /// Panics if the value is not representable; constants used by the
    /// crate are all representable in `f32` and `f64`.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("constant not representable in scalar type")
    }

    /// Machine-identity tolerance: weight sums, orthonormality, exact
    /// algebraic identities. `1e-12` on `f64`.
    fn tol_exact() -> Self;

    /// Accumulation tolerance: mean residuals, atom merging, row sums.
    /// `1e-10` on `f64`.
    fn tol_tight() -> Self;

    /// Membership slack for polytope and norm-bound checks. `1e-9` on `f64`.
    fn tol_member() -> Self;
}

impl Scalar for f64 {
    fn tol_exact() -> Self {
        1e-12
    }
    fn tol_tight() -> Self {
        1e-10
    }
    fn tol_member() -> Self {
        1e-9
    }
}

impl Scalar for f32 {
    fn tol_exact() -> Self {
        2e-5
    }
    fn tol_tight() -> Self {
        2e-4
    }
    fn tol_member() -> Self {
        1e-3
    }
}
