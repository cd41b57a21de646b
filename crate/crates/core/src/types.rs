use nalgebra::{Matrix3, Vector3};

pub use num_complex::Complex64;

/// Complex position / velocity in ℂ³.
pub type CVec3 = Vector3<Complex64>;
/// Complex 3×3 matrix.
pub type CMat3 = Matrix3<Complex64>;
/// Real 3-vector.
pub type RVec3 = Vector3<f64>;

pub(crate) fn re(v: &CVec3) -> RVec3 {
    v.map(|c| c.re)
}

/// Bilinear (non-Hermitian) dot product: Σ a_k b_k.
pub(crate) fn bdot(a: &CVec3, b: &CVec3) -> Complex64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
