//! Rotation algebra: axes, finite rotations and the toggling-frame noise.

mod magnus;
mod su2;

pub use magnus::{magnus_term, MagnusOrder};
pub use su2::{mat2_adjoint, mat2_mul, pauli, Su2};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::vec3::{cross, dot, norm, Mat3, Vec3};

/// Classical noise field `(eta_x, eta_y, eta_z)` in units of `1/tau_p`.
pub type NoiseVector<T> = Vec3<T>;

/// Unit vector on the sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis<T> {
    v: Vec3<T>,
}

impl<T: Real> Axis<T> {
    /// Normalizes `v`. Fails on a zero vector.
    pub fn new(v: Vec3<T>) -> Result<Self> {
        let n = norm(&v);
        if !(n > T::zero()) || !n.is_finite() {
            return Err(Error::DegenerateAxis);
        }
        Ok(Self { v: [v[0] / n, v[1] / n, v[2] / n] })
    }

    /// Azimuth `phi` and polar angle `theta`.
    pub fn from_angles(phi: T, theta: T) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self { v: [st * cp, st * sp, ct] }
    }

    pub fn x_axis() -> Self {
        Self { v: [T::one(), T::zero(), T::zero()] }
    }

    pub fn y_axis() -> Self {
        Self { v: [T::zero(), T::one(), T::zero()] }
    }

    pub fn z_axis() -> Self {
        Self { v: [T::zero(), T::zero(), T::one()] }
    }

    /// `(phi, theta)` with `phi` in `(-pi, pi]` and `theta` in `[0, pi]`.
    pub fn angles(&self) -> (T, T) {
        let phi = self.v[1].atan2(self.v[0]);
        let theta = self.v[2].max(-T::one()).min(T::one()).acos();
        (phi, theta)
    }

    #[inline]
    pub fn as_array(&self) -> &Vec3<T> {
        &self.v
    }
}

/// A finite rotation by `psi` about `axis`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationState<T> {
    pub psi: T,
    pub axis: Axis<T>,
}

impl<T: Real> RotationState<T> {
    pub fn new(psi: T, axis: Axis<T>) -> Self {
        Self { psi, axis }
    }

    pub fn from_angles(psi: T, phi: T, theta: T) -> Self {
        Self { psi, axis: Axis::from_angles(phi, theta) }
    }

    /// `(psi, phi, theta)`.
    pub fn angles(&self) -> (T, T, T) {
        let (phi, theta) = self.axis.angles();
        (self.psi, phi, theta)
    }

    pub fn matrix(&self) -> Mat3<T> {
        rotation_matrix(&self.axis, self.psi)
    }
}

/// Toggling-frame matrix `D` with `P^dag (eta . sigma) P = (D eta) . sigma`,
/// where `P = exp(-i psi a.sigma / 2)`.
pub fn rotation_matrix<T: Real>(axis: &Axis<T>, psi: T) -> Mat3<T> {
    let [x, y, z] = axis.v;
    let (s, c) = psi.sin_cos();
    let k = T::one() - c;
    [
        [c + k * x * x, s * z + k * x * y, -s * y + k * x * z],
        [-s * z + k * x * y, c + k * y * y, s * x + k * y * z],
        [s * y + k * x * z, -s * x + k * y * z, c + k * z * z],
    ]
}

/// Noise vector seen in the toggling frame of the rotation `(axis, psi)`.
pub fn rotated_noise<T: Real>(axis: &Axis<T>, psi: T, eta: &NoiseVector<T>) -> NoiseVector<T> {
    let a = &axis.v;
    let (s, c) = psi.sin_cos();
    let along = (T::one() - c) * dot(eta, a);
    let ax = cross(a, eta);
    [
        c * eta[0] - s * ax[0] + along * a[0],
        c * eta[1] - s * ax[1] + along * a[1],
        c * eta[2] - s * ax[2] + along * a[2],
    ]
}
