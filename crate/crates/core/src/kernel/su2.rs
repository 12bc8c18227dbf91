use num_complex::Complex;

use super::{Axis, RotationState};
use crate::scalar::Real;
use crate::vec3::{cross, dot, norm, Mat3, Vec3};

/// Element of SU(2) written as `w - i q.sigma` with `w^2 + |q|^2 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Su2<T> {
    pub w: T,
    pub q: Vec3<T>,
}

impl<T: Real> Su2<T> {
    pub fn identity() -> Self {
        Self { w: T::one(), q: [T::zero(); 3] }
    }

    pub fn from_rotation(r: &RotationState<T>) -> Self {
        let h = r.psi / T::lit(2.0);
        let (s, c) = h.sin_cos();
        let a = r.axis.as_array();
        Self { w: c, q: [s * a[0], s * a[1], s * a[2]] }
    }

    /// `exp(-i g.sigma)`.
    pub fn exp_pauli(g: &Vec3<T>) -> Self {
        let n = norm(g);
        let (s, c) = n.sin_cos();
        let k = if n > T::lit(1e-8) {
            s / n
        } else {
            T::one() - n * n / T::lit(6.0)
        };
        Self { w: c, q: [k * g[0], k * g[1], k * g[2]] }
    }

    /// Rotation angle in `[0, 2 pi]` and axis. The identity maps to the z axis.
    pub fn rotation(&self) -> RotationState<T> {
        let n = norm(&self.q);
        let psi = T::lit(2.0) * n.atan2(self.w);
        let axis = Axis::new(self.q).unwrap_or_else(|_| Axis::z_axis());
        RotationState { psi, axis }
    }

    /// Rotation angle `2 atan2(|q|, w)`.
    pub fn angle(&self) -> T {
        T::lit(2.0) * norm(&self.q).atan2(self.w)
    }

    /// Matrix product `self * rhs`.
    pub fn mul(&self, rhs: &Self) -> Self {
        let c = cross(&self.q, &rhs.q);
        Self {
            w: self.w * rhs.w - dot(&self.q, &rhs.q),
            q: [
                self.w * rhs.q[0] + rhs.w * self.q[0] + c[0],
                self.w * rhs.q[1] + rhs.w * self.q[1] + c[1],
                self.w * rhs.q[2] + rhs.w * self.q[2] + c[2],
            ],
        }
    }

    pub fn adjoint(&self) -> Self {
        Self { w: self.w, q: [-self.q[0], -self.q[1], -self.q[2]] }
    }

    pub fn norm(&self) -> T {
        (self.w * self.w + dot(&self.q, &self.q)).sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self { w: self.w / n, q: [self.q[0] / n, self.q[1] / n, self.q[2] / n] }
    }

    /// Toggling-frame matrix: `self^dag (eta.sigma) self = (D eta).sigma`.
    pub fn toggling_matrix(&self) -> Mat3<T> {
        let (w, [x, y, z]) = (self.w, self.q);
        let two = T::lit(2.0);
        let d = two * w * w - T::one();
        [
            [d + two * x * x, two * (x * y + w * z), two * (x * z - w * y)],
            [two * (y * x - w * z), d + two * y * y, two * (y * z + w * x)],
            [two * (z * x + w * y), two * (z * y - w * x), d + two * z * z],
        ]
    }

    /// Explicit 2x2 complex matrix.
    pub fn to_matrix(&self) -> [[Complex<T>; 2]; 2] {
        let (w, [x, y, z]) = (self.w, self.q);
        [
            [Complex::new(w, -z), Complex::new(-y, -x)],
            [Complex::new(y, -x), Complex::new(w, z)],
        ]
    }
}

/// Pauli-vector matrix `v.sigma`.
pub fn pauli<T: Real>(v: &Vec3<T>) -> [[Complex<T>; 2]; 2] {
    [
        [Complex::new(v[2], T::zero()), Complex::new(v[0], -v[1])],
        [Complex::new(v[0], v[1]), Complex::new(-v[2], T::zero())],
    ]
}

pub fn mat2_mul<T: Real>(a: &[[Complex<T>; 2]; 2], b: &[[Complex<T>; 2]; 2]) -> [[Complex<T>; 2]; 2] {
    let mut out = [[Complex::new(T::zero(), T::zero()); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn mat2_adjoint<T: Real>(a: &[[Complex<T>; 2]; 2]) -> [[Complex<T>; 2]; 2] {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::rotation_matrix;
    use crate::vec3::{mat_vec, max_abs_diff};

    #[test]
    fn conjugation_matches_rotation_matrix() {
        let r = RotationState::new(2.3, Axis::new([0.2, -0.7, 0.4]).unwrap());
        let p = Su2::from_rotation(&r);
        let eta = [0.3, 1.1, -0.6];
        let lhs = mat2_mul(&mat2_mul(&mat2_adjoint(&p.to_matrix()), &pauli(&eta)), &p.to_matrix());
        let rhs = pauli(&mat_vec(&r.matrix(), &eta));
        for i in 0..2 {
            for j in 0..2 {
                assert!((lhs[i][j] - rhs[i][j]).norm() < 1e-14);
            }
        }
        assert!(max_abs_diff(&p.toggling_matrix(), &rotation_matrix(&r.axis, r.psi)) < 1e-14);
    }

    #[test]
    fn product_matches_matrix_product() {
        let a = Su2::exp_pauli(&[0.3, -0.2, 0.9]);
        let b = Su2::exp_pauli(&[-1.1, 0.5, 0.1]);
        let m = mat2_mul(&a.to_matrix(), &b.to_matrix());
        let p = a.mul(&b).to_matrix();
        for i in 0..2 {
            for j in 0..2 {
                assert!((m[i][j] - p[i][j]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn rotation_round_trip() {
        let r = RotationState::<f64>::from_angles(1.7, -0.4, 2.0);
        let back = Su2::from_rotation(&r).rotation();
        assert!((back.psi - 1.7).abs() < 1e-14);
        let (phi, theta) = back.axis.angles();
        assert!((phi + 0.4).abs() < 1e-14 && (theta - 2.0).abs() < 1e-14);
    }
}
