//! Dense 2×2 complex matrices.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::numerics::OdeState;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Row-major 2×2 complex matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn zero() -> Self {
        Mat2([[ZERO; 2]; 2])
    }

    pub fn identity() -> Self {
        Mat2::new(ONE, ZERO, ZERO, ONE)
    }

    pub fn diag(a: C64, d: C64) -> Self {
        Mat2::new(a, ZERO, ZERO, d)
    }

    pub fn real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2::new(a.into(), b.into(), c.into(), d.into())
    }

    /// Outer product `|u⟩⟨v|`.
    pub fn outer(u: [C64; 2], v: [C64; 2]) -> Self {
        Mat2([
            [u[0] * v[0].conj(), u[0] * v[1].conj()],
            [u[1] * v[0].conj(), u[1] * v[1].conj()],
        ])
    }

    /// Matrix whose columns are `u` and `v`.
    pub fn from_columns(u: [C64; 2], v: [C64; 2]) -> Self {
        Mat2::new(u[0], v[0], u[1], v[1])
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.0[r][c]
    }

    pub fn dagger(&self) -> Self {
        let m = &self.0;
        Mat2::new(
            m[0][0].conj(),
            m[1][0].conj(),
            m[0][1].conj(),
            m[1][1].conj(),
        )
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.map(|z| z * s)
    }

    fn map<F: Fn(C64) -> C64>(&self, f: F) -> Self {
        let m = &self.0;
        Mat2([[f(m[0][0]), f(m[0][1])], [f(m[1][0]), f(m[1][1])]])
    }

    fn zip<F: Fn(C64, C64) -> C64>(&self, o: &Self, f: F) -> Self {
        let (a, b) = (&self.0, &o.0);
        Mat2([
            [f(a[0][0], b[0][0]), f(a[0][1], b[0][1])],
            [f(a[1][0], b[1][0]), f(a[1][1], b[1][1])],
        ])
    }

    pub fn commutator(&self, o: &Self) -> Self {
        *self * *o - *o * *self
    }

    pub fn anticommutator(&self, o: &Self) -> Self {
        *self * *o + *o * *self
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// `max |A − A†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        (*self - self.dagger()).max_abs()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> (f64, f64) {
        let a = self.0[0][0].re;
        let d = self.0[1][1].re;
        let b = 0.5 * (self.0[0][1] + self.0[1][0].conj());
        let mean = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        (mean - r, mean + r)
    }

    /// Matrix–vector product.
    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        ]
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        self.zip(&o, |a, b| a + b)
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        self.zip(&o, |a, b| a - b)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

impl OdeState for Mat2 {
    fn add_scaled(&self, a: f64, k: &Self) -> Self {
        self.zip(k, |x, y| x + y * a)
    }
    fn is_finite(&self) -> bool {
        self.0
            .iter()
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
    fn max_norm(&self) -> f64 {
        self.max_abs()
    }
}

/// Inner product `⟨u|v⟩`.
pub fn inner(u: [C64; 2], v: [C64; 2]) -> C64 {
    u[0].conj() * v[0] + u[1].conj() * v[1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_dagger() {
        let a = Mat2::new(ONE, I, ZERO, C64::new(2.0, -1.0));
        let b = Mat2::real(1.0, 2.0, 3.0, 4.0);
        assert_eq!((a * b).dagger(), b.dagger() * a.dagger());
        assert_eq!(a * Mat2::identity(), a);
        assert_eq!(b.det(), C64::new(-2.0, 0.0));
    }

    #[test]
    fn hermitian_eigenvalues_pauli_y() {
        let y = Mat2::new(ZERO, -I, I, ZERO);
        let (lo, hi) = y.hermitian_eigenvalues();
        assert!((lo + 1.0).abs() < 1e-15 && (hi - 1.0).abs() < 1e-15);
    }
}
