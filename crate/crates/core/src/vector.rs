//! Fixed-dimension points and vectors.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use crate::scalar::Real;

/// A point or vector in `D`-dimensional Euclidean space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VecN<T, const D: usize>(pub [T; D]);

impl<T: Real, const D: usize> VecN<T, D> {
    #[inline]
    pub fn zero() -> Self {
        Self([T::zero(); D])
    }

    /// Unit vector along axis `i`.
    pub fn axis(i: usize) -> Self {
        let mut v = Self::zero();
        v.0[i] = T::one();
        v
    }

    pub fn from_fn(f: impl FnMut(usize) -> T) -> Self {
        Self(std::array::from_fn(f))
    }

    /// Builds a vector from a slice; `None` unless the slice has exactly `D` entries.
    pub fn try_from_slice(xs: &[T]) -> Option<Self> {
        (xs.len() == D).then(|| Self::from_fn(|i| xs[i]))
    }

    pub fn from_f64_slice(xs: &[f64]) -> Option<Self> {
        (xs.len() == D).then(|| Self::from_fn(|i| T::lit(xs[i])))
    }

    #[inline]
    pub fn dot(&self, other: &Self) -> T {
        let mut s = T::zero();
        for i in 0..D {
            s += self.0[i] * other.0[i];
        }
        s
    }

    #[inline]
    pub fn norm_squared(&self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> T {
        self.norm_squared().sqrt()
    }

    /// Returns the unit vector in this direction, or `None` for a (near) zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        (n > T::zero() && n.is_finite()).then(|| *self * (T::one() / n))
    }

    #[inline]
    pub fn distance(&self, other: &Self) -> T {
        (*self - *other).norm()
    }

    pub fn map(&self, mut f: impl FnMut(T) -> T) -> Self {
        Self::from_fn(|i| f(self.0[i]))
    }

    pub fn zip_map(&self, other: &Self, mut f: impl FnMut(T, T) -> T) -> Self {
        Self::from_fn(|i| f(self.0[i], other.0[i]))
    }

    pub fn midpoint(&self, other: &Self) -> Self {
        (*self + *other) * T::lit(0.5)
    }

    pub fn max_abs(&self) -> T {
        self.0.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    pub fn to_f64(&self) -> [f64; D] {
        std::array::from_fn(|i| self.0[i].as_f64())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl<T: Real> VecN<T, 2> {
    pub fn new2(x: T, y: T) -> Self {
        Self([x, y])
    }

    /// Counter-clockwise rotation by a quarter turn.
    pub fn perp(&self) -> Self {
        Self([-self.0[1], self.0[0]])
    }

    /// z-component of the planar cross product.
    pub fn cross2(&self, other: &Self) -> T {
        self.0[0] * other.0[1] - self.0[1] * other.0[0]
    }
}

impl<T: Real> VecN<T, 3> {
    pub fn new3(x: T, y: T, z: T) -> Self {
        Self([x, y, z])
    }

    pub fn cross(&self, o: &Self) -> Self {
        let a = &self.0;
        let b = &o.0;
        Self([
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ])
    }
}

impl<T, const D: usize> Index<usize> for VecN<T, D> {
    type Output = T;
    #[inline]
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T, const D: usize> IndexMut<usize> for VecN<T, D> {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.0[i]
    }
}

impl<T: Real, const D: usize> Add for VecN<T, D> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        self.zip_map(&o, |a, b| a + b)
    }
}

impl<T: Real, const D: usize> Sub for VecN<T, D> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        self.zip_map(&o, |a, b| a - b)
    }
}

impl<T: Real, const D: usize> AddAssign for VecN<T, D> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real, const D: usize> SubAssign for VecN<T, D> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T: Real, const D: usize> Mul<T> for VecN<T, D> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        self.map(|a| a * s)
    }
}

impl<T: Real, const D: usize> Neg for VecN<T, D> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self.map(|a| -a)
    }
}

/// Component-wise compensated accumulator for vector sums.
#[derive(Clone, Copy, Debug)]
pub struct VecSum<T, const D: usize> {
    parts: [crate::scalar::CompensatedSum<T>; D],
}

impl<T: Real, const D: usize> Default for VecSum<T, D> {
    fn default() -> Self {
        Self {
            parts: [crate::scalar::CompensatedSum::new(); D],
        }
    }
}

impl<T: Real, const D: usize> VecSum<T, D> {
    pub fn add(&mut self, v: &VecN<T, D>) {
        for i in 0..D {
            self.parts[i].add(v.0[i]);
        }
    }

    pub fn value(&self) -> VecN<T, D> {
        VecN::from_fn(|i| self.parts[i].value())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_and_perp() {
        let x = VecN::<f64, 3>::axis(0);
        let y = VecN::<f64, 3>::axis(1);
        assert_eq!(x.cross(&y), VecN::axis(2));
        let e1 = VecN::<f64, 2>::axis(0);
        assert_eq!(e1.perp(), VecN::axis(1));
    }

    #[test]
    fn normalized_rejects_zero() {
        assert!(VecN::<f64, 2>::zero().normalized().is_none());
        let v = VecN::new2(3.0, 4.0).normalized().unwrap();
        assert!((v.norm() - 1.0f64).abs() < 1e-15);
    }

    #[test]
    fn slice_construction_checks_length() {
        assert!(VecN::<f64, 2>::try_from_slice(&[1.0, 2.0, 3.0]).is_none());
        assert_eq!(
            VecN::<f64, 3>::from_f64_slice(&[1.0, 2.0, 3.0]).unwrap(),
            VecN::new3(1.0, 2.0, 3.0)
        );
    }
}
