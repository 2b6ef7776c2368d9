//! Implicit regular domains, boundary extraction, clipping and the domain zoo.
//!
//! A domain is the closed sublevel set `{phi <= 0}` of a level function.
//! Zoo constructors return exact signed-distance functions where one exists
//! in closed form; combs use a smooth union of rounded boxes.

mod clip;
mod curve;
mod extract;
mod mesh;
mod zoo;

use std::fmt;
use std::sync::Arc;

use crate::error::{FluxError, Result};
use crate::scalar::Real;
use crate::vector::VecN;

pub use clip::clip_mesh;
pub use curve::{closed_polyline_mesh, make_m_cover, ImmersedCurve, ParametricCurve};
pub use extract::{mesh_boundary, mesh_boundary_with, MeshOptions};
pub use mesh::{Facet, SurfaceMesh};
pub use zoo::{
    annulus, ball, comb, comb_pair, default_comb_smoothing, halfspace, make_zoo, rounded_box, rounded_polygon, torus,
    ZooShape,
};

pub type LevelFn<T, const D: usize> = Arc<dyn Fn(&VecN<T, D>) -> T + Send + Sync>;

/// Axis-aligned box `[min, max]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundingBox<T, const D: usize> {
    pub min: VecN<T, D>,
    pub max: VecN<T, D>,
}

impl<T: Real, const D: usize> BoundingBox<T, D> {
    pub fn new(min: VecN<T, D>, max: VecN<T, D>) -> Self {
        Self { min, max }
    }

    /// Cube `center ± half_width` in every coordinate.
    pub fn centered(center: VecN<T, D>, half_width: T) -> Self {
        Self {
            min: center.map(|c| c - half_width),
            max: center.map(|c| c + half_width),
        }
    }

    pub fn extent(&self) -> VecN<T, D> {
        self.max - self.min
    }

    pub fn center(&self) -> VecN<T, D> {
        self.min.midpoint(&self.max)
    }

    pub fn is_empty(&self) -> bool {
        (0..D).any(|i| !(self.max[i] >= self.min[i]))
    }

    pub fn volume(&self) -> T {
        if self.is_empty() {
            return T::zero();
        }
        let e = self.extent();
        (0..D).fold(T::one(), |acc, i| acc * e[i])
    }

    pub fn contains(&self, x: &VecN<T, D>) -> bool {
        (0..D).all(|i| x[i] >= self.min[i] && x[i] <= self.max[i])
    }

    pub fn intersect(&self, other: &Self) -> Self {
        Self {
            min: self.min.zip_map(&other.min, |a, b| a.max(b)),
            max: self.max.zip_map(&other.max, |a, b| a.min(b)),
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        Self {
            min: self.min.zip_map(&other.min, |a, b| a.min(b)),
            max: self.max.zip_map(&other.max, |a, b| a.max(b)),
        }
    }

    pub fn expanded(&self, margin: T) -> Self {
        Self {
            min: self.min.map(|a| a - margin),
            max: self.max.map(|a| a + margin),
        }
    }

    pub fn translated(&self, shift: &VecN<T, D>) -> Self {
        Self {
            min: self.min + *shift,
            max: self.max + *shift,
        }
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self {
            min: self.min * factor,
            max: self.max * factor,
        }
    }

    /// Maps a point of the unit cube onto the box.
    pub fn lerp(&self, u: &VecN<T, D>) -> VecN<T, D> {
        VecN::from_fn(|i| self.min[i] + u[i] * (self.max[i] - self.min[i]))
    }

    pub fn diagonal(&self) -> T {
        self.extent().norm()
    }
}

/// Three-way classification of a point against a domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Membership {
    Inside,
    Boundary,
    Outside,
}

/// A regular domain `{phi <= 0}` given by a level function.
#[derive(Clone)]
pub struct ImplicitDomain<T, const D: usize> {
    level: LevelFn<T, D>,
    bounding_box: BoundingBox<T, D>,
    lipschitz_hint: T,
    band: T,
    exact_sdf: bool,
    label: String,
}

impl<T: Real, const D: usize> fmt::Debug for ImplicitDomain<T, D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ImplicitDomain")
            .field("label", &self.label)
            .field("dimension", &D)
            .field("bounding_box", &self.bounding_box)
            .field("lipschitz_hint", &self.lipschitz_hint)
            .field("exact_sdf", &self.exact_sdf)
            .finish()
    }
}

impl<T: Real, const D: usize> ImplicitDomain<T, D> {
    /// Wraps a level function. The bounding box must contain the part of
    /// `{phi <= 0}` that matters for meshing and integration.
    pub fn new(
        label: impl Into<String>,
        bounding_box: BoundingBox<T, D>,
        lipschitz_hint: T,
        level: impl Fn(&VecN<T, D>) -> T + Send + Sync + 'static,
    ) -> Self {
        Self {
            level: Arc::new(level),
            bounding_box,
            lipschitz_hint,
            band: T::lit(1e-9) * lipschitz_hint,
            exact_sdf: false,
            label: label.into(),
        }
    }

    /// Marks the level function as an exact signed distance.
    pub fn with_exact_sdf(mut self, exact: bool) -> Self {
        self.exact_sdf = exact;
        self
    }

    pub fn with_band(mut self, band: T) -> Self {
        self.band = band;
        self
    }

    pub fn with_bounding_box(mut self, bounding_box: BoundingBox<T, D>) -> Self {
        self.bounding_box = bounding_box;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    #[inline]
    pub fn phi(&self, x: &VecN<T, D>) -> T {
        (self.level)(x)
    }

    pub fn dimension(&self) -> usize {
        D
    }

    pub fn bounding_box(&self) -> &BoundingBox<T, D> {
        &self.bounding_box
    }

    pub fn lipschitz_hint(&self) -> T {
        self.lipschitz_hint
    }

    pub fn band(&self) -> T {
        self.band
    }

    pub fn is_exact_sdf(&self) -> bool {
        self.exact_sdf
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn level_fn(&self) -> LevelFn<T, D> {
        Arc::clone(&self.level)
    }

    pub fn membership(&self, x: &VecN<T, D>) -> Membership {
        let v = self.phi(x);
        if v < -self.band {
            Membership::Inside
        } else if v > self.band {
            Membership::Outside
        } else {
            Membership::Boundary
        }
    }

    /// Closed-set test: boundary points count as inside.
    #[inline]
    pub fn contains(&self, x: &VecN<T, D>) -> bool {
        self.phi(x) <= self.band
    }

    /// Central-difference gradient with step `eps^(1/3) (1 + |x|)`.
    pub fn gradient(&self, x: &VecN<T, D>) -> VecN<T, D> {
        let step = T::epsilon().cbrt() * (T::one() + x.norm());
        let two = T::lit(2.0);
        VecN::from_fn(|i| {
            let mut xp = *x;
            let mut xm = *x;
            xp[i] += step;
            xm[i] -= step;
            (self.phi(&xp) - self.phi(&xm)) / (two * step)
        })
    }

    /// Newton projection onto the zero level set.
    pub fn project_to_boundary(&self, x: &VecN<T, D>, iterations: usize) -> VecN<T, D> {
        let mut p = *x;
        for _ in 0..iterations {
            let v = self.phi(&p);
            if v.abs() <= self.band {
                break;
            }
            let g = self.gradient(&p);
            let g2 = g.norm_squared();
            if g2 <= T::epsilon() {
                break;
            }
            p -= g * (v / g2);
        }
        p
    }

    /// The offset domain `{phi <= eta}`.
    pub fn offset(&self, eta: T) -> Self {
        let level = Arc::clone(&self.level);
        // Exact for signed distances; zoo domains are 1-Lipschitz with unit gradient.
        let grow = eta.max(T::zero());
        Self {
            level: Arc::new(move |x| level(x) - eta),
            bounding_box: self.bounding_box.expanded(grow),
            lipschitz_hint: self.lipschitz_hint,
            band: self.band,
            exact_sdf: self.exact_sdf,
            label: format!("{}+offset({})", self.label, eta),
        }
    }

    /// The translate `D + shift`.
    pub fn translate(&self, shift: VecN<T, D>) -> Self {
        let level = Arc::clone(&self.level);
        Self {
            level: Arc::new(move |x| level(&(*x - shift))),
            bounding_box: self.bounding_box.translated(&shift),
            lipschitz_hint: self.lipschitz_hint,
            band: self.band,
            exact_sdf: self.exact_sdf,
            label: format!("{}+shift", self.label),
        }
    }

    /// The dilate `factor * D`; distances scale with the domain.
    pub fn scaled(&self, factor: T) -> Self {
        let level = Arc::clone(&self.level);
        let inv = T::one() / factor;
        Self {
            level: Arc::new(move |x| factor * level(&(*x * inv))),
            bounding_box: self.bounding_box.scaled(factor),
            lipschitz_hint: self.lipschitz_hint,
            band: self.band,
            exact_sdf: self.exact_sdf,
            label: format!("{}*{}", self.label, factor),
        }
    }

    /// Intersection `D ∩ other` as a max-combination.
    pub fn intersection(&self, other: &Self) -> Self {
        let a = Arc::clone(&self.level);
        let b = Arc::clone(&other.level);
        Self {
            level: Arc::new(move |x| a(x).max(b(x))),
            bounding_box: self.bounding_box.intersect(&other.bounding_box),
            lipschitz_hint: self.lipschitz_hint.max(other.lipschitz_hint),
            band: self.band.max(other.band),
            exact_sdf: false,
            label: format!("({})&({})", self.label, other.label),
        }
    }

    /// Checks that sign changes between neighbouring sample points are
    /// accompanied by a near-zero crossing found by bisection. Returns the
    /// number of sampled segments that violate the check.
    pub fn sign_consistency_violations(&self, points: &[VecN<T, D>]) -> usize {
        points
            .windows(2)
            .filter(|w| {
                let (a, b) = (w[0], w[1]);
                let (fa, fb) = (self.phi(&a), self.phi(&b));
                if (fa <= T::zero()) == (fb <= T::zero()) {
                    return false;
                }
                let (mut lo, mut hi) = (a, b);
                let mut flo = fa;
                for _ in 0..200 {
                    let mid = lo.midpoint(&hi);
                    let fm = self.phi(&mid);
                    if (fm <= T::zero()) == (flo <= T::zero()) {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                let residual = self.phi(&lo.midpoint(&hi)).abs();
                !(residual <= T::lit(1e-6) * self.lipschitz_hint.max(T::one()))
            })
            .count()
    }

    /// Largest deviation of `|grad phi|` from one over the given points.
    pub fn eikonal_defect(&self, points: &[VecN<T, D>]) -> T {
        points
            .iter()
            .map(|p| (self.gradient(p).norm() - T::one()).abs())
            .fold(T::zero(), T::max)
    }
}

/// Ensures a user-supplied dimension matches the compile-time one.
pub fn expect_dimension<const D: usize>(got: usize) -> Result<()> {
    if got == D {
        Ok(())
    } else {
        Err(FluxError::DimensionMismatch { expected: D, got })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_disk() -> ImplicitDomain<f64, 2> {
        ball(VecN::zero(), 1.0).unwrap()
    }

    #[test]
    fn membership_respects_band() {
        let d = unit_disk();
        assert_eq!(d.membership(&VecN::new2(0.0, 0.0)), Membership::Inside);
        assert_eq!(d.membership(&VecN::new2(1.0, 0.0)), Membership::Boundary);
        assert_eq!(d.membership(&VecN::new2(1.0 + 1e-6, 0.0)), Membership::Outside);
        assert!(d.contains(&VecN::new2(1.0, 0.0)));
    }

    #[test]
    fn offset_grows_and_shrinks_ball() {
        let d = unit_disk();
        let grown = d.offset(0.1);
        let shrunk = d.offset(-0.1);
        assert!(grown.phi(&VecN::new2(1.1, 0.0)).abs() < 1e-12);
        assert!(shrunk.phi(&VecN::new2(0.0, 0.9)).abs() < 1e-12);
        let same = d.offset(0.0);
        for p in [[0.3, 0.2], [1.0, 0.0], [2.0, -1.0]] {
            let x = VecN(p);
            assert_eq!(same.membership(&x), d.membership(&x));
        }
    }

    #[test]
    fn translate_and_scale() {
        let d = unit_disk().translate(VecN::new2(2.0, 0.0));
        assert!(d.contains(&VecN::new2(2.5, 0.0)));
        assert!(!d.contains(&VecN::new2(0.5, 0.0)));
        let s = unit_disk().scaled(2.0);
        assert!((s.phi(&VecN::new2(3.0, 0.0)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projection_lands_on_boundary() {
        let d = unit_disk();
        let p = d.project_to_boundary(&VecN::new2(0.5, 0.5), 20);
        assert!((p.norm() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn gradient_of_sdf_has_unit_length() {
        let d = unit_disk();
        let g = d.gradient(&VecN::new2(0.3, -0.7));
        assert!((g.norm() - 1.0).abs() < 1e-8);
    }
}
