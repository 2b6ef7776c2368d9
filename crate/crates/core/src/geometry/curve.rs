//! Closed planar curves: smooth Jordan curves and their multiply traversed,
//! perturbed immersions.

use std::fmt;
use std::sync::Arc;

use crate::error::{FluxError, Result};
use crate::scalar::{CompensatedSum, Real};
use crate::vector::VecN;

use super::mesh::{Facet, SurfaceMesh};

type PathFn<T> = Arc<dyn Fn(T) -> VecN<T, 2> + Send + Sync>;

/// Five-point Gauss–Legendre rule on [-1, 1].
const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_08),
    (0.906_179_845_938_664, 0.236_926_885_056_189_08),
];

fn arc_length<T: Real>(speed: impl Fn(T) -> T, t0: T, t1: T, panels: usize) -> T {
    let panels = panels.max(1);
    let w = (t1 - t0) / T::from_count(panels);
    let half = w * T::lit(0.5);
    let mut acc = CompensatedSum::new();
    for p in 0..panels {
        let mid = t0 + w * (T::from_count(p) + T::lit(0.5));
        for (x, wt) in GL5 {
            acc.add(T::lit(wt) * half * speed(mid + half * T::lit(x)));
        }
    }
    acc.value()
}

/// A closed counter-clockwise curve `t -> x(t)` on `[0, period]`.
#[derive(Clone)]
pub struct ParametricCurve<T> {
    point: PathFn<T>,
    velocity: PathFn<T>,
    period: T,
    label: String,
}

impl<T: fmt::Debug> fmt::Debug for ParametricCurve<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParametricCurve")
            .field("label", &self.label)
            .field("period", &self.period)
            .finish()
    }
}

impl<T: Real> ParametricCurve<T> {
    pub fn new(
        label: impl Into<String>,
        period: T,
        point: impl Fn(T) -> VecN<T, 2> + Send + Sync + 'static,
        velocity: impl Fn(T) -> VecN<T, 2> + Send + Sync + 'static,
    ) -> Self {
        Self {
            point: Arc::new(point),
            velocity: Arc::new(velocity),
            period,
            label: label.into(),
        }
    }

    pub fn circle(center: VecN<T, 2>, radius: T) -> Result<Self> {
        Self::ellipse(center, radius, radius).map(|c| c.with_label(format!("circle(r={radius})")))
    }

    /// Axis-aligned ellipse with semi-axes `a` (along x) and `b` (along y).
    pub fn ellipse(center: VecN<T, 2>, a: T, b: T) -> Result<Self> {
        if !(a > T::zero() && b > T::zero()) {
            return Err(FluxError::BadParams(format!(
                "ellipse semi-axes must be positive, got ({a}, {b})"
            )));
        }
        Ok(Self::new(
            format!("ellipse({a},{b})"),
            T::TAU(),
            move |t| center + VecN::new2(a * t.cos(), b * t.sin()),
            move |t| VecN::new2(-a * t.sin(), b * t.cos()),
        ))
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn period(&self) -> T {
        self.period
    }

    pub fn point(&self, t: T) -> VecN<T, 2> {
        (self.point)(t)
    }

    pub fn velocity(&self, t: T) -> VecN<T, 2> {
        (self.velocity)(t)
    }

    /// Outward unit normal: the unit tangent turned clockwise.
    pub fn normal(&self, t: T) -> VecN<T, 2> {
        let v = self.velocity(t);
        VecN::new2(v[1], -v[0]).normalized().unwrap_or_else(VecN::zero)
    }

    pub fn length(&self, panels: usize) -> T {
        arc_length(|t| self.velocity(t).norm(), T::zero(), self.period, panels)
    }

    /// `n` points at equal parameter spacing; the start point is not repeated.
    pub fn sample(&self, n: usize) -> Vec<VecN<T, 2>> {
        let dt = self.period / T::from_count(n);
        (0..n).map(|i| self.point(T::from_count(i) * dt)).collect()
    }

    pub fn polyline_mesh(&self, n: usize) -> SurfaceMesh<T, 2> {
        closed_polyline_mesh(&self.label, &self.sample(n))
    }
}

/// Segment mesh of a closed polyline; normals are tangents turned clockwise.
pub fn closed_polyline_mesh<T: Real>(label: &str, pts: &[VecN<T, 2>]) -> SurfaceMesh<T, 2> {
    let n = pts.len();
    let facets = (0..n)
        .filter_map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            let e = b - a;
            Facet::oriented([a, b], &VecN::new2(e[1], -e[0]))
        })
        .collect();
    SurfaceMesh::from_facets(label, facets)
}

/// A curve traversing a base Jordan curve `m` times, displaced along the base
/// normal by `eps * sin(2 pi t / (m tau))` so the sheets separate.
///
/// This is an immersion, not the boundary of any domain.
#[derive(Clone, Debug)]
pub struct ImmersedCurve<T> {
    base: ParametricCurve<T>,
    winding: usize,
    perturbation: T,
}

/// Builds the `m`-fold perturbed cover of `base`.
pub fn make_m_cover<T: Real>(base: ParametricCurve<T>, m: usize, perturbation: T) -> Result<ImmersedCurve<T>> {
    ImmersedCurve::new(base, m, perturbation)
}

impl<T: Real> ImmersedCurve<T> {
    pub fn new(base: ParametricCurve<T>, m: usize, perturbation: T) -> Result<Self> {
        if m == 0 {
            return Err(FluxError::BadParams("winding count must be at least 1".into()));
        }
        if perturbation < T::zero() {
            return Err(FluxError::BadParams("perturbation must be non-negative".into()));
        }
        Ok(Self {
            base,
            winding: m,
            perturbation,
        })
    }

    pub fn base(&self) -> &ParametricCurve<T> {
        &self.base
    }

    pub fn winding_count(&self) -> usize {
        self.winding
    }

    pub fn perturbation(&self) -> T {
        self.perturbation
    }

    pub fn period(&self) -> T {
        self.base.period() * T::from_count(self.winding)
    }

    fn frequency(&self) -> T {
        T::TAU() / self.period()
    }

    pub fn point(&self, t: T) -> VecN<T, 2> {
        let tau = self.base.period();
        let s = t - (t / tau).floor() * tau;
        let p = self.base.point(s);
        if self.perturbation == T::zero() {
            return p;
        }
        p + self.base.normal(s) * (self.perturbation * (self.frequency() * t).sin())
    }

    /// Five-point central difference of [`ImmersedCurve::point`].
    pub fn velocity(&self, t: T) -> VecN<T, 2> {
        if self.perturbation == T::zero() {
            let tau = self.base.period();
            return self.base.velocity(t - (t / tau).floor() * tau);
        }
        let h = T::lit(1e-3) * self.base.period() / T::TAU();
        let f = |k: f64| self.point(t + h * T::lit(k));
        (f(-2.0) - f(2.0) + (f(1.0) - f(-1.0)) * T::lit(8.0)) * (T::one() / (T::lit(12.0) * h))
    }

    /// Arc length by composite Gauss–Legendre quadrature, `panels` per lap.
    pub fn length(&self, panels: usize) -> T {
        let tau = self.base.period();
        let mut acc = CompensatedSum::new();
        for lap in 0..self.winding {
            let t0 = tau * T::from_count(lap);
            acc.add(arc_length(|t| self.velocity(t).norm(), t0, t0 + tau, panels));
        }
        acc.value()
    }

    /// `n_per_lap * m` points at equal parameter spacing.
    pub fn sample(&self, n_per_lap: usize) -> Vec<VecN<T, 2>> {
        let n = n_per_lap * self.winding;
        let dt = self.period() / T::from_count(n);
        (0..n).map(|i| self.point(T::from_count(i) * dt)).collect()
    }

    pub fn polyline_mesh(&self, n_per_lap: usize) -> SurfaceMesh<T, 2> {
        let label = format!("{}x{}", self.base.label(), self.winding);
        closed_polyline_mesh(&label, &self.sample(n_per_lap))
    }

    /// Distance between the end and start points.
    pub fn closure_gap(&self) -> T {
        self.point(self.period()).distance(&self.point(T::zero()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit_circle() -> ParametricCurve<f64> {
        ParametricCurve::circle(VecN::zero(), 1.0).unwrap()
    }

    #[test]
    fn single_cover_is_base() {
        let c = make_m_cover(unit_circle(), 1, 0.0).unwrap();
        assert!((c.length(64) - 2.0 * PI).abs() < 1e-6);
        assert!(c.closure_gap() < 1e-12);
    }

    #[test]
    fn triple_cover_length() {
        let c = make_m_cover(unit_circle(), 3, 0.0).unwrap();
        assert!((c.length(64) - 6.0 * PI).abs() < 1e-6);
        let single = make_m_cover(unit_circle(), 1, 0.0).unwrap().length(64);
        assert!((c.length(64) - 3.0 * single).abs() < 1e-9);
    }

    #[test]
    fn perturbed_cover_is_slightly_longer() {
        let c = make_m_cover(unit_circle(), 3, 0.01).unwrap();
        let len = c.length(256);
        assert!(len > 6.0 * PI && len < 6.0 * PI + 0.5, "{len}");
        assert!(c.closure_gap() < 1e-12);
    }

    #[test]
    fn polyline_normals_point_out_of_circle() {
        let m = unit_circle().polyline_mesh(200);
        for f in m.facets() {
            assert!(f.normal.dot(&f.centroid) > 0.0);
        }
    }

    #[test]
    fn ellipse_perimeter() {
        // Ramanujan's approximation is accurate to ~1e-5 for (2, 1).
        let e = ParametricCurve::ellipse(VecN::zero(), 2.0, 1.0).unwrap();
        let (a, b) = (2.0f64, 1.0f64);
        let h = ((a - b) / (a + b)).powi(2);
        let approx = PI * (a + b) * (1.0 + 3.0 * h / (10.0 + (4.0 - 3.0 * h).sqrt()));
        assert!((e.length(64) - approx).abs() < 1e-4);
    }
}
