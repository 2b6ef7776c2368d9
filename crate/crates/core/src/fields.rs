//! Vector fields with analytic or finite-difference divergence, a small
//! catalog, and sampled sup-norm estimates.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{FluxError, Result};
use crate::geometry::ImplicitDomain;
use crate::lowdisc::Halton;
use crate::scalar::Real;
use crate::vector::VecN;

type FieldFn<T, const D: usize> = Arc<dyn Fn(&VecN<T, D>) -> VecN<T, D> + Send + Sync>;
type ScalarFn<T, const D: usize> = Arc<dyn Fn(&VecN<T, D>) -> T + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DivergenceMode {
    Analytic,
    FiniteDifference,
}

/// A smooth vector field `f: R^D -> R^D`.
#[derive(Clone)]
pub struct VectorField<T, const D: usize> {
    eval: FieldFn<T, D>,
    divergence: Option<ScalarFn<T, D>>,
    sup_norm_hint: Option<T>,
    div_sup_norm_hint: Option<T>,
    divergence_free: bool,
    label: String,
}

impl<T: Real, const D: usize> fmt::Debug for VectorField<T, D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("label", &self.label)
            .field("mode", &self.divergence_mode())
            .field("divergence_free", &self.divergence_free)
            .finish()
    }
}

/// Central-difference step `eps^(1/3) (1 + |x|)`.
pub fn fd_step<T: Real, const D: usize>(x: &VecN<T, D>) -> T {
    T::epsilon().cbrt() * (T::one() + x.norm())
}

impl<T: Real, const D: usize> VectorField<T, D> {
    pub fn new(label: impl Into<String>, eval: impl Fn(&VecN<T, D>) -> VecN<T, D> + Send + Sync + 'static) -> Self {
        Self {
            eval: Arc::new(eval),
            divergence: None,
            sup_norm_hint: None,
            div_sup_norm_hint: None,
            divergence_free: false,
            label: label.into(),
        }
    }

    pub fn with_divergence(mut self, div: impl Fn(&VecN<T, D>) -> T + Send + Sync + 'static) -> Self {
        self.divergence = Some(Arc::new(div));
        self
    }

    pub fn with_sup_hint(mut self, sup: T) -> Self {
        self.sup_norm_hint = Some(sup);
        self
    }

    pub fn with_div_sup_hint(mut self, sup: T) -> Self {
        self.div_sup_norm_hint = Some(sup);
        self
    }

    /// Flags the field as divergence free and installs the zero divergence.
    pub fn divergence_free(mut self) -> Self {
        self.divergence_free = true;
        self.divergence = Some(Arc::new(|_| T::zero()));
        self.div_sup_norm_hint = Some(T::zero());
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dimension(&self) -> usize {
        D
    }

    pub fn is_divergence_free(&self) -> bool {
        self.divergence_free
    }

    pub fn sup_norm_hint(&self) -> Option<T> {
        self.sup_norm_hint
    }

    pub fn div_sup_norm_hint(&self) -> Option<T> {
        self.div_sup_norm_hint
    }

    pub fn divergence_mode(&self) -> DivergenceMode {
        if self.divergence.is_some() {
            DivergenceMode::Analytic
        } else {
            DivergenceMode::FiniteDifference
        }
    }

    #[inline]
    pub fn eval(&self, x: &VecN<T, D>) -> VecN<T, D> {
        (self.eval)(x)
    }

    pub fn divergence(&self, x: &VecN<T, D>) -> T {
        match &self.divergence {
            Some(div) => div(x),
            None => self.fd_divergence(x),
        }
    }

    pub fn fd_divergence(&self, x: &VecN<T, D>) -> T {
        let h = fd_step(x);
        let mut acc = T::zero();
        for i in 0..D {
            let mut xp = *x;
            let mut xm = *x;
            xp[i] += h;
            xm[i] -= h;
            acc += (self.eval(&xp)[i] - self.eval(&xm)[i]) / (h + h);
        }
        acc
    }

    /// Largest gap between the analytic and finite-difference divergence.
    pub fn divergence_disagreement(&self, points: &[VecN<T, D>]) -> T {
        points
            .iter()
            .map(|p| (self.divergence(p) - self.fd_divergence(p)).abs())
            .fold(T::zero(), T::max)
    }

    /// `c * f`.
    pub fn scaled(&self, c: T) -> Self {
        let eval = Arc::clone(&self.eval);
        let div = self.divergence.clone();
        Self {
            eval: Arc::new(move |x| eval(x) * c),
            divergence: div.map(|d| Arc::new(move |x: &VecN<T, D>| d(x) * c) as ScalarFn<T, D>),
            sup_norm_hint: self.sup_norm_hint.map(|s| s * c.abs()),
            div_sup_norm_hint: self.div_sup_norm_hint.map(|s| s * c.abs()),
            divergence_free: self.divergence_free,
            label: format!("{}*{}", c, self.label),
        }
    }

    /// `f + g`.
    pub fn sum(&self, other: &Self) -> Self {
        let (a, b) = (Arc::clone(&self.eval), Arc::clone(&other.eval));
        let divergence = match (&self.divergence, &other.divergence) {
            (Some(da), Some(db)) => {
                let (da, db) = (Arc::clone(da), Arc::clone(db));
                Some(Arc::new(move |x: &VecN<T, D>| da(x) + db(x)) as ScalarFn<T, D>)
            }
            _ => None,
        };
        let add = |p: Option<T>, q: Option<T>| p.zip(q).map(|(p, q)| p + q);
        Self {
            eval: Arc::new(move |x| a(x) + b(x)),
            divergence,
            sup_norm_hint: add(self.sup_norm_hint, other.sup_norm_hint),
            div_sup_norm_hint: add(self.div_sup_norm_hint, other.div_sup_norm_hint),
            divergence_free: self.divergence_free && other.divergence_free,
            label: format!("({})+({})", self.label, other.label),
        }
    }
}

/// Named catalog entries addressable from configuration files.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    /// `v`; params: the `D` components of `v`.
    Constant,
    /// `x`.
    Identity,
    /// `omega (-y, x, 0, ...)`; params: optional `omega`.
    Rotation,
    /// `(y, 0, ...)`.
    Shear,
    /// `(2xy, -y^2)` in the plane, `curl(0, 0, xy) = (x, -y, 0)` in space.
    Solenoidal,
    /// `(x^2, xy, xz, ...)`.
    Quadratic,
    /// `(x^2, y, z, ...)`.
    Parabolic,
    /// `(x(1 - r^2) - y, y(1 - r^2) + x)`, planar only.
    LimitCycle,
    /// `-x`.
    Sink,
}

impl FieldKind {
    pub const ALL: [FieldKind; 9] = [
        Self::Constant,
        Self::Identity,
        Self::Rotation,
        Self::Shear,
        Self::Solenoidal,
        Self::Quadratic,
        Self::Parabolic,
        Self::LimitCycle,
        Self::Sink,
    ];

    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "constant" => Self::Constant,
            "identity" | "position" => Self::Identity,
            "rotation" => Self::Rotation,
            "shear" => Self::Shear,
            "solenoidal" | "curl" => Self::Solenoidal,
            "quadratic" => Self::Quadratic,
            "parabolic" => Self::Parabolic,
            "limit-cycle" | "limit_cycle" => Self::LimitCycle,
            "sink" => Self::Sink,
            other => return Err(FluxError::BadParams(format!("unknown field `{other}`"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Constant => "constant",
            Self::Identity => "identity",
            Self::Rotation => "rotation",
            Self::Shear => "shear",
            Self::Solenoidal => "solenoidal",
            Self::Quadratic => "quadratic",
            Self::Parabolic => "parabolic",
            Self::LimitCycle => "limit-cycle",
            Self::Sink => "sink",
        }
    }
}

/// Builds a catalog field.
pub fn field_catalog<T: Real, const D: usize>(kind: FieldKind, params: &[f64]) -> Result<VectorField<T, D>> {
    if D < 2 {
        return Err(FluxError::UnsupportedDimension(D));
    }
    let dim = T::from_count(D);
    Ok(match kind {
        FieldKind::Constant => {
            let v = VecN::<T, D>::from_f64_slice(params).ok_or_else(|| {
                FluxError::BadParams(format!("constant field needs {D} components, got {}", params.len()))
            })?;
            VectorField::new("constant", move |_| v)
                .divergence_free()
                .with_sup_hint(v.norm())
        }
        FieldKind::Identity => VectorField::new("identity", |x| *x)
            .with_divergence(move |_| dim)
            .with_div_sup_hint(dim),
        FieldKind::Rotation => {
            let w = T::lit(params.first().copied().unwrap_or(1.0));
            VectorField::new("rotation", move |x: &VecN<T, D>| {
                let mut out = VecN::zero();
                out[0] = -w * x[1];
                out[1] = w * x[0];
                out
            })
            .divergence_free()
        }
        FieldKind::Shear => VectorField::new("shear", |x: &VecN<T, D>| {
            let mut out = VecN::zero();
            out[0] = x[1];
            out
        })
        .divergence_free(),
        FieldKind::Solenoidal => if D == 2 {
            VectorField::new("solenoidal", |x: &VecN<T, D>| {
                let mut out = VecN::zero();
                out[0] = T::lit(2.0) * x[0] * x[1];
                out[1] = -x[1] * x[1];
                out
            })
        } else {
            VectorField::new("solenoidal", |x: &VecN<T, D>| {
                let mut out = VecN::zero();
                out[0] = x[0];
                out[1] = -x[1];
                out
            })
        }
        .divergence_free(),
        FieldKind::Quadratic => VectorField::new("quadratic", |x: &VecN<T, D>| {
            VecN::from_fn(|i| if i == 0 { x[0] * x[0] } else { x[0] * x[i] })
        })
        .with_divergence(move |x| (dim + T::one()) * x[0]),
        FieldKind::Parabolic => VectorField::new("parabolic", |x: &VecN<T, D>| {
            VecN::from_fn(|i| if i == 0 { x[0] * x[0] } else { x[i] })
        })
        .with_divergence(move |x| T::lit(2.0) * x[0] + dim - T::one()),
        FieldKind::LimitCycle => {
            if D != 2 {
                return Err(FluxError::BadParams("limit-cycle field is planar".into()));
            }
            VectorField::new("limit-cycle", |x: &VecN<T, D>| {
                let s = T::one() - x.norm_squared();
                let mut out = VecN::zero();
                out[0] = x[0] * s - x[1];
                out[1] = x[1] * s + x[0];
                out
            })
            .with_divergence(|x| T::lit(2.0) - T::lit(4.0) * x.norm_squared())
        }
        FieldKind::Sink => VectorField::new("sink", |x: &VecN<T, D>| -*x)
            .with_divergence(move |_| -dim)
            .with_div_sup_hint(dim),
    })
}

/// Sampled sup-norm estimates paired with analytic hints.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupNorms {
    pub field_sampled: f64,
    pub divergence_sampled: f64,
    pub field_hint: Option<f64>,
    pub divergence_hint: Option<f64>,
    pub samples: usize,
}

impl SupNorms {
    /// `max(hint, sampled)` for `|f|`.
    pub fn field_bound(&self) -> f64 {
        self.field_hint
            .map_or(self.field_sampled, |h| h.max(self.field_sampled))
    }

    /// `max(hint, sampled)` for `|div f|`.
    pub fn divergence_bound(&self) -> f64 {
        self.divergence_hint
            .map_or(self.divergence_sampled, |h| h.max(self.divergence_sampled))
    }
}

/// Max of `|f|` and `|div f|` over quasi-random points of `domain`.
pub fn sup_norms<T: Real, const D: usize>(
    field: &VectorField<T, D>,
    domain: &ImplicitDomain<T, D>,
    samples: usize,
    seed: u64,
) -> SupNorms {
    sup_norms_with_points(field, domain, samples, seed, &[])
}

/// As [`sup_norms`], additionally evaluating at `extra` points (typically
/// boundary mesh vertices, where the sup of a growing field is attained).
pub fn sup_norms_with_points<T: Real, const D: usize>(
    field: &VectorField<T, D>,
    domain: &ImplicitDomain<T, D>,
    samples: usize,
    seed: u64,
    extra: &[VecN<T, D>],
) -> SupNorms {
    let bbox = *domain.bounding_box();
    let halton = Halton::<D>::new(seed);
    let mut f_max = T::zero();
    let mut div_max = T::zero();
    let mut visit = |x: &VecN<T, D>| {
        f_max = f_max.max(field.eval(x).norm());
        div_max = div_max.max(field.divergence(x).abs());
    };
    for u in halton.points(samples.max(1)) {
        let x = bbox.lerp(&VecN::from_f64_slice(&u).expect("dimension"));
        if domain.contains(&x) {
            visit(&x);
        }
    }
    for x in extra {
        visit(x);
    }
    SupNorms {
        field_sampled: f_max.as_f64(),
        divergence_sampled: div_max.as_f64(),
        field_hint: field.sup_norm_hint().map(Real::as_f64),
        divergence_hint: field.div_sup_norm_hint().map(Real::as_f64),
        samples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ball;

    #[test]
    fn identity_divergence_is_dimension() {
        let f = field_catalog::<f64, 2>(FieldKind::Identity, &[]).unwrap();
        assert_eq!(f.divergence(&VecN::new2(0.3, 7.0)), 2.0);
    }

    #[test]
    fn constant_divergence_is_zero() {
        let f = field_catalog::<f64, 2>(FieldKind::Constant, &[1.0, 0.0]).unwrap();
        assert_eq!(f.divergence(&VecN::new2(-1.0, 2.0)), 0.0);
        assert_eq!(f.sup_norm_hint(), Some(1.0));
    }

    #[test]
    fn quadratic_divergence_by_hand() {
        let f = field_catalog::<f64, 2>(FieldKind::Quadratic, &[]).unwrap();
        let x = VecN::new2(1.0, 2.0);
        assert_eq!(f.divergence(&x), 3.0);
        assert!((f.fd_divergence(&x) - 3.0).abs() < 1e-8);
    }

    #[test]
    fn curl_field_is_solenoidal() {
        let f = field_catalog::<f64, 3>(FieldKind::Solenoidal, &[]).unwrap();
        let x = VecN::new3(0.4, -1.3, 2.0);
        assert_eq!(f.eval(&x), VecN::new3(0.4, 1.3, 0.0));
        assert!(f.fd_divergence(&x).abs() < 1e-8);
    }

    #[test]
    fn analytic_and_fd_divergence_agree() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<VecN<f64, 2>> = (0..100)
            .map(|_| VecN::new2(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
            .collect();
        for kind in FieldKind::ALL {
            let f = field_catalog::<f64, 2>(kind, &[0.3, -0.4]).unwrap();
            let tol = 1e-6f64.max(1e3 * fd_step(&VecN::<f64, 2>::new2(2.0, 2.0)).powi(2));
            assert!(f.divergence_disagreement(&pts) < tol, "{}", f.label());
        }
    }

    #[test]
    fn sup_norms_on_disk() {
        let disk = ball(VecN::<f64, 2>::zero(), 1.0).unwrap();
        let f = field_catalog::<f64, 2>(FieldKind::Identity, &[]).unwrap();
        let s = sup_norms(&f, &disk, 10_000, 1);
        assert!(
            s.field_sampled >= 0.999 && s.field_sampled <= 1.0,
            "{}",
            s.field_sampled
        );
        let c = field_catalog::<f64, 2>(FieldKind::Constant, &[0.0, 1.0]).unwrap();
        let s = sup_norms(&c, &disk, 100, 1);
        assert_eq!((s.field_bound(), s.divergence_bound()), (1.0, 0.0));
        let big = ball(VecN::<f64, 2>::zero(), 2.0).unwrap();
        let r = field_catalog::<f64, 2>(FieldKind::Rotation, &[]).unwrap();
        let s = sup_norms(&r, &big, 10_000, 1);
        assert!(s.field_sampled >= 1.99 && s.field_sampled <= 2.0);
        assert_eq!(s.divergence_bound(), 0.0);
    }

    #[test]
    fn unknown_names_are_rejected() {
        assert!(FieldKind::parse("vortex-sheet").is_err());
        assert!(field_catalog::<f64, 3>(FieldKind::LimitCycle, &[]).is_err());
        assert!(field_catalog::<f64, 2>(FieldKind::Constant, &[1.0]).is_err());
    }
}
