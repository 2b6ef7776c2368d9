//! Closed-form domains: balls, half-spaces, shells, tori, rounded boxes and
//! polygons, and the comb family used for tightness studies.

use crate::error::{FluxError, Result};
use crate::scalar::Real;
use crate::vector::VecN;

use super::{BoundingBox, ImplicitDomain};

fn bad(msg: impl Into<String>) -> FluxError {
    FluxError::BadParams(msg.into())
}

/// Closed ball `|x - center| <= radius`.
pub fn ball<T: Real, const D: usize>(center: VecN<T, D>, radius: T) -> Result<ImplicitDomain<T, D>> {
    if !(radius > T::zero()) || !center.is_finite() {
        return Err(bad(format!("ball radius must be positive, got {radius}")));
    }
    let bbox = BoundingBox::centered(center, radius);
    Ok(
        ImplicitDomain::new(format!("ball(r={radius})"), bbox, T::one(), move |x| {
            x.distance(&center) - radius
        })
        .with_exact_sdf(true),
    )
}

/// Half-space `{x : n·x <= offset}` with outward unit normal `n`.
///
/// Unbounded, so the caller supplies the region used for meshing.
pub fn halfspace<T: Real, const D: usize>(
    outward_normal: VecN<T, D>,
    offset: T,
    region: BoundingBox<T, D>,
) -> Result<ImplicitDomain<T, D>> {
    let n = outward_normal
        .normalized()
        .ok_or_else(|| bad("half-space normal must be nonzero"))?;
    if region.is_empty() {
        return Err(bad("half-space region is empty"));
    }
    Ok(ImplicitDomain::new("halfspace", region, T::one(), move |x| n.dot(x) - offset).with_exact_sdf(true))
}

/// Spherical shell (an annulus when `D = 2`) between two radii.
pub fn annulus<T: Real, const D: usize>(center: VecN<T, D>, inner: T, outer: T) -> Result<ImplicitDomain<T, D>> {
    if !(inner > T::zero() && outer > inner) {
        return Err(bad(format!("annulus needs 0 < r_in < r_out, got ({inner}, {outer})")));
    }
    let mid = (inner + outer) * T::lit(0.5);
    let half = (outer - inner) * T::lit(0.5);
    Ok(ImplicitDomain::new(
        format!("annulus({inner},{outer})"),
        BoundingBox::centered(center, outer),
        T::one(),
        move |x| (x.distance(&center) - mid).abs() - half,
    )
    .with_exact_sdf(true))
}

/// Solid torus around the z axis with major radius `major` and tube radius `minor`.
pub fn torus<T: Real>(center: VecN<T, 3>, major: T, minor: T) -> Result<ImplicitDomain<T, 3>> {
    if !(minor > T::zero() && major > minor) {
        return Err(bad(format!("torus needs 0 < r < R, got (R={major}, r={minor})")));
    }
    let bbox = BoundingBox::new(
        center + VecN::new3(-(major + minor), -(major + minor), -minor),
        center + VecN::new3(major + minor, major + minor, minor),
    );
    Ok(
        ImplicitDomain::new(format!("torus({major},{minor})"), bbox, T::one(), move |x| {
            let p = *x - center;
            let q = (p[0] * p[0] + p[1] * p[1]).sqrt() - major;
            (q * q + p[2] * p[2]).sqrt() - minor
        })
        .with_exact_sdf(true),
    )
}

#[inline]
fn rounded_box_sdf<T: Real, const D: usize>(x: &VecN<T, D>, center: &VecN<T, D>, half: &VecN<T, D>, radius: T) -> T {
    let mut outside = T::zero();
    let mut inside = T::neg_infinity();
    for i in 0..D {
        let q = (x[i] - center[i]).abs() - (half[i] - radius);
        if q > T::zero() {
            outside += q * q;
        }
        inside = inside.max(q);
    }
    outside.sqrt() + inside.min(T::zero()) - radius
}

/// Axis-aligned box with convex edges rounded at `radius` (exact SDF).
pub fn rounded_box<T: Real, const D: usize>(
    center: VecN<T, D>,
    half_extents: VecN<T, D>,
    radius: T,
) -> Result<ImplicitDomain<T, D>> {
    if (0..D).any(|i| !(half_extents[i] > T::zero())) {
        return Err(bad("box half extents must be positive"));
    }
    if radius < T::zero() || (0..D).any(|i| radius > half_extents[i]) {
        return Err(bad(format!("rounding radius {radius} exceeds a half extent")));
    }
    let bbox = BoundingBox::new(center - half_extents, center + half_extents);
    Ok(
        ImplicitDomain::new(format!("box(rho={radius})"), bbox, T::one(), move |x| {
            rounded_box_sdf(x, &center, &half_extents, radius)
        })
        .with_exact_sdf(true),
    )
}

/// Convex polygon (counter-clockwise vertices) offset outward by `radius`,
/// which rounds every corner.
pub fn rounded_polygon<T: Real>(vertices: Vec<VecN<T, 2>>, radius: T) -> Result<ImplicitDomain<T, 2>> {
    let n = vertices.len();
    if n < 3 {
        return Err(bad("polygon needs at least three vertices"));
    }
    if radius < T::zero() {
        return Err(bad("polygon rounding radius must be non-negative"));
    }
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let c = vertices[(i + 2) % n];
        if (b - a).cross2(&(c - b)) <= T::zero() {
            return Err(bad("polygon must be strictly convex and counter-clockwise"));
        }
    }
    let mut lo = vertices[0];
    let mut hi = vertices[0];
    for v in &vertices {
        lo = lo.zip_map(v, T::min);
        hi = hi.zip_map(v, T::max);
    }
    let bbox = BoundingBox::new(lo, hi).expanded(radius);
    Ok(
        ImplicitDomain::new(format!("polygon(n={n},rho={radius})"), bbox, T::one(), move |x| {
            let mut min_dist = T::infinity();
            let mut max_signed = T::neg_infinity();
            for i in 0..n {
                let a = vertices[i];
                let b = vertices[(i + 1) % n];
                let e = b - a;
                let w = *x - a;
                let t = (w.dot(&e) / e.norm_squared()).max(T::zero()).min(T::one());
                min_dist = min_dist.min((w - e * t).norm());
                // Outward normal of a CCW edge is the clockwise perpendicular.
                let normal = VecN::new2(e[1], -e[0]) * (T::one() / e.norm());
                max_signed = max_signed.max(w.dot(&normal));
            }
            let d = if max_signed <= T::zero() { -min_dist } else { min_dist };
            d - radius
        })
        .with_exact_sdf(true),
    )
}

/// Polynomial smooth minimum with blend width `k`; `k = 0` gives `min`.
#[inline]
fn smooth_min<T: Real>(a: T, b: T, k: T) -> T {
    if k <= T::zero() {
        return a.min(b);
    }
    let half = T::lit(0.5);
    let h = (half + half * (b - a) / k).max(T::zero()).min(T::one());
    b * (T::one() - h) + a * h - k * h * (T::one() - h)
}

/// Default corner smoothing `1 / (8 n^2)` for a comb with `n` teeth.
pub fn default_comb_smoothing<T: Real>(n: usize) -> T {
    T::one() / (T::lit(8.0) * T::from_count(n * n))
}

/// Comb with `n` teeth of width `1/n^2` and a spine of the same width,
/// all inside the unit cube, with corners rounded at scale `smoothing`.
pub fn comb<T: Real, const D: usize>(n: usize, smoothing: T) -> Result<ImplicitDomain<T, D>> {
    if D < 2 {
        return Err(FluxError::UnsupportedDimension(D));
    }
    if n <= 2 {
        return Err(bad(format!("comb needs n > 2, got {n}")));
    }
    let nn = T::from_count(n);
    let width = T::one() / (nn * nn);
    if smoothing < T::zero() || smoothing >= width * T::lit(0.25) {
        return Err(bad(format!(
            "comb smoothing {smoothing} must lie in [0, 1/(4n^2)) to keep teeth apart"
        )));
    }
    let half = T::lit(0.5);
    let mut tooth_half = VecN::<T, D>::from_fn(|_| half);
    tooth_half[1] = width * half;
    let mut spine_half = VecN::<T, D>::from_fn(|_| half);
    spine_half[0] = width * half;
    let mut spine_center = VecN::<T, D>::from_fn(|_| half);
    spine_center[0] = width * half;
    let bbox = BoundingBox::new(VecN::zero(), VecN::from_fn(|_| T::one()));

    Ok(ImplicitDomain::new(format!("comb(n={n})"), bbox, T::one(), move |x| {
        let j = (x[1] * nn).floor().to_i64().unwrap_or(0);
        let mut teeth = T::infinity();
        for i in (j - 1)..=(j + 1) {
            if i < 0 || i >= n as i64 {
                continue;
            }
            let mut c = VecN::<T, D>::from_fn(|_| half);
            c[1] = T::from_count(i as usize) / nn + width * half;
            teeth = teeth.min(rounded_box_sdf(x, &c, &tooth_half, smoothing));
        }
        if !teeth.is_finite() {
            // Far below or above the teeth: the nearest tooth is an end one.
            let i = if j < 0 { 0 } else { n - 1 };
            let mut c = VecN::<T, D>::from_fn(|_| half);
            c[1] = T::from_count(i) / nn + width * half;
            teeth = rounded_box_sdf(x, &c, &tooth_half, smoothing);
        }
        let spine = rounded_box_sdf(x, &spine_center, &spine_half, smoothing);
        smooth_min(teeth, spine, smoothing)
    }))
}

/// The comb `D_{1,n}` and its translate `D_{2,n}` by `(1/(2n^2), 1/(2n^2), 0, ...)`.
pub fn comb_pair<T: Real, const D: usize>(
    n: usize,
    smoothing: T,
) -> Result<(ImplicitDomain<T, D>, ImplicitDomain<T, D>)> {
    let first = comb::<T, D>(n, smoothing)?;
    let nn = T::from_count(n);
    let s = T::one() / (T::lit(2.0) * nn * nn);
    let mut shift = VecN::<T, D>::zero();
    shift[0] = s;
    shift[1] = s;
    let second = first.translate(shift).with_label(format!("comb(n={n})+shift"));
    Ok((first, second))
}

/// Named zoo shapes addressable from configuration files.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZooShape {
    Ball,
    Halfspace,
    Annulus,
    Torus,
    SmoothedBox,
    RoundedPolygon,
    Comb,
}

impl ZooShape {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "ball" | "disk" => Self::Ball,
            "halfspace" | "half-plane" | "halfplane" => Self::Halfspace,
            "annulus" | "shell" => Self::Annulus,
            "torus" => Self::Torus,
            "box" | "smoothed-box" | "smoothed_box" => Self::SmoothedBox,
            "polygon" | "rounded-polygon" => Self::RoundedPolygon,
            "comb" => Self::Comb,
            other => return Err(bad(format!("unknown zoo shape `{other}`"))),
        })
    }
}

fn take_vec<T: Real, const D: usize>(params: &[f64], at: usize, what: &str) -> Result<VecN<T, D>> {
    params
        .get(at..at + D)
        .and_then(VecN::from_f64_slice)
        .ok_or_else(|| bad(format!("{what}: expected {D} coordinates at position {at}")))
}

fn take_scalar<T: Real>(params: &[f64], at: usize, what: &str) -> Result<T> {
    params
        .get(at)
        .map(|v| T::lit(*v))
        .ok_or_else(|| bad(format!("{what}: missing parameter {at}")))
}

/// Builds a zoo domain from a flat numeric parameter list.
///
/// Layouts (`c` = center, `D` coordinates each):
/// * ball: `c, r`
/// * halfspace: `normal, offset` (region required)
/// * annulus: `c, r_in, r_out`
/// * torus: `c, R, r` (d = 3)
/// * box: `c, half_extents, rho`
/// * polygon: `rho, x0, y0, x1, y1, ...` (d = 2)
/// * comb: `n [, rho]`
pub fn make_zoo<T: Real, const D: usize>(
    shape: ZooShape,
    params: &[f64],
    region: Option<BoundingBox<T, D>>,
) -> Result<ImplicitDomain<T, D>> {
    match shape {
        ZooShape::Ball => ball(
            take_vec(params, 0, "ball center")?,
            take_scalar(params, D, "ball radius")?,
        ),
        ZooShape::Halfspace => {
            let region = region.ok_or_else(|| bad("halfspace needs a finite region"))?;
            halfspace(
                take_vec(params, 0, "halfspace normal")?,
                take_scalar(params, D, "halfspace offset")?,
                region,
            )
        }
        ZooShape::Annulus => annulus(
            take_vec(params, 0, "annulus center")?,
            take_scalar(params, D, "annulus inner radius")?,
            take_scalar(params, D + 1, "annulus outer radius")?,
        ),
        ZooShape::Torus => {
            if D != 3 {
                return Err(bad("torus is three-dimensional"));
            }
            let c = take_vec::<T, 3>(params, 0, "torus center")?;
            let t = torus(
                c,
                take_scalar(params, 3, "torus R")?,
                take_scalar(params, 4, "torus r")?,
            )?;
            Ok(recast_dimension(t))
        }
        ZooShape::SmoothedBox => rounded_box(
            take_vec(params, 0, "box center")?,
            take_vec(params, D, "box half extents")?,
            take_scalar(params, 2 * D, "box rounding")?,
        ),
        ZooShape::RoundedPolygon => {
            if D != 2 {
                return Err(bad("rounded polygon is two-dimensional"));
            }
            let rho: T = take_scalar(params, 0, "polygon rounding")?;
            let coords = &params[1..];
            if coords.len() % 2 != 0 {
                return Err(bad("polygon coordinates come in pairs"));
            }
            let verts = coords
                .chunks(2)
                .map(|c| VecN::new2(T::lit(c[0]), T::lit(c[1])))
                .collect();
            Ok(recast_dimension(rounded_polygon(verts, rho)?))
        }
        ZooShape::Comb => {
            let n = params
                .first()
                .filter(|v| v.fract() == 0.0 && **v > 0.0)
                .map(|v| *v as usize)
                .ok_or_else(|| bad("comb needs an integer tooth count"))?;
            let rho = params
                .get(1)
                .map(|v| T::lit(*v))
                .unwrap_or_else(|| default_comb_smoothing(n));
            comb(n, rho)
        }
    }
}

/// Reinterprets a domain whose dimension was checked at runtime.
fn recast_dimension<T: Real, const A: usize, const B: usize>(d: ImplicitDomain<T, A>) -> ImplicitDomain<T, B> {
    assert_eq!(A, B, "dimension checked by caller");
    let level = d.level_fn();
    let bbox = BoundingBox::new(
        VecN::from_fn(|i| d.bounding_box().min[i]),
        VecN::from_fn(|i| d.bounding_box().max[i]),
    );
    ImplicitDomain::new(
        d.label().to_string(),
        bbox,
        d.lipschitz_hint(),
        move |x: &VecN<T, B>| level(&VecN::from_fn(|i| x[i])),
    )
    .with_exact_sdf(d.is_exact_sdf())
}
