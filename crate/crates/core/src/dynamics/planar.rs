use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::bounds::{BoundReport, Flag, InequalityId, Provenance};
use crate::error::{FluxError, Result};
use crate::fields::VectorField;
use crate::geometry::{ball, mesh_boundary, ImplicitDomain, SurfaceMesh};
use crate::scalar::Real;
use crate::svg::Canvas;
use crate::vector::VecN;

use super::masked::{masked_arcs, residence_time};
use super::{integrate, masked_displacement, Trajectory};

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

fn segments_meet(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let scale = [a, b, c, d]
        .iter()
        .map(|p| p[0].abs().max(p[1].abs()))
        .fold(1.0, f64::max);
    let eps = 1e-12 * scale * scale;
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    let sign = |o: f64| {
        if o > eps {
            1
        } else if o < -eps {
            -1
        } else {
            0
        }
    };
    let (s1, s2, s3, s4) = (sign(o1), sign(o2), sign(o3), sign(o4));
    if s1 * s2 < 0 && s3 * s4 < 0 {
        return true;
    }
    (s1 == 0 && on_segment(a, b, c))
        || (s2 == 0 && on_segment(a, b, d))
        || (s3 == 0 && on_segment(c, d, a))
        || (s4 == 0 && on_segment(c, d, b))
}

/// First pair of non-adjacent polyline segments that touch, found with a
/// uniform spatial hash. The polyline is treated as closed when its ends
/// coincide.
pub fn find_self_intersection<T: Real>(points: &[VecN<T, 2>]) -> Option<(usize, usize)> {
    let pts: Vec<[f64; 2]> = points.iter().map(|p| [p[0].as_f64(), p[1].as_f64()]).collect();
    let n = pts.len().checked_sub(1)?;
    if n < 3 {
        return None;
    }
    let closed = pts[0] == pts[n];
    let mut lengths: Vec<f64> = (0..n)
        .map(|i| ((pts[i + 1][0] - pts[i][0]).powi(2) + (pts[i + 1][1] - pts[i][1]).powi(2)).sqrt())
        .collect();
    lengths.sort_by(|a, b| a.total_cmp(b));
    let cell = (2.0 * lengths[n / 2]).max(1e-12);
    let key = |x: f64| (x / cell).floor() as i64;
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for i in 0..n {
        let (a, b) = (pts[i], pts[i + 1]);
        for gx in key(a[0].min(b[0]))..=key(a[0].max(b[0])) {
            for gy in key(a[1].min(b[1]))..=key(a[1].max(b[1])) {
                grid.entry((gx, gy)).or_default().push(i);
            }
        }
    }
    let adjacent = |i: usize, j: usize| j == i + 1 || (closed && i == 0 && j == n - 1);
    let mut best: Option<(usize, usize)> = None;
    for bucket in grid.values() {
        for (p, &i) in bucket.iter().enumerate() {
            for &j in &bucket[p + 1..] {
                let (i, j) = if i < j { (i, j) } else { (j, i) };
                if i == j || adjacent(i, j) {
                    continue;
                }
                if segments_meet(pts[i], pts[i + 1], pts[j], pts[j + 1]) && best.map_or(true, |b| (i, j) < b) {
                    best = Some((i, j));
                }
            }
        }
    }
    best
}

/// `|∫ χ_{D2}(x) x' dt| <= ½ Length(∂D2)` for a closed Jordan curve.
///
/// The curve must be closed; a self-intersection yields `NOT_SIMPLE` unless
/// `allow_non_simple`, in which case the report carries a flag.
pub fn check_cor_2d<T: Real>(
    curve: &Trajectory<T>,
    d2: &ImplicitDomain<T, 2>,
    h: T,
    allow_non_simple: bool,
) -> Result<BoundReport> {
    let scale = curve
        .states()
        .iter()
        .map(|p| p.max_abs())
        .fold(T::one(), |a, b| a.max(b));
    if curve.closure_gap() > T::lit(1e-6) * scale {
        return Err(FluxError::PreconditionFailed(format!(
            "curve is not closed: gap {}",
            curve.closure_gap()
        )));
    }
    let crossing = find_self_intersection(curve.states());
    if let (Some((first, second)), false) = (crossing, allow_non_simple) {
        return Err(FluxError::NotSimple { first, second });
    }
    let disp = masked_displacement(curve, d2)?;
    let fine = mesh_boundary(d2, h)?;
    let coarse = mesh_boundary(d2, h + h)?;
    let perimeter = fine.total_area().as_f64();
    let perimeter_err = (perimeter - coarse.total_area().as_f64()).abs();
    let lhs = disp.norm().as_f64();
    let disp_err = 10.0 * curve.step_tolerance().as_f64() * scale.as_f64();
    let mut r = BoundReport::new(
        InequalityId::COR_2D,
        format!("cor2d|{}", d2.label()),
        lhs,
        0.5 * perimeter,
        disp_err + 0.5 * perimeter_err,
    )
    .ingredient(
        "masked_displacement",
        lhs,
        disp_err,
        Provenance::Integrator {
            tolerance: curve.step_tolerance().as_f64(),
        },
    )
    .ingredient(
        "perimeter_d2",
        perimeter,
        perimeter_err,
        Provenance::Mesh { resolution: h.as_f64() },
    );
    if crossing.is_some() {
        r = r.flag(Flag::NonSimpleOverride);
    }
    Ok(r)
}

/// One horizon of the minimal-set probe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub horizon: f64,
    /// Masked displacement over the last return lap closed by a chord, or
    /// the accumulated value when the ball was entered at most once.
    pub displacement: [f64; 2],
    pub magnitude: f64,
    /// Sum of all entry-to-exit chords up to the horizon.
    pub accumulated: [f64; 2],
    pub bound: f64,
    pub residence_time: f64,
    pub visits: usize,
    pub lap: Option<[f64; 2]>,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimalSetProbe {
    pub center: [f64; 2],
    pub radius: f64,
    pub rows: Vec<ProbeRow>,
}

impl MinimalSetProbe {
    pub fn residence_growth(&self) -> f64 {
        match (self.rows.first(), self.rows.last()) {
            (Some(a), Some(b)) if a.residence_time > 0.0 => b.residence_time / a.residence_time,
            _ => f64::NAN,
        }
    }
}

fn closest_approach<T: Real>(traj: &Trajectory<T>, t0: T, t1: T, y0: &VecN<T, 2>) -> T {
    // Golden-section search refined from a coarse scan.
    let n = 64;
    let dt = (t1 - t0) / T::from_count(n);
    let mut best = t0;
    let mut best_d = traj.eval(t0).distance(y0);
    for k in 1..=n {
        let t = t0 + dt * T::from_count(k);
        let d = traj.eval(t).distance(y0);
        if d < best_d {
            best = t;
            best_d = d;
        }
    }
    let mut lo = (best - dt).max(t0);
    let mut hi = (best + dt).min(t1);
    let g = T::lit(0.618_033_988_749_894_8);
    for _ in 0..60 {
        let a = hi - (hi - lo) * g;
        let b = lo + (hi - lo) * g;
        if traj.eval(a).distance(y0) < traj.eval(b).distance(y0) {
            hi = b;
        } else {
            lo = a;
        }
    }
    (lo + hi) * T::lit(0.5)
}

/// Displacement into `B(y0, r0)` and residence time at each horizon.
///
/// Each full pass through the ball contributes a chord, so the accumulated
/// displacement of a recurrent orbit grows without bound. The bound holds for
/// the masked integral over a Jordan curve instead: the trajectory between
/// its last two closest approaches to `y0`, closed by the segment joining
/// them. That lap displacement is compared against `π r0`.
pub fn minimal_set_probe<T: Real>(
    field: &VectorField<T, 2>,
    x0: VecN<T, 2>,
    y0: VecN<T, 2>,
    r0: T,
    horizons: &[T],
    tol: T,
) -> Result<MinimalSetProbe> {
    if !(r0 > T::zero()) {
        return Err(FluxError::BadParams("probe radius must be positive".into()));
    }
    if horizons.is_empty() || horizons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(FluxError::BadParams("horizons must increase strictly".into()));
    }
    let t_max = *horizons.last().expect("non-empty");
    let traj = integrate(field, x0, t_max, tol)?;
    let probe_ball = ball(y0, r0)?;
    let bound = std::f64::consts::PI * r0.as_f64();
    let slack = 1e-3_f64.max(10.0 * tol.as_f64());
    let mut rows = Vec::new();
    for &horizon in horizons {
        let part = traj.window(traj.start_time(), horizon)?;
        let arcs = masked_arcs(&part, &probe_ball)?;
        let accumulated = masked_displacement(&part, &probe_ball)?;
        let full: Vec<_> = arcs.iter().filter(|a| a.t_exit < part.end_time()).collect();
        let lap = if full.len() >= 2 {
            let s = closest_approach(&part, full[full.len() - 2].t_entry, full[full.len() - 2].t_exit, &y0);
            let t = closest_approach(&part, full[full.len() - 1].t_entry, full[full.len() - 1].t_exit, &y0);
            let curve = part.window(s, t)?.closed_with_segment();
            Some(masked_displacement(&curve, &probe_ball)?)
        } else {
            None
        };
        let disp = lap.unwrap_or(accumulated);
        let magnitude = disp.norm().as_f64();
        rows.push(ProbeRow {
            horizon: horizon.as_f64(),
            displacement: [disp[0].as_f64(), disp[1].as_f64()],
            magnitude,
            accumulated: [accumulated[0].as_f64(), accumulated[1].as_f64()],
            bound,
            residence_time: residence_time(&arcs).as_f64(),
            visits: arcs.len(),
            lap: lap.map(|v| [v[0].as_f64(), v[1].as_f64()]),
            holds: magnitude <= bound + slack,
        });
    }
    Ok(MinimalSetProbe {
        center: [y0[0].as_f64(), y0[1].as_f64()],
        radius: r0.as_f64(),
        rows,
    })
}

/// A disk drawn on a phase portrait.
#[derive(Clone, Copy, Debug)]
pub struct PortraitBall {
    pub center: [f64; 2],
    pub radius: f64,
}

/// Trajectories with an optional domain outline and probe ball.
pub fn phase_portrait_svg(
    trajectories: &[&Trajectory<f64>],
    outline: Option<&SurfaceMesh<f64, 2>>,
    probe: Option<PortraitBall>,
) -> String {
    let mut min = [f64::INFINITY; 2];
    let mut max = [f64::NEG_INFINITY; 2];
    let mut grow = |p: [f64; 2]| {
        for i in 0..2 {
            min[i] = min[i].min(p[i]);
            max[i] = max[i].max(p[i]);
        }
    };
    for tr in trajectories {
        for s in tr.states() {
            grow([s[0], s[1]]);
        }
    }
    if let Some(m) = outline {
        for v in m.vertices() {
            grow([v[0], v[1]]);
        }
    }
    if let Some(b) = probe {
        grow([b.center[0] - b.radius, b.center[1] - b.radius]);
        grow([b.center[0] + b.radius, b.center[1] + b.radius]);
    }
    if !min[0].is_finite() {
        min = [-1.0, -1.0];
        max = [1.0, 1.0];
    }
    let pad = 0.05 * (max[0] - min[0]).max(max[1] - min[1]).max(1e-9);
    let mut canvas = Canvas::new([min[0] - pad, min[1] - pad], [max[0] + pad, max[1] + pad], 600.0);
    if let Some(m) = outline {
        let d = m.svg_path_data(|v| canvas.to_px(v[0], v[1]));
        canvas.path(&d, "#1f77b4", 1.5);
    }
    if let Some(b) = probe {
        canvas.circle(b.center, b.radius, "none", "#d62728");
    }
    for tr in trajectories {
        let pts: Vec<[f64; 2]> = tr.states().iter().map(|s| [s[0], s[1]]).collect();
        canvas.polyline(&pts, "black", 0.8);
    }
    canvas.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::Verdict;
    use crate::dynamics::masked_quadrature;
    use crate::fields::{field_catalog, FieldKind};
    use crate::geometry::{make_m_cover, ParametricCurve};

    #[test]
    fn detects_crossing_and_overlap() {
        let square = [
            VecN::new2(0.0, 0.0),
            VecN::new2(1.0, 0.0),
            VecN::new2(1.0, 1.0),
            VecN::new2(0.0, 1.0),
            VecN::new2(0.0, 0.0),
        ];
        assert_eq!(find_self_intersection(&square), None);
        let bowtie = [
            VecN::new2(0.0, 0.0),
            VecN::new2(1.0, 1.0),
            VecN::new2(1.0, 0.0),
            VecN::new2(0.0, 1.0),
            VecN::new2(0.0, 0.0),
        ];
        assert_eq!(find_self_intersection(&bowtie), Some((0, 2)));
        let c = ParametricCurve::circle(VecN::zero(), 1.0).unwrap();
        let twice = Trajectory::from_immersed(&make_m_cover(c, 2, 0.0).unwrap(), 64).unwrap();
        assert!(find_self_intersection(twice.states()).is_some());
    }

    #[test]
    fn ellipse_against_offset_disk() {
        let e = ParametricCurve::ellipse(VecN::zero(), 2.0, 1.0).unwrap();
        let tr = Trajectory::from_parametric(&e, 4000).unwrap();
        let d2 = ball(VecN::new2(2.0, 0.0), 1.0).unwrap();
        let r = check_cor_2d(&tr, &d2, 1.0 / 256.0, false).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
        // Intersections: x^2/4 + y^2 = 1 and (x-2)^2 + y^2 = 1 give x = 4/3.
        let y = (1.0f64 - (4.0 / 3.0f64).powi(2) / 4.0).sqrt();
        assert!((r.lhs - 2.0 * y).abs() < 1e-6, "{}", r.lhs);
        let q = masked_quadrature(&tr, &d2, 16);
        assert!((q.norm() - r.lhs).abs() < 1e-3);
    }

    #[test]
    fn curve_inside_is_zero() {
        let c = ParametricCurve::circle(VecN::zero(), 0.5).unwrap();
        let tr = Trajectory::from_parametric(&c, 200).unwrap();
        let r = check_cor_2d(&tr, &ball(VecN::zero(), 2.0).unwrap(), 1.0 / 64.0, false).unwrap();
        assert!(r.lhs < 1e-12);
    }

    #[test]
    fn m_cover_is_not_simple_and_violates_when_allowed() {
        let c = ParametricCurve::circle(VecN::zero(), 1.0).unwrap();
        let cover = make_m_cover(c, 10, 0.01).unwrap();
        let tr = Trajectory::from_immersed(&cover, 400).unwrap();
        let d2 = ball(VecN::new2(0.0, 1.0), 2f64.sqrt()).unwrap();
        let err = check_cor_2d(&tr, &d2, 1.0 / 256.0, false).unwrap_err();
        assert!(matches!(err, FluxError::NotSimple { .. }));
        let r = check_cor_2d(&tr, &d2, 1.0 / 256.0, true).unwrap();
        assert_eq!(r.verdict, Verdict::Violated);
        assert!(r.has_flag(Flag::NonSimpleOverride));
        assert!(!r.is_gating_violation());
    }

    #[test]
    fn probe_on_the_limit_cycle() {
        let f = field_catalog::<f64, 2>(FieldKind::LimitCycle, &[]).unwrap();
        let p = minimal_set_probe(
            &f,
            VecN::new2(0.5, 0.0),
            VecN::new2(1.0, 0.0),
            0.1,
            &[10.0, 50.0, 100.0],
            1e-10,
        )
        .unwrap();
        for row in &p.rows {
            assert!(row.holds, "{row:?}");
        }
        assert!(p.residence_growth() >= 4.0, "{}", p.residence_growth());
    }

    #[test]
    fn probe_far_from_cycle() {
        let f = field_catalog::<f64, 2>(FieldKind::LimitCycle, &[]).unwrap();
        let p = minimal_set_probe(&f, VecN::new2(0.5, 0.0), VecN::new2(3.0, 3.0), 0.1, &[10.0, 20.0], 1e-9).unwrap();
        for row in &p.rows {
            assert_eq!(row.residence_time, 0.0);
            assert_eq!(row.magnitude, 0.0);
        }
    }

    #[test]
    fn probe_at_a_sink() {
        let f = field_catalog::<f64, 2>(FieldKind::Sink, &[]).unwrap();
        let p = minimal_set_probe(&f, VecN::new2(1.0, 0.5), VecN::zero(), 0.1, &[5.0, 10.0], 1e-10).unwrap();
        for row in &p.rows {
            assert_eq!(row.visits, 1);
            assert!(row.magnitude <= 0.1 * (1.0 + 1e-6));
        }
        let entry = (1.25f64).sqrt().ln() - 0.1f64.ln();
        assert!((p.rows[0].residence_time - (5.0 - entry)).abs() < 1e-6);
    }

    #[test]
    fn portrait_svg() {
        let c = ParametricCurve::circle(VecN::zero(), 1.0).unwrap();
        let tr = Trajectory::from_parametric(&c, 32).unwrap();
        let svg = phase_portrait_svg(
            &[&tr],
            None,
            Some(PortraitBall {
                center: [1.0, 0.0],
                radius: 0.1,
            }),
        );
        assert!(svg.contains("<path") && svg.contains("<circle"));
    }
}
