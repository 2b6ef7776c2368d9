use crate::error::{FluxError, Result};
use crate::geometry::ImplicitDomain;
use crate::scalar::{CompensatedSum, Real};
use crate::vector::{VecN, VecSum};

use super::{Hermite, Trajectory};

const MAX_SPLIT_DEPTH: usize = 40;
const MAX_BISECTIONS: usize = 200;
const CROSSING_TOL: f64 = 1e-9;

/// A maximal time interval spent in the closed domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InsideArc<T> {
    pub t_entry: T,
    pub t_exit: T,
    pub entry: VecN<T, 2>,
    pub exit: VecN<T, 2>,
}

struct Crossing<T> {
    s: T,
    point: VecN<T, 2>,
}

struct Scanner<'a, T> {
    seg: Hermite<T>,
    domain: &'a ImplicitDomain<T, 2>,
    speed: T,
    lipschitz: T,
}

impl<T: Real> Scanner<'_, T> {
    fn inside(&self, phi: T) -> bool {
        phi <= T::zero()
    }

    fn scan(&self, s0: T, s1: T, phi0: T, phi1: T, depth: usize, out: &mut Vec<Crossing<T>>) -> Result<()> {
        let differ = self.inside(phi0) != self.inside(phi1);
        let separated = phi0.abs() + phi1.abs() > self.lipschitz * self.speed * (s1 - s0);
        if separated || depth >= MAX_SPLIT_DEPTH {
            if differ {
                out.push(self.bisect(s0, s1, phi0)?);
            }
            return Ok(());
        }
        let sm = (s0 + s1) * T::lit(0.5);
        let phim = self.domain.phi(&self.seg.eval(sm));
        self.scan(s0, sm, phi0, phim, depth + 1, out)?;
        self.scan(sm, s1, phim, phi1, depth + 1, out)
    }

    fn bisect(&self, mut lo: T, mut hi: T, phi_lo: T) -> Result<Crossing<T>> {
        let lo_inside = self.inside(phi_lo);
        let tol = T::lit(CROSSING_TOL);
        for _ in 0..MAX_BISECTIONS {
            let mid = (lo + hi) * T::lit(0.5);
            let p = self.seg.eval(mid);
            let phi = self.domain.phi(&p);
            if phi.abs() <= tol {
                return Ok(Crossing { s: mid, point: p });
            }
            if self.inside(phi) == lo_inside {
                lo = mid;
            } else {
                hi = mid;
            }
            if !(hi > lo) {
                break;
            }
        }
        Err(FluxError::CrossingUnresolved { time: lo.as_f64() })
    }
}

/// Entry and exit points of the trajectory for the closed domain, located
/// on the dense output to `|phi| <= 1e-9`.
pub fn masked_arcs<T: Real>(traj: &Trajectory<T>, domain: &ImplicitDomain<T, 2>) -> Result<Vec<InsideArc<T>>> {
    let times = traj.times();
    let states = traj.states();
    let phis: Vec<T> = states.iter().map(|x| domain.phi(x)).collect();
    let lipschitz = domain.lipschitz_hint().max(T::one());
    let mut arcs = Vec::new();
    let mut open: Option<(T, VecN<T, 2>)> = (phis[0] <= T::zero()).then(|| (times[0], states[0]));
    let mut crossings = Vec::new();
    for i in 0..times.len() - 1 {
        let seg = traj.segment(i);
        let speed = seg.b.norm() + seg.c.norm() + seg.e.norm() * T::lit(0.75);
        let scanner = Scanner {
            seg,
            domain,
            speed,
            lipschitz,
        };
        crossings.clear();
        scanner.scan(T::zero(), T::one(), phis[i], phis[i + 1], 0, &mut crossings)?;
        let h = times[i + 1] - times[i];
        for c in &crossings {
            let t = times[i] + c.s * h;
            match open.take() {
                Some((t0, p0)) => arcs.push(InsideArc {
                    t_entry: t0,
                    t_exit: t,
                    entry: p0,
                    exit: c.point,
                }),
                None => open = Some((t, c.point)),
            }
        }
    }
    if let Some((t0, p0)) = open {
        arcs.push(InsideArc {
            t_entry: t0,
            t_exit: traj.end_time(),
            entry: p0,
            exit: traj.final_state(),
        });
    }
    Ok(arcs)
}

/// Sum of `exit - entry` over sub-arcs inside the domain, which is
/// `∫ χ_D(x(t)) x'(t) dt` for the dense output.
pub fn masked_displacement<T: Real>(traj: &Trajectory<T>, domain: &ImplicitDomain<T, 2>) -> Result<VecN<T, 2>> {
    let mut terms: Vec<VecN<T, 2>> = masked_arcs(traj, domain)?.iter().map(|a| a.exit - a.entry).collect();
    // Magnitude order, independent of traversal direction.
    terms.sort_by(|a, b| {
        let key = |v: &VecN<T, 2>| (v[0].abs(), v[1].abs());
        key(a).partial_cmp(&key(b)).unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut acc = VecSum::default();
    for t in &terms {
        acc.add(t);
    }
    Ok(acc.value())
}

/// Time spent inside the domain.
pub(crate) fn residence_time<T: Real>(arcs: &[InsideArc<T>]) -> T {
    let mut acc = CompensatedSum::new();
    for a in arcs {
        acc.add(a.t_exit - a.t_entry);
    }
    acc.value()
}

const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_08),
    (0.906_179_845_938_664, 0.236_926_885_056_189_08),
];

/// `∫ χ_D(x(t)) x'(t) dt` by Gauss–Legendre on the dense derivative, each
/// step split into `pieces` equal parts and the indicator taken at the
/// middle of each part.
pub fn masked_quadrature<T: Real>(traj: &Trajectory<T>, domain: &ImplicitDomain<T, 2>, pieces: usize) -> VecN<T, 2> {
    let pieces = pieces.max(1);
    let mut acc = VecSum::default();
    for i in 0..traj.len() - 1 {
        let seg = traj.segment(i);
        let w = T::one() / T::from_count(pieces);
        for p in 0..pieces {
            let s0 = T::from_count(p) * w;
            let mid = s0 + w * T::lit(0.5);
            if domain.phi(&seg.eval(mid)) > T::zero() {
                continue;
            }
            for (x, wt) in GL5 {
                acc.add(&(seg.derivative(mid + w * T::lit(0.5 * x)) * (w * T::lit(0.5 * wt))));
            }
        }
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::integrate;
    use crate::fields::{field_catalog, FieldKind};
    use crate::geometry::{ball, ParametricCurve};
    use std::f64::consts::PI;

    fn unit_orbit() -> Trajectory<f64> {
        let f = field_catalog::<f64, 2>(FieldKind::Rotation, &[1.0]).unwrap();
        integrate(&f, VecN::new2(1.0, 0.0), 2.0 * PI, 1e-11).unwrap()
    }

    #[test]
    fn closed_orbit_inside_large_disk() {
        let d = masked_displacement(&unit_orbit(), &ball(VecN::zero(), 5.0).unwrap()).unwrap();
        assert!(d.norm() < 1e-6);
    }

    #[test]
    fn chord_through_offset_disk() {
        let d2 = ball(VecN::new2(1.0, 0.0), 0.5).unwrap();
        let tr = unit_orbit();
        let d = masked_displacement(&tr, &d2).unwrap();
        // Circles |x| = 1 and |x - e1| = 1/2 meet at x = 7/8.
        let y = (1.0f64 - 0.875 * 0.875).sqrt();
        assert!((d.norm() - 2.0 * y).abs() < 1e-4, "{}", d.norm());
        assert!((d.norm() - 0.9682).abs() < 1e-4);
        assert!(d.norm() <= PI / 2.0);
        let q = masked_quadrature(&tr, &d2, 64);
        assert!(q.distance(&d) < 1e-2);
    }

    #[test]
    fn never_entering_is_zero() {
        let d = masked_displacement(&unit_orbit(), &ball(VecN::new2(5.0, 5.0), 1.0).unwrap()).unwrap();
        assert_eq!(d, VecN::zero());
    }

    #[test]
    fn reversal_negates_exactly() {
        let tr = unit_orbit();
        let d2 = ball(VecN::new2(0.7, 0.4), 0.6).unwrap();
        let fwd = masked_displacement(&tr, &d2).unwrap();
        let back = masked_displacement(&tr.reversed(), &d2).unwrap();
        assert_eq!(fwd, -back);
    }

    #[test]
    fn arcs_and_residence() {
        let c = ParametricCurve::circle(VecN::zero(), 1.0).unwrap();
        let tr = Trajectory::from_parametric(&c, 512).unwrap();
        let arcs = masked_arcs(&tr, &ball(VecN::new2(1.0, 0.0), 0.5).unwrap()).unwrap();
        assert_eq!(arcs.len(), 2);
        let angle = 2.0 * (1.0f64 - 0.875 * 0.875).sqrt().atan2(0.875);
        assert!((residence_time(&arcs) - angle).abs() < 1e-6);
    }
}
