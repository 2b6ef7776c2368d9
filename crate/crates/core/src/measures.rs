//! Area-weighted measures of (point, normal) pairs and ball-localized means.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::unit_ball_volume;
use crate::error::{FluxError, Result};
use crate::geometry::{mesh_boundary, BoundingBox, ImplicitDomain, SurfaceMesh};
use crate::scalar::Real;
use crate::svg::{heat_color, Canvas};
use crate::vector::{VecN, VecSum};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom<T, const D: usize> {
    pub x: VecN<T, D>,
    pub n: VecN<T, D>,
    pub w: T,
}

/// Probability measure on `R^D x S^{D-1}` with one atom per facet.
#[derive(Clone, Debug)]
pub struct EmpiricalMeasure<T, const D: usize> {
    atoms: Vec<Atom<T, D>>,
    total_weight: T,
    source_area: T,
}

/// One atom per facet at its centroid and normal, weighted by area share.
pub fn empirical_measure<T: Real, const D: usize>(mesh: &SurfaceMesh<T, D>) -> Result<EmpiricalMeasure<T, D>> {
    let area = mesh.total_area();
    if mesh.is_empty() || !(area > T::zero()) {
        return Err(FluxError::EmptyMesh);
    }
    let atoms: Vec<Atom<T, D>> = mesh
        .facets()
        .iter()
        .map(|f| Atom {
            x: f.centroid,
            n: f.normal,
            w: f.area / area,
        })
        .collect();
    let total_weight = crate::scalar::compensated_sum(atoms.iter().map(|a| a.w));
    Ok(EmpiricalMeasure {
        atoms,
        total_weight,
        source_area: area,
    })
}

impl<T: Real, const D: usize> EmpiricalMeasure<T, D> {
    pub fn atoms(&self) -> &[Atom<T, D>] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_weight(&self) -> T {
        self.total_weight
    }

    pub fn source_area(&self) -> T {
        self.source_area
    }

    /// `μ(U x V)` for membership predicates on points and normals.
    pub fn mass(&self, in_u: impl Fn(&VecN<T, D>) -> bool, in_v: impl Fn(&VecN<T, D>) -> bool) -> T {
        crate::scalar::compensated_sum(self.atoms.iter().filter(|a| in_u(&a.x) && in_v(&a.n)).map(|a| a.w))
    }

    /// `∫ g(x, n) dμ`.
    pub fn integrate(&self, g: impl Fn(&VecN<T, D>, &VecN<T, D>) -> T) -> T {
        crate::scalar::compensated_sum(self.atoms.iter().map(|a| a.w * g(&a.x, &a.n)))
    }

    /// `∫ n dμ`.
    pub fn mean_normal(&self) -> VecN<T, D> {
        let mut acc = VecSum::default();
        for a in &self.atoms {
            acc.add(&(a.n * a.w));
        }
        acc.value()
    }

    /// `∫_{B(center, r) x S} n dμ`; atoms on the sphere count as inside.
    pub fn ball_mean_normal(&self, center: &VecN<T, D>, r: T) -> VecN<T, D> {
        self.ball_moments(center, r).0
    }

    /// Un-normalized mean and mass of the ball.
    pub fn ball_moments(&self, center: &VecN<T, D>, r: T) -> (VecN<T, D>, T) {
        let mut acc = VecSum::default();
        let mut mass = crate::scalar::CompensatedSum::new();
        for a in &self.atoms {
            if a.x.distance(center) <= r {
                acc.add(&(a.n * a.w));
                mass.add(a.w);
            }
        }
        (acc.value(), mass.value())
    }
}

/// `Area(∂B(r))` in `R^d`.
pub fn sphere_area(d: usize, r: f64) -> f64 {
    d as f64 * unit_ball_volume(d) * r.powi(d as i32 - 1)
}

/// Ball means of one measure over a set of centers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisintegrationEstimate {
    pub dimension: usize,
    pub radius: f64,
    pub source_area: f64,
    pub centers: Vec<Vec<f64>>,
    /// `∫_{B x S} n dμ` per center.
    pub means: Vec<Vec<f64>>,
    /// `μ(B x S)` per center.
    pub masses: Vec<f64>,
    /// Mean divided by mass where the mass is positive.
    pub normalized: Vec<Option<Vec<f64>>>,
    /// `Area(∂B) / (2 Area(source))`.
    pub bound: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl DisintegrationEstimate {
    pub fn magnitudes(&self) -> Vec<f64> {
        self.means.iter().map(|m| norm(m)).collect()
    }

    pub fn max_magnitude(&self) -> f64 {
        self.magnitudes().into_iter().fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let axes = ["x", "y", "z"];
        let mut header = String::new();
        for a in axes.iter().take(self.dimension) {
            header.push_str(&format!("center_{a},"));
        }
        header.push('r');
        for a in axes.iter().take(self.dimension) {
            header.push_str(&format!(",mean_{a}"));
        }
        header.push_str(",magnitude,bound");
        writeln!(out, "{header}")?;
        for (c, m) in self.centers.iter().zip(&self.means) {
            let mut row: Vec<String> = c.iter().map(|v| format!("{v}")).collect();
            row.push(format!("{}", self.radius));
            row.extend(m.iter().map(|v| format!("{v}")));
            row.push(format!("{}", norm(m)));
            row.push(format!("{}", self.bound));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Balls shaded by `|mean| / bound` (planar estimates only).
    pub fn heatmap_svg(&self, outline: Option<&SurfaceMesh<f64, 2>>) -> Result<String> {
        if self.dimension != 2 {
            return Err(FluxError::UnsupportedDimension(self.dimension));
        }
        let r = self.radius;
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for c in &self.centers {
            for i in 0..2 {
                min[i] = min[i].min(c[i] - r);
                max[i] = max[i].max(c[i] + r);
            }
        }
        if let Some(m) = outline {
            for v in m.vertices() {
                for i in 0..2 {
                    min[i] = min[i].min(v[i]);
                    max[i] = max[i].max(v[i]);
                }
            }
        }
        let pad = 0.05 * (max[0] - min[0]).max(max[1] - min[1]);
        let mut canvas = Canvas::new([min[0] - pad, min[1] - pad], [max[0] + pad, max[1] + pad], 600.0);
        for (c, mag) in self.centers.iter().zip(self.magnitudes()) {
            let t = if self.bound > 0.0 { mag / self.bound } else { 0.0 };
            canvas.circle([c[0], c[1]], r, &heat_color(t), "#888888");
        }
        if let Some(m) = outline {
            let d = m.svg_path_data(|v| canvas.to_px(v[0], v[1]));
            canvas.path(&d, "black", 1.0);
        }
        Ok(canvas.finish())
    }
}

/// Ball means of `measure` at every center.
pub fn disintegration_estimate<T: Real, const D: usize>(
    measure: &EmpiricalMeasure<T, D>,
    centers: &[VecN<T, D>],
    r: T,
) -> Result<DisintegrationEstimate> {
    if !(r > T::zero()) {
        return Err(FluxError::BadParams(format!("ball radius must be positive, got {r}")));
    }
    let moments: Vec<(VecN<T, D>, T)> = centers.par_iter().map(|c| measure.ball_moments(c, r)).collect();
    let to_vec = |v: &VecN<T, D>| v.to_f64().to_vec();
    Ok(DisintegrationEstimate {
        dimension: D,
        radius: r.as_f64(),
        source_area: measure.source_area().as_f64(),
        centers: centers.iter().map(to_vec).collect(),
        means: moments.iter().map(|(m, _)| to_vec(m)).collect(),
        masses: moments.iter().map(|(_, w)| w.as_f64()).collect(),
        normalized: moments
            .iter()
            .map(|(m, w)| (*w > T::zero()).then(|| to_vec(&(*m * (T::one() / *w)))))
            .collect(),
        bound: sphere_area(D, r.as_f64()) / (2.0 * measure.source_area().as_f64()),
    })
}

/// `k^D` centers at the cell midpoints of `bbox` split `k` ways per axis.
pub fn ball_grid<T: Real, const D: usize>(bbox: &BoundingBox<T, D>, k: usize) -> Vec<VecN<T, D>> {
    let total = k.pow(D as u32);
    (0..total)
        .map(|mut idx| {
            let u = VecN::from_fn(|_| {
                let i = idx % k;
                idx /= k;
                (T::from_count(i) + T::lit(0.5)) / T::from_count(k)
            });
            bbox.lerp(&u)
        })
        .collect()
}

/// Per-domain ball means with the trend across the sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceLimitStudy {
    pub labels: Vec<String>,
    pub areas: Vec<f64>,
    pub estimates: Vec<DisintegrationEstimate>,
    pub max_means: Vec<f64>,
    pub bounds: Vec<f64>,
    /// Every ball mean sits under its bound plus `tolerance`.
    pub dominated: bool,
    /// Both the max ball mean and the bound shrink along the sequence.
    pub decaying: bool,
    pub tolerance: f64,
}

impl SurfaceLimitStudy {
    /// `max_means[i] / max_means[i + 1]`.
    pub fn decay_ratios(&self) -> Vec<f64> {
        self.max_means.windows(2).map(|w| w[0] / w[1]).collect()
    }
}

/// Meshes each domain at `resolution(i)` and evaluates ball means at
/// `centers`. Surface areas must increase strictly along the sequence.
pub fn surface_limit_study<T: Real, const D: usize>(
    domains: &[ImplicitDomain<T, D>],
    centers: &[VecN<T, D>],
    r: T,
    resolution: impl Fn(usize) -> T,
) -> Result<SurfaceLimitStudy> {
    let mut areas = Vec::new();
    let mut estimates = Vec::new();
    for (i, dom) in domains.iter().enumerate() {
        let h = resolution(i);
        let mesh = mesh_boundary(dom, h)?;
        let measure = empirical_measure(&mesh)?;
        areas.push(measure.source_area().as_f64());
        estimates.push(disintegration_estimate(&measure, centers, r)?);
    }
    if areas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(FluxError::PreconditionFailed(format!(
            "surface areas must increase strictly along the sequence, got {areas:?}"
        )));
    }
    let max_means: Vec<f64> = estimates.iter().map(|e| e.max_magnitude()).collect();
    let bounds: Vec<f64> = estimates.iter().map(|e| e.bound).collect();
    // Two facets of area per ball, normalised by the surface area.
    let tolerance = (0..domains.len())
        .map(|i| 2.0 * resolution(i).as_f64().powi(D as i32 - 1) / areas[i])
        .fold(0.0, f64::max);
    let dominated = estimates
        .iter()
        .all(|e| e.magnitudes().iter().all(|m| *m <= e.bound + tolerance));
    let shrink = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    Ok(SurfaceLimitStudy {
        labels: domains.iter().map(|d| d.label().to_string()).collect(),
        areas,
        decaying: shrink(&max_means) && shrink(&bounds),
        estimates,
        max_means,
        bounds,
        dominated,
        tolerance,
    })
}
