use rayon::prelude::*;

use crate::scalar::{compensated_sum, Real};

use super::mesh::{Facet, SurfaceMesh};
use super::ImplicitDomain;

/// Keeps the part of `surface` lying in the closed domain `clip`.
///
/// A facet that may straddle `{phi = 0}` (its centroid value is within
/// `lipschitz * radius` of zero) is split by midpoint subdivision up to
/// `refine_depth` times; leaves are then classified by their centroid, with
/// boundary ties counted as inside. A facet touching `{phi = 0}` whose
/// vertices all fall on one side, ties included, is classified whole. Leaves whose vertices still disagree in
/// sign contribute to the mesh's uncertain area.
pub fn clip_mesh<T: Real, const D: usize>(
    surface: &SurfaceMesh<T, D>,
    clip: &ImplicitDomain<T, D>,
    refine_depth: usize,
) -> SurfaceMesh<T, D> {
    let pieces: Vec<(Vec<Facet<T, D>>, T)> = surface
        .facets()
        .par_iter()
        .map(|f| {
            let mut kept = Vec::new();
            let mut uncertain = T::zero();
            classify(f, clip, refine_depth, &mut kept, &mut uncertain);
            (kept, uncertain)
        })
        .collect();
    let uncertain = compensated_sum(pieces.iter().map(|p| p.1));
    let facets: Vec<_> = pieces.into_iter().flat_map(|p| p.0).collect();
    let mut out = SurfaceMesh::from_facets(format!("{}&{}", surface.source_label(), clip.label()), facets)
        .with_uncertain_area(surface.uncertain_area() + uncertain);
    if let Some(h) = surface.resolution() {
        out = out.with_resolution(h);
    }
    out
}

fn classify<T: Real, const D: usize>(
    f: &Facet<T, D>,
    clip: &ImplicitDomain<T, D>,
    depth: usize,
    kept: &mut Vec<Facet<T, D>>,
    uncertain: &mut T,
) {
    let c = clip.phi(&f.centroid);
    let inside = c <= clip.band();
    let reach = clip.lipschitz_hint() * f.radius();
    if c.abs() > reach {
        if inside {
            kept.push(*f);
        }
        return;
    }
    let tie = T::lit(1e-12) * (T::one() + f.centroid.norm());
    let values = f.vertices.map(|v| clip.phi(&v));
    let touching = c.abs() <= tie || values.iter().any(|v| v.abs() <= tie);
    if touching && values.iter().all(|v| (*v <= tie) == (c <= tie)) {
        if c <= tie {
            kept.push(*f);
        }
        return;
    }
    if depth == 0 {
        let signs = f.vertices.iter().map(|v| clip.phi(v) <= clip.band());
        let mixed = signs.clone().any(|s| s != inside);
        if mixed {
            *uncertain += f.area;
        }
        if inside {
            kept.push(*f);
        }
        return;
    }
    for child in f.subdivide() {
        classify(&child, clip, depth - 1, kept, uncertain);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ball, halfspace, mesh_boundary, BoundingBox};
    use crate::vector::VecN;
    use std::f64::consts::PI;

    fn region() -> BoundingBox<f64, 2> {
        BoundingBox::centered(VecN::zero(), 3.0)
    }

    #[test]
    fn half_circle_length() {
        let circle = mesh_boundary(&ball(VecN::<f64, 2>::zero(), 1.0).unwrap(), 0.005).unwrap();
        let upper = halfspace(VecN::new2(0.0, -1.0), 0.0, region()).unwrap();
        let clipped = clip_mesh(&circle, &upper, 8);
        assert!((clipped.total_area() - PI).abs() < 1e-3, "{}", clipped.total_area());
    }

    #[test]
    fn chord_through_centre() {
        let line = mesh_boundary(&halfspace(VecN::new2(0.0, -1.0), 0.0, region()).unwrap(), 0.01).unwrap();
        let disk = ball(VecN::zero(), 1.0).unwrap();
        let chord = clip_mesh(&line, &disk, 10);
        assert!((chord.total_area() - 2.0).abs() < 1e-3, "{}", chord.total_area());
    }

    #[test]
    fn coincident_face_is_kept_without_refinement() {
        let square = crate::geometry::rounded_box(VecN::<f64, 3>::zero(), VecN::from_fn(|_| 0.5), 0.1).unwrap();
        let mesh = mesh_boundary(&square, 1.0 / 16.0).unwrap();
        let cut = halfspace(
            VecN::from_fn(|i| if i == 0 { -1.0 } else { 0.0 }),
            0.5,
            BoundingBox::centered(VecN::zero(), 2.0),
        )
        .unwrap();
        let clipped = clip_mesh(&mesh, &cut, 8);
        assert!((clipped.total_area() - mesh.total_area()).abs() < 1e-12);
        assert!(clipped.len() < 4 * mesh.len(), "{} {}", clipped.len(), mesh.len());
    }

    #[test]
    fn disjoint_clip_is_empty() {
        let circle = mesh_boundary(&ball(VecN::<f64, 2>::zero(), 2.0).unwrap(), 0.02).unwrap();
        let far = ball(VecN::new2(5.0, 0.0), 1.0).unwrap();
        let clipped = clip_mesh(&circle, &far, 6);
        assert!(clipped.is_empty());
        assert_eq!(clipped.total_area(), 0.0);
    }

    #[test]
    fn superset_clip_is_identity() {
        let circle = mesh_boundary(&ball(VecN::<f64, 2>::zero(), 1.0).unwrap(), 0.02).unwrap();
        let big = ball(VecN::zero(), 10.0).unwrap();
        let clipped = clip_mesh(&circle, &big, 6);
        assert_eq!(clipped.facets(), circle.facets());
    }
}
