use std::fmt::Write as _;
use std::io::Write;

use crate::error::Result;
use crate::scalar::{compensated_sum, Real};
use crate::vector::VecN;

/// One boundary element: a segment in the plane, a triangle in space.
///
/// A facet in `D` dimensions is a `(D-1)`-simplex with `D` vertices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Facet<T, const D: usize> {
    pub vertices: [VecN<T, D>; D],
    pub area: T,
    pub normal: VecN<T, D>,
    pub centroid: VecN<T, D>,
}

/// Measure and unit normal of a `(D-1)`-simplex; `None` when degenerate.
pub(crate) fn simplex_area_normal<T: Real, const D: usize>(v: &[VecN<T, D>; D]) -> Option<(T, VecN<T, D>)> {
    let (area, raw) = match D {
        2 => {
            let e = v[1] - v[0];
            (e.norm(), VecN::from_fn(|i| if i == 0 { e[1] } else { -e[0] }))
        }
        3 => {
            let a = v[1] - v[0];
            let b = v[2] - v[0];
            let c = VecN::<T, D>::from_fn(|i| {
                let (j, k) = ((i + 1) % 3, (i + 2) % 3);
                a[j] * b[k] - a[k] * b[j]
            });
            (c.norm() * T::lit(0.5), c)
        }
        _ => return None,
    };
    let normal = raw.normalized()?;
    (area > T::zero()).then_some((area, normal))
}

impl<T: Real, const D: usize> Facet<T, D> {
    /// Builds a facet whose normal is oriented along `outward_hint`.
    pub fn oriented(vertices: [VecN<T, D>; D], outward_hint: &VecN<T, D>) -> Option<Self> {
        let (area, mut normal) = simplex_area_normal(&vertices)?;
        if normal.dot(outward_hint) < T::zero() {
            normal = -normal;
        }
        Some(Self::with_normal(vertices, area, normal))
    }

    pub(crate) fn with_normal(vertices: [VecN<T, D>; D], area: T, normal: VecN<T, D>) -> Self {
        let mut c = VecN::zero();
        for v in &vertices {
            c += *v;
        }
        let centroid = c * (T::one() / T::from_count(D));
        Self {
            vertices,
            area,
            normal,
            centroid,
        }
    }

    /// Midpoint subdivision: 2 segments in the plane, 4 triangles in space.
    pub fn subdivide(&self) -> Vec<Self> {
        let v = &self.vertices;
        let child_area = self.area / T::from_count(1 << (D - 1));
        let mk = |vs: [VecN<T, D>; D]| Self::with_normal(vs, child_area, self.normal);
        match D {
            2 => {
                let m = v[0].midpoint(&v[1]);
                vec![
                    mk(std::array::from_fn(|i| if i == 0 { v[0] } else { m })),
                    mk(std::array::from_fn(|i| if i == 0 { m } else { v[1] })),
                ]
            }
            3 => {
                let m01 = v[0].midpoint(&v[1]);
                let m12 = v[1].midpoint(&v[2]);
                let m20 = v[2].midpoint(&v[0]);
                let tri = |a, b, c| -> [VecN<T, D>; D] {
                    let arr = [a, b, c];
                    std::array::from_fn(|i| arr[i])
                };
                vec![
                    mk(tri(v[0], m01, m20)),
                    mk(tri(m01, v[1], m12)),
                    mk(tri(m20, m12, v[2])),
                    mk(tri(m01, m12, m20)),
                ]
            }
            _ => vec![*self],
        }
    }

    /// Longest distance from the centroid to a vertex.
    pub fn radius(&self) -> T {
        self.vertices
            .iter()
            .map(|v| v.distance(&self.centroid))
            .fold(T::zero(), T::max)
    }
}

/// A discretized hypersurface carrying per-facet areas and unit normals.
#[derive(Clone, Debug)]
pub struct SurfaceMesh<T, const D: usize> {
    facets: Vec<Facet<T, D>>,
    total_area: T,
    /// Area whose inside/outside classification is uncertain after clipping.
    uncertain_area: T,
    resolution: Option<T>,
    source_label: String,
}

impl<T: Real, const D: usize> SurfaceMesh<T, D> {
    pub fn from_facets(source_label: impl Into<String>, facets: Vec<Facet<T, D>>) -> Self {
        let total_area = compensated_sum(facets.iter().map(|f| f.area));
        Self {
            facets,
            total_area,
            uncertain_area: T::zero(),
            resolution: None,
            source_label: source_label.into(),
        }
    }

    pub(crate) fn with_resolution(mut self, h: T) -> Self {
        self.resolution = Some(h);
        self
    }

    pub(crate) fn with_uncertain_area(mut self, a: T) -> Self {
        self.uncertain_area = a;
        self
    }

    pub fn empty(source_label: impl Into<String>) -> Self {
        Self::from_facets(source_label, Vec::new())
    }

    pub fn facets(&self) -> &[Facet<T, D>] {
        &self.facets
    }

    pub fn len(&self) -> usize {
        self.facets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facets.is_empty()
    }

    pub fn dimension(&self) -> usize {
        D
    }

    pub fn total_area(&self) -> T {
        self.total_area
    }

    pub fn uncertain_area(&self) -> T {
        self.uncertain_area
    }

    pub fn resolution(&self) -> Option<T> {
        self.resolution
    }

    pub fn source_label(&self) -> &str {
        &self.source_label
    }

    pub fn vertices(&self) -> impl Iterator<Item = &VecN<T, D>> + '_ {
        self.facets.iter().flat_map(|f| f.vertices.iter())
    }

    /// Reverses every normal; used for the complement of a domain.
    pub fn flipped(&self) -> Self {
        let facets = self
            .facets
            .iter()
            .map(|f| Facet {
                normal: -f.normal,
                ..*f
            })
            .collect();
        Self { facets, ..self.clone() }
    }

    /// Applies `x -> factor * x`; areas scale by `factor^(D-1)`.
    pub fn scaled(&self, factor: T) -> Self {
        let area_factor = factor.powi(D as i32 - 1);
        let facets: Vec<_> = self
            .facets
            .iter()
            .map(|f| Facet::with_normal(f.vertices.map(|v| v * factor), f.area * area_factor, f.normal))
            .collect();
        let mut out = Self::from_facets(self.source_label.clone(), facets);
        out.uncertain_area = self.uncertain_area * area_factor;
        out.resolution = self.resolution.map(|h| h * factor);
        out
    }

    /// Writes `facet_id, v0_x, v0_y[, v0_z], ..., area, n_x, n_y[, n_z]`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let axes = ["x", "y", "z"];
        let mut header = String::from("facet_id");
        for v in 0..D {
            for a in axes.iter().take(D) {
                let _ = write!(header, ",v{v}_{a}");
            }
        }
        header.push_str(",area");
        for a in axes.iter().take(D) {
            let _ = write!(header, ",n_{a}");
        }
        writeln!(out, "{header}")?;
        for (id, f) in self.facets.iter().enumerate() {
            let mut row = id.to_string();
            for v in &f.vertices {
                for c in v.0.iter() {
                    let _ = write!(row, ",{}", c.as_f64());
                }
            }
            let _ = write!(row, ",{}", f.area.as_f64());
            for c in f.normal.0.iter() {
                let _ = write!(row, ",{}", c.as_f64());
            }
            writeln!(out, "{row}")?;
        }
        Ok(())
    }

    /// Parses the CSV layout produced by [`SurfaceMesh::write_csv`].
    pub fn read_csv(source_label: impl Into<String>, text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| crate::error::FluxError::BadParams(format!("mesh csv line {line}: {msg}"));
        let mut facets = Vec::new();
        for (ln, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .skip(1)
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad(ln + 1, "non-numeric field"))?;
            if vals.len() != D * D + 1 + D {
                return Err(bad(ln + 1, "wrong column count"));
            }
            let vertices: [VecN<T, D>; D] = std::array::from_fn(|v| VecN::from_fn(|c| T::lit(vals[v * D + c])));
            let area = T::lit(vals[D * D]);
            let normal = VecN::from_fn(|c| T::lit(vals[D * D + 1 + c]));
            facets.push(Facet::with_normal(vertices, area, normal));
        }
        Ok(Self::from_facets(source_label, facets))
    }
}

impl<T: Real> SurfaceMesh<T, 2> {
    /// SVG path data for the segments of a planar mesh.
    pub fn svg_path_data(&self, to_px: impl Fn(&VecN<T, 2>) -> (f64, f64)) -> String {
        let mut d = String::new();
        for f in &self.facets {
            let (x0, y0) = to_px(&f.vertices[0]);
            let (x1, y1) = to_px(&f.vertices[1]);
            let _ = write!(d, "M{x0:.3} {y0:.3}L{x1:.3} {y1:.3}");
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_normal_and_area() {
        let v = [
            VecN::new3(0.0, 0.0, 0.0),
            VecN::new3(1.0, 0.0, 0.0),
            VecN::new3(0.0, 1.0, 0.0),
        ];
        let f = Facet::oriented(v, &VecN::new3(0.0, 0.0, -1.0)).unwrap();
        assert_eq!(f.area, 0.5);
        assert_eq!(f.normal, VecN::new3(0.0, 0.0, -1.0));
        let kids = f.subdivide();
        assert_eq!(kids.len(), 4);
        let sum: f64 = kids.iter().map(|k| k.area).sum();
        assert!((sum - 0.5).abs() < 1e-15);
    }

    #[test]
    fn degenerate_segment_is_rejected() {
        let p = VecN::new2(1.0, 1.0);
        assert!(Facet::oriented([p, p], &VecN::new2(0.0, 1.0)).is_none());
    }

    #[test]
    fn csv_round_trip_preserves_facets() {
        let f = Facet::oriented([VecN::new2(0.0, 0.0), VecN::new2(2.0, 0.0)], &VecN::new2(0.0, -1.0)).unwrap();
        let mesh = SurfaceMesh::from_facets("seg", vec![f]);
        let mut buf = Vec::new();
        mesh.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("facet_id,v0_x,v0_y,v1_x,v1_y,area,n_x,n_y"));
        let back = SurfaceMesh::<f64, 2>::read_csv("seg", &text).unwrap();
        assert_eq!(back.facets(), mesh.facets());
    }
}
