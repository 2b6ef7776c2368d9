//! Boundary extraction on a uniform grid: marching squares in the plane and
//! marching tetrahedra (six Kuhn tetrahedra per cube) in space.

use rayon::prelude::*;

use crate::error::{FluxError, Result};
use crate::scalar::Real;
use crate::vector::VecN;

use super::mesh::{Facet, SurfaceMesh};
use super::ImplicitDomain;

/// Grid controls for [`mesh_boundary_with`].
#[derive(Clone, Copy, Debug)]
pub struct MeshOptions<T> {
    /// Target grid pitch `h`.
    pub resolution: T,
    /// Extra grid cells added around the bounding box on every side.
    pub padding_cells: usize,
    /// Largest tolerated number of grid edges hiding two crossings.
    /// `None` picks `max(4, crossing_cells / 50)`.
    pub max_double_crossings: Option<usize>,
}

impl<T: Real> MeshOptions<T> {
    pub fn new(resolution: T) -> Self {
        Self {
            resolution,
            padding_cells: 2,
            max_double_crossings: None,
        }
    }
}

/// Meshes `{phi = 0}` at grid pitch `h` with default options.
pub fn mesh_boundary<T: Real, const D: usize>(domain: &ImplicitDomain<T, D>, h: T) -> Result<SurfaceMesh<T, D>> {
    mesh_boundary_with(domain, &MeshOptions::new(h))
}

struct Grid<T> {
    origin: [T; 3],
    pitch: [T; 3],
    nodes: [usize; 3],
    values: Vec<T>,
    /// Facets smaller than this carry no reliable normal and are dropped.
    min_area: T,
}

impl<T: Real> Grid<T> {
    #[inline]
    fn flat(&self, n: [usize; 3]) -> usize {
        (n[2] * self.nodes[1] + n[1]) * self.nodes[0] + n[0]
    }

    #[inline]
    fn value(&self, n: [usize; 3]) -> T {
        self.values[self.flat(n)]
    }

    #[inline]
    fn position(&self, n: [usize; 3]) -> [T; 3] {
        std::array::from_fn(|i| self.origin[i] + T::from_count(n[i]) * self.pitch[i])
    }

    /// Linear zero crossing on the edge `a-b`, computed from the endpoint with
    /// the smaller index so neighbouring cells agree bit for bit.
    fn crossing(&self, a: [usize; 3], b: [usize; 3]) -> [T; 3] {
        let (a, b) = if self.flat(a) <= self.flat(b) { (a, b) } else { (b, a) };
        let (fa, fb) = (self.value(a), self.value(b));
        let t = fa / (fa - fb);
        let (pa, pb) = (self.position(a), self.position(b));
        std::array::from_fn(|i| pa[i] + t * (pb[i] - pa[i]))
    }
}

#[inline]
fn inside<T: Real>(v: T) -> bool {
    v < T::zero()
}

fn to_vec<T: Real, const D: usize>(p: &[T; 3]) -> VecN<T, D> {
    VecN::from_fn(|i| p[i])
}

fn make_facet<T: Real, const D: usize>(pts: &[[T; 3]], hint: [T; 3], min_area: T) -> Option<Facet<T, D>> {
    let verts: [VecN<T, D>; D] = std::array::from_fn(|k| to_vec(&pts[k]));
    Facet::oriented(verts, &to_vec(&hint)).filter(|f| f.area > min_area)
}

/// Meshes `{phi = 0}` inside the (padded) bounding box of `domain`.
///
/// Facet normals point towards `{phi > 0}`.
pub fn mesh_boundary_with<T: Real, const D: usize>(
    domain: &ImplicitDomain<T, D>,
    opts: &MeshOptions<T>,
) -> Result<SurfaceMesh<T, D>> {
    if D != 2 && D != 3 {
        return Err(FluxError::UnsupportedDimension(D));
    }
    let h = opts.resolution;
    if !(h > T::zero()) || !h.is_finite() {
        return Err(FluxError::BadParams(format!(
            "mesh resolution must be positive, got {h}"
        )));
    }
    let bbox = domain.bounding_box();
    if bbox.is_empty() || !bbox.min.is_finite() || !bbox.max.is_finite() {
        return Err(FluxError::BadParams(format!(
            "bounding box of `{}` is not finite",
            domain.label()
        )));
    }
    let padded = bbox.expanded(h * T::from_count(opts.padding_cells));
    let mut origin = [T::zero(); 3];
    let mut pitch = [T::one(); 3];
    let mut nodes = [1usize; 3];
    for i in 0..D {
        let extent = padded.max[i] - padded.min[i];
        let cells = (extent / h).ceil().to_usize().unwrap_or(1).max(1);
        origin[i] = padded.min[i];
        pitch[i] = extent / T::from_count(cells);
        nodes[i] = cells + 1;
    }
    let total = nodes[0] * nodes[1] * nodes[2];
    if total > 400_000_000 {
        return Err(FluxError::BadParams(format!(
            "grid of {total} nodes is too large; raise the resolution"
        )));
    }

    let phi = domain.level_fn();
    let values: Vec<T> = (0..nodes[1] * nodes[2])
        .into_par_iter()
        .flat_map_iter(|row| {
            let (j, k) = (row % nodes[1], row / nodes[1]);
            let phi = &phi;
            (0..nodes[0]).map(move |i| {
                let p = [
                    origin[0] + T::from_count(i) * pitch[0],
                    origin[1] + T::from_count(j) * pitch[1],
                    origin[2] + T::from_count(k) * pitch[2],
                ];
                phi(&to_vec::<T, D>(&p))
            })
        })
        .collect();
    let grid = Grid {
        origin,
        pitch,
        nodes,
        values,
        min_area: T::epsilon() * h.powi(D as i32 - 1),
    };

    let (facets, crossing_cells): (Vec<Facet<T, D>>, usize) = if D == 2 {
        let per_row: Vec<(Vec<Facet<T, D>>, usize)> = (0..nodes[1] - 1)
            .into_par_iter()
            .map(|j| marching_squares_row(&grid, j))
            .collect();
        merge(per_row)
    } else {
        let per_slab: Vec<(Vec<Facet<T, D>>, usize)> = (0..nodes[2] - 1)
            .into_par_iter()
            .map(|k| marching_tetrahedra_slab(&grid, k))
            .collect();
        merge(per_slab)
    };

    let doubles = count_double_crossings(&grid, domain, D);
    let limit = opts
        .max_double_crossings
        .unwrap_or_else(|| (crossing_cells / 50).max(4));
    if doubles > limit {
        return Err(FluxError::ResolutionTooCoarse { count: doubles, limit });
    }
    if facets.is_empty() {
        return Err(FluxError::EmptyBoundary(domain.label().to_string()));
    }

    Ok(SurfaceMesh::from_facets(domain.label(), facets).with_resolution(h))
}

fn merge<F>(parts: Vec<(Vec<F>, usize)>) -> (Vec<F>, usize) {
    let n = parts.iter().map(|p| p.0.len()).sum();
    let mut all = Vec::with_capacity(n);
    let mut cells = 0;
    for (f, c) in parts {
        all.extend(f);
        cells += c;
    }
    (all, cells)
}

fn marching_squares_row<T: Real, const D: usize>(g: &Grid<T>, j: usize) -> (Vec<Facet<T, D>>, usize) {
    let mut out = Vec::new();
    let mut cells = 0;
    for i in 0..g.nodes[0] - 1 {
        // Counter-clockwise corners; edge e connects corner e and corner e+1.
        let c = [[i, j, 0], [i + 1, j, 0], [i + 1, j + 1, 0], [i, j + 1, 0]];
        let v = c.map(|n| g.value(n));
        let s = v.map(inside);
        if s.iter().all(|&x| x) || s.iter().all(|&x| !x) {
            continue;
        }
        cells += 1;
        let edge = |e: usize| g.crossing(c[e], c[(e + 1) % 4]);
        let pos = c.map(|n| g.position(n));
        let crossing_edges: Vec<usize> = (0..4).filter(|&e| s[e] != s[(e + 1) % 4]).collect();
        let mut emit = |a: [T; 3], b: [T; 3], hint: [T; 3]| {
            if let Some(f) = make_facet::<T, D>(&[a, b], hint, g.min_area) {
                out.push(f);
            }
        };
        if crossing_edges.len() == 2 {
            let (mut m_in, mut m_out) = ([T::zero(); 3], [T::zero(); 3]);
            let (mut n_in, mut n_out) = (T::zero(), T::zero());
            for k in 0..4 {
                let (acc, cnt) = if s[k] {
                    (&mut m_in, &mut n_in)
                } else {
                    (&mut m_out, &mut n_out)
                };
                for d in 0..2 {
                    acc[d] += pos[k][d];
                }
                *cnt += T::one();
            }
            let hint = std::array::from_fn(|d| m_out[d] / n_out - m_in[d] / n_in);
            emit(edge(crossing_edges[0]), edge(crossing_edges[1]), hint);
        } else {
            // Saddle: the bilinear centre value decides which corners are cut off.
            let centre_inside = inside((v[0] + v[1] + v[2] + v[3]) * T::lit(0.25));
            for k in 0..4 {
                if s[k] == centre_inside {
                    continue;
                }
                let a = edge((k + 3) % 4);
                let b = edge(k);
                let mid: [T; 3] = std::array::from_fn(|d| (a[d] + b[d]) * T::lit(0.5));
                let sign = if s[k] { -T::one() } else { T::one() };
                let hint = std::array::from_fn(|d| sign * (pos[k][d] - mid[d]));
                emit(a, b, hint);
            }
        }
    }
    (out, cells)
}

/// Kuhn decomposition of the unit cube along its main diagonal.
const KUHN: [[usize; 4]; 6] = [
    [0, 1, 3, 7],
    [0, 1, 5, 7],
    [0, 2, 3, 7],
    [0, 2, 6, 7],
    [0, 4, 5, 7],
    [0, 4, 6, 7],
];

fn marching_tetrahedra_slab<T: Real, const D: usize>(g: &Grid<T>, k: usize) -> (Vec<Facet<T, D>>, usize) {
    let mut out = Vec::new();
    let mut cells = 0;
    for j in 0..g.nodes[1] - 1 {
        for i in 0..g.nodes[0] - 1 {
            let corner = |b: usize| [i + (b & 1), j + ((b >> 1) & 1), k + ((b >> 2) & 1)];
            let vals: [T; 8] = std::array::from_fn(|b| g.value(corner(b)));
            let first = inside(vals[0]);
            if vals.iter().all(|&v| inside(v) == first) {
                continue;
            }
            cells += 1;
            for tet in &KUHN {
                let nodes = tet.map(corner);
                let s = tet.map(|b| inside(vals[b]));
                let n_in = s.iter().filter(|&&x| x).count();
                if n_in == 0 || n_in == 4 {
                    continue;
                }
                let pos = nodes.map(|n| g.position(n));
                let (mut ins, mut outs) = (Vec::with_capacity(3), Vec::with_capacity(3));
                for q in 0..4 {
                    if s[q] {
                        ins.push(q)
                    } else {
                        outs.push(q)
                    }
                }
                let mean = |idx: &[usize]| -> [T; 3] {
                    let w = T::one() / T::from_count(idx.len());
                    std::array::from_fn(|d| idx.iter().map(|&q| pos[q][d]).fold(T::zero(), |a, b| a + b) * w)
                };
                let (mi, mo) = (mean(&ins), mean(&outs));
                let hint: [T; 3] = std::array::from_fn(|d| mo[d] - mi[d]);
                let x = |a: usize, b: usize| g.crossing(nodes[a], nodes[b]);
                let mut emit = |tri: [[T; 3]; 3]| {
                    if let Some(f) = make_facet::<T, D>(&tri, hint, g.min_area) {
                        out.push(f);
                    }
                };
                match n_in {
                    1 => {
                        let a = ins[0];
                        emit([x(a, outs[0]), x(a, outs[1]), x(a, outs[2])]);
                    }
                    3 => {
                        let a = outs[0];
                        emit([x(a, ins[0]), x(a, ins[1]), x(a, ins[2])]);
                    }
                    _ => {
                        let (a, b, c, d) = (ins[0], ins[1], outs[0], outs[1]);
                        let (ac, ad, bd, bc) = (x(a, c), x(a, d), x(b, d), x(b, c));
                        emit([ac, ad, bd]);
                        emit([ac, bd, bc]);
                    }
                }
            }
        }
    }
    (out, cells)
}

/// Grid edges whose endpoints agree in sign but whose values are small
/// enough that the boundary could enter and leave between them.
fn count_double_crossings<T: Real, const D: usize>(g: &Grid<T>, domain: &ImplicitDomain<T, D>, dim: usize) -> usize {
    let lip = domain.lipschitz_hint();
    let phi = domain.level_fn();
    (0..g.nodes[1] * g.nodes[2])
        .into_par_iter()
        .map(|row| {
            let (j, k) = (row % g.nodes[1], row / g.nodes[1]);
            let mut count = 0;
            for i in 0..g.nodes[0] {
                let a = [i, j, k];
                let fa = g.value(a);
                for axis in 0..dim {
                    let mut b = a;
                    b[axis] += 1;
                    if b[axis] >= g.nodes[axis] {
                        continue;
                    }
                    let fb = g.value(b);
                    if inside(fa) != inside(fb) || fa.abs() + fb.abs() >= lip * g.pitch[axis] {
                        continue;
                    }
                    let (pa, pb) = (g.position(a), g.position(b));
                    let mid: [T; 3] = std::array::from_fn(|d| (pa[d] + pb[d]) * T::lit(0.5));
                    if inside(phi(&to_vec::<T, D>(&mid))) != inside(fa) {
                        count += 1;
                    }
                }
            }
            count
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ball, comb, torus, BoundingBox};

    #[test]
    fn unit_circle_perimeter() {
        let d = ball(VecN::<f64, 2>::zero(), 1.0).unwrap();
        let m = mesh_boundary(&d, 0.01).unwrap();
        assert!((m.total_area() - 2.0 * std::f64::consts::PI).abs() < 1e-3);
    }

    #[test]
    fn unit_sphere_area() {
        let d = ball(VecN::<f64, 3>::zero(), 1.0).unwrap();
        let m = mesh_boundary(&d, 0.05).unwrap();
        let exact = 4.0 * std::f64::consts::PI;
        assert!((m.total_area() - exact).abs() < 0.01 * exact, "{}", m.total_area());
    }

    #[test]
    fn normals_point_outward() {
        let d = torus(VecN::<f64, 3>::zero(), 1.0, 0.3).unwrap();
        let m = mesh_boundary(&d, 0.05).unwrap();
        for f in m.facets() {
            let probe = f.centroid + f.normal * 1e-3;
            assert!(d.phi(&probe) > d.phi(&f.centroid));
            assert!((f.normal.norm() - 1.0f64).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_mesh_normals_cancel() {
        let d = ball(VecN::new3(0.1, -0.2, 0.05), 0.8).unwrap();
        let m = mesh_boundary(&d, 0.04).unwrap();
        let mut s = crate::vector::VecSum::default();
        for f in m.facets() {
            s.add(&(f.normal * f.area));
        }
        assert!(s.value().norm() < 1e-9);
    }

    #[test]
    fn comb_perimeter_near_two_n_plus_two() {
        let d = comb::<f64, 2>(4, 1.0 / 128.0).unwrap();
        let m = mesh_boundary(&d, 1.0 / 512.0).unwrap();
        assert!((m.total_area() - 10.0).abs() < 1.0, "{}", m.total_area());
    }

    #[test]
    fn empty_boundary_is_reported() {
        let d = ImplicitDomain::new("void", BoundingBox::centered(VecN::<f64, 2>::zero(), 1.0), 1.0, |_| 1.0);
        assert!(matches!(mesh_boundary(&d, 0.1), Err(FluxError::EmptyBoundary(_))));
    }

    #[test]
    fn strips_between_grid_nodes_are_flagged() {
        // Four strips of width 0.02 centred between the nodes of a 0.25 grid.
        let d = ImplicitDomain::new(
            "strips",
            BoundingBox::new(VecN::<f64, 2>::zero(), VecN::new2(1.0, 1.0)),
            1.0,
            |x: &VecN<f64, 2>| ((4.0 * x[0]).fract() - 0.5).abs() / 4.0 - 0.01,
        );
        let opts = MeshOptions {
            padding_cells: 0,
            ..MeshOptions::new(0.25)
        };
        assert!(matches!(
            mesh_boundary_with(&d, &opts),
            Err(FluxError::ResolutionTooCoarse { .. })
        ));
        assert!(mesh_boundary(&d, 0.005).is_ok());
    }
}
