//! Surface flux, normal integrals, volumes and a Monte Carlo flux oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FluxError, Result};
use crate::fields::VectorField;
use crate::geometry::{ImplicitDomain, SurfaceMesh};
use crate::scalar::{compensated_sum, CompensatedSum, Real};
use crate::vector::{VecN, VecSum};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum QuadMethod {
    MeshMidpoint,
    McOracle,
    GridMidpoint,
}

/// A scalar or vector integral with its error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureResult<V, T> {
    pub value: V,
    pub error_estimate: T,
    pub method: QuadMethod,
    pub resolution: Option<T>,
    pub sample_count: Option<usize>,
    pub seed: Option<u64>,
}

pub type ScalarQuadrature<T> = QuadratureResult<T, T>;
pub type VectorQuadrature<T, const D: usize> = QuadratureResult<VecN<T, D>, T>;

/// Serializable form of a [`QuadratureResult`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRecord {
    pub value: Vec<f64>,
    pub error_estimate: f64,
    pub method: QuadMethod,
    pub resolution: Option<f64>,
    pub sample_count: Option<usize>,
    pub seed: Option<u64>,
}

impl<V, T: Real> QuadratureResult<V, T> {
    fn mesh(value: V, error_estimate: T, resolution: Option<T>) -> Self {
        Self {
            value,
            error_estimate,
            method: QuadMethod::MeshMidpoint,
            resolution,
            sample_count: None,
            seed: None,
        }
    }

    fn record_with(&self, value: Vec<f64>) -> QuadratureRecord {
        QuadratureRecord {
            value,
            error_estimate: self.error_estimate.as_f64(),
            method: self.method,
            resolution: self.resolution.map(Real::as_f64),
            sample_count: self.sample_count,
            seed: self.seed,
        }
    }
}

impl<T: Real> ScalarQuadrature<T> {
    pub fn record(&self) -> QuadratureRecord {
        self.record_with(vec![self.value.as_f64()])
    }
}

impl<T: Real, const D: usize> VectorQuadrature<T, D> {
    pub fn record(&self) -> QuadratureRecord {
        self.record_with(self.value.to_f64().to_vec())
    }
}

/// Midpoint rule `sum a_i f(c_i)·n_i`.
///
/// The error estimate covers only the area left uncertain by clipping; use
/// [`surface_flux_refined`] for a resolution-based estimate.
pub fn surface_flux<T: Real, const D: usize>(
    mesh: &SurfaceMesh<T, D>,
    field: &VectorField<T, D>,
) -> ScalarQuadrature<T> {
    let parts: Vec<(T, T)> = mesh
        .facets()
        .par_chunks(4096)
        .map(|chunk| {
            let mut s = CompensatedSum::new();
            let mut sup = T::zero();
            for f in chunk {
                let v = field.eval(&f.centroid);
                s.add(f.area * v.dot(&f.normal));
                sup = sup.max(v.norm());
            }
            (s.value(), sup)
        })
        .collect();
    let value = compensated_sum(parts.iter().map(|p| p.0));
    let sup = parts.iter().map(|p| p.1).fold(T::zero(), T::max);
    QuadratureResult::mesh(value, mesh.uncertain_area() * sup, mesh.resolution())
}

/// Flux on `fine` with a Richardson-style error from the `coarse` mesh.
pub fn surface_flux_refined<T: Real, const D: usize>(
    fine: &SurfaceMesh<T, D>,
    coarse: &SurfaceMesh<T, D>,
    field: &VectorField<T, D>,
) -> ScalarQuadrature<T> {
    let f = surface_flux(fine, field);
    let c = surface_flux(coarse, field);
    QuadratureResult {
        error_estimate: (f.value - c.value).abs() + f.error_estimate,
        ..f
    }
}

/// `sum a_i n_i`.
pub fn normal_integral<T: Real, const D: usize>(mesh: &SurfaceMesh<T, D>) -> VectorQuadrature<T, D> {
    let parts: Vec<VecN<T, D>> = mesh
        .facets()
        .par_chunks(4096)
        .map(|chunk| {
            let mut s = VecSum::default();
            for f in chunk {
                s.add(&(f.normal * f.area));
            }
            s.value()
        })
        .collect();
    let mut total = VecSum::default();
    for p in &parts {
        total.add(p);
    }
    QuadratureResult::mesh(total.value(), mesh.uncertain_area(), mesh.resolution())
}

/// `sum a_i n_i` with a Richardson-style error from the `coarse` mesh.
pub fn normal_integral_refined<T: Real, const D: usize>(
    fine: &SurfaceMesh<T, D>,
    coarse: &SurfaceMesh<T, D>,
) -> VectorQuadrature<T, D> {
    let f = normal_integral(fine);
    let c = normal_integral(coarse);
    QuadratureResult {
        error_estimate: (f.value - c.value).norm() + f.error_estimate,
        ..f
    }
}

/// Options for the cell-grid volume integrals.
#[derive(Clone, Copy, Debug)]
pub struct GridOptions {
    /// Subcells per axis in boundary cells; `None` picks 4 in the plane, 2 in space.
    pub subcells: Option<usize>,
    /// Also integrate at `2h` and report the difference as the error estimate.
    pub richardson: bool,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            subcells: None,
            richardson: true,
        }
    }
}

/// Cell-centred midpoint integral of `g` over `{phi <= 0}`; boundary cells
/// are split into subcells weighted by the fraction of each subcell below
/// the tangent plane of `phi`.
fn grid_integral<T: Real, const D: usize>(
    domain: &ImplicitDomain<T, D>,
    h: T,
    subcells: usize,
    g: &(dyn Fn(&VecN<T, D>) -> T + Sync),
) -> Result<T> {
    if !(h > T::zero()) {
        return Err(FluxError::BadParams(format!(
            "grid resolution must be positive, got {h}"
        )));
    }
    let bbox = domain.bounding_box();
    if bbox.is_empty() || !bbox.min.is_finite() || !bbox.max.is_finite() {
        return Err(FluxError::BadParams(format!(
            "bounding box of `{}` is not finite",
            domain.label()
        )));
    }
    let mut cells = [1usize; D];
    let mut pitch = VecN::<T, D>::zero();
    for i in 0..D {
        let extent = bbox.max[i] - bbox.min[i];
        cells[i] = (extent / h).ceil().to_usize().unwrap_or(1).max(1);
        pitch[i] = extent / T::from_count(cells[i]);
    }
    let total: usize = cells.iter().product();
    if total > 400_000_000 {
        return Err(FluxError::BadParams(format!("grid of {total} cells is too large")));
    }
    let cell_volume = (0..D).fold(T::one(), |a, i| a * pitch[i]);
    let half_diag = pitch.norm() * T::lit(0.5);
    let reach = domain.lipschitz_hint() * half_diag;
    let k = subcells.max(1);
    let sub_pitch = pitch * (T::one() / T::from_count(k));
    let sub_volume = cell_volume / T::from_count(k.pow(D as u32));
    let sub_count = k.pow(D as u32);
    let n_rows = total / cells[0];

    let row_sums: Vec<T> = (0..n_rows)
        .into_par_iter()
        .map(|row| {
            let mut idx = [0usize; D];
            let mut r = row;
            for i in 1..D {
                idx[i] = r % cells[i];
                r /= cells[i];
            }
            let mut acc = CompensatedSum::new();
            for i0 in 0..cells[0] {
                idx[0] = i0;
                let c = VecN::from_fn(|i| bbox.min[i] + (T::from_count(idx[i]) + T::lit(0.5)) * pitch[i]);
                let v = domain.phi(&c);
                if v <= -reach {
                    acc.add(cell_volume * g(&c));
                    continue;
                }
                if v >= reach {
                    continue;
                }
                let grad = domain.gradient(&c);
                let widths: [T; D] = std::array::from_fn(|i| grad[i].abs() * sub_pitch[i]);
                let mut cell = CompensatedSum::new();
                for s in 0..sub_count {
                    let mut q = s;
                    let p = VecN::from_fn(|i| {
                        let j = q % k;
                        q /= k;
                        c[i] - pitch[i] * T::lit(0.5) + (T::from_count(j) + T::lit(0.5)) * sub_pitch[i]
                    });
                    let cover = box_fraction(domain.phi(&p), &widths);
                    if cover > T::zero() {
                        cell.add(cover * sub_volume * g(&p));
                    }
                }
                acc.add(cell.value());
            }
            acc.value()
        })
        .collect();
    Ok(compensated_sum(row_sums))
}

/// Fraction of a box lying in `{phi_c + sum_i w_i u_i <= 0}`, where `phi_c`
/// is the value at the centre, `u_i` ranges over `[-1/2, 1/2]` and `w_i >= 0`.
fn box_fraction<T: Real, const D: usize>(phi_c: T, widths: &[T; D]) -> T {
    let total = widths.iter().fold(T::zero(), |a, w| a + *w);
    let floor = total * T::lit(1e-4);
    let active: Vec<T> = widths
        .iter()
        .copied()
        .filter(|w| *w > floor && *w > T::zero())
        .collect();
    let half = active.iter().fold(T::zero(), |a, w| a + *w) * T::lit(0.5);
    let s = half - phi_c;
    if s <= T::zero() {
        return T::zero();
    }
    if s >= half + half {
        return T::one();
    }
    let k = active.len();
    let mut sum = T::zero();
    for mask in 0..1usize << k {
        let mut shift = s;
        for (i, w) in active.iter().enumerate() {
            if mask >> i & 1 == 1 {
                shift -= *w;
            }
        }
        if shift > T::zero() {
            let term = (0..k).fold(T::one(), |a, _| a * shift);
            sum = if mask.count_ones() % 2 == 0 {
                sum + term
            } else {
                sum - term
            };
        }
    }
    let denom = active
        .iter()
        .enumerate()
        .fold(T::one(), |a, (i, w)| a * *w * T::from_count(i + 1));
    (sum / denom).max(T::zero()).min(T::one())
}

fn grid_quadrature<T: Real, const D: usize>(
    domain: &ImplicitDomain<T, D>,
    h: T,
    opts: &GridOptions,
    g: &(dyn Fn(&VecN<T, D>) -> T + Sync),
) -> Result<ScalarQuadrature<T>> {
    let k = opts.subcells.unwrap_or(if D == 2 { 4 } else { 2 });
    let value = grid_integral(domain, h, k, g)?;
    let error_estimate = if opts.richardson {
        (value - grid_integral(domain, h + h, k, g)?).abs()
    } else {
        T::zero()
    };
    Ok(QuadratureResult {
        value,
        error_estimate,
        method: QuadMethod::GridMidpoint,
        resolution: Some(h),
        sample_count: None,
        seed: None,
    })
}

/// `Vol({phi <= 0})`.
pub fn volume<T: Real, const D: usize>(domain: &ImplicitDomain<T, D>, h: T) -> Result<ScalarQuadrature<T>> {
    volume_with(domain, h, &GridOptions::default())
}

pub fn volume_with<T: Real, const D: usize>(
    domain: &ImplicitDomain<T, D>,
    h: T,
    opts: &GridOptions,
) -> Result<ScalarQuadrature<T>> {
    grid_quadrature(domain, h, opts, &|_| T::one())
}

/// `∫_D div f dV`.
pub fn divergence_volume_integral<T: Real, const D: usize>(
    domain: &ImplicitDomain<T, D>,
    field: &VectorField<T, D>,
    h: T,
) -> Result<ScalarQuadrature<T>> {
    divergence_volume_integral_with(domain, field, h, &GridOptions::default())
}

pub fn divergence_volume_integral_with<T: Real, const D: usize>(
    domain: &ImplicitDomain<T, D>,
    field: &VectorField<T, D>,
    h: T,
    opts: &GridOptions,
) -> Result<ScalarQuadrature<T>> {
    grid_quadrature(domain, h, opts, &|x| field.divergence(x))
}

const PROJECTION_STEPS: usize = 8;

/// Shell-sampling estimate of `∫_{∂D1 ∩ D2} f·n dA`.
///
/// Uniform points `x` in the overlap of the bounding boxes (grown by `w`)
/// with `|φ1(x)| <= w` are projected to `p` on `∂D1` and contribute
/// `V |∇φ1(x)| (f·n)(p) / (2w)` when `p ∈ D2`. By the coarea formula this is
/// the average over `|s| <= w` of the clipped flux pulled back to the level
/// sets `{φ1 = s}`; for a signed distance the area factor is `1 + O(s)` in
/// the plane and `1 + O(s) + O(s^2)` in space, so the odd part cancels.
pub fn mc_flux_oracle<T: Real, const D: usize>(
    d1: &ImplicitDomain<T, D>,
    d2: &ImplicitDomain<T, D>,
    field: &VectorField<T, D>,
    samples: usize,
    seed: u64,
    shell_width: T,
) -> Result<ScalarQuadrature<T>> {
    if samples < 1000 {
        return Err(FluxError::BadParams(format!(
            "oracle needs at least 1000 samples, got {samples}"
        )));
    }
    if !(shell_width > T::zero()) {
        return Err(FluxError::BadParams("oracle shell width must be positive".into()));
    }
    let w = shell_width;
    let bbox = d1.bounding_box().expanded(w).intersect(&d2.bounding_box().expanded(w));
    let result = |value, err| QuadratureResult {
        value,
        error_estimate: err,
        method: QuadMethod::McOracle,
        resolution: Some(w),
        sample_count: Some(samples),
        seed: Some(seed),
    };
    if bbox.is_empty() || bbox.volume() == T::zero() {
        return Ok(result(T::zero(), T::zero()));
    }
    let scale = bbox.volume() / (w + w);
    const BATCH: usize = 8192;
    let batches = samples.div_ceil(BATCH);
    let sums: Vec<Result<(f64, f64)>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64 + 1);
            let n = BATCH.min(samples - b * BATCH);
            let (mut s1, mut s2) = (CompensatedSum::new(), CompensatedSum::new());
            for _ in 0..n {
                let x = VecN::<T, D>::from_fn(|i| bbox.min[i] + T::lit(rng.gen::<f64>()) * (bbox.max[i] - bbox.min[i]));
                if d1.phi(&x).abs() > w {
                    continue;
                }
                let p = d1.project_to_boundary(&x, PROJECTION_STEPS);
                if !d2.contains(&p) {
                    continue;
                }
                let (gx, gp) = (d1.gradient(&x), d1.gradient(&p));
                let mag = gx.norm().min(gp.norm()).as_f64();
                if mag < 1e-8 {
                    return Err(FluxError::DegenerateGradient { magnitude: mag });
                }
                let n = gp * (T::one() / gp.norm());
                let y = (scale * gx.norm() * field.eval(&p).dot(&n)).as_f64();
                s1.add(y);
                s2.add(y * y);
            }
            Ok((s1.value(), s2.value()))
        })
        .collect();
    let (mut s1, mut s2) = (CompensatedSum::new(), CompensatedSum::new());
    for r in sums {
        let (a, b) = r?;
        s1.add(a);
        s2.add(b);
    }
    let n = samples as f64;
    let mean = s1.value() / n;
    let var = (s2.value() / n - mean * mean).max(0.0) * n / (n - 1.0);
    Ok(result(T::lit(mean), T::lit((var / n).sqrt())))
}
