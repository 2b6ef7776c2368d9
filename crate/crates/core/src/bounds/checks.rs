use std::sync::OnceLock;

use crate::error::{FluxError, Result};
use crate::fields::{sup_norms_with_points, SupNorms, VectorField};
use crate::geometry::{clip_mesh, mesh_boundary, BoundingBox, ImplicitDomain, SurfaceMesh};
use crate::lowdisc::Halton;
use crate::quadrature::{
    divergence_volume_integral_with, mc_flux_oracle, normal_integral_refined, surface_flux_refined, volume_with,
    GridOptions, ScalarQuadrature, VectorQuadrature,
};
use crate::scalar::Real;
use crate::vector::VecN;

use super::report::{BoundReport, Flag, InequalityId, Provenance};

/// Discretization controls shared by the bound checks.
#[derive(Clone, Copy, Debug)]
pub struct QuadOptions<T> {
    /// Mesh and grid pitch `h`; error estimates compare against `2h`.
    pub resolution: T,
    /// Subdivision depth for facets straddling `∂D2`.
    pub refine_depth: usize,
    /// Quasi-random points used for sup-norm estimates.
    pub sup_samples: usize,
    pub seed: u64,
    /// Boundary-cell subdivision for volume integrals.
    pub grid_subcells: Option<usize>,
}

impl<T: Real> QuadOptions<T> {
    pub fn new(resolution: T) -> Self {
        Self {
            resolution,
            refine_depth: 8,
            sup_samples: 4096,
            seed: 0,
            grid_subcells: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn grid(&self) -> GridOptions {
        GridOptions {
            subcells: self.grid_subcells,
            richardson: true,
        }
    }
}

/// Volume of the unit ball in `R^k`.
pub fn unit_ball_volume(k: usize) -> f64 {
    match k {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(k - 2) * 2.0 * std::f64::consts::PI / k as f64,
    }
}

/// Meshes `∂D` at `h` and `2h`. An empty boundary yields empty meshes.
fn mesh_pair<T: Real, const D: usize>(
    domain: &ImplicitDomain<T, D>,
    h: T,
) -> Result<(SurfaceMesh<T, D>, SurfaceMesh<T, D>)> {
    let empty = |e: FluxError| match e {
        FluxError::EmptyBoundary(label) => Ok(SurfaceMesh::empty(label)),
        other => Err(other),
    };
    let fine = mesh_boundary(domain, h).or_else(empty)?;
    let coarse = mesh_boundary(domain, h + h).or_else(empty)?;
    Ok((fine, coarse))
}

/// The portion `∂D1 ∩ D2` and the boundary `∂D2`, each meshed at `h` and
/// `2h`, with volume integrals over `D2` computed on demand.
#[derive(Debug)]
pub struct FluxSetup<T: Real, const D: usize> {
    label: String,
    d1: Option<ImplicitDomain<T, D>>,
    d2: ImplicitDomain<T, D>,
    opts: QuadOptions<T>,
    clip_fine: SurfaceMesh<T, D>,
    clip_coarse: SurfaceMesh<T, D>,
    boundary2_fine: SurfaceMesh<T, D>,
    boundary2_coarse: SurfaceMesh<T, D>,
    regular: bool,
    volume2: OnceLock<ScalarQuadrature<T>>,
}

impl<T: Real, const D: usize> FluxSetup<T, D> {
    pub fn new(
        label: impl Into<String>,
        d1: &ImplicitDomain<T, D>,
        d2: &ImplicitDomain<T, D>,
        opts: QuadOptions<T>,
    ) -> Result<Self> {
        let h = opts.resolution;
        // Only the part of ∂D1 near D2 can survive clipping.
        let window = d1
            .bounding_box()
            .intersect(&d2.bounding_box().expanded(h * T::lit(4.0)));
        let (fine, coarse) = if window.is_empty() {
            (SurfaceMesh::empty(d1.label()), SurfaceMesh::empty(d1.label()))
        } else {
            mesh_pair(&d1.clone().with_bounding_box(window), h)?
        };
        let mut setup = Self::from_surface(label, &fine, &coarse, d2, opts, true)?;
        setup.d1 = Some(d1.clone());
        Ok(setup)
    }

    /// Uses a given surface (fine and coarse) in place of `∂D1`.
    pub fn from_surface(
        label: impl Into<String>,
        surface_fine: &SurfaceMesh<T, D>,
        surface_coarse: &SurfaceMesh<T, D>,
        d2: &ImplicitDomain<T, D>,
        opts: QuadOptions<T>,
        regular: bool,
    ) -> Result<Self> {
        let (b_fine, b_coarse) = mesh_pair(d2, opts.resolution)?;
        Ok(Self {
            label: label.into(),
            d1: None,
            d2: d2.clone(),
            opts,
            clip_fine: clip_mesh(surface_fine, d2, opts.refine_depth),
            clip_coarse: clip_mesh(surface_coarse, d2, opts.refine_depth),
            boundary2_fine: b_fine,
            boundary2_coarse: b_coarse,
            regular,
            volume2: OnceLock::new(),
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn options(&self) -> &QuadOptions<T> {
        &self.opts
    }

    pub fn d2(&self) -> &ImplicitDomain<T, D> {
        &self.d2
    }

    pub fn clipped(&self) -> &SurfaceMesh<T, D> {
        &self.clip_fine
    }

    pub fn boundary2(&self) -> &SurfaceMesh<T, D> {
        &self.boundary2_fine
    }

    fn mesh_provenance(&self) -> Provenance {
        Provenance::Mesh {
            resolution: self.opts.resolution.as_f64(),
        }
    }

    fn grid_provenance(&self) -> Provenance {
        Provenance::Grid {
            resolution: self.opts.resolution.as_f64(),
        }
    }

    fn finish(&self, mut r: BoundReport) -> BoundReport {
        if !self.regular {
            r = r.flag(Flag::NotARegularDomain);
        }
        r
    }

    /// `∫_{∂D1 ∩ D2} f·n dA`.
    pub fn clipped_flux(&self, field: &VectorField<T, D>) -> ScalarQuadrature<T> {
        surface_flux_refined(&self.clip_fine, &self.clip_coarse, field)
    }

    /// `∫_{∂D1 ∩ D2} n dA`.
    pub fn clipped_normal_integral(&self) -> VectorQuadrature<T, D> {
        normal_integral_refined(&self.clip_fine, &self.clip_coarse)
    }

    /// `Area(∂D2)` and its refinement error.
    pub fn area2(&self) -> (f64, f64) {
        let a = self.boundary2_fine.total_area().as_f64();
        (a, (a - self.boundary2_coarse.total_area().as_f64()).abs())
    }

    pub fn volume2(&self) -> Result<ScalarQuadrature<T>> {
        if let Some(v) = self.volume2.get() {
            return Ok(*v);
        }
        let v = volume_with(&self.d2, self.opts.resolution, &self.opts.grid())?;
        Ok(*self.volume2.get_or_init(|| v))
    }

    pub fn boundary_flux2(&self, field: &VectorField<T, D>) -> ScalarQuadrature<T> {
        surface_flux_refined(&self.boundary2_fine, &self.boundary2_coarse, field)
    }

    pub fn divergence_integral2(&self, field: &VectorField<T, D>) -> Result<ScalarQuadrature<T>> {
        divergence_volume_integral_with(&self.d2, field, self.opts.resolution, &self.opts.grid())
    }

    /// Sup norms over `D2`, including the vertices of `∂D2`.
    pub fn sup_norms(&self, field: &VectorField<T, D>) -> SupNorms {
        let verts: Vec<VecN<T, D>> = self.boundary2_fine.vertices().copied().collect();
        sup_norms_with_points(field, &self.d2, self.opts.sup_samples, self.opts.seed, &verts)
    }

    fn sup_provenance(&self, hint: Option<f64>, sampled: f64) -> Provenance {
        match hint {
            Some(h) if h >= sampled => Provenance::Analytic,
            _ => Provenance::Sampled {
                samples: self.opts.sup_samples + self.boundary2_fine.len() * D,
            },
        }
    }

    /// Flux bound with `Area(∂D2) |f| + Vol(D2) |div f|` on the right.
    pub fn thm1(&self, field: &VectorField<T, D>) -> Result<BoundReport> {
        let flux = self.clipped_flux(field);
        let (area, area_err) = self.area2();
        let vol = self.volume2()?;
        let sup = self.sup_norms(field);
        let (f_inf, g_inf) = (sup.field_bound(), sup.divergence_bound());
        let lhs = flux.value.as_f64().abs();
        let rhs = area * f_inf + vol.value.as_f64() * g_inf;
        let err = flux.error_estimate.as_f64() + area_err * f_inf + vol.error_estimate.as_f64() * g_inf;
        Ok(self.finish(
            BoundReport::new(InequalityId::THM1, &self.label, lhs, rhs, err)
                .ingredient(
                    "flux",
                    flux.value.as_f64(),
                    flux.error_estimate.as_f64(),
                    self.mesh_provenance(),
                )
                .ingredient("area_boundary_d2", area, area_err, self.mesh_provenance())
                .ingredient(
                    "volume_d2",
                    vol.value.as_f64(),
                    vol.error_estimate.as_f64(),
                    self.grid_provenance(),
                )
                .ingredient(
                    "sup_f",
                    f_inf,
                    0.0,
                    self.sup_provenance(sup.field_hint, sup.field_sampled),
                )
                .ingredient(
                    "sup_div_f",
                    g_inf,
                    0.0,
                    self.sup_provenance(sup.divergence_hint, sup.divergence_sampled),
                ),
        ))
    }

    /// Largest sampled finite-difference divergence over `D2`.
    pub fn sampled_divergence(&self, field: &VectorField<T, D>) -> f64 {
        let bbox = *self.d2.bounding_box();
        let halton = Halton::<D>::new(self.opts.seed ^ 0x5eed);
        let mut worst = T::zero();
        for u in halton.points(self.opts.sup_samples.max(64)) {
            let x = bbox.lerp(&VecN::from_f64_slice(&u).expect("dimension"));
            if self.d2.contains(&x) {
                worst = worst.max(field.fd_divergence(&x).abs());
            }
        }
        worst.as_f64()
    }

    /// Divergence-free flux bound `½ Area(∂D2) |f|`.
    pub fn thm2(&self, field: &VectorField<T, D>) -> Result<BoundReport> {
        let div = self.sampled_divergence(field);
        if div > 1e-6 {
            return Err(FluxError::NotDivergenceFree { max_divergence: div });
        }
        let flux = self.clipped_flux(field);
        let (area, area_err) = self.area2();
        let sup = self.sup_norms(field);
        let f_inf = sup.field_bound();
        let lhs = flux.value.as_f64().abs();
        let rhs = 0.5 * area * f_inf;
        let err = flux.error_estimate.as_f64() + 0.5 * area_err * f_inf;
        Ok(self.finish(
            BoundReport::new(InequalityId::THM2, &self.label, lhs, rhs, err)
                .ingredient(
                    "flux",
                    flux.value.as_f64(),
                    flux.error_estimate.as_f64(),
                    self.mesh_provenance(),
                )
                .ingredient("area_boundary_d2", area, area_err, self.mesh_provenance())
                .ingredient(
                    "sup_f",
                    f_inf,
                    0.0,
                    self.sup_provenance(sup.field_hint, sup.field_sampled),
                )
                .ingredient(
                    "sampled_divergence",
                    div,
                    0.0,
                    Provenance::Sampled {
                        samples: self.opts.sup_samples,
                    },
                ),
        ))
    }

    /// Normal-integral bound `|∫ n dA| <= ½ Area(∂D2)`.
    pub fn cor3(&self) -> BoundReport {
        let n = self.clipped_normal_integral();
        let (area, area_err) = self.area2();
        let lhs = n.value.norm().as_f64();
        let rhs = 0.5 * area;
        let err = n.error_estimate.as_f64() + 0.5 * area_err;
        let mut r = BoundReport::new(InequalityId::COR3, &self.label, lhs, rhs, err)
            .ingredient(
                "normal_integral_norm",
                lhs,
                n.error_estimate.as_f64(),
                self.mesh_provenance(),
            )
            .ingredient("area_boundary_d2", area, area_err, self.mesh_provenance());
        for i in 0..D {
            r = r.ingredient(
                &format!("normal_integral_{i}"),
                n.value[i].as_f64(),
                0.0,
                Provenance::Derived,
            );
        }
        self.finish(r)
    }

    /// Bound with the boundary flux and divergence integral of `D2` added.
    pub fn general(&self, field: &VectorField<T, D>) -> Result<BoundReport> {
        let flux = self.clipped_flux(field);
        let (area, area_err) = self.area2();
        let vol = self.volume2()?;
        let sup = self.sup_norms(field);
        let (f_inf, g_inf) = (sup.field_bound(), sup.divergence_bound());
        let bflux = self.boundary_flux2(field);
        let divint = self.divergence_integral2(field)?;
        let lhs = flux.value.as_f64().abs();
        let rhs = 0.5
            * (area * f_inf + bflux.value.as_f64().abs() + vol.value.as_f64() * g_inf + divint.value.as_f64().abs());
        let err = flux.error_estimate.as_f64()
            + 0.5
                * (area_err * f_inf
                    + bflux.error_estimate.as_f64()
                    + vol.error_estimate.as_f64() * g_inf
                    + divint.error_estimate.as_f64());
        Ok(self.finish(
            BoundReport::new(InequalityId::GENERAL_EQ5, &self.label, lhs, rhs, err)
                .ingredient(
                    "flux",
                    flux.value.as_f64(),
                    flux.error_estimate.as_f64(),
                    self.mesh_provenance(),
                )
                .ingredient("area_boundary_d2", area, area_err, self.mesh_provenance())
                .ingredient(
                    "sup_f",
                    f_inf,
                    0.0,
                    self.sup_provenance(sup.field_hint, sup.field_sampled),
                )
                .ingredient(
                    "boundary_flux_d2",
                    bflux.value.as_f64(),
                    bflux.error_estimate.as_f64(),
                    self.mesh_provenance(),
                )
                .ingredient(
                    "volume_d2",
                    vol.value.as_f64(),
                    vol.error_estimate.as_f64(),
                    self.grid_provenance(),
                )
                .ingredient(
                    "sup_div_f",
                    g_inf,
                    0.0,
                    self.sup_provenance(sup.divergence_hint, sup.divergence_sampled),
                )
                .ingredient(
                    "divergence_integral_d2",
                    divint.value.as_f64(),
                    divint.error_estimate.as_f64(),
                    self.grid_provenance(),
                ),
        ))
    }

    /// Convex-`D2` bounds: `(claimed, proof-derived)`.
    pub fn thm4(&self) -> Result<(BoundReport, BoundReport)> {
        let violation = convexity_violation(&self.d2, 160, self.opts.seed);
        if violation > 0.0 {
            return Err(FluxError::NotConvex { violation });
        }
        let (delta_raw, delta) = estimate_diameter(&self.d2, &self.boundary2_fine);
        let n = self.clipped_normal_integral();
        let lhs = n.value.norm().as_f64();
        let ball = unit_ball_volume(D - 1);
        let radius = 0.5 * delta.as_f64();
        let full = ball * radius.powi(D as i32 - 1);
        let delta_err = (delta - delta_raw).abs().as_f64();
        let full_err = ball * (D as f64 - 1.0) * radius.powi(D as i32 - 2) * 0.5 * delta_err;
        let d1_convex = self
            .d1
            .as_ref()
            .map_or(true, |d1| convexity_violation(d1, 160, self.opts.seed) <= 0.0);
        let make = |id, rhs: f64, rhs_err: f64| {
            let mut r = BoundReport::new(id, &self.label, lhs, rhs, n.error_estimate.as_f64() + rhs_err)
                .ingredient(
                    "normal_integral_norm",
                    lhs,
                    n.error_estimate.as_f64(),
                    self.mesh_provenance(),
                )
                .ingredient("diameter_d2", delta.as_f64(), delta_err, self.mesh_provenance())
                .ingredient("ball_volume", full, full_err, Provenance::Derived);
            if !d1_convex {
                r = r.flag(Flag::NonConvexD1);
            }
            self.finish(r)
        };
        let claimed = make(InequalityId::THM4_CLAIMED, 0.5 * full, 0.5 * full_err).flag(Flag::ClaimedStatement);
        let derived = make(InequalityId::THM4_PROOF_DERIVED, full, full_err);
        Ok((claimed, derived))
    }

    /// Monte Carlo estimate of the clipped flux (needs an implicit `D1`).
    pub fn oracle(
        &self,
        field: &VectorField<T, D>,
        samples: usize,
        seed: u64,
        shell_width: T,
    ) -> Result<ScalarQuadrature<T>> {
        let d1 = self
            .d1
            .as_ref()
            .ok_or_else(|| FluxError::PreconditionFailed("oracle needs an implicit D1".into()))?;
        mc_flux_oracle(d1, &self.d2, field, samples, seed, shell_width)
    }
}

pub fn check_thm1<T: Real, const D: usize>(
    d1: &ImplicitDomain<T, D>,
    d2: &ImplicitDomain<T, D>,
    field: &VectorField<T, D>,
    opts: QuadOptions<T>,
) -> Result<BoundReport> {
    FluxSetup::new("thm1", d1, d2, opts)?.thm1(field)
}

pub fn check_thm2<T: Real, const D: usize>(
    d1: &ImplicitDomain<T, D>,
    d2: &ImplicitDomain<T, D>,
    field: &VectorField<T, D>,
    opts: QuadOptions<T>,
) -> Result<BoundReport> {
    FluxSetup::new("thm2", d1, d2, opts)?.thm2(field)
}

pub fn check_cor3<T: Real, const D: usize>(
    d1: &ImplicitDomain<T, D>,
    d2: &ImplicitDomain<T, D>,
    opts: QuadOptions<T>,
) -> Result<BoundReport> {
    Ok(FluxSetup::new("cor3", d1, d2, opts)?.cor3())
}

/// COR3 with an arbitrary surface in place of `∂D1`, e.g. an immersed curve.
pub fn check_cor3_surface<T: Real, const D: usize>(
    fine: &SurfaceMesh<T, D>,
    coarse: &SurfaceMesh<T, D>,
    d2: &ImplicitDomain<T, D>,
    opts: QuadOptions<T>,
    regular: bool,
) -> Result<BoundReport> {
    Ok(FluxSetup::from_surface("cor3", fine, coarse, d2, opts, regular)?.cor3())
}

pub fn check_general<T: Real, const D: usize>(
    d1: &ImplicitDomain<T, D>,
    d2: &ImplicitDomain<T, D>,
    field: &VectorField<T, D>,
    opts: QuadOptions<T>,
) -> Result<BoundReport> {
    FluxSetup::new("general", d1, d2, opts)?.general(field)
}

pub fn check_thm4<T: Real, const D: usize>(
    d1: &ImplicitDomain<T, D>,
    d2: &ImplicitDomain<T, D>,
    opts: QuadOptions<T>,
) -> Result<(BoundReport, BoundReport)> {
    FluxSetup::new("thm4", d1, d2, opts)?.thm4()
}

/// `|∫_C v·n dA|` for `C = ∂D ∩ R` against both forms of the bound
/// `Vol(B^{d-1}(δ/2))`, with and without the factor ½.
pub fn check_lemma_vdotn<T: Real, const D: usize>(
    domain: &ImplicitDomain<T, D>,
    region: &ImplicitDomain<T, D>,
    v: VecN<T, D>,
    opts: QuadOptions<T>,
) -> Result<(BoundReport, BoundReport)> {
    let v = v
        .normalized()
        .ok_or_else(|| FluxError::BadParams("direction must be nonzero".into()))?;
    let violation = convexity_violation(domain, 160, opts.seed);
    if violation > 0.0 {
        return Err(FluxError::NotConvex { violation });
    }
    let (fine, coarse) = mesh_pair(domain, opts.resolution)?;
    let c_fine = clip_mesh(&fine, region, opts.refine_depth);
    let c_coarse = clip_mesh(&coarse, region, opts.refine_depth);
    let n = normal_integral_refined(&c_fine, &c_coarse);
    let lhs = n.value.dot(&v).abs().as_f64();
    let (raw, delta) = estimate_diameter(domain, &fine);
    let ball = unit_ball_volume(D - 1) * (0.5 * delta.as_f64()).powi(D as i32 - 1);
    let err = n.error_estimate.as_f64();
    let prov = Provenance::Mesh {
        resolution: opts.resolution.as_f64(),
    };
    let make = |id, rhs| {
        BoundReport::new(id, "lemma-vdotn", lhs, rhs, err)
            .ingredient("v_dot_normal_integral", lhs, err, prov.clone())
            .ingredient("diameter", delta.as_f64(), (delta - raw).abs().as_f64(), prov.clone())
    };
    Ok((
        make(InequalityId::LEMMA_VDOTN_CLAIMED, 0.5 * ball).flag(Flag::ClaimedStatement),
        make(InequalityId::LEMMA_VDOTN_PROOF_DERIVED, ball),
    ))
}

/// Largest `phi` at midpoints of pairs of quasi-random inside points, minus
/// a roundoff allowance; positive means the domain is not convex.
pub fn convexity_violation<T: Real, const D: usize>(domain: &ImplicitDomain<T, D>, points: usize, seed: u64) -> f64 {
    let bbox = *domain.bounding_box();
    let halton = Halton::<D>::new(seed ^ 0xc0de);
    let inside: Vec<VecN<T, D>> = (0..points * 64)
        .map(|i| bbox.lerp(&VecN::from_f64_slice(&halton.point(i)).expect("dimension")))
        .filter(|x| domain.phi(x) < T::zero())
        .take(points)
        .collect();
    let allowance = T::lit(1e-9) * (T::one() + bbox.diagonal()) + domain.band();
    let mut worst = T::neg_infinity();
    for i in 0..inside.len() {
        for j in (i + 1)..inside.len() {
            worst = worst.max(domain.phi(&inside[i].midpoint(&inside[j])));
        }
    }
    (worst - allowance).as_f64()
}

fn directions<T: Real, const D: usize>() -> Vec<VecN<T, D>> {
    if D == 2 {
        (0..180)
            .map(|k| {
                let a = std::f64::consts::PI * k as f64 / 180.0;
                VecN::from_fn(|i| T::lit(if i == 0 { a.cos() } else { a.sin() }))
            })
            .collect()
    } else {
        // Fibonacci points on the upper hemisphere; antipodes are implied.
        let n = 400;
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        (0..n)
            .map(|k| {
                let z = 1.0 - (k as f64 + 0.5) / n as f64;
                let r = (1.0 - z * z).sqrt();
                let a = golden * k as f64;
                let c = [r * a.cos(), r * a.sin(), z];
                VecN::from_fn(|i| T::lit(c[i]))
            })
            .collect()
    }
}

fn support_vertex<T: Real, const D: usize>(verts: &[VecN<T, D>], u: &VecN<T, D>) -> VecN<T, D> {
    let mut best = verts[0];
    let mut best_val = u.dot(&best);
    for v in &verts[1..] {
        let s = u.dot(v);
        if s > best_val {
            best = *v;
            best_val = s;
        }
    }
    best
}

/// Diameter from the boundary mesh: `(raw, refined)`. The raw value is the
/// max distance among extreme vertices along many directions; the refined
/// value re-aims the support points along the best chord and projects them
/// onto the zero level set.
pub fn estimate_diameter<T: Real, const D: usize>(domain: &ImplicitDomain<T, D>, mesh: &SurfaceMesh<T, D>) -> (T, T) {
    let verts: Vec<VecN<T, D>> = mesh.vertices().copied().collect();
    if verts.is_empty() {
        return (T::zero(), T::zero());
    }
    let mut cands = Vec::new();
    for u in directions::<T, D>() {
        cands.push(support_vertex(&verts, &u));
        cands.push(support_vertex(&verts, &-u));
    }
    let (mut p, mut q, mut raw) = (cands[0], cands[0], T::zero());
    for i in 0..cands.len() {
        for j in (i + 1)..cands.len() {
            let d = cands[i].distance(&cands[j]);
            if d > raw {
                raw = d;
                p = cands[i];
                q = cands[j];
            }
        }
    }
    let mut best = raw;
    for _ in 0..2 {
        let Some(u) = (p - q).normalized() else { break };
        let np = domain.project_to_boundary(&support_vertex(&verts, &u), 50);
        let nq = domain.project_to_boundary(&support_vertex(&verts, &-u), 50);
        let d = np.distance(&nq);
        if d.is_finite() {
            best = best.max(d);
            p = np;
            q = nq;
        }
    }
    (raw, best)
}

/// Relative divergence-theorem residual on one domain and field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DivergenceResidual {
    pub resolution: f64,
    pub flux: f64,
    pub flux_error: f64,
    pub volume_integral: f64,
    pub volume_integral_error: f64,
    /// `|flux - volume_integral|`.
    pub residual: f64,
    /// `Area(∂D) |f| + Vol(D) |div f|`.
    pub scale: f64,
}

impl DivergenceResidual {
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.residual / self.scale
        } else {
            self.residual
        }
    }
}

/// Compares `∫_{∂D} f·n dA` with `∫_D div f dV` at resolution `h`.
pub fn divergence_residual<T: Real, const D: usize>(
    domain: &ImplicitDomain<T, D>,
    field: &VectorField<T, D>,
    h: T,
    grid: &GridOptions,
    sup_samples: usize,
) -> Result<DivergenceResidual> {
    let (fine, coarse) = mesh_pair(domain, h)?;
    let flux = surface_flux_refined(&fine, &coarse, field);
    let vol_int = divergence_volume_integral_with(domain, field, h, grid)?;
    let vol = volume_with(
        domain,
        h,
        &GridOptions {
            richardson: false,
            ..*grid
        },
    )?;
    let verts: Vec<VecN<T, D>> = fine.vertices().copied().collect();
    let sup = sup_norms_with_points(field, domain, sup_samples, 0, &verts);
    Ok(DivergenceResidual {
        resolution: h.as_f64(),
        flux: flux.value.as_f64(),
        flux_error: flux.error_estimate.as_f64(),
        volume_integral: vol_int.value.as_f64(),
        volume_integral_error: vol_int.error_estimate.as_f64(),
        residual: (flux.value - vol_int.value).abs().as_f64(),
        scale: fine.total_area().as_f64() * sup.field_bound() + vol.value.as_f64() * sup.divergence_bound(),
    })
}

/// The divergence theorem as a check `|flux - ∫ div f| <= 0` up to the
/// combined quadrature error.
pub fn check_div_theorem<T: Real, const D: usize>(
    domain: &ImplicitDomain<T, D>,
    field: &VectorField<T, D>,
    opts: QuadOptions<T>,
) -> Result<BoundReport> {
    let r = divergence_residual(domain, field, opts.resolution, &opts.grid(), opts.sup_samples)?;
    let h = opts.resolution.as_f64();
    Ok(BoundReport::new(
        InequalityId::DIV_THEOREM,
        format!("{}|{}", domain.label(), field.label()),
        r.residual,
        0.0,
        r.flux_error + r.volume_integral_error,
    )
    .ingredient("flux", r.flux, r.flux_error, Provenance::Mesh { resolution: h })
    .ingredient(
        "divergence_integral",
        r.volume_integral,
        r.volume_integral_error,
        Provenance::Grid { resolution: h },
    )
    .ingredient("scale", r.scale, 0.0, Provenance::Derived)
    .ingredient("relative_residual", r.relative(), 0.0, Provenance::Derived))
}

/// Cube `[-r, r]^D` used as the meshing region of half-spaces.
pub fn region<T: Real, const D: usize>(r: T) -> BoundingBox<T, D> {
    BoundingBox::centered(VecN::zero(), r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::report::Verdict;
    use crate::fields::{field_catalog, FieldKind};
    use crate::geometry::{ball, halfspace};
    use std::f64::consts::PI;

    fn chord() -> (ImplicitDomain<f64, 2>, ImplicitDomain<f64, 2>) {
        (
            halfspace(VecN::new2(0.0, -1.0), 0.0, region(3.0)).unwrap(),
            ball(VecN::zero(), 1.0).unwrap(),
        )
    }

    #[test]
    fn unit_ball_volumes() {
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
    }

    #[test]
    fn chord_suite_holds() {
        let (d1, d2) = chord();
        let e2 = field_catalog::<f64, 2>(FieldKind::Constant, &[0.0, 1.0]).unwrap();
        let s = FluxSetup::new("chord", &d1, &d2, QuadOptions::new(1.0 / 128.0)).unwrap();
        let t1 = s.thm1(&e2).unwrap();
        assert!((t1.lhs - 2.0).abs() < 1e-2, "{}", t1.lhs);
        assert!((t1.rhs - 2.0 * PI).abs() < 1e-2);
        assert_eq!(t1.verdict, Verdict::Holds);
        let t2 = s.thm2(&e2).unwrap();
        assert!((t2.rhs - PI).abs() < 1e-2);
        assert_eq!(t2.verdict, Verdict::Holds);
        assert_eq!(s.cor3().verdict, Verdict::Holds);
        let g = s.general(&e2).unwrap();
        assert!((g.rhs - PI).abs() < 1e-2, "{}", g.rhs);
        assert_eq!(g.verdict, Verdict::Holds);
    }

    #[test]
    fn chord_convex_probe() {
        let (d1, d2) = chord();
        let (claimed, derived) = check_thm4(&d1, &d2, QuadOptions::new(1.0 / 128.0)).unwrap();
        assert_eq!(claimed.verdict, Verdict::Violated);
        assert_eq!(derived.verdict, Verdict::Holds);
        assert!((derived.rhs - 2.0).abs() < 1e-6, "{}", derived.rhs);
        assert!(derived.slack.abs() < 0.01 * derived.rhs);
    }

    #[test]
    fn thm2_rejects_divergent_fields() {
        let (d1, d2) = chord();
        let f = field_catalog::<f64, 2>(FieldKind::Identity, &[]).unwrap();
        assert!(matches!(
            check_thm2(&d1, &d2, &f, QuadOptions::new(1.0 / 64.0)),
            Err(FluxError::NotDivergenceFree { .. })
        ));
    }

    #[test]
    fn nested_disks_thm1() {
        let d1 = ball(VecN::<f64, 2>::zero(), 1.0).unwrap();
        let d2 = ball(VecN::<f64, 2>::zero(), 2.0).unwrap();
        let f = field_catalog::<f64, 2>(FieldKind::Identity, &[]).unwrap();
        let r = check_thm1(&d1, &d2, &f, QuadOptions::new(1.0 / 128.0)).unwrap();
        assert!((r.lhs - 2.0 * PI).abs() < 1e-2);
        assert!((r.rhs - 16.0 * PI).abs() < 0.05, "{}", r.rhs);
        assert!(r.holds());
    }

    #[test]
    fn nonconvex_d2_is_rejected() {
        let d1 = halfspace(VecN::new2(0.0, -1.0), 0.0, region(3.0)).unwrap();
        let d2 = crate::geometry::annulus(VecN::zero(), 0.5, 1.0).unwrap();
        assert!(matches!(
            check_thm4(&d1, &d2, QuadOptions::new(1.0 / 64.0)),
            Err(FluxError::NotConvex { .. })
        ));
    }

    #[test]
    fn vdotn_both_variants() {
        let disk = ball(VecN::<f64, 2>::zero(), 1.0).unwrap();
        let upper = halfspace(VecN::new2(0.0, -1.0), 0.0, region(3.0)).unwrap();
        let (claimed, derived) =
            check_lemma_vdotn(&disk, &upper, VecN::new2(0.0, 1.0), QuadOptions::new(1.0 / 128.0)).unwrap();
        assert!((derived.lhs - 2.0).abs() < 1e-2);
        assert_eq!(derived.verdict, Verdict::Holds);
        assert_eq!(claimed.verdict, Verdict::Violated);
    }
}
