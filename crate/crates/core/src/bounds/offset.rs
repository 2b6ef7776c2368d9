use serde::{Deserialize, Serialize};

use crate::error::{FluxError, Result};
use crate::fields::VectorField;
use crate::geometry::{clip_mesh, mesh_boundary, ImplicitDomain};
use crate::quadrature::{surface_flux, volume_with, GridOptions};
use crate::scalar::Real;

use super::checks::QuadOptions;

/// Quantities of the offset domain `{phi2 <= eta}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffsetRow {
    pub eta: f64,
    pub volume: f64,
    pub area: f64,
    pub boundary_flux: f64,
    /// Flux across `∂D1` clipped to the offset domain.
    pub clipped_flux: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffsetStudy {
    pub rows: Vec<OffsetRow>,
    pub volume_rate: f64,
    pub area_rate: f64,
    pub flux_rate: f64,
    pub clipped_flux_rate: Option<f64>,
    /// Successive differences of volume, area and boundary flux all shrink.
    pub monotone: bool,
}

/// Least-squares slope of `ln y` against `ln x`, skipping non-positive pairs.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

fn cauchy(rows: &[OffsetRow], q: impl Fn(&OffsetRow) -> f64) -> Vec<f64> {
    rows.windows(2).map(|w| (q(&w[0]) - q(&w[1])).abs()).collect()
}

/// Tabulates volume, area and boundary flux of `{phi2 <= eta}` for each
/// `eta`, plus the clipped flux of `∂D1` when `d1` is given, and fits the
/// rate at which successive differences shrink against the `eta` steps.
///
/// Every row is meshed on the same grid so that discretization error is
/// common to all rows.
pub fn offset_convergence_study<T: Real, const D: usize>(
    d2: &ImplicitDomain<T, D>,
    d1: Option<&ImplicitDomain<T, D>>,
    field: &VectorField<T, D>,
    etas: &[T],
    opts: QuadOptions<T>,
) -> Result<OffsetStudy> {
    if etas.is_empty() || etas.iter().any(|e| *e < T::zero()) {
        return Err(FluxError::BadParams(
            "offsets must be a non-empty list of non-negative values".into(),
        ));
    }
    if etas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(FluxError::BadParams("offsets must be strictly decreasing".into()));
    }
    let h = opts.resolution;
    let bbox = d2.bounding_box().expanded(etas[0]);
    let surface1 = match d1 {
        Some(d1) => Some(mesh_boundary(
            &d1.clone()
                .with_bounding_box(d1.bounding_box().intersect(&bbox.expanded(h * T::lit(4.0)))),
            h,
        )?),
        None => None,
    };
    let grid = GridOptions {
        subcells: opts.grid_subcells,
        richardson: false,
    };
    let mut rows = Vec::with_capacity(etas.len());
    for &eta in etas {
        let dom = d2.offset(eta).with_bounding_box(bbox);
        let mesh = mesh_boundary(&dom, h)?;
        rows.push(OffsetRow {
            eta: eta.as_f64(),
            volume: volume_with(&dom, h, &grid)?.value.as_f64(),
            area: mesh.total_area().as_f64(),
            boundary_flux: surface_flux(&mesh, field).value.as_f64(),
            clipped_flux: surface1.as_ref().map(|s| {
                surface_flux(&clip_mesh(s, &dom, opts.refine_depth), field)
                    .value
                    .as_f64()
            }),
        });
    }
    let steps: Vec<f64> = rows.windows(2).map(|w| w[0].eta - w[1].eta).collect();
    let dv = cauchy(&rows, |r| r.volume);
    let da = cauchy(&rows, |r| r.area);
    let df = cauchy(&rows, |r| r.boundary_flux);
    let shrinking = |d: &[f64]| d.windows(2).all(|w| w[1] < w[0]);
    Ok(OffsetStudy {
        volume_rate: loglog_slope(&steps, &dv),
        area_rate: loglog_slope(&steps, &da),
        flux_rate: loglog_slope(&steps, &df),
        clipped_flux_rate: surface1
            .as_ref()
            .map(|_| loglog_slope(&steps, &cauchy(&rows, |r| r.clipped_flux.unwrap_or(f64::NAN)))),
        monotone: shrinking(&dv) && shrinking(&da) && shrinking(&df),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{field_catalog, FieldKind};
    use crate::geometry::ball;
    use crate::vector::VecN;
    use std::f64::consts::PI;

    #[test]
    fn slope_of_power_law() {
        let xs = [0.1, 0.05, 0.025];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powi(2)).collect();
        assert!((loglog_slope(&xs, &ys) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ball_offsets_match_closed_form() {
        let d2 = ball(VecN::<f64, 2>::zero(), 1.0).unwrap();
        let f = field_catalog::<f64, 2>(FieldKind::Identity, &[]).unwrap();
        let study =
            offset_convergence_study(&d2, None, &f, &[0.2, 0.1, 0.05, 0.0], QuadOptions::new(1.0 / 256.0)).unwrap();
        for (row, want) in study.rows.iter().zip([1.382, 0.660, 0.322, 0.0]) {
            assert!((row.volume - PI - want).abs() < 5e-3, "{row:?}");
        }
        assert!((study.rows[3].area - 2.0 * PI).abs() < 1e-3);
        let study =
            offset_convergence_study(&d2, None, &f, &[0.2, 0.1, 0.05, 0.025], QuadOptions::new(1.0 / 256.0)).unwrap();
        assert!(study.monotone);
        assert!(study.volume_rate > 0.8 && study.area_rate > 0.8 && study.flux_rate > 0.8);
    }

    #[test]
    fn rejects_increasing_offsets() {
        let d2 = ball(VecN::<f64, 2>::zero(), 1.0).unwrap();
        let f = field_catalog::<f64, 2>(FieldKind::Identity, &[]).unwrap();
        assert!(offset_convergence_study(&d2, None, &f, &[0.1, 0.2], QuadOptions::new(0.01)).is_err());
    }
}
