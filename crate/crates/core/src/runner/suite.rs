use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{BoundReport, FluxSetup, QuadOptions};
use crate::error::Result;
use crate::fields::{FieldKind, VectorField};
use crate::geometry::ImplicitDomain;

use super::config::{FieldSpec, ShapeSpec};

/// One randomized `(D1, D2, f)` configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomCase {
    pub index: usize,
    pub seed: u64,
    pub d1: ShapeSpec,
    pub d2: ShapeSpec,
    pub field: FieldSpec,
}

/// Mesh flux of the clipped surface against the shell-sampling oracle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub label: String,
    pub mesh_flux: f64,
    pub mesh_error: f64,
    pub oracle: f64,
    pub oracle_se: f64,
    pub samples: usize,
    pub shell_width: f64,
    pub deviation: f64,
    /// `3 (oracle_se + mesh_error)`.
    pub allowance: f64,
    pub agrees: bool,
}

/// Reports of one configuration plus its oracle comparison.
#[derive(Clone, Debug)]
pub struct CaseResult {
    pub reports: Vec<BoundReport>,
    pub oracle: Option<OracleRow>,
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    round3(rng.gen_range(lo..hi))
}

fn point(rng: &mut ChaCha8Rng, dim: usize, half: f64) -> Vec<f64> {
    (0..dim).map(|_| uniform(rng, -half, half)).collect()
}

fn direction(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.2 && n <= 1.0 {
            return v.iter().map(|x| round3(x / n)).collect();
        }
    }
}

fn shape(name: &str, params: Vec<f64>, region: Option<f64>) -> ShapeSpec {
    ShapeSpec {
        shape: name.into(),
        params,
        region,
    }
}

fn random_d1(rng: &mut ChaCha8Rng, dim: usize) -> ShapeSpec {
    let kinds = if dim == 3 { 5 } else { 4 };
    match rng.gen_range(0..kinds) {
        0 => {
            let mut p = point(rng, dim, 0.8);
            p.push(uniform(rng, 0.3, 0.9));
            shape("ball", p, None)
        }
        1 => {
            let mut p = direction(rng, dim);
            p.push(uniform(rng, -0.5, 0.5));
            shape("halfspace", p, Some(2.0))
        }
        2 => {
            let mut p = point(rng, dim, 0.5);
            let r_in = uniform(rng, 0.25, 0.45);
            p.push(r_in);
            p.push(round3(r_in + rng.gen_range(0.2..0.4)));
            shape("annulus", p, None)
        }
        3 => {
            let mut p = point(rng, dim, 0.5);
            let half: Vec<f64> = (0..dim).map(|_| uniform(rng, 0.3, 0.8)).collect();
            p.extend(&half);
            p.push(uniform(rng, 0.05, 0.15));
            shape("box", p, None)
        }
        _ => {
            let mut p = point(rng, dim, 0.4);
            p.push(uniform(rng, 0.5, 0.7));
            p.push(uniform(rng, 0.15, 0.3));
            shape("torus", p, None)
        }
    }
}

fn random_d2(rng: &mut ChaCha8Rng, dim: usize) -> ShapeSpec {
    let mut p = point(rng, dim, 0.3);
    if rng.gen_bool(0.5) {
        p.push(uniform(rng, 0.6, 1.0));
        shape("ball", p, None)
    } else {
        let half: Vec<f64> = (0..dim).map(|_| uniform(rng, 0.5, 0.9)).collect();
        p.extend(&half);
        p.push(uniform(rng, 0.1, 0.25));
        shape("box", p, None)
    }
}

fn random_field(rng: &mut ChaCha8Rng, dim: usize) -> FieldSpec {
    let kinds: Vec<FieldKind> = FieldKind::ALL
        .into_iter()
        .filter(|k| dim == 2 || *k != FieldKind::LimitCycle)
        .collect();
    let kind = kinds[rng.gen_range(0..kinds.len())];
    let params = match kind {
        FieldKind::Constant => direction(rng, dim),
        FieldKind::Rotation => vec![uniform(rng, 0.5, 2.0)],
        _ => Vec::new(),
    };
    FieldSpec {
        kind: kind.name().into(),
        params,
    }
}

/// `count` seeded configurations mixing zoo shapes and catalog fields.
pub fn random_cases(dimension: usize, count: usize, seed: u64) -> Vec<RandomCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((dimension as u64) << 32));
    (0..count)
        .map(|index| RandomCase {
            index,
            seed: rng.gen(),
            d1: random_d1(&mut rng, dimension),
            d2: random_d2(&mut rng, dimension),
            field: random_field(&mut rng, dimension),
        })
        .collect()
}

/// THM1, THM2 (divergence-free fields only), COR3 and GENERAL_EQ5 on one
/// configuration, with the oracle comparison when `oracle` is
/// `(samples, shell_width)`.
pub fn run_case<const D: usize>(
    label: &str,
    d1: &ImplicitDomain<f64, D>,
    d2: &ImplicitDomain<f64, D>,
    field: &VectorField<f64, D>,
    opts: QuadOptions<f64>,
    oracle: Option<(usize, f64)>,
) -> Result<CaseResult> {
    let setup = FluxSetup::new(label, d1, d2, opts)?;
    let mut reports = vec![setup.thm1(field)?];
    if field.is_divergence_free() {
        reports.push(setup.thm2(field)?);
    }
    reports.push(setup.cor3());
    reports.push(setup.general(field)?);
    let oracle = match oracle {
        Some((samples, width)) => {
            let mesh = setup.clipped_flux(field);
            let mc = setup.oracle(field, samples, opts.seed, width)?;
            let deviation = (mesh.value - mc.value).abs();
            let allowance = 3.0 * (mc.error_estimate + mesh.error_estimate);
            Some(OracleRow {
                label: label.into(),
                mesh_flux: mesh.value,
                mesh_error: mesh.error_estimate,
                oracle: mc.value,
                oracle_se: mc.error_estimate,
                samples,
                shell_width: width,
                deviation,
                allowance,
                agrees: deviation <= allowance,
            })
        }
        None => None,
    };
    Ok(CaseResult { reports, oracle })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cases_are_reproducible() {
        assert_eq!(random_cases(2, 10, 7), random_cases(2, 10, 7));
        assert_ne!(random_cases(2, 10, 7), random_cases(2, 10, 8));
        assert!(random_cases(3, 40, 1).iter().any(|c| c.d1.shape == "torus"));
        assert!(random_cases(2, 40, 1).iter().all(|c| c.d1.shape != "torus"));
    }
}
