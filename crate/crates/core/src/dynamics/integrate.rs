use crate::error::{FluxError, Result};
use crate::fields::VectorField;
use crate::scalar::Real;
use crate::vector::VecN;

use super::Trajectory;

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Clone, Copy, Debug)]
pub struct IntegratorOptions<T> {
    /// Mixed absolute/relative per-step error target.
    pub tolerance: T,
    pub min_step: T,
    pub max_step: Option<T>,
    pub max_steps: usize,
}

impl<T: Real> IntegratorOptions<T> {
    pub fn new(tolerance: T) -> Self {
        Self {
            tolerance,
            min_step: T::lit(1e-12),
            max_step: None,
            max_steps: 10_000_000,
        }
    }
}

/// Dormand–Prince 5(4) from `x0` over `[0, t_end]`.
pub fn integrate<T: Real>(field: &VectorField<T, 2>, x0: VecN<T, 2>, t_end: T, tol: T) -> Result<Trajectory<T>> {
    integrate_with(field, x0, t_end, &IntegratorOptions::new(tol))
}

pub fn integrate_with<T: Real>(
    field: &VectorField<T, 2>,
    x0: VecN<T, 2>,
    t_end: T,
    opts: &IntegratorOptions<T>,
) -> Result<Trajectory<T>> {
    if !(t_end > T::zero()) || !(opts.tolerance > T::zero()) {
        return Err(FluxError::BadParams("horizon and tolerance must be positive".into()));
    }
    if !x0.is_finite() {
        return Err(FluxError::BadParams("initial state must be finite".into()));
    }
    let tol = opts.tolerance;
    let max_step = opts.max_step.unwrap_or(t_end);
    let lit = T::lit;

    let mut t = T::zero();
    let mut x = x0;
    let mut k1 = field.eval(&x);
    let mut times = vec![t];
    let mut states = vec![x];
    let mut derivs = vec![k1];

    let scale0 = tol + tol * x.max_abs();
    let d0 = x.max_abs() / scale0;
    let d1 = k1.max_abs() / scale0;
    let mut h = if d0 < lit(1e-5) || d1 < lit(1e-5) {
        lit(1e-6)
    } else {
        lit(0.01) * d0 / d1
    };
    h = h.min(max_step).min(t_end);

    let mut steps = 0usize;
    while t < t_end {
        steps += 1;
        if steps > opts.max_steps {
            return Err(FluxError::Runtime(format!(
                "integrator exceeded {} steps",
                opts.max_steps
            )));
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        let mut k = [k1; 7];
        for s in 1..7 {
            let mut y = x;
            for (j, kj) in k.iter().enumerate().take(s) {
                if A[s][j] != 0.0 {
                    y += *kj * (h * lit(A[s][j]));
                }
            }
            k[s] = field.eval(&y);
        }
        let mut x_new = x;
        for (j, kj) in k.iter().enumerate().take(6) {
            if A[6][j] != 0.0 {
                x_new += *kj * (h * lit(A[6][j]));
            }
        }
        let k_new = field.eval(&x_new);
        k[6] = k_new;
        let mut err_vec = VecN::<T, 2>::zero();
        for (j, kj) in k.iter().enumerate() {
            if E[j] != 0.0 {
                err_vec += *kj * (h * lit(E[j]));
            }
        }
        let mut err = T::zero();
        for i in 0..2 {
            let sc = tol + tol * x[i].abs().max(x_new[i].abs());
            err = err.max((err_vec[i] / sc).abs());
        }
        if !err.is_finite() || !x_new.is_finite() {
            h = h * lit(0.25);
            if h < opts.min_step {
                return Err(FluxError::StepUnderflow {
                    step: h.as_f64(),
                    time: t.as_f64(),
                });
            }
            continue;
        }
        if err <= T::one() {
            t = if last { t_end } else { t + h };
            x = x_new;
            k1 = k_new;
            times.push(t);
            states.push(x);
            derivs.push(k1);
            let grow = if err == T::zero() {
                lit(5.0)
            } else {
                (lit(0.9) * err.powf(lit(-0.2))).min(lit(5.0)).max(lit(0.2))
            };
            h = (h * grow).min(max_step);
        } else {
            h = h * (lit(0.9) * err.powf(lit(-0.2))).max(lit(0.1));
            if h < opts.min_step {
                return Err(FluxError::StepUnderflow {
                    step: h.as_f64(),
                    time: t.as_f64(),
                });
            }
        }
    }
    Trajectory::from_samples(times, states, derivs, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{field_catalog, FieldKind};
    use std::f64::consts::PI;

    #[test]
    fn circle_returns_after_one_period() {
        let f = field_catalog::<f64, 2>(FieldKind::Rotation, &[1.0]).unwrap();
        let tr = integrate(&f, VecN::new2(1.0, 0.0), 2.0 * PI, 1e-10).unwrap();
        assert!(tr.final_state().distance(&VecN::new2(1.0, 0.0)) < 1e-6);
        assert!(tr.eval(PI / 2.0).distance(&VecN::new2(0.0, 1.0)) < 1e-6);
    }

    #[test]
    fn constant_field_is_exact() {
        let f = field_catalog::<f64, 2>(FieldKind::Constant, &[1.0, 0.0]).unwrap();
        let tr = integrate(&f, VecN::zero(), 3.0, 1e-8).unwrap();
        assert!(tr.final_state().distance(&VecN::new2(3.0, 0.0)) < 1e-12);
    }

    #[test]
    fn limit_cycle_is_attracting() {
        let f = field_catalog::<f64, 2>(FieldKind::LimitCycle, &[]).unwrap();
        let tr = integrate(&f, VecN::new2(0.5, 0.0), 20.0, 1e-10).unwrap();
        assert!((tr.final_state().norm() - 1.0).abs() < 1e-4);
        // Closed-form radius r(t) = (1 + (1/r0^2 - 1) e^{-2t})^{-1/2}.
        let r = |t: f64| (1.0 + 3.0 * (-2.0 * t).exp()).powf(-0.5);
        for t in [0.5, 1.0, 2.0] {
            assert!((tr.eval(t).norm() - r(t)).abs() < 1e-6);
        }
    }

    #[test]
    fn blow_up_underflows() {
        let f = VectorField::<f64, 2>::new("blowup", |x| VecN::new2(x[0] * x[0], 0.0));
        let err = integrate(&f, VecN::new2(1.0, 0.0), 2.0, 1e-8).unwrap_err();
        assert!(
            matches!(err, FluxError::StepUnderflow { .. } | FluxError::Runtime(_)),
            "{err:?}"
        );
    }
}
