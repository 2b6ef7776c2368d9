use num_rational::Ratio;
use num_traits::{Num, Signed, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::report::{BoundReport, InequalityId, Provenance, Verdict};

/// A finite measure on `X = {0, .., n-1}` with a function and two subsets.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteInstance<T> {
    pub weights: Vec<T>,
    pub values: Vec<T>,
    pub u: Vec<bool>,
    pub v: Vec<bool>,
}

/// Exact evaluation of both sides for `U \ V` and `U ∩ V`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureLemmaOutcome<T> {
    pub difference_lhs: T,
    pub intersection_lhs: T,
    /// `½ (μ(U) |f|_∞ + |∫_U f dμ|)`.
    pub rhs: T,
    pub mass_u: T,
    /// Essential sup of `|f|` on `U`.
    pub sup_f: T,
    pub integral_u: T,
}

impl<T: Num + Signed + PartialOrd + Clone + ToPrimitive> MeasureLemmaOutcome<T> {
    pub fn holds(&self) -> bool {
        self.difference_lhs <= self.rhs && self.intersection_lhs <= self.rhs
    }

    /// Reports for `U \ V` and `U ∩ V`; verdicts come from the exact comparison.
    pub fn reports(&self, label: &str) -> [BoundReport; 2] {
        let f = |x: &T| x.to_f64().unwrap_or(f64::NAN);
        let make = |name: &str, lhs: &T| {
            let mut r = BoundReport::with_tolerance(
                InequalityId::MEASURE_LEMMA,
                format!("{label}:{name}"),
                f(lhs),
                f(&self.rhs),
                0.0,
                0.0,
            )
            .ingredient("mass_u", f(&self.mass_u), 0.0, Provenance::Exact)
            .ingredient("sup_f", f(&self.sup_f), 0.0, Provenance::Exact)
            .ingredient("integral_u", f(&self.integral_u), 0.0, Provenance::Exact);
            r.verdict = if *lhs <= self.rhs {
                Verdict::Holds
            } else {
                Verdict::Violated
            };
            r
        };
        [
            make("u-minus-v", &self.difference_lhs),
            make("u-and-v", &self.intersection_lhs),
        ]
    }
}

/// Evaluates `|∫_{U∖V} f dμ|`, `|∫_{U∩V} f dμ|` and `½ (μ(U)|f|_∞ + |∫_U f dμ|)`
/// in the arithmetic of `T`.
pub fn check_measure_lemma<T>(inst: &DiscreteInstance<T>) -> MeasureLemmaOutcome<T>
where
    T: Num + Signed + PartialOrd + Clone,
{
    let n = inst.weights.len();
    let (mut diff, mut inter, mut mass, mut sup) = (T::zero(), T::zero(), T::zero(), T::zero());
    for i in 0..n {
        if !inst.u[i] {
            continue;
        }
        let w = inst.weights[i].clone();
        let wf = w.clone() * inst.values[i].clone();
        if inst.v[i] {
            inter = inter + wf;
        } else {
            diff = diff + wf;
        }
        if w > T::zero() && inst.values[i].abs() > sup {
            sup = inst.values[i].abs();
        }
        mass = mass + w;
    }
    let integral = diff.clone() + inter.clone();
    let two = T::one() + T::one();
    let rhs = (mass.clone() * sup.clone() + integral.abs()) / two;
    MeasureLemmaOutcome {
        difference_lhs: diff.abs(),
        intersection_lhs: inter.abs(),
        rhs,
        mass_u: mass,
        sup_f: sup,
        integral_u: integral,
    }
}

/// A random instance with at most `max_size` points and small rational data.
pub fn random_instance(rng: &mut ChaCha8Rng, max_size: usize) -> DiscreteInstance<Ratio<i64>> {
    let n = rng.gen_range(1..=max_size.max(1));
    let mut small = |lo: i64, hi: i64| Ratio::new(rng.gen_range(lo..=hi), rng.gen_range(1..=12));
    let weights = (0..n).map(|_| small(0, 10)).collect();
    let values = (0..n).map(|_| small(-10, 10)).collect();
    DiscreteInstance {
        weights,
        values,
        u: (0..n).map(|_| rng.gen_bool(0.7)).collect(),
        v: (0..n).map(|_| rng.gen_bool(0.5)).collect(),
    }
}

/// Seeded generator for [`random_instance`].
pub fn instance_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64) -> Ratio<i64> {
        Ratio::from_integer(n)
    }

    #[test]
    fn two_point_case_is_tight() {
        let inst = DiscreteInstance {
            weights: vec![r(1), r(1)],
            values: vec![r(1), r(-1)],
            u: vec![true, true],
            v: vec![true, false],
        };
        let out = check_measure_lemma(&inst);
        assert_eq!(out.difference_lhs, r(1));
        assert_eq!(out.rhs, r(1));
        let [a, b] = out.reports("tight");
        assert_eq!(a.slack, 0.0);
        assert_eq!(a.verdict, Verdict::Holds);
        assert_eq!(b.verdict, Verdict::Holds);
    }

    #[test]
    fn zero_function() {
        let inst = DiscreteInstance {
            weights: vec![r(3)],
            values: vec![r(0)],
            u: vec![true],
            v: vec![false],
        };
        let out = check_measure_lemma(&inst);
        assert_eq!(out.rhs, r(0));
        assert!(out.holds());
    }

    #[test]
    fn zero_weight_points_do_not_raise_the_sup() {
        let inst = DiscreteInstance {
            weights: vec![r(1), r(0)],
            values: vec![r(1), r(100)],
            u: vec![true, true],
            v: vec![true, true],
        };
        assert_eq!(check_measure_lemma(&inst).sup_f, r(1));
    }

    #[test]
    fn random_instances_hold() {
        let mut rng = instance_rng(7);
        for _ in 0..200 {
            assert!(check_measure_lemma(&random_instance(&mut rng, 20)).holds());
        }
    }
}
