//! Planar trajectories, their displacement inside a domain, and the planar
//! flux corollary.

mod integrate;
mod masked;
mod planar;

pub use integrate::{integrate, integrate_with, IntegratorOptions};
pub use masked::{masked_arcs, masked_displacement, masked_quadrature, InsideArc};
pub use planar::{
    check_cor_2d, find_self_intersection, minimal_set_probe, phase_portrait_svg, MinimalSetProbe, PortraitBall,
    ProbeRow,
};

use std::io::Write;

use crate::error::{FluxError, Result};
use crate::geometry::{ImmersedCurve, ParametricCurve};
use crate::scalar::Real;
use crate::vector::VecN;

/// Accepted integrator steps with derivatives for cubic Hermite dense output.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T> {
    times: Vec<T>,
    states: Vec<VecN<T, 2>>,
    derivs: Vec<VecN<T, 2>>,
    step_tolerance: T,
}

impl<T: Real> Trajectory<T> {
    /// Knots with their derivatives; times must increase strictly.
    pub fn from_samples(
        times: Vec<T>,
        states: Vec<VecN<T, 2>>,
        derivs: Vec<VecN<T, 2>>,
        step_tolerance: T,
    ) -> Result<Self> {
        if times.len() < 2 || times.len() != states.len() || times.len() != derivs.len() {
            return Err(FluxError::BadParams(
                "trajectory needs at least two matching knots".into(),
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(FluxError::BadParams("trajectory times must increase strictly".into()));
        }
        Ok(Self {
            times,
            states,
            derivs,
            step_tolerance,
        })
    }

    /// Samples a closed curve at `n` parameter values plus the closing knot.
    pub fn from_parametric(curve: &ParametricCurve<T>, n: usize) -> Result<Self> {
        let n = n.max(3);
        let dt = curve.period() / T::from_count(n);
        let times: Vec<T> = (0..=n).map(|i| T::from_count(i) * dt).collect();
        let mut states: Vec<VecN<T, 2>> = times.iter().map(|t| curve.point(*t)).collect();
        states[n] = states[0];
        let derivs = times.iter().map(|t| curve.velocity(*t)).collect();
        Self::from_samples(times, states, derivs, T::zero())
    }

    /// Samples an immersed cover, `n_per_lap` knots per lap.
    pub fn from_immersed(curve: &ImmersedCurve<T>, n_per_lap: usize) -> Result<Self> {
        let n = n_per_lap.max(3) * curve.winding_count();
        let dt = curve.period() / T::from_count(n);
        let times: Vec<T> = (0..=n).map(|i| T::from_count(i) * dt).collect();
        let mut states: Vec<VecN<T, 2>> = times.iter().map(|t| curve.point(*t)).collect();
        states[n] = states[0];
        let derivs = times.iter().map(|t| curve.velocity(*t)).collect();
        Self::from_samples(times, states, derivs, T::zero())
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn states(&self) -> &[VecN<T, 2>] {
        &self.states
    }

    pub fn derivatives(&self) -> &[VecN<T, 2>] {
        &self.derivs
    }

    pub fn step_tolerance(&self) -> T {
        self.step_tolerance
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn start_time(&self) -> T {
        self.times[0]
    }

    pub fn end_time(&self) -> T {
        *self.times.last().expect("non-empty")
    }

    pub fn final_state(&self) -> VecN<T, 2> {
        *self.states.last().expect("non-empty")
    }

    /// Distance between the last and first states.
    pub fn closure_gap(&self) -> T {
        self.final_state().distance(&self.states[0])
    }

    pub(crate) fn segment(&self, i: usize) -> Hermite<T> {
        let h = self.times[i + 1] - self.times[i];
        Hermite::new(
            self.states[i],
            self.states[i + 1],
            self.derivs[i] * h,
            self.derivs[i + 1] * h,
        )
    }

    fn locate(&self, t: T) -> usize {
        let n = self.times.len();
        match self
            .times
            .binary_search_by(|x| x.partial_cmp(&t).expect("finite times"))
        {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    /// Dense output at `t`, clamped to the covered interval.
    pub fn eval(&self, t: T) -> VecN<T, 2> {
        let t = t.max(self.start_time()).min(self.end_time());
        let i = self.locate(t);
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        self.segment(i).eval((t - t0) / (t1 - t0))
    }

    /// Dense derivative at `t`.
    pub fn eval_derivative(&self, t: T) -> VecN<T, 2> {
        let t = t.max(self.start_time()).min(self.end_time());
        let i = self.locate(t);
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        self.segment(i).derivative((t - t0) / (t1 - t0)) * (T::one() / (t1 - t0))
    }

    /// The same path traversed backwards, with time `t -> -t`.
    pub fn reversed(&self) -> Self {
        Self {
            times: self.times.iter().rev().map(|t| -*t).collect(),
            states: self.states.iter().rev().copied().collect(),
            derivs: self.derivs.iter().rev().map(|d| -*d).collect(),
            step_tolerance: self.step_tolerance,
        }
    }

    /// Restriction to `[s, t]` with new end knots from dense output.
    pub fn window(&self, s: T, t: T) -> Result<Self> {
        let s = s.max(self.start_time());
        let t = t.min(self.end_time());
        if !(t > s) {
            return Err(FluxError::BadParams(format!("empty window [{s}, {t}]")));
        }
        let mut times = vec![s];
        let mut states = vec![self.eval(s)];
        let mut derivs = vec![self.eval_derivative(s)];
        for i in 0..self.times.len() {
            if self.times[i] > s && self.times[i] < t {
                times.push(self.times[i]);
                states.push(self.states[i]);
                derivs.push(self.derivs[i]);
            }
        }
        times.push(t);
        states.push(self.eval(t));
        derivs.push(self.eval_derivative(t));
        Self::from_samples(times, states, derivs, self.step_tolerance)
    }

    /// Appends the straight segment back to the first state over unit time.
    pub fn closed_with_segment(&self) -> Self {
        let mut out = self.clone();
        let last = self.final_state();
        let chord = self.states[0] - last;
        let t = self.end_time() + T::one();
        let n = out.derivs.len();
        out.derivs[n - 1] = chord;
        out.times.push(t);
        out.states.push(self.states[0]);
        out.derivs.push(chord);
        out
    }

    /// CSV with header `t,x,y`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,x,y")?;
        for (t, x) in self.times.iter().zip(&self.states) {
            writeln!(out, "{t},{},{}", x[0], x[1])?;
        }
        Ok(())
    }
}

/// Cubic Hermite piece on `u` in `[-1/2, 1/2]`, written so that reversing
/// the piece gives bitwise mirrored values.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Hermite<T> {
    a: VecN<T, 2>,
    b: VecN<T, 2>,
    c: VecN<T, 2>,
    e: VecN<T, 2>,
}

impl<T: Real> Hermite<T> {
    fn new(p0: VecN<T, 2>, p1: VecN<T, 2>, m0: VecN<T, 2>, m1: VecN<T, 2>) -> Self {
        let half = T::lit(0.5);
        let dp = p1 - p0;
        let dm = m1 - m0;
        let sm = m0 + m1;
        Self {
            a: (p0 + p1) * half - dm * T::lit(0.125),
            b: dp * T::lit(1.5) - sm * T::lit(0.25),
            c: dm * half,
            e: sm - dp * T::lit(2.0),
        }
    }

    /// Value at local parameter `s` in `[0, 1]`.
    pub(crate) fn eval(&self, s: T) -> VecN<T, 2> {
        let u = s - T::lit(0.5);
        self.a + (self.b + (self.c + self.e * u) * u) * u
    }

    /// `d/ds` at `s`.
    pub(crate) fn derivative(&self, s: T) -> VecN<T, 2> {
        let u = s - T::lit(0.5);
        self.b + (self.c * T::lit(2.0) + self.e * (T::lit(3.0) * u)) * u
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_interpolates_ends() {
        let h = Hermite::new(
            VecN::new2(0.0, 0.0),
            VecN::new2(1.0, 2.0),
            VecN::new2(1.0, 0.0),
            VecN::new2(0.0, 1.0),
        );
        assert!(h.eval(0.0).distance(&VecN::new2(0.0, 0.0)) < 1e-15);
        assert!(h.eval(1.0).distance(&VecN::new2(1.0, 2.0)) < 1e-15);
        assert!(h.derivative(0.0).distance(&VecN::new2(1.0, 0.0)) < 1e-15);
        assert!(h.derivative(1.0).distance(&VecN::new2(0.0, 1.0)) < 1e-15);
    }

    #[test]
    fn reversed_eval_mirrors_bitwise() {
        let c = ParametricCurve::circle(VecN::new2(0.3, -0.2), 1.3).unwrap();
        let tr = Trajectory::from_parametric(&c, 37).unwrap();
        let rev = tr.reversed();
        for i in 0..tr.len() - 1 {
            let j = tr.len() - 2 - i;
            for k in 0..=16 {
                let s = k as f64 / 16.0;
                assert_eq!(tr.segment(i).eval(s), rev.segment(j).eval(1.0 - s));
            }
        }
    }

    #[test]
    fn window_and_closure() {
        let c = ParametricCurve::circle(VecN::zero(), 1.0).unwrap();
        let tr = Trajectory::from_parametric(&c, 400).unwrap();
        assert!(tr.closure_gap() == 0.0);
        let w = tr.window(1.0, 2.0).unwrap();
        assert!(w.states()[0].distance(&VecN::new2(1f64.cos(), 1f64.sin())) < 1e-8);
        let closed = w.closed_with_segment();
        assert_eq!(closed.closure_gap(), 0.0);
    }

    #[test]
    fn csv_header() {
        let c = ParametricCurve::circle(VecN::zero(), 1.0).unwrap();
        let mut buf = Vec::new();
        Trajectory::from_parametric(&c, 8).unwrap().write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("t,x,y\n0,1,0\n"));
    }

    #[test]
    fn rejects_non_increasing_times() {
        let z = VecN::<f64, 2>::zero();
        assert!(Trajectory::from_samples(vec![0.0, 0.0], vec![z, z], vec![z, z], 0.0).is_err());
    }
}
