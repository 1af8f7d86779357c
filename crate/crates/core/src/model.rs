//! Systems, periodic solutions, switching schedules and feedback laws.
//!
//! Everything here is plain data plus pure evaluation hooks. Time-dependent
//! matrices and vector fields are stored as `Arc<dyn Fn>` so the types stay
//! cheap to clone and can be shared between worker threads.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type MatrixFn = Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>;
pub type CurveFn = Arc<dyn Fn(f64) -> DVector<f64> + Send + Sync>;
pub type FieldFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type JacobianFn = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// Steps per period used when a periodic solution has no analytic derivative
/// and no explicit finite-difference step is requested.
pub const DEFAULT_FD_STEPS: usize = 4000;

fn check_period(period: f64) -> Result<()> {
    if !(period.is_finite() && period > 0.0) {
        return Err(Error::domain(format!("period must be positive and finite, got {period}")));
    }
    Ok(())
}

/// `x'(t) = A(t) x(t) + B(t) u(t)` with `A`, `B` periodic of period `T`.
#[derive(Clone)]
pub struct LinearPeriodicSystem {
    dim: usize,
    input_dim: usize,
    period: f64,
    a_of: MatrixFn,
    b_of: MatrixFn,
}

impl std::fmt::Debug for LinearPeriodicSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LinearPeriodicSystem")
            .field("dim", &self.dim)
            .field("input_dim", &self.input_dim)
            .field("period", &self.period)
            .finish_non_exhaustive()
    }
}

impl LinearPeriodicSystem {
    pub fn new(
        dim: usize,
        input_dim: usize,
        period: f64,
        a_of: impl Fn(f64) -> DMatrix<f64> + Send + Sync + 'static,
        b_of: impl Fn(f64) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        if dim == 0 || input_dim == 0 {
            return Err(Error::domain("state and input dimensions must be positive"));
        }
        check_period(period)?;
        let sys = Self { dim, input_dim, period, a_of: Arc::new(a_of), b_of: Arc::new(b_of) };
        let (a0, b0) = (sys.a(0.0), sys.b(0.0));
        if a0.shape() != (dim, dim) || b0.shape() != (dim, input_dim) {
            return Err(Error::domain(format!(
                "A(0) is {:?} and B(0) is {:?}, expected ({dim}, {dim}) and ({dim}, {input_dim})",
                a0.shape(),
                b0.shape()
            )));
        }
        Ok(sys)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn a(&self, t: f64) -> DMatrix<f64> {
        (self.a_of)(t)
    }

    pub fn b(&self, t: f64) -> DMatrix<f64> {
        (self.b_of)(t)
    }

    /// Closed-loop coefficient `A(t) - B(t) F` of the delay-free system.
    pub fn closed_loop(&self, t: f64, gain: &DMatrix<f64>) -> DMatrix<f64> {
        self.a(t) - self.b(t) * gain
    }

    /// Checks `A(t+T) = A(t)`, `B(t+T) = B(t)` and finiteness on `samples`
    /// evenly spaced points of `[0, T)`.
    pub fn check_periodicity(&self, samples: usize, tol: f64) -> Result<()> {
        for k in 0..samples {
            let t = self.period * k as f64 / samples as f64;
            let (a, b) = (self.a(t), self.b(t));
            if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
                return Err(Error::Numerical(format!("non-finite system matrix at t = {t}")));
            }
            let da = (self.a(t + self.period) - &a).amax();
            let db = (self.b(t + self.period) - &b).amax();
            if da > tol || db > tol {
                return Err(Error::Consistency(format!(
                    "system not {}-periodic at t = {t}: |dA| = {da:e}, |dB| = {db:e}",
                    self.period
                )));
            }
        }
        Ok(())
    }
}

/// A `T`-periodic solution `x*(t)` of an uncontrolled system.
#[derive(Clone)]
pub struct PeriodicSolution {
    period: f64,
    x_star: CurveFn,
    x_star_dot: Option<CurveFn>,
}

impl PeriodicSolution {
    pub fn new(period: f64, x_star: impl Fn(f64) -> DVector<f64> + Send + Sync + 'static) -> Result<Self> {
        check_period(period)?;
        Ok(Self { period, x_star: Arc::new(x_star), x_star_dot: None })
    }

    /// Attaches an analytic time derivative.
    pub fn with_derivative(mut self, x_star_dot: impl Fn(f64) -> DVector<f64> + Send + Sync + 'static) -> Self {
        self.x_star_dot = Some(Arc::new(x_star_dot));
        self
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn has_analytic_derivative(&self) -> bool {
        self.x_star_dot.is_some()
    }

    pub fn state(&self, t: f64) -> DVector<f64> {
        (self.x_star)(t)
    }

    /// `x*'(t)`: analytic if available, else a 4th-order central difference
    /// with step `T / DEFAULT_FD_STEPS`.
    pub fn velocity(&self, t: f64) -> DVector<f64> {
        self.velocity_with_step(t, self.period / DEFAULT_FD_STEPS as f64)
    }

    pub fn velocity_with_step(&self, t: f64, h: f64) -> DVector<f64> {
        match &self.x_star_dot {
            Some(d) => d(t),
            None => {
                let x = &self.x_star;
                (x(t - 2.0 * h) - x(t - h) * 8.0 + x(t + h) * 8.0 - x(t + 2.0 * h)) / (12.0 * h)
            }
        }
    }

    /// Largest `|x*(t+T) - x*(t)|` over `samples` points of `[0, T)`.
    pub fn periodicity_defect(&self, samples: usize) -> f64 {
        (0..samples)
            .map(|k| {
                let t = self.period * k as f64 / samples as f64;
                (self.state(t + self.period) - self.state(t)).amax()
            })
            .fold(0.0, f64::max)
    }
}

/// `x' = f(x) + u` with a known periodic solution of the uncontrolled flow.
#[derive(Clone)]
pub struct NonlinearAutonomousSystem {
    dim: usize,
    f: FieldFn,
    jacobian: Option<JacobianFn>,
    periodic_solution: PeriodicSolution,
}

impl NonlinearAutonomousSystem {
    pub fn new(
        dim: usize,
        f: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        periodic_solution: PeriodicSolution,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("state dimension must be positive"));
        }
        let sys = Self { dim, f: Arc::new(f), jacobian: None, periodic_solution };
        let x0 = sys.periodic_solution.state(0.0);
        if x0.len() != dim || sys.field(&x0).len() != dim {
            return Err(Error::domain("vector field or periodic solution has the wrong dimension"));
        }
        Ok(sys)
    }

    pub fn with_jacobian(mut self, jac: impl Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        self.jacobian = Some(Arc::new(jac));
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn period(&self) -> f64 {
        self.periodic_solution.period()
    }

    pub fn periodic_solution(&self) -> &PeriodicSolution {
        &self.periodic_solution
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    pub fn field(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.f)(x)
    }

    /// Analytic Jacobian when supplied, else central finite differences.
    pub fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        match &self.jacobian {
            Some(j) => j(x),
            None => self.fd_jacobian(x),
        }
    }

    pub fn analytic_jacobian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        self.jacobian.as_ref().map(|j| j(x))
    }

    /// Central differences with step `1e-6 (1 + |x|)`.
    pub fn fd_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let h = 1e-6 * (1.0 + x.norm());
        let mut jac = DMatrix::zeros(self.dim, self.dim);
        for j in 0..self.dim {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            jac.set_column(j, &((self.field(&xp) - self.field(&xm)) / (2.0 * h)));
        }
        jac
    }

    /// Largest `|x*'(t) - f(x*(t))|` over `samples` points of one period.
    pub fn orbit_residual(&self, samples: usize) -> f64 {
        let ps = &self.periodic_solution;
        (0..samples)
            .map(|k| {
                let t = ps.period() * k as f64 / samples as f64;
                (ps.velocity(t) - self.field(&ps.state(t))).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Integer act-and-wait pattern.
///
/// Within each cycle of `wait + act` periods the controller is off for the
/// first `wait` periods and on for the remaining `act`. The feedback compares
/// against the state `delay` periods earlier, with `delay <= wait` so that the
/// delayed sample never reaches back past the start of the current cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SwitchingSchedule {
    wait: u32,
    act: u32,
    delay: u32,
}

impl SwitchingSchedule {
    pub fn new(wait: u32, act: u32, delay: u32) -> Result<Self> {
        if wait == 0 || act == 0 || delay == 0 {
            return Err(Error::domain(format!(
                "wait, act and delay must be positive periods, got ({wait}, {act}, {delay})"
            )));
        }
        if delay > wait {
            return Err(Error::domain(format!("delay ({delay}) must not exceed wait ({wait})")));
        }
        Ok(Self { wait, act, delay })
    }

    /// One period off, one period on, delay `T`.
    pub const fn alternating() -> Self {
        Self { wait: 1, act: 1, delay: 1 }
    }

    /// One period off, two on, delay `T`.
    pub const fn act_two_thirds() -> Self {
        Self { wait: 1, act: 2, delay: 1 }
    }

    /// Two periods off, two on, delay `2T`.
    pub const fn double_delay() -> Self {
        Self { wait: 2, act: 2, delay: 2 }
    }

    pub fn wait(&self) -> u32 {
        self.wait
    }

    pub fn act(&self) -> u32 {
        self.act
    }

    pub fn delay(&self) -> u32 {
        self.delay
    }

    pub fn cycle_periods(&self) -> u32 {
        self.wait + self.act
    }

    pub fn is_alternating(&self) -> bool {
        *self == Self::alternating()
    }

    /// Switch value on the whole period `[jT, (j+1)T)`.
    pub fn switch_for_period(&self, j: u64) -> u8 {
        u8::from(j % u64::from(self.cycle_periods()) >= u64::from(self.wait))
    }

    pub fn active_fraction(&self) -> f64 {
        f64::from(self.act) / f64::from(self.cycle_periods())
    }
}

/// Switch value `g(t)` of a schedule; right-continuous at the jumps.
pub fn switch_value(schedule: &SwitchingSchedule, t: f64, period: f64) -> Result<u8> {
    check_period(period)?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::domain(format!("time must be finite and nonnegative, got {t}")));
    }
    Ok(schedule.switch_for_period((t / period).floor() as u64))
}

/// `u(t) = -g(t) F (x(t) - x(t - dT))`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackLaw {
    gain: DMatrix<f64>,
    schedule: SwitchingSchedule,
}

impl FeedbackLaw {
    pub fn new(gain: DMatrix<f64>, schedule: SwitchingSchedule) -> Result<Self> {
        if gain.nrows() == 0 || gain.ncols() == 0 {
            return Err(Error::domain("gain matrix must be non-empty"));
        }
        if gain.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("gain entries must be finite"));
        }
        Ok(Self { gain, schedule })
    }

    pub fn gain(&self) -> &DMatrix<f64> {
        &self.gain
    }

    pub fn schedule(&self) -> &SwitchingSchedule {
        &self.schedule
    }

    /// Checks that the gain is `m x n` for a plant with `n` states and `m` inputs.
    pub fn check_shape(&self, dim: usize, input_dim: usize) -> Result<()> {
        if self.gain.shape() != (input_dim, dim) {
            return Err(Error::domain(format!(
                "gain is {:?}, expected ({input_dim}, {dim})",
                self.gain.shape()
            )));
        }
        Ok(())
    }

    pub fn input(&self, switch: u8, x: &DVector<f64>, x_delayed: &DVector<f64>) -> DVector<f64> {
        if switch == 0 {
            DVector::zeros(self.gain.nrows())
        } else {
            -(&self.gain * (x - x_delayed))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;
    use nalgebra::dvector;
    use proptest::prelude::*;

    #[test]
    fn alternating_schedule_values() {
        let g = SwitchingSchedule::alternating();
        assert_eq!(switch_value(&g, 0.5, 1.0).unwrap(), 0);
        assert_eq!(switch_value(&g, 1.5, 1.0).unwrap(), 1);
        assert_eq!(switch_value(&g, 1.0, 1.0).unwrap(), 1);
        assert_eq!(switch_value(&g, 2.0, 1.0).unwrap(), 0);
    }

    #[test]
    fn two_thirds_schedule() {
        let g = SwitchingSchedule::act_two_thirds();
        assert_eq!(switch_value(&g, 2.5, 1.0).unwrap(), 1);
        assert_eq!(switch_value(&g, 3.2, 1.0).unwrap(), 0);
        assert!((g.active_fraction() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(SwitchingSchedule::alternating().active_fraction(), 0.5);
    }

    #[test]
    fn every_schedule_starts_off() {
        for s in [
            SwitchingSchedule::alternating(),
            SwitchingSchedule::act_two_thirds(),
            SwitchingSchedule::double_delay(),
        ] {
            assert_eq!(switch_value(&s, 0.0, 1.0).unwrap(), 0);
        }
    }

    #[test]
    fn switch_value_domain_errors() {
        let g = SwitchingSchedule::alternating();
        assert!(matches!(switch_value(&g, -0.1, 1.0), Err(Error::Domain(_))));
        assert!(matches!(switch_value(&g, 0.1, 0.0), Err(Error::Domain(_))));
        assert!(matches!(switch_value(&g, 0.1, -2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn schedule_validation() {
        assert!(SwitchingSchedule::new(1, 1, 2).is_err());
        assert!(SwitchingSchedule::new(0, 1, 1).is_err());
        assert!(SwitchingSchedule::new(1, 0, 1).is_err());
        assert_eq!(SwitchingSchedule::new(2, 2, 2).unwrap(), SwitchingSchedule::double_delay());
    }

    #[test]
    fn feedback_vanishes_when_off_or_on_orbit() {
        let law = FeedbackLaw::new(dmatrix![0.7, 4.1; -4.1, 0.7], SwitchingSchedule::alternating()).unwrap();
        let x = dvector![0.3, -1.2];
        let xd = dvector![1.0, 2.0];
        assert_eq!(law.input(0, &x, &xd), DVector::zeros(2));
        assert_eq!(law.input(1, &x, &x), DVector::zeros(2));
        assert_eq!(law.input(1, &x, &xd), -(law.gain() * (&x - &xd)));
    }

    #[test]
    fn feedback_shape_check() {
        let law = FeedbackLaw::new(dmatrix![4.5, 0.6], SwitchingSchedule::alternating()).unwrap();
        assert!(law.check_shape(2, 1).is_ok());
        assert!(law.check_shape(2, 2).is_err());
        assert!(FeedbackLaw::new(dmatrix![f64::NAN, 0.0], SwitchingSchedule::alternating()).is_err());
    }

    #[test]
    fn finite_difference_velocity_matches_analytic() {
        let two_pi = 2.0 * std::f64::consts::PI;
        let ps = PeriodicSolution::new(1.0, move |t| dvector![(two_pi * t).cos(), -(two_pi * t).sin()]).unwrap();
        let exact = |t: f64| dvector![-two_pi * (two_pi * t).sin(), -two_pi * (two_pi * t).cos()];
        for k in 0..20 {
            let t = k as f64 / 20.0;
            assert!((ps.velocity(t) - exact(t)).amax() < 1e-9);
        }
        assert!(ps.periodicity_defect(64) < 1e-10);
    }

    proptest! {
        #[test]
        fn switch_is_constant_over_each_period(
            wait in 1u32..4, act in 1u32..4, j in 0u64..50, frac in 0.0f64..0.999,
        ) {
            let s = SwitchingSchedule::new(wait, act, 1).unwrap();
            let t0 = j as f64;
            let v0 = switch_value(&s, t0, 1.0).unwrap();
            prop_assert_eq!(switch_value(&s, t0 + frac, 1.0).unwrap(), v0);
            prop_assert_eq!(v0, s.switch_for_period(j));
        }

        #[test]
        fn active_fraction_matches_cycle_count(wait in 1u32..5, act in 1u32..5) {
            let s = SwitchingSchedule::new(wait, act, 1).unwrap();
            let on: u32 = (0..u64::from(s.cycle_periods())).map(|j| u32::from(s.switch_for_period(j))).sum();
            prop_assert_eq!(on, act);
            prop_assert!((s.active_fraction() - f64::from(on) / f64::from(wait + act)).abs() < 1e-15);
        }
    }
}
