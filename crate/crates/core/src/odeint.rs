//! Fixed-step classical RK4.
//!
//! The step is always `T / N` for the orbit period `T`, so every integer
//! multiple of `T` (and therefore every switching instant and every delayed
//! sample) is a grid node.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::LinearPeriodicSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntegratorConfig {
    pub steps_per_period: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { steps_per_period: 4000 }
    }
}

impl IntegratorConfig {
    pub fn new(steps_per_period: usize) -> Result<Self> {
        if steps_per_period == 0 {
            return Err(Error::domain("steps_per_period must be positive"));
        }
        Ok(Self { steps_per_period })
    }

    pub fn step(&self, period: f64) -> f64 {
        period / self.steps_per_period as f64
    }
}

/// States at every grid node of `[t0, t1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
}

/// One classical RK4 step.
pub fn rk4_step<F>(rhs: &F, t: f64, x: &DVector<f64>, h: f64) -> DVector<f64>
where
    F: Fn(f64, &DVector<f64>) -> DVector<f64>,
{
    let k1 = rhs(t, x);
    let k2 = rhs(t + 0.5 * h, &(x + &k1 * (0.5 * h)));
    let k3 = rhs(t + 0.5 * h, &(x + &k2 * (0.5 * h)));
    let k4 = rhs(t + h, &(x + &k3 * h));
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Number of steps of size `h` covering `[t0, t1]`; errors unless the span is
/// a whole number of steps.
fn step_count(t0: f64, t1: f64, h: f64) -> Result<usize> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::domain(format!("step must be positive, got {h}")));
    }
    if !(t0.is_finite() && t1.is_finite()) || t1 < t0 {
        return Err(Error::domain(format!("need finite t1 >= t0, got [{t0}, {t1}]")));
    }
    let ratio = (t1 - t0) / h;
    let steps = ratio.round();
    if (ratio - steps).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::domain(format!(
            "interval [{t0}, {t1}] is not a whole number of steps of {h}"
        )));
    }
    Ok(steps as usize)
}

/// Integrates `x' = rhs(t, x)` on the grid `t0 + j h` up to `t1`.
pub fn integrate_ode<F>(rhs: F, x0: &DVector<f64>, t0: f64, t1: f64, h: f64) -> Result<GridTrajectory>
where
    F: Fn(f64, &DVector<f64>) -> DVector<f64>,
{
    let steps = step_count(t0, t1, h)?;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(t0);
    states.push(x0.clone());
    let mut x = x0.clone();
    for j in 0..steps {
        let t = t0 + j as f64 * h;
        x = rk4_step(&rhs, t, &x, h);
        let t_next = t0 + (j + 1) as f64 * h;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { time: t_next });
        }
        times.push(t_next);
        states.push(x.clone());
    }
    Ok(GridTrajectory { times, states })
}

/// State-transition matrix `Phi(to, from)` (open loop) or `Upsilon(to, from)`
/// (closed loop without delay).
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    pub value: DMatrix<f64>,
    pub from_time: f64,
    pub to_time: f64,
}

/// RK4 one-step map of the linear ODE `M' = C(t) M`: applying it to `M_j`
/// gives exactly the RK4 update of `M_j`.
pub fn rk4_propagator<C>(coeff: &C, t: f64, h: f64) -> DMatrix<f64>
where
    C: Fn(f64) -> DMatrix<f64>,
{
    let c1 = coeff(t);
    let c2 = coeff(t + 0.5 * h);
    let c4 = coeff(t + h);
    let n = c1.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let k1 = c1;
    let k2 = &c2 * (&id + &k1 * (0.5 * h));
    let k3 = &c2 * (&id + &k2 * (0.5 * h));
    let k4 = &c4 * (&id + &k3 * h);
    id + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

fn coefficient<'a>(
    sys: &'a LinearPeriodicSystem,
    gain: Option<&'a DMatrix<f64>>,
) -> Result<impl Fn(f64) -> DMatrix<f64> + 'a> {
    if let Some(f) = gain {
        if f.shape() != (sys.input_dim(), sys.dim()) {
            return Err(Error::domain(format!(
                "gain is {:?}, expected ({}, {})",
                f.shape(),
                sys.input_dim(),
                sys.dim()
            )));
        }
    }
    Ok(move |t: f64| match gain {
        Some(f) => sys.closed_loop(t, f),
        None => sys.a(t),
    })
}

/// Transition matrix of `x' = A(t) x` (no gain) or `x' = (A(t) - B(t) F) x`,
/// integrated from the identity over the grid of step `T / N`.
pub fn transition_matrix(
    sys: &LinearPeriodicSystem,
    gain: Option<&DMatrix<f64>>,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<TransitionMatrix> {
    let h = cfg.step(sys.period());
    let steps = step_count(t0, t1, h)?;
    let coeff = coefficient(sys, gain)?;
    let mut m = DMatrix::identity(sys.dim(), sys.dim());
    for j in 0..steps {
        let t = t0 + j as f64 * h;
        m = rk4_propagator(&coeff, t, h) * m;
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { time: t + h });
        }
    }
    Ok(TransitionMatrix { value: m, from_time: t0, to_time: t1 })
}

/// Per-step propagators `R_j = Psi(s_{j+1}, s_j)` over one period `[0, T]`.
pub fn period_propagators(
    sys: &LinearPeriodicSystem,
    gain: Option<&DMatrix<f64>>,
    cfg: &IntegratorConfig,
) -> Result<Vec<DMatrix<f64>>> {
    let h = cfg.step(sys.period());
    let coeff = coefficient(sys, gain)?;
    Ok((0..cfg.steps_per_period).map(|j| rk4_propagator(&coeff, j as f64 * h, h)).collect())
}
