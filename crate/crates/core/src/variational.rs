//! Linearization of an autonomous system along its periodic orbit.
//!
//! Deviations `dx = x - x*(t)` obey `dx' = A(t) dx + u` to first order, with
//! `A(t)` the Jacobian of the vector field at `x*(t)`. The input enters
//! additively, so the linear periodic system has `B(t) = I`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{LinearPeriodicSystem, NonlinearAutonomousSystem};

/// Sample points per period used to cross-check analytic and FD Jacobians.
const CONSISTENCY_SAMPLES: usize = 64;
const CONSISTENCY_TOL: f64 = 1e-4;

#[derive(Clone)]
pub struct VariationalSystem {
    base: LinearPeriodicSystem,
    source: Arc<NonlinearAutonomousSystem>,
    xstar_dot0: DVector<f64>,
}

impl VariationalSystem {
    pub fn base(&self) -> &LinearPeriodicSystem {
        &self.base
    }

    pub fn source(&self) -> &Arc<NonlinearAutonomousSystem> {
        &self.source
    }

    /// `x*'(0)`, the direction of the structural unit multiplier.
    pub fn xstar_dot0(&self) -> &DVector<f64> {
        &self.xstar_dot0
    }

    /// Largest `|A(t) x*'(t) - d/dt x*'(t)|` over `samples` points, with the
    /// outer derivative taken by 4th-order central differences of `x*'`.
    pub fn velocity_residual(&self, samples: usize) -> f64 {
        let ps = self.source.periodic_solution();
        let period = ps.period();
        let h = period * 1e-4;
        (0..samples)
            .map(|k| {
                let t = period * k as f64 / samples as f64;
                let v = |s: f64| ps.velocity(s);
                let accel = (v(t - 2.0 * h) - v(t - h) * 8.0 + v(t + h) * 8.0 - v(t + 2.0 * h)) / (12.0 * h);
                (self.base.a(t) * ps.velocity(t) - accel).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Builds the variational system `A(t) = df/dx (x*(t))`, `B(t) = I`.
///
/// Uses the analytic Jacobian when the system carries one, after checking it
/// against central finite differences along the orbit.
pub fn build_variational(nl: Arc<NonlinearAutonomousSystem>) -> Result<VariationalSystem> {
    let n = nl.dim();
    let ps = nl.periodic_solution().clone();
    let period = ps.period();
    if nl.has_analytic_jacobian() {
        for k in 0..CONSISTENCY_SAMPLES {
            let t = period * k as f64 / CONSISTENCY_SAMPLES as f64;
            let x = ps.state(t);
            let analytic = nl.analytic_jacobian(&x).expect("checked above");
            let fd = nl.fd_jacobian(&x);
            let gap = (&analytic - &fd).amax();
            if gap > CONSISTENCY_TOL * (1.0 + analytic.amax()) {
                return Err(Error::Consistency(format!(
                    "analytic and finite-difference Jacobians differ by {gap:e} at t = {t}"
                )));
            }
        }
    }
    let xstar_dot0 = ps.velocity(0.0);
    let field = nl.clone();
    let base = LinearPeriodicSystem::new(
        n,
        n,
        period,
        move |t| field.jacobian(&ps.state(t)),
        move |_| DMatrix::identity(n, n),
    )?;
    Ok(VariationalSystem { base, source: nl, xstar_dot0 })
}

/// `|Lambda x*'(0) - x*'(0)| / |x*'(0)|`.
pub fn verify_unit_eigenvector(vs: &VariationalSystem, lambda: &DMatrix<f64>) -> Result<f64> {
    let v = vs.xstar_dot0();
    let scale = v.norm();
    if scale == 0.0 {
        return Err(Error::DegenerateOrbit("x*'(0) = 0: the solution is an equilibrium".into()));
    }
    if lambda.shape() != (v.len(), v.len()) {
        return Err(Error::domain(format!("monodromy is {:?}, expected {}x{}", lambda.shape(), v.len(), v.len())));
    }
    Ok((lambda * v - v).norm() / scale)
}
