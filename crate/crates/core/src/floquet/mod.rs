//! Closed-loop monodromy of the act-and-wait delayed feedback loop.
//!
//! Two independent constructions are provided:
//!
//! * [`monodromy_integral`] evaluates the closed-form expression for the
//!   alternating (1,1,1) schedule,
//!   `Lambda = Upsilon(T,0) Phi(T,0) + int_T^2T Upsilon(2T,s) B(s) F Phi(s-T,0) ds`,
//!   where `Phi` belongs to `x' = A x` and `Upsilon` to `x' = (A - B F) x`.
//! * [`monodromy_propagate`] simulates the closed loop over one cycle from each
//!   canonical basis vector. It works for every schedule and serves as the
//!   oracle for the integral route.

pub mod eigen;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{FeedbackLaw, LinearPeriodicSystem};
use crate::odeint::{period_propagators, IntegratorConfig};
use crate::simulate::propagate_cycles;

pub use eigen::{eigendecompose, eigenvalues, normalize_eigenvector, EigenPair};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Eigenvalues within this distance of 1 count as the unit multiplier.
    pub tol_unit: f64,
    /// Slack on the unit-circle test for the remaining multipliers.
    pub tol_margin: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { tol_unit: 1e-6, tol_margin: 1e-9 }
    }
}

impl Tolerances {
    pub fn new(tol_unit: f64, tol_margin: f64) -> Result<Self> {
        if !(tol_unit.is_finite() && tol_unit > 0.0) || !(tol_margin.is_finite() && tol_margin >= 0.0) {
            return Err(Error::domain(format!("invalid tolerances ({tol_unit}, {tol_margin})")));
        }
        Ok(Self { tol_unit, tol_margin })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    ConvergesToPeriodic,
    Unstable,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::ConvergesToPeriodic => "ConvergesToPeriodic",
            Verdict::Unstable => "Unstable",
            Verdict::Inconclusive => "Inconclusive",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonodromyReport {
    pub lambda: DMatrix<f64>,
    pub cycle_time: f64,
    pub eigenvalues: Vec<Complex64>,
    pub eigenvectors: Vec<DVector<Complex64>>,
    pub unit_multiplicity: usize,
    pub unit_semisimple: bool,
    pub spectral_radius_excl_unit: f64,
    pub verdict: Verdict,
}

/// Closed-loop monodromy for the (1,1,1) schedule by the integral formula.
///
/// `Phi(s_j, 0)` is accumulated forward on the grid, `Upsilon(T, s_j)` backward
/// from the per-step propagators (never through an inverse), and the integral
/// is evaluated with composite Simpson on the same grid, using
/// `Upsilon(2T, T + s) = Upsilon(T, s)` and `B(T + s) = B(s)`.
pub fn monodromy_integral(sys: &LinearPeriodicSystem, gain: &DMatrix<f64>, cfg: &IntegratorConfig) -> Result<DMatrix<f64>> {
    let n = sys.dim();
    if gain.shape() != (sys.input_dim(), n) {
        return Err(Error::domain(format!(
            "gain is {:?}, expected ({}, {n})",
            gain.shape(),
            sys.input_dim()
        )));
    }
    let steps = cfg.steps_per_period;
    if !steps.is_multiple_of(2) {
        return Err(Error::domain(format!("Simpson's rule needs an even number of steps per period, got {steps}")));
    }
    let h = cfg.step(sys.period());

    let open = period_propagators(sys, None, cfg)?;
    let closed = period_propagators(sys, Some(gain), cfg)?;

    let mut phi = Vec::with_capacity(steps + 1);
    phi.push(DMatrix::identity(n, n));
    for r in &open {
        let next = r * phi.last().expect("non-empty");
        phi.push(next);
    }

    // upsilon_to_end[j] = Upsilon(T, s_j)
    let mut upsilon_to_end = vec![DMatrix::identity(n, n); steps + 1];
    for j in (0..steps).rev() {
        upsilon_to_end[j] = &upsilon_to_end[j + 1] * &closed[j];
    }

    let mut integral = DMatrix::zeros(n, n);
    for j in 0..=steps {
        let weight = if j == 0 || j == steps {
            1.0
        } else if j % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let s = j as f64 * h;
        integral += (&upsilon_to_end[j] * sys.b(s) * gain * &phi[j]) * weight;
    }
    integral *= h / 3.0;

    let lambda = &upsilon_to_end[0] * &phi[steps] + integral;
    if lambda.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite monodromy".into()));
    }
    Ok(lambda)
}

/// Closed-loop monodromy over one full cycle of `law`'s schedule, assembled
/// column by column from simulations started at the canonical basis vectors.
pub fn monodromy_propagate(sys: &LinearPeriodicSystem, law: &FeedbackLaw, cfg: &IntegratorConfig) -> Result<DMatrix<f64>> {
    let n = sys.dim();
    law.check_shape(n, sys.input_dim())?;
    let columns: Vec<Result<DVector<f64>>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let e = DVector::from_fn(n, |i, _| if i == j { 1.0 } else { 0.0 });
            let states = propagate_cycles(sys, law, &e, 1, cfg)?;
            Ok(states.into_iter().last().expect("two boundary states"))
        })
        .collect();
    let columns = columns.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(DMatrix::from_columns(&columns))
}

/// Largest singular value.
fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.singular_values().iter().copied().fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnitEigen {
    pub kappa: usize,
    pub semisimple: bool,
}

fn unit_eigen_from_values(lambda: &DMatrix<f64>, values: &[Complex64], tol_unit: f64) -> UnitEigen {
    let n = lambda.nrows();
    let kappa = values.iter().filter(|v| (*v - 1.0).norm() <= tol_unit).count();
    let threshold = tol_unit * spectral_norm(lambda);
    let shifted = lambda - DMatrix::identity(n, n);
    let rank = shifted.singular_values().iter().filter(|&&s| s > threshold).count();
    UnitEigen { kappa, semisimple: n - rank == kappa }
}

/// Algebraic multiplicity of the eigenvalue 1 and whether it is semisimple,
/// judged by the numerical rank of `Lambda - I` at threshold `tol_unit |Lambda|`.
pub fn unit_eigen_analysis(lambda: &DMatrix<f64>, tol_unit: f64) -> Result<UnitEigen> {
    if tol_unit.is_nan() || tol_unit <= 0.0 {
        return Err(Error::domain("tol_unit must be positive"));
    }
    let values = eigenvalues(lambda)?;
    Ok(unit_eigen_from_values(lambda, &values, tol_unit))
}

/// Largest modulus among eigenvalues farther than `tol_unit` from 1.
pub fn spectral_radius_excl_unit(values: &[Complex64], tol_unit: f64) -> f64 {
    values
        .iter()
        .filter(|v| (*v - 1.0).norm() > tol_unit)
        .map(|v| v.norm())
        .fold(0.0, f64::max)
}

/// Stability rule: converges iff 1 is a semisimple multiplier and every other
/// multiplier lies strictly inside the unit circle (by `tol_margin`).
pub fn stability_verdict(unit: UnitEigen, values: &[Complex64], tol: &Tolerances) -> Verdict {
    let m = tol.tol_margin;
    if unit.kappa >= 1 {
        let rho = spectral_radius_excl_unit(values, tol.tol_unit);
        if (1.0 - m..=1.0 + m).contains(&rho) {
            Verdict::Inconclusive
        } else if unit.semisimple && rho < 1.0 - m {
            Verdict::ConvergesToPeriodic
        } else {
            Verdict::Unstable
        }
    } else {
        let rho = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if (rho - 1.0).abs() <= m {
            Verdict::Inconclusive
        } else {
            Verdict::Unstable
        }
    }
}

/// Eigen-analysis and verdict for a monodromy matrix over `cycle_time`.
pub fn analyze_monodromy(lambda: &DMatrix<f64>, cycle_time: f64, tol: &Tolerances) -> Result<MonodromyReport> {
    let pairs = eigendecompose(lambda)?;
    let values: Vec<Complex64> = pairs.iter().map(|p| p.value).collect();
    let unit = unit_eigen_from_values(lambda, &values, tol.tol_unit);
    let verdict = stability_verdict(unit, &values, tol);
    Ok(MonodromyReport {
        lambda: lambda.clone(),
        cycle_time,
        spectral_radius_excl_unit: spectral_radius_excl_unit(&values, tol.tol_unit),
        eigenvalues: values,
        eigenvectors: pairs.into_iter().map(|p| p.vector).collect(),
        unit_multiplicity: unit.kappa,
        unit_semisimple: unit.semisimple,
        verdict,
    })
}

/// Monodromy by the integral route for the (1,1,1) schedule and by propagation
/// otherwise.
pub fn monodromy(sys: &LinearPeriodicSystem, law: &FeedbackLaw, cfg: &IntegratorConfig) -> Result<DMatrix<f64>> {
    if law.schedule().is_alternating() {
        monodromy_integral(sys, law.gain(), cfg)
    } else {
        monodromy_propagate(sys, law, cfg)
    }
}

/// Real orthonormal basis of the (numerical) null space of `Lambda - I`,
/// taken from the `kappa` smallest right singular vectors.
pub fn unit_eigenspace_basis(lambda: &DMatrix<f64>, kappa: usize) -> Result<Vec<DVector<f64>>> {
    let n = lambda.nrows();
    if kappa > n {
        return Err(Error::domain(format!("kappa {kappa} exceeds dimension {n}")));
    }
    let shifted = lambda - DMatrix::identity(n, n);
    let svd = shifted
        .try_svd(false, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]).then(a.cmp(&b)));
    Ok(order[..kappa]
        .iter()
        .map(|&i| {
            let v = v_t.row(i).transpose();
            let pivot = v.iter().enumerate().fold(0, |p, (k, x)| if x.abs() > v[p].abs() { k } else { p });
            if v[pivot] < 0.0 {
                -v
            } else {
                v
            }
        })
        .collect())
}
