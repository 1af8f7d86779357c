//! Closed-loop simulation under act-and-wait delayed feedback.
//!
//! The integrator is fixed-step RK4 on the grid `h = T / N`. During act blocks
//! the right-hand side needs `x(t - dT)` at the RK4 stage times of the current
//! step. Those are read from a ring buffer that stores, for every step of the
//! last `dT`, the four stage states of that earlier step. Reusing the earlier
//! stage states makes the scheme identical to RK4 applied to the augmented
//! (current, delayed) system, so no interpolation is involved and the result
//! matches the monodromy integral to integrator accuracy.
//!
//! No initial history is needed: every cycle starts with `wait >= delay`
//! periods with the controller off.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::examples::ExampleSystem;
use crate::floquet::{analyze_monodromy, eigendecompose, unit_eigenspace_basis, Tolerances, Verdict};
use crate::model::{FeedbackLaw, LinearPeriodicSystem, NonlinearAutonomousSystem, PeriodicSolution, SwitchingSchedule};
use crate::odeint::IntegratorConfig;

/// States whose norm exceeds this are treated as divergence.
pub const OVERFLOW_GUARD: f64 = 1e12;

/// Something that can be driven by the feedback law: `x' = rhs(t, x, u)`.
pub trait Plant: Sync {
    fn dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn period(&self) -> f64;
    fn rhs(&self, t: f64, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64>;
}

impl Plant for LinearPeriodicSystem {
    fn dim(&self) -> usize {
        LinearPeriodicSystem::dim(self)
    }

    fn input_dim(&self) -> usize {
        LinearPeriodicSystem::input_dim(self)
    }

    fn period(&self) -> f64 {
        LinearPeriodicSystem::period(self)
    }

    fn rhs(&self, t: f64, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        self.a(t) * x + self.b(t) * u
    }
}

impl Plant for NonlinearAutonomousSystem {
    fn dim(&self) -> usize {
        NonlinearAutonomousSystem::dim(self)
    }

    fn input_dim(&self) -> usize {
        NonlinearAutonomousSystem::dim(self)
    }

    fn period(&self) -> f64 {
        NonlinearAutonomousSystem::period(self)
    }

    fn rhs(&self, _t: f64, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        self.field(x) + u
    }
}

impl Plant for ExampleSystem {
    fn dim(&self) -> usize {
        match self {
            ExampleSystem::Linear(s) => Plant::dim(s),
            ExampleSystem::Nonlinear(s) => Plant::dim(s.as_ref()),
        }
    }

    fn input_dim(&self) -> usize {
        match self {
            ExampleSystem::Linear(s) => Plant::input_dim(s),
            ExampleSystem::Nonlinear(s) => Plant::input_dim(s.as_ref()),
        }
    }

    fn period(&self) -> f64 {
        match self {
            ExampleSystem::Linear(s) => Plant::period(s),
            ExampleSystem::Nonlinear(s) => Plant::period(s.as_ref()),
        }
    }

    fn rhs(&self, t: f64, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        match self {
            ExampleSystem::Linear(s) => s.rhs(t, x, u),
            ExampleSystem::Nonlinear(s) => s.rhs(t, x, u),
        }
    }
}

/// Stage states of the last `delay_steps` RK4 steps.
struct StageBuffer {
    dim: usize,
    delay_steps: usize,
    data: Vec<f64>,
}

impl StageBuffer {
    fn new(dim: usize, delay_steps: usize) -> Self {
        Self { dim, delay_steps, data: vec![0.0; delay_steps * 4 * dim] }
    }

    fn offset(&self, step: usize, stage: usize) -> usize {
        ((step % self.delay_steps) * 4 + stage) * self.dim
    }

    fn load(&self, step: usize, stage: usize) -> DVector<f64> {
        let o = self.offset(step, stage);
        DVector::from_column_slice(&self.data[o..o + self.dim])
    }

    fn store(&mut self, step: usize, stage: usize, x: &DVector<f64>) {
        let o = self.offset(step, stage);
        self.data[o..o + self.dim].copy_from_slice(x.as_slice());
    }
}

/// Runs the closed loop for `total_steps` grid steps and calls `on_node` at
/// every node `j = 0..=total_steps` with `(j, t_j, x_j, u_j, switch_j)`.
fn drive<P, F>(plant: &P, law: &FeedbackLaw, x0: &DVector<f64>, total_steps: usize, cfg: &IntegratorConfig, mut on_node: F) -> Result<()>
where
    P: Plant + ?Sized,
    F: FnMut(usize, f64, &DVector<f64>, &DVector<f64>, u8),
{
    let n = plant.dim();
    if x0.len() != n {
        return Err(Error::domain(format!("initial state has length {}, expected {n}", x0.len())));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("initial state must be finite"));
    }
    law.check_shape(n, plant.input_dim())?;
    let per_period = cfg.steps_per_period;
    let h = cfg.step(plant.period());
    let delay_steps = law.schedule().delay() as usize * per_period;
    let mut buffer = StageBuffer::new(n, delay_steps);
    let mut x = x0.clone();

    for j in 0..=total_steps {
        let t = j as f64 * h;
        let switch = law.schedule().switch_for_period((j / per_period) as u64);
        // Act blocks start at least `delay` periods into a cycle.
        let delayed: Option<[DVector<f64>; 4]> = (switch == 1).then(|| {
            let k = j - delay_steps;
            [buffer.load(k, 0), buffer.load(k, 1), buffer.load(k, 2), buffer.load(k, 3)]
        });
        let input = |stage: usize, xs: &DVector<f64>| match &delayed {
            Some(d) => law.input(1, xs, &d[stage]),
            None => DVector::zeros(law.gain().nrows()),
        };

        let u = input(0, &x);
        on_node(j, t, &x, &u, switch);
        if j == total_steps {
            break;
        }

        let k1 = plant.rhs(t, &x, &u);
        let x2 = &x + &k1 * (0.5 * h);
        let k2 = plant.rhs(t + 0.5 * h, &x2, &input(1, &x2));
        let x3 = &x + &k2 * (0.5 * h);
        let k3 = plant.rhs(t + 0.5 * h, &x3, &input(2, &x3));
        let x4 = &x + &k3 * h;
        let k4 = plant.rhs(t + h, &x4, &input(3, &x4));

        buffer.store(j, 0, &x);
        buffer.store(j, 1, &x2);
        buffer.store(j, 2, &x3);
        buffer.store(j, 3, &x4);

        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        if x.iter().any(|v| !v.is_finite()) || x.norm() > OVERFLOW_GUARD {
            return Err(Error::Diverged { time: (j + 1) as f64 * h });
        }
    }
    Ok(())
}

fn cycle_steps(schedule: &SwitchingSchedule, cfg: &IntegratorConfig) -> usize {
    schedule.cycle_periods() as usize * cfg.steps_per_period
}

/// States at the cycle boundaries `k P T`, `k = 0..=cycles`.
pub fn propagate_cycles<P: Plant + ?Sized>(
    plant: &P,
    law: &FeedbackLaw,
    x0: &DVector<f64>,
    cycles: usize,
    cfg: &IntegratorConfig,
) -> Result<Vec<DVector<f64>>> {
    let per_cycle = cycle_steps(law.schedule(), cfg);
    let mut out = Vec::with_capacity(cycles + 1);
    drive(plant, law, x0, cycles * per_cycle, cfg, |j, _, x, _, _| {
        if j % per_cycle == 0 {
            out.push(x.clone());
        }
    })?;
    Ok(out)
}

/// Closed-loop samples at every grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    /// Input applied on the step leaving each node.
    pub inputs: Vec<DVector<f64>>,
    pub switches: Vec<u8>,
    pub schedule: SwitchingSchedule,
    pub gain: DMatrix<f64>,
    pub steps_per_period: usize,
    pub period: f64,
}

impl Trajectory {
    fn empty(law: &FeedbackLaw, cfg: &IntegratorConfig, period: f64) -> Self {
        Self {
            times: Vec::new(),
            states: Vec::new(),
            inputs: Vec::new(),
            switches: Vec::new(),
            schedule: *law.schedule(),
            gain: law.gain().clone(),
            steps_per_period: cfg.steps_per_period,
            period,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn steps_per_cycle(&self) -> usize {
        self.schedule.cycle_periods() as usize * self.steps_per_period
    }

    pub fn cycle_time(&self) -> f64 {
        f64::from(self.schedule.cycle_periods()) * self.period
    }

    /// Number of complete cycles covered.
    pub fn cycles(&self) -> usize {
        self.len().saturating_sub(1) / self.steps_per_cycle()
    }

    /// States at `k P T` for `k = 0..=cycles()`.
    pub fn cycle_states(&self) -> Vec<&DVector<f64>> {
        self.states.iter().step_by(self.steps_per_cycle()).collect()
    }

    /// Node index range `[start, end)` of the last act block in the trajectory.
    pub fn last_act_block(&self) -> Option<std::ops::Range<usize>> {
        let end = self.switches.iter().rposition(|&s| s == 1)? + 1;
        let start = self.switches[..end].iter().rposition(|&s| s == 0).map_or(0, |i| i + 1);
        Some(start..end)
    }
}

/// A simulation that may have stopped early; `trajectory` holds every node
/// reached before the failure.
#[derive(Debug, Clone)]
pub struct SimulationOutcome {
    pub trajectory: Trajectory,
    pub failure: Option<Error>,
}

pub fn simulate_with_partial<P: Plant + ?Sized>(
    plant: &P,
    law: &FeedbackLaw,
    x0: &DVector<f64>,
    horizon_cycles: usize,
    cfg: &IntegratorConfig,
) -> SimulationOutcome {
    let mut traj = Trajectory::empty(law, cfg, plant.period());
    if horizon_cycles == 0 {
        return SimulationOutcome { trajectory: traj, failure: Some(Error::domain("horizon_cycles must be at least 1")) };
    }
    let total = horizon_cycles * cycle_steps(law.schedule(), cfg);
    traj.times.reserve(total + 1);
    traj.states.reserve(total + 1);
    traj.inputs.reserve(total + 1);
    traj.switches.reserve(total + 1);
    let result = drive(plant, law, x0, total, cfg, |_, t, x, u, s| {
        traj.times.push(t);
        traj.states.push(x.clone());
        traj.inputs.push(u.clone());
        traj.switches.push(s);
    });
    SimulationOutcome { trajectory: traj, failure: result.err() }
}

/// Simulates `horizon_cycles` full act-and-wait cycles from `x0`.
pub fn simulate_closed_loop<P: Plant + ?Sized>(
    plant: &P,
    law: &FeedbackLaw,
    x0: &DVector<f64>,
    horizon_cycles: usize,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let outcome = simulate_with_partial(plant, law, x0, horizon_cycles, cfg);
    match outcome.failure {
        Some(e) => Err(e),
        None => Ok(outcome.trajectory),
    }
}

/// Predicted limit of the cycle-sampled state.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitPrediction {
    /// Coefficients of `x0` in the basis `[unit eigenspace, other eigenvectors]`.
    pub alphas: Vec<Complex64>,
    pub basis: Vec<DVector<Complex64>>,
    /// Real part of the sum of the first `kappa` terms.
    pub limit_point: DVector<f64>,
    pub kappa: usize,
    pub condition_number: f64,
    pub warning: Option<String>,
}

const ILL_CONDITIONED: f64 = 1e10;

/// Expands `x0` in the eigenbasis of `lambda` and keeps the unit-eigenvalue
/// components. Requires a `ConvergesToPeriodic` verdict at default margin.
///
/// The unit eigenspace basis is real and orthonormal; the remaining vectors
/// follow the eigenvector normalization of [`eigendecompose`].
pub fn predict_limit(lambda: &DMatrix<f64>, x0: &DVector<f64>, tol_unit: f64) -> Result<LimitPrediction> {
    predict_limit_scaled(lambda, x0, tol_unit, None)
}

/// Like [`predict_limit`], but for a simple unit eigenvalue the eigenvector is
/// scaled to equal `reference` (e.g. `x*(0)`), which must span the unit
/// eigenspace.
pub fn predict_limit_with_reference(
    lambda: &DMatrix<f64>,
    x0: &DVector<f64>,
    tol_unit: f64,
    reference: &DVector<f64>,
) -> Result<LimitPrediction> {
    predict_limit_scaled(lambda, x0, tol_unit, Some(reference))
}

fn predict_limit_scaled(
    lambda: &DMatrix<f64>,
    x0: &DVector<f64>,
    tol_unit: f64,
    reference: Option<&DVector<f64>>,
) -> Result<LimitPrediction> {
    let n = lambda.nrows();
    if x0.len() != n {
        return Err(Error::domain(format!("x0 has length {}, expected {n}", x0.len())));
    }
    let tol = Tolerances { tol_unit, ..Tolerances::default() };
    let report = analyze_monodromy(lambda, 1.0, &tol)?;
    if report.verdict != Verdict::ConvergesToPeriodic {
        return Err(Error::Precondition(format!(
            "limit prediction needs a ConvergesToPeriodic monodromy, got {}",
            report.verdict
        )));
    }
    let kappa = report.unit_multiplicity;
    let mut unit_basis = unit_eigenspace_basis(lambda, kappa)?;
    if let Some(r) = reference {
        if kappa != 1 {
            return Err(Error::Precondition(format!("reference scaling needs a simple unit eigenvalue, kappa = {kappa}")));
        }
        let v = &unit_basis[0];
        let cos = v.dot(r) / (v.norm() * r.norm());
        if cos.is_nan() || cos.abs() < 1.0 - 1e-6 {
            return Err(Error::Precondition(format!(
                "reference vector is not in the unit eigenspace (|cos| = {:.8})",
                cos.abs()
            )));
        }
        unit_basis[0] = r.clone();
    }

    let pairs = eigendecompose(lambda)?;
    let mut basis: Vec<DVector<Complex64>> = unit_basis.iter().map(|v| v.map(|x| Complex64::new(x, 0.0))).collect();
    basis.extend(pairs.into_iter().filter(|p| (p.value - 1.0).norm() > tol_unit).map(|p| p.vector));
    if basis.len() != n {
        return Err(Error::Numerical(format!("eigenbasis has {} vectors for dimension {n}", basis.len())));
    }

    let v = DMatrix::from_columns(&basis);
    let sv = v.clone().singular_values();
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let condition_number = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let rhs = x0.map(|x| Complex64::new(x, 0.0));
    let alpha = v
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("eigenvector basis is singular".into()))?;

    let mut limit = DVector::<Complex64>::zeros(n);
    for i in 0..kappa {
        limit += &basis[i] * alpha[i];
    }
    let imag = limit.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    let mut warnings = Vec::new();
    if condition_number > ILL_CONDITIONED {
        warnings.push(format!("ill-conditioned eigenbasis (condition {condition_number:.3e})"));
    }
    if imag > 1e-8 * (1.0 + x0.norm()) {
        warnings.push(format!("limit point has imaginary residue {imag:.3e}"));
    }
    Ok(LimitPrediction {
        alphas: alpha.iter().copied().collect(),
        basis,
        limit_point: limit.map(|c| c.re),
        kappa,
        condition_number,
        warning: (!warnings.is_empty()).then(|| warnings.join("; ")),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceDiagnostics {
    /// `|x(k P T) - target|` for `k = 0..=cycles`.
    pub distances: Vec<f64>,
    /// Last five distances non-increasing within 10% (values below 1e-12 are
    /// treated as converged).
    pub monotone_tail: bool,
}

const DISTANCE_FLOOR: f64 = 1e-12;

fn diagnostics_from(distances: Vec<f64>) -> ConvergenceDiagnostics {
    let tail = &distances[distances.len().saturating_sub(5)..];
    let monotone_tail = tail
        .windows(2)
        .all(|w| w[1] <= w[0] * 1.1 || w[1] <= DISTANCE_FLOOR);
    ConvergenceDiagnostics { distances, monotone_tail }
}

/// Per-cycle distance of the trajectory to a predicted limit point.
pub fn convergence_diagnostics(traj: &Trajectory, limit_point: &DVector<f64>) -> Result<ConvergenceDiagnostics> {
    if traj.cycles() < 3 {
        return Err(Error::Precondition(format!("need at least 3 cycles, trajectory has {}", traj.cycles())));
    }
    let distances = traj.cycle_states().iter().map(|x| (*x - limit_point).norm()).collect();
    Ok(diagnostics_from(distances))
}

/// Distance from `x` to the closed curve `x*([0, T))`, sampled at `samples`
/// points and refined by golden-section search around the closest sample.
pub fn distance_to_orbit(x: &DVector<f64>, orbit: &PeriodicSolution, samples: usize) -> f64 {
    let period = orbit.period();
    let dt = period / samples as f64;
    let dist = |t: f64| (orbit.state(t) - x).norm();
    let best = (0..samples)
        .map(|k| k as f64 * dt)
        .min_by(|a, b| dist(*a).total_cmp(&dist(*b)))
        .unwrap_or(0.0);
    let (mut a, mut b) = (best - dt, best + dt);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let c = b - ratio * (b - a);
        let d = a + ratio * (b - a);
        if dist(c) < dist(d) {
            b = d;
        } else {
            a = c;
        }
    }
    dist(0.5 * (a + b)).min(dist(best))
}

/// Per-cycle distance of the trajectory to a periodic orbit (as a set).
pub fn orbit_diagnostics(traj: &Trajectory, orbit: &PeriodicSolution) -> Result<ConvergenceDiagnostics> {
    if traj.cycles() < 3 {
        return Err(Error::Precondition(format!("need at least 3 cycles, trajectory has {}", traj.cycles())));
    }
    let distances = traj.cycle_states().iter().map(|x| distance_to_orbit(x, orbit, 2000)).collect();
    Ok(diagnostics_from(distances))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::get_example;
    use crate::floquet::monodromy_integral;
    use nalgebra::{dmatrix, dvector};

    fn cfg() -> IntegratorConfig {
        IntegratorConfig::new(1000).unwrap()
    }

    #[test]
    fn inputs_vanish_while_waiting_and_states_are_continuous() {
        let ex = get_example("ex41").unwrap();
        let traj = simulate_closed_loop(ex.system(), ex.default_law(), &dvector![-1.9, 0.9], 3, &cfg()).unwrap();
        assert_eq!(traj.len(), 3 * 2 * 1000 + 1);
        for (u, s) in traj.inputs.iter().zip(&traj.switches) {
            if *s == 0 {
                assert_eq!(u.norm(), 0.0);
            }
        }
        // the input jumps at t = T, the state does not
        let j = 1000;
        assert_eq!(traj.switches[j - 1], 0);
        assert_eq!(traj.switches[j], 1);
        assert!(traj.inputs[j].norm() > 1e-3);
        assert!((&traj.states[j] - &traj.states[j - 1]).norm() < 1e-2);
        assert_eq!(traj.cycles(), 3);
        assert_eq!(traj.last_act_block(), Some(5000..6000));
    }

    #[test]
    fn control_vanishes_on_the_orbit() {
        let ex = get_example("ex41").unwrap();
        let x0 = ex.reference_orbit_vector();
        let traj = simulate_closed_loop(ex.system(), ex.default_law(), &x0, 3, &IntegratorConfig::default()).unwrap();
        assert!(traj.inputs.iter().all(|u| u.amax() < 1e-9));
        let ps = ex.periodic_solution();
        for (t, x) in traj.times.iter().zip(&traj.states).step_by(500) {
            assert!((x - ps.state(*t)).amax() < 1e-6);
        }
    }

    #[test]
    fn prediction_for_eigenvectors() {
        let ex = get_example("ex41").unwrap();
        let lambda = monodromy_integral(ex.analysis_system(), ex.default_law().gain(), &IntegratorConfig::default()).unwrap();
        let v1 = ex.reference_orbit_vector();
        let p = predict_limit_with_reference(&lambda, &v1, 1e-6, &v1).unwrap();
        assert!((&p.limit_point - &v1).amax() < 1e-10);
        assert!((p.alphas[0] - Complex64::new(1.0, 0.0)).norm() < 1e-10);
        assert!(p.alphas[1].norm() < 1e-10);

        let pairs = eigendecompose(&lambda).unwrap();
        let v2 = pairs[1].vector.map(|c| c.re);
        let p = predict_limit(&lambda, &v2, 1e-6).unwrap();
        assert!(p.limit_point.amax() < 1e-10);
        assert_eq!(p.kappa, 1);
        assert!(p.warning.is_none());
    }

    #[test]
    fn prediction_reconstructs_x0() {
        let ex = get_example("ex41").unwrap();
        let lambda = monodromy_integral(ex.analysis_system(), ex.default_law().gain(), &cfg()).unwrap();
        let x0 = dvector![-1.9, 0.9];
        let p = predict_limit(&lambda, &x0, 1e-6).unwrap();
        let mut back = DVector::<Complex64>::zeros(2);
        for (a, v) in p.alphas.iter().zip(&p.basis) {
            back += v * *a;
        }
        assert!((back.map(|c| c.re) - &x0).amax() < 1e-8);
        assert!(back.iter().all(|c| c.im.abs() < 1e-8));
    }

    #[test]
    fn prediction_requires_convergent_monodromy() {
        let err = predict_limit(&dmatrix![2.0, 0.0; 0.0, 1.0], &dvector![1.0, 1.0], 1e-6).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
        let err = predict_limit_with_reference(&dmatrix![0.5, 0.0; 0.0, 1.0], &dvector![1.0, 1.0], 1e-6, &dvector![1.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn multiple_unit_eigenvalues_keep_whole_eigenspace() {
        let lambda = dmatrix![1.0, 0.0, 0.3; 0.0, 1.0, 0.1; 0.0, 0.0, 0.4];
        let x0 = dvector![0.2, -0.7, 1.5];
        let p = predict_limit(&lambda, &x0, 1e-6).unwrap();
        assert_eq!(p.kappa, 2);
        // brute force: iterate the cycle map
        let mut x = x0.clone();
        for _ in 0..200 {
            x = &lambda * x;
        }
        assert!((&p.limit_point - x).amax() < 1e-10);
    }

    #[test]
    fn divergence_guard_keeps_partial_trajectory() {
        let ex = get_example("ex41").unwrap();
        let law = FeedbackLaw::new(dmatrix![0.0, 0.0], SwitchingSchedule::alternating()).unwrap();
        let outcome = simulate_with_partial(ex.system(), &law, &dvector![1.0, 0.0], 40, &IntegratorConfig::new(100).unwrap());
        assert!(matches!(outcome.failure, Some(Error::Diverged { .. })));
        assert!(!outcome.trajectory.is_empty());
        assert!(outcome.trajectory.states.last().unwrap().norm() <= OVERFLOW_GUARD);
    }

    #[test]
    fn rejects_zero_horizon_and_bad_x0() {
        let ex = get_example("ex41").unwrap();
        assert!(simulate_closed_loop(ex.system(), ex.default_law(), &dvector![1.0, 0.0], 0, &cfg()).is_err());
        assert!(simulate_closed_loop(ex.system(), ex.default_law(), &dvector![1.0], 1, &cfg()).is_err());
    }

    #[test]
    fn diagnostics_precondition_and_on_orbit() {
        let ex = get_example("ex41").unwrap();
        let x0 = ex.reference_orbit_vector();
        let short = simulate_closed_loop(ex.system(), ex.default_law(), &x0, 2, &cfg()).unwrap();
        assert!(convergence_diagnostics(&short, &x0).is_err());
        let traj = simulate_closed_loop(ex.system(), ex.default_law(), &x0, 4, &IntegratorConfig::default()).unwrap();
        let d = convergence_diagnostics(&traj, &x0).unwrap();
        assert_eq!(d.distances.len(), 5);
        assert!(d.distances.iter().all(|&v| v <= 1e-6));
    }

    #[test]
    fn orbit_distance_of_circle() {
        let ex = get_example("ex42").unwrap();
        let ps = ex.periodic_solution();
        let d = distance_to_orbit(&dvector![0.0, 1.3], ps, 400);
        assert!((d - 0.3).abs() < 1e-9, "{d}");
        let d = distance_to_orbit(&dvector![(0.123f64).cos() * 0.9, (0.123f64).sin() * 0.9], ps, 400);
        assert!((d - 0.1).abs() < 1e-9, "{d}");
    }
}
