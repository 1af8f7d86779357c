//! Search for stabilizing feedback gains.
//!
//! The objective is the spectral radius of the closed-loop monodromy after
//! removing the structural unit multiplier. It is non-smooth, so the search is
//! an exhaustive grid scan followed by an optional Nelder-Mead polish.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::floquet::{analyze_monodromy, monodromy, Tolerances, Verdict};
use crate::model::{FeedbackLaw, LinearPeriodicSystem, SwitchingSchedule};
use crate::odeint::IntegratorConfig;

pub const MAX_GRID_SIZE: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct GainSearchSpec {
    /// `[lo, hi]` per gain entry, row-major over the `m x n` gain.
    pub bounds: Vec<(f64, f64)>,
    pub grid_points: usize,
    pub refine: bool,
}

impl GainSearchSpec {
    pub fn new(bounds: Vec<(f64, f64)>) -> Self {
        Self { bounds, grid_points: 21, refine: true }
    }

    fn validate(&self, entries: usize) -> Result<()> {
        if self.bounds.len() != entries {
            return Err(Error::domain(format!("box has {} entries, gain has {entries}", self.bounds.len())));
        }
        for (i, &(lo, hi)) in self.bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                return Err(Error::domain(format!("invalid bounds [{lo}, {hi}] for gain entry {i}")));
            }
        }
        if self.grid_points == 0 {
            return Err(Error::domain("grid_points must be positive"));
        }
        let size = self
            .axes()
            .iter()
            .try_fold(1usize, |acc, axis| acc.checked_mul(axis.len()))
            .filter(|&s| s <= MAX_GRID_SIZE);
        if size.is_none() {
            return Err(Error::domain(format!("grid exceeds {MAX_GRID_SIZE} points")));
        }
        Ok(())
    }

    /// Grid coordinates per entry; a degenerate interval contributes one point.
    fn axes(&self) -> Vec<Vec<f64>> {
        self.bounds
            .iter()
            .map(|&(lo, hi)| {
                if lo == hi || self.grid_points == 1 {
                    vec![lo]
                } else {
                    let k = self.grid_points - 1;
                    (0..=k).map(|i| lo + (hi - lo) * i as f64 / k as f64).collect()
                }
            })
            .collect()
    }
}

/// Objective value at one gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveValue {
    pub value: f64,
    /// No eigenvalue within `tol_unit` of 1: the structural multiplier is
    /// missing, so `value` is the plain spectral radius.
    pub anomalous: bool,
    /// More than one eigenvalue within `tol_unit` of 1; only the closest is
    /// removed.
    pub multiple_unit: bool,
    pub verdict: Option<Verdict>,
}

impl ObjectiveValue {
    fn diverged() -> Self {
        Self { value: f64::INFINITY, anomalous: false, multiple_unit: false, verdict: None }
    }
}

fn evaluate(
    sys: &LinearPeriodicSystem,
    schedule: &SwitchingSchedule,
    gain: &DMatrix<f64>,
    cfg: &IntegratorConfig,
    tol: &Tolerances,
) -> Result<ObjectiveValue> {
    let law = FeedbackLaw::new(gain.clone(), *schedule)?;
    let lambda = match monodromy(sys, &law, cfg) {
        Ok(l) => l,
        Err(Error::Diverged { .. }) | Err(Error::Numerical(_)) => return Ok(ObjectiveValue::diverged()),
        Err(e) => return Err(e),
    };
    let cycle_time = f64::from(schedule.cycle_periods()) * sys.period();
    let report = match analyze_monodromy(&lambda, cycle_time, tol) {
        Ok(r) => r,
        Err(Error::Numerical(_)) => return Ok(ObjectiveValue::diverged()),
        Err(e) => return Err(e),
    };
    let values = &report.eigenvalues;
    let closest = values
        .iter()
        .enumerate()
        .map(|(i, v)| (i, (v - 1.0).norm()))
        .min_by(|a, b| a.1.total_cmp(&b.1));
    let near_unit = values.iter().filter(|v| (*v - 1.0).norm() <= tol.tol_unit).count();
    let (value, anomalous) = match closest {
        Some((skip, d)) if d <= tol.tol_unit => (
            values
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != skip)
                .map(|(_, v)| v.norm())
                .fold(0.0, f64::max),
            false,
        ),
        _ => (values.iter().map(|v| v.norm()).fold(0.0, f64::max), true),
    };
    Ok(ObjectiveValue { value, anomalous, multiple_unit: near_unit > 1, verdict: Some(report.verdict) })
}

/// Spectral radius of the closed-loop monodromy excluding the single
/// eigenvalue closest to 1 (when it is within `tol_unit`). Divergent
/// propagation yields `+inf`.
pub fn objective(
    sys: &LinearPeriodicSystem,
    schedule: &SwitchingSchedule,
    gain: &DMatrix<f64>,
    cfg: &IntegratorConfig,
    tol: &Tolerances,
) -> Result<ObjectiveValue> {
    if gain.shape() != (sys.input_dim(), sys.dim()) {
        return Err(Error::domain(format!(
            "gain is {:?}, expected ({}, {})",
            gain.shape(),
            sys.input_dim(),
            sys.dim()
        )));
    }
    evaluate(sys, schedule, gain, cfg, tol)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub gain: DMatrix<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainSearchResult {
    pub best_gain: DMatrix<f64>,
    pub best_objective: f64,
    pub best_grid_objective: f64,
    pub verdict: Option<Verdict>,
    pub anomalous: bool,
    pub evaluation_count: usize,
    /// Every evaluated gain with objective < 1 and a converging verdict, in
    /// evaluation order.
    pub stable: Vec<Candidate>,
}

/// Lexicographic comparison of (objective, entries).
fn better(a: (f64, &[f64]), b: (f64, &[f64])) -> bool {
    match a.0.total_cmp(&b.0) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => a.1.iter().zip(b.1).find(|(x, y)| x != y).is_some_and(|(x, y)| x < y),
    }
}

fn is_stable(o: &ObjectiveValue) -> bool {
    o.value < 1.0 && o.verdict == Some(Verdict::ConvergesToPeriodic)
}

/// Grid scan over the box followed by an optional simplex refinement.
pub fn search(
    sys: &LinearPeriodicSystem,
    schedule: &SwitchingSchedule,
    spec: &GainSearchSpec,
    cfg: &IntegratorConfig,
    tol: &Tolerances,
) -> Result<GainSearchResult> {
    let (m, n) = (sys.input_dim(), sys.dim());
    spec.validate(m * n)?;
    let to_gain = |p: &[f64]| DMatrix::from_row_slice(m, n, p);

    let axes = spec.axes();
    let total: usize = axes.iter().map(Vec::len).product();
    let points: Vec<Vec<f64>> = (0..total)
        .map(|mut idx| {
            let mut p = vec![0.0; axes.len()];
            for (d, axis) in axes.iter().enumerate().rev() {
                p[d] = axis[idx % axis.len()];
                idx /= axis.len();
            }
            p
        })
        .collect();

    let values: Vec<ObjectiveValue> = points
        .par_iter()
        .map(|p| evaluate(sys, schedule, &to_gain(p), cfg, tol))
        .collect::<Result<Vec<_>>>()?;
    let mut evaluation_count = values.len();

    let mut stable: Vec<Candidate> = points
        .iter()
        .zip(&values)
        .filter(|(_, o)| is_stable(o))
        .map(|(p, o)| Candidate { gain: to_gain(p), objective: o.value })
        .collect();

    let mut best = 0;
    for i in 1..total {
        if better((values[i].value, &points[i]), (values[best].value, &points[best])) {
            best = i;
        }
    }
    let best_grid_objective = values[best].value;
    let mut best_point = points[best].clone();
    let mut best_value = best_grid_objective;

    let free: Vec<usize> = (0..axes.len()).filter(|&d| axes[d].len() > 1).collect();
    if spec.refine && !free.is_empty() && best_value.is_finite() {
        let embed = |y: &[f64]| {
            let mut p = best_point.clone();
            for (k, &d) in free.iter().enumerate() {
                let (lo, hi) = spec.bounds[d];
                p[d] = y[k].clamp(lo, hi);
            }
            p
        };
        let start: Vec<f64> = free.iter().map(|&d| best_point[d]).collect();
        let steps: Vec<f64> = free.iter().map(|&d| axes[d][1] - axes[d][0]).collect();
        let mut f = |y: &[f64]| {
            evaluate(sys, schedule, &to_gain(&embed(y)), cfg, tol)
                .map(|o| o.value)
                .unwrap_or(f64::INFINITY)
        };
        let polished = nelder_mead(&mut f, &start, &steps, &NelderMeadOptions::default());
        evaluation_count += polished.evaluations;
        let candidate = embed(&polished.point);
        if polished.value < best_value {
            best_point = candidate;
            best_value = polished.value;
        }
    }

    let best_gain = to_gain(&best_point);
    let fresh = evaluate(sys, schedule, &best_gain, cfg, tol)?;
    evaluation_count += 1;
    if best_value < best_grid_objective && is_stable(&fresh) {
        stable.push(Candidate { gain: best_gain.clone(), objective: fresh.value });
    }
    Ok(GainSearchResult {
        best_gain,
        best_objective: fresh.value,
        best_grid_objective,
        verdict: fresh.verdict,
        anomalous: fresh.anomalous,
        evaluation_count,
        stable,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    pub max_iterations: usize,
    /// Stop once the largest vertex distance falls below this.
    pub diameter_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { reflection: 1.0, expansion: 2.0, contraction: 0.5, shrink: 0.5, max_iterations: 200, diameter_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
}

fn diameter(simplex: &[(Vec<f64>, f64)]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, a) in simplex.iter().enumerate() {
        for b in &simplex[i + 1..] {
            let dist = a.0.iter().zip(&b.0).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
            d = d.max(dist);
        }
    }
    d
}

/// Derivative-free simplex minimization starting from `x0` with an initial
/// simplex of axis steps `steps`.
pub fn nelder_mead<F>(f: &mut F, x0: &[f64], steps: &[f64], opts: &NelderMeadOptions) -> NelderMeadResult
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = x0.len();
    let mut evaluations = 0;
    let mut eval = |p: &[f64], count: &mut usize| {
        *count += 1;
        let v = f(p);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let v0 = eval(x0, &mut evaluations);
    simplex.push((x0.to_vec(), v0));
    for i in 0..dim {
        let mut p = x0.to_vec();
        p[i] += if steps[i] != 0.0 { steps[i] } else { 1e-3 };
        let v = eval(&p, &mut evaluations);
        simplex.push((p, v));
    }

    let order = |s: &mut Vec<(Vec<f64>, f64)>| {
        s.sort_by(|a, b| {
            a.1.total_cmp(&b.1)
                .then_with(|| a.0.iter().zip(&b.0).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal))
        })
    };
    let lerp = |c: &[f64], w: &[f64], t: f64| c.iter().zip(w).map(|(ci, wi)| ci + t * (wi - ci)).collect::<Vec<f64>>();

    let mut iterations = 0;
    while iterations < opts.max_iterations {
        order(&mut simplex);
        if diameter(&simplex) < opts.diameter_tol {
            break;
        }
        iterations += 1;
        let centroid: Vec<f64> = (0..dim)
            .map(|k| simplex[..dim].iter().map(|(p, _)| p[k]).sum::<f64>() / dim as f64)
            .collect();
        let (worst, f_worst) = simplex[dim].clone();
        let f_best = simplex[0].1;
        let f_second = simplex[dim - 1].1;

        let reflected = lerp(&centroid, &worst, -opts.reflection);
        let f_r = eval(&reflected, &mut evaluations);
        if f_r < f_best {
            let expanded = lerp(&centroid, &worst, -opts.expansion);
            let f_e = eval(&expanded, &mut evaluations);
            simplex[dim] = if f_e < f_r { (expanded, f_e) } else { (reflected, f_r) };
            continue;
        }
        if f_r < f_second {
            simplex[dim] = (reflected, f_r);
            continue;
        }
        let (contracted, f_c) = if f_r < f_worst {
            let c = lerp(&centroid, &reflected, opts.contraction);
            let v = eval(&c, &mut evaluations);
            (c, v)
        } else {
            let c = lerp(&centroid, &worst, opts.contraction);
            let v = eval(&c, &mut evaluations);
            (c, v)
        };
        if f_c < f_worst.min(f_r) {
            simplex[dim] = (contracted, f_c);
            continue;
        }
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let p = lerp(&best, &vertex.0, opts.shrink);
            let v = eval(&p, &mut evaluations);
            *vertex = (p, v);
        }
    }
    order(&mut simplex);
    let (point, value) = simplex.swap_remove(0);
    NelderMeadResult { point, value, iterations, evaluations }
}
