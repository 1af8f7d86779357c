//! Subcommand implementations.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use floquet_aaw::examples::{get_example, ExampleEntry, ExampleSystem};
use floquet_aaw::floquet::{analyze_monodromy, monodromy, monodromy_propagate, MonodromyReport, Tolerances, Verdict};
use floquet_aaw::gainsearch::{search, GainSearchSpec};
use floquet_aaw::model::{FeedbackLaw, SwitchingSchedule};
use floquet_aaw::odeint::IntegratorConfig;
use floquet_aaw::reproduce::verify_reference_values;
use floquet_aaw::simulate::{
    convergence_diagnostics, orbit_diagnostics, predict_limit_with_reference, simulate_with_partial, Plant,
};
use floquet_aaw::variational::verify_unit_eigenvector;
use floquet_aaw::Error;
use nalgebra::{DMatrix, DVector};

use crate::args::{NumericArgs, SearchArgs, SimulateArgs, SystemArgs};
use crate::error::CliError;
use crate::output::{
    complex_list, complex_vector, rows, vector, write_json, write_trajectory_csv, AnalyzeReport, CandidateDto,
    ErrorReport, LinearLimitReport, OrbitLimitReport, ScheduleDto, SearchReport, SystemProvenance, VerifyRowDto,
};

/// Exit status of a completed run.
pub fn verdict_code(v: Verdict) -> u8 {
    match v {
        Verdict::ConvergesToPeriodic => 0,
        Verdict::Unstable => 1,
        Verdict::Inconclusive => 2,
    }
}

/// Validated inputs shared by the system-level commands.
pub struct RunConfig {
    pub example: ExampleEntry,
    pub law: FeedbackLaw,
    pub integrator: IntegratorConfig,
    pub tolerances: Tolerances,
}

fn numeric(args: &NumericArgs) -> Result<(IntegratorConfig, Tolerances), CliError> {
    let integrator = IntegratorConfig::new(args.steps_per_period).map_err(CliError::config)?;
    let tolerances = Tolerances::new(args.tol_unit, args.tol_margin).map_err(CliError::config)?;
    Ok((integrator, tolerances))
}

impl RunConfig {
    pub fn from_args(args: &SystemArgs) -> Result<Self, CliError> {
        let example = get_example(&args.example).map_err(CliError::config)?;
        let (integrator, tolerances) = numeric(&args.numeric)?;
        let sys = example.analysis_system();
        let (m, n) = (sys.input_dim(), sys.dim());
        let gain = match &args.gain {
            Some(list) if list.0.len() != m * n => {
                return Err(CliError::Config(format!("--gain needs {} entries ({m}x{n}), got {}", m * n, list.0.len())))
            }
            Some(list) => DMatrix::from_row_slice(m, n, &list.0),
            None => example.default_law().gain().clone(),
        };
        let schedule = match args.schedule {
            Some((w, a, d)) => SwitchingSchedule::new(w, a, d).map_err(CliError::config)?,
            None => *example.default_law().schedule(),
        };
        let law = FeedbackLaw::new(gain, schedule).map_err(CliError::config)?;
        Ok(Self { example, law, integrator, tolerances })
    }

    pub fn provenance(&self) -> SystemProvenance {
        let s = self.law.schedule();
        SystemProvenance {
            example: self.example.name().into(),
            description: self.example.description().into(),
            analysis_system: if self.example.variational().is_some() { "variational" } else { "linear" },
            gain: rows(self.law.gain()),
            schedule: ScheduleDto { wait: s.wait(), act: s.act(), delay: s.delay() },
            steps_per_period: self.integrator.steps_per_period,
            tol_unit: self.tolerances.tol_unit,
            tol_margin: self.tolerances.tol_margin,
        }
    }

    fn cycle_time(&self) -> f64 {
        f64::from(self.law.schedule().cycle_periods()) * self.example.analysis_system().period()
    }

    pub fn monodromy_report(&self) -> Result<MonodromyReport, CliError> {
        let lambda = monodromy(self.example.analysis_system(), &self.law, &self.integrator)?;
        Ok(analyze_monodromy(&lambda, self.cycle_time(), &self.tolerances)?)
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    println!("{text}");
    Ok(())
}

pub fn analyze(args: &SystemArgs) -> Result<u8, CliError> {
    let cfg = RunConfig::from_args(args)?;
    let report = cfg.monodromy_report()?;
    let route_agreement_residual = if cfg.law.schedule().is_alternating() {
        let propagated = monodromy_propagate(cfg.example.analysis_system(), &cfg.law, &cfg.integrator)?;
        Some((&report.lambda - propagated).amax())
    } else {
        None
    };
    let unit_eigenvector_residual = match cfg.example.variational() {
        Some(vs) => Some(verify_unit_eigenvector(vs, &report.lambda)?),
        None => None,
    };
    let dto = AnalyzeReport {
        system: cfg.provenance(),
        lambda: rows(&report.lambda),
        cycle_time: report.cycle_time,
        eigenvalues: complex_list(&report.eigenvalues),
        eigenvectors: report.eigenvectors.iter().map(complex_vector).collect(),
        kappa: report.unit_multiplicity,
        semisimple: report.unit_semisimple,
        spectral_radius_excl_unit: report.spectral_radius_excl_unit,
        verdict: report.verdict.to_string(),
        route_agreement_residual,
        unit_eigenvector_residual,
    };
    print_json(&dto)?;
    if let Some(dir) = &args.numeric.out {
        write_json(dir, "analyze.json", &dto)?;
    }
    Ok(verdict_code(report.verdict))
}

fn write_csv(dir: &Path, traj: &floquet_aaw::simulate::Trajectory, dim: usize, input_dim: usize) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    let file = BufWriter::new(File::create(dir.join("trajectory.csv"))?);
    write_trajectory_csv(file, traj, dim, input_dim).map_err(|e| CliError::Io(std::io::Error::other(e)))
}

pub fn simulate(args: &SimulateArgs) -> Result<u8, CliError> {
    let cfg = RunConfig::from_args(&args.system)?;
    let ex = &cfg.example;
    let plant = ex.system();
    let x0 = match &args.x0 {
        Some(list) if list.0.len() != plant.dim() => {
            return Err(CliError::Config(format!("--x0 needs {} entries, got {}", plant.dim(), list.0.len())))
        }
        Some(list) => DVector::from_column_slice(&list.0),
        None => ex.default_x0().clone(),
    };
    let cycles = args.cycles.unwrap_or(ex.default_cycles());
    if cycles == 0 {
        return Err(CliError::Config("--cycles must be at least 1".into()));
    }
    let out = args.system.numeric.out.as_deref();

    let outcome = simulate_with_partial(plant, &cfg.law, &x0, cycles, &cfg.integrator);
    let traj = outcome.trajectory;
    if let Some(dir) = out {
        write_csv(dir, &traj, plant.dim(), plant.input_dim())?;
    }
    if let Some(err) = outcome.failure {
        let report = ErrorReport {
            error: err.to_string(),
            kind: match err {
                Error::Diverged { .. } => "diverged",
                _ => "numerical",
            },
            time: match err {
                Error::Diverged { time } => Some(time),
                _ => None,
            },
            nodes_written: traj.len(),
        };
        if let Some(dir) = out {
            write_json(dir, "error.json", &report)?;
        }
        return Err(CliError::Core(err));
    }

    let report = cfg.monodromy_report()?;
    let final_state = traj.states.last().cloned().unwrap_or_else(|| x0.clone());
    match plant {
        ExampleSystem::Linear(_) => {
            let mut dto = LinearLimitReport {
                system: cfg.provenance(),
                verdict: report.verdict.to_string(),
                x0: vector(&x0),
                cycles,
                alphas: None,
                limit_point: None,
                kappa: None,
                condition_number: None,
                warning: None,
                distances: None,
                final_distance: None,
                monotone_tail: None,
                prediction_error: None,
                final_state: vector(&final_state),
            };
            let reference = ex.reference_orbit_vector();
            match predict_limit_with_reference(&report.lambda, &x0, cfg.tolerances.tol_unit, &reference) {
                Ok(p) => {
                    dto.alphas = Some(complex_list(&p.alphas));
                    dto.limit_point = Some(vector(&p.limit_point));
                    dto.kappa = Some(p.kappa);
                    dto.condition_number = Some(p.condition_number);
                    dto.warning = p.warning.clone();
                    dto.final_distance = Some((&final_state - &p.limit_point).norm());
                    match convergence_diagnostics(&traj, &p.limit_point) {
                        Ok(d) => {
                            dto.distances = Some(d.distances);
                            dto.monotone_tail = Some(d.monotone_tail);
                        }
                        Err(e) => dto.warning = Some(e.to_string()),
                    }
                }
                Err(e) => dto.prediction_error = Some(e.to_string()),
            }
            print_json(&dto)?;
            if let Some(dir) = out {
                write_json(dir, "limit.json", &dto)?;
            }
        }
        ExampleSystem::Nonlinear(_) => {
            let (orbit_distances, monotone_tail) = match orbit_diagnostics(&traj, ex.periodic_solution()) {
                Ok(d) => (d.distances, d.monotone_tail),
                Err(_) => {
                    let d: Vec<f64> = traj
                        .cycle_states()
                        .iter()
                        .map(|x| floquet_aaw::simulate::distance_to_orbit(x, ex.periodic_solution(), 2000))
                        .collect();
                    (d, false)
                }
            };
            let max_input_last_act_block = traj
                .last_act_block()
                .map(|r| traj.inputs[r].iter().map(|u| u.norm()).fold(0.0, f64::max));
            let dto = OrbitLimitReport {
                system: cfg.provenance(),
                verdict: report.verdict.to_string(),
                x0: vector(&x0),
                cycles,
                final_orbit_distance: *orbit_distances.last().unwrap_or(&f64::NAN),
                orbit_distances,
                monotone_tail,
                final_state: vector(&final_state),
                final_state_norm: final_state.norm(),
                max_input_last_act_block,
            };
            print_json(&dto)?;
            if let Some(dir) = out {
                write_json(dir, "limit.json", &dto)?;
            }
        }
    }
    Ok(0)
}

pub fn search_gain(args: &SearchArgs) -> Result<u8, CliError> {
    let cfg = RunConfig::from_args(&args.system)?;
    let sys = cfg.example.analysis_system();
    let entries = sys.input_dim() * sys.dim();
    if args.bounds.0.len() != entries {
        return Err(CliError::Config(format!("--box needs {entries} intervals, got {}", args.bounds.0.len())));
    }
    let spec = GainSearchSpec { bounds: args.bounds.0.clone(), grid_points: args.grid_points, refine: !args.no_refine };
    let result = search(sys, cfg.law.schedule(), &spec, &cfg.integrator, &cfg.tolerances).map_err(|e| match e {
        Error::Domain(msg) => CliError::Config(msg),
        other => CliError::Core(other),
    })?;
    let dto = SearchReport {
        system: cfg.provenance(),
        bounds: spec.bounds.clone(),
        grid_points: spec.grid_points,
        refine: spec.refine,
        best_gain: rows(&result.best_gain),
        best_objective: result.best_objective,
        best_grid_objective: result.best_grid_objective,
        verdict: result.verdict.map(|v| v.to_string()),
        anomalous: result.anomalous,
        evaluation_count: result.evaluation_count,
        stable_candidates: result
            .stable
            .iter()
            .map(|c| CandidateDto { gain: rows(&c.gain), objective: c.objective })
            .collect(),
    };
    print_json(&dto)?;
    if let Some(dir) = &args.system.numeric.out {
        write_json(dir, "search.json", &dto)?;
    }
    Ok(result.verdict.map_or(3, verdict_code))
}

pub fn verify(args: &NumericArgs) -> Result<u8, CliError> {
    let (integrator, tolerances) = numeric(args)?;
    let rows: Vec<VerifyRowDto> = verify_reference_values(&integrator, &tolerances)
        .into_iter()
        .map(|r| VerifyRowDto {
            id: r.id,
            name: r.name.into(),
            expected: r.expected,
            got: r.got,
            tolerance: r.tolerance,
            pass: r.pass,
        })
        .collect();
    for r in &rows {
        println!("[{}] {:>2}  {}", if r.pass { "PASS" } else { "FAIL" }, r.id, r.name);
        println!("          expected:  {}", r.expected);
        println!("          got:       {}", r.got);
        println!("          tolerance: {}", r.tolerance);
    }
    let passed = rows.iter().filter(|r| r.pass).count();
    println!("{passed}/{} rows pass", rows.len());
    if let Some(dir) = &args.out {
        write_json(dir, "verify.json", &rows)?;
    }
    Ok(if passed == rows.len() { 0 } else { 1 })
}
