//! Built-in systems and their reference values.
//!
//! * `ex41`: a 2-state linear periodic system (`T = 1`) with a scalar input and
//!   a neutral periodic solution, controlled with `F = [4.5, 0.6]`.
//! * `ex42`: a planar autonomous system with an unstable unit-circle orbit,
//!   controlled through its variational equation with a rotation-like gain.
//! * `ex42-ghat`, `ex42-gbar`: the same gain under the (1,2,1) and (2,2,2)
//!   schedules, both of which fail to stabilize.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{dmatrix, dvector, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{FeedbackLaw, LinearPeriodicSystem, NonlinearAutonomousSystem, PeriodicSolution, SwitchingSchedule};
use crate::variational::{build_variational, VariationalSystem};

pub const KNOWN_EXAMPLES: [&str; 4] = ["ex41", "ex42", "ex42-ghat", "ex42-gbar"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GoldenTolerance {
    Absolute(f64),
    Relative(f64),
}

impl GoldenTolerance {
    pub fn accepts(&self, expected: f64, got: f64) -> bool {
        match *self {
            GoldenTolerance::Absolute(tol) => (expected - got).abs() <= tol,
            GoldenTolerance::Relative(tol) => (expected - got).abs() <= tol * expected.abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GoldenValue {
    Matrix(DMatrix<f64>),
    Vector(DVector<f64>),
    /// An unordered set of real values (e.g. eigenvalues).
    Set(Vec<f64>),
}

/// A reference value together with its acceptance tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct Golden {
    pub key: &'static str,
    pub value: GoldenValue,
    pub tolerance: GoldenTolerance,
    pub source: &'static str,
}

impl Golden {
    pub fn matrix(&self) -> Option<&DMatrix<f64>> {
        match &self.value {
            GoldenValue::Matrix(m) => Some(m),
            _ => None,
        }
    }

    pub fn vector(&self) -> Option<&DVector<f64>> {
        match &self.value {
            GoldenValue::Vector(v) => Some(v),
            _ => None,
        }
    }

    pub fn set(&self) -> Option<&[f64]> {
        match &self.value {
            GoldenValue::Set(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Clone)]
pub enum ExampleSystem {
    Linear(LinearPeriodicSystem),
    Nonlinear(Arc<NonlinearAutonomousSystem>),
}

#[derive(Clone)]
pub struct ExampleEntry {
    name: &'static str,
    description: &'static str,
    system: ExampleSystem,
    analysis: LinearPeriodicSystem,
    variational: Option<VariationalSystem>,
    orbit: PeriodicSolution,
    law: FeedbackLaw,
    default_x0: DVector<f64>,
    default_cycles: usize,
    goldens: Vec<Golden>,
}

impl ExampleEntry {
    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn description(&self) -> &'static str {
        self.description
    }

    pub fn system(&self) -> &ExampleSystem {
        &self.system
    }

    /// The linear periodic system whose closed-loop monodromy decides
    /// stability: the plant itself, or the variational system along the orbit.
    pub fn analysis_system(&self) -> &LinearPeriodicSystem {
        &self.analysis
    }

    pub fn variational(&self) -> Option<&VariationalSystem> {
        self.variational.as_ref()
    }

    pub fn periodic_solution(&self) -> &PeriodicSolution {
        &self.orbit
    }

    pub fn default_law(&self) -> &FeedbackLaw {
        &self.law
    }

    pub fn default_x0(&self) -> &DVector<f64> {
        &self.default_x0
    }

    pub fn default_cycles(&self) -> usize {
        self.default_cycles
    }

    /// Vector spanning the structural unit eigenspace of the analysis system:
    /// `x*(0)` for linear plants, `x*'(0)` for autonomous ones.
    pub fn reference_orbit_vector(&self) -> DVector<f64> {
        match &self.variational {
            Some(vs) => vs.xstar_dot0().clone(),
            None => self.orbit.state(0.0),
        }
    }

    pub fn goldens(&self) -> &[Golden] {
        &self.goldens
    }

    pub fn golden(&self, key: &str) -> Option<&Golden> {
        self.goldens.iter().find(|g| g.key == key)
    }
}

/// Looks up a built-in example by name.
pub fn get_example(name: &str) -> Result<ExampleEntry> {
    match name {
        "ex41" => linear_example(),
        "ex42" => orbit_example("ex42", SwitchingSchedule::alternating()),
        "ex42-ghat" => orbit_example("ex42-ghat", SwitchingSchedule::act_two_thirds()),
        "ex42-gbar" => orbit_example("ex42-gbar", SwitchingSchedule::double_delay()),
        _ => Err(Error::UnknownExample {
            name: name.to_string(),
            known: KNOWN_EXAMPLES.iter().map(|s| s.to_string()).collect(),
        }),
    }
}

fn abs(tol: f64) -> GoldenTolerance {
    GoldenTolerance::Absolute(tol)
}

pub fn linear_example_a(t: f64) -> DMatrix<f64> {
    let w = 2.0 * PI * t;
    dmatrix![0.5, 0.5; 0.0, 2.0 * PI * w.sin() / (2.0 - w.cos())]
}

pub fn linear_example_b(t: f64) -> DMatrix<f64> {
    let s = (2.0 * PI * t).sin();
    dmatrix![0.0; 1.0 + s * s]
}

fn linear_example() -> Result<ExampleEntry> {
    let sys = LinearPeriodicSystem::new(2, 1, 1.0, linear_example_a, linear_example_b)?;
    let denom = 1.0 + 16.0 * PI * PI;
    let orbit = PeriodicSolution::new(1.0, move |t| {
        let w = 2.0 * PI * t;
        dvector![(w.cos() - 4.0 * PI * w.sin()) / denom - 2.0, 2.0 - w.cos()]
    })?
    .with_derivative(move |t| {
        let w = 2.0 * PI * t;
        dvector![
            (-2.0 * PI * w.sin() - 8.0 * PI * PI * w.cos()) / denom,
            2.0 * PI * w.sin()
        ]
    });
    let law = FeedbackLaw::new(dmatrix![4.5, 0.6], SwitchingSchedule::alternating())?;
    let goldens = vec![
        Golden {
            key: "Phi_T",
            value: GoldenValue::Matrix(dmatrix![1.6487, 1.2934; 0.0, 1.0]),
            tolerance: abs(5e-3),
            source: "reference uncontrolled monodromy of the linear example",
        },
        Golden {
            key: "Lambda",
            value: GoldenValue::Matrix(dmatrix![1.6857, 1.3671; -0.8273, -0.6495]),
            tolerance: abs(5e-3),
            source: "reference closed-loop monodromy for F = [4.5, 0.6]",
        },
        Golden {
            key: "eigenvalues",
            value: GoldenValue::Set(vec![1.0, 0.0362]),
            tolerance: abs(5e-3),
            source: "reference closed-loop multipliers for F = [4.5, 0.6]",
        },
        Golden {
            key: "v1",
            value: GoldenValue::Vector(dvector![-1.9937, 1.0]),
            tolerance: abs(5e-3),
            source: "reference unit eigenvector, equal to x*(0)",
        },
        Golden {
            key: "v2",
            value: GoldenValue::Vector(dvector![-0.6381, 0.7699]),
            tolerance: abs(5e-3),
            source: "reference stable eigenvector",
        },
        Golden {
            key: "alphas",
            value: GoldenValue::Vector(dvector![0.9907, -0.1178]),
            tolerance: abs(2e-3),
            source: "reference eigenbasis coefficients of x0 = [-1.9, 0.9]",
        },
    ];
    Ok(ExampleEntry {
        name: "ex41",
        description: "linear 2-state periodic system, scalar input, T = 1, F = [4.5, 0.6], schedule (1,1,1)",
        system: ExampleSystem::Linear(sys.clone()),
        analysis: sys,
        variational: None,
        orbit,
        law,
        default_x0: dvector![-1.9, 0.9],
        default_cycles: 30,
        goldens,
    })
}

/// `f(x) = -x (phi - phi^2) + 2 pi [x2, -x1]` with `phi = |x|^2`.
pub fn orbit_example_field(x: &DVector<f64>) -> DVector<f64> {
    let phi = x[0] * x[0] + x[1] * x[1];
    let psi = phi - phi * phi;
    dvector![-x[0] * psi + 2.0 * PI * x[1], -x[1] * psi - 2.0 * PI * x[0]]
}

pub fn orbit_example_jacobian(x: &DVector<f64>) -> DMatrix<f64> {
    let phi = x[0] * x[0] + x[1] * x[1];
    let psi = phi - phi * phi;
    let dpsi = 1.0 - 2.0 * phi;
    dmatrix![
        -psi - 2.0 * x[0] * x[0] * dpsi, -2.0 * x[0] * x[1] * dpsi + 2.0 * PI;
        -2.0 * x[0] * x[1] * dpsi - 2.0 * PI, -psi - 2.0 * x[1] * x[1] * dpsi
    ]
}

pub fn orbit_example_system() -> Result<NonlinearAutonomousSystem> {
    let orbit = PeriodicSolution::new(1.0, |t| {
        let w = 2.0 * PI * t;
        dvector![w.cos(), -w.sin()]
    })?
    .with_derivative(|t| {
        let w = 2.0 * PI * t;
        dvector![-2.0 * PI * w.sin(), -2.0 * PI * w.cos()]
    });
    Ok(NonlinearAutonomousSystem::new(2, orbit_example_field, orbit)?.with_jacobian(orbit_example_jacobian))
}

fn orbit_example(name: &'static str, schedule: SwitchingSchedule) -> Result<ExampleEntry> {
    let nl = Arc::new(orbit_example_system()?);
    let vs = build_variational(nl.clone())?;
    let law = FeedbackLaw::new(dmatrix![0.7, 4.1; -4.1, 0.7], schedule)?;
    let (description, goldens) = match name {
        "ex42" => (
            "planar autonomous system with unstable unit-circle orbit, T = 1, F = [[0.7, 4.1], [-4.1, 0.7]], schedule (1,1,1)",
            vec![
                Golden {
                    key: "Lambda",
                    value: GoldenValue::Matrix(dmatrix![-0.0093, 0.0; -6.5898, 1.0]),
                    tolerance: abs(5e-3),
                    source: "reference variational closed-loop monodromy",
                },
                Golden {
                    key: "eigenvalues",
                    value: GoldenValue::Set(vec![-0.0093, 1.0]),
                    tolerance: abs(5e-3),
                    source: "reference variational closed-loop multipliers",
                },
                Golden {
                    key: "v1",
                    value: GoldenValue::Vector(dvector![-0.1514, -0.9885]),
                    tolerance: abs(5e-3),
                    source: "reference stable eigenvector",
                },
                Golden {
                    key: "v2",
                    value: GoldenValue::Vector(dvector![0.0, -1.0]),
                    tolerance: abs(5e-3),
                    source: "reference unit eigenvector, parallel to x*'(0)",
                },
            ],
        ),
        "ex42-ghat" => (
            "planar orbit example under schedule (1,2,1): controller active two thirds of each 3T cycle",
            vec![Golden {
                key: "unstable_eigenvalue",
                value: GoldenValue::Set(vec![-25.9876]),
                tolerance: GoldenTolerance::Relative(2e-2),
                source: "reference multiplier outside the unit circle for the (1,2,1) schedule",
            }],
        ),
        _ => (
            "planar orbit example under schedule (2,2,2): delay 2T, 4T cycle",
            vec![Golden {
                key: "unstable_eigenvalue",
                value: GoldenValue::Set(vec![69.4489]),
                tolerance: GoldenTolerance::Relative(2e-2),
                source: "reference multiplier outside the unit circle for the (2,2,2) schedule",
            }],
        ),
    };
    Ok(ExampleEntry {
        name,
        description,
        system: ExampleSystem::Nonlinear(nl.clone()),
        analysis: vs.base().clone(),
        orbit: nl.periodic_solution().clone(),
        variational: Some(vs),
        law,
        default_x0: dvector![1.0, -0.05],
        default_cycles: 40,
        goldens,
    })
}
