//! Act-and-wait delayed feedback control of periodic orbits.
//!
//! The controller `u(t) = -g(t) F (x(t) - x(t - dT))` is switched on and off at
//! integer multiples of the orbit period `T`. Because every act block only looks
//! back into the current cycle, the closed loop over one cycle is a finite
//! dimensional linear map (the closed-loop monodromy matrix), and stability of
//! the orbit reduces to the location of its Floquet multipliers.
//!
//! Crate layout:
//!
//! * [`model`]: systems, periodic solutions, switching schedules, feedback laws
//! * [`odeint`]: fixed-step RK4 and transition matrices
//! * [`floquet`]: closed-loop monodromy (integral and propagation routes),
//!   eigen-analysis and the stability verdict
//! * [`variational`]: linearization of autonomous systems along a periodic orbit
//! * [`simulate`]: closed-loop simulation with an exact-grid delay buffer
//! * [`gainsearch`]: grid + simplex search for stabilizing gains
//! * [`examples`]: built-in systems with reference values
//! * [`reproduce`]: the reference-value check table used by `verify-paper`

pub mod error;
pub mod examples;
pub mod floquet;
pub mod gainsearch;
pub mod model;
pub mod odeint;
pub mod reproduce;
pub mod simulate;
pub mod variational;

pub use error::{Error, Result};
pub use floquet::{MonodromyReport, Tolerances, Verdict};
pub use model::{
    FeedbackLaw, LinearPeriodicSystem, NonlinearAutonomousSystem, PeriodicSolution,
    SwitchingSchedule,
};
pub use odeint::IntegratorConfig;
