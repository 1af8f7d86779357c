//! Serialized report shapes and the trajectory CSV format.
//!
//! Matrices are written row-major as nested arrays and complex numbers as
//! `{"re": .., "im": ..}` objects.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use floquet_aaw::simulate::Trajectory;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct ComplexDto {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexDto {
    fn from(c: Complex64) -> Self {
        Self { re: c.re, im: c.im }
    }
}

pub fn complex_list(values: &[Complex64]) -> Vec<ComplexDto> {
    values.iter().copied().map(ComplexDto::from).collect()
}

pub fn complex_vector(v: &DVector<Complex64>) -> Vec<ComplexDto> {
    v.iter().copied().map(ComplexDto::from).collect()
}

pub fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn vector(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ScheduleDto {
    pub wait: u32,
    pub act: u32,
    pub delay: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct SystemProvenance {
    pub example: String,
    pub description: String,
    /// `linear` for a linear periodic plant, `variational` for the
    /// linearization of an autonomous system along its orbit.
    pub analysis_system: &'static str,
    pub gain: Vec<Vec<f64>>,
    pub schedule: ScheduleDto,
    pub steps_per_period: usize,
    pub tol_unit: f64,
    pub tol_margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeReport {
    pub system: SystemProvenance,
    pub lambda: Vec<Vec<f64>>,
    pub cycle_time: f64,
    pub eigenvalues: Vec<ComplexDto>,
    pub eigenvectors: Vec<Vec<ComplexDto>>,
    pub kappa: usize,
    pub semisimple: bool,
    pub spectral_radius_excl_unit: f64,
    pub verdict: String,
    /// Largest entrywise gap between the integral and propagation routes;
    /// present for the alternating (1,1,1) schedule only.
    pub route_agreement_residual: Option<f64>,
    /// `|Lambda x*'(0) - x*'(0)| / |x*'(0)|` for variational systems.
    pub unit_eigenvector_residual: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LinearLimitReport {
    pub system: SystemProvenance,
    pub verdict: String,
    pub x0: Vec<f64>,
    pub cycles: usize,
    pub alphas: Option<Vec<ComplexDto>>,
    pub limit_point: Option<Vec<f64>>,
    pub kappa: Option<usize>,
    pub condition_number: Option<f64>,
    pub warning: Option<String>,
    /// Distance of `x(kPT)` to the limit point for `k = 0..=cycles`.
    pub distances: Option<Vec<f64>>,
    pub final_distance: Option<f64>,
    pub monotone_tail: Option<bool>,
    pub prediction_error: Option<String>,
    pub final_state: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OrbitLimitReport {
    pub system: SystemProvenance,
    pub verdict: String,
    pub x0: Vec<f64>,
    pub cycles: usize,
    /// Distance of `x(kPT)` to the orbit (as a set) for `k = 0..=cycles`.
    pub orbit_distances: Vec<f64>,
    pub final_orbit_distance: f64,
    pub monotone_tail: bool,
    pub final_state: Vec<f64>,
    pub final_state_norm: f64,
    pub max_input_last_act_block: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport {
    pub error: String,
    pub kind: &'static str,
    pub time: Option<f64>,
    pub nodes_written: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateDto {
    pub gain: Vec<Vec<f64>>,
    pub objective: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchReport {
    pub system: SystemProvenance,
    pub bounds: Vec<(f64, f64)>,
    pub grid_points: usize,
    pub refine: bool,
    pub best_gain: Vec<Vec<f64>>,
    pub best_objective: f64,
    pub best_grid_objective: f64,
    pub verdict: Option<String>,
    pub anomalous: bool,
    pub evaluation_count: usize,
    pub stable_candidates: Vec<CandidateDto>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyRowDto {
    pub id: usize,
    pub name: String,
    pub expected: String,
    pub got: String,
    pub tolerance: String,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub arguments: Vec<String>,
    pub threads: usize,
    pub unix_time_seconds: u64,
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    text.push('\n');
    fs::write(dir.join(name), text)
}

/// Formats with 17 significant digits, enough to round-trip any `f64`.
pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `t,x1..xn,u1..um,switch`, one row per grid node.
pub fn write_trajectory_csv<W: Write>(out: W, traj: &Trajectory, dim: usize, input_dim: usize) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((1..=dim).map(|i| format!("x{i}")));
    header.extend((1..=input_dim).map(|i| format!("u{i}")));
    header.push("switch".into());
    w.write_record(&header)?;
    for k in 0..traj.len() {
        let mut record = Vec::with_capacity(dim + input_dim + 2);
        record.push(format_number(traj.times[k]));
        record.extend(traj.states[k].iter().map(|v| format_number(*v)));
        record.extend(traj.inputs[k].iter().map(|v| format_number(*v)));
        record.push(traj.switches[k].to_string());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Parsed trajectory CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTable {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub inputs: Vec<Vec<f64>>,
    pub switches: Vec<u8>,
}

pub fn read_trajectory_csv<R: Read>(input: R) -> Result<TrajectoryTable, String> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(|e| e.to_string())?.clone();
    let dim = header.iter().filter(|h| h.starts_with('x')).count();
    let input_dim = header.iter().filter(|h| h.starts_with('u')).count();
    if header.len() != dim + input_dim + 2 || &header[0] != "t" || &header[header.len() - 1] != "switch" {
        return Err(format!("unexpected header {header:?}"));
    }
    let mut table = TrajectoryTable { times: Vec::new(), states: Vec::new(), inputs: Vec::new(), switches: Vec::new() };
    for record in r.records() {
        let record = record.map_err(|e| e.to_string())?;
        let num = |i: usize| record[i].parse::<f64>().map_err(|e| format!("field {i}: {e}"));
        table.times.push(num(0)?);
        table.states.push((1..=dim).map(num).collect::<Result<_, _>>()?);
        table.inputs.push((dim + 1..=dim + input_dim).map(num).collect::<Result<_, _>>()?);
        table.switches.push(record[dim + input_dim + 1].parse().map_err(|e| format!("switch: {e}"))?);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_round_trips() {
        for v in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, f64::MIN_POSITIVE, -0.0] {
            assert_eq!(format_number(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn matrices_are_row_major() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(rows(&m), vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]);
    }

    #[test]
    fn complex_serializes_as_object() {
        let s = serde_json::to_string(&ComplexDto::from(Complex64::new(1.5, -2.0))).unwrap();
        assert_eq!(s, r#"{"re":1.5,"im":-2.0}"#);
    }
}
