//! CSV logs and JSON summaries. Floats are written as `{:.16e}`
//! (17 significant digits), which round-trips every `f64`.

use std::io::Write;

use serde::Serialize;

use crate::continuous::ContinuousLog;
use crate::error::Result;
use crate::solver::{Termination, TrajectoryLog};

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn component_headers(prefix: &str, d: usize) -> impl Iterator<Item = String> + '_ {
    (1..=d).map(move |i| format!("{prefix}{i}"))
}

/// Columns: `k, z1..zd, zhalf1..zhalfd, lambda, r, opnorm, residual`.
pub fn trajectory_header(d: usize) -> Vec<String> {
    let mut h = vec!["k".to_string()];
    h.extend(component_headers("z", d));
    h.extend(component_headers("zhalf", d));
    h.extend(["lambda", "r", "opnorm", "residual"].map(String::from));
    h
}

pub fn write_trajectory_csv<W: Write>(writer: W, log: &TrajectoryLog) -> Result<()> {
    let d = log.z_out.len();
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(trajectory_header(d))?;
    for r in &log.records {
        let mut row = vec![r.k.to_string()];
        row.extend(r.z_k.iter().copied().map(num));
        row.extend(r.z_half.iter().copied().map(num));
        row.extend(
            [r.lambda_k, r.displacement_norm, r.op_norm_half, r.subproblem_residual]
                .into_iter()
                .map(num),
        );
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns: `t, z1..zd, v1..vd, opnorm, energy, integral`.
pub fn continuous_header(d: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend(component_headers("z", d));
    h.extend(component_headers("v", d));
    h.extend(["opnorm", "energy", "integral"].map(String::from));
    h
}

pub fn write_continuous_csv<W: Write>(writer: W, log: &ContinuousLog) -> Result<()> {
    let d = log.samples.first().map_or(0, |s| s.z.len());
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(continuous_header(d))?;
    for s in &log.samples {
        let mut row = vec![num(s.t)];
        row.extend(s.z.iter().copied().map(num));
        row.extend(s.v.iter().copied().map(num));
        row.extend([s.op_norm, s.energy, s.integral].into_iter().map(num));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub problem: String,
    pub p: u32,
    pub lipschitz: f64,
    pub iterations: usize,
    pub z_out: Vec<f64>,
    pub out_index: usize,
    pub termination: Termination,
    pub min_opnorm: f64,
    pub fitted_slope: Option<f64>,
    pub failure: Option<String>,
}

impl RunSummary {
    pub fn new(problem: &str, log: &TrajectoryLog) -> Self {
        Self {
            problem: problem.to_string(),
            p: log.order_p,
            lipschitz: log.lipschitz,
            iterations: log.records.len(),
            z_out: log.z_out.as_slice().to_vec(),
            out_index: log.out_index,
            termination: log.termination,
            min_opnorm: log.min_op_norm(),
            fitted_slope: crate::certify::fit_rate(log).ok(),
            failure: log.failure.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub problem: String,
    pub p: u32,
    pub samples: usize,
    pub t_final: f64,
    pub z_final: Vec<f64>,
    pub opnorm_final: f64,
    pub integral_final: f64,
    pub failure: Option<String>,
}

impl SimulationSummary {
    pub fn new(problem: &str, log: &ContinuousLog) -> Self {
        let last = log.samples.last();
        Self {
            problem: problem.to_string(),
            p: log.order_p,
            samples: log.samples.len(),
            t_final: last.map_or(0.0, |s| s.t),
            z_final: last.map_or_else(Vec::new, |s| s.z.clone()),
            opnorm_final: last.map_or(f64::NAN, |s| s.op_norm),
            integral_final: last.map_or(0.0, |s| s.integral),
            failure: log.failure.as_ref().map(|f| format!("t = {}: {}", f.t, f.message)),
        }
    }
}

pub fn write_json<W: Write, T: Serialize>(mut writer: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, value)?;
    writeln!(writer)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::builtin;
    use crate::solver::{run, SolverConfig};

    #[test]
    fn csv_rows_round_trip_bits() {
        let p = builtin("modified_forsaken").unwrap();
        let log = run(&p, &SolverConfig::new(1, 20.0, 30, vec![0.5, -0.5])).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &log).unwrap();
        let mut rdr = csv::Reader::from_reader(buf.as_slice());
        assert_eq!(
            rdr.headers().unwrap().iter().collect::<Vec<_>>(),
            vec!["k", "z1", "z2", "zhalf1", "zhalf2", "lambda", "r", "opnorm", "residual"]
        );
        let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), 31);
        for (row, rec) in rows.iter().zip(&log.records) {
            assert_eq!(row[0].parse::<usize>().unwrap(), rec.k);
            assert_eq!(row[1].parse::<f64>().unwrap().to_bits(), rec.z_k[0].to_bits());
            assert_eq!(row[4].parse::<f64>().unwrap().to_bits(), rec.z_half[1].to_bits());
            assert_eq!(row[7].parse::<f64>().unwrap().to_bits(), rec.op_norm_half.to_bits());
        }
    }

    #[test]
    fn continuous_header_layout() {
        assert_eq!(
            continuous_header(2),
            vec!["t", "z1", "z2", "v1", "v2", "opnorm", "energy", "integral"]
        );
    }
}
