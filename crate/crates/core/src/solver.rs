//! The higher-order extragradient loop.
//!
//! Each iteration solves the regularized Taylor subproblem for the half-step
//! `z_{k+½}`, sets `λ_k = ½‖z_{k+½} − z_k‖^{1−p}`, and takes the full step
//! `z_{k+1} = z_k − (p! λ_k / 2L_p) F(z_{k+½})`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::field::Field;
use crate::operator::{Operator, DEFAULT_FD_STEP};
use crate::problem::{OperatorMode, ProblemSpec};
use crate::subproblem::{self, lambda_step, solve_half_step_p1, solve_half_step_p2};
use crate::taylor::{check_order, factorial};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub order_p: u32,
    pub lipschitz: f64,
    pub max_iterations: usize,
    pub z0: Vec<f64>,
    #[serde(default)]
    pub operator_mode: OperatorMode,
    #[serde(default = "default_subproblem_tol")]
    pub subproblem_tol: f64,
    #[serde(default = "default_subproblem_max_iter")]
    pub subproblem_max_iter: usize,
    /// Stop once `‖F(z_{k+½})‖ ≤ stop_norm`; `0` disables.
    #[serde(default)]
    pub stop_norm: f64,
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
}

fn default_subproblem_tol() -> f64 {
    subproblem::DEFAULT_TOL
}

fn default_subproblem_max_iter() -> usize {
    subproblem::DEFAULT_MAX_ITER
}

fn default_fd_step() -> f64 {
    DEFAULT_FD_STEP
}

impl SolverConfig {
    pub fn new(order_p: u32, lipschitz: f64, max_iterations: usize, z0: Vec<f64>) -> Self {
        Self {
            order_p,
            lipschitz,
            max_iterations,
            z0,
            operator_mode: OperatorMode::Standard,
            subproblem_tol: subproblem::DEFAULT_TOL,
            subproblem_max_iter: subproblem::DEFAULT_MAX_ITER,
            stop_norm: 0.0,
            fd_step: DEFAULT_FD_STEP,
        }
    }

    pub fn with_mode(mut self, mode: OperatorMode) -> Self {
        self.operator_mode = mode;
        self
    }

    pub fn with_stop_norm(mut self, eps: f64) -> Self {
        self.stop_norm = eps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_order(self.order_p)?;
        self.operator_mode.validate()?;
        if !(self.lipschitz > 0.0 && self.lipschitz.is_finite()) {
            return Err(Error::argument(format!("L_p must be positive, got {}", self.lipschitz)));
        }
        if self.max_iterations == 0 {
            return Err(Error::argument("iteration budget K must be at least 1"));
        }
        if !(self.subproblem_tol > 0.0) {
            return Err(Error::argument("subproblem tolerance must be positive"));
        }
        if !(self.stop_norm >= 0.0) {
            return Err(Error::argument("stop_norm must be non-negative"));
        }
        if !(self.fd_step > 0.0) {
            return Err(Error::argument("fd_step must be positive"));
        }
        if self.z0.iter().any(|c| !c.is_finite()) {
            return Err(Error::numeric("z0 has non-finite coordinates"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterateRecord {
    pub k: usize,
    pub z_k: DVector<f64>,
    pub z_half: DVector<f64>,
    pub lambda_k: f64,
    /// `r_k = ‖z_half − z_k‖`.
    pub displacement_norm: f64,
    /// `F(z_{k+½})`.
    pub f_half: DVector<f64>,
    pub op_norm_half: f64,
    pub subproblem_residual: f64,
    pub subproblem_iters: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    BudgetExhausted,
    EpsilonReached,
    ExactStationary,
    SubproblemFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub order_p: u32,
    pub lipschitz: f64,
    pub records: Vec<IterateRecord>,
    pub z_out: DVector<f64>,
    pub out_index: usize,
    pub termination: Termination,
    /// Message from the half-step solver when `termination` is `SubproblemFailure`.
    pub failure: Option<String>,
}

impl TrajectoryLog {
    pub fn z0(&self) -> &DVector<f64> {
        &self.records[0].z_k
    }

    pub fn min_op_norm(&self) -> f64 {
        self.records[self.out_index].op_norm_half
    }

    /// `min_{j ≤ k} ‖F(z_{j+½})‖²` for every `k`.
    pub fn running_min_sq(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.records
            .iter()
            .map(|r| {
                best = best.min(r.op_norm_half * r.op_norm_half);
                best
            })
            .collect()
    }
}

/// Runs the method on `problem` under `config.operator_mode`.
pub fn run(problem: &ProblemSpec, config: &SolverConfig) -> Result<TrajectoryLog> {
    let field = Field::new(problem, config.operator_mode)?.with_fd_step(config.fd_step);
    run_operator(&field, config)
}

/// Runs the method on an arbitrary operator; `config.operator_mode` is ignored.
pub fn run_operator<O: Operator + ?Sized>(op: &O, config: &SolverConfig) -> Result<TrajectoryLog> {
    config.validate()?;
    check_dim(op.dim(), config.z0.len())?;
    let p = config.order_p;
    let lp = config.lipschitz;
    let step_scale = factorial(p) / (2.0 * lp);

    let mut z = DVector::from_column_slice(&config.z0);
    let mut records: Vec<IterateRecord> = Vec::with_capacity(config.max_iterations + 1);
    let mut termination = Termination::BudgetExhausted;
    let mut failure = None;

    for k in 0..=config.max_iterations {
        let f_k = op.eval(&z)?;
        let half = match p {
            1 => solve_half_step_p1(&f_k, lp, &z),
            _ => op.jacobian(&z).and_then(|j| {
                solve_half_step_p2(&f_k, &j, lp, &z, config.subproblem_tol, config.subproblem_max_iter)
            }),
        };
        let half = match half {
            Ok(h) => h,
            Err(e @ (Error::Convergence { .. } | Error::Singular(_))) if !records.is_empty() => {
                termination = Termination::SubproblemFailure;
                failure = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        };

        let r = half.displacement_norm;
        if r == 0.0 {
            records.push(IterateRecord {
                k,
                z_k: z.clone(),
                z_half: half.z_half,
                lambda_k: if p == 1 { 0.5 } else { 0.0 },
                displacement_norm: 0.0,
                op_norm_half: f_k.norm(),
                f_half: f_k,
                subproblem_residual: half.residual_norm,
                subproblem_iters: half.iterations_used,
            });
            termination = Termination::ExactStationary;
            break;
        }
        let lambda = lambda_step(p, r).expect("r > 0");
        let f_half = op.eval(&half.z_half)?;
        let op_norm_half = f_half.norm();
        let z_next = &z - &f_half * (step_scale * lambda);
        if z_next.iter().any(|c| !c.is_finite()) {
            return Err(Error::numeric(format!("iterate z_{} is not finite", k + 1)));
        }
        records.push(IterateRecord {
            k,
            z_k: std::mem::replace(&mut z, z_next),
            z_half: half.z_half,
            lambda_k: lambda,
            displacement_norm: r,
            f_half,
            op_norm_half,
            subproblem_residual: half.residual_norm,
            subproblem_iters: half.iterations_used,
        });
        if config.stop_norm > 0.0 && op_norm_half <= config.stop_norm {
            termination = Termination::EpsilonReached;
            break;
        }
    }

    let (z_out, out_index) = select_output(&records)?;
    Ok(TrajectoryLog {
        order_p: p,
        lipschitz: lp,
        records,
        z_out,
        out_index,
        termination,
        failure,
    })
}

/// Half-step iterate with the smallest recorded `‖F(z_{k+½})‖`; ties go to the earliest.
pub fn select_output(records: &[IterateRecord]) -> Result<(DVector<f64>, usize)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, rec) in records.iter().enumerate() {
        if best.map_or(true, |(_, b)| rec.op_norm_half < b) {
            best = Some((i, rec.op_norm_half));
        }
    }
    let (i, _) = best.ok_or_else(|| Error::Degenerate("empty trajectory".into()))?;
    Ok((records[i].z_half.clone(), i))
}

/// Whether the tail of a run is cycling rather than converging.
///
/// Over the last `window` records (or all of them, if fewer): the operator
/// norm must stay above `threshold`, and the iterates must come back near an
/// earlier point, i.e. some pair is closer than 10% of the window's spread
/// while the path between them is at least as long as the spread.
pub fn detect_cycling(log: &TrajectoryLog, window: usize, threshold: f64) -> bool {
    let window = window.max(2);
    let tail = &log.records[log.records.len().saturating_sub(window)..];
    if tail.len() < 3 {
        return false;
    }
    if tail.iter().map(|r| r.op_norm_half).fold(f64::INFINITY, f64::min) <= threshold {
        return false;
    }

    let d = tail[0].z_k.len();
    let spread = (0..d)
        .map(|i| {
            let (lo, hi) = tail
                .iter()
                .map(|r| r.z_k[i])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            (hi - lo).powi(2)
        })
        .sum::<f64>()
        .sqrt();
    if !(spread > 0.0) {
        return false;
    }

    let mut arc = Vec::with_capacity(tail.len());
    let mut acc = 0.0;
    arc.push(0.0);
    for w in tail.windows(2) {
        acc += (&w[1].z_k - &w[0].z_k).norm();
        arc.push(acc);
    }

    let radius = 0.1 * spread;
    for i in 0..tail.len() {
        // first j whose path distance from i reaches the spread
        let start = arc.partition_point(|&a| a - arc[i] < spread);
        if tail[start..]
            .iter()
            .any(|r| (&r.z_k - &tail[i].z_k).norm() < radius)
        {
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::LinearOperator;
    use crate::problem::builtin;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn rec(k: usize, norm: f64) -> IterateRecord {
        IterateRecord {
            k,
            z_k: DVector::from_element(2, k as f64),
            z_half: DVector::from_element(2, k as f64 + 0.5),
            lambda_k: 0.5,
            displacement_norm: 1.0,
            f_half: DVector::zeros(2),
            op_norm_half: norm,
            subproblem_residual: 0.0,
            subproblem_iters: 0,
        }
    }

    #[test]
    fn select_output_examples() {
        let (z, i) = select_output(&[rec(0, 5.0)]).unwrap();
        assert_eq!(i, 0);
        assert_eq!(z, DVector::from_element(2, 0.5));
        let recs: Vec<_> = [3.0, 1.0, 2.0].iter().enumerate().map(|(k, &n)| rec(k, n)).collect();
        assert_eq!(select_output(&recs).unwrap().1, 1);
        let recs: Vec<_> = [2.0, 1.0, 1.0].iter().enumerate().map(|(k, &n)| rec(k, n)).collect();
        assert_eq!(select_output(&recs).unwrap().1, 1);
        assert!(select_output(&[]).is_err());
    }

    #[test]
    fn quadratic_one_step() {
        let p = builtin("quadratic_monotone").unwrap();
        let log = run(&p, &SolverConfig::new(1, 1.0, 1, vec![1.0, 0.0])).unwrap();
        let r0 = &log.records[0];
        assert_eq!(r0.z_half.as_slice(), &[0.5, 0.0]);
        assert_eq!(r0.lambda_k, 0.5);
        assert_eq!(log.records[1].z_k.as_slice(), &[0.875, 0.0]);
    }

    #[test]
    fn stationary_start_terminates_immediately() {
        for p in [1, 2] {
            let prob = builtin("x2y").unwrap();
            let log = run(&prob, &SolverConfig::new(p, 20.0, 50, vec![0.0, 1.5])).unwrap();
            assert_eq!(log.termination, Termination::ExactStationary);
            assert_eq!(log.records.len(), 1);
            assert_eq!(log.z_out.as_slice(), &[0.0, 1.5]);
        }
    }

    #[test]
    fn record_count_is_budget_plus_one() {
        let p = builtin("bilinear").unwrap();
        let log = run(&p, &SolverConfig::new(1, 1.0, 100, vec![1.0, 0.0])).unwrap();
        assert_eq!(log.records.len(), 101);
        assert_eq!(log.termination, Termination::BudgetExhausted);
    }

    #[test]
    fn epsilon_stop() {
        let p = builtin("quadratic_monotone").unwrap();
        let cfg = SolverConfig::new(1, 1.0, 10_000, vec![1.0, 1.0]).with_stop_norm(1e-6);
        let log = run(&p, &cfg).unwrap();
        assert_eq!(log.termination, Termination::EpsilonReached);
        assert!(log.min_op_norm() <= 1e-6);
        assert_eq!(log.out_index, log.records.len() - 1);
    }

    #[test]
    fn p1_half_and_full_step_relations_are_exact() {
        let prob = builtin("modified_forsaken").unwrap();
        let l1 = 20.0;
        let log = run(&prob, &SolverConfig::new(1, l1, 200, vec![0.5, -0.5])).unwrap();
        for w in log.records.windows(2) {
            let f_k = prob.field(&w[0].z_k).unwrap();
            assert_eq!(w[0].z_half, &w[0].z_k - &f_k * (1.0 / (2.0 * l1)));
            assert_eq!(w[1].z_k, &w[0].z_k - &w[0].f_half * (1.0 / (4.0 * l1)));
        }
    }

    #[test]
    fn invalid_configs() {
        let p = builtin("bilinear").unwrap();
        assert!(run(&p, &SolverConfig::new(3, 1.0, 10, vec![1.0, 0.0])).is_err());
        assert!(run(&p, &SolverConfig::new(1, 0.0, 10, vec![1.0, 0.0])).is_err());
        assert!(run(&p, &SolverConfig::new(1, 1.0, 0, vec![1.0, 0.0])).is_err());
        assert!(matches!(
            run(&p, &SolverConfig::new(1, 1.0, 10, vec![1.0])),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn divergent_iterates_report_step() {
        // Strongly expanding field with a tiny L blows up quickly.
        let op = LinearOperator::new(DMatrix::from_row_slice(2, 2, &[-1e150, 0.0, 0.0, -1e150])).unwrap();
        let err = run_operator(&op, &SolverConfig::new(1, 1e-150, 100, vec![1.0, 1.0])).unwrap_err();
        assert!(matches!(err, Error::Numeric(ref m) if m.contains("iterate")), "{err}");
    }

    #[test]
    fn converging_run_is_not_cycling() {
        let p = builtin("quadratic_monotone").unwrap();
        let log = run(&p, &SolverConfig::new(1, 1.0, 500, vec![1.0, 0.0])).unwrap();
        assert!(!detect_cycling(&log, 200, 1e-3));
    }

    #[test]
    fn circle_walk_is_cycling() {
        // synthetic records going round the unit circle twice
        let n = 400;
        let records: Vec<_> = (0..n)
            .map(|k| {
                let t = 4.0 * std::f64::consts::PI * k as f64 / n as f64;
                let mut r = rec(k, 1.0);
                r.z_k = DVector::from_vec(vec![t.cos(), t.sin()]);
                r
            })
            .collect();
        let (z_out, out_index) = select_output(&records).unwrap();
        let log = TrajectoryLog {
            order_p: 1,
            lipschitz: 1.0,
            records,
            z_out,
            out_index,
            termination: Termination::BudgetExhausted,
            failure: None,
        };
        assert!(detect_cycling(&log, 400, 1e-3));
        // half a turn never comes back
        assert!(!detect_cycling(&log, 100, 1e-3));
    }

    #[test]
    fn runs_are_deterministic() {
        let p = builtin("forsaken").unwrap();
        let cfg = SolverConfig::new(2, 500.0, 300, vec![-1.0, -1.0]);
        assert_eq!(run(&p, &cfg).unwrap(), run(&p, &cfg).unwrap());
    }

    #[test]
    fn p2_on_quadratic_contracts() {
        let p = builtin("quadratic_monotone").unwrap();
        let log = run(&p, &SolverConfig::new(2, 1.0, 40, vec![1.0, 0.0])).unwrap();
        assert!(log.min_op_norm() < 1e-9);
        for r in &log.records {
            assert_relative_eq!(r.displacement_norm, (&r.z_half - &r.z_k).norm(), max_relative = 1e-12);
        }
    }
}
