//! Continuous-time dual-extrapolation dynamics
//!
//! ```text
//! ṡ = −G_p(z),   v = z0 + s,   z + G_p(z) = v,   G_p(z) = F(z)/‖F(z)‖^{1−1/p}
//! ```
//!
//! The algebraic constraint gives `G_p(z) = v − z`, so `v̇ = z − v` with
//! `z = R(v)` the resolvent. We integrate that ODE in `v` with classical RK4
//! and recover `z` by a resolvent solve at every stage.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::operator::{central_difference_jacobian, Operator};
use crate::taylor::check_order;

pub const DEFAULT_RESOLVENT_TOL: f64 = 1e-12;
pub const DEFAULT_NORM_FLOOR: f64 = 1e-12;
const RESOLVENT_MAX_ITER: usize = 500;
const RESOLVENT_FD_STEP: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousConfig {
    pub order_p: u32,
    pub t_end: f64,
    pub dt: f64,
    pub z0: Vec<f64>,
    pub resolvent_tol: f64,
    pub norm_floor: f64,
}

impl ContinuousConfig {
    pub fn new(order_p: u32, t_end: f64, dt: f64, z0: Vec<f64>) -> Self {
        Self {
            order_p,
            t_end,
            dt,
            z0,
            resolvent_tol: DEFAULT_RESOLVENT_TOL,
            norm_floor: DEFAULT_NORM_FLOOR,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_order(self.order_p)?;
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::argument("t_end must be positive"));
        }
        if !(self.dt > 0.0 && self.dt <= self.t_end) {
            return Err(Error::argument("dt must lie in (0, t_end]"));
        }
        if !(self.resolvent_tol > 0.0) {
            return Err(Error::argument("resolvent tolerance must be positive"));
        }
        if !(self.norm_floor >= 0.0) {
            return Err(Error::argument("norm floor must be non-negative"));
        }
        if self.z0.iter().any(|c| !c.is_finite()) {
            return Err(Error::numeric("z0 has non-finite coordinates"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub z: Vec<f64>,
    pub v: Vec<f64>,
    pub s: Vec<f64>,
    pub op_norm: f64,
    /// Lyapunov energy `‖s(t)‖²`.
    pub energy: f64,
    /// Trapezoid estimate of `∫₀ᵗ ‖F(z)‖^{2/p}`.
    pub integral: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationFailure {
    pub t: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousLog {
    pub order_p: u32,
    pub samples: Vec<Sample>,
    /// Set when a resolvent solve failed; `samples` stops before `failure.t`.
    pub failure: Option<SimulationFailure>,
}

/// `G_p(F) = F / max(‖F‖, floor)^{1−1/p}`.
pub fn normalized_field(f_z: &DVector<f64>, p: u32, norm_floor: f64) -> DVector<f64> {
    if p <= 1 {
        return f_z.clone();
    }
    let n = f_z.norm().max(norm_floor);
    if n == 0.0 {
        return DVector::zeros(f_z.len());
    }
    f_z / n.powf(1.0 - 1.0 / p as f64)
}

fn resolvent_residual<O: Operator + ?Sized>(
    op: &O,
    z: &DVector<f64>,
    v: &DVector<f64>,
    p: u32,
    norm_floor: f64,
) -> Result<DVector<f64>> {
    let g = normalized_field(&op.eval(z)?, p, norm_floor);
    Ok(z + g - v)
}

/// Solves `z + G_p(z) = v` for `z`.
///
/// Damped Newton with a finite-differenced `I + ∂G_p`, started at `z = v`;
/// falls back to the damped fixed point `z ← ½(z + v − G_p(z))` when the
/// Newton direction fails to reduce the residual.
pub fn resolvent_solve<O: Operator + ?Sized>(
    op: &O,
    v: &DVector<f64>,
    p: u32,
    tol: f64,
    norm_floor: f64,
) -> Result<DVector<f64>> {
    check_order(p)?;
    check_dim(op.dim(), v.len())?;
    if !(tol > 0.0) {
        return Err(Error::argument("resolvent tolerance must be positive"));
    }
    let target = tol * v.norm().max(1.0);
    let mut z = v.clone();
    let mut h = resolvent_residual(op, &z, v, p, norm_floor)?;
    let mut h_norm = h.norm();
    let mut best = h_norm;

    for _ in 0..RESOLVENT_MAX_ITER {
        if h_norm <= target {
            return Ok(z);
        }
        let step = newton_direction(op, &z, &h, p, norm_floor);
        let mut accepted = false;
        if let Some(step) = step {
            let mut damping = 1.0;
            for _ in 0..30 {
                let trial = &z - &step * damping;
                if let Ok(ht) = resolvent_residual(op, &trial, v, p, norm_floor) {
                    let hn = ht.norm();
                    if hn.is_finite() && hn < h_norm {
                        z = trial;
                        h = ht;
                        h_norm = hn;
                        accepted = true;
                        break;
                    }
                }
                damping *= 0.5;
            }
        }
        if !accepted {
            let trial = &z - &h * 0.5;
            h = resolvent_residual(op, &trial, v, p, norm_floor)?;
            h_norm = h.norm();
            z = trial;
        }
        best = best.min(h_norm);
    }
    if h_norm <= target {
        return Ok(z);
    }
    Err(Error::Convergence {
        what: "resolvent solve",
        iterations: RESOLVENT_MAX_ITER,
        best_residual: best,
    })
}

fn newton_direction<O: Operator + ?Sized>(
    op: &O,
    z: &DVector<f64>,
    h: &DVector<f64>,
    p: u32,
    norm_floor: f64,
) -> Option<DVector<f64>> {
    let jg = central_difference_jacobian(
        |x| op.eval(x).map(|f| normalized_field(&f, p, norm_floor)),
        z,
        RESOLVENT_FD_STEP,
    )
    .ok()?;
    let n = z.len();
    let m: DMatrix<f64> = DMatrix::identity(n, n) + jg;
    let step = m.lu().solve(h)?;
    step.iter().all(|c| c.is_finite()).then_some(step)
}

/// Fixed-step RK4 on `v̇ = R(v) − v`, `v(0) = z0`.
pub fn simulate<O: Operator + ?Sized>(op: &O, config: &ContinuousConfig) -> Result<ContinuousLog> {
    config.validate()?;
    check_dim(op.dim(), config.z0.len())?;
    let p = config.order_p;
    let z0 = DVector::from_column_slice(&config.z0);
    let steps = (config.t_end / config.dt).round().max(1.0) as usize;
    let dt = config.dt;
    let resolve = |v: &DVector<f64>| resolvent_solve(op, v, p, config.resolvent_tol, config.norm_floor);
    let integrand = |f_norm: f64| f_norm.powf(2.0 / p as f64);

    let mut samples = Vec::with_capacity(steps + 1);
    let mut v = z0.clone();
    let mut z = match resolve(&v) {
        Ok(z) => z,
        Err(e) => {
            return Ok(ContinuousLog {
                order_p: p,
                samples,
                failure: Some(SimulationFailure {
                    t: 0.0,
                    message: e.to_string(),
                }),
            })
        }
    };
    let mut op_norm = op.eval(&z)?.norm();
    let mut integral = 0.0;
    samples.push(make_sample(0.0, &z, &v, &z0, op_norm, integral));

    let mut failure = None;
    for n in 1..=steps {
        let t = n as f64 * dt;
        let stage = |vv: &DVector<f64>| resolve(vv).map(|zz| zz - vv);
        let k1 = z.clone() - &v;
        let step = (|| -> Result<DVector<f64>> {
            let k2 = stage(&(&v + &k1 * (0.5 * dt)))?;
            let k3 = stage(&(&v + &k2 * (0.5 * dt)))?;
            let k4 = stage(&(&v + &k3 * dt))?;
            Ok(&v + (&k1 + &k2 * 2.0 + &k3 * 2.0 + &k4) * (dt / 6.0))
        })();
        let next = step.and_then(|v_next| resolve(&v_next).map(|z_next| (v_next, z_next)));
        let (v_next, z_next) = match next {
            Ok(pair) => pair,
            Err(e) => {
                failure = Some(SimulationFailure {
                    t,
                    message: e.to_string(),
                });
                break;
            }
        };
        let next_norm = op.eval(&z_next)?.norm();
        integral += 0.5 * dt * (integrand(op_norm) + integrand(next_norm));
        v = v_next;
        z = z_next;
        op_norm = next_norm;
        samples.push(make_sample(t, &z, &v, &z0, op_norm, integral));
    }

    Ok(ContinuousLog {
        order_p: p,
        samples,
        failure,
    })
}

fn make_sample(
    t: f64,
    z: &DVector<f64>,
    v: &DVector<f64>,
    z0: &DVector<f64>,
    op_norm: f64,
    integral: f64,
) -> Sample {
    let s = v - z0;
    Sample {
        t,
        z: z.as_slice().to_vec(),
        v: v.as_slice().to_vec(),
        energy: s.norm_squared(),
        s: s.as_slice().to_vec(),
        op_norm,
        integral,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundViolation {
    pub t: f64,
    /// `value − bound` (positive on violation).
    pub margin: f64,
}

/// Outcome of checking the energy integral and the `O(1/t^p)` rate along a log.
///
/// `bound` is the published constant `D²/(4(2−ρ))`; `integrated_bound` is
/// `D²/(2−ρ)`, what integrating `dE/dt ≤ 2⟨ṡ, z*−z0⟩ − (2−ρ)‖F‖^{2/p}`
/// actually yields (`max_s 2⟨s,a⟩ − ‖s‖² = ‖a‖²`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub bound: f64,
    pub integrated_bound: f64,
    pub tolerance: f64,
    pub integral_ok: bool,
    pub integral_violation: Option<BoundViolation>,
    pub rate_ok: bool,
    pub rate_violation: Option<BoundViolation>,
    pub integrated_integral_ok: bool,
    pub integrated_rate_ok: bool,
    pub max_integral: f64,
}

impl EnergyReport {
    pub fn passed(&self) -> bool {
        self.integral_ok && self.rate_ok
    }
}

pub fn check_energy_bound(log: &ContinuousLog, z_star: &DVector<f64>, rho: f64, d: f64) -> Result<EnergyReport> {
    if !(rho < 2.0) {
        return Err(Error::argument(format!("rho must be < 2, got {rho}")));
    }
    let first = log
        .samples
        .first()
        .ok_or_else(|| Error::Degenerate("empty continuous log".into()))?;
    check_dim(first.v.len(), z_star.len())?;
    let dist = (DVector::from_column_slice(&first.v) - z_star).norm();
    if d < dist {
        return Err(Error::argument(format!("D = {d} is below ‖z0 − z*‖ = {dist}")));
    }
    let p = log.order_p as i32;
    let bound = d * d / (4.0 * (2.0 - rho));
    let integrated_bound = d * d / (2.0 - rho);
    let tolerance = 1e-6 * bound.max(1.0);
    let integrated_tolerance = 1e-6 * integrated_bound.max(1.0);

    let mut report = EnergyReport {
        bound,
        integrated_bound,
        tolerance,
        integral_ok: true,
        integral_violation: None,
        rate_ok: true,
        rate_violation: None,
        integrated_integral_ok: true,
        integrated_rate_ok: true,
        max_integral: 0.0,
    };
    let mut min_sq = f64::INFINITY;
    for (i, s) in log.samples.iter().enumerate() {
        report.max_integral = report.max_integral.max(s.integral);
        if s.integral > bound + tolerance && report.integral_violation.is_none() {
            report.integral_ok = false;
            report.integral_violation = Some(BoundViolation {
                t: s.t,
                margin: s.integral - bound,
            });
        }
        if s.integral > integrated_bound + integrated_tolerance {
            report.integrated_integral_ok = false;
        }
        min_sq = min_sq.min(s.op_norm * s.op_norm);
        if i == 0 {
            continue;
        }
        let rate = (bound / s.t).powi(p);
        let rate_tol = 1e-6 * rate.max(1e-300);
        if min_sq > rate + rate_tol && report.rate_violation.is_none() {
            report.rate_ok = false;
            report.rate_violation = Some(BoundViolation {
                t: s.t,
                margin: min_sq - rate,
            });
        }
        let integrated_rate = (integrated_bound / s.t).powi(p);
        if min_sq > integrated_rate * (1.0 + 1e-6) {
            report.integrated_rate_ok = false;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{FnOperator, LinearOperator};
    use approx::assert_relative_eq;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn normalized_field_examples() {
        assert_eq!(normalized_field(&v(&[3.0, 4.0]), 1, 1e-12), v(&[3.0, 4.0]));
        let g = normalized_field(&v(&[3.0, 4.0]), 2, 1e-12);
        assert_relative_eq!(g[0], 3.0 / 5f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(g[1], 4.0 / 5f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(g[0], 1.3416, epsilon = 1e-4);
        assert_relative_eq!(g[1], 1.7889, epsilon = 1e-4);
        for p in [1, 2] {
            assert_eq!(normalized_field(&v(&[0.0, 0.0]), p, 1e-12), v(&[0.0, 0.0]));
            assert_eq!(normalized_field(&v(&[0.0, 0.0]), p, 0.0), v(&[0.0, 0.0]));
        }
    }

    #[test]
    fn resolvent_examples() {
        let id = LinearOperator::new(DMatrix::identity(2, 2)).unwrap();
        let z = resolvent_solve(&id, &v(&[2.0, 0.0]), 1, 1e-12, 1e-12).unwrap();
        assert_relative_eq!(z[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(z[1], 0.0, epsilon = 1e-12);

        let zero = FnOperator::new(2, |_z: &DVector<f64>| DVector::zeros(2));
        for p in [1, 2] {
            let z = resolvent_solve(&zero, &v(&[0.3, -4.0]), p, 1e-12, 1e-12).unwrap();
            assert_eq!(z, v(&[0.3, -4.0]));
        }

        let id1 = LinearOperator::new(DMatrix::identity(1, 1)).unwrap();
        let z = resolvent_solve(&id1, &v(&[2.0]), 2, 1e-12, 1e-12).unwrap();
        assert_relative_eq!(z[0], 1.0, epsilon = 1e-10);
    }

    #[test]
    fn resolvent_residual_certificate() {
        let op = FnOperator::new(2, |z: &DVector<f64>| v(&[z[1] + z[0].powi(3), -z[0] + 0.1 * z[1]]));
        for p in [1, 2] {
            let target = v(&[1.3, -0.4]);
            let z = resolvent_solve(&op, &target, p, 1e-12, 1e-12).unwrap();
            let res = resolvent_residual(&op, &z, &target, p, 1e-12).unwrap().norm();
            assert!(res <= 1e-12 * target.norm().max(1.0));
        }
    }

    #[test]
    fn zero_field_is_stationary() {
        let zero = FnOperator::new(2, |_z: &DVector<f64>| DVector::zeros(2));
        let log = simulate(&zero, &ContinuousConfig::new(2, 1.0, 0.1, vec![0.5, 0.25])).unwrap();
        assert_eq!(log.samples.len(), 11);
        for s in &log.samples {
            assert_eq!(s.z, vec![0.5, 0.25]);
            assert_eq!(s.integral, 0.0);
        }
        let report = check_energy_bound(&log, &v(&[0.5, 0.25]), 0.0, 1.0).unwrap();
        assert!(report.passed());
    }

    #[test]
    fn log_invariants() {
        let op = LinearOperator::new(DMatrix::from_row_slice(2, 2, &[0.1, 1.0, -1.0, 0.1])).unwrap();
        let cfg = ContinuousConfig::new(1, 2.0, 0.01, vec![1.0, -1.0]);
        let log = simulate(&op, &cfg).unwrap();
        assert!(log.failure.is_none());
        assert_eq!(log.samples[0].energy, 0.0);
        for w in log.samples.windows(2) {
            assert!(w[1].t > w[0].t);
            assert!(w[1].integral >= w[0].integral);
        }
        for s in &log.samples {
            for i in 0..2 {
                assert_eq!(s.s[i], s.v[i] - cfg.z0[i]);
            }
        }
    }

    #[test]
    fn energy_check_preconditions() {
        let op = LinearOperator::new(DMatrix::identity(2, 2)).unwrap();
        let log = simulate(&op, &ContinuousConfig::new(1, 0.1, 0.05, vec![1.0, 0.0])).unwrap();
        assert!(check_energy_bound(&log, &v(&[0.0, 0.0]), 2.0, 1.0).is_err());
        assert!(check_energy_bound(&log, &v(&[0.0, 0.0]), 0.0, 0.5).is_err());
    }

    #[test]
    fn invalid_config() {
        let op = LinearOperator::new(DMatrix::identity(2, 2)).unwrap();
        assert!(simulate(&op, &ContinuousConfig::new(1, 1.0, 2.0, vec![1.0, 0.0])).is_err());
        assert!(simulate(&op, &ContinuousConfig::new(3, 1.0, 0.1, vec![1.0, 0.0])).is_err());
    }
}
