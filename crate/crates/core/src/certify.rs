//! Sampled estimates of the structural constants (weak-MVI ρ, smoothness
//! `L_p`, comonotonicity) and checks of the per-iterate inequalities along a
//! trajectory. Every estimate is a sampled lower bound on the true supremum.
//!
//! Parallel reductions combine `(index, value)` pairs with an associative,
//! commutative arg-max, so results do not depend on the thread count.

use std::collections::BTreeMap;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::field::Field;
use crate::operator::Operator;
use crate::problem::Point;
use crate::sampling::{better, BoxSampler};
use crate::solver::TrajectoryLog;
use crate::taylor::{check_order, factorial, TaylorModel};

/// Samples with `‖F(z)‖` below this are skipped by the ρ estimators.
pub const SKIP_NORM: f64 = 1e-10;
/// Pair separations are `half_width · 2^{−t}` for `t < PAIR_TIERS`.
pub const PAIR_TIERS: u32 = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhoEstimate {
    pub rho_hat: f64,
    pub worst_violator: Vec<f64>,
    pub samples_used: usize,
    pub samples_skipped: usize,
}

/// `ρ̂ = max −2⟨F(z), z − z*⟩ / ‖F(z)‖^q` over the seeded sample stream.
pub fn estimate_q_rho<O: Operator + ?Sized>(
    op: &O,
    bounds: &[(f64, f64)],
    z_star: &DVector<f64>,
    q: f64,
    n_samples: usize,
    seed: u64,
) -> Result<RhoEstimate> {
    check_dim(op.dim(), z_star.len())?;
    check_dim(op.dim(), bounds.len())?;
    if n_samples == 0 {
        return Err(Error::argument("n_samples must be at least 1"));
    }
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::argument(format!("exponent q must be positive, got {q}")));
    }
    let sampler = BoxSampler::new(bounds, seed)?.with_anchor(z_star.clone())?;

    type Acc = (Option<(usize, f64)>, usize);
    let merge = |a: Acc, b: Acc| -> Acc {
        let best = match (a.0, b.0) {
            (Some(x), Some(y)) => Some(better(x, y)),
            (x, None) => x,
            (None, y) => y,
        };
        (best, a.1 + b.1)
    };
    let (best, used) = (0..n_samples)
        .into_par_iter()
        .map(|i| -> Result<Acc> {
            let z = sampler.sample(i);
            let f = op.eval(&z)?;
            let n = f.norm();
            if !(n >= SKIP_NORM) {
                return Ok((None, 0));
            }
            let ratio = -2.0 * f.dot(&(&z - z_star)) / n.powf(q);
            if !ratio.is_finite() {
                return Ok((None, 0));
            }
            Ok((Some((i, ratio)), 1))
        })
        .try_reduce(|| (None, 0), |a, b| Ok(merge(a, b)))?;

    let (index, rho_hat) =
        best.ok_or_else(|| Error::Degenerate(format!("all {n_samples} samples had ‖F‖ < {SKIP_NORM:e}")))?;
    Ok(RhoEstimate {
        rho_hat,
        worst_violator: sampler.sample(index).as_slice().to_vec(),
        samples_used: used,
        samples_skipped: n_samples - used,
    })
}

/// Weak-MVI estimate at order `p`, i.e. exponent `(p+1)/p`.
pub fn estimate_weak_mvi_rho<O: Operator + ?Sized>(
    op: &O,
    bounds: &[(f64, f64)],
    z_star: &DVector<f64>,
    p: u32,
    n_samples: usize,
    seed: u64,
) -> Result<RhoEstimate> {
    if p == 0 {
        return Err(Error::argument("order p must be at least 1"));
    }
    estimate_q_rho(op, bounds, z_star, weak_mvi_exponent(p), n_samples, seed)
}

pub fn weak_mvi_exponent(p: u32) -> f64 {
    (p as f64 + 1.0) / p as f64
}

/// `(15/16)·(p!/L_p)^{(p+1)/p}`.
pub fn rho_threshold(p: u32, lp: f64) -> Result<f64> {
    if p == 0 {
        return Err(Error::argument("order p must be at least 1"));
    }
    if !(lp > 0.0 && lp.is_finite()) {
        return Err(Error::argument(format!("L_p must be positive, got {lp}")));
    }
    Ok(15.0 / 16.0 * (factorial(p) / lp).powf(weak_mvi_exponent(p)))
}

pub fn check_rho_threshold(rho: f64, p: u32, lp: f64) -> Result<bool> {
    Ok(rho <= rho_threshold(p, lp)?)
}

/// `(15/16)·D^{(p+1)/p − q}·(p!/L_p)^{(p+1)/p}` for the imbalanced-order variant.
///
/// The published expression is ambiguous in its parenthesization; this is
/// the reading consistent with the proof's step-size constant.
pub fn imbalanced_threshold(p: u32, lp: f64, q: f64, d: f64) -> Result<f64> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::argument(format!("D must be positive, got {d}")));
    }
    Ok(rho_threshold(p, lp)? * d.powf(weak_mvi_exponent(p) - q))
}

/// `D = max_k L₁‖z_k − z*‖` along a trajectory.
pub fn trajectory_radius(log: &TrajectoryLog, z_star: &DVector<f64>, l1: f64) -> Result<f64> {
    let mut d: f64 = 0.0;
    for r in &log.records {
        check_dim(z_star.len(), r.z_k.len())?;
        d = d.max(l1 * (&r.z_k - z_star).norm());
    }
    Ok(d)
}

fn pair_sampler(bounds: &[(f64, f64)], seed: u64) -> Result<(BoxSampler, BoxSampler)> {
    let unit = vec![(-1.0, 1.0); bounds.len()];
    Ok((BoxSampler::new(bounds, seed)?, BoxSampler::new(&unit, seed ^ 0x9E37_79B9_7F4A_7C15)?))
}

fn pair(bases: &BoxSampler, dirs: &BoxSampler, bounds: &[(f64, f64)], i: usize) -> (DVector<f64>, DVector<f64>) {
    let za = bases.sample(i);
    let u = dirs.sample(i);
    let tier = (i as u32) % PAIR_TIERS;
    let zb = DVector::from_iterator(
        za.len(),
        bounds.iter().enumerate().map(|(j, &(lo, hi))| {
            let scale = 0.5 * (hi - lo) * 0.5f64.powi(tier as i32);
            (za[j] + scale * u[j]).clamp(lo, hi)
        }),
    );
    (za, zb)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothnessEstimate {
    pub l_hat: f64,
    pub pairs_used: usize,
}

/// `L̂_p = p!·max ‖F(z_b) − τ_{p−1}(z_b; z_a)‖ / ‖z_b − z_a‖^p` over seeded pairs.
pub fn estimate_smoothness<O: Operator + ?Sized>(
    op: &O,
    bounds: &[(f64, f64)],
    p: u32,
    n_pairs: usize,
    seed: u64,
) -> Result<SmoothnessEstimate> {
    check_order(p)?;
    check_dim(op.dim(), bounds.len())?;
    if n_pairs == 0 {
        return Err(Error::argument("n_pairs must be at least 1"));
    }
    let (bases, dirs) = pair_sampler(bounds, seed)?;
    let (best, used) = (0..n_pairs)
        .into_par_iter()
        .map(|i| -> Result<(f64, usize)> {
            let (za, zb) = pair(&bases, &dirs, bounds, i);
            let dist = (&zb - &za).norm();
            if dist == 0.0 {
                return Ok((0.0, 0));
            }
            let model = TaylorModel::at(op, za, p, 0.0)?;
            let err = (op.eval(&zb)? - model.tau(&zb)?).norm();
            Ok((factorial(p) * err / dist.powi(p as i32), 1))
        })
        .try_reduce(|| (0.0, 0), |a, b| Ok((a.0.max(b.0), a.1 + b.1)))?;
    if used == 0 {
        return Err(Error::Degenerate("every sampled pair was coincident".into()));
    }
    Ok(SmoothnessEstimate {
        l_hat: best,
        pairs_used: used,
    })
}

/// `min ⟨ΔF, Δz⟩ / ‖ΔF‖²` over seeded pairs; `None` when every pair has `ΔF ≈ 0`.
pub fn estimate_comonotonicity<O: Operator + ?Sized>(
    op: &O,
    bounds: &[(f64, f64)],
    n_pairs: usize,
    seed: u64,
) -> Result<Option<f64>> {
    check_dim(op.dim(), bounds.len())?;
    let (bases, dirs) = pair_sampler(bounds, seed)?;
    let best = (0..n_pairs)
        .into_par_iter()
        .map(|i| -> Result<Option<f64>> {
            let (za, zb) = pair(&bases, &dirs, bounds, i);
            let df = op.eval(&za)? - op.eval(&zb)?;
            let n2 = df.norm_squared();
            if n2 < 1e-24 {
                return Ok(None);
            }
            Ok(Some(df.dot(&(&za - &zb)) / n2))
        })
        .try_reduce(
            || None,
            |a, b| {
                Ok(match (a, b) {
                    (Some(x), Some(y)) => Some(x.min(y)),
                    (x, None) => x,
                    (None, y) => y,
                })
            },
        )?;
    Ok(best)
}

/// Least-squares slope of `log min_{k≤K} ‖F(z_{k+½})‖²` against `log(K+1)`
/// over the second half of the run (or of the prefix before an exact zero).
pub fn fit_rate(log: &TrajectoryLog) -> Result<f64> {
    if log.records.len() < 20 {
        return Err(Error::argument(format!(
            "rate fit needs at least 20 records, got {}",
            log.records.len()
        )));
    }
    let m = log.running_min_sq();
    let n = m.iter().position(|&v| v <= 0.0).unwrap_or(m.len());
    let start = n / 2;
    if n - start < 2 {
        return Err(Error::Degenerate("too few nonzero records for a rate fit".into()));
    }
    let pts: Vec<(f64, f64)> = (start..n).map(|k| (((k + 1) as f64).ln(), m[k].ln())).collect();
    let len = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / len;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / len;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub passed: bool,
    pub checked: usize,
    /// First `k` at which the inequality failed, with `lhs − rhs`.
    pub first_violation: Option<(usize, f64)>,
    /// Largest `lhs − rhs` seen (negative means slack everywhere).
    pub worst_margin: f64,
}

impl InequalityReport {
    fn new() -> Self {
        Self {
            passed: true,
            checked: 0,
            first_violation: None,
            worst_margin: f64::NEG_INFINITY,
        }
    }

    fn record(&mut self, k: usize, margin: f64, slack: f64) {
        self.checked += 1;
        self.worst_margin = self.worst_margin.max(margin);
        if margin > slack && self.first_violation.is_none() {
            self.passed = false;
            self.first_violation = Some((k, margin));
        }
    }
}

/// Coefficient of `Σ r_k²` in the published potential inequality.
pub const POTENTIAL_COEFF_PUBLISHED: f64 = 15.0 / 16.0;
/// Coefficient that follows for the implemented full step
/// `z_{k+1} = z_k − (p!λ_k/2L_p)F(z_{k+½})` with `ω(a, b) = ‖a − b‖²`:
/// the half-step is then a prox step of half weight, leaving `½r² − ⅛r²`.
pub const POTENTIAL_COEFF_STEP_CONSISTENT: f64 = 3.0 / 8.0;

/// For every prefix `K`:
/// `Σ λ_k (p!/L_p)⟨F(z_{k+½}), z_{k+½} − z*⟩ ≤ ‖z* − z0‖² − (15/16) Σ r_k²`.
pub fn check_potential_inequality(
    log: &TrajectoryLog,
    z_star: &DVector<f64>,
    p: u32,
    lp: f64,
) -> Result<InequalityReport> {
    check_potential_inequality_with(log, z_star, p, lp, POTENTIAL_COEFF_PUBLISHED)
}

/// As [`check_potential_inequality`] with `coeff` in place of `15/16`.
pub fn check_potential_inequality_with(
    log: &TrajectoryLog,
    z_star: &DVector<f64>,
    p: u32,
    lp: f64,
    coeff: f64,
) -> Result<InequalityReport> {
    check_order(p)?;
    let mut report = InequalityReport::new();
    let Some(first) = log.records.first() else {
        return Ok(report);
    };
    check_dim(first.z_k.len(), z_star.len())?;
    let d0 = (z_star - &first.z_k).norm_squared();
    let slack = 1e-8 * (1.0 + d0);
    let scale = factorial(p) / lp;
    let (mut lhs, mut r_sq) = (0.0, 0.0);
    for r in &log.records {
        lhs += r.lambda_k * scale * r.f_half.dot(&(&r.z_half - z_star));
        r_sq += r.displacement_norm * r.displacement_norm;
        report.record(r.k, lhs - (d0 - coeff * r_sq), slack);
    }
    Ok(report)
}

/// `‖F(z_{k+½})‖ ≤ (3L_p/p!)·r_k^p` at every record.
///
/// The bound presumes an exact half-step; the recorded subproblem residual
/// is added to the allowance.
pub fn check_upper_bound(log: &TrajectoryLog, p: u32, lp: f64) -> Result<InequalityReport> {
    check_order(p)?;
    let mut report = InequalityReport::new();
    let c = 3.0 * lp / factorial(p);
    for r in &log.records {
        let bound = c * r.displacement_norm.powi(p as i32);
        let margin = r.op_norm_half - bound - r.subproblem_residual;
        report.record(r.k, margin, 1e-8 * bound.max(1e-300));
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyConfig {
    pub p: u32,
    /// Exponent for the order-`q` estimate; defaults to 2.
    pub q: Option<f64>,
    /// `L_p` for the threshold; defaults to the published constant, then to `L̂_p`.
    pub lipschitz: Option<f64>,
    pub n_samples: usize,
    pub seed: u64,
}

impl CertifyConfig {
    pub fn new(p: u32, n_samples: usize, seed: u64) -> Self {
        Self {
            p,
            q: None,
            lipschitz: None,
            n_samples,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImbalancedCheck {
    pub d: f64,
    pub threshold: f64,
    pub passed: bool,
    pub note: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertReport {
    pub problem: String,
    pub p: u32,
    pub q: f64,
    pub rho_hat_p: f64,
    pub rho_hat_q: f64,
    pub comono_hat: Option<f64>,
    pub l_hat: BTreeMap<u32, f64>,
    pub lipschitz_used: f64,
    pub threshold: f64,
    pub threshold_ok: bool,
    pub samples_used: usize,
    pub skip_norm: f64,
    pub worst_violator: Vec<f64>,
    pub rate_slope: Option<f64>,
    pub imbalanced: Option<ImbalancedCheck>,
}

/// Full certification of `field` around its stationary point.
///
/// With a trajectory, also reports the fitted rate and the imbalanced-order
/// threshold built from `D = max_k L̂₁‖z_k − z*‖`.
pub fn certify(field: &Field<'_>, config: &CertifyConfig, log: Option<&TrajectoryLog>) -> Result<CertReport> {
    check_order(config.p)?;
    let problem = field.problem();
    let z_star: &Point = problem
        .z_star()
        .ok_or_else(|| Error::argument(format!("problem `{}` has no known stationary point", problem.name())))?;
    let z_star = z_star.as_vector();
    let bounds = problem.sample_box();
    let q = config.q.unwrap_or(2.0);

    let rho_p = estimate_weak_mvi_rho(field, bounds, z_star, config.p, config.n_samples, config.seed)?;
    let rho_q = estimate_q_rho(field, bounds, z_star, q, config.n_samples, config.seed)?;
    let comono_hat = estimate_comonotonicity(field, bounds, config.n_samples, config.seed)?;
    let mut l_hat = BTreeMap::new();
    for p in 1..=2 {
        l_hat.insert(p, estimate_smoothness(field, bounds, p, config.n_samples, config.seed)?.l_hat);
    }
    let lipschitz_used = match (config.lipschitz, field.mode().is_standard()) {
        (Some(l), _) => l,
        (None, true) => problem.published_constant(config.p).unwrap_or(l_hat[&config.p]),
        (None, false) => l_hat[&config.p],
    };
    let threshold = rho_threshold(config.p, lipschitz_used)?;

    let (rate_slope, imbalanced) = match log {
        Some(log) if log.records.len() >= 20 => {
            let d = trajectory_radius(log, z_star, l_hat[&1])?;
            let imbalanced = if d > 0.0 {
                let t = imbalanced_threshold(config.p, lipschitz_used, q, d)?;
                Some(ImbalancedCheck {
                    d,
                    threshold: t,
                    passed: rho_q.rho_hat <= t,
                    note: "threshold read as (15/16)·D^((p+1)/p − q)·(p!/L_p)^((p+1)/p)",
                })
            } else {
                None
            };
            (fit_rate(log).ok(), imbalanced)
        }
        _ => (None, None),
    };

    Ok(CertReport {
        problem: problem.name().to_string(),
        p: config.p,
        q,
        rho_hat_p: rho_p.rho_hat,
        rho_hat_q: rho_q.rho_hat,
        comono_hat,
        l_hat,
        lipschitz_used,
        threshold,
        threshold_ok: rho_p.rho_hat <= threshold,
        samples_used: rho_p.samples_used,
        skip_norm: SKIP_NORM,
        worst_violator: rho_p.worst_violator,
        rate_slope,
        imbalanced,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::LinearOperator;
    use crate::problem::builtin;
    use crate::solver::{run, IterateRecord, SolverConfig, Termination};
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn synthetic_log(norms: impl Fn(usize) -> f64, n: usize) -> TrajectoryLog {
        let records = (0..n)
            .map(|k| IterateRecord {
                k,
                z_k: DVector::zeros(1),
                z_half: DVector::zeros(1),
                lambda_k: 0.5,
                displacement_norm: 1.0,
                f_half: DVector::from_element(1, norms(k)),
                op_norm_half: norms(k),
                subproblem_residual: 0.0,
                subproblem_iters: 0,
            })
            .collect();
        TrajectoryLog {
            order_p: 1,
            lipschitz: 1.0,
            records,
            z_out: DVector::zeros(1),
            out_index: n - 1,
            termination: Termination::BudgetExhausted,
            failure: None,
        }
    }

    #[test]
    fn threshold_examples() {
        assert!(check_rho_threshold(0.9, 1, 1.0).unwrap());
        assert!((rho_threshold(1, 1.0).unwrap() - 0.9375).abs() < 1e-15);
        assert!(!check_rho_threshold(1.0, 2, 2.0).unwrap());
        assert!((rho_threshold(2, 2.0).unwrap() - 0.9375).abs() < 1e-15);
        assert!(check_rho_threshold(0.0, 1, 1e6).unwrap());
        assert!(check_rho_threshold(1.0, 1, 0.0).is_err());
    }

    #[test]
    fn imbalanced_threshold_reduces_to_balanced() {
        let b = rho_threshold(2, 7.0).unwrap();
        let i = imbalanced_threshold(2, 7.0, 1.5, 3.7).unwrap();
        assert!((b - i).abs() <= 1e-15 * b);
    }

    #[test]
    fn fit_rate_power_laws() {
        let log = synthetic_log(|k| 1.0 / ((k + 1) as f64).sqrt(), 200);
        assert!((fit_rate(&log).unwrap() + 1.0).abs() < 1e-6);
        let log = synthetic_log(|k| 1.0 / (k + 1) as f64, 200);
        assert!((fit_rate(&log).unwrap() + 2.0).abs() < 1e-6);
    }

    #[test]
    fn fit_rate_stops_at_exact_zero() {
        let log = synthetic_log(|k| if k < 100 { 1.0 / (k + 1) as f64 } else { 0.0 }, 150);
        assert!((fit_rate(&log).unwrap() + 2.0).abs() < 1e-6);
        assert!(fit_rate(&synthetic_log(|_| 1.0, 19)).is_err());
    }

    #[test]
    fn monotone_rho_is_nonpositive() {
        let op = LinearOperator::new(DMatrix::identity(2, 2)).unwrap();
        let bounds = [(-2.0, 2.0), (-2.0, 2.0)];
        for p in [1, 2] {
            let est = estimate_weak_mvi_rho(&op, &bounds, &DVector::zeros(2), p, 2000, 7).unwrap();
            assert!(est.rho_hat <= 0.0);
        }
    }

    #[test]
    fn all_skipped_is_degenerate() {
        let op = LinearOperator::new(DMatrix::zeros(2, 2)).unwrap();
        let err = estimate_q_rho(&op, &[(-1.0, 1.0), (-1.0, 1.0)], &DVector::zeros(2), 2.0, 50, 0).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
    }

    #[test]
    fn smoothness_linear_examples() {
        let qm = builtin("quadratic_monotone").unwrap();
        let f = Field::standard(&qm);
        let l1 = estimate_smoothness(&f, qm.sample_box(), 1, 500, 3).unwrap();
        assert!((l1.l_hat - 1.0).abs() < 1e-9);
        let bl = builtin("bilinear").unwrap();
        let f = Field::standard(&bl);
        let l2 = estimate_smoothness(&f, bl.sample_box(), 2, 500, 3).unwrap();
        assert!(l2.l_hat <= 1e-9);
    }

    #[test]
    fn comonotonicity_of_toy() {
        let toy = builtin("comonotone_toy").unwrap();
        let f = Field::standard(&toy);
        let c = estimate_comonotonicity(&f, toy.sample_box(), 500, 1).unwrap().unwrap();
        // F = A z with A = [[γ, 1], [−1, γ]]: ⟨Az, z⟩/‖Az‖² = γ/(1 + γ²) for every z.
        let g = crate::problem::COMONOTONE_TOY_GAMMA;
        assert!((c - g / (1.0 + g * g)).abs() < 1e-12);
    }

    #[test]
    fn potential_inequality_on_quadratic() {
        let qm = builtin("quadratic_monotone").unwrap();
        let log = run(&qm, &SolverConfig::new(1, 1.0, 100, vec![1.0, 0.0])).unwrap();
        let z = DVector::zeros(2);
        let rep = check_potential_inequality_with(&log, &z, 1, 1.0, POTENTIAL_COEFF_STEP_CONSISTENT).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert_eq!(rep.checked, 101);
        // z_k = (7/8)^k z0: Σλ⟨F_h, z_h⟩ → 8/15 while 1 − (15/16)Σr² → 0.
        let rep = check_potential_inequality(&log, &z, 1, 1.0).unwrap();
        assert_eq!(rep.first_violation.map(|v| v.0), Some(3));
        assert!((rep.worst_margin - 8.0 / 15.0).abs() < 1e-9);
        assert!(check_upper_bound(&log, 1, 1.0).unwrap().passed);
    }

    #[test]
    fn potential_inequality_empty_log() {
        let mut log = synthetic_log(|_| 1.0, 1);
        log.records.clear();
        assert!(check_potential_inequality(&log, &DVector::zeros(1), 1, 1.0).unwrap().passed);
    }

    proptest! {
        #[test]
        fn rho_monotone_in_sample_count(seed in 0u64..1000, n in 1usize..400) {
            let fs = builtin("modified_forsaken").unwrap();
            let f = Field::standard(&fs);
            let z = fs.z_star().unwrap().as_vector().clone();
            let a = estimate_q_rho(&f, fs.sample_box(), &z, 2.0, n, seed).unwrap();
            let b = estimate_q_rho(&f, fs.sample_box(), &z, 2.0, 2 * n, seed).unwrap();
            prop_assert!(b.rho_hat >= a.rho_hat);
        }

        #[test]
        fn zero_rho_always_passes(p in 1u32..=2, lp in 1e-6f64..1e6) {
            prop_assert!(check_rho_threshold(0.0, p, lp).unwrap());
        }

        #[test]
        fn weak_mvi_equals_q_rho(seed in 0u64..1000, p in 1u32..=2) {
            let fs = builtin("forsaken").unwrap();
            let f = Field::standard(&fs);
            let z = fs.z_star().unwrap().as_vector().clone();
            let a = estimate_weak_mvi_rho(&f, fs.sample_box(), &z, p, 300, seed).unwrap();
            let b = estimate_q_rho(&f, fs.sample_box(), &z, (p as f64 + 1.0) / p as f64, 300, seed).unwrap();
            prop_assert_eq!(a.rho_hat.to_bits(), b.rho_hat.to_bits());
            prop_assert_eq!(a.worst_violator, b.worst_violator);
        }
    }
}
