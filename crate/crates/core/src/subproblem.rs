//! Half-step subproblem `Φ_p(z', z_k) = 0` and the step size `λ_k`.
//!
//! For `p = 1` the root is closed-form. For `p = 2` we parametrize the step
//! by its length: `d(r) = −(J + L₂ r I)⁻¹ F` solves `F + J d + L₂ r d = 0`,
//! so a root of `g(r) = ‖d(r)‖ − r` gives `Φ₂ = 0`. `g(0) ≥ 0`, and `g` is
//! continuous except at the isolated `r` where `J + L₂ r I` is singular,
//! where it blows up to `+∞` on both sides.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 200;

const MAX_DOUBLINGS: usize = 60;
const BISECTION_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct HalfStepResult {
    pub z_half: DVector<f64>,
    /// `r = ‖z_half − z_k‖`.
    pub displacement_norm: f64,
    /// `‖Φ(z_half, z_k)‖`.
    pub residual_norm: f64,
    pub iterations_used: usize,
}

impl HalfStepResult {
    fn from_step(z_k: &DVector<f64>, d: DVector<f64>, residual_norm: f64, iterations_used: usize) -> Self {
        let z_half = z_k + d;
        let displacement_norm = (&z_half - z_k).norm();
        Self {
            z_half,
            displacement_norm,
            residual_norm,
            iterations_used,
        }
    }
}

pub fn solve_half_step_p1(f_k: &DVector<f64>, l1: f64, z_k: &DVector<f64>) -> Result<HalfStepResult> {
    if !(l1 > 0.0 && l1.is_finite()) {
        return Err(Error::argument(format!("L1 must be positive, got {l1}")));
    }
    check_dim(z_k.len(), f_k.len())?;
    let d = f_k * (-1.0 / (2.0 * l1));
    let residual = (f_k + &d * (2.0 * l1)).norm();
    Ok(HalfStepResult::from_step(z_k, d, residual, 0))
}

struct Probe {
    r: f64,
    d: DVector<f64>,
    /// `‖d(r)‖ − r`; `+∞` at a pole.
    g: f64,
}

struct P2Problem<'a> {
    f: &'a DVector<f64>,
    j: &'a DMatrix<f64>,
    l: f64,
}

impl P2Problem<'_> {
    fn solve_at(&self, r: f64) -> Option<DVector<f64>> {
        let n = self.f.len();
        let m = self.j + DMatrix::identity(n, n) * (self.l * r);
        let d = m.lu().solve(&(-self.f))?;
        d.iter().all(|v| v.is_finite()).then_some(d)
    }

    fn probe(&self, r: f64) -> Probe {
        let solved = self
            .solve_at(r)
            .map(|d| (r, d))
            .or_else(|| {
                let rp = r + 1e-12 * (1.0 + r);
                self.solve_at(rp).map(|d| (rp, d))
            });
        match solved {
            Some((r, d)) => {
                let g = d.norm() - r;
                Probe { r, d, g }
            }
            None => Probe {
                r,
                d: DVector::zeros(self.f.len()),
                g: f64::INFINITY,
            },
        }
    }

    /// `‖F + J d + L‖d‖d‖`.
    fn residual(&self, d: &DVector<f64>) -> f64 {
        (self.f + self.j * d + d * (self.l * d.norm())).norm()
    }
}

pub fn solve_half_step_p2(
    f_k: &DVector<f64>,
    j_k: &DMatrix<f64>,
    l2: f64,
    z_k: &DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<HalfStepResult> {
    if !(l2 > 0.0 && l2.is_finite()) {
        return Err(Error::argument(format!("L2 must be positive, got {l2}")));
    }
    if !(tol > 0.0) {
        return Err(Error::argument(format!("tolerance must be positive, got {tol}")));
    }
    let n = z_k.len();
    check_dim(n, f_k.len())?;
    if j_k.shape() != (n, n) {
        return Err(Error::argument("Jacobian shape does not match the point"));
    }
    let f_norm = f_k.norm();
    if f_norm == 0.0 {
        return Ok(HalfStepResult::from_step(z_k, DVector::zeros(n), 0.0, 0));
    }

    let prob = P2Problem { f: f_k, j: j_k, l: l2 };
    let target = tol * f_norm.max(1.0);
    let mut iterations = 0usize;

    // Geometric bracket scan: g(0) ≥ 0, look for the first probe with g < 0.
    let mut lo = 0.0;
    let mut hi = prob.probe(f_norm / l2 + f64::MIN_POSITIVE);
    let mut found = hi.g < 0.0;
    while !found && iterations < MAX_DOUBLINGS {
        iterations += 1;
        lo = hi.r;
        hi = prob.probe(hi.r * 2.0);
        found = hi.g < 0.0;
    }

    let best = if found {
        bisect(&prob, lo, hi, target, max_iter, &mut iterations)
    } else {
        fixed_point(&prob, f_norm / l2, target, max_iter, &mut iterations)
    };

    let (best_r, best_res) = match best {
        Some(b) => b,
        None => {
            return Err(Error::Convergence {
                what: "order-2 half-step",
                iterations,
                best_residual: f64::INFINITY,
            })
        }
    };
    if best_res > target {
        return Err(Error::Convergence {
            what: "order-2 half-step",
            iterations,
            best_residual: best_res,
        });
    }
    let d = prob
        .solve_at(best_r)
        .ok_or_else(|| Error::Singular(format!("J + L₂ r I at r = {best_r:e}")))?;
    let residual = prob.residual(&d);
    Ok(HalfStepResult::from_step(z_k, d, residual, iterations))
}

/// Bisection on `[lo, hi]` with `g(lo) ≥ 0 > g(hi)`; returns the probed
/// `(r, residual)` with the smallest residual.
fn bisect(
    prob: &P2Problem<'_>,
    mut lo: f64,
    hi: Probe,
    target: f64,
    max_iter: usize,
    iterations: &mut usize,
) -> Option<(f64, f64)> {
    let mut best = (hi.r, prob.residual(&hi.d));
    let mut hi_r = hi.r;
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi_r);
        if mid <= lo || mid >= hi_r {
            break;
        }
        *iterations += 1;
        let p = prob.probe(mid);
        if p.g.is_finite() {
            let res = prob.residual(&p.d);
            if res < best.1 {
                best = (p.r, res);
            }
        }
        if p.g < 0.0 {
            hi_r = mid;
        } else {
            lo = mid;
        }
        if best.1 <= target && hi_r - lo <= BISECTION_RTOL * hi_r {
            break;
        }
    }
    Some(best)
}

/// Damped fixed-point fallback `r ← ½(r + ‖d(r)‖)`.
fn fixed_point(
    prob: &P2Problem<'_>,
    start: f64,
    target: f64,
    max_iter: usize,
    iterations: &mut usize,
) -> Option<(f64, f64)> {
    let mut r = start;
    let mut best: Option<(f64, f64)> = None;
    for _ in 0..max_iter {
        *iterations += 1;
        let p = prob.probe(r);
        if !p.g.is_finite() {
            r *= 1.5;
            continue;
        }
        let res = prob.residual(&p.d);
        if best.map_or(true, |(_, b)| res < b) {
            best = Some((p.r, res));
        }
        if res <= target {
            break;
        }
        r = 0.5 * (p.r + p.d.norm());
    }
    best
}

/// `λ_k = ½ r^{1−p}`. `None` means `r = 0` with `p ≥ 2`: the base point is
/// exactly stationary and the caller must stop.
pub fn lambda_step(p: u32, displacement_norm: f64) -> Option<f64> {
    if p <= 1 {
        return Some(0.5);
    }
    if displacement_norm == 0.0 {
        return None;
    }
    Some(0.5 * displacement_norm.powi(1 - p as i32))
}
