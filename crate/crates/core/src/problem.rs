//! Saddle problems `min_x max_y f(x, y)` and their gradient field
//! `F(z) = (∇_x f, −∇_y f)`, plus the built-in example problems.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::operator::central_difference_jacobian;

/// A point `z = (x, y)` with `x ∈ R^{d_x}`, `y ∈ R^{d_y}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    coords: DVector<f64>,
    dx: usize,
}

impl Point {
    pub fn new(coords: impl Into<Vec<f64>>, dx: usize) -> Result<Self> {
        let coords: Vec<f64> = coords.into();
        if dx == 0 || dx >= coords.len() {
            return Err(Error::argument(format!(
                "block split {dx} must leave both blocks nonempty (d = {})",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::numeric("point has non-finite coordinates"));
        }
        Ok(Self {
            coords: DVector::from_vec(coords),
            dx,
        })
    }

    pub fn from_vector(coords: DVector<f64>, dx: usize) -> Result<Self> {
        Self::new(coords.as_slice().to_vec(), dx)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn dx(&self) -> usize {
        self.dx
    }

    pub fn dy(&self) -> usize {
        self.coords.len() - self.dx
    }

    pub fn x(&self) -> &[f64] {
        &self.coords.as_slice()[..self.dx]
    }

    pub fn y(&self) -> &[f64] {
        &self.coords.as_slice()[self.dx..]
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.coords
    }
}

/// Which field the solver follows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorMode {
    #[default]
    Standard,
    Competitive { alpha: f64 },
}

impl OperatorMode {
    pub fn validate(&self) -> Result<()> {
        match *self {
            OperatorMode::Standard => Ok(()),
            OperatorMode::Competitive { alpha } if alpha.is_finite() && alpha >= 0.0 => Ok(()),
            OperatorMode::Competitive { alpha } => Err(Error::argument(format!(
                "competitive alpha must be finite and non-negative, got {alpha}"
            ))),
        }
    }

    /// True for `F` itself (including `F_α` with `α = 0`).
    pub fn is_standard(&self) -> bool {
        match *self {
            OperatorMode::Standard => true,
            OperatorMode::Competitive { alpha } => alpha == 0.0,
        }
    }
}

pub type ScalarFn = Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type MatrixFn = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// A saddle function with hand-coded derivatives. Immutable once built.
#[derive(Clone)]
pub struct ProblemSpec {
    name: String,
    dx: usize,
    dy: usize,
    value: ScalarFn,
    grad_x: VectorFn,
    grad_y: VectorFn,
    mixed_hessian: Option<MatrixFn>,
    operator_jacobian: Option<MatrixFn>,
    z_star: Option<Point>,
    sample_box: Vec<(f64, f64)>,
    published_constants: BTreeMap<u32, f64>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("dx", &self.dx)
            .field("dy", &self.dy)
            .field("has_mixed_hessian", &self.mixed_hessian.is_some())
            .field("has_jacobian", &self.operator_jacobian.is_some())
            .field("z_star", &self.z_star)
            .field("sample_box", &self.sample_box)
            .field("published_constants", &self.published_constants)
            .finish()
    }
}

impl ProblemSpec {
    /// Starts a problem with a default sample box `[-1, 1]^d`.
    pub fn new(
        name: impl Into<String>,
        dx: usize,
        dy: usize,
        value: ScalarFn,
        grad_x: VectorFn,
        grad_y: VectorFn,
    ) -> Result<Self> {
        if dx == 0 || dy == 0 {
            return Err(Error::argument("both players need at least one coordinate"));
        }
        Ok(Self {
            name: name.into(),
            dx,
            dy,
            value,
            grad_x,
            grad_y,
            mixed_hessian: None,
            operator_jacobian: None,
            z_star: None,
            sample_box: vec![(-1.0, 1.0); dx + dy],
            published_constants: BTreeMap::new(),
        })
    }

    pub fn with_mixed_hessian(mut self, b: MatrixFn) -> Self {
        self.mixed_hessian = Some(b);
        self
    }

    pub fn with_jacobian(mut self, j: MatrixFn) -> Self {
        self.operator_jacobian = Some(j);
        self
    }

    pub fn with_sample_box(mut self, bounds: Vec<(f64, f64)>) -> Result<Self> {
        check_dim(self.dim(), bounds.len())?;
        if bounds.iter().any(|&(lo, hi)| !(hi > lo) || !lo.is_finite() || !hi.is_finite()) {
            return Err(Error::argument("sample box needs positive finite width in every coordinate"));
        }
        self.sample_box = bounds;
        Ok(self)
    }

    pub fn with_published_constant(mut self, p: u32, lp: f64) -> Self {
        self.published_constants.insert(p, lp);
        self
    }

    /// Sets the known stationary point; rejects it unless `‖F(z*)‖ ≤ 1e-6`.
    pub fn with_z_star(mut self, z: Point) -> Result<Self> {
        let norm = eval_operator(&self, &z)?.norm();
        if norm > 1e-6 {
            return Err(Error::argument(format!(
                "z_star is not stationary for `{}`: ‖F(z*)‖ = {norm:e}",
                self.name
            )));
        }
        self.z_star = Some(z);
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dx(&self) -> usize {
        self.dx
    }

    pub fn dy(&self) -> usize {
        self.dy
    }

    pub fn dim(&self) -> usize {
        self.dx + self.dy
    }

    pub fn value(&self, z: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), z.len())?;
        Ok((self.value)(z))
    }

    pub fn z_star(&self) -> Option<&Point> {
        self.z_star.as_ref()
    }

    pub fn sample_box(&self) -> &[(f64, f64)] {
        &self.sample_box
    }

    pub fn published_constant(&self, p: u32) -> Option<f64> {
        self.published_constants.get(&p).copied()
    }

    pub fn published_constants(&self) -> &BTreeMap<u32, f64> {
        &self.published_constants
    }

    pub fn has_mixed_hessian(&self) -> bool {
        self.mixed_hessian.is_some()
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.operator_jacobian.is_some()
    }

    /// `∇_{xy} f(z)`, a `d_x × d_y` matrix.
    pub fn mixed_hessian(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        check_dim(self.dim(), z.len())?;
        let b = self.mixed_hessian.as_ref().ok_or_else(|| {
            Error::Capability(format!("problem `{}` has no mixed Hessian", self.name))
        })?;
        let m = b(z);
        if m.nrows() != self.dx || m.ncols() != self.dy {
            return Err(Error::argument("mixed Hessian has the wrong shape"));
        }
        Ok(m)
    }

    /// `F(z) = (∇_x f, −∇_y f)` on a raw coordinate vector.
    pub fn field(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), z.len())?;
        let gx = (self.grad_x)(z);
        let gy = (self.grad_y)(z);
        check_dim(self.dx, gx.len())?;
        check_dim(self.dy, gy.len())?;
        let mut out = DVector::zeros(self.dim());
        out.rows_mut(0, self.dx).copy_from(&gx);
        out.rows_mut(self.dx, self.dy).copy_from(&(-gy));
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric(format!("gradient of `{}` is not finite", self.name)));
        }
        Ok(out)
    }

    /// `∇F(z)`: analytic when provided, else central differences with `fd_step`.
    pub fn field_jacobian(&self, z: &DVector<f64>, fd_step: f64) -> Result<DMatrix<f64>> {
        check_dim(self.dim(), z.len())?;
        let jac = match &self.operator_jacobian {
            Some(j) => j(z),
            None => central_difference_jacobian(|p| self.field(p), z, fd_step)?,
        };
        if jac.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("operator Jacobian has non-finite entries"));
        }
        Ok(jac)
    }
}

pub fn eval_operator(problem: &ProblemSpec, z: &Point) -> Result<DVector<f64>> {
    check_dim(problem.dim(), z.dim())?;
    if z.dx() != problem.dx() {
        return Err(Error::argument("point block split does not match the problem"));
    }
    problem.field(z.as_vector())
}

pub fn eval_jacobian(problem: &ProblemSpec, z: &Point, fd_step: f64) -> Result<DMatrix<f64>> {
    check_dim(problem.dim(), z.dim())?;
    problem.field_jacobian(z.as_vector(), fd_step)
}

pub const BUILTIN_NAMES: [&str; 6] = [
    "forsaken",
    "modified_forsaken",
    "x2y",
    "bilinear",
    "quadratic_monotone",
    "comonotone_toy",
];

/// Published stationary points, rounded as printed.
pub const FORSAKEN_PUBLISHED_Z_STAR: [f64; 2] = [0.0780, 0.4119];
pub const MODIFIED_FORSAKEN_PUBLISHED_Z_STAR: [f64; 2] = [1.31147, 1.47596];

// Newton-polished from the published values so that ‖F(z*)‖ is at roundoff level.
const FORSAKEN_Z_STAR: [f64; 2] = [0.078_026_668_738_460_07, 0.411_933_851_365_819_85];
const MODIFIED_FORSAKEN_Z_STAR: [f64; 2] = [1.311_474_805_784_368_2, 1.475_932_757_992_641_8];

/// Coefficient γ of the `comonotone_toy` operator `F(z) = γz + Jz`.
pub const COMONOTONE_TOY_GAMMA: f64 = -0.2;

pub fn builtin(name: &str) -> Result<ProblemSpec> {
    match name {
        "forsaken" => forsaken_family("forsaken", 0.45, FORSAKEN_Z_STAR, 1.5),
        "modified_forsaken" => {
            let p = forsaken_family("modified_forsaken", 1.5, MODIFIED_FORSAKEN_Z_STAR, 2.0)?;
            Ok(p.with_published_constant(1, 20.0).with_published_constant(2, 50_000.0))
        }
        "x2y" => x2y(),
        "bilinear" => quadratic_family("bilinear", 0.0, 1.0, 0.0),
        "quadratic_monotone" => quadratic_family("quadratic_monotone", 1.0, 0.0, -1.0),
        "comonotone_toy" => {
            let g = COMONOTONE_TOY_GAMMA;
            quadratic_family("comonotone_toy", g, 1.0, -g)
        }
        other => Err(Error::UnknownProblem(other.to_string())),
    }
}

fn scalar_pair(z: &DVector<f64>) -> (f64, f64) {
    (z[0], z[1])
}

fn h(t: f64) -> f64 {
    t * t / 4.0 - t.powi(4) / 2.0 + t.powi(6) / 6.0
}

fn h_prime(t: f64) -> f64 {
    t / 2.0 - 2.0 * t.powi(3) + t.powi(5)
}

fn h_second(t: f64) -> f64 {
    0.5 - 6.0 * t * t + 5.0 * t.powi(4)
}

/// `f(x, y) = x (y − c) + h(x) − h(y)`.
fn forsaken_family(name: &str, c: f64, z_star: [f64; 2], half_width: f64) -> Result<ProblemSpec> {
    ProblemSpec::new(
        name,
        1,
        1,
        Arc::new(move |z| {
            let (x, y) = scalar_pair(z);
            x * (y - c) + h(x) - h(y)
        }),
        Arc::new(move |z| {
            let (x, y) = scalar_pair(z);
            DVector::from_element(1, y - c + h_prime(x))
        }),
        Arc::new(|z| {
            let (x, y) = scalar_pair(z);
            DVector::from_element(1, x - h_prime(y))
        }),
    )?
    .with_mixed_hessian(Arc::new(|_| DMatrix::from_element(1, 1, 1.0)))
    .with_jacobian(Arc::new(|z| {
        let (x, y) = scalar_pair(z);
        DMatrix::from_row_slice(2, 2, &[h_second(x), 1.0, -1.0, h_second(y)])
    }))
    .with_sample_box(vec![(-half_width, half_width); 2])?
    .with_z_star(Point::new(z_star.to_vec(), 1)?)
}

fn x2y() -> Result<ProblemSpec> {
    ProblemSpec::new(
        "x2y",
        1,
        1,
        Arc::new(|z| z[0] * z[0] * z[1]),
        Arc::new(|z| DVector::from_element(1, 2.0 * z[0] * z[1])),
        Arc::new(|z| DVector::from_element(1, z[0] * z[0])),
    )?
    .with_mixed_hessian(Arc::new(|z| DMatrix::from_element(1, 1, 2.0 * z[0])))
    .with_jacobian(Arc::new(|z| {
        let (x, y) = scalar_pair(z);
        DMatrix::from_row_slice(2, 2, &[2.0 * y, 2.0 * x, -2.0 * x, 0.0])
    }))
    .with_sample_box(vec![(-1.0, 1.0); 2])?
    .with_z_star(Point::new(vec![0.0, 0.0], 1)?)
    .map(|p| p.with_published_constant(1, 20.0).with_published_constant(2, 500.0))
}

/// `f(x, y) = a x²/2 + b x y + c y²/2`, so `F(z) = (a x + b y, −b x − c y)`.
fn quadratic_family(name: &str, a: f64, b: f64, c: f64) -> Result<ProblemSpec> {
    ProblemSpec::new(
        name,
        1,
        1,
        Arc::new(move |z| {
            let (x, y) = scalar_pair(z);
            0.5 * a * x * x + b * x * y + 0.5 * c * y * y
        }),
        Arc::new(move |z| {
            let (x, y) = scalar_pair(z);
            DVector::from_element(1, a * x + b * y)
        }),
        Arc::new(move |z| {
            let (x, y) = scalar_pair(z);
            DVector::from_element(1, b * x + c * y)
        }),
    )?
    .with_mixed_hessian(Arc::new(move |_| DMatrix::from_element(1, 1, b)))
    .with_jacobian(Arc::new(move |_| DMatrix::from_row_slice(2, 2, &[a, b, -b, -c])))
    .with_sample_box(vec![(-2.0, 2.0); 2])?
    .with_z_star(Point::new(vec![0.0, 0.0], 1)?)
}
