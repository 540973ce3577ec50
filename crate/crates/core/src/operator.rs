//! The vector-field abstraction shared by the discrete solver, the
//! continuous-time dynamics and the certification routines.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};

/// Default central-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// A vector field `F: R^d -> R^d`.
pub trait Operator: Sync {
    fn dim(&self) -> usize;

    fn eval(&self, z: &DVector<f64>) -> Result<DVector<f64>>;

    /// Jacobian `∇F(z)`. The default implementation uses central differences.
    fn jacobian(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        central_difference_jacobian(|p| self.eval(p), z, DEFAULT_FD_STEP)
    }
}

impl<T: Operator + ?Sized> Operator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn eval(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        (**self).eval(z)
    }

    fn jacobian(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        (**self).jacobian(z)
    }
}

/// Central finite differences, one column per coordinate.
pub fn central_difference_jacobian<F>(
    mut f: F,
    z: &DVector<f64>,
    step: f64,
) -> Result<DMatrix<f64>>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::argument(format!("finite-difference step must be positive, got {step}")));
    }
    let d = z.len();
    let mut jac: Option<DMatrix<f64>> = None;
    let mut probe = z.clone();
    for j in 0..d {
        let orig = probe[j];
        probe[j] = orig + step;
        let fp = f(&probe)?;
        probe[j] = orig - step;
        let fm = f(&probe)?;
        probe[j] = orig;
        let m = jac.get_or_insert_with(|| DMatrix::zeros(fp.len(), d));
        check_dim(m.nrows(), fm.len())?;
        let col = (fp - fm) / (2.0 * step);
        m.set_column(j, &col);
    }
    let jac = jac.unwrap_or_else(|| DMatrix::zeros(0, 0));
    if jac.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("finite-difference Jacobian has non-finite entries"));
    }
    Ok(jac)
}

/// Affine operator `F(z) = A z + b`.
#[derive(Debug, Clone)]
pub struct LinearOperator {
    pub matrix: DMatrix<f64>,
    pub offset: DVector<f64>,
}

impl LinearOperator {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::argument("linear operator matrix must be square"));
        }
        let offset = DVector::zeros(matrix.nrows());
        Ok(Self { matrix, offset })
    }

    pub fn with_offset(mut self, offset: DVector<f64>) -> Result<Self> {
        check_dim(self.matrix.nrows(), offset.len())?;
        self.offset = offset;
        Ok(self)
    }
}

impl Operator for LinearOperator {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn eval(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), z.len())?;
        Ok(&self.matrix * z + &self.offset)
    }

    fn jacobian(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        check_dim(self.dim(), z.len())?;
        Ok(self.matrix.clone())
    }
}

/// Operator backed by a closure; handy for one-off fields in tests and tools.
pub struct FnOperator<F> {
    dim: usize,
    f: F,
}

impl<F> FnOperator<F>
where
    F: Fn(&DVector<f64>) -> DVector<f64> + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> Operator for FnOperator<F>
where
    F: Fn(&DVector<f64>) -> DVector<f64> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim, z.len())?;
        let out = (self.f)(z);
        check_dim(self.dim, out.len())?;
        Ok(out)
    }
}
