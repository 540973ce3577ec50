use nalgebra::{DMatrix, DVector};

use crate::competitive::f_alpha;
use crate::error::Result;
use crate::operator::{central_difference_jacobian, Operator, DEFAULT_FD_STEP};
use crate::problem::{OperatorMode, ProblemSpec};

/// A problem viewed through an [`OperatorMode`]: either `F` or `F_α`.
#[derive(Debug, Clone, Copy)]
pub struct Field<'a> {
    problem: &'a ProblemSpec,
    mode: OperatorMode,
    fd_step: f64,
}

impl<'a> Field<'a> {
    pub fn new(problem: &'a ProblemSpec, mode: OperatorMode) -> Result<Self> {
        mode.validate()?;
        Ok(Self {
            problem,
            mode,
            fd_step: DEFAULT_FD_STEP,
        })
    }

    pub fn standard(problem: &'a ProblemSpec) -> Self {
        Self {
            problem,
            mode: OperatorMode::Standard,
            fd_step: DEFAULT_FD_STEP,
        }
    }

    pub fn with_fd_step(mut self, fd_step: f64) -> Self {
        self.fd_step = fd_step;
        self
    }

    pub fn problem(&self) -> &ProblemSpec {
        self.problem
    }

    pub fn mode(&self) -> OperatorMode {
        self.mode
    }
}

impl Operator for Field<'_> {
    fn dim(&self) -> usize {
        self.problem.dim()
    }

    fn eval(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        match self.mode {
            OperatorMode::Standard => self.problem.field(z),
            OperatorMode::Competitive { alpha } => f_alpha(self.problem, z, alpha),
        }
    }

    /// Analytic for `F` when the problem provides it; `F_α` is always
    /// finite-differenced (its exact Jacobian needs third derivatives of `f`).
    fn jacobian(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        match self.mode {
            OperatorMode::Competitive { alpha } if alpha != 0.0 => {
                central_difference_jacobian(|p| self.eval(p), z, self.fd_step)
            }
            _ => self.problem.field_jacobian(z, self.fd_step),
        }
    }
}
