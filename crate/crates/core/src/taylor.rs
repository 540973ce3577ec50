//! Truncated Taylor model `τ_{p−1}(z_b; z_a)` of the operator and its
//! regularized version `Φ_p(z_b; z_a) = τ_{p−1} + (2L_p/p!)‖z_b − z_a‖^{p−1}(z_b − z_a)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::operator::Operator;

pub const MAX_SUPPORTED_ORDER: u32 = 2;

pub fn factorial(p: u32) -> f64 {
    (1..=p).map(f64::from).product()
}

pub(crate) fn check_order(p: u32) -> Result<()> {
    match p {
        1 | 2 => Ok(()),
        0 => Err(Error::argument("order p must be at least 1")),
        _ => Err(Error::Capability(format!(
            "order p = {p} needs derivative tensors of order {}; only p ≤ {MAX_SUPPORTED_ORDER} is implemented",
            p - 1
        ))),
    }
}

#[derive(Debug, Clone)]
pub struct TaylorModel {
    order: u32,
    base: DVector<f64>,
    f_at_base: DVector<f64>,
    jacobian_at_base: Option<DMatrix<f64>>,
    lipschitz: f64,
}

impl TaylorModel {
    pub fn new(
        order: u32,
        base: DVector<f64>,
        f_at_base: DVector<f64>,
        jacobian_at_base: Option<DMatrix<f64>>,
        lipschitz: f64,
    ) -> Result<Self> {
        check_order(order)?;
        check_dim(base.len(), f_at_base.len())?;
        match (&jacobian_at_base, order) {
            (Some(j), 2) => {
                if j.shape() != (base.len(), base.len()) {
                    return Err(Error::argument("Jacobian shape does not match the base point"));
                }
            }
            (None, 1) => {}
            (None, _) => return Err(Error::argument("order-2 model needs the Jacobian at the base")),
            (Some(_), _) => return Err(Error::argument("order-1 model takes no Jacobian")),
        }
        if !(lipschitz.is_finite() && lipschitz >= 0.0) {
            return Err(Error::argument(format!("lipschitz constant must be finite and >= 0, got {lipschitz}")));
        }
        Ok(Self {
            order,
            base,
            f_at_base,
            jacobian_at_base,
            lipschitz,
        })
    }

    /// Builds the model by evaluating `op` (and its Jacobian for `p = 2`) at `base`.
    pub fn at<O: Operator + ?Sized>(op: &O, base: DVector<f64>, order: u32, lipschitz: f64) -> Result<Self> {
        check_order(order)?;
        let f = op.eval(&base)?;
        let j = if order >= 2 { Some(op.jacobian(&base)?) } else { None };
        Self::new(order, base, f, j, lipschitz)
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn base(&self) -> &DVector<f64> {
        &self.base
    }

    pub fn f_at_base(&self) -> &DVector<f64> {
        &self.f_at_base
    }

    pub fn jacobian_at_base(&self) -> Option<&DMatrix<f64>> {
        self.jacobian_at_base.as_ref()
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Coefficient `2L_p/p!` of the regularizer.
    pub fn regularizer_coefficient(&self) -> f64 {
        2.0 * self.lipschitz / factorial(self.order)
    }

    pub fn tau(&self, z_b: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.base.len(), z_b.len())?;
        let mut out = self.f_at_base.clone();
        if let Some(j) = &self.jacobian_at_base {
            out += j * (z_b - &self.base);
        }
        Ok(out)
    }

    pub fn phi(&self, z_b: &DVector<f64>) -> Result<DVector<f64>> {
        let mut out = self.tau(z_b)?;
        let d = z_b - &self.base;
        let scale = self.regularizer_coefficient() * d.norm().powi(self.order as i32 - 1);
        out.axpy(scale, &d, 1.0);
        Ok(out)
    }
}
