//! Training losses: mean absolute error, cosine color loss, and their
//! weighted combination total = l1 + lambda * color.

use crate::error::Result;
use crate::scalar::Scalar;
use crate::tape::{Tape, Var};

/// Epsilon regularizing the cosine denominator, which is otherwise undefined
/// at zero vectors.
pub const COLOR_EPS: f64 = 1e-8;

/// Default weight of the color term.
pub const LAMBDA_DEFAULT: f64 = 0.1;

/// Loss terms of one forward pass, as plain numbers for logging.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValue {
    pub l1: f64,
    pub color: f64,
    pub total: f64,
    pub lambda: f64,
}

/// Taped loss heads of one forward pass; `total` is the backward target.
#[derive(Debug, Clone, Copy)]
pub struct LossVars {
    pub l1: Var,
    pub color: Var,
    pub total: Var,
}

pub fn l1_loss<T: Scalar>(tape: &mut Tape<T>, pred: Var, gt: Var) -> Result<Var> {
    tape.l1_loss(pred, gt)
}

pub fn color_loss<T: Scalar>(tape: &mut Tape<T>, pred: Var, gt: Var) -> Result<Var> {
    tape.color_loss(pred, gt, T::from_f64(COLOR_EPS))
}

/// Record l1, color and total = l1 + lambda * color on the tape; gradient
/// flows through both terms.
pub fn total_loss<T: Scalar>(
    tape: &mut Tape<T>,
    pred: Var,
    gt: Var,
    lambda: f64,
) -> Result<(LossVars, LossValue)> {
    let l1 = tape.l1_loss(pred, gt)?;
    let color = tape.color_loss(pred, gt, T::from_f64(COLOR_EPS))?;
    let weighted = tape.scale(color, T::from_f64(lambda));
    let total = tape.add(l1, weighted)?;
    let value = LossValue {
        l1: tape.value(l1).data()[0].to_f64(),
        color: tape.value(color).data()[0].to_f64(),
        total: tape.value(total).data()[0].to_f64(),
        lambda,
    };
    Ok((LossVars { l1, color, total }, value))
}
