//! Adam with bias correction and the cosine-annealed learning-rate schedule.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Cosine annealing from `initial` at step 0 down to `final_rate` at
/// `total_steps`: rate(t) = final + (initial - final) * (1 + cos(pi t/T)) / 2.
/// Monotonically non-increasing and exact at both endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct LrSchedule {
    pub initial: f64,
    pub final_rate: f64,
    pub total_steps: u64,
}

impl LrSchedule {
    pub fn new(initial: f64, final_rate: f64, total_steps: u64) -> Result<Self> {
        if !(initial > 0.0) || !(final_rate > 0.0) || final_rate > initial {
            return Err(Error::InvalidConfig(format!(
                "learning-rate schedule needs 0 < final <= initial, got {final_rate} and {initial}"
            )));
        }
        if total_steps == 0 {
            return Err(Error::InvalidConfig("schedule needs total_steps >= 1".into()));
        }
        Ok(LrSchedule { initial, final_rate, total_steps })
    }

    pub fn rate(&self, step: u64) -> f64 {
        if step == 0 {
            return self.initial;
        }
        if step >= self.total_steps {
            return self.final_rate;
        }
        let t = step as f64 / self.total_steps as f64;
        self.final_rate
            + (self.initial - self.final_rate) * 0.5 * (1.0 + (std::f64::consts::PI * t).cos())
    }
}

/// Per-parameter first/second moment accumulators plus the shared step count.
#[derive(Debug, Clone)]
pub struct AdamState<T: Scalar> {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    pub moments: Vec<(Tensor<T>, Tensor<T>)>,
}

impl<T: Scalar> AdamState<T> {
    /// Fresh state for the given parameter shapes, with the training
    /// hyperparameters beta1 = 0.9, beta2 = 0.99.
    pub fn new(params: &[&Tensor<T>]) -> Self {
        AdamState {
            beta1: 0.9,
            beta2: 0.99,
            epsilon: 1e-8,
            step: 0,
            moments: params
                .iter()
                .map(|p| (Tensor::zeros(p.shape()), Tensor::zeros(p.shape())))
                .collect(),
        }
    }

    /// One Adam update of every parameter at the scheduled rate for the
    /// current step. `grads[i]` pairs with `params[i]`; a shape mismatch or a
    /// non-finite gradient is a hard error naming the parameter.
    pub fn step_params(
        &mut self,
        schedule: &LrSchedule,
        params: &mut [(&str, &mut Tensor<T>)],
        grads: &[Tensor<T>],
    ) -> Result<f64> {
        if params.len() != self.moments.len() || grads.len() != params.len() {
            return Err(Error::InvalidArgument(format!(
                "optimizer has {} moment slots, got {} params and {} grads",
                self.moments.len(),
                params.len(),
                grads.len()
            )));
        }
        let lr = schedule.rate(self.step);
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        let (b1, b2) = (T::from_f64(self.beta1), T::from_f64(self.beta2));
        let one_m_b1 = T::from_f64(1.0 - self.beta1);
        let one_m_b2 = T::from_f64(1.0 - self.beta2);
        let eps = T::from_f64(self.epsilon);
        let lr_t = T::from_f64(lr);
        let bc1_t = T::from_f64(bc1);
        let bc2_t = T::from_f64(bc2);

        for (((name, param), grad), (m, v)) in
            params.iter_mut().zip(grads).zip(self.moments.iter_mut())
        {
            if param.shape() != grad.shape() {
                return Err(Error::ShapeMismatch {
                    op: "optimizer_step",
                    detail: format!(
                        "parameter '{name}' has shape {:?}, grad {:?}",
                        param.shape(),
                        grad.shape()
                    ),
                });
            }
            if !grad.all_finite() {
                return Err(Error::NonFiniteGrad { param: name.to_string() });
            }
            for (((p, &g), mv), vv) in param
                .data_mut()
                .iter_mut()
                .zip(grad.data())
                .zip(m.data_mut().iter_mut())
                .zip(v.data_mut().iter_mut())
            {
                *mv = b1 * *mv + one_m_b1 * g;
                *vv = b2 * *vv + one_m_b2 * g * g;
                let m_hat = *mv / bc1_t;
                let v_hat = *vv / bc2_t;
                *p = *p - lr_t * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(lr)
    }
}
