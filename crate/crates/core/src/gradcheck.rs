//! Central finite-difference verification of analytic gradients.
//!
//! Only meaningful in f64. The closure must be deterministic in its
//! parameters; it is called once for analytic gradients and twice per
//! parameter element for the numeric ones.

use crate::error::Result;
use crate::tensor::Tensor;

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// (parameter name, max relative error over its elements)
    pub per_param: Vec<(String, f64)>,
    pub max_rel_error: f64,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn pass(&self) -> bool {
        self.max_rel_error < self.tolerance
    }
}

/// Relative error with a scale floor. Central differences carry cancellation
/// noise of about eps * |loss| / (2 * step) in absolute terms; gradient
/// entries below the floor are compared against the floor instead of their
/// own magnitude, so that noise cannot masquerade as relative error. With
/// O(1) losses and step 1e-6 the noise is ~1e-10, three orders below
/// floor * tolerance at the tightest tolerance used here.
fn rel_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Check the analytic gradients produced by `eval` against central finite
/// differences with the given `step`.
///
/// `eval(params, want_grads)` must return the scalar loss, plus (when asked)
/// one gradient tensor per parameter in the same order.
pub fn grad_check<F>(
    mut eval: F,
    params: &[Tensor<f64>],
    names: &[&str],
    tolerance: f64,
    step: f64,
) -> Result<GradCheckReport>
where
    F: FnMut(&[Tensor<f64>], bool) -> Result<(f64, Option<Vec<Tensor<f64>>>)>,
{
    let floor = 1e-3;
    let (_, grads) = eval(params, true)?;
    let grads = grads.expect("eval must return gradients when asked");
    assert_eq!(grads.len(), params.len(), "one gradient per parameter");

    let mut work: Vec<Tensor<f64>> = params.to_vec();
    let mut per_param = Vec::with_capacity(params.len());
    let mut max_rel: f64 = 0.0;
    for (pi, (param, analytic)) in params.iter().zip(&grads).enumerate() {
        let mut worst: f64 = 0.0;
        for e in 0..param.numel() {
            let orig = param.data()[e];
            work[pi].data_mut()[e] = orig + step;
            let (f_plus, _) = eval(&work, false)?;
            work[pi].data_mut()[e] = orig - step;
            let (f_minus, _) = eval(&work, false)?;
            work[pi].data_mut()[e] = orig;
            let numeric = (f_plus - f_minus) / (2.0 * step);
            worst = worst.max(rel_error(analytic.data()[e], numeric, floor));
        }
        per_param.push((names.get(pi).copied().unwrap_or("param").to_string(), worst));
        max_rel = max_rel.max(worst);
    }
    Ok(GradCheckReport { per_param, max_rel_error: max_rel, tolerance })
}
